//! Group-relative policy optimization math: group-normalized advantages,
//! the clipped surrogate objective, reward-entropy sample filtering, and a
//! tabular toy policy that exercises them end to end.

mod sim;

pub use sim::{simulate, simulate_toy_policy, IterationStats, SimConfig, DEFAULT_STEP_SIZE};

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_SIGMA_GUARD: f64 = 1e-8;
pub const DEFAULT_EPSILON: f64 = 0.2;
pub const DEFAULT_ENTROPY_BINS: usize = 10;
pub const DEFAULT_ENTROPY_THRESHOLD: f64 = 0.3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GrpoError {
    #[error("group `{id}` has {len} reward(s); at least 2 are required")]
    GroupTooSmall { id: String, len: usize },
    #[error("group `{id}`: {what} has length {actual}, expected {expected}")]
    LengthMismatch {
        id: String,
        what: &'static str,
        expected: usize,
        actual: usize,
    },
    #[error("group `{id}` lacks {which} log-probabilities")]
    MissingLogProbs { id: String, which: &'static str },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

/// Sampled responses for one input, with rewards and optional sequence
/// log-probabilities under the sampling (`old_logp`) and current
/// (`new_logp`) policies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RolloutGroup {
    #[serde(alias = "id")]
    pub input_id: String,
    pub rewards: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub old_logp: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub new_logp: Option<Vec<f64>>,
}

impl RolloutGroup {
    pub fn new(input_id: impl Into<String>, rewards: Vec<f64>) -> Self {
        RolloutGroup {
            input_id: input_id.into(),
            rewards,
            old_logp: None,
            new_logp: None,
        }
    }

    pub fn with_logp(mut self, old: Vec<f64>, new: Vec<f64>) -> Self {
        self.old_logp = Some(old);
        self.new_logp = Some(new);
        self
    }

    pub fn validate(&self) -> Result<(), GrpoError> {
        let g = self.rewards.len();
        if g < 2 {
            return Err(GrpoError::GroupTooSmall {
                id: self.input_id.clone(),
                len: g,
            });
        }
        for (what, lp) in [("old_logp", &self.old_logp), ("new_logp", &self.new_logp)] {
            if let Some(lp) = lp {
                if lp.len() != g {
                    return Err(GrpoError::LengthMismatch {
                        id: self.input_id.clone(),
                        what,
                        expected: g,
                        actual: lp.len(),
                    });
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdvantageSet {
    pub advantages: Vec<f64>,
    pub mu: f64,
    pub sigma: f64,
    /// Set when the group's reward spread fell below the guard; all
    /// advantages are then exactly zero.
    pub degenerate: bool,
}

/// `A_i = (R_i - mean) / std` with the population standard deviation.
pub fn group_advantages(rewards: &[f64], sigma_guard: f64) -> Result<AdvantageSet, GrpoError> {
    if rewards.len() < 2 {
        return Err(GrpoError::GroupTooSmall {
            id: String::new(),
            len: rewards.len(),
        });
    }
    if rewards.iter().any(|r| !r.is_finite()) {
        return Err(GrpoError::InvalidArgument("rewards must be finite".into()));
    }
    let g = rewards.len() as f64;
    let mu = rewards.iter().sum::<f64>() / g;
    let sigma = (rewards.iter().map(|r| (r - mu).powi(2)).sum::<f64>() / g).sqrt();
    if sigma < sigma_guard {
        return Ok(AdvantageSet {
            advantages: vec![0.0; rewards.len()],
            mu,
            sigma,
            degenerate: true,
        });
    }
    Ok(AdvantageSet {
        advantages: rewards.iter().map(|r| (r - mu) / sigma).collect(),
        mu,
        sigma,
        degenerate: false,
    })
}

/// One clipped surrogate term: `min(rho * A, clip(rho, 1-eps, 1+eps) * A)`.
pub fn surrogate_term(rho: f64, advantage: f64, epsilon: f64) -> f64 {
    let clipped = rho.clamp(1.0 - epsilon, 1.0 + epsilon);
    (rho * advantage).min(clipped * advantage)
}

/// Whether the gradient of [`surrogate_term`] with respect to `rho` is
/// nonzero, i.e. the unclipped branch is the active minimum.
pub fn surrogate_is_active(rho: f64, advantage: f64, epsilon: f64) -> bool {
    if advantage > 0.0 {
        rho < 1.0 + epsilon
    } else if advantage < 0.0 {
        rho > 1.0 - epsilon
    } else {
        false
    }
}

fn ratios(group: &RolloutGroup, advantages: &AdvantageSet) -> Result<Vec<f64>, GrpoError> {
    group.validate()?;
    let old = group
        .old_logp
        .as_ref()
        .ok_or_else(|| GrpoError::MissingLogProbs {
            id: group.input_id.clone(),
            which: "old",
        })?;
    let new = group
        .new_logp
        .as_ref()
        .ok_or_else(|| GrpoError::MissingLogProbs {
            id: group.input_id.clone(),
            which: "new",
        })?;
    if advantages.advantages.len() != group.rewards.len() {
        return Err(GrpoError::LengthMismatch {
            id: group.input_id.clone(),
            what: "advantages",
            expected: group.rewards.len(),
            actual: advantages.advantages.len(),
        });
    }
    Ok(old.iter().zip(new).map(|(o, n)| (n - o).exp()).collect())
}

fn check_epsilon(epsilon: f64) -> Result<(), GrpoError> {
    if epsilon > 0.0 && epsilon < 1.0 {
        Ok(())
    } else {
        Err(GrpoError::InvalidArgument(format!(
            "clip epsilon must lie in (0, 1), got {epsilon}"
        )))
    }
}

/// Group mean of clipped surrogate terms with `rho_i = exp(new_i - old_i)`.
pub fn clipped_objective(
    group: &RolloutGroup,
    advantages: &AdvantageSet,
    epsilon: f64,
) -> Result<f64, GrpoError> {
    check_epsilon(epsilon)?;
    let rho = ratios(group, advantages)?;
    let sum: f64 = rho
        .iter()
        .zip(&advantages.advantages)
        .map(|(&r, &a)| surrogate_term(r, a, epsilon))
        .sum();
    Ok(sum / rho.len() as f64)
}

/// Group mean of `rho_i * A_i` without clipping.
pub fn unclipped_objective(
    group: &RolloutGroup,
    advantages: &AdvantageSet,
) -> Result<f64, GrpoError> {
    let rho = ratios(group, advantages)?;
    let sum: f64 = rho
        .iter()
        .zip(&advantages.advantages)
        .map(|(r, a)| r * a)
        .sum();
    Ok(sum / rho.len() as f64)
}

/// Shannon entropy of the reward histogram over `bins` equal-width bins on
/// `[0, 1]`, divided by `ln(bins)`. Rewards outside the interval are
/// clamped into the edge bins.
pub fn reward_entropy(rewards: &[f64], bins: usize) -> Result<f64, GrpoError> {
    if bins < 2 {
        return Err(GrpoError::InvalidArgument(format!(
            "entropy needs at least 2 bins, got {bins}"
        )));
    }
    if rewards.is_empty() {
        return Ok(0.0);
    }
    let mut counts = vec![0usize; bins];
    for &r in rewards {
        let idx = ((r.clamp(0.0, 1.0) * bins as f64).floor() as usize).min(bins - 1);
        counts[idx] += 1;
    }
    // Sorted so that histograms that are permutations of each other give
    // bitwise-identical entropies.
    counts.sort_unstable();
    let n = rewards.len() as f64;
    let h: f64 = counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum();
    if h <= 0.0 {
        return Ok(0.0);
    }
    Ok((h / (bins as f64).ln()).clamp(0.0, 1.0))
}

/// Slack applied when comparing entropies against the threshold, so that
/// a uniform histogram (entropy 1 up to rounding) passes threshold 1. A
/// zero-entropy group never passes a positive threshold.
pub const ENTROPY_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredGroup {
    pub input_id: String,
    pub entropy: f64,
}

/// Groups whose normalized reward entropy is at least `threshold`, sorted
/// by entropy descending, then id ascending.
pub fn entropy_ranking(
    groups: &[RolloutGroup],
    bins: usize,
    threshold: f64,
) -> Result<Vec<ScoredGroup>, GrpoError> {
    if !(0.0..=1.0).contains(&threshold) {
        return Err(GrpoError::InvalidArgument(format!(
            "entropy threshold must lie in [0, 1], got {threshold}"
        )));
    }
    let mut kept = Vec::new();
    for g in groups {
        if g.rewards.len() < 2 {
            return Err(GrpoError::GroupTooSmall {
                id: g.input_id.clone(),
                len: g.rewards.len(),
            });
        }
        let entropy = reward_entropy(&g.rewards, bins)?;
        let passes = if entropy == 0.0 {
            threshold <= 0.0
        } else {
            entropy + ENTROPY_TOLERANCE >= threshold
        };
        if passes {
            kept.push(ScoredGroup {
                input_id: g.input_id.clone(),
                entropy,
            });
        }
    }
    kept.sort_by(|a, b| {
        b.entropy
            .partial_cmp(&a.entropy)
            .unwrap_or(Ordering::Equal)
            .then_with(|| a.input_id.cmp(&b.input_id))
    });
    Ok(kept)
}

/// Ids selected by [`entropy_ranking`].
pub fn entropy_filter(
    groups: &[RolloutGroup],
    bins: usize,
    threshold: f64,
) -> Result<Vec<String>, GrpoError> {
    Ok(entropy_ranking(groups, bins, threshold)?
        .into_iter()
        .map(|g| g.input_id)
        .collect())
}
