//! Tabular toy policy trained with the clipped group-relative objective.
//!
//! The policy holds one independent categorical distribution (a row of
//! logits) per output position. Sequence log-probability is the sum of the
//! per-position log-probabilities, so the gradient of the surrogate with
//! respect to the logits is exact:
//! `d/dlogits[t] (rho_i * A_i) = rho_i * A_i * (onehot(o_i[t]) - softmax(logits[t]))`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{
    group_advantages, surrogate_is_active, GrpoError, DEFAULT_EPSILON, DEFAULT_SIGMA_GUARD,
};
use crate::text::text_edit_reward;

pub const DEFAULT_STEP_SIZE: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub target: String,
    pub group_size: usize,
    pub iterations: usize,
    pub step_size: f64,
    pub seed: u64,
    pub epsilon: f64,
    pub sigma_guard: f64,
    /// Gradient steps taken on each sampled group before resampling.
    pub inner_epochs: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            target: "ab".into(),
            group_size: 8,
            iterations: 300,
            step_size: DEFAULT_STEP_SIZE,
            seed: 7,
            epsilon: DEFAULT_EPSILON,
            sigma_guard: DEFAULT_SIGMA_GUARD,
            inner_epochs: 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationStats {
    pub iteration: usize,
    pub mean_reward: f64,
    pub max_reward: f64,
}

/// Lowercase ASCII, space, and any extra characters used by the target.
fn alphabet(target: &str) -> Vec<char> {
    let mut chars: Vec<char> = ('a'..='z').chain(std::iter::once(' ')).collect();
    for c in target.chars() {
        if !chars.contains(&c) {
            chars.push(c);
        }
    }
    chars
}

fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
    let z: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / z).collect()
}

struct TabularPolicy {
    logits: Vec<Vec<f64>>,
}

impl TabularPolicy {
    fn uniform(positions: usize, symbols: usize) -> Self {
        TabularPolicy {
            logits: vec![vec![0.0; symbols]; positions],
        }
    }

    fn probs(&self) -> Vec<Vec<f64>> {
        self.logits.iter().map(|l| softmax(l)).collect()
    }

    fn sample(probs: &[Vec<f64>], rng: &mut ChaCha8Rng) -> Vec<usize> {
        probs
            .iter()
            .map(|p| {
                let u: f64 = rng.gen();
                let mut acc = 0.0;
                for (k, &pk) in p.iter().enumerate() {
                    acc += pk;
                    if u < acc {
                        return k;
                    }
                }
                p.len() - 1
            })
            .collect()
    }

    fn log_prob(probs: &[Vec<f64>], seq: &[usize]) -> f64 {
        probs.iter().zip(seq).map(|(p, &k)| p[k].ln()).sum()
    }
}

/// Runs the toy optimization and returns per-iteration reward statistics.
/// Fully determined by the config, including the seed.
pub fn simulate(cfg: &SimConfig) -> Result<Vec<IterationStats>, GrpoError> {
    if cfg.target.is_empty() {
        return Err(GrpoError::InvalidArgument(
            "target must be non-empty".into(),
        ));
    }
    if cfg.group_size < 2 {
        return Err(GrpoError::InvalidArgument(format!(
            "group size must be at least 2, got {}",
            cfg.group_size
        )));
    }
    if !(cfg.step_size.is_finite() && cfg.step_size >= 0.0) {
        return Err(GrpoError::InvalidArgument(format!(
            "step size must be finite and nonnegative, got {}",
            cfg.step_size
        )));
    }
    if !(cfg.epsilon > 0.0 && cfg.epsilon < 1.0) {
        return Err(GrpoError::InvalidArgument(format!(
            "clip epsilon must lie in (0, 1), got {}",
            cfg.epsilon
        )));
    }

    let symbols = alphabet(&cfg.target);
    let positions = cfg.target.chars().count();
    let mut policy = TabularPolicy::uniform(positions, symbols.len());
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let g = cfg.group_size;
    let mut trajectory = Vec::with_capacity(cfg.iterations);

    for iteration in 0..cfg.iterations {
        let old_probs = policy.probs();
        let samples: Vec<Vec<usize>> = (0..g)
            .map(|_| TabularPolicy::sample(&old_probs, &mut rng))
            .collect();
        let rewards: Vec<f64> = samples
            .iter()
            .map(|s| {
                let text: String = s.iter().map(|&k| symbols[k]).collect();
                text_edit_reward(&text, &cfg.target)
            })
            .collect();
        let old_logp: Vec<f64> = samples
            .iter()
            .map(|s| TabularPolicy::log_prob(&old_probs, s))
            .collect();

        let mean_reward = rewards.iter().sum::<f64>() / g as f64;
        let max_reward = rewards.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        trajectory.push(IterationStats {
            iteration,
            mean_reward,
            max_reward,
        });

        let adv = group_advantages(&rewards, cfg.sigma_guard)?;
        if adv.degenerate || cfg.step_size == 0.0 {
            continue;
        }

        for _ in 0..cfg.inner_epochs {
            let probs = policy.probs();
            let mut grad = vec![vec![0.0; symbols.len()]; positions];
            for (i, seq) in samples.iter().enumerate() {
                let a = adv.advantages[i];
                let rho = (TabularPolicy::log_prob(&probs, seq) - old_logp[i]).exp();
                if !surrogate_is_active(rho, a, cfg.epsilon) {
                    continue;
                }
                let coef = rho * a / g as f64;
                for (t, &k) in seq.iter().enumerate() {
                    for (j, gj) in grad[t].iter_mut().enumerate() {
                        let onehot = if j == k { 1.0 } else { 0.0 };
                        *gj += coef * (onehot - probs[t][j]);
                    }
                }
            }
            for (row, grow) in policy.logits.iter_mut().zip(&grad) {
                for (l, gl) in row.iter_mut().zip(grow) {
                    *l += cfg.step_size * gl;
                }
            }
        }
    }
    Ok(trajectory)
}

/// Convenience wrapper over [`simulate`] with default clipping settings.
pub fn simulate_toy_policy(
    target: &str,
    group_size: usize,
    iterations: usize,
    step_size: f64,
    seed: u64,
) -> Result<Vec<IterationStats>, GrpoError> {
    simulate(&SimConfig {
        target: target.to_string(),
        group_size,
        iterations,
        step_size,
        seed,
        ..SimConfig::default()
    })
}
