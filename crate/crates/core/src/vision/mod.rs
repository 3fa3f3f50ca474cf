//! Visual fidelity rewards for vision-centric outputs.
//!
//! Rendered predictions are compared with ground-truth images in an
//! embedding space at two scales: one global thumbnail and a grid of
//! local patches. The two similarities are mixed with convex weights.

mod embed;
mod format;
mod raster;
#[cfg(feature = "native")]
pub mod remote;
#[cfg(feature = "native")]
pub mod render;

pub use embed::{
    canonical_constant_vector, cosine_similarity, stub_embed, EmbeddingBackend, EmbeddingVector,
    StubBackend, STUB_GRID,
};
pub use format::{detect_format, format_alignment_reward, CodeFormat};
pub use raster::{make_patches, RasterImage};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum VisionError {
    #[error("invalid input: {0}")]
    Input(String),
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("embedding dimension mismatch: expected {expected}, got {actual}")]
    Dimension { expected: usize, actual: usize },
    #[error("embedding backend failed after {attempts} attempt(s): {message}")]
    Transport { attempts: usize, message: String },
}

/// Weights and grid for the multi-scale reward.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VisionRewardConfig {
    pub omega_global: f64,
    pub omega_local: f64,
    pub grid_rows: usize,
    pub grid_cols: usize,
    /// Side length of the square global thumbnail.
    pub thumbnail_size: usize,
}

impl Default for VisionRewardConfig {
    fn default() -> Self {
        VisionRewardConfig {
            omega_global: 0.5,
            omega_local: 0.5,
            grid_rows: 3,
            grid_cols: 3,
            thumbnail_size: 224,
        }
    }
}

impl VisionRewardConfig {
    /// A config with `omega_local = 1 - omega_global`.
    pub fn with_global_weight(mut self, omega_global: f64) -> Self {
        self.omega_global = omega_global;
        self.omega_local = 1.0 - omega_global;
        self
    }

    pub fn validate(&self) -> Result<(), VisionError> {
        let (g, l) = (self.omega_global, self.omega_local);
        if !(g.is_finite() && l.is_finite()) || g < 0.0 || l < 0.0 {
            return Err(VisionError::Contract(format!(
                "weights must be finite and nonnegative, got global={g} local={l}"
            )));
        }
        if (g + l - 1.0).abs() > 1e-9 {
            return Err(VisionError::Contract(format!(
                "weights must sum to 1, got {g} + {l}"
            )));
        }
        if self.grid_rows == 0 || self.grid_cols == 0 {
            return Err(VisionError::Contract(
                "patch grid must be at least 1x1".into(),
            ));
        }
        if self.thumbnail_size == 0 {
            return Err(VisionError::Contract(
                "thumbnail size must be positive".into(),
            ));
        }
        Ok(())
    }

    pub fn patch_count(&self) -> usize {
        self.grid_rows * self.grid_cols
    }
}

/// Components of one visual reward evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VisionScore {
    pub global: f64,
    pub local: Vec<f64>,
    pub reward: f64,
}

impl VisionScore {
    pub fn local_mean(&self) -> f64 {
        self.local.iter().sum::<f64>() / self.local.len() as f64
    }
}

fn clamped_similarity(
    backend: &dyn EmbeddingBackend,
    a: &RasterImage,
    b: &RasterImage,
) -> Result<f64, VisionError> {
    let ea = backend.embed(a)?;
    let eb = backend.embed(b)?;
    Ok(cosine_similarity(&ea, &eb)?.clamp(0.0, 1.0))
}

/// Multi-scale visual reward:
/// `omega_global * s_global + omega_local * mean_i(s_local_i)`, where each
/// similarity is a cosine clamped to `[0, 1]`.
pub fn multiscale_vision_reward(
    pred: &RasterImage,
    gt: &RasterImage,
    cfg: &VisionRewardConfig,
    backend: &dyn EmbeddingBackend,
) -> Result<VisionScore, VisionError> {
    cfg.validate()?;
    let side = cfg.thumbnail_size;
    let global = clamped_similarity(
        backend,
        &pred.resize_box(side, side)?,
        &gt.resize_box(side, side)?,
    )?;

    let pred_patches = make_patches(pred, cfg.grid_rows, cfg.grid_cols)?;
    let gt_patches = make_patches(gt, cfg.grid_rows, cfg.grid_cols)?;
    let local = pred_patches
        .iter()
        .zip(&gt_patches)
        .map(|(p, g)| clamped_similarity(backend, p, g))
        .collect::<Result<Vec<_>, _>>()?;

    let local_mean = local.iter().sum::<f64>() / local.len() as f64;
    let reward = (cfg.omega_global * global + cfg.omega_local * local_mean).clamp(0.0, 1.0);
    Ok(VisionScore {
        global,
        local,
        reward,
    })
}
