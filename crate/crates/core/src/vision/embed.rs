use serde::{Deserialize, Serialize};

use super::{RasterImage, VisionError};

/// L2-normalized feature vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingVector {
    values: Vec<f64>,
}

impl EmbeddingVector {
    /// Normalizes `values`; rejects empty, non-finite or zero vectors.
    pub fn new(values: Vec<f64>) -> Result<Self, VisionError> {
        if values.is_empty() {
            return Err(VisionError::Contract("embedding has no components".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(VisionError::Contract(
                "embedding has non-finite components".into(),
            ));
        }
        let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm <= f64::MIN_POSITIVE {
            return Err(VisionError::Contract("embedding is the zero vector".into()));
        }
        Ok(EmbeddingVector {
            values: values.into_iter().map(|v| v / norm).collect(),
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }
}

/// Cosine of the angle between two embeddings.
pub fn cosine_similarity(u: &EmbeddingVector, v: &EmbeddingVector) -> Result<f64, VisionError> {
    if u.dim() != v.dim() {
        return Err(VisionError::Dimension {
            expected: u.dim(),
            actual: v.dim(),
        });
    }
    let dot: f64 = u.values.iter().zip(&v.values).map(|(a, b)| a * b).sum();
    let nu = u.values.iter().map(|a| a * a).sum::<f64>().sqrt();
    let nv = v.values.iter().map(|a| a * a).sum::<f64>().sqrt();
    Ok((dot / (nu * nv)).clamp(-1.0, 1.0))
}

/// Image encoder used by the visual fidelity reward.
pub trait EmbeddingBackend: Send + Sync {
    fn embed(&self, img: &RasterImage) -> Result<EmbeddingVector, VisionError>;
}

/// Side length of the stub backend's grayscale grid.
pub const STUB_GRID: usize = 8;

/// Deterministic in-process backend for tests and offline runs.
#[derive(Debug, Clone, Copy, Default)]
pub struct StubBackend;

impl EmbeddingBackend for StubBackend {
    fn embed(&self, img: &RasterImage) -> Result<EmbeddingVector, VisionError> {
        Ok(stub_embed(img))
    }
}

/// The vector returned for images with no luminance variation: every
/// component equal to `1/8`.
pub fn canonical_constant_vector() -> EmbeddingVector {
    let n = STUB_GRID * STUB_GRID;
    EmbeddingVector {
        values: vec![1.0 / (n as f64).sqrt(); n],
    }
}

/// Box-downscales to 8×8 Rec. 601 luma, subtracts the mean and
/// L2-normalizes. Constant images map to [`canonical_constant_vector`].
pub fn stub_embed(img: &RasterImage) -> EmbeddingVector {
    let luma = img.luma();
    let grid =
        RasterImage::box_resample_plane(&luma, img.width(), img.height(), STUB_GRID, STUB_GRID);
    let mean = grid.iter().sum::<f64>() / grid.len() as f64;
    let centered: Vec<f64> = grid.iter().map(|v| v - mean).collect();
    let norm = centered.iter().map(|v| v * v).sum::<f64>().sqrt();
    // Below ~1e-9 of a gray level the image is constant up to rounding.
    if norm < 1e-9 {
        return canonical_constant_vector();
    }
    EmbeddingVector {
        values: centered.into_iter().map(|v| v / norm).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vec(v: &[f64]) -> EmbeddingVector {
        EmbeddingVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn cosine_examples() {
        let x = vec(&[0.3, -2.0, 5.0]);
        assert!((cosine_similarity(&x, &x).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(
            cosine_similarity(&vec(&[1.0, 0.0]), &vec(&[0.0, 1.0])).unwrap(),
            0.0
        );
        assert_eq!(
            cosine_similarity(&vec(&[1.0, 0.0]), &vec(&[-1.0, 0.0])).unwrap(),
            -1.0
        );
    }

    #[test]
    fn cosine_dim_mismatch() {
        let err = cosine_similarity(&vec(&[1.0]), &vec(&[1.0, 2.0])).unwrap_err();
        assert_eq!(
            err,
            VisionError::Dimension {
                expected: 1,
                actual: 2
            }
        );
    }

    #[test]
    fn zero_vector_rejected() {
        assert!(EmbeddingVector::new(vec![0.0, 0.0]).is_err());
        assert!(EmbeddingVector::new(vec![]).is_err());
        assert!(EmbeddingVector::new(vec![f64::NAN]).is_err());
    }

    #[test]
    fn stub_is_unit_norm_and_deterministic() {
        let mut px = Vec::new();
        for i in 0..(13 * 9) {
            px.extend_from_slice(&[(i * 7 % 256) as u8, (i * 3 % 256) as u8, (i % 256) as u8]);
        }
        let img = RasterImage::new(13, 9, px).unwrap();
        let a = stub_embed(&img);
        let b = stub_embed(&img.clone());
        assert_eq!(a, b);
        assert_eq!(a.dim(), 64);
        let norm: f64 = a.values().iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!((norm - 1.0).abs() < 1e-9);
    }

    #[test]
    fn constant_images_share_canonical_vector() {
        let black = RasterImage::filled(10, 10, [0, 0, 0]).unwrap();
        let white = RasterImage::filled(3, 5, [255, 255, 255]).unwrap();
        assert_eq!(stub_embed(&black), stub_embed(&white));
        assert_eq!(stub_embed(&black), canonical_constant_vector());
    }
}
