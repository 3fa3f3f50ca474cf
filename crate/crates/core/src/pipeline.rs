//! End-to-end record scoring with image loading, rendering and a bounded
//! worker pool.

use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::bench::{ScoredRecord, VisionBreakdown};
use crate::corpus::EvalRecord;
use crate::score::score_text_record;
use crate::vision::render::Renderer;
use crate::vision::{
    detect_format, multiscale_vision_reward, CodeFormat, EmbeddingBackend, RasterImage,
    VisionRewardConfig,
};

/// Shared, read-only state for scoring a dataset.
pub struct ScoringContext<'a> {
    pub vision: VisionRewardConfig,
    pub backend: &'a dyn EmbeddingBackend,
    pub renderer: Option<&'a Renderer>,
    /// Directory relative image paths are resolved against.
    pub base_dir: PathBuf,
}

impl<'a> ScoringContext<'a> {
    pub fn new(backend: &'a dyn EmbeddingBackend, base_dir: impl Into<PathBuf>) -> Self {
        ScoringContext {
            vision: VisionRewardConfig::default(),
            backend,
            renderer: None,
            base_dir: base_dir.into(),
        }
    }

    fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }
}

enum PredImage {
    Ready(RasterImage, Option<bool>),
    /// The generated code failed to execute.
    Failed(String),
    Missing(String),
}

fn prediction_image(rec: &EvalRecord, format: CodeFormat, ctx: &ScoringContext) -> PredImage {
    if let Some(r) = ctx.renderer.filter(|r| r.supports(format)) {
        return match r.render(&rec.prediction, format) {
            Ok(img) => PredImage::Ready(img, Some(true)),
            Err(e) if e.is_execution_failure() => PredImage::Failed(e.to_string()),
            Err(e) => PredImage::Missing(e.to_string()),
        };
    }
    match &rec.pred_image_path {
        Some(p) => match RasterImage::open(&ctx.resolve(p)) {
            Ok(img) => PredImage::Ready(img, None),
            Err(e) => PredImage::Missing(format!("prediction image: {e}")),
        },
        None => PredImage::Missing(format!(
            "no prediction image and no renderer configured for {format}"
        )),
    }
}

fn score_vision_record(
    rec: &EvalRecord,
    expected: CodeFormat,
    ctx: &ScoringContext,
) -> ScoredRecord {
    let detected = detect_format(&rec.prediction);
    let mut v = VisionBreakdown {
        expected_format: expected,
        detected_format: detected,
        format_alignment: if detected == Some(expected) { 1.0 } else { 0.0 },
        visual: None,
        global: None,
        local_mean: None,
        rendered: None,
        error: None,
    };

    let gt = match &rec.gt_image_path {
        None => Err("vision reward requires gt_image_path".to_string()),
        Some(p) => {
            RasterImage::open(&ctx.resolve(p)).map_err(|e| format!("ground-truth image: {e}"))
        }
    };
    match (gt, prediction_image(rec, expected, ctx)) {
        (_, PredImage::Failed(msg)) => {
            // Failed execution is the model's fault and scores zero.
            v.rendered = Some(false);
            v.visual = Some(0.0);
            v.error = Some(msg);
        }
        (Err(msg), pred) => {
            if let PredImage::Ready(_, rendered) = pred {
                v.rendered = rendered;
            }
            v.error = Some(msg);
        }
        (Ok(_), PredImage::Missing(msg)) => v.error = Some(msg),
        (Ok(gt), PredImage::Ready(pred, rendered)) => {
            v.rendered = rendered;
            match multiscale_vision_reward(&pred, &gt, &ctx.vision, ctx.backend) {
                Ok(s) => {
                    v.global = Some(s.global);
                    v.local_mean = Some(s.local_mean());
                    v.visual = Some(s.reward);
                }
                Err(e) => v.error = Some(e.to_string()),
            }
        }
    }

    let warnings = v.error.iter().cloned().collect();
    ScoredRecord {
        id: rec.id.clone(),
        domain: rec.domain,
        text: None,
        vision: Some(v),
        warnings,
    }
}

/// Scores one record along the path its domain selects.
pub fn score_record(rec: &EvalRecord, ctx: &ScoringContext) -> ScoredRecord {
    match CodeFormat::for_domain(rec.domain) {
        Some(format) => score_vision_record(rec, format, ctx),
        None => score_text_record(rec),
    }
}

/// Scores all records on `workers` threads. The output is sorted by id, so
/// it does not depend on scheduling.
pub fn score_dataset(
    records: &[EvalRecord],
    ctx: &ScoringContext,
    workers: usize,
) -> Result<Vec<ScoredRecord>, rayon::ThreadPoolBuildError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()?;
    let mut out: Vec<ScoredRecord> =
        pool.install(|| records.par_iter().map(|r| score_record(r, ctx)).collect());
    out.sort_by(|a, b| a.id.cmp(&b.id));
    Ok(out)
}
