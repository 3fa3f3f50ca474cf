//! Corpus-level aggregation and the document-parsing Overall score.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Domain;
use crate::text::TextRewardBreakdown;
use crate::vision::CodeFormat;

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BenchError {
    #[error("{name} = {value} is outside [{lo}, {hi}]")]
    OutOfRange {
        name: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },
    #[error("cannot build a report from zero records")]
    Empty,
    #[error("record id `{0}` appears more than once")]
    DuplicateId(String),
}

fn check_range(name: &'static str, value: f64, lo: f64, hi: f64) -> Result<(), BenchError> {
    if value.is_finite() && (lo..=hi).contains(&value) {
        Ok(())
    } else {
        Err(BenchError::OutOfRange {
            name,
            value,
            lo,
            hi,
        })
    }
}

/// `((1 - text_edit) * 100 + table_teds + formula_score) / 3`.
///
/// `text_edit` is a normalized edit distance in `[0, 1]` (lower is
/// better); the other two are percentages.
pub fn overall_score(
    text_edit: f64,
    table_teds: f64,
    formula_score: f64,
) -> Result<f64, BenchError> {
    check_range("text_edit", text_edit, 0.0, 1.0)?;
    check_range("table_teds", table_teds, 0.0, 100.0)?;
    check_range("formula_score", formula_score, 0.0, 100.0)?;
    Ok(((1.0 - text_edit) * 100.0 + table_teds + formula_score) / 3.0)
}

/// Vision-side scores for one record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VisionBreakdown {
    pub expected_format: CodeFormat,
    pub detected_format: Option<CodeFormat>,
    pub format_alignment: f64,
    /// Multi-scale visual fidelity reward; `None` when unscored.
    pub visual: Option<f64>,
    pub global: Option<f64>,
    pub local_mean: Option<f64>,
    /// `Some(success)` when the prediction was sent through a renderer and
    /// the outcome counts toward the execution rate.
    pub rendered: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl VisionBreakdown {
    pub fn unscored(&self) -> bool {
        self.visual.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredRecord {
    pub id: String,
    pub domain: Domain,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<TextRewardBreakdown>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vision: Option<VisionBreakdown>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

/// Corpus-level means. Text-side metrics follow benchmark conventions:
/// `text_edit_mean` is a distance in `[0, 1]`, the rest are percentages.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CorpusMetrics {
    pub text_edit_mean: Option<f64>,
    pub formula_score_mean: Option<f64>,
    pub table_teds_mean: Option<f64>,
    pub table_teds_s_mean: Option<f64>,
    pub overall: Option<f64>,
    pub text_reward_mean: Option<f64>,
    pub vision_reward_mean: Option<f64>,
    pub format_alignment_mean: Option<f64>,
    pub exec_rate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub schema_version: u32,
    pub records: usize,
    pub corpus: CorpusMetrics,
    pub counts: BTreeMap<Domain, usize>,
    pub warnings: Vec<String>,
    pub per_record: BTreeMap<String, ScoredRecord>,
}

/// Unweighted mean clamped into the population's range, so rounding never
/// pushes it outside `[min, max]`.
fn bounded_mean(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let m = values.iter().sum::<f64>() / values.len() as f64;
    Some(m.clamp(lo, hi))
}

/// Builds the corpus report. Records missing a component contribute to no
/// mean for it; the Overall score needs all three text components.
pub fn aggregate_report(records: Vec<ScoredRecord>) -> Result<BenchReport, BenchError> {
    if records.is_empty() {
        return Err(BenchError::Empty);
    }
    let mut per_record = BTreeMap::new();
    for r in records {
        if per_record.contains_key(&r.id) {
            return Err(BenchError::DuplicateId(r.id));
        }
        per_record.insert(r.id.clone(), r);
    }

    // Iterate in id order so float sums do not depend on input order.
    let mut plain = Vec::new();
    let mut formula = Vec::new();
    let mut teds = Vec::new();
    let mut teds_s = Vec::new();
    let mut text_reward = Vec::new();
    let mut visual = Vec::new();
    let mut alignment = Vec::new();
    let (mut attempts, mut successes) = (0usize, 0usize);
    let mut counts = BTreeMap::new();
    let mut unscoreable = Vec::new();
    let mut unscored = Vec::new();

    for r in per_record.values() {
        *counts.entry(r.domain).or_insert(0) += 1;
        if let Some(t) = &r.text {
            plain.extend(t.plain_text);
            formula.extend(t.formula);
            teds_s.extend(t.table);
            teds.extend(t.table_teds);
            if t.unscoreable {
                unscoreable.push(r.id.as_str());
            } else {
                text_reward.push(t.aggregate);
            }
        }
        if let Some(v) = &r.vision {
            alignment.push(v.format_alignment);
            match v.visual {
                Some(x) => visual.push(x),
                None => unscored.push(r.id.as_str()),
            }
            if let Some(ok) = v.rendered {
                attempts += 1;
                successes += usize::from(ok);
            }
        }
    }

    let mut warnings = Vec::new();
    if !unscoreable.is_empty() {
        warnings.push(format!(
            "{} record(s) had no scoreable text content: {}",
            unscoreable.len(),
            unscoreable.join(", ")
        ));
    }
    if !unscored.is_empty() {
        warnings.push(format!(
            "{} vision record(s) have no visual reward: {}",
            unscored.len(),
            unscored.join(", ")
        ));
    }

    let pct = |v: Option<f64>| v.map(|x| x * 100.0);
    let mut corpus = CorpusMetrics {
        text_edit_mean: bounded_mean(&plain).map(|m| 1.0 - m),
        formula_score_mean: pct(bounded_mean(&formula)),
        table_teds_mean: pct(bounded_mean(&teds)),
        table_teds_s_mean: pct(bounded_mean(&teds_s)),
        overall: None,
        text_reward_mean: bounded_mean(&text_reward),
        vision_reward_mean: bounded_mean(&visual),
        format_alignment_mean: bounded_mean(&alignment),
        exec_rate: (attempts > 0).then(|| 100.0 * successes as f64 / attempts as f64),
    };

    match (
        corpus.text_edit_mean,
        corpus.table_teds_mean,
        corpus.formula_score_mean,
    ) {
        (Some(t), Some(tab), Some(f)) => {
            corpus.overall = Some(overall_score(t, tab, f).expect("corpus means are in range"));
        }
        (t, tab, f) => {
            if t.is_some() || tab.is_some() || f.is_some() {
                let missing: Vec<&str> = [("text", t), ("table", tab), ("formula", f)]
                    .into_iter()
                    .filter(|(_, v)| v.is_none())
                    .map(|(n, _)| n)
                    .collect();
                warnings.push(format!(
                    "overall score omitted: no {} component in corpus",
                    missing.join("/")
                ));
            }
        }
    }

    Ok(BenchReport {
        schema_version: REPORT_SCHEMA_VERSION,
        records: per_record.len(),
        corpus,
        counts,
        warnings,
        per_record,
    })
}

impl BenchReport {
    /// Pretty-printed JSON; deterministic for equal reports.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }

    /// Plain-text summary table.
    pub fn render_table(&self) -> String {
        fn cell(v: Option<f64>, digits: usize) -> String {
            v.map_or_else(|| "-".to_string(), |x| format!("{x:.digits$}"))
        }
        let c = &self.corpus;
        let rows = [
            ("Overall", cell(c.overall, 2)),
            ("Text Edit (lower is better)", cell(c.text_edit_mean, 3)),
            ("Formula (BLEU x100)", cell(c.formula_score_mean, 2)),
            ("Table TEDS", cell(c.table_teds_mean, 2)),
            ("Table TEDS-S", cell(c.table_teds_s_mean, 2)),
            ("Text reward mean", cell(c.text_reward_mean, 4)),
            ("Vision reward mean", cell(c.vision_reward_mean, 4)),
            ("Format alignment mean", cell(c.format_alignment_mean, 4)),
            ("Execution rate (%)", cell(c.exec_rate, 1)),
        ];
        let width = rows.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
        let mut out = String::new();
        let _ = writeln!(out, "records: {}", self.records);
        for (domain, n) in &self.counts {
            let _ = writeln!(out, "  {domain}: {n}");
        }
        for (k, v) in rows {
            let _ = writeln!(out, "{k:<width$}  {v:>8}");
        }
        for w in &self.warnings {
            let _ = writeln!(out, "warning: {w}");
        }
        out
    }
}
