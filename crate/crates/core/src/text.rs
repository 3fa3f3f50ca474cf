//! Rule-based rewards for text-centric outputs and their per-record mean.
//!
//! Plain text is scored by one minus normalized edit distance, formulas by
//! smoothed BLEU over normalized LaTeX tokens, and tables by TEDS-S. The
//! record reward is the mean over the content types present in the ground
//! truth.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::corpus::SegmentedContent;
use crate::normalize::{normalize_latex, normalize_plain_text, normalize_table};
use crate::treedist::{teds, teds_s};

/// Levenshtein distance over Unicode scalar values.
pub fn levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    if a.is_empty() {
        return b.len();
    }
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, ca) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(ca != cb);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// Levenshtein distance divided by the longer length; 0 when both empty.
pub fn normalized_levenshtein(a: &str, b: &str) -> f64 {
    let longest = a.chars().count().max(b.chars().count());
    if longest == 0 {
        return 0.0;
    }
    levenshtein(a, b) as f64 / longest as f64
}

/// One minus normalized edit distance. Both empty scores 1.
pub fn text_edit_reward(pred: &str, gt: &str) -> f64 {
    1.0 - normalized_levenshtein(pred, gt)
}

pub const BLEU_MAX_ORDER: usize = 4;

fn ngram_counts<T: AsRef<str>>(tokens: &[T], n: usize) -> HashMap<Vec<&str>, usize> {
    let mut counts = HashMap::new();
    if tokens.len() >= n {
        for w in tokens.windows(n) {
            let key: Vec<&str> = w.iter().map(AsRef::as_ref).collect();
            *counts.entry(key).or_insert(0) += 1;
        }
    }
    counts
}

/// Sentence BLEU-4 against a single reference.
///
/// Unigram precision is unsmoothed; orders 2..=4 use add-one smoothing on
/// both matched and total n-gram counts. The brevity penalty is
/// `exp(1 - r/c)` when the candidate is shorter than the reference.
/// Returns `None` when the reference is empty.
pub fn bleu<T: AsRef<str>>(candidate: &[T], reference: &[T]) -> Option<f64> {
    if reference.is_empty() {
        return None;
    }
    if candidate.is_empty() {
        return Some(0.0);
    }
    let mut log_sum = 0.0;
    for n in 1..=BLEU_MAX_ORDER {
        let cand = ngram_counts(candidate, n);
        let refs = ngram_counts(reference, n);
        let total: usize = cand.values().sum();
        let matched: usize = cand
            .iter()
            .map(|(g, &c)| c.min(refs.get(g).copied().unwrap_or(0)))
            .sum();
        let precision = if n == 1 {
            matched as f64 / total as f64
        } else {
            (matched as f64 + 1.0) / (total as f64 + 1.0)
        };
        if precision == 0.0 {
            return Some(0.0);
        }
        log_sum += precision.ln();
    }
    let (c, r) = (candidate.len() as f64, reference.len() as f64);
    let bp = if c > r { 1.0 } else { (1.0 - r / c).exp() };
    Some((bp * (log_sum / BLEU_MAX_ORDER as f64).exp()).clamp(0.0, 1.0))
}

/// BLEU between normalized LaTeX token sequences. `None` when the ground
/// truth normalizes to no tokens.
pub fn formula_bleu_reward(pred: &str, gt: &str) -> Option<f64> {
    let p = normalize_latex(pred);
    let g = normalize_latex(gt);
    bleu(&p.tokens, &g.tokens)
}

/// Outcome of table scoring.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TableScore {
    pub teds_s: f64,
    pub teds: f64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TableRewardError {
    /// The ground truth has no parseable table.
    GroundTruth,
}

/// TEDS-S (and TEDS, for reporting) of normalized tables. A prediction
/// without a parseable table scores 0 and produces a warning.
pub fn score_table(
    pred: &str,
    gt: &str,
    warnings: &mut Vec<String>,
) -> Result<TableScore, TableRewardError> {
    let gt = normalize_table(gt).map_err(|_| TableRewardError::GroundTruth)?;
    if gt.repaired {
        warnings.push("ground-truth table markup was repaired".into());
    }
    match normalize_table(pred) {
        Ok(p) => {
            if p.repaired {
                warnings.push("predicted table markup was repaired".into());
            }
            Ok(TableScore {
                teds_s: teds_s(&p.tree, &gt.tree),
                teds: teds(&p.tree, &gt.tree),
            })
        }
        Err(e) => {
            warnings.push(format!("prediction: {e}; table reward is 0"));
            Ok(TableScore {
                teds_s: 0.0,
                teds: 0.0,
            })
        }
    }
}

/// TEDS-S reward for a predicted table.
pub fn table_reward(pred: &str, gt: &str) -> Result<f64, TableRewardError> {
    score_table(pred, gt, &mut Vec::new()).map(|s| s.teds_s)
}

/// Per-type rewards and their mean for one record.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TextRewardBreakdown {
    pub plain_text: Option<f64>,
    pub formula: Option<f64>,
    pub table: Option<f64>,
    /// Full TEDS (content-aware) for the table slot; reported, not part of
    /// the aggregate.
    pub table_teds: Option<f64>,
    pub aggregate: f64,
    pub unscoreable: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl TextRewardBreakdown {
    /// The component rewards present for this record, in type order.
    pub fn present(&self) -> Vec<f64> {
        [self.plain_text, self.formula, self.table]
            .into_iter()
            .flatten()
            .collect()
    }
}

/// Scores a segmented prediction against a segmented ground truth.
///
/// A content type contributes only when the ground truth contains it.
/// Plain text is joined and compared as one string; the i-th formula or
/// table of the prediction is paired with the i-th of the ground truth and
/// missing predictions score 0. Extra predicted content is not penalized.
pub fn aggregate_text_reward(
    pred: &SegmentedContent,
    gt: &SegmentedContent,
) -> TextRewardBreakdown {
    let mut out = TextRewardBreakdown::default();

    let gt_text = normalize_plain_text(&gt.text_spans().join(" "));
    if !gt_text.is_empty() {
        let pred_text = normalize_plain_text(&pred.text_spans().join(" "));
        out.plain_text = Some(text_edit_reward(&pred_text, &gt_text));
    }

    let pred_formulas = pred.formulas();
    let mut formula_scores = Vec::new();
    for (i, g) in gt.formulas().into_iter().enumerate() {
        let p = pred_formulas.get(i).copied().unwrap_or("");
        match formula_bleu_reward(p, g) {
            Some(s) => formula_scores.push(s),
            None => out.warnings.push(format!(
                "ground-truth formula {i} is empty after normalization; skipped"
            )),
        }
    }
    out.formula = mean(&formula_scores);

    let pred_tables = pred.tables();
    let mut structure = Vec::new();
    let mut content = Vec::new();
    for (i, g) in gt.tables().into_iter().enumerate() {
        let Some(p) = pred_tables.get(i) else {
            out.warnings
                .push(format!("table {i} missing from prediction"));
            structure.push(0.0);
            content.push(0.0);
            continue;
        };
        match score_table(p, g, &mut out.warnings) {
            Ok(s) => {
                structure.push(s.teds_s);
                content.push(s.teds);
            }
            Err(TableRewardError::GroundTruth) => out
                .warnings
                .push(format!("ground-truth table {i} does not parse; skipped")),
        }
    }
    out.table = mean(&structure);
    out.table_teds = mean(&content);

    let present = out.present();
    match mean(&present) {
        Some(m) => out.aggregate = m,
        None => {
            out.aggregate = 0.0;
            out.unscoreable = true;
        }
    }
    out
}

pub(crate) fn mean(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        None
    } else {
        Some(values.iter().sum::<f64>() / values.len() as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::segment_content;

    /// Exponential-free recursive definition, memoized.
    fn lev_oracle(a: &[char], b: &[char], memo: &mut HashMap<(usize, usize), usize>) -> usize {
        if a.is_empty() {
            return b.len();
        }
        if b.is_empty() {
            return a.len();
        }
        if let Some(&v) = memo.get(&(a.len(), b.len())) {
            return v;
        }
        let sub = lev_oracle(&a[1..], &b[1..], memo) + usize::from(a[0] != b[0]);
        let del = lev_oracle(&a[1..], b, memo) + 1;
        let ins = lev_oracle(a, &b[1..], memo) + 1;
        let v = sub.min(del).min(ins);
        memo.insert((a.len(), b.len()), v);
        v
    }

    fn oracle(a: &str, b: &str) -> usize {
        let a: Vec<char> = a.chars().collect();
        let b: Vec<char> = b.chars().collect();
        lev_oracle(&a, &b, &mut HashMap::new())
    }

    #[test]
    fn levenshtein_examples() {
        assert_eq!(levenshtein("", ""), 0);
        assert_eq!(oracle("abc", "abd"), 1);
        assert_eq!(levenshtein("abc", "abd"), 1);
        assert_eq!(oracle("kitten", "sitting"), 3);
        assert_eq!(levenshtein("kitten", "sitting"), 3);
        assert_eq!(levenshtein("", "abc"), 3);
        assert_eq!(levenshtein("日本語", "日本"), 1);
    }

    #[test]
    fn text_edit_reward_examples() {
        assert_eq!(text_edit_reward("abc", "abc"), 1.0);
        assert!((text_edit_reward("abc", "abd") - (1.0 - 1.0 / 3.0)).abs() < 1e-12);
        assert_eq!(text_edit_reward("", "x"), 0.0);
        assert_eq!(text_edit_reward("", ""), 1.0);
    }

    #[test]
    fn bleu_identical_and_empty() {
        let t = ["a", "+", "b"];
        assert_eq!(bleu(&t, &t), Some(1.0));
        assert_eq!(bleu::<&str>(&[], &t), Some(0.0));
        assert_eq!(bleu::<&str>(&t, &[]), None);
        assert_eq!(
            formula_bleu_reward("\\frac{1}{2}", "\\dfrac {1} {2}"),
            Some(1.0)
        );
        assert_eq!(formula_bleu_reward("x", "\\,"), None);
    }

    #[test]
    fn bleu_no_unigram_overlap_is_zero() {
        assert_eq!(bleu(&["x", "y"], &["a", "b"]), Some(0.0));
    }

    #[test]
    fn table_reward_examples() {
        let gt = "<table><tr><td>a</td><td>b</td></tr></table>";
        assert_eq!(table_reward(gt, gt), Ok(1.0));
        assert_eq!(
            table_reward("<table><tr><td>a</td></tr></table>", gt),
            Ok(0.75)
        );
        assert_eq!(table_reward("no table here", gt), Ok(0.0));
        assert_eq!(
            table_reward(gt, "nothing"),
            Err(TableRewardError::GroundTruth)
        );
    }

    #[test]
    fn aggregate_plain_text_only() {
        let gt = segment_content("hello world").unwrap();
        let b = aggregate_text_reward(&gt, &gt);
        assert_eq!(b.aggregate, 1.0);
        assert_eq!(b.plain_text, Some(1.0));
        assert_eq!(b.formula, None);
        assert!(!b.unscoreable);
    }

    #[test]
    fn aggregate_text_and_half_table() {
        let gt = segment_content("intro <table><tr><td>a</td><td>b</td></tr></table>").unwrap();
        // table->tr against table->tr->{td,td}: two deletions over 4 nodes.
        let pred = segment_content("intro <table><tr></tr></table>").unwrap();
        let b = aggregate_text_reward(&pred, &gt);
        assert_eq!(b.plain_text, Some(1.0));
        assert_eq!(b.table, Some(0.5));
        assert!((b.aggregate - 0.75).abs() < 1e-12);
    }

    #[test]
    fn aggregate_all_empty_is_unscoreable() {
        let empty = SegmentedContent::default();
        let b = aggregate_text_reward(&empty, &empty);
        assert_eq!(b.aggregate, 0.0);
        assert!(b.unscoreable);
    }

    #[test]
    fn missing_predicted_formula_scores_zero() {
        let gt = segment_content("$a$ and $b$").unwrap();
        let pred = segment_content("$a$ and").unwrap();
        let b = aggregate_text_reward(&pred, &gt);
        assert_eq!(b.formula, Some(0.5));
    }

    #[test]
    fn whitespace_only_text_is_not_a_type() {
        let gt = segment_content("  $$x$$  ").unwrap();
        let b = aggregate_text_reward(&gt, &gt);
        assert_eq!(b.plain_text, None);
        assert_eq!(b.aggregate, 1.0);
    }
}
