//! Per-record text scoring shared by the native pipeline and the browser
//! build.

use crate::bench::ScoredRecord;
use crate::corpus::{segment_content, Domain, EvalRecord, SegmentError, SegmentedContent};
use crate::text::{aggregate_text_reward, TextRewardBreakdown};

/// Segments `source` with the delimiter grammar. Records in the `formula`
/// domain whose source has no formula or table delimiters are read as one
/// bare formula.
pub fn segment_for_domain(source: &str, domain: Domain) -> Result<SegmentedContent, SegmentError> {
    let seg = segment_content(source)?;
    if domain == Domain::Formula && seg.formulas().is_empty() && seg.tables().is_empty() {
        return Ok(SegmentedContent::single_formula(source));
    }
    Ok(seg)
}

/// Text-side breakdown for a prediction/ground-truth pair.
///
/// A ground truth that fails to segment leaves the record unscoreable. A
/// prediction that fails to segment is scored as plain text.
pub fn score_text_pair(
    prediction: &str,
    ground_truth: &str,
    domain: Domain,
) -> TextRewardBreakdown {
    let gt = match segment_for_domain(ground_truth, domain) {
        Ok(s) => s,
        Err(e) => {
            return TextRewardBreakdown {
                unscoreable: true,
                warnings: vec![format!("ground truth: {e}")],
                ..Default::default()
            }
        }
    };
    let mut pre_warnings = Vec::new();
    let pred = match segment_for_domain(prediction, domain) {
        Ok(s) => s,
        Err(e) => {
            pre_warnings.push(format!("prediction: {e}; scored as plain text"));
            SegmentedContent::plain(prediction)
        }
    };
    let mut out = aggregate_text_reward(&pred, &gt);
    pre_warnings.append(&mut out.warnings);
    out.warnings = pre_warnings;
    out
}

/// Scores a record from a text-centric domain.
pub fn score_text_record(record: &EvalRecord) -> ScoredRecord {
    let text = score_text_pair(&record.prediction, &record.ground_truth, record.domain);
    let warnings = text.warnings.clone();
    ScoredRecord {
        id: record.id.clone(),
        domain: record.domain,
        text: Some(text),
        vision: None,
        warnings,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bare_formula_domain() {
        let b = score_text_pair("\\frac{1}{2}", "\\frac {1}{2}", Domain::Formula);
        assert_eq!(b.formula, Some(1.0));
        assert_eq!(b.plain_text, None);
        assert_eq!(b.aggregate, 1.0);
    }

    #[test]
    fn delimited_formula_domain() {
        let b = score_text_pair("$$x$$", "$$x$$", Domain::Formula);
        assert_eq!(b.formula, Some(1.0));
    }

    #[test]
    fn broken_prediction_falls_back_to_text() {
        let b = score_text_pair("abc $$x", "abc $$x$$", Domain::TextDoc);
        assert!(b.warnings[0].contains("scored as plain text"));
        assert!(b.plain_text.is_some());
        assert_eq!(b.formula, Some(0.0));
    }

    #[test]
    fn broken_ground_truth_is_unscoreable() {
        let b = score_text_pair("abc", "<table><tr>", Domain::TextDoc);
        assert!(b.unscoreable);
        assert_eq!(b.aggregate, 0.0);
    }
}
