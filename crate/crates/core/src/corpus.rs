//! Evaluation records, JSONL ingestion and content-type segmentation.
//!
//! A record pairs a model prediction with its ground truth. Text-centric
//! records are split into plain text, formula and table spans so that each
//! content type can be scored by its own reward function.

use std::collections::HashMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

/// The eight data domains covered by the reward engine.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Domain {
    TextDoc,
    Formula,
    Table,
    Chart,
    Web,
    Svg,
    Plot,
    Molecule,
}

impl Domain {
    pub const ALL: [Domain; 8] = [
        Domain::TextDoc,
        Domain::Formula,
        Domain::Table,
        Domain::Chart,
        Domain::Web,
        Domain::Svg,
        Domain::Plot,
        Domain::Molecule,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Domain::TextDoc => "text_doc",
            Domain::Formula => "formula",
            Domain::Table => "table",
            Domain::Chart => "chart",
            Domain::Web => "web",
            Domain::Svg => "svg",
            Domain::Plot => "plot",
            Domain::Molecule => "molecule",
        }
    }

    /// Vision domains are scored by rendering code and comparing images.
    pub fn is_vision(self) -> bool {
        !matches!(self, Domain::TextDoc | Domain::Formula | Domain::Table)
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Domain {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Domain::ALL
            .iter()
            .copied()
            .find(|d| d.as_str() == s)
            .ok_or_else(|| s.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub id: String,
    pub domain: Domain,
    pub prediction: String,
    pub ground_truth: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gt_image_path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pred_image_path: Option<PathBuf>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CorpusError {
    #[error("line {line}: malformed JSON: {message}")]
    Json { line: usize, message: String },
    #[error("line {line}: missing or non-string required field `{field}`")]
    MissingField { line: usize, field: &'static str },
    #[error("line {line}: field `{field}` must be a string")]
    FieldType { line: usize, field: &'static str },
    #[error("line {line}: unknown domain `{tag}`")]
    UnknownDomain { line: usize, tag: String },
    #[error("line {line}: record id must not be empty")]
    EmptyId { line: usize },
    #[error("duplicate record id `{id}` on lines {first} and {second}")]
    DuplicateId {
        id: String,
        first: usize,
        second: usize,
    },
    #[error("cannot read {path}: {message}")]
    Io { path: PathBuf, message: String },
}

impl CorpusError {
    /// 1-based line number the error refers to, if any.
    pub fn line(&self) -> Option<usize> {
        match self {
            CorpusError::Json { line, .. }
            | CorpusError::MissingField { line, .. }
            | CorpusError::FieldType { line, .. }
            | CorpusError::UnknownDomain { line, .. }
            | CorpusError::EmptyId { line } => Some(*line),
            CorpusError::DuplicateId { second, .. } => Some(*second),
            CorpusError::Io { .. } => None,
        }
    }
}

fn required_str(
    obj: &Map<String, Value>,
    field: &'static str,
    line: usize,
) -> Result<String, CorpusError> {
    match obj.get(field) {
        Some(Value::String(s)) => Ok(s.clone()),
        Some(_) => Err(CorpusError::FieldType { line, field }),
        None => Err(CorpusError::MissingField { line, field }),
    }
}

fn optional_path(
    obj: &Map<String, Value>,
    field: &'static str,
    line: usize,
) -> Result<Option<PathBuf>, CorpusError> {
    match obj.get(field) {
        None | Some(Value::Null) => Ok(None),
        Some(Value::String(s)) => Ok(Some(PathBuf::from(s))),
        Some(_) => Err(CorpusError::FieldType { line, field }),
    }
}

/// Parses one JSONL line into a validated record. `line` is the 1-based
/// line number used in error messages. Unknown fields are ignored.
pub fn parse_record_line(text: &str, line: usize) -> Result<EvalRecord, CorpusError> {
    let value: Value = serde_json::from_str(text).map_err(|e| CorpusError::Json {
        line,
        message: e.to_string(),
    })?;
    let Value::Object(obj) = value else {
        return Err(CorpusError::Json {
            line,
            message: "expected a JSON object".into(),
        });
    };

    let id = required_str(&obj, "id", line)?;
    if id.is_empty() {
        return Err(CorpusError::EmptyId { line });
    }
    let tag = required_str(&obj, "domain", line)?;
    let domain = tag
        .parse::<Domain>()
        .map_err(|tag| CorpusError::UnknownDomain { line, tag })?;
    let prediction = required_str(&obj, "prediction", line)?;
    let ground_truth = required_str(&obj, "ground_truth", line)?;

    Ok(EvalRecord {
        id,
        domain,
        prediction,
        ground_truth,
        gt_image_path: optional_path(&obj, "gt_image_path", line)?,
        pred_image_path: optional_path(&obj, "pred_image_path", line)?,
    })
}

/// Parses newline-delimited records from an in-memory string. Blank lines
/// are skipped; duplicate ids are rejected.
pub fn parse_dataset(contents: &str) -> Result<Vec<EvalRecord>, CorpusError> {
    let mut seen: HashMap<String, usize> = HashMap::new();
    let mut records = Vec::new();
    for (idx, raw) in contents.lines().enumerate() {
        let line = idx + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let record = parse_record_line(raw, line)?;
        if let Some(&first) = seen.get(&record.id) {
            return Err(CorpusError::DuplicateId {
                id: record.id,
                first,
                second: line,
            });
        }
        seen.insert(record.id.clone(), line);
        records.push(record);
    }
    Ok(records)
}

/// Loads a JSONL dataset, preserving file order.
pub fn load_dataset(path: &Path) -> Result<Vec<EvalRecord>, CorpusError> {
    let contents = std::fs::read_to_string(path).map_err(|e| CorpusError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    parse_dataset(&contents)
}

/// Which delimiter pair enclosed a formula.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FormulaDelim {
    /// `$$ ... $$`
    Display,
    /// `\[ ... \]`
    Bracket,
    /// `$ ... $`
    Inline,
}

impl FormulaDelim {
    fn open(self) -> &'static str {
        match self {
            FormulaDelim::Display => "$$",
            FormulaDelim::Bracket => "\\[",
            FormulaDelim::Inline => "$",
        }
    }

    fn close(self) -> &'static str {
        match self {
            FormulaDelim::Display => "$$",
            FormulaDelim::Bracket => "\\]",
            FormulaDelim::Inline => "$",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContentType {
    PlainText,
    Formula,
    Table,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Segment {
    Text { text: String },
    Formula { body: String, delim: FormulaDelim },
    Table { html: String },
}

impl Segment {
    pub fn content_type(&self) -> ContentType {
        match self {
            Segment::Text { .. } => ContentType::PlainText,
            Segment::Formula { .. } => ContentType::Formula,
            Segment::Table { .. } => ContentType::Table,
        }
    }
}

/// A source document split into typed spans, in document order.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmentedContent {
    pub segments: Vec<Segment>,
}

impl SegmentedContent {
    /// The whole source as one plain-text span.
    pub fn plain(source: &str) -> Self {
        let segments = if source.is_empty() {
            Vec::new()
        } else {
            vec![Segment::Text {
                text: source.to_string(),
            }]
        };
        SegmentedContent { segments }
    }

    pub fn text_spans(&self) -> Vec<&str> {
        self.segments
            .iter()
            .filter_map(|s| match s {
                Segment::Text { text } => Some(text.as_str()),
                _ => None,
            })
            .collect()
    }

    pub fn formulas(&self) -> Vec<&str> {
        self.segments
            .iter()
            .filter_map(|s| match s {
                Segment::Formula { body, .. } => Some(body.as_str()),
                _ => None,
            })
            .collect()
    }

    pub fn tables(&self) -> Vec<&str> {
        self.segments
            .iter()
            .filter_map(|s| match s {
                Segment::Table { html } => Some(html.as_str()),
                _ => None,
            })
            .collect()
    }

    /// Reassembles the source with delimiters restored.
    pub fn reconstruct(&self) -> String {
        let mut out = String::new();
        for seg in &self.segments {
            match seg {
                Segment::Text { text } => out.push_str(text),
                Segment::Formula { body, delim } => {
                    out.push_str(delim.open());
                    out.push_str(body);
                    out.push_str(delim.close());
                }
                Segment::Table { html } => out.push_str(html),
            }
        }
        out
    }

    /// Treats a whole source as a single formula, stripping one pair of
    /// surrounding math delimiters if present.
    pub fn single_formula(source: &str) -> Self {
        let trimmed = source.trim();
        let (body, delim) = [
            FormulaDelim::Display,
            FormulaDelim::Bracket,
            FormulaDelim::Inline,
        ]
        .into_iter()
        .find_map(|d| {
            let inner = trimmed.strip_prefix(d.open())?.strip_suffix(d.close())?;
            Some((inner, d))
        })
        .unwrap_or((trimmed, FormulaDelim::Display));
        SegmentedContent {
            segments: vec![Segment::Formula {
                body: body.to_string(),
                delim,
            }],
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SegmentError {
    #[error("unclosed formula delimiter `{delim}` opened at byte {offset}")]
    UnclosedFormula { delim: &'static str, offset: usize },
    #[error("unclosed <table> opened at byte {offset}")]
    UnclosedTable { offset: usize },
}

impl SegmentError {
    pub fn offset(&self) -> usize {
        match self {
            SegmentError::UnclosedFormula { offset, .. }
            | SegmentError::UnclosedTable { offset } => *offset,
        }
    }
}

fn starts_with_ci(haystack: &str, needle: &str) -> bool {
    haystack.len() >= needle.len()
        && haystack.as_bytes()[..needle.len()].eq_ignore_ascii_case(needle.as_bytes())
}

/// `<table` followed by `>`, whitespace or `/`.
fn is_table_open(rest: &str) -> bool {
    starts_with_ci(rest, "<table")
        && matches!(
            rest.as_bytes().get(6),
            Some(b'>') | Some(b'/') | Some(b' ') | Some(b'\t') | Some(b'\n') | Some(b'\r')
        )
}

/// Returns the byte length of the table block starting at `rest`, honoring
/// nested tables, or `None` when the outer table is never closed.
fn table_block_len(rest: &str) -> Option<usize> {
    let bytes = rest.as_bytes();
    let mut depth = 0usize;
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] == b'<' {
            let tail = &rest[i..];
            if is_table_open(tail) {
                depth += 1;
                i += 6;
                continue;
            }
            if starts_with_ci(tail, "</table") {
                let close = tail.find('>')?;
                depth -= 1;
                i += close + 1;
                if depth == 0 {
                    return Some(i);
                }
                continue;
            }
        }
        i += 1;
    }
    None
}

/// Splits markdown into plain text, formula and table spans.
///
/// Recognized delimiters are `$$…$$`, `\[…\]`, inline `$…$` and literal
/// `<table>…</table>` blocks. Scanning is first-match; `\$` is a literal
/// dollar sign. Empty text spans are not emitted.
pub fn segment_content(source: &str) -> Result<SegmentedContent, SegmentError> {
    let mut segments = Vec::new();
    let mut text_start = 0;
    let mut i = 0;
    let bytes = source.as_bytes();

    let flush = |segments: &mut Vec<Segment>, from: usize, to: usize| {
        if to > from {
            segments.push(Segment::Text {
                text: source[from..to].to_string(),
            });
        }
    };

    while i < bytes.len() {
        let rest = &source[i..];
        if rest.starts_with("\\$") {
            i += 2;
            continue;
        }
        let delim = if rest.starts_with("$$") {
            Some(FormulaDelim::Display)
        } else if rest.starts_with("\\[") {
            Some(FormulaDelim::Bracket)
        } else if rest.starts_with('$') {
            Some(FormulaDelim::Inline)
        } else {
            None
        };
        if let Some(delim) = delim {
            let open = delim.open().len();
            let body_start = i + open;
            let close_at =
                source[body_start..]
                    .find(delim.close())
                    .ok_or(SegmentError::UnclosedFormula {
                        delim: delim.open(),
                        offset: i,
                    })?;
            flush(&mut segments, text_start, i);
            segments.push(Segment::Formula {
                body: source[body_start..body_start + close_at].to_string(),
                delim,
            });
            i = body_start + close_at + delim.close().len();
            text_start = i;
            continue;
        }
        if is_table_open(rest) {
            let len = table_block_len(rest).ok_or(SegmentError::UnclosedTable { offset: i })?;
            flush(&mut segments, text_start, i);
            segments.push(Segment::Table {
                html: rest[..len].to_string(),
            });
            i += len;
            text_start = i;
            continue;
        }
        // Advance one full character so slicing stays on char boundaries.
        i += rest.chars().next().map_or(1, char::len_utf8);
    }
    flush(&mut segments, text_start, source.len());
    Ok(SegmentedContent { segments })
}
