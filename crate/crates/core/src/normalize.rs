//! Canonicalization of LaTeX, plain text and HTML tables prior to scoring.

use serde::{Deserialize, Serialize};
use thiserror::Error;
use unicode_normalization::UnicodeNormalization;

use crate::treedist::{OrderedTree, TableLabel, TableTree};

/// NFC, whitespace runs collapsed to one space, ends trimmed.
pub fn normalize_plain_text(raw: &str) -> String {
    let nfc: String = raw.nfc().collect();
    nfc.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Normalized LaTeX token sequence.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatexTokenSeq {
    pub tokens: Vec<String>,
    /// Set when `{`/`}` tokens were not balanced in the source.
    pub unbalanced: bool,
}

impl LatexTokenSeq {
    /// Space-separated rendering; re-normalizing it yields the same tokens.
    pub fn render(&self) -> String {
        self.tokens.join(" ")
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

const SPACING_COMMANDS: &[&str] = &["\\,", "\\;", "\\!", "\\quad", "\\qquad", "\\ "];
const WRAPPER_COMMANDS: &[&str] = &["\\left", "\\right"];

fn canonical_command(cmd: &str) -> &str {
    match cmd {
        "\\dfrac" | "\\tfrac" => "\\frac",
        "\\leq" => "\\le",
        "\\geq" => "\\ge",
        other => other,
    }
}

/// Splits LaTeX into raw tokens: commands (`\` + letters, or `\` + one
/// other character), and single non-whitespace characters. Comments and
/// whitespace are skipped.
fn lex_latex(raw: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    let mut chars = raw.chars().peekable();
    while let Some(c) = chars.next() {
        match c {
            '%' => {
                for n in chars.by_ref() {
                    if n == '\n' {
                        break;
                    }
                }
            }
            '\\' => {
                let mut cmd = String::from('\\');
                match chars.peek().copied() {
                    Some(n) if n.is_ascii_alphabetic() => {
                        while let Some(&n) = chars.peek() {
                            if !n.is_ascii_alphabetic() {
                                break;
                            }
                            cmd.push(n);
                            chars.next();
                        }
                    }
                    Some(n) if n.is_whitespace() => {
                        chars.next();
                        cmd.push(' ');
                    }
                    Some(n) => {
                        chars.next();
                        cmd.push(n);
                    }
                    None => {}
                }
                tokens.push(cmd);
            }
            c if c.is_whitespace() => {}
            c => tokens.push(c.to_string()),
        }
    }
    tokens
}

/// Tokenizes and canonicalizes a LaTeX expression.
///
/// Rules: comments stripped, whitespace dropped, `\left`/`\right` removed
/// (the delimiter stays), `\dfrac`/`\tfrac` become `\frac`, `\leq`/`\geq`
/// become `\le`/`\ge`, and spacing commands are dropped.
pub fn normalize_latex(raw: &str) -> LatexTokenSeq {
    let mut tokens = Vec::new();
    let mut depth: i64 = 0;
    let mut unbalanced = false;
    for tok in lex_latex(raw) {
        if SPACING_COMMANDS.contains(&tok.as_str()) || WRAPPER_COMMANDS.contains(&tok.as_str()) {
            continue;
        }
        match tok.as_str() {
            "{" => depth += 1,
            "}" => {
                depth -= 1;
                if depth < 0 {
                    unbalanced = true;
                }
            }
            _ => {}
        }
        tokens.push(canonical_command(&tok).to_string());
    }
    LatexTokenSeq {
        tokens,
        unbalanced: unbalanced || depth != 0,
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum NormalizeError {
    #[error("no <table> element found")]
    NoTable,
}

/// Result of table normalization.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedTable {
    pub tree: TableTree,
    /// Set when missing or stray tags had to be repaired.
    pub repaired: bool,
}

#[derive(Debug, PartialEq)]
enum HtmlToken<'a> {
    Open {
        name: String,
        attrs: &'a str,
        self_closing: bool,
    },
    Close {
        name: String,
    },
    Text(&'a str),
}

/// Minimal HTML tokenizer: tags, text, comments (skipped), doctype (skipped).
fn tokenize_html(src: &str) -> Vec<HtmlToken<'_>> {
    let mut out = Vec::new();
    let mut i = 0;
    let bytes = src.as_bytes();
    while i < bytes.len() {
        if bytes[i] == b'<' {
            let rest = &src[i..];
            if rest.starts_with("<!--") {
                i += rest.find("-->").map_or(rest.len(), |p| p + 3);
                continue;
            }
            let next = bytes.get(i + 1).copied();
            let is_tag =
                matches!(next, Some(c) if c.is_ascii_alphabetic() || c == b'/' || c == b'!');
            if is_tag {
                let Some(end) = rest.find('>') else {
                    out.push(HtmlToken::Text(rest));
                    break;
                };
                let inner = &rest[1..end];
                i += end + 1;
                if inner.starts_with('!') {
                    continue;
                }
                if let Some(name) = inner.strip_prefix('/') {
                    out.push(HtmlToken::Close {
                        name: name.trim().to_ascii_lowercase(),
                    });
                } else {
                    let self_closing = inner.ends_with('/');
                    let inner = inner.trim_end_matches('/');
                    let split = inner
                        .find(|c: char| c.is_whitespace())
                        .unwrap_or(inner.len());
                    out.push(HtmlToken::Open {
                        name: inner[..split].to_ascii_lowercase(),
                        attrs: &inner[split..],
                        self_closing,
                    });
                }
                continue;
            }
        }
        let step = src[i..].chars().next().map_or(1, char::len_utf8);
        let end = src[i + step..]
            .find('<')
            .map_or(src.len(), |p| i + step + p);
        out.push(HtmlToken::Text(&src[i..end]));
        i = end;
    }
    out
}

/// Reads a positive integer attribute (`rowspan="2"`, `rowspan=2`).
fn span_attr(attrs: &str, key: &str) -> u32 {
    let lower = attrs.to_ascii_lowercase();
    let mut search = 0;
    while let Some(pos) = lower[search..].find(key) {
        let start = search + pos;
        search = start + key.len();
        let preceded_ok = start == 0 || lower.as_bytes()[start - 1].is_ascii_whitespace();
        let rest = lower[search..].trim_start();
        if !preceded_ok || !rest.starts_with('=') {
            continue;
        }
        let value = rest[1..].trim_start().trim_start_matches(['"', '\'']);
        let digits: String = value.chars().take_while(char::is_ascii_digit).collect();
        return digits.parse::<u32>().ok().filter(|&v| v >= 1).unwrap_or(1);
    }
    1
}

fn decode_entities(text: &str) -> String {
    if !text.contains('&') {
        return text.to_string();
    }
    let mut out = String::with_capacity(text.len());
    let mut rest = text;
    while let Some(amp) = rest.find('&') {
        out.push_str(&rest[..amp]);
        let tail = &rest[amp..];
        let decoded = tail.find(';').filter(|&semi| semi <= 10).and_then(|semi| {
            let ent = &tail[1..semi];
            let ch = match ent {
                "amp" => Some('&'),
                "lt" => Some('<'),
                "gt" => Some('>'),
                "quot" => Some('"'),
                "apos" => Some('\''),
                "nbsp" => Some(' '),
                _ => ent
                    .strip_prefix("#x")
                    .or_else(|| ent.strip_prefix("#X"))
                    .and_then(|h| u32::from_str_radix(h, 16).ok())
                    .or_else(|| ent.strip_prefix('#').and_then(|d| d.parse().ok()))
                    .and_then(char::from_u32),
            };
            ch.map(|c| (c, semi + 1))
        });
        match decoded {
            Some((c, len)) => {
                out.push(c);
                rest = &tail[len..];
            }
            None => {
                out.push('&');
                rest = &tail[1..];
            }
        }
    }
    out.push_str(rest);
    out
}

/// Builder frame for an open structural element.
struct Frame {
    label: TableLabel,
    children: Vec<TableTree>,
    /// Raw text for `td` frames.
    text: String,
}

impl Frame {
    fn new(label: TableLabel) -> Self {
        Frame {
            label,
            children: Vec::new(),
            text: String::new(),
        }
    }

    fn finish(mut self) -> TableTree {
        if self.label.tag == "td" {
            self.label.text = Some(normalize_plain_text(&decode_entities(&self.text)));
        }
        OrderedTree::node(self.label, self.children)
    }
}

struct TableBuilder {
    stack: Vec<Frame>,
    repaired: bool,
    /// Depth of tables nested inside the current cell.
    nested: usize,
}

impl TableBuilder {
    fn top_tag(&self) -> &str {
        self.stack.last().map_or("", |f| f.label.tag.as_str())
    }

    fn in_cell(&self) -> bool {
        self.top_tag() == "td"
    }

    /// Closes the top frame into its parent. Returns the finished root when
    /// the stack becomes empty.
    fn pop(&mut self) -> Option<TableTree> {
        let frame = self.stack.pop()?;
        let tree = frame.finish();
        match self.stack.last_mut() {
            Some(parent) => {
                parent.children.push(tree);
                None
            }
            None => Some(tree),
        }
    }

    /// Pops frames until one tagged `tag` has been closed.
    fn close(&mut self, tag: &str, explicit: bool) -> Option<TableTree> {
        if !self.stack.iter().any(|f| f.label.tag == tag) {
            if explicit {
                self.repaired = true;
            }
            return None;
        }
        loop {
            let top_matches = self.top_tag() == tag;
            if !top_matches && explicit {
                self.repaired = true;
            }
            let done = self.pop();
            if top_matches || done.is_some() {
                return done;
            }
        }
    }

    fn open(&mut self, tag: &str, attrs: &str) {
        match tag {
            "td" => {
                if self.in_cell() {
                    self.pop();
                }
                if self.top_tag() != "tr" {
                    self.repaired = true;
                    self.stack.push(Frame::new(TableLabel::tag("tr")));
                }
                let label = TableLabel::tag("td")
                    .with_span(span_attr(attrs, "rowspan"), span_attr(attrs, "colspan"));
                self.stack.push(Frame::new(label));
            }
            "tr" => {
                if self.in_cell() {
                    self.pop();
                }
                if self.top_tag() == "tr" {
                    self.pop();
                }
                self.stack.push(Frame::new(TableLabel::tag("tr")));
            }
            "thead" | "tbody" => {
                if self.in_cell() {
                    self.pop();
                }
                if self.top_tag() == "tr" {
                    self.pop();
                }
                if matches!(self.top_tag(), "thead" | "tbody") {
                    self.pop();
                }
                self.stack.push(Frame::new(TableLabel::tag(tag)));
            }
            _ => unreachable!("non-structural tag {tag}"),
        }
    }
}

fn structural(name: &str) -> Option<&'static str> {
    match name {
        "table" => Some("table"),
        "thead" => Some("thead"),
        "tbody" | "tfoot" => Some("tbody"),
        "tr" => Some("tr"),
        "td" | "th" => Some("td"),
        _ => None,
    }
}

/// Parses the first `<table>` in `raw` into a structural tree.
///
/// Only `table`, `thead`, `tbody`, `tr` and `td` survive (`th` folds into
/// `td`, `tfoot` into `tbody`); attributes other than `rowspan`/`colspan`
/// are dropped and cell text is whitespace-collapsed. Markup inside cells
/// contributes only its text. Unclosed elements are closed at their
/// parent's close or at end of input.
pub fn normalize_table(raw: &str) -> Result<NormalizedTable, NormalizeError> {
    let tokens = tokenize_html(raw);
    let start = tokens
        .iter()
        .position(|t| matches!(t, HtmlToken::Open { name, .. } if name == "table"))
        .ok_or(NormalizeError::NoTable)?;

    let mut b = TableBuilder {
        stack: vec![Frame::new(TableLabel::tag("table"))],
        repaired: false,
        nested: 0,
    };

    for tok in &tokens[start + 1..] {
        match tok {
            HtmlToken::Text(text) => {
                if let Some(frame) = b.stack.last_mut() {
                    if frame.label.tag == "td" {
                        frame.text.push_str(text);
                    }
                }
            }
            HtmlToken::Open {
                name, self_closing, ..
            } if b.nested > 0 => {
                if name == "table" && !self_closing {
                    b.nested += 1;
                }
                if let Some(frame) = b.stack.last_mut() {
                    frame.text.push(' ');
                }
            }
            HtmlToken::Close { name } if b.nested > 0 => {
                if name == "table" {
                    b.nested -= 1;
                }
                if let Some(frame) = b.stack.last_mut() {
                    frame.text.push(' ');
                }
            }
            HtmlToken::Open {
                name,
                attrs,
                self_closing,
            } => match structural(name) {
                Some("table") if b.in_cell() => {
                    if !self_closing {
                        b.nested = 1;
                    }
                }
                Some("table") => {
                    // A second table outside any cell ends this one.
                    b.repaired = true;
                    break;
                }
                Some(tag) => {
                    b.open(tag, attrs);
                    if *self_closing {
                        b.close(tag, false);
                    }
                }
                None => {
                    // Inline markup inside a cell separates words.
                    if b.in_cell() && matches!(name.as_str(), "br" | "p" | "div" | "li") {
                        if let Some(frame) = b.stack.last_mut() {
                            frame.text.push(' ');
                        }
                    }
                }
            },
            HtmlToken::Close { name } => {
                if let Some(tag) = structural(name) {
                    if let Some(tree) = b.close(tag, true) {
                        return Ok(NormalizedTable {
                            tree,
                            repaired: b.repaired,
                        });
                    }
                } else if b.in_cell() && matches!(name.as_str(), "p" | "div" | "li") {
                    if let Some(frame) = b.stack.last_mut() {
                        frame.text.push(' ');
                    }
                }
            }
        }
    }

    // Input ended (or a sibling table began) with elements still open.
    b.repaired = true;
    let mut root = None;
    while root.is_none() {
        root = b.pop();
    }
    Ok(NormalizedTable {
        tree: root.expect("table frame is always present"),
        repaired: b.repaired,
    })
}
