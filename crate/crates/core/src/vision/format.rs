//! Signature heuristics that decide which code format a snippet is in.

use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::corpus::Domain;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CodeFormat {
    PythonPlot,
    Html,
    Svg,
    LatexTikz,
    MoleculeCode,
}

impl CodeFormat {
    pub const ALL: [CodeFormat; 5] = [
        CodeFormat::PythonPlot,
        CodeFormat::Html,
        CodeFormat::Svg,
        CodeFormat::LatexTikz,
        CodeFormat::MoleculeCode,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CodeFormat::PythonPlot => "python_plot",
            CodeFormat::Html => "html",
            CodeFormat::Svg => "svg",
            CodeFormat::LatexTikz => "latex_tikz",
            CodeFormat::MoleculeCode => "molecule_code",
        }
    }

    /// File extension used when handing code to a renderer.
    pub fn extension(self) -> &'static str {
        match self {
            CodeFormat::PythonPlot | CodeFormat::MoleculeCode => "py",
            CodeFormat::Html => "html",
            CodeFormat::Svg => "svg",
            CodeFormat::LatexTikz => "tex",
        }
    }

    /// Target format expected for a vision domain.
    pub fn for_domain(domain: Domain) -> Option<Self> {
        match domain {
            Domain::Chart => Some(CodeFormat::PythonPlot),
            Domain::Web => Some(CodeFormat::Html),
            Domain::Svg => Some(CodeFormat::Svg),
            Domain::Plot => Some(CodeFormat::LatexTikz),
            Domain::Molecule => Some(CodeFormat::MoleculeCode),
            Domain::TextDoc | Domain::Formula | Domain::Table => None,
        }
    }
}

impl fmt::Display for CodeFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CodeFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        CodeFormat::ALL
            .iter()
            .copied()
            .find(|f| f.as_str() == s)
            .ok_or_else(|| format!("unknown code format `{s}`"))
    }
}

struct Patterns {
    svg_root: Regex,
    html_doc: Regex,
    html_tag: Regex,
    tikz: Regex,
    plot_import: Regex,
    plot_call: Regex,
    molecule: Regex,
}

fn patterns() -> &'static Patterns {
    static P: OnceLock<Patterns> = OnceLock::new();
    P.get_or_init(|| Patterns {
        // Optional XML prolog, comments and doctype before the root element.
        svg_root: Regex::new(r"(?is)^\s*(<\?xml[^>]*\?>\s*)?(<!--.*?-->\s*|<!doctype[^>]*>\s*)*<svg[\s>]")
            .unwrap(),
        html_doc: Regex::new(r"(?i)<html[\s>]|<!doctype\s+html").unwrap(),
        html_tag: Regex::new(
            r"(?i)<(head|body|div|section|header|footer|nav|main|article|p|ul|ol|li|table|span|form|h[1-6])[\s>/]",
        )
        .unwrap(),
        tikz: Regex::new(r"\\begin\{tikzpicture\}|\\documentclass").unwrap(),
        plot_import: Regex::new(
            r"(?m)^\s*(import|from)\s+(matplotlib|seaborn|plotly|bokeh|altair|pygal|pandas\.plotting)\b",
        )
        .unwrap(),
        plot_call: Regex::new(
            r"\b(plt|ax|axs|axes|fig|sns|px|go)\.\w+\(|\.plot\(|\.savefig\(|\bFigure\(",
        )
        .unwrap(),
        molecule: Regex::new(
            r"(?m)^\s*(from\s+rdkit\b|import\s+rdkit\b|from\s+openbabel\b|import\s+openbabel\b|import\s+pybel\b|from\s+indigo\b)|\bChem\.MolFrom\w+\(|\\chemfig\{",
        )
        .unwrap(),
    })
}

/// Classifies code by ordered signature checks; the first match wins.
///
/// 1. svg: the root element is `<svg>`
/// 2. html: an `<html>` tag or HTML doctype, or at least two distinct
///    structural HTML tags
/// 3. latex_tikz: `\begin{tikzpicture}` or `\documentclass`
/// 4. python_plot: an import from a plotting library plus a plotting call
/// 5. molecule_code: a molecule-toolkit import or constructor call
pub fn detect_format(code: &str) -> Option<CodeFormat> {
    let p = patterns();
    if p.svg_root.is_match(code) {
        return Some(CodeFormat::Svg);
    }
    if p.html_doc.is_match(code) {
        return Some(CodeFormat::Html);
    }
    let mut tags: Vec<String> = p
        .html_tag
        .captures_iter(code)
        .map(|c| c[1].to_ascii_lowercase())
        .collect();
    tags.sort();
    tags.dedup();
    if tags.len() >= 2 {
        return Some(CodeFormat::Html);
    }
    if p.tikz.is_match(code) {
        return Some(CodeFormat::LatexTikz);
    }
    if p.plot_import.is_match(code) && p.plot_call.is_match(code) {
        return Some(CodeFormat::PythonPlot);
    }
    if p.molecule.is_match(code) {
        return Some(CodeFormat::MoleculeCode);
    }
    None
}

/// 1 when `code` is detected as `expected`, otherwise 0.
pub fn format_alignment_reward(code: &str, expected: CodeFormat) -> f64 {
    if detect_format(code) == Some(expected) {
        1.0
    } else {
        0.0
    }
}
