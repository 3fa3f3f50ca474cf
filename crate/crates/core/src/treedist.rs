//! Ordered tree edit distance and table similarity (TEDS / TEDS-S).
//!
//! The distance uses the keyroot dynamic program over left-right postorder
//! numbering: a forest-distance table is filled once per pair of keyroots,
//! and whole-subtree distances are memoized in a tree-distance table.

use serde::{Deserialize, Serialize};

use crate::text::normalized_levenshtein;

/// A rooted, ordered, labeled tree.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrderedTree<L> {
    pub label: L,
    pub children: Vec<OrderedTree<L>>,
}

impl<L> OrderedTree<L> {
    pub fn leaf(label: L) -> Self {
        OrderedTree {
            label,
            children: Vec::new(),
        }
    }

    pub fn node(label: L, children: Vec<OrderedTree<L>>) -> Self {
        OrderedTree { label, children }
    }

    pub fn size(&self) -> usize {
        1 + self.children.iter().map(OrderedTree::size).sum::<usize>()
    }

    pub fn depth(&self) -> usize {
        1 + self
            .children
            .iter()
            .map(OrderedTree::depth)
            .max()
            .unwrap_or(0)
    }

    /// Labels in postorder.
    pub fn postorder(&self) -> Vec<&L> {
        let mut out = Vec::with_capacity(self.size());
        fn walk<'a, L>(t: &'a OrderedTree<L>, out: &mut Vec<&'a L>) {
            for c in &t.children {
                walk(c, out);
            }
            out.push(&t.label);
        }
        walk(self, &mut out);
        out
    }
}

/// Cost model for tree edits. Implementations must return nonnegative
/// costs, with `rename(a, a) == 0` and `rename` symmetric.
pub trait EditCosts<L> {
    fn insert(&self, label: &L) -> f64;
    fn delete(&self, label: &L) -> f64;
    fn rename(&self, from: &L, to: &L) -> f64;
}

/// Unit insert/delete, rename 0 for equal labels and 1 otherwise.
#[derive(Debug, Clone, Copy, Default)]
pub struct UnitCosts;

impl<L: PartialEq> EditCosts<L> for UnitCosts {
    fn insert(&self, _: &L) -> f64 {
        1.0
    }
    fn delete(&self, _: &L) -> f64 {
        1.0
    }
    fn rename(&self, from: &L, to: &L) -> f64 {
        if from == to {
            0.0
        } else {
            1.0
        }
    }
}

/// Postorder view of a tree: labels, leftmost-leaf indices and keyroots,
/// all 0-based.
struct Indexed<'a, L> {
    labels: Vec<&'a L>,
    lld: Vec<usize>,
    keyroots: Vec<usize>,
}

impl<'a, L> Indexed<'a, L> {
    fn new(tree: &'a OrderedTree<L>) -> Self {
        let n = tree.size();
        let mut labels = Vec::with_capacity(n);
        let mut lld = Vec::with_capacity(n);

        fn walk<'a, L>(
            t: &'a OrderedTree<L>,
            labels: &mut Vec<&'a L>,
            lld: &mut Vec<usize>,
        ) -> usize {
            let mut leftmost = None;
            for c in &t.children {
                let l = walk(c, labels, lld);
                leftmost.get_or_insert(l);
            }
            let idx = labels.len();
            let l = leftmost.unwrap_or(idx);
            labels.push(&t.label);
            lld.push(l);
            l
        }
        walk(tree, &mut labels, &mut lld);

        // A keyroot is the highest node for each distinct leftmost leaf.
        let mut highest = vec![None; n];
        for (i, &l) in lld.iter().enumerate() {
            highest[l] = Some(i);
        }
        let mut keyroots: Vec<usize> = highest.into_iter().flatten().collect();
        keyroots.sort_unstable();

        Indexed {
            labels,
            lld,
            keyroots,
        }
    }
}

/// Minimal total cost of node insertions, deletions and renames turning
/// `a` into `b`.
pub fn tree_edit_distance<L, C: EditCosts<L> + ?Sized>(
    a: &OrderedTree<L>,
    b: &OrderedTree<L>,
    costs: &C,
) -> f64 {
    let a = Indexed::new(a);
    let b = Indexed::new(b);
    let (n, m) = (a.labels.len(), b.labels.len());

    let mut tree_dist = vec![vec![0.0f64; m]; n];
    // Forest table indexed with a 1-slot offset so that row/column 0 is the
    // empty forest.
    let mut forest = vec![vec![0.0f64; m + 1]; n + 1];

    for &i in &a.keyroots {
        for &j in &b.keyroots {
            let (li, lj) = (a.lld[i], b.lld[j]);
            forest[li][lj] = 0.0;
            for x in li..=i {
                forest[x + 1][lj] = forest[x][lj] + costs.delete(a.labels[x]);
            }
            for y in lj..=j {
                forest[li][y + 1] = forest[li][y] + costs.insert(b.labels[y]);
            }
            for x in li..=i {
                for y in lj..=j {
                    let del = forest[x][y + 1] + costs.delete(a.labels[x]);
                    let ins = forest[x + 1][y] + costs.insert(b.labels[y]);
                    if a.lld[x] == li && b.lld[y] == lj {
                        let ren = forest[x][y] + costs.rename(a.labels[x], b.labels[y]);
                        let d = del.min(ins).min(ren);
                        forest[x + 1][y + 1] = d;
                        tree_dist[x][y] = d;
                    } else {
                        let sub = forest[a.lld[x]][b.lld[y]] + tree_dist[x][y];
                        forest[x + 1][y + 1] = del.min(ins).min(sub);
                    }
                }
            }
        }
    }
    tree_dist[n - 1][m - 1]
}

/// Node label of a normalized table tree.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableLabel {
    pub tag: String,
    #[serde(default = "one", skip_serializing_if = "is_one")]
    pub rowspan: u32,
    #[serde(default = "one", skip_serializing_if = "is_one")]
    pub colspan: u32,
    /// Whitespace-collapsed cell text; only set on `td` nodes.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
}

fn one() -> u32 {
    1
}

fn is_one(v: &u32) -> bool {
    *v == 1
}

impl TableLabel {
    pub fn tag(tag: &str) -> Self {
        TableLabel {
            tag: tag.to_string(),
            rowspan: 1,
            colspan: 1,
            text: None,
        }
    }

    pub fn cell(text: &str) -> Self {
        TableLabel {
            text: Some(text.to_string()),
            ..TableLabel::tag("td")
        }
    }

    pub fn with_span(mut self, rowspan: u32, colspan: u32) -> Self {
        self.rowspan = rowspan.max(1);
        self.colspan = colspan.max(1);
        self
    }

    fn same_structure(&self, other: &Self) -> bool {
        self.tag == other.tag && self.rowspan == other.rowspan && self.colspan == other.colspan
    }
}

/// Table structure tree; the root is always a `table` node.
pub type TableTree = OrderedTree<TableLabel>;

/// TEDS cost model: rename is 1 when tag or spans differ, otherwise the
/// normalized Levenshtein distance between cell texts.
#[derive(Debug, Clone, Copy, Default)]
pub struct TedsCosts;

/// TEDS-S cost model: cell text is ignored.
#[derive(Debug, Clone, Copy, Default)]
pub struct StructureCosts;

impl EditCosts<TableLabel> for TedsCosts {
    fn insert(&self, _: &TableLabel) -> f64 {
        1.0
    }
    fn delete(&self, _: &TableLabel) -> f64 {
        1.0
    }
    fn rename(&self, from: &TableLabel, to: &TableLabel) -> f64 {
        if !from.same_structure(to) {
            return 1.0;
        }
        match (&from.text, &to.text) {
            (None, None) => 0.0,
            (a, b) => {
                normalized_levenshtein(a.as_deref().unwrap_or(""), b.as_deref().unwrap_or(""))
            }
        }
    }
}

impl EditCosts<TableLabel> for StructureCosts {
    fn insert(&self, _: &TableLabel) -> f64 {
        1.0
    }
    fn delete(&self, _: &TableLabel) -> f64 {
        1.0
    }
    fn rename(&self, from: &TableLabel, to: &TableLabel) -> f64 {
        if from.same_structure(to) {
            0.0
        } else {
            1.0
        }
    }
}

fn similarity<C: EditCosts<TableLabel>>(a: &TableTree, b: &TableTree, costs: &C) -> f64 {
    let dist = tree_edit_distance(a, b, costs);
    let denom = a.size().max(b.size()) as f64;
    (1.0 - dist / denom).clamp(0.0, 1.0)
}

/// Tree-edit-distance similarity including cell content.
pub fn teds(a: &TableTree, b: &TableTree) -> f64 {
    similarity(a, b, &TedsCosts)
}

/// Structure-only tree-edit-distance similarity.
pub fn teds_s(a: &TableTree, b: &TableTree) -> f64 {
    similarity(a, b, &StructureCosts)
}
