//! Independent reference implementations and random generators shared by
//! the integration tests.

#![allow(dead_code)]

use std::collections::HashMap;

use holocr::treedist::{EditCosts, OrderedTree, TableLabel, TableTree};
use rand::seq::SliceRandom;
use rand::Rng;

// ---------------------------------------------------------------------------
// Tree edit distance by exhaustive mapping enumeration
// ---------------------------------------------------------------------------

struct Flat<'a, L> {
    labels: Vec<&'a L>,
    pre: Vec<usize>,
    post: Vec<usize>,
}

fn flatten<L>(t: &OrderedTree<L>) -> Flat<'_, L> {
    fn walk<'a, L>(t: &'a OrderedTree<L>, f: &mut Flat<'a, L>, counter: &mut usize) {
        let idx = f.labels.len();
        f.labels.push(&t.label);
        f.pre.push(idx);
        f.post.push(0);
        for c in &t.children {
            walk(c, f, counter);
        }
        f.post[idx] = *counter;
        *counter += 1;
    }
    let mut f = Flat {
        labels: Vec::new(),
        pre: Vec::new(),
        post: Vec::new(),
    };
    walk(t, &mut f, &mut 0);
    f
}

fn is_ancestor<L>(f: &Flat<L>, x: usize, y: usize) -> bool {
    f.pre[x] < f.pre[y] && f.post[x] > f.post[y]
}

fn is_left_of<L>(f: &Flat<L>, x: usize, y: usize) -> bool {
    f.pre[x] < f.pre[y] && f.post[x] < f.post[y]
}

/// Minimum edit cost over every valid ordered mapping between the two
/// trees. Exponential; meant for trees of a handful of nodes.
pub fn brute_force_ted<L, C: EditCosts<L>>(
    a: &OrderedTree<L>,
    b: &OrderedTree<L>,
    costs: &C,
) -> f64 {
    let fa = flatten(a);
    let fb = flatten(b);
    let mut best = f64::INFINITY;
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    let mut used = vec![false; fb.labels.len()];

    #[allow(clippy::too_many_arguments)]
    fn go<L, C: EditCosts<L>>(
        i: usize,
        cost: f64,
        fa: &Flat<L>,
        fb: &Flat<L>,
        costs: &C,
        pairs: &mut Vec<(usize, usize)>,
        used: &mut Vec<bool>,
        best: &mut f64,
    ) {
        if i == fa.labels.len() {
            let inserts: f64 = (0..fb.labels.len())
                .filter(|&j| !used[j])
                .map(|j| costs.insert(fb.labels[j]))
                .sum();
            if cost + inserts < *best {
                *best = cost + inserts;
            }
            return;
        }
        go(
            i + 1,
            cost + costs.delete(fa.labels[i]),
            fa,
            fb,
            costs,
            pairs,
            used,
            best,
        );
        for j in 0..fb.labels.len() {
            if used[j] {
                continue;
            }
            let compatible = pairs.iter().all(|&(pi, pj)| {
                is_ancestor(fa, pi, i) == is_ancestor(fb, pj, j)
                    && is_left_of(fa, pi, i) == is_left_of(fb, pj, j)
            });
            if !compatible {
                continue;
            }
            used[j] = true;
            pairs.push((i, j));
            let c = cost + costs.rename(fa.labels[i], fb.labels[j]);
            go(i + 1, c, fa, fb, costs, pairs, used, best);
            pairs.pop();
            used[j] = false;
        }
    }

    go(0, 0.0, &fa, &fb, costs, &mut pairs, &mut used, &mut best);
    best
}

/// Random ordered tree with `1..=max_nodes` nodes and labels drawn from
/// `alphabet`.
pub fn random_tree<R: Rng>(rng: &mut R, max_nodes: usize, alphabet: &[char]) -> OrderedTree<char> {
    let n = rng.gen_range(1..=max_nodes);
    let parents: Vec<usize> = (1..n).map(|k| rng.gen_range(0..k)).collect();
    let labels: Vec<char> = (0..n).map(|_| *alphabet.choose(rng).unwrap()).collect();
    fn build(k: usize, parents: &[usize], labels: &[char]) -> OrderedTree<char> {
        let children = (1..labels.len())
            .filter(|&c| parents[c - 1] == k)
            .map(|c| build(c, parents, labels))
            .collect();
        OrderedTree::node(labels[k], children)
    }
    build(0, &parents, &labels)
}

/// Random small table tree with optional `thead`, spans and cell text.
pub fn random_table<R: Rng>(rng: &mut R) -> TableTree {
    const TEXTS: [&str; 6] = ["", "1", "12", "13", "ab", "total"];
    let row = |rng: &mut R| {
        let cells = (0..rng.gen_range(1..=3))
            .map(|_| {
                let span = if rng.gen_bool(0.2) { 2 } else { 1 };
                OrderedTree::leaf(TableLabel::cell(TEXTS.choose(rng).unwrap()).with_span(1, span))
            })
            .collect();
        OrderedTree::node(TableLabel::tag("tr"), cells)
    };
    let mut children = Vec::new();
    if rng.gen_bool(0.3) {
        let r = row(rng);
        children.push(OrderedTree::node(TableLabel::tag("thead"), vec![r]));
    }
    for _ in 0..rng.gen_range(1..=2) {
        children.push(row(rng));
    }
    OrderedTree::node(TableLabel::tag("table"), children)
}

// ---------------------------------------------------------------------------
// String metrics
// ---------------------------------------------------------------------------

/// Levenshtein distance by memoized recursion on suffixes.
pub fn reference_levenshtein(a: &str, b: &str) -> usize {
    fn go(
        a: &[char],
        b: &[char],
        i: usize,
        j: usize,
        memo: &mut HashMap<(usize, usize), usize>,
    ) -> usize {
        if i == a.len() {
            return b.len() - j;
        }
        if j == b.len() {
            return a.len() - i;
        }
        if let Some(&v) = memo.get(&(i, j)) {
            return v;
        }
        let sub = go(a, b, i + 1, j + 1, memo) + usize::from(a[i] != b[j]);
        let del = go(a, b, i + 1, j, memo) + 1;
        let ins = go(a, b, i, j + 1, memo) + 1;
        let v = sub.min(del).min(ins);
        memo.insert((i, j), v);
        v
    }
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    go(&a, &b, 0, 0, &mut HashMap::new())
}

/// Sentence BLEU-4: clipped n-gram precision, no smoothing at order 1,
/// add-one smoothing at orders 2-4, exponential brevity penalty.
pub fn reference_bleu(cand: &[&str], reference: &[&str]) -> f64 {
    if cand.is_empty() {
        return 0.0;
    }
    let mut log_sum = 0.0;
    for n in 1..=4usize {
        let grams = |s: &[&str]| {
            let mut m: HashMap<Vec<String>, usize> = HashMap::new();
            if s.len() >= n {
                for w in s.windows(n) {
                    *m.entry(w.iter().map(|x| x.to_string()).collect())
                        .or_default() += 1;
                }
            }
            m
        };
        let c = grams(cand);
        let r = grams(reference);
        let total: usize = c.values().sum();
        let matched: usize = c
            .iter()
            .map(|(g, &k)| k.min(r.get(g).copied().unwrap_or(0)))
            .sum();
        let p = if n == 1 {
            matched as f64 / total as f64
        } else {
            (matched as f64 + 1.0) / (total as f64 + 1.0)
        };
        if p == 0.0 {
            return 0.0;
        }
        log_sum += p.ln() / 4.0;
    }
    let (c, r) = (cand.len() as f64, reference.len() as f64);
    let bp = if c > r { 1.0 } else { (1.0 - r / c).exp() };
    bp * log_sum.exp()
}
