//! Reference implementations and random generators shared by the property
//! tests and the acceptance suite.

use std::collections::HashMap;

use amrgen::syntax::{linearize_tree, Action, Tree};
use rand::Rng;

pub const LABELS: [&str; 5] = ["S", "NP", "VP", "PP", "SBAR"];
pub const TAGS: [&str; 6] = ["DT", "NN", "VBZ", "IN", "JJ", "PRP"];

/// Random delexicalised tree with at most `budget` terminals below the root.
pub fn random_tree<R: Rng>(rng: &mut R, depth: usize, budget: usize) -> Tree {
    let n = rng.gen_range(1..=budget.max(1));
    let leaves: Vec<String> = (0..n).map(|_| TAGS[rng.gen_range(0..TAGS.len())].to_string()).collect();
    bracket(rng, &leaves, depth)
}

/// Random constituent structure over a fixed terminal sequence.
pub fn bracket<R: Rng>(rng: &mut R, leaves: &[String], depth: usize) -> Tree {
    let label = LABELS[rng.gen_range(0..LABELS.len())];
    if depth == 0 {
        return Tree::node(label, leaves.iter().map(Tree::leaf).collect());
    }
    let mut children = Vec::new();
    let mut i = 0;
    while i < leaves.len() {
        let len = rng.gen_range(1..=leaves.len() - i);
        let part = &leaves[i..i + len];
        if len == 1 && rng.gen_bool(0.6) {
            children.push(Tree::leaf(part[0].clone()));
        } else if len == leaves.len() && rng.gen_bool(0.5) {
            // whole span again: a unary chain, kept shallow
            children.push(bracket(rng, part, depth.saturating_sub(2)));
        } else {
            children.push(bracket(rng, part, depth - 1));
        }
        i += len;
    }
    Tree::node(label, children)
}

/// Constituents as (start, end, label), read from the bracketed action
/// string by counting terminals before each OPEN and CLOSE.
pub fn enumerate_spans(t: &Tree) -> Vec<(usize, usize, String)> {
    let mut out = Vec::new();
    let mut open: Vec<(usize, String)> = Vec::new();
    let mut seen = 0;
    for a in linearize_tree(t) {
        match a {
            Action::Open(l) => open.push((seen, l)),
            Action::Terminal(_) => seen += 1,
            Action::Close => {
                let (s, l) = open.pop().unwrap();
                out.push((s, seen, l));
            }
        }
    }
    out
}

/// Labelled (matched, pred, gold) over two trees with the same terminals,
/// by checking every interval [i, j) separately.
pub fn span_oracle(pred: &Tree, gold: &Tree, labelled: bool) -> (usize, usize, usize) {
    let p = enumerate_spans(pred);
    let g = enumerate_spans(gold);
    let n = pred.terminals().len();
    let mut matched = 0;
    for i in 0..n {
        for j in i + 1..=n {
            let mut pl: HashMap<&str, usize> = HashMap::new();
            let mut gl: HashMap<&str, usize> = HashMap::new();
            for (s, e, l) in &p {
                if (*s, *e) == (i, j) {
                    *pl.entry(if labelled { l } else { "" }).or_default() += 1;
                }
            }
            for (s, e, l) in &g {
                if (*s, *e) == (i, j) {
                    *gl.entry(if labelled { l } else { "" }).or_default() += 1;
                }
            }
            matched += pl
                .iter()
                .map(|(k, c)| (*c).min(gl.get(k).copied().unwrap_or(0)))
                .sum::<usize>();
        }
    }
    (matched, p.len(), g.len())
}

pub fn f1(matched: usize, pred: usize, gold: usize) -> f64 {
    if matched == 0 {
        return 0.0;
    }
    let p = matched as f64 / pred as f64;
    let r = matched as f64 / gold as f64;
    2.0 * p * r / (p + r)
}

/// Insert/delete edit distance by the textbook table.
pub fn edit_distance(a: &[&str], b: &[&str]) -> usize {
    let mut d = vec![vec![0usize; b.len() + 1]; a.len() + 1];
    for (i, row) in d.iter_mut().enumerate() {
        row[0] = i;
    }
    for (j, cell) in d[0].iter_mut().enumerate() {
        *cell = j;
    }
    for i in 1..=a.len() {
        for j in 1..=b.len() {
            d[i][j] = if a[i - 1] == b[j - 1] {
                d[i - 1][j - 1]
            } else {
                1 + d[i - 1][j].min(d[i][j - 1])
            };
        }
    }
    d[a.len()][b.len()]
}

pub fn random_tags<R: Rng>(rng: &mut R, max_len: usize, alphabet: usize) -> Vec<&'static str> {
    let n = rng.gen_range(0..=max_len);
    (0..n)
        .map(|_| TAGS[rng.gen_range(0..alphabet.min(TAGS.len()))])
        .collect()
}

/// Hand-computed corpus BLEU-4 cases: (hypotheses, references, score).
pub fn bleu_cases() -> Vec<(Vec<&'static str>, Vec<&'static str>, f64)> {
    vec![
        (vec!["the cat sat on the mat"], vec!["the cat sat on the mat"], 100.0),
        // precisions 5/6, 3/5, 2/4, 1/3; no brevity penalty: 100·(1/12)^(1/4)
        (
            vec!["the cat sat on the mat"],
            vec!["the cat sat on a mat"],
            53.728_496_591_177_1,
        ),
        // all precisions 1, penalty exp(1 - 7/5)
        (
            vec!["the cat sat on the"],
            vec!["the cat sat on the mat today"],
            67.032_004_603_563_93,
        ),
        // no 4-gram in a 3-token hypothesis
        (vec!["the cat sat"], vec!["the cat sat down"], 0.0),
        // pooled: 10/11, 7/9, 5/7, 3/5 and penalty exp(1 - 13/11)
        (
            vec!["the cat sat on the mat", "the cat sat on the"],
            vec!["the cat sat on a mat", "the cat sat on the mat today"],
            61.859_852_760_686_344,
        ),
    ]
}

pub fn split(s: &[&str]) -> Vec<Vec<String>> {
    s.iter()
        .map(|x| x.split_whitespace().map(str::to_string).collect())
        .collect()
}
