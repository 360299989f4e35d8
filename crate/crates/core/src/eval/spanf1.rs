use std::collections::HashMap;

use super::align::{align_terminals, Alignment};
use crate::syntax::Tree;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Span {
    pub start: usize,
    pub end: usize,
    pub label: String,
}

/// Constituent spans over terminal positions. Leaves (preterminals) do not
/// contribute spans; the root does.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpanSet {
    pub spans: Vec<Span>,
    pub num_terminals: usize,
}

impl SpanSet {
    pub fn from_tree(t: &Tree) -> SpanSet {
        let mut spans = Vec::new();
        let n = collect(t, 0, &mut spans);
        SpanSet {
            spans,
            num_terminals: n,
        }
    }
}

fn collect(t: &Tree, start: usize, out: &mut Vec<Span>) -> usize {
    match t {
        Tree::Leaf { .. } => start + 1,
        Tree::Node { label, children } => {
            let mut end = start;
            for c in children {
                end = collect(c, end, out);
            }
            out.push(Span {
                start,
                end,
                label: label.clone(),
            });
            end
        }
    }
}

/// Matched and total span counts for one tree pair or a whole corpus.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SpanCounts {
    pub labelled_matches: usize,
    pub unlabelled_matches: usize,
    pub pred_spans: usize,
    pub ref_spans: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl Prf {
    pub fn from_counts(matched: usize, pred: usize, gold: usize) -> Prf {
        let precision = if pred == 0 { 0.0 } else { matched as f64 / pred as f64 };
        let recall = if gold == 0 { 0.0 } else { matched as f64 / gold as f64 };
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        Prf { precision, recall, f1 }
    }
}

impl SpanCounts {
    pub fn add(&mut self, other: &SpanCounts) {
        self.labelled_matches += other.labelled_matches;
        self.unlabelled_matches += other.unlabelled_matches;
        self.pred_spans += other.pred_spans;
        self.ref_spans += other.ref_spans;
    }

    pub fn prf(&self, labelled: bool) -> Prf {
        let m = if labelled {
            self.labelled_matches
        } else {
            self.unlabelled_matches
        };
        Prf::from_counts(m, self.pred_spans, self.ref_spans)
    }
}

/// Project each fully aligned span into alignment-pair coordinates. Spans
/// touching an unaligned terminal map to `None` and can never match.
fn project(spans: &SpanSet, to_pair: &[Option<usize>]) -> Vec<Option<Span>> {
    spans
        .spans
        .iter()
        .map(|s| {
            let pairs: Option<Vec<usize>> = (s.start..s.end).map(|i| to_pair[i]).collect();
            let pairs = pairs?;
            Some(Span {
                start: *pairs.first()?,
                end: pairs.last()? + 1,
                label: s.label.clone(),
            })
        })
        .collect()
}

fn multiset_overlap<K: std::hash::Hash + Eq>(a: impl Iterator<Item = K>, b: impl Iterator<Item = K>) -> usize {
    let mut counts: HashMap<K, usize> = HashMap::new();
    for k in a {
        *counts.entry(k).or_insert(0) += 1;
    }
    let mut m = 0;
    for k in b {
        if let Some(c) = counts.get_mut(&k) {
            if *c > 0 {
                *c -= 1;
                m += 1;
            }
        }
    }
    m
}

pub fn span_counts_aligned(pred: &Tree, reference: &Tree, alignment: &Alignment) -> SpanCounts {
    let ps = SpanSet::from_tree(pred);
    let rs = SpanSet::from_tree(reference);
    let pp = project(&ps, &alignment.pred_to_pair());
    let rp = project(&rs, &alignment.ref_to_pair());
    let labelled_matches = multiset_overlap(pp.iter().flatten().cloned(), rp.iter().flatten().cloned());
    let unlabelled_matches = multiset_overlap(
        pp.iter().flatten().map(|s| (s.start, s.end)),
        rp.iter().flatten().map(|s| (s.start, s.end)),
    );
    SpanCounts {
        labelled_matches,
        unlabelled_matches,
        pred_spans: ps.spans.len(),
        ref_spans: rs.spans.len(),
    }
}

/// Align terminals, then count span matches. The aligner runs with the
/// lexicographically smaller terminal sequence first so that swapping the
/// trees swaps precision and recall exactly.
pub fn span_counts(pred: &Tree, reference: &Tree) -> SpanCounts {
    let (p, r) = (pred.terminals(), reference.terminals());
    let alignment = if p <= r {
        align_terminals(&p, &r)
    } else {
        align_terminals(&r, &p).swapped()
    };
    span_counts_aligned(pred, reference, &alignment)
}

pub fn span_f1(pred: &Tree, reference: &Tree, labelled: bool) -> Prf {
    span_counts(pred, reference).prf(labelled)
}
