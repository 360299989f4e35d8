//! Corpus BLEU and the aligned span-F1 parse evaluation.

mod align;
mod bleu;
mod report;
mod spanf1;

pub use align::{align_terminals, Alignment};
pub use bleu::{corpus_bleu, BleuStats, MAX_ORDER};
pub use report::{
    metric_by_name, metric_names, read_tree, Bleu, EvalItem, EvalReport, Metric, ParseTaskReport, SpanF1,
};
pub use spanf1::{span_counts, span_counts_aligned, span_f1, Prf, Span, SpanCounts, SpanSet};
