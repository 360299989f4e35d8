use std::fmt;

use serde::{Deserialize, Serialize};

use super::bleu::BleuStats;
use super::spanf1::{span_counts, SpanCounts};
use crate::error::{Error, Result};
use crate::syntax::{delinearize, parse_actions, parse_delex, Tree};

/// One prediction or reference; ids are checked pairwise when both sides
/// carry one.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EvalItem {
    pub id: Option<String>,
    pub text: String,
}

impl EvalItem {
    pub fn new(text: impl Into<String>) -> Self {
        EvalItem {
            id: None,
            text: text.into(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub bleu: Option<f64>,
    pub labelled_f1: Option<f64>,
    pub unlabelled_f1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub labelled_precision: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub labelled_recall: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub unlabelled_precision: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub unlabelled_recall: Option<f64>,
    pub n_examples: usize,
}

impl fmt::Display for EvalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "examples        {}", self.n_examples)?;
        if let Some(b) = self.bleu {
            writeln!(f, "BLEU            {b:.2}")?;
        }
        if let (Some(u), Some(l)) = (self.unlabelled_f1, self.labelled_f1) {
            writeln!(f, "unlabelled F1   {:.2}", 100.0 * u)?;
            writeln!(f, "labelled F1     {:.2}", 100.0 * l)?;
        }
        Ok(())
    }
}

/// A corpus-level metric selectable by name.
pub trait Metric {
    fn name(&self) -> &'static str;
    fn evaluate(&self, hypotheses: &[EvalItem], references: &[EvalItem]) -> Result<EvalReport>;
}

fn check_pairing(hyps: &[EvalItem], refs: &[EvalItem]) -> Result<()> {
    if hyps.len() != refs.len() {
        return Err(Error::Data(format!(
            "{} hypotheses but {} references",
            hyps.len(),
            refs.len()
        )));
    }
    for (h, r) in hyps.iter().zip(refs) {
        if let (Some(a), Some(b)) = (&h.id, &r.id) {
            if a != b {
                return Err(Error::Data(format!("id mismatch: hypothesis {a} vs reference {b}")));
            }
        }
    }
    Ok(())
}

pub struct Bleu;

impl Metric for Bleu {
    fn name(&self) -> &'static str {
        "bleu"
    }

    fn evaluate(&self, hyps: &[EvalItem], refs: &[EvalItem]) -> Result<EvalReport> {
        check_pairing(hyps, refs)?;
        let mut stats = BleuStats::default();
        for (h, r) in hyps.iter().zip(refs) {
            let h: Vec<&str> = h.text.split_whitespace().collect();
            let r: Vec<&str> = r.text.split_whitespace().collect();
            stats.add_pair(&h, &r);
        }
        Ok(EvalReport {
            bleu: Some(stats.score()),
            n_examples: hyps.len(),
            ..Default::default()
        })
    }
}

/// Accepts either a bracketed delexicalised tree, `(S (NP DT NN) (VP VBD))`,
/// or a space-separated action sequence, `(S (NP DT NN ) (VP VBD ) )`.
pub fn read_tree(text: &str) -> Result<Tree> {
    match parse_delex(text) {
        Ok(t) => Ok(t),
        Err(first) => match parse_actions(text).and_then(|a| delinearize(&a)) {
            Ok(t) => Ok(t),
            Err(_) => Err(first),
        },
    }
}

pub struct SpanF1;

impl Metric for SpanF1 {
    fn name(&self) -> &'static str {
        "spanf1"
    }

    fn evaluate(&self, hyps: &[EvalItem], refs: &[EvalItem]) -> Result<EvalReport> {
        check_pairing(hyps, refs)?;
        let mut counts = SpanCounts::default();
        for (h, r) in hyps.iter().zip(refs) {
            counts.add(&span_counts(&read_tree(&h.text)?, &read_tree(&r.text)?));
        }
        let l = counts.prf(true);
        let u = counts.prf(false);
        Ok(EvalReport {
            labelled_f1: Some(l.f1),
            unlabelled_f1: Some(u.f1),
            labelled_precision: Some(l.precision),
            labelled_recall: Some(l.recall),
            unlabelled_precision: Some(u.precision),
            unlabelled_recall: Some(u.recall),
            n_examples: hyps.len(),
            ..Default::default()
        })
    }
}

fn registry() -> Vec<Box<dyn Metric>> {
    vec![Box::new(Bleu), Box::new(SpanF1)]
}

pub fn metric_names() -> Vec<&'static str> {
    registry().iter().map(|m| m.name()).collect()
}

pub fn metric_by_name(name: &str) -> Result<Box<dyn Metric>> {
    registry()
        .into_iter()
        .find(|m| m.name() == name)
        .ok_or_else(|| Error::Usage(format!("unknown metric {name:?}; expected one of {:?}", metric_names())))
}

/// Span F1 for several parse models scored against one reference set.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ParseTaskReport {
    pub rows: Vec<(String, EvalReport)>,
}

impl ParseTaskReport {
    pub fn evaluate(models: &[(&str, &[EvalItem])], references: &[EvalItem]) -> Result<Self> {
        let mut rows = Vec::new();
        for (name, hyps) in models {
            rows.push((name.to_string(), SpanF1.evaluate(hyps, references)?));
        }
        Ok(ParseTaskReport { rows })
    }
}

impl fmt::Display for ParseTaskReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<24} {:>14} {:>12}", "model", "unlabelled F1", "labelled F1")?;
        for (name, r) in &self.rows {
            writeln!(
                f,
                "{:<24} {:>14.1} {:>12.1}",
                name,
                100.0 * r.unlabelled_f1.unwrap_or(0.0),
                100.0 * r.labelled_f1.unwrap_or(0.0)
            )?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn items(xs: &[&str]) -> Vec<EvalItem> {
        xs.iter().map(|s| EvalItem::new(*s)).collect()
    }

    #[test]
    fn registry_lookup() {
        assert_eq!(metric_names(), vec!["bleu", "spanf1"]);
        assert!(metric_by_name("meteor").is_err());
    }

    #[test]
    fn all_correct_parses_score_one() {
        let refs = items(&["(S (NP DT NN) (VP VBD))", "(S (NP PRP) (VP VBZ (ADJP JJ)))"]);
        let r = metric_by_name("spanf1").unwrap().evaluate(&refs, &refs).unwrap();
        assert_eq!(r.labelled_f1, Some(1.0));
        assert_eq!(r.unlabelled_f1, Some(1.0));
    }

    #[test]
    fn action_strings_are_accepted() {
        let a = read_tree("(S (NP DT NN ) (VP VBD ) )").unwrap();
        let b = read_tree("(S (NP DT NN) (VP VBD))").unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn id_mismatch_is_reported() {
        let h = vec![EvalItem {
            id: Some("a".into()),
            text: "x".into(),
        }];
        let r = vec![EvalItem {
            id: Some("b".into()),
            text: "x".into(),
        }];
        assert!(matches!(Bleu.evaluate(&h, &r), Err(Error::Data(_))));
    }
}
