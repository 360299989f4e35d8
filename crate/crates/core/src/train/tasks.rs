use crate::corpus::Example;
use crate::decode::{generate, predict_parse, DecodeConfig};
use crate::error::{Error, Result};
use crate::eval::{corpus_bleu, span_counts, SpanCounts};
use crate::model::{prepare_example, Architecture, Model, NoiseConfig};
use crate::syntax::delinearize;

/// A training objective together with the dev metric used for model
/// selection. Dev metrics are oriented so that higher is better.
pub trait Task {
    fn name(&self) -> &'static str;
    fn arch(&self) -> Architecture;
    fn metric_name(&self) -> &'static str;
    fn dev_metric(&self, model: &Model, dev: &[Example]) -> Result<f64>;
}

/// Greedy pipeline BLEU against the original sentence.
fn dev_bleu(model: &Model, dev: &[Example]) -> Result<f64> {
    let cfg = DecodeConfig::greedy();
    let mut hyps = Vec::with_capacity(dev.len());
    for ex in dev {
        let g = generate(model, &ex.amr_tokens, &ex.anon_table, &cfg)?;
        hyps.push(g.text.split_whitespace().map(str::to_string).collect::<Vec<_>>());
    }
    let refs: Vec<Vec<String>> = dev.iter().map(|e| e.words.clone()).collect();
    corpus_bleu(&hyps, &refs)
}

/// Micro-averaged labelled span F1 of greedy parses, in percent.
fn dev_f1(model: &Model, dev: &[Example]) -> Result<f64> {
    let cfg = DecodeConfig::greedy();
    let mut counts = SpanCounts::default();
    for ex in dev {
        let pred = delinearize(&predict_parse(model, &ex.amr_tokens, &ex.sentence_tokens, &cfg)?)?;
        let gold = delinearize(&ex.parse_actions)?;
        counts.add(&span_counts(&pred, &gold));
    }
    Ok(100.0 * counts.prf(true).f1)
}

/// Negated per-action perplexity.
fn dev_neg_perplexity(model: &Model, dev: &[Example]) -> Result<f64> {
    let (mut nll, mut n) = (0.0, 0usize);
    for ex in dev {
        let p = prepare_example(&model.vocab, ex, &NoiseConfig::NONE, None);
        nll += model.joint_log_likelihood(&p)?.0;
        n += p.action_targets.len();
    }
    Ok(-(nll / n.max(1) as f64).exp())
}

pub struct JointTask;
pub struct AmrToParseTask;
pub struct TextToParseTask;
pub struct UnconditionalLmTask;
pub struct BaselineCopyTask;

impl Task for JointTask {
    fn name(&self) -> &'static str {
        "joint"
    }
    fn arch(&self) -> Architecture {
        Architecture::Joint
    }
    fn metric_name(&self) -> &'static str {
        "bleu"
    }
    fn dev_metric(&self, model: &Model, dev: &[Example]) -> Result<f64> {
        dev_bleu(model, dev)
    }
}

impl Task for BaselineCopyTask {
    fn name(&self) -> &'static str {
        "baseline_s2s_copy"
    }
    fn arch(&self) -> Architecture {
        Architecture::BaselineCopy
    }
    fn metric_name(&self) -> &'static str {
        "bleu"
    }
    fn dev_metric(&self, model: &Model, dev: &[Example]) -> Result<f64> {
        dev_bleu(model, dev)
    }
}

impl Task for AmrToParseTask {
    fn name(&self) -> &'static str {
        "amr2parse"
    }
    fn arch(&self) -> Architecture {
        Architecture::AmrToParse
    }
    fn metric_name(&self) -> &'static str {
        "labelled_f1"
    }
    fn dev_metric(&self, model: &Model, dev: &[Example]) -> Result<f64> {
        dev_f1(model, dev)
    }
}

impl Task for TextToParseTask {
    fn name(&self) -> &'static str {
        "text2parse"
    }
    fn arch(&self) -> Architecture {
        Architecture::TextToParse
    }
    fn metric_name(&self) -> &'static str {
        "labelled_f1"
    }
    fn dev_metric(&self, model: &Model, dev: &[Example]) -> Result<f64> {
        dev_f1(model, dev)
    }
}

impl Task for UnconditionalLmTask {
    fn name(&self) -> &'static str {
        "unconditional_lm"
    }
    fn arch(&self) -> Architecture {
        Architecture::UnconditionalLm
    }
    fn metric_name(&self) -> &'static str {
        "neg_perplexity"
    }
    fn dev_metric(&self, model: &Model, dev: &[Example]) -> Result<f64> {
        dev_neg_perplexity(model, dev)
    }
}

pub fn tasks() -> Vec<Box<dyn Task>> {
    vec![
        Box::new(JointTask),
        Box::new(AmrToParseTask),
        Box::new(TextToParseTask),
        Box::new(UnconditionalLmTask),
        Box::new(BaselineCopyTask),
    ]
}

pub fn task_names() -> Vec<&'static str> {
    tasks().iter().map(|t| t.name()).collect()
}

pub fn task_by_name(name: &str) -> Result<Box<dyn Task>> {
    tasks().into_iter().find(|t| t.name() == name).ok_or_else(|| {
        Error::Config(format!(
            "unknown task {name:?} (expected one of {})",
            task_names().join(", ")
        ))
    })
}

pub fn task_for(arch: Architecture) -> Box<dyn Task> {
    tasks()
        .into_iter()
        .find(|t| t.arch() == arch)
        .expect("every architecture has a task")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_covers_every_architecture() {
        for a in Architecture::ALL {
            let t = task_by_name(a.name()).unwrap();
            assert_eq!(t.arch(), a);
            assert_eq!(task_for(a).name(), a.name());
        }
        assert!(matches!(task_by_name("translate"), Err(Error::Config(_))));
    }
}
