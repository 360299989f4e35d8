//! Mini-batch ADAM training with UNK noise, dropout, gradient clipping,
//! plateau learning-rate decay and best-on-dev model selection.

mod checkpoint;
mod config;
mod tasks;

use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use checkpoint::{Checkpoint, CheckpointMeta, FORMAT_VERSION, MAGIC};
pub use config::{LrSchedule, TrainConfig, PRESETS};
pub use tasks::{
    task_by_name, task_for, task_names, tasks, AmrToParseTask, BaselineCopyTask, JointTask, Task, TextToParseTask,
    UnconditionalLmTask,
};

use crate::corpus::Example;
use crate::error::{Error, Result};
use crate::model::{load_pretrained, prepare_example, Model, NoiseConfig, Prepared, Regularisation, Vocab};
use crate::tensor::{adam_step, clip_grad_norm, AdamState, Tape, Tensor};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Per-token training NLL under noise and dropout.
    pub train_nll: f64,
    pub dev_metric: f64,
    /// Learning rate used during the epoch.
    pub lr: f64,
}

pub struct TrainOutcome {
    /// Model with the best dev-metric parameters.
    pub model: Model,
    pub best_epoch: usize,
    pub best_metric: f64,
    pub history: Vec<EpochRecord>,
}

impl TrainOutcome {
    pub fn into_checkpoint(self, cfg: &TrainConfig) -> Checkpoint {
        Checkpoint {
            model: self.model,
            train_config: Some(cfg.clone()),
            meta: CheckpointMeta {
                epoch: self.best_epoch,
                history: self.history,
            },
        }
    }
}

/// Summed loss and target count for one example, with gradients.
fn example_gradients(
    model: &Model,
    p: &Prepared,
    reg: &mut Option<Regularisation<'_>>,
) -> Result<(f64, usize, Vec<Option<Tensor>>)> {
    let mut tape = Tape::with_params(&model.params);
    let l = model.losses_on(&mut tape, p, reg)?;
    let terms: Vec<_> = l.parse.into_iter().chain(l.text).collect();
    let total = tape.add_n(&terms)?;
    let value = tape.scalar(total);
    Ok((
        value,
        l.parse_tokens + l.text_tokens,
        tape.backward(total).into_params(),
    ))
}

fn accumulate(into: &mut [Option<Tensor>], from: Vec<Option<Tensor>>) {
    for (acc, g) in into.iter_mut().zip(from) {
        match (acc.as_mut(), g) {
            (Some(a), Some(g)) => a.add_assign(&g),
            (None, Some(g)) => *acc = Some(g),
            _ => {}
        }
    }
}

/// Train a fresh model for `cfg.task`. `on_epoch` sees every epoch record
/// as soon as it is complete.
pub fn train(
    cfg: &TrainConfig,
    train_set: &[Example],
    dev_set: &[Example],
    mut on_epoch: impl FnMut(&EpochRecord),
) -> Result<TrainOutcome> {
    cfg.validate()?;
    if dev_set.is_empty() {
        return Err(Error::Config("dev set is empty".into()));
    }
    let vocab = Vocab::build(train_set)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut model = Model::new(cfg.model_config(), vocab, &mut rng)?;
    if let Some(path) = &cfg.pretrained {
        load_pretrained(&mut model, Path::new(path))?;
    }
    let task = task_for(cfg.task);
    let noise: NoiseConfig = cfg.noise();
    let mut adam = AdamState::new(&model.params);
    let mut schedule = LrSchedule::new(cfg.lr, cfg.lr_decay, cfg.patience);
    let mut best = (model.params.clone(), 0usize);
    let mut history = Vec::with_capacity(cfg.epochs);
    let mut order: Vec<usize> = (0..train_set.len()).collect();

    for epoch in 1..=cfg.epochs {
        let lr = schedule.lr;
        order.shuffle(&mut rng);
        let (mut epoch_nll, mut epoch_tokens) = (0.0, 0usize);
        for (b, batch) in order.chunks(cfg.batch_size).enumerate() {
            let mut grads: Vec<Option<Tensor>> = vec![None; model.params.len()];
            for &i in batch {
                let ex = &train_set[i];
                let p = prepare_example(&model.vocab, ex, &noise, Some(&mut rng));
                let mut reg = Some(Regularisation {
                    rng: &mut rng,
                    dropout: cfg.dropout,
                    recurrent: cfg.recurrent_dropout,
                });
                let (loss, tokens, g) = example_gradients(&model, &p, &mut reg)?;
                if !loss.is_finite() {
                    return Err(Error::Divergence(format!(
                        "loss {loss} on example {} (epoch {epoch}, batch {})",
                        ex.id,
                        b + 1
                    )));
                }
                epoch_nll += loss;
                epoch_tokens += tokens;
                accumulate(&mut grads, g);
            }
            let scale = 1.0 / batch.len() as f64;
            for g in grads.iter_mut().flatten() {
                g.scale_assign(scale);
            }
            let norm = clip_grad_norm(&mut grads, cfg.clip_norm);
            if !norm.is_finite() {
                return Err(Error::Divergence(format!(
                    "gradient norm {norm} (epoch {epoch}, batch {})",
                    b + 1
                )));
            }
            adam_step(&mut model.params, &grads, &mut adam, lr);
        }
        let dev_metric = task.dev_metric(&model, dev_set)?;
        if schedule.observe(dev_metric) {
            best = (model.params.clone(), epoch);
        }
        let record = EpochRecord {
            epoch,
            train_nll: epoch_nll / epoch_tokens.max(1) as f64,
            dev_metric,
            lr,
        };
        on_epoch(&record);
        history.push(record);
    }
    model.params = best.0;
    Ok(TrainOutcome {
        model,
        best_epoch: best.1,
        best_metric: schedule.best().unwrap_or(f64::NEG_INFINITY),
        history,
    })
}

/// Per-token teacher-forced NLL over a corpus without noise or dropout,
/// as (parse, text).
pub fn corpus_nll(model: &Model, examples: &[Example]) -> Result<(f64, f64)> {
    let (mut pn, mut pt, mut tn, mut tt) = (0.0, 0usize, 0.0, 0usize);
    for ex in examples {
        let p = prepare_example(&model.vocab, ex, &NoiseConfig::NONE, None);
        let (a, b) = model.joint_log_likelihood(&p)?;
        if model.arch().has_syntax() {
            pn += a;
            pt += p.action_targets.len();
        }
        if model.arch().has_lex() {
            tn += b;
            tt += p.text.targets.len();
        }
    }
    Ok((pn / pt.max(1) as f64, tn / tt.max(1) as f64))
}
