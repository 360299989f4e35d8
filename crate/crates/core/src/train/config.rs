use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Architecture, ModelConfig, NoiseConfig};

/// Training hyperparameters. Readable from a flat `key = value` file whose
/// keys are the field names below.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub task: Architecture,
    pub batch_size: usize,
    pub epochs: usize,
    pub lr: f64,
    pub lr_decay: f64,
    /// Epochs without a dev improvement before the learning rate decays.
    pub patience: usize,
    pub dropout: f64,
    pub recurrent_dropout: f64,
    pub unk_singleton: f64,
    pub unk_pos: f64,
    pub unk_concept: f64,
    pub clip_norm: f64,
    pub seed: u64,
    pub hidden: usize,
    pub embedding: usize,
    pub layers: usize,
    pub pretrained: Option<String>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            task: Architecture::Joint,
            batch_size: 40,
            epochs: 200,
            lr: 0.001,
            lr_decay: 0.8,
            patience: 5,
            dropout: 0.5,
            recurrent_dropout: 0.3,
            unk_singleton: 0.5,
            unk_pos: 0.1,
            unk_concept: 0.1,
            clip_norm: 5.0,
            seed: 1,
            hidden: 500,
            embedding: 300,
            layers: 2,
            pretrained: None,
        }
    }
}

pub const PRESETS: [&str; 2] = ["paper", "desk"];

const KEYS: [&str; 17] = [
    "task",
    "batch_size",
    "epochs",
    "lr",
    "lr_decay",
    "patience",
    "dropout",
    "recurrent_dropout",
    "unk_singleton",
    "unk_pos",
    "unk_concept",
    "clip_norm",
    "seed",
    "hidden",
    "embedding",
    "layers",
    "pretrained",
];

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("invalid value {value:?} for {key}")))
}

impl TrainConfig {
    /// `paper` is the default configuration; `desk` shrinks the model and
    /// regularisation so small corpora train in minutes on one core.
    pub fn preset(name: &str) -> Result<TrainConfig> {
        match name {
            "paper" => Ok(TrainConfig::default()),
            "desk" => Ok(TrainConfig {
                hidden: 64,
                embedding: 32,
                batch_size: 5,
                lr: 0.004,
                dropout: 0.1,
                recurrent_dropout: 0.1,
                ..TrainConfig::default()
            }),
            _ => Err(Error::Config(format!(
                "unknown preset {name:?} (expected one of {})",
                PRESETS.join(", ")
            ))),
        }
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        match key {
            "task" => self.task = value.parse()?,
            "batch_size" => self.batch_size = parse(key, value)?,
            "epochs" => self.epochs = parse(key, value)?,
            "lr" => self.lr = parse(key, value)?,
            "lr_decay" => self.lr_decay = parse(key, value)?,
            "patience" => self.patience = parse(key, value)?,
            "dropout" => self.dropout = parse(key, value)?,
            "recurrent_dropout" => self.recurrent_dropout = parse(key, value)?,
            "unk_singleton" => self.unk_singleton = parse(key, value)?,
            "unk_pos" => self.unk_pos = parse(key, value)?,
            "unk_concept" => self.unk_concept = parse(key, value)?,
            "clip_norm" => self.clip_norm = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            "hidden" => self.hidden = parse(key, value)?,
            "embedding" => self.embedding = parse(key, value)?,
            "layers" => self.layers = parse(key, value)?,
            "pretrained" => self.pretrained = (!value.is_empty()).then(|| value.to_string()),
            _ => {
                return Err(Error::Config(format!(
                    "unknown key {key:?} (expected one of {})",
                    KEYS.join(", ")
                )))
            }
        }
        Ok(())
    }

    /// Apply `key = value` lines; blank lines and `#` comments are skipped.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", i + 1)))?;
            self.set(k.trim(), v)
                .map_err(|e| Error::Config(format!("line {}: {e}", i + 1)))?;
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "task = {}", self.task);
        let _ = writeln!(s, "batch_size = {}", self.batch_size);
        let _ = writeln!(s, "epochs = {}", self.epochs);
        let _ = writeln!(s, "lr = {}", self.lr);
        let _ = writeln!(s, "lr_decay = {}", self.lr_decay);
        let _ = writeln!(s, "patience = {}", self.patience);
        let _ = writeln!(s, "dropout = {}", self.dropout);
        let _ = writeln!(s, "recurrent_dropout = {}", self.recurrent_dropout);
        let _ = writeln!(s, "unk_singleton = {}", self.unk_singleton);
        let _ = writeln!(s, "unk_pos = {}", self.unk_pos);
        let _ = writeln!(s, "unk_concept = {}", self.unk_concept);
        let _ = writeln!(s, "clip_norm = {}", self.clip_norm);
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "hidden = {}", self.hidden);
        let _ = writeln!(s, "embedding = {}", self.embedding);
        let _ = writeln!(s, "layers = {}", self.layers);
        if let Some(p) = &self.pretrained {
            let _ = writeln!(s, "pretrained = {p}");
        }
        s
    }

    pub fn validate(&self) -> Result<()> {
        let probs = [
            ("dropout", self.dropout),
            ("recurrent_dropout", self.recurrent_dropout),
            ("unk_singleton", self.unk_singleton),
            ("unk_pos", self.unk_pos),
            ("unk_concept", self.unk_concept),
        ];
        for (k, p) in probs {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Config(format!("{k} must be in [0, 1], got {p}")));
            }
        }
        if self.dropout >= 1.0 || self.recurrent_dropout >= 1.0 {
            return Err(Error::Config("dropout rates must be below 1".into()));
        }
        if self.patience == 0 || self.batch_size == 0 || self.epochs == 0 {
            return Err(Error::Config(
                "patience, batch_size and epochs must be at least 1".into(),
            ));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::Config(format!("lr must be positive, got {}", self.lr)));
        }
        if !(self.lr_decay > 0.0 && self.lr_decay <= 1.0) {
            return Err(Error::Config(format!(
                "lr_decay must be in (0, 1], got {}",
                self.lr_decay
            )));
        }
        if self.clip_norm.is_nan() || self.clip_norm <= 0.0 {
            return Err(Error::Config(format!(
                "clip_norm must be positive, got {}",
                self.clip_norm
            )));
        }
        self.model_config().validate()
    }

    pub fn model_config(&self) -> ModelConfig {
        ModelConfig {
            layers: self.layers,
            ..ModelConfig::new(self.task, self.embedding, self.hidden)
        }
    }

    pub fn noise(&self) -> NoiseConfig {
        NoiseConfig {
            singleton_word: self.unk_singleton,
            pos: self.unk_pos,
            amr_concept: self.unk_concept,
        }
    }
}

/// Learning-rate decay on dev-metric plateaus: after `patience` epochs
/// without improvement the rate is multiplied by `decay` and the count
/// restarts.
#[derive(Clone, Debug, PartialEq)]
pub struct LrSchedule {
    pub lr: f64,
    decay: f64,
    patience: usize,
    best: Option<f64>,
    stale: usize,
}

impl LrSchedule {
    pub fn new(lr: f64, decay: f64, patience: usize) -> Self {
        LrSchedule {
            lr,
            decay,
            patience,
            best: None,
            stale: 0,
        }
    }

    /// Record an epoch's dev metric (higher is better); returns whether it
    /// is a new best.
    pub fn observe(&mut self, metric: f64) -> bool {
        if self.best.is_none_or(|b| metric > b) {
            self.best = Some(metric);
            self.stale = 0;
            return true;
        }
        self.stale += 1;
        if self.stale >= self.patience {
            self.lr *= self.decay;
            self.stale = 0;
        }
        false
    }

    pub fn best(&self) -> Option<f64> {
        self.best
    }
}
