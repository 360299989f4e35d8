//! Binary checkpoint container:
//!
//! ```text
//! "AMRF" | version u32 | tensor count u32
//! per tensor: name len u32 | name | ndim u32 | dims u64… | data f64…
//! vocab JSON | config JSON | meta JSON   (each: byte len u64 | bytes)
//! ```
//!
//! All integers and floats are little-endian.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::TrainConfig;
use super::EpochRecord;
use crate::error::{Error, Result};
use crate::model::{Architecture, Model, ModelConfig, Vocab};
use crate::tensor::Tensor;

pub const MAGIC: &[u8; 4] = b"AMRF";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, Serialize, Deserialize)]
struct ConfigBlock {
    model: ModelConfig,
    train: Option<TrainConfig>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CheckpointMeta {
    /// Epoch whose parameters were saved.
    pub epoch: usize,
    pub history: Vec<EpochRecord>,
}

pub struct Checkpoint {
    pub model: Model,
    pub train_config: Option<TrainConfig>,
    pub meta: CheckpointMeta,
}

fn put_u32(out: &mut Vec<u8>, v: u32) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_u64(out: &mut Vec<u8>, v: u64) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_block(out: &mut Vec<u8>, json: &[u8]) {
    put_u64(out, json.len() as u64);
    out.extend_from_slice(json);
}

impl Checkpoint {
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        put_u32(&mut out, FORMAT_VERSION);
        put_u32(&mut out, self.model.params.len() as u32);
        for (name, t) in self.model.params.iter() {
            put_u32(&mut out, name.len() as u32);
            out.extend_from_slice(name.as_bytes());
            put_u32(&mut out, t.shape().len() as u32);
            for &d in t.shape() {
                put_u64(&mut out, d as u64);
            }
            for x in t.data() {
                out.extend_from_slice(&x.to_le_bytes());
            }
        }
        put_block(&mut out, &serde_json::to_vec(&self.model.vocab)?);
        let cfg = ConfigBlock {
            model: self.model.config.clone(),
            train: self.train_config.clone(),
        };
        put_block(&mut out, &serde_json::to_vec(&cfg)?);
        put_block(&mut out, &serde_json::to_vec(&self.meta)?);
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Checkpoint> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(4)? != MAGIC {
            return Err(Error::Checkpoint("not a checkpoint (bad magic bytes)".into()));
        }
        let version = r.u32()?;
        if version != FORMAT_VERSION {
            return Err(Error::Checkpoint(format!(
                "unsupported format version {version} (this build reads {FORMAT_VERSION})"
            )));
        }
        let n = r.u32()? as usize;
        let mut tensors = Vec::with_capacity(n);
        for _ in 0..n {
            let len = r.u32()? as usize;
            let name = String::from_utf8(r.take(len)?.to_vec())
                .map_err(|_| Error::Checkpoint("tensor name is not UTF-8".into()))?;
            let ndim = r.u32()? as usize;
            let shape = (0..ndim)
                .map(|_| r.u64().map(|d| d as usize))
                .collect::<Result<Vec<_>>>()?;
            let count: usize = shape.iter().product();
            let raw = r.take(
                count
                    .checked_mul(8)
                    .ok_or_else(|| Error::Checkpoint("tensor too large".into()))?,
            )?;
            let data = raw
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
                .collect();
            tensors.push((name, Tensor::new(shape, data)?));
        }
        let mut vocab: Vocab = serde_json::from_slice(r.block()?)?;
        vocab.reindex();
        let cfg: ConfigBlock = serde_json::from_slice(r.block()?)?;
        let meta: CheckpointMeta = serde_json::from_slice(r.block()?)?;
        if r.pos != bytes.len() {
            return Err(Error::Checkpoint(format!("{} trailing bytes", bytes.len() - r.pos)));
        }
        // parameter values are all overwritten below
        let mut model = Model::new(cfg.model, vocab, &mut rand::rngs::mock::StepRng::new(0, 0))?;
        model.load_params(tensors)?;
        Ok(Checkpoint {
            model,
            train_config: cfg.train,
            meta,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let bytes = self.to_bytes()?;
        let mut f = std::fs::File::create(path)?;
        f.write_all(&bytes)?;
        f.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Checkpoint> {
        let mut bytes = Vec::new();
        std::fs::File::open(path)
            .map_err(|e| Error::Checkpoint(format!("{}: {e}", path.display())))?
            .read_to_end(&mut bytes)?;
        Checkpoint::from_bytes(&bytes).map_err(|e| match e {
            Error::Checkpoint(m) => Error::Checkpoint(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    /// Load and require the checkpoint to have been trained for one of
    /// `tasks`.
    pub fn load_for(path: &Path, tasks: &[Architecture]) -> Result<Checkpoint> {
        let c = Checkpoint::load(path)?;
        if !tasks.contains(&c.model.arch()) {
            let want: Vec<&str> = tasks.iter().map(|a| a.name()).collect();
            return Err(Error::Usage(format!(
                "{} holds a {} model; this command needs {}",
                path.display(),
                c.model.arch(),
                want.join(" or ")
            )));
        }
        Ok(c)
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::Checkpoint(format!("truncated at byte {}", self.pos)))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn block(&mut self) -> Result<&'a [u8]> {
        let n = self.u64()?;
        let n = usize::try_from(n).map_err(|_| Error::Checkpoint("block too large".into()))?;
        self.take(n)
    }
}
