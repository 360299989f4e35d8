//! Shared-encoder sequence-to-sequence models: a syntax decoder over parse
//! actions and a lexicalisation decoder with dual attention and copying.

mod embeddings;
mod inference;
mod network;
mod prepare;
mod vocab;

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

pub use embeddings::load_pretrained;
pub use inference::{CopyInfo, EncodedValues, LexStep, RecurrentState, SyntaxStep};
pub use network::{attend, Losses, Regularisation};
pub use prepare::{is_role_or_bracket, prepare_example, prepare_text, NoiseConfig, Prepared, TextTargets};
pub use vocab::{TokenVocab, Vocab, BOS, EOS, PAD, RESERVED, UNK};

use crate::error::{Error, Result};
use crate::tensor::{ParamId, ParamStore, Tensor, LSTM_GATES};

/// Uniform initialisation bound for weight matrices and embeddings.
pub const INIT_BOUND: f64 = 0.1;
/// Initial bias of the copy gate's output unit; the gate starts mostly
/// generating.
pub const COPY_GATE_BIAS: f64 = -3.0;

/// Which networks a model contains.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Architecture {
    /// Syntax model plus lexicalisation model over AMR and parse.
    Joint,
    /// Syntax model only, conditioned on the AMR.
    #[serde(rename = "amr2parse")]
    AmrToParse,
    /// Syntax model conditioned on the surface sentence.
    #[serde(rename = "text2parse")]
    TextToParse,
    /// Syntax model with no input.
    #[serde(rename = "unconditional_lm")]
    UnconditionalLm,
    /// Lexicalisation straight from the AMR, with copying and no syntax.
    #[serde(rename = "baseline_s2s_copy")]
    BaselineCopy,
}

impl Architecture {
    pub const ALL: [Architecture; 5] = [
        Architecture::Joint,
        Architecture::AmrToParse,
        Architecture::TextToParse,
        Architecture::UnconditionalLm,
        Architecture::BaselineCopy,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Architecture::Joint => "joint",
            Architecture::AmrToParse => "amr2parse",
            Architecture::TextToParse => "text2parse",
            Architecture::UnconditionalLm => "unconditional_lm",
            Architecture::BaselineCopy => "baseline_s2s_copy",
        }
    }

    pub fn has_syntax(self) -> bool {
        !matches!(self, Architecture::BaselineCopy)
    }

    pub fn has_lex(self) -> bool {
        matches!(self, Architecture::Joint | Architecture::BaselineCopy)
    }
}

impl fmt::Display for Architecture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Architecture {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Architecture::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown task {s:?}")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub arch: Architecture,
    pub embedding: usize,
    /// Decoder state size; each encoder direction uses half of it.
    pub hidden: usize,
    pub layers: usize,
    pub gate_hidden: usize,
}

impl ModelConfig {
    pub fn new(arch: Architecture, embedding: usize, hidden: usize) -> Self {
        ModelConfig {
            arch,
            embedding,
            hidden,
            layers: 2,
            gate_hidden: hidden,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.embedding == 0 || self.hidden == 0 || self.layers == 0 || self.gate_hidden == 0 {
            return Err(Error::Config("model sizes must be positive".into()));
        }
        if !self.hidden.is_multiple_of(2) {
            return Err(Error::Config(format!(
                "hidden size must be even (split across encoder directions), got {}",
                self.hidden
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug)]
pub(crate) struct LstmIds {
    pub weight: ParamId,
    pub gain: ParamId,
    pub bias: ParamId,
}

/// A linear map followed by layer normalization.
#[derive(Clone, Copy, Debug)]
pub(crate) struct LinearLn {
    pub weight: ParamId,
    pub gain: ParamId,
    pub bias: ParamId,
}

#[derive(Clone, Debug)]
pub(crate) struct EncoderIds {
    pub embedding: ParamId,
    /// Forward and backward cell per layer.
    pub layers: Vec<[LstmIds; 2]>,
}

#[derive(Clone, Copy, Debug)]
pub(crate) struct CopyGateIds {
    pub hidden: LinearLn,
    pub out_w: ParamId,
    pub out_b: ParamId,
}

#[derive(Clone, Debug)]
pub(crate) struct DecoderIds {
    pub embedding: ParamId,
    pub attention: Vec<ParamId>,
    pub init: Option<LinearLn>,
    pub input: LinearLn,
    pub lstm: LstmIds,
    pub output: LinearLn,
    pub logit_w: ParamId,
    pub logit_b: ParamId,
    pub copy: Option<CopyGateIds>,
}

impl DecoderIds {
    pub fn sources(&self) -> usize {
        self.attention.len()
    }
}

#[derive(Clone, Debug)]
pub(crate) struct ModelIds {
    pub amr_encoder: Option<EncoderIds>,
    pub parse_encoder: Option<EncoderIds>,
    pub text_encoder: Option<EncoderIds>,
    pub syntax: Option<DecoderIds>,
    pub lex: Option<DecoderIds>,
}

struct Builder<'a, R: Rng> {
    store: &'a mut ParamStore,
    rng: &'a mut R,
}

impl<R: Rng> Builder<'_, R> {
    fn uniform(&mut self, name: &str, shape: &[usize]) -> Result<ParamId> {
        let t = Tensor::uniform(shape, INIT_BOUND, self.rng);
        self.store.add(name, t)
    }

    fn full(&mut self, name: &str, n: usize, value: f64) -> Result<ParamId> {
        self.store.add(name, Tensor::full(&[n], value))
    }

    fn linear_ln(&mut self, name: &str, out: usize, inp: usize) -> Result<LinearLn> {
        Ok(LinearLn {
            weight: self.uniform(&format!("{name}.weight"), &[out, inp])?,
            gain: self.full(&format!("{name}.ln_gain"), out, 1.0)?,
            bias: self.full(&format!("{name}.ln_bias"), out, 0.0)?,
        })
    }

    fn lstm(&mut self, name: &str, input: usize, hidden: usize) -> Result<LstmIds> {
        let weight = self.uniform(&format!("{name}.weight"), &[LSTM_GATES * hidden, input + hidden])?;
        let gain = self.full(&format!("{name}.ln_gain"), LSTM_GATES * hidden, 1.0)?;
        // forget-gate block starts open
        let mut b = vec![0.0; LSTM_GATES * hidden];
        b[hidden..2 * hidden].iter_mut().for_each(|x| *x = 1.0);
        let bias = self.store.add(format!("{name}.ln_bias"), Tensor::vector(b))?;
        Ok(LstmIds { weight, gain, bias })
    }

    fn encoder(&mut self, name: &str, embedding: ParamId, cfg: &ModelConfig) -> Result<EncoderIds> {
        let half = cfg.hidden / 2;
        let mut layers = Vec::with_capacity(cfg.layers);
        for l in 0..cfg.layers {
            let input = if l == 0 { cfg.embedding } else { cfg.hidden };
            layers.push([
                self.lstm(&format!("{name}.l{l}.fwd"), input, half)?,
                self.lstm(&format!("{name}.l{l}.bwd"), input, half)?,
            ]);
        }
        Ok(EncoderIds { embedding, layers })
    }

    fn decoder(
        &mut self,
        name: &str,
        embedding: ParamId,
        vocab: usize,
        sources: usize,
        copy: bool,
        cfg: &ModelConfig,
    ) -> Result<DecoderIds> {
        let (e, h) = (cfg.embedding, cfg.hidden);
        let attention = (0..sources)
            .map(|s| self.uniform(&format!("{name}.att{s}"), &[h, h]))
            .collect::<Result<Vec<_>>>()?;
        let init = if sources > 0 {
            Some(self.linear_ln(&format!("{name}.init"), h, h)?)
        } else {
            None
        };
        let input = self.linear_ln(&format!("{name}.input"), e, e + sources * h)?;
        let lstm = self.lstm(&format!("{name}.lstm"), e, h)?;
        let output = self.linear_ln(&format!("{name}.output"), h, h + sources * h)?;
        let logit_w = self.uniform(&format!("{name}.logits.weight"), &[vocab, h])?;
        let logit_b = self.full(&format!("{name}.logits.bias"), vocab, 0.0)?;
        let copy = if copy {
            Some(CopyGateIds {
                hidden: self.linear_ln(&format!("{name}.gate.hidden"), cfg.gate_hidden, e + h + sources * h)?,
                out_w: self.uniform(&format!("{name}.gate.out.weight"), &[1, cfg.gate_hidden])?,
                out_b: self.full(&format!("{name}.gate.out.bias"), 1, COPY_GATE_BIAS)?,
            })
        } else {
            None
        };
        Ok(DecoderIds {
            embedding,
            attention,
            init,
            input,
            lstm,
            output,
            logit_w,
            logit_b,
            copy,
        })
    }
}

/// Parameters, vocabularies and configuration of one trained or fresh model.
#[derive(Clone, Debug)]
pub struct Model {
    pub config: ModelConfig,
    pub vocab: Vocab,
    pub params: ParamStore,
    pub(crate) ids: ModelIds,
    pub(crate) action_kinds: Vec<Option<crate::syntax::ActionKind>>,
}

impl Model {
    pub fn new<R: Rng>(config: ModelConfig, vocab: Vocab, rng: &mut R) -> Result<Model> {
        config.validate()?;
        let mut store = ParamStore::new();
        let ids = {
            let mut b = Builder { store: &mut store, rng };
            let e = config.embedding;
            let arch = config.arch;
            let amr_emb = if matches!(
                arch,
                Architecture::Joint | Architecture::AmrToParse | Architecture::BaselineCopy
            ) {
                Some(b.uniform("amr_embedding", &[vocab.amr.len(), e])?)
            } else {
                None
            };
            let action_emb = if arch.has_syntax() {
                Some(b.uniform("action_embedding", &[vocab.actions.len(), e])?)
            } else {
                None
            };
            let word_emb = if arch.has_lex() || arch == Architecture::TextToParse {
                Some(b.uniform("word_embedding", &[vocab.words.len(), e])?)
            } else {
                None
            };
            let amr_encoder = amr_emb.map(|emb| b.encoder("amr_encoder", emb, &config)).transpose()?;
            let parse_encoder = if arch == Architecture::Joint {
                Some(b.encoder("parse_encoder", action_emb.unwrap(), &config)?)
            } else {
                None
            };
            let text_encoder = if arch == Architecture::TextToParse {
                Some(b.encoder("text_encoder", word_emb.unwrap(), &config)?)
            } else {
                None
            };
            let syntax = if arch.has_syntax() {
                let sources = usize::from(arch != Architecture::UnconditionalLm);
                Some(b.decoder(
                    "syntax",
                    action_emb.unwrap(),
                    vocab.actions.len(),
                    sources,
                    false,
                    &config,
                )?)
            } else {
                None
            };
            let lex = if arch.has_lex() {
                let sources = if arch == Architecture::Joint { 2 } else { 1 };
                Some(b.decoder("lex", word_emb.unwrap(), vocab.words.len(), sources, true, &config)?)
            } else {
                None
            };
            ModelIds {
                amr_encoder,
                parse_encoder,
                text_encoder,
                syntax,
                lex,
            }
        };
        let action_kinds = vocab.action_kinds();
        Ok(Model {
            config,
            vocab,
            params: store,
            ids,
            action_kinds,
        })
    }

    pub fn arch(&self) -> Architecture {
        self.config.arch
    }

    pub fn action_kinds(&self) -> &[Option<crate::syntax::ActionKind>] {
        &self.action_kinds
    }

    /// Overwrite every parameter with same-named tensors, e.g. from a
    /// checkpoint. All names must be present with matching shapes.
    pub fn load_params(&mut self, tensors: Vec<(String, Tensor)>) -> Result<()> {
        if tensors.len() != self.params.len() {
            return Err(Error::Checkpoint(format!(
                "expected {} tensors, found {}",
                self.params.len(),
                tensors.len()
            )));
        }
        for (name, t) in tensors {
            self.params
                .replace(&name, t)
                .map_err(|e| Error::Checkpoint(format!("tensor {name}: {e}")))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{preprocess, synthetic};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    pub(crate) fn tiny_vocab() -> Vocab {
        let c = synthetic::generate(1);
        let ex = preprocess(
            &synthetic::amr_file(&c.train[..20]),
            &synthetic::parse_file(&c.train[..20]),
        )
        .unwrap();
        Vocab::build(&ex).unwrap()
    }

    #[test]
    fn architectures_parse_by_name() {
        for a in Architecture::ALL {
            assert_eq!(a.name().parse::<Architecture>().unwrap(), a);
            let json = serde_json::to_string(&a).unwrap();
            assert_eq!(json, format!("\"{}\"", a.name()));
        }
        assert!("seq2seq".parse::<Architecture>().is_err());
    }

    #[test]
    fn components_per_architecture() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let v = tiny_vocab();
        for a in Architecture::ALL {
            let m = Model::new(ModelConfig::new(a, 8, 8), v.clone(), &mut rng).unwrap();
            assert_eq!(m.ids.syntax.is_some(), a.has_syntax(), "{a}");
            assert_eq!(m.ids.lex.is_some(), a.has_lex(), "{a}");
            if let Some(lex) = &m.ids.lex {
                assert_eq!(lex.sources(), if a == Architecture::Joint { 2 } else { 1 });
            }
        }
    }

    #[test]
    fn odd_hidden_size_is_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let cfg = ModelConfig::new(Architecture::Joint, 8, 7);
        assert!(matches!(Model::new(cfg, tiny_vocab(), &mut rng), Err(Error::Config(_))));
    }
}
