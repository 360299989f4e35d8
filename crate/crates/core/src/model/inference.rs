//! Step-wise decoding interface. Every call runs on its own short-lived
//! tape, so decoder states are plain tensors that beam items can clone.

use std::collections::HashSet;
use std::rc::Rc;

use super::network::DecVars;
use super::prepare::prepare_text;
use super::{EncoderIds, Model};
use crate::error::{Error, Result};
use crate::syntax::ActionAutomaton;
use crate::tensor::{Tape, Tensor};

/// Encoder output detached from its tape.
#[derive(Clone, Debug, PartialEq)]
pub struct EncodedValues {
    pub matrix: Tensor,
    pub finals: Tensor,
}

impl EncodedValues {
    pub fn len(&self) -> usize {
        self.matrix.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RecurrentState {
    pub h: Tensor,
    pub c: Tensor,
}

/// Extended-vocabulary bookkeeping for copying from one AMR.
#[derive(Clone, Debug, PartialEq)]
pub struct CopyInfo {
    pub copy_index: Rc<Vec<usize>>,
    pub ext_tokens: Vec<String>,
    pub vocab_size: usize,
}

impl CopyInfo {
    pub fn ext_size(&self) -> usize {
        self.vocab_size + self.ext_tokens.len()
    }
}

pub struct SyntaxStep {
    /// Distribution over the action vocabulary; impermissible actions are 0.
    pub probs: Vec<f64>,
    pub state: RecurrentState,
}

pub struct LexStep {
    /// Distribution over the extended word vocabulary.
    pub probs: Vec<f64>,
    pub state: RecurrentState,
    pub theta: f64,
}

impl Model {
    fn encode_values(&self, enc: Option<&EncoderIds>, ids: &[usize], what: &str) -> Result<EncodedValues> {
        let enc = enc.ok_or_else(|| Error::Usage(format!("{} model has no {what} encoder", self.arch())))?;
        let mut tape = Tape::with_params(&self.params);
        let e = self.encode_on(&mut tape, enc, ids, &mut None)?;
        Ok(EncodedValues {
            matrix: tape.value(e.matrix).clone(),
            finals: tape.value(e.finals).clone(),
        })
    }

    pub fn encode_amr(&self, ids: &[usize]) -> Result<EncodedValues> {
        self.encode_values(self.ids.amr_encoder.as_ref(), ids, "AMR")
    }

    pub fn encode_parse(&self, ids: &[usize]) -> Result<EncodedValues> {
        self.encode_values(self.ids.parse_encoder.as_ref(), ids, "parse")
    }

    pub fn encode_text(&self, ids: &[usize]) -> Result<EncodedValues> {
        self.encode_values(self.ids.text_encoder.as_ref(), ids, "text")
    }

    /// The syntax decoder's conditioning input, if any, for raw tokens.
    pub fn syntax_source(&self, amr_ids: &[usize], text_ids: &[usize]) -> Result<Option<EncodedValues>> {
        if self.ids.amr_encoder.is_some() {
            Ok(Some(self.encode_amr(amr_ids)?))
        } else if self.ids.text_encoder.is_some() {
            Ok(Some(self.encode_text(text_ids)?))
        } else {
            Ok(None)
        }
    }

    pub fn copy_info<S: AsRef<str>>(&self, amr_tokens: &[S]) -> CopyInfo {
        let t = prepare_text::<S>(&self.vocab, amr_tokens, &[], &HashSet::new());
        CopyInfo {
            copy_index: t.copy_index,
            ext_tokens: t.ext_tokens,
            vocab_size: t.vocab_size,
        }
    }

    fn initial(&self, which: &super::DecoderIds, source: Option<&EncodedValues>) -> Result<RecurrentState> {
        let mut tape = Tape::with_params(&self.params);
        let d = DecVars::new(&mut tape, which, self.config.hidden);
        let finals = source.map(|s| tape.constant(s.finals.clone()));
        let (h, c) = self.init_state(&mut tape, &d, finals)?;
        Ok(RecurrentState {
            h: tape.value(h).clone(),
            c: tape.value(c).clone(),
        })
    }

    pub fn syntax_initial(&self, source: Option<&EncodedValues>) -> Result<RecurrentState> {
        let ids = self
            .ids
            .syntax
            .as_ref()
            .ok_or_else(|| Error::Usage(format!("{} model has no syntax decoder", self.arch())))?;
        self.initial(ids, source)
    }

    pub fn lex_initial(&self, amr: &EncodedValues) -> Result<RecurrentState> {
        let ids = self
            .ids
            .lex
            .as_ref()
            .ok_or_else(|| Error::Usage(format!("{} model has no lexicalisation decoder", self.arch())))?;
        self.initial(ids, Some(amr))
    }

    /// Distribution over the next action given the previous one, restricted
    /// to the automaton's permissible set.
    pub fn syntax_step(
        &self,
        source: Option<&EncodedValues>,
        state: &RecurrentState,
        prev: usize,
        automaton: &ActionAutomaton,
    ) -> Result<SyntaxStep> {
        let ids = self
            .ids
            .syntax
            .as_ref()
            .ok_or_else(|| Error::Usage(format!("{} model has no syntax decoder", self.arch())))?;
        let mask = automaton.permissible_actions(&self.action_kinds)?;
        let mut tape = Tape::with_params(&self.params);
        let d = DecVars::new(&mut tape, ids, self.config.hidden);
        let sources: Vec<_> = source.iter().map(|s| tape.constant(s.matrix.clone())).collect();
        let h = tape.constant(state.h.clone());
        let c = tape.constant(state.c.clone());
        let s = self.step_on(&mut tape, &d, &sources, prev, h, c, &mut None, &None)?;
        let p = tape.softmax(s.logits, Some(&mask))?;
        Ok(SyntaxStep {
            probs: tape.value(p).data().to_vec(),
            state: RecurrentState {
                h: tape.value(s.h).clone(),
                c: tape.value(s.c).clone(),
            },
        })
    }

    /// Distribution over the next word in the extended vocabulary.
    pub fn lex_step(
        &self,
        amr: &EncodedValues,
        parse: Option<&EncodedValues>,
        copy: &CopyInfo,
        state: &RecurrentState,
        prev: usize,
        theta_override: Option<f64>,
    ) -> Result<LexStep> {
        let ids = self
            .ids
            .lex
            .as_ref()
            .ok_or_else(|| Error::Usage(format!("{} model has no lexicalisation decoder", self.arch())))?;
        if parse.is_some() != (ids.sources() == 2) {
            return Err(Error::Usage(format!(
                "{} lexicalisation decoder takes {} source(s)",
                self.arch(),
                ids.sources()
            )));
        }
        let mut tape = Tape::with_params(&self.params);
        let d = DecVars::new(&mut tape, ids, self.config.hidden);
        let mut sources = vec![tape.constant(amr.matrix.clone())];
        if let Some(p) = parse {
            sources.push(tape.constant(p.matrix.clone()));
        }
        let h = tape.constant(state.h.clone());
        let c = tape.constant(state.c.clone());
        let s = self.step_on(&mut tape, &d, &sources, prev, h, c, &mut None, &None)?;
        let p = self.lex_distribution(&mut tape, &s, &copy.copy_index, copy.ext_size(), theta_override)?;
        let theta = match (theta_override, s.theta) {
            (Some(t), _) => t,
            (None, Some(t)) => tape.scalar(t),
            (None, None) => 0.0,
        };
        Ok(LexStep {
            probs: tape.value(p).data().to_vec(),
            state: RecurrentState {
                h: tape.value(s.h).clone(),
                c: tape.value(s.c).clone(),
            },
            theta,
        })
    }

    /// Surface string for an extended-vocabulary id.
    pub fn word_token<'a>(&'a self, copy: &'a CopyInfo, id: usize) -> &'a str {
        if id < self.vocab.words.len() {
            self.vocab.words.token(id)
        } else {
            &copy.ext_tokens[id - self.vocab.words.len()]
        }
    }
}
