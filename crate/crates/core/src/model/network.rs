//! Tape-level forward computation shared by training and inference.

use std::rc::Rc;

use rand::RngCore;

use super::prepare::{kinds_of, Prepared};
use super::vocab::{BOS, PAD};
use super::{DecoderIds, EncoderIds, LinearLn, LstmIds, Model};
use crate::error::{Error, Result};
use crate::syntax::ActionAutomaton;
use crate::tensor::{keep_mask, lstm_cell, scaled_mask, LstmVars, Tape, Tensor, Var};

/// Dropout settings and randomness for a training forward pass. Inference
/// passes `None` wherever a `&mut Option<Regularisation>` is expected.
pub struct Regularisation<'r> {
    pub rng: &'r mut dyn RngCore,
    /// Non-recurrent connections.
    pub dropout: f64,
    /// Recurrent connections, one mask per sequence.
    pub recurrent: f64,
}

pub(crate) type Reg<'a, 'r> = &'a mut Option<Regularisation<'r>>;

fn fresh_dropout(tape: &mut Tape<'_>, x: Var, reg: Reg<'_, '_>) -> Result<Var> {
    match reg {
        Some(r) if r.dropout > 0.0 => {
            let keep = keep_mask(tape.value(x).len(), r.dropout, &mut *r.rng)?;
            tape.mul_const(x, scaled_mask(&keep, r.dropout)?)
        }
        _ => Ok(x),
    }
}

fn tied_mask(n: usize, reg: Reg<'_, '_>) -> Result<Option<Rc<Vec<f64>>>> {
    match reg {
        Some(r) if r.recurrent > 0.0 => {
            let keep = keep_mask(n, r.recurrent, &mut *r.rng)?;
            Ok(Some(scaled_mask(&keep, r.recurrent)?))
        }
        _ => Ok(None),
    }
}

fn masked(tape: &mut Tape<'_>, x: Var, mask: &Option<Rc<Vec<f64>>>) -> Result<Var> {
    match mask {
        Some(m) => tape.mul_const(x, m.clone()),
        None => Ok(x),
    }
}

#[derive(Clone, Copy)]
pub(crate) struct LnVars {
    w: Var,
    g: Var,
    b: Var,
}

impl LnVars {
    fn new(tape: &mut Tape<'_>, ids: &LinearLn) -> Self {
        LnVars {
            w: tape.param(ids.weight),
            g: tape.param(ids.gain),
            b: tape.param(ids.bias),
        }
    }

    fn apply(&self, tape: &mut Tape<'_>, x: Var) -> Result<Var> {
        let y = tape.matvec(self.w, x)?;
        tape.layer_norm(y, self.g, self.b)
    }
}

fn lstm_vars(tape: &mut Tape<'_>, ids: &LstmIds) -> LstmVars {
    LstmVars {
        weight: tape.param(ids.weight),
        gain: tape.param(ids.gain),
        bias: tape.param(ids.bias),
    }
}

pub(crate) struct DecVars {
    pub emb: Var,
    pub att: Vec<Var>,
    pub init: Option<LnVars>,
    pub input: LnVars,
    pub lstm: LstmVars,
    pub output: LnVars,
    pub logit_w: Var,
    pub logit_b: Var,
    pub copy: Option<(LnVars, Var, Var)>,
    pub hidden: usize,
}

impl DecVars {
    pub fn new(tape: &mut Tape<'_>, ids: &DecoderIds, hidden: usize) -> Self {
        DecVars {
            emb: tape.param(ids.embedding),
            att: ids.attention.iter().map(|a| tape.param(*a)).collect(),
            init: ids.init.as_ref().map(|i| LnVars::new(tape, i)),
            input: LnVars::new(tape, &ids.input),
            lstm: lstm_vars(tape, &ids.lstm),
            output: LnVars::new(tape, &ids.output),
            logit_w: tape.param(ids.logit_w),
            logit_b: tape.param(ids.logit_b),
            copy: ids
                .copy
                .as_ref()
                .map(|c| (LnVars::new(tape, &c.hidden), tape.param(c.out_w), tape.param(c.out_b))),
            hidden,
        }
    }
}

/// Encoder output on a tape: `[n × H]` context rows and the concatenated
/// final forward/backward states of the top layer.
#[derive(Clone, Copy, Debug)]
pub(crate) struct EncodedVars {
    pub matrix: Var,
    pub finals: Var,
}

/// One decoder step on a tape.
pub(crate) struct StepVars {
    pub h: Var,
    pub c: Var,
    pub logits: Var,
    /// Attention weights per source.
    pub weights: Vec<Var>,
    pub theta: Option<Var>,
}

/// `a_i = hᵀ W c_i`, `w = softmax(a)`, `s = Σ w_i c_i`, for `C` stacked
/// as rows. Returns `(w, s)`.
pub fn attend(tape: &mut Tape<'_>, h_prev: Var, context: Var, w_att: Var) -> Result<(Var, Var)> {
    let q = tape.mat_t_vec(w_att, h_prev)?;
    let scores = tape.matvec(context, q)?;
    let w = tape.softmax(scores, None)?;
    let s = tape.mat_t_vec(context, w)?;
    Ok((w, s))
}

/// Differentiable loss terms for one example.
pub struct Losses {
    /// Summed parse NLL.
    pub parse: Option<Var>,
    /// Summed text NLL.
    pub text: Option<Var>,
    pub parse_tokens: usize,
    pub text_tokens: usize,
}

impl Model {
    fn run_lstm(
        &self,
        tape: &mut Tape<'_>,
        cell: &LstmVars,
        inputs: &[Var],
        hidden: usize,
        reverse: bool,
        reg: Reg<'_, '_>,
    ) -> Result<Vec<Var>> {
        let mask = tied_mask(hidden, reg)?;
        let mut h = tape.constant(Tensor::zeros(&[hidden]));
        let mut c = tape.constant(Tensor::zeros(&[hidden]));
        let mut out = vec![h; inputs.len()];
        let order: Vec<usize> = if reverse {
            (0..inputs.len()).rev().collect()
        } else {
            (0..inputs.len()).collect()
        };
        for i in order {
            let hp = masked(tape, h, &mask)?;
            (h, c) = lstm_cell(tape, inputs[i], hp, c, cell)?;
            out[i] = h;
        }
        Ok(out)
    }

    pub(crate) fn encode_on(
        &self,
        tape: &mut Tape<'_>,
        enc: &EncoderIds,
        ids: &[usize],
        reg: Reg<'_, '_>,
    ) -> Result<EncodedVars> {
        if ids.is_empty() {
            return Err(Error::Usage("cannot encode an empty sequence".into()));
        }
        let half = self.config.hidden / 2;
        let table = tape.param(enc.embedding);
        let mut xs = Vec::with_capacity(ids.len());
        for &i in ids {
            let e = tape.gather_row(table, i)?;
            xs.push(fresh_dropout(tape, e, reg)?);
        }
        let mut finals = None;
        for (l, [fwd, bwd]) in enc.layers.iter().enumerate() {
            if l > 0 {
                for x in xs.iter_mut() {
                    *x = fresh_dropout(tape, *x, reg)?;
                }
            }
            let (fv, bv) = (lstm_vars(tape, fwd), lstm_vars(tape, bwd));
            let f = self.run_lstm(tape, &fv, &xs, half, false, reg)?;
            let b = self.run_lstm(tape, &bv, &xs, half, true, reg)?;
            finals = Some((f[f.len() - 1], b[0]));
            xs = f.iter().zip(&b).map(|(a, b)| tape.concat(&[*a, *b])).collect();
        }
        let (ff, bf) = finals.expect("encoder has at least one layer");
        let finals = tape.concat(&[ff, bf]);
        let matrix = tape.stack_rows(&xs)?;
        Ok(EncodedVars { matrix, finals })
    }

    /// `h0 = tanh(LN(W f))` from the first source's final states, `c0 = 0`.
    pub(crate) fn init_state(&self, tape: &mut Tape<'_>, d: &DecVars, finals: Option<Var>) -> Result<(Var, Var)> {
        let c = tape.constant(Tensor::zeros(&[d.hidden]));
        let h = match (&d.init, finals) {
            (Some(init), Some(f)) => {
                let y = init.apply(tape, f)?;
                tape.tanh(y)
            }
            _ => tape.constant(Tensor::zeros(&[d.hidden])),
        };
        Ok((h, c))
    }

    #[allow(clippy::too_many_arguments)]
    pub(crate) fn step_on(
        &self,
        tape: &mut Tape<'_>,
        d: &DecVars,
        sources: &[Var],
        prev: usize,
        h_prev: Var,
        c_prev: Var,
        reg: Reg<'_, '_>,
        rec_mask: &Option<Rc<Vec<f64>>>,
    ) -> Result<StepVars> {
        if sources.len() != d.att.len() {
            return Err(Error::Usage(format!(
                "decoder expects {} attention sources, got {}",
                d.att.len(),
                sources.len()
            )));
        }
        let y = tape.gather_row(d.emb, prev)?;
        let y = fresh_dropout(tape, y, reg)?;
        let mut weights = Vec::with_capacity(sources.len());
        let mut contexts = Vec::with_capacity(sources.len());
        for (src, w_att) in sources.iter().zip(&d.att) {
            let (w, s) = attend(tape, h_prev, *src, *w_att)?;
            weights.push(w);
            contexts.push(s);
        }
        let mut parts = vec![y];
        parts.extend_from_slice(&contexts);
        let ys = tape.concat(&parts);
        let ys = tape.tanh(ys);
        let y_in = d.input.apply(tape, ys)?;
        let hp = masked(tape, h_prev, rec_mask)?;
        let (h, c) = lstm_cell(tape, y_in, hp, c_prev, &d.lstm)?;
        let mut parts = vec![h];
        parts.extend_from_slice(&contexts);
        let hs = tape.concat(&parts);
        let ht = d.output.apply(tape, hs)?;
        let ht = tape.tanh(ht);
        let ht = fresh_dropout(tape, ht, reg)?;
        let logits = tape.matvec(d.logit_w, ht)?;
        let logits = tape.add(logits, d.logit_b)?;
        let theta = match &d.copy {
            Some((hidden, out_w, out_b)) => {
                let mut parts = vec![y, h];
                parts.extend_from_slice(&contexts);
                let z = tape.concat(&parts);
                let g = hidden.apply(tape, z)?;
                let g = tape.tanh(g);
                let a = tape.matvec(*out_w, g)?;
                let a = tape.add(a, *out_b)?;
                Some(tape.sigmoid(a))
            }
            None => None,
        };
        Ok(StepVars {
            h,
            c,
            logits,
            weights,
            theta,
        })
    }

    /// Word-vocabulary mask: PAD and BOS are never produced.
    pub(crate) fn word_mask(&self) -> Vec<bool> {
        let mut m = vec![true; self.vocab.words.len()];
        m[PAD] = false;
        m[BOS] = false;
        m
    }

    /// `(1 − θ) p_lex + θ · copy` over the extended vocabulary. The copy term
    /// scatters the first source's attention weights onto the ids in
    /// `copy_index`.
    pub(crate) fn lex_distribution(
        &self,
        tape: &mut Tape<'_>,
        step: &StepVars,
        copy_index: &Rc<Vec<usize>>,
        ext_size: usize,
        theta_override: Option<f64>,
    ) -> Result<Var> {
        let mask = self.word_mask();
        let p_lex = tape.softmax(step.logits, Some(&mask))?;
        let p_lex = if ext_size > mask.len() {
            tape.pad(p_lex, ext_size)?
        } else {
            p_lex
        };
        let theta = match (theta_override, step.theta) {
            (Some(t), _) => tape.constant(Tensor::scalar(t)),
            (None, Some(t)) => t,
            (None, None) => return Err(Error::Usage("decoder has no copy gate".into())),
        };
        let copy = tape.scatter_add(step.weights[0], copy_index.clone(), ext_size)?;
        let keep = tape.one_minus(theta);
        let a = tape.scale_by(p_lex, keep)?;
        let b = tape.scale_by(copy, theta)?;
        tape.add(a, b)
    }

    /// Permissible-action masks along a gold action sequence.
    pub(crate) fn action_masks(&self, targets: &[usize]) -> Result<Vec<Vec<bool>>> {
        let kinds = kinds_of(&self.action_kinds, targets)
            .ok_or_else(|| Error::Data("parse contains an out-of-vocabulary action".into()))?;
        let mut automaton = ActionAutomaton::default();
        let mut masks = Vec::with_capacity(kinds.len());
        for k in kinds {
            if automaton.is_finished() {
                return Err(Error::Data("actions continue after the tree is complete".into()));
            }
            masks.push(automaton.permissible_actions(&self.action_kinds)?);
            automaton
                .apply(k)
                .map_err(|e| Error::Data(format!("gold parse rejected: {e}")))?;
        }
        if !automaton.is_finished() {
            return Err(Error::Data("gold parse is incomplete".into()));
        }
        Ok(masks)
    }

    pub(crate) fn syntax_nll_on(
        &self,
        tape: &mut Tape<'_>,
        sources: &[EncodedVars],
        inputs: &[usize],
        targets: &[usize],
        reg: Reg<'_, '_>,
    ) -> Result<Var> {
        let ids = self
            .ids
            .syntax
            .as_ref()
            .ok_or_else(|| Error::Usage(format!("{} model has no syntax decoder", self.arch())))?;
        let masks = self.action_masks(targets)?;
        let d = DecVars::new(tape, ids, self.config.hidden);
        let (mut h, mut c) = self.init_state(tape, &d, sources.first().map(|s| s.finals))?;
        let rec = tied_mask(self.config.hidden, reg)?;
        let mats: Vec<Var> = sources.iter().map(|s| s.matrix).collect();
        let mut picks = Vec::with_capacity(targets.len());
        for ((&prev, &target), mask) in inputs.iter().zip(targets).zip(&masks) {
            let s = self.step_on(tape, &d, &mats, prev, h, c, reg, &rec)?;
            let p = tape.softmax(s.logits, Some(mask))?;
            let p = tape.pick(p, target)?;
            picks.push(tape.log(p));
            (h, c) = (s.h, s.c);
        }
        let total = tape.add_n(&picks)?;
        let total = tape.sum_all(total);
        Ok(tape.scale(total, -1.0))
    }

    #[allow(clippy::too_many_arguments)]
    pub(crate) fn text_nll_on(
        &self,
        tape: &mut Tape<'_>,
        sources: &[EncodedVars],
        inputs: &[usize],
        targets: &[usize],
        copy_index: &Rc<Vec<usize>>,
        ext_size: usize,
        reg: Reg<'_, '_>,
        theta_override: Option<f64>,
    ) -> Result<Var> {
        let ids = self
            .ids
            .lex
            .as_ref()
            .ok_or_else(|| Error::Usage(format!("{} model has no lexicalisation decoder", self.arch())))?;
        let d = DecVars::new(tape, ids, self.config.hidden);
        let (mut h, mut c) = self.init_state(tape, &d, sources.first().map(|s| s.finals))?;
        let rec = tied_mask(self.config.hidden, reg)?;
        let mats: Vec<Var> = sources.iter().map(|s| s.matrix).collect();
        let mut picks = Vec::with_capacity(targets.len());
        for (&prev, &target) in inputs.iter().zip(targets) {
            let s = self.step_on(tape, &d, &mats, prev, h, c, reg, &rec)?;
            let p = self.lex_distribution(tape, &s, copy_index, ext_size, theta_override)?;
            let p = tape.pick(p, target)?;
            picks.push(tape.log(p));
            (h, c) = (s.h, s.c);
        }
        let total = tape.add_n(&picks)?;
        let total = tape.sum_all(total);
        Ok(tape.scale(total, -1.0))
    }

    /// Teacher-forced NLL terms of the model's task for one prepared example.
    pub fn losses_on(&self, tape: &mut Tape<'_>, p: &Prepared, reg: Reg<'_, '_>) -> Result<Losses> {
        self.losses_with(tape, p, reg, None)
    }

    pub(crate) fn losses_with(
        &self,
        tape: &mut Tape<'_>,
        p: &Prepared,
        reg: Reg<'_, '_>,
        theta_override: Option<f64>,
    ) -> Result<Losses> {
        let mut out = Losses {
            parse: None,
            text: None,
            parse_tokens: 0,
            text_tokens: 0,
        };
        let amr = match &self.ids.amr_encoder {
            Some(enc) => Some(self.encode_on(tape, enc, &p.amr_ids, reg)?),
            None => None,
        };
        if self.arch().has_syntax() {
            let sources: Vec<EncodedVars> = match (&amr, &self.ids.text_encoder) {
                (Some(a), _) => vec![*a],
                (None, Some(enc)) => vec![self.encode_on(tape, enc, &p.text_ids, reg)?],
                (None, None) => vec![],
            };
            out.parse = Some(self.syntax_nll_on(tape, &sources, &p.action_inputs, &p.action_targets, reg)?);
            out.parse_tokens = p.action_targets.len();
        }
        if self.arch().has_lex() {
            let amr = amr.expect("lexicalisation models encode the AMR");
            let mut sources = vec![amr];
            if let Some(enc) = &self.ids.parse_encoder {
                sources.push(self.encode_on(tape, enc, &p.parse_ids, reg)?);
            }
            out.text = Some(self.text_nll_on(
                tape,
                &sources,
                &p.text.inputs,
                &p.text.targets,
                &p.text.copy_index,
                p.text.ext_size(),
                reg,
                theta_override,
            )?);
            out.text_tokens = p.text.targets.len();
        }
        Ok(out)
    }

    /// Parse and text NLL (summed over tokens) without noise or dropout.
    pub fn joint_log_likelihood(&self, p: &Prepared) -> Result<(f64, f64)> {
        let mut tape = Tape::with_params(&self.params);
        let l = self.losses_on(&mut tape, p, &mut None)?;
        Ok((
            l.parse.map_or(0.0, |v| tape.scalar(v)),
            l.text.map_or(0.0, |v| tape.scalar(v)),
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::tests::tiny_vocab;
    use crate::model::{Architecture, ModelConfig};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Runs one lexicalisation step and returns (p_lex, scattered copy
    /// distribution, mixture at θ = 0, mixture at θ = 1).
    fn endpoints(amr_tokens: &[&str]) -> (Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let m = Model::new(
            ModelConfig::new(Architecture::BaselineCopy, 6, 8),
            tiny_vocab(),
            &mut rng,
        )
        .unwrap();
        let text = crate::model::prepare_text(&m.vocab, amr_tokens, &[], &Default::default());
        let ids = m.vocab.amr.encode(amr_tokens);
        let mut tape = Tape::with_params(&m.params);
        let enc = m
            .encode_on(&mut tape, m.ids.amr_encoder.as_ref().unwrap(), &ids, &mut None)
            .unwrap();
        let d = DecVars::new(&mut tape, m.ids.lex.as_ref().unwrap(), 8);
        let (h, c) = m.init_state(&mut tape, &d, Some(enc.finals)).unwrap();
        let s = m
            .step_on(&mut tape, &d, &[enc.matrix], BOS, h, c, &mut None, &None)
            .unwrap();
        let ext = text.ext_size();
        let p_lex = tape.softmax(s.logits, Some(&m.word_mask())).unwrap();
        let mut p_lex = tape.value(p_lex).data().to_vec();
        p_lex.resize(ext, 0.0);
        let mut copy = vec![0.0; ext];
        for (w, &i) in tape.value(s.weights[0]).data().iter().zip(text.copy_index.iter()) {
            copy[i] += w;
        }
        let p0 = m
            .lex_distribution(&mut tape, &s, &text.copy_index, ext, Some(0.0))
            .unwrap();
        let p1 = m
            .lex_distribution(&mut tape, &s, &text.copy_index, ext, Some(1.0))
            .unwrap();
        (
            p_lex,
            copy,
            tape.value(p0).data().to_vec(),
            tape.value(p1).data().to_vec(),
        )
    }

    #[test]
    fn gate_endpoints_are_exact() {
        let (p_lex, copy, p0, p1) = endpoints(&["see-01", ":arg0", "boy", ":arg1", "quokka"]);
        assert_eq!(p0, p_lex);
        assert_eq!(p1, copy);
    }

    #[test]
    fn duplicate_tokens_sum_their_weights() {
        let (_, copy, _, p1) = endpoints(&["dog", "dog"]);
        assert_eq!(copy.iter().filter(|p| **p > 0.0).count(), 1);
        assert!((p1.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!(p1.iter().any(|p| (*p - 1.0).abs() < 1e-15));
    }
}
