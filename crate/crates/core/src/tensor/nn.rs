//! Recurrent and regularisation building blocks composed from tape operations.

use std::rc::Rc;

use rand::{Rng, RngCore};

use super::tape::{Tape, Var};
use crate::error::{Error, Result};

/// Gate order inside the stacked LSTM pre-activation: input, forget,
/// candidate, output.
pub const LSTM_GATES: usize = 4;

/// Tape handles for one LSTM cell's parameters.
///
/// `weight` is `[4H × (in + H)]` acting on `[x; h_prev]`. Layer normalization
/// is applied separately to each of the four gate blocks, and its shift
/// doubles as the gate bias.
#[derive(Clone, Copy, Debug)]
pub struct LstmVars {
    pub weight: Var,
    pub gain: Var,
    pub bias: Var,
}

pub fn lstm_cell(tape: &mut Tape<'_>, x: Var, h_prev: Var, c_prev: Var, p: &LstmVars) -> Result<(Var, Var)> {
    let hidden = tape.value(h_prev).len();
    if tape.value(c_prev).len() != hidden {
        return Err(Error::Dimension {
            op: "lstm_cell",
            left: tape.value(h_prev).shape().to_vec(),
            right: tape.value(c_prev).shape().to_vec(),
        });
    }
    let w = tape.value(p.weight);
    let expected_in = tape.value(x).len() + hidden;
    if w.shape().len() != 2 || w.rows() != LSTM_GATES * hidden || w.cols() != expected_in {
        return Err(Error::Dimension {
            op: "lstm_cell",
            left: w.shape().to_vec(),
            right: vec![LSTM_GATES * hidden, expected_in],
        });
    }
    let xh = tape.concat(&[x, h_prev]);
    let pre = tape.matvec(p.weight, xh)?;
    let pre = tape.layer_norm_blocks(pre, p.gain, p.bias, LSTM_GATES)?;
    let i = tape.slice(pre, 0, hidden)?;
    let f = tape.slice(pre, hidden, hidden)?;
    let g = tape.slice(pre, 2 * hidden, hidden)?;
    let o = tape.slice(pre, 3 * hidden, hidden)?;
    let i = tape.sigmoid(i);
    let f = tape.sigmoid(f);
    let g = tape.tanh(g);
    let o = tape.sigmoid(o);
    let keep = tape.mul(f, c_prev)?;
    let write = tape.mul(i, g)?;
    let c = tape.add(keep, write)?;
    let tc = tape.tanh(c);
    let h = tape.mul(o, tc)?;
    Ok((h, c))
}

/// Where a dropout mask comes from.
pub enum MaskSource<'a> {
    /// Draw a fresh Bernoulli keep-mask.
    Rng(&'a mut dyn RngCore),
    /// Reuse a keep-mask, e.g. one tied across the timesteps of a sequence.
    Fixed(&'a [bool]),
}

pub fn check_rate(rate: f64) -> Result<()> {
    if !(0.0..1.0).contains(&rate) {
        return Err(Error::Config(format!("dropout rate must lie in [0, 1), got {rate}")));
    }
    Ok(())
}

/// Draw a keep-mask of length `n` with keep probability `1 - rate`.
pub fn keep_mask<R: Rng + ?Sized>(n: usize, rate: f64, rng: &mut R) -> Result<Vec<bool>> {
    check_rate(rate)?;
    Ok((0..n).map(|_| rng.gen::<f64>() >= rate).collect())
}

/// Inverted-dropout scale vector for a keep-mask.
pub fn scaled_mask(keep: &[bool], rate: f64) -> Result<Rc<Vec<f64>>> {
    check_rate(rate)?;
    let k = 1.0 / (1.0 - rate);
    Ok(Rc::new(keep.iter().map(|&b| if b { k } else { 0.0 }).collect()))
}

/// Inverted dropout: kept units are scaled by `1 / (1 - rate)`.
pub fn dropout(tape: &mut Tape<'_>, x: Var, rate: f64, source: MaskSource<'_>) -> Result<Var> {
    check_rate(rate)?;
    if rate == 0.0 {
        return Ok(x);
    }
    let n = tape.value(x).len();
    let keep = match source {
        MaskSource::Rng(rng) => keep_mask(n, rate, rng)?,
        MaskSource::Fixed(m) => m.to_vec(),
    };
    let mask = scaled_mask(&keep, rate)?;
    tape.mul_const(x, mask)
}
