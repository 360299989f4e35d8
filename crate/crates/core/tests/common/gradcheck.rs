//! Finite-difference checks for every differentiable operation and for the
//! full joint loss. Each check returns the worst relative error it saw.

use std::rc::Rc;

use amrgen::model::{attend, prepare_example, Architecture, Model, NoiseConfig};
use amrgen::tensor::{dropout, lstm_cell, LstmVars, MaskSource, Tape, Tensor, Var};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{check_inputs, fresh_model, rel_err, synthetic_examples, MODEL_FD_STEP};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random projection so every output element carries a distinct weight.
fn weighted_sum(tape: &mut Tape<'static>, v: Var, seed: u64) -> Var {
    let n = tape.value(v).len();
    let w = Tensor::uniform(&[n], 1.0, &mut rng(seed));
    let w = Tensor::new(tape.value(v).shape().to_vec(), w.into_data()).unwrap();
    let w = tape.constant(w);
    let p = tape.mul(v, w).unwrap();
    tape.sum_all(p)
}

pub fn matmul() -> f64 {
    let mut r = rng(1);
    let a = Tensor::uniform(&[3, 4], 1.0, &mut r);
    let b = Tensor::uniform(&[4, 2], 1.0, &mut r);
    check_inputs(&[a, b], |t, v| {
        let m = t.matmul(v[0], v[1]).unwrap();
        t.sum_all(m)
    })
}

pub fn matvec() -> f64 {
    let mut r = rng(2);
    let w = Tensor::uniform(&[5, 3], 1.0, &mut r);
    let x = Tensor::uniform(&[3], 1.0, &mut r);
    let y = Tensor::uniform(&[5], 1.0, &mut r);
    check_inputs(&[w, x, y], |t, v| {
        let a = t.matvec(v[0], v[1]).unwrap();
        let b = t.mat_t_vec(v[0], v[2]).unwrap();
        let a = t.tanh(a);
        let b = t.sigmoid(b);
        let sa = weighted_sum(t, a, 7);
        let sb = weighted_sum(t, b, 8);
        t.add(sa, sb).unwrap()
    })
}

pub fn masked_softmax() -> f64 {
    let x = Tensor::uniform(&[6], 2.0, &mut rng(3));
    check_inputs(&[x], |t, v| {
        let p = t.softmax(v[0], Some(&[true, false, true, true, false, true])).unwrap();
        weighted_sum(t, p, 9)
    })
}

pub fn layer_norm() -> f64 {
    let mut r = rng(4);
    let x = Tensor::uniform(&[7], 2.0, &mut r);
    let g = Tensor::uniform(&[7], 1.5, &mut r);
    let b = Tensor::uniform(&[7], 0.5, &mut r);
    check_inputs(&[x, g, b], |t, v| {
        let y = t.layer_norm(v[0], v[1], v[2]).unwrap();
        weighted_sum(t, y, 10)
    })
}

pub fn blocked_layer_norm() -> f64 {
    let mut r = rng(5);
    let x = Tensor::uniform(&[12], 2.0, &mut r);
    let g = Tensor::uniform(&[12], 1.5, &mut r);
    let b = Tensor::uniform(&[12], 0.5, &mut r);
    check_inputs(&[x, g, b], |t, v| {
        let y = t.layer_norm_blocks(v[0], v[1], v[2], 4).unwrap();
        weighted_sum(t, y, 11)
    })
}

/// Three LSTM steps; every weight, gain, bias and initial state checked.
pub fn lstm_rollout() -> f64 {
    let (input, hidden) = (3, 4);
    let mut r = rng(6);
    let w = Tensor::uniform(&[4 * hidden, input + hidden], 0.6, &mut r);
    let g = Tensor::uniform(&[4 * hidden], 1.0, &mut r);
    let b = Tensor::uniform(&[4 * hidden], 0.5, &mut r);
    let xs: Vec<Tensor> = (0..3).map(|_| Tensor::uniform(&[input], 1.0, &mut r)).collect();
    let h0 = Tensor::uniform(&[hidden], 0.5, &mut r);
    let c0 = Tensor::uniform(&[hidden], 0.5, &mut r);
    let mut inputs = vec![w, g, b, h0, c0];
    inputs.extend(xs);
    check_inputs(&inputs, |t, v| {
        let p = LstmVars {
            weight: v[0],
            gain: v[1],
            bias: v[2],
        };
        let (mut h, mut c) = (v[3], v[4]);
        for x in &v[5..] {
            let (h2, c2) = lstm_cell(t, *x, h, c, &p).unwrap();
            h = h2;
            c = c2;
        }
        let hc = t.concat(&[h, c]);
        weighted_sum(t, hc, 12)
    })
}

pub fn elementwise_and_structural() -> f64 {
    let mut r = rng(7);
    let a = Tensor::uniform(&[4], 1.0, &mut r);
    let b = Tensor::uniform(&[4], 1.0, &mut r);
    let s = Tensor::vector(vec![0.35]);
    let table = Tensor::uniform(&[3, 4], 1.0, &mut r);
    check_inputs(&[a, b, s, table], |t, v| {
        let d = t.sub(v[0], v[1]).unwrap();
        let m = t.mul(d, v[1]).unwrap();
        let sb = t.scale_by(m, v[2]).unwrap();
        let om = t.one_minus(v[2]);
        let row = t.gather_row(v[3], 1).unwrap();
        let sc = t.scale_by(row, om).unwrap();
        let sum = t.add_n(&[sb, sc, v[0]]).unwrap();
        let sl = t.slice(sum, 1, 2).unwrap();
        let padded = t.pad(sl, 5).unwrap();
        let scat = t.scatter_add(v[1], Rc::new(vec![0, 2, 2, 4]), 5).unwrap();
        let mixed = t.add(padded, scat).unwrap();
        let sq = t.mul(mixed, mixed).unwrap();
        let pos = t.sigmoid(sq);
        let lg = t.log(pos);
        let scaled = t.scale(lg, -0.7);
        let rows = t.stack_rows(&[scaled, pos]).unwrap();
        let picked_row = t.gather_row(rows, 0).unwrap();
        let p = t.pick(picked_row, 3).unwrap();
        let rest = weighted_sum(t, rows, 13);
        t.add(p, rest).unwrap()
    })
}

pub fn fixed_mask_dropout() -> f64 {
    let x = Tensor::uniform(&[5], 1.0, &mut rng(8));
    check_inputs(&[x], |t, v| {
        let keep = [true, false, true, true, false];
        let y = dropout(t, v[0], 0.3, MaskSource::Fixed(&keep)).unwrap();
        let y = t.tanh(y);
        weighted_sum(t, y, 14)
    })
}

pub fn attention() -> f64 {
    let mut r = rng(4);
    let inputs = vec![
        Tensor::uniform(&[3], 1.0, &mut r),
        Tensor::uniform(&[5, 3], 1.0, &mut r),
        Tensor::uniform(&[3, 3], 1.0, &mut r),
        Tensor::uniform(&[3], 1.0, &mut r),
    ];
    check_inputs(&inputs, |tape, v| {
        let (w, s) = attend(tape, v[0], v[1], v[2]).unwrap();
        let proj = tape.mul(s, v[3]).unwrap();
        let a = tape.sum_all(proj);
        let b = tape.pick(w, 2).unwrap();
        tape.add(a, b).unwrap()
    })
}

pub type Check = (&'static str, fn() -> f64);

pub const OPERATIONS: [Check; 9] = [
    ("matmul", matmul),
    ("matvec", matvec),
    ("masked softmax", masked_softmax),
    ("layer norm", layer_norm),
    ("blocked layer norm", blocked_layer_norm),
    ("lstm rollout", lstm_rollout),
    ("elementwise/structural", elementwise_and_structural),
    ("dropout", fixed_mask_dropout),
    ("attention", attention),
];

pub struct ModelCheck {
    pub checked: usize,
    pub worst: f64,
    /// Parameter entry with the worst error.
    pub worst_at: String,
}

/// Central differences on every parameter of a hidden-8 joint model for the
/// summed parse and text loss of one example.
pub fn joint_loss_hidden_8() -> ModelCheck {
    let ex = synthetic_examples(12);
    let mut model = fresh_model(Architecture::Joint, 4, 8, &ex, 21);
    // shortest example keeps the sweep fast
    let e = ex
        .iter()
        .min_by_key(|e| e.parse_actions.len() + e.sentence_tokens.len())
        .unwrap();
    let p = prepare_example(&model.vocab, e, &NoiseConfig::NONE, None);
    let loss = |m: &Model| {
        let mut tape = Tape::with_params(&m.params);
        let l = m.losses_on(&mut tape, &p, &mut None).unwrap();
        let total = tape.add(l.parse.unwrap(), l.text.unwrap()).unwrap();
        tape.scalar(total)
    };
    let grads = {
        let mut tape = Tape::with_params(&model.params);
        let l = model.losses_on(&mut tape, &p, &mut None).unwrap();
        let total = tape.add(l.parse.unwrap(), l.text.unwrap()).unwrap();
        tape.backward(total).into_params()
    };
    let ids: Vec<_> = model.params.ids().collect();
    let mut out = ModelCheck {
        checked: 0,
        worst: 0.0,
        worst_at: String::new(),
    };
    for id in ids {
        for k in 0..model.params.get(id).len() {
            let orig = model.params.get(id).data()[k];
            model.params.get_mut(id).data_mut()[k] = orig + MODEL_FD_STEP;
            let plus = loss(&model);
            model.params.get_mut(id).data_mut()[k] = orig - MODEL_FD_STEP;
            let minus = loss(&model);
            model.params.get_mut(id).data_mut()[k] = orig;
            let numeric = (plus - minus) / (2.0 * MODEL_FD_STEP);
            let analytic = grads[id.index()].as_ref().map_or(0.0, |g| g.data()[k]);
            let err = rel_err(analytic, numeric);
            if err > out.worst {
                out.worst = err;
                out.worst_at = format!("{}[{k}]", model.params.name(id));
            }
            out.checked += 1;
        }
    }
    out
}
