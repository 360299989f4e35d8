#![allow(dead_code)]

pub mod gradcheck;
pub mod oracles;

use amrgen::tensor::{Tape, Tensor, Var};

pub const FD_STEP: f64 = 1e-4;
pub const FD_REL_TOL: f64 = 1e-4;
/// Step for whole-model checks; layer-normalised stacks have enough
/// curvature that the O(h²) truncation term reaches 1e-4 at h = 1e-4.
pub const MODEL_FD_STEP: f64 = 1e-5;
/// Below this magnitude the comparison degrades to an absolute one, since
/// central differences cannot resolve relative error on near-zero partials.
pub const FD_FLOOR: f64 = 1e-5;

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(FD_FLOOR)
}

/// Compare tape gradients of a scalar function against central finite
/// differences for every element of every input. Returns the worst relative
/// error seen.
pub fn check_inputs<F>(inputs: &[Tensor], f: F) -> f64
where
    F: Fn(&mut Tape<'static>, &[Var]) -> Var,
{
    let mut tape = Tape::new();
    let vars: Vec<Var> = inputs.iter().map(|t| tape.constant(t.clone())).collect();
    let out = f(&mut tape, &vars);
    let grads = tape.backward(out);
    let analytic: Vec<Tensor> = vars
        .iter()
        .zip(inputs)
        .map(|(v, t)| grads.wrt(*v).cloned().unwrap_or_else(|| Tensor::zeros(t.shape())))
        .collect();

    let eval = |inputs: &[Tensor]| {
        let mut tape = Tape::new();
        let vars: Vec<Var> = inputs.iter().map(|t| tape.constant(t.clone())).collect();
        let out = f(&mut tape, &vars);
        tape.scalar(out)
    };

    let mut worst: f64 = 0.0;
    for (k, input) in inputs.iter().enumerate() {
        for i in 0..input.len() {
            let mut plus = inputs.to_vec();
            plus[k].data_mut()[i] += FD_STEP;
            let mut minus = inputs.to_vec();
            minus[k].data_mut()[i] -= FD_STEP;
            let numeric = (eval(&plus) - eval(&minus)) / (2.0 * FD_STEP);
            let a = analytic[k].data()[i];
            worst = worst.max(rel_err(a, numeric));
        }
    }
    worst
}

use amrgen::corpus::{preprocess, synthetic, Example};
use amrgen::model::{Architecture, Model, ModelConfig, Vocab};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The first `n` training examples of the synthetic corpus.
pub fn synthetic_examples(n: usize) -> Vec<Example> {
    let c = synthetic::generate(synthetic::DEFAULT_SEED);
    let part = &c.train[..n.min(c.train.len())];
    preprocess(&synthetic::amr_file(part), &synthetic::parse_file(part)).unwrap()
}

pub fn fresh_model(arch: Architecture, embedding: usize, hidden: usize, examples: &[Example], seed: u64) -> Model {
    let vocab = Vocab::build(examples).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Model::new(ModelConfig::new(arch, embedding, hidden), vocab, &mut rng).unwrap()
}
