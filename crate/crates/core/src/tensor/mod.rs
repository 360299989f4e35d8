//! Dense tensors and a reverse-mode autodiff tape with exactly the
//! operations the generation models use.

mod dense;
pub mod nn;
pub mod optim;
mod params;
mod tape;

pub use dense::Tensor;
pub use nn::{dropout, keep_mask, lstm_cell, scaled_mask, LstmVars, MaskSource, LSTM_GATES};
pub use optim::{adam_step, clip_grad_norm, AdamState};
pub use params::{ParamId, ParamStore};
pub use tape::{sigmoid, softmax_values, Gradients, Tape, Var, LAYER_NORM_EPS, LOG_FLOOR};
