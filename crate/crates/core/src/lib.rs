//! Two-stage AMR-to-text generation: a syntax model predicts a delexicalised
//! constituency tree from a linearised AMR graph, and a lexicalisation model
//! with dual attention and a copy mechanism realises the surface string.

pub mod amr;
pub mod corpus;
pub mod decode;
pub mod error;
pub mod eval;
pub mod model;
pub mod syntax;
pub mod tensor;
pub mod train;

pub use error::{Error, ErrorKind, Result};
