//! Constituency trees: PTB reading, delexicalisation, action-sequence
//! linearization and the well-formedness automaton used while decoding.

mod actions;
mod automaton;
mod ptb;
mod tree;

pub use actions::{
    delinearize, format_actions, linearize_tree, parse_actions, Action, ActionKind, ActionSequence, WRAP_LABEL,
};
pub use automaton::{ActionAutomaton, Permitted, DEFAULT_MAX_ACTIONS, DEFAULT_MAX_DEPTH};
pub use ptb::{delexicalise, parse_ptb, strip_function_tags};
pub use tree::{parse_delex, Tree};
