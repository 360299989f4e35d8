use std::collections::{HashMap, HashSet};
use std::rc::Rc;

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use super::vocab::{Vocab, BOS, EOS, UNK};
use crate::corpus::Example;
use crate::syntax::{Action, ActionKind};

/// Per-token UNK replacement probabilities used during training.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseConfig {
    /// Words seen once in the training corpus.
    pub singleton_word: f64,
    /// POS tags (TERMINAL actions) of the parse.
    pub pos: f64,
    /// AMR concept tokens; roles and brackets are never replaced.
    pub amr_concept: f64,
}

impl NoiseConfig {
    pub const NONE: NoiseConfig = NoiseConfig {
        singleton_word: 0.0,
        pos: 0.0,
        amr_concept: 0.0,
    };
}

impl Default for NoiseConfig {
    fn default() -> Self {
        NoiseConfig {
            singleton_word: 0.5,
            pos: 0.1,
            amr_concept: 0.1,
        }
    }
}

pub fn is_role_or_bracket(token: &str) -> bool {
    token.starts_with(':') || token == "(" || token == ")"
}

/// Decoder inputs and targets for the lexicalisation model in the
/// per-example extended vocabulary: ids `>= V` name AMR tokens that have no
/// usable word-vocabulary entry and can only be produced by copying.
#[derive(Clone, Debug, PartialEq)]
pub struct TextTargets {
    /// `BOS w1 … wn`, with unusable words as UNK.
    pub inputs: Vec<usize>,
    /// `w1 … wn EOS` in the extended space.
    pub targets: Vec<usize>,
    /// Extended-space id of every AMR position.
    pub copy_index: Rc<Vec<usize>>,
    pub ext_tokens: Vec<String>,
    pub vocab_size: usize,
}

impl TextTargets {
    pub fn ext_size(&self) -> usize {
        self.vocab_size + self.ext_tokens.len()
    }
}

/// Build the extended vocabulary for one AMR. Words in `hidden` are treated
/// as if absent from the word vocabulary.
pub fn prepare_text<S: AsRef<str>>(
    vocab: &Vocab,
    amr_tokens: &[S],
    sentence: &[S],
    hidden: &HashSet<&str>,
) -> TextTargets {
    let v = vocab.words.len();
    let usable = |s: &str| {
        if hidden.contains(s) {
            None
        } else {
            vocab.words.get(s)
        }
    };
    let mut ext: HashMap<String, usize> = HashMap::new();
    let mut ext_tokens = Vec::new();
    let copy_index: Vec<usize> = amr_tokens
        .iter()
        .map(|t| {
            let t = t.as_ref();
            usable(t).unwrap_or_else(|| {
                *ext.entry(t.to_string()).or_insert_with(|| {
                    ext_tokens.push(t.to_string());
                    v + ext_tokens.len() - 1
                })
            })
        })
        .collect();
    let mut inputs = vec![BOS];
    let mut targets = Vec::with_capacity(sentence.len() + 1);
    for w in sentence {
        let w = w.as_ref();
        let id = usable(w);
        inputs.push(id.unwrap_or(UNK));
        targets.push(id.or_else(|| ext.get(w).copied()).unwrap_or(UNK));
    }
    targets.push(EOS);
    TextTargets {
        inputs,
        targets,
        copy_index: Rc::new(copy_index),
        ext_tokens,
        vocab_size: v,
    }
}

/// Index sequences for one training example, after UNK noise.
#[derive(Clone, Debug, PartialEq)]
pub struct Prepared {
    pub amr_ids: Vec<usize>,
    /// `BOS a1 … a(n-1)`.
    pub action_inputs: Vec<usize>,
    pub action_targets: Vec<usize>,
    /// Parse-encoder input.
    pub parse_ids: Vec<usize>,
    /// Sentence as encoder input (text-to-parse).
    pub text_ids: Vec<usize>,
    pub text: TextTargets,
}

/// Index an example, replacing tokens with UNK according to `noise`. With
/// no rng (or zero probabilities) nothing is replaced.
pub fn prepare_example(
    vocab: &Vocab,
    ex: &Example,
    noise: &NoiseConfig,
    mut rng: Option<&mut dyn RngCore>,
) -> Prepared {
    let mut draw = |p: f64| -> bool {
        match rng.as_deref_mut() {
            Some(r) if p > 0.0 => r.gen::<f64>() < p,
            _ => false,
        }
    };
    let mut hidden = HashSet::new();
    for w in &ex.sentence_tokens {
        if let Some(id) = vocab.words.get(w) {
            if vocab.words.count(id) == 1 && !hidden.contains(w.as_str()) && draw(noise.singleton_word) {
                hidden.insert(w.as_str());
            }
        }
    }
    let amr_ids = ex
        .amr_tokens
        .iter()
        .map(|t| {
            if !is_role_or_bracket(t) && draw(noise.amr_concept) {
                UNK
            } else {
                vocab.amr.lookup(t)
            }
        })
        .collect();
    let action_targets = vocab.encode_actions(&ex.parse_actions);
    let noised: Vec<usize> = ex
        .parse_actions
        .iter()
        .zip(&action_targets)
        .map(|(a, &id)| {
            if matches!(a, Action::Terminal(_)) && draw(noise.pos) {
                UNK
            } else {
                id
            }
        })
        .collect();
    let mut action_inputs = vec![BOS];
    action_inputs.extend_from_slice(&noised[..noised.len().saturating_sub(1)]);
    let text = prepare_text(vocab, &ex.amr_tokens, &ex.sentence_tokens, &hidden);
    let text_ids = ex
        .sentence_tokens
        .iter()
        .map(|w| {
            if hidden.contains(w.as_str()) {
                UNK
            } else {
                vocab.words.lookup(w)
            }
        })
        .collect();
    Prepared {
        amr_ids,
        action_inputs,
        action_targets,
        parse_ids: noised,
        text_ids,
        text,
    }
}

/// Kinds of the actions in an index sequence.
pub(crate) fn kinds_of(kinds: &[Option<ActionKind>], ids: &[usize]) -> Option<Vec<ActionKind>> {
    ids.iter().map(|&i| kinds.get(i).copied().flatten()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::tests::tiny_vocab;

    #[test]
    fn copy_slots_for_unknown_amr_tokens() {
        let v = tiny_vocab();
        let amr = ["see", ":arg0", "zebra", ":arg1", "zebra"];
        let snt = ["the", "zebra", "sees", "."];
        let t = prepare_text(&v, &amr, &snt, &HashSet::new());
        let vs = v.words.len();
        // zebra is one extended slot shared by both AMR positions
        assert_eq!(t.copy_index[2], t.copy_index[4]);
        assert!(t.copy_index[2] >= vs);
        assert_eq!(t.targets[1], t.copy_index[2]);
        assert_eq!(t.inputs[2], UNK);
        assert_eq!(*t.targets.last().unwrap(), EOS);
        assert_eq!(t.ext_tokens.iter().filter(|s| *s == "zebra").count(), 1);
    }

    #[test]
    fn hidden_words_move_to_copy_slots() {
        let v = tiny_vocab();
        let w = v.words.token(4).to_string();
        let amr = ["see", ":arg0", w.as_str()];
        let snt = ["the", w.as_str(), "sees"];
        let plain = prepare_text(&v, &amr, &snt, &HashSet::new());
        assert_eq!(plain.targets[1], v.words.lookup(&w));
        let hidden: HashSet<&str> = [w.as_str()].into_iter().collect();
        let t = prepare_text(&v, &amr, &snt, &hidden);
        assert!(t.targets[1] >= v.words.len());
        assert_eq!(t.inputs[2], UNK);
    }
}
