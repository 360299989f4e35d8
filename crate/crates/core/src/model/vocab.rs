use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::corpus::{count_tokens, Example};
use crate::error::{Error, Result};
use crate::syntax::{Action, ActionKind};

pub const PAD: usize = 0;
pub const UNK: usize = 1;
pub const BOS: usize = 2;
pub const EOS: usize = 3;
pub const RESERVED: [&str; 4] = ["<pad>", "<unk>", "<s>", "</s>"];

/// Dense token ↔ index map. Indices 0–3 are the reserved symbols; the rest
/// follow (count descending, token ascending).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenVocab {
    tokens: Vec<String>,
    counts: Vec<usize>,
    #[serde(skip)]
    index: HashMap<String, usize>,
}

impl TokenVocab {
    pub fn from_counts(counts: &HashMap<&str, usize>) -> Self {
        let mut entries: Vec<(&str, usize)> = counts
            .iter()
            .filter(|(t, _)| !RESERVED.contains(t))
            .map(|(t, c)| (*t, *c))
            .collect();
        entries.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
        let mut tokens: Vec<String> = RESERVED.iter().map(|s| s.to_string()).collect();
        let mut cs = vec![0; RESERVED.len()];
        for (t, c) in entries {
            tokens.push(t.to_string());
            cs.push(c);
        }
        let mut v = TokenVocab {
            tokens,
            counts: cs,
            index: HashMap::new(),
        };
        v.reindex();
        v
    }

    fn reindex(&mut self) {
        self.index = self.tokens.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn get(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    /// Index of `token`, or UNK.
    pub fn lookup(&self, token: &str) -> usize {
        self.get(token).unwrap_or(UNK)
    }

    pub fn token(&self, id: usize) -> &str {
        &self.tokens[id]
    }

    pub fn count(&self, id: usize) -> usize {
        self.counts[id]
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn encode<S: AsRef<str>>(&self, tokens: &[S]) -> Vec<usize> {
        tokens.iter().map(|t| self.lookup(t.as_ref())).collect()
    }
}

/// The four vocabularies of the models.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vocab {
    pub amr: TokenVocab,
    pub actions: TokenVocab,
    pub words: TokenVocab,
    pub pos: TokenVocab,
}

impl Vocab {
    /// Count every training token; nothing is pruned.
    pub fn build(corpus: &[Example]) -> Result<Vocab> {
        if corpus.is_empty() {
            return Err(Error::Config("cannot build vocabularies from an empty corpus".into()));
        }
        let actions: Vec<String> = corpus
            .iter()
            .flat_map(|e| e.parse_actions.iter().map(ToString::to_string))
            .collect();
        Ok(Vocab {
            amr: TokenVocab::from_counts(&count_tokens(corpus.iter().flat_map(|e| &e.amr_tokens))),
            actions: TokenVocab::from_counts(&count_tokens(&actions)),
            words: TokenVocab::from_counts(&count_tokens(corpus.iter().flat_map(|e| &e.sentence_tokens))),
            pos: TokenVocab::from_counts(&count_tokens(corpus.iter().flat_map(|e| &e.pos_tags))),
        })
    }

    /// Restore lookup tables after deserialisation.
    pub fn reindex(&mut self) {
        for v in [&mut self.amr, &mut self.actions, &mut self.words, &mut self.pos] {
            v.reindex();
        }
    }

    /// Action class of every action-vocabulary entry; reserved entries have
    /// none and are never permitted.
    pub fn action_kinds(&self) -> Vec<Option<ActionKind>> {
        self.actions
            .tokens()
            .iter()
            .enumerate()
            .map(|(i, t)| {
                if i < RESERVED.len() {
                    None
                } else {
                    t.parse::<Action>().ok().map(|a| a.kind())
                }
            })
            .collect()
    }

    pub fn encode_actions(&self, actions: &[Action]) -> Vec<usize> {
        actions.iter().map(|a| self.actions.lookup(&a.to_string())).collect()
    }

    pub fn decode_actions(&self, ids: &[usize]) -> Result<Vec<Action>> {
        ids.iter()
            .map(|&i| {
                if i < RESERVED.len() || i >= self.actions.len() {
                    Err(Error::Structure(format!("action id {i} is not an action")))
                } else {
                    self.actions.token(i).parse()
                }
            })
            .collect()
    }

    /// Fraction of word types seen exactly once.
    pub fn singleton_fraction(&self) -> f64 {
        let n = self.words.len() - RESERVED.len();
        if n == 0 {
            return 0.0;
        }
        let ones = (RESERVED.len()..self.words.len())
            .filter(|&i| self.words.count(i) == 1)
            .count();
        ones as f64 / n as f64
    }
}
