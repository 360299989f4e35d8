//! Aligned (AMR, parse, sentence) triples: preprocessing, JSONL I/O and
//! corpus statistics.

pub mod synthetic;

use std::collections::{BTreeMap, HashMap};
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::amr::{anonymize_sentence, linearize, read_amr_corpus, AnonTable};
use crate::error::{Error, Result};
use crate::syntax::{delexicalise, linearize_tree, parse_ptb, Action, ActionKind};

/// One preprocessed training triple.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Example {
    pub id: String,
    pub amr_tokens: Vec<String>,
    pub anon_table: AnonTable,
    /// Surface words with anonymized spans replaced by placeholders; the
    /// lexicalisation target.
    pub sentence_tokens: Vec<String>,
    pub parse_actions: Vec<Action>,
    pub pos_tags: Vec<String>,
    /// Original surface words read off the parse.
    pub words: Vec<String>,
}

impl Example {
    pub fn num_terminals(&self) -> usize {
        self.parse_actions
            .iter()
            .filter(|a| a.kind() == ActionKind::Terminal)
            .count()
    }
}

/// Pair blank-line separated AMR blocks with one-per-line PTB parses.
pub fn preprocess(amr_text: &str, parse_text: &str) -> Result<Vec<Example>> {
    let entries = read_amr_corpus(amr_text)?;
    let parses: Vec<(usize, &str)> = parse_text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .collect();
    if parses.len() != entries.len() {
        let msg = if parses.len() < entries.len() {
            format!(
                "{} AMR graphs but {} parses; first graph without a parse: {}",
                entries.len(),
                parses.len(),
                entries[parses.len()].id
            )
        } else {
            format!(
                "{} AMR graphs but {} parses; first unmatched parse on line {}",
                entries.len(),
                parses.len(),
                parses[entries.len()].0 + 1
            )
        };
        return Err(Error::Data(msg));
    }
    let mut out = Vec::with_capacity(entries.len());
    for (entry, (line, parse)) in entries.into_iter().zip(parses) {
        let tree = parse_ptb(parse).map_err(|e| Error::Data(format!("{} (parse line {}): {e}", entry.id, line + 1)))?;
        let (delex, words) = delexicalise(&tree);
        let lin = linearize(&entry.graph);
        out.push(Example {
            id: entry.id,
            sentence_tokens: anonymize_sentence(&words, &lin.anonymization_table),
            amr_tokens: lin.tokens,
            anon_table: lin.anonymization_table,
            pos_tags: delex.terminals().iter().map(|s| s.to_string()).collect(),
            parse_actions: linearize_tree(&delex),
            words,
        });
    }
    Ok(out)
}

pub fn read_jsonl<R: BufRead>(reader: R) -> Result<Vec<Example>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| Error::Data(format!("line {}: {e}", i + 1)))?);
    }
    Ok(out)
}

pub fn write_jsonl<W: Write>(mut w: W, examples: &[Example]) -> Result<()> {
    for ex in examples {
        serde_json::to_writer(&mut w, ex)?;
        writeln!(w)?;
    }
    Ok(())
}

pub fn read_jsonl_file(path: &std::path::Path) -> Result<Vec<Example>> {
    let f = std::fs::File::open(path).map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
    read_jsonl(std::io::BufReader::new(f))
}

/// Occurrence count per token.
pub fn count_tokens<'a, I: IntoIterator<Item = &'a String>>(tokens: I) -> HashMap<&'a str, usize> {
    let mut counts = HashMap::new();
    for t in tokens {
        *counts.entry(t.as_str()).or_insert(0) += 1;
    }
    counts
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub examples: usize,
    pub amr_vocab: usize,
    pub word_vocab: usize,
    pub action_vocab: usize,
    pub pos_vocab: usize,
    pub singleton_words: usize,
    pub singleton_fraction: f64,
    pub mean_actions: f64,
    pub max_actions: usize,
    pub action_length_histogram: BTreeMap<usize, usize>,
}

pub fn corpus_stats(examples: &[Example]) -> CorpusStats {
    let words = count_tokens(examples.iter().flat_map(|e| &e.sentence_tokens));
    let amr = count_tokens(examples.iter().flat_map(|e| &e.amr_tokens));
    let pos = count_tokens(examples.iter().flat_map(|e| &e.pos_tags));
    let mut actions = HashMap::new();
    let mut hist = BTreeMap::new();
    let mut total = 0;
    for e in examples {
        for a in &e.parse_actions {
            *actions.entry(a.clone()).or_insert(0usize) += 1;
        }
        total += e.parse_actions.len();
        *hist.entry(e.parse_actions.len()).or_insert(0) += 1;
    }
    let singleton_words = words.values().filter(|c| **c == 1).count();
    CorpusStats {
        examples: examples.len(),
        amr_vocab: amr.len(),
        word_vocab: words.len(),
        action_vocab: actions.len(),
        pos_vocab: pos.len(),
        singleton_words,
        singleton_fraction: if words.is_empty() {
            0.0
        } else {
            singleton_words as f64 / words.len() as f64
        },
        mean_actions: if examples.is_empty() {
            0.0
        } else {
            total as f64 / examples.len() as f64
        },
        max_actions: hist.keys().next_back().copied().unwrap_or(0),
        action_length_histogram: hist,
    }
}
