//! AMR reading, anonymization and linearization.

mod anonymize;
mod penman;

use serde::{Deserialize, Serialize};

pub use anonymize::{anonymize, anonymize_sentence, deanonymize, is_placeholder, AnonTable, PLACEHOLDER_TYPES};
pub use penman::{parse_penman, print_penman, AmrGraph, AmrNode, Constant, Edge, Step, Target};

use crate::error::{Error, Result};

/// Token sequence fed to the models, plus the table needed to restore
/// anonymized material.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinearizedAmr {
    pub tokens: Vec<String>,
    pub anonymization_table: AnonTable,
}

/// Remove a trailing `-NN` sense suffix.
pub fn strip_sense(concept: &str) -> &str {
    match concept.rsplit_once('-') {
        Some((stem, sense)) if !stem.is_empty() && !sense.is_empty() && sense.bytes().all(|b| b.is_ascii_digit()) => {
            stem
        }
        _ => concept,
    }
}

fn has_children(g: &AmrGraph, var: &str) -> bool {
    g.outgoing(var).next().is_some()
}

/// Depth-first linearization. Variables are dropped, senses stripped and
/// concepts and roles lower-cased; brackets surround every non-root node that has
/// outgoing edges; re-entrant references repeat the target's concept.
pub fn linearize_graph(g: &AmrGraph) -> Vec<String> {
    let mut out = Vec::new();
    let concept = |v: &str| strip_sense(g.concept(v).unwrap_or("")).to_lowercase();
    g.walk(|step| match step {
        Step::Enter(v) => {
            if v != g.root() && has_children(g, v) {
                out.push("(".to_string());
            }
            out.push(concept(v));
        }
        Step::Exit(v) => {
            if v != g.root() && has_children(g, v) {
                out.push(")".to_string());
            }
        }
        Step::Edge(e, expands) => {
            out.push(e.role.to_lowercase());
            if !expands {
                match &e.target {
                    Target::Var(t) => out.push(concept(t)),
                    Target::Const(c) => out.push(c.text().to_lowercase()),
                }
            }
        }
    });
    out
}

/// Anonymize then linearize.
pub fn linearize(g: &AmrGraph) -> LinearizedAmr {
    let (anon, table) = anonymize(g);
    LinearizedAmr {
        tokens: linearize_graph(&anon),
        anonymization_table: table,
    }
}

/// One block of an AMR corpus file.
#[derive(Clone, Debug, PartialEq)]
pub struct AmrEntry {
    pub id: String,
    pub sentence: Option<String>,
    pub graph: AmrGraph,
}

/// Read blank-line separated PENMAN blocks with optional `# ::id` and
/// `# ::snt` metadata. Parse errors carry file-level line numbers.
pub fn read_amr_corpus(text: &str) -> Result<Vec<AmrEntry>> {
    let mut entries = Vec::new();
    let mut block: Vec<&str> = Vec::new();
    let mut block_start = 0;
    let lines: Vec<&str> = text.lines().collect();
    for (i, line) in lines.iter().enumerate() {
        if line.trim().is_empty() {
            if !block.is_empty() {
                flush(&block, block_start, &mut entries)?;
                block.clear();
            }
            continue;
        }
        if block.is_empty() {
            block_start = i;
        }
        block.push(line);
    }
    if !block.is_empty() {
        flush(&block, block_start, &mut entries)?;
    }
    Ok(entries)
}

fn flush(block: &[&str], start: usize, entries: &mut Vec<AmrEntry>) -> Result<()> {
    let mut id = None;
    let mut sentence = None;
    let mut graph_lines = Vec::new();
    let mut graph_offset = None;
    for (k, line) in block.iter().enumerate() {
        let t = line.trim_start();
        if let Some(meta) = t.strip_prefix('#') {
            for (key, value) in metadata(meta) {
                match key {
                    "id" => id = Some(value.to_string()),
                    "snt" => sentence = Some(value.to_string()),
                    _ => {}
                }
            }
        } else {
            graph_offset.get_or_insert(k);
            graph_lines.push(*line);
        }
    }
    let Some(offset) = graph_offset else {
        return Ok(());
    };
    let graph = parse_penman(&graph_lines.join("\n")).map_err(|e| match e {
        Error::Parse { line, column, message } => Error::Parse {
            line: line + start + offset,
            column,
            message,
        },
        other => other,
    })?;
    let id = id.unwrap_or_else(|| format!("amr_{}", entries.len()));
    entries.push(AmrEntry { id, sentence, graph });
    Ok(())
}

/// Split `# ::id x ::snt y z` style metadata into key/value pairs.
fn metadata(line: &str) -> Vec<(&str, &str)> {
    let mut out = Vec::new();
    for part in line.split(" ::").flat_map(|p| p.strip_prefix("::").or(Some(p))) {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        match part.split_once(char::is_whitespace) {
            Some((k, v)) => out.push((k, v.trim())),
            None => out.push((part, "")),
        }
    }
    out
}
