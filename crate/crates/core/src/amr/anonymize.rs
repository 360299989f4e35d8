//! Named-entity, date and quantity anonymization.

use std::collections::{BTreeMap, HashMap, HashSet};

use super::penman::{AmrGraph, Constant, Step, Target};

/// Placeholder types. Named entities whose concept is not listed fall into
/// `other`.
pub const PLACEHOLDER_TYPES: [&str; 8] = [
    "person",
    "organization",
    "location",
    "country",
    "city",
    "date",
    "quantity",
    "other",
];

/// Placeholder → original surface material.
pub type AnonTable = BTreeMap<String, String>;

pub fn is_placeholder(token: &str) -> bool {
    match token.rsplit_once('_') {
        Some((ty, idx)) => {
            PLACEHOLDER_TYPES.contains(&ty) && !idx.is_empty() && idx.bytes().all(|b| b.is_ascii_digit())
        }
        None => false,
    }
}

fn entity_type(concept: &str) -> &'static str {
    PLACEHOLDER_TYPES[..5]
        .iter()
        .find(|t| **t == concept)
        .copied()
        .unwrap_or("other")
}

fn is_number(s: &str) -> bool {
    s.parse::<f64>().is_ok()
}

enum Replacement {
    Entity { name_var: Option<String> },
    Date,
    Quantity(usize),
}

/// Collapse named entities, date entities and `:quant` numbers into typed
/// placeholders, numbered per type in depth-first order.
pub fn anonymize(g: &AmrGraph) -> (AmrGraph, AnonTable) {
    // Discover replacements in traversal order.
    let mut order: Vec<(String, Replacement)> = Vec::new();
    let mut seen_nodes = HashSet::new();
    g.walk(|step| match step {
        Step::Enter(v) => {
            if !seen_nodes.insert(v.to_string()) {
                return;
            }
            let concept = g.concept(v).unwrap_or("");
            let name_var = g.outgoing(v).find_map(|e| match &e.target {
                Target::Var(t) if e.role.eq_ignore_ascii_case(":name") && g.concept(t) == Some("name") => {
                    Some(t.clone())
                }
                _ => None,
            });
            if name_var.is_some() {
                order.push((v.to_string(), Replacement::Entity { name_var }));
            } else if concept == "date-entity" {
                order.push((v.to_string(), Replacement::Date));
            }
        }
        Step::Edge(e, _) => {
            if e.role.eq_ignore_ascii_case(":quant") {
                if let Target::Const(c) = &e.target {
                    if is_number(c.text()) {
                        let idx = g.edges().iter().position(|x| std::ptr::eq(x, e)).unwrap();
                        order.push((e.source.clone(), Replacement::Quantity(idx)));
                    }
                }
            }
        }
        Step::Exit(_) => {}
    });

    let mut counters: HashMap<&'static str, usize> = HashMap::new();
    let mut table = AnonTable::new();
    let mut concept_updates: HashMap<String, String> = HashMap::new();
    let mut edge_updates: HashMap<usize, String> = HashMap::new();
    let mut drop_edges: HashSet<usize> = HashSet::new();
    let mut drop_nodes: HashSet<String> = HashSet::new();

    let mut next = |ty: &'static str| {
        let c = counters.entry(ty).or_insert(0);
        let name = format!("{ty}_{c}");
        *c += 1;
        name
    };

    for (var, rep) in &order {
        match rep {
            Replacement::Entity { name_var } => {
                let name_var = name_var.as_deref().unwrap_or("");
                let ty = entity_type(g.concept(var).unwrap_or(""));
                let placeholder = next(ty);
                let mut ops: Vec<(u32, &str)> = Vec::new();
                for (i, e) in g.edges().iter().enumerate() {
                    if e.source == name_var {
                        if let Target::Const(c) = &e.target {
                            let n = e.role[1..]
                                .strip_prefix("op")
                                .and_then(|d| d.parse::<u32>().ok())
                                .unwrap_or(u32::MAX);
                            ops.push((n, c.text()));
                        }
                        drop_edges.insert(i);
                    }
                    if e.source == *var
                        && (matches!(&e.target, Target::Var(t) if t == name_var)
                            || e.role.eq_ignore_ascii_case(":wiki"))
                    {
                        drop_edges.insert(i);
                    }
                }
                ops.sort_by_key(|(n, _)| *n);
                let surface: Vec<&str> = ops.iter().map(|(_, s)| *s).collect();
                table.insert(placeholder.clone(), surface.join(" "));
                concept_updates.insert(var.clone(), placeholder);
                if g.in_degree(name_var) <= 1 {
                    drop_nodes.insert(name_var.to_string());
                }
            }
            Replacement::Date => {
                let placeholder = next("date");
                let mut parts = Vec::new();
                for (i, e) in g.edges().iter().enumerate() {
                    if e.source == *var {
                        if let Target::Const(c) = &e.target {
                            parts.push(c.text().to_string());
                            drop_edges.insert(i);
                        }
                    }
                }
                table.insert(placeholder.clone(), parts.join(" "));
                concept_updates.insert(var.clone(), placeholder);
            }
            Replacement::Quantity(i) => {
                let placeholder = next("quantity");
                if let Target::Const(c) = &g.edges()[*i].target {
                    table.insert(placeholder.clone(), c.text().to_string());
                }
                edge_updates.insert(*i, placeholder);
            }
        }
    }

    let mut out = g.clone();
    {
        let (nodes, edges) = out.parts_mut();
        for n in nodes.iter_mut() {
            if let Some(p) = concept_updates.get(&n.var) {
                n.concept = p.clone();
            }
        }
        nodes.retain(|n| !drop_nodes.contains(&n.var));
        let kept: Vec<_> = edges
            .drain(..)
            .enumerate()
            .filter(|(i, e)| !drop_edges.contains(i) && !matches!(&e.target, Target::Var(t) if drop_nodes.contains(t)))
            .map(|(i, mut e)| {
                if let Some(p) = edge_updates.get(&i) {
                    e.target = Target::Const(Constant::Symbol(p.clone()));
                }
                e
            })
            .collect();
        *edges = kept;
    }
    debug_assert!(out.validate().is_ok());
    (out, table)
}

/// Replace each table entry's surface token sequence in a sentence with its
/// placeholder (first case-insensitive occurrence, longest surface strings
/// first).
pub fn anonymize_sentence(tokens: &[String], table: &AnonTable) -> Vec<String> {
    let mut entries: Vec<(&String, Vec<&str>)> = table
        .iter()
        .map(|(p, s)| (p, s.split_whitespace().collect::<Vec<_>>()))
        .filter(|(_, s)| !s.is_empty())
        .collect();
    entries.sort_by(|a, b| b.1.len().cmp(&a.1.len()).then(a.0.cmp(b.0)));
    let mut out: Vec<String> = tokens.to_vec();
    for (placeholder, surface) in entries {
        let n = surface.len();
        if n > out.len() {
            continue;
        }
        if let Some(start) = (0..=out.len() - n).find(|&i| {
            out[i..i + n]
                .iter()
                .zip(&surface)
                .all(|(a, b)| a.eq_ignore_ascii_case(b))
        }) {
            out.splice(start..start + n, std::iter::once(placeholder.clone()));
        }
    }
    out
}

/// Substitute placeholders with their stored surface strings. Returns the
/// restored tokens and how many placeholder-shaped tokens had no entry.
pub fn deanonymize(tokens: &[String], table: &AnonTable) -> (Vec<String>, usize) {
    let mut out = Vec::with_capacity(tokens.len());
    let mut missing = 0;
    for t in tokens {
        match table.get(t) {
            Some(surface) if !surface.is_empty() => {
                out.extend(surface.split_whitespace().map(str::to_string));
            }
            Some(_) => out.push(t.clone()),
            None => {
                if is_placeholder(t) {
                    missing += 1;
                }
                out.push(t.clone());
            }
        }
    }
    (out, missing)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::amr::penman::parse_penman;

    fn toks(s: &str) -> Vec<String> {
        s.split_whitespace().map(str::to_string).collect()
    }

    #[test]
    fn single_person_entity() {
        let g = parse_penman(r#"(w / win-01 :ARG0 (p / person :name (n / name :op1 "Obama")))"#).unwrap();
        let (a, table) = anonymize(&g);
        assert_eq!(a.concept("p"), Some("person_0"));
        assert_eq!(table.get("person_0").map(String::as_str), Some("Obama"));
        assert!(a.concept("n").is_none());
        assert_eq!(a.edges().len(), 1);
    }

    #[test]
    fn figure_one_is_unchanged() {
        let g = parse_penman("(g / give-01 :ARG0 (i / I) :ARG1 (b / ball) :ARG2 (d / dog))").unwrap();
        let (a, table) = anonymize(&g);
        assert_eq!(a, g);
        assert!(table.is_empty());
    }

    #[test]
    fn two_people_are_indexed_in_order() {
        let g = parse_penman(
            r#"(m / meet-03 :ARG0 (p / person :name (n / name :op1 "Ada" :op2 "Lovelace"))
                :ARG1 (p2 / person :name (n2 / name :op1 "Alan")) :location (c / city :wiki - :name (n3 / name :op1 "Paris")))"#,
        )
        .unwrap();
        let (a, table) = anonymize(&g);
        assert_eq!(a.concept("p"), Some("person_0"));
        assert_eq!(a.concept("p2"), Some("person_1"));
        assert_eq!(a.concept("c"), Some("city_0"));
        assert_eq!(table["person_0"], "Ada Lovelace");
        assert_eq!(table["person_1"], "Alan");
        assert_eq!(table.len(), 3);
        assert!(!a.edges().iter().any(|e| e.role == ":wiki"));
    }

    #[test]
    fn dates_and_quantities() {
        let g = parse_penman("(b / buy-01 :ARG1 (a / apple :quant 3) :time (d / date-entity :year 2010))").unwrap();
        let (a, table) = anonymize(&g);
        assert_eq!(a.concept("d"), Some("date_0"));
        assert_eq!(table["date_0"], "2010");
        assert_eq!(table["quantity_0"], "3");
        assert!(a
            .edges()
            .iter()
            .any(|e| e.target == Target::Const(Constant::Symbol("quantity_0".into()))));
    }

    #[test]
    fn sentence_round_trip() {
        let g = parse_penman(
            r#"(m / meet-03 :ARG0 (p / person :name (n / name :op1 "Ada" :op2 "Lovelace")) :ARG1 (p2 / person :name (n2 / name :op1 "Alan")))"#,
        )
        .unwrap();
        let (_, table) = anonymize(&g);
        let sentence = toks("Ada Lovelace met Alan .");
        let anon = anonymize_sentence(&sentence, &table);
        assert_eq!(anon, toks("person_0 met person_1 ."));
        let (restored, missing) = deanonymize(&anon, &table);
        assert_eq!(restored, sentence);
        assert_eq!(missing, 0);
    }

    #[test]
    fn deanonymize_cases() {
        let mut table = AnonTable::new();
        table.insert("person_0".into(), "Obama".into());
        assert_eq!(deanonymize(&toks("person_0 won"), &table).0, toks("Obama won"));
        let empty = AnonTable::new();
        assert_eq!(deanonymize(&toks("a b"), &empty), (toks("a b"), 0));
        assert_eq!(deanonymize(&toks("city_3 won"), &table), (toks("city_3 won"), 1));
    }
}
