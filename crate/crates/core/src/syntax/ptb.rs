//! Penn-treebank bracketed parse reading and delexicalisation.

use super::tree::{offset_err, read_sexp, Sexp, Tree};
use crate::error::Result;

/// Drop functional tags and co-indices: `NP-SBJ-1` → `NP`, `NP=2` → `NP`.
/// Labels that begin with `-` (`-LRB-`, `-NONE-`) are left alone.
pub fn strip_function_tags(label: &str) -> &str {
    if label.starts_with('-') {
        return label;
    }
    let cut = label.find(['-', '=']).unwrap_or(label.len());
    if cut == 0 {
        label
    } else {
        &label[..cut]
    }
}

/// Read one lexicalised PTB parse. An unlabelled outer wrapper `( ... )` is
/// removed, trace (`-NONE-`) preterminals are dropped along with any
/// constituent they leave empty, and functional tags are stripped.
pub fn parse_ptb(text: &str) -> Result<Tree> {
    let sexp = read_sexp(text)?;
    let sexp = unwrap_outer(sexp);
    match build(text, &sexp)? {
        Some(t) => Ok(t),
        None => Err(offset_err(text, 0, "tree is empty after removing traces")),
    }
}

fn unwrap_outer(s: Sexp) -> Sexp {
    match s {
        Sexp::List(mut items, off) => {
            if items.len() == 1 && matches!(items[0], Sexp::List(..)) {
                items.pop().unwrap()
            } else {
                Sexp::List(items, off)
            }
        }
        other => other,
    }
}

fn build(text: &str, s: &Sexp) -> Result<Option<Tree>> {
    match s {
        Sexp::Atom(_, off) => Err(offset_err(text, *off, "word outside a preterminal")),
        Sexp::List(items, off) => {
            let (label, rest) = match items.split_first() {
                Some((Sexp::Atom(l, _), rest)) => (l.as_str(), rest),
                _ => return Err(offset_err(text, *off, "constituent without a label")),
            };
            if rest.is_empty() {
                return Err(offset_err(text, *off, format!("empty constituent {label}")));
            }
            if let [Sexp::Atom(word, _)] = rest {
                if label == "-NONE-" {
                    return Ok(None);
                }
                return Ok(Some(Tree::preterminal(label, word.clone())));
            }
            let mut children = Vec::with_capacity(rest.len());
            for c in rest {
                if let Sexp::Atom(_, o) = c {
                    return Err(offset_err(text, *o, "word mixed with constituents"));
                }
                if let Some(t) = build(text, c)? {
                    children.push(t);
                }
            }
            if children.is_empty() {
                return Ok(None);
            }
            Ok(Some(Tree::node(strip_function_tags(label), children)))
        }
    }
}

/// Remove the words, keeping preterminal POS tags as leaves. Returns the
/// delexicalised tree and the word sequence, aligned with its terminals.
pub fn delexicalise(t: &Tree) -> (Tree, Vec<String>) {
    let mut words = Vec::new();
    let tree = strip(t, &mut words);
    (tree, words)
}

fn strip(t: &Tree, words: &mut Vec<String>) -> Tree {
    match t {
        Tree::Leaf { pos, word } => {
            if let Some(w) = word {
                words.push(w.clone());
            }
            Tree::leaf(pos.clone())
        }
        Tree::Node { label, children } => Tree::node(label.clone(), children.iter().map(|c| strip(c, words)).collect()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;

    #[test]
    fn small_sentence() {
        let t = parse_ptb("(S (NP (PRP I)) (VP (VBD gave)))").unwrap();
        assert_eq!(t.depth(), 3);
        assert_eq!(t.words(), vec!["I", "gave"]);
        assert_eq!(t.terminals(), vec!["PRP", "VBD"]);
    }

    #[test]
    fn single_preterminal() {
        let t = parse_ptb("(NN dog)").unwrap();
        assert_eq!(t, Tree::preterminal("NN", "dog"));
    }

    #[test]
    fn outer_wrapper_is_removed() {
        let a = parse_ptb("((S (NP (PRP I)) (VP (VBD slept))))").unwrap();
        let b = parse_ptb("(S (NP (PRP I)) (VP (VBD slept)))").unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn traces_and_function_tags() {
        let t =
            parse_ptb("(S (NP-SBJ-1 (-NONE- *)) (NP-SBJ (DT the) (NN dog)) (VP (VBD slept) (-LRB- -LRB-)))").unwrap();
        assert_eq!(
            t.to_string(),
            "(S (NP (DT the) (NN dog)) (VP (VBD slept) (-LRB- -LRB-)))"
        );
    }

    #[test]
    fn errors_report_positions() {
        assert!(matches!(parse_ptb("(S (NP (DT the)"), Err(Error::Parse { .. })));
        match parse_ptb("(S (NP) (VP (VBD x)))") {
            Err(Error::Parse { column, .. }) => assert_eq!(column, 4),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn delexicalise_np() {
        let t = parse_ptb("(NP (DT the) (NN dog))").unwrap();
        let (d, words) = delexicalise(&t);
        assert_eq!(d.to_string(), "(NP DT NN)");
        assert_eq!(words, vec!["the", "dog"]);
        assert_eq!(d.terminals().len(), words.len());
        assert_eq!(d.num_nodes(), t.num_nodes());
        assert_eq!(d.depth(), t.depth());
    }

    #[test]
    fn delexicalise_preterminal() {
        let (d, words) = delexicalise(&Tree::preterminal("NN", "dog"));
        assert_eq!(d, Tree::leaf("NN"));
        assert_eq!(words, vec!["dog"]);
    }
}
