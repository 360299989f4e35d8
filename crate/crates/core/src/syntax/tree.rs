use std::fmt;

use crate::error::{Error, Result};

/// Phrase-structure tree. A lexicalised tree carries a word under every
/// preterminal; a delexicalised one has bare POS-tag leaves.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Tree {
    Node { label: String, children: Vec<Tree> },
    Leaf { pos: String, word: Option<String> },
}

impl Tree {
    pub fn node(label: impl Into<String>, children: Vec<Tree>) -> Tree {
        Tree::Node {
            label: label.into(),
            children,
        }
    }

    pub fn leaf(pos: impl Into<String>) -> Tree {
        Tree::Leaf {
            pos: pos.into(),
            word: None,
        }
    }

    pub fn preterminal(pos: impl Into<String>, word: impl Into<String>) -> Tree {
        Tree::Leaf {
            pos: pos.into(),
            word: Some(word.into()),
        }
    }

    pub fn label(&self) -> &str {
        match self {
            Tree::Node { label, .. } => label,
            Tree::Leaf { pos, .. } => pos,
        }
    }

    pub fn is_leaf(&self) -> bool {
        matches!(self, Tree::Leaf { .. })
    }

    /// POS tags of the leaves, left to right.
    pub fn terminals(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_terminals(&mut out);
        out
    }

    fn collect_terminals<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            Tree::Leaf { pos, .. } => out.push(pos),
            Tree::Node { children, .. } => children.iter().for_each(|c| c.collect_terminals(out)),
        }
    }

    /// Words under the preterminals of a lexicalised tree.
    pub fn words(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_words(&mut out);
        out
    }

    fn collect_words<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            Tree::Leaf { word: Some(w), .. } => out.push(w),
            Tree::Leaf { .. } => {}
            Tree::Node { children, .. } => children.iter().for_each(|c| c.collect_words(out)),
        }
    }

    pub fn num_nodes(&self) -> usize {
        match self {
            Tree::Leaf { .. } => 1,
            Tree::Node { children, .. } => 1 + children.iter().map(Tree::num_nodes).sum::<usize>(),
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Tree::Leaf { .. } => 1,
            Tree::Node { children, .. } => 1 + children.iter().map(Tree::depth).max().unwrap_or(0),
        }
    }

    pub fn is_lexicalised(&self) -> bool {
        match self {
            Tree::Leaf { word, .. } => word.is_some(),
            Tree::Node { children, .. } => children.iter().all(Tree::is_lexicalised),
        }
    }
}

impl fmt::Display for Tree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tree::Leaf { pos, word: None } => write!(f, "{pos}"),
            Tree::Leaf { pos, word: Some(w) } => write!(f, "({pos} {w})"),
            Tree::Node { label, children } => {
                write!(f, "({label}")?;
                for c in children {
                    write!(f, " {c}")?;
                }
                write!(f, ")")
            }
        }
    }
}

/// Bracketed s-expression with byte offsets for error reporting.
#[derive(Debug)]
pub(crate) enum Sexp {
    Atom(String, usize),
    List(Vec<Sexp>, usize),
}

pub(crate) fn read_sexp(text: &str) -> Result<Sexp> {
    let bytes: Vec<(usize, char)> = text.char_indices().collect();
    let mut pos = 0;
    let skip_ws = |pos: &mut usize| {
        while *pos < bytes.len() && bytes[*pos].1.is_whitespace() {
            *pos += 1;
        }
    };
    fn parse(text: &str, bytes: &[(usize, char)], pos: &mut usize, skip_ws: &dyn Fn(&mut usize)) -> Result<Sexp> {
        skip_ws(pos);
        let Some(&(off, c)) = bytes.get(*pos) else {
            return Err(offset_err(text, text.len(), "unexpected end of input"));
        };
        match c {
            '(' => {
                *pos += 1;
                let mut items = Vec::new();
                loop {
                    skip_ws(pos);
                    match bytes.get(*pos) {
                        None => return Err(offset_err(text, off, "unbalanced '(': missing ')'")),
                        Some((_, ')')) => {
                            *pos += 1;
                            return Ok(Sexp::List(items, off));
                        }
                        Some(_) => items.push(parse(text, bytes, pos, skip_ws)?),
                    }
                }
            }
            ')' => Err(offset_err(text, off, "unexpected ')'")),
            _ => {
                let start = *pos;
                while *pos < bytes.len() {
                    let ch = bytes[*pos].1;
                    if ch.is_whitespace() || ch == '(' || ch == ')' {
                        break;
                    }
                    *pos += 1;
                }
                let end = bytes.get(*pos).map_or(text.len(), |b| b.0);
                Ok(Sexp::Atom(text[bytes[start].0..end].to_string(), off))
            }
        }
    }
    let s = parse(text, &bytes, &mut pos, &skip_ws)?;
    skip_ws(&mut pos);
    if let Some(&(off, _)) = bytes.get(pos) {
        return Err(offset_err(text, off, "trailing material after the tree"));
    }
    Ok(s)
}

pub(crate) fn offset_err(text: &str, offset: usize, msg: impl fmt::Display) -> Error {
    let line = text[..offset].matches('\n').count() + 1;
    let column = text[..offset].rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    Error::parse_at(line, column, msg)
}

/// Read a delexicalised tree such as `(S (NP DT NN) (VP VBD))`.
pub fn parse_delex(text: &str) -> Result<Tree> {
    fn build(text: &str, s: &Sexp) -> Result<Tree> {
        match s {
            Sexp::Atom(a, _) => Ok(Tree::leaf(a.clone())),
            Sexp::List(items, off) => {
                let (label, rest) = match items.split_first() {
                    Some((Sexp::Atom(l, _), rest)) => (l.clone(), rest),
                    _ => return Err(offset_err(text, *off, "constituent without a label")),
                };
                if rest.is_empty() {
                    return Err(offset_err(text, *off, format!("empty constituent {label}")));
                }
                let children = rest.iter().map(|c| build(text, c)).collect::<Result<_>>()?;
                Ok(Tree::node(label, children))
            }
        }
    }
    build(text, &read_sexp(text)?)
}
