use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::tree::Tree;
use crate::error::{Error, Result};

/// Root label used to wrap a bare single-leaf tree.
pub const WRAP_LABEL: &str = "X";

/// One step of a depth-first tree traversal. Written as `(NP`, `NN` and `)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Action {
    Open(String),
    Terminal(String),
    Close,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ActionKind {
    Open,
    Terminal,
    Close,
}

impl Action {
    pub fn kind(&self) -> ActionKind {
        match self {
            Action::Open(_) => ActionKind::Open,
            Action::Terminal(_) => ActionKind::Terminal,
            Action::Close => ActionKind::Close,
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Action::Open(l) => write!(f, "({l}"),
            Action::Terminal(p) => write!(f, "{p}"),
            Action::Close => write!(f, ")"),
        }
    }
}

impl FromStr for Action {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == ")" {
            Ok(Action::Close)
        } else if let Some(label) = s.strip_prefix('(') {
            if label.is_empty() {
                return Err(Error::Structure("OPEN action without a label".into()));
            }
            Ok(Action::Open(label.to_string()))
        } else if s.is_empty() || s.contains(char::is_whitespace) {
            Err(Error::Structure(format!("invalid action token {s:?}")))
        } else {
            Ok(Action::Terminal(s.to_string()))
        }
    }
}

impl Serialize for Action {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Action {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

pub type ActionSequence = Vec<Action>;

/// Depth-first linearization: OPEN on entry, TERMINAL per leaf, CLOSE on
/// exit. A bare leaf is wrapped in an `X` constituent first.
pub fn linearize_tree(t: &Tree) -> ActionSequence {
    let mut out = Vec::new();
    match t {
        Tree::Leaf { pos, .. } => {
            out.push(Action::Open(WRAP_LABEL.to_string()));
            out.push(Action::Terminal(pos.clone()));
            out.push(Action::Close);
        }
        _ => push_actions(t, &mut out),
    }
    out
}

fn push_actions(t: &Tree, out: &mut ActionSequence) {
    match t {
        Tree::Leaf { pos, .. } => out.push(Action::Terminal(pos.clone())),
        Tree::Node { label, children } => {
            out.push(Action::Open(label.clone()));
            for c in children {
                push_actions(c, out);
            }
            out.push(Action::Close);
        }
    }
}

/// Rebuild the tree for a well-formed action sequence.
pub fn delinearize(actions: &[Action]) -> Result<Tree> {
    if actions.is_empty() {
        return Err(Error::Structure("empty action sequence".into()));
    }
    let mut stack: Vec<(String, Vec<Tree>)> = Vec::new();
    let mut done: Option<Tree> = None;
    for (i, a) in actions.iter().enumerate() {
        if done.is_some() {
            return Err(Error::Structure(format!("action {i} follows the closed root")));
        }
        match a {
            Action::Open(label) => stack.push((label.clone(), Vec::new())),
            Action::Terminal(pos) => match stack.last_mut() {
                Some((_, children)) => children.push(Tree::leaf(pos.clone())),
                None => return Err(Error::Structure(format!("terminal at {i} before any OPEN"))),
            },
            Action::Close => {
                let (label, children) = stack
                    .pop()
                    .ok_or_else(|| Error::Structure(format!("CLOSE at {i} without an open constituent")))?;
                if children.is_empty() {
                    return Err(Error::Structure(format!("empty constituent {label} closed at {i}")));
                }
                let node = Tree::node(label, children);
                match stack.last_mut() {
                    Some((_, parent)) => parent.push(node),
                    None => done = Some(node),
                }
            }
        }
    }
    done.ok_or_else(|| Error::Structure(format!("{} constituent(s) left open", stack.len())))
}

pub fn format_actions(actions: &[Action]) -> String {
    actions.iter().map(ToString::to_string).collect::<Vec<_>>().join(" ")
}

pub fn parse_actions(s: &str) -> Result<ActionSequence> {
    s.split_whitespace().map(str::parse).collect()
}
