//! PENMAN notation reader and printer.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Constant {
    /// A double-quoted string literal (stored unescaped, without quotes).
    Str(String),
    /// Any other atom: numbers, `-`, `imperative`, ...
    Symbol(String),
}

impl Constant {
    pub fn text(&self) -> &str {
        match self {
            Constant::Str(s) | Constant::Symbol(s) => s,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Target {
    Var(String),
    Const(Constant),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Edge {
    pub source: String,
    /// Role label as written, including the leading colon (`:ARG0`).
    pub role: String,
    pub target: Target,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AmrNode {
    pub var: String,
    pub concept: String,
}

/// Rooted graph of concept nodes. Nodes and edges keep the order in which
/// they were written, which fixes the traversal order downstream.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AmrGraph {
    root: String,
    nodes: Vec<AmrNode>,
    edges: Vec<Edge>,
}

impl AmrGraph {
    pub fn new(root: String, nodes: Vec<AmrNode>, edges: Vec<Edge>) -> Result<Self> {
        let g = AmrGraph { root, nodes, edges };
        g.validate()?;
        Ok(g)
    }

    pub fn root(&self) -> &str {
        &self.root
    }

    pub fn nodes(&self) -> &[AmrNode] {
        &self.nodes
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn concept(&self, var: &str) -> Option<&str> {
        self.nodes.iter().find(|n| n.var == var).map(|n| n.concept.as_str())
    }

    pub fn outgoing<'a>(&'a self, var: &'a str) -> impl Iterator<Item = &'a Edge> + 'a {
        self.edges.iter().filter(move |e| e.source == var)
    }

    pub fn in_degree(&self, var: &str) -> usize {
        self.edges
            .iter()
            .filter(|e| matches!(&e.target, Target::Var(v) if v == var))
            .count()
    }

    pub(crate) fn parts_mut(&mut self) -> (&mut Vec<AmrNode>, &mut Vec<Edge>) {
        (&mut self.nodes, &mut self.edges)
    }

    pub(crate) fn validate(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for n in &self.nodes {
            if !seen.insert(n.var.as_str()) {
                return Err(Error::Structure(format!("duplicate variable {}", n.var)));
            }
        }
        if !seen.contains(self.root.as_str()) {
            return Err(Error::Structure(format!("root {} is not a node", self.root)));
        }
        for e in &self.edges {
            if !seen.contains(e.source.as_str()) {
                return Err(Error::Structure(format!("edge from unknown variable {}", e.source)));
            }
            if let Target::Var(v) = &e.target {
                if !seen.contains(v.as_str()) {
                    return Err(Error::Structure(format!("edge to unknown variable {v}")));
                }
            }
        }
        // acyclic + reachable
        let mut state: HashMap<&str, u8> = HashMap::new();
        self.visit_acyclic(&self.root, &mut state)?;
        if state.len() != self.nodes.len() {
            return Err(Error::Structure("graph has nodes unreachable from the root".into()));
        }
        Ok(())
    }

    fn visit_acyclic<'a>(&'a self, var: &'a str, state: &mut HashMap<&'a str, u8>) -> Result<()> {
        match state.get(var) {
            Some(1) => return Err(Error::Structure(format!("cycle through variable {var}"))),
            Some(_) => return Ok(()),
            None => {}
        }
        state.insert(var, 1);
        for e in self.outgoing(var) {
            if let Target::Var(t) = &e.target {
                self.visit_acyclic(t, state)?;
            }
        }
        state.insert(var, 2);
        Ok(())
    }

    /// Depth-first walk in annotation order. `visit` receives each edge and
    /// whether its variable target is being reached for the first time.
    pub fn walk<'a>(&'a self, mut visit: impl FnMut(Step<'a>)) {
        let mut seen = HashSet::new();
        seen.insert(self.root.as_str());
        visit(Step::Enter(&self.root));
        self.walk_from(&self.root, &mut seen, &mut visit);
        visit(Step::Exit(&self.root));
    }

    fn walk_from<'a>(&'a self, var: &'a str, seen: &mut HashSet<&'a str>, visit: &mut impl FnMut(Step<'a>)) {
        for e in self.outgoing(var) {
            match &e.target {
                Target::Var(t) if seen.insert(t.as_str()) => {
                    visit(Step::Edge(e, true));
                    visit(Step::Enter(t));
                    self.walk_from(t, seen, visit);
                    visit(Step::Exit(t));
                }
                _ => visit(Step::Edge(e, false)),
            }
        }
    }
}

/// Event in a depth-first walk of an [`AmrGraph`].
#[derive(Clone, Copy, Debug)]
pub enum Step<'a> {
    Enter(&'a str),
    Exit(&'a str),
    /// An edge; the flag is true when it leads to a not-yet-visited node.
    Edge(&'a Edge, bool),
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    LParen,
    RParen,
    Slash,
    Role(String),
    Str(String),
    Sym(String),
}

struct Lexer<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: usize,
    col: usize,
}

impl<'a> Lexer<'a> {
    fn new(text: &'a str) -> Self {
        Lexer {
            chars: text.chars().peekable(),
            line: 1,
            col: 1,
        }
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn tokens(mut self) -> Result<Vec<(Tok, usize, usize)>> {
        let mut out = Vec::new();
        while let Some(&c) = self.chars.peek() {
            let (line, col) = (self.line, self.col);
            match c {
                c if c.is_whitespace() => {
                    self.bump();
                }
                '#' => {
                    while let Some(c) = self.bump() {
                        if c == '\n' {
                            break;
                        }
                    }
                }
                '(' => {
                    self.bump();
                    out.push((Tok::LParen, line, col));
                }
                ')' => {
                    self.bump();
                    out.push((Tok::RParen, line, col));
                }
                '/' => {
                    self.bump();
                    out.push((Tok::Slash, line, col));
                }
                '"' => {
                    self.bump();
                    let mut s = String::new();
                    loop {
                        match self.bump() {
                            Some('\\') => match self.bump() {
                                Some(e) => s.push(e),
                                None => return Err(Error::parse_at(line, col, "unterminated string")),
                            },
                            Some('"') => break,
                            Some(ch) => s.push(ch),
                            None => return Err(Error::parse_at(line, col, "unterminated string")),
                        }
                    }
                    out.push((Tok::Str(s), line, col));
                }
                _ => {
                    let mut s = String::new();
                    while let Some(&ch) = self.chars.peek() {
                        if ch.is_whitespace() || ch == '(' || ch == ')' || ch == '"' {
                            break;
                        }
                        if ch == '/' && !s.is_empty() && !s.starts_with(':') {
                            break;
                        }
                        s.push(ch);
                        self.bump();
                    }
                    if s.starts_with(':') {
                        if s.len() == 1 {
                            return Err(Error::parse_at(line, col, "empty role label"));
                        }
                        out.push((Tok::Role(s), line, col));
                    } else {
                        out.push((Tok::Sym(s), line, col));
                    }
                }
            }
        }
        Ok(out)
    }
}

struct Parser {
    toks: Vec<(Tok, usize, usize)>,
    pos: usize,
    end: (usize, usize),
    nodes: Vec<AmrNode>,
    edges: Vec<Edge>,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.0)
    }

    fn here(&self) -> (usize, usize) {
        self.toks.get(self.pos).map(|t| (t.1, t.2)).unwrap_or(self.end)
    }

    fn err(&self, msg: impl std::fmt::Display) -> Error {
        let (l, c) = self.here();
        Error::parse_at(l, c, msg)
    }

    fn node(&mut self) -> Result<String> {
        if self.peek() != Some(&Tok::LParen) {
            return Err(self.err("expected '('"));
        }
        self.pos += 1;
        let var = match self.peek() {
            Some(Tok::Sym(s)) => s.clone(),
            _ => return Err(self.err("expected a variable name")),
        };
        if self.nodes.iter().any(|n| n.var == var) {
            return Err(self.err(format!("duplicate variable definition {var}")));
        }
        self.pos += 1;
        if self.peek() != Some(&Tok::Slash) {
            return Err(self.err(format!("expected '/' after variable {var}")));
        }
        self.pos += 1;
        let concept = match self.peek() {
            Some(Tok::Sym(s)) => s.clone(),
            Some(Tok::Str(s)) => s.clone(),
            _ => return Err(self.err(format!("missing concept after '/' for {var}"))),
        };
        self.pos += 1;
        self.nodes.push(AmrNode {
            var: var.clone(),
            concept,
        });
        loop {
            match self.peek() {
                Some(Tok::RParen) => {
                    self.pos += 1;
                    return Ok(var);
                }
                Some(Tok::Role(r)) => {
                    let role = r.clone();
                    self.pos += 1;
                    let target = match self.peek() {
                        Some(Tok::LParen) => Target::Var(self.node()?),
                        Some(Tok::Str(s)) => {
                            let t = Target::Const(Constant::Str(s.clone()));
                            self.pos += 1;
                            t
                        }
                        Some(Tok::Sym(s)) => {
                            let t = Target::Const(Constant::Symbol(s.clone()));
                            self.pos += 1;
                            t
                        }
                        _ => return Err(self.err(format!("missing target for role {role}"))),
                    };
                    self.edges.push(Edge {
                        source: var.clone(),
                        role,
                        target,
                    });
                }
                None => return Err(self.err("unbalanced parentheses: missing ')'")),
                Some(_) => return Err(self.err("expected a role or ')'")),
            }
        }
    }
}

/// Parse a single PENMAN expression. Bare symbols that name a variable
/// defined anywhere in the expression become re-entrant references.
pub fn parse_penman(text: &str) -> Result<AmrGraph> {
    let lexer = Lexer::new(text);
    let end = {
        let lines: Vec<&str> = text.split('\n').collect();
        (lines.len(), lines.last().map_or(0, |l| l.chars().count()) + 1)
    };
    let toks = lexer.tokens()?;
    if toks.is_empty() {
        return Err(Error::parse_at(1, 1, "empty input"));
    }
    let mut p = Parser {
        toks,
        pos: 0,
        end,
        nodes: Vec::new(),
        edges: Vec::new(),
    };
    let root = p.node()?;
    if p.pos != p.toks.len() {
        let msg = if p.peek() == Some(&Tok::RParen) {
            "unbalanced parentheses: unexpected ')'"
        } else {
            "trailing material after the graph"
        };
        return Err(p.err(msg));
    }
    let vars: HashSet<String> = p.nodes.iter().map(|n| n.var.clone()).collect();
    let mut edges = Vec::with_capacity(p.edges.len());
    for mut e in p.edges {
        if let Target::Const(Constant::Symbol(s)) = &e.target {
            if vars.contains(s) {
                e.target = Target::Var(s.clone());
            }
        }
        edges.push(e);
    }
    AmrGraph::new(root, p.nodes, edges).map_err(|e| match e {
        Error::Structure(m) => Error::parse_at(1, 1, m),
        other => other,
    })
}

fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        if c == '"' || c == '\\' {
            out.push('\\');
        }
        out.push(c);
    }
    out.push('"');
    out
}

fn print_constant(c: &Constant) -> String {
    match c {
        Constant::Str(s) => quote(s),
        Constant::Symbol(s) => s.clone(),
    }
}

/// Print in a normal form: one edge per line, four-space indentation,
/// annotation order.
pub fn print_penman(g: &AmrGraph) -> String {
    let mut out = String::new();
    let mut depth = 0usize;
    g.walk(|step| match step {
        Step::Enter(v) => {
            let _ = write!(out, "({} / {}", v, g.concept(v).unwrap_or(""));
            depth += 1;
        }
        Step::Exit(_) => {
            out.push(')');
            depth -= 1;
        }
        Step::Edge(e, expands) => {
            out.push('\n');
            out.push_str(&"    ".repeat(depth));
            out.push_str(&e.role);
            out.push(' ');
            if !expands {
                match &e.target {
                    Target::Var(v) => out.push_str(v),
                    Target::Const(c) => out.push_str(&print_constant(c)),
                }
            }
        }
    });
    out
}
