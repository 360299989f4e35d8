//! Template generator for a small English corpus of aligned AMR graphs,
//! PTB parses and sentences.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::syntax::Tree;

pub const DEFAULT_SEED: u64 = 7;
pub const TRAIN_SIZE: usize = 150;
pub const OVERFIT_SIZE: usize = 50;
pub const DEV_SIZE: usize = 25;
pub const TEST_SIZE: usize = 25;
pub const OOV_SIZE: usize = 10;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Triple {
    pub id: String,
    pub amr: String,
    pub parse: String,
    pub sentence: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SyntheticCorpus {
    pub train: Vec<Triple>,
    pub dev: Vec<Triple>,
    pub test: Vec<Triple>,
    /// Sentences whose object noun never occurs in `train`.
    pub oov: Vec<Triple>,
}

struct Verb {
    frame: &'static str,
    base: &'static str,
    past: &'static str,
    third: &'static str,
}

const fn v(frame: &'static str, base: &'static str, past: &'static str, third: &'static str) -> Verb {
    Verb {
        frame,
        base,
        past,
        third,
    }
}

const TRANSITIVE: &[Verb] = &[
    v("see-01", "see", "saw", "sees"),
    v("like-01", "like", "liked", "likes"),
    v("find-01", "find", "found", "finds"),
    v("eat-01", "eat", "ate", "eats"),
    v("buy-01", "buy", "bought", "buys"),
    v("read-01", "read", "read", "reads"),
    v("carry-01", "carry", "carried", "carries"),
    v("watch-01", "watch", "watched", "watches"),
    v("follow-02", "follow", "followed", "follows"),
];

const INTRANSITIVE: &[Verb] = &[
    v("sleep-01", "sleep", "slept", "sleeps"),
    v("run-02", "run", "ran", "runs"),
    v("arrive-01", "arrive", "arrived", "arrives"),
    v("laugh-01", "laugh", "laughed", "laughs"),
    v("sing-01", "sing", "sang", "sings"),
];

const DITRANSITIVE: &[Verb] = &[
    v("give-01", "give", "gave", "gives"),
    v("send-01", "send", "sent", "sends"),
    v("show-01", "show", "showed", "shows"),
    v("offer-01", "offer", "offered", "offers"),
];

const WANT: Verb = v("want-01", "want", "wanted", "wants");

const AGENTS: &[&str] = &[
    "boy", "girl", "man", "woman", "teacher", "doctor", "child", "farmer", "student", "soldier", "dog", "cat",
];
const THINGS: &[&str] = &[
    "ball", "book", "apple", "letter", "car", "box", "key", "gift", "picture", "cake",
];
const ADJECTIVES: &[&str] = &["big", "small", "red", "old", "happy", "new"];
const PERSONS: &[&str] = &["John", "Mary", "Alice", "Peter", "Anna", "David", "Sarah", "Tom"];
const CITIES: &[&[&str]] = &[
    &["Paris"],
    &["London"],
    &["Berlin"],
    &["Rome"],
    &["Madrid"],
    &["New", "York"],
];

const TRAIN_RARE: &[&str] = &[
    "violin", "lantern", "compass", "kettle", "saddle", "trumpet", "anchor", "basket", "candle", "feather", "helmet",
    "ladder", "mirror", "pillow", "ribbon", "shovel", "statue", "tablet", "teapot", "wallet", "whistle", "blanket",
    "bucket", "carpet", "drum", "hammer", "jacket", "magnet", "necklace", "parcel",
];
const DEV_RARE: &[&str] = &[
    "penguin", "lobster", "cactus", "glove", "harp", "quilt", "scarf", "sponge", "torch", "vase",
];
const TEST_RARE: &[&str] = &[
    "walrus", "flute", "kite", "crown", "lamp", "rope", "spoon", "tent", "wagon", "barrel",
];
const OOV_NOUNS: &[&str] = &[
    "zebra", "giraffe", "tractor", "umbrella", "volcano", "banjo", "kayak", "pelican", "rocket", "tulip",
];

/// (AMR concept, nominative, accusative, third person singular)
const PRONOUNS: &[(&str, &str, &str, bool)] = &[
    ("i", "I", "me", false),
    ("you", "you", "you", false),
    ("he", "he", "him", true),
    ("she", "she", "her", true),
    ("they", "they", "them", false),
];

fn plural(noun: &str) -> String {
    match noun {
        "child" => "children".into(),
        "man" => "men".into(),
        "woman" => "women".into(),
        n if n.ends_with('x') || n.ends_with("ch") || n.ends_with("sh") || n.ends_with('s') => format!("{n}es"),
        n => format!("{n}s"),
    }
}

#[derive(Clone)]
enum Np {
    Pronoun(usize),
    Person(&'static str),
    City(&'static [&'static str]),
    Common {
        noun: String,
        det: &'static str,
        adj: Option<&'static str>,
        quant: Option<u32>,
    },
}

impl Np {
    fn third_singular(&self) -> bool {
        match self {
            Np::Pronoun(p) => PRONOUNS[*p].3,
            Np::Person(_) | Np::City(_) => true,
            Np::Common { quant, .. } => quant.is_none(),
        }
    }
}

/// Minimal AMR builder printed straight to PENMAN.
enum Amr {
    Node {
        var: String,
        concept: String,
        edges: Vec<(&'static str, Amr)>,
    },
    Ref(String),
    Const(String),
    Str(String),
}

impl Amr {
    fn write(&self, out: &mut String) {
        match self {
            Amr::Node { var, concept, edges } => {
                write!(out, "({var} / {concept}").unwrap();
                for (role, t) in edges {
                    write!(out, " {role} ").unwrap();
                    t.write(out);
                }
                out.push(')');
            }
            Amr::Ref(v) | Amr::Const(v) => out.push_str(v),
            Amr::Str(s) => write!(out, "\"{s}\"").unwrap(),
        }
    }

    fn var(&self) -> &str {
        match self {
            Amr::Node { var, .. } => var,
            _ => unreachable!("only nodes carry variables"),
        }
    }
}

#[derive(Default)]
struct Vars(HashMap<char, usize>);

impl Vars {
    fn fresh(&mut self, concept: &str) -> String {
        let c = concept.chars().next().unwrap_or('x');
        let n = self.0.entry(c).or_insert(0);
        *n += 1;
        if *n == 1 {
            c.to_string()
        } else {
            format!("{c}{n}")
        }
    }

    fn node(&mut self, concept: &str, edges: Vec<(&'static str, Amr)>) -> Amr {
        Amr::Node {
            var: self.fresh(concept),
            concept: concept.to_string(),
            edges,
        }
    }
}

fn pt(pos: &str, word: &str) -> Tree {
    Tree::preterminal(pos, word)
}

fn np_amr(np: &Np, vars: &mut Vars) -> Amr {
    match np {
        Np::Pronoun(p) => vars.node(PRONOUNS[*p].0, vec![]),
        Np::Person(name) => {
            let n = vars.node("name", vec![(":op1", Amr::Str(name.to_string()))]);
            vars.node("person", vec![(":name", n)])
        }
        Np::City(words) => {
            const OPS: [&str; 3] = [":op1", ":op2", ":op3"];
            let ops = words
                .iter()
                .enumerate()
                .map(|(i, w)| (OPS[i], Amr::Str(w.to_string())))
                .collect();
            let n = vars.node("name", ops);
            vars.node("city", vec![(":name", n)])
        }
        Np::Common { noun, adj, quant, .. } => {
            let mut edges = Vec::new();
            if let Some(a) = adj {
                edges.push((":mod", vars.node(a, vec![])));
            }
            if let Some(q) = quant {
                edges.push((":quant", Amr::Const(q.to_string())));
            }
            vars.node(noun, edges)
        }
    }
}

fn np_tree(np: &Np, object: bool) -> Tree {
    match np {
        Np::Pronoun(p) => {
            let (_, nom, acc, _) = PRONOUNS[*p];
            Tree::node("NP", vec![pt("PRP", if object { acc } else { nom })])
        }
        Np::Person(name) => Tree::node("NP", vec![pt("NNP", name)]),
        Np::City(words) => Tree::node("NP", words.iter().map(|w| pt("NNP", w)).collect()),
        Np::Common { noun, det, adj, quant } => {
            let mut kids = Vec::new();
            match quant {
                Some(q) => kids.push(pt("CD", &q.to_string())),
                None => {
                    let next = adj.unwrap_or(noun);
                    let det = if *det == "a" && next.starts_with(['a', 'e', 'i', 'o', 'u']) {
                        "an"
                    } else {
                        det
                    };
                    kids.push(pt("DT", det))
                }
            }
            if let Some(a) = adj {
                kids.push(pt("JJ", a));
            }
            match quant {
                Some(_) => kids.push(pt("NNS", &plural(noun))),
                None => kids.push(pt("NN", noun)),
            }
            Tree::node("NP", kids)
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Frame {
    Intransitive,
    Transitive,
    Ditransitive { dative: bool },
    Want { inner_transitive: bool },
}

struct Clause {
    frame: Frame,
    verb: &'static Verb,
    inner: Option<&'static Verb>,
    subj: Np,
    obj: Option<Np>,
    recipient: Option<Np>,
    past: bool,
    negated: bool,
    location: Option<Np>,
    year: Option<u32>,
}

struct Sampler<'a> {
    rng: ChaCha8Rng,
    rare: &'a [&'static str],
    next_rare: usize,
    forced_object: Option<&'static str>,
}

impl Sampler<'_> {
    fn common(&mut self, pool: &[&'static str], allow_rare: bool) -> Np {
        let forced = if allow_rare { self.forced_object.take() } else { None };
        let mut rare = forced.is_some();
        let noun = if let Some(n) = forced {
            n.to_string()
        } else if allow_rare && self.next_rare < self.rare.len() && self.rng.gen_bool(0.2) {
            self.next_rare += 1;
            rare = true;
            self.rare[self.next_rare - 1].to_string()
        } else {
            pool.choose(&mut self.rng).unwrap().to_string()
        };
        // rare nouns stay singular so their surface form matches the concept
        let quant = if !rare && self.rng.gen_bool(0.15) {
            Some(self.rng.gen_range(2..10))
        } else {
            None
        };
        Np::Common {
            noun,
            det: if self.rng.gen_bool(0.6) { "the" } else { "a" },
            adj: if self.rng.gen_bool(0.25) {
                Some(ADJECTIVES.choose(&mut self.rng).unwrap())
            } else {
                None
            },
            quant,
        }
    }

    fn agent(&mut self, used_names: &mut HashSet<&'static str>) -> Np {
        let r: f64 = self.rng.gen();
        if r < 0.25 {
            Np::Pronoun(self.rng.gen_range(0..PRONOUNS.len()))
        } else if r < 0.45 {
            let name = *PERSONS.choose(&mut self.rng).unwrap();
            if used_names.insert(name) {
                Np::Person(name)
            } else {
                self.common(AGENTS, false)
            }
        } else {
            self.common(AGENTS, false)
        }
    }

    fn thing(&mut self) -> Np {
        self.common(THINGS, true)
    }

    fn clause(&mut self) -> Clause {
        let mut names = HashSet::new();
        let r: f64 = self.rng.gen();
        let frame = if self.forced_object.is_some() || r < 0.35 {
            Frame::Transitive
        } else if r < 0.6 {
            Frame::Ditransitive {
                dative: self.rng.gen_bool(0.5),
            }
        } else if r < 0.8 {
            Frame::Intransitive
        } else {
            Frame::Want {
                inner_transitive: self.rng.gen_bool(0.5),
            }
        };
        let subj = self.agent(&mut names);
        let (verb, inner, obj, recipient) = match frame {
            Frame::Intransitive => (INTRANSITIVE.choose(&mut self.rng).unwrap(), None, None, None),
            Frame::Transitive => {
                let obj = if self.forced_object.is_none() && self.rng.gen_bool(0.15) {
                    let mut o = self.agent(&mut names);
                    if let Np::Pronoun(p) = o {
                        // avoid "I saw me"
                        if matches!(subj, Np::Pronoun(q) if q == p) {
                            o = self.thing();
                        }
                    }
                    o
                } else {
                    self.thing()
                };
                (TRANSITIVE.choose(&mut self.rng).unwrap(), None, Some(obj), None)
            }
            Frame::Ditransitive { .. } => {
                let obj = self.thing();
                let mut rec = self.agent(&mut names);
                if matches!((&subj, &rec), (Np::Pronoun(a), Np::Pronoun(b)) if a == b) {
                    rec = self.common(AGENTS, false);
                }
                (DITRANSITIVE.choose(&mut self.rng).unwrap(), None, Some(obj), Some(rec))
            }
            Frame::Want { inner_transitive } => {
                if inner_transitive {
                    (
                        &WANT,
                        Some(TRANSITIVE.choose(&mut self.rng).unwrap()),
                        Some(self.thing()),
                        None,
                    )
                } else {
                    (&WANT, Some(INTRANSITIVE.choose(&mut self.rng).unwrap()), None, None)
                }
            }
        };
        let location = if self.rng.gen_bool(0.15) {
            Some(Np::City(CITIES.choose(&mut self.rng).unwrap()))
        } else {
            None
        };
        let year = if self.rng.gen_bool(0.1) {
            Some(self.rng.gen_range(1990..2021))
        } else {
            None
        };
        Clause {
            frame,
            verb,
            inner,
            subj,
            obj,
            recipient,
            past: self.rng.gen_bool(0.5),
            negated: self.rng.gen_bool(0.15),
            location,
            year,
        }
    }
}

fn render(c: &Clause) -> (String, String, String) {
    let mut vars = Vars::default();
    let verb_var = vars.fresh(c.verb.frame);
    let subj_amr = np_amr(&c.subj, &mut vars);
    let subj_var = subj_amr.var().to_string();
    let mut edges = vec![(":ARG0", subj_amr)];
    match c.frame {
        Frame::Want { .. } => {
            let inner = c.inner.expect("want clause has an inner verb");
            let mut inner_edges = vec![(":ARG0", Amr::Ref(subj_var))];
            if let Some(o) = &c.obj {
                inner_edges.push((":ARG1", np_amr(o, &mut vars)));
            }
            edges.push((":ARG1", vars.node(inner.frame, inner_edges)));
        }
        _ => {
            if let Some(o) = &c.obj {
                edges.push((":ARG1", np_amr(o, &mut vars)));
            }
            if let Some(r) = &c.recipient {
                edges.push((":ARG2", np_amr(r, &mut vars)));
            }
        }
    }
    if c.negated {
        edges.push((":polarity", Amr::Const("-".into())));
    }
    if let Some(l) = &c.location {
        edges.push((":location", np_amr(l, &mut vars)));
    }
    if let Some(y) = c.year {
        let d = vars.node("date-entity", vec![(":year", Amr::Const(y.to_string()))]);
        edges.push((":time", d));
    }
    let root = Amr::Node {
        var: verb_var,
        concept: c.verb.frame.to_string(),
        edges,
    };
    let mut amr = String::new();
    root.write(&mut amr);

    // Verb phrase complements.
    let mut comps = Vec::new();
    match c.frame {
        Frame::Want { .. } => {
            let inner = c.inner.unwrap();
            let mut vp = vec![pt("VB", inner.base)];
            if let Some(o) = &c.obj {
                vp.push(np_tree(o, true));
            }
            comps.push(Tree::node(
                "S",
                vec![Tree::node("VP", vec![pt("TO", "to"), Tree::node("VP", vp)])],
            ));
        }
        Frame::Ditransitive { dative } => {
            let o = np_tree(c.obj.as_ref().unwrap(), true);
            let r = np_tree(c.recipient.as_ref().unwrap(), true);
            if dative {
                comps.push(o);
                comps.push(Tree::node("PP", vec![pt("TO", "to"), r]));
            } else {
                comps.push(r);
                comps.push(o);
            }
        }
        Frame::Transitive => comps.push(np_tree(c.obj.as_ref().unwrap(), true)),
        Frame::Intransitive => {}
    }
    if let Some(l) = &c.location {
        comps.push(Tree::node("PP", vec![pt("IN", "in"), np_tree(l, true)]));
    }
    if let Some(y) = c.year {
        comps.push(Tree::node(
            "PP",
            vec![pt("IN", "in"), Tree::node("NP", vec![pt("CD", &y.to_string())])],
        ));
    }
    let third = c.subj.third_singular();
    let vp = if c.negated {
        let aux = match (c.past, third) {
            (true, _) => pt("VBD", "did"),
            (false, true) => pt("VBZ", "does"),
            (false, false) => pt("VBP", "do"),
        };
        let mut inner = vec![pt("VB", c.verb.base)];
        inner.extend(comps);
        Tree::node("VP", vec![aux, pt("RB", "not"), Tree::node("VP", inner)])
    } else {
        let head = match (c.past, third) {
            (true, _) => pt("VBD", c.verb.past),
            (false, true) => pt("VBZ", c.verb.third),
            (false, false) => pt("VBP", c.verb.base),
        };
        let mut kids = vec![head];
        kids.extend(comps);
        Tree::node("VP", kids)
    };
    let tree = Tree::node("S", vec![np_tree(&c.subj, false), vp, pt(".", ".")]);
    let sentence = tree.words().join(" ");
    (amr, format!("( {tree} )"), sentence)
}

fn split(
    rng: &mut ChaCha8Rng,
    name: &str,
    n: usize,
    rare: &[&'static str],
    forced: Option<&[&'static str]>,
    seen: &mut HashSet<String>,
) -> Vec<Triple> {
    let mut s = Sampler {
        rng: ChaCha8Rng::from_rng(&mut *rng).expect("chacha seeding never fails"),
        rare,
        next_rare: 0,
        forced_object: None,
    };
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        if let Some(f) = forced {
            s.forced_object = Some(f[out.len() % f.len()]);
        }
        let (amr, parse, sentence) = render(&s.clause());
        if !seen.insert(amr.clone()) {
            continue;
        }
        out.push(Triple {
            id: format!("synth.{name}.{:04}", out.len() + 1),
            amr,
            parse,
            sentence,
        });
    }
    out
}

pub fn generate(seed: u64) -> SyntheticCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seen = HashSet::new();
    SyntheticCorpus {
        train: split(&mut rng, "train", TRAIN_SIZE, TRAIN_RARE, None, &mut seen),
        dev: split(&mut rng, "dev", DEV_SIZE, DEV_RARE, None, &mut seen),
        test: split(&mut rng, "test", TEST_SIZE, TEST_RARE, None, &mut seen),
        oov: split(&mut rng, "oov", OOV_SIZE, &[], Some(OOV_NOUNS), &mut seen),
    }
}

/// Nouns used only in the out-of-vocabulary split.
pub fn oov_nouns() -> &'static [&'static str] {
    OOV_NOUNS
}

pub fn amr_file(triples: &[Triple]) -> String {
    let mut out = String::new();
    for t in triples {
        writeln!(out, "# ::id {}\n# ::snt {}\n{}\n", t.id, t.sentence, t.amr).unwrap();
    }
    out
}

pub fn parse_file(triples: &[Triple]) -> String {
    let mut out = String::new();
    for t in triples {
        writeln!(out, "{}", t.parse).unwrap();
    }
    out
}

/// Write `<split>.amr` and `<split>.parse` for train, train50, dev, test
/// and oov.
pub fn write_corpus(dir: &Path, corpus: &SyntheticCorpus) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let splits: [(&str, &[Triple]); 5] = [
        ("train", &corpus.train),
        ("train50", &corpus.train[..OVERFIT_SIZE]),
        ("dev", &corpus.dev),
        ("test", &corpus.test),
        ("oov", &corpus.oov),
    ];
    for (name, triples) in splits {
        std::fs::write(dir.join(format!("{name}.amr")), amr_file(triples))?;
        std::fs::write(dir.join(format!("{name}.parse")), parse_file(triples))?;
    }
    Ok(())
}
