mod common;

use amrgen::amr::{parse_penman, print_penman};
use amrgen::corpus::synthetic;
use amrgen::eval::{align_terminals, corpus_bleu, span_f1};
use amrgen::syntax::{delinearize, format_actions, linearize_tree, parse_actions, ActionAutomaton, ActionKind};
use common::oracles::{bracket, edit_distance, random_tags, random_tree, span_oracle};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn trees_survive_linearization(seed in any::<u64>()) {
        let t = random_tree(&mut rng(seed), 5, 12);
        let actions = linearize_tree(&t);
        prop_assert_eq!(&delinearize(&actions).unwrap(), &t);
        prop_assert_eq!(parse_actions(&format_actions(&actions)).unwrap(), actions);
    }

    #[test]
    fn alignment_is_a_minimal_edit_script(seed in any::<u64>()) {
        let mut r = rng(seed);
        let a = random_tags(&mut r, 12, 4);
        let b = random_tags(&mut r, 12, 4);
        let al = align_terminals(&a, &b);
        prop_assert_eq!(al.edits(), edit_distance(&a, &b));
        for w in al.pairs.windows(2) {
            prop_assert!(w[0].0 < w[1].0 && w[0].1 < w[1].1);
        }
        for &(i, j) in &al.pairs {
            prop_assert_eq!(a[i], b[j]);
        }
    }

    #[test]
    fn span_f1_is_symmetric(seed in any::<u64>()) {
        let mut r = rng(seed);
        let a = random_tree(&mut r, 4, 8);
        let b = random_tree(&mut r, 4, 8);
        for labelled in [true, false] {
            let ab = span_f1(&a, &b, labelled);
            let ba = span_f1(&b, &a, labelled);
            prop_assert!((ab.f1 - ba.f1).abs() < 1e-12);
            prop_assert!((ab.precision - ba.recall).abs() < 1e-12);
        }
        prop_assert!(span_f1(&a, &b, false).f1 >= span_f1(&a, &b, true).f1);
    }

    #[test]
    fn span_f1_matches_enumeration(seed in any::<u64>()) {
        let mut r = rng(seed);
        let a = random_tree(&mut r, 4, 9);
        let leaves: Vec<String> = a.terminals().iter().map(|s| s.to_string()).collect();
        let b = bracket(&mut r, &leaves, 4);
        for labelled in [true, false] {
            let (m, p, g) = span_oracle(&a, &b, labelled);
            let got = span_f1(&a, &b, labelled);
            prop_assert!((got.f1 - common::oracles::f1(m, p, g)).abs() < 1e-12);
        }
        prop_assert!((span_f1(&a, &a, true).f1 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bleu_ignores_sentence_order(seed in any::<u64>()) {
        let mut r = rng(seed);
        let words = ["a", "b", "c", "d", "e"];
        let n = r.gen_range(1..6);
        let mut pairs: Vec<(Vec<&str>, Vec<&str>)> = (0..n)
            .map(|_| {
                let h = (0..r.gen_range(1..10)).map(|_| words[r.gen_range(0..5)]).collect();
                let f = (0..r.gen_range(1..10)).map(|_| words[r.gen_range(0..5)]).collect();
                (h, f)
            })
            .collect();
        let score = |p: &[(Vec<&str>, Vec<&str>)]| {
            let h: Vec<Vec<&str>> = p.iter().map(|x| x.0.clone()).collect();
            let f: Vec<Vec<&str>> = p.iter().map(|x| x.1.clone()).collect();
            corpus_bleu(&h, &f).unwrap()
        };
        let before = score(&pairs);
        pairs.shuffle(&mut r);
        prop_assert!((score(&pairs) - before).abs() < 1e-9);
        prop_assert!((0.0..=100.0).contains(&before));
    }
}

#[test]
fn automaton_rollouts_always_close() {
    let mut r = rng(17);
    let kinds = [ActionKind::Open, ActionKind::Terminal, ActionKind::Close];
    for _ in 0..10_000 {
        let max_actions = r.gen_range(3..80);
        let max_depth = r.gen_range(1..8);
        let mut a = ActionAutomaton::new(max_depth, max_actions);
        let mut seq = Vec::new();
        while !a.is_finished() {
            let p = a.permitted().unwrap();
            let allowed: Vec<ActionKind> = kinds.iter().copied().filter(|k| p.allows(*k)).collect();
            assert!(!allowed.is_empty(), "dead end after {seq:?}");
            let k = *allowed.choose(&mut r).unwrap();
            a.apply(k).unwrap();
            seq.push(match k {
                ActionKind::Open => amrgen::syntax::Action::Open("S".into()),
                ActionKind::Terminal => amrgen::syntax::Action::Terminal("NN".into()),
                ActionKind::Close => amrgen::syntax::Action::Close,
            });
        }
        assert!(seq.len() <= max_actions);
        let t = delinearize(&seq).unwrap();
        assert!(t.depth() <= max_depth + 1);
    }
}

#[test]
fn penman_printing_is_idempotent_on_the_corpus() {
    let c = synthetic::generate(synthetic::DEFAULT_SEED);
    for t in c.train.iter().chain(&c.dev).chain(&c.test).chain(&c.oov) {
        let once = print_penman(&parse_penman(&t.amr).unwrap());
        let twice = print_penman(&parse_penman(&once).unwrap());
        assert_eq!(once, twice, "{}", t.id);
        assert_eq!(parse_penman(&once).unwrap(), parse_penman(&t.amr).unwrap());
    }
}
