mod common;

use amrgen::model::{is_role_or_bracket, prepare_example, Architecture, NoiseConfig, UNK};
use amrgen::train::{train, Checkpoint, TrainConfig, FORMAT_VERSION, MAGIC};
use amrgen::Error;
use common::{fresh_model, synthetic_examples};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn tiny_config(task: Architecture, epochs: usize, seed: u64) -> TrainConfig {
    TrainConfig {
        task,
        epochs,
        seed,
        hidden: 8,
        embedding: 4,
        batch_size: 4,
        lr: 0.01,
        ..TrainConfig::default()
    }
}

#[test]
fn singleton_noise_rate_is_one_half() {
    let examples = synthetic_examples(150);
    let model = fresh_model(Architecture::Joint, 4, 8, &examples, 1);
    let v = &model.vocab;
    let noise = NoiseConfig {
        singleton_word: 0.5,
        pos: 0.0,
        amr_concept: 0.0,
    };
    // one draw per distinct singleton word per example visit
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut hidden, mut draws) = (0usize, 0usize);
    'outer: loop {
        for ex in &examples {
            let singles: Vec<usize> = ex
                .sentence_tokens
                .iter()
                .enumerate()
                .filter(|(_, w)| v.words.get(w).is_some_and(|id| v.words.count(id) == 1))
                .map(|(i, _)| i)
                .collect();
            if singles.is_empty() {
                continue;
            }
            let p = prepare_example(v, ex, &noise, Some(&mut rng));
            for i in singles {
                draws += 1;
                hidden += usize::from(p.text_ids[i] == UNK);
            }
            if draws >= 10_000 {
                break 'outer;
            }
        }
    }
    let rate = hidden as f64 / draws as f64;
    assert!((rate - 0.5).abs() < 0.02, "rate {rate} over {draws} draws");
}

#[test]
fn concept_and_pos_noise_spare_structure() {
    let examples = synthetic_examples(60);
    let model = fresh_model(Architecture::Joint, 4, 8, &examples, 1);
    let noise = NoiseConfig {
        singleton_word: 0.0,
        pos: 0.5,
        amr_concept: 0.5,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut concepts, mut concept_unk) = (0usize, 0usize);
    for _ in 0..20 {
        for ex in &examples {
            let clean = prepare_example(&model.vocab, ex, &NoiseConfig::NONE, None);
            let p = prepare_example(&model.vocab, ex, &noise, Some(&mut rng));
            for (t, &id) in ex.amr_tokens.iter().zip(&p.amr_ids) {
                if is_role_or_bracket(t) {
                    assert_ne!(id, UNK, "{t} was replaced");
                } else {
                    concepts += 1;
                    concept_unk += usize::from(id == UNK);
                }
            }
            // targets are never noised; non-terminal inputs never change
            assert_eq!(p.action_targets, clean.action_targets);
            for (a, (&n, &c)) in ex.parse_actions.iter().zip(p.parse_ids.iter().zip(&clean.parse_ids)) {
                if !matches!(a, amrgen::syntax::Action::Terminal(_)) {
                    assert_eq!(n, c);
                }
            }
            assert_eq!(&p.action_inputs[1..], &p.parse_ids[..p.parse_ids.len() - 1]);
        }
    }
    let rate = concept_unk as f64 / concepts as f64;
    assert!((rate - 0.5).abs() < 0.03, "concept rate {rate}");
}

#[test]
fn zero_noise_is_the_identity() {
    let examples = synthetic_examples(40);
    let model = fresh_model(Architecture::Joint, 4, 8, &examples, 1);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for ex in &examples {
        let a = prepare_example(&model.vocab, ex, &NoiseConfig::NONE, Some(&mut rng));
        let b = prepare_example(&model.vocab, ex, &NoiseConfig::NONE, None);
        assert_eq!(a, b);
    }
}

#[test]
fn same_seed_same_history() {
    let examples = synthetic_examples(12);
    let cfg = tiny_config(Architecture::Joint, 2, 11);
    let a = train(&cfg, &examples, &examples[..3], |_| {}).unwrap();
    let b = train(&cfg, &examples, &examples[..3], |_| {}).unwrap();
    assert_eq!(a.history, b.history);
    assert_eq!(
        a.model.params.iter().collect::<Vec<_>>(),
        b.model.params.iter().collect::<Vec<_>>()
    );
    let c = train(&TrainConfig { seed: 12, ..cfg }, &examples, &examples[..3], |_| {}).unwrap();
    assert_ne!(a.history[0].train_nll, c.history[0].train_nll);
}

#[test]
fn epoch_callback_sees_every_record() {
    let examples = synthetic_examples(8);
    let cfg = tiny_config(Architecture::AmrToParse, 3, 2);
    let mut seen = Vec::new();
    let out = train(&cfg, &examples, &examples[..2], |r| seen.push(r.clone())).unwrap();
    assert_eq!(seen, out.history);
    assert_eq!(seen.iter().map(|r| r.epoch).collect::<Vec<_>>(), vec![1, 2, 3]);
    let best = out
        .history
        .iter()
        .map(|r| r.dev_metric)
        .fold(f64::NEG_INFINITY, f64::max);
    assert_eq!(out.best_metric, best);
    assert_eq!(out.history[out.best_epoch - 1].dev_metric, best);
}

#[test]
fn empty_dev_set_is_a_config_error() {
    let examples = synthetic_examples(4);
    let r = train(&tiny_config(Architecture::Joint, 1, 1), &examples, &[], |_| {});
    assert!(matches!(r, Err(Error::Config(_))));
}

#[test]
fn exploding_updates_report_divergence() {
    let examples = synthetic_examples(6);
    let cfg = TrainConfig {
        lr: 1e300,
        ..tiny_config(Architecture::UnconditionalLm, 3, 1)
    };
    let r = train(&cfg, &examples, &examples[..2], |_| {});
    assert!(matches!(r, Err(Error::Divergence(_))), "{:?}", r.err());
}

fn trained_checkpoint() -> (Checkpoint, Vec<amrgen::corpus::Example>) {
    let examples = synthetic_examples(10);
    let cfg = tiny_config(Architecture::Joint, 1, 3);
    let out = train(&cfg, &examples, &examples[..2], |_| {}).unwrap();
    (out.into_checkpoint(&cfg), examples)
}

#[test]
fn checkpoint_round_trip_is_bit_identical() {
    let (ck, examples) = trained_checkpoint();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.ckpt");
    ck.save(&path).unwrap();
    let back = Checkpoint::load(&path).unwrap();
    assert_eq!(back.model.config, ck.model.config);
    assert_eq!(back.train_config, ck.train_config);
    assert_eq!(back.meta, ck.meta);
    for ((na, ta), (nb, tb)) in ck.model.params.iter().zip(back.model.params.iter()) {
        assert_eq!(na, nb);
        assert_eq!(ta.shape(), tb.shape());
        let bits = |t: &amrgen::tensor::Tensor| t.data().iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(ta), bits(tb), "{na}");
    }
    for ex in &examples {
        let pa = prepare_example(&ck.model.vocab, ex, &NoiseConfig::NONE, None);
        let pb = prepare_example(&back.model.vocab, ex, &NoiseConfig::NONE, None);
        assert_eq!(pa, pb);
        let (a, b) = (
            ck.model.joint_log_likelihood(&pa).unwrap(),
            back.model.joint_log_likelihood(&pb).unwrap(),
        );
        assert_eq!(a.0.to_bits(), b.0.to_bits());
        assert_eq!(a.1.to_bits(), b.1.to_bits());
    }
    assert_eq!(back.to_bytes().unwrap(), ck.to_bytes().unwrap());
}

#[test]
fn damaged_checkpoints_are_rejected() {
    let (ck, _) = trained_checkpoint();
    let bytes = ck.to_bytes().unwrap();
    assert_eq!(&bytes[..4], MAGIC);
    for cut in [0, 3, 4, 11, 40, bytes.len() / 2, bytes.len() - 1] {
        assert!(
            matches!(Checkpoint::from_bytes(&bytes[..cut]), Err(Error::Checkpoint(_))),
            "cut at {cut}"
        );
    }
    let mut bad = bytes.clone();
    bad[0] = b'X';
    assert!(matches!(Checkpoint::from_bytes(&bad), Err(Error::Checkpoint(_))));
    let mut bad = bytes.clone();
    bad[4..8].copy_from_slice(&(FORMAT_VERSION + 1).to_le_bytes());
    assert!(matches!(Checkpoint::from_bytes(&bad), Err(Error::Checkpoint(_))));
    let mut bad = bytes.clone();
    bad.push(0);
    assert!(matches!(Checkpoint::from_bytes(&bad), Err(Error::Checkpoint(_))));
    let missing = tempfile::tempdir().unwrap().path().join("none.ckpt");
    assert!(matches!(Checkpoint::load(&missing), Err(Error::Checkpoint(_))));
}

#[test]
fn wrong_task_checkpoint_is_a_usage_error() {
    let (ck, _) = trained_checkpoint();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("joint.ckpt");
    ck.save(&path).unwrap();
    assert!(Checkpoint::load_for(&path, &[Architecture::Joint]).is_ok());
    let r = Checkpoint::load_for(&path, &[Architecture::BaselineCopy]);
    assert!(matches!(r, Err(Error::Usage(_))));
}
