use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

const AMR: &str = "\
# ::id toy.1
# ::snt The boy wants to go .
(w / want-01 :ARG0 (b / boy) :ARG1 (g / go-01 :ARG0 b))

# ::id toy.2
# ::snt The girl sees the boy .
(s / see-01 :ARG0 (g / girl) :ARG1 (b / boy))

# ::id toy.3
# ::snt Anna sleeps .
(s / sleep-01 :ARG0 (p / person :name (n / name :op1 \"Anna\")))
";

const PARSES: &str = "\
(ROOT (S (NP (DT The) (NN boy)) (VP (VBZ wants) (S (VP (TO to) (VP (VB go))))) (. .)))
(ROOT (S (NP (DT The) (NN girl)) (VP (VBZ sees) (NP (DT the) (NN boy))) (. .)))
(ROOT (S (NP (NNP Anna)) (VP (VBZ sleeps)) (. .)))
";

fn amrgen(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_amrgen"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn jsonl(path: &Path) -> Vec<Value> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

struct Toy {
    dir: tempfile::TempDir,
    corpus: PathBuf,
}

fn toy() -> Toy {
    let dir = tempfile::tempdir().unwrap();
    let amr = dir.path().join("toy.amr");
    let parse = dir.path().join("toy.parse");
    std::fs::write(&amr, AMR).unwrap();
    std::fs::write(&parse, PARSES).unwrap();
    let corpus = dir.path().join("toy.jsonl");
    let out = amrgen(&[
        "preprocess",
        "--amr",
        s(&amr),
        "--parse",
        s(&parse),
        "--out",
        s(&corpus),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    Toy { dir, corpus }
}

fn train_toy(t: &Toy, task: &str, name: &str, extra: &[&str]) -> (Output, PathBuf, PathBuf) {
    let ckpt = t.dir.path().join(format!("{name}.ckpt"));
    let log = t.dir.path().join(format!("{name}.log"));
    let mut args = vec![
        "train",
        "--train",
        s(&t.corpus),
        "--dev",
        s(&t.corpus),
        "--out",
        s(&ckpt),
        "--log",
        s(&log),
        "--task",
        task,
        "--preset",
        "desk",
        "--set",
        "epochs=3",
        "--set",
        "hidden=8",
        "--set",
        "embedding=4",
        "--quiet",
    ];
    args.extend_from_slice(extra);
    (amrgen(&args), ckpt, log)
}

#[test]
fn preprocess_writes_one_line_per_example() {
    let t = toy();
    let rows = jsonl(&t.corpus);
    assert_eq!(rows.len(), 3);
    for key in ["id", "amr_tokens", "anon_table", "parse_actions", "pos_tags", "words"] {
        assert!(rows.iter().all(|r| r.get(key).is_some()), "missing {key}");
    }
    assert_eq!(rows[2]["words"][0], "Anna");
}

#[test]
fn preprocess_stats_match_a_recount() {
    let t = toy();
    let out = amrgen(&[
        "preprocess",
        "--amr",
        s(&t.dir.path().join("toy.amr")),
        "--parse",
        s(&t.dir.path().join("toy.parse")),
        "--out",
        s(&t.dir.path().join("again.jsonl")),
    ]);
    let stdout = String::from_utf8(out.stdout).unwrap();
    let mut counts: HashMap<String, usize> = HashMap::new();
    for r in jsonl(&t.corpus) {
        for w in r["sentence_tokens"].as_array().unwrap() {
            *counts.entry(w.as_str().unwrap().to_string()).or_default() += 1;
        }
    }
    let singles = counts.values().filter(|c| **c == 1).count();
    let line = stdout.lines().find(|l| l.starts_with("singleton words")).unwrap();
    let reported: usize = line.split_whitespace().nth(2).unwrap().parse().unwrap();
    assert_eq!(reported, singles);
}

#[test]
fn missing_parse_names_the_graph() {
    let t = toy();
    let parse = t.dir.path().join("short.parse");
    std::fs::write(&parse, PARSES.lines().take(2).collect::<Vec<_>>().join("\n")).unwrap();
    let out = amrgen(&[
        "preprocess",
        "--amr",
        s(&t.dir.path().join("toy.amr")),
        "--parse",
        s(&parse),
        "--out",
        s(&t.dir.path().join("x.jsonl")),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("toy.3"));
}

#[test]
fn training_is_deterministic_and_generation_emits_json() {
    let t = toy();
    let (a, ckpt, log_a) = train_toy(&t, "joint", "a", &["--seed", "3"]);
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    let (b, _, log_b) = train_toy(&t, "joint", "b", &["--seed", "3"]);
    assert!(b.status.success());
    let (la, lb) = (jsonl(&log_a), jsonl(&log_b));
    assert_eq!(la.len(), 3);
    assert_eq!(la, lb);

    let gen = t.dir.path().join("gen.jsonl");
    let out = amrgen(&[
        "generate",
        "--model",
        s(&ckpt),
        "--input",
        s(&t.corpus),
        "--out",
        s(&gen),
        "--max-words",
        "20",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = jsonl(&gen);
    assert_eq!(rows.len(), 3);
    assert_eq!(rows[0]["id"], "toy.1");
    assert_eq!(rows[0]["candidates"].as_array().unwrap().len(), 2);
    assert!(rows[0]["joint_score"].is_f64());
    assert!(rows[0]["parse"].is_string());

    let oracle = t.dir.path().join("oracle.jsonl");
    let out = amrgen(&[
        "generate",
        "--model",
        s(&ckpt),
        "--input",
        s(&t.corpus),
        "--oracle-parse",
        s(&t.corpus),
        "--out",
        s(&oracle),
        "--max-words",
        "20",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = jsonl(&oracle);
    let gold = jsonl(&t.corpus);
    let gold_parse: Vec<&str> = gold[1]["parse_actions"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_str().unwrap())
        .collect();
    assert_eq!(rows[1]["parse"], gold_parse.join(" "));

    let out = amrgen(&["evaluate", "--hyp", s(&gen), "--ref", s(&t.corpus), "--metric", "bleu"]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("BLEU"));
}

#[test]
fn samples_per_input_follow_the_flag() {
    let t = toy();
    let (out, ckpt, _) = train_toy(&t, "joint", "m", &[]);
    assert!(out.status.success());
    let out = amrgen(&[
        "sample",
        "--model",
        s(&ckpt),
        "--input",
        s(&t.corpus),
        "--num-samples",
        "3",
        "--temperature",
        "0.3",
        "--max-words",
        "10",
        "--seed",
        "5",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let lines: Vec<Value> = String::from_utf8(out.stdout)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(lines.len(), 3);
    for l in &lines {
        let samples = l["samples"].as_array().unwrap();
        assert_eq!(samples.len(), 3);
        let dups = samples.iter().filter(|x| x["duplicate"] == true).count();
        assert_eq!(l["duplicates"], dups);
    }
}

#[test]
fn baseline_checkpoint_rejects_oracle_parses() {
    let t = toy();
    let (out, ckpt, _) = train_toy(&t, "baseline_s2s_copy", "base", &[]);
    assert!(out.status.success());
    let out = amrgen(&[
        "generate",
        "--model",
        s(&ckpt),
        "--input",
        s(&t.corpus),
        "--oracle-parse",
        s(&t.corpus),
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn divergence_exits_with_three() {
    let t = toy();
    let (out, _, _) = train_toy(
        &t,
        "unconditional_lm",
        "nan",
        &["--set", "lr=1e300", "--set", "epochs=4"],
    );
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn swapped_parse_files_exchange_precision_and_recall() {
    let t = toy();
    let hyp = t.dir.path().join("hyp.txt");
    let reference = t.dir.path().join("ref.txt");
    std::fs::write(&hyp, "(S (NP DT NN) (VP VBZ (NP DT NN)) .)\n(S (NP NNP) VBZ .)\n").unwrap();
    std::fs::write(
        &reference,
        "(S (NP DT NN) (VP VBZ (NP DT) NN) .)\n(S (NP NNP) (VP VBZ) .)\n",
    )
    .unwrap();
    let report = |h: &Path, r: &Path| -> Value {
        let j = t.dir.path().join("r.json");
        let out = amrgen(&[
            "evaluate",
            "--hyp",
            s(h),
            "--ref",
            s(r),
            "--metric",
            "spanf1",
            "--json",
            s(&j),
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        serde_json::from_str(&std::fs::read_to_string(&j).unwrap()).unwrap()
    };
    let a = report(&hyp, &reference);
    let b = report(&reference, &hyp);
    assert_eq!(a["unlabelled_f1"], b["unlabelled_f1"]);
    assert_eq!(a["unlabelled_precision"], b["unlabelled_recall"]);
    assert_eq!(a["unlabelled_recall"], b["unlabelled_precision"]);
    assert!(a["unlabelled_precision"] != a["unlabelled_recall"]);
}

#[test]
fn usage_and_data_errors_have_their_codes() {
    let t = toy();
    let c = s(&t.corpus);
    assert_eq!(
        amrgen(&["evaluate", "--hyp", c, "--ref", c, "--metric", "rouge"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(amrgen(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(
        amrgen(&["--threads", "0", "synth", "--out", "x"]).status.code(),
        Some(1)
    );
    let (out, _, _) = train_toy(&t, "translate", "bad", &[]);
    assert_eq!(out.status.code(), Some(1));
    let (out, _, _) = train_toy(&t, "joint", "bad2", &["--set", "dropout=2"]);
    assert_eq!(out.status.code(), Some(1));
    let missing = t.dir.path().join("none.jsonl");
    assert_eq!(
        amrgen(&["evaluate", "--hyp", s(&missing), "--ref", c]).status.code(),
        Some(2)
    );
    let garbage = t.dir.path().join("garbage.ckpt");
    std::fs::write(&garbage, b"not a model").unwrap();
    assert_eq!(
        amrgen(&["generate", "--model", s(&garbage), "--input", c])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(amrgen(&["--help"]).status.code(), Some(0));
}

#[test]
fn synth_writes_every_split() {
    let dir = tempfile::tempdir().unwrap();
    let out = amrgen(&["synth", "--out", s(dir.path())]);
    assert!(out.status.success());
    for split in ["train", "train50", "dev", "test", "oov"] {
        assert!(dir.path().join(format!("{split}.amr")).exists());
        assert!(dir.path().join(format!("{split}.parse")).exists());
    }
    let shipped = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/synthetic/train.amr");
    assert_eq!(
        std::fs::read_to_string(dir.path().join("train.amr")).unwrap(),
        std::fs::read_to_string(shipped).unwrap()
    );
}
