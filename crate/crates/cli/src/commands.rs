use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use amrgen::corpus::{corpus_stats, preprocess, read_jsonl_file, synthetic, write_jsonl, Example};
use amrgen::decode::{generate, generate_with_oracle_parse, sample_baseline, sample_diverse, DecodeConfig, Generation};
use amrgen::eval::{metric_by_name, read_tree, EvalItem};
use amrgen::model::Architecture;
use amrgen::syntax::{format_actions, linearize_tree, Action};
use amrgen::train::{task_by_name, train, Checkpoint, TrainConfig};
use amrgen::{Error, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::{Cli, Command, DecodeArgs, GenerateArgs, SampleArgs, TrainArgs};

pub fn run(cli: Cli) -> Result<()> {
    if cli.threads == 0 {
        return Err(Error::Usage("--threads must be at least 1".into()));
    }
    match cli.command {
        Command::Preprocess { amr, parse, out } => cmd_preprocess(&amr, &parse, &out),
        Command::Synth { out } => {
            let corpus = synthetic::generate(cli.seed.unwrap_or(synthetic::DEFAULT_SEED));
            synthetic::write_corpus(&out, &corpus)?;
            println!("wrote synthetic corpus to {}", out.display());
            Ok(())
        }
        Command::Train(args) => cmd_train(args, cli.seed),
        Command::Generate(args) => cmd_generate(args),
        Command::Sample(args) => cmd_sample(args, cli.seed),
        Command::Evaluate {
            hyp,
            reference,
            metric,
            json,
        } => cmd_evaluate(&hyp, &reference, &metric, json.as_deref()),
    }
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Data(format!("{}: {e}", path.display())))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    Ok(BufWriter::new(File::create(path)?))
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(create(p)?),
        None => Box::new(BufWriter::new(io::stdout())),
    })
}

fn cmd_preprocess(amr: &Path, parse: &Path, out: &Path) -> Result<()> {
    let examples = preprocess(&read_text(amr)?, &read_text(parse)?)?;
    write_jsonl(create(out)?, &examples)?;
    let s = corpus_stats(&examples);
    println!("examples           {}", s.examples);
    println!("AMR vocabulary     {}", s.amr_vocab);
    println!("word vocabulary    {}", s.word_vocab);
    println!("action vocabulary  {}", s.action_vocab);
    println!("POS tags           {}", s.pos_vocab);
    println!(
        "singleton words    {} ({:.1}%)",
        s.singleton_words,
        100.0 * s.singleton_fraction
    );
    println!("actions per parse  mean {:.1}, max {}", s.mean_actions, s.max_actions);
    Ok(())
}

fn train_config(args: &TrainArgs, seed: Option<u64>) -> Result<TrainConfig> {
    let mut cfg = TrainConfig::preset(&args.preset)?;
    if let Some(path) = &args.config {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        cfg.apply_text(&text)?;
    }
    if let Some(task) = &args.task {
        cfg.task = task_by_name(task)?.arch();
    }
    for o in &args.overrides {
        let (k, v) = o
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("override {o:?} is not KEY=VALUE")))?;
        cfg.set(k.trim(), v)?;
    }
    if let Some(s) = seed {
        cfg.seed = s;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn cmd_train(args: TrainArgs, seed: Option<u64>) -> Result<()> {
    let cfg = train_config(&args, seed)?;
    let train_set = read_jsonl_file(&args.train)?;
    let dev_set = read_jsonl_file(&args.dev)?;
    let mut log = args.log.as_deref().map(create).transpose()?;
    let metric = task_by_name(cfg.task.name())?.metric_name();
    let mut log_error = None;
    let out = train(&cfg, &train_set, &dev_set, |r| {
        if !args.quiet {
            eprintln!(
                "epoch {:>3}  nll {:.4}  dev {metric} {:.3}  lr {:.2e}",
                r.epoch, r.train_nll, r.dev_metric, r.lr
            );
        }
        if let Some(w) = log.as_mut() {
            let line = serde_json::to_string(r).expect("epoch records serialise");
            if let Err(e) = writeln!(w, "{line}") {
                log_error.get_or_insert(e);
            }
        }
    })?;
    if let Some(e) = log_error {
        return Err(e.into());
    }
    if let Some(mut w) = log {
        w.flush()?;
    }
    println!(
        "best dev {metric} {:.3} at epoch {}; saved {}",
        out.best_metric,
        out.best_epoch,
        args.out.display()
    );
    out.into_checkpoint(&cfg).save(&args.out)
}

fn decode_config(a: &DecodeArgs) -> DecodeConfig {
    DecodeConfig {
        beam_width: a.beam_width,
        max_word_steps: a.max_words,
        length_normalise: a.length_normalise,
        allow_unk: a.allow_unk,
        ..DecodeConfig::default()
    }
}

fn actions_json(parse: &[Action]) -> Value {
    if parse.is_empty() {
        Value::Null
    } else {
        Value::String(format_actions(parse))
    }
}

fn generation_json(id: &str, g: &Generation) -> Value {
    let candidates: Vec<Value> = g
        .candidates
        .iter()
        .map(|c| {
            json!({
                "text": c.text,
                "parse": actions_json(&c.parse),
                "syn_score": c.syn_score,
                "lex_score": c.lex_score,
                "joint_score": c.joint_score(),
            })
        })
        .collect();
    json!({
        "id": id,
        "text": g.text,
        "parse": actions_json(&g.parse),
        "joint_score": g.joint_score,
        "candidates": candidates,
    })
}

/// Parses for `--oracle-parse`: one per line, bracketed, as actions, or a
/// JSON object with a `parse` or `parse_actions` field.
fn read_parses(path: &Path) -> Result<Vec<Vec<Action>>> {
    let text = read_text(path)?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            let s = if l.trim_start().starts_with('{') {
                let v: Value = serde_json::from_str(l).map_err(|e| Error::Data(format!("line {}: {e}", i + 1)))?;
                parse_field(&v).ok_or_else(|| Error::Data(format!("line {}: no parse field", i + 1)))?
            } else {
                l.to_string()
            };
            read_tree(&s)
                .map(|t| linearize_tree(&t))
                .map_err(|e| Error::Data(format!("{} line {}: {e}", path.display(), i + 1)))
        })
        .collect()
}

fn cmd_generate(args: GenerateArgs) -> Result<()> {
    let mut cfg = decode_config(&args.decode);
    cfg.n_parses = args.n_parses;
    cfg.validate()?;
    let archs: &[Architecture] = if args.oracle_parse.is_some() {
        &[Architecture::Joint]
    } else {
        &[Architecture::Joint, Architecture::BaselineCopy]
    };
    let ck = Checkpoint::load_for(&args.decode.model, archs)?;
    let examples = read_jsonl_file(&args.decode.input)?;
    let oracle = args.oracle_parse.as_deref().map(read_parses).transpose()?;
    if let Some(o) = &oracle {
        if o.len() != examples.len() {
            return Err(Error::Data(format!(
                "{} inputs but {} oracle parses",
                examples.len(),
                o.len()
            )));
        }
    }
    let mut out = output(args.decode.out.as_deref())?;
    for (i, ex) in examples.iter().enumerate() {
        let g = match &oracle {
            Some(o) => generate_with_oracle_parse(&ck.model, &ex.amr_tokens, &ex.anon_table, &o[i], &cfg),
            None => generate(&ck.model, &ex.amr_tokens, &ex.anon_table, &cfg),
        }
        .map_err(|e| with_id(e, ex))?;
        writeln!(out, "{}", generation_json(&ex.id, &g))?;
    }
    out.flush()?;
    Ok(())
}

fn with_id(e: Error, ex: &Example) -> Error {
    match e {
        Error::Structure(m) => Error::Structure(format!("{}: {m}", ex.id)),
        Error::Data(m) => Error::Data(format!("{}: {m}", ex.id)),
        other => other,
    }
}

fn cmd_sample(args: SampleArgs, seed: Option<u64>) -> Result<()> {
    let cfg = DecodeConfig {
        temperature: args.temperature,
        num_samples: args.num_samples,
        ..decode_config(&args.decode)
    };
    cfg.validate()?;
    let ck = Checkpoint::load_for(&args.decode.model, &[Architecture::Joint, Architecture::BaselineCopy])?;
    let examples = read_jsonl_file(&args.decode.input)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed.unwrap_or(1));
    let mut out = output(args.decode.out.as_deref())?;
    for ex in &examples {
        let (samples, duplicates): (Vec<Value>, usize) = if ck.model.arch() == Architecture::Joint {
            let s = sample_diverse(&ck.model, &ex.amr_tokens, &ex.anon_table, &cfg, &mut rng)?;
            let d = s.iter().filter(|x| x.duplicate).count();
            let v = s
                .iter()
                .map(|x| json!({"parse": format_actions(&x.parse), "text": x.text, "duplicate": x.duplicate}))
                .collect();
            (v, d)
        } else {
            let s = sample_baseline(&ck.model, &ex.amr_tokens, &ex.anon_table, &cfg, &mut rng)?;
            let d = s.iter().enumerate().filter(|(i, t)| s[..*i].contains(t)).count();
            let v = s
                .iter()
                .enumerate()
                .map(|(i, t)| json!({"parse": Value::Null, "text": t, "duplicate": s[..i].contains(t)}))
                .collect();
            (v, d)
        };
        writeln!(
            out,
            "{}",
            json!({"id": ex.id, "samples": samples, "duplicates": duplicates})
        )?;
    }
    out.flush()?;
    Ok(())
}

fn parse_field(v: &Value) -> Option<String> {
    match v.get("parse").or_else(|| v.get("parse_actions"))? {
        Value::String(s) => Some(s.clone()),
        Value::Array(a) => Some(a.iter().filter_map(Value::as_str).collect::<Vec<_>>().join(" ")),
        _ => None,
    }
}

fn text_field(v: &Value) -> Option<String> {
    match v.get("text") {
        Some(Value::String(s)) => Some(s.clone()),
        _ => match v.get("words")? {
            Value::Array(a) => Some(a.iter().filter_map(Value::as_str).collect::<Vec<_>>().join(" ")),
            _ => None,
        },
    }
}

/// Plain lines are taken verbatim. JSON lines contribute `id` and either
/// `text` / `words` (BLEU) or `parse` / `parse_actions` (span F1), so
/// `generate` output and preprocessed corpora can be scored directly.
fn read_items(path: &Path, want_parse: bool) -> Result<Vec<EvalItem>> {
    let f = File::open(path).map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
    let mut items = Vec::new();
    for (i, line) in BufReader::new(f).lines().enumerate() {
        let line = line?;
        if !line.trim_start().starts_with('{') {
            items.push(EvalItem::new(line.trim()));
            continue;
        }
        let v: Value =
            serde_json::from_str(&line).map_err(|e| Error::Data(format!("{} line {}: {e}", path.display(), i + 1)))?;
        let text = if want_parse { parse_field(&v) } else { text_field(&v) }.ok_or_else(|| {
            Error::Data(format!(
                "{} line {}: no {} field",
                path.display(),
                i + 1,
                if want_parse { "parse" } else { "text" }
            ))
        })?;
        items.push(EvalItem {
            id: v.get("id").and_then(Value::as_str).map(str::to_string),
            text,
        });
    }
    while items.last().is_some_and(|x| x.id.is_none() && x.text.is_empty()) {
        items.pop();
    }
    Ok(items)
}

fn cmd_evaluate(hyp: &Path, reference: &Path, metric: &str, json_out: Option<&Path>) -> Result<()> {
    let metric = metric_by_name(metric)?;
    let want_parse = metric.name() == "spanf1";
    let report = metric.evaluate(&read_items(hyp, want_parse)?, &read_items(reference, want_parse)?)?;
    print!("{report}");
    if let (Some(p), Some(r)) = (report.labelled_precision, report.labelled_recall) {
        println!("labelled P / R  {:.2} / {:.2}", 100.0 * p, 100.0 * r);
    }
    if let (Some(p), Some(r)) = (report.unlabelled_precision, report.unlabelled_recall) {
        println!("unlabelled P / R {:.2} / {:.2}", 100.0 * p, 100.0 * r);
    }
    let text = serde_json::to_string_pretty(&report)?;
    match json_out {
        Some(p) => {
            let mut w = create(p)?;
            writeln!(w, "{text}")?;
            w.flush()?;
        }
        None => println!("{text}"),
    }
    Ok(())
}
