mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use amrgen::{Error, ErrorKind};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "amrgen",
    version,
    about = "AMR-to-text generation through delexicalised syntax"
)]
struct Cli {
    /// Seed for every random choice the command makes.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Upper bound on worker threads.
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Pair AMR blocks with parses and write a JSONL corpus.
    Preprocess {
        #[arg(long)]
        amr: PathBuf,
        #[arg(long)]
        parse: PathBuf,
        #[arg(long, short)]
        out: PathBuf,
    },
    /// Write the bundled synthetic corpus (AMR and parse files per split).
    Synth {
        #[arg(long, short)]
        out: PathBuf,
    },
    /// Train a model and save the best checkpoint.
    Train(TrainArgs),
    /// Decode text for every AMR in a corpus.
    Generate(GenerateArgs),
    /// Sample several parses per AMR and realise each.
    Sample(SampleArgs),
    /// Score hypotheses against references.
    Evaluate {
        #[arg(long)]
        hyp: PathBuf,
        #[arg(long = "ref")]
        reference: PathBuf,
        /// bleu or spanf1
        #[arg(long, default_value = "bleu")]
        metric: String,
        /// Also write the report as JSON.
        #[arg(long)]
        json: Option<PathBuf>,
    },
}

#[derive(Args)]
pub struct TrainArgs {
    #[arg(long)]
    train: PathBuf,
    #[arg(long)]
    dev: PathBuf,
    #[arg(long, short)]
    out: PathBuf,
    #[arg(long)]
    task: Option<String>,
    /// paper or desk
    #[arg(long, default_value = "paper")]
    preset: String,
    /// `key = value` file applied after the preset.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Single overrides, `--set epochs=20`; applied last.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Per-epoch records as JSON lines.
    #[arg(long)]
    log: Option<PathBuf>,
    #[arg(long)]
    quiet: bool,
}

#[derive(Args)]
pub struct DecodeArgs {
    #[arg(long)]
    model: PathBuf,
    /// Preprocessed JSONL corpus.
    #[arg(long)]
    input: PathBuf,
    /// Output JSONL; stdout if absent.
    #[arg(long, short)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 2)]
    beam_width: usize,
    #[arg(long, default_value_t = 256)]
    max_words: usize,
    #[arg(long)]
    length_normalise: bool,
    /// Let realisations contain the unknown-word symbol.
    #[arg(long)]
    allow_unk: bool,
}

#[derive(Args)]
pub struct GenerateArgs {
    #[command(flatten)]
    decode: DecodeArgs,
    /// Parses realised per input.
    #[arg(long, default_value_t = 2)]
    n_parses: usize,
    /// One parse per input line, bracketed or as actions, used instead of
    /// predicted parses.
    #[arg(long)]
    oracle_parse: Option<PathBuf>,
}

#[derive(Args)]
pub struct SampleArgs {
    #[command(flatten)]
    decode: DecodeArgs,
    #[arg(long, default_value_t = 0.3)]
    temperature: f64,
    #[arg(long, default_value_t = 3)]
    num_samples: usize,
}

fn exit_code(e: &Error) -> u8 {
    match e.kind() {
        ErrorKind::Usage => 1,
        ErrorKind::Data => 2,
        ErrorKind::Numerical => 3,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        // downstream closed early, e.g. `| head`
        Err(Error::Io(e)) if e.kind() == std::io::ErrorKind::BrokenPipe => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
