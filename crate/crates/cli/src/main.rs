//! `csar`: induce morpheme inventories, generate procedural datasets, score
//! and analyze inventories, and run the benchmark grid.

mod commands;
mod manifest;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use csar::evaluation::Mode;
use csar::bench::Method;
use csar::{InductionConfig, Weighting};

/// Overrides the directory that relative output paths resolve against.
pub const OUTPUT_DIR_ENV: &str = "CSAR_OUTPUT_DIR";

#[derive(Parser, Debug)]
#[command(name = "csar", version, about = "Greedy form-meaning morpheme induction")]
struct Cli {
    /// More log output (repeat for more).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Induce a morpheme inventory from a JSON-lines corpus.
    Induce(InduceArgs),
    /// Generate a procedural dataset and its ground truth.
    Generate(GenerateArgs),
    /// Score an inventory (or a baseline) against ground truth.
    Evaluate(EvaluateArgs),
    /// Inventory metrics: entropy, synonymy, polysemy, sizes, toposim.
    Analyze(AnalyzeArgs),
    /// Run methods over the procedural benchmark grid.
    Bench(BenchArgs),
}

/// Induction knobs. Typical settings: defaults for small procedural data;
/// `--max-records 20000 --max-inventory-size 300 --max-form-size 3
/// --max-meaning-size 2 --token-vocab-size 1000 --form-vocab-size 100000
/// --meaning-vocab-size 100000 --cooccurrence-threshold 10 --no-search-best-form`
/// for image captions; `--ngram-semantics --max-form-size 3 --max-meaning-size 3
/// --token-vocab-size 500 --cooccurrence-threshold 100` for translation data.
#[derive(Args, Debug, Clone, Serialize)]
pub struct InductionArgs {
    /// Pair weighting: mi, joint, pmi or npmi.
    #[arg(long, default_value = "mi")]
    pub weighting: Weighting,
    /// Use only the first N records.
    #[arg(long)]
    pub max_records: Option<usize>,
    /// Stop after N morphemes.
    #[arg(long)]
    pub max_inventory_size: Option<usize>,
    /// Longest form candidate, in tokens.
    #[arg(long)]
    pub max_form_size: Option<usize>,
    /// Largest meaning candidate, in tokens.
    #[arg(long)]
    pub max_meaning_size: Option<usize>,
    /// Keep only the N most frequent form candidates.
    #[arg(long)]
    pub form_vocab_size: Option<usize>,
    /// Keep only the N most frequent meaning candidates.
    #[arg(long)]
    pub meaning_vocab_size: Option<usize>,
    /// Ignore candidates containing tokens outside the N most frequent.
    #[arg(long)]
    pub token_vocab_size: Option<usize>,
    /// Co-occurrence counts below this are treated as zero (1 for ShapeWorld,
    /// 10 for image captions, 100 for translation).
    #[arg(long, default_value_t = 0)]
    pub cooccurrence_threshold: u32,
    /// Pick among repeated form matches quasirandomly instead of searching.
    #[arg(long)]
    pub no_search_best_form: bool,
    /// Treat meanings as ordered sequences with n-gram candidates.
    #[arg(long)]
    pub ngram_semantics: bool,
    /// Wall-clock budget in seconds.
    #[arg(long)]
    pub time_limit: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

impl InductionArgs {
    pub fn config(&self) -> InductionConfig {
        InductionConfig {
            weighting: self.weighting,
            max_records: self.max_records,
            max_inventory_size: self.max_inventory_size,
            max_form_size: self.max_form_size,
            max_meaning_size: self.max_meaning_size,
            form_vocab_size: self.form_vocab_size,
            meaning_vocab_size: self.meaning_vocab_size,
            token_vocab_size: self.token_vocab_size,
            cooccurrence_threshold: self.cooccurrence_threshold,
            search_best_form: !self.no_search_best_form,
            ngram_semantics: self.ngram_semantics,
            time_limit: self.time_limit,
            seed: self.seed,
        }
    }
}

#[derive(Args, Debug)]
pub struct InduceArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    /// Inventory output (JSON lines).
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub induction: InductionArgs,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct GenerateArgs {
    /// Directory for corpus.jsonl and truth.jsonl.
    #[arg(long)]
    pub out_dir: PathBuf,
    #[arg(long, default_value_t = 4)]
    pub attributes: usize,
    #[arg(long, default_value_t = 4)]
    pub values: usize,
    /// Independent binary attributes; only present ones enter the meaning.
    #[arg(long)]
    pub sparse: bool,
    /// Forms per meaning.
    #[arg(long, default_value_t = 1)]
    pub synonymy: usize,
    /// Fraction of meanings mapped to an already-used form.
    #[arg(long, default_value_t = 0.0)]
    pub polysemy: f64,
    /// Permitted form lengths, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "1")]
    pub form_lengths: Vec<usize>,
    /// Token vocabulary for multi-token forms.
    #[arg(long)]
    pub vocab_size: Option<usize>,
    /// Ramp value distribution instead of uniform.
    #[arg(long)]
    pub imbalance: bool,
    #[arg(long, default_value_t = 500)]
    pub dataset_size: usize,
    /// Geometric noise-token rate per insertion point.
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    /// Randomly permute the forms of each utterance.
    #[arg(long)]
    pub shuffle: bool,
    /// Express random attribute pairs with single forms.
    #[arg(long)]
    pub non_compositional: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct EvaluateArgs {
    /// Inventory to score; omit when scoring a baseline.
    #[arg(long, required_unless_present = "baseline")]
    pub inventory: Option<PathBuf>,
    /// Build this baseline from --corpus instead of reading an inventory.
    #[arg(long, value_parser = ["record", "bpe"], requires = "corpus")]
    pub baseline: Option<String>,
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    #[arg(long)]
    pub truth: PathBuf,
    /// Modes to score: exact-full, fuzzy-full, exact-form, fuzzy-form.
    #[arg(long, value_delimiter = ',', default_value = "exact-full,fuzzy-full,exact-form,fuzzy-form")]
    pub modes: Vec<Mode>,
    /// The dataset contains noise forms: form-only modes are reported as excluded.
    #[arg(long)]
    pub noisy: bool,
    /// CSV output with one row per mode.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct AnalyzeArgs {
    #[arg(long)]
    pub inventory: PathBuf,
    /// Corpus for topographic similarity.
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Record pairs sampled for topographic similarity.
    #[arg(long, default_value_t = csar::metrics::DEFAULT_TOPOSIM_PAIRS)]
    pub sample_size: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_parser = ["csv", "json"], default_value = "csv")]
    pub format: String,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug, Clone)]
pub struct BenchArgs {
    /// Grid preset: default (full grid) or smoke (all variations off).
    #[arg(long, default_value = "default")]
    pub grid: String,
    /// Seeds per setting.
    #[arg(long, default_value_t = 3)]
    pub seeds: usize,
    /// Methods to run, comma separated: csar, record, bpe.
    #[arg(long, value_delimiter = ',', default_value = "csar,record,bpe")]
    pub only: Vec<Method>,
    /// Keep settings matching key=value (repeatable).
    #[arg(long)]
    pub filter: Vec<String>,
    /// Worker threads.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    /// Write 0 in the seconds column so reruns are byte-identical.
    #[arg(long)]
    pub omit_timing: bool,
    #[arg(long, default_value = "bench")]
    pub out_dir: PathBuf,
    #[command(flatten)]
    pub induction: InductionArgs,
}

/// Relative output paths resolve against `$CSAR_OUTPUT_DIR` when it is set.
pub fn output_path(path: &Path) -> PathBuf {
    match std::env::var_os(OUTPUT_DIR_ENV) {
        Some(dir) if path.is_relative() && !dir.is_empty() => Path::new(&dir).join(path),
        _ => path.to_path_buf(),
    }
}

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => tracing::Level::WARN,
        1 => tracing::Level::INFO,
        2 => tracing::Level::DEBUG,
        _ => tracing::Level::TRACE,
    };
    let _ = tracing_subscriber::fmt()
        .with_max_level(level)
        .with_writer(std::io::stderr)
        .try_init();
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    init_logging(cli.verbose);
    let result = match cli.command {
        Command::Induce(args) => commands::induce(args),
        Command::Generate(args) => commands::generate(args),
        Command::Evaluate(args) => commands::evaluate(args),
        Command::Analyze(args) => commands::analyze(args),
        Command::Bench(args) => commands::bench(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
