use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::Serialize;

use csar::bench::{self, Method};
use csar::evaluation::{bpe_baseline, evaluate as score_inventory, record_baseline};
use csar::induction::Inducer;
use csar::metrics;
use csar::procgen::{self, GridSpec, ProcGenConfig};
use csar::{load_corpus, load_ground_truth, load_inventory, save_corpus, save_ground_truth, save_inventory, Vocab};

use crate::manifest::{manifest_path_for, write_manifest, ManifestBuilder};
use crate::{output_path, AnalyzeArgs, BenchArgs, EvaluateArgs, GenerateArgs, InduceArgs};

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(file))
}

/// Runs `body`, then writes the manifest whether or not it succeeded.
fn with_manifest(builder: ManifestBuilder, manifest: &Path, body: impl FnOnce() -> Result<()>) -> Result<()> {
    let result = body();
    let written = write_manifest(&builder.finish(&result), manifest);
    result.and(written)
}

pub fn induce(args: InduceArgs) -> Result<()> {
    let out = output_path(&args.out);
    let config = args.induction.config();
    let builder = ManifestBuilder::new("induce", &config)
        .seeds([config.seed])
        .input(&args.corpus)
        .output(&out);
    with_manifest(builder, &manifest_path_for(&out), || {
        config.validate()?;
        let corpus = load_corpus(&args.corpus, config.max_records)?;
        if corpus.skipped_count > 0 {
            tracing::warn!(skipped = corpus.skipped_count, "skipped records with an empty side");
        }
        let outcome = Inducer::new(&corpus, &config)?.run();
        tracing::info!(
            morphemes = outcome.inventory.len(),
            stop = ?outcome.stop_reason,
            seconds = outcome.elapsed.as_secs_f64(),
            "induction done"
        );
        save_inventory(&outcome.inventory, &corpus.form_vocab, &corpus.meaning_vocab, &out)?;
        Ok(())
    })
}

fn procgen_config(args: &GenerateArgs) -> ProcGenConfig {
    ProcGenConfig {
        n_attributes: args.attributes,
        n_values: args.values,
        sparse_meanings: args.sparse,
        synonymy: args.synonymy,
        polysemy_rate: args.polysemy,
        form_lengths: args.form_lengths.clone(),
        vocab_size: args.vocab_size,
        imbalance: args.imbalance,
        dataset_size: args.dataset_size,
        noise_rate: args.noise,
        shuffle: args.shuffle,
        non_compositional: args.non_compositional,
        seed: args.seed,
    }
}

pub fn generate(args: GenerateArgs) -> Result<()> {
    let dir = output_path(&args.out_dir);
    let config = procgen_config(&args);
    let (corpus_path, truth_path) = (dir.join("corpus.jsonl"), dir.join("truth.jsonl"));
    let builder = ManifestBuilder::new("generate", &config)
        .seeds([config.seed])
        .output(&corpus_path)
        .output(&truth_path);
    with_manifest(builder, &dir.join("manifest.json"), || {
        let (corpus, truth) = procgen::generate_dataset(&config)?;
        std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
        save_corpus(&corpus, &corpus_path)?;
        save_ground_truth(&truth, &corpus.form_vocab, &corpus.meaning_vocab, &truth_path)?;
        tracing::info!(records = corpus.len(), morphemes = truth.len(), fingerprint = %config.fingerprint(), "generated");
        Ok(())
    })
}

pub fn evaluate(args: EvaluateArgs) -> Result<()> {
    let out = output_path(&args.out);
    let mut builder = ManifestBuilder::new("evaluate", &args).input(&args.truth).output(&out);
    for p in args.inventory.iter().chain(&args.corpus) {
        builder = builder.input(p);
    }
    with_manifest(builder, &manifest_path_for(&out), || {
        let (mut fv, mut mv) = (Vocab::new(), Vocab::new());
        let (method, inventory) = match (&args.baseline, &args.inventory) {
            (Some(name), _) => {
                let corpus_path = args.corpus.as_ref().context("--baseline needs --corpus")?;
                let corpus = load_corpus(corpus_path, None)?;
                let inventory = if name == "bpe" { bpe_baseline(&corpus) } else { record_baseline(&corpus) };
                fv = corpus.form_vocab;
                mv = corpus.meaning_vocab;
                (name.clone(), inventory)
            }
            (None, Some(path)) => ("inventory".to_owned(), load_inventory(path, &mut fv, &mut mv)?),
            (None, None) => bail!("give --inventory or --baseline"),
        };
        let truth = load_ground_truth(&args.truth, &mut fv, &mut mv)?;
        let report = score_inventory(&inventory.morphemes, &truth, &args.modes, args.noisy);
        let mut w = create(&out)?;
        writeln!(w, "# csar-evaluate v1")?;
        writeln!(w, "method,mode,precision,recall,f1,n_induced,n_truth")?;
        for (mode, s) in &report.scores {
            writeln!(
                w,
                "{method},{mode},{},{},{},{},{}",
                s.precision, s.recall, s.f1, report.n_induced, report.n_truth
            )?;
        }
        if report.form_only_excluded {
            writeln!(w, "# form-only modes excluded: dataset has noise forms")?;
        }
        w.flush()?;
        Ok(())
    })
}

pub fn analyze(args: AnalyzeArgs) -> Result<()> {
    let out = output_path(&args.out);
    let mut builder = ManifestBuilder::new("analyze", &args)
        .seeds([args.seed])
        .input(&args.inventory)
        .output(&out);
    if let Some(c) = &args.corpus {
        builder = builder.input(c);
    }
    with_manifest(builder, &manifest_path_for(&out), || {
        let (mut fv, mut mv) = (Vocab::new(), Vocab::new());
        let inventory = load_inventory(&args.inventory, &mut fv, &mut mv)?;
        let corpus = args.corpus.as_ref().map(|p| load_corpus(p, None)).transpose()?;
        let m = metrics::analyze(&inventory, corpus.as_ref(), args.sample_size, args.seed);
        let mut w = create(&out)?;
        if args.format == "json" {
            writeln!(w, "{}", serde_json::to_string(&m)?)?;
        } else {
            writeln!(
                w,
                "# csar-analyze v1; synonymy/polysemy: prevalence-weighted mean over meanings/forms of the entropy of the prevalence distribution over forms/meanings"
            )?;
            writeln!(w, "{}", metrics::InventoryMetrics::CSV_HEADER)?;
            writeln!(w, "{}", m.csv_row())?;
        }
        w.flush()?;
        Ok(())
    })
}

#[derive(Serialize)]
struct BenchSettings<'a> {
    grid: &'a str,
    seeds: usize,
    methods: Vec<&'static str>,
    filters: &'a [String],
    omit_timing: bool,
    induction: csar::InductionConfig,
}

pub fn bench(args: BenchArgs) -> Result<()> {
    let dir = output_path(&args.out_dir);
    let induction = args.induction.config();
    let settings = BenchSettings {
        grid: &args.grid,
        seeds: args.seeds,
        methods: args.only.iter().map(|m| m.name()).collect(),
        filters: &args.filter,
        omit_timing: args.omit_timing,
        induction: induction.clone(),
    };
    let results_path = dir.join("results.csv");
    let summary_path = dir.join("summary.csv");
    let table_path = dir.join("table.txt");
    let builder = ManifestBuilder::new("bench", &settings)
        .seeds(0..args.seeds as u64)
        .output(&results_path)
        .output(&summary_path)
        .output(&table_path);
    with_manifest(builder, &dir.join("manifest.json"), || {
        induction.validate()?;
        let grid = GridSpec::by_name(&args.grid)
            .with_context(|| format!("unknown grid '{}' (expected default or smoke)", args.grid))?
            .with_seed_count(args.seeds);
        let filters = procgen::parse_filters(&args.filter)?;
        let configs = procgen::apply_filters(procgen::expand_grid(&grid), &filters)?;
        if configs.is_empty() {
            bail!("no grid settings match the filters");
        }
        let methods: Vec<Method> = Method::ALL.into_iter().filter(|m| args.only.contains(m)).collect();
        tracing::info!(datasets = configs.len(), methods = methods.len(), "running grid");
        let mut results = bench::run_bench(&configs, &methods, &induction, args.jobs);
        if args.omit_timing {
            results.rows.iter_mut().for_each(|r| r.seconds = 0.0);
        }

        std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
        let mut w = create(&results_path)?;
        bench::write_results_csv(&results.rows, &mut w)?;
        w.flush()?;
        let summary = bench::summarize(&results.rows);
        let mut w = create(&summary_path)?;
        bench::write_summary_csv(&summary, &mut w)?;
        w.flush()?;
        let table = bench::summary_table(&summary);
        std::fs::write(&table_path, &table).with_context(|| format!("writing {}", table_path.display()))?;
        print!("{table}");

        if !results.failures.is_empty() {
            let mut w = create(&dir.join("failures.jsonl"))?;
            for f in &results.failures {
                writeln!(w, "{}", serde_json::to_string(f)?)?;
            }
            w.flush()?;
            bail!("{} of {} cells failed", results.failures.len(), configs.len() * methods.len());
        }
        Ok(())
    })
}
