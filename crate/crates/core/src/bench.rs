//! Runs induction methods over a grid of procedural datasets and aggregates
//! the scores.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::io::{self, Write};
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::evaluation::{bpe_baseline, evaluate, record_baseline, Mode};
use crate::induction::{induce, InductionConfig};
use crate::procgen::{generate_dataset, ProcGenConfig};

/// First line of every results CSV.
pub const RESULTS_SCHEMA: &str = "# csar-bench-results v1";
pub const RESULTS_HEADER: &str = "fingerprint,seed,method,mode,precision,recall,f1,n_induced,n_truth,seconds";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    Csar,
    Record,
    Bpe,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Csar, Method::Record, Method::Bpe];

    pub fn name(self) -> &'static str {
        match self {
            Method::Csar => "csar",
            Method::Record => "record",
            Method::Bpe => "bpe",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s.to_ascii_lowercase())
            .ok_or_else(|| format!("unknown method '{s}' (expected csar, record or bpe)"))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub fingerprint: String,
    pub seed: u64,
    pub method: Method,
    pub mode: Mode,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub n_induced: usize,
    pub n_truth: usize,
    pub seconds: f64,
}

impl BenchRow {
    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{:.6}",
            self.fingerprint,
            self.seed,
            self.method,
            self.mode,
            self.precision,
            self.recall,
            self.f1,
            self.n_induced,
            self.n_truth,
            self.seconds
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellFailure {
    pub fingerprint: String,
    pub seed: u64,
    pub method: Method,
    pub message: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BenchResults {
    pub rows: Vec<BenchRow>,
    pub failures: Vec<CellFailure>,
}

/// Generates the dataset for `config`, runs `method` on it and scores every
/// mode. Form-only modes are skipped for datasets with noise forms.
pub fn run_cell(config: &ProcGenConfig, method: Method, induction: &InductionConfig) -> crate::Result<Vec<BenchRow>> {
    let (corpus, truth) = generate_dataset(config)?;
    let start = Instant::now();
    let inventory = match method {
        Method::Csar => induce(
            &corpus,
            &InductionConfig {
                seed: config.seed,
                ..induction.clone()
            },
        )?,
        Method::Record => record_baseline(&corpus),
        Method::Bpe => bpe_baseline(&corpus),
    };
    let seconds = start.elapsed().as_secs_f64();
    let report = evaluate(&inventory.morphemes, &truth, &Mode::ALL, config.noise_rate > 0.0);
    let fingerprint = config.fingerprint();
    Ok(report
        .scores
        .iter()
        .map(|&(mode, s)| BenchRow {
            fingerprint: fingerprint.clone(),
            seed: config.seed,
            method,
            mode,
            precision: s.precision,
            recall: s.recall,
            f1: s.f1,
            n_induced: report.n_induced,
            n_truth: report.n_truth,
            seconds,
        })
        .collect())
}

/// Runs every (config, method) cell on `jobs` worker threads. Rows come back
/// in config order, then method order, whatever the scheduling.
pub fn run_bench(
    configs: &[ProcGenConfig],
    methods: &[Method],
    induction: &InductionConfig,
    jobs: usize,
) -> BenchResults {
    let cells: Vec<(&ProcGenConfig, Method)> = configs
        .iter()
        .flat_map(|c| methods.iter().map(move |&m| (c, m)))
        .collect();
    let slots: Vec<Mutex<Option<crate::Result<Vec<BenchRow>>>>> = cells.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    let jobs = jobs.clamp(1, cells.len().max(1));
    std::thread::scope(|scope| {
        for _ in 0..jobs {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(&(config, method)) = cells.get(i) else { break };
                let result = run_cell(config, method, induction);
                if let Err(e) = &result {
                    tracing::warn!(fingerprint = %config.fingerprint(), seed = config.seed, %method, error = %e, "cell failed");
                }
                *slots[i].lock().expect("slot lock") = Some(result);
            });
        }
    });

    let mut results = BenchResults::default();
    for ((config, method), slot) in cells.into_iter().zip(slots) {
        match slot.into_inner().expect("slot lock").expect("every cell ran") {
            Ok(rows) => results.rows.extend(rows),
            Err(e) => results.failures.push(CellFailure {
                fingerprint: config.fingerprint(),
                seed: config.seed,
                method,
                message: e.to_string(),
            }),
        }
    }
    results
}

pub fn write_results_csv(rows: &[BenchRow], mut out: impl Write) -> io::Result<()> {
    writeln!(out, "{RESULTS_SCHEMA}")?;
    writeln!(out, "{RESULTS_HEADER}")?;
    for row in rows {
        writeln!(out, "{}", row.csv_line())?;
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub method: Method,
    pub mode: Mode,
    /// Distinct settings (seeds pooled).
    pub cells: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Mean over settings of the per-setting mean over seeds, for each method
/// and mode.
pub fn summarize(rows: &[BenchRow]) -> Vec<SummaryRow> {
    let mut cells: BTreeMap<(Method, Mode), BTreeMap<&str, Vec<&BenchRow>>> = BTreeMap::new();
    for r in rows {
        cells
            .entry((r.method, r.mode))
            .or_default()
            .entry(&r.fingerprint)
            .or_default()
            .push(r);
    }
    cells
        .into_iter()
        .map(|((method, mode), by_cell)| {
            let mut sums = (0.0, 0.0, 0.0);
            for rs in by_cell.values() {
                let n = rs.len() as f64;
                sums.0 += rs.iter().map(|r| r.precision).sum::<f64>() / n;
                sums.1 += rs.iter().map(|r| r.recall).sum::<f64>() / n;
                sums.2 += rs.iter().map(|r| r.f1).sum::<f64>() / n;
            }
            let n = by_cell.len() as f64;
            SummaryRow {
                method,
                mode,
                cells: by_cell.len(),
                precision: sums.0 / n,
                recall: sums.1 / n,
                f1: sums.2 / n,
            }
        })
        .collect()
}

pub fn summary_lookup(summary: &[SummaryRow], method: Method, mode: Mode) -> Option<&SummaryRow> {
    summary.iter().find(|s| s.method == method && s.mode == mode)
}

pub fn write_summary_csv(summary: &[SummaryRow], mut out: impl Write) -> io::Result<()> {
    writeln!(out, "# csar-bench-summary v1")?;
    writeln!(out, "method,mode,cells,precision,recall,f1")?;
    for s in summary {
        writeln!(out, "{},{},{},{},{},{}", s.method, s.mode, s.cells, s.precision, s.recall, s.f1)?;
    }
    Ok(())
}

/// Methods as columns, score rows as in the published baseline table.
pub fn summary_table(summary: &[SummaryRow]) -> String {
    let methods: Vec<Method> = Method::ALL
        .into_iter()
        .filter(|m| summary.iter().any(|s| s.method == *m))
        .collect();
    type Row = (&'static str, Mode, fn(&SummaryRow) -> f64);
    let rows: [Row; 8] = [
        ("Exact F1, form", Mode::ExactForm, |s| s.f1),
        ("Fuzzy F1, form", Mode::FuzzyForm, |s| s.f1),
        ("Fuzzy prec., form", Mode::FuzzyForm, |s| s.precision),
        ("Fuzzy recall, form", Mode::FuzzyForm, |s| s.recall),
        ("Exact F1", Mode::ExactFull, |s| s.f1),
        ("Fuzzy F1", Mode::FuzzyFull, |s| s.f1),
        ("Fuzzy prec.", Mode::FuzzyFull, |s| s.precision),
        ("Fuzzy recall", Mode::FuzzyFull, |s| s.recall),
    ];
    let mut out = format!("{:<20}", "");
    for m in &methods {
        let _ = write!(out, "{:>8}", m.name());
    }
    out.push('\n');
    for (label, mode, get) in rows {
        let _ = write!(out, "{label:<20}");
        for &m in &methods {
            match summary_lookup(summary, m, mode) {
                Some(s) => {
                    let _ = write!(out, "{:>8.3}", get(s));
                }
                None => {
                    let _ = write!(out, "{:>8}", "-");
                }
            }
        }
        out.push('\n');
    }
    out
}
