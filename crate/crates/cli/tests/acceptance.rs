//! Acceptance run: one PASS/FAIL line per criterion, then a non-zero exit if
//! any criterion failed that is not a documented shortfall.
//!
//! `cargo test -p csar-cli --test acceptance -- <name>...` runs a subset.

use std::path::Path;
use std::process::Command;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Zipf};

use csar::bench::{run_bench, summarize, summary_lookup, Method, SummaryRow};
use csar::evaluation::{evaluate, Mode};
use csar::induction::{
    ablate_pair, best_match_position, cooccurrence_counts, enumerate_candidates, pair_weight, Inducer, MeaningState,
    RecordState, Span,
};
use csar::metrics::{polysemy, synonymy, toposim};
use csar::procgen::{expand_grid, generate_dataset, GridSpec, ProcGenConfig};
use csar::{induce, Corpus, InductionConfig, Inventory, Morpheme, TokenId, Weighting};

const TRIVIAL_MAX_SECONDS: f64 = 1.0;
const GRID_FUZZY_MIN: f64 = 0.85;
const GRID_EXACT_MIN: f64 = 0.70;
const GRID_FUZZY_FORM_MIN: f64 = 0.92;
const GRID_MAX_SECONDS: f64 = 2.0 * 3600.0;
const PR_GAP_MAX: f64 = 0.08;
const RECORD_FUZZY_RANGE: (f64, f64) = (0.35, 0.55);
const RECORD_EXACT_MAX: f64 = 0.20;
const MI_TOLERANCE: f64 = 1e-12;
const SHUFFLED_RHO_MAX: f64 = 0.05;
const TOPOSIM_PAIRS: usize = 10_000;
const SCALE_MAX_SECONDS: f64 = 30.0 * 60.0;
const SCALE_MAX_BYTES: u64 = 8 << 30;

/// Criteria that fail for reasons analysed in the decisions ledger. They
/// still print FAIL; they just do not fail the run.
const KNOWN_SHORTFALLS: &[&str] = &["record-baseline"];

const SCALE_CHILD_ENV: &str = "CSAR_ACCEPTANCE_SCALE_CHILD";

type Check = fn() -> Result<String, String>;

fn main() {
    if std::env::var_os(SCALE_CHILD_ENV).is_some() {
        scale_child();
        return;
    }
    let checks: [(&str, Check); 8] = [
        ("trivial-recovery", trivial_recovery),
        ("grid-reproduction", grid_reproduction),
        ("precision-recall-balance", precision_recall_balance),
        ("record-baseline", record_baseline),
        ("worked-example-goldens", worked_example_goldens),
        ("oracle-properties", oracle_properties),
        ("metrics-sanity", metrics_sanity),
        ("scale-check", scale_check),
    ];
    let wanted: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut unexpected = 0;
    for (name, check) in checks {
        if !wanted.is_empty() && !wanted.iter().any(|w| name.contains(w.as_str())) {
            continue;
        }
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(check).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {name}: {detail} [{secs:.1}s]"),
            Err(detail) if KNOWN_SHORTFALLS.contains(&name) => {
                println!("FAIL {name}: {detail} [{secs:.1}s] (known shortfall, see ledger)")
            }
            Err(detail) => {
                unexpected += 1;
                println!("FAIL {name}: {detail} [{secs:.1}s]");
            }
        }
    }
    if unexpected > 0 {
        std::process::exit(1);
    }
}

fn ensure(ok: bool, detail: String) -> Result<String, String> {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn trivial_recovery() -> Result<String, String> {
    let mut worst = 0.0f64;
    let mut failures = Vec::new();
    for seed in 0..10 {
        let config = ProcGenConfig {
            seed,
            ..Default::default()
        };
        let (corpus, truth) = generate_dataset(&config).map_err(|e| e.to_string())?;
        let start = Instant::now();
        let inventory = induce(&corpus, &InductionConfig::default()).map_err(|e| e.to_string())?;
        worst = worst.max(start.elapsed().as_secs_f64());
        let f1 = evaluate(&inventory.morphemes, &truth, &[Mode::ExactFull], false).scores[0].1.f1;
        if f1 != 1.0 {
            failures.push(format!("seed {seed} exact F1 {f1}"));
        }
    }
    ensure(
        failures.is_empty() && worst < TRIVIAL_MAX_SECONDS,
        format!(
            "exact full F1 = 1.0 on {}/10 seeds, slowest {worst:.3}s (limit {TRIVIAL_MAX_SECONDS}s){}",
            10 - failures.len(),
            if failures.is_empty() { String::new() } else { format!("; {}", failures.join(", ")) }
        ),
    )
}

struct GridRun {
    summary: Vec<SummaryRow>,
    seconds: f64,
    datasets: usize,
    failures: usize,
}

fn grid() -> &'static GridRun {
    static RUN: OnceLock<GridRun> = OnceLock::new();
    RUN.get_or_init(|| {
        let configs = expand_grid(&GridSpec::full());
        let jobs = std::thread::available_parallelism().map_or(1, |n| n.get());
        let start = Instant::now();
        let results = run_bench(&configs, &Method::ALL, &InductionConfig::default(), jobs);
        GridRun {
            summary: summarize(&results.rows),
            seconds: start.elapsed().as_secs_f64(),
            datasets: configs.len(),
            failures: results.failures.len(),
        }
    })
}

fn grid_score(method: Method, mode: Mode) -> Result<&'static SummaryRow, String> {
    summary_lookup(&grid().summary, method, mode).ok_or_else(|| format!("no {method} {mode} rows"))
}

fn grid_reproduction() -> Result<String, String> {
    let g = grid();
    let fuzzy = grid_score(Method::Csar, Mode::FuzzyFull)?.f1;
    let exact = grid_score(Method::Csar, Mode::ExactFull)?.f1;
    let form = grid_score(Method::Csar, Mode::FuzzyForm)?.f1;
    ensure(
        g.failures == 0
            && fuzzy >= GRID_FUZZY_MIN
            && exact >= GRID_EXACT_MIN
            && form >= GRID_FUZZY_FORM_MIN
            && g.seconds <= GRID_MAX_SECONDS,
        format!(
            "{} datasets, {} failed cells; fuzzy F1 {fuzzy:.3} (>= {GRID_FUZZY_MIN}), exact F1 {exact:.3} (>= {GRID_EXACT_MIN}), \
             fuzzy form F1 {form:.3} (>= {GRID_FUZZY_FORM_MIN}); wall clock {:.0}s (<= {GRID_MAX_SECONDS}s)",
            g.datasets, g.failures, g.seconds
        ),
    )
}

fn precision_recall_balance() -> Result<String, String> {
    let s = grid_score(Method::Csar, Mode::FuzzyFull)?;
    let gap = (s.precision - s.recall).abs();
    ensure(
        gap <= PR_GAP_MAX,
        format!("fuzzy precision {:.3}, recall {:.3}, gap {gap:.3} (<= {PR_GAP_MAX})", s.precision, s.recall),
    )
}

fn record_baseline() -> Result<String, String> {
    let fuzzy = grid_score(Method::Record, Mode::FuzzyFull)?.f1;
    let exact = grid_score(Method::Record, Mode::ExactFull)?.f1;
    let (lo, hi) = RECORD_FUZZY_RANGE;
    ensure(
        (lo..=hi).contains(&fuzzy) && exact <= RECORD_EXACT_MAX,
        format!("fuzzy full F1 {fuzzy:.3} (in [{lo}, {hi}]), exact full F1 {exact:.3} (<= {RECORD_EXACT_MAX})"),
    )
}

fn toy_corpus() -> Corpus {
    Corpus::from_records([
        (vec!["s"], vec!["□"]),
        (vec!["s", "t"], vec!["□", "×"]),
        (vec!["c", "t"], vec!["○", "×"]),
    ])
}

fn worked_example_goldens() -> Result<String, String> {
    let corpus = toy_corpus();
    let c = enumerate_candidates(&corpus, &InductionConfig::default()).map_err(|e| e.to_string())?;
    let f = |s: &[&str]| -> Vec<TokenId> { s.iter().map(|t| corpus.form_vocab.get(t).unwrap()).collect() };
    let m = |s: &[&str]| -> Vec<TokenId> {
        let mut v: Vec<TokenId> = s.iter().map(|t| corpus.meaning_vocab.get(t).unwrap()).collect();
        v.sort();
        v
    };
    // Columns in the published order.
    let form_cols = [f(&["c"]), f(&["s"]), f(&["t"]), f(&["c", "t"]), f(&["s", "t"])];
    let meaning_cols = [m(&["□"]), m(&["×"]), m(&["○"]), m(&["□", "×"]), m(&["○", "×"])];
    if c.forms.len() != 5 || c.meanings.len() != 5 {
        return Err(format!("{} form and {} meaning candidates, expected 5 and 5", c.forms.len(), c.meanings.len()));
    }
    let project = |ids: Vec<Option<u32>>, matrix: &csar::induction::OccurrenceMatrix| -> Option<Vec<Vec<u8>>> {
        let ids: Option<Vec<u32>> = ids.into_iter().collect();
        let ids = ids?;
        Some((0..3).map(|r| ids.iter().map(|&i| matrix.get(r, i) as u8).collect()).collect())
    };
    let o_f = project(form_cols.iter().map(|t| c.form_id(t)).collect(), &c.form_occurrence)
        .ok_or("an expected form candidate is missing")?;
    let o_m = project(meaning_cols.iter().map(|t| c.meaning_id(t)).collect(), &c.meaning_occurrence)
        .ok_or("an expected meaning candidate is missing")?;
    let expected_f = vec![vec![0, 1, 0, 0, 0], vec![0, 1, 1, 0, 1], vec![1, 0, 1, 1, 0]];
    let expected_m = vec![vec![1, 0, 0, 0, 0], vec![1, 1, 0, 1, 0], vec![0, 1, 1, 0, 1]];
    if o_f != expected_f || o_m != expected_m {
        return Err(format!("occurrence matrices differ: forms {o_f:?}, meanings {o_m:?}"));
    }

    let mut states: Vec<RecordState> = corpus.records.iter().map(|r| RecordState::from_record(r, false)).collect();
    let hits = ablate_pair(&mut states, &f(&["t"]), &m(&["×"]));
    let expected = [(f(&["s"]), m(&["□"])), (f(&["s"]), m(&["□"])), (f(&["c"]), m(&["○"]))];
    let states_ok = hits == 2
        && states.iter().zip(&expected).all(|(s, (form, meaning))| {
            s.segments == vec![form.clone()] && s.meaning == MeaningState::Set(meaning.clone())
        });
    if !states_ok {
        return Err(format!("ablating (t, ×) hit {hits} records and left {states:?}"));
    }

    // "x y z x y" with meaning {A, B}, applying ("x y", {A}); "z x y" pairs
    // with B more strongly than "x y z" does.
    let seg = vec![[0u32, 1, 2, 0, 1].map(TokenId).to_vec()];
    let occurrences = [Span { segment: 0, offset: 0 }, Span { segment: 0, offset: 3 }];
    let weight = |s: &[TokenId]| match s.iter().map(|t| t.0).collect::<Vec<_>>().as_slice() {
        [2, 0, 1] => 0.9,
        [0, 1, 2] => 0.5,
        _ => 0.0,
    };
    let pos = best_match_position(&seg, &occurrences, 2, None, weight);
    ensure(
        pos == 0,
        format!("toy candidate sets and matrices match; (t, ×) ablation states match; ambiguous application picks occurrence {pos} (want 0)"),
    )
}

fn micro_corpus(rng: &mut ChaCha8Rng) -> Corpus {
    let n = rng.random_range(1..=20);
    Corpus::from_records((0..n).map(|_| {
        let form: Vec<String> = (0..rng.random_range(1..=5)).map(|_| format!("f{}", rng.random_range(0..4))).collect();
        let meaning: Vec<String> = (0..rng.random_range(1..=4)).map(|_| format!("m{}", rng.random_range(0..5))).collect();
        (form, meaning)
    }))
}

fn direct_mi(n_fm: u32, n_f: u32, n_m: u32, n: u32) -> f64 {
    let n = n as f64;
    let cells = [
        (n_fm as f64, n_f as f64, n_m as f64),
        ((n_f - n_fm) as f64, n_f as f64, n - n_m as f64),
        ((n_m - n_fm) as f64, n - n_f as f64, n_m as f64),
        (n - (n_f + n_m - n_fm) as f64, n - n_f as f64, n - n_m as f64),
    ];
    cells
        .iter()
        .filter(|c| c.0 > 0.0)
        .map(|&(joint, x, y)| (joint / n) * ((joint / n) / ((x / n) * (y / n))).log2())
        .sum()
}

fn oracle_properties() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let config = InductionConfig::default();

    for case in 0..1000 {
        let corpus = micro_corpus(&mut rng);
        let c = enumerate_candidates(&corpus, &config).map_err(|e| e.to_string())?;
        let counts = cooccurrence_counts(&c.form_occurrence, &c.meaning_occurrence, 0);
        for (fi, form) in c.forms.iter().enumerate() {
            for (mi, meaning) in c.meanings.iter().enumerate() {
                let brute = corpus
                    .records
                    .iter()
                    .filter(|r| r.form.windows(form.len()).any(|w| w == form) && meaning.iter().all(|t| r.meaning.contains(t)))
                    .count() as u32;
                if counts.get(fi as u32, mi as u32) != brute {
                    return Err(format!("co-occurrence mismatch in case {case}"));
                }
            }
        }
    }

    let mut worst_mi = 0.0f64;
    for _ in 0..10_000 {
        let n = rng.random_range(2..200u32);
        let n_f = rng.random_range(1..n);
        let n_m = rng.random_range(1..n);
        let lo = (n_f + n_m).saturating_sub(n);
        let n_fm = rng.random_range(lo..=n_f.min(n_m));
        let w = pair_weight(n_fm, n_f, n_m, n, Weighting::MutualInformation);
        let positive = (n_fm as u64) * (n as u64) > (n_f as u64) * (n_m as u64);
        let expected = if positive { direct_mi(n_fm, n_f, n_m, n) } else { 0.0 };
        worst_mi = worst_mi.max((w - expected).abs());
    }
    if worst_mi > MI_TOLERANCE {
        return Err(format!("MI differs from direct evaluation by {worst_mi:e} bits"));
    }

    for case in 0..100 {
        let corpus = micro_corpus(&mut rng);
        let inv = induce(&corpus, &config).map_err(|e| e.to_string())?;
        if inv.morphemes.windows(2).any(|w| w[1].weight > w[0].weight) {
            return Err(format!("selected weights increase in case {case}"));
        }
    }

    for case in 0..50 {
        let corpus = micro_corpus(&mut rng);
        let full = induce(&corpus, &config).map_err(|e| e.to_string())?;
        for k in [1, 3, 10] {
            let stopped = induce(
                &corpus,
                &InductionConfig {
                    max_inventory_size: Some(k),
                    ..config.clone()
                },
            )
            .map_err(|e| e.to_string())?;
            if stopped != full.prefix(k) {
                return Err(format!("k = {k} run is not a prefix in case {case}"));
            }
        }
    }

    let (a, b) = (smoke_bench("a")?, smoke_bench("b")?);
    ensure(
        a == b,
        format!(
            "co-occurrence = brute force on 1000 corpora; MI within {worst_mi:.1e} bits of direct evaluation; weights non-increasing on 100 corpora; \
             prefixes hold for k in {{1,3,10}}; two smoke benches byte-identical ({} bytes)",
            a.len()
        ),
    )
}

/// Runs `csar bench --grid smoke --omit-timing` and returns its output files.
fn smoke_bench(tag: &str) -> Result<Vec<u8>, String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let out = dir.path().join(tag);
    let status = Command::new(env!("CARGO_BIN_EXE_csar"))
        .args(["bench", "--grid", "smoke", "--omit-timing", "--out-dir"])
        .arg(&out)
        .output()
        .map_err(|e| e.to_string())?;
    if !status.status.success() {
        return Err(format!("smoke bench failed: {}", String::from_utf8_lossy(&status.stderr)));
    }
    let mut bytes = Vec::new();
    for name in ["results.csv", "summary.csv", "table.txt"] {
        bytes.extend(std::fs::read(out.join(name)).map_err(|e| format!("{name}: {e}"))?);
    }
    Ok(bytes)
}

fn morpheme(form: &[u32], meaning: &[u32], prevalence: f64) -> Morpheme {
    Morpheme {
        form: form.iter().copied().map(TokenId).collect(),
        meaning: meaning.iter().copied().map(TokenId).collect(),
        weight: 0.0,
        initial_weight: 0.0,
        order: 0,
        prevalence,
    }
}

fn metrics_sanity() -> Result<String, String> {
    let bijective = Inventory {
        morphemes: (0..12).map(|i| morpheme(&[i], &[i], 0.05 + i as f64 / 100.0)).collect(),
    };
    let (syn, poly) = (synonymy(&bijective), polysemy(&bijective));

    // Attribute-ordered utterances spelling out the meaning token for token.
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let meanings: Vec<Vec<String>> = (0..2000)
        .map(|_| (0..4).map(|a| format!("a{a}v{}", rng.random_range(0..4))).collect())
        .collect();
    let identity = Corpus::from_records(meanings.iter().map(|m| (m.clone(), m.clone())));
    let rho_identity = toposim(&identity, TOPOSIM_PAIRS, 0).ok_or("identity toposim undefined")?;

    let mut shuffled_meanings = meanings.clone();
    shuffled_meanings.shuffle(&mut rng);
    let shuffled = Corpus::from_records(meanings.iter().cloned().zip(shuffled_meanings));
    let rho_shuffled = toposim(&shuffled, TOPOSIM_PAIRS, 0).ok_or("shuffled toposim undefined")?;

    ensure(
        syn == 0.0 && poly == 0.0 && (rho_identity - 1.0).abs() < 1e-12 && rho_shuffled.abs() <= SHUFFLED_RHO_MAX,
        format!(
            "bijective synonymy {syn}, polysemy {poly}; toposim identity {rho_identity:.6}, shuffled {rho_shuffled:.4} \
             (|rho| <= {SHUFFLED_RHO_MAX}, {TOPOSIM_PAIRS} pairs)"
        ),
    )
}

/// Caption-like corpus: Zipfian concepts, each named by one or two words,
/// mixed with function words and an open vocabulary larger than the token
/// cap.
fn caption_corpus(records: usize, seed: u64) -> Corpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let concepts = Zipf::new(400.0, 1.0).expect("zipf");
    let fillers = Zipf::new(40.0, 1.2).expect("zipf");
    let open = Zipf::new(3000.0, 1.0).expect("zipf");
    let mut corpus = Corpus::new();
    for _ in 0..records {
        let mut meaning: Vec<usize> = Vec::new();
        let size = rng.random_range(2..=5);
        while meaning.len() < size {
            let c = concepts.sample(&mut rng) as usize;
            if !meaning.contains(&c) {
                meaning.push(c);
            }
        }
        let mut words = Vec::new();
        for &c in &meaning {
            for _ in 0..rng.random_range(1..=2) {
                words.push(format!("f{}", fillers.sample(&mut rng) as usize));
            }
            if rng.random_bool(0.9) {
                words.push(format!("w{c}"));
                if c % 3 == 0 {
                    words.push(format!("x{c}"));
                }
            }
            if rng.random_bool(0.6) {
                words.push(format!("o{}", open.sample(&mut rng) as usize));
            }
        }
        if words.is_empty() {
            words.push("f1".into());
        }
        corpus.push(words, meaning.iter().map(|c| format!("c{c}")));
    }
    corpus
}

fn scale_config() -> InductionConfig {
    InductionConfig {
        max_records: Some(20_000),
        max_inventory_size: Some(300),
        max_form_size: Some(3),
        max_meaning_size: Some(2),
        token_vocab_size: Some(1000),
        form_vocab_size: Some(100_000),
        meaning_vocab_size: Some(100_000),
        cooccurrence_threshold: 10,
        search_best_form: false,
        ..Default::default()
    }
}

/// Runs in a fresh process so its peak resident set is its own.
fn scale_child() {
    let corpus = caption_corpus(20_000, 5);
    let start = Instant::now();
    let outcome = Inducer::new(&corpus, &scale_config()).expect("induction setup").run();
    let seconds = start.elapsed().as_secs_f64();
    let peak = peak_rss_bytes().unwrap_or(0);
    println!("{} {} {seconds} {peak}", corpus.len(), outcome.inventory.len());
}

fn peak_rss_bytes() -> Option<u64> {
    let status = std::fs::read_to_string("/proc/self/status").ok()?;
    let line = status.lines().find(|l| l.starts_with("VmHWM:"))?;
    let kb: u64 = line.split_whitespace().nth(1)?.parse().ok()?;
    Some(kb * 1024)
}

fn scale_check() -> Result<String, String> {
    let exe = std::env::current_exe().map_err(|e| e.to_string())?;
    let output = Command::new(&exe)
        .env(SCALE_CHILD_ENV, "1")
        .current_dir(Path::new(env!("CARGO_MANIFEST_DIR")))
        .output()
        .map_err(|e| e.to_string())?;
    if !output.status.success() {
        return Err(format!("scale run failed: {}", String::from_utf8_lossy(&output.stderr)));
    }
    let stdout = String::from_utf8_lossy(&output.stdout);
    let fields: Vec<&str> = stdout.split_whitespace().collect();
    let [records, morphemes, seconds, peak] = fields[..] else {
        return Err(format!("unexpected child output: {stdout}"));
    };
    let seconds: f64 = seconds.parse().map_err(|_| "bad seconds")?;
    let peak: u64 = peak.parse().map_err(|_| "bad peak")?;
    let peak_mb = peak as f64 / (1 << 20) as f64;
    let peak_note = if peak == 0 { "peak memory unavailable".to_owned() } else { format!("peak RSS {peak_mb:.0} MiB") };
    ensure(
        seconds <= SCALE_MAX_SECONDS && peak <= SCALE_MAX_BYTES && morphemes != "0",
        format!(
            "{records} records, {morphemes} morphemes in {:.1?} (<= 30 min), {peak_note} (<= 8 GiB)",
            Duration::from_secs_f64(seconds)
        ),
    )
}
