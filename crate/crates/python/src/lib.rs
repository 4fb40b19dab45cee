//! Python bindings. Tokens cross the boundary as strings; morphemes as
//! `Morpheme` objects or `(form, meaning)` tuples of string lists.

use pyo3::exceptions::{PyOSError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use csar_core::evaluation::{self, Mode};
use csar_core::inventory::{GroundTruth, MorphemePair};
use csar_core::procgen::{self, ProcGenConfig};
use csar_core::{metrics, CsarError, InductionConfig, Inventory, TokenId, Vocab, Weighting};

type Pair = (Vec<String>, Vec<String>);

fn py_err(e: CsarError) -> PyErr {
    match e {
        CsarError::Io { .. } => PyOSError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

/// A parallel corpus of (form tokens, meaning tokens) records.
#[pyclass(name = "Corpus", module = "csar", frozen)]
struct PyCorpus {
    inner: csar_core::Corpus,
}

#[pymethods]
impl PyCorpus {
    /// Records with an empty side are skipped and counted in `skipped_count`.
    #[new]
    fn new(records: Vec<Pair>) -> Self {
        PyCorpus {
            inner: csar_core::Corpus::from_records(records),
        }
    }

    #[staticmethod]
    #[pyo3(signature = (path, max_records=None))]
    fn load(path: &str, max_records: Option<usize>) -> PyResult<Self> {
        csar_core::load_corpus(path, max_records)
            .map(|inner| PyCorpus { inner })
            .map_err(py_err)
    }

    fn save(&self, path: &str) -> PyResult<()> {
        csar_core::save_corpus(&self.inner, path).map_err(py_err)
    }

    #[getter]
    fn skipped_count(&self) -> usize {
        self.inner.skipped_count
    }

    fn records(&self) -> Vec<Pair> {
        self.inner
            .records
            .iter()
            .map(|r| (strings(&self.inner.form_vocab, &r.form), strings(&self.inner.meaning_vocab, &r.meaning)))
            .collect()
    }

    /// Spearman correlation of pairwise utterance and meaning distances.
    #[pyo3(signature = (sample_size=metrics::DEFAULT_TOPOSIM_PAIRS, seed=0))]
    fn toposim(&self, sample_size: usize, seed: u64) -> Option<f64> {
        metrics::toposim(&self.inner, sample_size, seed)
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!("Corpus({} records)", self.inner.len())
    }
}

fn strings(vocab: &Vocab, ids: &[TokenId]) -> Vec<String> {
    ids.iter().map(|&t| vocab.resolve(t).to_owned()).collect()
}

/// An induced form–meaning pair.
#[pyclass(name = "Morpheme", module = "csar", frozen, get_all, skip_from_py_object)]
#[derive(Clone)]
struct PyMorpheme {
    form: Vec<String>,
    meaning: Vec<String>,
    weight: f64,
    initial_weight: f64,
    order: usize,
    prevalence: f64,
}

#[pymethods]
impl PyMorpheme {
    fn __repr__(&self) -> String {
        format!(
            "Morpheme({:?}, {:?}, weight={:.4}, prevalence={:.4})",
            self.form.join(" "),
            self.meaning,
            self.weight,
            self.prevalence
        )
    }
}

fn to_py(inventory: Inventory, corpus: &csar_core::Corpus) -> Vec<PyMorpheme> {
    inventory
        .morphemes
        .into_iter()
        .map(|m| PyMorpheme {
            form: strings(&corpus.form_vocab, &m.form),
            meaning: strings(&corpus.meaning_vocab, &m.meaning),
            weight: m.weight,
            initial_weight: m.initial_weight,
            order: m.order,
            prevalence: m.prevalence,
        })
        .collect()
}

/// Accepts `Morpheme` objects and `(form, meaning)` tuples alike.
fn extract_morphemes(items: &Bound<'_, PyAny>) -> PyResult<Vec<PyMorpheme>> {
    let mut out = Vec::new();
    for (order, item) in items.try_iter()?.enumerate() {
        let item = item?;
        if let Ok(m) = item.cast::<PyMorpheme>() {
            out.push(m.get().clone());
        } else {
            let (form, meaning): Pair = item.extract()?;
            out.push(PyMorpheme {
                form,
                meaning,
                weight: 0.0,
                initial_weight: 0.0,
                order,
                prevalence: 0.0,
            });
        }
    }
    Ok(out)
}

fn intern_inventory(items: &[PyMorpheme], fv: &mut Vocab, mv: &mut Vocab) -> Inventory {
    let intern = |v: &mut Vocab, s: &[String], sort: bool| {
        let mut ids: Vec<TokenId> = s.iter().map(|t| v.intern(t)).collect();
        if sort {
            ids.sort();
            ids.dedup();
        }
        ids
    };
    Inventory {
        morphemes: items
            .iter()
            .map(|m| csar_core::Morpheme {
                form: intern(fv, &m.form, false),
                meaning: intern(mv, &m.meaning, true),
                weight: m.weight,
                initial_weight: m.initial_weight,
                order: m.order,
                prevalence: m.prevalence,
            })
            .collect(),
    }
}

/// Runs CSAR on `corpus` and returns the inventory in selection order.
#[pyfunction]
#[pyo3(signature = (
    corpus, *, weighting="mi", max_records=None, max_inventory_size=None, max_form_size=None,
    max_meaning_size=None, form_vocab_size=None, meaning_vocab_size=None, token_vocab_size=None,
    cooccurrence_threshold=0, search_best_form=true, ngram_semantics=false, time_limit=None, seed=0
))]
#[allow(clippy::too_many_arguments)]
fn induce(
    py: Python<'_>,
    corpus: &PyCorpus,
    weighting: &str,
    max_records: Option<usize>,
    max_inventory_size: Option<usize>,
    max_form_size: Option<usize>,
    max_meaning_size: Option<usize>,
    form_vocab_size: Option<usize>,
    meaning_vocab_size: Option<usize>,
    token_vocab_size: Option<usize>,
    cooccurrence_threshold: u32,
    search_best_form: bool,
    ngram_semantics: bool,
    time_limit: Option<f64>,
    seed: u64,
) -> PyResult<Vec<PyMorpheme>> {
    let weighting: Weighting = weighting.parse().map_err(PyValueError::new_err)?;
    let config = InductionConfig {
        weighting,
        max_records,
        max_inventory_size,
        max_form_size,
        max_meaning_size,
        form_vocab_size,
        meaning_vocab_size,
        token_vocab_size,
        cooccurrence_threshold,
        search_best_form,
        ngram_semantics,
        time_limit,
        seed,
    };
    let inventory = py
        .detach(|| csar_core::induce(&corpus.inner, &config))
        .map_err(py_err)?;
    Ok(to_py(inventory, &corpus.inner))
}

/// Generates a procedural dataset; returns the corpus and its ground-truth
/// `(form, meaning)` pairs.
#[pyfunction]
#[pyo3(signature = (
    *, n_attributes=4, n_values=4, sparse_meanings=false, synonymy=1, polysemy_rate=0.0,
    form_lengths=vec![1], vocab_size=None, imbalance=false, dataset_size=500, noise_rate=0.0,
    shuffle=false, non_compositional=false, seed=0
))]
#[allow(clippy::too_many_arguments)]
fn generate(
    n_attributes: usize,
    n_values: usize,
    sparse_meanings: bool,
    synonymy: usize,
    polysemy_rate: f64,
    form_lengths: Vec<usize>,
    vocab_size: Option<usize>,
    imbalance: bool,
    dataset_size: usize,
    noise_rate: f64,
    shuffle: bool,
    non_compositional: bool,
    seed: u64,
) -> PyResult<(PyCorpus, Vec<Pair>)> {
    let config = ProcGenConfig {
        n_attributes,
        n_values,
        sparse_meanings,
        synonymy,
        polysemy_rate,
        form_lengths,
        vocab_size,
        imbalance,
        dataset_size,
        noise_rate,
        shuffle,
        non_compositional,
        seed,
    };
    let (corpus, truth) = procgen::generate_dataset(&config).map_err(py_err)?;
    let truth = truth
        .morphemes
        .iter()
        .map(|p| (strings(&corpus.form_vocab, &p.form), strings(&corpus.meaning_vocab, &p.meaning)))
        .collect();
    Ok((PyCorpus { inner: corpus }, truth))
}

/// Scores `induced` against `truth`; returns `{mode: (precision, recall, f1)}`.
/// Form-only modes are left out when `noisy` is set.
#[pyfunction]
#[pyo3(signature = (induced, truth, *, modes=None, noisy=false))]
fn evaluate<'py>(
    py: Python<'py>,
    induced: &Bound<'py, PyAny>,
    truth: &Bound<'py, PyAny>,
    modes: Option<Vec<String>>,
    noisy: bool,
) -> PyResult<Bound<'py, PyDict>> {
    let modes: Vec<Mode> = match modes {
        None => Mode::ALL.to_vec(),
        Some(names) => names
            .iter()
            .map(|n| n.parse::<Mode>().map_err(PyValueError::new_err))
            .collect::<PyResult<_>>()?,
    };
    let (mut fv, mut mv) = (Vocab::new(), Vocab::new());
    let induced = intern_inventory(&extract_morphemes(induced)?, &mut fv, &mut mv);
    let truth = GroundTruth {
        morphemes: intern_inventory(&extract_morphemes(truth)?, &mut fv, &mut mv)
            .morphemes
            .into_iter()
            .map(|m| MorphemePair {
                form: m.form,
                meaning: m.meaning,
            })
            .collect(),
    };
    let report = evaluation::evaluate(&induced.morphemes, &truth, &modes, noisy);
    let out = PyDict::new(py);
    for (mode, s) in report.scores {
        out.set_item(mode.to_string(), (s.precision, s.recall, s.f1))?;
    }
    Ok(out)
}

/// One morpheme per distinct record.
#[pyfunction]
fn record_baseline(corpus: &PyCorpus) -> Vec<PyMorpheme> {
    to_py(evaluation::record_baseline(&corpus.inner), &corpus.inner)
}

/// Form-only BPE inventory with the heuristic vocabulary size.
#[pyfunction]
fn bpe_baseline(corpus: &PyCorpus) -> Vec<PyMorpheme> {
    to_py(evaluation::bpe_baseline(&corpus.inner), &corpus.inner)
}

/// Inventory metrics as a dict; toposim needs `corpus`.
#[pyfunction]
#[pyo3(signature = (inventory, corpus=None, *, sample_size=metrics::DEFAULT_TOPOSIM_PAIRS, seed=0))]
fn analyze<'py>(
    py: Python<'py>,
    inventory: &Bound<'py, PyAny>,
    corpus: Option<&PyCorpus>,
    sample_size: usize,
    seed: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let (mut fv, mut mv) = (Vocab::new(), Vocab::new());
    let inventory = intern_inventory(&extract_morphemes(inventory)?, &mut fv, &mut mv);
    let m = metrics::analyze(&inventory, corpus.map(|c| &c.inner), sample_size, seed);
    let out = PyDict::new(py);
    out.set_item("inventory_size", m.inventory_size)?;
    out.set_item("inventory_entropy", m.inventory_entropy)?;
    out.set_item("synonymy", m.synonymy)?;
    out.set_item("polysemy", m.polysemy)?;
    out.set_item("mean_form_size", m.mean_form_size)?;
    out.set_item("mean_meaning_size", m.mean_meaning_size)?;
    out.set_item("toposim", m.toposim)?;
    out.set_item("zero_prevalence", m.zero_prevalence)?;
    Ok(out)
}

#[pymodule]
fn csar(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyCorpus>()?;
    m.add_class::<PyMorpheme>()?;
    m.add_function(wrap_pyfunction!(induce, m)?)?;
    m.add_function(wrap_pyfunction!(generate, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add_function(wrap_pyfunction!(record_baseline, m)?)?;
    m.add_function(wrap_pyfunction!(bpe_baseline, m)?)?;
    m.add_function(wrap_pyfunction!(analyze, m)?)?;
    Ok(())
}
