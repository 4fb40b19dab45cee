//! Greedy morpheme induction: count co-occurrences, select the heaviest
//! form–meaning pair, ablate it from the corpus, repeat.
//!
//! Weights are capped: once a pair has been scored, its effective weight can
//! never rise above the lowest weight it has had so far. Selected weights are
//! therefore non-increasing, and stopping early yields a prefix of the full
//! run (the inventory is an anytime result).
//!
//! [`Inducer`] keeps the occurrence rows, marginal counts and pair counts up
//! to date incrementally: only records touched by an ablation are
//! re-enumerated, and only pairs whose form or meaning changed marginals are
//! re-weighted. A lazy max-heap holds every live pair's capped weight.

mod candidates;
mod select;
mod state;
mod weight;

use std::collections::BinaryHeap;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

pub use candidates::{
    cooccurrence_counts, enumerate_candidates, CandidateSet, Candidates, CooccurrenceCounts,
    OccurrenceMatrix,
};
pub use select::{best_match_position, quasirandom_position, select_pair, selection_order, PairChoice};
pub use state::{ablate_pair, MeaningState, RecordState, Span};
pub use weight::{pair_weight, Weighting};
use weight::LogTable;

use crate::corpus::{Corpus, TokenId};
use crate::error::{CsarError, Result};
use crate::inventory::{Inventory, Morpheme};
use candidates::{for_each_subset, for_each_substring};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct InductionConfig {
    pub weighting: Weighting,
    /// Only the first this-many records are used.
    pub max_records: Option<usize>,
    /// Stop after this many morphemes.
    pub max_inventory_size: Option<usize>,
    pub max_form_size: Option<usize>,
    pub max_meaning_size: Option<usize>,
    /// Keep only the most frequent form candidates.
    pub form_vocab_size: Option<usize>,
    pub meaning_vocab_size: Option<usize>,
    /// Drop candidates containing a token outside the most frequent ones.
    pub token_vocab_size: Option<usize>,
    /// Co-occurrence counts below this are treated as zero.
    pub cooccurrence_threshold: u32,
    /// Pick the least morpheme-like match when a form matches several times;
    /// otherwise pick quasirandomly.
    pub search_best_form: bool,
    /// Treat meanings as ordered and use contiguous n-grams as candidates.
    pub ngram_semantics: bool,
    /// Wall-clock budget in seconds.
    pub time_limit: Option<f64>,
    pub seed: u64,
}

impl Default for InductionConfig {
    fn default() -> Self {
        InductionConfig {
            weighting: Weighting::MutualInformation,
            max_records: None,
            max_inventory_size: None,
            max_form_size: None,
            max_meaning_size: None,
            form_vocab_size: None,
            meaning_vocab_size: None,
            token_vocab_size: None,
            cooccurrence_threshold: 0,
            search_best_form: true,
            ngram_semantics: false,
            time_limit: None,
            seed: 0,
        }
    }
}

impl InductionConfig {
    pub fn validate(&self) -> Result<()> {
        let limits = [
            ("max records", self.max_records),
            ("max inventory size", self.max_inventory_size),
            ("max form size", self.max_form_size),
            ("max meaning size", self.max_meaning_size),
            ("form vocabulary size", self.form_vocab_size),
            ("meaning vocabulary size", self.meaning_vocab_size),
            ("token vocabulary size", self.token_vocab_size),
        ];
        for (name, value) in limits {
            if value == Some(0) {
                return Err(CsarError::Config(format!("{name} must be at least 1")));
            }
        }
        if let Some(t) = self.time_limit {
            if !(t.is_finite() && t >= 0.0) {
                return Err(CsarError::Config(format!("invalid time limit {t}")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    /// No pair with positive weight remains.
    Exhausted,
    InventoryLimit,
    TimeLimit,
}

#[derive(Clone, Debug)]
pub struct InductionOutcome {
    pub inventory: Inventory,
    pub stop_reason: StopReason,
    pub elapsed: Duration,
}

/// Every pair that started with positive weight, grouped by form with
/// ascending meanings, so `(form, meaning)` lookups are a binary search.
/// Dead pairs (capped weight 0) stay in the table but are never selected again.
#[derive(Default)]
struct PairTable {
    form_start: Vec<u32>,
    form: Vec<u32>,
    meaning: Vec<u32>,
    count: Vec<u32>,
    initial: Vec<f64>,
    cap: Vec<f64>,
    alive: Vec<bool>,
    /// Iteration of the last re-weighing, so a pair is scored once per iteration.
    stamp: Vec<u32>,
    by_meaning: Vec<Vec<u32>>,
}

impl PairTable {
    #[inline]
    fn form_range(&self, form: u32) -> std::ops::Range<usize> {
        self.form_start[form as usize] as usize..self.form_start[form as usize + 1] as usize
    }

    #[inline]
    fn lookup(&self, form: u32, meaning: u32) -> Option<u32> {
        let range = self.form_range(form);
        let start = range.start;
        self.meaning[range]
            .binary_search(&meaning)
            .ok()
            .map(|i| (start + i) as u32)
    }
}

/// Incremental CSAR engine over one corpus.
pub struct Inducer {
    config: InductionConfig,
    n_records: u32,
    forms: CandidateSet,
    meanings: CandidateSet,
    states: Vec<RecordState>,
    form_rows: Vec<Vec<u32>>,
    meaning_rows: Vec<Vec<u32>>,
    form_counts: Vec<u32>,
    meaning_counts: Vec<u32>,
    pairs: PairTable,
    alive_count: usize,
    logs: LogTable,
    heap: BinaryHeap<(u64, u32)>,
    form_selections: Vec<u32>,
    form_dirty: Vec<bool>,
    meaning_dirty: Vec<bool>,
    dirty_forms: Vec<u32>,
    dirty_meanings: Vec<u32>,
    morphemes: Vec<Morpheme>,
    started: Instant,
}

impl Inducer {
    pub fn new(corpus: &Corpus, config: &InductionConfig) -> Result<Self> {
        let started = Instant::now();
        let Candidates {
            forms,
            meanings,
            form_occurrence,
            meaning_occurrence,
        } = enumerate_candidates(corpus, config)?;
        let n_records = form_occurrence.n_rows();
        let states: Vec<RecordState> = corpus.records[..n_records]
            .iter()
            .map(|r| RecordState::from_record(r, config.ngram_semantics))
            .collect();
        let form_counts = form_occurrence.column_counts();
        let meaning_counts = meaning_occurrence.column_counts();
        let form_rows = form_occurrence.rows().to_vec();
        let meaning_rows = meaning_occurrence.rows().to_vec();

        let mut inducer = Inducer {
            config: config.clone(),
            n_records: n_records as u32,
            form_selections: vec![0; forms.len()],
            form_dirty: vec![false; forms.len()],
            meaning_dirty: vec![false; meanings.len()],
            forms,
            meanings,
            states,
            form_rows,
            meaning_rows,
            form_counts,
            meaning_counts,
            pairs: PairTable::default(),
            alive_count: 0,
            logs: LogTable::new(n_records as u32),
            heap: BinaryHeap::new(),
            dirty_forms: Vec::new(),
            dirty_meanings: Vec::new(),
            morphemes: Vec::new(),
            started,
        };
        inducer.build_pairs();
        Ok(inducer)
    }

    fn weigh(&self, count: u32, form: u32, meaning: u32) -> f64 {
        let count = if count < self.config.cooccurrence_threshold { 0 } else { count };
        self.logs.weight(
            count,
            self.form_counts[form as usize],
            self.meaning_counts[meaning as usize],
            self.n_records,
            self.config.weighting,
        )
    }

    fn build_pairs(&mut self) {
        let n_forms = self.forms.len();
        let mut records_of: Vec<Vec<u32>> = vec![Vec::new(); n_forms];
        for (j, row) in self.form_rows.iter().enumerate() {
            for &f in row {
                records_of[f as usize].push(j as u32);
            }
        }
        let mut pairs = PairTable {
            form_start: Vec::with_capacity(n_forms + 1),
            by_meaning: vec![Vec::new(); self.meanings.len()],
            ..Default::default()
        };
        let mut acc = vec![0u32; self.meanings.len()];
        let mut touched: Vec<u32> = Vec::new();
        for (f, records) in records_of.iter().enumerate() {
            pairs.form_start.push(pairs.form.len() as u32);
            for &j in records {
                for &m in &self.meaning_rows[j as usize] {
                    if acc[m as usize] == 0 {
                        touched.push(m);
                    }
                    acc[m as usize] += 1;
                }
            }
            touched.sort_unstable();
            for &m in &touched {
                let count = std::mem::take(&mut acc[m as usize]);
                let w = self.weigh(count, f as u32, m);
                if w > 0.0 {
                    let idx = pairs.form.len() as u32;
                    pairs.form.push(f as u32);
                    pairs.meaning.push(m);
                    pairs.count.push(count);
                    pairs.initial.push(w);
                    pairs.cap.push(w);
                    pairs.by_meaning[m as usize].push(idx);
                }
            }
            touched.clear();
        }
        pairs.form_start.push(pairs.form.len() as u32);
        let n_pairs = pairs.form.len();
        pairs.alive = vec![true; n_pairs];
        pairs.stamp = vec![u32::MAX; n_pairs];
        let heap: Vec<(u64, u32)> = pairs.cap.iter().enumerate().map(|(i, w)| (w.to_bits(), i as u32)).collect();
        self.alive_count = n_pairs;
        self.pairs = pairs;
        self.heap = BinaryHeap::from(heap);
    }

    /// Rebuilds the heap from live pairs once stale entries dominate it.
    fn compact_heap(&mut self) {
        if self.heap.len() <= 2 * self.alive_count + 4096 {
            return;
        }
        let p = &self.pairs;
        let entries: Vec<(u64, u32)> = (0..p.form.len())
            .filter(|&i| p.alive[i])
            .map(|i| (p.cap[i].to_bits(), i as u32))
            .collect();
        self.heap = BinaryHeap::from(entries);
    }

    pub fn config(&self) -> &InductionConfig {
        &self.config
    }

    pub fn states(&self) -> &[RecordState] {
        &self.states
    }

    pub fn form_candidates(&self) -> &CandidateSet {
        &self.forms
    }

    pub fn meaning_candidates(&self) -> &CandidateSet {
        &self.meanings
    }

    /// Occurrence matrices for the current record states.
    pub fn occurrence(&self) -> (OccurrenceMatrix, OccurrenceMatrix) {
        (
            OccurrenceMatrix::from_rows(self.form_rows.clone(), self.forms.len()),
            OccurrenceMatrix::from_rows(self.meaning_rows.clone(), self.meanings.len()),
        )
    }

    /// Records in which the pair currently co-occurs (before thresholding).
    pub fn cooccurrence(&self, form: &[TokenId], meaning: &[TokenId]) -> u32 {
        let (Some(f), Some(m)) = (self.forms.id_of(form), self.meanings.id_of(meaning)) else {
            return 0;
        };
        self.form_rows
            .iter()
            .zip(&self.meaning_rows)
            .filter(|(fr, mr)| fr.binary_search(&f).is_ok() && mr.binary_search(&m).is_ok())
            .count() as u32
    }

    /// Current capped weight of a pair; 0 if it can no longer be selected.
    pub fn capped_weight(&self, form: &[TokenId], meaning: &[TokenId]) -> f64 {
        let (Some(f), Some(m)) = (self.forms.id_of(form), self.meanings.id_of(meaning)) else {
            return 0.0;
        };
        match self.pairs.lookup(f, m) {
            Some(idx) if self.pairs.alive[idx as usize] => self.pairs.cap[idx as usize],
            _ => 0.0,
        }
    }

    pub fn morphemes(&self) -> &[Morpheme] {
        &self.morphemes
    }

    /// Selectable pairs with their tracked co-occurrence count and capped weight.
    pub fn live_pairs(&self) -> impl Iterator<Item = (&[TokenId], &[TokenId], u32, f64)> + '_ {
        let p = &self.pairs;
        (0..p.form.len()).filter(|&i| p.alive[i]).map(move |i| {
            (
                self.forms.get(p.form[i]),
                self.meanings.get(p.meaning[i]),
                p.count[i],
                p.cap[i],
            )
        })
    }

    fn stop_reason(&self) -> Option<StopReason> {
        if self
            .config
            .max_inventory_size
            .is_some_and(|max| self.morphemes.len() >= max)
        {
            return Some(StopReason::InventoryLimit);
        }
        if self
            .config
            .time_limit
            .is_some_and(|limit| self.started.elapsed().as_secs_f64() >= limit)
        {
            return Some(StopReason::TimeLimit);
        }
        None
    }

    /// Pops the best live pair off the heap, resolving weight ties.
    fn pop_best(&mut self) -> Option<u32> {
        loop {
            let &(bits, _) = self.heap.peek()?;
            let mut group = Vec::new();
            while let Some(&(b, idx)) = self.heap.peek() {
                if b != bits {
                    break;
                }
                self.heap.pop();
                let i = idx as usize;
                if self.pairs.alive[i] && self.pairs.cap[i].to_bits() == b {
                    group.push(idx);
                }
            }
            if group.is_empty() {
                continue;
            }
            let choice = |idx: u32| {
                let i = idx as usize;
                let f = self.pairs.form[i];
                PairChoice {
                    form: self.forms.get(f),
                    meaning: self.meanings.get(self.pairs.meaning[i]),
                    weight: self.pairs.cap[i],
                    initial_weight: self.pairs.initial[i],
                    form_selections: self.form_selections[f as usize],
                }
            };
            let best = *group
                .iter()
                .min_by(|&&a, &&b| selection_order(&choice(a), &choice(b)))
                .expect("non-empty tie group");
            for &idx in &group {
                if idx != best {
                    self.heap.push((bits, idx));
                }
            }
            return Some(best);
        }
    }

    /// Runs one count → select → ablate iteration. Returns the selected
    /// morpheme, or `None` once a stopping condition holds.
    pub fn step(&mut self) -> Option<&Morpheme> {
        if self.stop_reason().is_some() {
            return None;
        }
        let idx = self.pop_best()?;
        let i = idx as usize;
        let (f, m) = (self.pairs.form[i], self.pairs.meaning[i]);
        let weight = self.pairs.cap[i];
        let initial_weight = self.pairs.initial[i];
        let iteration = self.morphemes.len();

        let ablated = self.ablate(f, m, iteration);
        assert!(ablated > 0, "selected pair co-occurs in no record");
        self.form_selections[f as usize] += 1;
        self.reweigh_dirty(iteration as u32);
        self.compact_heap();

        let morpheme = Morpheme {
            form: self.forms.get(f).to_vec(),
            meaning: self.meanings.get(m).to_vec(),
            weight,
            initial_weight,
            order: iteration,
            prevalence: ablated as f64 / self.n_records as f64,
        };
        tracing::debug!(
            iteration,
            weight,
            initial_weight,
            records = ablated,
            form = ?morpheme.form,
            meaning = ?morpheme.meaning,
            "selected pair"
        );
        self.morphemes.push(morpheme);
        self.morphemes.last()
    }

    /// Runs to completion and returns the inventory.
    pub fn run(mut self) -> InductionOutcome {
        let stop_reason = loop {
            if let Some(reason) = self.stop_reason() {
                break reason;
            }
            if self.step().is_none() {
                break StopReason::Exhausted;
            }
        };
        tracing::info!(
            morphemes = self.morphemes.len(),
            ?stop_reason,
            elapsed_ms = self.started.elapsed().as_millis() as u64,
            "induction finished"
        );
        InductionOutcome {
            elapsed: self.started.elapsed(),
            inventory: Inventory {
                morphemes: self.morphemes,
            },
            stop_reason,
        }
    }

    fn form_row(&self, state: &RecordState) -> Vec<u32> {
        let mut row = Vec::new();
        for seg in &state.segments {
            for_each_substring(seg, self.config.max_form_size, |_| true, |s| {
                if let Some(id) = self.forms.id_of(s) {
                    row.push(id);
                }
            });
        }
        row.sort_unstable();
        row.dedup();
        row
    }

    fn meaning_row(&self, state: &RecordState) -> Vec<u32> {
        let mut row = Vec::new();
        let mut visit = |s: &[TokenId]| {
            if let Some(id) = self.meanings.id_of(s) {
                row.push(id);
            }
        };
        match &state.meaning {
            MeaningState::Set(set) => for_each_subset(set, self.config.max_meaning_size, &mut visit),
            MeaningState::Sequence(segs) => {
                for seg in segs {
                    for_each_substring(seg, self.config.max_meaning_size, |_| true, &mut visit);
                }
            }
        }
        row.sort_unstable();
        row.dedup();
        row
    }

    /// Strongest live pair made of `form` and one of `meanings`.
    fn competitor_weight(&self, form: &[TokenId], meanings: &[u32]) -> f64 {
        let Some(f) = self.forms.id_of(form) else { return 0.0 };
        meanings
            .iter()
            .filter_map(|&m| self.pairs.lookup(f, m))
            .filter(|&idx| self.pairs.alive[idx as usize])
            .map(|idx| self.pairs.cap[idx as usize])
            .fold(0.0, f64::max)
    }

    fn mark_form(&mut self, f: u32) {
        if !self.form_dirty[f as usize] {
            self.form_dirty[f as usize] = true;
            self.dirty_forms.push(f);
        }
    }

    fn mark_meaning(&mut self, m: u32) {
        if !self.meaning_dirty[m as usize] {
            self.meaning_dirty[m as usize] = true;
            self.dirty_meanings.push(m);
        }
    }

    fn decrement(&mut self, f: u32, m: u32) {
        if let Some(idx) = self.pairs.lookup(f, m) {
            let c = &mut self.pairs.count[idx as usize];
            debug_assert!(*c > 0);
            *c -= 1;
        }
    }

    /// Removes one occurrence of form `f` and meaning `m` from every record
    /// where they co-occur, updating rows and counts. Returns the number of
    /// records changed.
    fn ablate(&mut self, f: u32, m: u32, iteration: usize) -> usize {
        let form = self.forms.get(f).to_vec();
        let meaning = self.meanings.get(m).to_vec();
        let mut ablated = 0;
        for j in 0..self.states.len() {
            if self.form_rows[j].binary_search(&f).is_err()
                || self.meaning_rows[j].binary_search(&m).is_err()
            {
                continue;
            }
            let occurrences = self.states[j].form_occurrences(&form);
            debug_assert!(!occurrences.is_empty());
            let pick = if occurrences.len() == 1 {
                0
            } else if self.config.search_best_form {
                let mut rest = self.states[j].clone();
                rest.remove_meaning(&meaning);
                let rest_meanings = self.meaning_row(&rest);
                best_match_position(
                    &self.states[j].segments,
                    &occurrences,
                    form.len(),
                    self.config.max_form_size,
                    |s| self.competitor_weight(s, &rest_meanings),
                )
            } else {
                quasirandom_position(self.config.seed, j, iteration, occurrences.len())
            };
            let state = &mut self.states[j];
            state.remove_form(occurrences[pick], form.len());
            state.remove_meaning(&meaning);
            ablated += 1;

            let new_forms = self.form_row(&self.states[j]);
            let new_meanings = self.meaning_row(&self.states[j]);
            let old_forms = std::mem::replace(&mut self.form_rows[j], new_forms);
            let old_meanings = std::mem::replace(&mut self.meaning_rows[j], new_meanings);
            let removed_forms = sorted_difference(&old_forms, &self.form_rows[j]);
            let removed_meanings = sorted_difference(&old_meanings, &self.meaning_rows[j]);

            for &rf in &removed_forms {
                self.form_counts[rf as usize] -= 1;
                self.mark_form(rf);
                for &om in &old_meanings {
                    self.decrement(rf, om);
                }
            }
            for &rm in &removed_meanings {
                self.meaning_counts[rm as usize] -= 1;
                self.mark_meaning(rm);
            }
            if !removed_meanings.is_empty() {
                let kept_forms = std::mem::take(&mut self.form_rows[j]);
                for &kf in &kept_forms {
                    for &rm in &removed_meanings {
                        self.decrement(kf, rm);
                    }
                }
                self.form_rows[j] = kept_forms;
            }
        }
        ablated
    }

    /// Re-scores every pair whose form or meaning marginal changed, applying
    /// the cap.
    fn reweigh_dirty(&mut self, iteration: u32) {
        let forms = std::mem::take(&mut self.dirty_forms);
        let meanings = std::mem::take(&mut self.dirty_meanings);
        for &f in &forms {
            self.form_dirty[f as usize] = false;
            for idx in self.pairs.form_range(f) {
                self.refresh(idx as u32, iteration);
            }
        }
        for &m in &meanings {
            self.meaning_dirty[m as usize] = false;
            let list = std::mem::take(&mut self.pairs.by_meaning[m as usize]);
            for &idx in &list {
                self.refresh(idx, iteration);
            }
            self.pairs.by_meaning[m as usize] = list;
        }
        // Drop dead pairs from the meaning lists that were walked.
        for &m in &meanings {
            let alive = &self.pairs.alive;
            self.pairs.by_meaning[m as usize].retain(|&idx| alive[idx as usize]);
        }
    }

    fn refresh(&mut self, idx: u32, iteration: u32) {
        let i = idx as usize;
        if !self.pairs.alive[i] || self.pairs.stamp[i] == iteration {
            return;
        }
        self.pairs.stamp[i] = iteration;
        let w = self.weigh(self.pairs.count[i], self.pairs.form[i], self.pairs.meaning[i]);
        if w < self.pairs.cap[i] {
            self.pairs.cap[i] = w;
            if w > 0.0 {
                self.heap.push((w.to_bits(), idx));
            } else {
                self.pairs.alive[i] = false;
                self.alive_count -= 1;
            }
        }
    }
}

fn sorted_difference(a: &[u32], b: &[u32]) -> Vec<u32> {
    let mut out = Vec::new();
    let mut j = 0;
    for &x in a {
        while j < b.len() && b[j] < x {
            j += 1;
        }
        if j >= b.len() || b[j] != x {
            out.push(x);
        }
    }
    out
}

/// Induces a morpheme inventory from `corpus`.
pub fn induce(corpus: &Corpus, config: &InductionConfig) -> Result<Inventory> {
    Ok(Inducer::new(corpus, config)?.run().inventory)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> Corpus {
        Corpus::from_records([
            (vec!["s"], vec!["□"]),
            (vec!["s", "t"], vec!["□", "×"]),
            (vec!["c", "t"], vec!["○", "×"]),
        ])
    }

    #[test]
    fn sorted_difference_works() {
        assert_eq!(sorted_difference(&[1, 3, 5, 7], &[3, 7]), vec![1, 5]);
        assert_eq!(sorted_difference(&[1, 2], &[]), vec![1, 2]);
        assert!(sorted_difference(&[], &[1]).is_empty());
    }

    #[test]
    fn zero_limits_rejected() {
        let config = InductionConfig {
            max_form_size: Some(0),
            ..Default::default()
        };
        assert!(matches!(induce(&toy(), &config), Err(CsarError::Config(_))));
    }

    #[test]
    fn toy_corpus_first_weight() {
        let corpus = toy();
        let mut inducer = Inducer::new(&corpus, &InductionConfig::default()).unwrap();
        let first = inducer.step().unwrap().clone();
        // Every pair present in exactly two records, or absent from exactly
        // one record on both sides, scores H(1/3) bits.
        assert!((first.weight - 0.918_295_834_054_489_6).abs() < 1e-12);
        let rest = inducer.run().inventory;
        assert_eq!(rest.len(), 3);
    }

    #[test]
    fn inventory_limit_stops() {
        let config = InductionConfig {
            max_inventory_size: Some(1),
            ..Default::default()
        };
        let outcome = Inducer::new(&toy(), &config).unwrap().run();
        assert_eq!(outcome.inventory.len(), 1);
        assert_eq!(outcome.stop_reason, StopReason::InventoryLimit);
    }

    #[test]
    fn zero_time_limit_stops_immediately() {
        let config = InductionConfig {
            time_limit: Some(0.0),
            ..Default::default()
        };
        let outcome = Inducer::new(&toy(), &config).unwrap().run();
        assert!(outcome.inventory.is_empty());
        assert_eq!(outcome.stop_reason, StopReason::TimeLimit);
    }
}
