//! Candidate universes and the binary records × candidates occurrence matrices.

use rustc_hash::FxHashMap;

use crate::corpus::{Corpus, TokenId};
use crate::error::{CsarError, Result};
use crate::induction::InductionConfig;

/// Interned candidate token sequences, addressed by dense column index.
#[derive(Clone, Debug, Default)]
pub struct CandidateSet {
    items: Vec<Box<[TokenId]>>,
    index: FxHashMap<Box<[TokenId]>, u32>,
}

impl CandidateSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn intern(&mut self, tokens: &[TokenId]) -> u32 {
        if let Some(&id) = self.index.get(tokens) {
            return id;
        }
        let id = self.items.len() as u32;
        self.items.push(tokens.into());
        self.index.insert(tokens.into(), id);
        id
    }

    #[inline]
    pub fn id_of(&self, tokens: &[TokenId]) -> Option<u32> {
        self.index.get(tokens).copied()
    }

    #[inline]
    pub fn get(&self, id: u32) -> &[TokenId] {
        &self.items[id as usize]
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &[TokenId]> {
        self.items.iter().map(|b| &**b)
    }

    /// Keeps the candidates flagged in `keep`, preserving relative order.
    /// Returns the old → new id map.
    fn retain(&mut self, keep: &[bool]) -> Vec<Option<u32>> {
        let mut remap = vec![None; self.items.len()];
        let mut kept = CandidateSet::new();
        for (old, item) in self.items.iter().enumerate() {
            if keep[old] {
                remap[old] = Some(kept.intern(item));
            }
        }
        *self = kept;
        remap
    }
}

/// Sparse binary matrix; row `j` lists, in ascending order, the candidates
/// present in record `j`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct OccurrenceMatrix {
    rows: Vec<Vec<u32>>,
    n_cols: usize,
}

impl OccurrenceMatrix {
    pub fn from_rows(rows: Vec<Vec<u32>>, n_cols: usize) -> Self {
        debug_assert!(rows
            .iter()
            .all(|r| r.windows(2).all(|w| w[0] < w[1]) && r.iter().all(|&c| (c as usize) < n_cols)));
        OccurrenceMatrix { rows, n_cols }
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn row(&self, j: usize) -> &[u32] {
        &self.rows[j]
    }

    pub fn rows(&self) -> &[Vec<u32>] {
        &self.rows
    }

    pub fn get(&self, row: usize, col: u32) -> bool {
        self.rows[row].binary_search(&col).is_ok()
    }

    /// Number of records each candidate occurs in.
    pub fn column_counts(&self) -> Vec<u32> {
        let mut counts = vec![0u32; self.n_cols];
        for row in &self.rows {
            for &c in row {
                counts[c as usize] += 1;
            }
        }
        counts
    }

    pub fn to_dense(&self) -> Vec<Vec<u8>> {
        self.rows
            .iter()
            .map(|row| {
                let mut dense = vec![0u8; self.n_cols];
                for &c in row {
                    dense[c as usize] = 1;
                }
                dense
            })
            .collect()
    }
}

#[derive(Clone, Debug)]
pub struct Candidates {
    pub forms: CandidateSet,
    pub meanings: CandidateSet,
    pub form_occurrence: OccurrenceMatrix,
    pub meaning_occurrence: OccurrenceMatrix,
}

impl Candidates {
    pub fn form_id(&self, tokens: &[TokenId]) -> Option<u32> {
        self.forms.id_of(tokens)
    }

    pub fn meaning_id(&self, tokens: &[TokenId]) -> Option<u32> {
        self.meanings.id_of(tokens)
    }
}

/// Calls `visit` on every contiguous subsequence of `seq` of length at most
/// `max_len`, skipping any that contain a token rejected by `allowed`.
pub(crate) fn for_each_substring(
    seq: &[TokenId],
    max_len: Option<usize>,
    allowed: impl Fn(TokenId) -> bool,
    mut visit: impl FnMut(&[TokenId]),
) {
    let max_len = max_len.unwrap_or(usize::MAX);
    for start in 0..seq.len() {
        let limit = seq.len().min(start.saturating_add(max_len));
        for end in start + 1..=limit {
            if !allowed(seq[end - 1]) {
                break;
            }
            visit(&seq[start..end]);
        }
    }
}

/// Calls `visit` on every non-empty subset of the ascending set `set` with at
/// most `max_size` elements. Subsets are produced in ascending order.
pub(crate) fn for_each_subset(
    set: &[TokenId],
    max_size: Option<usize>,
    mut visit: impl FnMut(&[TokenId]),
) {
    fn recurse(
        set: &[TokenId],
        from: usize,
        max_size: usize,
        buf: &mut Vec<TokenId>,
        visit: &mut dyn FnMut(&[TokenId]),
    ) {
        for i in from..set.len() {
            buf.push(set[i]);
            visit(buf);
            if buf.len() < max_size {
                recurse(set, i + 1, max_size, buf, visit);
            }
            buf.pop();
        }
    }
    let max_size = max_size.unwrap_or(usize::MAX);
    if max_size == 0 {
        return;
    }
    let mut buf = Vec::with_capacity(set.len().min(max_size));
    recurse(set, 0, max_size, &mut buf, &mut visit);
}

/// Number of subsets [`for_each_subset`] would visit, saturating.
pub(crate) fn subset_count(set_size: usize, max_size: Option<usize>) -> u64 {
    let k = max_size.unwrap_or(set_size).min(set_size);
    let mut total: u64 = 0;
    let mut binom: u64 = 1;
    for s in 1..=k {
        binom = binom.saturating_mul((set_size - s + 1) as u64) / s as u64;
        total = total.saturating_add(binom);
    }
    total
}

/// Per-record subset enumeration beyond this is refused.
pub(crate) const MAX_SUBSETS_PER_RECORD: u64 = 1 << 22;

/// Ids of the `limit` most frequent tokens; ties go to the smaller id.
fn top_tokens(counts: &[u64], limit: Option<usize>) -> Vec<bool> {
    match limit {
        None => vec![true; counts.len()],
        Some(limit) => {
            let mut order: Vec<usize> = (0..counts.len()).collect();
            order.sort_by(|&a, &b| counts[b].cmp(&counts[a]).then(a.cmp(&b)));
            let mut keep = vec![false; counts.len()];
            for &i in order.iter().take(limit) {
                keep[i] = true;
            }
            keep
        }
    }
}

/// Keeps the `limit` candidates occurring in the most records.
fn restrict_to_most_frequent(
    set: &mut CandidateSet,
    rows: &mut [Vec<u32>],
    limit: Option<usize>,
) {
    let Some(limit) = limit else { return };
    if set.len() <= limit {
        return;
    }
    let mut counts = vec![0u64; set.len()];
    for row in rows.iter() {
        for &c in row {
            counts[c as usize] += 1;
        }
    }
    let keep = top_tokens(&counts, Some(limit));
    let remap = set.retain(&keep);
    for row in rows.iter_mut() {
        row.retain(|&c| keep[c as usize]);
        for c in row.iter_mut() {
            *c = remap[*c as usize].expect("kept candidate");
        }
    }
}

/// Builds the form and meaning candidate universes of `corpus` and their
/// occurrence matrices, honouring the size, vocabulary and n-gram settings
/// of `config`.
pub fn enumerate_candidates(corpus: &Corpus, config: &InductionConfig) -> Result<Candidates> {
    config.validate()?;
    if corpus.is_empty() {
        return Err(CsarError::InductionImpossible("corpus is empty".into()));
    }
    let records = &corpus.records[..config.max_records.unwrap_or(usize::MAX).min(corpus.len())];

    let mut form_token_counts = vec![0u64; corpus.form_vocab.len()];
    let mut meaning_token_counts = vec![0u64; corpus.meaning_vocab.len()];
    for r in records {
        for t in &r.form {
            form_token_counts[t.index()] += 1;
        }
        let meaning = if config.ngram_semantics { &r.meaning_seq } else { &r.meaning };
        for t in meaning {
            meaning_token_counts[t.index()] += 1;
        }
    }
    let form_allowed = top_tokens(&form_token_counts, config.token_vocab_size);
    let meaning_allowed = top_tokens(&meaning_token_counts, config.token_vocab_size);

    let mut forms = CandidateSet::new();
    let mut form_rows = Vec::with_capacity(records.len());
    for r in records {
        let mut row = Vec::new();
        for_each_substring(&r.form, config.max_form_size, |t| form_allowed[t.index()], |s| {
            row.push(forms.intern(s))
        });
        row.sort_unstable();
        row.dedup();
        form_rows.push(row);
    }

    let mut meanings = CandidateSet::new();
    let mut meaning_rows = Vec::with_capacity(records.len());
    for r in records {
        let mut row = Vec::new();
        if config.ngram_semantics {
            for_each_substring(
                &r.meaning_seq,
                config.max_meaning_size,
                |t| meaning_allowed[t.index()],
                |s| row.push(meanings.intern(s)),
            );
        } else {
            let allowed: Vec<TokenId> = r
                .meaning
                .iter()
                .copied()
                .filter(|t| meaning_allowed[t.index()])
                .collect();
            if subset_count(allowed.len(), config.max_meaning_size) > MAX_SUBSETS_PER_RECORD {
                return Err(CsarError::Config(format!(
                    "a meaning with {} tokens has too many subsets; set a max meaning size",
                    allowed.len()
                )));
            }
            for_each_subset(&allowed, config.max_meaning_size, |s| {
                row.push(meanings.intern(s))
            });
        }
        row.sort_unstable();
        row.dedup();
        meaning_rows.push(row);
    }

    restrict_to_most_frequent(&mut forms, &mut form_rows, config.form_vocab_size);
    restrict_to_most_frequent(&mut meanings, &mut meaning_rows, config.meaning_vocab_size);

    if forms.is_empty() || meanings.is_empty() {
        return Err(CsarError::InductionImpossible(
            "no form or meaning candidates survive filtering".into(),
        ));
    }
    let form_occurrence = OccurrenceMatrix::from_rows(form_rows, forms.len());
    let meaning_occurrence = OccurrenceMatrix::from_rows(meaning_rows, meanings.len());
    Ok(Candidates {
        forms,
        meanings,
        form_occurrence,
        meaning_occurrence,
    })
}

/// Sparse |forms| × |meanings| co-occurrence counts.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CooccurrenceCounts {
    counts: FxHashMap<(u32, u32), u32>,
}

impl CooccurrenceCounts {
    pub fn get(&self, form: u32, meaning: u32) -> u32 {
        self.counts.get(&(form, meaning)).copied().unwrap_or(0)
    }

    /// Number of non-zero entries.
    pub fn nnz(&self) -> usize {
        self.counts.len()
    }

    /// Non-zero entries in ascending (form, meaning) order.
    pub fn entries(&self) -> Vec<((u32, u32), u32)> {
        let mut out: Vec<_> = self.counts.iter().map(|(&k, &v)| (k, v)).collect();
        out.sort_unstable();
        out
    }
}

/// Raw O_Fᵀ·O_M over boolean rows, keyed by `form << 32 | meaning`.
pub(crate) fn raw_cooccurrence(form_rows: &[Vec<u32>], meaning_rows: &[Vec<u32>]) -> FxHashMap<u64, u32> {
    let mut counts: FxHashMap<u64, u32> = FxHashMap::default();
    for (fr, mr) in form_rows.iter().zip(meaning_rows) {
        for &f in fr {
            let hi = (f as u64) << 32;
            for &m in mr {
                *counts.entry(hi | m as u64).or_insert(0) += 1;
            }
        }
    }
    counts
}

/// Counts records in which each (form, meaning) candidate pair co-occurs.
/// Entries below `threshold` are dropped, i.e. treated as never co-occurring.
///
/// Panics if the matrices disagree on the number of records.
pub fn cooccurrence_counts(
    form_occurrence: &OccurrenceMatrix,
    meaning_occurrence: &OccurrenceMatrix,
    threshold: u32,
) -> CooccurrenceCounts {
    assert_eq!(
        form_occurrence.n_rows(),
        meaning_occurrence.n_rows(),
        "occurrence matrices must share their record rows"
    );
    let counts = raw_cooccurrence(form_occurrence.rows(), meaning_occurrence.rows())
        .into_iter()
        .filter(|&(_, c)| c >= threshold)
        .map(|(k, c)| (((k >> 32) as u32, k as u32), c))
        .collect();
    CooccurrenceCounts { counts }
}
