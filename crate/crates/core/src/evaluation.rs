//! Scoring induced inventories against ground truth, and the Record and BPE
//! baselines.

use std::fmt;
use std::str::FromStr;

use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, TokenId};
use crate::inventory::{FormMeaning, GroundTruth, Inventory, Morpheme};

/// Length of the longest common subsequence.
fn lcs_len<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let (a, b) = if a.len() < b.len() { (b, a) } else { (a, b) };
    let mut row = vec![0usize; b.len() + 1];
    for x in a {
        let mut diag = 0;
        for (j, y) in b.iter().enumerate() {
            let up = row[j + 1];
            row[j + 1] = if x == y { diag + 1 } else { up.max(row[j]) };
            diag = up;
        }
    }
    row[b.len()]
}

/// Minimal number of insertions and deletions turning `a` into `b`.
pub fn indel_distance<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    a.len() + b.len() - 2 * lcs_len(a, b)
}

/// `1 - (insertions + deletions) / (|a| + |b|)`; 1 for two empty forms.
pub fn fuzzy_form_similarity(a: &[TokenId], b: &[TokenId]) -> f64 {
    let total = a.len() + b.len();
    if total == 0 {
        return 1.0;
    }
    1.0 - indel_distance(a, b) as f64 / total as f64
}

/// Jaccard index of two ascending token sets; 1 when both are empty.
pub fn jaccard(a: &[TokenId], b: &[TokenId]) -> f64 {
    let (mut i, mut j, mut common) = (0, 0, 0usize);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                common += 1;
                i += 1;
                j += 1;
            }
        }
    }
    let union = a.len() + b.len() - common;
    if union == 0 {
        1.0
    } else {
        common as f64 / union as f64
    }
}

pub fn fuzzy_similarity(a: &impl FormMeaning, b: &impl FormMeaning) -> f64 {
    fuzzy_form_similarity(a.form(), b.form()).min(jaccard(a.meaning(), b.meaning()))
}

pub fn exact_similarity(a: &impl FormMeaning, b: &impl FormMeaning) -> f64 {
    (a.form() == b.form() && a.meaning() == b.meaning()) as u8 as f64
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Mode {
    ExactFull,
    FuzzyFull,
    ExactForm,
    FuzzyForm,
}

impl Mode {
    pub const ALL: [Mode; 4] = [Mode::ExactFull, Mode::FuzzyFull, Mode::ExactForm, Mode::FuzzyForm];

    pub fn name(self) -> &'static str {
        match self {
            Mode::ExactFull => "exact-full",
            Mode::FuzzyFull => "fuzzy-full",
            Mode::ExactForm => "exact-form",
            Mode::FuzzyForm => "fuzzy-form",
        }
    }

    pub fn is_form_only(self) -> bool {
        matches!(self, Mode::ExactForm | Mode::FuzzyForm)
    }

    pub fn similarity(self, a: &impl FormMeaning, b: &impl FormMeaning) -> f64 {
        match self {
            Mode::ExactFull => exact_similarity(a, b),
            Mode::FuzzyFull => fuzzy_similarity(a, b),
            Mode::ExactForm => (a.form() == b.form()) as u8 as f64,
            Mode::FuzzyForm => fuzzy_form_similarity(a.form(), b.form()),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Mode::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| format!("unknown mode '{s}' (expected exact-full, fuzzy-full, exact-form or fuzzy-form)"))
    }
}

/// Mean over `induced` of the best similarity to any element of `truth`;
/// 0 if either side is empty. Recall is `precision(truth, induced, s)`.
pub fn precision<A, B>(induced: &[A], truth: &[B], mut s: impl FnMut(&A, &B) -> f64) -> f64 {
    if induced.is_empty() || truth.is_empty() {
        return 0.0;
    }
    let total: f64 = induced
        .iter()
        .map(|i| truth.iter().map(|g| s(i, g)).fold(0.0, f64::max))
        .sum();
    total / induced.len() as f64
}

pub fn f1(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

pub fn score<A: FormMeaning, B: FormMeaning>(induced: &[A], truth: &[B], mode: Mode) -> Scores {
    let p = precision(induced, truth, |a, b| mode.similarity(a, b));
    let r = precision(truth, induced, |b, a| mode.similarity(b, a));
    Scores {
        precision: p,
        recall: r,
        f1: f1(p, r),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub scores: Vec<(Mode, Scores)>,
    pub n_induced: usize,
    pub n_truth: usize,
    /// Form-only modes were requested on a dataset with noise forms and were
    /// left out.
    pub form_only_excluded: bool,
}

impl EvalReport {
    pub fn get(&self, mode: Mode) -> Option<Scores> {
        self.scores.iter().find(|(m, _)| *m == mode).map(|(_, s)| *s)
    }
}

/// Scores `induced` in each of `modes`. Form-only modes are skipped (and the
/// report flagged) when `noisy` is set, since noise forms have no ground
/// truth to match.
pub fn evaluate<A: FormMeaning>(induced: &[A], truth: &GroundTruth, modes: &[Mode], noisy: bool) -> EvalReport {
    let mut report = EvalReport {
        scores: Vec::new(),
        n_induced: induced.len(),
        n_truth: truth.len(),
        form_only_excluded: false,
    };
    for &mode in modes {
        if noisy && mode.is_form_only() {
            report.form_only_excluded = true;
            continue;
        }
        report.scores.push((mode, score(induced, &truth.morphemes, mode)));
    }
    report
}

fn baseline_morpheme(form: Vec<TokenId>, meaning: Vec<TokenId>, order: usize, prevalence: f64) -> Morpheme {
    Morpheme {
        form,
        meaning,
        weight: 0.0,
        initial_weight: 0.0,
        order,
        prevalence,
    }
}

/// One morpheme per distinct record, in order of first appearance.
pub fn record_baseline(corpus: &Corpus) -> Inventory {
    let mut index: FxHashMap<(&[TokenId], &[TokenId]), usize> = FxHashMap::default();
    let mut counts: Vec<(&[TokenId], &[TokenId], usize)> = Vec::new();
    for r in &corpus.records {
        let key = (&r.form[..], &r.meaning[..]);
        let i = *index.entry(key).or_insert_with(|| {
            counts.push((key.0, key.1, 0));
            counts.len() - 1
        });
        counts[i].2 += 1;
    }
    let n = corpus.len().max(1) as f64;
    Inventory {
        morphemes: counts
            .into_iter()
            .enumerate()
            .map(|(order, (f, m, c))| baseline_morpheme(f.to_vec(), m.to_vec(), order, c as f64 / n))
            .collect(),
    }
}

/// Target BPE vocabulary: meaning-token vocabulary times mean form tokens per
/// meaning token, plus the form-token vocabulary.
pub fn bpe_vocab_size(corpus: &Corpus) -> usize {
    if corpus.is_empty() {
        return corpus.form_vocab.len();
    }
    let ratio_sum: f64 = corpus
        .records
        .iter()
        .map(|r| r.form.len() as f64 / r.meaning.len() as f64)
        .sum();
    let extra = corpus.meaning_vocab.len() as f64 / corpus.len() as f64 * ratio_sum;
    extra.floor() as usize + corpus.form_vocab.len()
}

/// Byte-pair encoding over form tokens, merged until `bpe_vocab_size` symbols
/// exist or no adjacent pair occurs twice. Returns every symbol as a
/// form-only morpheme (empty meaning): base tokens first, then merges in
/// order. Prevalence is the fraction of records whose final segmentation
/// uses the symbol.
pub fn bpe_baseline(corpus: &Corpus) -> Inventory {
    bpe_with_vocab(corpus, bpe_vocab_size(corpus))
}

pub fn bpe_with_vocab(corpus: &Corpus, target: usize) -> Inventory {
    let mut symbols: Vec<Vec<TokenId>> = corpus.form_vocab.tokens().iter().enumerate().map(|(i, _)| vec![TokenId(i as u32)]).collect();
    let mut by_expansion: FxHashMap<Vec<TokenId>, u32> =
        symbols.iter().enumerate().map(|(i, s)| (s.clone(), i as u32)).collect();
    let mut seqs: Vec<Vec<u32>> = corpus
        .records
        .iter()
        .map(|r| r.form.iter().map(|t| t.0).collect())
        .collect();

    while symbols.len() < target {
        // Pair counts with first-seen rank for tie-breaking.
        let mut counts: FxHashMap<(u32, u32), (usize, usize)> = FxHashMap::default();
        for seq in &seqs {
            for w in seq.windows(2) {
                let rank = counts.len();
                counts.entry((w[0], w[1])).or_insert((0, rank)).0 += 1;
            }
        }
        let best = counts
            .iter()
            .filter(|(_, &(c, _))| c >= 2)
            .min_by(|a, b| b.1 .0.cmp(&a.1 .0).then(a.1 .1.cmp(&b.1 .1)))
            .map(|(&pair, _)| pair);
        let Some((l, r)) = best else { break };
        let expansion: Vec<TokenId> = symbols[l as usize].iter().chain(&symbols[r as usize]).copied().collect();
        let id = *by_expansion.entry(expansion.clone()).or_insert_with(|| {
            symbols.push(expansion);
            symbols.len() as u32 - 1
        });
        for seq in &mut seqs {
            let mut out = Vec::with_capacity(seq.len());
            let mut i = 0;
            while i < seq.len() {
                if i + 1 < seq.len() && seq[i] == l && seq[i + 1] == r {
                    out.push(id);
                    i += 2;
                } else {
                    out.push(seq[i]);
                    i += 1;
                }
            }
            *seq = out;
        }
    }

    let mut used = vec![0usize; symbols.len()];
    for seq in &seqs {
        let mut s = seq.clone();
        s.sort_unstable();
        s.dedup();
        for x in s {
            used[x as usize] += 1;
        }
    }
    let n = corpus.len().max(1) as f64;
    Inventory {
        morphemes: symbols
            .into_iter()
            .zip(used)
            .enumerate()
            .map(|(order, (form, c))| baseline_morpheme(form, Vec::new(), order, c as f64 / n))
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inventory::MorphemePair;

    fn ids(v: &[u32]) -> Vec<TokenId> {
        v.iter().copied().map(TokenId).collect()
    }

    fn pair(f: &[u32], m: &[u32]) -> MorphemePair {
        MorphemePair {
            form: ids(f),
            meaning: ids(m),
        }
    }

    #[test]
    fn form_similarity_examples() {
        assert_eq!(fuzzy_form_similarity(&ids(&[0, 1]), &ids(&[0, 1])), 1.0);
        assert_eq!(fuzzy_form_similarity(&ids(&[0, 1]), &ids(&[2, 3])), 0.0);
        assert!((fuzzy_form_similarity(&ids(&[0, 1, 2]), &ids(&[0, 1])) - 0.8).abs() < 1e-15);
        assert_eq!(indel_distance(&ids(&[0, 1]), &ids(&[1, 0])), 2);
    }

    #[test]
    fn morpheme_similarity_examples() {
        let a = pair(&[0, 1, 2], &[5]);
        assert_eq!(fuzzy_similarity(&a, &a), 1.0);
        assert_eq!(fuzzy_similarity(&pair(&[0], &[5]), &pair(&[0], &[5, 6])), 0.5);
        assert!((fuzzy_similarity(&a, &pair(&[0, 1], &[5])) - 0.8).abs() < 1e-15);
        assert_eq!(jaccard(&[], &[]), 1.0);
        assert_eq!(jaccard(&[], &ids(&[1])), 0.0);
    }

    #[test]
    fn worked_example() {
        // I = {(s,{□})}, G = {(s,{□}), (t,{×})}.
        let induced = vec![pair(&[0], &[0])];
        let truth = GroundTruth {
            morphemes: vec![pair(&[0], &[0]), pair(&[1], &[1])],
        };
        let report = evaluate(&induced, &truth, &Mode::ALL, false);
        let s = report.get(Mode::ExactFull).unwrap();
        assert_eq!((s.precision, s.recall), (1.0, 0.5));
        assert!((s.f1 - 2.0 / 3.0).abs() < 1e-15);
        let noisy = evaluate(&induced, &truth, &Mode::ALL, true);
        assert!(noisy.form_only_excluded);
        assert!(noisy.get(Mode::FuzzyForm).is_none());
        assert_eq!(noisy.scores.len(), 2);
    }

    #[test]
    fn empty_sides_score_zero() {
        let truth = GroundTruth {
            morphemes: vec![pair(&[0], &[0])],
        };
        let none: Vec<MorphemePair> = Vec::new();
        let s = evaluate(&none, &truth, &[Mode::FuzzyFull], false).get(Mode::FuzzyFull).unwrap();
        assert_eq!((s.precision, s.recall, s.f1), (0.0, 0.0, 0.0));
    }

    #[test]
    fn record_baseline_counts_distinct_records() {
        let corpus = Corpus::from_records([
            (vec!["s", "t"], vec!["□", "×"]),
            (vec!["s", "t"], vec!["×", "□"]),
            (vec!["c"], vec!["○"]),
        ]);
        let inv = record_baseline(&corpus);
        assert_eq!(inv.len(), 2);
        assert!((inv.morphemes[0].prevalence - 2.0 / 3.0).abs() < 1e-15);
        let same = Corpus::from_records(vec![(vec!["a"], vec!["x"]); 10]);
        let inv = record_baseline(&same);
        assert_eq!(inv.len(), 1);
        assert_eq!(inv.morphemes[0].prevalence, 1.0);
    }

    #[test]
    fn bpe_merges_repeated_pairs() {
        let corpus = Corpus::from_records(vec![(vec!["a", "b"], vec!["x"]); 5]);
        // 1 meaning token, ratio 2 → 2 extra symbols over the 2 base tokens.
        assert_eq!(bpe_vocab_size(&corpus), 4);
        let inv = bpe_baseline(&corpus);
        let forms: Vec<Vec<TokenId>> = inv.morphemes.iter().map(|m| m.form.clone()).collect();
        assert_eq!(forms, vec![ids(&[0]), ids(&[1]), ids(&[0, 1])]);
        assert!(inv.morphemes.iter().all(|m| m.meaning.is_empty()));
        assert_eq!(inv.morphemes[2].prevalence, 1.0);

        let unique = Corpus::from_records([(vec!["a", "b"], vec!["x"]), (vec!["c", "d"], vec!["y"])]);
        assert_eq!(bpe_baseline(&unique).len(), 4);
    }

    #[test]
    fn bpe_ties_follow_first_appearance() {
        let corpus = Corpus::from_records([(vec!["c", "d", "a", "b"], vec!["x"]), (vec!["a", "b", "c", "d"], vec!["x"])]);
        let inv = bpe_with_vocab(&corpus, 5);
        assert_eq!(inv.morphemes[4].form, ids(&[0, 1]));
    }

    #[test]
    fn vocab_size_formula() {
        // 8 meaning tokens, 10 form tokens, every record has twice as many
        // form tokens as meaning tokens.
        let mut records = Vec::new();
        for i in 0..10 {
            let m = format!("m{}", i % 8);
            records.push((vec![format!("f{i}"), format!("f{}", (i + 1) % 10)], vec![m]));
        }
        let corpus = Corpus::from_records(records);
        assert_eq!(corpus.meaning_vocab.len(), 8);
        assert_eq!(corpus.form_vocab.len(), 10);
        assert_eq!(bpe_vocab_size(&corpus), 26);
    }
}
