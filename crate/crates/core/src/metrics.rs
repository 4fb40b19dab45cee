//! Inventory and corpus analytics: entropy, synonymy, polysemy, morpheme
//! sizes and topographic similarity. Inventory statistics are weighted by
//! morpheme prevalence.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, TokenId};
use crate::evaluation::{indel_distance, jaccard};
use crate::inventory::Inventory;

pub const DEFAULT_TOPOSIM_PAIRS: usize = 50_000;

fn entropy(weights: impl IntoIterator<Item = f64>) -> f64 {
    let weights: Vec<f64> = weights.into_iter().filter(|&w| w > 0.0).collect();
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return 0.0;
    }
    let h: f64 = weights
        .iter()
        .map(|&w| {
            let p = w / total;
            -p * p.log2()
        })
        .sum();
    h.max(0.0)
}

fn total_prevalence(inventory: &Inventory) -> f64 {
    inventory.morphemes.iter().map(|m| m.prevalence.max(0.0)).sum()
}

/// Entropy in bits of the prevalence distribution over morphemes; `None` when
/// the total prevalence is zero.
pub fn inventory_entropy(inventory: &Inventory) -> Option<f64> {
    if total_prevalence(inventory) <= 0.0 {
        return None;
    }
    Some(entropy(inventory.morphemes.iter().map(|m| m.prevalence)))
}

/// Prevalence-weighted mean, over groups keyed by `outer`, of the entropy of
/// the prevalence distribution over `inner` within the group.
fn conditional_entropy<'a, K: Ord, L: Ord>(
    inventory: &'a Inventory,
    outer: impl Fn(&'a crate::inventory::Morpheme) -> K,
    inner: impl Fn(&'a crate::inventory::Morpheme) -> L,
) -> f64 {
    let total = total_prevalence(inventory);
    if total <= 0.0 {
        return 0.0;
    }
    let mut groups: BTreeMap<K, BTreeMap<L, f64>> = BTreeMap::new();
    for m in &inventory.morphemes {
        *groups.entry(outer(m)).or_default().entry(inner(m)).or_default() += m.prevalence.max(0.0);
    }
    groups
        .values()
        .map(|g| {
            let mass: f64 = g.values().sum();
            mass / total * entropy(g.values().copied())
        })
        .sum()
}

/// Entropy of forms given a meaning.
pub fn synonymy(inventory: &Inventory) -> f64 {
    conditional_entropy(inventory, |m| &m.meaning[..], |m| &m.form[..])
}

/// Entropy of meanings given a form.
pub fn polysemy(inventory: &Inventory) -> f64 {
    conditional_entropy(inventory, |m| &m.form[..], |m| &m.meaning[..])
}

/// Prevalence-weighted mean form and meaning token counts (plain means when
/// no morpheme has positive prevalence).
pub fn mean_sizes(inventory: &Inventory) -> (f64, f64) {
    if inventory.is_empty() {
        return (0.0, 0.0);
    }
    let total = total_prevalence(inventory);
    let weight = |p: f64| if total > 0.0 { p.max(0.0) / total } else { 1.0 / inventory.len() as f64 };
    inventory.morphemes.iter().fold((0.0, 0.0), |(f, m), x| {
        let w = weight(x.prevalence);
        (f + w * x.form.len() as f64, m + w * x.meaning.len() as f64)
    })
}

/// Ranks starting at 1, ties sharing their average rank.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = rank;
        }
        i = j + 1;
    }
    ranks
}

fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return None;
    }
    Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Spearman's ρ; `None` if either variable is constant or fewer than 2 points.
pub fn spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    assert_eq!(x.len(), y.len(), "spearman needs paired samples");
    if x.len() < 2 {
        return None;
    }
    pearson(&average_ranks(x), &average_ranks(y))
}

/// Normalized insertion–deletion distance between utterances.
pub fn utterance_distance(a: &[TokenId], b: &[TokenId]) -> f64 {
    let total = a.len() + b.len();
    if total == 0 {
        0.0
    } else {
        indel_distance(a, b) as f64 / total as f64
    }
}

pub fn meaning_distance(a: &[TokenId], b: &[TokenId]) -> f64 {
    1.0 - jaccard(a, b)
}

/// Record pairs used for topographic similarity: all pairs if there are at
/// most `sample_size`, otherwise `sample_size` seeded draws of distinct
/// records.
pub fn toposim_pairs(n: usize, sample_size: usize, seed: u64) -> Vec<(usize, usize)> {
    if n < 2 {
        return Vec::new();
    }
    let all = n * (n - 1) / 2;
    if all <= sample_size {
        return (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..sample_size)
        .map(|_| {
            let i = rng.random_range(0..n);
            let mut j = rng.random_range(0..n - 1);
            if j >= i {
                j += 1;
            }
            (i.min(j), i.max(j))
        })
        .collect()
}

/// Spearman correlation between utterance and meaning distances over record
/// pairs; `None` when either distance is constant.
pub fn toposim(corpus: &Corpus, sample_size: usize, seed: u64) -> Option<f64> {
    let pairs = toposim_pairs(corpus.len(), sample_size, seed);
    let r = &corpus.records;
    let (du, dm): (Vec<f64>, Vec<f64>) = pairs
        .iter()
        .map(|&(i, j)| {
            (
                utterance_distance(&r[i].form, &r[j].form),
                meaning_distance(&r[i].meaning, &r[j].meaning),
            )
        })
        .unzip();
    spearman(&du, &dm)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InventoryMetrics {
    pub inventory_size: usize,
    pub inventory_entropy: f64,
    pub synonymy: f64,
    pub polysemy: f64,
    pub mean_form_size: f64,
    pub mean_meaning_size: f64,
    /// Absent when no corpus was given or the distances were constant.
    pub toposim: Option<f64>,
    /// No morpheme had positive prevalence, so entropies are reported as 0.
    pub zero_prevalence: bool,
}

impl InventoryMetrics {
    pub const CSV_HEADER: &'static str =
        "inventory_size,inventory_entropy,synonymy,polysemy,mean_form_size,mean_meaning_size,toposim,zero_prevalence";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            self.inventory_size,
            self.inventory_entropy,
            self.synonymy,
            self.polysemy,
            self.mean_form_size,
            self.mean_meaning_size,
            self.toposim.map(|t| t.to_string()).unwrap_or_default(),
            self.zero_prevalence
        )
    }
}

pub fn analyze(inventory: &Inventory, corpus: Option<&Corpus>, sample_size: usize, seed: u64) -> InventoryMetrics {
    let entropy = inventory_entropy(inventory);
    let (mean_form_size, mean_meaning_size) = mean_sizes(inventory);
    InventoryMetrics {
        inventory_size: inventory.len(),
        inventory_entropy: entropy.unwrap_or(0.0),
        synonymy: synonymy(inventory),
        polysemy: polysemy(inventory),
        mean_form_size,
        mean_meaning_size,
        toposim: corpus.and_then(|c| toposim(c, sample_size, seed)),
        zero_prevalence: entropy.is_none(),
    }
}
