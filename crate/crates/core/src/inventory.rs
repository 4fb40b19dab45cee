use serde::{Deserialize, Serialize};

use crate::corpus::TokenId;

/// Anything that carries a form and a meaning.
pub trait FormMeaning {
    fn form(&self) -> &[TokenId];
    fn meaning(&self) -> &[TokenId];
}

/// An induced form–meaning pair.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Morpheme {
    pub form: Vec<TokenId>,
    pub meaning: Vec<TokenId>,
    /// Capped weight (bits for mutual information) when the pair was selected.
    pub weight: f64,
    /// Weight the first time the pair was evaluated.
    pub initial_weight: f64,
    /// Selection index, starting at 0.
    pub order: usize,
    /// Fraction of records the pair was ablated from.
    pub prevalence: f64,
}

impl FormMeaning for Morpheme {
    fn form(&self) -> &[TokenId] {
        &self.form
    }
    fn meaning(&self) -> &[TokenId] {
        &self.meaning
    }
}

/// Morphemes in selection order.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Inventory {
    pub morphemes: Vec<Morpheme>,
}

impl Inventory {
    pub fn len(&self) -> usize {
        self.morphemes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.morphemes.is_empty()
    }

    /// First `k` morphemes; the anytime result of a run stopped after `k` selections.
    pub fn prefix(&self, k: usize) -> Inventory {
        Inventory {
            morphemes: self.morphemes.iter().take(k).cloned().collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MorphemePair {
    pub form: Vec<TokenId>,
    pub meaning: Vec<TokenId>,
}

impl FormMeaning for MorphemePair {
    fn form(&self) -> &[TokenId] {
        &self.form
    }
    fn meaning(&self) -> &[TokenId] {
        &self.meaning
    }
}

/// The true morphemes of a generated dataset.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub morphemes: Vec<MorphemePair>,
}

impl GroundTruth {
    pub fn len(&self) -> usize {
        self.morphemes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.morphemes.is_empty()
    }
}
