//! Unsupervised induction of form–meaning morpheme inventories from parallel
//! corpora, with a procedural benchmark generator, exact and fuzzy scoring,
//! simple baselines and inventory analytics.

pub mod bench;
pub mod corpus;
pub mod error;
pub mod evaluation;
pub mod induction;
pub mod inventory;
pub mod metrics;
pub mod procgen;

pub use corpus::{
    load_corpus, load_ground_truth, load_inventory, save_corpus, save_ground_truth, save_inventory, Corpus, Record,
    TokenId, Vocab,
};
pub use error::{CsarError, Result};
pub use induction::{induce, Inducer, InductionConfig, Weighting};
pub use inventory::{FormMeaning, GroundTruth, Inventory, Morpheme, MorphemePair};
