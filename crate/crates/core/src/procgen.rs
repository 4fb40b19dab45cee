//! Procedural corpora with known ground-truth morphemes.
//!
//! A dataset is produced in three steps: sample a complete meaning, map each
//! of its components to a form through a randomly drawn lexicon and
//! concatenate the forms into an utterance, then record the form–meaning
//! pairs that were used as ground truth. Each variation of the benchmark grid
//! (synonymy, polysemy, multi-token forms, vocabulary size, sparse meanings,
//! imbalance, dataset size, noise, shuffling, non-compositionality) is a
//! field of [`ProcGenConfig`].
//!
//! All randomness comes from named sub-streams of the config seed, so that
//! e.g. toggling `shuffle` leaves meanings, synonym choices and noise intact.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Geometric};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::{Corpus, TokenId};
use crate::error::{CsarError, Result};
use crate::inventory::{GroundTruth, MorphemePair};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProcGenConfig {
    pub n_attributes: usize,
    /// Values per attribute; ignored for sparse meanings (binary attributes).
    pub n_values: usize,
    /// Attributes occur independently and only present ones enter the meaning.
    pub sparse_meanings: bool,
    /// Forms per meaning.
    pub synonymy: usize,
    /// Fraction of meanings mapped to an already-used form.
    pub polysemy_rate: f64,
    /// Permitted tokens per form.
    pub form_lengths: Vec<usize>,
    /// Token vocabulary for multi-token forms. Single-token lexicons allocate
    /// exactly as many tokens as they need and ignore this.
    pub vocab_size: Option<usize>,
    /// Value probabilities proportional to index + 1 instead of uniform.
    pub imbalance: bool,
    pub dataset_size: usize,
    /// Per insertion point, the noise-token count is geometric with success
    /// probability `1 - noise_rate`.
    pub noise_rate: f64,
    /// Randomly permute the forms of each utterance.
    pub shuffle: bool,
    /// Forms express randomly paired attributes jointly.
    pub non_compositional: bool,
    pub seed: u64,
}

impl Default for ProcGenConfig {
    fn default() -> Self {
        ProcGenConfig {
            n_attributes: 4,
            n_values: 4,
            sparse_meanings: false,
            synonymy: 1,
            polysemy_rate: 0.0,
            form_lengths: vec![1],
            vocab_size: None,
            imbalance: false,
            dataset_size: 500,
            noise_rate: 0.0,
            shuffle: false,
            non_compositional: false,
            seed: 0,
        }
    }
}

impl ProcGenConfig {
    pub fn is_multi_token(&self) -> bool {
        self.form_lengths.iter().any(|&l| l != 1)
    }

    /// Values an attribute can take: 2 (absent/present) for sparse meanings.
    pub fn values_per_attribute(&self) -> usize {
        if self.sparse_meanings {
            2
        } else {
            self.n_values
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: &str| Err(CsarError::Config(msg.to_owned()));
        if self.n_attributes == 0 {
            return fail("need at least one attribute");
        }
        if !self.sparse_meanings && self.n_values == 0 {
            return fail("need at least one value per attribute");
        }
        if self.synonymy == 0 {
            return fail("synonymy must be at least 1");
        }
        if !(0.0..=1.0).contains(&self.polysemy_rate) {
            return fail("polysemy rate must lie in [0, 1]");
        }
        if !(0.0..1.0).contains(&self.noise_rate) {
            return fail("noise rate must lie in [0, 1)");
        }
        if self.form_lengths.is_empty() || self.form_lengths.contains(&0) {
            return fail("form lengths must be non-empty and positive");
        }
        if self.is_multi_token() && self.vocab_size.is_none_or(|v| v == 0) {
            return fail("multi-token forms need a positive vocab size");
        }
        if self.dataset_size == 0 {
            return fail("dataset size must be at least 1");
        }
        if self.non_compositional && (self.synonymy > 1 || self.polysemy_rate > 0.0) {
            return fail("non-compositional datasets support neither synonymy nor polysemy");
        }
        Ok(())
    }

    /// Stable identifier of every setting except the seed.
    pub fn fingerprint(&self) -> String {
        let mut value = serde_json::to_value(self).expect("config serializes");
        value.as_object_mut().expect("object").remove("seed");
        let digest = Sha256::digest(value.to_string().as_bytes());
        hex::encode(&digest[..8])
    }

    /// Compact human-readable description of the active variations.
    pub fn label(&self) -> String {
        let mut s = String::new();
        let _ = write!(
            s,
            "{}{}x{}",
            if self.sparse_meanings { "sparse" } else { "av" },
            self.n_attributes,
            self.values_per_attribute()
        );
        let lengths: Vec<String> = self.form_lengths.iter().map(|l| l.to_string()).collect();
        let _ = write!(s, " syn{} poly{} len{}", self.synonymy, self.polysemy_rate, lengths.join(","));
        if let Some(v) = self.vocab_size.filter(|_| self.is_multi_token()) {
            let _ = write!(s, " vocab{v}");
        }
        let _ = write!(s, " n{} noise{}", self.dataset_size, self.noise_rate);
        for (flag, name) in [
            (self.imbalance, "imbalance"),
            (self.shuffle, "shuffle"),
            (self.non_compositional, "noncomp"),
        ] {
            if flag {
                let _ = write!(s, " {name}");
            }
        }
        s
    }

    /// Whether this config satisfies a `key=value` filter.
    pub fn matches(&self, key: &str, value: &str) -> Result<bool> {
        let parse_bool = |v: &str| match v {
            "true" | "t" | "1" | "yes" => Ok(true),
            "false" | "f" | "0" | "no" => Ok(false),
            _ => Err(CsarError::Config(format!("not a boolean: {v}"))),
        };
        let parse_num = |v: &str| {
            v.parse::<f64>()
                .map_err(|_| CsarError::Config(format!("not a number: {v}")))
        };
        Ok(match key {
            "synonymy" => self.synonymy as f64 == parse_num(value)?,
            "polysemy" | "polysemy_rate" => self.polysemy_rate == parse_num(value)?,
            "form_lengths" => {
                let lengths: std::result::Result<Vec<usize>, _> =
                    value.split(',').map(|v| v.trim().parse::<usize>()).collect();
                let lengths = lengths.map_err(|_| CsarError::Config(format!("bad lengths: {value}")))?;
                self.form_lengths == lengths
            }
            "vocab_size" | "vocab" => match value {
                "none" => self.vocab_size.is_none(),
                v => self.vocab_size.map(|x| x as f64) == Some(parse_num(v)?),
            },
            "sparse" | "sparse_meanings" => self.sparse_meanings == parse_bool(value)?,
            "imbalance" => self.imbalance == parse_bool(value)?,
            "dataset_size" => self.dataset_size as f64 == parse_num(value)?,
            "noise" | "noise_rate" => self.noise_rate == parse_num(value)?,
            "shuffle" => self.shuffle == parse_bool(value)?,
            "non_compositional" | "noncomp" => self.non_compositional == parse_bool(value)?,
            "seed" => self.seed as f64 == parse_num(value)?,
            other => return Err(CsarError::Config(format!("unknown filter key '{other}'"))),
        })
    }
}

/// One attribute–value component of a meaning.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Atom {
    pub attribute: usize,
    pub value: usize,
}

impl Atom {
    /// Surface meaning token: `a{attr}v{value}`, or `a{attr}` for a present
    /// sparse attribute.
    pub fn token(&self, sparse: bool) -> String {
        if sparse {
            format!("a{}", self.attribute)
        } else {
            format!("a{}v{}", self.attribute, self.value)
        }
    }
}

fn stream(seed: u64, name: &str) -> ChaCha8Rng {
    let digest = Sha256::new().chain_update(seed.to_le_bytes()).chain_update(name).finalize();
    let mut bytes = [0u8; 32];
    bytes.copy_from_slice(&digest);
    ChaCha8Rng::from_seed(bytes)
}

/// Index in `0..weights.len()` drawn proportionally to integer `weights`.
fn weighted_index(rng: &mut impl Rng, weights: &[u64]) -> usize {
    let total: u64 = weights.iter().sum();
    let mut x = rng.random_range(0..total);
    for (i, &w) in weights.iter().enumerate() {
        if x < w {
            return i;
        }
        x -= w;
    }
    unreachable!("x < total")
}

fn value_weights(config: &ProcGenConfig) -> Vec<u64> {
    let n = config.values_per_attribute();
    if config.imbalance {
        (1..=n as u64).collect()
    } else {
        vec![1; n]
    }
}

/// Draws one complete meaning, as atoms in attribute order.
///
/// Attribute–value meanings take one value per attribute. Sparse meanings
/// keep only present attributes (value 1) and are redrawn when empty.
pub fn sample_meaning(config: &ProcGenConfig, rng: &mut impl Rng) -> Vec<Atom> {
    let weights = value_weights(config);
    loop {
        let atoms: Vec<Atom> = (0..config.n_attributes)
            .filter_map(|attribute| {
                let value = weighted_index(rng, &weights);
                (!config.sparse_meanings || value == 1).then_some(Atom { attribute, value })
            })
            .collect();
        if !atoms.is_empty() {
            return atoms;
        }
    }
}

/// A meaning expressed by a single form: one atom, or a merged group of
/// atoms in non-compositional lexicons.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LexicalUnit {
    pub meaning: Vec<Atom>,
    /// Synonymous forms as lexicon token indices.
    pub forms: Vec<Vec<u32>>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Lexicon {
    pub units: Vec<LexicalUnit>,
    /// Attribute groups expressed jointly (singletons when compositional).
    pub groups: Vec<Vec<usize>>,
    /// Tokens used by forms are `0..form_vocab`; noise uses the next
    /// `form_vocab` ids.
    pub form_vocab: u32,
    sparse: bool,
}

impl Lexicon {
    /// Units expressing `meaning`, in order of their first attribute.
    pub fn decompose(&self, meaning: &[Atom]) -> Vec<usize> {
        let mut out = Vec::new();
        for group in &self.groups {
            let part: Vec<Atom> = meaning
                .iter()
                .copied()
                .filter(|a| group.contains(&a.attribute))
                .collect();
            if part.is_empty() {
                continue;
            }
            let unit = self
                .units
                .iter()
                .position(|u| u.meaning == part)
                .expect("every meaning component has a unit");
            out.push(unit);
        }
        out
    }

    pub fn meaning_tokens(&self, unit: usize) -> Vec<String> {
        self.units[unit].meaning.iter().map(|a| a.token(self.sparse)).collect()
    }

    /// Every (form, meaning) the lexicon can produce.
    pub fn all_pairs(&self) -> Vec<(Vec<u32>, Vec<String>)> {
        self.units
            .iter()
            .enumerate()
            .flat_map(|(i, u)| u.forms.iter().map(move |f| (f.clone(), self.meaning_tokens(i))))
            .collect()
    }
}

/// Non-empty value combinations of a group of attributes.
fn group_meanings(group: &[usize], config: &ProcGenConfig) -> Vec<Vec<Atom>> {
    let mut out: Vec<Vec<Atom>> = vec![Vec::new()];
    for &attribute in group {
        let mut next = Vec::new();
        for prefix in &out {
            if config.sparse_meanings {
                next.push(prefix.clone());
                let mut with = prefix.clone();
                with.push(Atom { attribute, value: 1 });
                next.push(with);
            } else {
                for value in 0..config.n_values {
                    let mut with = prefix.clone();
                    with.push(Atom { attribute, value });
                    next.push(with);
                }
            }
        }
        out = next;
    }
    out.retain(|m| !m.is_empty());
    out
}

/// Draws the meaning → forms mapping.
pub fn build_lexicon(config: &ProcGenConfig, rng: &mut impl Rng) -> Result<Lexicon> {
    config.validate()?;
    let mut attributes: Vec<usize> = (0..config.n_attributes).collect();
    let groups: Vec<Vec<usize>> = if config.non_compositional {
        attributes.shuffle(rng);
        let mut groups: Vec<Vec<usize>> = attributes
            .chunks(2)
            .map(|c| {
                let mut g = c.to_vec();
                g.sort_unstable();
                g
            })
            .collect();
        groups.sort();
        groups
    } else {
        attributes.iter().map(|&a| vec![a]).collect()
    };

    let meanings: Vec<Vec<Atom>> = groups.iter().flat_map(|g| group_meanings(g, config)).collect();
    let single_token = !config.is_multi_token();
    let vocab = config.vocab_size.unwrap_or(0) as u32;

    let mut used: BTreeSet<Vec<u32>> = BTreeSet::new();
    let mut used_order: Vec<Vec<u32>> = Vec::new();
    let mut next_token = 0u32;
    let mut units = Vec::with_capacity(meanings.len());
    for meaning in meanings {
        let mut forms: Vec<Vec<u32>> = Vec::with_capacity(config.synonymy);
        let polysemous = config.polysemy_rate > 0.0 && rng.random_bool(config.polysemy_rate);
        for slot in 0..config.synonymy {
            if slot == 0 && polysemous && !used_order.is_empty() {
                let form = used_order[rng.random_range(0..used_order.len())].clone();
                forms.push(form);
                continue;
            }
            let form = if single_token {
                next_token += 1;
                vec![next_token - 1]
            } else {
                let mut attempt = 0;
                loop {
                    let len = config.form_lengths[rng.random_range(0..config.form_lengths.len())];
                    let form: Vec<u32> = (0..len).map(|_| rng.random_range(0..vocab)).collect();
                    if !used.contains(&form) && !forms.contains(&form) {
                        break form;
                    }
                    attempt += 1;
                    if attempt > 10_000 {
                        return Err(CsarError::Config(
                            "lexicon capacity exhausted: cannot draw enough distinct forms".into(),
                        ));
                    }
                }
            };
            forms.push(form);
        }
        for f in &forms {
            if used.insert(f.clone()) {
                used_order.push(f.clone());
            }
        }
        units.push(LexicalUnit { meaning, forms });
    }
    Ok(Lexicon {
        units,
        groups,
        form_vocab: if single_token { next_token } else { vocab },
        sparse: config.sparse_meanings,
    })
}

/// Part of a generated utterance.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Piece {
    /// Form `synonym` of lexicon unit `unit`.
    Morph { unit: usize, synonym: usize },
    Noise(Vec<u32>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GeneratedRecord {
    pub meaning: Vec<Atom>,
    pub pieces: Vec<Piece>,
}

impl GeneratedRecord {
    pub fn utterance(&self, lexicon: &Lexicon) -> Vec<u32> {
        self.pieces
            .iter()
            .flat_map(|p| match p {
                Piece::Morph { unit, synonym } => lexicon.units[*unit].forms[*synonym].clone(),
                Piece::Noise(tokens) => tokens.clone(),
            })
            .collect()
    }
}

/// Generates the lexicon and the structured records of a dataset.
pub fn generate_records(config: &ProcGenConfig) -> Result<(Lexicon, Vec<GeneratedRecord>)> {
    let lexicon = build_lexicon(config, &mut stream(config.seed, "lexicon"))?;
    let mut meaning_rng = stream(config.seed, "meaning");
    let mut synonym_rng = stream(config.seed, "synonym");
    let mut shuffle_rng = stream(config.seed, "shuffle");
    let mut noise_rng = stream(config.seed, "noise");
    let geometric = (config.noise_rate > 0.0)
        .then(|| Geometric::new(1.0 - config.noise_rate).expect("valid noise rate"));
    let noise_pool = lexicon.form_vocab.max(1);

    let mut records = Vec::with_capacity(config.dataset_size);
    for _ in 0..config.dataset_size {
        let meaning = sample_meaning(config, &mut meaning_rng);
        let mut morphs: Vec<Piece> = lexicon
            .decompose(&meaning)
            .into_iter()
            .map(|unit| {
                let n = lexicon.units[unit].forms.len();
                let synonym = if n > 1 { synonym_rng.random_range(0..n) } else { 0 };
                Piece::Morph { unit, synonym }
            })
            .collect();
        if config.shuffle {
            morphs.shuffle(&mut shuffle_rng);
        }
        let pieces = match &geometric {
            None => morphs,
            Some(geo) => {
                let draw = |rng: &mut ChaCha8Rng| -> Option<Piece> {
                    let k = geo.sample(rng);
                    (k > 0).then(|| {
                        Piece::Noise(
                            (0..k)
                                .map(|_| lexicon.form_vocab + rng.random_range(0..noise_pool))
                                .collect(),
                        )
                    })
                };
                let mut pieces = Vec::new();
                for m in morphs {
                    pieces.extend(draw(&mut noise_rng));
                    pieces.push(m);
                }
                pieces.extend(draw(&mut noise_rng));
                pieces
            }
        };
        records.push(GeneratedRecord { meaning, pieces });
    }
    Ok((lexicon, records))
}

/// Generates a corpus and the ground-truth morphemes used in it.
///
/// Form tokens are the decimal strings of lexicon token ids; noise tokens
/// come from a disjoint id range.
pub fn generate_dataset(config: &ProcGenConfig) -> Result<(Corpus, GroundTruth)> {
    let (lexicon, records) = generate_records(config)?;
    let mut corpus = Corpus::new();
    let mut used: BTreeSet<(usize, usize)> = BTreeSet::new();
    for r in &records {
        let utterance: Vec<String> = r.utterance(&lexicon).iter().map(u32::to_string).collect();
        let meaning: Vec<String> = r.meaning.iter().map(|a| a.token(config.sparse_meanings)).collect();
        corpus.push(utterance, meaning);
        for p in &r.pieces {
            if let Piece::Morph { unit, synonym } = p {
                used.insert((*unit, *synonym));
            }
        }
    }
    let mut seen = BTreeSet::new();
    let mut morphemes = Vec::new();
    for (unit, synonym) in used {
        let form: Vec<TokenId> = lexicon.units[unit].forms[synonym]
            .iter()
            .map(|t| corpus.form_vocab.get(&t.to_string()).expect("used form token"))
            .collect();
        let mut meaning: Vec<TokenId> = lexicon
            .meaning_tokens(unit)
            .iter()
            .map(|t| corpus.meaning_vocab.get(t).expect("used meaning token"))
            .collect();
        meaning.sort_unstable();
        let pair = MorphemePair { form, meaning };
        if seen.insert(pair.clone()) {
            morphemes.push(pair);
        }
    }
    Ok((corpus, GroundTruth { morphemes }))
}

/// Two-value settings of every variation; the benchmark is their Cartesian
/// product.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub synonymy: Vec<usize>,
    pub polysemy: Vec<f64>,
    pub form_lengths: Vec<Vec<usize>>,
    /// Only crossed with multi-token form lengths.
    pub vocab_sizes: Vec<usize>,
    pub sparse: Vec<bool>,
    pub imbalance: Vec<bool>,
    pub dataset_sizes: Vec<usize>,
    pub noise: Vec<f64>,
    pub shuffle: Vec<bool>,
    pub non_compositional: Vec<bool>,
    pub seeds: Vec<u64>,
}

impl GridSpec {
    /// The full benchmark grid with 3 seeds per setting.
    pub fn full() -> Self {
        GridSpec {
            synonymy: vec![1, 3],
            polysemy: vec![0.0, 0.15],
            form_lengths: vec![vec![1], vec![1, 2, 3, 4]],
            vocab_sizes: vec![10, 50],
            sparse: vec![false, true],
            imbalance: vec![false, true],
            dataset_sizes: vec![50, 500],
            noise: vec![0.0, 0.5],
            shuffle: vec![false, true],
            non_compositional: vec![false, true],
            seeds: vec![0, 1, 2],
        }
    }

    /// Every variation inactive: one-to-one languages only.
    pub fn smoke() -> Self {
        GridSpec {
            synonymy: vec![1],
            polysemy: vec![0.0],
            form_lengths: vec![vec![1]],
            vocab_sizes: vec![10],
            sparse: vec![false],
            imbalance: vec![false],
            dataset_sizes: vec![500],
            noise: vec![0.0],
            shuffle: vec![false],
            non_compositional: vec![false],
            seeds: vec![0, 1, 2],
        }
    }

    pub fn by_name(name: &str) -> Option<Self> {
        match name {
            "default" | "full" => Some(Self::full()),
            "smoke" => Some(Self::smoke()),
            _ => None,
        }
    }

    pub fn with_seed_count(mut self, n: usize) -> Self {
        self.seeds = (0..n as u64).collect();
        self
    }
}

/// Cartesian product of the grid, minus non-compositional settings with
/// synonymy or polysemy. Vocabulary size is collapsed for single-token forms.
/// Configs for the same setting are adjacent, one per seed.
pub fn expand_grid(grid: &GridSpec) -> Vec<ProcGenConfig> {
    let mut out = Vec::new();
    for &non_compositional in &grid.non_compositional {
        for &synonymy in &grid.synonymy {
            for &polysemy_rate in &grid.polysemy {
                if non_compositional && (synonymy > 1 || polysemy_rate > 0.0) {
                    continue;
                }
                for form_lengths in &grid.form_lengths {
                    let multi = form_lengths.iter().any(|&l| l != 1);
                    let vocabs: Vec<Option<usize>> = if multi {
                        grid.vocab_sizes.iter().copied().map(Some).collect()
                    } else {
                        vec![None]
                    };
                    for vocab_size in vocabs {
                        for &sparse in &grid.sparse {
                            for &imbalance in &grid.imbalance {
                                for &dataset_size in &grid.dataset_sizes {
                                    for &noise_rate in &grid.noise {
                                        for &shuffle in &grid.shuffle {
                                            for &seed in &grid.seeds {
                                                let (n_attributes, n_values) =
                                                    if sparse { (8, 2) } else { (4, 4) };
                                                out.push(ProcGenConfig {
                                                    n_attributes,
                                                    n_values,
                                                    sparse_meanings: sparse,
                                                    synonymy,
                                                    polysemy_rate,
                                                    form_lengths: form_lengths.clone(),
                                                    vocab_size,
                                                    imbalance,
                                                    dataset_size,
                                                    noise_rate,
                                                    shuffle,
                                                    non_compositional,
                                                    seed,
                                                });
                                            }
                                        }
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    out
}

/// Parses `key=value` filters.
pub fn parse_filters(specs: &[String]) -> Result<Vec<(String, String)>> {
    specs
        .iter()
        .map(|s| {
            s.split_once('=')
                .map(|(k, v)| (k.trim().to_owned(), v.trim().to_owned()))
                .ok_or_else(|| CsarError::Config(format!("filter '{s}' is not key=value")))
        })
        .collect()
}

pub fn apply_filters(configs: Vec<ProcGenConfig>, filters: &[(String, String)]) -> Result<Vec<ProcGenConfig>> {
    let mut out = Vec::with_capacity(configs.len());
    for c in configs {
        let mut keep = true;
        for (k, v) in filters {
            keep &= c.matches(k, v)?;
        }
        if keep {
            out.push(c);
        }
    }
    Ok(out)
}
