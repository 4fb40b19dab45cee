//! Parallel form–meaning corpora: token interning and line-delimited JSON I/O.
//!
//! Every line of a corpus file is an object `{"form": [...], "meaning": [...]}`.
//! Tokens are arbitrary strings on disk (numbers are accepted and stringified)
//! and are interned to dense [`TokenId`]s in first-occurrence order, so two
//! loads of the same file always agree on id assignment.

use std::collections::HashMap;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{CsarError, Result};
use crate::inventory::{FormMeaning, GroundTruth, Inventory, Morpheme, MorphemePair};

/// Dense index into a [`Vocab`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[repr(transparent)]
pub struct TokenId(pub u32);

impl TokenId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for TokenId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Bidirectional surface string ↔ [`TokenId`] table.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Vocab {
    tokens: Vec<String>,
    index: HashMap<String, TokenId>,
}

impl Vocab {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn intern(&mut self, token: &str) -> TokenId {
        if let Some(&id) = self.index.get(token) {
            return id;
        }
        let id = TokenId(self.tokens.len() as u32);
        self.tokens.push(token.to_owned());
        self.index.insert(token.to_owned(), id);
        id
    }

    pub fn get(&self, token: &str) -> Option<TokenId> {
        self.index.get(token).copied()
    }

    /// Surface string of `id`. Panics if `id` was not issued by this table.
    pub fn resolve(&self, id: TokenId) -> &str {
        &self.tokens[id.index()]
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn resolve_all(&self, ids: &[TokenId]) -> Vec<&str> {
        ids.iter().map(|&id| self.resolve(id)).collect()
    }
}

/// One parallel datum.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Record {
    /// Utterance, order significant.
    pub form: Vec<TokenId>,
    /// Complete meaning as a set in ascending id order.
    pub meaning: Vec<TokenId>,
    /// Meaning tokens in file order, duplicates kept. Only consulted when
    /// meanings are treated as sequences (n-gram semantics).
    pub meaning_seq: Vec<TokenId>,
}

impl Record {
    pub fn new(form: Vec<TokenId>, meaning_seq: Vec<TokenId>) -> Self {
        let mut meaning = meaning_seq.clone();
        meaning.sort_unstable();
        meaning.dedup();
        Record {
            form,
            meaning,
            meaning_seq,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Corpus {
    pub records: Vec<Record>,
    pub form_vocab: Vocab,
    pub meaning_vocab: Vocab,
    /// Input lines rejected for an empty form or empty meaning.
    pub skipped_count: usize,
}

impl Corpus {
    pub fn new() -> Self {
        Self::default()
    }

    /// Interns and appends one record. Returns `false` (and counts a skip) if
    /// either side is empty.
    pub fn push<F, M>(&mut self, form: F, meaning: M) -> bool
    where
        F: IntoIterator,
        F::Item: AsRef<str>,
        M: IntoIterator,
        M::Item: AsRef<str>,
    {
        let form: Vec<String> = form.into_iter().map(|t| t.as_ref().to_owned()).collect();
        let meaning: Vec<String> = meaning.into_iter().map(|t| t.as_ref().to_owned()).collect();
        if form.is_empty() || meaning.is_empty() {
            self.skipped_count += 1;
            return false;
        }
        let form = form.iter().map(|t| self.form_vocab.intern(t)).collect();
        let meaning = meaning.iter().map(|t| self.meaning_vocab.intern(t)).collect();
        self.records.push(Record::new(form, meaning));
        true
    }

    pub fn from_records<I, F, M>(records: I) -> Self
    where
        I: IntoIterator<Item = (F, M)>,
        F: IntoIterator,
        F::Item: AsRef<str>,
        M: IntoIterator,
        M::Item: AsRef<str>,
    {
        let mut corpus = Corpus::new();
        for (form, meaning) in records {
            corpus.push(form, meaning);
        }
        corpus
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Keeps only the first `max_records` records.
    pub fn truncate(&mut self, max_records: usize) {
        self.records.truncate(max_records);
    }

    pub fn form_surface(&self, form: &[TokenId]) -> Vec<&str> {
        self.form_vocab.resolve_all(form)
    }

    pub fn meaning_surface(&self, meaning: &[TokenId]) -> Vec<&str> {
        self.meaning_vocab.resolve_all(meaning)
    }
}

#[derive(Serialize)]
struct PairLine<'a> {
    form: Vec<&'a str>,
    meaning: Vec<&'a str>,
}

#[derive(Serialize, Deserialize)]
struct InventoryLine {
    form: Vec<String>,
    meaning: Vec<String>,
    weight: f64,
    initial_weight: f64,
    order: usize,
    prevalence: f64,
}

fn token_list(value: Option<&Value>) -> Option<Vec<String>> {
    value?
        .as_array()?
        .iter()
        .map(|t| match t {
            Value::String(s) => Some(s.clone()),
            Value::Number(n) => Some(n.to_string()),
            _ => None,
        })
        .collect()
}

/// Reads a `{"form": [...], "meaning": [...]}` object, returning the raw
/// token lists.
fn parse_pair_line(line: &str) -> std::result::Result<(Vec<String>, Vec<String>), String> {
    let value: Value = serde_json::from_str(line).map_err(|e| e.to_string())?;
    let obj = value.as_object().ok_or("expected a JSON object")?;
    let form = token_list(obj.get("form")).ok_or("\"form\" must be an array of tokens")?;
    let meaning = token_list(obj.get("meaning")).ok_or("\"meaning\" must be an array of tokens")?;
    Ok((form, meaning))
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| CsarError::io(path, e))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(|e| CsarError::io(parent, e))?;
        }
    }
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CsarError::io(path, e))
}

/// Loads a line-delimited corpus, keeping at most `max_records` records.
///
/// Lines with an empty form or meaning (and blank lines) are skipped and
/// counted in [`Corpus::skipped_count`]. Reading stops once `max_records`
/// records have been retained.
pub fn load_corpus(path: impl AsRef<Path>, max_records: Option<usize>) -> Result<Corpus> {
    let path = path.as_ref();
    let reader = open(path)?;
    let mut corpus = Corpus::new();
    for (i, line) in reader.lines().enumerate() {
        if max_records.is_some_and(|max| corpus.len() >= max) {
            break;
        }
        let line = line.map_err(|e| CsarError::io(path, e))?;
        if line.trim().is_empty() {
            corpus.skipped_count += 1;
            continue;
        }
        let (form, meaning) = parse_pair_line(&line).map_err(|message| CsarError::Parse {
            path: path.to_owned(),
            line: i + 1,
            message,
        })?;
        corpus.push(form, meaning);
    }
    Ok(corpus)
}

pub fn save_corpus(corpus: &Corpus, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = create(path)?;
    for record in &corpus.records {
        let line = PairLine {
            form: corpus.form_vocab.resolve_all(&record.form),
            meaning: corpus.meaning_vocab.resolve_all(&record.meaning_seq),
        };
        write_line(&mut out, path, &line)?;
    }
    out.flush().map_err(|e| CsarError::io(path, e))
}

fn write_line<T: Serialize>(out: &mut impl Write, path: &Path, value: &T) -> Result<()> {
    serde_json::to_writer(&mut *out, value)
        .map_err(|e| CsarError::io(path, std::io::Error::other(e)))?;
    out.write_all(b"\n").map_err(|e| CsarError::io(path, e))
}

/// Writes one line per morpheme in selection order.
pub fn save_inventory(
    inventory: &Inventory,
    form_vocab: &Vocab,
    meaning_vocab: &Vocab,
    path: impl AsRef<Path>,
) -> Result<()> {
    let path = path.as_ref();
    let mut out = create(path)?;
    for m in &inventory.morphemes {
        let line = InventoryLine {
            form: form_vocab.resolve_all(&m.form).into_iter().map(str::to_owned).collect(),
            meaning: meaning_vocab
                .resolve_all(&m.meaning)
                .into_iter()
                .map(str::to_owned)
                .collect(),
            weight: m.weight,
            initial_weight: m.initial_weight,
            order: m.order,
            prevalence: m.prevalence,
        };
        write_line(&mut out, path, &line)?;
    }
    out.flush().map_err(|e| CsarError::io(path, e))
}

/// Reads an inventory file, interning its tokens into the given vocabularies.
pub fn load_inventory(
    path: impl AsRef<Path>,
    form_vocab: &mut Vocab,
    meaning_vocab: &mut Vocab,
) -> Result<Inventory> {
    let path = path.as_ref();
    let reader = open(path)?;
    let mut morphemes = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| CsarError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: InventoryLine = serde_json::from_str(&line).map_err(|e| CsarError::Parse {
            path: path.to_owned(),
            line: i + 1,
            message: e.to_string(),
        })?;
        morphemes.push(Morpheme {
            form: parsed.form.iter().map(|t| form_vocab.intern(t)).collect(),
            meaning: parsed.meaning.iter().map(|t| meaning_vocab.intern(t)).collect(),
            weight: parsed.weight,
            initial_weight: parsed.initial_weight,
            order: parsed.order,
            prevalence: parsed.prevalence,
        });
    }
    Ok(Inventory { morphemes })
}

pub fn save_ground_truth(
    truth: &GroundTruth,
    form_vocab: &Vocab,
    meaning_vocab: &Vocab,
    path: impl AsRef<Path>,
) -> Result<()> {
    let path = path.as_ref();
    let mut out = create(path)?;
    for m in &truth.morphemes {
        let line = PairLine {
            form: form_vocab.resolve_all(m.form()),
            meaning: meaning_vocab.resolve_all(m.meaning()),
        };
        write_line(&mut out, path, &line)?;
    }
    out.flush().map_err(|e| CsarError::io(path, e))
}

pub fn load_ground_truth(
    path: impl AsRef<Path>,
    form_vocab: &mut Vocab,
    meaning_vocab: &mut Vocab,
) -> Result<GroundTruth> {
    let path = path.as_ref();
    let reader = open(path)?;
    let mut morphemes = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| CsarError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let (form, meaning) = parse_pair_line(&line).map_err(|message| CsarError::Parse {
            path: path.to_owned(),
            line: i + 1,
            message,
        })?;
        let form = form.iter().map(|t| form_vocab.intern(t)).collect();
        let mut meaning: Vec<TokenId> = meaning.iter().map(|t| meaning_vocab.intern(t)).collect();
        meaning.sort_unstable();
        meaning.dedup();
        morphemes.push(MorphemePair { form, meaning });
    }
    Ok(GroundTruth { morphemes })
}
