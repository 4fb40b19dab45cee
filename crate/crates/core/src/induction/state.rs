//! Working state of each record while pairs are ablated from it.

use crate::corpus::{Record, TokenId};

/// Position of a form occurrence inside a record's surviving segments.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Span {
    pub segment: usize,
    pub offset: usize,
}

/// Surviving meaning tokens of a record.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MeaningState {
    /// Ascending token set.
    Set(Vec<TokenId>),
    /// Ordered segments, used under n-gram semantics.
    Sequence(Vec<Vec<TokenId>>),
}

/// What is left of a record after the ablations so far. Segments never merge:
/// removing a form splits the segment it came from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RecordState {
    pub segments: Vec<Vec<TokenId>>,
    pub meaning: MeaningState,
}

fn find_all<'a>(haystack: &'a [TokenId], needle: &'a [TokenId]) -> impl Iterator<Item = usize> + 'a {
    let starts = (haystack.len() + 1).saturating_sub(needle.len());
    (0..starts).filter(move |&i| haystack[i..].starts_with(needle))
}

/// Splits `segments[span.segment]` around `[offset, offset + len)`, dropping
/// empty remainders.
fn cut(segments: &mut Vec<Vec<TokenId>>, span: Span, len: usize) {
    let seg = &segments[span.segment];
    let left = seg[..span.offset].to_vec();
    let right = seg[span.offset + len..].to_vec();
    let replacement: Vec<Vec<TokenId>> = [left, right].into_iter().filter(|s| !s.is_empty()).collect();
    segments.splice(span.segment..=span.segment, replacement);
}

impl RecordState {
    pub fn from_record(record: &Record, ngram_semantics: bool) -> Self {
        let meaning = if ngram_semantics {
            MeaningState::Sequence(vec![record.meaning_seq.clone()])
        } else {
            MeaningState::Set(record.meaning.clone())
        };
        RecordState {
            segments: vec![record.form.clone()],
            meaning,
        }
    }

    /// Every place `form` matches, left to right (overlapping matches included).
    pub fn form_occurrences(&self, form: &[TokenId]) -> Vec<Span> {
        if form.is_empty() {
            return Vec::new();
        }
        self.segments
            .iter()
            .enumerate()
            .flat_map(|(segment, seg)| find_all(seg, form).map(move |offset| Span { segment, offset }))
            .collect()
    }

    pub fn contains_meaning(&self, meaning: &[TokenId]) -> bool {
        match &self.meaning {
            MeaningState::Set(set) => {
                !meaning.is_empty() && meaning.iter().all(|t| set.binary_search(t).is_ok())
            }
            MeaningState::Sequence(segs) => {
                !meaning.is_empty() && segs.iter().any(|s| find_all(s, meaning).next().is_some())
            }
        }
    }

    pub fn remove_form(&mut self, span: Span, len: usize) {
        cut(&mut self.segments, span, len);
    }

    /// Removes `meaning` (all its tokens for sets, the leftmost occurrence for
    /// sequences). No-op if it is not contained.
    pub fn remove_meaning(&mut self, meaning: &[TokenId]) {
        match &mut self.meaning {
            MeaningState::Set(set) => set.retain(|t| !meaning.contains(t)),
            MeaningState::Sequence(segs) => {
                let hit = segs
                    .iter()
                    .enumerate()
                    .find_map(|(segment, s)| find_all(s, meaning).next().map(|offset| Span { segment, offset }));
                if let Some(span) = hit {
                    cut(segs, span, meaning.len());
                }
            }
        }
    }

    pub fn form_token_count(&self) -> usize {
        self.segments.iter().map(Vec::len).sum()
    }

    pub fn meaning_token_count(&self) -> usize {
        match &self.meaning {
            MeaningState::Set(set) => set.len(),
            MeaningState::Sequence(segs) => segs.iter().map(Vec::len).sum(),
        }
    }

    /// Ablates `(form, meaning)` if both are present, removing the occurrence
    /// of `form` at index `choose(&occurrences)`. Returns whether the record
    /// changed.
    pub fn ablate(
        &mut self,
        form: &[TokenId],
        meaning: &[TokenId],
        choose: impl FnOnce(&RecordState, &[Span]) -> usize,
    ) -> bool {
        if !self.contains_meaning(meaning) {
            return false;
        }
        let occurrences = self.form_occurrences(form);
        if occurrences.is_empty() {
            return false;
        }
        let pick = if occurrences.len() == 1 { 0 } else { choose(self, &occurrences) };
        self.remove_form(occurrences[pick], form.len());
        self.remove_meaning(meaning);
        true
    }
}

/// Ablates `(form, meaning)` from every state where the form matches and the
/// meaning is contained, taking the leftmost occurrence when the form matches
/// more than once. Returns the number of records changed.
pub fn ablate_pair(states: &mut [RecordState], form: &[TokenId], meaning: &[TokenId]) -> usize {
    states
        .iter_mut()
        .map(|s| s.ablate(form, meaning, |_, _| 0) as usize)
        .sum()
}
