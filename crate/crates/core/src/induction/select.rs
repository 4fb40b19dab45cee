//! Pair selection with tie-breaking, and choice among multiple form matches.

use std::cmp::Ordering;

use crate::corpus::TokenId;
use crate::induction::state::Span;

/// A pair competing for selection in one iteration.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PairChoice<'a> {
    pub form: &'a [TokenId],
    pub meaning: &'a [TokenId],
    /// Current capped weight.
    pub weight: f64,
    pub initial_weight: f64,
    /// Morphemes already selected with this form.
    pub form_selections: u32,
}

/// Selection order: `Less` means `a` is taken before `b`.
///
/// Higher weight first; then higher initial weight, fewer earlier selections
/// of the same form, longer form, smaller meaning; finally the token ids of
/// form and meaning, lexicographically.
pub fn selection_order(a: &PairChoice<'_>, b: &PairChoice<'_>) -> Ordering {
    b.weight
        .total_cmp(&a.weight)
        .then_with(|| b.initial_weight.total_cmp(&a.initial_weight))
        .then_with(|| a.form_selections.cmp(&b.form_selections))
        .then_with(|| b.form.len().cmp(&a.form.len()))
        .then_with(|| a.meaning.len().cmp(&b.meaning.len()))
        .then_with(|| a.form.cmp(b.form))
        .then_with(|| a.meaning.cmp(b.meaning))
}

/// The pair to select next, or `None` when no pair has positive weight.
pub fn select_pair<'a, I>(choices: I) -> Option<PairChoice<'a>>
where
    I: IntoIterator<Item = PairChoice<'a>>,
{
    choices
        .into_iter()
        .filter(|c| c.weight > 0.0)
        .min_by(selection_order)
}

/// Among several matches of a form of length `form_len`, picks the one whose
/// strongest overlapping competitor is weakest, i.e. the match least likely
/// to belong to another morpheme. Ties go to the leftmost match.
///
/// `competitor_weight` scores a substring of the record; every substring of
/// at most `max_form_size` tokens overlapping a match is consulted.
pub fn best_match_position(
    segments: &[Vec<TokenId>],
    occurrences: &[Span],
    form_len: usize,
    max_form_size: Option<usize>,
    mut competitor_weight: impl FnMut(&[TokenId]) -> f64,
) -> usize {
    if occurrences.len() <= 1 {
        return 0;
    }
    let max_len = max_form_size.unwrap_or(usize::MAX);
    let mut best = (0, f64::INFINITY);
    for (i, span) in occurrences.iter().enumerate() {
        let seg = &segments[span.segment];
        let (lo, hi) = (span.offset, span.offset + form_len);
        let mut strongest = 0.0f64;
        // Overlap with [lo, hi) means start < hi and end > lo.
        for start in 0..hi {
            let first_end = (start + 1).max(lo + 1);
            let last_end = seg.len().min(start.saturating_add(max_len));
            for end in first_end..=last_end {
                strongest = strongest.max(competitor_weight(&seg[start..end]));
            }
        }
        if strongest < best.1 {
            best = (i, strongest);
        }
    }
    best.0
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Seeded, reproducible pick among `count` matches when position search is
/// disabled.
pub fn quasirandom_position(seed: u64, record: usize, iteration: usize, count: usize) -> usize {
    if count <= 1 {
        return 0;
    }
    let h = splitmix64(seed ^ splitmix64(record as u64 ^ splitmix64(iteration as u64 ^ splitmix64(count as u64))));
    (h % count as u64) as usize
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    fn ids(v: &[u32]) -> Vec<TokenId> {
        v.iter().copied().map(TokenId).collect()
    }

    fn choice<'a>(form: &'a [TokenId], meaning: &'a [TokenId], w: f64, w0: f64) -> PairChoice<'a> {
        PairChoice {
            form,
            meaning,
            weight: w,
            initial_weight: w0,
            form_selections: 0,
        }
    }

    #[test]
    fn unique_maximum() {
        let (f1, f2, m) = (ids(&[1]), ids(&[2]), ids(&[0]));
        let best = select_pair([choice(&f1, &m, 0.3, 0.3), choice(&f2, &m, 0.5, 0.5)]).unwrap();
        assert_eq!(best.form, &f2[..]);
    }

    #[test]
    fn higher_initial_weight_breaks_tie() {
        let (f1, f2, m) = (ids(&[1]), ids(&[2]), ids(&[0]));
        let best = select_pair([choice(&f1, &m, 0.4, 0.8), choice(&f2, &m, 0.4, 0.9)]).unwrap();
        assert_eq!(best.initial_weight, 0.9);
    }

    #[test]
    fn fewer_selections_of_form_breaks_tie() {
        let (f1, f2, m) = (ids(&[1]), ids(&[2]), ids(&[0]));
        let mut a = choice(&f1, &m, 0.4, 0.4);
        a.form_selections = 1;
        let best = select_pair([a, choice(&f2, &m, 0.4, 0.4)]).unwrap();
        assert_eq!(best.form, &f2[..]);
    }

    #[test]
    fn longer_form_breaks_tie() {
        let (f2, f3, m) = (ids(&[1, 2]), ids(&[3, 4, 5]), ids(&[0]));
        let best = select_pair([choice(&f2, &m, 0.4, 0.4), choice(&f3, &m, 0.4, 0.4)]).unwrap();
        assert_eq!(best.form.len(), 3);
    }

    #[test]
    fn smaller_meaning_then_lexicographic() {
        let (f, m1, m2) = (ids(&[1]), ids(&[0]), ids(&[0, 1]));
        let best = select_pair([choice(&f, &m2, 0.4, 0.4), choice(&f, &m1, 0.4, 0.4)]).unwrap();
        assert_eq!(best.meaning, &m1[..]);
        let (fa, fb) = (ids(&[3]), ids(&[2]));
        let best = select_pair([choice(&fa, &m1, 0.4, 0.4), choice(&fb, &m1, 0.4, 0.4)]).unwrap();
        assert_eq!(best.form, &fb[..]);
    }

    #[test]
    fn nothing_positive() {
        let (f, m) = (ids(&[1]), ids(&[0]));
        assert!(select_pair([choice(&f, &m, 0.0, 0.2)]).is_none());
        assert!(select_pair(Vec::new()).is_none());
    }

    #[test]
    fn ambiguous_application_example() {
        // "x y z x y", applying "x y": (z x y) outweighs (x y z), so the first
        // match is the one least likely to be part of another morpheme.
        let (x, y, z) = (0, 1, 2);
        let segments = vec![ids(&[x, y, z, x, y])];
        let occurrences = [Span { segment: 0, offset: 0 }, Span { segment: 0, offset: 3 }];
        let weights: HashMap<Vec<TokenId>, f64> =
            [(ids(&[z, x, y]), 0.9), (ids(&[x, y, z]), 0.4)].into_iter().collect();
        let pick = best_match_position(&segments, &occurrences, 2, None, |s| {
            weights.get(s).copied().unwrap_or(0.0)
        });
        assert_eq!(pick, 0);

        let flipped: HashMap<Vec<TokenId>, f64> =
            [(ids(&[z, x, y]), 0.4), (ids(&[x, y, z]), 0.9)].into_iter().collect();
        let pick = best_match_position(&segments, &occurrences, 2, None, |s| {
            flipped.get(s).copied().unwrap_or(0.0)
        });
        assert_eq!(pick, 1);
    }

    #[test]
    fn overlap_enumeration_is_exact() {
        let segments = vec![ids(&[0, 1, 2, 3, 4])];
        let span = [Span { segment: 0, offset: 2 }, Span { segment: 0, offset: 4 }];
        let mut seen = Vec::new();
        best_match_position(&segments, &span[..2], 1, Some(2), |s| {
            seen.push(s.to_vec());
            0.0
        });
        // Around token 2: [2], [1,2], [2,3]; around token 4: [4], [3,4].
        seen.sort();
        assert_eq!(seen, vec![ids(&[1, 2]), ids(&[2]), ids(&[2, 3]), ids(&[3, 4]), ids(&[4])]);
    }

    #[test]
    fn ties_go_left() {
        let segments = vec![ids(&[5, 5])];
        let occ = [Span { segment: 0, offset: 0 }, Span { segment: 0, offset: 1 }];
        assert_eq!(best_match_position(&segments, &occ, 1, None, |_| 1.0), 0);
        assert_eq!(best_match_position(&segments, &occ[..1], 1, None, |_| 1.0), 0);
    }

    #[test]
    fn quasirandom_is_reproducible() {
        for count in 2..7 {
            let a: Vec<usize> = (0..50).map(|r| quasirandom_position(7, r, 3, count)).collect();
            let b: Vec<usize> = (0..50).map(|r| quasirandom_position(7, r, 3, count)).collect();
            assert_eq!(a, b);
            assert!(a.iter().all(|&p| p < count));
            assert!(a.iter().any(|&p| p != a[0]), "spread over matches");
        }
        assert_eq!(quasirandom_position(1, 2, 3, 1), 0);
    }
}
