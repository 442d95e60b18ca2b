//! Flat indexing of unordered pairs.
//!
//! Pairwise-conjunction pipelines append one feature per unordered pair
//! `(i, j)`, `i < j`, of base features. Pairs are laid out
//! lexicographically — all pairs starting with 0, then with 1, ... —
//! which keeps pair indices increasing when enumerated from a sorted
//! active set.

/// Number of unordered pairs over `d` elements.
pub const fn pair_count(d: usize) -> usize {
    d * d.saturating_sub(1) / 2
}

/// Flat index of pair `(i, j)` with `i < j < d`.
#[inline]
pub const fn pair_index(d: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j && j < d);
    i * d - i * (i + 1) / 2 + (j - i - 1)
}

/// Inverse of [`pair_index`].
pub fn pair_decode(d: usize, flat: usize) -> (usize, usize) {
    debug_assert!(flat < pair_count(d));
    // Smallest i whose row ends past `flat`; rows shrink as i grows, so
    // binary-search the row offsets.
    let row_start = |i: usize| i * d - i * (i + 1) / 2;
    let (mut lo, mut hi) = (0usize, d - 1);
    while lo + 1 < hi {
        let mid = (lo + hi) / 2;
        if row_start(mid) <= flat {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let i = if row_start(hi) <= flat { hi } else { lo };
    let j = i + 1 + (flat - row_start(i));
    (i, j)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_match_the_closed_form() {
        assert_eq!(pair_count(0), 0);
        assert_eq!(pair_count(1), 0);
        assert_eq!(pair_count(2), 1);
        assert_eq!(pair_count(1_024), 523_776);
        assert_eq!(pair_count(1_792), 1_604_736);
    }

    #[test]
    fn indexing_is_lexicographic_and_dense() {
        let d = 7;
        let mut expect = 0;
        for i in 0..d {
            for j in (i + 1)..d {
                assert_eq!(pair_index(d, i, j), expect);
                expect += 1;
            }
        }
        assert_eq!(expect, pair_count(d));
    }

    #[test]
    fn decode_inverts_index_exhaustively_at_full_scale() {
        // The larger production base dimension, checked pair by pair.
        let d = 1_792;
        let mut flat = 0;
        for i in 0..d {
            for j in (i + 1)..d {
                assert_eq!(pair_decode(d, flat), (i, j));
                flat += 1;
            }
        }
        assert_eq!(flat, pair_count(d));
    }
}
