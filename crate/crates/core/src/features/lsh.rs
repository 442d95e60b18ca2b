//! Locality-sensitive hashing of binarized screens.
//!
//! The screen becomes a 235,200-bit string (7 bits per pixel). Each of
//! `l` hash functions looks at `k` fixed random bit positions and sums
//! a per-position pseudo-random value for every position that matches,
//! modulo `m`; the resulting bucket lights one feature in that
//! function's block of `m`. With the standard scale (l = 2,000,
//! k = 1,000, m = 50) the output has dimension 100,000 with exactly
//! 2,000 active features, and one evaluation costs O(lk + n) index
//! operations.
//!
//! The whole model derives from a 64-bit seed, so model files only
//! store parameters.

use alloc::vec;
use alloc::vec::Vec;
use rand::Rng;

use crate::codec::{ByteReader, ByteWriter, CodecError};
use crate::env::{RamState, Screen, SCREEN_PIXELS};
use crate::features::{FeatureGenerator, SparseFeatures};
use crate::rng::{mix64, role, seeded_rng};

/// Bits in a binarized screen: 7 per pixel.
pub const SCREEN_BITS: usize = SCREEN_PIXELS * 7;

const MAGIC: u32 = u32::from_le_bytes(*b"LSH1");

/// How a hash function decides that a screen bit "matches" one of its
/// `k` positions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LshIndicator {
    /// Count a position when the screen bit there is 1 (the sampled
    /// positions act as a random mask that is ANDed with the screen).
    MaskedAnd,
    /// Count a position when the screen bit equals the sampled vector's
    /// bit — over all `n` positions, with the sampled `k` set to 1 and
    /// the rest 0. Equivalent information, much denser arithmetic;
    /// kept for fidelity comparisons.
    Equality,
}

/// Expands a screen to its 7-bit-per-pixel binary string, packed in
/// 64-bit words. Bit `pixel * 7 + t` is bit `6 - t` of the color (most
/// significant first).
pub fn binarize_screen(screen: &Screen) -> Vec<u64> {
    let mut bits = vec![0u64; (SCREEN_BITS + 63) / 64];
    for (pixel, &color) in screen.data().iter().enumerate() {
        let mut c = color;
        let base = pixel * 7;
        while c != 0 {
            let low = c.trailing_zeros() as usize;
            let j = base + 6 - low;
            bits[j / 64] |= 1u64 << (j % 64);
            c &= c - 1;
        }
    }
    bits
}

#[inline]
fn bit(bits: &[u64], j: usize) -> bool {
    bits[j / 64] >> (j % 64) & 1 != 0
}

/// Evaluation cost counters, for the O(lk + n) cost contract.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LshStats {
    /// Screen-bit reads plus hash-value additions.
    pub index_ops: u64,
}

/// A seeded LSH model.
#[derive(Debug, Clone, PartialEq)]
pub struct LshModel {
    seed: u64,
    l: u32,
    k: u32,
    m: u32,
    indicator: LshIndicator,
    /// `l` blocks of `k` sorted distinct bit positions.
    ones: Vec<u32>,
    /// Equality only: per-function sum of all `n` hash values, mod `m`.
    eq_base: Vec<u32>,
}

impl LshModel {
    /// Builds the model for a seed. All tables are pure functions of
    /// `(seed, l, k, m)`.
    pub fn new(seed: u64, l: u32, k: u32, m: u32, indicator: LshIndicator) -> LshModel {
        assert!(l >= 1 && k >= 1 && m >= 1 && (k as usize) <= SCREEN_BITS);
        let mut ones = Vec::with_capacity(l as usize * k as usize);
        let mut taken = vec![false; SCREEN_BITS];
        let mut touched: Vec<u32> = Vec::with_capacity(k as usize);
        for i in 0..l {
            let mut rng = seeded_rng(seed, role::FIXTURE, i as u64);
            touched.clear();
            while touched.len() < k as usize {
                let j = rng.gen_range(0..SCREEN_BITS as u32);
                if !taken[j as usize] {
                    taken[j as usize] = true;
                    touched.push(j);
                }
            }
            for &j in &touched {
                taken[j as usize] = false;
            }
            touched.sort_unstable();
            ones.extend_from_slice(&touched);
        }
        let eq_base = match indicator {
            LshIndicator::MaskedAnd => Vec::new(),
            LshIndicator::Equality => (0..l)
                .map(|i| {
                    let mut sum = 0u64;
                    for j in 0..SCREEN_BITS as u32 {
                        sum += hash_value(seed, i, j, m) as u64;
                        sum %= m as u64;
                    }
                    sum as u32
                })
                .collect(),
        };
        LshModel { seed, l, k, m, indicator, ones, eq_base }
    }

    /// The standard scale: 2,000 functions of 1,000 positions hashing
    /// into 50 buckets, masked-AND indicator.
    pub fn standard(seed: u64) -> LshModel {
        LshModel::new(seed, 2_000, 1_000, 50, LshIndicator::MaskedAnd)
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn l(&self) -> u32 {
        self.l
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn indicator(&self) -> LshIndicator {
        self.indicator
    }

    /// The sorted bit positions function `i` looks at.
    pub fn positions(&self, i: u32) -> &[u32] {
        let k = self.k as usize;
        &self.ones[i as usize * k..(i as usize + 1) * k]
    }

    /// The pseudo-random value added when function `i` matches bit `j`.
    pub fn hash_value(&self, i: u32, j: u32) -> u32 {
        hash_value(self.seed, i, j, self.m)
    }

    pub fn feature_dim(&self) -> u32 {
        self.l * self.m
    }

    /// Hashes a binarized screen; exactly one active feature per
    /// function.
    pub fn hash_bits(&self, bits: &[u64]) -> (SparseFeatures, LshStats) {
        let mut stats = LshStats::default();
        let mut active = Vec::with_capacity(self.l as usize);
        match self.indicator {
            LshIndicator::MaskedAnd => {
                for i in 0..self.l {
                    let mut h = 0u64;
                    for &j in self.positions(i) {
                        stats.index_ops += 1;
                        if bit(bits, j as usize) {
                            h += self.hash_value(i, j) as u64;
                        }
                    }
                    active.push(i * self.m + (h % self.m as u64) as u32);
                }
            }
            LshIndicator::Equality => {
                // Gather the screen's one-bits once: O(n).
                let mut screen_ones: Vec<u32> = Vec::new();
                for (w, &word) in bits.iter().enumerate() {
                    let mut word = word;
                    while word != 0 {
                        screen_ones.push((w * 64) as u32 + word.trailing_zeros());
                        word &= word - 1;
                        stats.index_ops += 1;
                    }
                }
                for i in 0..self.l {
                    // Start from the all-positions total and remove the
                    // mismatches: exactly the symmetric difference of
                    // the screen's ones and this function's positions.
                    let mut h = self.eq_base[i as usize] as u64;
                    let pos = self.positions(i);
                    let (mut a, mut b) = (0usize, 0usize);
                    while a < pos.len() || b < screen_ones.len() {
                        stats.index_ops += 1;
                        let mismatch = match (pos.get(a), screen_ones.get(b)) {
                            (Some(&p), Some(&s)) if p == s => {
                                a += 1;
                                b += 1;
                                continue;
                            }
                            (Some(&p), Some(&s)) if p < s => {
                                a += 1;
                                p
                            }
                            (Some(&p), None) => {
                                a += 1;
                                p
                            }
                            (_, Some(&s)) => {
                                b += 1;
                                s
                            }
                            (None, None) => unreachable!(),
                        };
                        h += (self.m - self.hash_value(i, mismatch)) as u64;
                        h %= self.m as u64;
                    }
                    active.push(i * self.m + (h % self.m as u64) as u32);
                }
            }
        }
        (SparseFeatures::from_sorted(self.feature_dim(), active), stats)
    }

    pub fn encode(&self, out: &mut Vec<u8>) {
        out.put_u32(MAGIC);
        out.put_u64(self.seed);
        out.put_u32(self.l);
        out.put_u32(self.k);
        out.put_u32(self.m);
        out.put_u8(match self.indicator {
            LshIndicator::MaskedAnd => 0,
            LshIndicator::Equality => 1,
        });
    }

    /// Rebuilds the full model from its parameter record.
    pub fn decode(bytes: &[u8]) -> Result<LshModel, CodecError> {
        let mut r = ByteReader::new(bytes);
        if r.read_u32()? != MAGIC {
            return Err(CodecError::BadMagic);
        }
        let seed = r.read_u64()?;
        let l = r.read_u32()?;
        let k = r.read_u32()?;
        let m = r.read_u32()?;
        let indicator = match r.read_u8()? {
            0 => LshIndicator::MaskedAnd,
            1 => LshIndicator::Equality,
            _ => return Err(CodecError::BadMagic),
        };
        r.finish()?;
        Ok(LshModel::new(seed, l, k, m, indicator))
    }
}

fn hash_value(seed: u64, i: u32, j: u32, m: u32) -> u32 {
    (mix64(seed ^ ((i as u64) << 32) ^ j as u64) % m as u64) as u32
}

/// The LSH pipeline over screens.
#[derive(Debug, Clone)]
pub struct LshFeatures {
    model: LshModel,
}

impl LshFeatures {
    pub fn new(model: LshModel) -> LshFeatures {
        LshFeatures { model }
    }

    pub fn model(&self) -> &LshModel {
        &self.model
    }
}

impl FeatureGenerator for LshFeatures {
    fn dim(&self) -> u32 {
        self.model.feature_dim()
    }

    fn generate(&mut self, screen: &Screen, _ram: &RamState) -> SparseFeatures {
        let bits = binarize_screen(screen);
        self.model.hash_bits(&bits).0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binarize_expands_colors_most_significant_bit_first() {
        let mut screen = Screen::new();
        screen.set(3, 0, 0b101_0110);
        let bits = binarize_screen(&screen);
        let base = 3 * 7;
        let expect = [true, false, true, false, true, true, false];
        for (t, &want) in expect.iter().enumerate() {
            assert_eq!(bit(&bits, base + t), want, "bit {t}");
        }
        // Total set bits = popcount of the one non-zero color.
        let total: u32 = bits.iter().map(|w| w.count_ones()).sum();
        assert_eq!(total, 4);
    }

    #[test]
    fn small_model_matches_a_brute_force_of_the_definition() {
        let model = LshModel::new(99, 6, 40, 13, LshIndicator::MaskedAnd);
        let mut screen = Screen::new();
        screen.fill_rect(10, 10, 60, 40, 0x5A);
        screen.fill_rect(100, 150, 20, 20, 0x03);
        let bits = binarize_screen(&screen);
        let (features, _) = model.hash_bits(&bits);

        for i in 0..6u32 {
            let mut h = 0u64;
            for &j in model.positions(i) {
                if bit(&bits, j as usize) {
                    h = (h + model.hash_value(i, j) as u64) % 13;
                }
            }
            assert!(features.contains(i * 13 + h as u32));
        }
        assert_eq!(features.len(), 6);
    }

    #[test]
    fn equality_indicator_matches_a_brute_force_over_all_positions() {
        let model = LshModel::new(5, 4, 30, 11, LshIndicator::Equality);
        let mut screen = Screen::new();
        screen.fill_rect(0, 0, 30, 30, 0x41);
        screen.fill_rect(128, 96, 15, 60, 0x2C);
        let bits = binarize_screen(&screen);
        let (features, _) = model.hash_bits(&bits);

        for i in 0..4u32 {
            // Direct evaluation: sum over every position where the
            // screen bit equals the sampled vector's bit.
            let pos = model.positions(i);
            let mut h = 0u64;
            for j in 0..SCREEN_BITS as u32 {
                let v = pos.binary_search(&j).is_ok();
                if bit(&bits, j as usize) == v {
                    h = (h + model.hash_value(i, j) as u64) % 11;
                }
            }
            assert!(features.contains(i * 11 + h as u32), "function {i}");
        }
        assert_eq!(features.len(), 4);
    }

    #[test]
    fn positions_are_sorted_distinct_and_seed_stable() {
        let a = LshModel::new(17, 10, 100, 50, LshIndicator::MaskedAnd);
        let b = LshModel::new(17, 10, 100, 50, LshIndicator::MaskedAnd);
        assert_eq!(a, b);
        for i in 0..10 {
            let pos = a.positions(i);
            assert_eq!(pos.len(), 100);
            assert!(pos.windows(2).all(|w| w[0] < w[1]));
            assert!(pos.iter().all(|&j| (j as usize) < SCREEN_BITS));
        }
        let c = LshModel::new(18, 10, 100, 50, LshIndicator::MaskedAnd);
        assert_ne!(a.positions(0), c.positions(0));
    }

    #[test]
    fn standard_scale_emits_exactly_one_feature_per_function() {
        let model = LshModel::standard(1);
        assert_eq!(model.feature_dim(), 100_000);
        let mut screen = Screen::new();
        screen.fill_rect(0, 0, 160, 105, 0x2A);
        let (features, stats) = model.hash_bits(&binarize_screen(&screen));
        assert_eq!(features.len(), 2_000);
        assert_eq!(features.dim(), 100_000);
        // Cost contract: linear in l*k plus the screen bits.
        assert!(stats.index_ops <= 2 * (2_000 * 1_000 + SCREEN_BITS as u64));
    }

    #[test]
    fn similar_screens_share_most_buckets() {
        let model = LshModel::standard(42);
        let mut a = Screen::new();
        a.fill_rect(40, 40, 30, 30, 0x19);
        let mut b = a.clone();
        b.set(41, 41, 0x1A); // one pixel, one bit apart
        let (fa, _) = model.hash_bits(&binarize_screen(&a));
        let (fb, _) = model.hash_bits(&binarize_screen(&b));
        let shared = fa.active().iter().filter(|&&i| fb.contains(i)).count();
        assert!(shared >= 1_900, "expected near-identical bucketing, got {shared}/2000");
        let (fa2, _) = model.hash_bits(&binarize_screen(&a));
        assert_eq!(fa, fa2);
    }

    #[test]
    fn model_files_only_carry_the_seed_and_parameters() {
        let model = LshModel::new(123, 8, 64, 17, LshIndicator::MaskedAnd);
        let mut bytes = Vec::new();
        model.encode(&mut bytes);
        assert_eq!(bytes.len(), 4 + 8 + 4 + 4 + 4 + 1);
        let back = LshModel::decode(&bytes).unwrap();
        assert_eq!(back, model);
    }
}
