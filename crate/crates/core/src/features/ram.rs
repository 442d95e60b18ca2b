//! Features read straight from console memory.
//!
//! Each of the 1,024 RAM bits is a base feature (bit `b` of byte `i`
//! maps to index `i * 8 + b`, least significant bit first), and every
//! pair of active bits lights a conjunction in the block above, for a
//! total dimension of 524,800.

use alloc::vec::Vec;

use crate::env::{RamState, Screen, RAM_SIZE};
use crate::features::pairs::{pair_count, pair_index};
use crate::features::{FeatureGenerator, SparseFeatures};

/// Base features: one per RAM bit.
pub const RAM_BASE_DIM: u32 = (RAM_SIZE * 8) as u32;

/// Base bits plus all pairwise conjunctions.
pub const RAM_FEATURE_DIM: u32 = RAM_BASE_DIM + pair_count(RAM_SIZE * 8) as u32;

/// Indices of the set bits, in increasing order.
pub fn ram_base_features(ram: &RamState) -> Vec<u32> {
    let mut base = Vec::new();
    for (i, &byte) in ram.bytes().iter().enumerate() {
        let mut b = byte;
        while b != 0 {
            base.push((i * 8) as u32 + b.trailing_zeros());
            b &= b - 1;
        }
    }
    base
}

/// The RAM pipeline; stateless.
#[derive(Debug, Clone, Copy, Default)]
pub struct RamFeatures;

impl FeatureGenerator for RamFeatures {
    fn dim(&self) -> u32 {
        RAM_FEATURE_DIM
    }

    fn generate(&mut self, _screen: &Screen, ram: &RamState) -> SparseFeatures {
        let base = ram_base_features(ram);
        let mut active = base.clone();
        let d = RAM_BASE_DIM as usize;
        for (a, &i) in base.iter().enumerate() {
            for &j in &base[a + 1..] {
                active.push(RAM_BASE_DIM + pair_index(d, i as usize, j as usize) as u32);
            }
        }
        SparseFeatures::from_sorted(RAM_FEATURE_DIM, active)
    }
}
