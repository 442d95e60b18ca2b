//! Sparse binary feature pipelines over screens and RAM.
//!
//! Five generators with fixed dimensions:
//!
//! * [`BasicFeatures`] — per-tile color presence, 16x14 tiles x 128
//!   colors = 28,672 features.
//! * [`BassFeatures`] — the Basic encoding collapsed to an 8-color
//!   palette (1,792 base features) plus every pairwise AND of base
//!   features: 1,606,528 total.
//! * [`DiscoFeatures`] — discovered object classes, tile-coded
//!   positions and pairwise relative position/velocity.
//! * [`LshFeatures`] — locality-sensitive hashing of the binarized
//!   screen, 100,000 features with exactly 2,000 active.
//! * [`RamFeatures`] — the 1,024 RAM bits plus every pairwise AND:
//!   524,800 features.
//!
//! All generators emit a [`SparseFeatures`] vector: strictly increasing
//! active indices below a fixed dimension.

mod background;
mod basic;
mod blobs;
mod disco;
mod lsh;
mod pairs;
mod ram;
mod tiles;

pub use background::{detect_background, BackgroundAccumulator, BackgroundModel};
pub use basic::{bass_base_features, secam_color, BasicFeatures, BassFeatures, BASIC_DIM,
                BASS_BASE_DIM, BASS_DIM, TILE_COLS, TILE_H, TILE_ROWS, TILE_W};
pub use blobs::{extract_blobs, Blob};
pub use disco::{ClassDiscovery, ClassModel, ClassShape, DiscoFeatures, Instance,
                TileCoderConfig};
pub use lsh::{binarize_screen, LshFeatures, LshIndicator, LshModel, LshStats, SCREEN_BITS};
pub use pairs::{pair_count, pair_decode, pair_index};
pub use ram::{ram_base_features, RamFeatures, RAM_BASE_DIM, RAM_FEATURE_DIM};
pub use tiles::TileCoder;

use alloc::vec::Vec;

use crate::env::{RamState, Screen};

/// A sparse binary feature vector: the sorted set of active indices in
/// a space of fixed dimension.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SparseFeatures {
    dim: u32,
    active: Vec<u32>,
}

impl SparseFeatures {
    /// Normalizes `indices` (sorts, dedupes) and checks them against
    /// `dim`. Panics on an out-of-range index.
    pub fn new(dim: u32, mut indices: Vec<u32>) -> SparseFeatures {
        indices.sort_unstable();
        indices.dedup();
        if let Some(&last) = indices.last() {
            assert!(last < dim, "feature index {last} out of range for dimension {dim}");
        }
        SparseFeatures { dim, active: indices }
    }

    /// Wraps indices that are already strictly increasing and in range
    /// (checked in debug builds).
    pub fn from_sorted(dim: u32, indices: Vec<u32>) -> SparseFeatures {
        debug_assert!(indices.windows(2).all(|w| w[0] < w[1]));
        debug_assert!(indices.last().map_or(true, |&last| last < dim));
        SparseFeatures { dim, active: indices }
    }

    pub fn dim(&self) -> u32 {
        self.dim
    }

    /// The active indices, strictly increasing.
    pub fn active(&self) -> &[u32] {
        &self.active
    }

    pub fn len(&self) -> usize {
        self.active.len()
    }

    pub fn is_empty(&self) -> bool {
        self.active.is_empty()
    }

    pub fn contains(&self, index: u32) -> bool {
        self.active.binary_search(&index).is_ok()
    }
}

/// A feature pipeline: observation in, sparse binary vector out.
///
/// Generators may carry per-episode state (object tracking needs the
/// previous frame); drivers call [`FeatureGenerator::begin_episode`] at
/// every episode start.
pub trait FeatureGenerator {
    /// The constant dimension of emitted vectors.
    fn dim(&self) -> u32;

    /// Encodes one observation.
    fn generate(&mut self, screen: &Screen, ram: &RamState) -> SparseFeatures;

    /// Clears any cross-frame state.
    fn begin_episode(&mut self) {}
}
