//! Basic and BASS screen encodings.
//!
//! Both divide the screen into 16x14 tiles of 10x15 pixels and record
//! which colors appear as foreground in each tile. Basic uses the full
//! 128-color palette (16 x 14 x 128 = 28,672 features). BASS collapses
//! the palette to 8 coarse colors (the high three bits), giving 1,792
//! base features, then appends the AND of every base-feature pair for
//! 1,606,528 features total — pairwise structure in exchange for color
//! resolution.

use alloc::vec::Vec;

use crate::env::{RamState, Screen, NUM_COLORS, SCREEN_WIDTH};
use crate::features::pairs::{pair_count, pair_index};
use crate::features::{BackgroundModel, FeatureGenerator, SparseFeatures};

/// Tile grid: 16 columns by 14 rows of 10x15-pixel tiles.
pub const TILE_COLS: usize = 16;
pub const TILE_ROWS: usize = 14;
pub const TILE_W: usize = 10;
pub const TILE_H: usize = 15;

/// Basic dimension: tiles x full palette.
pub const BASIC_DIM: u32 = (TILE_COLS * TILE_ROWS * NUM_COLORS) as u32;
/// BASS base-layer dimension: tiles x coarse palette.
pub const BASS_BASE_DIM: u32 = (TILE_COLS * TILE_ROWS * 8) as u32;
/// Full BASS dimension: base layer plus all pairwise ANDs.
pub const BASS_DIM: u32 = BASS_BASE_DIM + pair_count(BASS_BASE_DIM as usize) as u32;

/// The coarse 8-color palette: the high three bits of the 7-bit color.
static SECAM_MAP: [u8; NUM_COLORS] = build_secam_map();

const fn build_secam_map() -> [u8; NUM_COLORS] {
    let mut map = [0u8; NUM_COLORS];
    let mut c = 0;
    while c < NUM_COLORS {
        map[c] = (c >> 4) as u8;
        c += 1;
    }
    map
}

/// Collapses a 7-bit color to the coarse 8-color palette.
#[inline]
pub fn secam_color(color: u8) -> u8 {
    SECAM_MAP[color as usize]
}

/// Per-tile color presence. `palette_bits(color)` maps a foreground
/// pixel color to its palette slot; `slots` is the palette size.
fn tile_presence(
    screen: &Screen,
    bg: &BackgroundModel,
    slots: usize,
    palette: impl Fn(u8) -> u8,
) -> Vec<u32> {
    // One u128 presence mask per tile (palette sizes are <= 128).
    let mut masks = [0u128; TILE_COLS * TILE_ROWS];
    let data = screen.data();
    for (pixel, &color) in data.iter().enumerate() {
        if bg.is_foreground(pixel, color) {
            let x = pixel % SCREEN_WIDTH;
            let y = pixel / SCREEN_WIDTH;
            let tile = (y / TILE_H) * TILE_COLS + x / TILE_W;
            masks[tile] |= 1u128 << palette(color);
        }
    }
    let mut active = Vec::new();
    for (tile, &mask) in masks.iter().enumerate() {
        let mut bits = mask;
        while bits != 0 {
            let slot = bits.trailing_zeros();
            active.push((tile * slots) as u32 + slot);
            bits &= bits - 1;
        }
    }
    active
}

/// The Basic pipeline: full-palette per-tile color presence.
#[derive(Debug, Clone)]
pub struct BasicFeatures {
    bg: BackgroundModel,
}

impl BasicFeatures {
    pub fn new(bg: BackgroundModel) -> BasicFeatures {
        BasicFeatures { bg }
    }
}

impl FeatureGenerator for BasicFeatures {
    fn dim(&self) -> u32 {
        BASIC_DIM
    }

    fn generate(&mut self, screen: &Screen, _ram: &RamState) -> SparseFeatures {
        SparseFeatures::from_sorted(BASIC_DIM, tile_presence(screen, &self.bg, NUM_COLORS, |c| c))
    }
}

/// The BASS base layer alone (coarse-palette tile presence), exposed
/// for oracles that cross-check the pairwise layer.
pub fn bass_base_features(screen: &Screen, bg: &BackgroundModel) -> Vec<u32> {
    tile_presence(screen, bg, 8, secam_color)
}

/// The BASS pipeline: coarse-palette base layer plus all pairwise ANDs.
#[derive(Debug, Clone)]
pub struct BassFeatures {
    bg: BackgroundModel,
}

impl BassFeatures {
    pub fn new(bg: BackgroundModel) -> BassFeatures {
        BassFeatures { bg }
    }
}

impl FeatureGenerator for BassFeatures {
    fn dim(&self) -> u32 {
        BASS_DIM
    }

    fn generate(&mut self, screen: &Screen, _ram: &RamState) -> SparseFeatures {
        let base = bass_base_features(screen, &self.bg);
        let d = BASS_BASE_DIM as usize;
        let mut active = Vec::with_capacity(base.len() + pair_count(base.len()));
        active.extend_from_slice(&base);
        // Lexicographic pair enumeration over a sorted base set keeps
        // the output sorted.
        for (s, &i) in base.iter().enumerate() {
            for &j in &base[s + 1..] {
                active.push(BASS_BASE_DIM + pair_index(d, i as usize, j as usize) as u32);
            }
        }
        SparseFeatures::from_sorted(BASS_DIM, active)
    }
}
