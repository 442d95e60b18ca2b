//! Object-class discovery and the DISCO feature pipeline.
//!
//! Discovery scans a stream of sample screens, groups foreground blobs
//! by exact shape, filters shapes that are rare (< 20% of screens) or
//! that never leave a single tile, merges near-identical shapes, and
//! keeps the ten most frequent as the game's object classes.
//!
//! At feature time each screen's blobs are classified against those
//! prototypes; instance positions are tile-coded per class, and every
//! class pair gets tile-coded relative position and relative velocity
//! (velocities come from matching instances to the previous frame).
//! Multiple instances union their tiles.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::codec::{ByteReader, ByteWriter, CodecError};
use crate::env::{RamState, Screen, SCREEN_HEIGHT, SCREEN_WIDTH};
use crate::features::basic::{TILE_H, TILE_W};
use crate::features::blobs::{extract_blobs, Blob};
use crate::features::pairs::{pair_count, pair_index};
use crate::features::tiles::TileCoder;
use crate::features::{BackgroundModel, FeatureGenerator, SparseFeatures};

const MAGIC: u32 = u32::from_le_bytes(*b"CLS1");

/// Discovery and classification thresholds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TileCoderConfig {
    /// Stacked tilings per coded quantity.
    pub tilings: u32,
    /// Cells per tiling side.
    pub grid: u32,
    /// Instances farther than this (per axis, pixels/frame) from any
    /// previous-frame instance count as unmatched.
    pub max_velocity: i32,
    /// Minimum fraction of sample screens a class must appear in.
    pub min_frequency: f64,
    /// Aligned-mask overlap at or above which two shapes merge.
    pub merge_overlap: f64,
    /// Minimum aligned-mask overlap to classify a blob at feature time.
    pub classify_overlap: f64,
    /// Classes retained after ranking by frequency.
    pub max_classes: usize,
}

impl Default for TileCoderConfig {
    fn default() -> Self {
        TileCoderConfig {
            tilings: 8,
            grid: 8,
            max_velocity: 8,
            min_frequency: 0.2,
            merge_overlap: 0.9,
            classify_overlap: 0.5,
            max_classes: 10,
        }
    }
}

/// One discovered object class.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassShape {
    pub w: u16,
    pub h: u16,
    /// Prototype mask, bit `dy * w + dx`, LSB-first.
    pub mask: Vec<u8>,
    pub pixels: u32,
    /// Fraction of sample screens containing the class.
    pub frequency: f64,
    /// Bounding region of all sightings: min x, min y, max x, max y
    /// (exclusive maxima).
    pub extent: [u16; 4],
}

/// Aligned-mask overlap: intersection over union with both masks
/// anchored at their bounding-box top-left corner.
fn mask_overlap(aw: u16, ah: u16, a: &[u8], a_pixels: u32, bw: u16, bh: u16, b: &[u8], b_pixels: u32) -> f64 {
    let iw = aw.min(bw) as usize;
    let ih = ah.min(bh) as usize;
    let mut inter = 0u32;
    for dy in 0..ih {
        for dx in 0..iw {
            let abit = dy * aw as usize + dx;
            let bbit = dy * bw as usize + dx;
            if a[abit / 8] & (1 << (abit % 8)) != 0 && b[bbit / 8] & (1 << (bbit % 8)) != 0 {
                inter += 1;
            }
        }
    }
    let union = a_pixels + b_pixels - inter;
    inter as f64 / union as f64
}

/// The discovered class set for a game.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassModel {
    classes: Vec<ClassShape>,
    sample_screens: u32,
}

impl ClassModel {
    pub fn new(classes: Vec<ClassShape>, sample_screens: u32) -> ClassModel {
        ClassModel { classes, sample_screens }
    }

    pub fn classes(&self) -> &[ClassShape] {
        &self.classes
    }

    pub fn n_classes(&self) -> usize {
        self.classes.len()
    }

    pub fn sample_screens(&self) -> u32 {
        self.sample_screens
    }

    /// Best class for a blob by aligned-mask overlap, or `None` when
    /// nothing reaches `min_overlap`. Ties go to the lower class id.
    pub fn classify(&self, blob: &Blob, min_overlap: f64) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for (id, class) in self.classes.iter().enumerate() {
            let ov = mask_overlap(
                class.w,
                class.h,
                &class.mask,
                class.pixels,
                blob.w,
                blob.h,
                &blob.mask,
                blob.pixels,
            );
            if best.map_or(true, |(_, b)| ov > b) {
                best = Some((id, ov));
            }
        }
        best.and_then(|(id, ov)| (ov >= min_overlap).then_some(id))
    }

    pub fn encode(&self, out: &mut Vec<u8>) {
        out.put_u32(MAGIC);
        out.put_u32(self.sample_screens);
        out.put_u16(self.classes.len() as u16);
        for c in &self.classes {
            out.put_u16(c.w);
            out.put_u16(c.h);
            out.put_bytes(&c.mask);
            out.put_u32(c.pixels);
            out.put_f64(c.frequency);
            for &e in &c.extent {
                out.put_u16(e);
            }
        }
    }

    pub fn decode(bytes: &[u8]) -> Result<ClassModel, CodecError> {
        let mut r = ByteReader::new(bytes);
        if r.read_u32()? != MAGIC {
            return Err(CodecError::BadMagic);
        }
        let sample_screens = r.read_u32()?;
        let n = r.read_u16()? as usize;
        let mut classes = Vec::with_capacity(n);
        for _ in 0..n {
            let w = r.read_u16()?;
            let h = r.read_u16()?;
            let mask = r.take((w as usize * h as usize + 7) / 8)?.to_vec();
            classes.push(ClassShape {
                w,
                h,
                mask,
                pixels: r.read_u32()?,
                frequency: r.read_f64()?,
                extent: [r.read_u16()?, r.read_u16()?, r.read_u16()?, r.read_u16()?],
            });
        }
        r.finish()?;
        Ok(ClassModel { classes, sample_screens })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
struct ShapeKey {
    w: u16,
    h: u16,
    mask: Vec<u8>,
}

struct ShapeStats {
    pixels: u32,
    screens_with: u32,
    last_screen: u32,
    extent: [u16; 4],
}

/// Streaming class discovery over per-screen blob lists.
pub struct ClassDiscovery {
    shapes: BTreeMap<ShapeKey, ShapeStats>,
    screens: u32,
}

impl ClassDiscovery {
    pub fn new() -> ClassDiscovery {
        ClassDiscovery { shapes: BTreeMap::new(), screens: 0 }
    }

    pub fn screens(&self) -> u32 {
        self.screens
    }

    /// Records one sample screen's blobs.
    pub fn add_screen(&mut self, blobs: &[Blob]) {
        self.screens += 1;
        for blob in blobs {
            let key =
                ShapeKey { w: blob.w, h: blob.h, mask: blob.mask.clone() };
            let stats = self.shapes.entry(key).or_insert(ShapeStats {
                pixels: blob.pixels,
                screens_with: 0,
                last_screen: 0,
                extent: [blob.x, blob.y, blob.x + blob.w, blob.y + blob.h],
            });
            if stats.last_screen != self.screens {
                stats.last_screen = self.screens;
                stats.screens_with += 1;
            }
            stats.extent[0] = stats.extent[0].min(blob.x);
            stats.extent[1] = stats.extent[1].min(blob.y);
            stats.extent[2] = stats.extent[2].max(blob.x + blob.w);
            stats.extent[3] = stats.extent[3].max(blob.y + blob.h);
        }
    }

    /// Convenience wrapper extracting blobs first.
    pub fn add_raw_screen(&mut self, screen: &Screen, bg: &BackgroundModel) {
        let blobs = extract_blobs(screen, bg);
        self.add_screen(&blobs);
    }

    /// Filters, merges, ranks, and truncates into a [`ClassModel`].
    pub fn finish(self, cfg: &TileCoderConfig) -> ClassModel {
        struct Candidate {
            key: ShapeKey,
            pixels: u32,
            frequency: f64,
            extent: [u16; 4],
        }

        let screens = self.screens.max(1) as f64;
        // Filter: frequent enough, and seen beyond a single tile.
        let mut candidates: Vec<Candidate> = self
            .shapes
            .into_iter()
            .map(|(key, s)| Candidate {
                key,
                pixels: s.pixels,
                frequency: s.screens_with as f64 / screens,
                extent: s.extent,
            })
            .filter(|c| {
                let spans_tiles = (c.extent[2] - c.extent[0]) as usize > TILE_W
                    || (c.extent[3] - c.extent[1]) as usize > TILE_H;
                c.frequency >= cfg.min_frequency && spans_tiles
            })
            .collect();

        // Rank by frequency (shape key breaks ties deterministically).
        candidates
            .sort_by(|a, b| b.frequency.total_cmp(&a.frequency).then_with(|| a.key.cmp(&b.key)));

        // Greedy merge into the most frequent representative; a merged
        // class keeps the representative mask and sums frequencies.
        let mut reps: Vec<Candidate> = Vec::new();
        'outer: for cand in candidates {
            for rep in &mut reps {
                let ov = mask_overlap(
                    rep.key.w,
                    rep.key.h,
                    &rep.key.mask,
                    rep.pixels,
                    cand.key.w,
                    cand.key.h,
                    &cand.key.mask,
                    cand.pixels,
                );
                if ov >= cfg.merge_overlap {
                    rep.frequency += cand.frequency;
                    rep.extent[0] = rep.extent[0].min(cand.extent[0]);
                    rep.extent[1] = rep.extent[1].min(cand.extent[1]);
                    rep.extent[2] = rep.extent[2].max(cand.extent[2]);
                    rep.extent[3] = rep.extent[3].max(cand.extent[3]);
                    continue 'outer;
                }
            }
            reps.push(cand);
        }

        reps.sort_by(|a, b| b.frequency.total_cmp(&a.frequency).then_with(|| a.key.cmp(&b.key)));
        reps.truncate(cfg.max_classes);

        let classes = reps
            .into_iter()
            .map(|c| ClassShape {
                w: c.key.w,
                h: c.key.h,
                mask: c.key.mask,
                pixels: c.pixels,
                frequency: c.frequency,
                extent: c.extent,
            })
            .collect();
        ClassModel { classes, sample_screens: self.screens }
    }
}

impl Default for ClassDiscovery {
    fn default() -> Self {
        ClassDiscovery::new()
    }
}

/// A classified on-screen object with its per-frame velocity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Instance {
    pub class: u16,
    pub cx: i32,
    pub cy: i32,
    pub vx: i32,
    pub vy: i32,
}

/// Classifies blobs and derives velocities by matching each instance to
/// the nearest previous-frame instance of its class (unmatched or
/// too-distant instances get velocity zero).
pub fn detect_instances(
    screen: &Screen,
    bg: &BackgroundModel,
    model: &ClassModel,
    cfg: &TileCoderConfig,
    prev: &[Instance],
) -> Vec<Instance> {
    let mut out = Vec::new();
    for blob in extract_blobs(screen, bg) {
        let Some(class) = model.classify(&blob, cfg.classify_overlap) else { continue };
        let class = class as u16;
        let mut best: Option<(i64, i32, i32)> = None;
        for p in prev.iter().filter(|p| p.class == class) {
            let dx = blob.cx - p.cx;
            let dy = blob.cy - p.cy;
            if dx.abs().max(dy.abs()) > cfg.max_velocity {
                continue;
            }
            let d2 = (dx as i64) * (dx as i64) + (dy as i64) * (dy as i64);
            if best.map_or(true, |(b, _, _)| d2 < b) {
                best = Some((d2, dx, dy));
            }
        }
        let (vx, vy) = best.map_or((0, 0), |(_, dx, dy)| (dx, dy));
        out.push(Instance { class, cx: blob.cx, cy: blob.cy, vx, vy });
    }
    out
}

/// The DISCO pipeline: tile-coded class positions plus pairwise
/// relative position and velocity.
#[derive(Debug, Clone)]
pub struct DiscoFeatures {
    bg: BackgroundModel,
    model: ClassModel,
    cfg: TileCoderConfig,
    coder: TileCoder,
    prev: Vec<Instance>,
}

impl DiscoFeatures {
    pub fn new(bg: BackgroundModel, model: ClassModel, cfg: TileCoderConfig) -> DiscoFeatures {
        let coder = TileCoder::new(cfg.tilings, cfg.grid);
        DiscoFeatures { bg, model, cfg, coder, prev: Vec::new() }
    }

    /// Dimension for `n` classes under `cfg`: one tile block per class
    /// plus two (relative position, relative velocity) per class pair.
    pub fn dim_for(n: usize, cfg: &TileCoderConfig) -> u32 {
        let block = cfg.tilings * cfg.grid * cfg.grid;
        (n as u32) * block + (pair_count(n) as u32) * 2 * block
    }

    /// The instances detected on the previous frame (for inspection).
    pub fn last_instances(&self) -> &[Instance] {
        &self.prev
    }
}

impl FeatureGenerator for DiscoFeatures {
    fn dim(&self) -> u32 {
        DiscoFeatures::dim_for(self.model.n_classes(), &self.cfg)
    }

    fn generate(&mut self, screen: &Screen, _ram: &RamState) -> SparseFeatures {
        let instances = detect_instances(screen, &self.bg, &self.model, &self.cfg, &self.prev);
        let block = self.coder.total_cells();
        let n = self.model.n_classes();
        let pair_base = n as u32 * block;
        let vmax = 2.0 * self.cfg.max_velocity as f64;

        let mut scratch = Vec::new();
        let mut active = Vec::new();
        // Absolute positions, one block per class.
        for inst in &instances {
            scratch.clear();
            self.coder.encode(
                inst.cx as f64 / SCREEN_WIDTH as f64,
                inst.cy as f64 / SCREEN_HEIGHT as f64,
                &mut scratch,
            );
            active.extend(scratch.iter().map(|&t| inst.class as u32 * block + t));
        }
        // Relative position and velocity per class pair.
        for a in &instances {
            for b in &instances {
                if a.class >= b.class {
                    continue;
                }
                let pair = pair_index(n, a.class as usize, b.class as usize) as u32;
                let base = pair_base + pair * 2 * block;
                scratch.clear();
                self.coder.encode(
                    (a.cx - b.cx + SCREEN_WIDTH as i32) as f64 / (2 * SCREEN_WIDTH) as f64,
                    (a.cy - b.cy + SCREEN_HEIGHT as i32) as f64 / (2 * SCREEN_HEIGHT) as f64,
                    &mut scratch,
                );
                active.extend(scratch.iter().map(|&t| base + t));
                scratch.clear();
                self.coder.encode(
                    ((a.vx - b.vx) as f64 + vmax) / (2.0 * vmax),
                    ((a.vy - b.vy) as f64 + vmax) / (2.0 * vmax),
                    &mut scratch,
                );
                active.extend(scratch.iter().map(|&t| base + block + t));
            }
        }
        self.prev = instances;
        SparseFeatures::new(self.dim(), active)
    }

    fn begin_episode(&mut self) {
        self.prev.clear();
    }
}
