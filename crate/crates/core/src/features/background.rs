//! Per-pixel background detection.
//!
//! The background model records, for every screen position, the color
//! seen most often across a stream of sample frames (ties break to the
//! lowest color). Feature pipelines treat a pixel as foreground when it
//! differs from the model.

use alloc::vec;
use alloc::vec::Vec;

use crate::codec::{ByteReader, ByteWriter, CodecError};
use crate::env::{Screen, NUM_COLORS, SCREEN_PIXELS};

const MAGIC: u32 = u32::from_le_bytes(*b"BGM1");

/// The detected per-pixel background colors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BackgroundModel {
    colors: Vec<u8>,
}

impl BackgroundModel {
    /// A model from explicit per-pixel colors (screen-sized).
    pub fn from_colors(colors: Vec<u8>) -> BackgroundModel {
        assert_eq!(colors.len(), SCREEN_PIXELS);
        BackgroundModel { colors }
    }

    /// An all-color-0 background; useful for synthetic screens.
    pub fn black() -> BackgroundModel {
        BackgroundModel { colors: vec![0; SCREEN_PIXELS] }
    }

    #[inline]
    pub fn color_at(&self, pixel: usize) -> u8 {
        self.colors[pixel]
    }

    /// True when the pixel at flat index `pixel` showing `color` is
    /// foreground.
    #[inline]
    pub fn is_foreground(&self, pixel: usize, color: u8) -> bool {
        self.colors[pixel] != color
    }

    pub fn colors(&self) -> &[u8] {
        &self.colors
    }

    pub fn encode(&self, out: &mut Vec<u8>) {
        out.put_u32(MAGIC);
        out.put_bytes(&self.colors);
    }

    pub fn decode(bytes: &[u8]) -> Result<BackgroundModel, CodecError> {
        let mut r = ByteReader::new(bytes);
        if r.read_u32()? != MAGIC {
            return Err(CodecError::BadMagic);
        }
        let colors = r.take(SCREEN_PIXELS)?.to_vec();
        r.finish()?;
        Ok(BackgroundModel { colors })
    }
}

/// Streaming mode computation over sample screens, so callers never
/// need to hold a sample set in memory.
pub struct BackgroundAccumulator {
    /// `counts[pixel * NUM_COLORS + color]`.
    counts: Vec<u32>,
    screens: u32,
}

impl BackgroundAccumulator {
    pub fn new() -> BackgroundAccumulator {
        BackgroundAccumulator { counts: vec![0; SCREEN_PIXELS * NUM_COLORS], screens: 0 }
    }

    pub fn add(&mut self, screen: &Screen) {
        for (pixel, &color) in screen.data().iter().enumerate() {
            self.counts[pixel * NUM_COLORS + color as usize] += 1;
        }
        self.screens += 1;
    }

    pub fn screens(&self) -> u32 {
        self.screens
    }

    /// The per-pixel modal color; ties break to the lowest color, and a
    /// pixel never sampled (no screens) is color 0.
    pub fn finish(self) -> BackgroundModel {
        let mut colors = Vec::with_capacity(SCREEN_PIXELS);
        for pixel in 0..SCREEN_PIXELS {
            let counts = &self.counts[pixel * NUM_COLORS..(pixel + 1) * NUM_COLORS];
            let mut best = 0usize;
            for (color, &count) in counts.iter().enumerate() {
                if count > counts[best] {
                    best = color;
                }
            }
            colors.push(best as u8);
        }
        BackgroundModel { colors }
    }
}

impl Default for BackgroundAccumulator {
    fn default() -> Self {
        BackgroundAccumulator::new()
    }
}

/// One-shot mode detection over a sample slice.
pub fn detect_background(samples: &[Screen]) -> BackgroundModel {
    let mut acc = BackgroundAccumulator::new();
    for screen in samples {
        acc.add(screen);
    }
    acc.finish()
}
