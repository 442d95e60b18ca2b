//! Foreground blob extraction.
//!
//! A blob is an 8-connected component of same-colored foreground
//! pixels. Blobs carry their bounding box, a bit-packed shape mask
//! relative to the box, and an integer centroid; object-class discovery
//! and instance detection both work on these.

use alloc::vec;
use alloc::vec::Vec;

use crate::env::{Screen, SCREEN_HEIGHT, SCREEN_PIXELS, SCREEN_WIDTH};
use crate::features::BackgroundModel;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Blob {
    pub color: u8,
    /// Bounding box top-left.
    pub x: u16,
    pub y: u16,
    pub w: u16,
    pub h: u16,
    /// Shape mask, bit `dy * w + dx` set when that box cell is filled;
    /// packed LSB-first.
    pub mask: Vec<u8>,
    /// Filled cell count.
    pub pixels: u32,
    /// Integer centroid (floor of the pixel-coordinate means).
    pub cx: i32,
    pub cy: i32,
}

impl Blob {
    #[inline]
    pub fn mask_bit(&self, dx: usize, dy: usize) -> bool {
        let bit = dy * self.w as usize + dx;
        self.mask[bit / 8] & (1 << (bit % 8)) != 0
    }
}

/// Extracts all blobs in scan order of their first (topmost-leftmost)
/// pixel.
pub fn extract_blobs(screen: &Screen, bg: &BackgroundModel) -> Vec<Blob> {
    let data = screen.data();
    let mut visited = vec![false; SCREEN_PIXELS];
    let mut blobs = Vec::new();
    let mut stack: Vec<usize> = Vec::new();
    let mut cells: Vec<usize> = Vec::new();

    for start in 0..SCREEN_PIXELS {
        if visited[start] || !bg.is_foreground(start, data[start]) {
            continue;
        }
        let color = data[start];
        visited[start] = true;
        stack.push(start);
        cells.clear();
        let (mut min_x, mut min_y, mut max_x, mut max_y) =
            (SCREEN_WIDTH, SCREEN_HEIGHT, 0usize, 0usize);
        let (mut sum_x, mut sum_y) = (0u64, 0u64);

        while let Some(pixel) = stack.pop() {
            cells.push(pixel);
            let x = pixel % SCREEN_WIDTH;
            let y = pixel / SCREEN_WIDTH;
            min_x = min_x.min(x);
            min_y = min_y.min(y);
            max_x = max_x.max(x);
            max_y = max_y.max(y);
            sum_x += x as u64;
            sum_y += y as u64;

            for dy in -1i32..=1 {
                for dx in -1i32..=1 {
                    if dx == 0 && dy == 0 {
                        continue;
                    }
                    let nx = x as i32 + dx;
                    let ny = y as i32 + dy;
                    if nx < 0 || ny < 0 || nx >= SCREEN_WIDTH as i32 || ny >= SCREEN_HEIGHT as i32
                    {
                        continue;
                    }
                    let n = ny as usize * SCREEN_WIDTH + nx as usize;
                    if !visited[n] && data[n] == color && bg.is_foreground(n, color) {
                        visited[n] = true;
                        stack.push(n);
                    }
                }
            }
        }

        let w = max_x - min_x + 1;
        let h = max_y - min_y + 1;
        let mut mask = vec![0u8; (w * h + 7) / 8];
        for &pixel in &cells {
            let dx = pixel % SCREEN_WIDTH - min_x;
            let dy = pixel / SCREEN_WIDTH - min_y;
            let bit = dy * w + dx;
            mask[bit / 8] |= 1 << (bit % 8);
        }
        let n = cells.len() as u64;
        blobs.push(Blob {
            color,
            x: min_x as u16,
            y: min_y as u16,
            w: w as u16,
            h: h as u16,
            mask,
            pixels: n as u32,
            cx: (sum_x / n) as i32,
            cy: (sum_y / n) as i32,
        });
    }
    blobs
}

#[cfg(test)]
mod tests {
    use super::*;

    fn blobs_of(screen: &Screen) -> Vec<Blob> {
        extract_blobs(screen, &BackgroundModel::black())
    }

    #[test]
    fn two_disjoint_rectangles_make_two_blobs() {
        let mut s = Screen::new();
        s.fill_rect(10, 10, 4, 3, 9);
        s.fill_rect(50, 100, 6, 2, 9);
        let blobs = blobs_of(&s);
        assert_eq!(blobs.len(), 2);
        assert_eq!((blobs[0].x, blobs[0].y, blobs[0].w, blobs[0].h), (10, 10, 4, 3));
        assert_eq!(blobs[0].pixels, 12);
        assert_eq!((blobs[1].x, blobs[1].y, blobs[1].w, blobs[1].h), (50, 100, 6, 2));
    }

    #[test]
    fn diagonal_touch_joins_under_eight_connectivity() {
        let mut s = Screen::new();
        s.set(20, 20, 5);
        s.set(21, 21, 5);
        let blobs = blobs_of(&s);
        assert_eq!(blobs.len(), 1);
        assert_eq!(blobs[0].pixels, 2);
        assert_eq!((blobs[0].w, blobs[0].h), (2, 2));
        assert!(blobs[0].mask_bit(0, 0));
        assert!(!blobs[0].mask_bit(1, 0));
        assert!(!blobs[0].mask_bit(0, 1));
        assert!(blobs[0].mask_bit(1, 1));
    }

    #[test]
    fn touching_pixels_of_different_colors_stay_separate() {
        let mut s = Screen::new();
        s.set(30, 30, 5);
        s.set(31, 30, 6);
        let blobs = blobs_of(&s);
        assert_eq!(blobs.len(), 2);
        assert_eq!(blobs[0].color, 5);
        assert_eq!(blobs[1].color, 6);
    }

    #[test]
    fn centroid_is_the_floor_of_the_mean() {
        let mut s = Screen::new();
        s.fill_rect(10, 20, 5, 3, 7);
        let blobs = blobs_of(&s);
        assert_eq!((blobs[0].cx, blobs[0].cy), (12, 21));

        let mut s = Screen::new();
        s.fill_rect(10, 20, 4, 4, 7);
        let blobs = blobs_of(&s);
        // Mean 11.5 floors to 11.
        assert_eq!((blobs[0].cx, blobs[0].cy), (11, 21));
    }

    #[test]
    fn background_aware_extraction_ignores_static_pixels() {
        let mut bg_screen = Screen::new();
        bg_screen.fill_rect(0, 0, 160, 210, 3);
        let bg = BackgroundModel::from_colors(bg_screen.data().to_vec());

        let mut s = bg_screen.clone();
        s.fill_rect(40, 40, 2, 2, 9);
        let blobs = extract_blobs(&s, &bg);
        assert_eq!(blobs.len(), 1);
        assert_eq!(blobs[0].color, 9);
    }

    #[test]
    fn hollow_shape_mask_is_exact() {
        let mut s = Screen::new();
        // A 3x3 ring (hole in the middle is background).
        s.fill_rect(60, 60, 3, 3, 8);
        s.set(61, 61, 0);
        let blobs = blobs_of(&s);
        assert_eq!(blobs.len(), 1);
        assert_eq!(blobs[0].pixels, 8);
        assert!(!blobs[0].mask_bit(1, 1));
        for (dx, dy) in [(0, 0), (1, 0), (2, 0), (0, 1), (2, 1), (0, 2), (1, 2), (2, 2)] {
            assert!(blobs[0].mask_bit(dx, dy));
        }
    }
}
