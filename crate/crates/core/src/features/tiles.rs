//! Grid tile coding.
//!
//! A tile coder discretizes a point in the unit square into one cell
//! per tiling, with each tiling's grid offset by a fraction of a cell.
//! The union of cells over tilings gives coarse coding with better
//! resolution than a single grid of the same size.

use alloc::vec::Vec;

/// A stack of offset square grids over the unit square.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TileCoder {
    tilings: u32,
    grid: u32,
}

impl TileCoder {
    pub fn new(tilings: u32, grid: u32) -> TileCoder {
        assert!(tilings >= 1 && grid >= 1);
        TileCoder { tilings, grid }
    }

    /// Cells per tiling.
    pub fn cells_per_tiling(&self) -> u32 {
        self.grid * self.grid
    }

    /// Total output dimension: `tilings * grid * grid`.
    pub fn total_cells(&self) -> u32 {
        self.tilings * self.grid * self.grid
    }

    /// Appends the active cell of every tiling for the (clamped) unit
    /// point `(u, v)`. Indices are `tiling * grid^2 + row * grid + col`,
    /// strictly increasing across tilings.
    pub fn encode(&self, u: f64, v: f64, out: &mut Vec<u32>) {
        let u = u.clamp(0.0, 1.0);
        let v = v.clamp(0.0, 1.0);
        let g = self.grid as f64;
        for t in 0..self.tilings {
            // Offset each tiling by t / tilings of one cell.
            let shift = t as f64 / self.tilings as f64;
            let col = ((u * g + shift) as u32).min(self.grid - 1);
            let row = ((v * g + shift) as u32).min(self.grid - 1);
            out.push(t * self.cells_per_tiling() + row * self.grid + col);
        }
    }
}
