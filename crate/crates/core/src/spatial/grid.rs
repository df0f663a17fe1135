//! Uniform spatial hash over the unit square for fixed-radius pair search.
//!
//! Cells are at least as wide as the query range, so scanning the 3x3 cell
//! neighborhood of an agent covers every candidate within range. Expected
//! cost is O(n) per tick at simulation densities versus O(n^2) for the
//! all-pairs scan; results must be identical to that scan.

use crate::epidemic::Position;

const MAX_CELLS_PER_AXIS: usize = 1024;

#[derive(Debug)]
pub struct UniformGrid {
    cells_per_axis: usize,
    cells: Vec<Vec<u32>>,
}

impl UniformGrid {
    /// `cell_size` is the query range the grid will serve. The axis count is
    /// floor(1/cell_size) clamped to [1, 1024], which keeps cell width at or
    /// above the range (the 3x3 scan correctness condition) and bounds
    /// memory for degenerate tiny ranges.
    pub fn new(cell_size: f64) -> Self {
        assert!(cell_size > 0.0, "cell size must be positive");
        let per_axis = (1.0 / cell_size).floor().max(1.0) as usize;
        let cells_per_axis = per_axis.min(MAX_CELLS_PER_AXIS);
        Self {
            cells_per_axis,
            cells: vec![Vec::new(); cells_per_axis * cells_per_axis],
        }
    }

    fn cell_coords(&self, pos: Position) -> (usize, usize) {
        let scale = self.cells_per_axis as f64;
        let cx = ((pos.x() * scale) as usize).min(self.cells_per_axis - 1);
        let cy = ((pos.y() * scale) as usize).min(self.cells_per_axis - 1);
        (cx, cy)
    }

    /// Re-buckets the given (index, position) entries, dropping previous
    /// content but keeping bucket capacity.
    pub fn rebuild(&mut self, entries: impl Iterator<Item = (u32, Position)>) {
        for cell in &mut self.cells {
            cell.clear();
        }
        for (idx, pos) in entries {
            let (cx, cy) = self.cell_coords(pos);
            self.cells[cy * self.cells_per_axis + cx].push(idx);
        }
    }

    /// Appends every unordered index pair within `range` to `out`, sorted
    /// ascending. `positions` must be the slice the bucketed indices point
    /// into; `range` must not exceed the cell size given at construction.
    pub fn in_range_pairs(&self, positions: &[Position], range: f64, out: &mut Vec<(u32, u32)>) {
        out.clear();
        let axis = self.cells_per_axis;
        for cy in 0..axis {
            for cx in 0..axis {
                let own = &self.cells[cy * axis + cx];
                if own.is_empty() {
                    continue;
                }
                for &a in own {
                    let pa = positions[a as usize];
                    for ny in cy.saturating_sub(1)..=(cy + 1).min(axis - 1) {
                        for nx in cx.saturating_sub(1)..=(cx + 1).min(axis - 1) {
                            for &b in &self.cells[ny * axis + nx] {
                                if b > a && pa.distance(positions[b as usize]) <= range {
                                    out.push((a, b));
                                }
                            }
                        }
                    }
                }
            }
        }
        out.sort_unstable();
    }
}
