//! Repel-pheromone grid: deposit, evaporation/diffusion, look-ahead
//! smoothing, and the 6-bit patches exchanged in hello messages.
//!
//! Each cell holds a value in `[0, 1]`. Deposits inside an update interval
//! accumulate in a pending buffer and are folded in by [`PheromoneMap::step`]:
//!
//! ```text
//! p <- (1 - lambda) * [ (1 - psi) * p_prev + deposit + (psi / 8) * sum(8 neighbours of p_prev) ]
//! ```
//!
//! and the result is clamped to `[0, 1]`.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{CellCoord, GridSpec};

/// Highest 6-bit quantization level.
pub const MAX_LEVEL: u8 = 63;

/// Side of the square patch carried in a hello message.
pub const PATCH_SIDE: usize = 5;
pub const PATCH_CELLS: usize = PATCH_SIDE * PATCH_SIDE;
const PATCH_RADIUS: i32 = (PATCH_SIDE / 2) as i32;

/// How the grid edge is treated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryMode {
    /// Mass diffusing past the edge is lost; off-grid reads in the
    /// look-ahead stencil and patches see a fully repellent value of 1.
    #[default]
    Absorbing,
    /// Toroidal wrap. Only useful for conservation checks.
    Wrap,
}

/// Uniform 6-bit quantizer over `[0, 1]` with round-half-up. Out-of-range
/// input is clamped.
pub fn quantize(value: f64) -> u8 {
    let v = if value.is_nan() { 0.0 } else { value.clamp(0.0, 1.0) };
    (v * MAX_LEVEL as f64 + 0.5).floor() as u8
}

pub fn dequantize(level: u8) -> f64 {
    level.min(MAX_LEVEL) as f64 / MAX_LEVEL as f64
}

/// Quantized 5x5 block centred on `center`, row-major with `y` as the outer
/// index (entry `(dy + 2) * 5 + (dx + 2)`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PheromonePatch {
    pub center: CellCoord,
    pub levels: [u8; PATCH_CELLS],
}

impl PheromonePatch {
    pub fn uniform(center: CellCoord, level: u8) -> Self {
        Self {
            center,
            levels: [level.min(MAX_LEVEL); PATCH_CELLS],
        }
    }

    pub fn level(&self, dx: i32, dy: i32) -> u8 {
        self.levels[patch_slot(dx, dy)]
    }

    /// Cells covered by the patch paired with their stored level.
    pub fn cells(&self) -> impl Iterator<Item = (CellCoord, u8)> + '_ {
        (-PATCH_RADIUS..=PATCH_RADIUS).flat_map(move |dy| {
            (-PATCH_RADIUS..=PATCH_RADIUS)
                .map(move |dx| (self.center.offset(dx, dy), self.level(dx, dy)))
        })
    }
}

fn patch_slot(dx: i32, dy: i32) -> usize {
    ((dy + PATCH_RADIUS) as usize) * PATCH_SIDE + (dx + PATCH_RADIUS) as usize
}

#[derive(Debug, Clone)]
pub struct PheromoneMap {
    grid: GridSpec,
    values: Vec<f64>,
    pending: Vec<f64>,
    scratch: Vec<f64>,
    rows: Vec<f64>,
    evaporation: f64,
    diffusion: f64,
    boundary: BoundaryMode,
}

impl PheromoneMap {
    pub fn new(grid: GridSpec, evaporation: f64, diffusion: f64) -> Result<Self> {
        for (name, rate) in [("evaporation", evaporation), ("diffusion", diffusion)] {
            if !(0.0..=1.0).contains(&rate) {
                return Err(Error::config(format!("{name} rate {rate} outside [0, 1]")));
            }
        }
        if grid.width < 3 || grid.height < 3 {
            return Err(Error::config("pheromone grid must be at least 3x3"));
        }
        let n = grid.n_cells();
        Ok(Self {
            grid,
            values: vec![0.0; n],
            pending: vec![0.0; n],
            scratch: vec![0.0; n],
            rows: vec![0.0; n],
            evaporation,
            diffusion,
            boundary: BoundaryMode::Absorbing,
        })
    }

    pub fn with_boundary(mut self, boundary: BoundaryMode) -> Self {
        self.boundary = boundary;
        self
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn boundary(&self) -> BoundaryMode {
        self.boundary
    }

    pub fn value(&self, cell: CellCoord) -> Result<f64> {
        self.grid.check(cell)?;
        Ok(self.values[self.grid.index(cell)])
    }

    /// Overwrites a cell, clamping to `[0, 1]`.
    pub fn set(&mut self, cell: CellCoord, value: f64) -> Result<()> {
        self.grid.check(cell)?;
        let i = self.grid.index(cell);
        self.values[i] = value.clamp(0.0, 1.0);
        Ok(())
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }

    /// Queues a unit deposit, applied by the next [`step`](Self::step).
    pub fn deposit(&mut self, cell: CellCoord) -> Result<()> {
        self.grid.check(cell)?;
        let i = self.grid.index(cell);
        self.pending[i] += 1.0;
        Ok(())
    }

    /// Advances one update interval. All cells update simultaneously from the
    /// previous values.
    pub fn step(&mut self) {
        let w = self.grid.width;
        let h = self.grid.height;
        let keep = (1.0 - self.evaporation) * (1.0 - self.diffusion);
        let spread = (1.0 - self.evaporation) * self.diffusion / 8.0;
        let decay = 1.0 - self.evaporation;
        let wrap = self.boundary == BoundaryMode::Wrap;
        let prev = &self.values;

        // 3x3 box sums, separated into a horizontal then a vertical pass;
        // off-grid cells contribute nothing unless the map wraps
        let rows = &mut self.rows;
        for y in 0..h {
            let r = &prev[y * w..(y + 1) * w];
            let out = &mut rows[y * w..(y + 1) * w];
            for x in 1..w - 1 {
                out[x] = r[x - 1] + r[x] + r[x + 1];
            }
            let (left, right) = if wrap { (r[w - 1], r[0]) } else { (0.0, 0.0) };
            out[0] = left + r[0] + r[1];
            out[w - 1] = r[w - 2] + r[w - 1] + right;
        }
        for y in 0..h {
            let above = if y + 1 < h { Some(y + 1) } else if wrap { Some(0) } else { None };
            let below = if y > 0 { Some(y - 1) } else if wrap { Some(h - 1) } else { None };
            for x in 0..w {
                let i = y * w + x;
                let mut box_sum = rows[i];
                if let Some(a) = above {
                    box_sum += rows[a * w + x];
                }
                if let Some(b) = below {
                    box_sum += rows[b * w + x];
                }
                let next = keep * prev[i] + decay * self.pending[i] + spread * (box_sum - prev[i]);
                self.scratch[i] = next.clamp(0.0, 1.0);
            }
        }
        std::mem::swap(&mut self.values, &mut self.scratch);
        self.pending.iter_mut().for_each(|p| *p = 0.0);
    }

    /// Value read by stencils at possibly off-grid coordinates.
    fn read(&self, cell: CellCoord) -> f64 {
        if self.grid.contains(cell) {
            return self.values[self.grid.index(cell)];
        }
        match self.boundary {
            BoundaryMode::Absorbing => 1.0,
            BoundaryMode::Wrap => {
                let x = cell.x.rem_euclid(self.grid.width as i32);
                let y = cell.y.rem_euclid(self.grid.height as i32);
                self.values[self.grid.index(CellCoord::new(x, y))]
            }
        }
    }

    /// Look-ahead value: `(3 * p_cell + sum over the 3x3 block) / 12`.
    pub fn look_ahead(&self, cell: CellCoord) -> Result<f64> {
        self.grid.check(cell)?;
        let mut block = 0.0;
        for dy in -1..=1 {
            for dx in -1..=1 {
                block += self.read(cell.offset(dx, dy));
            }
        }
        let centre = self.values[self.grid.index(cell)];
        Ok(((3.0 * centre + block) / 12.0).clamp(0.0, 1.0))
    }

    pub fn extract_patch(&self, center: CellCoord) -> Result<PheromonePatch> {
        self.grid.check(center)?;
        let mut levels = [0u8; PATCH_CELLS];
        for dy in -PATCH_RADIUS..=PATCH_RADIUS {
            for dx in -PATCH_RADIUS..=PATCH_RADIUS {
                let cell = center.offset(dx, dy);
                levels[patch_slot(dx, dy)] = if self.grid.contains(cell) {
                    quantize(self.values[self.grid.index(cell)])
                } else {
                    MAX_LEVEL
                };
            }
        }
        Ok(PheromonePatch { center, levels })
    }

    /// Element-wise max of local and received values over the in-bounds part
    /// of the patch footprint.
    pub fn merge_patch(&mut self, patch: &PheromonePatch) {
        for (cell, level) in patch.cells() {
            if self.grid.contains(cell) {
                let i = self.grid.index(cell);
                let received = dequantize(level);
                if received > self.values[i] {
                    self.values[i] = received;
                }
            }
        }
    }

    /// Row-major dump; one line per grid row, six decimals per cell.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(self.values.len() * 9);
        for row in self.values.chunks(self.grid.width) {
            for (i, v) in row.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                let _ = write!(out, "{v:.6}");
            }
            out.push('\n');
        }
        out
    }
}
