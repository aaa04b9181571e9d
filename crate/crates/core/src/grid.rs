//! Cell addressing shared by the pheromone map, waypoint geometry, the hello
//! codec and the coverage statistics.

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Integer cell coordinates. Signed so that off-grid neighbours can be
/// represented while computing stencils and candidate offsets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CellCoord {
    pub x: i32,
    pub y: i32,
}

impl CellCoord {
    pub const fn new(x: i32, y: i32) -> Self {
        Self { x, y }
    }

    pub fn offset(self, dx: i32, dy: i32) -> Self {
        Self::new(self.x + dx, self.y + dy)
    }

    pub fn chebyshev(self, other: CellCoord) -> i32 {
        (self.x - other.x).abs().max((self.y - other.y).abs())
    }
}

/// A point in the mission plane, meters.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn bearing_to(self, other: Point) -> f64 {
        (other.y - self.y).atan2(other.x - self.x)
    }
}

/// Dimensions of the square-celled mission grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub width: usize,
    pub height: usize,
    /// Edge length of one cell, meters.
    pub cell_size: f64,
}

impl GridSpec {
    pub fn new(width: usize, height: usize, cell_size: f64) -> Self {
        Self {
            width,
            height,
            cell_size,
        }
    }

    /// 60 x 60 cells of 100 m.
    pub fn standard() -> Self {
        Self::new(60, 60, 100.0)
    }

    pub fn n_cells(&self) -> usize {
        self.width * self.height
    }

    pub fn width_m(&self) -> f64 {
        self.width as f64 * self.cell_size
    }

    pub fn height_m(&self) -> f64 {
        self.height as f64 * self.cell_size
    }

    pub fn diagonal_m(&self) -> f64 {
        self.width_m().hypot(self.height_m())
    }

    pub fn contains(&self, cell: CellCoord) -> bool {
        cell.x >= 0 && cell.y >= 0 && (cell.x as usize) < self.width && (cell.y as usize) < self.height
    }

    pub fn check(&self, cell: CellCoord) -> Result<(), Error> {
        if self.contains(cell) {
            Ok(())
        } else {
            Err(Error::OutOfBounds {
                x: cell.x,
                y: cell.y,
                width: self.width,
                height: self.height,
            })
        }
    }

    /// Row-major index; caller guarantees the cell is in bounds.
    pub fn index(&self, cell: CellCoord) -> usize {
        cell.y as usize * self.width + cell.x as usize
    }

    pub fn cell_at_index(&self, index: usize) -> CellCoord {
        CellCoord::new((index % self.width) as i32, (index / self.width) as i32)
    }

    /// Cell containing a point. Points on the far border belong to the last cell.
    pub fn cell_of(&self, p: Point) -> CellCoord {
        let cx = (p.x / self.cell_size).floor() as i64;
        let cy = (p.y / self.cell_size).floor() as i64;
        CellCoord::new(
            cx.clamp(0, self.width as i64 - 1) as i32,
            cy.clamp(0, self.height as i64 - 1) as i32,
        )
    }

    pub fn center(&self, cell: CellCoord) -> Point {
        Point::new(
            (cell.x as f64 + 0.5) * self.cell_size,
            (cell.y as f64 + 0.5) * self.cell_size,
        )
    }

    pub fn clamp_point(&self, p: Point) -> Point {
        Point::new(p.x.clamp(0.0, self.width_m()), p.y.clamp(0.0, self.height_m()))
    }
}
