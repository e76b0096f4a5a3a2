//! Uniform Cartesian cell grid over an axis-aligned rectangle.
//!
//! Unknowns live at cell centers. Faces carry transmissibilities; every
//! interior face joins exactly two cells, every boundary face has one cell
//! and a unit outward normal.

use crate::error::{CoreError, Result};

/// Axis-aligned rectangle (x0, y0) -- (x1, y1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl Rect {
    pub const UNIT: Rect = Rect {
        x0: 0.0,
        y0: 0.0,
        x1: 1.0,
        y1: 1.0,
    };

    pub fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Result<Self> {
        if !(x0.is_finite() && y0.is_finite() && x1.is_finite() && y1.is_finite()) {
            return Err(CoreError::InvalidInput("rectangle corners must be finite".into()));
        }
        if x1 <= x0 || y1 <= y0 {
            return Err(CoreError::InvalidInput(format!(
                "degenerate rectangle ({x0}, {y0}) -- ({x1}, {y1})"
            )));
        }
        Ok(Rect { x0, y0, x1, y1 })
    }

    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> f64 {
        self.y1 - self.y0
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    /// Strict interior test.
    pub fn contains_strictly(&self, x: f64, y: f64) -> bool {
        x > self.x0 && x < self.x1 && y > self.y0 && y < self.y1
    }

    pub fn contains_closed(&self, x: f64, y: f64) -> bool {
        x >= self.x0 && x <= self.x1 && y >= self.y0 && y <= self.y1
    }
}

/// Uniform cell grid. Cell (i, j) covers
/// `[x0 + i hx, x0 + (i+1) hx] x [y0 + j hy, y0 + (j+1) hy]`,
/// with linear index `j * nx + i`.
///
/// Face layout:
/// * x-faces (normal along x): index `j * (nx + 1) + i`, `i` in `0..=nx`;
///   face `i` joins cells `(i-1, j)` and `(i, j)`; `i = 0` and `i = nx` are
///   boundary faces with outward normals (-1, 0) and (1, 0).
/// * y-faces (normal along y): index `j * nx + i`, `j` in `0..=ny`, analogous.
#[derive(Debug, Clone)]
pub struct Grid {
    pub nx: usize,
    pub ny: usize,
    pub hx: f64,
    pub hy: f64,
    pub domain: Rect,
}

impl Grid {
    pub fn new(domain: Rect, nx: usize, ny: usize) -> Result<Self> {
        if nx < 4 || ny < 4 {
            return Err(CoreError::InvalidInput(format!(
                "grid must have at least 4 cells per axis, got {nx} x {ny}"
            )));
        }
        Ok(Grid {
            nx,
            ny,
            hx: domain.width() / nx as f64,
            hy: domain.height() / ny as f64,
            domain,
        })
    }

    pub fn unit(n: usize) -> Self {
        Grid::new(Rect::UNIT, n, n).expect("valid unit grid")
    }

    #[inline]
    pub fn n_cells(&self) -> usize {
        self.nx * self.ny
    }

    #[inline]
    pub fn cell_area(&self) -> f64 {
        self.hx * self.hy
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < self.nx && j < self.ny);
        j * self.nx + i
    }

    #[inline]
    pub fn cell_center(&self, i: usize, j: usize) -> (f64, f64) {
        (
            self.domain.x0 + (i as f64 + 0.5) * self.hx,
            self.domain.y0 + (j as f64 + 0.5) * self.hy,
        )
    }

    /// Bounding rectangle of cell (i, j).
    pub fn cell_rect(&self, i: usize, j: usize) -> Rect {
        Rect {
            x0: self.domain.x0 + i as f64 * self.hx,
            y0: self.domain.y0 + j as f64 * self.hy,
            x1: self.domain.x0 + (i + 1) as f64 * self.hx,
            y1: self.domain.y0 + (j + 1) as f64 * self.hy,
        }
    }

    /// Cell indices (i, j) of the cell whose closed box contains the point;
    /// clamped to the grid.
    pub fn cell_of(&self, x: f64, y: f64) -> (usize, usize) {
        let i = ((x - self.domain.x0) / self.hx).floor() as isize;
        let j = ((y - self.domain.y0) / self.hy).floor() as isize;
        (
            i.clamp(0, self.nx as isize - 1) as usize,
            j.clamp(0, self.ny as isize - 1) as usize,
        )
    }

    #[inline]
    pub fn n_x_faces(&self) -> usize {
        (self.nx + 1) * self.ny
    }

    #[inline]
    pub fn n_y_faces(&self) -> usize {
        self.nx * (self.ny + 1)
    }

    #[inline]
    pub fn x_face_idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(i <= self.nx && j < self.ny);
        j * (self.nx + 1) + i
    }

    #[inline]
    pub fn y_face_idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < self.nx && j <= self.ny);
        j * self.nx + i
    }

    /// Midpoint of x-face i (i in 0..=nx) on row j.
    #[inline]
    pub fn x_face_center(&self, i: usize, j: usize) -> (f64, f64) {
        (
            self.domain.x0 + i as f64 * self.hx,
            self.domain.y0 + (j as f64 + 0.5) * self.hy,
        )
    }

    #[inline]
    pub fn y_face_center(&self, i: usize, j: usize) -> (f64, f64) {
        (
            self.domain.x0 + (i as f64 + 0.5) * self.hx,
            self.domain.y0 + j as f64 * self.hy,
        )
    }

    /// Boundary faces: midpoint and unit outward normal, in a fixed
    /// deterministic order (left, right, bottom, top).
    pub fn boundary_faces(&self) -> Vec<BoundaryFace> {
        let mut out = Vec::with_capacity(2 * (self.nx + self.ny));
        for j in 0..self.ny {
            let (x, y) = self.x_face_center(0, j);
            out.push(BoundaryFace {
                cell: self.idx(0, j),
                x,
                y,
                normal: (-1.0, 0.0),
                length: self.hy,
                dist: self.hx,
            });
        }
        for j in 0..self.ny {
            let (x, y) = self.x_face_center(self.nx, j);
            out.push(BoundaryFace {
                cell: self.idx(self.nx - 1, j),
                x,
                y,
                normal: (1.0, 0.0),
                length: self.hy,
                dist: self.hx,
            });
        }
        for i in 0..self.nx {
            let (x, y) = self.y_face_center(i, 0);
            out.push(BoundaryFace {
                cell: self.idx(i, 0),
                x,
                y,
                normal: (0.0, -1.0),
                length: self.hx,
                dist: self.hy,
            });
        }
        for i in 0..self.nx {
            let (x, y) = self.y_face_center(i, self.ny);
            out.push(BoundaryFace {
                cell: self.idx(i, self.ny - 1),
                x,
                y,
                normal: (0.0, 1.0),
                length: self.hx,
                dist: self.hy,
            });
        }
        out
    }
}

/// One boundary face: owning cell, midpoint, outward normal, face length and
/// the center-to-center distance across the face direction (full cell size;
/// the center-to-boundary distance is `dist / 2`).
#[derive(Debug, Clone, Copy)]
pub struct BoundaryFace {
    pub cell: usize,
    pub x: f64,
    pub y: f64,
    pub normal: (f64, f64),
    pub length: f64,
    pub dist: f64,
}

/// Face-indexed scalar data (one slot per x-face and per y-face, boundary
/// faces included).
#[derive(Debug, Clone)]
pub struct FaceField {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl FaceField {
    pub fn constant(grid: &Grid, value: f64) -> Self {
        FaceField {
            x: vec![value; grid.n_x_faces()],
            y: vec![value; grid.n_y_faces()],
        }
    }
}
