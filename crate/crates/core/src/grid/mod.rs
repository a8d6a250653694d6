//! Uniform staggered grids on a box.
//!
//! Data layout: cells are stored x-fastest, cell `(i, j)` at `i + n * j`.
//! Momenta live on interior faces only (boundary faces carry an implicit zero
//! normal flux). The x-face between cells `(i, j)` and `(i + 1, j)` is stored
//! at `i + (n - 1) * j` in the first axis block; the y-face between `(i, j)`
//! and `(i, j + 1)` is stored at `i + n * j` in the second axis block. This is
//! the ordering produced by the Kronecker construction
//! `A = [I ⊗ A₁, A₁ ⊗ I]` with x varying fastest.

mod fields;
mod ops;
pub mod spectral;

pub use fields::{CellVectorField, DensityField, MomentumField};
pub use ops::{
    apply_avg, apply_avg_adjoint, apply_div, apply_div_adjoint, solve_identity_plus_div_divt,
};

use crate::error::{Error, Result};

/// Geometry of a uniform box grid in one or two dimensions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    dim: usize,
    n: usize,
    h: f64,
    origin: [f64; 2],
}

impl GridSpec {
    pub fn new(dim: usize, n: usize, h: f64, origin: [f64; 2]) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::InvalidGrid(format!("dim must be 1 or 2, got {dim}")));
        }
        if n == 0 {
            return Err(Error::InvalidGrid("cells per axis must be positive".into()));
        }
        if !(h.is_finite() && h > 0.0) {
            return Err(Error::InvalidGrid(format!("spacing must be positive, got {h}")));
        }
        if !origin.iter().all(|x| x.is_finite()) {
            return Err(Error::InvalidGrid("origin must be finite".into()));
        }
        Ok(Self { dim, n, h, origin })
    }

    pub fn line(n: usize, h: f64, origin: f64) -> Result<Self> {
        Self::new(1, n, h, [origin, 0.0])
    }

    pub fn square(n: usize, h: f64, origin: [f64; 2]) -> Result<Self> {
        Self::new(2, n, h, origin)
    }

    /// Grid covering `[lo, hi]^dim` with spacing as close to `h` as an integer
    /// cell count allows.
    pub fn covering(dim: usize, lo: f64, hi: f64, h: f64) -> Result<Self> {
        if !(hi > lo) {
            return Err(Error::InvalidGrid(format!("empty interval [{lo}, {hi}]")));
        }
        let n = ((hi - lo) / h).round().max(1.0) as usize;
        Self::new(dim, n, (hi - lo) / n as f64, [lo, lo])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn origin(&self) -> [f64; 2] {
        self.origin
    }

    /// Side length of the domain along each axis.
    pub fn length(&self) -> f64 {
        self.h * self.n as f64
    }

    pub fn num_cells(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn faces_per_axis(&self) -> usize {
        (self.n - 1) * self.n.pow(self.dim as u32 - 1)
    }

    pub fn num_faces(&self) -> usize {
        self.dim * self.faces_per_axis()
    }

    /// `h^d`, the measure of one cell.
    pub fn cell_volume(&self) -> f64 {
        self.h.powi(self.dim as i32)
    }

    /// `|Ω|`.
    pub fn domain_volume(&self) -> f64 {
        self.length().powi(self.dim as i32)
    }

    /// Coordinates of the center of the cell with flat index `idx`.
    pub fn cell_center(&self, idx: usize) -> [f64; 2] {
        let (i, j) = (idx % self.n, idx / self.n);
        let x = self.origin[0] + (i as f64 + 0.5) * self.h;
        if self.dim == 1 {
            [x, 0.0]
        } else {
            [x, self.origin[1] + (j as f64 + 0.5) * self.h]
        }
    }

    /// Evaluates `f` at every cell center.
    pub fn sample(&self, mut f: impl FnMut([f64; 2]) -> f64) -> DensityField {
        DensityField::from_vec((0..self.num_cells()).map(|c| f(self.cell_center(c))).collect())
    }

    pub fn zeros(&self) -> DensityField {
        DensityField::zeros(self.num_cells())
    }

    pub fn zero_momentum(&self) -> MomentumField {
        MomentumField::zeros(self.dim, self.faces_per_axis())
    }

    pub fn zero_cell_vector(&self) -> CellVectorField {
        CellVectorField::zeros(self.dim, self.num_cells())
    }

    /// Same domain, different resolution.
    pub fn with_spacing(&self, h: f64) -> Result<Self> {
        let lo = self.origin[0];
        let hi = lo + self.length();
        let mut g = Self::covering(self.dim, lo, hi, h)?;
        g.origin = self.origin;
        Ok(g)
    }
}
