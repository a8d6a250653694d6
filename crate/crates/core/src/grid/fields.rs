use std::ops::{Deref, DerefMut};

/// Cell averages, one value per volume.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DensityField(Vec<f64>);

impl DensityField {
    pub fn zeros(len: usize) -> Self {
        Self(vec![0.0; len])
    }

    pub fn constant(len: usize, value: f64) -> Self {
        Self(vec![value; len])
    }

    pub fn from_vec(values: Vec<f64>) -> Self {
        Self(values)
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn sum(&self) -> f64 {
        self.0.iter().sum()
    }

    pub fn min(&self) -> f64 {
        self.0.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.0.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }
}

impl Deref for DensityField {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl DerefMut for DensityField {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

impl From<Vec<f64>> for DensityField {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

/// Normal fluxes on interior faces, stored axis by axis.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentumField {
    dim: usize,
    per_axis: usize,
    data: Vec<f64>,
}

impl MomentumField {
    pub fn zeros(dim: usize, per_axis: usize) -> Self {
        Self {
            dim,
            per_axis,
            data: vec![0.0; dim * per_axis],
        }
    }

    /// Builds a field from the concatenated per-axis blocks.
    pub fn from_vec(dim: usize, data: Vec<f64>) -> Self {
        assert!(dim > 0 && data.len().is_multiple_of(dim), "momentum length not divisible by dim");
        Self {
            dim,
            per_axis: data.len() / dim,
            data,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn per_axis(&self) -> usize {
        self.per_axis
    }

    pub fn axis(&self, q: usize) -> &[f64] {
        &self.data[q * self.per_axis..(q + 1) * self.per_axis]
    }

    pub fn axis_mut(&mut self, q: usize) -> &mut [f64] {
        &mut self.data[q * self.per_axis..(q + 1) * self.per_axis]
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }
}

impl Deref for MomentumField {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.data
    }
}

impl DerefMut for MomentumField {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }
}

/// A `dim`-vector per cell, stored component-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CellVectorField {
    dim: usize,
    cells: usize,
    data: Vec<f64>,
}

impl CellVectorField {
    pub fn zeros(dim: usize, cells: usize) -> Self {
        Self {
            dim,
            cells,
            data: vec![0.0; dim * cells],
        }
    }

    pub fn from_vec(dim: usize, data: Vec<f64>) -> Self {
        assert!(dim > 0 && data.len().is_multiple_of(dim), "vector field length not divisible by dim");
        Self {
            dim,
            cells: data.len() / dim,
            data,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn component(&self, q: usize) -> &[f64] {
        &self.data[q * self.cells..(q + 1) * self.cells]
    }

    pub fn component_mut(&mut self, q: usize) -> &mut [f64] {
        &mut self.data[q * self.cells..(q + 1) * self.cells]
    }

    /// Squared Euclidean norm of the vector at cell `c`.
    pub fn norm_sq_at(&self, c: usize) -> f64 {
        (0..self.dim).map(|q| self.data[q * self.cells + c].powi(2)).sum()
    }
}

impl Deref for CellVectorField {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.data
    }
}

impl DerefMut for CellVectorField {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }
}
