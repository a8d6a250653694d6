//! Matrix-free staggered operators: divergence `A`, face-to-cell averaging
//! `I`, their transposes, and the `(I + s·A Aᵀ)` solve.

use super::spectral::{Boundary, SpectralSolver};
use super::{CellVectorField, DensityField, GridSpec, MomentumField};
use crate::error::{check_len, Result};

impl GridSpec {
    /// Calls `f(face, lower_cell, upper_cell)` for every interior face of axis `q`.
    #[inline]
    pub(crate) fn for_each_face(&self, q: usize, mut f: impl FnMut(usize, usize, usize)) {
        let n = self.n();
        if q == 0 {
            let rows = if self.dim() == 1 { 1 } else { n };
            for j in 0..rows {
                for i in 0..n - 1 {
                    let a = i + n * j;
                    f(i + (n - 1) * j, a, a + 1);
                }
            }
        } else {
            for j in 0..n - 1 {
                for i in 0..n {
                    let a = i + n * j;
                    f(a, a, a + n);
                }
            }
        }
    }

    /// `out = A m`; `out` has one entry per cell.
    pub fn div_into(&self, m: &[f64], out: &mut [f64]) {
        let inv_h = 1.0 / self.h();
        let nf = self.faces_per_axis();
        out.fill(0.0);
        for q in 0..self.dim() {
            let mq = &m[q * nf..(q + 1) * nf];
            self.for_each_face(q, |f, a, b| {
                // flux leaves `a` through its upper face and enters `b` through its lower face
                out[a] += mq[f] * inv_h;
                out[b] -= mq[f] * inv_h;
            });
        }
    }

    /// `out = Aᵀ r`; `out` has one entry per interior face.
    pub fn div_adjoint_into(&self, r: &[f64], out: &mut [f64]) {
        let inv_h = 1.0 / self.h();
        let nf = self.faces_per_axis();
        for q in 0..self.dim() {
            let oq = &mut out[q * nf..(q + 1) * nf];
            self.for_each_face(q, |f, a, b| oq[f] = (r[a] - r[b]) * inv_h);
        }
    }

    /// `out = I m`, component-major per-cell vectors.
    pub fn avg_into(&self, m: &[f64], out: &mut [f64]) {
        let nf = self.faces_per_axis();
        let nc = self.num_cells();
        out.fill(0.0);
        for q in 0..self.dim() {
            let mq = &m[q * nf..(q + 1) * nf];
            let oq = &mut out[q * nc..(q + 1) * nc];
            self.for_each_face(q, |f, a, b| {
                oq[a] += 0.5 * mq[f];
                oq[b] += 0.5 * mq[f];
            });
        }
    }

    /// `out = Iᵀ w`.
    pub fn avg_adjoint_into(&self, w: &[f64], out: &mut [f64]) {
        let nf = self.faces_per_axis();
        let nc = self.num_cells();
        for q in 0..self.dim() {
            let wq = &w[q * nc..(q + 1) * nc];
            let oq = &mut out[q * nf..(q + 1) * nf];
            self.for_each_face(q, |f, a, b| oq[f] = 0.5 * (wq[a] + wq[b]));
        }
    }
}

fn check_momentum(m: &MomentumField, g: &GridSpec) -> Result<()> {
    check_len("momentum dimension", g.dim(), m.dim())?;
    check_len("momentum faces per axis", g.faces_per_axis(), m.per_axis())
}

/// Discrete divergence with zero flux through the domain boundary.
pub fn apply_div(m: &MomentumField, g: &GridSpec) -> Result<DensityField> {
    check_momentum(m, g)?;
    let mut out = g.zeros();
    g.div_into(m, &mut out);
    Ok(out)
}

pub fn apply_div_adjoint(r: &DensityField, g: &GridSpec) -> Result<MomentumField> {
    check_len("density", g.num_cells(), r.len())?;
    let mut out = g.zero_momentum();
    g.div_adjoint_into(r, &mut out);
    Ok(out)
}

/// Face-to-cell averaging.
pub fn apply_avg(m: &MomentumField, g: &GridSpec) -> Result<CellVectorField> {
    check_momentum(m, g)?;
    let mut out = g.zero_cell_vector();
    g.avg_into(m, &mut out);
    Ok(out)
}

pub fn apply_avg_adjoint(w: &CellVectorField, g: &GridSpec) -> Result<MomentumField> {
    check_len("cell vector dimension", g.dim(), w.dim())?;
    check_len("cell vector cells", g.num_cells(), w.cells())?;
    let mut out = g.zero_momentum();
    g.avg_adjoint_into(w, &mut out);
    Ok(out)
}

/// Solves `(I + scale·A Aᵀ) x = rhs`.
///
/// `A Aᵀ` is the negative Neumann Laplacian, diagonalized by the DCT-II. For
/// repeated solves on one grid build a [`SpectralSolver`] once instead.
pub fn solve_identity_plus_div_divt(
    rhs: &DensityField,
    g: &GridSpec,
    scale: f64,
) -> Result<DensityField> {
    check_len("density", g.num_cells(), rhs.len())?;
    if !(scale > 0.0) {
        return Err(crate::Error::InvalidParameter(format!(
            "scale must be positive, got {scale}"
        )));
    }
    let solver = SpectralSolver::new(g, Boundary::Neumann);
    let mut out = g.zeros();
    solver.solve(rhs, &mut out, |lambda| 1.0 + scale * lambda);
    Ok(out)
}
