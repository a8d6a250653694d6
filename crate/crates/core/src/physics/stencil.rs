//! Cell-centered finite-difference stencils used by the energy models.

use crate::grid::spectral::Boundary;
use crate::grid::GridSpec;

/// Index of the neighbor of `c` one step along `axis` in direction `dir`
/// (±1). Neumann mirrors (ghost cell equals the boundary cell), periodic wraps.
#[inline]
pub fn neighbor(grid: &GridSpec, bc: Boundary, c: usize, axis: usize, dir: isize) -> usize {
    let n = grid.n();
    let (i, j) = (c % n, c / n);
    let coord = if axis == 0 { i } else { j } as isize;
    let moved = coord + dir;
    let k = if (0..n as isize).contains(&moved) {
        moved as usize
    } else {
        match bc {
            Boundary::Neumann => coord as usize,
            Boundary::Periodic => moved.rem_euclid(n as isize) as usize,
        }
    };
    if axis == 0 {
        k + n * j
    } else {
        i + n * k
    }
}

/// Centered Laplacian `Δ_h x`.
pub fn laplacian(grid: &GridSpec, bc: Boundary, x: &[f64], out: &mut [f64]) {
    let inv_h2 = 1.0 / (grid.h() * grid.h());
    for (c, o) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        for axis in 0..grid.dim() {
            acc += x[neighbor(grid, bc, c, axis, 1)] + x[neighbor(grid, bc, c, axis, -1)]
                - 2.0 * x[c];
        }
        *o = acc * inv_h2;
    }
}

/// Centered first difference `(x_{i+1} - x_{i-1}) / 2h` along `axis`.
pub fn central_diff(grid: &GridSpec, bc: Boundary, axis: usize, x: &[f64], out: &mut [f64]) {
    let s = 0.5 / grid.h();
    for (c, o) in out.iter_mut().enumerate() {
        *o = (x[neighbor(grid, bc, c, axis, 1)] - x[neighbor(grid, bc, c, axis, -1)]) * s;
    }
}

/// Transpose of [`central_diff`], accumulated into `out`.
pub fn central_diff_adjoint_add(
    grid: &GridSpec,
    bc: Boundary,
    axis: usize,
    v: &[f64],
    out: &mut [f64],
) {
    let s = 0.5 / grid.h();
    for (c, &vc) in v.iter().enumerate() {
        out[neighbor(grid, bc, c, axis, 1)] += vc * s;
        out[neighbor(grid, bc, c, axis, -1)] -= vc * s;
    }
}

/// `½ Σ_faces ((x_b - x_a)/h)²` over the faces used by [`laplacian`]
/// (interior faces for Neumann, interior plus wrap-around for periodic).
/// Its gradient is `-Δ_h x`.
pub fn staggered_dirichlet(grid: &GridSpec, bc: Boundary, x: &[f64]) -> f64 {
    let inv_h2 = 1.0 / (grid.h() * grid.h());
    let mut acc = 0.0;
    for c in 0..x.len() {
        for axis in 0..grid.dim() {
            let nb = neighbor(grid, bc, c, axis, 1);
            // the mirrored ghost contributes nothing; on a periodic grid the
            // wrap face is counted once, from its lower cell
            acc += (x[nb] - x[c]).powi(2);
        }
    }
    0.5 * acc * inv_h2
}
