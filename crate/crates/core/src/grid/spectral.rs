//! Fast solves for operators that are functions of the 5-point (3-point in
//! 1D) Laplacian.
//!
//! With ghost-cell mirroring the Neumann Laplacian equals `-A Aᵀ` and is
//! diagonalized by the orthogonal DCT-II; the periodic Laplacian is
//! diagonalized by the DFT. Per-axis eigenvalues of `-Δ_h` are
//! `(4/h²) sin²(πk/2n)` (Neumann) and `(4/h²) sin²(πk/n)` (periodic); in 2D
//! they add.

use std::f64::consts::PI;
use std::sync::Arc;

use rustdct::{DctPlanner, TransformType2And3};
use rustfft::{num_complex::Complex64, Fft, FftPlanner};

use super::GridSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundary {
    Neumann,
    Periodic,
}

#[derive(Clone)]
enum Plan {
    Cosine(Arc<dyn TransformType2And3<f64>>),
    Fourier {
        forward: Arc<dyn Fft<f64>>,
        inverse: Arc<dyn Fft<f64>>,
    },
}

#[derive(Clone)]
pub struct SpectralSolver {
    n: usize,
    dim: usize,
    eig: Vec<f64>,
    plan: Plan,
}

impl std::fmt::Debug for SpectralSolver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SpectralSolver")
            .field("n", &self.n)
            .field("dim", &self.dim)
            .finish_non_exhaustive()
    }
}

impl SpectralSolver {
    pub fn new(grid: &GridSpec, bc: Boundary) -> Self {
        let n = grid.n();
        let h2 = grid.h() * grid.h();
        let (eig, plan) = match bc {
            Boundary::Neumann => {
                let eig = (0..n)
                    .map(|k| 4.0 / h2 * (PI * k as f64 / (2 * n) as f64).sin().powi(2))
                    .collect();
                (eig, Plan::Cosine(DctPlanner::new().plan_dct2(n)))
            }
            Boundary::Periodic => {
                let eig = (0..n)
                    .map(|k| 4.0 / h2 * (PI * k as f64 / n as f64).sin().powi(2))
                    .collect();
                let mut planner = FftPlanner::new();
                let plan = Plan::Fourier {
                    forward: planner.plan_fft_forward(n),
                    inverse: planner.plan_fft_inverse(n),
                };
                (eig, plan)
            }
        };
        Self {
            n,
            dim: grid.dim(),
            eig,
            plan,
        }
    }

    /// Eigenvalues of `-Δ_h` along one axis.
    pub fn axis_eigenvalues(&self) -> &[f64] {
        &self.eig
    }

    /// Solves `p(-Δ_h) x = rhs` where `symbol(λ) = p(λ)` must be nonzero on
    /// the spectrum.
    pub fn solve(&self, rhs: &[f64], out: &mut [f64], symbol: impl Fn(f64) -> f64) {
        match &self.plan {
            Plan::Cosine(dct) => self.solve_cosine(dct.as_ref(), rhs, out, symbol),
            Plan::Fourier { forward, inverse } => {
                self.solve_fourier(forward.as_ref(), inverse.as_ref(), rhs, out, symbol)
            }
        }
    }

    /// Applies `p(-Δ_h)` to `x` spectrally (used by tests and for symbols
    /// without a stencil).
    pub fn apply(&self, x: &[f64], out: &mut [f64], symbol: impl Fn(f64) -> f64) {
        self.solve(x, out, |l| 1.0 / symbol(l));
    }

    fn eigenvalue(&self, idx: usize) -> f64 {
        let n = self.n;
        if self.dim == 1 {
            self.eig[idx]
        } else {
            self.eig[idx % n] + self.eig[idx / n]
        }
    }

    fn solve_cosine(
        &self,
        dct: &dyn TransformType2And3<f64>,
        rhs: &[f64],
        out: &mut [f64],
        symbol: impl Fn(f64) -> f64,
    ) {
        let n = self.n;
        out.copy_from_slice(rhs);
        let mut line = vec![0.0; n];
        let mut scratch = vec![0.0; dct.get_scratch_len()];
        let axes = self.dim;
        for_each_line(n, axes, out, &mut line, |buf| {
            dct.process_dct2_with_scratch(buf, &mut scratch)
        });
        for (idx, v) in out.iter_mut().enumerate() {
            *v /= symbol(self.eigenvalue(idx));
        }
        // DCT-III inverts the unnormalized DCT-II up to a factor n/2 per axis
        let norm = (2.0 / n as f64).powi(axes as i32);
        for_each_line(n, axes, out, &mut line, |buf| {
            dct.process_dct3_with_scratch(buf, &mut scratch)
        });
        out.iter_mut().for_each(|v| *v *= norm);
    }

    fn solve_fourier(
        &self,
        forward: &dyn Fft<f64>,
        inverse: &dyn Fft<f64>,
        rhs: &[f64],
        out: &mut [f64],
        symbol: impl Fn(f64) -> f64,
    ) {
        let n = self.n;
        let axes = self.dim;
        let mut data: Vec<Complex64> = rhs.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        let mut line = vec![Complex64::new(0.0, 0.0); n];
        for_each_line(n, axes, &mut data, &mut line, |buf| forward.process(buf));
        for (idx, v) in data.iter_mut().enumerate() {
            *v /= symbol(self.eigenvalue(idx));
        }
        for_each_line(n, axes, &mut data, &mut line, |buf| inverse.process(buf));
        let norm = (n as f64).powi(axes as i32).recip();
        for (o, v) in out.iter_mut().zip(&data) {
            *o = v.re * norm;
        }
    }
}

/// Applies a 1D in-place transform along every axis of an x-fastest array.
fn for_each_line<T: Copy>(
    n: usize,
    axes: usize,
    data: &mut [T],
    line: &mut [T],
    mut transform: impl FnMut(&mut [T]),
) {
    if axes == 1 {
        transform(data);
        return;
    }
    for row in data.chunks_mut(n) {
        transform(row);
    }
    for i in 0..n {
        for j in 0..n {
            line[j] = data[i + n * j];
        }
        transform(line);
        for j in 0..n {
            data[i + n * j] = line[j];
        }
    }
}
