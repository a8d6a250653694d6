//! Projection onto `𝔇 = {(ρ, m) : ρ − ρⁿ + A m = 0, β₀ ≤ ρ ≤ β₁}` by a
//! primal-dual active set method.
//!
//! For fixed active sets the problem is an equality-constrained projection
//! with `J = [[I, A], [P_𝒜, 0]]`; its multipliers solve
//! `J Jᵀ y = J x₀ − y₀`, done by PCG with the block-Jacobi preconditioner
//! `diag((I + A Aᵀ)⁻¹, I)`.

use std::collections::hash_map::DefaultHasher;
use std::collections::HashSet;
use std::hash::{Hash, Hasher};

use crate::error::{check_len, Error, Result};
use crate::grid::spectral::{Boundary, SpectralSolver};
use crate::grid::{DensityField, GridSpec, MomentumField};
use crate::linalg::{dot, norm, pcg};

pub const PCG_TOL: f64 = 1e-11;
pub const PCG_MAX_ITER: usize = 500;
pub const ACTIVE_SET_MAX_ITER: usize = 100;
const DUAL_NEWTON_MAX_ITER: usize = 200;
const CLAMPED_RIDGE: f64 = 1e-8;

/// Active sets and multipliers carried between calls.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ActiveSetState {
    pub lower_active: Vec<usize>,
    pub upper_active: Vec<usize>,
    /// Multiplier of the continuity constraint.
    pub eta: Vec<f64>,
    /// Multiplier of the box constraint; zero off the active sets.
    pub lambda: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PrimalReport {
    pub active_set_iterations: usize,
    pub pcg_iterations: usize,
}

#[derive(Debug, Clone)]
pub struct PrimalProjector {
    grid: GridSpec,
    spectral: SpectralSolver,
    lower: f64,
    upper: f64,
}

impl PrimalProjector {
    pub fn new(grid: GridSpec, bounds: (f64, f64)) -> Result<Self> {
        let (lower, upper) = bounds;
        if !(lower < upper) {
            return Err(Error::DegenerateBox(lower, upper));
        }
        Ok(Self {
            spectral: SpectralSolver::new(&grid, Boundary::Neumann),
            grid,
            lower,
            upper,
        })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    /// Projects `(rho0, m0)` in place onto `𝔇`, updating `state`.
    pub fn project(
        &self,
        rho: &mut [f64],
        m: &mut [f64],
        rho_prev: &[f64],
        state: &mut ActiveSetState,
    ) -> Result<PrimalReport> {
        let g = &self.grid;
        let n = g.num_cells();
        check_len("density", n, rho.len())?;
        check_len("momentum", g.num_faces(), m.len())?;
        check_len("previous density", n, rho_prev.len())?;
        let mass: f64 = rho_prev.iter().sum();
        let slack = 1e-12 * mass.abs().max(1.0);
        if mass < self.lower * n as f64 - slack || mass > self.upper * n as f64 + slack {
            return Err(Error::Infeasible {
                mass: mass * g.cell_volume(),
                lower: self.lower * g.domain_volume(),
                upper: self.upper * g.domain_volume(),
            });
        }
        if state.eta.len() != n {
            state.eta = vec![0.0; n];
        }
        state.lambda.resize(n, 0.0);
        state.lower_active.retain(|&i| i < n);
        state.upper_active.retain(|&i| i < n);

        let rho0 = rho.to_vec();
        let m0 = m.to_vec();
        let mut rhs1 = vec![0.0; n];
        g.div_into(&m0, &mut rhs1);
        for i in 0..n {
            rhs1[i] += rho0[i] - rho_prev[i];
        }

        // 0: inactive, 1: lower, 2: upper
        let mut kind = vec![0u8; n];
        for &i in &state.lower_active {
            kind[i] = 1;
        }
        for &i in &state.upper_active {
            kind[i] = 2;
        }
        let mut seen = HashSet::new();
        let mut report = PrimalReport::default();
        let mut faces = vec![0.0; g.num_faces()];
        let mut y1 = state.eta.clone();
        loop {
            report.active_set_iterations += 1;
            let active: Vec<usize> = (0..n).filter(|&i| kind[i] != 0).collect();
            let k = active.len();
            let bound = |i: usize| if kind[i] == 1 { self.lower } else { self.upper };
            let mut b = Vec::with_capacity(n + k);
            b.extend_from_slice(&rhs1);
            b.extend(active.iter().map(|&i| rho0[i] - bound(i)));
            let mut y = Vec::with_capacity(n + k);
            y.extend_from_slice(&y1);
            y.extend(active.iter().map(|&i| state.lambda[i]));

            let apply = |v: &[f64], out: &mut [f64]| {
                let (v1, v2) = v.split_at(n);
                let mut f = vec![0.0; g.num_faces()];
                g.div_adjoint_into(v1, &mut f);
                let (o1, o2) = out.split_at_mut(n);
                g.div_into(&f, o1);
                for i in 0..n {
                    o1[i] += v1[i];
                }
                for (j, &i) in active.iter().enumerate() {
                    o1[i] += v2[j];
                    o2[j] = v1[i] + v2[j];
                }
            };
            let precond = |r: &[f64], z: &mut [f64]| {
                let (r1, r2) = r.split_at(n);
                let (z1, z2) = z.split_at_mut(n);
                self.spectral.solve(r1, z1, |l| 1.0 + l);
                z2.copy_from_slice(r2);
            };
            // an active set covering every cell makes J Jᵀ singular
            let stats = match pcg(apply, precond, &b, &mut y, PCG_TOL, PCG_MAX_ITER) {
                Ok(st) => st,
                Err(Error::LinearSolve { iterations, .. }) => {
                    log::debug!("active-set system not solvable; switching to damped dual Newton");
                    report.pcg_iterations += iterations;
                    rho.copy_from_slice(&rho0);
                    m.copy_from_slice(&m0);
                    state.eta.iter_mut().for_each(|e| *e = 0.0);
                    return self.dual_newton(rho, m, rho_prev, state, report, &kind, &kind);
                }
                Err(e) => return Err(e),
            };
            report.pcg_iterations += stats.iterations;

            let (ya, yb) = y.split_at(n);
            y1.copy_from_slice(ya);
            state.lambda.iter_mut().for_each(|l| *l = 0.0);
            for (j, &i) in active.iter().enumerate() {
                state.lambda[i] = yb[j];
            }
            // x = x₀ − Jᵀ y
            g.div_adjoint_into(&y1, &mut faces);
            for (mi, (m0i, fi)) in m.iter_mut().zip(m0.iter().zip(&faces)) {
                *mi = m0i - fi;
            }
            for i in 0..n {
                rho[i] = rho0[i] - y1[i] - state.lambda[i];
            }
            for &i in &active {
                rho[i] = bound(i);
            }

            let mut next = vec![0u8; n];
            for i in 0..n {
                let t = state.lambda[i] + rho[i];
                next[i] = if t - self.lower < 0.0 {
                    1
                } else if t - self.upper > 0.0 {
                    2
                } else {
                    0
                };
            }
            if next == kind {
                break;
            }
            let mut hasher = DefaultHasher::new();
            next.hash(&mut hasher);
            let key = hasher.finish();
            let repeated = !seen.insert(key);
            if repeated || report.active_set_iterations >= ACTIVE_SET_MAX_ITER {
                log::debug!(
                    "active set {} after {} iterations; switching to damped dual Newton",
                    if repeated { "cycled" } else { "did not settle" },
                    report.active_set_iterations
                );
                rho.copy_from_slice(&rho0);
                m.copy_from_slice(&m0);
                return self.dual_newton(rho, m, rho_prev, state, report, &kind, &next);
            }
            kind = next;
        }
        state.eta = y1;
        state.lower_active = (0..n).filter(|&i| kind[i] == 1).collect();
        state.upper_active = (0..n).filter(|&i| kind[i] == 2).collect();
        Ok(report)
    }

    /// Fallback when the active sets cycle: damped semismooth Newton on the
    /// concave dual `q(η)`, where `ρ(η) = clamp(ρ₀ − η)`, `m(η) = m₀ − Aᵀη`
    /// and `∇q = ρ(η) − ρⁿ + A m(η)`.
    #[allow(clippy::too_many_arguments)]
    fn dual_newton(
        &self,
        rho: &mut [f64],
        m: &mut [f64],
        rho_prev: &[f64],
        state: &mut ActiveSetState,
        mut report: PrimalReport,
        last: &[u8],
        next: &[u8],
    ) -> Result<PrimalReport> {
        let g = &self.grid;
        let n = g.num_cells();
        let rho0 = rho.to_vec();
        let mut am0 = vec![0.0; n];
        g.div_into(m, &mut am0);
        let (lo, hi) = (self.lower, self.upper);
        let mut faces = vec![0.0; g.num_faces()];
        let mut adiv = vec![0.0; n];
        // ∇q(η) = clamp(ρ₀ − η) − ρⁿ + A m₀ − AAᵀη
        let mut residual = |eta: &[f64], grad: &mut [f64]| {
            g.div_adjoint_into(eta, &mut faces);
            g.div_into(&faces, &mut adiv);
            for i in 0..n {
                let r = (rho0[i] - eta[i]).clamp(lo, hi);
                grad[i] = r - rho_prev[i] + am0[i] - adiv[i];
            }
        };
        let scale = 1.0 + norm(rho_prev) + norm(&am0);
        let tol = 1e-13 * scale;
        let kink = 1e-10 * (1.0 + lo.abs().max(hi.abs()));
        let mut eta = state.eta.clone();
        let mut grad = vec![0.0; n];
        let mut trial = vec![0.0; n];
        let mut grad_trial = vec![0.0; n];
        let mut step = vec![0.0; n];
        residual(&eta, &mut grad);
        let mut converged = false;
        for _ in 0..DUAL_NEWTON_MAX_ITER {
            report.active_set_iterations += 1;
            if norm(&grad) <= tol {
                converged = true;
                break;
            }
            // cells within round-off of a bound count as free; clamped cells
            // keep a small ridge since A Aᵀ alone is singular on constants
            let free: Vec<f64> = (0..n)
                .map(|i| {
                    let t = rho0[i] - eta[i];
                    if t > lo - kink && t < hi + kink {
                        1.0
                    } else {
                        CLAMPED_RIDGE
                    }
                })
                .collect();
            let apply = |v: &[f64], out: &mut [f64]| {
                let mut f = vec![0.0; g.num_faces()];
                g.div_adjoint_into(v, &mut f);
                g.div_into(&f, out);
                for i in 0..n {
                    out[i] += free[i] * v[i];
                }
            };
            let precond = |r: &[f64], z: &mut [f64]| self.spectral.solve(r, z, |l| 1.0 + l);
            step.fill(0.0);
            let stats = match pcg(apply, precond, &grad, &mut step, PCG_TOL, PCG_MAX_ITER) {
                Ok(st) => st.iterations,
                // a partial direction is still an ascent direction
                Err(Error::LinearSolve { iterations, .. }) => iterations,
                Err(e) => return Err(e),
            };
            report.pcg_iterations += stats;
            // Exact line search: q is concave and piecewise quadratic along
            // the ray, so its slope ∇q(η + αs)·s is non-increasing in α.
            let mut slope_at = |alpha: f64, out: &mut [f64], grad_out: &mut [f64]| {
                for i in 0..n {
                    out[i] = eta[i] + alpha * step[i];
                }
                residual(out, grad_out);
                dot(grad_out, &step)
            };
            let (mut a_lo, mut a_hi) = (0.0, 1.0);
            let mut expansions = 0;
            while slope_at(a_hi, &mut trial, &mut grad_trial) > 0.0 && expansions < 30 {
                a_lo = a_hi;
                a_hi *= 2.0;
                expansions += 1;
            }
            let mut alpha = a_hi;
            if expansions < 30 {
                for _ in 0..60 {
                    let mid = 0.5 * (a_lo + a_hi);
                    if slope_at(mid, &mut trial, &mut grad_trial) > 0.0 {
                        a_lo = mid;
                    } else {
                        a_hi = mid;
                    }
                    if a_hi - a_lo <= 1e-14 * a_hi {
                        break;
                    }
                }
                // the kinks make either end the better point
                let mut best = f64::INFINITY;
                for cand in [a_lo, a_hi] {
                    slope_at(cand, &mut trial, &mut grad_trial);
                    let r = norm(&grad_trial);
                    if cand > 0.0 && r < best {
                        best = r;
                        alpha = cand;
                    }
                }
            }
            if alpha == 0.0 {
                break;
            }
            for i in 0..n {
                eta[i] += alpha * step[i];
            }
            residual(&eta, &mut grad);
        }
        if !converged && norm(&grad) > tol {
            return Err(Error::ActiveSetCycle {
                iterations: report.active_set_iterations,
                lower: next.iter().filter(|&&k| k == 1).count(),
                upper: next.iter().filter(|&&k| k == 2).count(),
                oscillating: (0..n).filter(|&i| next[i] != last[i]).count(),
                cycling: true,
            });
        }
        g.div_adjoint_into(&eta, &mut faces);
        for (mi, f) in m.iter_mut().zip(&faces) {
            *mi -= f;
        }
        state.lower_active.clear();
        state.upper_active.clear();
        for i in 0..n {
            let t = rho0[i] - eta[i];
            rho[i] = t.clamp(lo, hi);
            state.lambda[i] = t - rho[i];
            if t <= lo {
                state.lower_active.push(i);
            } else if t >= hi {
                state.upper_active.push(i);
            }
        }
        state.eta = eta;
        Ok(report)
    }
}

/// One-shot projection returning new fields.
pub fn prox_primal(
    rho0: &DensityField,
    m0: &MomentumField,
    rho_prev: &DensityField,
    grid: &GridSpec,
    bounds: (f64, f64),
    warm: &ActiveSetState,
) -> Result<(DensityField, MomentumField, ActiveSetState)> {
    let projector = PrimalProjector::new(*grid, bounds)?;
    let mut rho = rho0.clone();
    let mut m = m0.clone();
    let mut state = warm.clone();
    projector.project(&mut rho, &mut m, rho_prev, &mut state)?;
    Ok((rho, m, state))
}
