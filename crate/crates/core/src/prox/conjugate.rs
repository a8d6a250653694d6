//! Proximal map of the conjugate of the implicit energy part,
//! `argmin_μ σΔt 𝒰*(μ/Δt) + ½‖μ − μ₀‖²`.
//!
//! The entropy has a closed-form conjugate and is solved directly, cell by
//! cell. Every other part goes through Moreau's identity: solve
//! `Δt δ𝒰/δw + σw = μ₀` for `w` and return `μ₀ − σw`.

use crate::error::{check_len, Error, Result};
use crate::grid::spectral::{Boundary, SpectralSolver};
use crate::grid::{DensityField, GridSpec};
use crate::linalg::{gmres, norm};
use crate::physics::stencil::laplacian;
use crate::physics::ImplicitPart;

const POINT_MAX_ITER: usize = 200;
const NEWTON_MAX: usize = 60;
const LINE_SEARCH_MAX: usize = 40;

/// Relative tolerance on the optimality residual.
pub const CONJUGATE_TOL: f64 = 1e-10;
const POINT_TOL: f64 = 1e-15;

#[derive(Debug, Clone)]
pub struct ConjugateProx {
    part: ImplicitPart,
    grid: GridSpec,
    bc: Boundary,
    spectral: Option<SpectralSolver>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConjugateReport {
    pub newton_iterations: usize,
    pub residual: f64,
}

impl ConjugateProx {
    pub fn new(part: ImplicitPart, grid: GridSpec, bc: Boundary) -> Self {
        let spectral = match part {
            ImplicitPart::Biharmonic { .. } | ImplicitPart::DoublyDegenerate { .. } => {
                Some(SpectralSolver::new(&grid, bc))
            }
            _ => None,
        };
        Self {
            part,
            grid,
            bc,
            spectral,
        }
    }

    pub fn part(&self) -> ImplicitPart {
        self.part
    }

    /// Writes the proximal point into `mu` and the resolvent solution `w`
    /// (the primal point paired with `mu`) into `w`. `guess` seeds the
    /// iterative solves for `w`; `μ₀/σ` is used when it is absent.
    pub fn solve(
        &self,
        mu0: &[f64],
        sigma: f64,
        dt: f64,
        guess: Option<&[f64]>,
        mu: &mut [f64],
        w: &mut [f64],
    ) -> Result<ConjugateReport> {
        check_len("dual potential", self.grid.num_cells(), mu0.len())?;
        if !(sigma > 0.0 && dt > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "conjugate prox needs sigma > 0 and dt > 0, got {sigma}, {dt}"
            )));
        }
        let report = if let ImplicitPart::Entropy = self.part {
            let mut worst = (0usize, 0.0f64);
            for i in 0..mu0.len() {
                let (m, it, r) = entropy_direct(mu0[i], sigma, dt)?;
                mu[i] = m;
                w[i] = (mu0[i] - m) / sigma;
                worst = (worst.0.max(it), worst.1.max(r.abs()));
            }
            ConjugateReport {
                newton_iterations: worst.0,
                residual: worst.1,
            }
        } else {
            let report = self.solve_resolvent(mu0, sigma, dt, guess, w)?;
            for i in 0..mu0.len() {
                mu[i] = mu0[i] - sigma * w[i];
            }
            report
        };
        Ok(report)
    }

    /// Solves `Δt δ𝒰/δw + σw = μ₀` for `w`.
    pub fn solve_resolvent(
        &self,
        mu0: &[f64],
        sigma: f64,
        dt: f64,
        guess: Option<&[f64]>,
        w: &mut [f64],
    ) -> Result<ConjugateReport> {
        check_len("dual potential", self.grid.num_cells(), mu0.len())?;
        match guess {
            Some(g) => w.copy_from_slice(g),
            None => w.iter_mut().zip(mu0).for_each(|(w, m)| *w = m / sigma),
        }
        match self.part {
            ImplicitPart::Entropy => pointwise(mu0, w, |m0, x0| entropy_resolvent(m0, sigma, dt, x0)),
            ImplicitPart::Disjoining(d) => pointwise(mu0, w, |m0, x0| {
                let eps = match d {
                    crate::physics::Disjoining::LongShort { eps } => eps,
                    crate::physics::Disjoining::LennardJones { eps } => eps,
                };
                let f = |x: f64| (dt * d.force(x) + sigma * x - m0, dt * d.force_deriv(x) + sigma);
                let hi = eps.max(m0 / sigma).max(f64::MIN_POSITIVE);
                let mut lo = eps.min(hi);
                while f(lo).0 > 0.0 {
                    lo *= 0.5;
                    if lo < 1e-150 {
                        return Err(Error::NewtonDiverged {
                            iterations: 0,
                            residual: f(lo).0,
                        });
                    }
                }
                safeguarded_newton(f, lo, hi, x0, POINT_TOL * (1.0 + m0.abs()))
            }),
            ImplicitPart::Biharmonic { coeff } => {
                let spectral = self.spectral.as_ref().expect("built for biharmonic");
                spectral.solve(mu0, w, |l| dt * coeff * l * l + sigma);
                let mut r = vec![0.0; w.len()];
                self.residual(mu0, sigma, dt, w, &mut r)?;
                Ok(ConjugateReport {
                    newton_iterations: 1,
                    residual: norm(&r),
                })
            }
            ImplicitPart::DoublyDegenerate { eps } => self.doubly_degenerate(eps, mu0, sigma, dt, w),
        }
    }

    /// `Δt δ𝒰/δw + σw − μ₀`.
    pub fn residual(&self, mu0: &[f64], sigma: f64, dt: f64, w: &[f64], out: &mut [f64]) -> Result<()> {
        self.part.grad_into(&self.grid, self.bc, w, out)?;
        for i in 0..w.len() {
            out[i] = dt * out[i] + sigma * w[i] - mu0[i];
        }
        Ok(())
    }

    /// Solves the equation multiplied through by `(1 − w²)²`,
    /// `Δt(w³ − w − ε²Δ_h w) + (σw − μ₀)(1 − w²)² = 0`, for `w ∈ [−1, 1]`.
    /// The scaled form stays bounded at `±1`, where flat regions have a root
    /// on the bound itself, and its Jacobian `diag(d) − Δtε²Δ_h` is symmetric.
    fn doubly_degenerate(
        &self,
        eps: f64,
        mu0: &[f64],
        sigma: f64,
        dt: f64,
        w: &mut [f64],
    ) -> Result<ConjugateReport> {
        let n = w.len();
        w.iter_mut().for_each(|v| *v = v.clamp(-1.0, 1.0));
        let spectral = self.spectral.as_ref().expect("built for doubly degenerate");
        let e2 = eps * eps;
        let e2dt = e2 * dt;
        let (grid, bc) = (self.grid, self.bc);
        // residual and the size of its terms, for the round-off floor
        let scaled = |w: &[f64], lap: &mut [f64], out: &mut [f64]| -> f64 {
            laplacian(&grid, bc, w, lap);
            let mut scale = 0.0;
            for i in 0..n {
                let x = w[i];
                let s = (1.0 - x) * (1.0 + x);
                let a = dt * (x * (x * x - 1.0) - e2 * lap[i]);
                let b = (sigma * x - mu0[i]) * s * s;
                out[i] = a + b;
                scale += (a.abs() + b.abs()).powi(2);
            }
            scale.sqrt()
        };
        let tol = CONJUGATE_TOL * (1.0 + norm(mu0));
        let mut f = vec![0.0; n];
        let mut trial = vec![0.0; n];
        let mut f_trial = vec![0.0; n];
        let mut lap = vec![0.0; n];
        let mut diag = vec![0.0; n];
        let mut rhs = vec![0.0; n];
        let mut step = vec![0.0; n];
        let mut scale = scaled(w, &mut lap, &mut f);
        let mut fnorm = norm(&f);
        let mut iterations = 0;
        while iterations < NEWTON_MAX && fnorm > tol {
            iterations += 1;
            for i in 0..n {
                let x = w[i];
                let s = (1.0 - x) * (1.0 + x);
                diag[i] = dt * (3.0 * x * x - 1.0) + sigma * s * s - 4.0 * x * s * (sigma * x - mu0[i]);
                rhs[i] = -f[i];
            }
            let shift = diag.iter().map(|d| d.abs()).sum::<f64>() / n as f64;
            let shift = shift.max(dt * 1e-6);
            step.fill(0.0);
            let apply = |x: &[f64], out: &mut [f64]| {
                laplacian(&grid, bc, x, out);
                for i in 0..x.len() {
                    out[i] = diag[i] * x[i] - e2dt * out[i];
                }
            };
            let precond = |r: &[f64], z: &mut [f64]| spectral.solve(r, z, |l| shift + e2dt * l);
            // an inexact direction is still usable by the line search
            let _ = gmres(apply, precond, &rhs, &mut step, 1e-10, 40, 400);
            if !step.iter().all(|v| v.is_finite()) {
                break;
            }
            let mut alpha: f64 = 1.0;
            let mut accepted = false;
            for _ in 0..LINE_SEARCH_MAX {
                for i in 0..n {
                    trial[i] = (w[i] + alpha * step[i]).clamp(-1.0, 1.0);
                }
                let trial_scale = scaled(&trial, &mut lap, &mut f_trial);
                let tn = norm(&f_trial);
                if tn < (1.0 - 1e-4 * alpha) * fnorm {
                    w.copy_from_slice(&trial);
                    f.copy_from_slice(&f_trial);
                    fnorm = tn;
                    scale = trial_scale;
                    accepted = true;
                    break;
                }
                alpha *= 0.5;
            }
            if !accepted {
                break;
            }
        }
        if fnorm <= tol || fnorm <= 1e3 * f64::EPSILON * scale {
            return Ok(ConjugateReport {
                newton_iterations: iterations,
                residual: fnorm,
            });
        }
        Err(Error::NewtonDiverged {
            iterations,
            residual: fnorm,
        })
    }
}

/// Convenience wrapper for a single call.
pub fn prox_conjugate_mu(
    mu0: &DensityField,
    sigma: f64,
    dt: f64,
    part: ImplicitPart,
    grid: &GridSpec,
    bc: Boundary,
) -> Result<DensityField> {
    let prox = ConjugateProx::new(part, *grid, bc);
    let mut mu = grid.zeros();
    let mut w = grid.zeros();
    prox.solve(mu0, sigma, dt, None, &mut mu, &mut w)?;
    Ok(mu)
}

fn pointwise(
    mu0: &[f64],
    w: &mut [f64],
    mut solve: impl FnMut(f64, f64) -> Result<(f64, usize, f64)>,
) -> Result<ConjugateReport> {
    let mut iters = 0;
    let mut worst: f64 = 0.0;
    for (wi, &m0) in w.iter_mut().zip(mu0) {
        let (x, it, r) = solve(m0, *wi)?;
        *wi = x;
        iters = iters.max(it);
        worst = worst.max(r.abs());
    }
    Ok(ConjugateReport {
        newton_iterations: iters,
        residual: worst,
    })
}

/// `σ e^{μ/Δt} + μ − μ₀ = 0`, started from `μ₀`.
fn entropy_direct(mu0: f64, sigma: f64, dt: f64) -> Result<(f64, usize, f64)> {
    let f = |m: f64| {
        let e = sigma * (m / dt).exp();
        (e + m - mu0, e / dt + 1.0)
    };
    // f(μ₀) > 0, and at lo both terms are bounded by μ₀ − 1 + 1
    let lo = (mu0 - 1.0).min(dt * (1.0 / sigma).ln());
    safeguarded_newton(f, lo, mu0, mu0, POINT_TOL * (1.0 + mu0.abs()))
}

/// `Δt ln w + σw = μ₀` for `w > 0`.
fn entropy_resolvent(mu0: f64, sigma: f64, dt: f64, guess: f64) -> Result<(f64, usize, f64)> {
    let lo = (((mu0 - sigma) / dt).exp()).min(1.0);
    if lo == 0.0 {
        return Ok((0.0, 0, 0.0));
    }
    let hi = (mu0 / sigma).max(1.0);
    let f = |x: f64| (dt * x.ln() + sigma * x - mu0, dt / x + sigma);
    safeguarded_newton(f, lo, hi, guess, POINT_TOL * (1.0 + mu0.abs()))
}

/// Newton's method kept inside a sign-changing bracket `f(lo) ≤ 0 ≤ f(hi)`,
/// bisecting whenever the Newton point leaves it. Returns
/// `(x, iterations, residual)`.
fn safeguarded_newton(
    f: impl Fn(f64) -> (f64, f64),
    mut lo: f64,
    mut hi: f64,
    x0: f64,
    tol: f64,
) -> Result<(f64, usize, f64)> {
    let mut x = if x0.is_finite() && x0 > lo && x0 < hi {
        x0
    } else {
        0.5 * (lo + hi)
    };
    let mut last = f64::INFINITY;
    let mut dx_old = hi - lo;
    let mut dx = dx_old;
    for it in 0..POINT_MAX_ITER {
        let (fx, dfx) = f(x);
        last = fx;
        if fx.abs() <= tol {
            return Ok((x, it, fx));
        }
        if fx < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        if hi - lo <= 4.0 * f64::EPSILON * hi.abs().max(lo.abs()) {
            return Ok((x, it, fx));
        }
        let newton = x - fx / dfx;
        // bisect when Newton leaves the bracket or is not halving the steps
        if newton.is_finite() && newton > lo && newton < hi && 2.0 * (fx / dfx).abs() <= dx_old.abs() {
            dx_old = dx;
            dx = fx / dfx;
            x = newton;
        } else {
            dx_old = dx;
            dx = 0.5 * (hi - lo);
            x = lo + dx;
        }
    }
    Err(Error::NewtonDiverged {
        iterations: POINT_MAX_ITER,
        residual: last,
    })
}
