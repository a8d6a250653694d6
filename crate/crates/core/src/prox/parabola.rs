//! Projection onto `𝔎 = {(φ, ψ) : φ + ½|ψ|² ≤ 0}`.

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParabolaPoint<const D: usize> {
    pub phi: f64,
    pub psi: [f64; D],
}

impl<const D: usize> ParabolaPoint<D> {
    pub fn new(phi: f64, psi: [f64; D]) -> Self {
        Self { phi, psi }
    }

    pub fn constraint(&self) -> f64 {
        self.phi + 0.5 * self.psi.iter().map(|v| v * v).sum::<f64>()
    }

    pub fn is_feasible(&self) -> bool {
        self.constraint() <= 0.0
    }
}

const NEWTON_TOL: f64 = 1e-14;
const NEWTON_MAX: usize = 60;

/// Euclidean projection onto `𝔎`.
pub fn project_parabola<const D: usize>(p0: ParabolaPoint<D>) -> ParabolaPoint<D> {
    let psi_sq: f64 = p0.psi.iter().map(|v| v * v).sum();
    let (phi, scale) = project_scalar(p0.phi, psi_sq);
    ParabolaPoint {
        phi,
        psi: p0.psi.map(|v| v * scale),
    }
}

/// Projects `(φ₀, ψ₀)` given `|ψ₀|²`; returns `φ` and the factor
/// `1/(1+λ*)` that scales `ψ₀`.
#[inline]
pub fn project_scalar(phi0: f64, psi_sq: f64) -> (f64, f64) {
    if phi0 + 0.5 * psi_sq <= 0.0 {
        return (phi0, 1.0);
    }
    let lambda = largest_root(phi0, psi_sq);
    let scale = 1.0 / (1.0 + lambda);
    let mut phi = phi0 - lambda;
    // round-off can leave the output a hair outside the set
    let excess = phi + 0.5 * psi_sq * scale * scale;
    if excess > 0.0 {
        phi -= excess;
    }
    (phi, scale)
}

/// Largest real root of `g(λ) = (1+λ)²(φ₀−λ) + ½|ψ₀|²`, which for an
/// infeasible point lies in `(max(-1, ...), λ_init)` and where `g` is
/// decreasing to its right.
fn largest_root(phi0: f64, psi_sq: f64) -> f64 {
    let c = 0.5 * psi_sq;
    let g = |l: f64| (1.0 + l) * (1.0 + l) * (phi0 - l) + c;
    let dg = |l: f64| (1.0 + l) * (2.0 * (phi0 - l) - (1.0 + l));
    let init = phi0.max(0.0) + psi_sq.sqrt() + 1.0;
    let mut l = init;
    for _ in 0..NEWTON_MAX {
        let d = dg(l);
        if d >= 0.0 {
            break;
        }
        let step = g(l) / d;
        l -= step;
        if step.abs() <= NEWTON_TOL * (1.0 + l.abs()) {
            if g(l).abs() <= 1e-10 * (1.0 + c + phi0.abs()) {
                return l;
            }
            break;
        }
    }
    // g(-1) = c ≥ 0 and g(init) < 0 bracket the largest root
    let (mut lo, mut hi) = (-1.0 + 1e-12, init);
    if g(lo) < 0.0 {
        lo = -1.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= NEWTON_TOL * (1.0 + hi.abs()) {
            break;
        }
    }
    0.5 * (lo + hi)
}
