//! Anisotropic surface-energy densities `γ(p)` of the unit normal `p`.

/// Regularization of the unit normal, `p = g / (|g|² + δ²)^{1/2}`.
pub const NORMAL_REGULARIZATION: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Anisotropy {
    /// `1 + α(4p₁⁴ + 4p₂⁴ − 3)`
    FourFold { alpha: f64 },
    /// `1 + α(8(8p₁⁸ − 10p₁⁶ + p₁⁴) + 8(8p₂⁸ − 10p₂⁶ + p₂⁴) + 9)`
    EightFold { alpha: f64 },
    /// `1 + α cos(ωθ)` with `tan θ = p₁/p₂`
    Angular { alpha: f64, omega: f64 },
}

impl Anisotropy {
    /// `γ(p)` and `∇_p γ(p)`.
    pub fn eval(&self, p: [f64; 2]) -> (f64, [f64; 2]) {
        match *self {
            Anisotropy::FourFold { alpha } => {
                let g = 1.0 + alpha * (4.0 * p[0].powi(4) + 4.0 * p[1].powi(4) - 3.0);
                (g, [16.0 * alpha * p[0].powi(3), 16.0 * alpha * p[1].powi(3)])
            }
            Anisotropy::EightFold { alpha } => {
                let f = |x: f64| 8.0 * x.powi(8) - 10.0 * x.powi(6) + x.powi(4);
                let df = |x: f64| 64.0 * x.powi(7) - 60.0 * x.powi(5) + 4.0 * x.powi(3);
                let g = 1.0 + alpha * (8.0 * f(p[0]) + 8.0 * f(p[1]) + 9.0);
                (g, [8.0 * alpha * df(p[0]), 8.0 * alpha * df(p[1])])
            }
            Anisotropy::Angular { alpha, omega } => {
                let theta = p[0].atan2(p[1]);
                let g = 1.0 + alpha * (omega * theta).cos();
                let r2 = p[0] * p[0] + p[1] * p[1];
                if r2 < 1e-300 {
                    return (g, [0.0, 0.0]);
                }
                let s = -alpha * omega * (omega * theta).sin();
                (g, [s * p[1] / r2, -s * p[0] / r2])
            }
        }
    }

    /// `G(g) = γ(p(g))² |g|²` and `∇_g G`, with the regularized normal.
    pub fn weighted_square(&self, g: [f64; 2]) -> (f64, [f64; 2]) {
        let d2 = NORMAL_REGULARIZATION * NORMAL_REGULARIZATION;
        let g2 = g[0] * g[0] + g[1] * g[1];
        let r = (g2 + d2).sqrt();
        let p = [g[0] / r, g[1] / r];
        let (gamma, dgamma) = self.eval(p);
        // ∂p/∂g = I/r − g gᵀ/r³
        let gd = g[0] * dgamma[0] + g[1] * dgamma[1];
        let jt = [
            dgamma[0] / r - g[0] * gd / (r * r * r),
            dgamma[1] / r - g[1] * gd / (r * r * r),
        ];
        let value = gamma * gamma * g2;
        let grad = [
            2.0 * gamma * gamma * g[0] + 2.0 * gamma * g2 * jt[0],
            2.0 * gamma * gamma * g[1] + 2.0 * gamma * g2 * jt[1],
        ];
        (value, grad)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const ALL: [Anisotropy; 3] = [
        Anisotropy::FourFold { alpha: 0.2 },
        Anisotropy::EightFold { alpha: 0.2 },
        Anisotropy::Angular {
            alpha: 0.4,
            omega: 6.0,
        },
    ];

    #[test]
    fn isotropic_limit() {
        for a in [
            Anisotropy::FourFold { alpha: 0.0 },
            Anisotropy::Angular {
                alpha: 0.0,
                omega: 3.0,
            },
        ] {
            let (v, gr) = a.weighted_square([0.3, -0.4]);
            assert!((v - 0.25).abs() < 1e-12);
            assert!((gr[0] - 0.6).abs() < 1e-9 && (gr[1] + 0.8).abs() < 1e-9);
        }
    }

    #[test]
    fn normal_gradient_matches_finite_differences() {
        for a in ALL {
            let p = [0.6, 0.8];
            let (_, dg) = a.eval(p);
            for k in 0..2 {
                let mut pp = p;
                let mut pm = p;
                pp[k] += 1e-6;
                pm[k] -= 1e-6;
                let fd = (a.eval(pp).0 - a.eval(pm).0) / 2e-6;
                assert!((fd - dg[k]).abs() < 1e-6, "{a:?} {k}");
            }
        }
    }

    #[test]
    fn weighted_square_gradient_matches_finite_differences() {
        for a in ALL {
            for g in [[0.3, -1.2], [2.0, 0.5], [-0.01, -0.03]] {
                let (_, grad) = a.weighted_square(g);
                for k in 0..2 {
                    let eps = 1e-7;
                    let mut gp = g;
                    let mut gm = g;
                    gp[k] += eps;
                    gm[k] -= eps;
                    let fd = (a.weighted_square(gp).0 - a.weighted_square(gm).0) / (2.0 * eps);
                    assert!((fd - grad[k]).abs() < 1e-6 * (1.0 + fd.abs()), "{a:?} {g:?} {k}");
                }
            }
        }
    }

    #[test]
    fn zero_gradient_is_regular() {
        for a in ALL {
            let (v, g) = a.weighted_square([0.0, 0.0]);
            assert_eq!(v, 0.0);
            assert!(g.iter().all(|x| x.is_finite() && x.abs() < 1e-12));
        }
    }
}
