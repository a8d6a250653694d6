//! Discrete free energies. Gradients are taken of the rescaled energy
//! `Ê_h = E_h / h^d`; values are `E_h` itself.

use super::anisotropy::Anisotropy;
use super::stencil::{central_diff, central_diff_adjoint_add, laplacian, staggered_dirichlet};
use crate::error::{Error, Result};
use crate::grid::spectral::Boundary;
use crate::grid::GridSpec;

/// External potential `V(x)` for the entropy model.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Potential {
    #[default]
    Zero,
    /// `|x|² / 2`
    Harmonic,
}

impl Potential {
    pub fn eval(self, x: [f64; 2]) -> f64 {
        match self {
            Potential::Zero => 0.0,
            Potential::Harmonic => 0.5 * (x[0] * x[0] + x[1] * x[1]),
        }
    }

    fn sample(self, grid: &GridSpec) -> Vec<f64> {
        (0..grid.num_cells())
            .map(|c| self.eval(grid.cell_center(c)))
            .collect()
    }
}

/// Intermolecular force `P(ρ)` of the thin-film model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Disjoining {
    /// `ρ⁻³ − ερ⁻⁴`
    LongShort { eps: f64 },
    /// `ρ⁻³ − ε⁶ρ⁻⁹`
    LennardJones { eps: f64 },
}

impl Disjoining {
    pub fn force(self, r: f64) -> f64 {
        match self {
            Disjoining::LongShort { eps } => r.powi(-3) - eps * r.powi(-4),
            Disjoining::LennardJones { eps } => r.powi(-3) - eps.powi(6) * r.powi(-9),
        }
    }

    pub fn force_deriv(self, r: f64) -> f64 {
        match self {
            Disjoining::LongShort { eps } => -3.0 * r.powi(-4) + 4.0 * eps * r.powi(-5),
            Disjoining::LennardJones { eps } => -3.0 * r.powi(-4) + 9.0 * eps.powi(6) * r.powi(-10),
        }
    }

    /// Antiderivative `Π` with `Π′ = P`, vanishing at infinity.
    pub fn potential(self, r: f64) -> f64 {
        match self {
            Disjoining::LongShort { eps } => -0.5 * r.powi(-2) + eps / 3.0 * r.powi(-3),
            Disjoining::LennardJones { eps } => -0.5 * r.powi(-2) + eps.powi(6) / 8.0 * r.powi(-8),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum EnergyModel {
    /// `Σ ρ²`
    Porous,
    /// `Σ ρ ln ρ − ρ + V ρ`
    Entropy { potential: Potential },
    /// `½|∇ρ|² + Π(ρ)`
    ThinFilm { disjoining: Option<Disjoining> },
    /// `¼(ρ² − 1)² + ε²/2 |∇ρ|²`
    CahnHilliard { eps: f64 },
    /// Double well plus `ε²/2 γ(p)² |∇_h ρ|²` (central differences) plus
    /// `βε²/2 (Δ_h ρ)²`.
    AnisotropicCahnHilliard {
        eps: f64,
        beta: f64,
        anisotropy: Anisotropy,
    },
    /// Potential field `(ρ(ρ² − 1) − ε²Δ_h ρ) / (1 − ρ²)²`; no energy exists.
    DoublyDegenerate { eps: f64 },
}

/// The part `𝒰` of a convex splitting that is handled through its conjugate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ImplicitPart {
    /// `Σ ρ ln ρ − ρ`, conjugate `Σ e^μ`
    Entropy,
    /// `Σ Π(ρ)`, pointwise
    Disjoining(Disjoining),
    /// `coeff/2 Σ (Δ_h ρ)²`
    Biharmonic { coeff: f64 },
    /// gradient `(ρ(ρ² − 1) − ε²Δ_h ρ) / (1 − ρ²)²`
    DoublyDegenerate { eps: f64 },
}

impl ImplicitPart {
    /// `δ𝒰/δρ` written into `out`.
    pub fn grad_into(
        &self,
        grid: &GridSpec,
        bc: Boundary,
        rho: &[f64],
        out: &mut [f64],
    ) -> Result<()> {
        match *self {
            ImplicitPart::Entropy => {
                for (i, (o, &r)) in out.iter_mut().zip(rho).enumerate() {
                    *o = log_checked(r, i, "entropy")?;
                }
            }
            ImplicitPart::Disjoining(d) => {
                for (i, (o, &r)) in out.iter_mut().zip(rho).enumerate() {
                    positive(r, i, "thin_film")?;
                    *o = d.force(r);
                }
            }
            ImplicitPart::Biharmonic { coeff } => {
                let mut lap = vec![0.0; rho.len()];
                laplacian(grid, bc, rho, &mut lap);
                laplacian(grid, bc, &lap, out);
                out.iter_mut().for_each(|v| *v *= coeff);
            }
            ImplicitPart::DoublyDegenerate { eps } => {
                laplacian(grid, bc, rho, out);
                for (i, (o, &r)) in out.iter_mut().zip(rho).enumerate() {
                    let q = (1.0 - r) * (1.0 + r);
                    if !(q > 0.0) {
                        return Err(Error::Domain {
                            model: "doubly_degenerate",
                            index: i,
                            value: r,
                        });
                    }
                    *o = (r * (r * r - 1.0) - eps * eps * *o) / (q * q);
                }
            }
        }
        Ok(())
    }
}

fn positive(r: f64, index: usize, model: &'static str) -> Result<()> {
    if r > 0.0 {
        Ok(())
    } else {
        Err(Error::Domain {
            model,
            index,
            value: r,
        })
    }
}

fn log_checked(r: f64, index: usize, model: &'static str) -> Result<f64> {
    positive(r, index, model)?;
    Ok(r.ln())
}

fn double_well(r: f64) -> f64 {
    0.25 * (r * r - 1.0).powi(2)
}

impl EnergyModel {
    pub fn name(&self) -> &'static str {
        match self {
            EnergyModel::Porous => "porous",
            EnergyModel::Entropy { .. } => "entropy",
            EnergyModel::ThinFilm { .. } => "thin_film",
            EnergyModel::CahnHilliard { .. } => "cahn_hilliard",
            EnergyModel::AnisotropicCahnHilliard { .. } => "anisotropic_cahn_hilliard",
            EnergyModel::DoublyDegenerate { .. } => "doubly_degenerate",
        }
    }

    /// The convex-splitting part `𝒰`, if the model has one.
    pub fn implicit_part(&self) -> Option<ImplicitPart> {
        match *self {
            EnergyModel::Entropy { .. } => Some(ImplicitPart::Entropy),
            EnergyModel::ThinFilm {
                disjoining: Some(d),
            } => Some(ImplicitPart::Disjoining(d)),
            EnergyModel::AnisotropicCahnHilliard { eps, beta, .. } => {
                Some(ImplicitPart::Biharmonic {
                    coeff: beta * eps * eps,
                })
            }
            EnergyModel::DoublyDegenerate { eps } => Some(ImplicitPart::DoublyDegenerate { eps }),
            _ => None,
        }
    }

    /// `δÊ_h/δρ` written into `out`.
    pub fn grad_into(
        &self,
        grid: &GridSpec,
        bc: Boundary,
        rho: &[f64],
        out: &mut [f64],
    ) -> Result<()> {
        match self.implicit_part() {
            Some(part) => {
                part.grad_into(grid, bc, rho, out)?;
                let mut v = vec![0.0; rho.len()];
                self.explicit_grad_into(grid, bc, rho, &mut v);
                out.iter_mut().zip(&v).for_each(|(o, v)| *o += v);
                Ok(())
            }
            None => {
                self.explicit_grad_into(grid, bc, rho, out);
                Ok(())
            }
        }
    }

    /// Gradient of the part that stays explicit under convex splitting
    /// (`δ𝒱/δρ`); for models without a splitting this is the full gradient.
    pub fn explicit_grad_into(&self, grid: &GridSpec, bc: Boundary, rho: &[f64], out: &mut [f64]) {
        match self {
            EnergyModel::Porous => {
                out.iter_mut().zip(rho).for_each(|(o, r)| *o = 2.0 * r);
            }
            EnergyModel::Entropy { potential } => match potential {
                Potential::Zero => out.fill(0.0),
                p => {
                    for (c, o) in out.iter_mut().enumerate() {
                        *o = p.eval(grid.cell_center(c));
                    }
                }
            },
            EnergyModel::ThinFilm { .. } => {
                laplacian(grid, bc, rho, out);
                out.iter_mut().for_each(|v| *v = -*v);
            }
            EnergyModel::CahnHilliard { eps } => {
                laplacian(grid, bc, rho, out);
                let e2 = eps * eps;
                for (o, &r) in out.iter_mut().zip(rho) {
                    *o = r * (r * r - 1.0) - e2 * *o;
                }
            }
            EnergyModel::AnisotropicCahnHilliard {
                eps, anisotropy, ..
            } => anisotropic_grad(grid, bc, *eps, anisotropy, rho, out),
            EnergyModel::DoublyDegenerate { .. } => out.fill(0.0),
        }
    }

    /// `E_h(ρ)` including the cell volume `h^d`.
    pub fn value(&self, grid: &GridSpec, bc: Boundary, rho: &[f64]) -> Result<f64> {
        let rescaled = match self {
            EnergyModel::Porous => rho.iter().map(|r| r * r).sum(),
            EnergyModel::Entropy { potential } => {
                let v = potential.sample(grid);
                let mut acc = 0.0;
                for (i, (&r, v)) in rho.iter().zip(&v).enumerate() {
                    if r < 0.0 {
                        return Err(Error::Domain {
                            model: "entropy",
                            index: i,
                            value: r,
                        });
                    }
                    let ent = if r > 0.0 { r * r.ln() } else { 0.0 };
                    acc += ent - r + v * r;
                }
                acc
            }
            EnergyModel::ThinFilm { disjoining } => {
                let mut acc = staggered_dirichlet(grid, bc, rho);
                if let Some(d) = disjoining {
                    for (i, &r) in rho.iter().enumerate() {
                        positive(r, i, "thin_film")?;
                        acc += d.potential(r);
                    }
                }
                acc
            }
            EnergyModel::CahnHilliard { eps } => ginzburg_landau(grid, bc, *eps, rho),
            EnergyModel::AnisotropicCahnHilliard {
                eps,
                beta,
                anisotropy,
            } => {
                let n = rho.len();
                let mut gx = vec![0.0; n];
                let mut gy = vec![0.0; n];
                central_diff(grid, bc, 0, rho, &mut gx);
                central_diff(grid, bc, 1, rho, &mut gy);
                let mut lap = vec![0.0; n];
                laplacian(grid, bc, rho, &mut lap);
                let e2 = eps * eps;
                (0..n)
                    .map(|c| {
                        double_well(rho[c])
                            + 0.5 * e2 * anisotropy.weighted_square([gx[c], gy[c]]).0
                            + 0.5 * beta * e2 * lap[c] * lap[c]
                    })
                    .sum()
            }
            EnergyModel::DoublyDegenerate { .. } => {
                return Err(Error::EnergyUnavailable("doubly_degenerate"))
            }
        };
        Ok(rescaled * grid.cell_volume())
    }

    /// Energy reported in diagnostics: [`Self::value`] when it exists; for the
    /// doubly degenerate model the Ginzburg–Landau energy of the same `ε`.
    pub fn diagnostic_value(&self, grid: &GridSpec, bc: Boundary, rho: &[f64]) -> Result<f64> {
        match self {
            EnergyModel::DoublyDegenerate { eps } => {
                Ok(ginzburg_landau(grid, bc, *eps, rho) * grid.cell_volume())
            }
            _ => self.value(grid, bc, rho),
        }
    }
}

fn ginzburg_landau(grid: &GridSpec, bc: Boundary, eps: f64, rho: &[f64]) -> f64 {
    let bulk: f64 = rho.iter().map(|&r| double_well(r)).sum();
    bulk + eps * eps * staggered_dirichlet(grid, bc, rho)
}

fn anisotropic_grad(
    grid: &GridSpec,
    bc: Boundary,
    eps: f64,
    anisotropy: &Anisotropy,
    rho: &[f64],
    out: &mut [f64],
) {
    let n = rho.len();
    let mut gx = vec![0.0; n];
    let mut gy = vec![0.0; n];
    central_diff(grid, bc, 0, rho, &mut gx);
    central_diff(grid, bc, 1, rho, &mut gy);
    for c in 0..n {
        let (_, a) = anisotropy.weighted_square([gx[c], gy[c]]);
        gx[c] = a[0];
        gy[c] = a[1];
    }
    out.fill(0.0);
    central_diff_adjoint_add(grid, bc, 0, &gx, out);
    central_diff_adjoint_add(grid, bc, 1, &gy, out);
    let half_e2 = 0.5 * eps * eps;
    for (o, &r) in out.iter_mut().zip(rho) {
        *o = r * (r * r - 1.0) + half_e2 * *o;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grad(m: &EnergyModel, g: &GridSpec, bc: Boundary, rho: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; rho.len()];
        m.grad_into(g, bc, rho, &mut out).unwrap();
        out
    }

    #[test]
    fn porous_gradient_and_value() {
        let g = GridSpec::line(200, 0.01, -1.0).unwrap();
        let rho = vec![0.3; 200];
        assert!(grad(&EnergyModel::Porous, &g, Boundary::Neumann, &rho)
            .iter()
            .all(|&v| v == 0.6));
        let e = EnergyModel::Porous.value(&g, Boundary::Neumann, &rho).unwrap();
        assert!((e - 2.0 * 0.09).abs() < 1e-12);
    }

    #[test]
    fn cahn_hilliard_well_minimum() {
        let g = GridSpec::square(8, 0.125, [0.0; 2]).unwrap();
        let m = EnergyModel::CahnHilliard { eps: 0.02 };
        let rho = vec![1.0; 64];
        assert_eq!(m.value(&g, Boundary::Neumann, &rho).unwrap(), 0.0);
        assert!(grad(&m, &g, Boundary::Neumann, &rho).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn dirichlet_of_constant_has_zero_gradient() {
        let g = GridSpec::line(10, 0.1, 0.0).unwrap();
        let m = EnergyModel::ThinFilm { disjoining: None };
        assert!(grad(&m, &g, Boundary::Neumann, &[0.7; 10])
            .iter()
            .all(|&v| v.abs() < 1e-12));
    }

    #[test]
    fn log_singularity_reports_index() {
        let g = GridSpec::line(3, 1.0, 0.0).unwrap();
        let m = EnergyModel::Entropy {
            potential: Potential::Zero,
        };
        let mut out = vec![0.0; 3];
        match m.grad_into(&g, Boundary::Neumann, &[0.5, 0.0, 0.2], &mut out) {
            Err(Error::Domain { index, .. }) => assert_eq!(index, 1),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn doubly_degenerate_has_no_value() {
        let g = GridSpec::square(4, 0.25, [0.0; 2]).unwrap();
        let m = EnergyModel::DoublyDegenerate { eps: 0.02 };
        assert!(matches!(
            m.value(&g, Boundary::Neumann, &[0.0; 16]),
            Err(Error::EnergyUnavailable(_))
        ));
        assert!(m.diagnostic_value(&g, Boundary::Neumann, &[0.0; 16]).is_ok());
    }

    #[test]
    fn disjoining_potential_is_antiderivative() {
        for d in [
            Disjoining::LongShort { eps: 0.1 },
            Disjoining::LennardJones { eps: 0.1 },
        ] {
            for r in [0.08, 0.3, 1.7] {
                let e = 1e-6 * r;
                let fd = (d.potential(r + e) - d.potential(r - e)) / (2.0 * e);
                assert!((fd - d.force(r)).abs() < 1e-6 * (1.0 + fd.abs()));
                let fd = (d.force(r + e) - d.force(r - e)) / (2.0 * e);
                assert!((fd - d.force_deriv(r)).abs() < 1e-6 * (1.0 + fd.abs()));
            }
        }
    }
}
