//! Mobility and energy models, and the problem description tying them to a grid.

pub mod anisotropy;
pub mod energy;
pub mod mobility;
pub mod stencil;

pub use anisotropy::Anisotropy;
pub use energy::{Disjoining, EnergyModel, ImplicitPart, Potential};
pub use mobility::{mobility_midpoint, MobilityKind, MobilityMode, MobilityModel};

use crate::error::{check_len, Error, Result};
use crate::grid::spectral::Boundary;
use crate::grid::{DensityField, GridSpec};

#[derive(Debug, Clone)]
pub struct GradientFlowProblem {
    pub grid: GridSpec,
    pub mobility: MobilityModel,
    pub energy: EnergyModel,
    /// Boundary handling for the energy stencils.
    pub rho_bc: Boundary,
    /// Treat [`EnergyModel::implicit_part`] through its conjugate dual.
    pub convex_split: bool,
}

impl GradientFlowProblem {
    pub fn new(
        grid: GridSpec,
        mobility: MobilityModel,
        energy: EnergyModel,
        rho_bc: Boundary,
        convex_split: bool,
    ) -> Result<Self> {
        if convex_split && energy.implicit_part().is_none() {
            return Err(Error::InvalidParameter(format!(
                "energy model {} has no convex splitting",
                energy.name()
            )));
        }
        Ok(Self {
            grid,
            mobility,
            energy,
            rho_bc,
            convex_split,
        })
    }

    pub fn bounds(&self) -> (f64, f64) {
        self.mobility.bounds()
    }

    /// The implicit part, when splitting is active.
    pub fn split(&self) -> Option<ImplicitPart> {
        if self.convex_split {
            self.energy.implicit_part()
        } else {
            None
        }
    }

    /// Checks that `rho` conforms to the grid and lies in the box.
    pub fn check_initial(&self, rho: &DensityField) -> Result<()> {
        check_len("density", self.grid.num_cells(), rho.len())?;
        let (lo, hi) = self.bounds();
        match rho.iter().position(|&r| !(lo..=hi).contains(&r)) {
            Some(i) => Err(Error::InvalidParameter(format!(
                "initial density {} at cell {i} outside box [{lo}, {hi}]",
                rho[i]
            ))),
            None => Ok(()),
        }
    }
}

/// `δÊ_h/δρ` for the configured energy.
pub fn energy_grad(rho: &DensityField, p: &GradientFlowProblem) -> Result<DensityField> {
    check_len("density", p.grid.num_cells(), rho.len())?;
    let mut out = p.grid.zeros();
    p.energy.grad_into(&p.grid, p.rho_bc, rho, &mut out)?;
    Ok(out)
}

/// `E_h(ρ)`.
pub fn energy_value(rho: &DensityField, p: &GradientFlowProblem) -> Result<f64> {
    check_len("density", p.grid.num_cells(), rho.len())?;
    p.energy.value(&p.grid, p.rho_bc, rho)
}
