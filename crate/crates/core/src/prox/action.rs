use crate::error::{check_len, Result};
use crate::grid::{DensityField, GridSpec, MomentumField};
use crate::physics::MobilityModel;

/// Averaged flux below this (relative to `1 + max|ℐm|`) at a cell with zero
/// mobility counts as zero.
pub const FLUX_FLOOR: f64 = 1e-9;

/// Discrete transport action `Σ f(M, ℐm) h^d`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActionValue {
    /// Sum over the cells where `f` is finite.
    pub value: f64,
    /// Some cell has zero mobility but nonzero averaged flux.
    pub infinite: bool,
}

impl ActionValue {
    pub fn as_f64(&self) -> f64 {
        if self.infinite {
            f64::INFINITY
        } else {
            self.value
        }
    }
}

pub fn action_value(
    rho: &DensityField,
    rho_prev: &DensityField,
    m: &MomentumField,
    mob: &MobilityModel,
    grid: &GridSpec,
) -> Result<ActionValue> {
    let n = grid.num_cells();
    check_len("density", n, rho.len())?;
    check_len("previous density", n, rho_prev.len())?;
    check_len("momentum", grid.num_faces(), m.len())?;
    let mut avg = vec![0.0; grid.dim() * n];
    grid.avg_into(m, &mut avg);
    let sq: Vec<f64> = (0..n)
        .map(|i| (0..grid.dim()).map(|q| avg[q * n + i].powi(2)).sum())
        .collect();
    // flux left over by the inexact projection is not transport
    let floor = (FLUX_FLOOR * (1.0 + sq.iter().cloned().fold(0.0, f64::max).sqrt())).powi(2);
    let mut value = 0.0;
    let mut infinite = false;
    for i in 0..n {
        let (mv, _) = mob.effective(rho[i], rho_prev[i]);
        if mv > 0.0 {
            value += sq[i] / (2.0 * mv);
        } else if sq[i] > floor {
            infinite = true;
        }
    }
    Ok(ActionValue {
        value: value * grid.cell_volume(),
        infinite,
    })
}
