use crate::error::{check_len, Error, Result};
use crate::grid::DensityField;

/// Closed-form mobility functions `M(ρ)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MobilityKind {
    /// `ρ`
    Linear,
    /// `ρ(1 - ρ)`
    Saturated,
    /// `ρ³`
    Cubic,
    /// `1 - ρ²`
    CahnHilliard,
    /// `(1 - ρ²)²`
    DoublyDegenerate,
}

impl MobilityKind {
    pub fn name(self) -> &'static str {
        match self {
            MobilityKind::Linear => "linear",
            MobilityKind::Saturated => "saturated",
            MobilityKind::Cubic => "cubic",
            MobilityKind::CahnHilliard => "cahn_hilliard",
            MobilityKind::DoublyDegenerate => "doubly_degenerate",
        }
    }

    pub fn eval(self, s: f64) -> f64 {
        match self {
            MobilityKind::Linear => s,
            MobilityKind::Saturated => s * (1.0 - s),
            MobilityKind::Cubic => s * s * s,
            MobilityKind::CahnHilliard => 1.0 - s * s,
            MobilityKind::DoublyDegenerate => (1.0 - s * s).powi(2),
        }
    }

    pub fn deriv(self, s: f64) -> f64 {
        match self {
            MobilityKind::Linear => 1.0,
            MobilityKind::Saturated => 1.0 - 2.0 * s,
            MobilityKind::Cubic => 3.0 * s * s,
            MobilityKind::CahnHilliard => -2.0 * s,
            MobilityKind::DoublyDegenerate => -4.0 * s * (1.0 - s * s),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MobilityMode {
    /// `M(½(ρⁿ + ρ))`
    #[default]
    Implicit,
    /// A mobility that is affine in the unknown, frozen at `ρⁿ`.
    SemiImplicit,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MobilityModel {
    kind: MobilityKind,
    mode: MobilityMode,
    lower: f64,
    upper: f64,
}

impl MobilityModel {
    pub fn new(kind: MobilityKind, mode: MobilityMode, bounds: (f64, f64)) -> Result<Self> {
        let (lower, upper) = bounds;
        if !(lower < upper) {
            return Err(Error::DegenerateBox(lower, upper));
        }
        if mode == MobilityMode::SemiImplicit
            && !matches!(
                kind,
                MobilityKind::Linear | MobilityKind::Saturated | MobilityKind::Cubic
            )
        {
            return Err(Error::SemiImplicitUnsupported(kind.name()));
        }
        Ok(Self {
            kind,
            mode,
            lower,
            upper,
        })
    }

    pub fn kind(&self) -> MobilityKind {
        self.kind
    }

    pub fn mode(&self) -> MobilityMode {
        self.mode
    }

    pub fn bounds(&self) -> (f64, f64) {
        (self.lower, self.upper)
    }

    fn clamp(&self, s: f64) -> f64 {
        s.clamp(self.lower, self.upper)
    }

    /// Effective mobility at one cell and its derivative with respect to `ρ`.
    #[inline]
    pub fn effective(&self, rho: f64, rho_prev: f64) -> (f64, f64) {
        match self.mode {
            MobilityMode::Implicit => {
                let s = self.clamp(0.5 * (rho + rho_prev));
                (self.kind.eval(s), 0.5 * self.kind.deriv(s))
            }
            MobilityMode::SemiImplicit => {
                let r = self.clamp(rho);
                let p = self.clamp(rho_prev);
                let slope = match self.kind {
                    MobilityKind::Linear => 1.0,
                    MobilityKind::Saturated => 1.0 - p,
                    MobilityKind::Cubic => p * p,
                    _ => unreachable!("rejected in MobilityModel::new"),
                };
                (slope * r, slope)
            }
        }
    }

    /// Effective derivative only (cheaper than [`Self::effective`] when the
    /// value is not needed).
    #[inline]
    pub fn effective_deriv(&self, rho: f64, rho_prev: f64) -> f64 {
        self.effective(rho, rho_prev).1
    }
}

/// Mid-point (or semi-implicit) mobility values and `∂/∂ρ` per cell.
pub fn mobility_midpoint(
    rho: &DensityField,
    rho_prev: &DensityField,
    mob: &MobilityModel,
) -> Result<(DensityField, DensityField)> {
    check_len("previous density", rho.len(), rho_prev.len())?;
    let (values, derivs) = rho
        .iter()
        .zip(rho_prev.iter())
        .map(|(&r, &p)| mob.effective(r, p))
        .unzip();
    Ok((DensityField::from_vec(values), DensityField::from_vec(derivs)))
}
