//! Ready-to-run model configurations with their initial conditions.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::grid::spectral::Boundary;
use crate::grid::{DensityField, GridSpec};
use crate::jko::TimeLoopSpec;
use crate::pdfb::SolverConfig;
use crate::physics::{
    Anisotropy, Disjoining, EnergyModel, GradientFlowProblem, MobilityKind, MobilityMode,
    MobilityModel, Potential,
};

/// Stand-in for an infinite upper bound; the projection needs a finite box.
pub const UNBOUNDED_UPPER: f64 = 1e6;

pub const BARENBLATT_T0: f64 = 1e-3;

/// Seed for the random Cahn–Hilliard initial state.
pub const DEFAULT_SEED: u64 = 20_240_601;

/// Porous-medium Barenblatt profile with `m = 2`:
/// `(t+t₀)^{-1/3} ((3/16)^{1/3} − (t+t₀)^{-2/3} x²/12)₊`.
pub fn barenblatt(x: f64, t: f64) -> f64 {
    let s = t + BARENBLATT_T0;
    let v = (3.0f64 / 16.0).cbrt() - s.powf(-2.0 / 3.0) * x * x / 12.0;
    s.powf(-1.0 / 3.0) * v.max(0.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialCondition {
    /// [`barenblatt`] at `t = 0`.
    Barenblatt,
    Constant(f64),
    /// `0.8 − cos(πx) + 0.25 cos(2πx)`
    CosineFilm,
    /// `(1 − ε)(π/2) cos(πx/2) + ε`
    CosineCap { eps: f64 },
    /// Independent uniform values on `[−amplitude, amplitude]`.
    Uniform { amplitude: f64 },
    /// `−tanh((|x| − radius)/width)`
    TanhDisk { radius: f64, width: f64 },
    /// Two disks centred at `(−0.25, 0)` and `(0.2, 0)` with radii 0.15 and
    /// 0.1, joined by `tanh` profiles of the given width: `+1` inside, `−1`
    /// outside.
    TwoDisks { width: f64 },
}

impl InitialCondition {
    pub fn sample(&self, grid: &GridSpec, seed: u64) -> DensityField {
        match *self {
            InitialCondition::Barenblatt => grid.sample(|x| barenblatt(x[0], 0.0)),
            InitialCondition::Constant(v) => grid.sample(|_| v),
            InitialCondition::CosineFilm => {
                use std::f64::consts::PI;
                grid.sample(|x| 0.8 - (PI * x[0]).cos() + 0.25 * (2.0 * PI * x[0]).cos())
            }
            InitialCondition::CosineCap { eps } => {
                use std::f64::consts::FRAC_PI_2;
                grid.sample(|x| (1.0 - eps) * FRAC_PI_2 * (FRAC_PI_2 * x[0]).cos() + eps)
            }
            InitialCondition::Uniform { amplitude } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                grid.sample(|_| rng.gen_range(-amplitude..amplitude))
            }
            InitialCondition::TanhDisk { radius, width } => {
                grid.sample(|x| -((x[0].hypot(x[1]) - radius) / width).tanh())
            }
            InitialCondition::TwoDisks { width } => grid.sample(|x| {
                let disks = [([-0.25, 0.0], 0.15), ([0.2, 0.0], 0.1)];
                disks
                    .iter()
                    .map(|(c, r)| {
                        let d = (x[0] - c[0]).hypot(x[1] - c[1]);
                        ((r - d) / width).tanh()
                    })
                    .fold(-1.0, f64::max)
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Preset {
    pub name: String,
    pub dim: usize,
    /// `Ω = [lower, upper]^dim`
    pub domain: (f64, f64),
    pub h: f64,
    pub mobility: MobilityKind,
    pub mobility_mode: MobilityMode,
    pub bounds: (f64, f64),
    pub energy: EnergyModel,
    pub boundary: Boundary,
    pub convex_split: bool,
    pub initial: InitialCondition,
    pub seed: u64,
    pub time: TimeLoopSpec,
    pub solver: SolverConfig,
}

impl Preset {
    pub fn grid(&self) -> Result<GridSpec> {
        GridSpec::covering(self.dim, self.domain.0, self.domain.1, self.h)
    }

    pub fn problem(&self) -> Result<GradientFlowProblem> {
        let mob = MobilityModel::new(self.mobility, self.mobility_mode, self.bounds)?;
        GradientFlowProblem::new(
            self.grid()?,
            mob,
            self.energy.clone(),
            self.boundary,
            self.convex_split,
        )
    }

    pub fn initial_density(&self) -> Result<DensityField> {
        Ok(self.initial.sample(&self.grid()?, self.seed))
    }

    /// Exact solution, when one is known.
    pub fn reference(&self, x: [f64; 2], t: f64) -> Option<f64> {
        match self.initial {
            InitialCondition::Barenblatt => Some(barenblatt(x[0], t)),
            _ => None,
        }
    }
}

/// Names accepted by [`load_preset`].
pub const PRESET_NAMES: &[&str] = &[
    "porous_media",
    "fokker_planck_saturated",
    "fokker_planck_saturated_semi",
    "thin_film",
    "thin_film_semi",
    "thin_film_vdw1",
    "thin_film_vdw2",
    "cahn_hilliard",
    "cahn_hilliard_aniso_fourfold",
    "cahn_hilliard_aniso_eightfold",
    "cahn_hilliard_aniso_omega",
    "cahn_hilliard_aniso_fourfold_reduced",
    "cahn_hilliard_aniso_eightfold_reduced",
    "cahn_hilliard_aniso_omega_reduced",
    "doubly_degenerate",
    "cahn_hilliard_two_disks",
];

fn solver(tau: f64, tolerance: f64) -> SolverConfig {
    SolverConfig::new(tau, 1.0 / tau, tolerance)
}

fn time(dt: f64, t_end: f64, snapshot_every: usize) -> TimeLoopSpec {
    TimeLoopSpec {
        dt,
        t_end,
        snapshot_every,
    }
}

fn anisotropic(name: &str, anisotropy: Anisotropy, reduced: bool) -> Preset {
    let (h, t_end) = if reduced {
        (1.0 / 64.0, 0.02)
    } else {
        (1.0 / 128.0, 0.1)
    };
    Preset {
        name: name.into(),
        dim: 2,
        domain: (-0.5, 0.5),
        h,
        mobility: MobilityKind::CahnHilliard,
        mobility_mode: MobilityMode::Implicit,
        bounds: (-1.0, 1.0),
        energy: EnergyModel::AnisotropicCahnHilliard {
            eps: 0.01,
            beta: 1e-4,
            anisotropy,
        },
        boundary: Boundary::Periodic,
        convex_split: true,
        initial: InitialCondition::TanhDisk {
            radius: 0.3,
            width: 0.025,
        },
        seed: DEFAULT_SEED,
        time: time(0.001, t_end, 10),
        solver: solver(2.0, 1e-5),
    }
}

fn two_disks(name: &str, mobility: MobilityKind, energy: EnergyModel) -> Preset {
    Preset {
        name: name.into(),
        dim: 2,
        domain: (-0.5, 0.5),
        h: 1.0 / 64.0,
        mobility,
        mobility_mode: MobilityMode::Implicit,
        bounds: (-1.0, 1.0),
        convex_split: matches!(energy, EnergyModel::DoublyDegenerate { .. }),
        energy,
        boundary: Boundary::Neumann,
        initial: InitialCondition::TwoDisks {
            width: std::f64::consts::SQRT_2 * 0.02,
        },
        seed: DEFAULT_SEED,
        time: time(0.1, 3.0, 5),
        solver: solver(0.2, 1e-5),
    }
}

pub fn load_preset(name: &str) -> Result<Preset> {
    let p = match name {
        "porous_media" => Preset {
            name: name.into(),
            dim: 1,
            domain: (-1.0, 1.0),
            h: 0.01,
            mobility: MobilityKind::Linear,
            mobility_mode: MobilityMode::Implicit,
            bounds: (0.0, UNBOUNDED_UPPER),
            energy: EnergyModel::Porous,
            boundary: Boundary::Neumann,
            convex_split: false,
            initial: InitialCondition::Barenblatt,
            seed: DEFAULT_SEED,
            time: time(0.0005, 0.05, 10),
            solver: solver(1.0, 1e-5),
        },
        "fokker_planck_saturated" | "fokker_planck_saturated_semi" => {
            let semi = name.ends_with("_semi");
            Preset {
                name: name.into(),
                dim: 1,
                domain: (-4.0, 4.0),
                h: 0.02,
                mobility: MobilityKind::Saturated,
                mobility_mode: if semi {
                    MobilityMode::SemiImplicit
                } else {
                    MobilityMode::Implicit
                },
                bounds: (0.0, 1.0),
                energy: EnergyModel::Entropy {
                    potential: Potential::Harmonic,
                },
                boundary: Boundary::Neumann,
                convex_split: true,
                initial: InitialCondition::Constant(0.415),
                seed: DEFAULT_SEED,
                time: time(if semi { 0.01 } else { 0.1 }, 5.0, if semi { 50 } else { 5 }),
                solver: solver(0.2, 1e-7),
            }
        }
        "thin_film" | "thin_film_semi" => Preset {
            name: name.into(),
            dim: 1,
            domain: (-1.0, 1.0),
            h: 0.01,
            mobility: MobilityKind::Cubic,
            mobility_mode: if name.ends_with("_semi") {
                MobilityMode::SemiImplicit
            } else {
                MobilityMode::Implicit
            },
            bounds: (0.0, UNBOUNDED_UPPER),
            energy: EnergyModel::ThinFilm { disjoining: None },
            boundary: Boundary::Neumann,
            convex_split: false,
            initial: InitialCondition::CosineFilm,
            seed: DEFAULT_SEED,
            time: time(0.001, 0.1, 10),
            solver: solver(0.03, 1e-7),
        },
        "thin_film_vdw1" | "thin_film_vdw2" => {
            let eps = 0.1;
            let disjoining = if name == "thin_film_vdw1" {
                Disjoining::LongShort { eps }
            } else {
                Disjoining::LennardJones { eps }
            };
            Preset {
                name: name.into(),
                dim: 1,
                domain: (0.0, 1.0),
                h: 0.005,
                mobility: MobilityKind::Cubic,
                mobility_mode: MobilityMode::Implicit,
                bounds: (0.0, UNBOUNDED_UPPER),
                energy: EnergyModel::ThinFilm {
                    disjoining: Some(disjoining),
                },
                boundary: Boundary::Neumann,
                convex_split: true,
                initial: InitialCondition::CosineCap { eps },
                seed: DEFAULT_SEED,
                time: time(0.001, 0.1, 10),
                solver: solver(0.01, 1e-7),
            }
        }
        "cahn_hilliard" => Preset {
            name: name.into(),
            dim: 2,
            domain: (0.0, 1.0),
            h: 1.0 / 64.0,
            mobility: MobilityKind::CahnHilliard,
            mobility_mode: MobilityMode::Implicit,
            bounds: (-1.0, 1.0),
            energy: EnergyModel::CahnHilliard { eps: 0.02 },
            boundary: Boundary::Neumann,
            convex_split: false,
            initial: InitialCondition::Uniform { amplitude: 0.05 },
            seed: DEFAULT_SEED,
            time: time(0.001, 0.05, 5),
            solver: solver(20.0, 1e-7),
        },
        "cahn_hilliard_aniso_fourfold" | "cahn_hilliard_aniso_fourfold_reduced" => anisotropic(
            name,
            Anisotropy::FourFold { alpha: 0.2 },
            name.ends_with("_reduced"),
        ),
        "cahn_hilliard_aniso_eightfold" | "cahn_hilliard_aniso_eightfold_reduced" => anisotropic(
            name,
            Anisotropy::EightFold { alpha: 0.2 },
            name.ends_with("_reduced"),
        ),
        "cahn_hilliard_aniso_omega" | "cahn_hilliard_aniso_omega_reduced" => anisotropic(
            name,
            Anisotropy::Angular {
                alpha: 0.4,
                omega: 4.0,
            },
            name.ends_with("_reduced"),
        ),
        "doubly_degenerate" => two_disks(
            name,
            MobilityKind::DoublyDegenerate,
            EnergyModel::DoublyDegenerate { eps: 0.02 },
        ),
        "cahn_hilliard_two_disks" => two_disks(
            name,
            MobilityKind::CahnHilliard,
            EnergyModel::CahnHilliard { eps: 0.02 },
        ),
        _ => return Err(Error::UnknownPreset(name.into())),
    };
    Ok(p)
}

/// Labels the connected components (4-neighbour) of `{ρ > level}` and
/// returns their number.
pub fn count_components(rho: &DensityField, grid: &GridSpec, level: f64) -> usize {
    let n = grid.n();
    let cells = grid.num_cells();
    let mut label = vec![false; cells];
    let mut count = 0;
    let mut stack = Vec::new();
    for start in 0..cells {
        if label[start] || rho[start] <= level {
            continue;
        }
        count += 1;
        label[start] = true;
        stack.push(start);
        while let Some(c) = stack.pop() {
            let (i, j) = (c % n, c / n);
            let mut visit = |k: usize| {
                if !label[k] && rho[k] > level {
                    label[k] = true;
                    stack.push(k);
                }
            };
            if i > 0 {
                visit(c - 1);
            }
            if i + 1 < n {
                visit(c + 1);
            }
            if grid.dim() == 2 {
                if j > 0 {
                    visit(c - n);
                }
                if j + 1 < n {
                    visit(c + n);
                }
            }
        }
    }
    count
}
