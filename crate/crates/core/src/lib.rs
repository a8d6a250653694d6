// `!(x > 0.0)` also rejects NaN, which is the point
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod grid;
pub mod io;
pub mod jko;
mod linalg;
pub mod pdfb;
pub mod physics;
pub mod presets;
pub mod prox;
pub mod study;

pub use error::{Error, Result};
pub use grid::spectral::Boundary;
pub use grid::{CellVectorField, DensityField, GridSpec, MomentumField};
pub use jko::{check_structure, run, StepDiagnostics, StructureReport, TimeLoopSpec};
pub use pdfb::{stepsize_bound, PdfbSolver, SolverConfig};
pub use physics::{EnergyModel, GradientFlowProblem, MobilityKind, MobilityMode, MobilityModel};
pub use presets::{load_preset, Preset, PRESET_NAMES};
pub use config::{parse_config, RunConfig, SnapshotFormat};
pub use study::{study_grid_independence, StudyRow};
