//! Fixtures shared by the kernel benchmarks.

use wgflow::{load_preset, DensityField, PdfbSolver};

/// A solver for `preset` at spacing `h`, its initial density and time step.
pub fn solver_fixture(preset: &str, h: f64) -> (PdfbSolver, DensityField, f64) {
    let mut p = load_preset(preset).expect("known preset");
    p.h = h;
    let problem = p.problem().expect("valid preset");
    let rho0 = p.initial_density().expect("valid preset");
    let dt = p.time.dt;
    (PdfbSolver::new(problem, p.solver).expect("valid solver"), rho0, dt)
}

/// Deterministic pseudo-random values in `[-1, 1)` without pulling in an RNG.
pub fn wavy(n: usize, phase: f64) -> Vec<f64> {
    (0..n).map(|i| ((i as f64 * 0.7548776662 + phase) * 12.9898).sin()).collect()
}
