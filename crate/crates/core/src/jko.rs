//! Outer JKO time loop and the structure diagnostics checked on its output.

use crate::error::{Error, Result};
use crate::grid::DensityField;
use crate::pdfb::{PdfbSolver, SolverConfig};
use crate::physics::GradientFlowProblem;

/// Upper limit on the number of JKO steps in one run.
pub const MAX_STEPS: usize = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeLoopSpec {
    pub dt: f64,
    pub t_end: f64,
    /// Emit a snapshot every this many steps (the initial and final states
    /// are always emitted).
    pub snapshot_every: usize,
}

impl TimeLoopSpec {
    pub fn new(dt: f64, t_end: f64) -> Self {
        Self {
            dt,
            t_end,
            snapshot_every: 10,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut bad = Vec::new();
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            bad.push(format!("dt must be positive, got {}", self.dt));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            bad.push(format!("t_end must be non-negative, got {}", self.t_end));
        }
        if self.snapshot_every == 0 {
            bad.push("snapshot_every must be at least 1".into());
        }
        if bad.is_empty() && self.t_end / self.dt > MAX_STEPS as f64 {
            bad.push(format!("t_end/dt exceeds the step budget of {MAX_STEPS}"));
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidParameter(bad.join("; ")))
        }
    }

    /// Number of steps, rounding `t_end/dt` to the nearest integer when it is
    /// within round-off of one.
    pub fn num_steps(&self) -> usize {
        let r = self.t_end / self.dt;
        let k = r.round();
        if (r - k).abs() <= 1e-9 * k.max(1.0) {
            k as usize
        } else {
            r.ceil() as usize
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepDiagnostics {
    pub step: usize,
    pub time: f64,
    /// `E_h(ρ)`; for the non-variational model this is the Ginzburg–Landau
    /// energy used for monitoring. `None` when no value can be computed.
    pub energy: Option<f64>,
    /// `Σ ρ_i h^d`
    pub mass: f64,
    pub min_rho: f64,
    pub max_rho: f64,
    pub pdfb_iters: usize,
    /// Discrete `½W²_{M,h}` of the accepted step (`Σ f(M, ℐm) h^d`).
    pub action: f64,
    pub converged: bool,
}

impl StepDiagnostics {
    fn measure(step: usize, time: f64, rho: &DensityField, problem: &GradientFlowProblem) -> Self {
        let g = &problem.grid;
        let energy = problem
            .energy
            .diagnostic_value(g, problem.rho_bc, rho)
            .ok()
            .filter(|e| e.is_finite());
        Self {
            step,
            time,
            energy,
            mass: rho.sum() * g.cell_volume(),
            min_rho: rho.min(),
            max_rho: rho.max(),
            pdfb_iters: 0,
            action: 0.0,
            converged: true,
        }
    }
}

pub enum LoopEvent<'a> {
    Snapshot {
        step: usize,
        time: f64,
        rho: &'a DensityField,
    },
    Step(&'a StepDiagnostics),
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub rho: DensityField,
    /// Entry 0 describes the initial state.
    pub diagnostics: Vec<StepDiagnostics>,
}

/// Runs the JKO scheme from `rho0` over `spec`, reporting through `sink`.
pub fn run(
    rho0: &DensityField,
    problem: &GradientFlowProblem,
    cfg: &SolverConfig,
    spec: &TimeLoopSpec,
    sink: &mut dyn FnMut(LoopEvent<'_>) -> Result<()>,
) -> Result<RunOutput> {
    spec.validate()?;
    problem.check_initial(rho0)?;
    let steps = spec.num_steps();
    let mut solver = PdfbSolver::new(problem.clone(), *cfg)?;
    let mut rho = rho0.clone();
    let first = StepDiagnostics::measure(0, 0.0, &rho, problem);
    sink(LoopEvent::Snapshot {
        step: 0,
        time: 0.0,
        rho: &rho,
    })?;
    sink(LoopEvent::Step(&first))?;
    let mut diagnostics = vec![first];
    for step in 1..=steps {
        let time = step as f64 * spec.dt;
        let out = solver
            .solve_saddle(&rho, spec.dt)
            .map_err(|e| Error::Step {
                step,
                source: Box::new(e),
            })?;
        if !out.converged {
            log::warn!(
                "step {step}: PDFB stopped at iter_max = {} (last relative change {:e})",
                cfg.iter_max,
                out.rel_changes.last().copied().unwrap_or(f64::NAN)
            );
        }
        rho = out.rho;
        let mut d = StepDiagnostics::measure(step, time, &rho, problem);
        d.pdfb_iters = out.iterations;
        d.action = out.action.as_f64();
        d.converged = out.converged;
        sink(LoopEvent::Step(&d))?;
        if step % spec.snapshot_every == 0 || step == steps {
            sink(LoopEvent::Snapshot {
                step,
                time,
                rho: &rho,
            })?;
        }
        diagnostics.push(d);
    }
    Ok(RunOutput { rho, diagnostics })
}

/// [`run`] without a sink.
pub fn run_quiet(
    rho0: &DensityField,
    problem: &GradientFlowProblem,
    cfg: &SolverConfig,
    spec: &TimeLoopSpec,
) -> Result<RunOutput> {
    run(rho0, problem, cfg, spec, &mut |_| Ok(()))
}

pub const MASS_TOL: f64 = 1e-10;
pub const BOX_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Violation {
    /// Relative drift of the total mass from step 0.
    Mass { step: usize, drift: f64 },
    Bounds { step: usize, min: f64, max: f64 },
    EnergyIncrease { step: usize, increase: f64, slack: f64 },
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct StructureReport {
    pub violations: Vec<Violation>,
    pub max_mass_drift: f64,
    /// Largest `E_{n+1} − E_n` over the series (negative when strictly
    /// dissipative).
    pub max_energy_increase: f64,
    pub steps_checked: usize,
    pub energy_checked: bool,
}

impl StructureReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks mass conservation, the box and energy dissipation along a series.
/// Mass drift is measured relative to `max(|mass₀|, Σ|ρ⁰| h^d)`, which is the
/// mass itself for non-negative densities; the caller passes that scale as
/// `mass_scale` (use `|mass₀|` when unknown).
pub fn check_structure(
    diags: &[StepDiagnostics],
    bounds: (f64, f64),
    tolerance: f64,
    mass_scale: f64,
) -> StructureReport {
    let mut report = StructureReport {
        max_energy_increase: f64::NEG_INFINITY,
        energy_checked: diags.len() > 1 && diags.iter().all(|d| d.energy.is_some()),
        ..Default::default()
    };
    let Some(first) = diags.first() else {
        report.max_energy_increase = 0.0;
        return report;
    };
    let scale = mass_scale.max(first.mass.abs()).max(f64::MIN_POSITIVE);
    for (k, d) in diags.iter().enumerate() {
        report.steps_checked += 1;
        let drift = (d.mass - first.mass).abs() / scale;
        report.max_mass_drift = report.max_mass_drift.max(drift);
        if drift > MASS_TOL {
            report.violations.push(Violation::Mass { step: d.step, drift });
        }
        if d.min_rho < bounds.0 - BOX_TOL || d.max_rho > bounds.1 + BOX_TOL {
            report.violations.push(Violation::Bounds {
                step: d.step,
                min: d.min_rho,
                max: d.max_rho,
            });
        }
        if k > 0 {
            if let (Some(prev), Some(cur)) = (diags[k - 1].energy, d.energy) {
                let increase = cur - prev;
                report.max_energy_increase = report.max_energy_increase.max(increase);
                let slack = 10.0 * tolerance * (1.0 + prev.abs());
                if increase > slack {
                    report.violations.push(Violation::EnergyIncrease {
                        step: d.step,
                        increase,
                        slack,
                    });
                }
            }
        }
    }
    if report.max_energy_increase == f64::NEG_INFINITY {
        report.max_energy_increase = 0.0;
    }
    report
}
