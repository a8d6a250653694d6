//! Primal-dual forward-backward iteration for one JKO step.
//!
//! Primal `u = (ρ, m)`, dual `v = (φ, ψ[, μ])`. Each iteration takes a
//! linearized dual ascent step followed by the projection onto `𝔎` (and the
//! conjugate prox for `μ` under convex splitting), a primal gradient step
//! followed by the projection onto `𝔇`, and a gradient-informed reflection
//! that produces `ū` for the next dual step.

use crate::error::{check_len, Error, Result};
use crate::grid::{CellVectorField, DensityField, GridSpec, MomentumField};
use crate::linalg::norm;
use crate::physics::{GradientFlowProblem, MobilityMode, MobilityModel};
use crate::prox::{
    action_value, project_scalar, ActionValue, ActiveSetState, ConjugateProx, PrimalProjector,
};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub tau: f64,
    pub sigma: f64,
    /// Stop when `‖u⁺ − u‖ / ‖u⁺‖` falls to this value.
    pub tolerance: f64,
    pub iter_max: usize,
    /// Compare `τσ` with [`stepsize_bound`] and warn when it is exceeded.
    pub check_stepsize: bool,
    /// Start every JKO step from `u = 0, v = 0` instead of `ρⁿ` and the
    /// previous duals.
    pub cold_start: bool,
}

impl SolverConfig {
    pub fn new(tau: f64, sigma: f64, tolerance: f64) -> Self {
        Self {
            tau,
            sigma,
            tolerance,
            iter_max: 20_000,
            check_stepsize: true,
            cold_start: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut bad = Vec::new();
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            bad.push(format!("tau must be positive, got {}", self.tau));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            bad.push(format!("sigma must be positive, got {}", self.sigma));
        }
        if !(self.tolerance > 0.0) {
            bad.push(format!("tolerance must be positive, got {}", self.tolerance));
        }
        if self.iter_max == 0 {
            bad.push("iter_max must be at least 1".into());
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidParameter(bad.join("; ")))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrimalState {
    pub rho: DensityField,
    pub m: MomentumField,
    pub rho_bar: DensityField,
    pub m_bar: MomentumField,
}

impl PrimalState {
    /// `u = ū = (ρ, 0)`.
    pub fn at_rest(rho: DensityField, grid: &GridSpec) -> Self {
        Self {
            rho_bar: rho.clone(),
            rho,
            m: grid.zero_momentum(),
            m_bar: grid.zero_momentum(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DualStateFull {
    pub phi: DensityField,
    pub psi: CellVectorField,
    pub mu: Option<DensityField>,
}

impl DualStateFull {
    pub fn zeros(grid: &GridSpec, split: bool) -> Self {
        Self {
            phi: grid.zeros(),
            psi: grid.zero_cell_vector(),
            mu: split.then(|| grid.zeros()),
        }
    }

    /// Largest `φ + ½|ψ|²` over the cells.
    pub fn max_constraint(&self) -> f64 {
        (0..self.phi.len())
            .map(|i| self.phi[i] + 0.5 * self.psi.norm_sq_at(i))
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// `1 / max{1, max (∂M_eff/∂ρ)²}`, where the effective derivative is
/// `½M′(s)` over `s ∈ [β₀, β₁]` for the mid-point mobility and the frozen
/// slope over the cells of `ρⁿ` for the semi-implicit one.
pub fn stepsize_bound(rho_prev: &DensityField, mob: &MobilityModel) -> f64 {
    let worst = match mob.mode() {
        MobilityMode::Implicit => {
            let (lo, hi) = mob.bounds();
            let samples = 10_000;
            (0..=samples)
                .map(|k| {
                    let s = lo + (hi - lo) * k as f64 / samples as f64;
                    0.5 * mob.kind().deriv(s)
                })
                .chain([0.5 * mob.kind().deriv(lo), 0.5 * mob.kind().deriv(hi)])
                .map(|d| d * d)
                .fold(0.0, f64::max)
        }
        MobilityMode::SemiImplicit => rho_prev
            .iter()
            .map(|&p| mob.effective_deriv(p, p).powi(2))
            .fold(0.0, f64::max),
    };
    1.0 / worst.max(1.0)
}

/// Result of one saddle-point solve.
#[derive(Debug, Clone)]
pub struct SaddleOutcome {
    pub rho: DensityField,
    pub m: MomentumField,
    pub iterations: usize,
    pub converged: bool,
    /// `‖u⁺ − u‖ / ‖u⁺‖` per iteration.
    pub rel_changes: Vec<f64>,
    pub action: ActionValue,
    pub stepsize_ok: bool,
}

/// PDFB solver with state carried from one JKO step to the next.
#[derive(Debug, Clone)]
pub struct PdfbSolver {
    problem: GradientFlowProblem,
    cfg: SolverConfig,
    projector: PrimalProjector,
    conjugate: Option<ConjugateProx>,
    duals: DualStateFull,
    active: ActiveSetState,
    resolvent: Option<Vec<f64>>,
    // scratch
    grad: Vec<f64>,
    grad_next: Vec<f64>,
    slope: Vec<f64>,
    avg: Vec<f64>,
    faces: Vec<f64>,
    mu_half: Vec<f64>,
    w: Vec<f64>,
    grad_valid: bool,
    warned_stepsize: bool,
}

impl PdfbSolver {
    pub fn new(problem: GradientFlowProblem, cfg: SolverConfig) -> Result<Self> {
        cfg.validate()?;
        let g = problem.grid;
        let projector = PrimalProjector::new(g, problem.bounds())?;
        let conjugate = problem
            .split()
            .map(|part| ConjugateProx::new(part, g, problem.rho_bc));
        let n = g.num_cells();
        Ok(Self {
            duals: DualStateFull::zeros(&g, conjugate.is_some()),
            problem,
            cfg,
            projector,
            conjugate,
            active: ActiveSetState::default(),
            resolvent: None,
            grad: vec![0.0; n],
            grad_next: vec![0.0; n],
            slope: vec![0.0; n],
            avg: vec![0.0; g.dim() * n],
            faces: vec![0.0; g.num_faces()],
            mu_half: vec![0.0; n],
            w: vec![0.0; n],
            grad_valid: false,
            warned_stepsize: false,
        })
    }

    pub fn problem(&self) -> &GradientFlowProblem {
        &self.problem
    }

    pub fn config(&self) -> &SolverConfig {
        &self.cfg
    }

    pub fn duals(&self) -> &DualStateFull {
        &self.duals
    }

    pub fn duals_mut(&mut self) -> &mut DualStateFull {
        &mut self.duals
    }

    /// Drops all state carried between steps.
    pub fn reset(&mut self) {
        self.duals = DualStateFull::zeros(&self.problem.grid, self.conjugate.is_some());
        self.active = ActiveSetState::default();
        self.resolvent = None;
        self.grad_valid = false;
    }

    /// The starting primal state for a step from `rho_prev`.
    pub fn initial_state(&self, rho_prev: &DensityField) -> PrimalState {
        let g = &self.problem.grid;
        if self.cfg.cold_start {
            PrimalState::at_rest(g.zeros(), g)
        } else {
            PrimalState::at_rest(rho_prev.clone(), g)
        }
    }

    /// `Δt ∇(explicit energy)` at `rho`, written into `out`.
    fn energy_term(&self, rho: &[f64], dt: f64, out: &mut [f64]) -> Result<()> {
        let p = &self.problem;
        if p.split().is_some() {
            p.energy.explicit_grad_into(&p.grid, p.rho_bc, rho, out);
        } else {
            p.energy.grad_into(&p.grid, p.rho_bc, rho, out)?;
        }
        out.iter_mut().for_each(|v| *v *= dt);
        Ok(())
    }

    /// Dual ascent, projection onto `𝔎`, and the conjugate prox for `μ`.
    pub fn dual_update(&mut self, st: &PrimalState, rho_prev: &[f64], dt: f64) -> Result<()> {
        let g = self.problem.grid;
        let n = g.num_cells();
        let dim = g.dim();
        let sigma = self.cfg.sigma;
        let mob = self.problem.mobility;
        g.avg_into(&st.m_bar, &mut self.avg);
        let psi = &mut self.duals.psi;
        for i in 0..n {
            let (mv, md) = mob.effective(st.rho[i], rho_prev[i]);
            self.slope[i] = md;
            let phi_half = self.duals.phi[i] + sigma * (md * (st.rho_bar[i] - st.rho[i]) + mv);
            let mut sq = 0.0;
            for q in 0..dim {
                let v = psi[q * n + i] + sigma * self.avg[q * n + i];
                self.avg[q * n + i] = v;
                sq += v * v;
            }
            let (phi, scale) = project_scalar(phi_half, sq);
            self.duals.phi[i] = phi;
            for q in 0..dim {
                psi[q * n + i] = self.avg[q * n + i] * scale;
            }
        }
        if let (Some(conj), Some(mu)) = (&self.conjugate, self.duals.mu.as_mut()) {
            for i in 0..n {
                self.mu_half[i] = mu[i] + sigma * st.rho_bar[i];
            }
            let guess = self.resolvent.as_deref().unwrap_or(&st.rho_bar);
            conj.solve(&self.mu_half, sigma, dt, Some(guess), mu, &mut self.w)?;
            match &mut self.resolvent {
                Some(r) => r.copy_from_slice(&self.w),
                None => self.resolvent = Some(self.w.clone()),
            }
        }
        Ok(())
    }

    /// Primal descent, projection onto `𝔇`, and the reflection. Returns
    /// `‖u⁺ − u‖ / ‖u⁺‖`.
    pub fn primal_update(&mut self, st: &mut PrimalState, rho_prev: &[f64], dt: f64) -> Result<f64> {
        let g = self.problem.grid;
        let n = g.num_cells();
        let tau = self.cfg.tau;
        let mob = self.problem.mobility;
        if !self.grad_valid {
            let mut buf = std::mem::take(&mut self.grad);
            self.energy_term(&st.rho, dt, &mut buf)?;
            self.grad = buf;
        }
        let mut rho_new = st.rho.clone();
        for i in 0..n {
            let mut d = self.grad[i] + self.slope[i] * self.duals.phi[i];
            if let Some(mu) = &self.duals.mu {
                d += mu[i];
            }
            rho_new[i] -= tau * d;
        }
        g.avg_adjoint_into(&self.duals.psi, &mut self.faces);
        let mut m_new = st.m.clone();
        for (m, f) in m_new.iter_mut().zip(&self.faces) {
            *m -= tau * f;
        }
        self.projector
            .project(&mut rho_new, &mut m_new, rho_prev, &mut self.active)?;

        let mut buf = std::mem::take(&mut self.grad_next);
        self.energy_term(&rho_new, dt, &mut buf)?;
        self.grad_next = buf;
        let mut diff = 0.0;
        let mut size = 0.0;
        for i in 0..n {
            let slope_new = mob.effective_deriv(rho_new[i], rho_prev[i]);
            let correction =
                (self.grad_next[i] - self.grad[i]) + (slope_new - self.slope[i]) * self.duals.phi[i];
            st.rho_bar[i] = 2.0 * rho_new[i] - st.rho[i] - tau * correction;
            diff += (rho_new[i] - st.rho[i]).powi(2);
            size += rho_new[i] * rho_new[i];
        }
        for k in 0..m_new.len() {
            st.m_bar[k] = 2.0 * m_new[k] - st.m[k];
            diff += (m_new[k] - st.m[k]).powi(2);
            size += m_new[k] * m_new[k];
        }
        std::mem::swap(&mut self.grad, &mut self.grad_next);
        self.grad_valid = true;
        st.rho = rho_new;
        st.m = m_new;
        Ok(if size > 0.0 {
            (diff / size).sqrt()
        } else {
            diff.sqrt()
        })
    }

    /// One full iteration.
    pub fn iterate(&mut self, st: &mut PrimalState, rho_prev: &[f64], dt: f64) -> Result<f64> {
        self.dual_update(st, rho_prev, dt)?;
        self.primal_update(st, rho_prev, dt)
    }

    /// Runs the iteration from [`Self::initial_state`] until the relative
    /// change drops to the tolerance or `iter_max` is reached.
    pub fn solve_saddle(&mut self, rho_prev: &DensityField, dt: f64) -> Result<SaddleOutcome> {
        let g = self.problem.grid;
        check_len("previous density", g.num_cells(), rho_prev.len())?;
        if !(dt > 0.0) {
            return Err(Error::InvalidParameter(format!("dt must be positive, got {dt}")));
        }
        let stepsize_ok = if self.cfg.check_stepsize {
            let bound = stepsize_bound(rho_prev, &self.problem.mobility);
            let ok = self.cfg.tau * self.cfg.sigma <= bound * (1.0 + 1e-12);
            if !ok && !self.warned_stepsize {
                self.warned_stepsize = true;
                log::warn!(
                    "tau*sigma = {} exceeds the step-size bound {bound:e}; convergence relies on the \
                     method working without cocoercivity (reported once per run)",
                    self.cfg.tau * self.cfg.sigma
                );
            }
            ok
        } else {
            true
        };
        if self.cfg.cold_start {
            self.reset();
        }
        self.grad_valid = false;
        let mut st = self.initial_state(rho_prev);
        let mut rel_changes = Vec::new();
        let mut converged = false;
        for _ in 0..self.cfg.iter_max {
            let rel = self.iterate(&mut st, rho_prev, dt)?;
            rel_changes.push(rel);
            if rel <= self.cfg.tolerance {
                converged = true;
                break;
            }
        }
        let action = action_value(&st.rho, rho_prev, &st.m, &self.problem.mobility, &g)?;
        Ok(SaddleOutcome {
            iterations: rel_changes.len(),
            rho: st.rho,
            m: st.m,
            converged,
            rel_changes,
            action,
            stepsize_ok,
        })
    }
}

/// Continuity residual `‖ρ − ρⁿ + A m‖₂`.
pub fn continuity_residual(
    rho: &DensityField,
    rho_prev: &DensityField,
    m: &MomentumField,
    grid: &GridSpec,
) -> f64 {
    let mut div = grid.zeros();
    grid.div_into(m, &mut div);
    let r: Vec<f64> = (0..rho.len()).map(|i| rho[i] - rho_prev[i] + div[i]).collect();
    norm(&r)
}
