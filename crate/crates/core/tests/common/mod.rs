//! Independent reference implementations shared by the oracle and
//! acceptance tests. Nothing here calls into the solver's own kernels.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wgflow::prox::{project_parabola, prox_conjugate_mu, prox_primal, ActiveSetState, ParabolaPoint};
use wgflow::{
    Boundary, DensityField, EnergyModel, GradientFlowProblem, GridSpec, MobilityKind, MobilityMode,
    MobilityModel, MomentumField, PdfbSolver, SolverConfig,
};
use wgflow::physics::ImplicitPart;
use wgflow::pdfb::PrimalState;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Interior faces of axis `q` as `(lower cell, upper cell)`, in storage order.
pub fn faces(n: usize, dim: usize, q: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    if dim == 1 {
        for i in 0..n - 1 {
            out.push((i, i + 1));
        }
    } else if q == 0 {
        for j in 0..n {
            for i in 0..n - 1 {
                out.push((i + n * j, i + 1 + n * j));
            }
        }
    } else {
        for j in 0..n - 1 {
            for i in 0..n {
                out.push((i + n * j, i + n * (j + 1)));
            }
        }
    }
    out
}

/// Divergence matrix: a face flux leaves its lower cell and enters its upper
/// cell, scaled by `1/h`.
pub fn dense_div(n: usize, dim: usize, h: f64) -> DMatrix<f64> {
    let cells = n.pow(dim as u32);
    let all: Vec<(usize, usize)> = (0..dim).flat_map(|q| faces(n, dim, q)).collect();
    let mut a = DMatrix::zeros(cells, all.len());
    for (f, &(lo, hi)) in all.iter().enumerate() {
        a[(lo, f)] += 1.0 / h;
        a[(hi, f)] -= 1.0 / h;
    }
    a
}

/// Face-to-cell averaging: each face gives half its value to both cells,
/// into the component block of its axis.
pub fn dense_avg(n: usize, dim: usize) -> DMatrix<f64> {
    let cells = n.pow(dim as u32);
    let per_axis = faces(n, dim, 0).len();
    let mut m = DMatrix::zeros(dim * cells, dim * per_axis);
    for q in 0..dim {
        for (f, &(lo, hi)) in faces(n, dim, q).iter().enumerate() {
            m[(q * cells + lo, q * per_axis + f)] += 0.5;
            m[(q * cells + hi, q * per_axis + f)] += 0.5;
        }
    }
    m
}

/// Five-point Laplacian with mirrored (Neumann) or wrapped (periodic) ghosts.
pub fn dense_laplacian(n: usize, dim: usize, h: f64, periodic: bool) -> DMatrix<f64> {
    let cells = n.pow(dim as u32);
    let mut l = DMatrix::zeros(cells, cells);
    for c in 0..cells {
        let (i, j) = (c % n, c / n);
        for axis in 0..dim {
            for dir in [-1isize, 1] {
                let coord = if axis == 0 { i } else { j } as isize + dir;
                let k = if (0..n as isize).contains(&coord) {
                    coord as usize
                } else if periodic {
                    coord.rem_euclid(n as isize) as usize
                } else {
                    continue;
                };
                let nb = if axis == 0 { k + n * j } else { i + n * k };
                l[(c, nb)] += 1.0 / (h * h);
                l[(c, c)] -= 1.0 / (h * h);
            }
        }
    }
    l
}

pub fn dv(v: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(v)
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

// ---------------------------------------------------------------------------
// parabola projection

/// Closest point of the boundary `φ = −½r²` (with `ψ` parallel to `ψ₀`) by a
/// dense scan of `r ∈ [0, |ψ₀|]` followed by golden-section refinement.
pub fn parabola_boundary_search<const D: usize>(p0: ParabolaPoint<D>) -> ParabolaPoint<D> {
    if p0.is_feasible() {
        return p0;
    }
    let r0 = p0.psi.iter().map(|v| v * v).sum::<f64>().sqrt();
    let dist = |r: f64| (-0.5 * r * r - p0.phi).powi(2) + (r - r0).powi(2);
    let samples = 4000;
    let (mut best, mut best_d) = (0.0, dist(0.0));
    for k in 1..=samples {
        let r = r0 * k as f64 / samples as f64;
        let d = dist(r);
        if d < best_d {
            best = r;
            best_d = d;
        }
    }
    let step = r0 / samples as f64;
    let (mut a, mut b) = ((best - step).max(0.0), (best + step).min(r0));
    let g = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..200 {
        let c = b - g * (b - a);
        let d = a + g * (b - a);
        if dist(c) < dist(d) {
            b = d;
        } else {
            a = c;
        }
    }
    let r = 0.5 * (a + b);
    let scale = if r0 > 0.0 { r / r0 } else { 0.0 };
    ParabolaPoint::new(-0.5 * r * r, p0.psi.map(|v| v * scale))
}

/// Worst KKT residual of a projection result: feasibility, stationarity
/// `ψ₀ − ψ = λψ` with `λ = φ₀ − φ ≥ 0`, and complementarity.
pub fn parabola_kkt_residual<const D: usize>(p0: ParabolaPoint<D>, p: ParabolaPoint<D>) -> f64 {
    let lambda = p0.phi - p.phi;
    let mut worst = p.constraint().max(0.0).max((-lambda).max(0.0));
    for k in 0..D {
        worst = worst.max((p0.psi[k] - p.psi[k] - lambda * p.psi[k]).abs());
    }
    worst.max((lambda * p.constraint()).abs())
}

/// Runs the parabola oracle on `count` random points in 1D and 2D; returns
/// `(max distance to the search oracle, max KKT residual)`.
pub fn parabola_oracle(count: usize, seed: u64) -> (f64, f64) {
    let mut r = rng(seed);
    let (mut err, mut kkt) = (0.0f64, 0.0f64);
    for k in 0..count {
        let phi = r.gen_range(-4.0..4.0);
        if k % 2 == 0 {
            let p0 = ParabolaPoint::new(phi, [r.gen_range(-4.0..4.0)]);
            let p = project_parabola(p0);
            let q = parabola_boundary_search(p0);
            err = err.max((p.phi - q.phi).abs()).max((p.psi[0] - q.psi[0]).abs());
            kkt = kkt.max(parabola_kkt_residual(p0, p));
        } else {
            let p0 = ParabolaPoint::new(phi, [r.gen_range(-4.0..4.0), r.gen_range(-4.0..4.0)]);
            let p = project_parabola(p0);
            let q = parabola_boundary_search(p0);
            err = err.max((p.phi - q.phi).abs());
            for i in 0..2 {
                err = err.max((p.psi[i] - q.psi[i]).abs());
            }
            kkt = kkt.max(parabola_kkt_residual(p0, p));
        }
    }
    (err, kkt)
}

// ---------------------------------------------------------------------------
// projection onto {ρ + A m = ρⁿ, β₀ ≤ ρ ≤ β₁}

pub struct ProjectionInstance {
    pub grid: GridSpec,
    pub bounds: (f64, f64),
    pub rho0: Vec<f64>,
    pub m0: Vec<f64>,
    pub rho_prev: Vec<f64>,
}

pub fn random_projection_instance(r: &mut ChaCha8Rng) -> ProjectionInstance {
    let (dim, n) = match r.gen_range(0..6) {
        0 => (2, 2),
        k => (1, k + 1),
    };
    let h = r.gen_range(0.2..1.5);
    let grid = GridSpec::new(dim, n, h, [0.0; 2]).unwrap();
    let cells = grid.num_cells();
    let lower = r.gen_range(-1.0..0.5);
    let upper = lower + r.gen_range(0.3..2.0);
    let rho_prev = (0..cells).map(|_| r.gen_range(lower..upper)).collect();
    // spread ρ₀ well past the box so that both bounds get active
    let width = upper - lower;
    let rho0 = (0..cells)
        .map(|_| r.gen_range(lower - width..upper + width))
        .collect();
    let m0 = (0..grid.num_faces()).map(|_| r.gen_range(-1.0..1.0)).collect();
    ProjectionInstance {
        grid,
        bounds: (lower, upper),
        rho0,
        m0,
        rho_prev,
    }
}

/// Enumerates every assignment of cells to {free, lower, upper}, solves the
/// equality-constrained KKT system of each densely and returns the one that
/// satisfies all KKT conditions.
pub fn projection_by_enumeration(inst: &ProjectionInstance) -> (Vec<f64>, Vec<f64>) {
    let g = &inst.grid;
    let n = g.num_cells();
    let a = dense_div(g.n(), g.dim(), g.h());
    let aat = &a * a.transpose();
    let am0 = &a * dv(&inst.m0);
    let (lo, hi) = inst.bounds;
    let mut best: Option<(f64, Vec<f64>, Vec<f64>)> = None;
    for code in 0..3usize.pow(n as u32) {
        let kind: Vec<usize> = (0..n).map(|i| code / 3usize.pow(i as u32) % 3).collect();
        if kind.iter().all(|&k| k != 0) {
            continue;
        }
        // ρ_i = ρ₀_i − η_i on free cells, the bound on active ones
        let mut mat = aat.clone();
        let mut rhs = DVector::zeros(n);
        for i in 0..n {
            let rho_i = match kind[i] {
                0 => {
                    mat[(i, i)] += 1.0;
                    inst.rho0[i]
                }
                1 => lo,
                _ => hi,
            };
            rhs[i] = rho_i + am0[i] - inst.rho_prev[i];
        }
        let Some(eta) = mat.clone().lu().solve(&rhs) else {
            continue;
        };
        let rho: Vec<f64> = (0..n)
            .map(|i| match kind[i] {
                0 => inst.rho0[i] - eta[i],
                1 => lo,
                _ => hi,
            })
            .collect();
        // violation of feasibility and multiplier signs
        let mut viol: f64 = 0.0;
        for i in 0..n {
            match kind[i] {
                0 => viol = viol.max(lo - rho[i]).max(rho[i] - hi),
                1 => viol = viol.max(-(lo - inst.rho0[i] + eta[i])),
                _ => viol = viol.max(-(inst.rho0[i] - eta[i] - hi)),
            }
        }
        let m = dv(&inst.m0) - a.transpose() * &eta;
        if best.as_ref().is_none_or(|b| viol < b.0) {
            best = Some((viol, rho, m.as_slice().to_vec()));
        }
    }
    let (viol, rho, m) = best.expect("some active set");
    assert!(viol < 1e-10, "no KKT point found (best violation {viol:e})");
    (rho, m)
}

/// Runs the projection oracle on `count` random instances; returns the
/// largest deviation from enumeration.
pub fn projection_oracle(count: usize, seed: u64) -> f64 {
    let mut r = rng(seed);
    let mut worst = 0.0f64;
    for _ in 0..count {
        let inst = random_projection_instance(&mut r);
        let (rho_ref, m_ref) = projection_by_enumeration(&inst);
        let g = inst.grid;
        let (rho, m, _) = prox_primal(
            &DensityField::from_vec(inst.rho0.clone()),
            &MomentumField::from_vec(g.dim(), inst.m0.clone()),
            &DensityField::from_vec(inst.rho_prev.clone()),
            &g,
            inst.bounds,
            &ActiveSetState::default(),
        )
        .unwrap();
        worst = worst.max(max_abs_diff(&rho, &rho_ref)).max(max_abs_diff(&m, &m_ref));
    }
    worst
}

// ---------------------------------------------------------------------------
// entropy conjugate

/// `prox_{λF}(x₀)` for `F(ρ) = Δt(ρ ln ρ − ρ)` by bisection on
/// `λΔt ln ρ + ρ − x₀ = 0`.
pub fn entropy_prox(x0: f64, lambda: f64, dt: f64) -> f64 {
    let f = |x: f64| lambda * dt * x.ln() + x - x0;
    let (mut a, mut b) = (f64::MIN_POSITIVE, x0.abs() + 1.0);
    while f(b) < 0.0 {
        b *= 2.0;
    }
    for _ in 0..2000 {
        let c = 0.5 * (a + b);
        if c <= a || c >= b {
            break;
        }
        if f(c) > 0.0 {
            b = c;
        } else {
            a = c;
        }
    }
    0.5 * (a + b)
}

/// Largest optimality residual `σe^{μ/Δt} + μ − μ₀` (relative to `1+|μ₀|`)
/// and largest Moreau-identity defect `|μ + σ prox_{F/σ}(μ₀/σ) − μ₀|`.
pub fn entropy_conjugate_oracle(count: usize, seed: u64) -> (f64, f64) {
    let mut r = rng(seed);
    let g = GridSpec::line(count, 1.0, 0.0).unwrap();
    let (sigma, dt) = (r.gen_range(0.2..5.0), r.gen_range(0.01..1.0));
    let mu0 = DensityField::from_vec((0..count).map(|_| r.gen_range(-3.0..3.0)).collect());
    let mu = prox_conjugate_mu(&mu0, sigma, dt, ImplicitPart::Entropy, &g, Boundary::Neumann).unwrap();
    let (mut opt, mut moreau) = (0.0f64, 0.0f64);
    for i in 0..count {
        let res = sigma * (mu[i] / dt).exp() + mu[i] - mu0[i];
        opt = opt.max(res.abs() / (1.0 + mu0[i].abs()));
        let p = entropy_prox(mu0[i] / sigma, 1.0 / sigma, dt);
        moreau = moreau.max((mu[i] + sigma * p - mu0[i]).abs());
    }
    (opt, moreau)
}

// ---------------------------------------------------------------------------
// PD3O with M(ρ) = ρ and E = Σρ²

/// Projection onto `𝔎` by bisection on the multiplier.
fn parabola_bisect(phi0: f64, psi0: f64) -> (f64, f64) {
    if phi0 + 0.5 * psi0 * psi0 <= 0.0 {
        return (phi0, psi0);
    }
    let c = |l: f64| (phi0 - l) + 0.5 * psi0 * psi0 / ((1.0 + l) * (1.0 + l));
    let (mut a, mut b) = (0.0, phi0.max(0.0) + 1.0);
    while c(b) > 0.0 {
        b *= 2.0;
    }
    for _ in 0..300 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        if c(m) > 0.0 {
            a = m;
        } else {
            b = m;
        }
    }
    let l = 0.5 * (a + b);
    (phi0 - l, psi0 / (1.0 + l))
}

pub struct Pd3oRun {
    /// Largest difference over all iterations, primal and dual variables.
    pub max_diff: f64,
    pub iterations: usize,
    /// Smallest density seen; the box must stay inactive for the
    /// equality-only projection to be exact.
    pub min_rho: f64,
}

/// Runs PDFB and an independent PD3O side by side on a 1D grid of `n`
/// cells.
pub fn pd3o_comparison(n: usize, iterations: usize) -> Pd3oRun {
    let h = 1.0 / n as f64;
    let grid = GridSpec::line(n, h, 0.0).unwrap();
    let (tau, sigma, dt) = (0.5, 1.0, 0.05);
    let rho_prev: Vec<f64> = (0..n)
        .map(|i| {
            let x = (i as f64 + 0.5) * h;
            1.0 + 0.6 * (-(x - 0.3).powi(2) / 0.01).exp()
        })
        .collect();
    let mob = MobilityModel::new(MobilityKind::Linear, MobilityMode::Implicit, (0.0, 1e6)).unwrap();
    let problem = GradientFlowProblem::new(grid, mob, EnergyModel::Porous, Boundary::Neumann, false).unwrap();
    let mut cfg = SolverConfig::new(tau, sigma, 1e-300);
    cfg.iter_max = iterations;
    let mut solver = PdfbSolver::new(problem, cfg).unwrap();
    let prev = DensityField::from_vec(rho_prev.clone());
    let mut st: PrimalState = solver.initial_state(&prev);

    let a = dense_div(n, 1, h);
    let avg = dense_avg(n, 1);
    let proj = DMatrix::identity(n, n) + &a * a.transpose();
    let proj = proj.lu();
    let grad = |r: &DVector<f64>| r * (2.0 * dt);
    let pn = dv(&rho_prev);
    let mut rho = pn.clone();
    let mut m = DVector::zeros(n - 1);
    let mut rho_bar = rho.clone();
    let mut m_bar = m.clone();
    let mut phi = DVector::zeros(n);
    let mut psi = DVector::zeros(n);

    let mut out = Pd3oRun {
        max_diff: 0.0,
        iterations: 0,
        min_rho: f64::INFINITY,
    };
    for _ in 0..iterations {
        // dual
        let y_rho = (&rho_bar + &pn) * 0.5;
        let y_m = &avg * &m_bar;
        for i in 0..n {
            let (p, s) = parabola_bisect(phi[i] + sigma * y_rho[i], psi[i] + sigma * y_m[i]);
            phi[i] = p;
            psi[i] = s;
        }
        // primal
        let g_old = grad(&rho);
        let rho_half = &rho - (&g_old + &phi * 0.5) * tau;
        let m_half = &m - avg.transpose() * &psi * tau;
        let eta = proj.solve(&(&rho_half + &a * &m_half - &pn)).unwrap();
        let rho_new = &rho_half - &eta;
        let m_new = &m_half - a.transpose() * &eta;
        // reflection
        rho_bar = &rho_new * 2.0 - &rho - (grad(&rho_new) - g_old) * tau;
        m_bar = &m_new * 2.0 - &m;
        rho = rho_new;
        m = m_new;
        out.min_rho = out.min_rho.min(rho.min());

        solver.iterate(&mut st, &prev, dt).unwrap();
        let d = solver.duals();
        let diffs = [
            max_abs_diff(&st.rho, rho.as_slice()),
            max_abs_diff(&st.m, m.as_slice()),
            max_abs_diff(&st.rho_bar, rho_bar.as_slice()),
            max_abs_diff(&st.m_bar, m_bar.as_slice()),
            max_abs_diff(&d.phi, phi.as_slice()),
            max_abs_diff(d.psi.component(0), psi.as_slice()),
        ];
        out.max_diff = diffs.iter().fold(out.max_diff, |a, &b| a.max(b));
        out.iterations += 1;
    }
    out
}

// ---------------------------------------------------------------------------
// operator algebra

/// Adjoint, mass and dense-equivalence defects of the staggered operators on
/// an `n`-cell-per-axis grid, for random inputs.
pub fn operator_defects(n: usize, dim: usize, h: f64, r: &mut ChaCha8Rng) -> f64 {
    let g = GridSpec::new(dim, n, h, [0.0; 2]).unwrap();
    let cells = g.num_cells();
    let nf = g.num_faces();
    let m: Vec<f64> = (0..nf).map(|_| r.gen_range(-1.0..1.0)).collect();
    let rho: Vec<f64> = (0..cells).map(|_| r.gen_range(-1.0..1.0)).collect();
    let w: Vec<f64> = (0..dim * cells).map(|_| r.gen_range(-1.0..1.0)).collect();
    let mut am = vec![0.0; cells];
    let mut atr = vec![0.0; nf];
    let mut im = vec![0.0; dim * cells];
    let mut itw = vec![0.0; nf];
    g.div_into(&m, &mut am);
    g.div_adjoint_into(&rho, &mut atr);
    g.avg_into(&m, &mut im);
    g.avg_adjoint_into(&w, &mut itw);
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let scale = 1.0 / h;
    let mut worst = ((dot(&am, &rho) - dot(&m, &atr)) / scale).abs();
    worst = worst.max((dot(&im, &w) - dot(&m, &itw)).abs());
    worst = worst.max((am.iter().sum::<f64>() / scale).abs());
    let a = dense_div(n, dim, h);
    let i = dense_avg(n, dim);
    worst = worst.max(max_abs_diff(&am, (&a * dv(&m)).as_slice()) / scale);
    worst = worst.max(max_abs_diff(&atr, (a.transpose() * dv(&rho)).as_slice()) / scale);
    worst = worst.max(max_abs_diff(&im, (&i * dv(&m)).as_slice()));
    worst.max(max_abs_diff(&itw, (i.transpose() * dv(&w)).as_slice()))
}

/// Relative residual of the spectral `(I + s A Aᵀ) x = b` solve, measured with
/// the dense matrix.
pub fn dct_solve_residual(n: usize, dim: usize, h: f64, s: f64, r: &mut ChaCha8Rng) -> f64 {
    let g = GridSpec::new(dim, n, h, [0.0; 2]).unwrap();
    let b: Vec<f64> = (0..g.num_cells()).map(|_| r.gen_range(-1.0..1.0)).collect();
    let x = wgflow::grid::solve_identity_plus_div_divt(&DensityField::from_vec(b.clone()), &g, s).unwrap();
    let a = dense_div(n, dim, h);
    let lhs = DMatrix::identity(g.num_cells(), g.num_cells()) + &a * a.transpose() * s;
    let res = lhs * dv(&x) - dv(&b);
    res.norm() / dv(&b).norm()
}

/// Operator suite over every `n ≤ 8` in 1D and 2D with `reps` random draws
/// each; returns `(worst identity defect, worst DCT residual)`.
pub fn operator_suite(reps: usize, seed: u64) -> (f64, f64) {
    let mut r = rng(seed);
    let (mut ops, mut dct) = (0.0f64, 0.0f64);
    for dim in 1..=2 {
        for n in 2..=8 {
            for _ in 0..reps {
                let h = r.gen_range(0.05..2.0);
                ops = ops.max(operator_defects(n, dim, h, &mut r));
                let s = r.gen_range(0.01..10.0);
                dct = dct.max(dct_solve_residual(n, dim, h, s, &mut r));
            }
        }
    }
    (ops, dct)
}
