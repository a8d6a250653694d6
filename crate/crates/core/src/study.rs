//! PDFB iteration counts across grid spacings.

use crate::error::Result;
use crate::jko::run_quiet;
use crate::presets::Preset;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StudyRow {
    pub h: f64,
    pub first_step_iters: usize,
    pub mean_iters: f64,
}

/// Runs `preset` once per spacing in `h_list` and records the iterations of
/// the first step and the mean over all steps.
pub fn study_grid_independence(preset: &Preset, h_list: &[f64]) -> Result<Vec<StudyRow>> {
    h_list
        .iter()
        .map(|&h| {
            let mut p = preset.clone();
            p.h = h;
            let problem = p.problem()?;
            let rho0 = p.initial_density()?;
            let out = run_quiet(&rho0, &problem, &p.solver, &p.time)?;
            let steps = &out.diagnostics[1..];
            let mean_iters = if steps.is_empty() {
                0.0
            } else {
                steps.iter().map(|d| d.pdfb_iters as f64).sum::<f64>() / steps.len() as f64
            };
            Ok(StudyRow {
                h: problem.grid.h(),
                first_step_iters: steps.first().map_or(0, |d| d.pdfb_iters),
                mean_iters,
            })
        })
        .collect()
}

pub fn study_csv(rows: &[StudyRow]) -> String {
    let mut out = String::from("h,first_step_iters,mean_iters\n");
    for r in rows {
        out.push_str(&format!("{},{},{}\n", r.h, r.first_step_iters, r.mean_iters));
    }
    out
}

/// `max/min` of the mean iteration counts.
pub fn spread(rows: &[StudyRow]) -> f64 {
    let max = rows.iter().map(|r| r.mean_iters).fold(f64::NEG_INFINITY, f64::max);
    let min = rows.iter().map(|r| r.mean_iters).fold(f64::INFINITY, f64::min);
    max / min
}
