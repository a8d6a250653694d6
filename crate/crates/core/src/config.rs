//! Flat `key = value` run configuration with dotted keys and `#` comments.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::grid::spectral::Boundary;
use crate::physics::{Anisotropy, Disjoining, EnergyModel, MobilityMode};
use crate::presets::{load_preset, Preset};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SnapshotFormat {
    #[default]
    Csv,
    Binary,
}

impl SnapshotFormat {
    pub fn name(self) -> &'static str {
        match self {
            SnapshotFormat::Csv => "csv",
            SnapshotFormat::Binary => "binary",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub preset: Preset,
    pub output_dir: Option<PathBuf>,
    pub format: SnapshotFormat,
}

impl RunConfig {
    pub fn from_preset(preset: Preset) -> Self {
        Self {
            preset,
            output_dir: None,
            format: SnapshotFormat::Csv,
        }
    }

    /// Applies one override; the message names the key on failure.
    pub fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        let p = &mut self.preset;
        match key {
            "preset" => return Err("`preset` can only be given once, before overrides".into()),
            "seed" => p.seed = parse(key, value)?,
            "output.dir" => self.output_dir = Some(PathBuf::from(value)),
            "output.format" => {
                self.format = match value {
                    "csv" => SnapshotFormat::Csv,
                    "binary" => SnapshotFormat::Binary,
                    _ => return Err(format!("output.format: expected csv or binary, got `{value}`")),
                }
            }
            "grid.h" => p.h = parse(key, value)?,
            "grid.lower" => p.domain.0 = parse(key, value)?,
            "grid.upper" => p.domain.1 = parse(key, value)?,
            "box.lower" => p.bounds.0 = parse(key, value)?,
            "box.upper" => p.bounds.1 = parse(key, value)?,
            "model.mobility_mode" => {
                p.mobility_mode = match value {
                    "implicit" => MobilityMode::Implicit,
                    "semi_implicit" => MobilityMode::SemiImplicit,
                    _ => {
                        return Err(format!(
                            "model.mobility_mode: expected implicit or semi_implicit, got `{value}`"
                        ))
                    }
                }
            }
            "model.convex_split" => p.convex_split = parse(key, value)?,
            "model.boundary" => {
                p.boundary = match value {
                    "neumann" => Boundary::Neumann,
                    "periodic" => Boundary::Periodic,
                    _ => return Err(format!("model.boundary: expected neumann or periodic, got `{value}`")),
                }
            }
            "model.eps" | "model.beta" | "model.alpha" | "model.omega" => {
                let v: f64 = parse(key, value)?;
                let name = p.energy.name();
                let slot = model_param(&mut p.energy, &key[6..])
                    .ok_or_else(|| format!("{key} does not apply to model `{name}`"))?;
                *slot = v;
            }
            "solver.tau" => p.solver.tau = parse(key, value)?,
            "solver.sigma" => p.solver.sigma = parse(key, value)?,
            "solver.tolerance" => p.solver.tolerance = parse(key, value)?,
            "solver.iter_max" => p.solver.iter_max = parse(key, value)?,
            "solver.check_stepsize" => p.solver.check_stepsize = parse(key, value)?,
            "solver.cold_start" => p.solver.cold_start = parse(key, value)?,
            "time.dt" => p.time.dt = parse(key, value)?,
            "time.t_end" => p.time.t_end = parse(key, value)?,
            "time.snapshot_every" => p.time.snapshot_every = parse(key, value)?,
            _ => return Err(format!("unknown key `{key}`")),
        }
        Ok(())
    }

    /// Checks every invariant and collects all failures.
    pub fn validate(&self) -> Result<()> {
        let mut errors = Vec::new();
        let p = &self.preset;
        if !(p.h > 0.0 && p.h.is_finite()) {
            errors.push(format!("grid.h must be positive, got {}", p.h));
        }
        if !(p.domain.1 > p.domain.0) {
            errors.push(format!("grid.upper {} must exceed grid.lower {}", p.domain.1, p.domain.0));
        }
        if !(p.bounds.1 > p.bounds.0) {
            errors.push(format!("box.upper {} must exceed box.lower {}", p.bounds.1, p.bounds.0));
        }
        for e in [p.solver.validate(), p.time.validate()] {
            if let Err(Error::InvalidParameter(msg)) = e {
                errors.extend(msg.split("; ").map(String::from));
            }
        }
        let mut energy = p.energy.clone();
        for name in ["eps", "beta", "alpha"] {
            if let Some(v) = model_param(&mut energy, name) {
                if !(*v > 0.0 && v.is_finite()) {
                    errors.push(format!("model.{name} must be positive, got {v}"));
                }
            }
        }
        if errors.is_empty() {
            if let Err(e) = p.problem() {
                errors.push(e.to_string());
            }
        }
        if errors.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(errors))
        }
    }

    /// Every key with its current value, in a form [`parse_config`] accepts.
    pub fn dump(&self) -> String {
        let p = &self.preset;
        let mut out = String::new();
        let mut line = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        line("preset", p.name.clone());
        line("seed", p.seed.to_string());
        if let Some(dir) = &self.output_dir {
            line("output.dir", dir.display().to_string());
        }
        line("output.format", self.format.name().into());
        line("grid.h", p.h.to_string());
        line("grid.lower", p.domain.0.to_string());
        line("grid.upper", p.domain.1.to_string());
        line("box.lower", p.bounds.0.to_string());
        line("box.upper", p.bounds.1.to_string());
        line(
            "model.mobility_mode",
            match p.mobility_mode {
                MobilityMode::Implicit => "implicit",
                MobilityMode::SemiImplicit => "semi_implicit",
            }
            .into(),
        );
        line("model.convex_split", p.convex_split.to_string());
        line(
            "model.boundary",
            match p.boundary {
                Boundary::Neumann => "neumann",
                Boundary::Periodic => "periodic",
            }
            .into(),
        );
        let mut energy = p.energy.clone();
        for name in ["eps", "beta", "alpha", "omega"] {
            if let Some(v) = model_param(&mut energy, name) {
                line(&format!("model.{name}"), v.to_string());
            }
        }
        line("solver.tau", p.solver.tau.to_string());
        line("solver.sigma", p.solver.sigma.to_string());
        line("solver.tolerance", p.solver.tolerance.to_string());
        line("solver.iter_max", p.solver.iter_max.to_string());
        line("solver.check_stepsize", p.solver.check_stepsize.to_string());
        line("solver.cold_start", p.solver.cold_start.to_string());
        line("time.dt", p.time.dt.to_string());
        line("time.t_end", p.time.t_end.to_string());
        line("time.snapshot_every", p.time.snapshot_every.to_string());
        out
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> std::result::Result<T, String> {
    value.parse().map_err(|_| {
        format!(
            "{key}: cannot parse `{value}` as {}",
            std::any::type_name::<T>().rsplit("::").next().unwrap_or("value")
        )
    })
}

/// The named scalar parameter of an energy model, if it has one.
fn model_param<'a>(energy: &'a mut EnergyModel, name: &str) -> Option<&'a mut f64> {
    match (energy, name) {
        (EnergyModel::CahnHilliard { eps }, "eps")
        | (EnergyModel::DoublyDegenerate { eps }, "eps")
        | (EnergyModel::AnisotropicCahnHilliard { eps, .. }, "eps") => Some(eps),
        (
            EnergyModel::ThinFilm {
                disjoining: Some(Disjoining::LongShort { eps } | Disjoining::LennardJones { eps }),
            },
            "eps",
        ) => Some(eps),
        (EnergyModel::AnisotropicCahnHilliard { beta, .. }, "beta") => Some(beta),
        (EnergyModel::AnisotropicCahnHilliard { anisotropy, .. }, "alpha") => match anisotropy {
            Anisotropy::FourFold { alpha }
            | Anisotropy::EightFold { alpha }
            | Anisotropy::Angular { alpha, .. } => Some(alpha),
        },
        (
            EnergyModel::AnisotropicCahnHilliard {
                anisotropy: Anisotropy::Angular { omega, .. },
                ..
            },
            "omega",
        ) => Some(omega),
        _ => None,
    }
}

/// Splits `text` into `(line number, key, value)` entries.
fn entries(text: &str, errors: &mut Vec<String>) -> Vec<(usize, String, String)> {
    let mut out: Vec<(usize, String, String)> = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let lineno = k + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            errors.push(format!("line {lineno}: expected `key = value`, got `{line}`"));
            continue;
        };
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() || value.is_empty() {
            errors.push(format!("line {lineno}: empty key or value"));
            continue;
        }
        if let Some((prev, ..)) = out.iter().find(|(_, k, _)| k == key) {
            errors.push(format!("line {lineno}: `{key}` already set on line {prev}"));
            continue;
        }
        out.push((lineno, key.to_string(), value.to_string()));
    }
    out
}

/// Parses a configuration, reporting every error found rather than the
/// first one.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let mut errors = Vec::new();
    let entries = entries(text, &mut errors);
    let preset = entries.iter().find(|(_, k, _)| k == "preset");
    let mut cfg = match preset {
        None => {
            errors.insert(0, "missing preset".into());
            None
        }
        Some((lineno, _, name)) => match load_preset(name) {
            Ok(p) => Some(RunConfig::from_preset(p)),
            Err(e) => {
                errors.push(format!("line {lineno}: {e}"));
                None
            }
        },
    };
    // `solver.sigma` defaults to 1/tau when only tau is overridden
    let sigma_given = entries.iter().any(|(_, k, _)| k == "solver.sigma");
    for (lineno, key, value) in entries.iter().filter(|(_, k, _)| k != "preset") {
        let result = match cfg.as_mut() {
            Some(c) => c.set(key, value),
            // still report unknown keys and bad values without a preset
            None => RunConfig::from_preset(load_preset("porous_media")?)
                .set(key, value)
                .or_else(|e| if e.contains("does not apply") { Ok(()) } else { Err(e) }),
        };
        if let Err(e) = result {
            errors.push(format!("line {lineno}: {e}"));
        }
    }
    if let Some(c) = cfg.as_mut() {
        if !sigma_given && entries.iter().any(|(_, k, _)| k == "solver.tau") {
            c.preset.solver.sigma = 1.0 / c.preset.solver.tau;
        }
    }
    match cfg {
        Some(c) if errors.is_empty() => {
            c.validate()?;
            Ok(c)
        }
        _ => Err(Error::Config(errors)),
    }
}
