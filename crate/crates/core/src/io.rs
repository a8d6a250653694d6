//! Snapshot and diagnostics files.
//!
//! CSV snapshots have header `x,rho` or `x,y,rho`, one row per cell with `x`
//! varying fastest. Binary snapshots are a 16-byte header (`WGF1`, `u32`
//! dimension, `u64` cells per axis, all little-endian) followed by the cell
//! values as little-endian `f64`.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use crate::config::SnapshotFormat;
use crate::error::{check_len, Error, Result};
use crate::grid::{DensityField, GridSpec};
use crate::jko::StepDiagnostics;

pub const MAGIC: &[u8; 4] = b"WGF1";

pub const DIAGNOSTICS_HEADER: &str = "step,time,energy,mass,min_rho,max_rho,pdfb_iters,action,converged";

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

/// 17 significant digits.
fn num(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn snapshot_csv(rho: &DensityField, grid: &GridSpec) -> Result<String> {
    check_len("density", grid.num_cells(), rho.len())?;
    let mut out = String::with_capacity(rho.len() * 48);
    out.push_str(if grid.dim() == 1 { "x,rho\n" } else { "x,y,rho\n" });
    for (c, &r) in rho.iter().enumerate() {
        let x = grid.cell_center(c);
        if grid.dim() == 1 {
            out.push_str(&format!("{},{}\n", num(x[0]), num(r)));
        } else {
            out.push_str(&format!("{},{},{}\n", num(x[0]), num(x[1]), num(r)));
        }
    }
    Ok(out)
}

pub fn write_snapshot_csv(path: &Path, rho: &DensityField, grid: &GridSpec) -> Result<()> {
    let text = snapshot_csv(rho, grid)?;
    let mut f = create(path)?;
    f.write_all(text.as_bytes())
        .and_then(|_| f.flush())
        .map_err(|e| Error::io(path, e))
}

pub fn write_snapshot_binary(path: &Path, rho: &DensityField, grid: &GridSpec) -> Result<()> {
    check_len("density", grid.num_cells(), rho.len())?;
    let mut f = create(path)?;
    let mut buf = Vec::with_capacity(16 + 8 * rho.len());
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&(grid.dim() as u32).to_le_bytes());
    buf.extend_from_slice(&(grid.n() as u64).to_le_bytes());
    for v in rho.iter() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    f.write_all(&buf)
        .and_then(|_| f.flush())
        .map_err(|e| Error::io(path, e))
}

/// Reads a binary snapshot, returning the dimension, cells per axis and the
/// field.
pub fn read_snapshot_binary(path: &Path) -> Result<(usize, usize, DensityField)> {
    let mut bytes = Vec::new();
    File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| Error::io(path, e))?;
    let bad = |reason: String| Error::Format {
        path: path.to_path_buf(),
        reason,
    };
    if bytes.len() < 16 || &bytes[..4] != MAGIC {
        return Err(bad("missing WGF1 header".into()));
    }
    let dim = u32::from_le_bytes(bytes[4..8].try_into().expect("4 bytes")) as usize;
    let n = u64::from_le_bytes(bytes[8..16].try_into().expect("8 bytes")) as usize;
    if !(dim == 1 || dim == 2) {
        return Err(bad(format!("dimension {dim}")));
    }
    let cells = n.checked_pow(dim as u32).ok_or_else(|| bad("size overflow".into()))?;
    let body = &bytes[16..];
    if body.len() != 8 * cells {
        return Err(bad(format!("expected {cells} values, found {} bytes", body.len())));
    }
    let values = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    Ok((dim, n, DensityField::from_vec(values)))
}

pub fn write_snapshot(path: &Path, rho: &DensityField, grid: &GridSpec, format: SnapshotFormat) -> Result<()> {
    match format {
        SnapshotFormat::Csv => write_snapshot_csv(path, rho, grid),
        SnapshotFormat::Binary => write_snapshot_binary(path, rho, grid),
    }
}

/// `snapshot_000120.csv` or `.bin` inside `dir`.
pub fn snapshot_path(dir: &Path, step: usize, format: SnapshotFormat) -> PathBuf {
    let ext = match format {
        SnapshotFormat::Csv => "csv",
        SnapshotFormat::Binary => "bin",
    };
    dir.join(format!("snapshot_{step:06}.{ext}"))
}

pub fn diagnostics_row(d: &StepDiagnostics) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{}",
        d.step,
        num(d.time),
        d.energy.map(num).unwrap_or_default(),
        num(d.mass),
        num(d.min_rho),
        num(d.max_rho),
        d.pdfb_iters,
        num(d.action),
        d.converged
    )
}

pub fn diagnostics_csv(diags: &[StepDiagnostics]) -> String {
    let mut out = String::from(DIAGNOSTICS_HEADER);
    out.push('\n');
    for d in diags {
        out.push_str(&diagnostics_row(d));
        out.push('\n');
    }
    out
}

pub fn write_diagnostics(path: &Path, diags: &[StepDiagnostics]) -> Result<()> {
    let mut f = create(path)?;
    f.write_all(diagnostics_csv(diags).as_bytes())
        .and_then(|_| f.flush())
        .map_err(|e| Error::io(path, e))
}
