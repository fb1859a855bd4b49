//! Field snapshots and heatmap export.
//!
//! A snapshot is a pair of files: `<base>.bin` holds the samples as
//! little-endian `f64`, row-major with `x` outer; `<base>.json` holds the grid
//! and the time.

use serde::{Deserialize, Serialize};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::field::WignerField;
use crate::grid::{GridConfig, PhaseSpaceGrid};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotHeader {
    pub nx: usize,
    pub np: usize,
    pub x_min: f64,
    pub x_max: f64,
    pub p_min: f64,
    pub p_max: f64,
    pub hbar: f64,
    pub mass: f64,
    pub time: f64,
}

impl SnapshotHeader {
    fn grid_config(&self) -> GridConfig {
        GridConfig {
            nx: self.nx,
            np: self.np,
            x_min: self.x_min,
            x_max: self.x_max,
            p_min: self.p_min,
            p_max: self.p_max,
            hbar: self.hbar,
            mass: self.mass,
        }
    }
}

fn with_ext(base: &Path, ext: &str) -> PathBuf {
    let mut s = base.as_os_str().to_owned();
    s.push(".");
    s.push(ext);
    PathBuf::from(s)
}

fn strip_ext(path: &Path) -> PathBuf {
    match path.extension().and_then(|e| e.to_str()) {
        Some("bin") | Some("json") => path.with_extension(""),
        _ => path.to_path_buf(),
    }
}

/// Writes `<base>.bin` and `<base>.json`; returns both paths.
pub fn write_snapshot(base: &Path, field: &WignerField, time: f64) -> Result<(PathBuf, PathBuf)> {
    let g = field.grid().config();
    let header = SnapshotHeader {
        nx: g.nx,
        np: g.np,
        x_min: g.x_min,
        x_max: g.x_max,
        p_min: g.p_min,
        p_max: g.p_max,
        hbar: g.hbar,
        mass: g.mass,
        time,
    };
    let bin = with_ext(base, "bin");
    let json = with_ext(base, "json");
    let mut bytes = Vec::with_capacity(8 * field.values().len());
    for v in field.values() {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(&bin, bytes).map_err(|e| Error::io(&bin, e))?;
    let text = serde_json::to_string_pretty(&header).map_err(|e| Error::Parse(e.to_string()))?;
    fs::write(&json, text + "\n").map_err(|e| Error::io(&json, e))?;
    Ok((bin, json))
}

/// Reads a snapshot given its base path or either of its two files.
pub fn read_snapshot(path: &Path) -> Result<(WignerField, f64)> {
    let base = strip_ext(path);
    let bin = with_ext(&base, "bin");
    let json = with_ext(&base, "json");
    let text = fs::read_to_string(&json).map_err(|e| Error::io(&json, e))?;
    let header: SnapshotHeader =
        serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", json.display())))?;
    let grid = Arc::new(PhaseSpaceGrid::new(header.grid_config())?);
    let bytes = fs::read(&bin).map_err(|e| Error::io(&bin, e))?;
    if bytes.len() != 8 * grid.len() {
        return Err(Error::Parse(format!("{}: {} bytes, expected {}", bin.display(), bytes.len(), 8 * grid.len())));
    }
    let values =
        bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("chunk of eight bytes"))).collect();
    Ok((WignerField::from_values(grid, values)?, header.time))
}

/// 16-bit binary PGM with `x` along columns and `p` increasing upwards.
/// The linear scaling is recorded in a header comment.
pub fn write_pgm<W: Write>(field: &WignerField, mut out: W) -> std::io::Result<()> {
    let g = field.grid();
    let (nx, np) = (g.nx(), g.np());
    let (lo, hi) = (field.min_value(), field.max_value());
    let span = hi - lo;
    write!(out, "P5\n# min={lo:?} max={hi:?}\n{nx} {np}\n65535\n")?;
    let mut data = Vec::with_capacity(2 * nx * np);
    for ip in (0..np).rev() {
        for ix in 0..nx {
            let v = field.at(ix, ip);
            let level = if span > 0.0 { ((v - lo) / span * 65535.0).round() as u16 } else { 0 };
            data.extend_from_slice(&level.to_be_bytes());
        }
    }
    out.write_all(&data)
}

pub fn save_pgm(path: &Path, field: &WignerField) -> Result<()> {
    let f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(f);
    write_pgm(field, &mut w).and_then(|_| w.flush()).map_err(|e| Error::io(path, e))
}
