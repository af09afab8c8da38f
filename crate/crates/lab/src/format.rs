//! File formats: field JSON, trajectory JSONL and CSV tables.
//!
//! CSV floats are written in scientific notation with 17 significant digits
//! so every value round-trips exactly.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::sync::Arc;

use galerkin_core::lattice::build_truncation;
use galerkin_core::{Complex64, ModeIndex, ModelParams, SpectralField, Truncation};
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

/// Serialised spectral field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldRecord {
    #[serde(rename = "N")]
    pub n: i64,
    pub a: f64,
    pub s: f64,
    pub modes: Vec<[i32; 2]>,
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl FieldRecord {
    pub fn from_field(field: &SpectralField, params: &ModelParams) -> Self {
        let t = field.trunc();
        Self {
            n: t.n(),
            a: params.a,
            s: params.s,
            modes: t.modes().iter().map(|k| [k.k1, k.k2]).collect(),
            re: field.coeffs().iter().map(|c| c.re).collect(),
            im: field.coeffs().iter().map(|c| c.im).collect(),
        }
    }

    pub fn to_field(&self) -> Result<SpectralField> {
        if self.re.len() != self.modes.len() || self.im.len() != self.modes.len() {
            return Err(LabError::Format(
                "modes, re and im must have equal length".into(),
            ));
        }
        let modes: Vec<ModeIndex> = self
            .modes
            .iter()
            .map(|m| ModeIndex::new(m[0], m[1]))
            .collect();
        let disc = build_truncation(self.n)?;
        let trunc: Arc<Truncation> = if disc.modes() == modes.as_slice() {
            Arc::new(disc)
        } else {
            Arc::new(Truncation::from_modes(&modes)?)
        };
        let coeffs = self
            .re
            .iter()
            .zip(&self.im)
            .map(|(r, i)| Complex64::new(*r, *i))
            .collect();
        Ok(SpectralField::from_coeffs(trunc, coeffs)?)
    }
}

/// One line of a trajectory JSONL file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub t: f64,
    #[serde(rename = "E")]
    pub energy: f64,
    #[serde(rename = "S")]
    pub enstrophy: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub field: Option<FieldRecord>,
}

pub fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| LabError::io(dir, e))?;
    }
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| LabError::io(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")
        .and_then(|_| w.flush())
        .map_err(|e| LabError::io(path, e))
}

pub fn read_field(path: &Path) -> Result<SpectralField> {
    let text = std::fs::read_to_string(path).map_err(|e| LabError::io(path, e))?;
    let rec: FieldRecord = serde_json::from_str(&text)?;
    rec.to_field()
}

/// Writes one JSON value per line.
pub fn write_jsonl<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> Result<()> {
    let mut w = create(path)?;
    for row in rows {
        serde_json::to_writer(&mut w, &row)?;
        w.write_all(b"\n").map_err(|e| LabError::io(path, e))?;
    }
    w.flush().map_err(|e| LabError::io(path, e))
}

/// A CSV cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cell {
    F(f64),
    I(i64),
    B(bool),
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::F(x)
    }
}
impl From<i64> for Cell {
    fn from(x: i64) -> Self {
        Cell::I(x)
    }
}
impl From<i32> for Cell {
    fn from(x: i32) -> Self {
        Cell::I(x.into())
    }
}
impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::I(x as i64)
    }
}
impl From<bool> for Cell {
    fn from(x: bool) -> Self {
        Cell::B(x)
    }
}

pub fn format_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::F(x) => format_f64(*x),
            Cell::I(i) => i.to_string(),
            Cell::B(b) => b.to_string(),
        }
    }
}

/// Writes a CSV table with a header row.
pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<Cell>]) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(header)?;
    for row in rows {
        if row.len() != header.len() {
            return Err(LabError::Format(format!(
                "row has {} cells, header has {}",
                row.len(),
                header.len()
            )));
        }
        w.write_record(row.iter().map(Cell::render))?;
    }
    w.flush().map_err(|e| LabError::io(path, e))
}

/// CSV table to any writer (used for stdout).
pub fn write_csv_to<W: Write>(out: W, header: &[&str], rows: &[Vec<Cell>]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header)?;
    for row in rows {
        w.write_record(row.iter().map(Cell::render))?;
    }
    w.flush().map_err(|e| LabError::io("<stdout>", e))
}
