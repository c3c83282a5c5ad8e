//! CSV schemas and the run manifest.
//!
//! Every CSV has a mandatory header row, `\n` line endings and floats in
//! `{:.16e}` form (17 significant digits, round-trip exact).

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::{HarnessError, ScenarioConfig};

pub const FRONT_COLUMNS: &[&str] = &["t", "xi", "x", "y", "m", "theta", "g"];
pub const SURFACE_COLUMNS: &[&str] = &["t", "xi1", "xi2", "x", "y", "z", "m", "n1", "n2", "n3", "sol_res"];
pub const SCALAR_COLUMNS: &[&str] = &["t", "x", "u"];
pub const KINK_COLUMNS: &[&str] = &["time", "xi", "theta_jump", "m_jump", "g_jump", "speed_K"];

pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrontRow {
    pub t: f64,
    pub xi: f64,
    pub x: f64,
    pub y: f64,
    pub m: f64,
    pub theta: f64,
    pub g: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurfaceRow {
    pub t: f64,
    pub xi1: f64,
    pub xi2: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub m: f64,
    pub n1: f64,
    pub n2: f64,
    pub n3: f64,
    pub sol_res: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalarRow {
    pub t: f64,
    pub x: f64,
    pub u: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KinkRow {
    pub time: f64,
    pub xi: f64,
    pub theta_jump: f64,
    pub m_jump: f64,
    pub g_jump: f64,
    #[serde(rename = "speed_K")]
    pub speed_k: f64,
}

impl FrontRow {
    pub fn values(&self) -> Vec<f64> {
        vec![self.t, self.xi, self.x, self.y, self.m, self.theta, self.g]
    }
}

impl SurfaceRow {
    pub fn values(&self) -> Vec<f64> {
        vec![self.t, self.xi1, self.xi2, self.x, self.y, self.z, self.m, self.n1, self.n2, self.n3, self.sol_res]
    }
}

impl ScalarRow {
    pub fn values(&self) -> Vec<f64> {
        vec![self.t, self.x, self.u]
    }
}

impl KinkRow {
    pub fn values(&self) -> Vec<f64> {
        vec![self.time, self.xi, self.theta_jump, self.m_jump, self.g_jump, self.speed_k]
    }
}

fn writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w)
}

/// Writes a header and float rows to `w`.
pub fn write_rows<W, I>(w: W, columns: &[&str], rows: I) -> Result<(), HarnessError>
where
    W: Write,
    I: IntoIterator<Item = Vec<f64>>,
{
    let mut out = writer(w);
    out.write_record(columns)?;
    for row in rows {
        if row.len() != columns.len() {
            return Err(HarnessError::Schema(format!("row has {} values for {} columns", row.len(), columns.len())));
        }
        out.write_record(row.iter().map(|&v| format_float(v)))?;
    }
    out.flush().map_err(|e| HarnessError::Csv(e.into()))?;
    Ok(())
}

pub(crate) fn write_file<I>(path: &Path, columns: &[&str], rows: I) -> Result<(), HarnessError>
where
    I: IntoIterator<Item = Vec<f64>>,
{
    let file = std::fs::File::create(path).map_err(|source| HarnessError::Io { path: path.to_path_buf(), source })?;
    write_rows(std::io::BufWriter::new(file), columns, rows)
}

fn read_rows<T: DeserializeOwned, R: Read>(r: R, columns: &[&str]) -> Result<Vec<T>, HarnessError> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(r);
    let header = reader.headers()?.clone();
    if header.len() != columns.len() {
        return Err(HarnessError::Schema(format!("expected {} columns, found {}", columns.len(), header.len())));
    }
    for (found, want) in header.iter().zip(columns) {
        if found != *want {
            return Err(HarnessError::Schema(format!("column `{found}` where `{want}` was expected")));
        }
    }
    reader.deserialize().map(|row| row.map_err(HarnessError::from)).collect()
}

pub fn read_front_csv<R: Read>(r: R) -> Result<Vec<FrontRow>, HarnessError> {
    read_rows(r, FRONT_COLUMNS)
}

pub fn read_surface_csv<R: Read>(r: R) -> Result<Vec<SurfaceRow>, HarnessError> {
    read_rows(r, SURFACE_COLUMNS)
}

pub fn read_scalar_csv<R: Read>(r: R) -> Result<Vec<ScalarRow>, HarnessError> {
    read_rows(r, SCALAR_COLUMNS)
}

pub fn read_kinks_csv<R: Read>(r: R) -> Result<Vec<KinkRow>, HarnessError> {
    read_rows(r, KINK_COLUMNS)
}

/// `manifest.json`: the resolved config, crate version, run statistics.
/// `wall_time_s` is the only field that differs between repeat runs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub version: String,
    pub config: ScenarioConfig,
    pub wall_time_s: f64,
    pub steps: usize,
    pub files: Vec<String>,
    pub summary: BTreeMap<String, f64>,
}

impl Manifest {
    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        let m: Self = serde_json::from_str(text)?;
        m.config.validate()?;
        Ok(m)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes")
    }
}
