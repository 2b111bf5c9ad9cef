//! File formats: design JSON, trajectory CSV, simulation summary JSON and run
//! manifests. Design files carry no timestamps so re-runs are byte-identical;
//! timestamps live only in the manifest sidecars.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::ToolkitConfig;
use crate::optimizer::{SqpStatus, VariantTag};
use crate::planform::ChordPolynomial;
use crate::sixdof::{EnergyAudit, SteadyStateMetrics, Trajectory};

pub const TOOLKIT_VERSION: &str = env!("CARGO_PKG_VERSION");

pub const TRAJECTORY_HEADER: &str = "t,px,py,pz,roll,pitch,yaw,vx,vy,vz,wx,wy,wz";

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}: {source}")]
    Json { path: String, source: serde_json::Error },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> IoError + '_ {
    move |source| IoError::Io { path: path.display().to_string(), source }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerSummary {
    pub status: SqpStatus,
    pub major_iterations: usize,
    pub starts_used: usize,
    pub winning_start: usize,
    pub kkt: f64,
    /// Best feasible `C_p` after each major iteration (null before the first feasible iterate).
    pub history: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignFile {
    pub toolkit_version: String,
    pub variant: VariantTag,
    /// `a_0 … a_5`, lowest degree first, metres.
    pub coefficients: ChordPolynomial<f64>,
    pub wing_length: f64,
    pub area: f64,
    pub mass: f64,
    pub net_moment: f64,
    /// `C_p` under the variant's own objective settings; null when the
    /// chord is not positive everywhere (imported coefficients).
    pub cp: Option<f64>,
    /// `C_p` with tip loss on, the common comparison setting.
    pub cp_comparison: Option<f64>,
    pub constraint_residuals: BTreeMap<String, f64>,
    pub optimizer: Option<OptimizerSummary>,
    pub config_hash: String,
    pub config: ToolkitConfig,
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), IoError> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|source| IoError::Json { path: path.display().to_string(), source })?;
    text.push('\n');
    fs::write(path, text).map_err(io_err(path))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, IoError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(|source| IoError::Json { path: path.display().to_string(), source })
}

pub fn write_design(path: &Path, design: &DesignFile) -> Result<(), IoError> {
    write_json(path, design)
}

pub fn read_design(path: &Path) -> Result<DesignFile, IoError> {
    read_json(path)
}

pub fn write_trajectory_csv<W: Write>(mut w: W, traj: &Trajectory<f64>) -> std::io::Result<()> {
    writeln!(w, "{TRAJECTORY_HEADER}")?;
    for (t, s) in traj.times.iter().zip(&traj.states) {
        let fields = [
            *t, s.p[0], s.p[1], s.p[2], s.euler[0], s.euler[1], s.euler[2], s.v[0], s.v[1], s.v[2], s.w[0], s.w[1], s.w[2],
        ];
        let row: Vec<String> = fields.iter().map(|v| format!("{v:.8e}")).collect();
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}

pub fn write_trajectory_file(path: &Path, traj: &Trajectory<f64>) -> Result<(), IoError> {
    let file = fs::File::create(path).map_err(io_err(path))?;
    let mut w = std::io::BufWriter::new(file);
    write_trajectory_csv(&mut w, traj).map_err(io_err(path))?;
    w.flush().map_err(io_err(path))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationSummary {
    pub design: String,
    pub aborted: bool,
    pub error: Option<String>,
    pub samples: usize,
    pub final_time: f64,
    pub metrics: Option<SteadyStateMetrics<f64>>,
    pub settle_time: Option<f64>,
    pub energy_audit: Option<EnergyAudit<f64>>,
    pub config_hash: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub toolkit_version: String,
    pub command: String,
    pub config_hash: String,
    pub variants: Vec<String>,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    pub rng_seed: u64,
    pub started_unix: f64,
    pub finished_unix: f64,
}

pub fn unix_now() -> f64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0)
}

/// `<file>.manifest.json` next to an output file, or `manifest.json` inside
/// an output directory.
pub fn manifest_path(out: &Path) -> PathBuf {
    if out.is_dir() {
        out.join("manifest.json")
    } else {
        let mut name = out.file_name().map(|n| n.to_os_string()).unwrap_or_default();
        name.push(".manifest.json");
        out.with_file_name(name)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sixdof::{RigidBodyState, SimConfig, TrajectoryMeta};

    #[test]
    fn csv_header_and_format() {
        let traj = Trajectory {
            times: vec![0.0, 0.001],
            states: vec![RigidBodyState::default(); 2],
            meta: TrajectoryMeta { config: SimConfig::default(), design: "x".into() },
        };
        let mut buf = Vec::new();
        write_trajectory_csv(&mut buf, &traj).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some(TRAJECTORY_HEADER));
        let row = lines.nth(1).unwrap();
        assert!(row.starts_with("1.00000000e-3,"));
        assert_eq!(row.split(',').count(), 13);
    }

    #[test]
    fn manifest_sidecar_name() {
        assert_eq!(manifest_path(Path::new("/nonexistent/w3.json")), PathBuf::from("/nonexistent/w3.json.manifest.json"));
    }
}
