//! Toolkit configuration: one JSON document with the sections
//! `flow`, `geometry`, `bounds`, `optimizer`, `massmodel` and `sim`.
//! Every section and field is optional; unknown keys are rejected.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::aero::TipLossMode;
use crate::bemt::{BemtSettings, ClosureMode, EfficiencyReading, FlowConditions, PhiUpdate};
use crate::optimizer::{ChordBounds, OptimizationConfig, SolverSettings};
use crate::planform::{MassModel, WingGeometry};
use crate::sixdof::SimConfig;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("malformed config: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FlowSection {
    /// Far-upstream speed, m/s; only dimensional outputs depend on it.
    pub u_upstream: f64,
    pub u_downstream: f64,
    pub rho: f64,
    pub lambda_max: f64,
    pub closure: ClosureMode,
    pub phi_update: PhiUpdate,
    pub efficiency_reading: EfficiencyReading,
    pub tip_loss_mode: TipLossMode,
    pub tol: f64,
    pub max_iter: usize,
    pub relaxation: f64,
}

impl Default for FlowSection {
    fn default() -> Self {
        let b = BemtSettings::<f64>::default();
        Self {
            u_upstream: 8.6336,
            u_downstream: 8.6336,
            rho: 1.225,
            lambda_max: 1.0,
            closure: b.closure,
            phi_update: b.phi_update,
            efficiency_reading: b.efficiency,
            tip_loss_mode: b.tip_loss_mode,
            tol: b.tol,
            max_iter: b.max_iter,
            relaxation: b.relaxation,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ToolkitConfig {
    pub flow: FlowSection,
    pub geometry: WingGeometry<f64>,
    pub bounds: ChordBounds,
    pub optimizer: SolverSettings,
    pub massmodel: MassModel<f64>,
    pub sim: SimConfig<f64>,
}

impl ToolkitConfig {
    pub fn from_json_str(text: &str) -> Result<Self, ConfigError> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
        Self::from_json_str(&text)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let f = &self.flow;
        let bad = |m: String| Err(ConfigError::Invalid(m));
        if !(f.u_upstream > 0.0 && f.rho > 0.0 && f.lambda_max > 0.0) {
            return bad("flow.u_upstream, flow.rho and flow.lambda_max must be positive".into());
        }
        if !(f.tol > 0.0) || f.max_iter == 0 || !(f.relaxation > 0.0 && f.relaxation <= 1.0) {
            return bad("flow.tol > 0, flow.max_iter >= 1 and 0 < flow.relaxation <= 1 required".into());
        }
        if self.geometry.wing_count == 0 || !self.geometry.pitch.is_finite() {
            return bad("geometry.wing_count must be >= 1 and geometry.pitch finite".into());
        }
        let m = &self.massmodel;
        if !(m.plate_areal_density >= 0.0 && m.body_mass >= 0.0 && m.body_offset.is_finite()) {
            return bad("massmodel densities and masses must be non-negative".into());
        }
        self.optimization_config().validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        self.sim.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        if !(self.sim.steady_window > 0.0) {
            return bad("sim.steady_window must be positive".into());
        }
        Ok(())
    }

    pub fn bemt_settings(&self) -> BemtSettings<f64> {
        let f = &self.flow;
        BemtSettings {
            closure: f.closure,
            phi_update: f.phi_update,
            efficiency: f.efficiency_reading,
            tip_loss_mode: f.tip_loss_mode,
            tol: f.tol,
            max_iter: f.max_iter,
            relaxation: f.relaxation,
        }
    }

    pub fn flow_conditions(&self) -> FlowConditions<f64> {
        let mut flow = FlowConditions::for_geometry(self.flow.u_upstream, self.flow.rho, self.flow.lambda_max, &self.geometry);
        flow.u_downstream = self.flow.u_downstream;
        flow
    }

    pub fn optimization_config(&self) -> OptimizationConfig {
        OptimizationConfig {
            geometry: self.geometry,
            flow: self.flow_conditions(),
            bemt: self.bemt_settings(),
            bounds: self.bounds,
            solver: self.optimizer,
            gravity: self.sim.g,
        }
    }

    /// Key-sorted compact JSON of the full (defaults-expanded) config.
    pub fn canonical_json(&self) -> String {
        let value = serde_json::to_value(self).expect("config serialises");
        serde_json::to_string(&value).expect("value serialises")
    }

    /// SHA-256 of [`canonical_json`](Self::canonical_json), lowercase hex.
    pub fn hash(&self) -> String {
        format!("{:x}", Sha256::digest(self.canonical_json().as_bytes()))
    }
}
