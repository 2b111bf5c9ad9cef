//! Design, simulation and comparison runs shared by the subcommands and the
//! acceptance harness.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use monoblade_core::config::{ConfigError, ToolkitConfig};
use monoblade_core::io::{DesignFile, IoError, OptimizerSummary, SimulationSummary, TOOLKIT_VERSION};
use monoblade_core::optimizer::{
    constraint_residuals, evaluate_objective, optimize_chord, rectangular_design, DesignVariant, OptimizerError,
    VariantTag,
};
use monoblade_core::planform::{mass_properties, net_moment, ChordPolynomial};
use monoblade_core::sixdof::{energy_audit, settle_time, simulate, steady_state_metrics, Trajectory, WingModel};

pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_RUN: i32 = 3;
pub const EXIT_IO: i32 = 4;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("malformed input: {0}")]
    Malformed(String),
    #[error(transparent)]
    Optimizer(#[from] OptimizerError),
    #[error("simulation aborted: {0}")]
    SimulationAborted(String),
    #[error("all variants failed")]
    AllFailed,
    #[error(transparent)]
    Io(#[from] IoError),
}

impl PipelineError {
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Config(ConfigError::Io { .. }) | PipelineError::Io(IoError::Io { .. }) => EXIT_IO,
            PipelineError::Config(_) | PipelineError::Malformed(_) | PipelineError::Io(IoError::Json { .. }) => {
                EXIT_CONFIG
            }
            PipelineError::Optimizer(OptimizerError::InvalidConfig(_)) => EXIT_CONFIG,
            PipelineError::Optimizer(_) | PipelineError::SimulationAborted(_) | PipelineError::AllFailed => EXIT_RUN,
        }
    }
}

fn comparison_variant(tag: VariantTag) -> DesignVariant {
    DesignVariant { use_tip_loss: true, ..DesignVariant::new(tag) }
}

/// Wraps a chord polynomial with its evaluated properties.
pub fn describe_design(
    tag: VariantTag,
    poly: ChordPolynomial<f64>,
    optimizer: Option<OptimizerSummary>,
    cfg: &ToolkitConfig,
) -> DesignFile {
    let opt_cfg = cfg.optimization_config();
    let variant = DesignVariant::new(tag);
    let geom = &cfg.geometry;
    DesignFile {
        toolkit_version: TOOLKIT_VERSION.to_string(),
        variant: tag,
        coefficients: poly,
        wing_length: geom.wing_length,
        area: poly.wing_area(geom.wing_length),
        mass: mass_properties(&poly, &cfg.massmodel, geom).mass,
        net_moment: net_moment(&poly, &cfg.massmodel, geom, cfg.sim.g),
        cp: evaluate_objective(&poly, &variant, &opt_cfg).ok(),
        cp_comparison: evaluate_objective(&poly, &comparison_variant(tag), &opt_cfg).ok(),
        constraint_residuals: constraint_residuals(&poly, &variant, &opt_cfg, &cfg.massmodel),
        optimizer,
        config_hash: cfg.hash(),
        config: *cfg,
    }
}

/// Optimises the variant (or constructs the rectangular control) and
/// evaluates the result.
pub fn build_design(tag: VariantTag, cfg: &ToolkitConfig) -> Result<DesignFile, PipelineError> {
    let variant = DesignVariant::new(tag);
    let opt_cfg = cfg.optimization_config();
    if variant.rectangular {
        return Ok(describe_design(tag, rectangular_design(&opt_cfg), None, cfg));
    }
    let res = optimize_chord(&variant, &opt_cfg, &cfg.massmodel)?;
    let summary = OptimizerSummary {
        status: res.status,
        major_iterations: res.major_iterations,
        starts_used: res.starts_used,
        winning_start: res.winning_start,
        kkt: res.kkt,
        history: res.history,
    };
    Ok(describe_design(tag, res.poly, Some(summary), cfg))
}

pub struct SimulationRun {
    pub trajectory: Trajectory<f64>,
    pub summary: SimulationSummary,
}

/// Simulates a design under `cfg`. An aborted run still returns the partial
/// trajectory, flagged in the summary.
pub fn simulate_design(design: &DesignFile, cfg: &ToolkitConfig) -> SimulationRun {
    let wing = WingModel::new(&design.coefficients, &cfg.geometry);
    let props = mass_properties(&design.coefficients, &cfg.massmodel, &cfg.geometry);
    let name = design.variant.as_str();
    let (trajectory, error) = match simulate(&wing, &props, &cfg.sim, name) {
        Ok(t) => (t, None),
        Err(abort) => (abort.partial, Some(abort.error.to_string())),
    };
    let window = cfg.sim.steady_window;
    let complete = error.is_none();
    let summary = SimulationSummary {
        design: name.to_string(),
        aborted: !complete,
        samples: trajectory.len(),
        final_time: trajectory.times.last().copied().unwrap_or(0.0),
        metrics: steady_state_metrics(&trajectory, window).ok().filter(|_| complete),
        settle_time: settle_time(&trajectory).filter(|_| complete),
        energy_audit: energy_audit(&trajectory, &wing, &props, window).ok().filter(|_| complete),
        error,
        config_hash: cfg.hash(),
    };
    SimulationRun { trajectory, summary }
}

/// One row of the published design/simulation tables.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReferenceRow {
    pub tag: VariantTag,
    pub wing_length: f64,
    pub area: f64,
    pub cp: f64,
    pub mass: f64,
    pub v_z: f64,
    pub v_x: f64,
    pub v_y: f64,
    pub omega_z: f64,
    pub roll: f64,
    pub pitch: f64,
}

const fn reference(
    tag: VariantTag,
    area: f64,
    cp: f64,
    mass: f64,
    v: [f64; 3],
    omega_z: f64,
    roll: f64,
    pitch: f64,
) -> ReferenceRow {
    ReferenceRow { tag, wing_length: 0.25, area, cp, mass, v_z: v[0], v_x: v[1], v_y: v[2], omega_z, roll, pitch }
}

pub const PUBLISHED_REFERENCE: [ReferenceRow; 4] = [
    reference(VariantTag::W1, 0.0179, 0.0140, 0.1218, [9.9520, 0.5295, -2.1076], 6.6025, -0.1882, 0.0863),
    reference(VariantTag::W2, 0.0208, 0.0066, 0.1229, [26.0586, -0.4396, -1.0098], 31.9851, -0.2183, 0.1117),
    reference(VariantTag::W3, 0.0208, 0.0072, 0.1232, [8.6336, 0.2539, -1.2415], 5.7074, -0.1866, 0.0883),
    reference(VariantTag::W4, 0.0156, 0.0048, 0.1207, [11.3478, 0.6216, -1.5842], 7.8747, -0.2016, 0.0744),
];

pub fn published_reference(tag: VariantTag) -> ReferenceRow {
    PUBLISHED_REFERENCE[tag as usize]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariantReport {
    pub tag: VariantTag,
    pub design: Option<DesignFile>,
    pub simulation: Option<SimulationSummary>,
    pub error: Option<String>,
}

impl VariantReport {
    pub fn completed(&self) -> bool {
        self.error.is_none() && self.simulation.as_ref().is_some_and(|s| !s.aborted)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderingCheck {
    pub name: String,
    pub expected: String,
    pub measured: BTreeMap<String, f64>,
    /// `None` when a variant needed for the check is missing.
    pub holds: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub toolkit_version: String,
    pub config_hash: String,
    pub rng_seed: u64,
    pub variants: Vec<VariantReport>,
    pub reference: Vec<ReferenceRow>,
    pub checks: Vec<OrderingCheck>,
}

pub struct Comparison {
    pub report: ComparisonReport,
    /// Trajectories of the variants whose simulation ran, in tag order.
    pub trajectories: Vec<(VariantTag, Trajectory<f64>)>,
}

fn run_variant(tag: VariantTag, cfg: &ToolkitConfig) -> (VariantReport, Option<Trajectory<f64>>) {
    let design = match build_design(tag, cfg) {
        Ok(d) => d,
        Err(e) => {
            let report = VariantReport { tag, design: None, simulation: None, error: Some(e.to_string()) };
            return (report, None);
        }
    };
    let run = simulate_design(&design, cfg);
    let error = run.summary.error.clone().map(|e| format!("simulation aborted: {e}"));
    let report = VariantReport { tag, design: Some(design), simulation: Some(run.summary), error };
    (report, Some(run.trajectory))
}

/// Runs the selected variants end to end, one thread per variant; the report
/// is assembled in tag order.
pub fn compare(cfg: &ToolkitConfig, filter: Option<VariantTag>) -> Comparison {
    let tags: Vec<VariantTag> = match filter {
        Some(t) => vec![t],
        None => VariantTag::ALL.to_vec(),
    };
    let results: Vec<(VariantReport, Option<Trajectory<f64>>)> = std::thread::scope(|s| {
        let handles: Vec<_> = tags.iter().map(|&tag| s.spawn(move || run_variant(tag, cfg))).collect();
        handles.into_iter().map(|h| h.join().expect("variant worker panicked")).collect()
    });
    let mut variants = Vec::new();
    let mut trajectories = Vec::new();
    for (report, traj) in results {
        if let Some(t) = traj {
            trajectories.push((report.tag, t));
        }
        variants.push(report);
    }
    let checks = ordering_checks(&variants);
    let report = ComparisonReport {
        toolkit_version: TOOLKIT_VERSION.to_string(),
        config_hash: cfg.hash(),
        rng_seed: cfg.optimizer.rng_seed,
        reference: tags.iter().map(|&t| published_reference(t)).collect(),
        variants,
        checks,
    };
    Comparison { report, trajectories }
}

fn collect<F: Fn(&VariantReport) -> Option<f64>>(
    variants: &[VariantReport],
    tags: &[VariantTag],
    f: F,
) -> (BTreeMap<String, f64>, bool) {
    let mut out = BTreeMap::new();
    for &tag in tags {
        if let Some(v) = variants.iter().find(|v| v.tag == tag).and_then(&f) {
            out.insert(tag.to_string(), v);
        }
    }
    let complete = out.len() == tags.len();
    (out, complete)
}

fn chain(values: &BTreeMap<String, f64>, order: &[VariantTag], strict: &[bool]) -> bool {
    order.windows(2).zip(strict).all(|(w, &s)| {
        let (a, b) = (values[w[0].as_str()], values[w[1].as_str()]);
        if s {
            a < b
        } else {
            a <= b
        }
    })
}

/// The table orderings: C_p ranking and margins over the rectangle (all at
/// the common tip-loss-on setting), descent and spin-rate ranking, settling.
pub fn ordering_checks(variants: &[VariantReport]) -> Vec<OrderingCheck> {
    use VariantTag::*;
    let mut checks = Vec::new();

    let cp = |v: &VariantReport| v.design.as_ref().and_then(|d| d.cp_comparison);
    let (measured, complete) = collect(variants, &[W4, W2, W3, W1], cp);
    checks.push(OrderingCheck {
        name: "cp_order".into(),
        expected: "C_p: W1 >= W3 >= W2 > W4".into(),
        holds: complete.then(|| chain(&measured, &[W4, W2, W3, W1], &[true, false, false])),
        measured,
    });

    let (values, complete) = collect(variants, &[W2, W3, W4], cp);
    let mut margins = BTreeMap::new();
    if complete {
        for t in [W2, W3] {
            margins.insert(format!("{t}_over_W4"), values[t.as_str()] / values["W4"] - 1.0);
        }
    }
    checks.push(OrderingCheck {
        name: "cp_margin".into(),
        expected: "W2 and W3 exceed W4 C_p by at least 20%".into(),
        holds: complete.then(|| margins.values().all(|&m| m >= 0.2)),
        measured: margins,
    });

    let metric = |f: fn(&monoblade_core::sixdof::SteadyStateMetrics<f64>) -> f64| {
        move |v: &VariantReport| v.simulation.as_ref().and_then(|s| s.metrics.as_ref()).map(f)
    };
    let order = [W3, W1, W4, W2];
    let (measured, complete) = collect(variants, &order, metric(|m| m.v_z));
    checks.push(OrderingCheck {
        name: "descent_order".into(),
        expected: "v_z: W3 < W1 < W4 < W2".into(),
        holds: complete.then(|| chain(&measured, &order, &[true; 3])),
        measured,
    });
    let (measured, complete) = collect(variants, &order, metric(|m| m.omega_z.abs()));
    checks.push(OrderingCheck {
        name: "rotation_order".into(),
        expected: "|omega_z|: W3 < W1 < W4 < W2".into(),
        holds: complete.then(|| chain(&measured, &order, &[true; 3])),
        measured,
    });

    // settle time recorded only for runs whose trailing window is stable
    let settle = |v: &VariantReport| {
        let s = v.simulation.as_ref()?;
        s.metrics.as_ref().filter(|m| m.stabilized).and(s.settle_time)
    };
    let present: Vec<VariantTag> = variants.iter().map(|v| v.tag).collect();
    let (measured, complete) = collect(variants, &present, settle);
    checks.push(OrderingCheck {
        name: "stabilized_before_10s".into(),
        expected: "every variant run stabilized with settle time < 10 s".into(),
        holds: (!present.is_empty()).then(|| complete && measured.values().all(|&t| t < 10.0)),
        measured,
    });
    checks
}
