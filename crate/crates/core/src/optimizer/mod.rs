//! Chord-planform design: maximise `C_p` over the six chord-polynomial
//! coefficients subject to chord bounds, an area band and (optionally) the
//! gravitational moment balance about the quarter-chord axis.
//!
//! The SQP works on normalised coefficients `z_k = a_k R^k / c_max`, so that
//! `c(r) = c_max Σ z_k (r/R)^k` and every variable is O(1).

pub mod gradient;
pub mod qp;
pub mod sqp;

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bemt::{self, BemtError, BemtSettings, FlowConditions};
use crate::planform::{check_grid, net_moment, ChordPolynomial, MassModel, WingGeometry};

pub use sqp::{IterationRecord, SqpStatus};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OptimizerError {
    #[error("chord is not positive at r = {r} m")]
    InfeasibleGeometry { r: f64 },
    #[error(transparent)]
    Bemt(#[from] BemtError),
    #[error("no start reached a feasible design ({starts} starts tried)")]
    Infeasible { starts: usize },
    #[error("W4 is constructed, not optimised")]
    NotOptimizable,
    #[error("invalid optimisation config: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum VariantTag {
    W1,
    W2,
    W3,
    W4,
}

impl VariantTag {
    pub const ALL: [VariantTag; 4] = [VariantTag::W1, VariantTag::W2, VariantTag::W3, VariantTag::W4];

    pub fn as_str(&self) -> &'static str {
        match self {
            VariantTag::W1 => "W1",
            VariantTag::W2 => "W2",
            VariantTag::W3 => "W3",
            VariantTag::W4 => "W4",
        }
    }
}

impl std::fmt::Display for VariantTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for VariantTag {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "W1" => Ok(VariantTag::W1),
            "W2" => Ok(VariantTag::W2),
            "W3" => Ok(VariantTag::W3),
            "W4" => Ok(VariantTag::W4),
            other => Err(format!("unknown variant '{other}' (expected W1, W2, W3 or W4)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DesignVariant {
    pub tag: VariantTag,
    pub use_tip_loss: bool,
    pub use_moment_constraint: bool,
    pub rectangular: bool,
}

impl DesignVariant {
    pub fn new(tag: VariantTag) -> Self {
        let (use_tip_loss, use_moment_constraint, rectangular) = match tag {
            VariantTag::W1 => (false, false, false),
            VariantTag::W2 => (false, true, false),
            VariantTag::W3 => (true, true, false),
            VariantTag::W4 => (false, false, true),
        };
        Self { tag, use_tip_loss, use_moment_constraint, rectangular }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChordBounds {
    pub c_min: f64,
    pub c_max: f64,
    pub a_min: f64,
    pub a_max: f64,
    /// Points on which the chord bounds are enforced.
    pub n_check: usize,
}

impl Default for ChordBounds {
    fn default() -> Self {
        Self { c_min: 0.01, c_max: 0.04, a_min: 0.006, a_max: 0.009, n_check: 200 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSettings {
    pub kkt_tol: f64,
    pub constraint_tol: f64,
    pub max_major_iter: usize,
    pub n_starts: usize,
    pub rng_seed: u64,
    pub fd_step: f64,
    pub initial_trust: f64,
    pub max_trust: f64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            kkt_tol: 1e-5,
            constraint_tol: 1e-6,
            max_major_iter: 100,
            n_starts: 8,
            rng_seed: 20_240_601,
            fd_step: 1e-6,
            initial_trust: 0.25,
            max_trust: 2.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizationConfig {
    pub geometry: WingGeometry<f64>,
    pub flow: FlowConditions<f64>,
    pub bemt: BemtSettings<f64>,
    pub bounds: ChordBounds,
    pub solver: SolverSettings,
    pub gravity: f64,
}

impl OptimizationConfig {
    pub fn validate(&self) -> Result<(), OptimizerError> {
        let b = &self.bounds;
        let s = &self.solver;
        let err = |m: &str| Err(OptimizerError::InvalidConfig(m.into()));
        if !(0.0 < b.c_min && b.c_min < b.c_max) {
            return err("need 0 < c_min < c_max");
        }
        if !(0.0 <= b.a_min && b.a_min < b.a_max) {
            return err("need 0 <= a_min < a_max");
        }
        if !(s.kkt_tol > 0.0 && s.constraint_tol > 0.0 && s.fd_step > 0.0 && s.initial_trust > 0.0) {
            return err("tolerances, fd_step and initial_trust must be positive");
        }
        if s.n_starts == 0 || b.n_check < 2 {
            return err("need n_starts >= 1 and n_check >= 2");
        }
        if !(self.geometry.wing_length > 0.0) || self.geometry.n_elements < 2 {
            return err("need wing_length > 0 and n_elements >= 2");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizationResult {
    pub tag: VariantTag,
    pub poly: ChordPolynomial<f64>,
    /// `C_p` under the variant's own evaluation settings.
    pub cp: f64,
    pub area: f64,
    pub net_moment: f64,
    /// Scaled residuals (0 when satisfied).
    pub constraint_residuals: BTreeMap<String, f64>,
    pub kkt: f64,
    pub major_iterations: usize,
    pub starts_used: usize,
    pub winning_start: usize,
    pub status: SqpStatus,
    /// Best feasible `C_p` after each major iteration of the winning start.
    pub history: Vec<Option<f64>>,
}

/// `C_p` of a chord polynomial under the variant's tip-loss setting.
pub fn evaluate_objective(
    poly: &ChordPolynomial<f64>,
    variant: &DesignVariant,
    cfg: &OptimizationConfig,
) -> Result<f64, OptimizerError> {
    for r in cfg.geometry.station_radii() {
        if !(poly.chord_at(r) > 0.0) {
            return Err(OptimizerError::InfeasibleGeometry { r });
        }
    }
    Ok(bemt::coefficient_of_power(poly, &cfg.geometry, &cfg.flow, &cfg.bemt, variant.use_tip_loss)?)
}

/// The rectangular control wing: constant chord `c_max`.
pub fn rectangular_design(cfg: &OptimizationConfig) -> ChordPolynomial<f64> {
    ChordPolynomial::constant(cfg.bounds.c_max)
}

/// Reference moment used to scale the balance constraint: total weight of a
/// `c_max` rectangle pod times a quarter of `c_max`.
pub fn reference_moment(cfg: &OptimizationConfig, mass: &MassModel<f64>) -> f64 {
    let plate = mass.plate_areal_density * cfg.bounds.c_max * cfg.geometry.wing_length;
    (mass.body_mass + plate) * cfg.gravity * 0.25 * cfg.bounds.c_max
}

struct Scaling {
    wing_length: f64,
    c_max: f64,
}

impl Scaling {
    fn to_poly(&self, z: &[f64]) -> ChordPolynomial<f64> {
        let mut coeffs = [0.0; 6];
        let mut rk = 1.0;
        for k in 0..6 {
            coeffs[k] = z[k] * self.c_max / rk;
            rk *= self.wing_length;
        }
        ChordPolynomial::new(coeffs)
    }

    fn from_poly(&self, p: &ChordPolynomial<f64>) -> Vec<f64> {
        let mut rk = 1.0;
        p.coeffs
            .iter()
            .map(|&a| {
                let z = a * rk / self.c_max;
                rk *= self.wing_length;
                z
            })
            .collect()
    }
}

fn powers(s: f64) -> [f64; 6] {
    let mut p = [1.0; 6];
    for k in 1..6 {
        p[k] = p[k - 1] * s;
    }
    p
}

/// Linear constraints in `z`: chord bounds on the check grid, then the area band.
fn linear_constraints(cfg: &OptimizationConfig) -> (DMatrix<f64>, DVector<f64>) {
    let b = &cfg.bounds;
    let span = b.c_max - b.c_min;
    let r_len = cfg.geometry.wing_length;
    let grid: Vec<f64> = check_grid(1.0, b.n_check).collect();
    let rows = 2 * grid.len() + 2;
    let mut a = DMatrix::zeros(rows, 6);
    let mut rhs = DVector::zeros(rows);
    for (j, &s) in grid.iter().enumerate() {
        let p = powers(s);
        for k in 0..6 {
            // (c − c_min)/span ≥ 0 and (c_max − c)/span ≥ 0
            a[(2 * j, k)] = b.c_max * p[k] / span;
            a[(2 * j + 1, k)] = -b.c_max * p[k] / span;
        }
        rhs[2 * j] = -b.c_min / span;
        rhs[2 * j + 1] = b.c_max / span;
    }
    let band = b.a_max - b.a_min;
    let base = 2 * grid.len();
    for k in 0..6 {
        let coef = b.c_max * r_len / (k as f64 + 1.0) / band;
        a[(base, k)] = coef;
        a[(base + 1, k)] = -coef;
    }
    rhs[base] = -b.a_min / band;
    rhs[base + 1] = b.a_max / band;
    (a, rhs)
}

/// Scaled moment balance and its gradient in `z`.
fn moment_constraint(z: &[f64], cfg: &OptimizationConfig, mass: &MassModel<f64>, m_ref: f64) -> (f64, Vec<f64>) {
    let geom = &cfg.geometry;
    let c_max = cfg.bounds.c_max;
    let dr = geom.element_width();
    let mut value = mass.body_mass * mass.body_offset.y();
    let mut grad = vec![0.0; 6];
    for r in geom.station_radii() {
        let p = powers(r / geom.wing_length);
        let c: f64 = c_max * z.iter().zip(&p).map(|(a, b)| a * b).sum::<f64>();
        value -= 0.25 * mass.plate_areal_density * c * c * dr;
        for k in 0..6 {
            grad[k] -= 0.5 * mass.plate_areal_density * c * c_max * p[k] * dr;
        }
    }
    let g = cfg.gravity / m_ref;
    (value * g, grad.into_iter().map(|v| v * g).collect())
}

/// Scaled constraint residuals of a design (0 when satisfied).
pub fn constraint_residuals(
    poly: &ChordPolynomial<f64>,
    variant: &DesignVariant,
    cfg: &OptimizationConfig,
    mass: &MassModel<f64>,
) -> BTreeMap<String, f64> {
    let b = &cfg.bounds;
    let r_len = cfg.geometry.wing_length;
    let mut out = BTreeMap::new();
    let chord = poly.bounds_violation(r_len, b.c_min, b.c_max, b.n_check).max(0.0) / (b.c_max - b.c_min);
    let area = poly.wing_area(r_len);
    let band = b.a_max - b.a_min;
    out.insert("chord_bounds".to_string(), chord);
    out.insert("area_min".to_string(), ((b.a_min - area) / band).max(0.0));
    out.insert("area_max".to_string(), ((area - b.a_max) / band).max(0.0));
    if variant.use_moment_constraint {
        let m = net_moment(poly, mass, &cfg.geometry, cfg.gravity);
        out.insert("moment".to_string(), m.abs() / reference_moment(cfg, mass));
    }
    out
}

/// Start points in `z`: the `c_max` rectangle, then seeded random shapes
/// interpolating chords drawn inside the area-compatible band.
fn start_points(cfg: &OptimizationConfig) -> Vec<Vec<f64>> {
    let b = &cfg.bounds;
    let r_len = cfg.geometry.wing_length;
    let lo = b.c_min.max(b.a_min / r_len);
    let hi = b.c_max.min(b.a_max / r_len).max(lo);
    let nodes: Vec<f64> = (0..6).map(|j| 0.5 - 0.5 * ((2 * j + 1) as f64 * std::f64::consts::PI / 12.0).cos()).collect();
    let vander = DMatrix::from_fn(6, 6, |i, k| nodes[i].powi(k as i32));
    let lu = vander.lu();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.solver.rng_seed);
    let mut starts = vec![{
        let mut z = vec![0.0; 6];
        z[0] = 1.0;
        z
    }];
    for _ in 1..cfg.solver.n_starts {
        let values = DVector::from_iterator(6, (0..6).map(|_| rng.gen_range(lo..=hi) / b.c_max));
        let z = lu.solve(&values).map(|v| v.as_slice().to_vec()).unwrap_or_else(|| vec![(lo + hi) / (2.0 * b.c_max), 0.0, 0.0, 0.0, 0.0, 0.0]);
        starts.push(z);
    }
    starts
}

struct StartOutcome {
    index: usize,
    outcome: sqp::SqpOutcome,
}

/// Runs the optimiser from explicit starting polynomials.
pub fn optimize_from(
    variant: &DesignVariant,
    cfg: &OptimizationConfig,
    mass: &MassModel<f64>,
    starts: &[ChordPolynomial<f64>],
) -> Result<OptimizationResult, OptimizerError> {
    let scaling = Scaling { wing_length: cfg.geometry.wing_length, c_max: cfg.bounds.c_max };
    let zs: Vec<Vec<f64>> = starts.iter().map(|p| scaling.from_poly(p)).collect();
    run_starts(variant, cfg, mass, &zs)
}

pub fn optimize_chord(
    variant: &DesignVariant,
    cfg: &OptimizationConfig,
    mass: &MassModel<f64>,
) -> Result<OptimizationResult, OptimizerError> {
    cfg.validate()?;
    run_starts(variant, cfg, mass, &start_points(cfg))
}

fn run_starts(
    variant: &DesignVariant,
    cfg: &OptimizationConfig,
    mass: &MassModel<f64>,
    starts: &[Vec<f64>],
) -> Result<OptimizationResult, OptimizerError> {
    cfg.validate()?;
    if variant.rectangular {
        return Err(OptimizerError::NotOptimizable);
    }
    let scaling = Scaling { wing_length: cfg.geometry.wing_length, c_max: cfg.bounds.c_max };
    let cp_ref = evaluate_objective(&rectangular_design(cfg), variant, cfg)?.abs().max(f64::MIN_POSITIVE);
    let m_ref = reference_moment(cfg, mass);

    let objective = |z: &[f64]| -> Option<f64> {
        evaluate_objective(&scaling.to_poly(z), variant, cfg).ok().map(|cp| -cp / cp_ref)
    };
    let equalities = |z: &[f64]| -> (Vec<f64>, Vec<Vec<f64>>) {
        if variant.use_moment_constraint {
            let (v, g) = moment_constraint(z, cfg, mass, m_ref);
            (vec![v], vec![g])
        } else {
            (Vec::new(), Vec::new())
        }
    };
    let (lin_a, lin_b) = linear_constraints(cfg);
    let problem = sqp::NlpProblem { objective: &objective, equalities: &equalities, lin_a, lin_b };
    let settings = sqp::SqpSettings {
        max_iter: cfg.solver.max_major_iter,
        kkt_tol: cfg.solver.kkt_tol,
        constraint_tol: cfg.solver.constraint_tol,
        fd_step: cfg.solver.fd_step,
        initial_trust: cfg.solver.initial_trust,
        max_trust: cfg.solver.max_trust,
    };

    let outcomes: Vec<StartOutcome> = starts
        .par_iter()
        .enumerate()
        .filter_map(|(index, z0)| {
            let x0 = problem.project(z0)?;
            Some(StartOutcome { index, outcome: sqp::minimize(&problem, &x0, &settings) })
        })
        .collect();

    // lowest objective wins, ties to the lowest start index
    let winner = outcomes
        .iter()
        .filter(|o| o.outcome.status != SqpStatus::Infeasible && o.outcome.violation <= settings.constraint_tol)
        .fold(None::<&StartOutcome>, |best, o| match best {
            Some(b) if b.outcome.objective <= o.outcome.objective => Some(b),
            _ => Some(o),
        })
        .ok_or(OptimizerError::Infeasible { starts: starts.len() })?;

    let poly = scaling.to_poly(&winner.outcome.x);
    let cp = evaluate_objective(&poly, variant, cfg)?;
    let history = winner.outcome.history.iter().map(|h| h.best_feasible.map(|f| -f * cp_ref)).collect();
    Ok(OptimizationResult {
        tag: variant.tag,
        poly,
        cp,
        area: poly.wing_area(cfg.geometry.wing_length),
        net_moment: net_moment(&poly, mass, &cfg.geometry, cfg.gravity),
        constraint_residuals: constraint_residuals(&poly, variant, cfg, mass),
        kkt: winner.outcome.kkt,
        major_iterations: winner.outcome.iterations,
        starts_used: starts.len(),
        winning_start: winner.index,
        status: winner.outcome.status,
        history,
    })
}
