//! Glauert blade-element momentum analysis of a single wing.
//!
//! Each element station carries a local tip-speed ratio `λ = Ω r / U`. The
//! induction factors `(a, a′)` and inflow angle `φ` are found by the relaxed
//! fixed-point iteration
//!
//! ```text
//! φ  := atan((1 − a) / (λ (1 + a′)))
//! (a, a′) := closure(φ)
//! err := |tan φ − (1 − a) / (λ (1 + a′))|
//! ```
//!
//! and the coefficient of power is `C_p = (8/λ_max²) ∫ λ³ J_λ dλ` with
//! `J = F a′ (1 − a) (1 − (C_D/C_L) · g(φ))`, `g` being `cot φ` or `atan φ`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::aero::{self, AeroError, TipLossMode};
use crate::planform::{ChordPolynomial, WingGeometry};
use crate::scalar::Real;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BemtError {
    #[error("degenerate station: local tip-speed ratio is zero")]
    DegenerateStation,
    #[error("invalid station: {0}")]
    InvalidStation(String),
    #[error("induction iteration did not converge at station {station:?} (residual {residual:e} after {iterations} iterations)")]
    NonConvergence {
        station: Option<usize>,
        residual: f64,
        iterations: usize,
        last_a: f64,
        last_a_prime: f64,
        last_phi: f64,
    },
    #[error("lift coefficient is zero; drag/lift ratio undefined")]
    ZeroLift,
    #[error(transparent)]
    Aero(#[from] AeroError),
}

impl BemtError {
    fn at_station(self, index: usize) -> Self {
        match self {
            BemtError::NonConvergence { residual, iterations, last_a, last_a_prime, last_phi, .. } => {
                BemtError::NonConvergence {
                    station: Some(index),
                    residual,
                    iterations,
                    last_a,
                    last_a_prime,
                    last_phi,
                }
            }
            other => other,
        }
    }
}

/// Far-field flow and rotor speed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowConditions<T> {
    /// `U_−∞`.
    pub u_upstream: T,
    /// `U_+∞`; carried for completeness, not used by the element model.
    pub u_downstream: T,
    pub rho: T,
    /// `Ω`.
    pub omega_rotor: T,
    pub lambda_max: T,
    pub lambda_min: T,
}

impl<T: Real> FlowConditions<T> {
    /// Sets `Ω = λ_max U / R` and `λ_min` from the innermost element station.
    pub fn for_geometry(u_upstream: T, rho: T, lambda_max: T, geom: &WingGeometry<T>) -> Self {
        let omega_rotor = lambda_max * u_upstream / geom.wing_length;
        let r0 = geom.station_radii().next().unwrap_or(geom.wing_length);
        Self {
            u_upstream,
            u_downstream: u_upstream,
            rho,
            omega_rotor,
            lambda_max,
            lambda_min: omega_rotor * r0 / u_upstream,
        }
    }

    pub fn lambda_at(&self, r: T) -> T {
        self.omega_rotor * r / self.u_upstream
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ElementStation<T> {
    pub r: T,
    pub lambda: T,
    pub chord: T,
    /// Local pitch `γ_λ`; the angle of attack is `φ − γ_λ`.
    pub twist: T,
    pub solidity: T,
}

pub fn local_solidity<T: Real>(chord: T, r: T, wing_count: u32) -> Result<T, BemtError> {
    if !(r > T::zero()) {
        return Err(BemtError::InvalidStation(format!("radius must be positive, got {r}")));
    }
    if !(chord > T::zero()) {
        return Err(BemtError::InvalidStation(format!("chord must be positive, got {chord}")));
    }
    let b = T::from_u32(wing_count).unwrap();
    Ok(b * chord / (T::TAU() * r))
}

impl<T: Real> ElementStation<T> {
    pub fn new(r: T, lambda: T, chord: T, twist: T, wing_count: u32) -> Result<Self, BemtError> {
        let solidity = local_solidity(chord, r, wing_count)?;
        Ok(Self { r, lambda, chord, twist, solidity })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InductionState<T> {
    pub a: T,
    pub a_prime: T,
    pub phi: T,
    pub residual: T,
    pub iterations: usize,
    pub converged: bool,
}

/// Update rule for `(a, a′)` given `φ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClosureMode {
    /// `a/(1−a) = σ C_n / (4F sin²φ)`, `a′/(1+a′) = σ C_t / (4F sinφ cosφ)`.
    #[default]
    Standard,
    /// `a = (C_l cosφ + C_d sinφ)/sin²φ`, `a′ = (C_l sinφ − C_d cosφ)/(λ sin²φ)`.
    Literal,
    /// `a = a′ = 0` (pure blade-element, no induction).
    None,
}

/// Sign of `a′` in the `φ` update denominator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PhiUpdate {
    /// `λ (1 + a′)`, as in the iteration listing.
    #[default]
    Algorithm,
    /// `λ (1 − a′)`, as in the inflow-angle definition.
    Eq4,
}

/// Reading of `tan⁻¹φ` inside the power integrand.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EfficiencyReading {
    /// `(tan φ)⁻¹ = cot φ`.
    #[default]
    Cot,
    /// `arctan φ`.
    Arctan,
}

/// Numerical and modelling settings shared by every station solve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BemtSettings<T> {
    pub closure: ClosureMode,
    pub phi_update: PhiUpdate,
    pub efficiency: EfficiencyReading,
    pub tip_loss_mode: TipLossMode,
    pub tol: T,
    pub max_iter: usize,
    pub relaxation: T,
}

impl<T: Real> Default for BemtSettings<T> {
    fn default() -> Self {
        Self {
            closure: ClosureMode::Standard,
            phi_update: PhiUpdate::Algorithm,
            efficiency: EfficiencyReading::Cot,
            tip_loss_mode: TipLossMode::StandardPrandtl,
            tol: T::lit(1e-10),
            max_iter: 500,
            relaxation: T::lit(0.25),
        }
    }
}

// keeps the closure denominators finite where F underflows next to the tip
const TIP_LOSS_FLOOR: f64 = 1e-9;

/// Station solver: settings plus the wing data the tip-loss factor needs.
#[derive(Debug, Clone, Copy)]
pub struct InductionSolver<T> {
    pub settings: BemtSettings<T>,
    /// `None` means `F ≡ 1`.
    pub tip_loss: Option<TipLossMode>,
    pub wing_length: T,
    pub wing_count: u32,
}

impl<T: Real> InductionSolver<T> {
    pub fn new(settings: BemtSettings<T>, tip_loss: Option<TipLossMode>, geom: &WingGeometry<T>) -> Self {
        Self { settings, tip_loss, wing_length: geom.wing_length, wing_count: geom.wing_count }
    }

    pub fn tip_loss_at(&self, station: &ElementStation<T>, phi: T) -> Result<T, BemtError> {
        match self.tip_loss {
            None => Ok(T::one()),
            Some(mode) => Ok(aero::tip_loss(station.r, self.wing_length, self.wing_count, phi, mode)?),
        }
    }

    /// Unrelaxed closure output `(a, a′, F)` at inflow angle `phi`.
    pub fn closure_update(&self, station: &ElementStation<T>, phi: T) -> Result<(T, T, T), BemtError> {
        let f = self.tip_loss_at(station, phi)?;
        let alpha = phi - station.twist;
        let (cl, cd) = (aero::flat_plate_cl(alpha), aero::flat_plate_cd(alpha));
        let (s, c) = phi.sin_cos();
        let (a, ap) = match self.settings.closure {
            ClosureMode::None => (T::zero(), T::zero()),
            ClosureMode::Literal => {
                let a = (cl * c + cd * s) / (s * s);
                let ap = (cl * s - cd * c) / (station.lambda * s * s);
                (a, ap)
            }
            ClosureMode::Standard => {
                let fe = f.max(T::lit(TIP_LOSS_FLOOR));
                let cn = cl * c + cd * s;
                let ct = cl * s - cd * c;
                let k = station.solidity * cn / (T::lit(4.0) * fe * s * s);
                let kp = station.solidity * ct / (T::lit(4.0) * fe * s * c);
                (k / (T::one() + k), kp / (T::one() - kp))
            }
        };
        Ok((a, ap, f))
    }

    fn swirl_factor(&self, ap: T) -> T {
        match self.settings.phi_update {
            PhiUpdate::Algorithm => T::one() + ap,
            PhiUpdate::Eq4 => T::one() - ap,
        }
    }

    fn consistency(&self, lambda: T, phi: T, a: T, ap: T) -> T {
        phi.tan() - (T::one() - a) / (lambda * self.swirl_factor(ap))
    }

    /// Scalar residual `tan φ − (1 − a(φ)) / (λ (1 ± a′(φ)))` with `(a, a′)`
    /// taken from the closure at the same `φ`. Its roots are the fixed points.
    pub fn residual_at(&self, station: &ElementStation<T>, phi: T) -> T {
        match self.closure_update(station, phi) {
            Ok((a, ap, _)) => self.consistency(station.lambda, phi, a, ap),
            Err(_) => T::nan(),
        }
    }

    /// Relaxed fixed-point solve, optionally warm-started from `(a, a′)`.
    pub fn solve(&self, station: &ElementStation<T>, warm: Option<(T, T)>) -> Result<InductionState<T>, BemtError> {
        let lambda = station.lambda;
        if lambda == T::zero() {
            return Err(BemtError::DegenerateStation);
        }
        if !(lambda > T::zero()) || !(station.r > T::zero()) || !(station.solidity > T::zero()) {
            return Err(BemtError::InvalidStation(format!(
                "need r > 0, lambda > 0, solidity > 0 (r = {}, lambda = {}, solidity = {})",
                station.r, lambda, station.solidity
            )));
        }
        let tol = self.settings.tol;
        let relax = self.settings.relaxation;
        let (mut a, mut ap) = warm.unwrap_or((T::zero(), T::zero()));
        let mut phi = T::zero();
        let mut residual = T::infinity();
        let mut iterations = 0;

        for it in 1..=self.settings.max_iter.max(1) {
            iterations = it;
            phi = ((T::one() - a) / (lambda * self.swirl_factor(ap))).atan();
            let Ok((a_new, ap_new, _)) = self.closure_update(station, phi) else { break };
            if !a_new.is_finite() || !ap_new.is_finite() {
                break;
            }
            a = a + relax * (a_new - a);
            ap = ap + relax * (ap_new - ap);
            residual = self.consistency(lambda, phi, a, ap).abs();
            if residual <= tol {
                let state = InductionState { a, a_prime: ap, phi, residual, iterations, converged: true };
                return Ok(self.polish(station, state));
            }
        }

        if let Some(state) = self.bracketed(station, iterations) {
            return Ok(state);
        }
        Err(BemtError::NonConvergence {
            station: None,
            residual: residual.to_f64().unwrap_or(f64::NAN),
            iterations,
            last_a: a.to_f64().unwrap_or(f64::NAN),
            last_a_prime: ap.to_f64().unwrap_or(f64::NAN),
            last_phi: phi.to_f64().unwrap_or(f64::NAN),
        })
    }

    /// A few Newton steps on the scalar residual. Leaves `(a, a′)` exactly on
    /// the closure at the returned `φ`, so station results vary smoothly with
    /// the inputs (finite-difference gradients rely on that).
    fn polish(&self, station: &ElementStation<T>, state: InductionState<T>) -> InductionState<T> {
        let mut phi = state.phi;
        let mut g = self.residual_at(station, phi);
        if !g.is_finite() {
            return state;
        }
        let h = T::lit(1e-7);
        for _ in 0..4 {
            if g.abs() < T::epsilon() {
                break;
            }
            let dg = (self.residual_at(station, phi + h) - self.residual_at(station, phi - h)) / (h + h);
            if !(dg.abs() > T::zero()) || !dg.is_finite() {
                break;
            }
            let step = g / dg;
            if step.abs() > T::lit(1e-3) {
                break;
            }
            let g_next = self.residual_at(station, phi - step);
            if !(g_next.abs() < g.abs()) {
                break;
            }
            phi = phi - step;
            g = g_next;
        }
        match self.closure_update(station, phi) {
            Ok((a, ap, _)) => {
                let residual = self.consistency(station.lambda, phi, a, ap).abs();
                if residual <= state.residual.max(self.settings.tol) {
                    InductionState { a, a_prime: ap, phi, residual, ..state }
                } else {
                    state
                }
            }
            Err(_) => state,
        }
    }

    /// Fallback: scan the scalar residual for sign changes in `(0, π/2)`,
    /// bisect each, and keep the root nearest the undisturbed inflow angle
    /// `atan(1/λ)`.
    fn bracketed(&self, station: &ElementStation<T>, iterations: usize) -> Option<InductionState<T>> {
        const SCAN: usize = 400;
        let lo = T::lit(1e-6);
        let hi = T::FRAC_PI_2() - T::lit(1e-6);
        let at = |i: usize| lo + (hi - lo) * T::from_usize_lossy(i) / T::from_usize_lossy(SCAN);
        let target = (T::one() / station.lambda).atan();
        let mut best: Option<InductionState<T>> = None;
        let mut extra = 0;
        let mut prev = (at(0), self.residual_at(station, at(0)));
        for i in 1..=SCAN {
            let x = at(i);
            let gx = self.residual_at(station, x);
            let (x0, g0) = prev;
            prev = (x, gx);
            if !(g0.is_finite() && gx.is_finite()) || g0.signum() == gx.signum() {
                continue;
            }
            let (mut left, mut right, mut g_left) = (x0, x, g0);
            for _ in 0..200 {
                if right - left <= T::epsilon() * right.abs() {
                    break;
                }
                let mid = (left + right) / T::lit(2.0);
                let gm = self.residual_at(station, mid);
                if !gm.is_finite() {
                    break;
                }
                if gm.signum() == g_left.signum() {
                    left = mid;
                    g_left = gm;
                } else {
                    right = mid;
                }
                extra += 1;
            }
            let phi = (left + right) / T::lit(2.0);
            let Ok((a, ap, _)) = self.closure_update(station, phi) else { continue };
            let residual = self.consistency(station.lambda, phi, a, ap).abs();
            let closer = best.map_or(true, |b| (phi - target).abs() < (b.phi - target).abs());
            if residual <= self.settings.tol && closer {
                best = Some(InductionState { a, a_prime: ap, phi, residual, iterations: 0, converged: true });
            }
        }
        best.map(|s| InductionState { iterations: iterations + extra, ..s })
    }
}

/// Convenience wrapper: cold-started solve.
pub fn solve_induction<T: Real>(
    station: &ElementStation<T>,
    closure: ClosureMode,
    tip_loss: Option<TipLossMode>,
    wing_length: T,
    tol: T,
    max_iter: usize,
) -> Result<InductionState<T>, BemtError> {
    let settings = BemtSettings { closure, tol, max_iter, ..BemtSettings::default() };
    InductionSolver { settings, tip_loss, wing_length, wing_count: 1 }.solve(station, None)
}

pub fn relative_speed<T: Real>(u_disc: T, phi: T) -> Result<T, BemtError> {
    let s = phi.sin();
    if !(s > T::zero()) {
        return Err(AeroError::NonPositiveSinPhi(phi.to_f64().unwrap_or(f64::NAN)).into());
    }
    Ok(u_disc / s)
}

/// Elementary lift and drag `(dL, dD)` from `C·½ρU²c·dr`.
pub fn element_forces<T: Real>(alpha: T, u_rel: T, rho: T, chord: T, dr: T) -> (T, T) {
    let q = T::lit(0.5) * rho * u_rel * u_rel * chord * dr;
    (aero::flat_plate_cl(alpha) * q, aero::flat_plate_cd(alpha) * q)
}

/// Lift and drag on one element at a solved state; `U_0 = (1 − a) U_−∞`.
pub fn element_lift_drag<T: Real>(
    station: &ElementStation<T>,
    state: &InductionState<T>,
    flow: &FlowConditions<T>,
    dr: T,
) -> Result<(T, T), BemtError> {
    let u_disc = (T::one() - state.a) * flow.u_upstream;
    let u_rel = relative_speed(u_disc, state.phi)?;
    Ok(element_forces(state.phi - station.twist, u_rel, flow.rho, station.chord, dr))
}

/// `J = F a′ (1 − a) (1 − (C_D/C_L)(φ − γ) · g(φ))`.
pub fn cp_integrand<T: Real>(
    station: &ElementStation<T>,
    state: &InductionState<T>,
    tip_loss_value: T,
    reading: EfficiencyReading,
) -> Result<T, BemtError> {
    let alpha = state.phi - station.twist;
    let cl = aero::flat_plate_cl(alpha);
    if cl == T::zero() {
        return Err(BemtError::ZeroLift);
    }
    let ratio = aero::flat_plate_cd(alpha) / cl;
    let g = match reading {
        EfficiencyReading::Cot => T::one() / state.phi.tan(),
        EfficiencyReading::Arctan => state.phi.atan(),
    };
    Ok(tip_loss_value * state.a_prime * (T::one() - state.a) * (T::one() - ratio * g))
}

/// Per-station breakdown of a power evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerEvaluation<T> {
    pub cp: T,
    pub lambda_min: T,
    pub lambda_max: T,
    pub lambdas: Vec<T>,
    /// `λ³ J_λ` at each station.
    pub integrand: Vec<T>,
    pub states: Vec<InductionState<T>>,
}

fn trapezoid<T: Real>(x: &[T], y: &[T]) -> T {
    x.windows(2)
        .zip(y.windows(2))
        .map(|(xs, ys)| (xs[1] - xs[0]) * (ys[0] + ys[1]) / T::lit(2.0))
        .fold(T::zero(), |a, b| a + b)
}

/// Solves every element station and integrates the power coefficient.
pub fn power_distribution<T: Real>(
    poly: &ChordPolynomial<T>,
    geom: &WingGeometry<T>,
    flow: &FlowConditions<T>,
    settings: &BemtSettings<T>,
    use_tip_loss: bool,
) -> Result<PowerEvaluation<T>, BemtError> {
    if geom.n_elements < 2 {
        return Err(BemtError::InvalidStation("at least two elements are required".into()));
    }
    let solver = InductionSolver::new(*settings, use_tip_loss.then_some(settings.tip_loss_mode), geom);
    let lambda_max = flow.lambda_max;
    let n = geom.n_elements;
    let mut lambdas = Vec::with_capacity(n);
    let mut integrand = Vec::with_capacity(n);
    let mut states = Vec::with_capacity(n);
    let mut warm = None;

    for (i, r) in geom.station_radii().enumerate() {
        let lambda = lambda_max * r / geom.wing_length;
        let chord = poly.chord_at(r);
        let station = ElementStation::new(r, lambda, chord, geom.pitch, geom.wing_count)
            .map_err(|e| BemtError::InvalidStation(format!("station {i}: {e}")))?;
        let state = solver.solve(&station, warm).map_err(|e| e.at_station(i))?;
        warm = Some((state.a, state.a_prime));
        let f = solver.tip_loss_at(&station, state.phi)?;
        let j = cp_integrand(&station, &state, f, settings.efficiency)?;
        lambdas.push(lambda);
        integrand.push(lambda * lambda * lambda * j);
        states.push(state);
    }

    let cp = T::lit(8.0) / (lambda_max * lambda_max) * trapezoid(&lambdas, &integrand);
    Ok(PowerEvaluation { cp, lambda_min: lambdas[0], lambda_max, lambdas, integrand, states })
}

pub fn coefficient_of_power<T: Real>(
    poly: &ChordPolynomial<T>,
    geom: &WingGeometry<T>,
    flow: &FlowConditions<T>,
    settings: &BemtSettings<T>,
    use_tip_loss: bool,
) -> Result<T, BemtError> {
    power_distribution(poly, geom, flow, settings, use_tip_loss).map(|p| p.cp)
}
