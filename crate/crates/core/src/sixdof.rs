//! Euler-angle rigid-body simulation of the descending pod.
//!
//! Frames: the earth frame has gravity along `+z`; `R = R_z(ψ) R_y(θ) R_x(φ)`
//! maps earth-frame vectors into the body frame, so body-frame gravity is
//! `R·(0, 0, mg)` and `ṗ = Rᵀ v`. Positions are reported with `p_z` as altitude
//! (starting at `z0`, decreasing during descent).
//!
//! Aerodynamic loads come from a spanwise element sum driven only by the body
//! normal velocity `v_z` and spin rate `ω_z`:
//!
//! ```text
//! v_res² = v_z² + (r ω_z)²,  φ_e = atan2(−v_z, r|ω_z|),  α_eff = α_set − φ_e
//! F_z = Σ ½ρ (c_l + c_d) v_res² c dr        (acts along −z_b)
//! M_z = Σ ½ρ (c_d − c_l) v_res² c r dr
//! M_x = Σ ½ρ c_m v_res² c r² dr
//! ```

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::aero::{self, CmModel};
use crate::linalg::{Mat3, Vec3};
use crate::planform::{ChordPolynomial, MassProperties, WingGeometry};
use crate::scalar::Real;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SixDofError {
    #[error("pitch angle {theta} rad is within the gimbal guard of ±π/2 at t = {t} s")]
    GimbalProximity { t: f64, theta: f64 },
    #[error("state became non-finite at t = {t} s")]
    NonFiniteState { t: f64 },
    #[error("averaging window {window} s is not shorter than the trajectory span {span} s")]
    WindowTooLong { window: f64, span: f64 },
    #[error("inertia tensor is singular or mass is not positive")]
    SingularMassProperties,
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RigidBodyState<T> {
    pub p: Vec3<T>,
    /// `(φ, θ, ψ)`: roll, pitch, yaw.
    pub euler: Vec3<T>,
    pub v: Vec3<T>,
    pub w: Vec3<T>,
}

impl<T: Real> RigidBodyState<T> {
    pub fn is_finite(&self) -> bool {
        self.p.is_finite() && self.euler.is_finite() && self.v.is_finite() && self.w.is_finite()
    }

    fn axpy(&self, h: T, d: &Self) -> Self {
        Self {
            p: self.p + d.p.scale(h),
            euler: self.euler + d.euler.scale(h),
            v: self.v + d.v.scale(h),
            w: self.w + d.w.scale(h),
        }
    }
}

/// How element lift and drag become the body normal force and spin moment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ForceMode {
    /// Magnitudes summed literally: `c_l + c_d` for force, `c_d − c_l` for moment.
    #[default]
    Literal,
    /// Lift normal and drag parallel to the element relative wind.
    Resolved,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimConfig<T> {
    pub dt: T,
    pub duration: T,
    pub rho: T,
    pub g: T,
    pub alpha_set: T,
    pub init_euler: Vec3<T>,
    pub init_v: Vec3<T>,
    pub init_w: Vec3<T>,
    pub z0: T,
    /// Added to every force and moment component while `t < epsilon_until`.
    pub epsilon_init: T,
    pub epsilon_until: T,
    pub gimbal_margin: T,
    pub aero_enabled: bool,
    pub force_mode: ForceMode,
    pub cm_model: CmModel<T>,
    /// Trailing window for steady-state metrics, s.
    pub steady_window: T,
    /// Test hook: replaces `α_eff` at every element.
    #[serde(skip)]
    pub pinned_alpha: Option<T>,
}

impl<T: Real> Default for SimConfig<T> {
    fn default() -> Self {
        Self {
            dt: T::lit(1e-3),
            duration: T::lit(20.0),
            rho: T::lit(1.225),
            g: T::lit(9.81),
            alpha_set: T::lit(-0.15708),
            init_euler: Vec3::new(T::zero(), T::FRAC_PI_3(), T::zero()),
            init_v: Vec3::zeros(),
            init_w: Vec3::zeros(),
            z0: T::lit(600.0),
            epsilon_init: T::lit(1e-12),
            epsilon_until: T::lit(1e-3),
            gimbal_margin: T::lit(0.01),
            aero_enabled: true,
            force_mode: ForceMode::Literal,
            cm_model: CmModel::Zero,
            steady_window: T::lit(5.0),
            pinned_alpha: None,
        }
    }
}

impl<T: Real> SimConfig<T> {
    pub fn validate(&self) -> Result<(), SixDofError> {
        let bad = |m: &str| Err(SixDofError::InvalidConfig(m.to_string()));
        if !(self.dt > T::zero()) || !self.dt.is_finite() {
            return bad("dt must be positive and finite");
        }
        if !(self.duration >= T::zero()) || !self.duration.is_finite() {
            return bad("duration must be non-negative and finite");
        }
        if !(self.rho >= T::zero()) || !self.g.is_finite() || !self.alpha_set.is_finite() {
            return bad("rho must be non-negative; g and alpha_set finite");
        }
        if !(self.init_euler.is_finite() && self.init_v.is_finite() && self.init_w.is_finite() && self.z0.is_finite()) {
            return bad("initial state must be finite");
        }
        Ok(())
    }

    pub fn initial_state(&self) -> RigidBodyState<T> {
        RigidBodyState {
            p: Vec3::new(T::zero(), T::zero(), self.z0),
            euler: self.init_euler,
            v: self.init_v,
            w: self.init_w,
        }
    }

    pub fn steps(&self) -> usize {
        (self.duration / self.dt).round().to_usize().unwrap_or(0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ForceMoment<T> {
    pub force: Vec3<T>,
    pub moment: Vec3<T>,
}

/// Element grid of a wing as seen by the load model.
#[derive(Debug, Clone, PartialEq)]
pub struct WingModel<T> {
    pub radii: Vec<T>,
    pub chords: Vec<T>,
    pub dr: T,
}

impl<T: Real> WingModel<T> {
    pub fn new(poly: &ChordPolynomial<T>, geom: &WingGeometry<T>) -> Self {
        let radii: Vec<T> = geom.station_radii().collect();
        let chords = radii.iter().map(|&r| poly.chord_at(r)).collect();
        Self { radii, chords, dr: geom.element_width() }
    }
}

pub fn rotation_matrix<T: Real>(euler: &Vec3<T>) -> Mat3<T> {
    let (sp, cp) = euler[0].sin_cos();
    let (st, ct) = euler[1].sin_cos();
    let (ss, cs) = euler[2].sin_cos();
    let (o, l) = (T::zero(), T::one());
    let rx = Mat3::from_rows([[l, o, o], [o, cp, -sp], [o, sp, cp]]);
    let ry = Mat3::from_rows([[ct, o, st], [o, l, o], [-st, o, ct]]);
    let rz = Mat3::from_rows([[cs, -ss, o], [ss, cs, o], [o, o, l]]);
    rz * ry * rx
}

pub fn gravity_body<T: Real>(euler: &Vec3<T>, mass: T, g: T) -> Vec3<T> {
    rotation_matrix(euler) * Vec3::new(T::zero(), T::zero(), mass * g)
}

struct ElementLoads<T> {
    normal_force: T,
    moment: Vec3<T>,
}

fn element_loads<T: Real>(state: &RigidBodyState<T>, wing: &WingModel<T>, cfg: &SimConfig<T>) -> ElementLoads<T> {
    let vz = state.v[2];
    let wz = state.w[2];
    let half_rho = T::lit(0.5) * cfg.rho;
    let spin_sign = if wz < T::zero() { -T::one() } else { T::one() };
    let (mut fz, mut mx, mut mz) = (T::zero(), T::zero(), T::zero());
    for (&r, &c) in wing.radii.iter().zip(&wing.chords) {
        let tangential = r * wz;
        let v2 = vz * vz + tangential * tangential;
        if v2 == T::zero() {
            continue;
        }
        let phi_e = (-vz).atan2(tangential.abs());
        let alpha = cfg.pinned_alpha.unwrap_or(cfg.alpha_set - phi_e);
        let coeff = aero::coefficients(alpha, &cfg.cm_model);
        let q = half_rho * v2 * c * wing.dr;
        match cfg.force_mode {
            ForceMode::Literal => {
                fz = fz + (coeff.cl + coeff.cd) * q;
                mz = mz + (coeff.cd - coeff.cl) * q * r;
            }
            ForceMode::Resolved => {
                // inflow angle of the relative wind above the rotor plane
                let beta = -phi_e;
                let (sb, cb) = beta.sin_cos();
                fz = fz + (coeff.cl * cb + coeff.cd * sb) * q;
                mz = mz + spin_sign * (coeff.cl * sb - coeff.cd * cb) * q * r;
            }
        }
        mx = mx + coeff.cm * q * r * r;
    }
    ElementLoads { normal_force: fz, moment: Vec3::new(mx, T::zero(), mz) }
}

/// Normal aerodynamic force magnitude (positive opposes `+z_b`).
pub fn element_vertical_force<T: Real>(state: &RigidBodyState<T>, wing: &WingModel<T>, cfg: &SimConfig<T>) -> T {
    element_loads(state, wing, cfg).normal_force
}

pub fn element_moments<T: Real>(state: &RigidBodyState<T>, wing: &WingModel<T>, cfg: &SimConfig<T>) -> Vec3<T> {
    element_loads(state, wing, cfg).moment
}

/// Gravity plus aerodynamic loads in body axes, with the start-up floor.
pub fn loads<T: Real>(
    state: &RigidBodyState<T>,
    wing: &WingModel<T>,
    props: &MassProperties<T>,
    cfg: &SimConfig<T>,
    t: T,
) -> ForceMoment<T> {
    let mut force = gravity_body(&state.euler, props.mass, cfg.g);
    let mut moment = Vec3::zeros();
    if cfg.aero_enabled {
        let el = element_loads(state, wing, cfg);
        force[2] = force[2] - el.normal_force;
        moment = el.moment;
    }
    if t < cfg.epsilon_until {
        let eps = Vec3::new(cfg.epsilon_init, cfg.epsilon_init, cfg.epsilon_init);
        force += eps;
        moment += eps;
    }
    ForceMoment { force, moment }
}

pub fn derivatives<T: Real>(
    state: &RigidBodyState<T>,
    fm: &ForceMoment<T>,
    props: &MassProperties<T>,
    cfg: &SimConfig<T>,
) -> Result<RigidBodyState<T>, SixDofError> {
    if !(props.mass > T::zero()) {
        return Err(SixDofError::SingularMassProperties);
    }
    let inv = props.inertia.inverse().ok_or(SixDofError::SingularMassProperties)?;
    derivatives_with(state, fm, props.mass, &props.inertia, &inv, cfg)
}

fn derivatives_with<T: Real>(
    state: &RigidBodyState<T>,
    fm: &ForceMoment<T>,
    mass: T,
    inertia: &Mat3<T>,
    inertia_inv: &Mat3<T>,
    cfg: &SimConfig<T>,
) -> Result<RigidBodyState<T>, SixDofError> {
    let (phi, theta, psi) = (state.euler[0], state.euler[1], state.euler[2]);
    if theta.abs() > T::FRAC_PI_2() - cfg.gimbal_margin {
        return Err(SixDofError::GimbalProximity { t: f64::NAN, theta: theta.to_f64().unwrap_or(f64::NAN) });
    }
    let w = state.w;
    let v_dot = fm.force.scale(T::one() / mass) - w.cross(&state.v);
    let w_dot = *inertia_inv * (fm.moment - w.cross(&(*inertia * w)));

    let earth_v = rotation_matrix(&state.euler).transpose() * state.v;
    let p_dot = Vec3::new(earth_v[0], earth_v[1], -earth_v[2]);

    // ω = −(φ̇ R_z R_y e_x + θ̇ R_z e_y + ψ̇ e_z), inverted
    let _ = phi;
    let (st, ct) = theta.sin_cos();
    let (ss, cs) = psi.sin_cos();
    let roll_rate = -(cs * w[0] + ss * w[1]) / ct;
    let pitch_rate = ss * w[0] - cs * w[1];
    let yaw_rate = -w[2] + st * roll_rate;

    Ok(RigidBodyState { p: p_dot, euler: Vec3::new(roll_rate, pitch_rate, yaw_rate), v: v_dot, w: w_dot })
}

/// Everything a fixed-step integration needs, with the inertia inverse cached.
pub struct Integrator<'a, T> {
    pub wing: &'a WingModel<T>,
    pub props: &'a MassProperties<T>,
    pub cfg: &'a SimConfig<T>,
    inertia_inv: Mat3<T>,
}

impl<'a, T: Real> Integrator<'a, T> {
    pub fn new(wing: &'a WingModel<T>, props: &'a MassProperties<T>, cfg: &'a SimConfig<T>) -> Result<Self, SixDofError> {
        if !(props.mass > T::zero()) {
            return Err(SixDofError::SingularMassProperties);
        }
        let inertia_inv = props.inertia.inverse().ok_or(SixDofError::SingularMassProperties)?;
        Ok(Self { wing, props, cfg, inertia_inv })
    }

    fn rate(&self, state: &RigidBodyState<T>, t: T) -> Result<RigidBodyState<T>, SixDofError> {
        let fm = loads(state, self.wing, self.props, self.cfg, t);
        derivatives_with(state, &fm, self.props.mass, &self.props.inertia, &self.inertia_inv, self.cfg).map_err(|e| match e {
            SixDofError::GimbalProximity { theta, .. } => {
                SixDofError::GimbalProximity { t: t.to_f64().unwrap_or(f64::NAN), theta }
            }
            other => other,
        })
    }

    /// One classical RK4 step of size `cfg.dt` starting at time `t`.
    pub fn step(&self, state: &RigidBodyState<T>, t: T) -> Result<RigidBodyState<T>, SixDofError> {
        let h = self.cfg.dt;
        let half = h / T::lit(2.0);
        let k1 = self.rate(state, t)?;
        let k2 = self.rate(&state.axpy(half, &k1), t + half)?;
        let k3 = self.rate(&state.axpy(half, &k2), t + half)?;
        let k4 = self.rate(&state.axpy(h, &k3), t + h)?;
        let sixth = h / T::lit(6.0);
        let two = T::lit(2.0);
        let combined = RigidBodyState {
            p: k1.p + (k2.p + k3.p).scale(two) + k4.p,
            euler: k1.euler + (k2.euler + k3.euler).scale(two) + k4.euler,
            v: k1.v + (k2.v + k3.v).scale(two) + k4.v,
            w: k1.w + (k2.w + k3.w).scale(two) + k4.w,
        };
        let next = state.axpy(sixth, &combined);
        if !next.is_finite() {
            return Err(SixDofError::NonFiniteState { t: (t + h).to_f64().unwrap_or(f64::NAN) });
        }
        Ok(next)
    }
}

pub fn step<T: Real>(
    state: &RigidBodyState<T>,
    wing: &WingModel<T>,
    props: &MassProperties<T>,
    cfg: &SimConfig<T>,
    t: T,
) -> Result<RigidBodyState<T>, SixDofError> {
    Integrator::new(wing, props, cfg)?.step(state, t)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Real + Deserialize<'de>"))]
pub struct TrajectoryMeta<T> {
    pub config: SimConfig<T>,
    /// Free-form identifier of the simulated design (variant tag or file).
    pub design: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<T> {
    pub times: Vec<T>,
    pub states: Vec<RigidBodyState<T>>,
    pub meta: TrajectoryMeta<T>,
}

impl<T: Real> Trajectory<T> {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> Option<(T, &RigidBodyState<T>)> {
        self.times.last().copied().zip(self.states.last())
    }
}

/// Failed run: the error plus every sample integrated before it.
#[derive(Debug, Clone, Error)]
#[error("{error}")]
pub struct SimAbort<T: Real> {
    pub error: SixDofError,
    pub partial: Trajectory<T>,
}

pub fn simulate<T: Real>(
    wing: &WingModel<T>,
    props: &MassProperties<T>,
    cfg: &SimConfig<T>,
    design: &str,
) -> Result<Trajectory<T>, SimAbort<T>> {
    let meta = TrajectoryMeta { config: *cfg, design: design.to_string() };
    let mut traj = Trajectory { times: Vec::new(), states: Vec::new(), meta };
    if let Err(error) = cfg.validate() {
        return Err(SimAbort { error, partial: traj });
    }
    let integ = match Integrator::new(wing, props, cfg) {
        Ok(i) => i,
        Err(error) => return Err(SimAbort { error, partial: traj }),
    };
    let n = cfg.steps();
    traj.times.reserve(n + 1);
    traj.states.reserve(n + 1);
    let mut state = cfg.initial_state();
    traj.times.push(T::zero());
    traj.states.push(state);
    for i in 0..n {
        let t = cfg.dt * T::from_usize_lossy(i);
        match integ.step(&state, t) {
            Ok(next) => state = next,
            Err(error) => return Err(SimAbort { error, partial: traj }),
        }
        traj.times.push(cfg.dt * T::from_usize_lossy(i + 1));
        traj.states.push(state);
    }
    Ok(traj)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SteadyStateMetrics<T> {
    pub window: T,
    pub v_z: T,
    pub v_x: T,
    pub v_y: T,
    pub omega_z: T,
    pub roll: T,
    pub pitch: T,
    pub stabilized: bool,
    /// Largest `|dv_z/dt|` seen inside the window.
    pub max_accel: T,
}

/// Threshold on `|dv_z/dt|` for a settled descent, m/s².
pub const STABLE_ACCEL: f64 = 0.01;

fn accel_at<T: Real>(traj: &Trajectory<T>, i: usize) -> T {
    (traj.states[i + 1].v[2] - traj.states[i].v[2]) / (traj.times[i + 1] - traj.times[i])
}

fn window_start<T: Real>(traj: &Trajectory<T>, window: T) -> Result<usize, SixDofError> {
    let span = match (traj.times.first(), traj.times.last()) {
        (Some(&a), Some(&b)) => b - a,
        _ => T::zero(),
    };
    if !(window < span) || !(window > T::zero()) {
        return Err(SixDofError::WindowTooLong {
            window: window.to_f64().unwrap_or(f64::NAN),
            span: span.to_f64().unwrap_or(f64::NAN),
        });
    }
    let t_end = *traj.times.last().unwrap();
    Ok(traj.times.iter().position(|&t| t >= t_end - window).unwrap_or(0))
}

pub fn steady_state_metrics<T: Real>(traj: &Trajectory<T>, window: T) -> Result<SteadyStateMetrics<T>, SixDofError> {
    let start = window_start(traj, window)?;
    let slice = &traj.states[start..];
    let n = T::from_usize_lossy(slice.len());
    let mean = |f: &dyn Fn(&RigidBodyState<T>) -> T| slice.iter().map(f).fold(T::zero(), |a, b| a + b) / n;
    let max_accel = (start..traj.len() - 1).map(|i| accel_at(traj, i).abs()).fold(T::zero(), T::max);
    Ok(SteadyStateMetrics {
        window,
        v_z: mean(&|s| s.v[2]),
        v_x: mean(&|s| s.v[0]),
        v_y: mean(&|s| s.v[1]),
        omega_z: mean(&|s| s.w[2]),
        roll: mean(&|s| s.euler[0]),
        pitch: mean(&|s| s.euler[1]),
        stabilized: max_accel < T::lit(STABLE_ACCEL),
        max_accel,
    })
}

/// Earliest time after which `|dv_z/dt|` stays below the settling threshold,
/// or `None` if it is exceeded on the final interval.
pub fn settle_time<T: Real>(traj: &Trajectory<T>) -> Option<T> {
    let n = traj.len();
    if n < 2 {
        return None;
    }
    let limit = T::lit(STABLE_ACCEL);
    let mut first_ok = None;
    for i in (0..n - 1).rev() {
        if accel_at(traj, i).abs() < limit {
            first_ok = Some(i);
        } else {
            break;
        }
    }
    first_ok.map(|i| traj.times[i])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyAudit<T> {
    /// Mean `m g_z,b v_z` over the window, W.
    pub gravity_power: T,
    /// Mean `F_z v_z` absorbed by the aerodynamic normal force, W.
    pub aero_power: T,
    pub relative_mismatch: T,
}

/// Compares gravitational power input along the body normal with the power
/// absorbed by the aerodynamic normal force over the trailing window.
pub fn energy_audit<T: Real>(
    traj: &Trajectory<T>,
    wing: &WingModel<T>,
    props: &MassProperties<T>,
    window: T,
) -> Result<EnergyAudit<T>, SixDofError> {
    let start = window_start(traj, window)?;
    let cfg = &traj.meta.config;
    let (mut grav, mut aero) = (T::zero(), T::zero());
    for s in &traj.states[start..] {
        let gz = gravity_body(&s.euler, props.mass, cfg.g)[2];
        grav = grav + gz * s.v[2];
        aero = aero + element_vertical_force(s, wing, cfg) * s.v[2];
    }
    let n = T::from_usize_lossy(traj.len() - start);
    let (gravity_power, aero_power) = (grav / n, aero / n);
    let relative_mismatch = (gravity_power - aero_power).abs() / gravity_power.abs().max(T::min_positive_value());
    Ok(EnergyAudit { gravity_power, aero_power, relative_mismatch })
}

#[cfg(test)]
mod tests {
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, FRAC_PI_4};

    use super::*;
    use crate::planform::{mass_properties, MassModel};

    fn wing(n: usize) -> WingModel<f64> {
        let geom = WingGeometry { n_elements: n, ..WingGeometry::default() };
        WingModel::new(&ChordPolynomial::constant(0.03), &geom)
    }

    fn props() -> MassProperties<f64> {
        let geom = WingGeometry { n_elements: 200, ..WingGeometry::default() };
        mass_properties(&ChordPolynomial::constant(0.03), &MassModel::default(), &geom)
    }

    #[test]
    fn rotation_identity_and_pitch_quarter_turn() {
        assert_eq!(rotation_matrix(&Vec3::<f64>::zeros()), Mat3::identity());
        let r = rotation_matrix(&Vec3::new(0.0, FRAC_PI_2, 0.0));
        let mapped = r * Vec3::new(1.0, 0.0, 0.0);
        assert!((mapped - Vec3::new(0.0, 0.0, -1.0)).max_abs() < 1e-15);
    }

    #[test]
    fn gravity_body_values() {
        let g = gravity_body(&Vec3::zeros(), 0.1232, 9.81);
        assert!((g - Vec3::new(0.0, 0.0, 1.208592)).max_abs() < 1e-12);
        let g = gravity_body(&Vec3::new(0.0, FRAC_PI_2, 0.0), 0.1232, 9.81);
        assert!((g - Vec3::new(1.208592, 0.0, 0.0)).max_abs() < 1e-12);
        assert_eq!(gravity_body(&Vec3::new(0.3, 0.2, 0.1), 0.0, 9.81).max_abs(), 0.0);
    }

    #[test]
    fn rest_state_has_no_aero_loads() {
        let s = RigidBodyState::default();
        let cfg = SimConfig::default();
        assert_eq!(element_vertical_force(&s, &wing(100), &cfg), 0.0);
        assert_eq!(element_moments(&s, &wing(100), &cfg), Vec3::zeros());
    }

    #[test]
    fn force_is_linear_in_density() {
        let s = RigidBodyState { v: Vec3::new(0.0, 0.0, 5.0), w: Vec3::new(0.0, 0.0, 20.0), ..Default::default() };
        let cfg = SimConfig::default();
        let doubled = SimConfig { rho: 2.0 * cfg.rho, ..cfg };
        let f1 = element_vertical_force(&s, &wing(100), &cfg);
        let f2 = element_vertical_force(&s, &wing(100), &doubled);
        assert!((f2 - 2.0 * f1).abs() < 1e-15);
    }

    #[test]
    fn zero_cm_model_gives_no_roll_moment() {
        let s = RigidBodyState { v: Vec3::new(0.0, 0.0, 5.0), w: Vec3::new(0.0, 0.0, 20.0), ..Default::default() };
        assert_eq!(element_moments(&s, &wing(100), &SimConfig::default())[0], 0.0);
    }

    #[test]
    fn equal_lift_and_drag_cancel_spin_moment() {
        let s = RigidBodyState { v: Vec3::new(0.0, 0.0, 5.0), w: Vec3::new(0.0, 0.0, 20.0), ..Default::default() };
        let cfg = SimConfig { pinned_alpha: Some(FRAC_PI_4), ..SimConfig::default() };
        assert!(element_moments(&s, &wing(100), &cfg)[2].abs() < 1e-16);
    }

    #[test]
    fn free_fall_acceleration() {
        let p = props();
        let cfg = SimConfig::default();
        let state = RigidBodyState::default();
        let fm = ForceMoment { force: Vec3::new(0.0, 0.0, p.mass * 9.81), moment: Vec3::zeros() };
        let d = derivatives(&state, &fm, &p, &cfg).unwrap();
        assert!((d.v - Vec3::new(0.0, 0.0, 9.81)).max_abs() < 1e-14);
        assert_eq!(d.w, Vec3::zeros());
    }

    #[test]
    fn coriolis_term_isolated() {
        let p = props();
        let state = RigidBodyState { v: Vec3::new(2.0, 0.0, 0.0), w: Vec3::new(0.0, 0.0, 3.0), ..Default::default() };
        let d = derivatives(&state, &ForceMoment::default(), &p, &SimConfig::default()).unwrap();
        assert_eq!(d.v, -state.w.cross(&state.v));
        assert_eq!(d.v, Vec3::new(0.0, -6.0, 0.0));
    }

    #[test]
    fn torque_free_principal_spin() {
        let props = MassProperties {
            mass: 1.0,
            inertia: Mat3::from_rows([[1.0, 0.0, 0.0], [0.0, 2.0, 0.0], [0.0, 0.0, 3.0]]),
            cg: Vec3::zeros(),
        };
        let state = RigidBodyState { w: Vec3::new(0.0, 0.0, 7.0), ..Default::default() };
        let d = derivatives(&state, &ForceMoment::default(), &props, &SimConfig::default()).unwrap();
        assert_eq!(d.w, Vec3::zeros());
    }

    #[test]
    fn gimbal_guard_trips() {
        let state = RigidBodyState { euler: Vec3::new(0.0, FRAC_PI_2 - 0.005, 0.0), ..Default::default() };
        let err = derivatives(&state, &ForceMoment::default(), &props(), &SimConfig::default()).unwrap_err();
        assert!(matches!(err, SixDofError::GimbalProximity { .. }));
    }

    #[test]
    fn euler_rates_match_rotation_derivative() {
        // R(t + h) ≈ (I − h[ω]×) R(t) for the rates returned by derivatives
        let euler = Vec3::new(0.3, -0.4, 1.1);
        let w = Vec3::new(0.7, -1.3, 2.1);
        let state = RigidBodyState { euler, w, ..Default::default() };
        let d = derivatives(&state, &ForceMoment::default(), &props(), &SimConfig::default()).unwrap();
        let h = 1e-6;
        let r_fwd = rotation_matrix(&(euler + d.euler.scale(h)));
        let r_bwd = rotation_matrix(&(euler + d.euler.scale(-h)));
        let r = rotation_matrix(&euler);
        let skew = Mat3::from_rows([[0.0, -w[2], w[1]], [w[2], 0.0, -w[0]], [-w[1], w[0], 0.0]]);
        let mut rdot = r_fwd - r_bwd;
        rdot = rdot.scale(1.0 / (2.0 * h));
        assert!((rdot + skew * r).max_abs_diff(&Mat3::zeros()) < 1e-8);
    }

    #[test]
    fn zero_duration_is_single_sample() {
        let cfg = SimConfig { duration: 0.0, ..SimConfig::default() };
        let traj = simulate(&wing(50), &props(), &cfg, "rect").unwrap();
        assert_eq!(traj.len(), 1);
        assert_eq!(traj.states[0], cfg.initial_state());
        assert_eq!(traj.states[0].euler, Vec3::new(0.0, FRAC_PI_3, 0.0));
    }

    #[test]
    fn quiescent_state_only_translates() {
        let p = props();
        let cfg = SimConfig { aero_enabled: false, g: 0.0, epsilon_init: 0.0, ..SimConfig::default() };
        let s0 = RigidBodyState { v: Vec3::new(1.0, -2.0, 0.5), ..cfg.initial_state() };
        let s1 = step(&s0, &wing(10), &p, &cfg, 0.0).unwrap();
        assert_eq!((s1.v, s1.w, s1.euler), (s0.v, s0.w, s0.euler));
        let e = rotation_matrix(&s0.euler).transpose() * s0.v.scale(1e-3);
        assert!((s1.p - s0.p - Vec3::new(e[0], e[1], -e[2])).max_abs() < 1e-12);
    }

    fn synthetic(vz: impl Fn(f64) -> f64) -> Trajectory<f64> {
        let times: Vec<f64> = (0..=1000).map(|i| i as f64 * 0.01).collect();
        let states = times
            .iter()
            .map(|&t| RigidBodyState { v: Vec3::new(0.0, 0.0, vz(t)), w: Vec3::new(0.0, 0.0, 4.0), ..Default::default() })
            .collect();
        Trajectory { times, states, meta: TrajectoryMeta { config: SimConfig::default(), design: "synthetic".into() } }
    }

    #[test]
    fn metrics_on_constant_trajectory() {
        let m = steady_state_metrics(&synthetic(|_| 8.0), 2.0).unwrap();
        assert!(m.stabilized);
        assert!((m.v_z - 8.0).abs() < 1e-12 && (m.omega_z - 4.0).abs() < 1e-12);
    }

    #[test]
    fn metrics_on_accelerating_trajectory() {
        let traj = synthetic(|t| 0.5 * t);
        assert!(!steady_state_metrics(&traj, 2.0).unwrap().stabilized);
        assert_eq!(settle_time(&traj), None);
        assert!(matches!(steady_state_metrics(&traj, 20.0), Err(SixDofError::WindowTooLong { .. })));
    }

    #[test]
    fn settle_time_finds_last_transient() {
        let traj = synthetic(|t| if t < 3.0 { t } else { 3.0 });
        let ts = settle_time(&traj).unwrap();
        assert!((ts - 3.0).abs() < 0.011, "{ts}");
    }
}
