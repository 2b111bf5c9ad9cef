//! Flat-plate aerodynamic coefficients and tip-loss factors.
//!
//! The lift and drag closures are the low-Reynolds-number flat-plate forms
//!
//! ```text
//! cd(α) = 2π sin²α / (4 + π sin α)
//! cl(α) = 2π sin α cos α / (4 + π sin α)
//! ```
//!
//! which share a denominator, so the resultant is always normal to the plate
//! (`cl / cd = cot α`). The denominator stays positive for every α because
//! `π < 4`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Real;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AeroError {
    #[error("element radius must be positive (got {0})")]
    NonPositiveRadius(f64),
    #[error("element radius {r} lies beyond the wing length {wing_length}")]
    RadiusBeyondTip { r: f64, wing_length: f64 },
    #[error("flow angle must satisfy sin(phi) > 0 (got phi = {0})")]
    NonPositiveSinPhi(f64),
    #[error("wing count must be at least 1")]
    NoWings,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AeroCoefficients<T> {
    pub cl: T,
    pub cd: T,
    pub cm: T,
}

/// Pitching-moment model about the quarter chord.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "kebab-case", deny_unknown_fields)]
pub enum CmModel<T> {
    /// Thin-airfoil result: zero moment about the quarter chord.
    #[default]
    Zero,
    Constant { value: T },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TipLossMode {
    /// `(2/π) acos(exp(−B / ((r/R) sin φ)))`. Does not vanish at the tip.
    Literal,
    /// `(2/π) acos(exp(−(B/2)(R − r) / (r sin φ)))`, zero at the tip.
    #[default]
    StandardPrandtl,
}

fn denominator<T: Real>(alpha: T) -> T {
    T::lit(4.0) + T::PI() * alpha.sin()
}

pub fn flat_plate_cl<T: Real>(alpha: T) -> T {
    let two_pi = T::TAU();
    two_pi * alpha.sin() * alpha.cos() / denominator(alpha)
}

pub fn flat_plate_cd<T: Real>(alpha: T) -> T {
    let s = alpha.sin();
    T::TAU() * s * s / denominator(alpha)
}

pub fn pitching_moment_cm<T: Real>(_alpha: T, model: &CmModel<T>) -> T {
    match *model {
        CmModel::Zero => T::zero(),
        CmModel::Constant { value } => value,
    }
}

pub fn coefficients<T: Real>(alpha: T, cm_model: &CmModel<T>) -> AeroCoefficients<T> {
    AeroCoefficients {
        cl: flat_plate_cl(alpha),
        cd: flat_plate_cd(alpha),
        cm: pitching_moment_cm(alpha, cm_model),
    }
}

/// Prandtl-type tip-loss factor at radius `r` on a wing of length `wing_length`.
///
/// Result is clamped to `[0, 1]` against rounding in `acos`.
pub fn tip_loss<T: Real>(
    r: T,
    wing_length: T,
    wing_count: u32,
    phi: T,
    mode: TipLossMode,
) -> Result<T, AeroError> {
    if wing_count == 0 {
        return Err(AeroError::NoWings);
    }
    if !(r > T::zero()) {
        return Err(AeroError::NonPositiveRadius(r.to_f64().unwrap_or(f64::NAN)));
    }
    if r > wing_length {
        return Err(AeroError::RadiusBeyondTip {
            r: r.to_f64().unwrap_or(f64::NAN),
            wing_length: wing_length.to_f64().unwrap_or(f64::NAN),
        });
    }
    let s = phi.sin();
    if !(s > T::zero()) {
        return Err(AeroError::NonPositiveSinPhi(phi.to_f64().unwrap_or(f64::NAN)));
    }
    let b = T::from_u32(wing_count).unwrap();
    let exponent = match mode {
        TipLossMode::Literal => -b / ((r / wing_length) * s),
        TipLossMode::StandardPrandtl => -(b / T::lit(2.0)) * (wing_length - r) / (r * s),
    };
    let f = T::FRAC_2_PI() * exponent.exp().min(T::one()).acos();
    Ok(f.max(T::zero()).min(T::one()))
}

#[cfg(test)]
mod tests {
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, FRAC_PI_6, PI};

    use super::*;

    #[test]
    fn lift_vanishes_at_zero_and_right_angle() {
        assert_eq!(flat_plate_cl(0.0_f64), 0.0);
        assert!(flat_plate_cl(FRAC_PI_2).abs() < 1e-15);
    }

    #[test]
    fn polar_hand_values() {
        // 2π·½ / (4 + π·√2/2)
        let cl45 = PI / (4.0 + PI * 2f64.sqrt() / 2.0);
        assert!((flat_plate_cl(FRAC_PI_4) - cl45).abs() < 1e-14);
        assert!((cl45 - 0.5050).abs() < 1e-4);
        assert!((flat_plate_cd(FRAC_PI_2) - 2.0 * PI / (4.0 + PI)).abs() < 1e-14);
        assert!((flat_plate_cd(FRAC_PI_6) - 2.0 * PI * 0.25 / (4.0 + PI * 0.5)).abs() < 1e-15);
        assert!((flat_plate_cd(FRAC_PI_6) - 0.2820).abs() < 1e-4);
        assert_eq!(flat_plate_cd(0.0_f64), 0.0);
    }

    #[test]
    fn cm_models() {
        assert_eq!(pitching_moment_cm(0.3, &CmModel::Zero), 0.0);
        assert_eq!(pitching_moment_cm(-0.15708, &CmModel::Zero), 0.0);
        assert_eq!(pitching_moment_cm(0.3, &CmModel::Constant { value: -0.02 }), -0.02);
    }

    #[test]
    fn standard_prandtl_vanishes_at_tip() {
        let f = tip_loss(0.25, 0.25, 1, 0.4, TipLossMode::StandardPrandtl).unwrap();
        assert_eq!(f, 0.0);
    }

    #[test]
    fn literal_tends_to_one_at_root() {
        let f = tip_loss(1e-9_f64, 0.25, 1, 0.4, TipLossMode::Literal).unwrap();
        assert!((f - 1.0).abs() < 1e-12);
    }

    #[test]
    fn standard_prandtl_hand_value() {
        // exponent −(1/2)(R/2)/((R/2)·½) = −1
        let f = tip_loss(0.125, 0.25, 1, FRAC_PI_6, TipLossMode::StandardPrandtl).unwrap();
        let expected = 2.0 / PI * (-1.0f64).exp().acos();
        assert!((f - expected).abs() < 1e-14);
        assert!((f - 0.760168).abs() < 1e-6);
    }

    #[test]
    fn tip_loss_rejects_bad_inputs() {
        for mode in [TipLossMode::Literal, TipLossMode::StandardPrandtl] {
            assert!(matches!(tip_loss(0.0, 0.25, 1, 0.3, mode), Err(AeroError::NonPositiveRadius(_))));
            assert!(matches!(tip_loss(0.1, 0.25, 1, 0.0, mode), Err(AeroError::NonPositiveSinPhi(_))));
            assert!(matches!(tip_loss(0.1, 0.25, 1, -0.2, mode), Err(AeroError::NonPositiveSinPhi(_))));
        }
        assert!(matches!(tip_loss(0.3, 0.25, 1, 0.3, TipLossMode::StandardPrandtl), Err(AeroError::RadiusBeyondTip { .. })));
        assert!(matches!(tip_loss(0.1, 0.25, 0, 0.3, TipLossMode::StandardPrandtl), Err(AeroError::NoWings)));
    }

    #[test]
    fn single_precision_matches_double() {
        let a = 0.7_f32;
        assert!((flat_plate_cl(a) as f64 - flat_plate_cl(0.7_f64)).abs() < 1e-6);
    }
}
