//! Chord-polynomial planforms, geometric constraints and pod mass synthesis.
//!
//! Body axes used throughout: `x` runs spanwise from the wing root, `y` is
//! chordwise with the quarter-chord line at `y = 0` and the leading edge on
//! the `+y` side, `z` is normal to the plate. A chord `c` therefore spans
//! `y ∈ [−0.75c, 0.25c]` with its mid-chord at `y = −0.25c`.

use serde::{Deserialize, Serialize};

use crate::linalg::{Mat3, Vec3};
use crate::scalar::Real;

/// Fifth-order chord function `c(r) = Σ a_k r^k`, lowest degree first.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ChordPolynomial<T> {
    pub coeffs: [T; 6],
}

impl<T: Real> ChordPolynomial<T> {
    pub fn new(coeffs: [T; 6]) -> Self {
        Self { coeffs }
    }

    pub fn constant(c: T) -> Self {
        let mut coeffs = [T::zero(); 6];
        coeffs[0] = c;
        Self { coeffs }
    }

    /// Horner evaluation.
    pub fn chord_at(&self, r: T) -> T {
        self.coeffs.iter().rev().fold(T::zero(), |acc, &a| acc * r + a)
    }

    /// Exact integral of the polynomial over `[0, wing_length]`.
    pub fn wing_area(&self, wing_length: T) -> T {
        let mut area = T::zero();
        let mut rk = wing_length;
        for (k, &a) in self.coeffs.iter().enumerate() {
            area = area + a * rk / T::from_usize_lossy(k + 1);
            rk = rk * wing_length;
        }
        area
    }

    /// Worst signed violation of `c_min ≤ c(r) ≤ c_max` on `n_check` equally
    /// spaced points over `[0, wing_length]`; `≤ 0` means admissible.
    pub fn bounds_violation(&self, wing_length: T, c_min: T, c_max: T, n_check: usize) -> T {
        check_grid(wing_length, n_check)
            .map(|r| {
                let c = self.chord_at(r);
                (c_min - c).max(c - c_max)
            })
            .fold(T::neg_infinity(), T::max)
    }

    pub fn scaled(&self, s: T) -> Self {
        Self { coeffs: self.coeffs.map(|a| a * s) }
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|a| a.is_finite())
    }
}

pub(crate) fn check_grid<T: Real>(wing_length: T, n_check: usize) -> impl Iterator<Item = T> {
    let n = n_check.max(2);
    let denom = T::from_usize_lossy(n - 1);
    (0..n).map(move |j| wing_length * T::from_usize_lossy(j) / denom)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WingGeometry<T> {
    pub wing_length: T,
    pub wing_count: u32,
    pub n_elements: usize,
    /// Blade pitch `γ` (windmill convention, `α = φ − γ`).
    pub pitch: T,
}

impl<T: Real> Default for WingGeometry<T> {
    fn default() -> Self {
        Self {
            wing_length: T::lit(0.25),
            wing_count: 1,
            n_elements: 1000,
            pitch: T::lit(0.15708),
        }
    }
}

impl<T: Real> WingGeometry<T> {
    pub fn element_width(&self) -> T {
        self.wing_length / T::from_usize_lossy(self.n_elements)
    }

    /// Element mid-points `(i + ½)·dr`, `i = 0..n_elements`.
    pub fn station_radii(&self) -> impl Iterator<Item = T> + '_ {
        let dr = self.element_width();
        (0..self.n_elements).map(move |i| (T::from_usize_lossy(i) + T::lit(0.5)) * dr)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MassModel<T> {
    /// Plate mass per unit planform area, kg/m².
    pub plate_areal_density: T,
    /// Reporting only; the plate is a lamina for inertia.
    pub plate_thickness: T,
    pub body_mass: T,
    /// Body point-mass position relative to the root quarter-chord point.
    pub body_offset: Vec3<T>,
}

impl<T: Real> Default for MassModel<T> {
    fn default() -> Self {
        Self {
            plate_areal_density: T::lit(0.45),
            plate_thickness: T::lit(3.0e-4),
            body_mass: T::lit(0.119),
            body_offset: Vec3::new(T::zero(), T::lit(2.8e-4), T::zero()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MassProperties<T> {
    pub mass: T,
    /// Inertia tensor about the CG in body axes (off-diagonals carry the minus sign).
    pub inertia: Mat3<T>,
    pub cg: Vec3<T>,
}

/// Gravitational moment about the quarter-chord spanwise axis in level attitude.
///
/// Aerodynamic resultants act on the axis, so only weight contributes: each
/// plate element's weight acts at mid-chord (`y = −0.25c`), the body weight at
/// its chordwise offset. Zero means the composite CG lies on the axis.
pub fn net_moment<T: Real>(poly: &ChordPolynomial<T>, mass: &MassModel<T>, geom: &WingGeometry<T>, g: T) -> T {
    let dr = geom.element_width();
    let quarter = T::lit(0.25);
    let plate: T = geom
        .station_radii()
        .map(|r| {
            let c = poly.chord_at(r);
            mass.plate_areal_density * c * dr * (-quarter * c)
        })
        .fold(T::zero(), |a, b| a + b);
    g * (plate + mass.body_mass * mass.body_offset.y())
}

fn point_inertia<T: Real>(m: T, p: &Vec3<T>) -> Mat3<T> {
    let r2 = p.dot(p);
    let mut i = Mat3::zeros();
    for a in 0..3 {
        for b in 0..3 {
            let delta = if a == b { r2 } else { T::zero() };
            i.0[a][b] = m * (delta - p[a] * p[b]);
        }
    }
    i
}

/// Mass, CG and inertia about the CG for the plate (thin lamina on the element
/// grid) plus the body point mass.
pub fn mass_properties<T: Real>(
    poly: &ChordPolynomial<T>,
    mass: &MassModel<T>,
    geom: &WingGeometry<T>,
) -> MassProperties<T> {
    let dr = geom.element_width();
    let twelfth = T::one() / T::lit(12.0);

    let mut total = mass.body_mass;
    let mut first = mass.body_offset.scale(mass.body_mass);
    let mut about_origin = point_inertia(mass.body_mass, &mass.body_offset);

    for r in geom.station_radii() {
        let c = poly.chord_at(r);
        let dm = mass.plate_areal_density * c * dr;
        let p = Vec3::new(r, -T::lit(0.25) * c, T::zero());
        total = total + dm;
        first += p.scale(dm);
        // strip about its own centroid: chordwise extent c, spanwise extent dr
        let own_xx = dm * c * c * twelfth;
        let own_yy = dm * dr * dr * twelfth;
        let mut own = Mat3::zeros();
        own.0[0][0] = own_xx;
        own.0[1][1] = own_yy;
        own.0[2][2] = own_xx + own_yy;
        about_origin = about_origin + point_inertia(dm, &p) + own;
    }

    let cg = if total > T::zero() { first.scale(T::one() / total) } else { Vec3::zeros() };
    let inertia = about_origin - point_inertia(total, &cg);
    MassProperties { mass: total, inertia, cg }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn geom() -> WingGeometry<f64> {
        WingGeometry::default()
    }

    #[test]
    fn chord_evaluation() {
        assert_eq!(ChordPolynomial::constant(0.03).chord_at(0.17), 0.03);
        let lin = ChordPolynomial::new([0.0, 1.0, 0.0, 0.0, 0.0, 0.0]);
        assert_eq!(lin.chord_at(0.25), 0.25);
        let p = ChordPolynomial::new([0.01_f64, 0.08, 0.0, 0.0, 0.0, 0.0]);
        assert!((p.chord_at(0.125) - 0.02).abs() < 1e-15);
    }

    #[test]
    fn area_hand_values() {
        assert!((ChordPolynomial::constant(0.04_f64).wing_area(0.25) - 0.01).abs() < 1e-15);
        let p = ChordPolynomial::new([0.0_f64, 0.08, 0.0, 0.0, 0.0, 0.0]);
        assert!((p.wing_area(0.25) - 0.0025).abs() < 1e-15);
    }

    #[test]
    fn bounds_violation_cases() {
        let v = |c: f64| ChordPolynomial::constant(c).bounds_violation(0.25, 0.01, 0.04, 200);
        assert!((v(0.03) + 0.01).abs() < 1e-15);
        assert!((v(0.05) - 0.01).abs() < 1e-15);
        assert_eq!(v(0.01), 0.0);
    }

    #[test]
    fn net_moment_balances_with_matching_body_offset() {
        let poly = ChordPolynomial::constant(0.03);
        let mut mm = MassModel::default();
        mm.body_offset = Vec3::zeros();
        let plate_only = net_moment(&poly, &mm, &geom(), 9.81);
        mm.body_offset[1] = -plate_only / (9.81 * mm.body_mass);
        assert!(net_moment(&poly, &mm, &geom(), 9.81).abs() < 1e-18);
    }

    #[test]
    fn plate_alone_pitches_nose_down() {
        let poly = ChordPolynomial::constant(0.03);
        let mm = MassModel { body_mass: 0.0, ..MassModel::default() };
        let m = net_moment(&poly, &mm, &geom(), 9.81);
        // −¼·ρ_A·g·c²·R for a rectangle
        let expected = -0.25 * 0.45 * 9.81 * 0.03 * 0.03 * 0.25;
        assert!(m < 0.0);
        assert!((m - expected).abs() < 1e-15);
    }

    #[test]
    fn massless_plate_and_body_on_axis_has_no_moment() {
        let mm = MassModel {
            plate_areal_density: 0.0,
            body_offset: Vec3::new(0.02, 0.0, 0.0),
            ..MassModel::default()
        };
        assert_eq!(net_moment(&ChordPolynomial::constant(0.03), &mm, &geom(), 9.81), 0.0);
    }

    #[test]
    fn rectangle_mass() {
        let mm = MassModel {
            plate_areal_density: 2.0,
            body_mass: 0.1,
            body_offset: Vec3::zeros(),
            ..MassModel::default()
        };
        let props = mass_properties(&ChordPolynomial::constant(0.04), &mm, &geom());
        assert!((props.mass - 0.12).abs() < 1e-14);
    }

    #[test]
    fn point_body_alone_has_zero_inertia() {
        let mm = MassModel { plate_areal_density: 0.0, ..MassModel::default() };
        let props = mass_properties(&ChordPolynomial::constant(0.04), &mm, &geom());
        assert!(props.inertia.max_abs_diff(&Mat3::zeros()) < 1e-18);
        assert_eq!(props.cg, mm.body_offset);
    }

    #[test]
    fn default_mass_model_near_reference_mass() {
        // any planform area inside the default band keeps the pod within 5% of 0.1232 kg
        for c in [0.024, 0.03, 0.036] {
            let props = mass_properties(&ChordPolynomial::constant(c), &MassModel::default(), &geom());
            assert!((props.mass - 0.1232).abs() / 0.1232 < 0.05, "mass {}", props.mass);
        }
    }

    #[test]
    fn planar_pod_inertia_is_symmetric_with_perpendicular_axis_identity() {
        let poly = ChordPolynomial::new([0.02, 0.1, -0.2, 0.0, 0.0, 0.0]);
        let i = mass_properties(&poly, &MassModel::default(), &geom()).inertia;
        assert!(i.max_abs_diff(&i.transpose()) < 1e-18);
        assert!((i.0[0][0] + i.0[1][1] - i.0[2][2]).abs() < 1e-15);
        assert_eq!(i.0[0][2], 0.0);
    }
}
