use std::f64::consts::{FRAC_PI_2, PI};

use proptest::prelude::*;

use monoblade_core::aero::{flat_plate_cd, flat_plate_cl, tip_loss, TipLossMode};
use monoblade_core::bemt::{coefficient_of_power, BemtSettings, FlowConditions};
use monoblade_core::linalg::Mat3;
use monoblade_core::planform::{ChordPolynomial, WingGeometry};
use monoblade_core::sixdof::rotation_matrix;
use monoblade_core::Vec3F64;

const BETZ: f64 = 16.0 / 27.0;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn rotation_is_orthonormal(roll in -PI..PI, pitch in -1.5..1.5f64, yaw in -PI..PI) {
        let r = rotation_matrix(&Vec3F64::new(roll, pitch, yaw));
        let err = r.transpose().mul_mat(&r).max_abs_diff(&Mat3::identity());
        prop_assert!(err < 1e-12, "{err}");
        prop_assert!((r.determinant() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn lift_to_drag_is_cot_alpha(alpha in 0.01..(FRAC_PI_2 - 0.01)) {
        let ratio = flat_plate_cl(alpha) / flat_plate_cd(alpha);
        prop_assert!((ratio - 1.0 / alpha.tan()).abs() < 1e-12 * ratio.abs().max(1.0));
    }

    #[test]
    fn tip_loss_in_unit_interval(frac in 0.001..1.0f64, phi in 0.001..(PI - 0.001), b in 1u32..5, literal: bool) {
        let mode = if literal { TipLossMode::Literal } else { TipLossMode::StandardPrandtl };
        let f = tip_loss(frac * 0.25, 0.25, b, phi, mode).unwrap();
        prop_assert!((0.0..=1.0).contains(&f));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn power_coefficient_within_betz(
        root in 0.01..0.04f64,
        tip in 0.01..0.04f64,
        lambda_max in 0.3..4.0f64,
        tip_on: bool,
    ) {
        let geom = WingGeometry { n_elements: 200, ..WingGeometry::default() };
        let poly = ChordPolynomial::new([root, (tip - root) / 0.25, 0.0, 0.0, 0.0, 0.0]);
        let flow = FlowConditions::for_geometry(8.6336, 1.225, lambda_max, &geom);
        let cp = coefficient_of_power(&poly, &geom, &flow, &BemtSettings::default(), tip_on).unwrap();
        prop_assert!(cp > 0.0 && cp < BETZ, "{cp}");
    }
}
