use monoblade_core::bemt::{BemtSettings, FlowConditions};
use monoblade_core::optimizer::gradient::{numeric_gradient, one_sided_gradient};
use monoblade_core::optimizer::{
    evaluate_objective, optimize_chord, optimize_from, ChordBounds, DesignVariant, OptimizationConfig,
    SolverSettings, VariantTag,
};
use monoblade_core::planform::{ChordPolynomial, MassModel, WingGeometry};

fn config(n_elements: usize, n_starts: usize) -> OptimizationConfig {
    let geometry = WingGeometry { n_elements, ..WingGeometry::default() };
    OptimizationConfig {
        geometry,
        flow: FlowConditions::for_geometry(8.6336, 1.225, 1.0, &geometry),
        bemt: BemtSettings::default(),
        bounds: ChordBounds::default(),
        solver: SolverSettings { n_starts, ..SolverSettings::default() },
        gravity: 9.81,
    }
}

fn max_rel_gap(a: &[f64], b: &[f64]) -> f64 {
    let scale = a.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max) / scale
}

#[test]
fn gradients_agree_on_quadratic() {
    let f = |x: &[f64]| Some(3.0 * x[0] * x[0] + x[0] * x[1] + 0.5 * x[1] * x[1] - 2.0 * x[2] + x[2] * x[2]);
    let x = [0.7, -1.2, 2.5];
    let c = numeric_gradient(f, &x, 1e-6).unwrap();
    let o = one_sided_gradient(f, &x, 1e-6).unwrap();
    let exact = [6.0 * 0.7 - 1.2, 0.7 - 1.2, -2.0 + 5.0];
    assert!(max_rel_gap(&exact, &c) < 1e-8);
    assert!(max_rel_gap(&c, &o) < 1e-4);
}

#[test]
fn gradients_agree_at_rectangle_start() {
    let cfg = config(1000, 1);
    let variant = DesignVariant::new(VariantTag::W1);
    let (r, c_max) = (cfg.geometry.wing_length, cfg.bounds.c_max);
    let objective = |z: &[f64]| {
        let mut coeffs = [0.0; 6];
        for k in 0..6 {
            coeffs[k] = z[k] * c_max / r.powi(k as i32);
        }
        evaluate_objective(&ChordPolynomial::new(coeffs), &variant, &cfg).ok()
    };
    let z0 = [1.0, 0.0, 0.0, 0.0, 0.0, 0.0];
    let c = numeric_gradient(objective, &z0, 1e-6).unwrap();
    let o = one_sided_gradient(objective, &z0, 1e-6).unwrap();
    assert!(max_rel_gap(&c, &o) < 1e-4, "{c:?} vs {o:?}");
}

#[test]
fn optimised_designs_are_feasible_with_monotone_history() {
    let cfg = config(100, 2);
    for tag in [VariantTag::W1, VariantTag::W2, VariantTag::W3] {
        let res = optimize_chord(&DesignVariant::new(tag), &cfg, &MassModel::default()).unwrap();
        for (name, v) in &res.constraint_residuals {
            assert!(*v <= cfg.solver.constraint_tol, "{tag} {name} = {v}");
        }
        let best: Vec<f64> = res.history.iter().flatten().copied().collect();
        assert!(!best.is_empty());
        assert!(best.windows(2).all(|w| w[1] >= w[0]), "{tag}: {best:?}");
        assert!(res.cp > 0.0 && res.cp < 16.0 / 27.0);
    }
}

#[test]
fn same_seed_gives_identical_result() {
    let cfg = config(100, 3);
    let run = || {
        let res = optimize_chord(&DesignVariant::new(VariantTag::W3), &cfg, &MassModel::default()).unwrap();
        serde_json::to_string(&res).unwrap()
    };
    assert_eq!(run(), run());
}

#[test]
fn optimiser_never_ends_below_a_feasible_start() {
    let cfg = config(100, 1);
    let variant = DesignVariant::new(VariantTag::W1);
    // constant 34 mm chord: area 0.0085 m², inside every bound
    let start = ChordPolynomial::constant(0.034);
    let start_cp = evaluate_objective(&start, &variant, &cfg).unwrap();
    let res = optimize_from(&variant, &cfg, &MassModel::default(), &[start]).unwrap();
    assert!(res.cp >= start_cp, "{} < {start_cp}", res.cp);
}

#[test]
fn power_depends_on_chord_scale() {
    let cfg = config(200, 1);
    let variant = DesignVariant::new(VariantTag::W1);
    let p = ChordPolynomial::new([0.02, 0.05, 0.0, 0.0, 0.0, 0.0]);
    let a = evaluate_objective(&p, &variant, &cfg).unwrap();
    let b = evaluate_objective(&p.scaled(1.5), &variant, &cfg).unwrap();
    assert!((a - b).abs() > 1e-6 * a.abs());
}

#[test]
fn rectangle_is_not_optimised() {
    let cfg = config(100, 1);
    assert!(optimize_chord(&DesignVariant::new(VariantTag::W4), &cfg, &MassModel::default()).is_err());
}
