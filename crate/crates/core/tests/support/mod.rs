//! Independent reference computations shared by integration tests.
#![allow(dead_code)]

use std::f64::consts::{FRAC_PI_2, PI};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const PITCH: f64 = 0.15708;

#[derive(Debug, Clone, Copy)]
pub struct Station {
    pub r: f64,
    pub lambda: f64,
    pub chord: f64,
}

/// Random stations: λ ∈ [0.05, 5], chord ∈ [0.01, 0.04] m, r ∈ [0.02, 0.25] m.
pub fn random_stations(seed: u64, n: usize) -> Vec<Station> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| Station {
            lambda: rng.gen_range(0.05..=5.0),
            chord: rng.gen_range(0.01..=0.04),
            r: rng.gen_range(0.02..=0.25),
        })
        .collect()
}

/// Glauert closure without tip loss, written out from the momentum balance:
/// `a = k/(1+k)`, `a' = k'/(1-k')` with `k = σ c_n/(4 sin²φ)`,
/// `k' = σ c_t/(4 sinφ cosφ)`, then `g = tanφ - (1-a)/(λ(1+a'))`.
pub fn consistency_residual(st: &Station, phi: f64) -> f64 {
    let alpha = phi - PITCH;
    let sa = alpha.sin();
    let den = 4.0 + PI * sa;
    let cl = 2.0 * PI * sa * alpha.cos() / den;
    let cd = 2.0 * PI * sa * sa / den;
    let sigma = st.chord / (2.0 * PI * st.r);
    let (s, c) = (phi.sin(), phi.cos());
    let k = sigma * (cl * c + cd * s) / (4.0 * s * s);
    let kp = sigma * (cl * s - cd * c) / (4.0 * s * c);
    let a = k / (1.0 + k);
    let ap = kp / (1.0 - kp);
    phi.tan() - (1.0 - a) / (st.lambda * (1.0 + ap))
}

/// Grid scan of `|g|` over `(0, π/2)`: every sign change whose endpoints are
/// small (a root, not a pole) yields the grid point with the smaller `|g|`.
pub fn grid_roots(st: &Station, points: usize) -> Vec<f64> {
    let h = FRAC_PI_2 / (points + 1) as f64;
    let mut roots = Vec::new();
    let mut prev = (h, consistency_residual(st, h));
    for i in 2..=points {
        let x = h * i as f64;
        let g = consistency_residual(st, x);
        let (x0, g0) = prev;
        if g0.is_finite() && g.is_finite() && g0.signum() != g.signum() && g0.abs() + g.abs() < 1.0 {
            roots.push(if g0.abs() <= g.abs() { x0 } else { x });
        }
        prev = (x, g);
    }
    roots
}
