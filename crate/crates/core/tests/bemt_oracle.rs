mod support;

use monoblade_core::bemt::{solve_induction, ClosureMode, ElementStation};

use support::{grid_roots, random_stations, PITCH};

#[test]
fn fixed_point_matches_grid_oracle() {
    for (i, st) in random_stations(7, 20).iter().enumerate() {
        let station = ElementStation::new(st.r, st.lambda, st.chord, PITCH, 1).unwrap();
        let state = solve_induction(&station, ClosureMode::Standard, None, 0.25, 1e-10, 500).unwrap();
        let roots = grid_roots(st, 1_000_000);
        let nearest = roots.iter().map(|r| (r - state.phi).abs()).fold(f64::INFINITY, f64::min);
        assert!(!roots.is_empty(), "station {i}: oracle found no root");
        assert!(nearest < 1e-4, "station {i}: phi {} vs oracle roots {roots:?}", state.phi);
        assert!(state.converged && state.residual <= 1e-10, "station {i}: residual {}", state.residual);
    }
}
