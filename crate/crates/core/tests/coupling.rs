//! Fixed-point behaviour of the coupled chains.

use v2xmac_core::coupling::{solve_coupled_with, sweep, CouplingOptions, CouplingState};
use v2xmac_core::dot11p::update_theta;
use v2xmac_core::{evaluate, solve_coupled, ScenarioConfig, Technology};

fn scenario(n: u32) -> ScenarioConfig {
    ScenarioConfig { vehicles: n, ..ScenarioConfig::default() }
}

#[test]
fn cv2x_regression_window_100_n50() {
    let r = solve_coupled(Technology::Cv2x, &scenario(50)).unwrap();
    let again = solve_coupled(Technology::Cv2x, &scenario(50)).unwrap();
    assert_eq!(r.state, again.state);
    assert_eq!(r.state.theta, 0.0);
    assert!((r.state.p_t - 8.278_203_337_400_447e-3).abs() < 1e-9);
    assert!((r.state.p_qe - 1.918_483_936_352_616e-1).abs() < 1e-9);
}

#[test]
fn initial_guess_does_not_matter() {
    let guesses = [
        CouplingState::initial(),
        CouplingState::new(0.001, 0.1, 0.0, 0.0),
        CouplingState::new(0.2, 0.5, 0.5, 0.5),
        CouplingState::new(0.05, 0.99, 0.01, 0.9),
        CouplingState::new(0.5, 0.01, 1.0, 0.3),
    ];
    for tech in Technology::ALL {
        for n in [50, 300] {
            let s = scenario(n);
            let states: Vec<CouplingState> = guesses
                .iter()
                .map(|&g| solve_coupled_with(tech, &s, &CouplingOptions { initial: g, ..CouplingOptions::default() }).unwrap().state)
                .collect();
            for st in &states[1..] {
                for (a, b) in [(st.p_t, states[0].p_t), (st.p_qe, states[0].p_qe), (st.p_arr, states[0].p_arr), (st.theta, states[0].theta)] {
                    assert!((a - b).abs() <= 1e-7, "{tech} N={n}: {st:?} vs {:?}", states[0]);
                }
            }
        }
    }
}

#[test]
fn converged_state_is_self_consistent() {
    for tech in Technology::ALL {
        let s = scenario(100);
        let r = solve_coupled(tech, &s).unwrap();
        let again = sweep(tech, &s, &r.state).unwrap().state;
        for (a, b) in [(again.p_t, r.state.p_t), (again.p_qe, r.state.p_qe), (again.p_arr, r.state.p_arr), (again.theta, r.state.theta)] {
            assert!((a - b).abs() <= 1e-8, "{tech}: {again:?} vs {:?}", r.state);
        }
        if tech == Technology::Dot11p {
            assert!((r.state.theta - update_theta(r.state.p_t, 100)).abs() <= 1e-8);
        }
    }
}

#[test]
fn busy_ratio_grows_with_density() {
    let mut last = 0.0;
    for n in (50..=300).step_by(50) {
        let t = solve_coupled(Technology::Dot11p, &scenario(n)).unwrap().state.theta;
        assert!(t >= last, "N={n}: {t} < {last}");
        last = t;
    }
}

#[test]
fn lone_vehicle_with_sparse_traffic() {
    let mut s = scenario(1);
    s.traffic.cam_interval = 1000;
    s.traffic.denm_rate = 1e-6;
    let r = solve_coupled(Technology::Dot11p, &s).unwrap();
    assert_eq!(r.state.theta, 0.0);
    let m = evaluate(Technology::Dot11p, &s).unwrap();
    assert!(m.p_col.abs() < 1e-12);
    let c = evaluate(Technology::Cv2x, &s).unwrap();
    assert_eq!(c.p_col, 0.0);
}

#[test]
fn adaptive_cam_rate_stretches_interval_under_load() {
    let mut s = scenario(300);
    s.adaptive_cam = true;
    let m = evaluate(Technology::Dot11p, &s).unwrap();
    assert!(m.cam_interval > 100, "{m:?}");
    let fixed = evaluate(Technology::Dot11p, &scenario(300)).unwrap();
    assert!(m.theta < fixed.theta);
}
