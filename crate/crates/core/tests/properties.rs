//! Randomised invariants of the closed forms.

use proptest::prelude::*;
use v2xmac_core::cv2x::{solve_cv2x, Cv2xParams, STANDARD_WINDOWS};
use v2xmac_core::dot11p::{solve_dot11p, state_delays, update_theta, Dot11pParams};
use v2xmac_core::metrics::{collision_prob_cv2x, collision_prob_dot11p};
use v2xmac_core::oracle::solve_steady_state;
use v2xmac_core::traffic::*;
use v2xmac_core::chains::queue_chain;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn generators_are_normalised(t_c in 100u32..=1000, t_d in 2u32..400, k in 1u32..=9,
                                 lambda in 0.05f64..5.0, p_t in 1e-4f64..=1.0) {
        let p = TrafficParams { cam_interval: t_c, denm_interval: t_d, denm_repeats: k, denm_rate: lambda, ..TrafficParams::default() };
        let cam = solve_cam(&p, p_t).unwrap();
        let denm = solve_denm(&p, p_t).unwrap();
        prop_assert!((cam.total_mass() - 1.0).abs() < 1e-10);
        prop_assert!((denm.total_mass() - 1.0).abs() < 1e-10);
        prop_assert!(cam.to_vector().iter().chain(&denm.to_vector()).all(|&v| (0.0..=1.0).contains(&v)));
        let q = combine_transition_probs(&cam, &denm, p_t, &p);
        for v in [q.alpha, q.alpha1, q.beta, q.p_arr] {
            prop_assert!((0.0..=1.0).contains(&v));
        }
    }

    #[test]
    fn blocked_mass_falls_with_transmit_probability(t_c in 100u32..=1000, p_t in 1e-3f64..0.9, bump in 1e-3f64..0.1) {
        let p = TrafficParams { cam_interval: t_c, ..TrafficParams::default() };
        let lo = solve_cam(&p, p_t).unwrap();
        let hi = solve_cam(&p, (p_t + bump).min(1.0)).unwrap();
        for j in 0..t_c as usize {
            prop_assert!(hi.pi_txp[j] <= lo.pi_txp[j] * (1.0 + 1e-12));
        }
    }

    #[test]
    fn queue_geometric_sum(alpha in 0.0f64..0.5, alpha1 in 1e-3f64..0.5, beta in 1e-3f64..0.5, m in 1u32..40) {
        prop_assume!((alpha - beta).abs() > 1e-3);
        let q = solve_queue(alpha, alpha1, beta, m).unwrap();
        let direct: f64 = (1..=m).map(|i| q.p_qe * alpha1 * alpha.powi(i as i32 - 1) / beta.powi(i as i32)).sum();
        let bracket = alpha1 * (1.0 - (alpha / beta).powi(m as i32)) / (beta - alpha);
        prop_assert!((direct - bracket * q.p_qe).abs() <= 1e-12 * (1.0 + direct.abs()));
        prop_assert!((q.pi.iter().sum::<f64>() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn queue_matches_oracle(alpha in 0.0f64..0.5, alpha1 in 1e-3f64..0.5, beta in 1e-3f64..0.5, m in 1u32..20) {
        let q = solve_queue(alpha, alpha1, beta, m).unwrap();
        let o = solve_steady_state(&queue_chain(alpha, alpha1, beta, m).unwrap()).unwrap();
        for (a, b) in q.pi.iter().zip(&o.probabilities) {
            prop_assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn cv2x_mass_and_bounds(w in 0usize..3, p_rk in 0.0f64..=0.8, p_qe in 0.0f64..0.99, p_arr in 0.0f64..1.0) {
        let p = Cv2xParams { p_keep: p_rk, ..Cv2xParams::standard(STANDARD_WINDOWS[w].0).unwrap() };
        let s = solve_cv2x(&p, p_qe, p_arr).unwrap();
        prop_assert!((s.total_mass() - 1.0).abs() < 1e-10);
        prop_assert!(s.p_txo <= 1.0 && s.p_t <= s.p_txo);
    }

    #[test]
    fn dot11p_mass(theta in 0.0f64..0.99, p_qe in 0.0f64..=1.0, p_arr in 0.0f64..=1.0) {
        let s = solve_dot11p(&Dot11pParams::default(), p_qe, p_arr, theta).unwrap();
        prop_assert!((s.total_mass() - 1.0).abs() < 1e-10);
        prop_assert!(s.to_vector().iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn theta_in_unit_interval(p_t in 0.0f64..=1.0, n in 1u32..500) {
        let t = update_theta(p_t, n);
        prop_assert!((0.0..=1.0).contains(&t));
    }

    #[test]
    fn collisions_do_not_fall_with_n(p_qe in 0.05f64..0.95, theta in 0.0f64..0.9, n in 1u32..400) {
        let cp = Cv2xParams::default();
        let c = solve_cv2x(&cp, p_qe, 0.01).unwrap();
        prop_assert!(collision_prob_cv2x(&c, &cp, n + 1).unwrap() >= collision_prob_cv2x(&c, &cp, n).unwrap());
        let d = solve_dot11p(&Dot11pParams::default(), p_qe, 0.01, theta).unwrap();
        let (a, b) = (collision_prob_dot11p(&d, n).unwrap(), collision_prob_dot11p(&d, n + 1).unwrap());
        prop_assert!(b >= a - 1e-12, "{a} {b}");
    }
}

#[test]
fn cv2x_opportunities_do_not_grow_with_window() {
    for p_qe in [0.1, 0.5, 0.9] {
        let p: Vec<f64> = [20, 50, 100]
            .iter()
            .map(|&g| solve_cv2x(&Cv2xParams::standard(g).unwrap(), p_qe, 0.01).unwrap().p_txo)
            .collect();
        assert!(p[0] >= p[1] && p[1] >= p[2], "{p:?}");
    }
}

#[test]
fn busy_delays_telescope_and_grow_with_theta() {
    let p = Dot11pParams::default();
    let mut prev: Option<Vec<f64>> = None;
    for k in 0..10 {
        let d = state_delays(&p, f64::from(k) / 10.0).unwrap();
        assert!((d.busy[0] - d.busy[13] - 13.0).abs() < 1e-9);
        let v = d.to_vector();
        assert!(v.iter().all(|&x| x >= 0.0));
        if let Some(prev) = prev {
            assert!(v.iter().zip(&prev).all(|(a, b)| a >= b));
        }
        prev = Some(v);
    }
}

#[test]
fn growth_from_empty_equals_drain() {
    let t = TrafficParams::default();
    for p_t in [0.003, 0.02, 0.4] {
        let q = combine_transition_probs(&solve_cam(&t, p_t).unwrap(), &solve_denm(&t, p_t).unwrap(), p_t, &t);
        assert!((q.alpha1 - q.beta).abs() < 1e-12);
    }
}

#[test]
fn queue_empty_probability_trends() {
    let base = TrafficParams::default();
    let p_qe = |t: &TrafficParams, p_t: f64| {
        let q = combine_transition_probs(&solve_cam(t, p_t).unwrap(), &solve_denm(t, p_t).unwrap(), p_t, t);
        solve_queue(q.alpha, q.alpha1, q.beta, t.queue_capacity).unwrap().p_qe
    };
    for p_t in [0.01, 0.05] {
        let mut last = 1.0;
        for lambda in [0.2, 0.5, 1.0, 2.0] {
            let v = p_qe(&TrafficParams { denm_rate: lambda, ..base }, p_t);
            assert!(v <= last + 1e-12);
            last = v;
        }
    }
    // α₁ = β holds identically, so P_qe depends on λ only through α/β. At
    // very small P_t a higher DENM rate lowers that ratio and P_qe rises,
    // by a few 1e-5.
    let lo = p_qe(&TrafficParams { denm_rate: 0.2, ..base }, 0.005);
    let hi = p_qe(&TrafficParams { denm_rate: 2.0, ..base }, 0.005);
    assert!(hi > lo && hi - lo < 1e-4, "{lo} {hi}");
    for lambda in [0.2, 1.0] {
        let t = TrafficParams { denm_rate: lambda, ..base };
        let mut last = 0.0;
        for p_t in [0.002, 0.005, 0.01, 0.05, 0.2] {
            let v = p_qe(&t, p_t);
            assert!(v >= last - 1e-12, "λ={lambda} P_t={p_t}: {v} < {last}");
            last = v;
        }
    }
}
