use std::collections::{HashMap, HashSet};

use v2xmac_core::{ScenarioConfig, Technology};
use v2xmac_sim::{run_sim, EventKind, SimError, Simulation, TraceEvent, VecSink};

fn scenario(n: u32) -> ScenarioConfig {
    ScenarioConfig { vehicles: n, ..ScenarioConfig::default() }
}

fn traced(tech: Technology, s: &ScenarioConfig, seed: u64, secs: f64) -> (v2xmac_sim::ReplicationStats, Vec<TraceEvent>) {
    let sim = Simulation::new(tech, s, seed, secs).unwrap();
    let mut sink = VecSink::default();
    let stats = sim.run_replication(0, Some(&mut sink));
    (stats, sink.0)
}

fn field<'a>(detail: &'a str, key: &str) -> &'a str {
    detail.split(';').find_map(|kv| kv.strip_prefix(key)?.strip_prefix('=')).unwrap()
}

#[test]
fn rejects_short_runs_and_zero_replications() {
    let s = scenario(5);
    assert_eq!(run_sim(Technology::Cv2x, &s, 1, 9.9, 1).unwrap_err(), SimError::InvalidDuration(9.9));
    assert_eq!(run_sim(Technology::Dot11p, &s, 1, 10.0, 0).unwrap_err(), SimError::NoReplications);
    let bad = ScenarioConfig { vehicles: 0, ..s };
    assert!(matches!(run_sim(Technology::Cv2x, &bad, 1, 10.0, 1), Err(SimError::Scenario(_))));
}

#[test]
fn seeded_runs_are_identical() {
    for tech in Technology::ALL {
        let s = scenario(30);
        let a = run_sim(tech, &s, 42, 12.0, 3).unwrap();
        let b = run_sim(tech, &s, 42, 12.0, 3).unwrap();
        assert_eq!(a, b);
        let c = run_sim(tech, &s, 43, 12.0, 3).unwrap();
        assert_ne!(a.stats, c.stats);
        assert_eq!(traced(tech, &s, 5, 10.0).1, traced(tech, &s, 5, 10.0).1);
    }
}

#[test]
fn lone_vehicle_never_collides() {
    for tech in Technology::ALL {
        for seed in 0..5 {
            let r = run_sim(tech, &scenario(1), seed, 10.0, 2).unwrap();
            assert_eq!(r.p_col_hat, 0.0, "{tech} seed {seed}");
            assert!(r.transmissions > 0);
        }
    }
}

#[test]
fn silent_traffic_transmits_nothing() {
    for tech in Technology::ALL {
        let sim = Simulation::new(tech, &scenario(20), 3, 10.0).unwrap().with_traffic(false, false);
        let mut sink = VecSink::default();
        let stats = sim.run_replication(0, Some(&mut sink));
        assert!(sink.0.iter().all(|e| e.kind != EventKind::Transmission));
        assert_eq!(stats.totals().generated, 0);
        assert_eq!(stats.cu(), Some(0.0));
        let r = sim.run(2).unwrap();
        assert!(r.unreliable);
        assert_eq!(r.p_col_hat, 0.0);
    }
}

#[test]
fn collisions_pair_with_transmissions() {
    for (tech, n) in [(Technology::Cv2x, 150), (Technology::Dot11p, 100)] {
        let (_, events) = traced(tech, &scenario(n), 11, 10.0);
        let mut tx: HashMap<(u64, &str), usize> = HashMap::new();
        for e in events.iter().filter(|e| e.kind == EventKind::Transmission) {
            *tx.entry((e.time_us, e.detail.as_str())).or_default() += 1;
        }
        let collisions: Vec<_> = events.iter().filter(|e| e.kind == EventKind::Collision).collect();
        assert!(!collisions.is_empty(), "{tech}: no collisions to check");
        for c in collisions {
            assert!(tx.get(&(c.time_us, c.detail.as_str())).copied().unwrap_or(0) >= 2, "{tech}: {c:?}");
        }
    }
}

#[test]
fn trace_reconciles_with_counters() {
    for tech in Technology::ALL {
        let (stats, events) = traced(tech, &scenario(60), 8, 10.0);
        let count = |k: EventKind, observed_only: bool| {
            events.iter().filter(|e| e.kind == k && (!observed_only || e.time_us >= 2_000_000)).count() as u64
        };
        let totals = stats.totals();
        assert_eq!(count(EventKind::Generation, false), totals.generated);
        assert_eq!(count(EventKind::Enqueue, false) + count(EventKind::Drop, false), totals.generated);
        assert_eq!(count(EventKind::Drop, false), totals.dropped);
        assert_eq!(count(EventKind::Transmission, false), totals.transmitted);
        assert_eq!(count(EventKind::Transmission, true), stats.tx_observed);
        assert_eq!(count(EventKind::Collision, true), stats.collided_observed);
        for (v, c) in stats.per_vehicle.iter().enumerate() {
            let tx = events.iter().filter(|e| e.vehicle as usize == v && e.kind == EventKind::Transmission).count();
            assert_eq!(tx as u64, c.transmitted);
        }
    }
}

#[test]
fn cv2x_selection_avoids_own_recent_cells() {
    let s = scenario(100);
    let gamma = u64::from(s.cv2x.gamma);
    let (_, events) = traced(Technology::Cv2x, &s, 21, 15.0);
    let mut own_tx: HashMap<u32, Vec<(u64, u32)>> = HashMap::new();
    let mut checked = 0;
    for e in &events {
        let t = e.time_us / 1000;
        match e.kind {
            EventKind::Transmission => {
                let csr: u32 = field(&e.detail, "csr").parse().unwrap();
                own_tx.entry(e.vehicle).or_default().push((t, csr));
            }
            EventKind::Reservation if field(&e.detail, "origin") == "select" => {
                let s: u64 = field(&e.detail, "subframe").parse().unwrap();
                let c: u32 = field(&e.detail, "csr").parse().unwrap();
                assert!((t + 2..=t + gamma).contains(&s), "{e:?}");
                for &(u, uc) in own_tx.get(&e.vehicle).into_iter().flatten() {
                    if u + 1000 > t {
                        assert!(!(uc == c && (s - u).is_multiple_of(gamma)), "vehicle {} reused own cell: {e:?}", e.vehicle);
                    }
                }
                checked += 1;
            }
            _ => {}
        }
    }
    assert!(checked > 500, "{checked}");
}

#[test]
fn cv2x_counter_stays_in_bounds() {
    let s = scenario(40);
    let (_, events) = traced(Technology::Cv2x, &s, 2, 10.0);
    let mut seen = HashSet::new();
    for e in events.iter().filter(|e| e.kind == EventKind::Reservation) {
        let rc: u32 = field(&e.detail, "rc").parse().unwrap();
        assert!((s.cv2x.rc_low..=s.cv2x.rc_high).contains(&rc));
        seen.insert(field(&e.detail, "origin").to_owned());
    }
    assert_eq!(seen.len(), 2, "both keep and reselect should occur");
}

#[test]
fn dot11p_respects_aifs() {
    for n in [2, 50, 200] {
        let r = run_sim(Technology::Dot11p, &scenario(n), 4, 10.0, 2).unwrap();
        assert!(r.stats.iter().all(|s| s.aifs_violations == 0), "N={n}");
        assert!(r.p_col_hat > 0.0 || n == 2);
    }
}

#[test]
fn dot11p_pair_delay_within_contention_band() {
    let s = scenario(2);
    let p = s.dot11p;
    let r = Simulation::new(Technology::Dot11p, &s, 13, 60.0).unwrap().with_traffic(true, false).run(4).unwrap();
    let slots = r.d_avg_hat_ms * 1000.0 / p.slot_us;
    let omega = f64::from(p.aifs_slots());
    let lo = f64::from(p.tx_slots) + omega;
    let hi = lo + f64::from(p.cw_min) * omega;
    assert!((lo..=hi).contains(&slots), "{slots} not in [{lo}, {hi}]");
}

#[test]
fn ci_shrinks_with_replications() {
    let s = scenario(40);
    let few = run_sim(Technology::Dot11p, &s, 77, 10.0, 32).unwrap();
    let many = run_sim(Technology::Dot11p, &s, 77, 10.0, 128).unwrap();
    let ratio = few.ci95.d_avg_ms / many.ci95.d_avg_ms;
    assert!((ratio / 2.0 - 1.0).abs() <= 0.3, "ratio {ratio}");
    assert!(few.ci95.cu_avg > many.ci95.cu_avg);
}
