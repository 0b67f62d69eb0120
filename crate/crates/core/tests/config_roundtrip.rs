use proptest::prelude::*;
use v2xmac_core::scenario::{ScenarioConfig, Sweep, SweepValues, TechSelection};

fn arb_config() -> impl Strategy<Value = ScenarioConfig> {
    (
        prop_oneof![Just(TechSelection::Cv2x), Just(TechSelection::Dot11p), Just(TechSelection::Both)],
        1u32..500,
        any::<bool>(),
        (100u32..=1000, 2u32..500, 1u32..=9, 0.01f64..10.0, 1u32..50),
        (0usize..3, 0.0f64..=0.8),
        (2u32..64, 2u32..12, 1u32..40),
        prop::option::of(10u32..100),
    )
        .prop_map(|(tech, n, adaptive, (t_c, t_d, k, lambda, m), (w, p_rk), (cw, aifsn, vt), sweep_to)| {
            let mut c = ScenarioConfig { tech, vehicles: n, adaptive_cam: adaptive, ..ScenarioConfig::default() };
            c.traffic.cam_interval = t_c;
            c.traffic.denm_interval = t_d;
            c.traffic.denm_repeats = k;
            c.traffic.denm_rate = lambda;
            c.traffic.queue_capacity = m;
            c.cv2x = v2xmac_core::cv2x::Cv2xParams::standard([20, 50, 100][w]).unwrap();
            c.cv2x.p_keep = p_rk;
            c.dot11p.cw_min = cw;
            c.dot11p.aifsn = aifsn;
            c.dot11p.tx_slots = vt;
            if let Some(to) = sweep_to {
                c.sweeps.push(Sweep { key: "n".into(), values: SweepValues::Range { from: 1.0, to: f64::from(to), step: 7.0 } });
                c.sweeps.push(Sweep { key: "cv2x.p_rk".into(), values: SweepValues::List(vec![0.0, 0.4, 0.8]) });
            }
            c
        })
}

proptest! {
    #[test]
    fn parse_serialize_parse_is_identity(cfg in arb_config()) {
        let text = cfg.serialize();
        let parsed = ScenarioConfig::parse(&text).unwrap();
        prop_assert_eq!(&parsed, &cfg);
        prop_assert_eq!(ScenarioConfig::parse(&parsed.serialize()).unwrap(), parsed);
    }
}
