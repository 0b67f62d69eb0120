use proptest::prelude::*;
use v2xmac_core::{ScenarioConfig, Technology};
use v2xmac_sim::Simulation;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn packets_are_conserved(
        n in 1u32..40,
        seed in any::<u64>(),
        dot11p in any::<bool>(),
        t_c in prop::sample::select(vec![100u32, 300, 1000]),
        m in 1u32..12,
    ) {
        let mut s = ScenarioConfig { vehicles: n, ..ScenarioConfig::default() };
        s.traffic.cam_interval = t_c;
        s.traffic.queue_capacity = m;
        let tech = if dot11p { Technology::Dot11p } else { Technology::Cv2x };
        let stats = Simulation::new(tech, &s, seed, 10.0).unwrap().run_replication(1, None);
        for c in &stats.per_vehicle {
            prop_assert_eq!(c.generated, c.transmitted + c.dropped + c.queued);
            prop_assert!(c.queued <= u64::from(m));
        }
        prop_assert!(stats.collided_observed <= stats.tx_observed);
        let cu = stats.cu().unwrap();
        prop_assert!((0.0..=1.0).contains(&cu));
    }
}
