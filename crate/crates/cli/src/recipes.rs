//! Scenario configs reproducing the evaluation figures.

pub const RECIPES: [(&str, &str); 6] = [
    ("fig6a_delay_vs_N", include_str!("../recipes/fig6a_delay_vs_N.conf")),
    ("fig6b_theta_vs_N", include_str!("../recipes/fig6b_theta_vs_N.conf")),
    ("fig7a_delay_vs_TC", include_str!("../recipes/fig7a_delay_vs_TC.conf")),
    ("fig7b_local_optimum", include_str!("../recipes/fig7b_local_optimum.conf")),
    ("fig8a_collision_vs_N", include_str!("../recipes/fig8a_collision_vs_N.conf")),
    ("fig8b_utilization_vs_N", include_str!("../recipes/fig8b_utilization_vs_N.conf")),
];

pub fn recipe(name: &str) -> Option<&'static str> {
    RECIPES.iter().find(|(n, _)| *n == name).map(|(_, text)| *text)
}

pub fn names() -> impl Iterator<Item = &'static str> {
    RECIPES.iter().map(|(n, _)| *n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use v2xmac_core::ScenarioConfig;

    #[test]
    fn all_recipes_parse() {
        for (name, text) in RECIPES {
            let cfg = ScenarioConfig::parse(text).unwrap_or_else(|e| panic!("{name}: {e}"));
            assert!(!cfg.sweeps.is_empty(), "{name}");
        }
        assert!(recipe("fig7b_local_optimum").is_some());
        assert!(recipe("fig9").is_none());
    }
}
