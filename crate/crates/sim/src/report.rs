//! Aggregation of replications into point estimates with 95 % intervals.

use v2xmac_core::Technology;

use crate::stats::ReplicationStats;

/// Fewer observed transmissions than this flag the estimate as unreliable.
pub const MIN_TRANSMISSIONS: u64 = 100;

/// Half-widths `1.96·s/√R` across replications; 0 for a single replication.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Ci95 {
    pub p_col: f64,
    pub d_avg_ms: f64,
    pub cu_avg: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimReport {
    pub tech: Technology,
    pub vehicles: u32,
    pub p_col_hat: f64,
    pub d_avg_hat_ms: f64,
    pub cu_avg_hat: f64,
    pub ci95: Ci95,
    pub generated: u64,
    pub transmissions: u64,
    pub drops: u64,
    pub replications: u32,
    pub seed: u64,
    pub sim_duration_s: f64,
    pub warmup_s: f64,
    /// Set when the post-warm-up sample holds fewer than
    /// [`MIN_TRANSMISSIONS`] transmissions.
    pub unreliable: bool,
    /// Free-form remarks on how the estimates were obtained.
    pub notes: Vec<String>,
    pub stats: Vec<ReplicationStats>,
}

/// Mean and CI half-width of the defined samples; `(NaN, NaN)` if none.
fn mean_ci(samples: impl Iterator<Item = Option<f64>>) -> (f64, f64) {
    let xs: Vec<f64> = samples.flatten().collect();
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let r = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / r;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (r - 1.0);
    (mean, 1.96 * (var / r).sqrt())
}

impl SimReport {
    pub(crate) fn from_replications(
        tech: Technology,
        vehicles: u32,
        seed: u64,
        sim_duration_s: f64,
        warmup_s: f64,
        stats: Vec<ReplicationStats>,
    ) -> Self {
        let (p_col_hat, p_ci) = mean_ci(stats.iter().map(|s| s.p_col()));
        let (d_hat, d_ci) = mean_ci(stats.iter().map(|s| s.d_avg_ms()));
        let (cu_hat, cu_ci) = mean_ci(stats.iter().map(|s| s.cu()));
        let observed: u64 = stats.iter().map(|s| s.tx_observed).sum();
        let totals = stats.iter().map(|s| s.totals());
        let (generated, transmissions, drops) =
            totals.fold((0, 0, 0), |(g, t, d), c| (g + c.generated, t + c.transmitted, d + c.dropped));
        let mut notes = Vec::new();
        if tech == Technology::Cv2x {
            notes.push(
                "selection ranks candidates by announced-reservation count, standing in for measured RSSI".to_owned(),
            );
        }
        Self {
            tech,
            vehicles,
            p_col_hat: if observed == 0 { 0.0 } else { p_col_hat },
            d_avg_hat_ms: d_hat,
            cu_avg_hat: if cu_hat.is_nan() { 0.0 } else { cu_hat },
            ci95: Ci95 { p_col: if p_ci.is_nan() { 0.0 } else { p_ci }, d_avg_ms: d_ci, cu_avg: cu_ci },
            generated,
            transmissions,
            drops,
            replications: stats.len() as u32,
            seed,
            sim_duration_s,
            warmup_s,
            unreliable: observed < MIN_TRANSMISSIONS,
            notes,
            stats,
        }
    }
}
