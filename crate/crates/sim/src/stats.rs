//! Counters of one replication.

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct VehicleCounts {
    pub generated: u64,
    pub transmitted: u64,
    pub dropped: u64,
    /// Packets still queued when the run ended.
    pub queued: u64,
}

/// Whole-run totals per vehicle plus the post-warm-up counters that feed
/// the estimators.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicationStats {
    pub per_vehicle: Vec<VehicleCounts>,
    pub tx_observed: u64,
    pub collided_observed: u64,
    pub delay_sum_ms: f64,
    /// Subframes (C-V2X) or slots (802.11p) after the warm-up.
    pub observed_units: u64,
    /// Resources per unit: CSRs per subframe, or 1 channel.
    pub capacity: f64,
    /// Units occupied by one transmission.
    pub tx_weight: f64,
    /// Transmissions that started without a full AIFS of idle sensing.
    pub aifs_violations: u64,
}

impl ReplicationStats {
    pub fn new(vehicles: usize, capacity: f64) -> Self {
        Self {
            per_vehicle: vec![VehicleCounts::default(); vehicles],
            tx_observed: 0,
            collided_observed: 0,
            delay_sum_ms: 0.0,
            observed_units: 0,
            capacity,
            tx_weight: 1.0,
            aifs_violations: 0,
        }
    }

    pub(crate) fn record_transmission(&mut self, v: usize, observed: bool, delay_ms: f64) {
        self.per_vehicle[v].transmitted += 1;
        if observed {
            self.tx_observed += 1;
            self.delay_sum_ms += delay_ms;
        }
    }

    pub(crate) fn record_collision(&mut self, observed: bool) {
        if observed {
            self.collided_observed += 1;
        }
    }

    pub fn totals(&self) -> VehicleCounts {
        self.per_vehicle.iter().fold(VehicleCounts::default(), |a, c| VehicleCounts {
            generated: a.generated + c.generated,
            transmitted: a.transmitted + c.transmitted,
            dropped: a.dropped + c.dropped,
            queued: a.queued + c.queued,
        })
    }

    pub fn p_col(&self) -> Option<f64> {
        (self.tx_observed > 0).then(|| self.collided_observed as f64 / self.tx_observed as f64)
    }

    pub fn d_avg_ms(&self) -> Option<f64> {
        (self.tx_observed > 0).then(|| self.delay_sum_ms / self.tx_observed as f64)
    }

    /// Share of resources carrying a successful transmission.
    pub fn cu(&self) -> Option<f64> {
        (self.observed_units > 0).then(|| {
            let ok = (self.tx_observed - self.collided_observed) as f64;
            ok * self.tx_weight / (self.observed_units as f64 * self.capacity)
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn estimators() {
        let mut s = ReplicationStats::new(2, 25.0);
        assert_eq!(s.p_col(), None);
        s.record_transmission(0, true, 10.0);
        s.record_transmission(1, true, 20.0);
        s.record_transmission(1, false, 1e6);
        s.record_collision(true);
        s.observed_units = 4;
        assert_eq!(s.p_col(), Some(0.5));
        assert_eq!(s.d_avg_ms(), Some(15.0));
        assert_eq!(s.cu(), Some(1.0 / 100.0));
        assert_eq!(s.totals().transmitted, 3);
    }
}
