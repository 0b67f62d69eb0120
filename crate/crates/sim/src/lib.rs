//! Discrete-event simulation of the two sidelink MAC protocols.
//!
//! Each replication simulates `N` vehicles sharing one collision domain with
//! the same traffic as the analytic model. Replications run in parallel and
//! are merged in replication order, so results depend only on the seed.

pub mod cv2x;
pub mod dot11p;
pub mod report;
pub mod stats;
pub mod trace;
pub mod traffic;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;
use v2xmac_core::scenario::{ConfigError, ScenarioConfig};
use v2xmac_core::Technology;

pub use report::{Ci95, SimReport};
pub use stats::{ReplicationStats, VehicleCounts};
pub use trace::{CsvTraceWriter, EventKind, TraceEvent, TraceSink, VecSink};

/// Runs shorter than this leave too little after the warm-up.
pub const MIN_DURATION_S: f64 = 10.0;
pub const DEFAULT_WARMUP_S: f64 = 2.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("duration {0} s is below the minimum of {MIN_DURATION_S} s")]
    InvalidDuration(f64),
    #[error("at least one replication is required")]
    NoReplications,
    #[error("invalid scenario: {0}")]
    Scenario(#[from] ConfigError),
}

/// Run-level settings shared by all replications.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunSpec {
    pub vehicles: u32,
    pub seed: u64,
    pub duration_s: f64,
    pub warmup_s: f64,
    pub cam_enabled: bool,
    pub denm_enabled: bool,
}

impl RunSpec {
    pub(crate) fn duration_ms(&self) -> u64 {
        (self.duration_s * 1000.0).round() as u64
    }

    pub(crate) fn warmup_ms(&self) -> u64 {
        (self.warmup_s * 1000.0).round() as u64
    }
}

/// Stream `(replication << 32) | vehicle` of the seeded generator.
pub(crate) fn vehicle_rng(seed: u64, replication: u64, vehicle: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((replication << 32) | vehicle as u64);
    rng
}

/// A validated simulation setup.
#[derive(Debug, Clone)]
pub struct Simulation {
    tech: Technology,
    scenario: ScenarioConfig,
    setup: RunSpec,
}

impl Simulation {
    pub fn new(tech: Technology, scenario: &ScenarioConfig, seed: u64, duration_s: f64) -> Result<Self, SimError> {
        if !(duration_s >= MIN_DURATION_S && duration_s.is_finite()) {
            return Err(SimError::InvalidDuration(duration_s));
        }
        scenario.validate()?;
        Ok(Self {
            tech,
            scenario: scenario.clone(),
            setup: RunSpec {
                vehicles: scenario.vehicles,
                seed,
                duration_s,
                warmup_s: DEFAULT_WARMUP_S,
                cam_enabled: true,
                denm_enabled: true,
            },
        })
    }

    /// Switches the generators on or off, e.g. for silent-channel checks.
    pub fn with_traffic(mut self, cam: bool, denm: bool) -> Self {
        self.setup.cam_enabled = cam;
        self.setup.denm_enabled = denm;
        self
    }

    pub fn setup(&self) -> &RunSpec {
        &self.setup
    }

    pub fn run_replication(&self, replication: u64, sink: Option<&mut dyn TraceSink>) -> ReplicationStats {
        let mut tracer = trace::Tracer::new(sink);
        match self.tech {
            Technology::Cv2x => cv2x::run(&self.setup, &self.scenario.cv2x, &self.scenario.traffic, replication, &mut tracer),
            Technology::Dot11p => {
                dot11p::run(&self.setup, &self.scenario.dot11p, &self.scenario.traffic, replication, &mut tracer)
            }
        }
    }

    pub fn run(&self, replications: u32) -> Result<SimReport, SimError> {
        if replications == 0 {
            return Err(SimError::NoReplications);
        }
        let stats: Vec<ReplicationStats> = (0..u64::from(replications))
            .into_par_iter()
            .map(|r| self.run_replication(r, None))
            .collect();
        Ok(SimReport::from_replications(
            self.tech,
            self.setup.vehicles,
            self.setup.seed,
            self.setup.duration_s,
            self.setup.warmup_s,
            stats,
        ))
    }
}

/// Simulates `replications` independent runs of `duration_s` seconds.
pub fn run_sim(
    tech: Technology,
    scenario: &ScenarioConfig,
    seed: u64,
    duration_s: f64,
    replications: u32,
) -> Result<SimReport, SimError> {
    Simulation::new(tech, scenario, seed, duration_s)?.run(replications)
}
