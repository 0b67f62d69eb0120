//! Analytical models of C-V2X Mode 4 (sensing-based semi-persistent
//! scheduling) and IEEE 802.11p (CSMA/CA) medium access.
//!
//! Each vehicle is described by five coupled discrete-time Markov chains:
//! a CAM generator, a DENM generator, a transmit queue and one MAC chain per
//! technology. The chains share linking probabilities (transmit probability,
//! queue-empty probability, arrival probability and channel-busy probability)
//! that are resolved jointly by [`coupling::solve_coupled`]. Performance
//! metrics are then read off the converged state by [`metrics`].
//!
//! The [`oracle`] module solves any explicit transition matrix numerically and
//! is used to cross-check every closed form in the crate.

// `!(x > 0.0)` guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod chains;
pub mod coupling;
pub mod cv2x;
pub mod dot11p;
pub mod error;
pub mod metrics;
pub mod oracle;
pub mod scenario;
pub mod traffic;

pub use coupling::{solve_coupled, CouplingState, FixedPointReport, Technology};
pub use error::ModelError;
pub use metrics::{evaluate, MetricsReport};
pub use scenario::ScenarioConfig;
