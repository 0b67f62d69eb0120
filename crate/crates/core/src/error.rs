use thiserror::Error;

/// Failures of the closed-form model evaluations.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },
    #[error("queue chain is degenerate: departures impossible while arrivals occur")]
    DegenerateQueue,
    #[error("the queue is never non-empty, so the MAC chain is undefined")]
    IdleQueue,
    #[error("the channel is permanently busy (theta = 1)")]
    ChannelSaturated,
    #[error("steady-state mass is {mass}, expected 1")]
    InvalidMass { mass: f64 },
    #[error("{vehicles} vehicles exceed the {resources} resources in the selection window")]
    ResourceExhaustion { vehicles: u32, resources: u32 },
    #[error("no vehicle ever transmits, collision probability undefined")]
    NoTransmitter,
    #[error("the queue is always empty, delay undefined")]
    EmptySystem,
    #[error("conditioning mass of the contention states is zero")]
    DegenerateConditional,
    #[error("model used outside its validity domain: {0}")]
    OutOfDomain(String),
}

pub(crate) fn check_probability(name: &'static str, value: f64) -> Result<(), ModelError> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(ModelError::InvalidParameter {
            name,
            value,
            reason: "must lie in [0, 1]",
        })
    }
}
