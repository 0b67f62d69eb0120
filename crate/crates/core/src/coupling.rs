//! Fixed point linking the generators, the queue and a MAC chain.
//!
//! One sweep evaluates generators → queue inputs → queue → MAC chain and
//! yields new values of the linking probabilities. Sweeps are repeated with
//! damping until the largest change falls below the tolerance.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::cv2x::{solve_cv2x, Cv2xSolution};
use crate::dot11p::{solve_dot11p, update_theta, Dot11pSolution};
use crate::error::ModelError;
use crate::scenario::ScenarioConfig;
use crate::traffic::{combine_transition_probs, solve_cam, solve_denm, solve_queue, QueueInputs, QueueSolution};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Technology {
    Cv2x,
    Dot11p,
}

impl Technology {
    pub const ALL: [Technology; 2] = [Technology::Cv2x, Technology::Dot11p];

    pub fn as_str(self) -> &'static str {
        match self {
            Technology::Cv2x => "cv2x",
            Technology::Dot11p => "dot11p",
        }
    }
}

impl fmt::Display for Technology {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Technology {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "cv2x" => Ok(Technology::Cv2x),
            "dot11p" => Ok(Technology::Dot11p),
            other => Err(format!("unknown technology `{other}` (expected cv2x or dot11p)")),
        }
    }
}

/// Linking probabilities exchanged between the chains.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplingState {
    pub p_t: f64,
    pub p_qe: f64,
    pub p_qne: f64,
    pub p_arr: f64,
    /// Channel busy ratio; always 0 for C-V2X.
    pub theta: f64,
}

impl CouplingState {
    /// The starting point of the iteration.
    pub fn initial() -> Self {
        Self::new(0.01, 0.9, 0.0, 0.1)
    }

    pub fn new(p_t: f64, p_qe: f64, p_arr: f64, theta: f64) -> Self {
        Self { p_t, p_qe, p_qne: 1.0 - p_qe, p_arr, theta }
    }

    fn max_abs_diff(&self, other: &Self) -> f64 {
        [
            self.p_t - other.p_t,
            self.p_qe - other.p_qe,
            self.p_arr - other.p_arr,
            self.theta - other.theta,
        ]
        .iter()
        .fold(0.0, |m, d| m.max(d.abs()))
    }

    fn blend(&self, new: &Self, weight_new: f64) -> Self {
        let mix = |old: f64, new: f64| (1.0 - weight_new) * old + weight_new * new;
        Self::new(
            mix(self.p_t, new.p_t),
            mix(self.p_qe, new.p_qe),
            mix(self.p_arr, new.p_arr),
            mix(self.theta, new.theta),
        )
    }
}

/// Policy that adapts the CAM interval to the observed channel load.
pub trait CamRatePolicy: Send + Sync {
    fn cam_interval(&self, theta: f64, base: u32) -> u32;
}

/// Transmit rate control: stretch `T_C` linearly from `θ = 0.3` to `θ = 0.9`,
/// up to five times the base interval.
#[derive(Debug, Clone, Copy, Default)]
pub struct TransmitRateControl;

impl CamRatePolicy for TransmitRateControl {
    fn cam_interval(&self, theta: f64, base: u32) -> u32 {
        adaptive_cam_rate(theta, base)
    }
}

/// `T_C = base·(1 + 4·clamp((θ − 0.3)/0.6, 0, 1))`, snapped to the
/// 100 ms grid within `[100, 1000]`.
pub fn adaptive_cam_rate(theta: f64, base: u32) -> u32 {
    let stretch = 1.0 + 4.0 * ((theta - 0.3) / 0.6).clamp(0.0, 1.0);
    let t = f64::from(base) * stretch;
    ((t / 100.0).round() * 100.0).clamp(100.0, 1000.0) as u32
}

#[derive(Debug, Clone, PartialEq)]
pub enum MacSolution {
    Cv2x(Cv2xSolution),
    Dot11p(Dot11pSolution),
}

/// Everything one sweep produced.
#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub state: CouplingState,
    pub queue_inputs: QueueInputs,
    pub queue: QueueSolution,
    pub mac: MacSolution,
    pub cam_interval: u32,
}

/// Runs one sweep from `state` and returns the updated linking probabilities.
pub fn sweep(tech: Technology, scenario: &ScenarioConfig, state: &CouplingState) -> Result<Sweep, ModelError> {
    let mut traffic = scenario.traffic;
    if scenario.adaptive_cam && tech == Technology::Dot11p {
        traffic.cam_interval = TransmitRateControl.cam_interval(state.theta, traffic.cam_interval);
    }
    let cam = solve_cam(&traffic, state.p_t)?;
    let denm = solve_denm(&traffic, state.p_t)?;
    let inputs = combine_transition_probs(&cam, &denm, state.p_t, &traffic);
    let queue = solve_queue(inputs.alpha, inputs.alpha1, inputs.beta, traffic.queue_capacity)?;
    let (p_t, theta, mac) = match tech {
        Technology::Cv2x => {
            let s = solve_cv2x(&scenario.cv2x, queue.p_qe, inputs.p_arr)?;
            (s.p_t, 0.0, MacSolution::Cv2x(s))
        }
        Technology::Dot11p => {
            let s = solve_dot11p(&scenario.dot11p, queue.p_qe, inputs.p_arr, state.theta)?;
            (s.p_t, update_theta(s.p_t, scenario.vehicles), MacSolution::Dot11p(s))
        }
    };
    Ok(Sweep {
        state: CouplingState::new(p_t, queue.p_qe, inputs.p_arr, theta),
        queue_inputs: inputs,
        queue,
        mac,
        cam_interval: traffic.cam_interval,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplingOptions {
    pub initial: CouplingState,
    /// Weight of the new value in `x ← (1−w)·x_old + w·x_new`.
    pub damping: f64,
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for CouplingOptions {
    fn default() -> Self {
        Self {
            initial: CouplingState::initial(),
            damping: 0.5,
            tolerance: 1e-8,
            max_iterations: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FixedPointReport {
    pub tech: Technology,
    /// Output of the final sweep, so `θ = update_theta(P_t, N)` holds exactly.
    pub state: CouplingState,
    pub iterations: usize,
    /// Undamped change `max |F(x) − x|` of the final sweep.
    pub residual: f64,
    pub converged: bool,
    /// Intermediate solutions of the final sweep.
    pub last_sweep: Sweep,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CouplingError {
    #[error("no fixed point after {iterations} iterations (residual {residual:e})")]
    NoFixedPoint {
        iterations: usize,
        residual: f64,
        /// Residuals of the last sweeps, oldest first.
        trace: Vec<f64>,
    },
    #[error(transparent)]
    Model(#[from] ModelError),
}

const TRACE_LEN: usize = 32;

pub fn solve_coupled(tech: Technology, scenario: &ScenarioConfig) -> Result<FixedPointReport, CouplingError> {
    solve_coupled_with(tech, scenario, &CouplingOptions::default())
}

pub fn solve_coupled_with(
    tech: Technology,
    scenario: &ScenarioConfig,
    options: &CouplingOptions,
) -> Result<FixedPointReport, CouplingError> {
    let mut state = options.initial;
    if tech == Technology::Cv2x {
        state.theta = 0.0;
    }
    let mut trace = Vec::with_capacity(TRACE_LEN);
    for iteration in 1..=options.max_iterations {
        let next = sweep(tech, scenario, &state)?;
        let residual = next.state.max_abs_diff(&state);
        if residual <= options.tolerance {
            return Ok(FixedPointReport {
                tech,
                state: next.state,
                iterations: iteration,
                residual,
                converged: true,
                last_sweep: next,
            });
        }
        if trace.len() == TRACE_LEN {
            trace.remove(0);
        }
        trace.push(residual);
        state = state.blend(&next.state, options.damping);
    }
    Err(CouplingError::NoFixedPoint {
        iterations: options.max_iterations,
        residual: trace.last().copied().unwrap_or(f64::INFINITY),
        trace,
    })
}
