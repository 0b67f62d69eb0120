//! CAM and DENM packet generators and the shared device queue.
//!
//! Time advances in subframes of 1 ms. A generator sits in row `tx` while
//! its last packet has left, and in row `tx'` while a generated packet still
//! waits for a transmit opportunity; the column counts subframes until the
//! next generation. The DENM generator additionally owns an `Idle` state in
//! which it waits for the triggering event.

use crate::error::{check_probability, ModelError};

/// Default trigger window: one subframe.
pub const DEFAULT_TRIGGER_WINDOW_S: f64 = 0.001;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrafficParams {
    /// CAM inter-generation time `T_C` in subframes.
    pub cam_interval: u32,
    /// DENM repetition interval `T_D` in subframes.
    pub denm_interval: u32,
    /// Transmissions per DENM event `K`.
    pub denm_repeats: u32,
    /// DENM trigger intensity `λ` in events per second.
    pub denm_rate: f64,
    /// Length `T̃` of the DENM trigger window in seconds.
    pub trigger_window_s: f64,
    /// Queue capacity `M` in packets.
    pub queue_capacity: u32,
}

impl Default for TrafficParams {
    fn default() -> Self {
        Self {
            cam_interval: 100,
            denm_interval: 100,
            denm_repeats: 5,
            denm_rate: 1.0,
            trigger_window_s: DEFAULT_TRIGGER_WINDOW_S,
            queue_capacity: 10,
        }
    }
}

impl TrafficParams {
    /// Checks the ranges mandated by the message standards.
    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |name, value: f64, reason| {
            Err(ModelError::InvalidParameter { name, value, reason })
        };
        if !(100..=1000).contains(&self.cam_interval) {
            return bad("traffic.t_c", self.cam_interval.into(), "must lie in [100, 1000] ms");
        }
        if self.denm_interval < 2 {
            return bad("traffic.t_d", self.denm_interval.into(), "must be at least 2 ms");
        }
        if !(1..=9).contains(&self.denm_repeats) {
            return bad("traffic.k", self.denm_repeats.into(), "must lie in [1, 9]");
        }
        if !(self.denm_rate > 0.0 && self.denm_rate.is_finite()) {
            return bad("traffic.lambda", self.denm_rate, "must be positive");
        }
        if !(self.trigger_window_s > 0.0 && self.trigger_window_s.is_finite()) {
            return bad("traffic.t_tilde", self.trigger_window_s, "must be positive");
        }
        if self.queue_capacity < 1 {
            return bad("traffic.m", self.queue_capacity.into(), "must be at least 1");
        }
        Ok(())
    }

    /// Per-subframe DENM trigger probability `1 − exp(−λT̃)`.
    pub fn trigger_probability(&self) -> f64 {
        -(-self.denm_rate * self.trigger_window_s).exp_m1()
    }

    /// Probability that a DENM event is followed by another repetition.
    pub fn repeat_probability(&self) -> f64 {
        1.0 - 1.0 / f64::from(self.denm_repeats)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GeneratorKind {
    Cam,
    Denm,
}

/// Steady state of one packet generator.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorSolution {
    pub kind: GeneratorKind,
    /// `π_{tx,j}` for `j ∈ [0, T−1]`.
    pub pi_tx: Vec<f64>,
    /// `π_{tx',j}` for `j ∈ [0, T−1]`.
    pub pi_txp: Vec<f64>,
    /// `π_Idle`; always 0 for the CAM generator, which has no idle state.
    pub pi_idle: f64,
}

impl GeneratorSolution {
    pub fn total_mass(&self) -> f64 {
        self.pi_idle + self.pi_tx.iter().sum::<f64>() + self.pi_txp.iter().sum::<f64>()
    }

    /// Probabilities in chain order: `[Idle,] tx_0..tx_{T−1}, tx'_0..tx'_{T−1}`.
    pub fn to_vector(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(2 * self.pi_tx.len() + 1);
        if self.kind == GeneratorKind::Denm {
            v.push(self.pi_idle);
        }
        v.extend_from_slice(&self.pi_tx);
        v.extend_from_slice(&self.pi_txp);
        v
    }
}

fn check_transmit_probability(p_t: f64) -> Result<(), ModelError> {
    if p_t > 0.0 && p_t <= 1.0 {
        Ok(())
    } else {
        Err(ModelError::InvalidParameter {
            name: "P_t",
            value: p_t,
            reason: "must lie in (0, 1]; with P_t = 0 the blocked row never drains",
        })
    }
}

/// Shared closed form of both generators.
///
/// `repeat` is the probability that generation at `(tx, 0)` schedules another
/// packet one period later (1 for CAM); `idle_weight` is the mass of the idle
/// state relative to `π_{tx,0}` (0 for CAM).
fn generator(period: u32, p_t: f64, repeat: f64, idle_weight: f64, tail: f64) -> (Vec<f64>, Vec<f64>, f64) {
    let t = period as usize;
    let q = 1.0 - p_t;
    let blocked_cycle = 1.0 - q.powi(period as i32 - 1);
    let row_mass = f64::from(period) * (1.0 - p_t * q.powi(period as i32 - 1)) / blocked_cycle;
    let p0 = 1.0 / (repeat * row_mass + tail + idle_weight);

    let pi_txp: Vec<f64> = (0..t)
        .map(|j| p0 * repeat * q.powi((t - j) as i32) / blocked_cycle)
        .collect();
    let mut pi_tx = vec![0.0; t];
    pi_tx[0] = p0;
    if t > 1 {
        pi_tx[t - 1] = p0 * repeat * p_t;
    }
    let mut suffix = 0.0;
    for j in (1..t.saturating_sub(1)).rev() {
        suffix += pi_txp[j + 1];
        pi_tx[j] = p_t * (repeat * p0 + suffix);
    }
    (pi_tx, pi_txp, p0)
}

/// Closed-form steady state of the CAM generator.
pub fn solve_cam(params: &TrafficParams, p_t: f64) -> Result<GeneratorSolution, ModelError> {
    check_transmit_probability(p_t)?;
    if params.cam_interval < 2 {
        return Err(ModelError::InvalidParameter {
            name: "traffic.t_c",
            value: params.cam_interval.into(),
            reason: "the generator needs at least 2 subframes per period",
        });
    }
    let (pi_tx, pi_txp, _) = generator(params.cam_interval, p_t, 1.0, 0.0, 0.0);
    Ok(GeneratorSolution {
        kind: GeneratorKind::Cam,
        pi_tx,
        pi_txp,
        pi_idle: 0.0,
    })
}

/// Closed-form steady state of the DENM generator.
pub fn solve_denm(params: &TrafficParams, p_t: f64) -> Result<GeneratorSolution, ModelError> {
    check_transmit_probability(p_t)?;
    if params.denm_interval < 2 {
        return Err(ModelError::InvalidParameter {
            name: "traffic.t_d",
            value: params.denm_interval.into(),
            reason: "the generator needs at least 2 subframes per period",
        });
    }
    if params.denm_repeats < 1 {
        return Err(ModelError::InvalidParameter {
            name: "traffic.k",
            value: 0.0,
            reason: "at least one transmission per event",
        });
    }
    let k = f64::from(params.denm_repeats);
    let trigger = params.trigger_probability();
    if trigger <= 0.0 {
        return Err(ModelError::InvalidParameter {
            name: "traffic.lambda",
            value: params.denm_rate,
            reason: "the trigger probability underflows to zero",
        });
    }
    let (pi_tx, pi_txp, p0) = generator(
        params.denm_interval,
        p_t,
        params.repeat_probability(),
        1.0 / (k * trigger),
        1.0 / k,
    );
    Ok(GeneratorSolution {
        kind: GeneratorKind::Denm,
        pi_tx,
        pi_txp,
        pi_idle: p0 / (k * trigger),
    })
}

/// Transition probabilities of the queue chain, with the arrival probability
/// seen by the MAC chains.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QueueInputs {
    /// Growth probability `α` from a non-empty queue.
    pub alpha: f64,
    /// Growth probability `α₁` from the empty queue.
    pub alpha1: f64,
    /// Drain probability `β`.
    pub beta: f64,
    /// Arrival probability given an empty queue, `P_arr`.
    pub p_arr: f64,
}

/// Probability that at least one of two independent events occurs.
pub fn union(x: f64, y: f64) -> f64 {
    x + y - x * y
}

/// Merges the two generators into the queue's transition probabilities.
pub fn combine_transition_probs(
    cam: &GeneratorSolution,
    denm: &GeneratorSolution,
    p_t: f64,
    params: &TrafficParams,
) -> QueueInputs {
    let r = params.repeat_probability();
    let alpha_c = cam.pi_txp[0];
    let alpha1_c = cam.pi_tx[0] * (1.0 - p_t);
    let beta_c = cam.pi_txp[1..].iter().sum::<f64>() * p_t;
    let alpha_d = denm.pi_txp[0];
    let alpha1_d = denm.pi_tx[0] * r * (1.0 - p_t);
    let beta_d = denm.pi_txp[1..].iter().sum::<f64>() * p_t;
    QueueInputs {
        alpha: union(alpha_c, alpha_d),
        alpha1: union(alpha1_c, alpha1_d),
        beta: union(beta_c, beta_d),
        p_arr: union(cam.pi_tx[0], params.trigger_probability()),
    }
}

/// Steady state of the birth-death queue chain.
#[derive(Debug, Clone, PartialEq)]
pub struct QueueSolution {
    /// `π_i` for queue length `i ∈ [0, M]`.
    pub pi: Vec<f64>,
    pub p_qe: f64,
    pub alpha: f64,
    pub alpha1: f64,
    pub beta: f64,
}

impl QueueSolution {
    pub fn p_qne(&self) -> f64 {
        1.0 - self.p_qe
    }
}

/// Closed-form steady state of the queue with capacity `capacity`.
///
/// `π₀ = [1 + α₁(1 − (α/β)^M)/(β − α)]⁻¹` and `π_i = π₀ α₁ α^{i−1} / β^i`.
/// When `α` and `β` are too close for that ratio to be evaluated accurately
/// the geometric sum is accumulated term by term instead (the analytic limit
/// at `α = β` is `[1 + α₁M/β]⁻¹`).
pub fn solve_queue(alpha: f64, alpha1: f64, beta: f64, capacity: u32) -> Result<QueueSolution, ModelError> {
    check_probability("alpha", alpha)?;
    check_probability("alpha1", alpha1)?;
    check_probability("beta", beta)?;
    if capacity < 1 {
        return Err(ModelError::InvalidParameter {
            name: "traffic.m",
            value: 0.0,
            reason: "must be at least 1",
        });
    }
    let m = capacity as usize;
    if alpha1 == 0.0 {
        let mut pi = vec![0.0; m + 1];
        pi[0] = 1.0;
        return Ok(QueueSolution { pi, p_qe: 1.0, alpha, alpha1, beta });
    }
    if beta == 0.0 {
        return Err(ModelError::DegenerateQueue);
    }

    let ratio = alpha / beta;
    let busy_weight = if (1.0 - ratio).abs() > 1e-6 {
        alpha1 * (1.0 - ratio.powi(capacity as i32)) / (beta - alpha)
    } else {
        (0..m).map(|i| alpha1 * ratio.powi(i as i32) / beta).sum()
    };
    let p0 = 1.0 / (1.0 + busy_weight);
    let mut pi = Vec::with_capacity(m + 1);
    pi.push(p0);
    let mut term = p0 * alpha1 / beta;
    for _ in 1..=m {
        pi.push(term);
        term *= ratio;
    }
    Ok(QueueSolution { pi, p_qe: p0, alpha, alpha1, beta })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(t_c: u32) -> TrafficParams {
        TrafficParams { cam_interval: t_c, ..TrafficParams::default() }
    }

    #[test]
    fn cam_always_transmitting_is_a_pure_cycle() {
        let s = solve_cam(&params(5), 1.0).unwrap();
        assert!((s.pi_tx[0] - 0.2).abs() < 1e-15);
        assert!(s.pi_txp.iter().all(|&p| p == 0.0));
        assert!((s.total_mass() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn cam_half_transmit_probability() {
        // π_{tx,0} = 6/31 for T = 5, P = 1/2.
        let s = solve_cam(&params(5), 0.5).unwrap();
        assert!((s.pi_tx[0] - 6.0 / 31.0).abs() < 1e-15);
    }

    #[test]
    fn zero_transmit_probability_is_rejected() {
        assert!(solve_cam(&params(100), 0.0).is_err());
        assert!(solve_denm(&params(100), 0.0).is_err());
    }

    #[test]
    fn denm_single_repeat() {
        let p = TrafficParams { denm_repeats: 1, ..TrafficParams::default() };
        let s = solve_denm(&p, 0.3).unwrap();
        let expected = 1.0 / (1.0 + 1.0 / p.trigger_probability());
        assert!((s.pi_tx[0] - expected).abs() < 1e-15);
        assert!((s.total_mass() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn denm_immediate_retrigger_alternates() {
        let p = TrafficParams { denm_repeats: 1, denm_rate: 1e6, ..TrafficParams::default() };
        let s = solve_denm(&p, 0.3).unwrap();
        assert!((s.pi_tx[0] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn union_rule() {
        assert_eq!(union(0.0, 0.37), 0.37);
        assert_eq!(union(1.0, 1.0), 1.0);
    }

    #[test]
    fn queue_without_arrivals_stays_empty() {
        let q = solve_queue(0.2, 0.0, 0.5, 10).unwrap();
        assert_eq!(q.p_qe, 1.0);
        assert!(q.pi[1..].iter().all(|&p| p == 0.0));
    }

    #[test]
    fn queue_equal_rates_uses_limit() {
        let q = solve_queue(0.3, 0.2, 0.3, 10).unwrap();
        assert!((q.p_qe - 1.0 / (1.0 + 0.2 * 10.0 / 0.3)).abs() < 1e-15);
    }

    #[test]
    fn queue_that_cannot_drain() {
        assert_eq!(solve_queue(0.2, 0.3, 0.0, 10), Err(ModelError::DegenerateQueue));
    }

    #[test]
    fn single_slot_queue() {
        let q = solve_queue(0.0, 0.25, 0.5, 1).unwrap();
        assert!((q.pi[1] - (1.0 - q.p_qe)).abs() < 1e-15);
    }

    #[test]
    fn validation_ranges() {
        assert!(TrafficParams::default().validate().is_ok());
        assert!(params(99).validate().is_err());
        assert!(TrafficParams { denm_repeats: 10, ..TrafficParams::default() }.validate().is_err());
        assert!(TrafficParams { denm_rate: 0.0, ..TrafficParams::default() }.validate().is_err());
    }
}
