//! Collision probability, average delay and channel utilisation at a fixed
//! point.

use crate::coupling::{solve_coupled, CouplingError, MacSolution, Technology};
use crate::cv2x::{Cv2xParams, Cv2xSolution};
use crate::dot11p::{solve_dot11p, state_delays, ContentionWeights, DelayTable, Dot11pParams, Dot11pSolution};
use crate::error::ModelError;
use crate::scenario::ScenarioConfig;
use crate::traffic::QueueSolution;

/// C-V2X collision probability.
///
/// A vehicle reselects once per cycle of `1/π_{1,0}` subframes. The
/// probability that its selection window overlaps another vehicle's is
/// `p̃ = 1 − Π_{i=0}^{Γ−1}(1 − 1/(1/π_{1,0} − i))`; such a pair then collides
/// unless the resource is kept, with one of the `CSR_tot − N + 1` resources
/// left after the `N − 1` occupied ones are excluded:
/// `P_col = 1 − [1 − p̃(1 − P_rk)/(CSR_tot − N + 1)]^{N−1}`.
pub fn collision_prob_cv2x(sol: &Cv2xSolution, params: &Cv2xParams, vehicles: u32) -> Result<f64, ModelError> {
    let csr_total = params.csr_total();
    if vehicles > csr_total {
        return Err(ModelError::ResourceExhaustion { vehicles, resources: csr_total });
    }
    if vehicles <= 1 {
        return Ok(0.0);
    }
    let cycle = 1.0 / sol.pi_first_opportunity();
    let g = params.gamma;
    if !(cycle > f64::from(g - 1)) {
        return Err(ModelError::OutOfDomain(format!(
            "reselection cycle {cycle} subframes is shorter than the selection window {g}"
        )));
    }
    let disjoint: f64 = (0..g).map(|i| 1.0 - 1.0 / (cycle - f64::from(i))).product();
    let overlap = 1.0 - disjoint;
    let free = f64::from(csr_total - vehicles + 1);
    let clash = overlap * (1.0 - params.p_keep) / free;
    Ok(1.0 - (1.0 - clash).powi(vehicles as i32 - 1))
}

/// 802.11p collision probability `1 − P_suc`, where `P_suc` is the
/// probability that exactly one of `N` vehicles accesses the channel given
/// that at least one does. Per slot a vehicle accesses with
/// `τ = π_{I,0} + π_{A_Ω} + Σπ_{Tx,i}` and does so alone with
/// `(1−θ)(π_{I,0} + π_{A_Ω}) + Σπ_{Tx,i}`.
pub fn collision_prob_dot11p(sol: &Dot11pSolution, vehicles: u32) -> Result<f64, ModelError> {
    let tau = sol.access_probability();
    if tau <= 0.0 {
        return Err(ModelError::NoTransmitter);
    }
    let edge = sol.pi_sense[0] + sol.pi_a[sol.pi_a.len() - 1];
    let alone = (1.0 - sol.theta) * edge + sol.p_t;
    let n = f64::from(vehicles);
    // (1−τ)^k and 1 − (1−τ)^N without cancellation for small τ.
    let log_idle = (-tau).ln_1p();
    let p_suc = n * alone * ((n - 1.0) * log_idle).exp() / -(n * log_idle).exp_m1();
    Ok((1.0 - p_suc).clamp(0.0, 1.0))
}

/// C-V2X average delay in ms: the `i`-th queued packet waits
/// `(2i − 1)/(2P_txo)` subframes, averaged over the non-empty queue states.
pub fn avg_delay_cv2x(queue: &QueueSolution, p_txo: f64) -> Result<f64, ModelError> {
    if queue.p_qe >= 1.0 {
        return Err(ModelError::EmptySystem);
    }
    if !(p_txo > 0.0) {
        return Err(ModelError::InvalidParameter {
            name: "P_txo",
            value: p_txo,
            reason: "must be positive",
        });
    }
    let weighted: f64 = queue
        .pi
        .iter()
        .enumerate()
        .skip(1)
        .map(|(i, p)| (2.0 * i as f64 - 1.0) / (2.0 * p_txo) * p)
        .sum();
    Ok(weighted / (1.0 - queue.p_qe))
}

/// 802.11p average delay.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dot11pDelay {
    pub slots: f64,
    pub us: f64,
    pub ms: f64,
}

/// 802.11p average delay:
/// `ϑ + 1 + Σ_{i=1}^{Ω−1}(1−θ)^i + Σ_k D_k π_k / (1 − π_Idle − Σπ_Tx − Σπ_A)`,
/// the last sum running over the contention states `B`, `(s,A_j)`, `(I,s)`
/// and `(Δ_s,j)`. The conditioning mass equals the total mass of those
/// states; both numerator and denominator are evaluated from
/// [`ContentionWeights`], which cancels their common factor `θ` so the limit
/// `θ → 0` is handled exactly.
pub fn avg_delay_dot11p(sol: &Dot11pSolution, delays: &DelayTable, params: &Dot11pParams) -> Result<Dot11pDelay, ModelError> {
    if sol.pi_tx.iter().all(|&p| p <= 0.0) {
        return Err(ModelError::DegenerateConditional);
    }
    let theta = sol.theta;
    let w = ContentionWeights::new(params, theta);
    let mass = w.total();
    if !(mass > 0.0) {
        return Err(ModelError::DegenerateConditional);
    }
    let dot = |ws: &[f64], ds: &[f64]| ws.iter().zip(ds).map(|(a, b)| a * b).sum::<f64>();
    let mut weighted = dot(&w.busy, &delays.busy) + dot(&w.sense, &delays.sense);
    for k in 0..w.sense.len() {
        weighted += dot(&w.backoff_aifs[k], &delays.backoff_aifs[k]);
        weighted += dot(&w.defer[k], &delays.defer[k]);
    }
    let omega = params.aifs_slots();
    let aifs_tail: f64 = (1..omega).map(|i| (1.0 - theta).powi(i as i32)).sum();
    let slots = f64::from(params.tx_slots) + 1.0 + aifs_tail + weighted / mass;
    let us = slots * params.slot_us;
    Ok(Dot11pDelay { slots, us, ms: us / 1000.0 })
}

/// Average number of vehicles transmitting successfully at once, per
/// subframe-sized resource column for C-V2X (`CSR_tot/Γ` resources per
/// subframe) and per slot for 802.11p.
pub fn channel_utilization(tech: Technology, p_t: f64, vehicles: u32, p_col: f64, cv2x: &Cv2xParams) -> f64 {
    let users = p_t * f64::from(vehicles) * (1.0 - p_col);
    match tech {
        Technology::Cv2x => users / (f64::from(cv2x.csr_total()) / f64::from(cv2x.gamma)),
        Technology::Dot11p => users,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub tech: Technology,
    pub vehicles: u32,
    pub p_col: f64,
    pub d_avg_ms: f64,
    /// 802.11p delay in slots; `None` for C-V2X.
    pub d_avg_slots: Option<f64>,
    pub cu_avg: f64,
    /// `None` for 802.11p.
    pub p_txo: Option<f64>,
    pub theta: f64,
    pub p_t: f64,
    pub p_qe: f64,
    pub p_arr: f64,
    /// `None` for 802.11p.
    pub csr_total: Option<u32>,
    /// CAM interval in force at the fixed point (differs from the configured
    /// one only with adaptive CAM rate).
    pub cam_interval: u32,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EvaluateError {
    #[error(transparent)]
    Coupling(#[from] CouplingError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Solves the fixed point of `tech` and evaluates all metrics there.
pub fn evaluate(tech: Technology, scenario: &ScenarioConfig) -> Result<MetricsReport, EvaluateError> {
    let fp = solve_coupled(tech, scenario)?;
    let n = scenario.vehicles;
    let sw = &fp.last_sweep;
    let base = MetricsReport {
        tech,
        vehicles: n,
        p_col: 0.0,
        d_avg_ms: 0.0,
        d_avg_slots: None,
        cu_avg: 0.0,
        p_txo: None,
        theta: fp.state.theta,
        p_t: fp.state.p_t,
        p_qe: fp.state.p_qe,
        p_arr: fp.state.p_arr,
        csr_total: None,
        cam_interval: sw.cam_interval,
        iterations: fp.iterations,
        converged: fp.converged,
    };
    let report = match &sw.mac {
        MacSolution::Cv2x(sol) => {
            let p_col = collision_prob_cv2x(sol, &scenario.cv2x, n)?;
            MetricsReport {
                p_col,
                d_avg_ms: avg_delay_cv2x(&sw.queue, sol.p_txo)?,
                cu_avg: channel_utilization(tech, sol.p_t, n, p_col, &scenario.cv2x),
                p_txo: Some(sol.p_txo),
                csr_total: Some(scenario.cv2x.csr_total()),
                ..base
            }
        }
        MacSolution::Dot11p(_) => {
            // The sweep solved the chain at the previous busy ratio; evaluate
            // at the converged one so that θ = update_theta(P_t, N) exactly.
            let st = fp.state;
            let sol = &solve_dot11p(&scenario.dot11p, st.p_qe, st.p_arr, st.theta)?;
            let p_col = collision_prob_dot11p(sol, n)?;
            let delays = state_delays(&scenario.dot11p, sol.theta)?;
            let d = avg_delay_dot11p(sol, &delays, &scenario.dot11p)?;
            MetricsReport {
                p_col,
                d_avg_ms: d.ms,
                d_avg_slots: Some(d.slots),
                cu_avg: channel_utilization(tech, sol.p_t, n, p_col, &scenario.cv2x),
                ..base
            }
        }
    };
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cv2x::solve_cv2x;
    use crate::traffic::solve_queue;

    #[test]
    fn single_vehicle_never_collides() {
        let p = Cv2xParams::default();
        let s = solve_cv2x(&p, 0.5, 0.2).unwrap();
        assert_eq!(collision_prob_cv2x(&s, &p, 1).unwrap(), 0.0);
        let d = solve_dot11p(&Dot11pParams::default(), 0.5, 0.2, 0.0).unwrap();
        assert!(collision_prob_dot11p(&d, 1).unwrap().abs() < 1e-12);
    }

    #[test]
    fn too_many_vehicles() {
        let p = Cv2xParams::standard(20).unwrap();
        let s = solve_cv2x(&p, 0.5, 0.2).unwrap();
        assert!(matches!(collision_prob_cv2x(&s, &p, 501), Err(ModelError::ResourceExhaustion { .. })));
    }

    #[test]
    fn certain_access_collides_for_two() {
        // Everyone always in a transmit state: exactly-one is impossible.
        let mut d = solve_dot11p(&Dot11pParams::default(), 0.0, 1.0, 0.5).unwrap();
        d.pi_sense[0] = 0.0;
        let last = d.pi_a.len() - 1;
        d.pi_a[last] = 0.0;
        d.pi_tx = vec![1.0 / 14.0; 14];
        d.p_t = 1.0;
        assert_eq!(collision_prob_dot11p(&d, 2).unwrap(), 1.0);
    }

    #[test]
    fn single_slot_queue_delay() {
        let q = solve_queue(0.0, 0.25, 0.5, 1).unwrap();
        let d = avg_delay_cv2x(&q, 0.01).unwrap();
        assert!((d - 50.0).abs() < 1e-9);
        let d2 = avg_delay_cv2x(&q, 0.02).unwrap();
        assert!((d2 - d / 2.0).abs() < 1e-9);
    }

    #[test]
    fn empty_queue_has_no_delay() {
        let q = solve_queue(0.0, 0.0, 0.5, 10).unwrap();
        assert_eq!(avg_delay_cv2x(&q, 0.01), Err(ModelError::EmptySystem));
    }

    #[test]
    fn utilization_forms() {
        let p = Cv2xParams::default();
        assert_eq!(channel_utilization(Technology::Cv2x, 0.01, 100, 1.0, &p), 0.0);
        assert_eq!(channel_utilization(Technology::Dot11p, 0.01, 0, 0.1, &p), 0.0);
        // One resource per subframe reduces the C-V2X form to the 802.11p one.
        let one = Cv2xParams { csrs_per_subframe: 1, ..p };
        let a = channel_utilization(Technology::Cv2x, 0.01, 100, 0.2, &one);
        let b = channel_utilization(Technology::Dot11p, 0.01, 100, 0.2, &one);
        assert_eq!(a, b);
        assert_eq!(f64::from(p.csr_total()) / f64::from(p.gamma), 25.0);
    }

    #[test]
    fn quiet_channel_delay() {
        let p = Dot11pParams::default();
        let s = solve_dot11p(&p, 0.5, 0.2, 0.0).unwrap();
        let d = avg_delay_dot11p(&s, &state_delays(&p, 0.0).unwrap(), &p).unwrap();
        // ϑ + 1 + (Ω − 1) plus the conditional contention term.
        assert!(d.slots > 14.0 + 1.0 + 8.0);
        assert!((d.us - 13.0 * d.slots).abs() < 1e-9);
    }
}
