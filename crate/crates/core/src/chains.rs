//! Explicit transition matrices of the five chains.
//!
//! These are built arc by arc from the state diagrams and never consult the
//! closed forms, so solving them with [`solve_steady_state`] gives an
//! independent check. State orders match the `to_vector` methods of the
//! corresponding solutions.

use std::str::FromStr;

use crate::coupling::CouplingState;
use crate::cv2x::Cv2xParams;
use crate::dot11p::Dot11pParams;
use crate::oracle::{solve_steady_state, OracleError, TransitionMatrix, TransitionMatrixBuilder};
use crate::scenario::ScenarioConfig;
use crate::traffic::{combine_transition_probs, GeneratorKind, GeneratorSolution, TrafficParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ChainKind {
    Cam,
    Denm,
    Queue,
    Cv2x,
    Dot11p,
}

impl ChainKind {
    pub const ALL: [ChainKind; 5] = [Self::Cam, Self::Denm, Self::Queue, Self::Cv2x, Self::Dot11p];
}

impl FromStr for ChainKind {
    type Err = OracleError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "cam" => Ok(Self::Cam),
            "denm" => Ok(Self::Denm),
            "queue" => Ok(Self::Queue),
            "cv2x" => Ok(Self::Cv2x),
            "dot11p" | "11p" => Ok(Self::Dot11p),
            _ => Err(OracleError::UnknownChainKind(s.to_owned())),
        }
    }
}

fn invalid(msg: impl Into<String>) -> OracleError {
    OracleError::InvalidParameters(msg.into())
}

/// Generator chain. `trigger` is `Some((p, 1/K))` for the DENM generator:
/// the idle state triggers with `p` and an event ends with `1/K`.
fn generator_chain(period: u32, p_t: f64, trigger: Option<(f64, f64)>) -> Result<TransitionMatrix, OracleError> {
    if period < 2 {
        return Err(invalid("generator period must be at least 2"));
    }
    let t = period as usize;
    let off = usize::from(trigger.is_some());
    let tx = |j: usize| off + j;
    let txp = |j: usize| off + t + j;
    let mut labels = Vec::with_capacity(2 * t + off);
    if off == 1 {
        labels.push("idle".to_owned());
    }
    labels.extend((0..t).map(|j| format!("tx,{j}")));
    labels.extend((0..t).map(|j| format!("tx',{j}")));

    let mut b = TransitionMatrixBuilder::new(labels);
    let repeat = match trigger {
        Some((p, end)) => {
            b.add(0, 0, 1.0 - p).add(0, tx(0), p).add(tx(0), 0, end);
            1.0 - end
        }
        None => 1.0,
    };
    b.add(tx(0), tx(t - 1), repeat * p_t).add(tx(0), txp(t - 1), repeat * (1.0 - p_t));
    for j in 1..t {
        b.add(tx(j), tx(j - 1), 1.0);
        b.add(txp(j), tx(j - 1), p_t).add(txp(j), txp(j - 1), 1.0 - p_t);
    }
    b.add(txp(0), txp(t - 1), 1.0);
    b.build()
}

/// CAM generator: rows `tx,0..T−1` then `tx',0..T−1`.
pub fn cam_chain(period: u32, p_t: f64) -> Result<TransitionMatrix, OracleError> {
    generator_chain(period, p_t, None)
}

/// DENM generator: `idle`, then the same rows as the CAM generator.
pub fn denm_chain(params: &TrafficParams, p_t: f64) -> Result<TransitionMatrix, OracleError> {
    if params.denm_repeats < 1 {
        return Err(invalid("K must be at least 1"));
    }
    let end = 1.0 / f64::from(params.denm_repeats);
    generator_chain(params.denm_interval, p_t, Some((params.trigger_probability(), end)))
}

/// Queue lengths `0..M`; an arrival at a full queue is dropped.
pub fn queue_chain(alpha: f64, alpha1: f64, beta: f64, capacity: u32) -> Result<TransitionMatrix, OracleError> {
    let m = capacity as usize;
    let mut b = TransitionMatrixBuilder::new((0..=m).map(|i| i.to_string()).collect());
    b.add(0, 1, alpha1).add(0, 0, 1.0 - alpha1);
    for i in 1..=m {
        let up = if i < m { alpha } else { 0.0 };
        b.add(i, i - 1, beta).add(i, i, 1.0 - up - beta);
        if up > 0.0 {
            b.add(i, i + 1, up);
        }
    }
    b.build()
}

/// C-V2X chain: `idle`, `w,0..Γ−2`, then `i,0..Γ−1` for `i ∈ [1, R_h]`.
pub fn cv2x_chain(params: &Cv2xParams, p_qe: f64, p_arr: f64) -> Result<TransitionMatrix, OracleError> {
    params.validate().map_err(|e| invalid(e.to_string()))?;
    let g = params.gamma as usize;
    let (rl, rh) = (params.rc_low as usize, params.rc_high as usize);
    let p_qne = 1.0 - p_qe;
    let (p_rk, p_sch) = (params.p_keep, params.p_sched);
    let a = (p_arr + p_qne * (1.0 - p_arr)) * p_sch;
    let w = |j: usize| 1 + j;
    let rc = |i: usize, j: usize| g + (i - 1) * g + j;

    let mut labels = vec!["idle".to_owned()];
    labels.extend((0..g - 1).map(|j| format!("w,{j}")));
    for i in 1..=rh {
        labels.extend((0..g).map(|j| format!("{i},{j}")));
    }
    let mut b = TransitionMatrixBuilder::new(labels);
    let uniform_w = 1.0 / (g - 1) as f64;

    b.add(0, 0, 1.0 - a);
    for j in 0..g - 1 {
        b.add(0, w(j), a * uniform_w);
    }
    for j in 1..g - 1 {
        b.add(w(j), w(j - 1), 1.0);
    }
    let draw = 1.0 / (1 + rh - rl) as f64;
    for i in rl..=rh {
        b.add(w(0), rc(i, 0), draw);
    }
    for i in 1..=rh {
        for j in 1..g {
            b.add(rc(i, j), rc(i, j - 1), 1.0);
        }
        b.add(rc(i, 0), rc(i, g - 1), p_qe);
        if i > 1 {
            b.add(rc(i, 0), rc(i - 1, g - 1), p_qne);
        }
    }
    b.add(rc(1, 0), w(g - 2), p_qne * p_rk);
    for j in 0..g - 1 {
        b.add(rc(1, 0), w(j), p_qne * (1.0 - p_rk) * p_sch * uniform_w);
    }
    b.add(rc(1, 0), 0, p_qne * (1.0 - p_rk) * (1.0 - p_sch));
    b.build()
}

/// 802.11p chain, in the order documented on
/// [`Dot11pSolution::to_vector`](crate::dot11p::Dot11pSolution::to_vector).
pub fn dot11p_chain(params: &Dot11pParams, p_qe: f64, p_arr: f64, theta: f64) -> Result<TransitionMatrix, OracleError> {
    params.validate().map_err(|e| invalid(e.to_string()))?;
    let omega = params.aifs_slots() as usize;
    let vt = params.tx_slots as usize;
    let stages = params.stages();
    let per_stage = (omega - 1) + 1 + vt;

    let a = |i: usize| i; // A_i, i ∈ [1, Ω]
    let busy = |i: usize| omega + i; // B_i, i ∈ [1, ϑ]
    let stage_base = |k: usize| 1 + omega + vt + k * per_stage;
    let backoff = |k: usize, j: usize| stage_base(k) + j - 1; // (s, A_j), j ∈ [1, Ω−1]
    let sense = |k: usize| stage_base(k) + omega - 1;
    let defer = |k: usize, j: usize| stage_base(k) + omega - 1 + j; // j ∈ [1, ϑ]
    let tx = |i: usize| stage_base(stages.len()) + i - 1;

    let mut labels = vec!["idle".to_owned()];
    labels.extend((1..=omega).map(|i| format!("A{i}")));
    labels.extend((1..=vt).map(|i| format!("B,{i}")));
    for &s in &stages {
        labels.extend((1..omega).map(|j| format!("{s},A{j}")));
        labels.push(format!("I,{s}"));
        labels.extend((1..=vt).map(|j| format!("D{s},{j}")));
    }
    labels.extend((1..=vt).map(|i| format!("Tx,{i}")));

    let mut b = TransitionMatrixBuilder::new(labels);
    let start = 1.0 - p_qe * (1.0 - p_arr);
    b.add(0, 0, 1.0 - start).add(0, a(1), start);

    for i in 1..=omega {
        let next = if i < omega { a(i + 1) } else { tx(1) };
        b.add(a(i), next, 1.0 - theta);
        if i == 1 {
            for k in 1..=vt {
                b.add(a(1), busy(k), theta / vt as f64);
            }
        } else {
            b.add(a(i), busy(1), theta);
        }
    }
    for i in 1..vt {
        b.add(busy(i), busy(i + 1), 1.0);
    }
    for (k, &s) in stages.iter().enumerate() {
        b.add(busy(vt), backoff(k, 1), params.stage_weight(s));
        for j in 1..omega - 1 {
            b.add(backoff(k, j), backoff(k, j + 1), 1.0);
        }
        b.add(backoff(k, omega - 1), sense(k), 1.0);
        let idle_next = match s {
            0 => tx(1),
            2 => sense(0),
            _ => sense(k - 1),
        };
        b.add(sense(k), idle_next, 1.0 - theta).add(sense(k), defer(k, 1), theta);
        for j in 1..vt {
            b.add(defer(k, j), defer(k, j + 1), 1.0);
        }
        b.add(defer(k, vt), backoff(k, 1), 1.0);
    }
    for i in 1..vt {
        b.add(tx(i), tx(i + 1), 1.0);
    }
    b.add(tx(vt), 0, 1.0);
    b.build()
}

fn generator_from_oracle(kind: GeneratorKind, m: &TransitionMatrix) -> Result<GeneratorSolution, OracleError> {
    let pi = solve_steady_state(m)?.probabilities;
    let (pi_idle, rows) = match kind {
        GeneratorKind::Cam => (0.0, &pi[..]),
        GeneratorKind::Denm => (pi[0], &pi[1..]),
    };
    let t = rows.len() / 2;
    Ok(GeneratorSolution {
        kind,
        pi_tx: rows[..t].to_vec(),
        pi_txp: rows[t..].to_vec(),
        pi_idle,
    })
}

/// Builds the chain `kind` at the operating point `coupling`.
///
/// For the queue the transition probabilities are derived from the
/// generator chains solved numerically at `coupling.p_t`.
pub fn build_chain(kind: ChainKind, scenario: &ScenarioConfig, coupling: &CouplingState) -> Result<TransitionMatrix, OracleError> {
    let traffic = &scenario.traffic;
    match kind {
        ChainKind::Cam => cam_chain(traffic.cam_interval, coupling.p_t),
        ChainKind::Denm => denm_chain(traffic, coupling.p_t),
        ChainKind::Queue => {
            let cam = generator_from_oracle(GeneratorKind::Cam, &cam_chain(traffic.cam_interval, coupling.p_t)?)?;
            let denm = generator_from_oracle(GeneratorKind::Denm, &denm_chain(traffic, coupling.p_t)?)?;
            let q = combine_transition_probs(&cam, &denm, coupling.p_t, traffic);
            queue_chain(q.alpha, q.alpha1, q.beta, traffic.queue_capacity)
        }
        ChainKind::Cv2x => cv2x_chain(&scenario.cv2x, coupling.p_qe, coupling.p_arr),
        ChainKind::Dot11p => dot11p_chain(&scenario.dot11p, coupling.p_qe, coupling.p_arr, coupling.theta),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_kinds() {
        assert_eq!("CAM".parse::<ChainKind>().unwrap(), ChainKind::Cam);
        assert!(matches!("bogus".parse::<ChainKind>(), Err(OracleError::UnknownChainKind(_))));
    }

    #[test]
    fn state_counts() {
        let s = ScenarioConfig::default();
        let c = CouplingState::initial();
        assert_eq!(build_chain(ChainKind::Cam, &s, &c).unwrap().len(), 200);
        assert_eq!(build_chain(ChainKind::Denm, &s, &c).unwrap().len(), 201);
        assert_eq!(build_chain(ChainKind::Queue, &s, &c).unwrap().len(), 11);
        // 1 idle + 19 waiting + 75 counter rows of 20 subframes.
        let mut s20 = s.clone();
        s20.cv2x = Cv2xParams::standard(20).unwrap();
        assert_eq!(build_chain(ChainKind::Cv2x, &s20, &c).unwrap().len(), 1520);
        // 1 + 9 + 14 + 14 stages × (8 + 1 + 14) + 14.
        assert_eq!(build_chain(ChainKind::Dot11p, &s, &c).unwrap().len(), 360);
    }

    #[test]
    fn backoff_stage_weights_on_the_matrix() {
        let p = Dot11pParams::default();
        let m = dot11p_chain(&p, 0.5, 0.2, 0.3).unwrap();
        let b = m.labels().index_of("B,14").unwrap();
        let to_stage = |s: u32| m.get(b, m.labels().index_of(&format!("{s},A1")).unwrap());
        assert!((to_stage(0) - 2.0 * to_stage(2)).abs() < 1e-15);
        for s in 3..15 {
            assert_eq!(to_stage(s), to_stage(2));
        }
        assert!(m.labels().index_of("1,A1").is_none());
        assert!(m.labels().index_of("I,1").is_none());
    }

    #[test]
    fn queue_never_exceeds_capacity() {
        let m = queue_chain(0.4, 0.3, 0.2, 3).unwrap();
        assert_eq!(m.len(), 4);
        assert!((m.get(3, 3) - 0.8).abs() < 1e-15);
    }
}
