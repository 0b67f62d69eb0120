//! IEEE 802.11p (ITS-G5 best-effort access) CSMA/CA.
//!
//! One chain step is one `aSlotTime`. A vehicle with a packet listens for
//! `Ω` idle slots (`A_1..A_Ω`) and transmits for `ϑ` slots (`Tx_1..Tx_ϑ`).
//! A busy slot during AIFS sends it to the busy-wait states `B_1..B_ϑ`,
//! after which it draws a backoff stage `s ∈ {0, 2, …, Č−1}` (counter values
//! 0 and 1 both map to stage 0, so stage 0 is twice as likely as any other).
//! Each stage first repeats AIFS in `(s, A_1..A_{Ω−1})`, then senses in
//! `(I, s)`: an idle slot moves down a stage, a busy slot defers for `ϑ`
//! slots in `(Δ_s, 1..ϑ)`. An idle slot at `(I, 0)` starts the transmission.

use crate::error::{check_probability, ModelError};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dot11pParams {
    /// Minimum contention window `Č`.
    pub cw_min: u32,
    pub aifsn: u32,
    pub slot_us: f64,
    pub sifs_us: f64,
    /// Packet duration `ϑ` in slots.
    pub tx_slots: u32,
}

impl Default for Dot11pParams {
    fn default() -> Self {
        Self {
            cw_min: 15,
            aifsn: 6,
            slot_us: 13.0,
            sifs_us: 32.0,
            tx_slots: 14,
        }
    }
}

impl Dot11pParams {
    /// `Ω`, the AIFS duration rounded up to whole slots.
    pub fn aifs_slots(&self) -> u32 {
        let exact = (self.sifs_us + f64::from(self.aifsn) * self.slot_us) / self.slot_us;
        (exact - 1e-9).ceil().max(1.0) as u32
    }

    /// Backoff stages in chain order: `0, 2, 3, …, Č−1`.
    pub fn stages(&self) -> Vec<u32> {
        std::iter::once(0).chain(2..self.cw_min).collect()
    }

    /// Probability of drawing stage `s` after a busy wait.
    pub fn stage_weight(&self, stage: u32) -> f64 {
        let c = f64::from(self.cw_min);
        if stage == 0 {
            2.0 / c
        } else {
            1.0 / c
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |name, value: f64, reason| Err(ModelError::InvalidParameter { name, value, reason });
        if self.cw_min < 2 {
            return bad("dot11p.cw_min", self.cw_min.into(), "must be at least 2");
        }
        if !(self.slot_us > 0.0 && self.slot_us.is_finite()) {
            return bad("dot11p.slot_us", self.slot_us, "must be positive");
        }
        if !(self.sifs_us >= 0.0 && self.sifs_us.is_finite()) {
            return bad("dot11p.sifs_us", self.sifs_us, "must be non-negative");
        }
        if self.aifs_slots() < 2 {
            return bad("dot11p.aifsn", self.aifsn.into(), "AIFS must span at least 2 slots");
        }
        if self.tx_slots < 1 {
            return bad("dot11p.tx_slots", self.tx_slots.into(), "must be at least 1");
        }
        Ok(())
    }
}

/// `θ = 1 − (1 − P_t)^{N−1}`: some other vehicle transmits in a slot.
pub fn update_theta(p_t: f64, vehicles: u32) -> f64 {
    if vehicles <= 1 {
        return 0.0;
    }
    1.0 - (1.0 - p_t).powi(vehicles as i32 - 1)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dot11pSolution {
    pub pi_idle: f64,
    /// `π_{A_i}`, `i ∈ [1, Ω]`.
    pub pi_a: Vec<f64>,
    /// `π_{B,i}`, `i ∈ [1, ϑ]`.
    pub pi_b: Vec<f64>,
    /// Backoff stages, indexing the three per-stage families below.
    pub stages: Vec<u32>,
    /// `π_{s,A_j}`, `j ∈ [1, Ω−1]`.
    pub pi_backoff_aifs: Vec<Vec<f64>>,
    /// `π_{I,s}`.
    pub pi_sense: Vec<f64>,
    /// `π_{Δ_s,j}`, `j ∈ [1, ϑ]`.
    pub pi_defer: Vec<Vec<f64>>,
    /// `π_{Tx,i}`, `i ∈ [1, ϑ]`.
    pub pi_tx: Vec<f64>,
    pub theta: f64,
    /// `P_t = Σ π_{Tx,i}`.
    pub p_t: f64,
}

impl Dot11pSolution {
    pub fn total_mass(&self) -> f64 {
        self.to_vector().iter().sum()
    }

    /// Probabilities in chain order: `Idle, A_1..A_Ω, B_1..B_ϑ`, then for each
    /// stage `(s,A_1..A_{Ω−1}), (I,s), (Δ_s,1..ϑ)`, then `Tx_1..Tx_ϑ`.
    pub fn to_vector(&self) -> Vec<f64> {
        let mut v = vec![self.pi_idle];
        v.extend_from_slice(&self.pi_a);
        v.extend_from_slice(&self.pi_b);
        for k in 0..self.stages.len() {
            v.extend_from_slice(&self.pi_backoff_aifs[k]);
            v.push(self.pi_sense[k]);
            v.extend_from_slice(&self.pi_defer[k]);
        }
        v.extend_from_slice(&self.pi_tx);
        v
    }

    /// Per-slot channel access probability `π_{I,0} + π_{A_Ω} + Σπ_{Tx,i}`.
    pub fn access_probability(&self) -> f64 {
        self.pi_sense[0] + self.pi_a[self.pi_a.len() - 1] + self.p_t
    }
}

/// Masses of the contention states `B`, `(s,A_j)`, `(I,s)` and `(Δ_s,j)`,
/// in units of `X·θ` where `X = π_Idle[1 − P_qe(1 − P_arr)]`.
///
/// Every one of these states is entered only through a busy slot, so its
/// mass carries a factor `θ`; dividing it out keeps the conditional
/// distribution over these states well defined as `θ → 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct ContentionWeights {
    pub busy: Vec<f64>,
    pub backoff_aifs: Vec<Vec<f64>>,
    pub sense: Vec<f64>,
    pub defer: Vec<Vec<f64>>,
}

impl ContentionWeights {
    pub fn new(params: &Dot11pParams, theta: f64) -> Self {
        let omega = params.aifs_slots();
        let vt = f64::from(params.tx_slots);
        let c = f64::from(params.cw_min);
        let aifs_sum = aifs_survival_sum(omega, theta);
        let busy = (1..=params.tx_slots)
            .map(|i| f64::from(i) / vt + aifs_sum - 1.0)
            .collect();
        let mut backoff_aifs = Vec::new();
        let mut sense = Vec::new();
        let mut defer = Vec::new();
        for s in params.stages() {
            let s_f = f64::from(s);
            let entry = if s == 0 {
                2.0 - 2.0 * theta + c * theta
            } else {
                1.0 + (c - s_f - 1.0) * theta
            };
            let i_s = aifs_sum * (c - s_f) / (c * (1.0 - theta));
            backoff_aifs.push(vec![aifs_sum * entry / (c * (1.0 - theta)); omega as usize - 1]);
            sense.push(i_s);
            defer.push(vec![theta * i_s; params.tx_slots as usize]);
        }
        Self { busy, backoff_aifs, sense, defer }
    }

    pub fn total(&self) -> f64 {
        self.busy.iter().sum::<f64>()
            + self.sense.iter().sum::<f64>()
            + self.backoff_aifs.iter().flatten().sum::<f64>()
            + self.defer.iter().flatten().sum::<f64>()
    }
}

/// `Σ_{i=0}^{Ω−1} (1−θ)^i`, which equals `[1 − (1−θ)^Ω]/θ` for `θ > 0`.
fn aifs_survival_sum(omega: u32, theta: f64) -> f64 {
    (0..omega).map(|i| (1.0 - theta).powi(i as i32)).sum()
}

fn check_theta(theta: f64) -> Result<(), ModelError> {
    check_probability("theta", theta)?;
    if theta >= 1.0 {
        return Err(ModelError::ChannelSaturated);
    }
    Ok(())
}

/// Closed-form steady state of the 802.11p chain.
///
/// With `c = 1 − P_qe(1 − P_arr)`, `G = 1 − (1−θ)^Ω` and `X = cπ_Idle`:
/// `π_{A_i} = X(1−θ)^{i−1}`, `π_{B,i} = X[θi/ϑ − (1−θ)^Ω − θ + 1]`,
/// `π_{B,ϑ} = XG`, `π_{I,s} = π_{B,ϑ}(Č−s)/(Č(1−θ))`, `π_{Δ_s,j} = θπ_{I,s}`,
/// `π_{s,A_j} = π_{B,ϑ}[1 + (Č−s−1)θ]/(Č(1−θ))` for `s ≥ 2`,
/// `π_{0,A_j} = π_{B,ϑ}(2 − 2θ + Čθ)/(Č(1−θ))` and `π_{Tx,i} = X`.
/// Normalisation gives `π_Idle = [1 + cZ]⁻¹` with
///
/// ```text
/// Z = G[1/θ + (Č²−Č+2)θϑ/(2Č(1−θ)) + ϑ
///       + (Ω−1)[(Č−2)((Č−3)θ+2) + 4 − 4θ + 2Čθ]/(2Č(1−θ))
///       + (Č²−Č+2)/(2Č(1−θ))] + θ(1−ϑ)/2 + ϑ.
/// ```
///
/// The `(Č²−Č+2)/(2Č)` factors are `Σ_s (Č−s)/Č` over the stages that
/// exist; stage 1 is absent.
pub fn solve_dot11p(params: &Dot11pParams, p_qe: f64, p_arr: f64, theta: f64) -> Result<Dot11pSolution, ModelError> {
    params.validate()?;
    check_probability("P_qe", p_qe)?;
    check_probability("P_arr", p_arr)?;
    check_theta(theta)?;

    let omega = params.aifs_slots();
    let vt = f64::from(params.tx_slots);
    let c = f64::from(params.cw_min);
    let activity = 1.0 - p_qe * (1.0 - p_arr);
    let aifs_sum = aifs_survival_sum(omega, theta);
    let g = theta * aifs_sum;
    let stage_sum = (c * c - c + 2.0) / (2.0 * c);
    let z = aifs_sum
        + g * (stage_sum * theta * vt / (1.0 - theta)
            + vt
            + f64::from(omega - 1) * ((c - 2.0) * ((c - 3.0) * theta + 2.0) + 4.0 - 4.0 * theta + 2.0 * c * theta)
                / (2.0 * c * (1.0 - theta))
            + stage_sum / (1.0 - theta))
        + theta * (1.0 - vt) / 2.0
        + vt;
    let pi_idle = 1.0 / (1.0 + activity * z);
    let x = activity * pi_idle;

    let weights = ContentionWeights::new(params, theta);
    let scale = |v: &Vec<f64>| v.iter().map(|w| x * theta * w).collect::<Vec<_>>();
    let pi_tx = vec![x; params.tx_slots as usize];
    let sol = Dot11pSolution {
        pi_idle,
        pi_a: (0..omega).map(|i| x * (1.0 - theta).powi(i as i32)).collect(),
        pi_b: scale(&weights.busy),
        stages: params.stages(),
        pi_backoff_aifs: weights.backoff_aifs.iter().map(scale).collect(),
        pi_sense: scale(&weights.sense),
        pi_defer: weights.defer.iter().map(scale).collect(),
        p_t: vt * x,
        pi_tx,
        theta,
    };
    Ok(sol)
}

/// Expected slots from entering a state until the end of the transmission.
#[derive(Debug, Clone, PartialEq)]
pub struct DelayTable {
    /// `D_{A_i}`, `i ∈ [1, Ω]`.
    pub aifs: Vec<f64>,
    /// `D_{B,i}`, `i ∈ [1, ϑ]`.
    pub busy: Vec<f64>,
    pub stages: Vec<u32>,
    /// `D_{s,A_j}`, `j ∈ [1, Ω−1]`.
    pub backoff_aifs: Vec<Vec<f64>>,
    /// `D_{I,s}`.
    pub sense: Vec<f64>,
    /// `D_{Δ_s,j}`, `j ∈ [1, ϑ]`.
    pub defer: Vec<Vec<f64>>,
    /// `D_{Tx,i}`, `i ∈ [1, ϑ]`.
    pub tx: Vec<f64>,
}

impl DelayTable {
    /// Delays in chain order, with `D_Idle = 0`.
    pub fn to_vector(&self) -> Vec<f64> {
        let mut v = vec![0.0];
        v.extend_from_slice(&self.aifs);
        v.extend_from_slice(&self.busy);
        for k in 0..self.stages.len() {
            v.extend_from_slice(&self.backoff_aifs[k]);
            v.push(self.sense[k]);
            v.extend_from_slice(&self.defer[k]);
        }
        v.extend_from_slice(&self.tx);
        v
    }
}

/// Per-state delays in slots.
///
/// `D_{I,0} = [1 + ϑ + θ(Ω−1)]/(1−θ)`,
/// `D_{I,i} = [i + ϑ(1 + θ(i−1)) + iθ(Ω−1)]/(1−θ)` for `i ∈ [2, Č−1]`,
/// `D_{i,A_j} = (Ω−j) + D_{I,i}`, `D_{Δ_i,j} = (ϑ−j+1) + (Ω−1) + D_{I,i}`,
/// `D_{B,i} = 1 + D_{B,i+1}` and
/// `D_{B,ϑ} = 1 + (2/Č)[(Ω−1) + D_{I,0}] + (Č−2)(Ω−1)/Č + (1/Č)Σ_{i≥2} D_{I,i}`,
/// `D_{Tx,i} = ϑ − (i−1)`, and the `A_i` recurrence running back from
/// `D_{A_Ω} = 1 + (1−θ)D_{Tx,1} + θD_{B,1}`.
pub fn state_delays(params: &Dot11pParams, theta: f64) -> Result<DelayTable, ModelError> {
    params.validate()?;
    check_theta(theta)?;
    let omega = params.aifs_slots() as usize;
    let om1 = (omega - 1) as f64;
    let vt = f64::from(params.tx_slots);
    let c = f64::from(params.cw_min);
    let stages = params.stages();

    let sense: Vec<f64> = stages
        .iter()
        .map(|&s| {
            let i = f64::from(s);
            if s == 0 {
                (1.0 + vt + theta * om1) / (1.0 - theta)
            } else {
                (i + vt * (1.0 + theta * (i - 1.0)) + i * theta * om1) / (1.0 - theta)
            }
        })
        .collect();
    let backoff_aifs = sense
        .iter()
        .map(|d| (1..omega).map(|j| (omega - j) as f64 + d).collect())
        .collect();
    let defer = sense
        .iter()
        .map(|d| (1..=params.tx_slots).map(|j| (vt - f64::from(j) + 1.0) + om1 + d).collect())
        .collect();

    let last_busy = 1.0 + 2.0 / c * (om1 + sense[0]) + (c - 2.0) * om1 / c + sense[1..].iter().sum::<f64>() / c;
    let busy: Vec<f64> = (1..=params.tx_slots)
        .map(|i| last_busy + (vt - f64::from(i)))
        .collect();
    let tx: Vec<f64> = (1..=params.tx_slots).map(|i| vt - f64::from(i - 1)).collect();

    let mut aifs = vec![0.0; omega];
    aifs[omega - 1] = 1.0 + (1.0 - theta) * tx[0] + theta * busy[0];
    for i in (1..omega - 1).rev() {
        aifs[i] = 1.0 + (1.0 - theta) * aifs[i + 1] + theta * busy[0];
    }
    let mean_busy = busy.iter().sum::<f64>() / vt;
    aifs[0] = 1.0 + (1.0 - theta) * aifs[1] + theta * mean_busy;

    Ok(DelayTable { aifs, busy, stages, backoff_aifs, sense, defer, tx })
}
