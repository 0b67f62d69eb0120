//! C-V2X Mode 4 sensing-based semi-persistent scheduling.
//!
//! States: `Idle` (no reservation), the waiting states `(w, j)` for
//! `j ∈ [0, Γ−2]` that count down to the selected subframe, and the
//! reservation grid `(i, j)` where `i ∈ [1, R_h]` is the resource counter and
//! `j ∈ [0, Γ−1]` the subframes left until the next reserved subframe. Every
//! `(i, 0)` is a transmission opportunity.

use crate::error::{check_probability, ModelError};

/// Tolerance of the mass check on an assembled solution.
pub const MASS_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cv2xParams {
    /// Selection window `Γ` in subframes.
    pub gamma: u32,
    /// Lower bound `R_l` of the resource counter draw.
    pub rc_low: u32,
    /// Upper bound `R_h` of the resource counter draw.
    pub rc_high: u32,
    /// Probability `P_rk` of keeping the resource when the counter expires.
    pub p_keep: f64,
    /// Probability `P_sch` that scheduling finds a resource.
    pub p_sched: f64,
    pub csrs_per_subframe: u32,
}

/// The three selection windows of the standard with their counter bounds.
pub const STANDARD_WINDOWS: [(u32, u32, u32); 3] = [(100, 5, 15), (50, 10, 30), (20, 25, 75)];

impl Default for Cv2xParams {
    fn default() -> Self {
        Self::standard(100).expect("100 ms is a standard window")
    }
}

impl Cv2xParams {
    /// Parameters for a standard selection window, `None` for other `Γ`.
    pub fn standard(gamma: u32) -> Option<Self> {
        let &(gamma, rc_low, rc_high) = STANDARD_WINDOWS.iter().find(|w| w.0 == gamma)?;
        Some(Self {
            gamma,
            rc_low,
            rc_high,
            p_keep: 0.4,
            p_sched: 1.0,
            csrs_per_subframe: 25,
        })
    }

    /// Counter bounds of the standard window `gamma`, if it is one.
    pub fn standard_counter_bounds(gamma: u32) -> Option<(u32, u32)> {
        STANDARD_WINDOWS.iter().find(|w| w.0 == gamma).map(|w| (w.1, w.2))
    }

    /// `CSR_tot`, the number of resources in one selection window.
    pub fn csr_total(&self) -> u32 {
        self.csrs_per_subframe * self.gamma
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |name, value: f64, reason| Err(ModelError::InvalidParameter { name, value, reason });
        if self.gamma < 2 {
            return bad("cv2x.gamma", self.gamma.into(), "must be at least 2 subframes");
        }
        if self.rc_low < 1 {
            return bad("cv2x.r_l", self.rc_low.into(), "must be at least 1");
        }
        if self.rc_high < self.rc_low {
            return bad("cv2x.r_h", self.rc_high.into(), "must not be below cv2x.r_l");
        }
        if !(0.0..=0.8).contains(&self.p_keep) {
            return bad("cv2x.p_rk", self.p_keep, "the standard allows [0, 0.8]");
        }
        if !(self.p_sched > 0.0 && self.p_sched <= 1.0) {
            return bad("cv2x.p_sch", self.p_sched, "must lie in (0, 1]");
        }
        if self.csrs_per_subframe < 1 {
            return bad("cv2x.csrs_per_subframe", self.csrs_per_subframe.into(), "must be at least 1");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cv2xSolution {
    pub pi_idle: f64,
    /// `π_{w,j}` for `j ∈ [0, Γ−2]`.
    pub pi_w: Vec<f64>,
    /// `pi_rc[i−1][j]` is `π_{i,j}` for counter `i ∈ [1, R_h]`, `j ∈ [0, Γ−1]`.
    pub pi_rc: Vec<Vec<f64>>,
    /// Transmission-opportunity probability `Σ_i π_{i,0}`.
    pub p_txo: f64,
    /// Transmit probability `P_txo · P_qne`.
    pub p_t: f64,
}

impl Cv2xSolution {
    pub fn total_mass(&self) -> f64 {
        self.pi_idle
            + self.pi_w.iter().sum::<f64>()
            + self.pi_rc.iter().flatten().sum::<f64>()
    }

    /// Probabilities in chain order: `Idle, (w,0..Γ−2), (1,0..Γ−1), …, (R_h,0..Γ−1)`.
    pub fn to_vector(&self) -> Vec<f64> {
        let mut v = vec![self.pi_idle];
        v.extend_from_slice(&self.pi_w);
        for row in &self.pi_rc {
            v.extend_from_slice(row);
        }
        v
    }

    /// `π_{1,0}`, whose inverse is the reselection cycle time.
    pub fn pi_first_opportunity(&self) -> f64 {
        self.pi_rc[0][0]
    }
}

/// `P_t = P_txo · P_qne`.
pub fn transmit_probability(sol: &Cv2xSolution, p_qne: f64) -> f64 {
    sol.p_txo * p_qne
}

/// Closed-form steady state of the C-V2X chain.
///
/// With `A = P_arr + P_qne(1 − P_arr)`, `a = A·P_sch` and
/// `b = (1 − P_rk)(1/P_sch − 1)/A`:
///
/// * `π_Idle = b·π_{w,0}`,
/// * `π_{w,i} = aπ_Idle(Γ−1−i)/(Γ−1) + [(Γ−1−i)/(Γ−1)·(1−P_rk)P_sch + P_rk]·π_{1,0}P_qne`,
/// * `π_{i,j} = π_{w,0}/P_qne` for counters below `R_l`,
/// * `π_{i,0} = π_{w,0}(R_h−i+1)/(P_qne n)` and
///   `π_{i,j≥1} = π_{w,0}[(R_h−i+1) − P_qne]/(P_qne n)` for `i ∈ [R_l, R_h]`,
///   where `n = 1 + R_h − R_l`,
/// * `π_{w,0}` from normalisation:
///   `[2 − Γ + b + (Γ−2)/2·(ab + 2P_rk + (1−P_rk)P_sch) + Γ(R_h+R_l)/(2P_qne)]⁻¹`.
///
/// For `j ≥ 1` a counter-`i` row holds the mass that entered from `(w,0)`
/// plus the mass that stepped down from counter `i+1`; the latter carries
/// the factor `P_qne`, hence the `− P_qne` correction in that block.
pub fn solve_cv2x(params: &Cv2xParams, p_qe: f64, p_arr: f64) -> Result<Cv2xSolution, ModelError> {
    params.validate()?;
    check_probability("P_qe", p_qe)?;
    check_probability("P_arr", p_arr)?;
    let p_qne = 1.0 - p_qe;
    if p_qne <= 0.0 {
        return Err(ModelError::IdleQueue);
    }

    let gamma = params.gamma as usize;
    let g = f64::from(params.gamma);
    let (rl, rh) = (params.rc_low as usize, params.rc_high as usize);
    let n = (1 + rh - rl) as f64;
    let (p_rk, p_sch) = (params.p_keep, params.p_sched);

    let big_a = p_arr + p_qne * (1.0 - p_arr);
    let a = big_a * p_sch;
    let b = (1.0 - p_rk) * (1.0 / p_sch - 1.0) / big_a;

    let pi_w0 = 1.0
        / (2.0 - g
            + b
            + (g - 2.0) / 2.0 * (a * b + 2.0 * p_rk + (1.0 - p_rk) * p_sch)
            + g * (rh + rl) as f64 / (2.0 * p_qne));
    let pi_idle = b * pi_w0;

    let mut pi_rc = Vec::with_capacity(rh);
    for i in 1..=rh {
        let row = if i < rl {
            vec![pi_w0 / p_qne; gamma]
        } else {
            let weight = (rh - i + 1) as f64;
            let mut row = vec![pi_w0 * (weight - p_qne) / (p_qne * n); gamma];
            row[0] = pi_w0 * weight / (p_qne * n);
            row
        };
        pi_rc.push(row);
    }

    let pi_10 = pi_rc[0][0];
    let pi_w = (0..gamma - 1)
        .map(|i| {
            let share = (g - 1.0 - i as f64) / (g - 1.0);
            a * pi_idle * share + (share * (1.0 - p_rk) * p_sch + p_rk) * pi_10 * p_qne
        })
        .collect();

    let p_txo = pi_rc.iter().map(|row| row[0]).sum::<f64>();
    let sol = Cv2xSolution {
        pi_idle,
        pi_w,
        pi_rc,
        p_txo,
        p_t: p_txo * p_qne,
    };
    let mass = sol.total_mass();
    if !mass.is_finite() || (mass - 1.0).abs() > MASS_TOLERANCE || sol.to_vector().iter().any(|&p| p < 0.0) {
        return Err(ModelError::InvalidMass { mass });
    }
    Ok(sol)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_scheduling_never_idles() {
        for &(gamma, ..) in &STANDARD_WINDOWS {
            let p = Cv2xParams::standard(gamma).unwrap();
            let s = solve_cv2x(&p, 0.3, 0.4).unwrap();
            assert_eq!(s.pi_idle, 0.0);
            assert!((s.total_mass() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn imperfect_scheduling_idles() {
        let p = Cv2xParams { p_sched: 0.7, ..Cv2xParams::default() };
        let s = solve_cv2x(&p, 0.3, 0.4).unwrap();
        assert!(s.pi_idle > 0.0);
        assert!((s.total_mass() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn empty_queue_is_rejected() {
        assert_eq!(solve_cv2x(&Cv2xParams::default(), 1.0, 0.2), Err(ModelError::IdleQueue));
    }

    #[test]
    fn transmit_probability_edges() {
        let s = solve_cv2x(&Cv2xParams::default(), 0.5, 0.2).unwrap();
        assert_eq!(transmit_probability(&s, 0.0), 0.0);
        let one = Cv2xSolution { p_txo: 1.0, ..s };
        assert_eq!(transmit_probability(&one, 1.0), 1.0);
    }

    #[test]
    fn opportunity_rate_is_about_one_per_window() {
        // With a permanently busy queue the vehicle transmits once per Γ.
        let p = Cv2xParams { p_keep: 0.8, ..Cv2xParams::default() };
        let s = solve_cv2x(&p, 1e-9, 0.0).unwrap();
        assert!((s.p_txo * 100.0 - 1.0).abs() < 0.05, "{}", s.p_txo);
    }

    #[test]
    fn parameter_validation() {
        assert!(Cv2xParams { p_keep: 0.9, ..Cv2xParams::default() }.validate().is_err());
        assert!(Cv2xParams { rc_low: 20, ..Cv2xParams::default() }.validate().is_err());
        assert_eq!(Cv2xParams::default().csr_total(), 2500);
    }
}
