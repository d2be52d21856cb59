//! Analytic solution of the direct-resupply `(r, q)` policy.
//!
//! A replenishment cycle alternates between two embedded events: the stock
//! right after a delivery (`π^q`) and the stock at the moment an order is
//! placed (`π^r`). The period averages `π^np` (no order outstanding) and
//! `π^wp` (order outstanding) follow from the same series, and their
//! duration-weighted mix is the long-run distribution `π^dr`.

use nalgebra::DVector;
use serde::Serialize;

use crate::chain::{
    build_failure_matrix, build_replenishment_matrix, inverse_i_minus, matrix_power,
    state_division, stationary_distribution, FailureModel, LeadTimeModel, StateDistribution,
    TransitionMatrix,
};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DirectPolicy {
    /// Reorder level.
    pub r: usize,
    /// Order size.
    pub q: usize,
    /// Failure model over levels `0..=r+q`.
    pub failure: FailureModel,
    pub lead: LeadTimeModel,
}

impl DirectPolicy {
    pub fn new(
        r: usize,
        q: usize,
        lambda_per_step: f64,
        n_sat: usize,
        lead: LeadTimeModel,
    ) -> Result<Self> {
        let failure = FailureModel::new(lambda_per_step, n_sat, r + q, lead.t_mc)?;
        let policy = Self {
            r,
            q,
            failure,
            lead,
        };
        policy.validate()?;
        Ok(policy)
    }

    /// Same failure and lead-time models with a different `(r, q)`.
    pub fn with_rq(&self, r: usize, q: usize) -> Result<Self> {
        Self::new(
            r,
            q,
            self.failure.lambda_per_step,
            self.failure.n_sat,
            self.lead,
        )
    }

    pub fn n_bar(&self) -> usize {
        self.r + self.q
    }

    pub fn validate(&self) -> Result<()> {
        if self.q == 0 {
            return Err(Error::invalid("q", "order size must be at least 1"));
        }
        if self.failure.n_bar != self.r + self.q {
            return Err(Error::invalid(
                "n_bar",
                format!(
                    "maximum level {} must equal r + q = {}",
                    self.failure.n_bar,
                    self.r + self.q
                ),
            ));
        }
        self.failure.validate()?;
        self.lead.validate()?;
        if (self.failure.t_mc - self.lead.t_mc).abs() > 1e-12 {
            return Err(Error::invalid(
                "t_mc",
                "failure and lead-time models use different time steps",
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DirectResult {
    /// Right after a delivery.
    pub pi_q: StateDistribution,
    /// At the moment an order is placed.
    pub pi_r: StateDistribution,
    /// Average while no order is outstanding.
    pub pi_np: StateDistribution,
    /// Average while an order is outstanding.
    pub pi_wp: StateDistribution,
    /// Long-run average.
    pub pi_dr: StateDistribution,
    /// Mean non-reordering period in steps.
    pub t_np: f64,
    /// Mean waiting period in steps.
    pub t_wp: f64,
    /// Mean replenishment cycle in days.
    pub t_cycle: f64,
    /// Set when the failure rate is zero and the stock never leaves `r + q`.
    pub degenerate: bool,
}

/// `P_{r/q} = C⁻ (I - P_f C⁺)⁻¹`, mapping `π^q` to `π^r`.
pub fn reorder_transition(policy: &DirectPolicy) -> Result<TransitionMatrix> {
    policy.validate()?;
    let pf = build_failure_matrix(&policy.failure)?;
    let (plus, minus) = state_division(policy.r, policy.n_bar())?;
    let stay_above = pf.matrix() * plus.matrix();
    let inv = inverse_i_minus(&stay_above, "I - P_f C+")?;
    TransitionMatrix::from_matrix(minus.matrix() * inv)
}

/// `P_{q/r} = (1 - e^{-μT}) P_q P_f^{m+1} (I - e^{-μT} P_f)⁻¹`, mapping `π^r` to `π^q`.
pub fn replenish_transition(policy: &DirectPolicy) -> Result<TransitionMatrix> {
    policy.validate()?;
    let pf = build_failure_matrix(&policy.failure)?;
    let pq = build_replenishment_matrix(policy.r, policy.q)?;
    let decay = policy.lead.step_decay();
    let m = policy.lead.offset_steps();
    let tail = inverse_i_minus(&(pf.matrix() * decay), "I - e^{-μT} P_f")?;
    let shifted = matrix_power(pf.matrix(), m + 1);
    TransitionMatrix::from_matrix(pq.matrix() * shifted * tail * (1.0 - decay))
}

pub fn solve_direct(policy: &DirectPolicy) -> Result<DirectResult> {
    policy.validate()?;
    if policy.failure.lambda_per_step == 0.0 {
        return Ok(degenerate_result(policy));
    }
    let n_bar = policy.n_bar();
    let pf = build_failure_matrix(&policy.failure)?;
    let (plus, _) = state_division(policy.r, n_bar)?;
    let p_rq = reorder_transition(policy)?;
    let p_qr = replenish_transition(policy)?;

    let pi_q = stationary_distribution(&p_qr.compose(&p_rq))?;
    let pi_r = StateDistribution::from_vector(&p_rq.apply(&pi_q)?)?;

    // Σ_k C⁺ (P_f C⁺)^k π^q
    let stay_above = pf.matrix() * plus.matrix();
    let np_raw = plus.matrix() * inverse_i_minus(&stay_above, "I - P_f C+")? * pi_q.to_vector();

    // Σ_{i≤m} P_f^i π^r + e^{-μT} (I - e^{-μT} P_f)⁻¹ P_f^{m+1} π^r
    let decay = policy.lead.step_decay();
    let m = policy.lead.offset_steps();
    let mut wp_raw = DVector::zeros(n_bar + 1);
    let mut v = pi_r.to_vector();
    for _ in 0..=m {
        wp_raw += &v;
        v = pf.matrix() * v;
    }
    let tail = inverse_i_minus(&(pf.matrix() * decay), "I - e^{-μT} P_f")?;
    wp_raw += tail * v * decay;

    let t_np = np_raw.sum();
    let t_wp = wp_raw.sum();
    let pi_np = StateDistribution::from_vector(&np_raw)?;
    let pi_wp = StateDistribution::from_vector(&wp_raw)?;
    let pi_dr = mix(&pi_np, t_np, &pi_wp, t_wp)?;

    Ok(DirectResult {
        pi_q,
        pi_r,
        pi_np,
        pi_wp,
        pi_dr,
        t_np,
        t_wp,
        t_cycle: (t_np + t_wp) * policy.lead.t_mc,
        degenerate: false,
    })
}

/// Duration-weighted mix of two period averages.
pub fn mix(
    first: &StateDistribution,
    first_len: f64,
    second: &StateDistribution,
    second_len: f64,
) -> Result<StateDistribution> {
    if first.len() != second.len() {
        return Err(Error::DimensionMismatch {
            expected: first.len(),
            actual: second.len(),
        });
    }
    let total = first_len + second_len;
    let raw: Vec<f64> = first
        .as_slice()
        .iter()
        .zip(second.as_slice())
        .map(|(a, b)| (first_len * a + second_len * b) / total)
        .collect();
    StateDistribution::from_unnormalized(&raw)
}

fn degenerate_result(policy: &DirectPolicy) -> DirectResult {
    let n_bar = policy.n_bar();
    let full = StateDistribution::point_mass(n_bar, n_bar);
    let at_reorder = StateDistribution::point_mass(n_bar, policy.r);
    DirectResult {
        pi_q: full.clone(),
        pi_r: at_reorder.clone(),
        pi_np: full.clone(),
        pi_wp: at_reorder,
        pi_dr: full,
        t_np: f64::INFINITY,
        t_wp: 0.0,
        t_cycle: f64::INFINITY,
        degenerate: true,
    }
}

/// `P(X < y)` under the long-run distribution.
pub fn shortfall_probability(result: &DirectResult, y: usize) -> Result<f64> {
    let n_bar = result.pi_dr.level_max();
    if y > n_bar + 1 {
        return Err(Error::invalid(
            "y",
            format!("threshold {y} exceeds maximum level + 1 = {}", n_bar + 1),
        ));
    }
    Ok(result.pi_dr.prob_below(y))
}
