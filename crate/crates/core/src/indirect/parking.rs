use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::IndirectPolicy;
use crate::chain::{
    build_replenishment_matrix, inverse_i_minus, matrix_power, state_division,
    stationary_distribution, StateDistribution, TransitionMatrix, NORMALIZATION_TOL,
};
use crate::direct::mix;
use crate::error::{Error, Result};

/// Parking stock transition `P_{f_p}` between contacts.
///
/// From stock `s` the plane's demand of `d < s` batches is served in full;
/// any demand of `s` or more empties the orbit.
pub fn parking_demand_matrix(eta: &[f64], n_bar_p: usize) -> Result<TransitionMatrix> {
    if eta.iter().any(|e| !e.is_finite() || *e < 0.0) {
        return Err(Error::invalid("eta", "demand probabilities must be >= 0"));
    }
    let total: f64 = eta.iter().sum();
    if (total - 1.0).abs() > NORMALIZATION_TOL {
        return Err(Error::invalid("eta", format!("sums to {total}, not 1")));
    }
    let mut p = TransitionMatrix::zeros(n_bar_p);
    for s in 0..=n_bar_p {
        let mut served = 0.0;
        for (d, &prob) in eta.iter().enumerate().take(s) {
            p.add(s - d, s, prob);
            served += prob;
        }
        p.add(0, s, (1.0 - served).max(0.0));
    }
    Ok(p)
}

/// Lead-time bookkeeping for a parking orbit reviewed every `T_park`.
///
/// The outstanding period is split into `m_p` whole review periods without
/// any delivery, a remainder of `T_lp` before the constant offset elapses,
/// the `T_rp` stretch up to the next contact, and the geometric tail.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ParkingTiming {
    /// Review period in steps.
    pub k_p: usize,
    /// Whole review periods inside `T_LV`.
    pub m_p: usize,
    /// `T_lp` in steps.
    pub lp_steps: usize,
    /// `T_rp` in steps.
    pub rp_steps: usize,
    /// Delivery probability before the first contact after `T_LV`.
    pub rho_3: f64,
    /// Delivery probability in the first full review period after that contact.
    pub rho_4: f64,
    /// `e^{-μ T_park}`.
    pub park_decay: f64,
    /// Expected waiting steps credited to the `T_rp` stretch.
    pub weight_3: f64,
    /// Expected waiting steps per review period in the tail (before decay).
    pub weight_4: f64,
    /// Expected steps from a delivery to the next contact.
    pub first_contact_wait: f64,
}

impl ParkingTiming {
    pub fn new(policy: &IndirectPolicy) -> Self {
        let k_p = policy.k_p();
        let m = policy.lead.offset_steps();
        let m_p = m / k_p;
        let lp_steps = m - m_p * k_p;
        let rp_steps = (m_p + 1) * k_p - m;

        let step_decay = policy.lead.step_decay();
        let park_decay = step_decay.powi(k_p as i32);
        let rp_decay = step_decay.powi(rp_steps as i32);

        // Finite geometric sums Σ_{l=1}^{n} e^{-μ l T_mc}.
        let geometric =
            |n: usize| step_decay * (step_decay.powi(n as i32) - 1.0) / (step_decay - 1.0);

        // Delivery lands l steps after the T_LV phase with a truncated
        // geometric law; a delivery coinciding with a contact arrives after it.
        let norm = (1.0 - step_decay) / (1.0 - park_decay);
        let first_contact_wait = (0..k_p)
            .map(|l| {
                let until = (rp_steps + k_p - l % k_p - 1) % k_p + 1;
                until as f64 * norm * step_decay.powi(l as i32)
            })
            .sum();

        Self {
            k_p,
            m_p,
            lp_steps,
            rp_steps,
            rho_3: 1.0 - rp_decay,
            rho_4: rp_decay * (1.0 - park_decay),
            park_decay,
            weight_3: geometric(rp_steps),
            weight_4: rp_decay * geometric(k_p),
            first_contact_wait,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParkingSolution {
    /// Right after a ground delivery.
    pub pi_q: StateDistribution,
    /// At the contact where an order is placed.
    pub pi_r: StateDistribution,
    /// Average while no order is outstanding.
    pub pi_np: StateDistribution,
    /// Average while an order is outstanding.
    pub pi_wp: StateDistribution,
    /// Long-run average.
    pub pi_ir: StateDistribution,
    /// Steps.
    pub t_np: f64,
    /// Steps.
    pub t_wp: f64,
    /// Days.
    pub t_cycle: f64,
    /// Set when no plane ever demands a batch.
    pub degenerate: bool,
}

/// Solves the parking chain for a given plane demand pmf.
pub fn solve_parking(policy: &IndirectPolicy, eta: &[f64]) -> Result<ParkingSolution> {
    policy.validate()?;
    let n_bar = policy.n_bar_p();
    let pf = parking_demand_matrix(eta, n_bar)?;
    if eta.first().copied().unwrap_or(0.0) >= 1.0 - 1e-15 {
        let full = StateDistribution::point_mass(n_bar, n_bar);
        let at_reorder = StateDistribution::point_mass(n_bar, policy.r_p);
        return Ok(ParkingSolution {
            pi_q: full.clone(),
            pi_r: at_reorder.clone(),
            pi_np: full.clone(),
            pi_wp: at_reorder,
            pi_ir: full,
            t_np: f64::INFINITY,
            t_wp: 0.0,
            t_cycle: f64::INFINITY,
            degenerate: true,
        });
    }

    let timing = ParkingTiming::new(policy);
    let p = pf.matrix();
    let dim = n_bar + 1;
    let (plus, minus) = state_division(policy.r_p, n_bar)?;
    let replenish = build_replenishment_matrix(policy.r_p, policy.q_p)?;

    // Contacts until the stock is found at or below r_p: Σ_j (C⁺P)^j.
    let filtered = plus.matrix() * p;
    let until_reorder = inverse_i_minus(&filtered, "I - C+ P_fp")?;
    let reorder = TransitionMatrix::from_matrix(minus.matrix() * p * &until_reorder)?;

    let tail = inverse_i_minus(&(p * timing.park_decay), "I - e^{-μT_park} P_fp")?;
    let before_delivery = matrix_power(p, timing.m_p);
    let spread = DMatrix::identity(dim, dim) * timing.rho_3 + p * &tail * timing.rho_4;
    let deliver = TransitionMatrix::from_matrix(replenish.matrix() * &before_delivery * spread)?;

    let pi_q = stationary_distribution(&deliver.compose(&reorder))?;
    let pi_r = StateDistribution::from_vector(&reorder.apply(&pi_q)?)?;

    let r_vec = pi_r.to_vector();
    let mut wp_raw = DVector::zeros(dim);
    let mut v = r_vec.clone();
    for _ in 0..timing.m_p {
        wp_raw += &v * timing.k_p as f64;
        v = p * v;
    }
    // v = P^{m_p} π^r: held through T_lp and, with survival weights, T_rp.
    wp_raw += &v * (timing.lp_steps as f64 + timing.weight_3);
    wp_raw += &tail * (p * &v) * timing.weight_4;

    let q_vec = pi_q.to_vector();
    let np_raw = &filtered * &until_reorder * &q_vec * timing.k_p as f64
        + &q_vec * timing.first_contact_wait;

    let t_np = np_raw.sum();
    let t_wp = wp_raw.sum();
    let pi_np = StateDistribution::from_vector(&np_raw)?;
    let pi_wp = StateDistribution::from_vector(&wp_raw)?;
    let pi_ir = mix(&pi_np, t_np, &pi_wp, t_wp)?;

    Ok(ParkingSolution {
        pi_q,
        pi_r,
        pi_np,
        pi_wp,
        pi_ir,
        t_np,
        t_wp,
        t_cycle: (t_np + t_wp) * policy.t_mc(),
        degenerate: false,
    })
}
