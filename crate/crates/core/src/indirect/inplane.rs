use nalgebra::DVector;
use serde::Serialize;

use super::{kappa_at, IndirectPolicy};
use crate::chain::{
    build_failure_matrix, matrix_power, stationary_distribution, StateDistribution,
    TransitionMatrix,
};
use crate::error::{Error, Result};

/// Batches a plane at level `x_i` requests at contact.
pub fn demand_batches(x_i: usize, r_i: usize, q_i: usize) -> usize {
    if x_i > r_i {
        0
    } else {
        (r_i + 1 - x_i).div_ceil(q_i)
    }
}

fn check_availability(kappa: &[f64]) -> Result<()> {
    let first = kappa.first().copied().unwrap_or(0.0);
    if (first - 1.0).abs() > 1e-12 {
        return Err(Error::invalid(
            "kappa",
            format!("kappa_0 = {first}, expected 1"),
        ));
    }
    if kappa.iter().any(|k| !(0.0..=1.0 + 1e-12).contains(k)) {
        return Err(Error::invalid("kappa", "entries must lie in [0, 1]"));
    }
    if kappa.windows(2).any(|w| w[1] > w[0] + 1e-12) {
        return Err(Error::invalid(
            "kappa",
            "availability must be nonincreasing",
        ));
    }
    Ok(())
}

/// In-plane replenishment `P_{q_i}` at a contact.
///
/// A plane demanding `d` batches receives all of them with probability `κ_d`
/// and exactly `g < d` with probability `κ_g - κ_{g+1}` (the parking orbit
/// hands over whatever it holds).
pub fn inplane_replenishment_matrix(
    kappa: &[f64],
    r_i: usize,
    q_i: usize,
) -> Result<TransitionMatrix> {
    if q_i == 0 {
        return Err(Error::invalid("q_i", "batch size must be at least 1"));
    }
    check_availability(kappa)?;
    let n_bar = r_i + q_i;
    let mut p = TransitionMatrix::zeros(n_bar);
    for x in 0..=n_bar {
        let demand = demand_batches(x, r_i, q_i);
        for got in 0..demand {
            let prob = kappa_at(kappa, got) - kappa_at(kappa, got + 1);
            p.add(x + got * q_i, x, prob);
        }
        p.add(x + demand * q_i, x, kappa_at(kappa, demand));
    }
    Ok(p)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InplaneSolution {
    /// Right after a contact.
    pub pi_q: StateDistribution,
    /// Right before a contact.
    pub pi_r: StateDistribution,
    /// Average over a review period.
    pub pi_ir: StateDistribution,
    /// Batch demand pmf raised at a contact.
    pub eta: Vec<f64>,
}

/// Solves the plane chain for a given parking availability.
pub fn solve_inplane(policy: &IndirectPolicy, kappa: &[f64]) -> Result<InplaneSolution> {
    policy.validate()?;
    let n_bar = policy.n_bar_i();
    if policy.failure.lambda_per_step == 0.0 {
        let full = StateDistribution::point_mass(n_bar, n_bar);
        let mut eta = vec![0.0; policy.max_demand() + 1];
        eta[0] = 1.0;
        return Ok(InplaneSolution {
            pi_q: full.clone(),
            pi_r: full.clone(),
            pi_ir: full,
            eta,
        });
    }

    let k_i = policy.k_i();
    let pf = build_failure_matrix(&policy.failure)?;
    let review = matrix_power(pf.matrix(), k_i);
    let pq = inplane_replenishment_matrix(kappa, policy.r_i, policy.q_i)?;
    let cycle = TransitionMatrix::from_matrix(pq.matrix() * &review)?;

    let pi_q = stationary_distribution(&cycle)?;
    let pi_r = StateDistribution::from_vector(&(&review * pi_q.to_vector()))?;

    let mut acc = DVector::zeros(n_bar + 1);
    let mut v = pi_q.to_vector();
    for _ in 0..k_i {
        acc += &v;
        v = pf.matrix() * v;
    }
    let pi_ir = StateDistribution::from_vector(&(acc / k_i as f64))?;

    let mut eta = vec![0.0; policy.max_demand() + 1];
    for level in 0..=n_bar {
        eta[demand_batches(level, policy.r_i, policy.q_i)] += pi_r.at_level(level);
    }

    Ok(InplaneSolution {
        pi_q,
        pi_r,
        pi_ir,
        eta,
    })
}
