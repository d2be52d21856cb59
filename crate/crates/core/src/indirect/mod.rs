//! Indirect resupply through parking orbits.
//!
//! Each constellation plane runs an `(r_i, q_i, T_plane)` policy that is
//! reviewed only when a parking orbit passes; each parking orbit runs an
//! `(r_p, q_p, T_park)` policy in units of batches of `q_i` satellites. The
//! two chains are coupled through the plane demand pmf `η` and the parking
//! availability `κ`, and the pair is solved by fixed-point iteration.

mod inplane;
mod parking;

pub use inplane::{demand_batches, inplane_replenishment_matrix, solve_inplane, InplaneSolution};
pub use parking::{parking_demand_matrix, solve_parking, ParkingSolution, ParkingTiming};

use serde::{Deserialize, Serialize};

use crate::chain::{steps_of, FailureModel, LeadTimeModel, StateDistribution};
use crate::error::{Error, Result};

pub const DEFAULT_TOLERANCE: f64 = 1e-6;
pub const DEFAULT_MAX_ITERATIONS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IndirectPolicy {
    /// In-plane reorder level (satellites).
    pub r_i: usize,
    /// In-plane batch size (satellites).
    pub q_i: usize,
    /// Parking reorder level (batches).
    pub r_p: usize,
    /// Parking order size (batches).
    pub q_p: usize,
    /// In-plane failure model over levels `0..=r_i+q_i`.
    pub failure: FailureModel,
    pub lead: LeadTimeModel,
    /// Days between a plane's successive contacts.
    pub t_plane: f64,
    /// Days between a parking orbit's successive contacts.
    pub t_park: f64,
}

impl IndirectPolicy {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        r_i: usize,
        q_i: usize,
        r_p: usize,
        q_p: usize,
        lambda_per_step: f64,
        n_sat: usize,
        lead: LeadTimeModel,
        t_plane: f64,
        t_park: f64,
    ) -> Result<Self> {
        let failure = FailureModel::new(lambda_per_step, n_sat, r_i + q_i, lead.t_mc)?;
        let policy = Self {
            r_i,
            q_i,
            r_p,
            q_p,
            failure,
            lead,
            t_plane,
            t_park,
        };
        policy.validate()?;
        Ok(policy)
    }

    pub fn validate(&self) -> Result<()> {
        if self.q_i == 0 {
            return Err(Error::invalid("q_i", "batch size must be at least 1"));
        }
        if self.q_p == 0 {
            return Err(Error::invalid(
                "q_p",
                "parking order size must be at least 1",
            ));
        }
        if self.failure.n_bar != self.r_i + self.q_i {
            return Err(Error::invalid(
                "n_bar",
                format!(
                    "in-plane maximum {} must equal r_i + q_i = {}",
                    self.failure.n_bar,
                    self.r_i + self.q_i
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
        if steps_of(self.t_plane, self.t_mc(), "t_plane")? == 0 {
            return Err(Error::invalid("t_plane", "must be at least one step"));
        }
        if steps_of(self.t_park, self.t_mc(), "t_park")? == 0 {
            return Err(Error::invalid("t_park", "must be at least one step"));
        }
        Ok(())
    }

    pub fn t_mc(&self) -> f64 {
        self.lead.t_mc
    }

    /// In-plane review period in steps.
    pub fn k_i(&self) -> usize {
        steps_of(self.t_plane, self.t_mc(), "t_plane").expect("validated policy")
    }

    /// Parking review period in steps.
    pub fn k_p(&self) -> usize {
        steps_of(self.t_park, self.t_mc(), "t_park").expect("validated policy")
    }

    pub fn n_bar_i(&self) -> usize {
        self.r_i + self.q_i
    }

    pub fn n_bar_p(&self) -> usize {
        self.r_p + self.q_p
    }

    /// Largest batch demand a plane can raise (from an empty plane).
    pub fn max_demand(&self) -> usize {
        demand_batches(0, self.r_i, self.q_i)
    }
}

/// Coupling variables exchanged between the two chains.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CouplingState {
    /// `κ_j = P(X_p ≥ j)` for `j = 0..=n̄_p`.
    pub kappa: Vec<f64>,
    /// `η_d = P(D_i = d)` for `d = 0..=max_demand`.
    pub eta: Vec<f64>,
}

/// `κ_j`, zero beyond the parking capacity.
pub fn kappa_at(kappa: &[f64], j: usize) -> f64 {
    kappa.get(j).copied().unwrap_or(0.0)
}

/// Parking availability `κ_j = Σ_{k≥j} π_k` from a parking distribution.
pub fn availability_from(parking: &StateDistribution) -> Vec<f64> {
    let n = parking.level_max();
    let mut kappa = vec![0.0; n + 1];
    let mut acc = 0.0;
    for j in (0..=n).rev() {
        acc += parking.at_level(j);
        kappa[j] = acc;
    }
    // Exact by definition; removes round-off in the total.
    kappa[0] = 1.0;
    for j in 1..=n {
        kappa[j] = kappa[j].min(kappa[j - 1]);
    }
    kappa
}

/// Quantity compared against the tolerance after each iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StoppingRule {
    /// Joint ∞-norm change of `κ` and `η`.
    Absolute,
    /// Same change divided by the iterate magnitudes.
    Relative,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IndirectOptions {
    pub tolerance: f64,
    pub max_iterations: usize,
    pub rule: StoppingRule,
}

impl Default for IndirectOptions {
    fn default() -> Self {
        Self {
            tolerance: DEFAULT_TOLERANCE,
            max_iterations: DEFAULT_MAX_ITERATIONS,
            rule: StoppingRule::Absolute,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IndirectResult {
    /// Long-run in-plane distribution.
    pub pi_ir_i: StateDistribution,
    /// Long-run parking distribution (batches).
    pub pi_ir_p: StateDistribution,
    pub pi_q_i: StateDistribution,
    pub pi_r_i: StateDistribution,
    pub pi_q_p: StateDistribution,
    pub pi_r_p: StateDistribution,
    pub pi_np_p: StateDistribution,
    pub pi_wp_p: StateDistribution,
    /// Parking non-reordering period in steps.
    pub t_np_p: f64,
    /// Parking waiting period in steps.
    pub t_wp_p: f64,
    /// Parking replenishment cycle in days.
    pub t_cycle_p: f64,
    pub coupling: CouplingState,
    pub iterations: usize,
    /// Final joint ∞-norm change of `κ` and `η`.
    pub residual: f64,
    /// Final change relative to the iterate magnitudes.
    pub relative_residual: f64,
    /// Coupling state after every iteration, oldest first.
    pub history: Vec<CouplingState>,
    /// Set when the parking orbits never see demand.
    pub degenerate: bool,
}

/// Solves the coupled chains with the default tolerance and iteration cap.
pub fn solve_indirect(policy: &IndirectPolicy) -> Result<IndirectResult> {
    solve_indirect_with(policy, IndirectOptions::default(), None)
}

/// Fixed-point iteration starting from full parking availability, or from
/// `initial_kappa` when given.
pub fn solve_indirect_with(
    policy: &IndirectPolicy,
    options: IndirectOptions,
    initial_kappa: Option<Vec<f64>>,
) -> Result<IndirectResult> {
    policy.validate()?;
    let mut kappa = initial_kappa.unwrap_or_else(|| vec![1.0; policy.n_bar_p() + 1]);
    let mut prev_eta: Option<Vec<f64>> = None;
    let mut history = Vec::new();
    let mut trace = Vec::new();

    for iteration in 1..=options.max_iterations {
        let inplane = solve_inplane(policy, &kappa)?;
        let parking = solve_parking(policy, &inplane.eta)?;
        let next_kappa = availability_from(&parking.pi_ir);

        let d_kappa = max_abs_diff(&next_kappa, &kappa);
        let d_eta = prev_eta
            .as_ref()
            .map_or(0.0, |prev| max_abs_diff(&inplane.eta, prev));
        let residual = d_kappa.max(d_eta);
        let relative_residual =
            (d_kappa / inf_norm(&next_kappa)).max(d_eta / inf_norm(&inplane.eta));
        let measured = match options.rule {
            StoppingRule::Absolute => residual,
            StoppingRule::Relative => relative_residual,
        };
        trace.push(measured);
        history.push(CouplingState {
            kappa: next_kappa.clone(),
            eta: inplane.eta.clone(),
        });

        if measured <= options.tolerance {
            return Ok(IndirectResult {
                pi_ir_i: inplane.pi_ir,
                pi_ir_p: parking.pi_ir,
                pi_q_i: inplane.pi_q,
                pi_r_i: inplane.pi_r,
                pi_q_p: parking.pi_q,
                pi_r_p: parking.pi_r,
                pi_np_p: parking.pi_np,
                pi_wp_p: parking.pi_wp,
                t_np_p: parking.t_np,
                t_wp_p: parking.t_wp,
                t_cycle_p: parking.t_cycle,
                coupling: CouplingState {
                    kappa: next_kappa,
                    eta: inplane.eta,
                },
                iterations: iteration,
                residual,
                relative_residual,
                history,
                degenerate: parking.degenerate,
            });
        }
        kappa = next_kappa;
        prev_eta = Some(inplane.eta);
    }
    Err(Error::FixedPointNotConverged {
        iterations: options.max_iterations,
        trace,
    })
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().max(b.len());
    (0..n)
        .map(|i| (kappa_at(a, i) - kappa_at(b, i)).abs())
        .fold(0.0, f64::max)
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter()
        .map(|x| x.abs())
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE)
}
