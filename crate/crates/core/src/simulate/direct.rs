use rayon::prelude::*;
use serde::Serialize;

use super::{
    entity_rng, EmpiricalDistribution, FailureSampler, LeadSampler, SamplingMode, SimPolicy,
    SimulationConfig,
};
use crate::direct::DirectPolicy;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DirectSimOutput {
    /// Every step, after that step's events.
    pub per_step: EmpiricalDistribution,
    /// Whenever an order is placed.
    pub at_reorder: EmpiricalDistribution,
    /// Right after each delivery.
    pub at_replenish: EmpiricalDistribution,
}

impl DirectSimOutput {
    fn empty(level_max: usize) -> Self {
        Self {
            per_step: EmpiricalDistribution::new(level_max, SamplingMode::PerStep),
            at_reorder: EmpiricalDistribution::new(level_max, SamplingMode::AtReorder),
            at_replenish: EmpiricalDistribution::new(level_max, SamplingMode::AtReplenishment),
        }
    }

    fn merge(&mut self, other: &DirectSimOutput) -> Result<()> {
        self.per_step.merge(&other.per_step)?;
        self.at_reorder.merge(&other.at_reorder)?;
        self.at_replenish.merge(&other.at_replenish)
    }
}

/// Simulates `n_planes` independent planes under the `(r, q)` ground policy.
///
/// Within step `t`: failures, then a delivery due at `t`, then the reorder
/// check. An order placed at `t` arrives at `t + floor(L / T_mc) + 1`.
pub fn run_direct_sim(cfg: &SimulationConfig) -> Result<DirectSimOutput> {
    cfg.validate()?;
    let SimPolicy::Direct(policy) = cfg.policy else {
        return Err(Error::InvalidConfig(
            "direct simulation requires a direct policy".into(),
        ));
    };
    let failures = FailureSampler::new(&policy.failure)?;
    let lead = LeadSampler::new(&policy.lead)?;

    let trials: Vec<DirectSimOutput> = (0..cfg.trials)
        .into_par_iter()
        .map(|trial| {
            let mut out = DirectSimOutput::empty(policy.n_bar());
            for plane in 0..cfg.n_planes {
                simulate_plane(cfg, &policy, &failures, &lead, trial, plane, &mut out);
            }
            out
        })
        .collect();

    let mut total = DirectSimOutput::empty(policy.n_bar());
    for t in &trials {
        total.merge(t)?;
    }
    Ok(total)
}

fn simulate_plane(
    cfg: &SimulationConfig,
    policy: &DirectPolicy,
    failures: &FailureSampler,
    lead: &LeadSampler,
    trial: usize,
    plane: usize,
    out: &mut DirectSimOutput,
) {
    let mut rng = entity_rng(cfg.seed, trial, plane);
    let warmup = cfg.warmup_steps();
    let mut level = policy.n_bar();
    let mut due: Option<u64> = None;

    for t in 1..=cfg.total_steps() {
        let sampling = t > warmup;
        level = failures.step(&mut rng, level);
        if due == Some(t) {
            level += policy.q;
            due = None;
            if sampling {
                out.at_replenish.record(level);
            }
        }
        if level <= policy.r && due.is_none() {
            due = Some(t + lead.draw(&mut rng) + 1);
            if sampling {
                out.at_reorder.record(level);
            }
        }
        if sampling {
            out.per_step.record(level);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{LeadTimeModel, DAYS_PER_YEAR};
    use crate::direct::solve_direct;
    use crate::simulate::compare_distributions;

    fn config(lambda_per_year: f64, years: f64, seed: u64, trials: usize) -> SimulationConfig {
        let lead = LeadTimeModel::from_mean_tail(60.0, 30.0, 1.0).unwrap();
        let policy = DirectPolicy::new(42, 4, lambda_per_year / DAYS_PER_YEAR, 40, lead).unwrap();
        SimulationConfig {
            policy: SimPolicy::Direct(policy),
            n_planes: 4,
            n_park: 0,
            horizon: years * DAYS_PER_YEAR,
            warmup: 10.0 * DAYS_PER_YEAR,
            seed,
            trials,
            contact_phase: 0,
        }
    }

    #[test]
    fn zero_rate_stays_full() {
        let out = run_direct_sim(&config(0.0, 15.0, 1, 1)).unwrap();
        assert_eq!(out.per_step.counts[46], out.per_step.samples);
        assert_eq!(out.at_reorder.samples, 0);
        assert_eq!(out.at_replenish.samples, 0);
    }

    #[test]
    fn same_seed_same_histograms() {
        let a = run_direct_sim(&config(0.1, 30.0, 11, 3)).unwrap();
        let b = run_direct_sim(&config(0.1, 30.0, 11, 3)).unwrap();
        assert_eq!(a, b);
        let c = run_direct_sim(&config(0.1, 30.0, 12, 3)).unwrap();
        assert_ne!(a.per_step, c.per_step);
    }

    #[test]
    fn reorders_happen_at_or_below_r_and_deliveries_match() {
        let out = run_direct_sim(&config(0.15, 60.0, 2, 1)).unwrap();
        assert!(out.at_reorder.counts[43..].iter().all(|&c| c == 0));
        // Each delivery answers one order; at most one per plane is in flight.
        let diff = out.at_reorder.samples as i64 - out.at_replenish.samples as i64;
        assert!((0..=4).contains(&diff.abs()));
        // Deliveries land q above a reorder level.
        assert!(out.at_replenish.counts[..4].iter().all(|&c| c == 0));
    }

    #[test]
    fn rejects_indirect_or_bad_config() {
        let mut cfg = config(0.1, 20.0, 1, 1);
        cfg.warmup = cfg.horizon;
        assert!(run_direct_sim(&cfg).is_err());
        cfg = config(0.1, 20.0, 1, 1);
        cfg.trials = 0;
        assert!(run_direct_sim(&cfg).is_err());
    }

    #[test]
    fn short_run_roughly_matches_analysis() {
        let cfg = config(0.1, 260.0, 5, 2);
        let out = run_direct_sim(&cfg).unwrap();
        let SimPolicy::Direct(policy) = cfg.policy else {
            unreachable!()
        };
        let analytic = solve_direct(&policy).unwrap();
        let tv = compare_distributions(&analytic.pi_dr, &out.per_step)
            .unwrap()
            .tv;
        assert!(tv < 0.05, "tv {tv}");
    }
}
