//! Monte Carlo simulation of a full constellation under either strategy.
//!
//! Time advances in Markov steps of `T_mc`. Every trial owns one random
//! stream per plane and per parking orbit, keyed by `(seed, trial, entity)`,
//! so results do not depend on how trials are spread over threads.

mod direct;
mod histogram;
mod indirect;

pub use direct::{run_direct_sim, DirectSimOutput};
pub use histogram::{compare_distributions, Comparison, EmpiricalDistribution, SamplingMode};
pub use indirect::{contact_schedule, run_indirect_sim, Contact, IndirectSimOutput};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Poisson};
use serde::Serialize;

use crate::chain::{FailureModel, LeadTimeModel};
use crate::direct::DirectPolicy;
use crate::error::{Error, Result};
use crate::indirect::IndirectPolicy;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "strategy", rename_all = "lowercase")]
pub enum SimPolicy {
    Direct(DirectPolicy),
    Indirect(IndirectPolicy),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimulationConfig {
    pub policy: SimPolicy,
    pub n_planes: usize,
    /// Ignored by the direct strategy.
    pub n_park: usize,
    /// Total simulated days per trial, warmup included.
    pub horizon: f64,
    /// Days discarded before sampling.
    pub warmup: f64,
    pub seed: u64,
    pub trials: usize,
    /// Steps added to every contact time.
    pub contact_phase: usize,
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_planes == 0 {
            return Err(Error::invalid("n_planes", "must be at least 1"));
        }
        if self.trials == 0 {
            return Err(Error::invalid("trials", "must be at least 1"));
        }
        if !(self.warmup.is_finite() && self.warmup >= 0.0) {
            return Err(Error::invalid("warmup", "must be finite and >= 0"));
        }
        if !(self.horizon.is_finite() && self.horizon > self.warmup) {
            return Err(Error::invalid("horizon", "must exceed the warmup"));
        }
        match &self.policy {
            SimPolicy::Direct(p) => p.validate(),
            SimPolicy::Indirect(p) => {
                p.validate()?;
                if self.n_park == 0 {
                    return Err(Error::invalid("n_park", "must be at least 1"));
                }
                if self.n_planes * p.k_p() != self.n_park * p.k_i() {
                    return Err(Error::invalid(
                        "t_plane",
                        format!(
                            "n_planes * t_park = {} must equal n_park * t_plane = {}",
                            self.n_planes as f64 * p.t_park,
                            self.n_park as f64 * p.t_plane
                        ),
                    ));
                }
                Ok(())
            }
        }
    }

    fn t_mc(&self) -> f64 {
        match &self.policy {
            SimPolicy::Direct(p) => p.lead.t_mc,
            SimPolicy::Indirect(p) => p.t_mc(),
        }
    }

    pub fn total_steps(&self) -> u64 {
        (self.horizon / self.t_mc()).floor() as u64
    }

    pub fn warmup_steps(&self) -> u64 {
        (self.warmup / self.t_mc()).ceil() as u64
    }
}

/// Independent stream for one entity of one trial.
pub fn entity_rng(seed: u64, trial: usize, entity: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((trial as u64) << 32) | entity as u64);
    rng
}

/// Per-step failure draws for one plane.
#[derive(Debug, Clone)]
pub struct FailureSampler {
    n_sat: usize,
    lambda: f64,
    /// `Poisson(n λ)` for `n = 1..=N_sat` operating satellites.
    by_operating: Vec<Option<Poisson<f64>>>,
}

impl FailureSampler {
    pub fn new(model: &FailureModel) -> Result<Self> {
        model.validate()?;
        let by_operating = (0..=model.n_sat)
            .map(|n| {
                let mean = n as f64 * model.lambda_per_step;
                if mean > 0.0 {
                    Poisson::new(mean)
                        .map(Some)
                        .map_err(|e| Error::invalid("lambda", e.to_string()))
                } else {
                    Ok(None)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            n_sat: model.n_sat,
            lambda: model.lambda_per_step,
            by_operating,
        })
    }

    /// Raw `Poisson(min(x, N_sat) λ)` draw.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R, level: usize) -> u64 {
        match &self.by_operating[level.min(self.n_sat)] {
            Some(p) => p.sample(rng) as u64,
            None => 0,
        }
    }

    /// Level after one step: at most `N_sat` losses, never below empty.
    pub fn step<R: Rng + ?Sized>(&self, rng: &mut R, level: usize) -> usize {
        if self.lambda == 0.0 {
            return level;
        }
        let drop = self.draw(rng, level).min(self.n_sat as u64) as usize;
        level.saturating_sub(drop)
    }
}

/// Launch lead time draws in whole steps, `floor((T_LV + Exp(μ)) / T_mc)`.
#[derive(Debug, Clone)]
pub struct LeadSampler {
    offset: u64,
    t_mc: f64,
    tail: Exp<f64>,
}

impl LeadSampler {
    pub fn new(model: &LeadTimeModel) -> Result<Self> {
        model.validate()?;
        Ok(Self {
            offset: model.offset_steps() as u64,
            t_mc: model.t_mc,
            tail: Exp::new(model.mu_lv).map_err(|e| Error::invalid("mu_lv", e.to_string()))?,
        })
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        self.offset + (self.tail.sample(rng) / self.t_mc).floor() as u64
    }
}
