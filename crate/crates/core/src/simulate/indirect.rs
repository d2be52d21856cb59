use rayon::prelude::*;
use serde::Serialize;

use super::{
    entity_rng, EmpiricalDistribution, FailureSampler, LeadSampler, SamplingMode, SimPolicy,
    SimulationConfig,
};
use crate::error::{Error, Result};
use crate::indirect::{demand_batches, IndirectPolicy};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct IndirectSimOutput {
    /// Plane stock every step, pooled over planes (satellites).
    pub inplane: EmpiricalDistribution,
    /// Parking stock every step, pooled over parking orbits (batches).
    pub parking: EmpiricalDistribution,
}

impl IndirectSimOutput {
    fn empty(policy: &IndirectPolicy) -> Self {
        Self {
            inplane: EmpiricalDistribution::new(policy.n_bar_i(), SamplingMode::PerStep),
            parking: EmpiricalDistribution::new(policy.n_bar_p(), SamplingMode::PerStep),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Contact {
    pub park: usize,
    pub plane: usize,
}

/// Contacts by step within one schedule period of `n_planes · k_p` steps.
///
/// Parking orbit `p` meets plane `j` at `j·k_p − p·k_i + phase`: each parking
/// orbit sweeps the planes in order every `k_p` steps and each plane sees the
/// next parking orbit every `k_i` steps.
pub fn contact_schedule(
    n_planes: usize,
    n_park: usize,
    k_i: usize,
    k_p: usize,
    phase: usize,
) -> Vec<Vec<Contact>> {
    let period = n_planes * k_p;
    let mut slots = vec![Vec::new(); period];
    for park in 0..n_park {
        for plane in 0..n_planes {
            let at = (plane * k_p + phase + period * park * k_i - park * k_i) % period;
            slots[at].push(Contact { park, plane });
        }
    }
    slots
}

#[derive(Debug, Clone, Copy)]
struct ParkState {
    stock: usize,
    due: Option<u64>,
}

/// Simulates every plane and parking orbit of the constellation.
///
/// Within step `t`: plane failures, then contacts (demand served from the
/// parking stock, then the parking reorder check), then parking deliveries
/// due at `t`. A parking order placed at `t` arrives at `t + floor(L / T_mc)`.
pub fn run_indirect_sim(cfg: &SimulationConfig) -> Result<IndirectSimOutput> {
    cfg.validate()?;
    let SimPolicy::Indirect(policy) = cfg.policy else {
        return Err(Error::InvalidConfig(
            "indirect simulation requires an indirect policy".into(),
        ));
    };
    let failures = FailureSampler::new(&policy.failure)?;
    let lead = LeadSampler::new(&policy.lead)?;
    let schedule = contact_schedule(
        cfg.n_planes,
        cfg.n_park,
        policy.k_i(),
        policy.k_p(),
        cfg.contact_phase,
    );

    let trials: Vec<IndirectSimOutput> = (0..cfg.trials)
        .into_par_iter()
        .map(|trial| simulate_trial(cfg, &policy, &failures, &lead, &schedule, trial))
        .collect();

    let mut total = IndirectSimOutput::empty(&policy);
    for t in &trials {
        total.inplane.merge(&t.inplane)?;
        total.parking.merge(&t.parking)?;
    }
    Ok(total)
}

fn simulate_trial(
    cfg: &SimulationConfig,
    policy: &IndirectPolicy,
    failures: &FailureSampler,
    lead: &LeadSampler,
    schedule: &[Vec<Contact>],
    trial: usize,
) -> IndirectSimOutput {
    let mut out = IndirectSimOutput::empty(policy);
    let mut plane_rngs: Vec<_> = (0..cfg.n_planes)
        .map(|j| entity_rng(cfg.seed, trial, j))
        .collect();
    let mut park_rngs: Vec<_> = (0..cfg.n_park)
        .map(|p| entity_rng(cfg.seed, trial, cfg.n_planes + p))
        .collect();
    let mut planes = vec![policy.n_bar_i(); cfg.n_planes];
    let mut parks = vec![
        ParkState {
            stock: policy.n_bar_p(),
            due: None,
        };
        cfg.n_park
    ];
    let warmup = cfg.warmup_steps();
    let period = schedule.len() as u64;

    for t in 1..=cfg.total_steps() {
        for (level, rng) in planes.iter_mut().zip(&mut plane_rngs) {
            *level = failures.step(rng, *level);
        }
        for c in &schedule[(t % period) as usize] {
            let park = &mut parks[c.park];
            let demand = demand_batches(planes[c.plane], policy.r_i, policy.q_i);
            let given = demand.min(park.stock);
            planes[c.plane] += given * policy.q_i;
            park.stock -= given;
            if park.stock <= policy.r_p && park.due.is_none() {
                park.due = Some(t + lead.draw(&mut park_rngs[c.park]));
            }
        }
        for park in &mut parks {
            if park.due == Some(t) {
                park.stock += policy.q_p;
                park.due = None;
            }
        }
        if t > warmup {
            for &level in &planes {
                out.inplane.record(level);
            }
            for park in &parks {
                out.parking.record(park.stock);
            }
        }
    }
    out
}
