//! JSON scenario files.
//!
//! Field-level checks run during deserialization, so errors carry the JSON
//! path together with the line and column of the offending value.

use std::fmt::Display;
use std::path::Path;

use serde::de::{Deserializer, Error as _};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use spares_core::chain::{LeadTimeModel, DAYS_PER_YEAR};
use spares_core::direct::DirectPolicy;
use spares_core::indirect::{IndirectOptions, IndirectPolicy, StoppingRule};
use spares_core::optimize::{CostParams, GaParams};
use spares_core::orbit::{contact_periods, ContactGeometry, ContactPeriods, OrbitGeometry};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Direct,
    Indirect,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub strategy: Strategy,
    pub constellation: ConstellationBlock,
    pub failure: FailureBlock,
    pub lead: LeadBlock,
    pub policy: PolicyBlock,
    #[serde(default)]
    pub costs: Option<CostBlock>,
    #[serde(default)]
    pub simulation: Option<SimulationBlock>,
    #[serde(default)]
    pub analysis: AnalysisBlock,
    #[serde(default)]
    pub optimization: Option<OptimizationBlock>,
    #[serde(default)]
    pub validation: Option<ValidationBlock>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstellationBlock {
    #[serde(deserialize_with = "at_least_one")]
    pub n_planes: usize,
    /// Operational satellites per plane.
    #[serde(deserialize_with = "at_least_one")]
    pub n_sat: usize,
    #[serde(default, deserialize_with = "opt_positive")]
    pub t_plane_days: Option<f64>,
    #[serde(default, deserialize_with = "opt_positive")]
    pub t_park_days: Option<f64>,
    #[serde(default)]
    pub plane_orbit: Option<OrbitGeometry>,
    #[serde(default)]
    pub park_orbit: Option<OrbitGeometry>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FailureBlock {
    #[serde(deserialize_with = "non_negative")]
    pub lambda_per_year: f64,
    #[serde(default = "one", deserialize_with = "positive")]
    pub t_mc_days: f64,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LeadBlock {
    /// Mean of the exponential part, 1/μ.
    #[serde(deserialize_with = "positive")]
    pub mean_tail_days: f64,
    #[serde(deserialize_with = "non_negative")]
    pub t_lv_days: f64,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicyBlock {
    pub r: usize,
    #[serde(deserialize_with = "at_least_one")]
    pub q: usize,
    #[serde(default)]
    pub r_p: Option<usize>,
    #[serde(default)]
    pub q_p: Option<usize>,
    #[serde(default)]
    pub n_park: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostBlock {
    #[serde(deserialize_with = "non_negative")]
    pub p_build: f64,
    #[serde(deserialize_with = "non_negative")]
    pub p_launch: f64,
    /// Per satellite per year.
    #[serde(deserialize_with = "non_negative")]
    pub p_holding: f64,
    #[serde(deserialize_with = "non_negative")]
    pub gamma: f64,
    #[serde(deserialize_with = "at_least_one")]
    pub q_max: usize,
    #[serde(deserialize_with = "positive")]
    pub xi: f64,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationBlock {
    /// Total simulated days per trial, warmup included.
    #[serde(default, deserialize_with = "opt_positive")]
    pub horizon_days: Option<f64>,
    #[serde(default, deserialize_with = "opt_non_negative")]
    pub warmup_days: Option<f64>,
    #[serde(default = "one_usize", deserialize_with = "at_least_one")]
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub contact_phase: usize,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisBlock {
    #[serde(default = "default_tolerance", deserialize_with = "positive")]
    pub tolerance: f64,
    #[serde(default = "default_max_iterations", deserialize_with = "at_least_one")]
    pub max_iterations: usize,
    #[serde(default = "default_rule")]
    pub rule: StoppingRule,
}

impl Default for AnalysisBlock {
    fn default() -> Self {
        Self {
            tolerance: default_tolerance(),
            max_iterations: default_max_iterations(),
            rule: default_rule(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizationBlock {
    #[serde(default)]
    pub r_range: Option<[usize; 2]>,
    #[serde(default)]
    pub q_range: Option<[usize; 2]>,
    /// Runs the genetic algorithm as a cross-check when present.
    #[serde(default)]
    pub ga: Option<GaParams>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidationBlock {
    /// Failure rates to validate; defaults to the failure block's rate.
    #[serde(deserialize_with = "rate_list")]
    pub lambda_per_year: Vec<f64>,
}

fn one() -> f64 {
    1.0
}
fn one_usize() -> usize {
    1
}
fn default_tolerance() -> f64 {
    IndirectOptions::default().tolerance
}
fn default_max_iterations() -> usize {
    IndirectOptions::default().max_iterations
}
fn default_rule() -> StoppingRule {
    IndirectOptions::default().rule
}

fn checked<'de, D, T, F>(d: D, ok: F, expected: &str) -> std::result::Result<T, D::Error>
where
    D: Deserializer<'de>,
    T: Deserialize<'de> + Display + Copy,
    F: Fn(T) -> bool,
{
    let v = T::deserialize(d)?;
    if ok(v) {
        Ok(v)
    } else {
        Err(D::Error::custom(format!("expected {expected}, got {v}")))
    }
}

fn positive<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    checked(
        d,
        |v: f64| v.is_finite() && v > 0.0,
        "a positive finite number",
    )
}

fn non_negative<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    checked(
        d,
        |v: f64| v.is_finite() && v >= 0.0,
        "a finite number >= 0",
    )
}

fn at_least_one<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<usize, D::Error> {
    checked(d, |v: usize| v >= 1, "an integer >= 1")
}

fn opt_positive<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Option<f64>, D::Error> {
    positive(d).map(Some)
}

fn opt_non_negative<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Option<f64>, D::Error> {
    non_negative(d).map(Some)
}

fn rate_list<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<f64>, D::Error> {
    let rates = Vec::<f64>::deserialize(d)?;
    if rates.is_empty() {
        return Err(D::Error::custom("expected at least one failure rate"));
    }
    if let Some(bad) = rates.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
        return Err(D::Error::custom(format!(
            "expected finite rates >= 0, got {bad}"
        )));
    }
    Ok(rates)
}

/// A parsed scenario together with the SHA-256 of its source bytes.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub file: ScenarioFile,
    pub hash: String,
}

impl Scenario {
    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path)
            .map_err(|e| CliError::io(format!("reading {}", path.display()), e))?;
        Self::parse(&bytes)
    }

    pub fn parse(bytes: &[u8]) -> Result<Self> {
        let mut de = serde_json::Deserializer::from_slice(bytes);
        let file: ScenarioFile = serde_path_to_error::deserialize(&mut de)
            .map_err(|e| CliError::Validation(e.to_string()))?;
        de.end()
            .map_err(|e| CliError::Validation(format!("trailing content: {e}")))?;
        let scenario = Self {
            file,
            hash: hash_bytes(bytes),
        };
        scenario.validate()?;
        Ok(scenario)
    }

    /// Cross-field checks that need more than one value.
    fn validate(&self) -> Result<()> {
        let f = &self.file;
        self.lead_model()?;
        self.direct_policy(f.failure.lambda_per_year)?;
        if f.strategy == Strategy::Indirect {
            self.indirect_policy(f.failure.lambda_per_year)?;
        }
        if let Some(costs) = &f.costs {
            self.cost_params(costs)?;
        }
        if let Some(opt) = &f.optimization {
            for (name, range) in [("r_range", opt.r_range), ("q_range", opt.q_range)] {
                if let Some([lo, hi]) = range {
                    if lo > hi {
                        return Err(CliError::Validation(format!(
                            "optimization.{name}: lower bound {lo} exceeds upper bound {hi}"
                        )));
                    }
                }
            }
            if let Some(ga) = &opt.ga {
                ga.validate()
                    .map_err(|e| CliError::from_core("optimization.ga", e))?;
            }
        }
        if let Some(sim) = &f.simulation {
            if let (Some(h), Some(w)) = (sim.horizon_days, sim.warmup_days) {
                if h <= w {
                    return Err(CliError::Validation(format!(
                        "simulation.horizon_days: {h} must exceed warmup_days {w}"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn lead_model(&self) -> Result<LeadTimeModel> {
        let lead = &self.file.lead;
        LeadTimeModel::from_mean_tail(
            lead.mean_tail_days,
            lead.t_lv_days,
            self.file.failure.t_mc_days,
        )
        .map_err(|e| CliError::from_core("lead", e))
    }

    fn lambda_per_step(&self, lambda_per_year: f64) -> f64 {
        lambda_per_year * self.file.failure.t_mc_days / DAYS_PER_YEAR
    }

    pub fn direct_policy(&self, lambda_per_year: f64) -> Result<DirectPolicy> {
        let p = &self.file.policy;
        DirectPolicy::new(
            p.r,
            p.q,
            self.lambda_per_step(lambda_per_year),
            self.file.constellation.n_sat,
            self.lead_model()?,
        )
        .map_err(|e| CliError::from_core("policy", e))
    }

    pub fn n_park(&self) -> Result<usize> {
        match self.file.policy.n_park {
            Some(0) => Err(CliError::Validation(
                "policy.n_park: expected an integer >= 1, got 0".into(),
            )),
            Some(n) => Ok(n),
            None => Err(CliError::Validation(
                "policy.n_park: required for the indirect strategy".into(),
            )),
        }
    }

    /// Contact periods, explicit or from the orbit geometry.
    ///
    /// Geometry-derived periods are snapped to whole steps: `t_park` to the
    /// nearest step, and `t_plane = t_park · n_planes / n_park`, which must
    /// then be a whole number of steps too.
    pub fn contact_periods(&self) -> Result<ContactPeriods> {
        let c = &self.file.constellation;
        match (c.t_plane_days, c.t_park_days, c.plane_orbit, c.park_orbit) {
            (Some(t_plane), Some(t_park), None, None) => Ok(ContactPeriods { t_plane, t_park }),
            (None, None, Some(plane_orbit), Some(park_orbit)) => {
                let n_park = self.n_park()?;
                let exact = contact_periods(&ContactGeometry {
                    n_planes: c.n_planes,
                    n_park,
                    plane_orbit,
                    park_orbit,
                })
                .map_err(|e| CliError::from_core("constellation", e))?;
                let t_mc = self.file.failure.t_mc_days;
                let k_p = (exact.t_park / t_mc).round().max(1.0) as usize;
                let park_steps_total = k_p * c.n_planes;
                if park_steps_total % n_park != 0 {
                    return Err(CliError::Validation(format!(
                        "constellation: geometry gives t_park = {:.3} days ({k_p} steps), \
                         but {k_p} * n_planes is not divisible by n_park = {n_park}; \
                         give t_plane_days and t_park_days explicitly",
                        exact.t_park
                    )));
                }
                Ok(ContactPeriods {
                    t_plane: (park_steps_total / n_park) as f64 * t_mc,
                    t_park: k_p as f64 * t_mc,
                })
            }
            _ => Err(CliError::Validation(
                "constellation: give either t_plane_days and t_park_days, \
                 or plane_orbit and park_orbit"
                    .into(),
            )),
        }
    }

    pub fn indirect_policy(&self, lambda_per_year: f64) -> Result<IndirectPolicy> {
        let p = &self.file.policy;
        let missing = |name: &str| {
            CliError::Validation(format!("policy.{name}: required for the indirect strategy"))
        };
        let r_p = p.r_p.ok_or_else(|| missing("r_p"))?;
        let q_p = p.q_p.ok_or_else(|| missing("q_p"))?;
        self.n_park()?;
        let periods = self.contact_periods()?;
        IndirectPolicy::new(
            p.r,
            p.q,
            r_p,
            q_p,
            self.lambda_per_step(lambda_per_year),
            self.file.constellation.n_sat,
            self.lead_model()?,
            periods.t_plane,
            periods.t_park,
        )
        .map_err(|e| CliError::from_core("policy", e))
    }

    pub fn indirect_options(&self) -> IndirectOptions {
        let a = &self.file.analysis;
        IndirectOptions {
            tolerance: a.tolerance,
            max_iterations: a.max_iterations,
            rule: a.rule,
        }
    }

    pub fn cost_params(&self, costs: &CostBlock) -> Result<CostParams> {
        let params = CostParams {
            p_build: costs.p_build,
            p_launch: costs.p_launch,
            p_holding: costs.p_holding,
            gamma: costs.gamma,
            q_max: costs.q_max,
            xi: costs.xi,
            n_planes: self.file.constellation.n_planes,
        };
        params
            .validate()
            .map_err(|e| CliError::from_core("costs", e))?;
        Ok(params)
    }

    /// Failure rates covered by `validate`.
    pub fn validation_rates(&self) -> Vec<f64> {
        match &self.file.validation {
            Some(v) => v.lambda_per_year.clone(),
            None => vec![self.file.failure.lambda_per_year],
        }
    }
}

pub fn hash_bytes(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}
