//! Yearly cost model and `(r, q)` design search for the direct strategy.

use std::collections::BTreeMap;
use std::ops::RangeInclusive;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chain::DAYS_PER_YEAR;
use crate::direct::{shortfall_probability, solve_direct, DirectPolicy};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostParams {
    /// Cost per satellite.
    pub p_build: f64,
    /// Cost per satellite.
    pub p_launch: f64,
    /// Cost per satellite per year.
    pub p_holding: f64,
    /// Launch discount for a full vehicle.
    pub gamma: f64,
    /// Launch vehicle capacity in satellites.
    pub q_max: usize,
    /// Allowed fraction of time below the nominal level.
    pub xi: f64,
    pub n_planes: usize,
}

impl CostParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("p_build", self.p_build),
            ("p_launch", self.p_launch),
            ("p_holding", self.p_holding),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::invalid(name, "price must be finite and >= 0"));
            }
        }
        if !(0.0..1.0).contains(&self.gamma) {
            return Err(Error::invalid("gamma", "must lie in [0, 1)"));
        }
        if !(self.xi > 0.0 && self.xi <= 1.0) {
            return Err(Error::invalid("xi", "must lie in (0, 1]"));
        }
        if self.q_max == 0 {
            return Err(Error::invalid("q_max", "must be at least 1"));
        }
        if self.n_planes == 0 {
            return Err(Error::invalid("n_planes", "must be at least 1"));
        }
        Ok(())
    }
}

/// Costs are per year.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DesignPoint {
    pub r: usize,
    pub q: usize,
    pub feasible: bool,
    pub c_build: f64,
    pub c_launch: f64,
    pub c_holding: f64,
    pub c_total: f64,
    /// `P(X < N_sat)`.
    pub shortfall: f64,
    /// Set when `(r, q)` lies outside `N_sat ≤ r`, `1 ≤ q ≤ q_max`.
    pub bound_violation: Option<String>,
}

impl DesignPoint {
    fn out_of_bounds(r: usize, q: usize, reason: String) -> Self {
        Self {
            r,
            q,
            feasible: false,
            c_build: f64::INFINITY,
            c_launch: f64::INFINITY,
            c_holding: f64::INFINITY,
            c_total: f64::INFINITY,
            shortfall: 1.0,
            bound_violation: Some(reason),
        }
    }
}

/// Solves the direct chain for `policy` and prices it.
pub fn evaluate_design(policy: &DirectPolicy, costs: &CostParams) -> Result<DesignPoint> {
    costs.validate()?;
    let (r, q) = (policy.r, policy.q);
    let n_sat = policy.failure.n_sat;
    if r < n_sat {
        return Ok(DesignPoint::out_of_bounds(
            r,
            q,
            format!("r = {r} below nominal level {n_sat}"),
        ));
    }
    if q == 0 || q > costs.q_max {
        return Ok(DesignPoint::out_of_bounds(
            r,
            q,
            format!("q = {q} outside 1..={}", costs.q_max),
        ));
    }

    let result = solve_direct(policy)?;
    let cycle_years = result.t_cycle / DAYS_PER_YEAR;
    let planes = costs.n_planes as f64;
    let c_build = planes * costs.p_build * q as f64 / cycle_years;
    let c_launch = if q == costs.q_max {
        (1.0 - costs.gamma) * planes * costs.p_launch * costs.q_max as f64 / cycle_years
    } else {
        planes * costs.p_launch * q as f64 / cycle_years
    };
    let c_holding = planes
        * (n_sat + 1..=policy.n_bar())
            .map(|k| costs.p_holding * k as f64 * result.pi_dr.at_level(k))
            .sum::<f64>();
    let shortfall = shortfall_probability(&result, n_sat)?;

    Ok(DesignPoint {
        r,
        q,
        feasible: shortfall <= costs.xi,
        c_build,
        c_launch,
        c_holding,
        c_total: c_build + c_launch + c_holding,
        shortfall,
        bound_violation: None,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridResult {
    pub best: DesignPoint,
    /// Every evaluated design, `r`-major.
    pub map: Vec<DesignPoint>,
}

/// `a` beats `b`: lower cost, then smaller `r`, then smaller `q`.
fn better(a: &DesignPoint, b: &DesignPoint) -> bool {
    (a.c_total, a.r, a.q) < (b.c_total, b.r, b.q)
}

fn pick_best<'a>(points: impl IntoIterator<Item = &'a DesignPoint>) -> Result<DesignPoint> {
    let mut best: Option<&DesignPoint> = None;
    let mut closest: Option<&DesignPoint> = None;
    for p in points {
        if p.feasible {
            if best.is_none_or(|b| better(p, b)) {
                best = Some(p);
            }
        } else if p.bound_violation.is_none() && closest.is_none_or(|c| p.shortfall < c.shortfall) {
            closest = Some(p);
        }
    }
    match (best, closest) {
        (Some(b), _) => Ok(b.clone()),
        (None, Some(c)) => Err(Error::NoFeasibleDesign {
            r: c.r,
            q: c.q,
            shortfall: c.shortfall,
        }),
        (None, None) => Err(Error::NoFeasibleDesign {
            r: 0,
            q: 0,
            shortfall: 1.0,
        }),
    }
}

/// Exhaustive search over `r_range × q_range`.
pub fn grid_search(
    r_range: RangeInclusive<usize>,
    q_range: RangeInclusive<usize>,
    template: &DirectPolicy,
    costs: &CostParams,
) -> Result<GridResult> {
    if r_range.is_empty() || q_range.is_empty() {
        return Err(Error::invalid("ranges", "search ranges must be nonempty"));
    }
    let cells: Vec<(usize, usize)> = r_range
        .flat_map(|r| q_range.clone().map(move |q| (r, q)))
        .collect();
    let map = cells
        .par_iter()
        .map(|&(r, q)| evaluate_cell(template, costs, r, q))
        .collect::<Result<Vec<_>>>()?;
    let best = pick_best(&map)?;
    Ok(GridResult { best, map })
}

fn evaluate_cell(
    template: &DirectPolicy,
    costs: &CostParams,
    r: usize,
    q: usize,
) -> Result<DesignPoint> {
    if q == 0 {
        return Ok(DesignPoint::out_of_bounds(r, q, "q = 0".into()));
    }
    evaluate_design(&template.with_rq(r, q)?, costs)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GaParams {
    pub population: usize,
    pub generations: usize,
    pub crossover_rate: f64,
    /// Per-gene probability of a uniform redraw within bounds.
    pub mutation_rate: f64,
    /// Added to the cost of infeasible designs.
    pub penalty: f64,
    pub seed: u64,
}

impl Default for GaParams {
    fn default() -> Self {
        Self {
            population: 20,
            generations: 30,
            crossover_rate: 0.9,
            mutation_rate: 0.2,
            penalty: 1e9,
            seed: 0,
        }
    }
}

impl GaParams {
    pub fn validate(&self) -> Result<()> {
        if self.population < 2 {
            return Err(Error::invalid("population", "must be at least 2"));
        }
        if !(0.0..=1.0).contains(&self.crossover_rate) {
            return Err(Error::invalid("crossover_rate", "must lie in [0, 1]"));
        }
        if !(0.0..=1.0).contains(&self.mutation_rate) {
            return Err(Error::invalid("mutation_rate", "must lie in [0, 1]"));
        }
        if !(self.penalty.is_finite() && self.penalty > 0.0) {
            return Err(Error::invalid("penalty", "must be positive"));
        }
        Ok(())
    }
}

type Genome = (usize, usize);

/// Genetic search over integer `(r, q)` within the given bounds.
///
/// Tournament selection of size 3, single-point crossover (the `q` gene is
/// swapped), per-gene uniform mutation and one elite. Returns the best
/// feasible design evaluated during the run.
pub fn ga_search(
    r_bounds: RangeInclusive<usize>,
    q_bounds: RangeInclusive<usize>,
    template: &DirectPolicy,
    costs: &CostParams,
    params: &GaParams,
    initial: Option<Vec<Genome>>,
) -> Result<DesignPoint> {
    params.validate()?;
    if r_bounds.is_empty() || q_bounds.is_empty() {
        return Err(Error::invalid("bounds", "search bounds must be nonempty"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut population: Vec<Genome> = match initial {
        Some(pop) if !pop.is_empty() => {
            if pop
                .iter()
                .any(|(r, q)| !r_bounds.contains(r) || !q_bounds.contains(q))
            {
                return Err(Error::invalid("initial", "individual outside bounds"));
            }
            pop
        }
        _ => (0..params.population)
            .map(|_| {
                (
                    rng.random_range(r_bounds.clone()),
                    rng.random_range(q_bounds.clone()),
                )
            })
            .collect(),
    };

    let mut cache: BTreeMap<Genome, DesignPoint> = BTreeMap::new();
    let fitness = |p: &DesignPoint| {
        if p.feasible {
            p.c_total
        } else {
            p.c_total.min(f64::MAX / 4.0) + params.penalty * (1.0 + p.shortfall)
        }
    };

    for generation in 0..=params.generations {
        evaluate_missing(&population, &mut cache, template, costs)?;
        if generation == params.generations {
            break;
        }
        let scores: Vec<f64> = population.iter().map(|g| fitness(&cache[g])).collect();
        let elite = (0..population.len())
            .min_by(|&a, &b| {
                scores[a]
                    .total_cmp(&scores[b])
                    .then(population[a].cmp(&population[b]))
            })
            .expect("nonempty population");

        let mut next = vec![population[elite]];
        let size = population.len().max(params.population);
        while next.len() < size {
            let a = population[tournament(&mut rng, &scores)];
            let b = population[tournament(&mut rng, &scores)];
            let (mut c1, mut c2) = if rng.random_bool(params.crossover_rate) {
                ((a.0, b.1), (b.0, a.1))
            } else {
                (a, b)
            };
            for child in [&mut c1, &mut c2] {
                if rng.random_bool(params.mutation_rate) {
                    child.0 = rng.random_range(r_bounds.clone());
                }
                if rng.random_bool(params.mutation_rate) {
                    child.1 = rng.random_range(q_bounds.clone());
                }
            }
            next.push(c1);
            if next.len() < size {
                next.push(c2);
            }
        }
        population = next;
    }
    pick_best(cache.values())
}

fn tournament(rng: &mut ChaCha8Rng, scores: &[f64]) -> usize {
    let mut best = rng.random_range(0..scores.len());
    for _ in 1..3 {
        let c = rng.random_range(0..scores.len());
        if scores[c] < scores[best] || (scores[c] == scores[best] && c < best) {
            best = c;
        }
    }
    best
}

fn evaluate_missing(
    population: &[Genome],
    cache: &mut BTreeMap<Genome, DesignPoint>,
    template: &DirectPolicy,
    costs: &CostParams,
) -> Result<()> {
    let mut missing: Vec<Genome> = population
        .iter()
        .filter(|g| !cache.contains_key(g))
        .copied()
        .collect();
    missing.sort_unstable();
    missing.dedup();
    let points = missing
        .par_iter()
        .map(|&(r, q)| evaluate_cell(template, costs, r, q))
        .collect::<Result<Vec<_>>>()?;
    cache.extend(missing.into_iter().zip(points));
    Ok(())
}
