use spares_core::chain::{StateDistribution, DAYS_PER_YEAR};
use spares_core::direct::{shortfall_probability, solve_direct, DirectResult};
use spares_core::indirect::{solve_indirect_with, IndirectResult};
use spares_core::optimize::{ga_search, grid_search};
use spares_core::simulate::{
    compare_distributions, run_direct_sim, run_indirect_sim, DirectSimOutput,
    EmpiricalDistribution, IndirectSimOutput, SimPolicy, SimulationConfig,
};

use crate::error::{CliError, Result};
use crate::report::{
    AnalysisSummary, ComparisonSummary, FixedPointSummary, GaCheck, HistogramSummary,
    OptimizationSummary, Provenance, ReportBundle, SimulationSummary, Table, ValidationCase,
};
use crate::scenario::{Scenario, Strategy};

/// Simulated years pooled into the histograms when no horizon is given.
pub const DEFAULT_SAMPLE_YEARS: f64 = 5000.0;

const PLANE_UNIT: &str = "satellites per plane";
const PARK_UNIT: &str = "batches per parking orbit";

/// Flags that override scenario values.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
}

enum Analysis {
    Direct(DirectResult),
    Indirect(Box<IndirectResult>),
}

impl Analysis {
    fn cycle_days(&self) -> f64 {
        match self {
            Analysis::Direct(r) => r.t_cycle,
            Analysis::Indirect(r) => r.t_cycle_p,
        }
    }
}

enum Simulated {
    Direct(DirectSimOutput),
    Indirect(IndirectSimOutput),
}

fn analyze_case(
    s: &Scenario,
    lambda: f64,
    prefix: &str,
    tables: &mut Vec<Table>,
) -> Result<(AnalysisSummary, Analysis)> {
    let provenance = Provenance::new(&s.hash, None);
    let mut names = Vec::new();
    let mut push =
        |tables: &mut Vec<Table>, key: &str, what: &str, unit: &str, d: &StateDistribution| {
            let name = format!("{prefix}analysis_{key}");
            names.push(name.clone());
            tables.push(Table::distribution(name, what.to_string(), unit, d));
        };
    match s.file.strategy {
        Strategy::Direct => {
            let policy = s.direct_policy(lambda)?;
            let res = solve_direct(&policy).map_err(|e| CliError::from_core("analysis", e))?;
            let t_mc = policy.lead.t_mc;
            push(
                tables,
                "pi_q",
                "stock right after a delivery",
                PLANE_UNIT,
                &res.pi_q,
            );
            push(
                tables,
                "pi_r",
                "stock when an order is placed",
                PLANE_UNIT,
                &res.pi_r,
            );
            push(
                tables,
                "pi_np",
                "time average before the reorder",
                PLANE_UNIT,
                &res.pi_np,
            );
            push(
                tables,
                "pi_wp",
                "time average while an order is outstanding",
                PLANE_UNIT,
                &res.pi_wp,
            );
            push(
                tables,
                "pi_dr",
                "time average over the whole cycle",
                PLANE_UNIT,
                &res.pi_dr,
            );
            let shortfall = shortfall_probability(&res, policy.failure.n_sat)
                .map_err(|e| CliError::from_core("analysis", e))?;
            let summary = AnalysisSummary {
                provenance,
                lambda_per_year: lambda,
                degenerate: res.degenerate,
                t_np_days: res.t_np * t_mc,
                t_wp_days: res.t_wp * t_mc,
                t_cycle_days: res.t_cycle,
                shortfall: Some(shortfall),
                fixed_point: None,
                tables: names,
            };
            Ok((summary, Analysis::Direct(res)))
        }
        Strategy::Indirect => {
            let policy = s.indirect_policy(lambda)?;
            let options = s.indirect_options();
            let res = solve_indirect_with(&policy, options, None)
                .map_err(|e| CliError::from_core("analysis", e))?;
            let t_mc = policy.lead.t_mc;
            push(
                tables,
                "pi_ir_i",
                "plane stock, time average",
                PLANE_UNIT,
                &res.pi_ir_i,
            );
            push(
                tables,
                "pi_q_i",
                "plane stock right after a transfer",
                PLANE_UNIT,
                &res.pi_q_i,
            );
            push(
                tables,
                "pi_r_i",
                "plane stock when it requests spares",
                PLANE_UNIT,
                &res.pi_r_i,
            );
            push(
                tables,
                "pi_ir_p",
                "parking stock, time average",
                PARK_UNIT,
                &res.pi_ir_p,
            );
            push(
                tables,
                "pi_q_p",
                "parking stock right after a delivery",
                PARK_UNIT,
                &res.pi_q_p,
            );
            push(
                tables,
                "pi_r_p",
                "parking stock when an order is placed",
                PARK_UNIT,
                &res.pi_r_p,
            );
            push(
                tables,
                "pi_np_p",
                "parking time average before the reorder",
                PARK_UNIT,
                &res.pi_np_p,
            );
            push(
                tables,
                "pi_wp_p",
                "parking time average while an order is outstanding",
                PARK_UNIT,
                &res.pi_wp_p,
            );
            let summary = AnalysisSummary {
                provenance,
                lambda_per_year: lambda,
                degenerate: res.degenerate,
                t_np_days: res.t_np_p * t_mc,
                t_wp_days: res.t_wp_p * t_mc,
                t_cycle_days: res.t_cycle_p,
                shortfall: None,
                fixed_point: Some(FixedPointSummary {
                    iterations: res.iterations,
                    residual: res.residual,
                    relative_residual: res.relative_residual,
                    tolerance: options.tolerance,
                    rule: options.rule,
                    kappa: res.coupling.kappa.clone(),
                    eta: res.coupling.eta.clone(),
                }),
                tables: names,
            };
            Ok((summary, Analysis::Indirect(Box::new(res))))
        }
    }
}

/// Effective simulation settings; `cycle_days` feeds the default warmup.
fn simulation_config(
    s: &Scenario,
    lambda: f64,
    seed: Option<u64>,
    cycle_days: impl FnOnce() -> Result<f64>,
) -> Result<SimulationConfig> {
    let block = s.file.simulation.clone().ok_or_else(|| {
        CliError::Validation("simulation: block required for this command".into())
    })?;
    let warmup = match block.warmup_days {
        Some(w) => w,
        None => {
            let cycle = cycle_days()?;
            if cycle.is_finite() {
                (10.0 * cycle).max(DAYS_PER_YEAR)
            } else {
                DAYS_PER_YEAR
            }
        }
    };
    let (policy, n_park, units_per_trial) = match s.file.strategy {
        Strategy::Direct => (
            SimPolicy::Direct(s.direct_policy(lambda)?),
            0,
            s.file.constellation.n_planes,
        ),
        Strategy::Indirect => (
            SimPolicy::Indirect(s.indirect_policy(lambda)?),
            s.n_park()?,
            1,
        ),
    };
    let horizon = match block.horizon_days {
        Some(h) => h,
        None => {
            let pooled = (units_per_trial * block.trials) as f64;
            warmup + (DEFAULT_SAMPLE_YEARS / pooled).ceil() * DAYS_PER_YEAR
        }
    };
    let cfg = SimulationConfig {
        policy,
        n_planes: s.file.constellation.n_planes,
        n_park,
        horizon,
        warmup,
        seed: seed.unwrap_or(block.seed),
        trials: block.trials,
        contact_phase: block.contact_phase,
    };
    cfg.validate()
        .map_err(|e| CliError::from_core("simulation", e))?;
    Ok(cfg)
}

fn mean_level(h: &EmpiricalDistribution) -> f64 {
    if h.samples == 0 {
        return f64::NAN;
    }
    let total: f64 = h
        .counts
        .iter()
        .enumerate()
        .map(|(level, &c)| level as f64 * c as f64)
        .sum();
    total / h.samples as f64
}

fn simulate_case(
    s: &Scenario,
    cfg: &SimulationConfig,
    lambda: f64,
    prefix: &str,
    tables: &mut Vec<Table>,
) -> Result<(SimulationSummary, Simulated)> {
    let mut names = Vec::new();
    let mut histograms = Vec::new();
    let mut push =
        |tables: &mut Vec<Table>, key: &str, what: &str, unit: &str, h: &EmpiricalDistribution| {
            let name = format!("{prefix}simulation_{key}");
            names.push(name.clone());
            histograms.push(HistogramSummary {
                name: name.clone(),
                samples: h.samples,
                mean_level: mean_level(h),
            });
            tables.push(Table::histogram(name, what.to_string(), unit, h));
        };
    let out = match s.file.strategy {
        Strategy::Direct => {
            let out = run_direct_sim(cfg).map_err(|e| CliError::from_core("simulation", e))?;
            push(
                tables,
                "per_step",
                "stock sampled every step",
                PLANE_UNIT,
                &out.per_step,
            );
            push(
                tables,
                "at_reorder",
                "stock when an order is placed",
                PLANE_UNIT,
                &out.at_reorder,
            );
            push(
                tables,
                "at_replenish",
                "stock right after a delivery",
                PLANE_UNIT,
                &out.at_replenish,
            );
            Simulated::Direct(out)
        }
        Strategy::Indirect => {
            let out = run_indirect_sim(cfg).map_err(|e| CliError::from_core("simulation", e))?;
            push(
                tables,
                "inplane",
                "plane stock sampled every step",
                PLANE_UNIT,
                &out.inplane,
            );
            push(
                tables,
                "parking",
                "parking stock sampled every step",
                PARK_UNIT,
                &out.parking,
            );
            Simulated::Indirect(out)
        }
    };
    let summary = SimulationSummary {
        provenance: Provenance::new(&s.hash, Some(cfg.seed)),
        lambda_per_year: lambda,
        n_planes: cfg.n_planes,
        n_park: (s.file.strategy == Strategy::Indirect).then_some(cfg.n_park),
        horizon_days: cfg.horizon,
        warmup_days: cfg.warmup,
        trials: cfg.trials,
        contact_phase: cfg.contact_phase,
        histograms,
        tables: names,
    };
    Ok((summary, out))
}

/// Solves the analytic chain for the scenario's failure rate.
pub fn cmd_analyze(s: &Scenario) -> Result<ReportBundle> {
    let mut bundle = ReportBundle::new("analyze", s.file.strategy, Provenance::new(&s.hash, None));
    let (summary, _) = analyze_case(s, s.file.failure.lambda_per_year, "", &mut bundle.tables)?;
    bundle.analysis = Some(summary);
    Ok(bundle)
}

/// Runs the Monte Carlo simulator.
pub fn cmd_simulate(s: &Scenario, overrides: Overrides) -> Result<ReportBundle> {
    let lambda = s.file.failure.lambda_per_year;
    let cfg = simulation_config(s, lambda, overrides.seed, || {
        analyze_case(s, lambda, "", &mut Vec::new()).map(|(_, a)| a.cycle_days())
    })?;
    let mut bundle = ReportBundle::new(
        "simulate",
        s.file.strategy,
        Provenance::new(&s.hash, Some(cfg.seed)),
    );
    let (summary, _) = simulate_case(s, &cfg, lambda, "", &mut bundle.tables)?;
    bundle.simulation = Some(summary);
    Ok(bundle)
}

/// Analysis and simulation side by side for every validation rate.
pub fn cmd_validate(s: &Scenario, overrides: Overrides) -> Result<ReportBundle> {
    let rates = s.validation_rates();
    let mut bundle = ReportBundle::new("validate", s.file.strategy, Provenance::new(&s.hash, None));
    for &lambda in &rates {
        let prefix = if rates.len() == 1 {
            String::new()
        } else {
            format!("lambda_{lambda}_")
        };
        let (analysis, solved) = analyze_case(s, lambda, &prefix, &mut bundle.tables)?;
        let cycle = solved.cycle_days();
        let cfg = simulation_config(s, lambda, overrides.seed, || Ok(cycle))?;
        bundle.provenance.seed = Some(cfg.seed);
        let (simulation, simulated) = simulate_case(s, &cfg, lambda, &prefix, &mut bundle.tables)?;

        let pairs: Vec<(&str, &StateDistribution, &str, &EmpiricalDistribution, &str)> =
            match (&solved, &simulated) {
                (Analysis::Direct(a), Simulated::Direct(m)) => vec![
                    ("pi_dr", &a.pi_dr, "per_step", &m.per_step, PLANE_UNIT),
                    ("pi_q", &a.pi_q, "at_replenish", &m.at_replenish, PLANE_UNIT),
                    ("pi_r", &a.pi_r, "at_reorder", &m.at_reorder, PLANE_UNIT),
                ],
                (Analysis::Indirect(a), Simulated::Indirect(m)) => vec![
                    ("pi_ir_i", &a.pi_ir_i, "inplane", &m.inplane, PLANE_UNIT),
                    ("pi_ir_p", &a.pi_ir_p, "parking", &m.parking, PARK_UNIT),
                ],
                _ => unreachable!("analysis and simulation share the strategy"),
            };
        let mut comparisons = Vec::new();
        for (a_key, analytic, m_key, empirical, unit) in pairs {
            let cmp = compare_distributions(analytic, empirical)
                .map_err(|e| CliError::from_core("validation", e))?;
            let table = format!("{prefix}comparison_{a_key}");
            bundle.tables.push(Table::side_by_side(
                table.clone(),
                format!("analytic {a_key} against simulated {m_key}"),
                unit,
                analytic,
                empirical,
            ));
            comparisons.push(ComparisonSummary {
                analytic: format!("{prefix}analysis_{a_key}"),
                simulated: format!("{prefix}simulation_{m_key}"),
                tv: cmp.tv,
                max_abs: cmp.max_abs,
                table,
            });
        }
        bundle.validation.push(ValidationCase {
            lambda_per_year: lambda,
            analysis,
            simulation,
            comparisons,
        });
    }
    Ok(bundle)
}

/// Grid search over `(r, q)` with an optional genetic-algorithm cross-check.
pub fn cmd_optimize(s: &Scenario, overrides: Overrides) -> Result<ReportBundle> {
    if s.file.strategy != Strategy::Direct {
        return Err(CliError::Validation(
            "strategy: optimization is defined for the direct strategy only".into(),
        ));
    }
    let costs_block = s
        .file
        .costs
        .as_ref()
        .ok_or_else(|| CliError::Validation("costs: block required for optimize".into()))?;
    let costs = s.cost_params(costs_block)?;
    let lambda = s.file.failure.lambda_per_year;
    let template = s.direct_policy(lambda)?;
    let block = s.file.optimization.clone().unwrap_or_default();
    let n_sat = s.file.constellation.n_sat;
    let [r_lo, r_hi] = block.r_range.unwrap_or([n_sat, n_sat + 10]);
    let [q_lo, q_hi] = block.q_range.unwrap_or([1, costs.q_max]);

    let grid = grid_search(r_lo..=r_hi, q_lo..=q_hi, &template, &costs)
        .map_err(|e| CliError::from_core("optimization", e))?;
    let ga = match block.ga {
        Some(mut params) => {
            if let Some(seed) = overrides.seed {
                params.seed = seed;
            }
            let best = ga_search(r_lo..=r_hi, q_lo..=q_hi, &template, &costs, &params, None)
                .map_err(|e| CliError::from_core("optimization.ga", e))?;
            let matches_grid = best.r == grid.best.r && best.q == grid.best.q;
            Some(GaCheck {
                params,
                best,
                matches_grid,
            })
        }
        None => None,
    };

    let seed = ga.as_ref().map(|g| g.params.seed);
    let mut bundle =
        ReportBundle::new("optimize", Strategy::Direct, Provenance::new(&s.hash, seed));
    let table = Table::design_map("optimization_map".into(), &grid.map);
    bundle.optimization = Some(OptimizationSummary {
        lambda_per_year: lambda,
        r_range: [r_lo, r_hi],
        q_range: [q_lo, q_hi],
        feasible_points: grid.map.iter().filter(|p| p.feasible).count(),
        best: grid.best,
        ga,
        table: table.name.clone(),
    });
    bundle.tables.push(table);
    Ok(bundle)
}
