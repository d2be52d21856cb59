//! Report bundle and its JSON and CSV writers.
//!
//! Every numeric table lives in the bundle; the writers only choose which
//! files to emit. Floats use the shortest round-trip form, so identical
//! bundles produce identical bytes.

use std::fs;
use std::path::Path;

use clap::ValueEnum;
use serde::Serialize;

use spares_core::chain::StateDistribution;
use spares_core::optimize::{DesignPoint, GaParams};
use spares_core::simulate::EmpiricalDistribution;

use crate::error::{CliError, Result};
use crate::scenario::Strategy;

pub const SUMMARY_FILE: &str = "summary.json";

/// Level ordering used by every distribution table.
pub const LEVEL_CONVENTION: &str = "level ascending from 0";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Json,
    Csv,
    Both,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Provenance {
    pub tool: &'static str,
    pub version: &'static str,
    /// SHA-256 of the scenario file bytes.
    pub scenario_hash: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl Provenance {
    pub fn new(scenario_hash: &str, seed: Option<u64>) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            scenario_hash: scenario_hash.to_string(),
            seed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Cell {
    Int(u64),
    Float(f64),
    Bool(bool),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Float(v) => v.to_string(),
            Cell::Bool(v) => v.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table {
    pub name: String,
    pub description: String,
    /// Unit of the `level` column, or of the table's values.
    pub unit: String,
    pub level_convention: &'static str,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn file_name(&self) -> String {
        format!("{}.csv", self.name)
    }

    /// `level, probability` rows of an analytic distribution.
    pub fn distribution(
        name: String,
        description: String,
        unit: &str,
        d: &StateDistribution,
    ) -> Self {
        let rows = d
            .ascending()
            .into_iter()
            .enumerate()
            .map(|(level, p)| vec![Cell::Int(level as u64), Cell::Float(p)])
            .collect();
        Self {
            name,
            description,
            unit: unit.to_string(),
            level_convention: LEVEL_CONVENTION,
            columns: vec!["level", "probability"],
            rows,
        }
    }

    /// `level, count, probability` rows of a simulated histogram.
    pub fn histogram(
        name: String,
        description: String,
        unit: &str,
        h: &EmpiricalDistribution,
    ) -> Self {
        let rows = h
            .counts
            .iter()
            .enumerate()
            .map(|(level, &count)| {
                vec![
                    Cell::Int(level as u64),
                    Cell::Int(count),
                    Cell::Float(h.frequency(level)),
                ]
            })
            .collect();
        Self {
            name,
            description,
            unit: unit.to_string(),
            level_convention: LEVEL_CONVENTION,
            columns: vec!["level", "count", "probability"],
            rows,
        }
    }

    /// Analytic and simulated probabilities side by side.
    pub fn side_by_side(
        name: String,
        description: String,
        unit: &str,
        analytic: &StateDistribution,
        empirical: &EmpiricalDistribution,
    ) -> Self {
        let rows = analytic
            .ascending()
            .into_iter()
            .enumerate()
            .map(|(level, p)| {
                let f = empirical.frequency(level);
                vec![
                    Cell::Int(level as u64),
                    Cell::Float(p),
                    Cell::Float(f),
                    Cell::Float((p - f).abs()),
                ]
            })
            .collect();
        Self {
            name,
            description,
            unit: unit.to_string(),
            level_convention: LEVEL_CONVENTION,
            columns: vec!["level", "analytic", "simulated", "abs_diff"],
            rows,
        }
    }

    /// Feasibility and cost map of an `(r, q)` grid.
    pub fn design_map(name: String, map: &[DesignPoint]) -> Self {
        let rows = map
            .iter()
            .map(|p| {
                vec![
                    Cell::Int(p.r as u64),
                    Cell::Int(p.q as u64),
                    Cell::Bool(p.feasible),
                    Cell::Float(p.c_total),
                    Cell::Float(p.shortfall),
                    Cell::Float(p.c_build),
                    Cell::Float(p.c_launch),
                    Cell::Float(p.c_holding),
                ]
            })
            .collect();
        Self {
            name,
            description: "cost and feasibility of every (r, q) on the search grid, r-major".into(),
            unit: "costs per year; shortfall is P(level < n_sat)".into(),
            level_convention: "r ascending, then q ascending",
            columns: vec![
                "r",
                "q",
                "feasible",
                "c_total",
                "shortfall",
                "c_build",
                "c_launch",
                "c_holding",
            ],
            rows,
        }
    }

    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::render))?;
        }
        w.into_inner()
            .map_err(|e| CliError::Other(format!("csv: {}", e.error())))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalysisSummary {
    pub provenance: Provenance,
    pub lambda_per_year: f64,
    pub degenerate: bool,
    /// Direct: plane cycle. Indirect: parking cycle.
    pub t_np_days: f64,
    pub t_wp_days: f64,
    pub t_cycle_days: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shortfall: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fixed_point: Option<FixedPointSummary>,
    pub tables: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FixedPointSummary {
    pub iterations: usize,
    pub residual: f64,
    pub relative_residual: f64,
    pub tolerance: f64,
    pub rule: spares_core::indirect::StoppingRule,
    /// Parking availability by level, `kappa[0] = 1`.
    pub kappa: Vec<f64>,
    /// Parking demand pmf in batches.
    pub eta: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationSummary {
    pub provenance: Provenance,
    pub lambda_per_year: f64,
    pub n_planes: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_park: Option<usize>,
    pub horizon_days: f64,
    pub warmup_days: f64,
    pub trials: usize,
    pub contact_phase: usize,
    pub histograms: Vec<HistogramSummary>,
    pub tables: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HistogramSummary {
    pub name: String,
    pub samples: u64,
    pub mean_level: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonSummary {
    pub analytic: String,
    pub simulated: String,
    pub tv: f64,
    pub max_abs: f64,
    pub table: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationCase {
    pub lambda_per_year: f64,
    pub analysis: AnalysisSummary,
    pub simulation: SimulationSummary,
    pub comparisons: Vec<ComparisonSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimizationSummary {
    pub lambda_per_year: f64,
    pub r_range: [usize; 2],
    pub q_range: [usize; 2],
    pub feasible_points: usize,
    pub best: DesignPoint,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ga: Option<GaCheck>,
    pub table: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GaCheck {
    pub params: GaParams,
    pub best: DesignPoint,
    pub matches_grid: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportBundle {
    pub command: &'static str,
    pub strategy: Strategy,
    pub provenance: Provenance,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub analysis: Option<AnalysisSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub simulation: Option<SimulationSummary>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub validation: Vec<ValidationCase>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub optimization: Option<OptimizationSummary>,
    pub tables: Vec<Table>,
}

impl ReportBundle {
    pub fn new(command: &'static str, strategy: Strategy, provenance: Provenance) -> Self {
        Self {
            command,
            strategy,
            provenance,
            analysis: None,
            simulation: None,
            validation: Vec::new(),
            optimization: None,
            tables: Vec::new(),
        }
    }

    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    pub fn to_json(&self) -> Result<String> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        Ok(text)
    }

    /// Writes the summary and/or tables into `dir`; returns the files written.
    pub fn write(&self, dir: &Path, format: OutputFormat) -> Result<Vec<String>> {
        fs::create_dir_all(dir)
            .map_err(|e| CliError::io(format!("creating {}", dir.display()), e))?;
        let mut written = Vec::new();
        if matches!(format, OutputFormat::Json | OutputFormat::Both) {
            let path = dir.join(SUMMARY_FILE);
            fs::write(&path, self.to_json()?)
                .map_err(|e| CliError::io(format!("writing {}", path.display()), e))?;
            written.push(SUMMARY_FILE.to_string());
        }
        if matches!(format, OutputFormat::Csv | OutputFormat::Both) {
            for table in &self.tables {
                let path = dir.join(table.file_name());
                fs::write(&path, table.to_csv()?)
                    .map_err(|e| CliError::io(format!("writing {}", path.display()), e))?;
                written.push(table.file_name());
            }
        }
        Ok(written)
    }
}
