use serde::Serialize;

use crate::chain::StateDistribution;
use crate::error::{Error, Result};

/// Event class at which a histogram is sampled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SamplingMode {
    PerStep,
    AtReorder,
    AtReplenishment,
}

/// Stock-level histogram gathered by the simulator.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EmpiricalDistribution {
    /// `counts[level]`, ascending.
    pub counts: Vec<u64>,
    pub samples: u64,
    pub sampling_mode: SamplingMode,
}

impl EmpiricalDistribution {
    pub fn new(level_max: usize, sampling_mode: SamplingMode) -> Self {
        Self {
            counts: vec![0; level_max + 1],
            samples: 0,
            sampling_mode,
        }
    }

    pub fn level_max(&self) -> usize {
        self.counts.len() - 1
    }

    pub fn record(&mut self, level: usize) {
        self.counts[level] += 1;
        self.samples += 1;
    }

    /// Adds another histogram of the same shape.
    pub fn merge(&mut self, other: &EmpiricalDistribution) -> Result<()> {
        if other.counts.len() != self.counts.len() {
            return Err(Error::DimensionMismatch {
                expected: self.counts.len(),
                actual: other.counts.len(),
            });
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self.samples += other.samples;
        Ok(())
    }

    pub fn frequency(&self, level: usize) -> f64 {
        if self.samples == 0 {
            return 0.0;
        }
        self.counts.get(level).copied().unwrap_or(0) as f64 / self.samples as f64
    }

    pub fn to_distribution(&self) -> Result<StateDistribution> {
        if self.samples == 0 {
            return Err(Error::invalid("histogram", "no samples recorded"));
        }
        let freq: Vec<f64> = (0..self.counts.len()).map(|l| self.frequency(l)).collect();
        StateDistribution::from_ascending(&freq)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Comparison {
    /// `½ Σ |a - b̂|`
    pub tv: f64,
    pub max_abs: f64,
}

/// Distance between an analytic distribution and a histogram.
pub fn compare_distributions(
    analytic: &StateDistribution,
    empirical: &EmpiricalDistribution,
) -> Result<Comparison> {
    if analytic.level_max() != empirical.level_max() {
        return Err(Error::DimensionMismatch {
            expected: analytic.level_max() + 1,
            actual: empirical.level_max() + 1,
        });
    }
    if empirical.samples == 0 {
        return Err(Error::invalid("histogram", "no samples recorded"));
    }
    let mut sum = 0.0;
    let mut max_abs: f64 = 0.0;
    for level in 0..=analytic.level_max() {
        let d = (analytic.at_level(level) - empirical.frequency(level)).abs();
        sum += d;
        max_abs = max_abs.max(d);
    }
    Ok(Comparison {
        tv: 0.5 * sum,
        max_abs,
    })
}
