//! Discrete-time Markov machinery shared by both resupply strategies.
//!
//! Vectors and matrices use the descending-level convention throughout:
//! index `i` of a distribution over levels `0..=N` holds `P(X = N - i)`, and
//! transition matrices act on column vectors (`π' = P π`), so every column of a
//! stochastic matrix sums to one. Use the level accessors rather than raw
//! indices wherever possible.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DAYS_PER_YEAR: f64 = 365.0;

/// Tolerance on `Σπ = 1` for a normalized distribution.
pub const NORMALIZATION_TOL: f64 = 1e-9;
/// Tolerance on column sums of a stochastic matrix.
pub const STOCHASTIC_TOL: f64 = 1e-12;

const STATIONARY_STEP_TOL: f64 = 1e-13;
const STATIONARY_MAX_ITER: usize = 100_000;
const STATIONARY_MIN_SQUARINGS: usize = 48;
const STATIONARY_MAX_SQUARINGS: usize = 64;
const STATIONARY_RESIDUAL_TOL: f64 = 1e-12;
// Round-off from the analytic inverses can leave entries a hair below zero.
const NEGATIVE_ROUNDOFF: f64 = 1e-10;

/// Probability vector over stock levels `0..=level_max`, stored high level first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateDistribution {
    probs: Vec<f64>,
}

impl StateDistribution {
    /// Wraps an already-normalized descending vector.
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::invalid("distribution", "empty probability vector"));
        }
        if let Some(p) = probs.iter().find(|p| !p.is_finite() || **p < 0.0) {
            return Err(Error::invalid(
                "distribution",
                format!("entry {p} is not a probability"),
            ));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::invalid(
                "distribution",
                format!("entries sum to {total}, not 1"),
            ));
        }
        Ok(Self { probs })
    }

    /// Normalizes a nonnegative (relative) descending vector by its total mass.
    pub fn from_unnormalized(raw: &[f64]) -> Result<Self> {
        let scale = raw.iter().map(|v| v.abs()).fold(0.0, f64::max);
        let mut probs = Vec::with_capacity(raw.len());
        for &v in raw {
            if !v.is_finite() || v < -NEGATIVE_ROUNDOFF * scale.max(1.0) {
                return Err(Error::invalid(
                    "distribution",
                    format!("entry {v} is negative or non-finite"),
                ));
            }
            probs.push(v.max(0.0));
        }
        let total: f64 = probs.iter().sum();
        if total <= 0.0 {
            return Err(Error::invalid("distribution", "zero total mass"));
        }
        probs.iter_mut().for_each(|p| *p /= total);
        Ok(Self { probs })
    }

    pub fn from_vector(raw: &DVector<f64>) -> Result<Self> {
        Self::from_unnormalized(raw.as_slice())
    }

    /// Builds a distribution from probabilities listed for levels `0, 1, ..`.
    pub fn from_ascending(ascending: &[f64]) -> Result<Self> {
        Self::new(ascending.iter().rev().copied().collect())
    }

    pub fn point_mass(level_max: usize, level: usize) -> Self {
        assert!(
            level <= level_max,
            "level {level} above maximum {level_max}"
        );
        let mut probs = vec![0.0; level_max + 1];
        probs[level_max - level] = 1.0;
        Self { probs }
    }

    pub fn uniform(level_max: usize) -> Self {
        let n = level_max + 1;
        Self {
            probs: vec![1.0 / n as f64; n],
        }
    }

    pub fn level_max(&self) -> usize {
        self.probs.len() - 1
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// `P(X = level)`; zero above `level_max`.
    pub fn at_level(&self, level: usize) -> f64 {
        if level > self.level_max() {
            0.0
        } else {
            self.probs[self.level_max() - level]
        }
    }

    /// Descending storage (`[P(X=N), .., P(X=0)]`).
    pub fn as_slice(&self) -> &[f64] {
        &self.probs
    }

    /// Probabilities for levels `0, 1, .., N`.
    pub fn ascending(&self) -> Vec<f64> {
        self.probs.iter().rev().copied().collect()
    }

    pub fn to_vector(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.probs)
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }

    /// `P(X < y)`.
    pub fn prob_below(&self, y: usize) -> f64 {
        (0..y.min(self.len())).map(|l| self.at_level(l)).sum()
    }

    pub fn mean_level(&self) -> f64 {
        (0..=self.level_max())
            .map(|l| l as f64 * self.at_level(l))
            .sum()
    }

    /// Highest level carrying positive probability.
    pub fn max_support(&self) -> usize {
        (0..=self.level_max())
            .rev()
            .find(|&l| self.at_level(l) > 0.0)
            .unwrap_or(0)
    }

    pub fn total_variation(&self, other: &StateDistribution) -> Result<f64> {
        self.check_same_len(other)?;
        Ok(0.5
            * self
                .probs
                .iter()
                .zip(&other.probs)
                .map(|(a, b)| (a - b).abs())
                .sum::<f64>())
    }

    pub fn max_abs_diff(&self, other: &StateDistribution) -> Result<f64> {
        self.check_same_len(other)?;
        Ok(self
            .probs
            .iter()
            .zip(&other.probs)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }

    fn check_same_len(&self, other: &StateDistribution) -> Result<()> {
        if self.len() != other.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                actual: other.len(),
            });
        }
        Ok(())
    }
}

/// Per-step Poisson failure model of one orbital plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FailureModel {
    /// Failures per operating satellite per Markov step.
    pub lambda_per_step: f64,
    /// Nominal number of operating satellites.
    pub n_sat: usize,
    /// Maximum stock level including spares.
    pub n_bar: usize,
    /// Markov step in days.
    pub t_mc: f64,
}

impl FailureModel {
    pub fn new(lambda_per_step: f64, n_sat: usize, n_bar: usize, t_mc: f64) -> Result<Self> {
        let model = Self {
            lambda_per_step,
            n_sat,
            n_bar,
            t_mc,
        };
        model.validate()?;
        Ok(model)
    }

    /// Converts a per-satellite annual failure rate to the per-step rate.
    pub fn from_annual_rate(
        lambda_per_year: f64,
        n_sat: usize,
        n_bar: usize,
        t_mc: f64,
    ) -> Result<Self> {
        Self::new(lambda_per_year * t_mc / DAYS_PER_YEAR, n_sat, n_bar, t_mc)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.lambda_per_step.is_finite() || self.lambda_per_step < 0.0 {
            return Err(Error::invalid(
                "lambda",
                format!(
                    "failure rate {} must be finite and >= 0",
                    self.lambda_per_step
                ),
            ));
        }
        if self.n_sat == 0 {
            return Err(Error::invalid("n_sat", "must be at least 1"));
        }
        if self.n_bar < self.n_sat {
            return Err(Error::invalid(
                "n_bar",
                format!("maximum level {} below nominal {}", self.n_bar, self.n_sat),
            ));
        }
        if !(self.t_mc.is_finite() && self.t_mc > 0.0) {
            return Err(Error::invalid("t_mc", "time step must be positive"));
        }
        Ok(())
    }

    /// Same failure process over a different maximum stock level.
    pub fn with_n_bar(&self, n_bar: usize) -> Result<Self> {
        Self::new(self.lambda_per_step, self.n_sat, n_bar, self.t_mc)
    }

    /// Mean number of failures in one step starting from `level`.
    pub fn step_mean(&self, level: usize) -> f64 {
        level.min(self.n_sat) as f64 * self.lambda_per_step
    }
}

/// Shifted-exponential launch lead time `T_LV + Exp(μ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LeadTimeModel {
    /// 1/day
    pub mu_lv: f64,
    /// days
    pub t_lv: f64,
    /// days
    pub t_mc: f64,
}

impl LeadTimeModel {
    pub fn new(mu_lv: f64, t_lv: f64, t_mc: f64) -> Result<Self> {
        let model = Self { mu_lv, t_lv, t_mc };
        model.validate()?;
        Ok(model)
    }

    pub fn from_mean_tail(mean_tail_days: f64, t_lv: f64, t_mc: f64) -> Result<Self> {
        if !(mean_tail_days.is_finite() && mean_tail_days > 0.0) {
            return Err(Error::invalid("mean_lead_time", "must be positive"));
        }
        Self::new(1.0 / mean_tail_days, t_lv, t_mc)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mu_lv.is_finite() && self.mu_lv > 0.0) {
            return Err(Error::invalid("mu_lv", "rate must be finite and positive"));
        }
        if !(self.t_mc.is_finite() && self.t_mc > 0.0) {
            return Err(Error::invalid("t_mc", "time step must be positive"));
        }
        if !(self.t_lv.is_finite() && self.t_lv >= 0.0) {
            return Err(Error::invalid("t_lv", "constant lead time must be >= 0"));
        }
        steps_of(self.t_lv, self.t_mc, "t_lv")?;
        Ok(())
    }

    /// `m = T_LV / T_mc`.
    pub fn offset_steps(&self) -> usize {
        steps_of(self.t_lv, self.t_mc, "t_lv").expect("validated lead time")
    }

    /// Per-step survival factor `e^{-μ T_mc}` of the exponential tail.
    pub fn step_decay(&self) -> f64 {
        (-self.mu_lv * self.t_mc).exp()
    }
}

/// Converts a duration into a whole number of Markov steps.
pub fn steps_of(duration: f64, t_mc: f64, name: &'static str) -> Result<usize> {
    let ratio = duration / t_mc;
    let rounded = ratio.round();
    if !ratio.is_finite() || rounded < 0.0 || (ratio - rounded).abs() > 1e-9 * ratio.max(1.0) {
        return Err(Error::invalid(
            name,
            format!("{duration} days is not an integer multiple of the {t_mc}-day step"),
        ));
    }
    Ok(rounded as usize)
}

/// Dense column-stochastic (or relative) transition matrix over stock levels.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix(DMatrix<f64>);

impl TransitionMatrix {
    pub fn from_matrix(m: DMatrix<f64>) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::DimensionMismatch {
                expected: m.nrows(),
                actual: m.ncols(),
            });
        }
        Ok(Self(m))
    }

    pub fn identity(level_max: usize) -> Self {
        Self(DMatrix::identity(level_max + 1, level_max + 1))
    }

    pub fn zeros(level_max: usize) -> Self {
        Self(DMatrix::zeros(level_max + 1, level_max + 1))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn level_max(&self) -> usize {
        self.dim() - 1
    }

    /// `P(next = to | current = from)`.
    pub fn get(&self, to_level: usize, from_level: usize) -> f64 {
        let n = self.level_max();
        self.0[(n - to_level, n - from_level)]
    }

    pub fn set(&mut self, to_level: usize, from_level: usize, value: f64) {
        let n = self.level_max();
        self.0[(n - to_level, n - from_level)] = value;
    }

    pub fn add(&mut self, to_level: usize, from_level: usize, value: f64) {
        let n = self.level_max();
        self.0[(n - to_level, n - from_level)] += value;
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    pub fn column_sums(&self) -> Vec<f64> {
        self.0.column_iter().map(|c| c.sum()).collect()
    }

    pub fn is_column_stochastic(&self, tol: f64) -> bool {
        self.0.iter().all(|&v| (-tol..=1.0 + tol).contains(&v))
            && self.column_sums().iter().all(|s| (s - 1.0).abs() <= tol)
    }

    pub fn apply(&self, dist: &StateDistribution) -> Result<DVector<f64>> {
        if dist.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: dist.len(),
            });
        }
        Ok(&self.0 * dist.to_vector())
    }

    pub fn compose(&self, then_before: &TransitionMatrix) -> TransitionMatrix {
        TransitionMatrix(&self.0 * &then_before.0)
    }
}

/// Poisson pmf with the given mean.
pub(crate) fn poisson_pmf(mean: f64, k: usize) -> f64 {
    if mean == 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    let ln_fact: f64 = (1..=k).map(|j| (j as f64).ln()).sum();
    (k as f64 * mean.ln() - mean - ln_fact).exp()
}

/// Probability of `k` failures within one step when `n` satellites are on orbit.
///
/// Only `min(n, N_sat)` satellites operate; spares do not fail.
pub fn failure_pmf(model: &FailureModel, k: usize, n: usize) -> Result<f64> {
    if k > model.n_sat {
        return Err(Error::invalid(
            "k",
            format!(
                "{k} failures exceed the {} operating satellites",
                model.n_sat
            ),
        ));
    }
    Ok(poisson_pmf(model.step_mean(n), k))
}

/// One-step failure transition `P_f` over levels `0..=n_bar`.
///
/// From level `n` the stock drops by `k` with probability `ν_{k,n}`; drops
/// are capped at `N_sat` per step and at the empty level, and the remaining
/// tail mass lands on the floor level `max(n - N_sat, 0)`.
pub fn build_failure_matrix(model: &FailureModel) -> Result<TransitionMatrix> {
    model.validate()?;
    let mut p = TransitionMatrix::zeros(model.n_bar);
    for n in 0..=model.n_bar {
        let floor = n.saturating_sub(model.n_sat);
        let mut placed = 0.0;
        for k in 0..(n - floor) {
            let nu = failure_pmf(model, k, n)?;
            p.set(n - k, n, nu);
            placed += nu;
        }
        p.add(floor, n, (1.0 - placed).max(0.0));
    }
    Ok(p)
}

/// Replenishment `P_q`: levels `≤ r` jump up by `q`, higher levels stay put.
pub fn build_replenishment_matrix(r: usize, q: usize) -> Result<TransitionMatrix> {
    if q == 0 {
        return Err(Error::invalid("q", "order quantity must be at least 1"));
    }
    let n_bar = r + q;
    let mut p = TransitionMatrix::zeros(n_bar);
    for x in 0..=n_bar {
        let to = if x <= r { x + q } else { x };
        p.set(to, x, 1.0);
    }
    Ok(p)
}

/// Probability that delivery lands in step `k` after the constant offset `T_LV`.
pub fn lead_time_pmf(model: &LeadTimeModel, k: usize) -> f64 {
    let decay = model.step_decay();
    decay.powi(k as i32) * (1.0 - decay)
}

/// Diagonal selectors for levels above `r` (`C⁺`) and at or below `r` (`C⁻`).
pub fn state_division(r: usize, n_bar: usize) -> Result<(TransitionMatrix, TransitionMatrix)> {
    if r > n_bar {
        return Err(Error::invalid(
            "r",
            format!("reorder level {r} above maximum level {n_bar}"),
        ));
    }
    let mut plus = TransitionMatrix::zeros(n_bar);
    let mut minus = TransitionMatrix::zeros(n_bar);
    for level in 0..=n_bar {
        if level > r {
            plus.set(level, level, 1.0);
        } else {
            minus.set(level, level, 1.0);
        }
    }
    Ok((plus, minus))
}

/// Stationary distribution of a column-stochastic matrix, starting from uniform.
pub fn stationary_distribution(p: &TransitionMatrix) -> Result<StateDistribution> {
    stationary_distribution_from(p, &StateDistribution::uniform(p.level_max()))
}

/// Power iteration on the lazy chain `L = (I + P)/2`, which has the same
/// fixed points as `P` but no periodic oscillation.
///
/// The iterate `L^n π₀` is advanced by repeated squaring, so `n` doubles each
/// round; at least `2^48` steps are taken, which covers chains whose slowest
/// transitions are far below the step tolerance. Plain lazy steps then
/// polish the result until `‖Pπ/ΣPπ − π‖₁` meets the residual tolerance.
pub fn stationary_distribution_from(
    p: &TransitionMatrix,
    initial: &StateDistribution,
) -> Result<StateDistribution> {
    if initial.len() != p.dim() {
        return Err(Error::DimensionMismatch {
            expected: p.dim(),
            actual: initial.len(),
        });
    }
    let m = p.matrix();
    let n = p.dim();
    let start = initial.to_vector();
    let mut lazy = (m + DMatrix::identity(n, n)) * 0.5;
    let mut pi = normalized(&lazy * &start)?;
    let mut squarings = 0;
    loop {
        lazy = &lazy * &lazy;
        let next = normalized(&lazy * &start)?;
        let step = (&next - &pi).abs().sum();
        pi = next;
        squarings += 1;
        if squarings >= STATIONARY_MIN_SQUARINGS && step <= STATIONARY_STEP_TOL {
            break;
        }
        if squarings >= STATIONARY_MAX_SQUARINGS {
            return Err(Error::StationaryNotConverged {
                iterations: squarings,
                residual: step,
            });
        }
    }

    // Composites built from inverses are stochastic only to round-off, so
    // the residual is taken against the renormalized image.
    let residual_of =
        |pi: &DVector<f64>| -> Result<f64> { Ok((normalized(m * pi)? - pi).abs().sum()) };
    let mut residual = residual_of(&pi)?;
    let mut iterations = 0;
    while residual > STATIONARY_RESIDUAL_TOL && iterations < STATIONARY_MAX_ITER {
        pi = normalized((m * &pi + &pi) * 0.5)?;
        residual = residual_of(&pi)?;
        iterations += 1;
    }
    if residual > STATIONARY_RESIDUAL_TOL {
        return Err(Error::StationaryNotConverged {
            iterations,
            residual,
        });
    }
    StateDistribution::from_vector(&pi)
}

fn normalized(mut v: DVector<f64>) -> Result<DVector<f64>> {
    let total = v.sum();
    if !(total.is_finite() && total > 0.0) {
        return Err(Error::invalid(
            "transition",
            "iteration lost all probability mass",
        ));
    }
    v /= total;
    Ok(v)
}

/// `(I - A)⁻¹` via LU; `name` labels the matrix in the singularity error.
pub fn inverse_i_minus(a: &DMatrix<f64>, name: &'static str) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    let lhs = DMatrix::identity(n, n) - a;
    let inv = lhs.lu().try_inverse().ok_or(Error::Singular(name))?;
    if inv.iter().any(|v| !v.is_finite()) {
        return Err(Error::Singular(name));
    }
    Ok(inv)
}

pub fn matrix_power(a: &DMatrix<f64>, mut exp: usize) -> DMatrix<f64> {
    let n = a.nrows();
    let mut result = DMatrix::identity(n, n);
    let mut base = a.clone();
    while exp > 0 {
        if exp & 1 == 1 {
            result = &result * &base;
        }
        exp >>= 1;
        if exp > 0 {
            base = &base * &base;
        }
    }
    result
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn model(lambda: f64, n_sat: usize, n_bar: usize) -> FailureModel {
        FailureModel::new(lambda, n_sat, n_bar, 1.0).unwrap()
    }

    #[test]
    fn zero_rate_has_no_failures() {
        let m = model(0.0, 40, 46);
        assert_eq!(failure_pmf(&m, 0, 33).unwrap(), 1.0);
        assert_eq!(failure_pmf(&m, 2, 33).unwrap(), 0.0);
        let p = build_failure_matrix(&m).unwrap();
        assert_eq!(p.matrix(), TransitionMatrix::identity(46).matrix());
    }

    #[test]
    fn operating_count_caps_failure_rate() {
        let m = model(0.1 / 365.0, 40, 60);
        assert_eq!(
            failure_pmf(&m, 1, 60).unwrap(),
            failure_pmf(&m, 1, 40).unwrap()
        );
        assert_relative_eq!(
            failure_pmf(&m, 0, 40).unwrap(),
            0.989_100_8,
            max_relative = 1e-6
        );
        assert!(failure_pmf(&m, 41, 60).is_err());
    }

    #[test]
    fn small_failure_matrix_by_hand() {
        let p = build_failure_matrix(&model(0.1, 2, 2)).unwrap();
        let e = (-0.2f64).exp();
        assert_relative_eq!(p.get(2, 2), e, max_relative = 1e-15);
        assert_relative_eq!(p.get(1, 2), 0.2 * e, max_relative = 1e-15);
        assert_relative_eq!(p.get(0, 2), 1.0 - 1.2 * e, max_relative = 1e-14);
        assert_eq!(p.get(0, 0), 1.0);
        assert!(p.is_column_stochastic(1e-12));
    }

    #[test]
    fn failure_tail_lands_on_floor_level() {
        let m = model(0.5, 3, 8);
        let p = build_failure_matrix(&m).unwrap();
        // Level 8 can drop by at most 3; everything beyond sits at level 5.
        for to in 0..5 {
            assert_eq!(p.get(to, 8), 0.0);
        }
        let tail: f64 = 1.0 - (0..3).map(|k| poisson_pmf(1.5, k)).sum::<f64>();
        assert_relative_eq!(p.get(5, 8), tail, max_relative = 1e-12);
        assert!(p.is_column_stochastic(1e-12));
    }

    #[test]
    fn replenishment_matrix_by_hand() {
        let p = build_replenishment_matrix(1, 2).unwrap();
        let expected = DMatrix::from_row_slice(
            4,
            4,
            &[
                1.0, 0.0, 1.0, 0.0, //
                0.0, 1.0, 0.0, 1.0, //
                0.0, 0.0, 0.0, 0.0, //
                0.0, 0.0, 0.0, 0.0,
            ],
        );
        assert_eq!(p.matrix(), &expected);
    }

    #[test]
    fn replenishment_from_empty_restocks_fully() {
        let p = build_replenishment_matrix(0, 7).unwrap();
        assert_eq!(p.get(7, 0), 1.0);
        assert!(p.is_column_stochastic(0.0));
    }

    #[test]
    fn replenishment_matches_both_block_layouts() {
        // q <= r + 1 and q > r + 1 variants of the block form.
        for &(r, q) in &[(5usize, 3usize), (2, 6), (3, 4)] {
            let p = build_replenishment_matrix(r, q).unwrap();
            let n = r + q + 1;
            let m = p.matrix();
            let mut expected = DMatrix::<f64>::zeros(n, n);
            // Top-left I_q block: levels above r keep their position.
            for i in 0..q {
                expected[(i, i)] = 1.0;
            }
            // Columns for levels r..0 map onto rows 0..=r (shifted by q levels).
            for j in 0..=r {
                expected[(j, q + j)] = 1.0;
            }
            assert_eq!(m, &expected, "r={r} q={q}");
        }
    }

    #[test]
    fn lead_time_first_step() {
        let lt = LeadTimeModel::new(1.0 / 60.0, 30.0, 1.0).unwrap();
        // ∫_0^1 μ e^{-μ t} dt by Simpson's rule.
        let mu = 1.0 / 60.0;
        let n = 1000;
        let h = 1.0 / n as f64;
        let f = |t: f64| mu * (-mu * t).exp();
        let mut s = f(0.0) + f(1.0);
        for i in 1..n {
            s += f(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        let quad = s * h / 3.0;
        assert_relative_eq!(lead_time_pmf(&lt, 0), quad, max_relative = 1e-12);
        assert_relative_eq!(lead_time_pmf(&lt, 0), 0.016_529, max_relative = 1e-4);
        assert_eq!(lt.offset_steps(), 30);
    }

    #[test]
    fn lead_time_partial_sums_increase_to_one() {
        let lt = LeadTimeModel::new(0.05, 10.0, 1.0).unwrap();
        let mut acc = 0.0;
        for k in 0..2000 {
            let next = acc + lead_time_pmf(&lt, k);
            assert!(next >= acc);
            acc = next;
        }
        assert!((acc - 1.0).abs() < 1e-12);
        let fast = LeadTimeModel::new(1e6, 0.0, 1.0).unwrap();
        assert_relative_eq!(lead_time_pmf(&fast, 0), 1.0);
    }

    #[test]
    fn lead_offset_must_be_whole_steps() {
        assert!(LeadTimeModel::new(0.1, 30.5, 1.0).is_err());
        assert!(LeadTimeModel::new(0.1, 30.0, 2.0).is_ok());
        assert!(LeadTimeModel::new(0.0, 30.0, 1.0).is_err());
    }

    #[test]
    fn state_division_boundaries() {
        let (plus, minus) = state_division(4, 4).unwrap();
        assert_eq!(plus.matrix(), TransitionMatrix::zeros(4).matrix());
        assert_eq!(minus.matrix(), TransitionMatrix::identity(4).matrix());

        let (plus, minus) = state_division(0, 2).unwrap();
        assert_eq!(minus.get(0, 0), 1.0);
        assert_eq!(minus.matrix().sum(), 1.0);
        assert_eq!(
            plus.matrix() + minus.matrix(),
            DMatrix::<f64>::identity(3, 3)
        );
        assert!(state_division(5, 4).is_err());
    }

    #[test]
    fn two_state_stationary() {
        let p = TransitionMatrix::from_matrix(DMatrix::from_row_slice(2, 2, &[0.9, 0.5, 0.1, 0.5]))
            .unwrap();
        let pi = stationary_distribution(&p).unwrap();
        assert_relative_eq!(pi.as_slice()[0], 5.0 / 6.0, max_relative = 1e-12);
        assert_relative_eq!(pi.as_slice()[1], 1.0 / 6.0, max_relative = 1e-12);
    }

    #[test]
    fn identity_keeps_initial_guess() {
        let p = TransitionMatrix::identity(3);
        let init = StateDistribution::from_ascending(&[0.1, 0.2, 0.3, 0.4]).unwrap();
        let pi = stationary_distribution_from(&p, &init).unwrap();
        assert!(pi.total_variation(&init).unwrap() < 1e-15);
    }

    #[test]
    fn periodic_chain_still_converges() {
        let p = TransitionMatrix::from_matrix(DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]))
            .unwrap();
        let pi = stationary_distribution_from(&p, &StateDistribution::point_mass(1, 1)).unwrap();
        assert_relative_eq!(pi.as_slice()[0], 0.5, max_relative = 1e-12);
    }

    #[test]
    fn distribution_accessors_follow_levels() {
        let d = StateDistribution::from_ascending(&[0.1, 0.2, 0.7]).unwrap();
        assert_eq!(d.at_level(0), 0.1);
        assert_eq!(d.at_level(2), 0.7);
        assert_eq!(d.as_slice(), &[0.7, 0.2, 0.1]);
        assert_relative_eq!(d.prob_below(2), 0.3);
        assert_eq!(d.prob_below(0), 0.0);
        assert_relative_eq!(d.prob_below(3), 1.0);
        assert!(StateDistribution::new(vec![0.5, 0.4]).is_err());
        assert!(StateDistribution::new(vec![1.5, -0.5]).is_err());
    }

    #[test]
    fn total_variation_extremes() {
        let a = StateDistribution::point_mass(3, 0);
        let b = StateDistribution::point_mass(3, 3);
        assert_eq!(a.total_variation(&b).unwrap(), 1.0);
        assert_eq!(a.total_variation(&a).unwrap(), 0.0);
        assert!(a
            .total_variation(&StateDistribution::point_mass(2, 0))
            .is_err());
    }

    #[test]
    fn matrix_power_matches_repeated_product() {
        let p = build_failure_matrix(&model(0.05, 4, 6)).unwrap();
        let m = p.matrix();
        let mut naive = DMatrix::identity(7, 7);
        for _ in 0..13 {
            naive = &naive * m;
        }
        let fast = matrix_power(m, 13);
        assert!((naive - fast).abs().max() < 1e-14);
    }
}
