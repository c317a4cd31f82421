//! Closed-form penalized estimators.
//!
//! All three estimators have explicit forms:
//!
//! - count probabilities: `π̂_k(s) = [s!(p−s)!/p!] · #{i in group k: count = s} / n_k`,
//!   satisfying `Σ_s C(p,s) π̂_k(s) = 1`;
//! - log-scale means: per-variable averages over present entries, per group or
//!   pooled; an entry is undefined when the variable is never present in the
//!   group, and no consumer reads it there;
//! - covariance: the entrywise ratio of co-present residual products (plus the
//!   diagonal penalty) to co-presence counts, shared across groups. The
//!   penalty only shifts the diagonal: `Σ̂^λ = Σ̂⁰ + diag(λ)` exactly.
//!
//! Accumulation order is fixed (group-major, then row order within group), so
//! repeated runs on the same machine are bitwise identical.
//!
//! These closed forms are exact maximizers of the penalized log-likelihood
//! when all observations share one presence pattern (in particular on fully
//! observed data) and for a single variable; under heterogeneous patterns
//! they are entrywise moment estimators rather than exact stationary points.

use crate::data_model::{Grouping, LogData};
use crate::mat::SymMat;
use crate::{Error, Result};

/// Nonnegative per-variable ridge penalties (the diagonal of Λ).
#[derive(Debug, Clone, PartialEq)]
pub struct PenaltyVector {
    values: Vec<f64>,
    scalar_mode: bool,
}

impl PenaltyVector {
    /// Equal penalty `value` for all `p` variables.
    pub fn scalar(value: f64, p: usize) -> Result<Self> {
        if !value.is_finite() || value < 0.0 {
            return Err(Error::InvalidPenalty(format!(
                "penalty must be finite and nonnegative, got {value}"
            )));
        }
        Ok(PenaltyVector {
            values: vec![value; p],
            scalar_mode: true,
        })
    }

    pub fn zero(p: usize) -> Self {
        PenaltyVector {
            values: vec![0.0; p],
            scalar_mode: true,
        }
    }

    pub fn from_vec(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidPenalty(
                "all penalty entries must be finite and nonnegative".into(),
            ));
        }
        let scalar_mode = values.windows(2).all(|w| w[0] == w[1]);
        Ok(PenaltyVector {
            values,
            scalar_mode,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_scalar(&self) -> bool {
        self.scalar_mode
    }

    #[inline]
    pub fn value(&self, j: usize) -> f64 {
        self.values[j]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    /// The common value in scalar mode.
    pub fn scalar_value(&self) -> Option<f64> {
        if self.scalar_mode {
            self.values.first().copied().or(Some(0.0))
        } else {
            None
        }
    }
}

/// Parameter set of the two-part model, under the alternative (per-group
/// rows) or the null (single pooled row).
#[derive(Debug, Clone)]
pub struct ModelParams {
    /// Count-indexed probabilities, one row per group (or one pooled row);
    /// row k has p+1 entries for counts 0..=p.
    pub pi: Vec<Vec<f64>>,
    /// Log-scale means; `None` marks entries never observed in that group.
    pub mu: Vec<Vec<Option<f64>>>,
    /// Shared covariance of the log values.
    pub sigma: SymMat,
    pub null_model: bool,
}

impl ModelParams {
    pub fn p(&self) -> usize {
        self.sigma.dim()
    }

    /// Mean row for an observation in group `g` (row 0 when pooled).
    pub fn mu_row(&self, g: usize) -> &[Option<f64>] {
        if self.null_model {
            &self.mu[0]
        } else {
            &self.mu[g]
        }
    }

    /// Count-probability row for group `g` (row 0 when pooled).
    pub fn pi_row(&self, g: usize) -> &[f64] {
        if self.null_model {
            &self.pi[0]
        } else {
            &self.pi[g]
        }
    }
}

/// Binomial coefficient as f64 via the multiplicative recurrence.
pub(crate) fn binomial(p: usize, s: usize) -> f64 {
    let s = s.min(p - s);
    let mut c = 1.0f64;
    for t in 0..s {
        c = c * (p - t) as f64 / (t + 1) as f64;
    }
    c
}

/// Count-indexed presence probabilities, per group or pooled.
pub fn estimate_pi(ld: &LogData, grouping: &Grouping, pooled: bool) -> Vec<Vec<f64>> {
    let p = ld.p();
    let n_rows = if pooled { 1 } else { grouping.n_groups() };
    let mut counts = vec![vec![0usize; p + 1]; n_rows];
    let mut totals = vec![0usize; n_rows];
    for g in 0..grouping.n_groups() {
        let row = if pooled { 0 } else { g };
        for &i in grouping.group_rows(g) {
            counts[row][ld.pattern(i).count()] += 1;
            totals[row] += 1;
        }
    }
    counts
        .iter()
        .zip(totals.iter())
        .map(|(row, &total)| {
            (0..=p)
                .map(|s| row[s] as f64 / (total as f64 * binomial(p, s)))
                .collect()
        })
        .collect()
}

/// Per-variable means of the log values over present entries, per group or
/// pooled. Entries with no present observation are `None`.
pub fn estimate_mu(ld: &LogData, grouping: &Grouping, pooled: bool) -> Vec<Vec<Option<f64>>> {
    let p = ld.p();
    let n_rows = if pooled { 1 } else { grouping.n_groups() };
    let mut sums = vec![vec![0.0f64; p]; n_rows];
    let mut counts = vec![vec![0usize; p]; n_rows];
    for g in 0..grouping.n_groups() {
        let row = if pooled { 0 } else { g };
        for &i in grouping.group_rows(g) {
            let pattern = ld.pattern(i);
            let values = ld.log_values(i);
            for (pos, &j) in pattern.support().iter().enumerate() {
                sums[row][j as usize] += values[pos];
                counts[row][j as usize] += 1;
            }
        }
    }
    sums.iter()
        .zip(counts.iter())
        .map(|(srow, crow)| {
            srow.iter()
                .zip(crow.iter())
                .map(|(&s, &c)| if c > 0 { Some(s / c as f64) } else { None })
                .collect()
        })
        .collect()
}

/// Penalty-independent part of the covariance estimator: the entrywise ratio
/// of accumulated co-present residual products to co-presence counts.
///
/// Adding a penalty only shifts the diagonal, so one base serves a whole grid
/// of penalty values.
#[derive(Debug, Clone)]
pub struct SigmaBase {
    ratio: SymMat,
}

impl SigmaBase {
    /// Accumulates residual products about the given means (group rows, or a
    /// single pooled row). Fails when a variable pair is never co-present,
    /// which filtered data rules out.
    pub fn new(ld: &LogData, grouping: &Grouping, mu: &[Vec<Option<f64>>]) -> Result<Self> {
        let p = ld.p();
        let pooled = mu.len() == 1;
        if !pooled && mu.len() != grouping.n_groups() {
            return Err(Error::DimensionMismatch(format!(
                "{} mean rows for {} groups",
                mu.len(),
                grouping.n_groups()
            )));
        }
        let mut numerator = SymMat::zeros(p);
        let mut copresence = SymMat::zeros(p);
        let mut residual = Vec::new();
        for g in 0..grouping.n_groups() {
            let mu_row = if pooled { &mu[0] } else { &mu[g] };
            for &i in grouping.group_rows(g) {
                let pattern = ld.pattern(i);
                let support = pattern.support();
                let values = ld.log_values(i);
                residual.clear();
                for (pos, &j) in support.iter().enumerate() {
                    let mean = mu_row[j as usize].ok_or_else(|| {
                        Error::Internal(format!(
                            "mean undefined for variable {j} despite presence in observation {i}"
                        ))
                    })?;
                    residual.push(values[pos] - mean);
                }
                for (pa, &ja) in support.iter().enumerate() {
                    for (pb, &jb) in support.iter().enumerate().skip(pa) {
                        numerator.add_assign_at(
                            ja as usize,
                            jb as usize,
                            residual[pa] * residual[pb],
                        );
                        copresence.add_assign_at(ja as usize, jb as usize, 1.0);
                    }
                }
            }
        }
        let mut ratio = SymMat::zeros(p);
        for a in 0..p {
            for b in a..p {
                let c = copresence.get(a, b);
                if c == 0.0 {
                    return Err(Error::Internal(format!(
                        "variables {a} and {b} are never co-present; filtering contract violated"
                    )));
                }
                ratio.set(a, b, numerator.get(a, b) / c);
            }
        }
        Ok(SigmaBase { ratio })
    }

    /// Covariance estimate for a penalty: base plus `diag(λ)`.
    pub fn with_penalty(&self, penalty: &PenaltyVector) -> SymMat {
        self.ratio.with_diagonal_shift(penalty.as_slice())
    }

    /// The unpenalized estimate.
    pub fn unpenalized(&self) -> &SymMat {
        &self.ratio
    }
}

/// Penalized covariance estimator.
pub fn estimate_sigma(
    ld: &LogData,
    grouping: &Grouping,
    mu: &[Vec<Option<f64>>],
    penalty: &PenaltyVector,
) -> Result<SymMat> {
    if penalty.len() != ld.p() {
        return Err(Error::DimensionMismatch(format!(
            "penalty has {} entries for {} variables",
            penalty.len(),
            ld.p()
        )));
    }
    Ok(SigmaBase::new(ld, grouping, mu)?.with_penalty(penalty))
}

/// Fits both models: the alternative (per-group π and μ) with penalty
/// `lambda` and the null (pooled π and μ) with penalty `lambda0`.
pub fn fit(
    ld: &LogData,
    grouping: &Grouping,
    lambda: &PenaltyVector,
    lambda0: &PenaltyVector,
) -> Result<(ModelParams, ModelParams)> {
    let alt = fit_model(ld, grouping, lambda, false)?;
    let null = fit_model(ld, grouping, lambda0, true)?;
    Ok((alt, null))
}

/// Fits one model (alternative or null).
pub fn fit_model(
    ld: &LogData,
    grouping: &Grouping,
    penalty: &PenaltyVector,
    null_model: bool,
) -> Result<ModelParams> {
    let pi = estimate_pi(ld, grouping, null_model);
    let mu = estimate_mu(ld, grouping, null_model);
    let sigma = estimate_sigma(ld, grouping, &mu, penalty)?;
    Ok(ModelParams {
        pi,
        mu,
        sigma,
        null_model,
    })
}
