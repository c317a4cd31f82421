//! Log-likelihood, penalty, and information criterion.
//!
//! Each observation contributes the log-probability of its presence pattern
//! (the probability of one specific pattern with s present variables) plus,
//! when s > 0, the Gaussian log-density of its log values on the support.
//! Observations sharing a presence pattern share the covariance submatrix,
//! so its Cholesky factor is computed once per distinct pattern and reused:
//! quadratic forms via triangular solves, log-determinants from the factor
//! diagonal, and inverse traces from the columns of L⁻¹. The cache is
//! semantically invisible; a naive per-observation computation gives the
//! same values.
//!
//! The information criterion is
//!
//! ```text
//! M = −2ℓ + (log n + ½ log p) · Σ_i tr(Σ̂_{V(i)}⁻¹)
//! ```
//!
//! with ℓ the unpenalized log-likelihood evaluated at the penalized
//! estimates, p the retained dimension, and the trace summed over all
//! observations. A covariance whose submatrix for some observed pattern
//! fails the positive-definiteness check makes the penalty infeasible,
//! which the selection grid uses to define its feasible set.

use crate::data_model::{Grouping, LogData};
use crate::estimation::{ModelParams, PenaltyVector};
use crate::mat::{CholeskyFactor, SymMat};
use crate::{Error, Result};
use std::collections::HashMap;

const LN_2PI: f64 = 1.8378770664093453;

/// Per-pattern factorization of the covariance, keyed by the presence mask.
#[derive(Debug, Clone)]
pub struct PatternCache {
    entries: Vec<PatternEntry>,
    /// Cache entry index per observation.
    obs_entry: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct PatternEntry {
    support: Vec<usize>,
    factor: CholeskyFactor,
    inv_diag: Vec<f64>,
    inv_trace: f64,
    multiplicity: usize,
}

impl PatternEntry {
    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn factor(&self) -> &CholeskyFactor {
        &self.factor
    }

    /// Diagonal of the inverse covariance submatrix.
    pub fn inverse_diagonal(&self) -> &[f64] {
        &self.inv_diag
    }

    /// Trace of the inverse covariance submatrix.
    pub fn inverse_trace(&self) -> f64 {
        self.inv_trace
    }

    /// Number of observations sharing this pattern.
    pub fn multiplicity(&self) -> usize {
        self.multiplicity
    }
}

impl PatternCache {
    /// Factors the covariance submatrix of every distinct observed pattern.
    ///
    /// Fails with the first observation whose pattern submatrix is not
    /// positive definite.
    pub fn build(ld: &LogData, sigma: &SymMat) -> Result<PatternCache> {
        if sigma.dim() != ld.p() {
            return Err(Error::DimensionMismatch(format!(
                "covariance is {}x{} but data has {} variables",
                sigma.dim(),
                sigma.dim(),
                ld.p()
            )));
        }
        let mut entries: Vec<PatternEntry> = Vec::new();
        let mut index: HashMap<Vec<u64>, usize> = HashMap::new();
        let mut obs_entry = Vec::with_capacity(ld.n());
        for i in 0..ld.n() {
            let pattern = ld.pattern(i);
            if let Some(&e) = index.get(pattern.mask_words()) {
                entries[e].multiplicity += 1;
                obs_entry.push(e);
                continue;
            }
            let support: Vec<usize> = pattern.support().iter().map(|&j| j as usize).collect();
            let factor = sigma
                .cholesky_submatrix(&support)
                .ok_or(Error::NotPositiveDefinite { observation: i })?;
            let inv_diag = factor.inverse_diagonal();
            let inv_trace = inv_diag.iter().sum();
            let e = entries.len();
            entries.push(PatternEntry {
                support,
                factor,
                inv_diag,
                inv_trace,
                multiplicity: 1,
            });
            index.insert(pattern.mask_words().to_vec(), e);
            obs_entry.push(e);
        }
        Ok(PatternCache { entries, obs_entry })
    }

    pub fn entries(&self) -> &[PatternEntry] {
        &self.entries
    }

    pub fn entry_for(&self, observation: usize) -> &PatternEntry {
        &self.entries[self.obs_entry[observation]]
    }

    /// Sum over observations of the inverse trace of their pattern
    /// submatrix (the model-complexity measure).
    pub fn total_inverse_trace(&self) -> f64 {
        self.entries
            .iter()
            .map(|e| e.multiplicity as f64 * e.inv_trace)
            .sum()
    }
}

/// Unpenalized log-likelihood at the given parameters, using a prebuilt cache.
///
/// Returns `-inf` when some observed pattern count has zero probability under
/// `params`; this cannot happen at estimates fitted to the same data.
pub fn log_likelihood_cached(
    ld: &LogData,
    grouping: &Grouping,
    params: &ModelParams,
    cache: &PatternCache,
) -> f64 {
    let mut total = 0.0;
    let mut residual = Vec::new();
    for g in 0..grouping.n_groups() {
        let pi_row = params.pi_row(g);
        let mu_row = params.mu_row(g);
        for &i in grouping.group_rows(g) {
            let s = ld.pattern(i).count();
            let pi = pi_row[s];
            if pi <= 0.0 {
                return f64::NEG_INFINITY;
            }
            total += pi.ln();
            if s == 0 {
                continue;
            }
            let entry = cache.entry_for(i);
            let values = ld.log_values(i);
            residual.clear();
            for (pos, &j) in entry.support.iter().enumerate() {
                // Presence implies the group mean is defined.
                let mean = mu_row[j].expect("mean defined on support");
                residual.push(values[pos] - mean);
            }
            entry.factor.forward_solve(&mut residual);
            let quad: f64 = residual.iter().map(|x| x * x).sum();
            total += -0.5 * (s as f64) * LN_2PI - 0.5 * entry.factor.log_det() - 0.5 * quad;
        }
    }
    total
}

/// Penalty term `Σ_i tr(Λ_{V(i)} Σ_{V(i)}⁻¹)` from cached factors.
pub fn penalty_cached(penalty: &PenaltyVector, cache: &PatternCache) -> f64 {
    cache
        .entries
        .iter()
        .map(|e| {
            let per_obs: f64 = e
                .support
                .iter()
                .zip(e.inv_diag.iter())
                .map(|(&j, &d)| penalty.value(j) * d)
                .sum();
            e.multiplicity as f64 * per_obs
        })
        .sum()
}

/// Information criterion from cached factors.
pub fn information_criterion_cached(
    ld: &LogData,
    grouping: &Grouping,
    params: &ModelParams,
    cache: &PatternCache,
) -> f64 {
    let ll = log_likelihood_cached(ld, grouping, params, cache);
    let weight = (ld.n() as f64).ln() + 0.5 * (ld.p() as f64).ln();
    -2.0 * ll + weight * cache.total_inverse_trace()
}

/// Unpenalized log-likelihood; builds the pattern cache internally.
pub fn log_likelihood(ld: &LogData, grouping: &Grouping, params: &ModelParams) -> Result<f64> {
    let cache = PatternCache::build(ld, &params.sigma)?;
    Ok(log_likelihood_cached(ld, grouping, params, &cache))
}

/// Penalty term for the given parameters over all observations.
pub fn penalty(ld: &LogData, params: &ModelParams, lambda: &PenaltyVector) -> Result<f64> {
    if lambda.len() != ld.p() {
        return Err(Error::DimensionMismatch(format!(
            "penalty has {} entries for {} variables",
            lambda.len(),
            ld.p()
        )));
    }
    let cache = PatternCache::build(ld, &params.sigma)?;
    Ok(penalty_cached(lambda, &cache))
}

/// Penalized log-likelihood: `ℓ − ½ · penalty`.
pub fn penalized_log_likelihood(
    ld: &LogData,
    grouping: &Grouping,
    params: &ModelParams,
    lambda: &PenaltyVector,
) -> Result<f64> {
    let cache = PatternCache::build(ld, &params.sigma)?;
    Ok(log_likelihood_cached(ld, grouping, params, &cache) - 0.5 * penalty_cached(lambda, &cache))
}

/// Information criterion at the penalized estimates.
///
/// A non-positive-definite pattern submatrix surfaces as
/// [`Error::NotPositiveDefinite`], the signal the selection grid treats as
/// infeasibility.
pub fn information_criterion(
    ld: &LogData,
    grouping: &Grouping,
    params: &ModelParams,
) -> Result<f64> {
    let cache = PatternCache::build(ld, &params.sigma)?;
    Ok(information_criterion_cached(ld, grouping, params, &cache))
}
