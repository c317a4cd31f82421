//! Penalty selection by information-criterion minimization over a grid.
//!
//! A penalty value is feasible when the covariance estimate it produces has a
//! positive-definite submatrix for every observed presence pattern. The
//! selected value is the feasible grid point with the smallest criterion,
//! ties going to the smallest penalty. The criterion landscape may be
//! non-smooth at feasibility boundaries, so a deterministic grid search is
//! used rather than a continuous optimizer.

use crate::data_model::{Grouping, LogData};
use crate::estimation::{estimate_mu, estimate_pi, ModelParams, PenaltyVector, SigmaBase};
use crate::likelihood::{information_criterion_cached, log_likelihood_cached, PatternCache};
use crate::{Error, Result};

/// Ordered scalar penalty candidates.
#[derive(Debug, Clone)]
pub struct LambdaGrid {
    candidates: Vec<f64>,
    includes_zero: bool,
    bounds: (f64, f64),
}

impl LambdaGrid {
    /// Grid from explicit candidates; must be strictly increasing and
    /// nonnegative.
    pub fn from_candidates(candidates: Vec<f64>) -> Result<Self> {
        if candidates.is_empty() {
            return Err(Error::InvalidGrid("no candidates".into()));
        }
        if candidates.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidGrid(
                "candidates must be finite and nonnegative".into(),
            ));
        }
        if candidates.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidGrid(
                "candidates must be strictly increasing".into(),
            ));
        }
        let includes_zero = candidates[0] == 0.0;
        // Bounds describe the positive search range; a leading zero is the
        // separate unpenalized candidate.
        let lower = candidates
            .iter()
            .copied()
            .find(|&v| v > 0.0)
            .unwrap_or(candidates[0]);
        let bounds = (lower, *candidates.last().unwrap());
        Ok(LambdaGrid {
            candidates,
            includes_zero,
            bounds,
        })
    }

    /// Zero plus `size` log-spaced points in `[min, max]`.
    pub fn log_spaced_with_zero(min: f64, max: f64, size: usize) -> Result<Self> {
        if !(min > 0.0) || !(max > min) {
            return Err(Error::InvalidGrid(format!(
                "need 0 < min < max, got [{min}, {max}]"
            )));
        }
        if size < 2 {
            return Err(Error::InvalidGrid("need at least 2 points".into()));
        }
        let mut candidates = vec![0.0];
        let (lo, hi) = (min.ln(), max.ln());
        for t in 0..size {
            let x = lo + (hi - lo) * t as f64 / (size - 1) as f64;
            candidates.push(x.exp());
        }
        candidates.dedup();
        LambdaGrid::from_candidates(candidates)
    }

    /// Scale-adaptive default: zero plus 60 log-spaced points spanning
    /// `[1e-4, 1e2]` times the mean unpenalized variance estimate, so the
    /// grid tracks the units of the data. The variance estimates come from
    /// the per-group means and are defined entrywise even when the full
    /// matrix is rank deficient.
    pub fn default_for(ld: &LogData, grouping: &Grouping) -> Result<Self> {
        LambdaGrid::default_sized(ld, grouping, 60)
    }

    /// Scale-adaptive grid with a custom point count.
    pub fn default_sized(ld: &LogData, grouping: &Grouping, size: usize) -> Result<Self> {
        let mu = estimate_mu(ld, grouping, false);
        let base = SigmaBase::new(ld, grouping, &mu)?;
        let diag = base.unpenalized().diagonal();
        let mut mean = diag.iter().sum::<f64>() / diag.len().max(1) as f64;
        if !(mean > 0.0) {
            // Degenerate data with all residuals zero; fall back to unit scale.
            mean = 1.0;
        }
        LambdaGrid::log_spaced_with_zero(1e-4 * mean, 1e2 * mean, size)
    }

    pub fn candidates(&self) -> &[f64] {
        &self.candidates
    }

    pub fn includes_zero(&self) -> bool {
        self.includes_zero
    }

    pub fn bounds(&self) -> (f64, f64) {
        self.bounds
    }

    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }
}

/// Outcome of a grid search.
#[derive(Debug, Clone)]
pub struct SelectionResult {
    pub lambda_hat: PenaltyVector,
    pub criterion_value: f64,
    pub feasible_count: usize,
    /// Criterion per candidate, `None` where infeasible.
    pub trace_path: Vec<(f64, Option<f64>)>,
}

/// Fitted model at the selected penalty together with its selection record
/// and unpenalized log-likelihood.
#[derive(Debug, Clone)]
pub struct SelectedFit {
    pub selection: SelectionResult,
    pub params: ModelParams,
    pub log_likelihood: f64,
}

/// Grid search over penalties for one model (alternative or null).
///
/// The count probabilities, means, and the penalty-independent covariance
/// base are computed once; each candidate only shifts the covariance
/// diagonal, factors the pattern submatrices, and evaluates the criterion.
pub fn select_fit(
    ld: &LogData,
    grouping: &Grouping,
    grid: &LambdaGrid,
    null_model: bool,
) -> Result<SelectedFit> {
    let pi = estimate_pi(ld, grouping, null_model);
    let mu = estimate_mu(ld, grouping, null_model);
    let base = SigmaBase::new(ld, grouping, &mu)?;

    let mut trace_path = Vec::with_capacity(grid.len());
    let mut feasible_count = 0;
    let mut best: Option<(f64, f64, ModelParams, f64)> = None; // (lambda, M, params, ll)
    for &lambda in grid.candidates() {
        let penalty = PenaltyVector::scalar(lambda, ld.p())?;
        let params = ModelParams {
            pi: pi.clone(),
            mu: mu.clone(),
            sigma: base.with_penalty(&penalty),
            null_model,
        };
        match PatternCache::build(ld, &params.sigma) {
            Err(Error::NotPositiveDefinite { .. }) => {
                trace_path.push((lambda, None));
            }
            Err(other) => return Err(other),
            Ok(cache) => {
                let criterion = information_criterion_cached(ld, grouping, &params, &cache);
                trace_path.push((lambda, Some(criterion)));
                feasible_count += 1;
                // Strict improvement keeps the smallest penalty among ties.
                if best.as_ref().is_none_or(|(_, m, _, _)| criterion < *m) {
                    let ll = log_likelihood_cached(ld, grouping, &params, &cache);
                    best = Some((lambda, criterion, params, ll));
                }
            }
        }
    }

    match best {
        None => Err(Error::EmptyFeasibleSet {
            candidates: grid.len(),
            trace_path,
        }),
        Some((lambda, criterion_value, params, log_likelihood)) => Ok(SelectedFit {
            selection: SelectionResult {
                lambda_hat: PenaltyVector::scalar(lambda, ld.p())?,
                criterion_value,
                feasible_count,
                trace_path,
            },
            params,
            log_likelihood,
        }),
    }
}

/// Selects the penalty minimizing the information criterion over the grid.
pub fn select_lambda(
    ld: &LogData,
    grouping: &Grouping,
    grid: &LambdaGrid,
    null_model: bool,
) -> Result<SelectionResult> {
    Ok(select_fit(ld, grouping, grid, null_model)?.selection)
}
