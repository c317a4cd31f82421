//! Test statistic, permutation null distribution, and diagnostics.
//!
//! The statistic is
//!
//! ```text
//! D = −2 (ℓ₀(π̂₀, μ̂₀, Σ̂₀^λ₀) − ℓ(π̂, μ̂, Σ̂^λ))
//! ```
//!
//! with both unpenalized log-likelihoods evaluated at the penalized
//! estimates of their model. On fully observed data with zero penalties it
//! reduces to the classical Gaussian likelihood-ratio statistic
//! `n (log|Σ̂₀| − log|Σ̂|)`, whose chi-square limit
//! ([`wilks_reference`]) holds only for n > p with zero penalty. In general
//! the null distribution is obtained by permuting group labels.
//!
//! Permutation scheme: the whole label vector is shuffled uniformly,
//! preserving each observation's coupling between its presence pattern and
//! its values. Variable filtering is done once on the observed data; the
//! co-presence condition does not involve labels, so redoing it per
//! permutation would be a no-op. Pooled (null-model) estimates are
//! label-invariant, so the null fit and its selected penalty are computed
//! once and reused across permutations; re-selection per permutation only
//! affects the alternative fit. Each permutation draws from its own counter
//! stream of the seed, making the p-value independent of scheduling and
//! thread count. A permutation whose alternative fit is infeasible on every
//! grid point is scored as `D_b = +∞`, which can only increase the p-value.

use crate::data_model::{filter_variables, to_log_data, Grouping, LogData, SemicontDataset};
use crate::estimation::{fit_model, ModelParams, PenaltyVector};
use crate::likelihood::{log_likelihood_cached, PatternCache};
use crate::rng::stream_rng;
use crate::selection::{select_fit, LambdaGrid};
use crate::{Error, Result};
use rayon::prelude::*;
use statrs::distribution::{ChiSquared, ContinuousCDF};

/// How penalties are chosen during a permutation test.
#[derive(Debug, Clone)]
pub enum PenaltyChoice {
    /// Minimize the information criterion over a grid (the default grid when
    /// `None`); with `reselect` the alternative-model penalty is re-selected
    /// inside every permutation, absorbing selection variability into the
    /// null distribution.
    Selected {
        grid: Option<LambdaGrid>,
        reselect: bool,
    },
    /// Fixed scalar penalties for the alternative and null models.
    Fixed { lambda: f64, lambda0: f64 },
}

impl Default for PenaltyChoice {
    fn default() -> Self {
        PenaltyChoice::Selected {
            grid: None,
            reselect: true,
        }
    }
}

/// Permutation test configuration.
#[derive(Debug, Clone)]
pub struct PermutationConfig {
    /// Number of permutations B.
    pub permutations: usize,
    pub seed: u64,
    pub penalties: PenaltyChoice,
    /// Keep the B permuted statistics in the report.
    pub keep_permutation_stats: bool,
}

impl Default for PermutationConfig {
    fn default() -> Self {
        PermutationConfig {
            permutations: 999,
            seed: 0,
            penalties: PenaltyChoice::default(),
            keep_permutation_stats: false,
        }
    }
}

/// A variable dropped by the co-presence filter, reported by name.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RemovedVariableInfo {
    pub name: String,
    pub absences: usize,
}

/// Result of the permutation test.
#[derive(Debug, Clone)]
pub struct TestReport {
    pub statistic: f64,
    pub p_value: f64,
    /// Number of permutations B; p_value lies in [1/(B+1), 1].
    pub permutations: usize,
    pub lambda_hat: f64,
    pub lambda0_hat: f64,
    /// Retained dimension after variable filtering.
    pub p_star: usize,
    pub removed_variables: Vec<RemovedVariableInfo>,
    /// Degrees of freedom of the chi-square reference, `2 p* (K−1)`.
    pub df_wilks: usize,
    pub seed: u64,
    /// Permutations whose alternative fit was infeasible on the whole grid,
    /// scored conservatively as `+∞`.
    pub infeasible_permutations: usize,
    pub perm_stats: Option<Vec<f64>>,
}

/// Chi-square reference degrees of freedom: `2 p* (K−1)`.
pub fn wilks_degrees_of_freedom(p_star: usize, n_groups: usize) -> usize {
    2 * p_star * (n_groups - 1)
}

/// Likelihood-ratio statistic at fixed penalties on filtered data.
pub fn lrt_statistic(
    ld: &LogData,
    grouping: &Grouping,
    lambda: &PenaltyVector,
    lambda0: &PenaltyVector,
) -> Result<f64> {
    let alt = fit_model(ld, grouping, lambda, false)?;
    let null = fit_model(ld, grouping, lambda0, true)?;
    let ll_alt = ll_of(ld, grouping, &alt)?;
    let ll_null = ll_of(ld, grouping, &null)?;
    // Adding 0.0 folds a negative zero into plain zero.
    Ok(-2.0 * (ll_null - ll_alt) + 0.0)
}

fn ll_of(ld: &LogData, grouping: &Grouping, params: &ModelParams) -> Result<f64> {
    let cache = PatternCache::build(ld, &params.sigma)?;
    Ok(log_likelihood_cached(ld, grouping, params, &cache))
}

/// Filters variables and returns the reduced data with the removal record.
fn prepare(ds: &SemicontDataset) -> Result<(LogData, Grouping, Vec<RemovedVariableInfo>, usize)> {
    if ds.n_groups() < 2 {
        return Err(Error::SingleGroup(ds.n_groups()));
    }
    let full = to_log_data(ds);
    let outcome = filter_variables(&full)?;
    let removed = outcome
        .removed()
        .iter()
        .map(|r| RemovedVariableInfo {
            name: ds.variable_names()[r.index].clone(),
            absences: r.absences,
        })
        .collect();
    let p_star = outcome.p_star();
    Ok((
        full.restrict(outcome.kept()),
        Grouping::from_dataset(ds),
        removed,
        p_star,
    ))
}

/// Runs the full pipeline: filter, select penalties, compute the observed
/// statistic, and build its permutation null distribution.
pub fn permutation_test(ds: &SemicontDataset, config: &PermutationConfig) -> Result<TestReport> {
    if config.permutations < 1 {
        return Err(Error::InvalidConfig("need at least one permutation".into()));
    }
    let (ld, grouping, removed_variables, p_star) = prepare(ds)?;

    // Observed fits. The null side never depends on labels, so it is final.
    let (lambda_hat, lambda0_hat, ll_alt_obs, ll_null, grid) = match &config.penalties {
        PenaltyChoice::Fixed { lambda, lambda0 } => {
            let lam = PenaltyVector::scalar(*lambda, p_star)?;
            let lam0 = PenaltyVector::scalar(*lambda0, p_star)?;
            let alt = fit_model(&ld, &grouping, &lam, false)?;
            let null = fit_model(&ld, &grouping, &lam0, true)?;
            (
                *lambda,
                *lambda0,
                ll_of(&ld, &grouping, &alt)?,
                ll_of(&ld, &grouping, &null)?,
                None,
            )
        }
        PenaltyChoice::Selected { grid, reselect: _ } => {
            let grid = match grid {
                Some(g) => g.clone(),
                None => LambdaGrid::default_for(&ld, &grouping)?,
            };
            let alt = select_fit(&ld, &grouping, &grid, false)?;
            let null = select_fit(&ld, &grouping, &grid, true)?;
            (
                alt.selection.lambda_hat.scalar_value().unwrap_or(0.0),
                null.selection.lambda_hat.scalar_value().unwrap_or(0.0),
                alt.log_likelihood,
                null.log_likelihood,
                Some(grid),
            )
        }
    };
    // Adding 0.0 folds a negative zero into plain zero for reporting.
    let statistic = -2.0 * (ll_null - ll_alt_obs) + 0.0;

    // Alternative-model log-likelihood under one permuted labeling, or None
    // when infeasible at every allowed penalty. In frozen mode the penalty
    // stays at the observed-data selection (or the fixed value), which both
    // live in `lambda_hat`.
    let reselect = matches!(
        &config.penalties,
        PenaltyChoice::Selected { reselect: true, .. }
    );
    let permuted_ll = |b: u64| -> Result<Option<f64>> {
        let mut rng = stream_rng(config.seed, b);
        let perm = grouping.permuted(&mut rng);
        if reselect {
            let grid = grid.as_ref().expect("grid present in selected mode");
            match select_fit(&ld, &perm, grid, false) {
                Ok(fit) => Ok(Some(fit.log_likelihood)),
                Err(Error::EmptyFeasibleSet { .. }) => Ok(None),
                Err(other) => Err(other),
            }
        } else {
            let lam = PenaltyVector::scalar(lambda_hat, p_star)?;
            let alt = fit_model(&ld, &perm, &lam, false)?;
            match PatternCache::build(&ld, &alt.sigma) {
                Ok(cache) => Ok(Some(log_likelihood_cached(&ld, &perm, &alt, &cache))),
                Err(Error::NotPositiveDefinite { .. }) => Ok(None),
                Err(other) => Err(other),
            }
        }
    };

    let perm_lls: Vec<Option<f64>> = (1..=config.permutations as u64)
        .into_par_iter()
        .map(permuted_ll)
        .collect::<Result<Vec<_>>>()?;

    let mut infeasible_permutations = 0;
    let perm_stats: Vec<f64> = perm_lls
        .into_iter()
        .map(|ll| match ll {
            Some(ll) => -2.0 * (ll_null - ll) + 0.0,
            None => {
                infeasible_permutations += 1;
                f64::INFINITY
            }
        })
        .collect();

    let exceed = perm_stats.iter().filter(|&&d| d >= statistic).count();
    let p_value = (1 + exceed) as f64 / (config.permutations + 1) as f64;

    Ok(TestReport {
        statistic,
        p_value,
        permutations: config.permutations,
        lambda_hat,
        lambda0_hat,
        p_star,
        removed_variables,
        df_wilks: wilks_degrees_of_freedom(p_star, ds.n_groups()),
        seed: config.seed,
        infeasible_permutations,
        perm_stats: config.keep_permutation_stats.then_some(perm_stats),
    })
}

/// Result of the chi-square reference computation.
#[derive(Debug, Clone)]
pub struct WilksReference {
    pub statistic: f64,
    pub df: usize,
    pub p_value: f64,
}

/// Classical chi-square reference: the statistic at zero penalties compared
/// to its limiting chi-square distribution with `2 p* (K−1)` degrees of
/// freedom.
///
/// Valid only in the classical regime (n > p*, zero penalty); outside it the
/// permutation test is the supported procedure, and p* ≥ n is rejected here.
pub fn wilks_reference(ds: &SemicontDataset) -> Result<WilksReference> {
    let (ld, grouping, _, p_star) = prepare(ds)?;
    if p_star >= ds.n() {
        return Err(Error::WilksNotApplicable {
            needed: p_star,
            n: ds.n(),
        });
    }
    let zero = PenaltyVector::zero(p_star);
    let statistic = lrt_statistic(&ld, &grouping, &zero, &zero)?;
    let df = wilks_degrees_of_freedom(p_star, ds.n_groups());
    let chi2 = ChiSquared::new(df as f64)
        .map_err(|e| Error::Internal(format!("chi-square setup: {e}")))?;
    let p_value = 1.0 - chi2.cdf(statistic);
    Ok(WilksReference {
        statistic,
        df,
        p_value,
    })
}

/// Outcome of the count-homogeneity diagnostic.
#[derive(Debug, Clone)]
pub enum CountHomogeneity {
    /// No count stratum reached the minimum number of observations.
    Inconclusive,
    Tested {
        statistic: f64,
        df: usize,
        p_value: f64,
    },
}

/// Minimum observations a (group, count) stratum needs to enter the
/// diagnostic.
pub const DIAGNOSTIC_MIN_STRATUM: usize = 5;

/// Chi-square diagnostic for the assumption that all presence patterns with
/// the same count are equally likely.
///
/// Within each group and count stratum s (0 < s < p) holding at least
/// [`DIAGNOSTIC_MIN_STRATUM`] observations, per-variable presence counts are
/// compared against the uniform expectation m·s/p. The Pearson sum is scaled
/// by (p−1)/(p−s) — the fixed row total s makes presence indicators
/// negatively correlated within an observation — giving an asymptotic
/// chi-square with p−1 degrees of freedom per stratum. Strata are pooled by
/// summing statistics and degrees of freedom. Advisory only; the test
/// pipeline never gates on it.
pub fn count_homogeneity_diagnostic(ds: &SemicontDataset) -> CountHomogeneity {
    let ld = to_log_data(ds);
    let grouping = Grouping::from_dataset(ds);
    let p = ds.p();
    if p < 2 {
        return CountHomogeneity::Inconclusive;
    }
    let mut statistic = 0.0;
    let mut df = 0usize;
    for g in 0..grouping.n_groups() {
        // Stratify the group's observations by presence count.
        let mut by_count: Vec<Vec<usize>> = vec![Vec::new(); p + 1];
        for &i in grouping.group_rows(g) {
            by_count[ld.pattern(i).count()].push(i);
        }
        for (s, members) in by_count.iter().enumerate() {
            if s == 0 || s == p || members.len() < DIAGNOSTIC_MIN_STRATUM {
                continue;
            }
            let m = members.len() as f64;
            let expected = m * s as f64 / p as f64;
            let mut presence = vec![0usize; p];
            for &i in members {
                for &j in ld.pattern(i).support() {
                    presence[j as usize] += 1;
                }
            }
            let pearson: f64 = presence
                .iter()
                .map(|&o| {
                    let d = o as f64 - expected;
                    d * d / expected
                })
                .sum();
            statistic += pearson * (p as f64 - 1.0) / (p as f64 - s as f64);
            df += p - 1;
        }
    }
    if df == 0 {
        return CountHomogeneity::Inconclusive;
    }
    let chi2 = ChiSquared::new(df as f64).expect("positive degrees of freedom");
    CountHomogeneity::Tested {
        statistic,
        df,
        p_value: 1.0 - chi2.cdf(statistic),
    }
}
