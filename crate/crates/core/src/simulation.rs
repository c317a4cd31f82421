//! Scenario generation and rejection-rate estimation.
//!
//! A scenario draws K balanced groups of semicontinuous observations. Each
//! variable of an observation in group k is absent with probability
//! `π_k = π_1 + c₂ (k−1)/(K−1)` (capped just below one) and otherwise set to
//! `exp(z)`, where z is Gaussian with mean `μ_k = c₁ (k−1)/(K−1)`, unit
//! variance, and constant correlation ρ between variables. Absence
//! indicators are independent across variables, so pattern probabilities
//! depend only on the presence count. With `c₁ = c₂ = 0` all groups are
//! identically distributed and the rejection rate estimates the test level;
//! otherwise it estimates power.
//!
//! Replicates run in parallel, each on its own seed stream, and results are
//! aggregated by counts and sums, so the outcome does not depend on
//! scheduling.

use crate::data_model::{ingest, SemicontDataset};
use crate::inference::{permutation_test, PermutationConfig, TestReport};
use crate::rng::{mix_seed, stream_rng};
use crate::{Error, Result};
use rand::Rng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use std::time::Instant;

/// Absence probabilities are capped at this value when the group offset
/// pushes them to one or above.
pub const ABSENCE_CAP: f64 = 1.0 - 1e-6;

/// One simulation scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    /// Number of groups K.
    pub groups: usize,
    /// Observations per group.
    pub group_size: usize,
    /// Number of variables p.
    pub variables: usize,
    /// Constant correlation of the latent Gaussian, in [0, 1).
    pub rho: f64,
    /// Mean offset reached by the last group.
    pub c1: f64,
    /// Absence-probability offset reached by the last group.
    pub c2: f64,
    /// Absence probability of the first group, in (0, 1).
    pub pi_absence: f64,
    pub replicates: usize,
    /// Permutations per replicate (B).
    pub permutations: usize,
    pub alpha: f64,
    pub seed: u64,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        let mut offenders = Vec::new();
        if self.groups < 2 {
            offenders.push(format!("groups must be >= 2, got {}", self.groups));
        }
        if self.group_size < 2 {
            offenders.push(format!("group_size must be >= 2, got {}", self.group_size));
        }
        if self.variables < 2 {
            offenders.push(format!("variables must be >= 2, got {}", self.variables));
        }
        if !(self.rho >= 0.0 && self.rho < 1.0) {
            offenders.push(format!("rho must be in [0, 1), got {}", self.rho));
        }
        if !(self.pi_absence > 0.0 && self.pi_absence < 1.0) {
            offenders.push(format!(
                "pi_absence must be in (0, 1), got {}",
                self.pi_absence
            ));
        }
        if !self.c1.is_finite() {
            offenders.push(format!("c1 must be finite, got {}", self.c1));
        }
        if !(self.c2.is_finite() && self.c2 >= 0.0) {
            offenders.push(format!(
                "c2 must be finite and nonnegative, got {}",
                self.c2
            ));
        }
        if self.replicates < 1 {
            offenders.push("replicates must be >= 1".into());
        }
        if self.permutations < 1 {
            offenders.push("permutations must be >= 1".into());
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            offenders.push(format!("alpha must be in (0, 1], got {}", self.alpha));
        }
        if offenders.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidScenario(offenders.join("; ")))
        }
    }

    /// Absence probability of group k (zero-based), capped below one.
    pub fn absence_probability(&self, k: usize) -> f64 {
        let raw = self.pi_absence + self.c2 * k as f64 / (self.groups - 1) as f64;
        raw.min(ABSENCE_CAP)
    }

    /// Latent log-scale mean of group k (zero-based).
    pub fn group_mean(&self, k: usize) -> f64 {
        self.c1 * k as f64 / (self.groups - 1) as f64
    }
}

/// Aggregated scenario outcome.
#[derive(Debug, Clone)]
pub struct ScenarioResult {
    /// Fraction of successful replicates with p ≤ alpha.
    pub rejection_rate: f64,
    /// Binomial standard error `sqrt(r (1−r) / replicates)`.
    pub mc_error: f64,
    pub mean_p_star: f64,
    pub mean_lambda: f64,
    pub mean_lambda0: f64,
    /// Replicates that failed (for example, fewer than two co-observed
    /// variables survived filtering); excluded from the averages.
    pub failed_replicates: usize,
    pub runtime_seconds: f64,
}

/// Draws one dataset for the scenario.
///
/// Per observation the draw order is fixed: p absence uniforms, one shared
/// correlation factor, then p idiosyncratic normals. The factor is drawn
/// even at ρ = 0 so that scenarios differing only in parameters consume the
/// stream identically, which couples them under a common seed.
pub fn generate_dataset(sc: &Scenario, rng: &mut ChaCha12Rng) -> SemicontDataset {
    let p = sc.variables;
    let mut rows = Vec::with_capacity(sc.groups * sc.group_size);
    let mut labels = Vec::with_capacity(sc.groups * sc.group_size);
    for k in 0..sc.groups {
        let absence = sc.absence_probability(k);
        let mean = sc.group_mean(k);
        for _ in 0..sc.group_size {
            let present: Vec<bool> = (0..p).map(|_| rng.gen::<f64>() >= absence).collect();
            let shared: f64 = StandardNormal.sample(rng);
            let row: Vec<f64> = present
                .iter()
                .map(|&is_present| {
                    let eps: f64 = StandardNormal.sample(rng);
                    if is_present {
                        let z = mean + sc.rho.sqrt() * shared + (1.0 - sc.rho).sqrt() * eps;
                        z.exp()
                    } else {
                        0.0
                    }
                })
                .collect();
            rows.push(row);
            labels.push(format!("g{}", k + 1));
        }
    }
    ingest(rows, labels, None).expect("generated data is valid by construction")
}

/// Runs one replicate: generate, then test.
fn run_replicate(sc: &Scenario, replicate: usize) -> Result<TestReport> {
    let rep_seed = mix_seed(sc.seed, replicate as u64);
    // Stream 0 generates the data; the permutation test uses streams >= 1.
    let mut rng = stream_rng(rep_seed, 0);
    let ds = generate_dataset(sc, &mut rng);
    let config = PermutationConfig {
        permutations: sc.permutations,
        seed: rep_seed,
        ..Default::default()
    };
    permutation_test(&ds, &config)
}

/// Estimates the rejection rate over independent replicates.
pub fn run_scenario(sc: &Scenario) -> Result<ScenarioResult> {
    sc.validate()?;
    let start = Instant::now();
    let outcomes: Vec<Result<TestReport>> = (0..sc.replicates)
        .into_par_iter()
        .map(|r| run_replicate(sc, r))
        .collect();

    let mut rejections = 0usize;
    let mut successes = 0usize;
    let mut failed = 0usize;
    let (mut sum_p_star, mut sum_lambda, mut sum_lambda0) = (0.0, 0.0, 0.0);
    for outcome in outcomes {
        match outcome {
            Ok(report) => {
                successes += 1;
                if report.p_value <= sc.alpha {
                    rejections += 1;
                }
                sum_p_star += report.p_star as f64;
                sum_lambda += report.lambda_hat;
                sum_lambda0 += report.lambda0_hat;
            }
            Err(Error::Internal(message)) => return Err(Error::Internal(message)),
            Err(_) => failed += 1,
        }
    }
    if successes == 0 {
        return Err(Error::InvalidScenario(
            "every replicate failed; the scenario is too degenerate to test".into(),
        ));
    }
    let rate = rejections as f64 / successes as f64;
    Ok(ScenarioResult {
        rejection_rate: rate,
        mc_error: (rate * (1.0 - rate) / successes as f64).sqrt(),
        mean_p_star: sum_p_star / successes as f64,
        mean_lambda: sum_lambda / successes as f64,
        mean_lambda0: sum_lambda0 / successes as f64,
        failed_replicates: failed,
        runtime_seconds: start.elapsed().as_secs_f64(),
    })
}

/// The full factorial evaluated in the reference experiments: K ∈ {2, 4},
/// group sizes {5, 10}, p ∈ {50, 100, 150, 200}, ρ ∈ {0, 0.4}, mean offsets
/// c₁ ∈ {1, 5} and absence offsets c₂ ∈ {0.15, 0.3} varied one at a time
/// against baseline absence π ∈ {0.2, 0.5, 0.8}, dropping combinations whose
/// shifted absence probability reaches one. 448 scenarios in total.
pub fn paper_grid(replicates: usize, permutations: usize, alpha: f64, seed: u64) -> Vec<Scenario> {
    let mut scenarios = Vec::new();
    let offsets: &[(f64, f64)] = &[(0.0, 0.0), (1.0, 0.0), (5.0, 0.0), (0.0, 0.15), (0.0, 0.3)];
    for &groups in &[2usize, 4] {
        for &group_size in &[5usize, 10] {
            for &variables in &[50usize, 100, 150, 200] {
                for &(c1, c2) in offsets {
                    for &pi_absence in &[0.2, 0.5, 0.8] {
                        if pi_absence + c2 >= 1.0 {
                            continue;
                        }
                        for &rho in &[0.0, 0.4] {
                            scenarios.push(Scenario {
                                groups,
                                group_size,
                                variables,
                                rho,
                                c1,
                                c2,
                                pi_absence,
                                replicates,
                                permutations,
                                alpha,
                                seed,
                            });
                        }
                    }
                }
            }
        }
    }
    scenarios
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data_model::to_log_data;
    use approx::assert_relative_eq;

    fn base_scenario() -> Scenario {
        Scenario {
            groups: 2,
            group_size: 10,
            variables: 5,
            rho: 0.0,
            c1: 0.0,
            c2: 0.0,
            pi_absence: 0.3,
            replicates: 4,
            permutations: 19,
            alpha: 0.05,
            seed: 97,
        }
    }

    #[test]
    fn null_scenario_has_equal_group_parameters() {
        let sc = base_scenario();
        for k in 0..2 {
            assert_eq!(sc.group_mean(k), 0.0);
            assert_eq!(sc.absence_probability(k), 0.3);
        }
    }

    #[test]
    fn mean_offset_reaches_c1_in_last_group() {
        let sc = Scenario {
            c1: 1.0,
            ..base_scenario()
        };
        assert_eq!(sc.group_mean(0), 0.0);
        assert_eq!(sc.group_mean(1), 1.0);
        let sc4 = Scenario {
            groups: 4,
            c1: 5.0,
            ..base_scenario()
        };
        assert_relative_eq!(sc4.group_mean(1), 5.0 / 3.0);
        assert_relative_eq!(sc4.group_mean(3), 5.0);
    }

    #[test]
    fn absence_probability_is_capped_below_one() {
        let sc = Scenario {
            groups: 4,
            c2: 0.3,
            pi_absence: 0.8,
            ..base_scenario()
        };
        assert_relative_eq!(sc.absence_probability(1), 0.9);
        assert_eq!(sc.absence_probability(2), ABSENCE_CAP);
        assert_eq!(sc.absence_probability(3), ABSENCE_CAP);
    }

    #[test]
    fn generated_zero_fraction_concentrates_on_absence_probability() {
        let sc = Scenario {
            group_size: 10,
            variables: 8,
            pi_absence: 0.4,
            c2: 0.2,
            ..base_scenario()
        };
        // 500 replicates: per-variable zero fraction within binomial noise.
        let mut zero_counts = vec![vec![0usize; sc.variables]; sc.groups];
        let replicates: u64 = 500;
        for r in 0..replicates {
            let mut rng = stream_rng(mix_seed(sc.seed, r), 0);
            let ds = generate_dataset(&sc, &mut rng);
            for i in 0..ds.n() {
                let g = ds.group_ids()[i];
                for j in 0..ds.p() {
                    if ds.value(i, j) == 0.0 {
                        zero_counts[g][j] += 1;
                    }
                }
            }
        }
        let draws = (replicates as usize * sc.group_size) as f64;
        for k in 0..sc.groups {
            let expect = sc.absence_probability(k);
            let se = (expect * (1.0 - expect) / draws).sqrt();
            for j in 0..sc.variables {
                let observed = zero_counts[k][j] as f64 / draws;
                assert!(
                    (observed - expect).abs() < 5.0 * se + 1e-9,
                    "group {k} var {j}: observed {observed}, expected {expect}"
                );
            }
        }
    }

    #[test]
    fn log_correlation_tracks_rho_on_copresent_pairs() {
        let sc = Scenario {
            groups: 2,
            group_size: 400,
            variables: 2,
            rho: 0.4,
            pi_absence: 0.3,
            ..base_scenario()
        };
        let mut rng = stream_rng(5, 0);
        let ds = generate_dataset(&sc, &mut rng);
        let ld = to_log_data(&ds);
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for i in 0..ld.n() {
            if let (Some(x), Some(y)) = (ld.log_at(i, 0), ld.log_at(i, 1)) {
                xs.push(x);
                ys.push(y);
            }
        }
        let n = xs.len() as f64;
        let mx = xs.iter().sum::<f64>() / n;
        let my = ys.iter().sum::<f64>() / n;
        let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
        for (x, y) in xs.iter().zip(ys.iter()) {
            sxx += (x - mx) * (x - mx);
            syy += (y - my) * (y - my);
            sxy += (x - mx) * (y - my);
        }
        let corr = sxy / (sxx * syy).sqrt();
        assert!(
            (corr - 0.4).abs() < 0.08,
            "correlation {corr} too far from 0.4"
        );
    }

    #[test]
    fn alpha_one_rejects_everything() {
        let sc = Scenario {
            alpha: 1.0,
            replicates: 3,
            ..base_scenario()
        };
        let result = run_scenario(&sc).unwrap();
        assert_eq!(result.rejection_rate, 1.0);
        assert_eq!(result.mc_error, 0.0);
    }

    #[test]
    fn scenario_results_are_reproducible() {
        let sc = base_scenario();
        let a = run_scenario(&sc).unwrap();
        let b = run_scenario(&sc).unwrap();
        assert_eq!(a.rejection_rate, b.rejection_rate);
        assert_eq!(a.mean_p_star.to_bits(), b.mean_p_star.to_bits());
        assert_eq!(a.mean_lambda.to_bits(), b.mean_lambda.to_bits());
        assert_relative_eq!(
            a.mc_error,
            (a.rejection_rate * (1.0 - a.rejection_rate) / 4.0).sqrt()
        );
    }

    #[test]
    fn paper_grid_enumerates_448_scenarios() {
        let grid = paper_grid(10, 99, 0.05, 1);
        assert_eq!(grid.len(), 448);
        // The dropped cells are exactly the (pi=0.8, c2=0.3) combinations.
        let dropped = 2 * 2 * 4 * 2; // groups x sizes x p x rho
        let full = 2 * 2 * 4 * 5 * 3 * 2;
        assert_eq!(full - dropped, 448);
        for sc in &grid {
            sc.validate().unwrap();
            assert!(sc.pi_absence + sc.c2 < 1.0);
        }
    }

    #[test]
    fn validation_lists_every_offender() {
        let sc = Scenario {
            groups: 1,
            rho: 1.5,
            alpha: 0.0,
            ..base_scenario()
        };
        let err = sc.validate().unwrap_err();
        let text = err.to_string();
        assert!(text.contains("groups"));
        assert!(text.contains("rho"));
        assert!(text.contains("alpha"));
    }
}
