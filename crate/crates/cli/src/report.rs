//! Machine-readable reports. Floating-point values are serialized by
//! serde_json in shortest round-trip form, so reloading a report recovers
//! every value bit for bit.

use scmanova::inference::TestReport;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RemovedVariableJson {
    pub name: String,
    pub absences: usize,
}

/// JSON body of `scmanova test`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TestJson {
    pub statistic: f64,
    pub p_value: f64,
    pub permutations: usize,
    pub lambda_hat: f64,
    pub lambda0_hat: f64,
    pub p_star: usize,
    pub removed_variables: Vec<RemovedVariableJson>,
    pub df_wilks: usize,
    pub seed: u64,
    pub elapsed_seconds: f64,
}

impl TestJson {
    pub fn from_report(report: &TestReport, elapsed_seconds: f64) -> Self {
        TestJson {
            statistic: report.statistic,
            p_value: report.p_value,
            permutations: report.permutations,
            lambda_hat: report.lambda_hat,
            lambda0_hat: report.lambda0_hat,
            p_star: report.p_star,
            removed_variables: report
                .removed_variables
                .iter()
                .map(|r| RemovedVariableJson {
                    name: r.name.clone(),
                    absences: r.absences,
                })
                .collect(),
            df_wilks: report.df_wilks,
            seed: report.seed,
            elapsed_seconds,
        }
    }
}

/// JSON body of `scmanova fit` (alternative-model estimates).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitJson {
    pub group_labels: Vec<String>,
    /// Names of the retained variables, in model order.
    pub variables: Vec<String>,
    pub p_star: usize,
    pub removed_variables: Vec<RemovedVariableJson>,
    pub lambda_hat: f64,
    pub criterion_value: f64,
    /// Count-indexed presence probabilities, one row per group.
    pub pi: Vec<Vec<f64>>,
    /// Log-scale means; null marks variables never observed in the group.
    pub mu: Vec<Vec<Option<f64>>>,
    /// Diagonal of the penalized covariance estimate.
    pub sigma_diag: Vec<f64>,
    pub elapsed_seconds: f64,
}

/// One row of the simulation results table.
#[derive(Debug, Clone, Serialize)]
pub struct SimulationRow {
    pub k: usize,
    pub n_k: usize,
    pub p: usize,
    pub rho: f64,
    pub c1: f64,
    pub c2: f64,
    pub pi_j1: f64,
    pub replicates: usize,
    pub permutations: usize,
    pub alpha: f64,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rejection_rate: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mc_error: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_p_star: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_lambda: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_lambda0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failed_replicates: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub runtime_seconds: Option<f64>,
}

pub const SIMULATION_CSV_HEADER: &str = "k,n_k,p,rho,c1,c2,pi_j1,replicates,permutations,alpha,\
                                         seed,rejection_rate,mc_error,mean_p_star,mean_lambda,\
                                         mean_lambda0,failed_replicates,runtime_seconds";

impl SimulationRow {
    pub fn csv_line(&self) -> String {
        fn opt<T: std::fmt::Display>(v: &Option<T>) -> String {
            v.as_ref().map(|x| x.to_string()).unwrap_or_default()
        }
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.k,
            self.n_k,
            self.p,
            self.rho,
            self.c1,
            self.c2,
            self.pi_j1,
            self.replicates,
            self.permutations,
            self.alpha,
            self.seed,
            opt(&self.rejection_rate),
            opt(&self.mc_error),
            opt(&self.mean_p_star),
            opt(&self.mean_lambda),
            opt(&self.mean_lambda0),
            opt(&self.failed_replicates),
            opt(&self.runtime_seconds),
        )
    }
}
