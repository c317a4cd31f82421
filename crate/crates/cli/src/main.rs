//! Command-line front end: CSV ingestion, the permutation test, model
//! fitting, and the simulation harness.
//!
//! Exit codes: 0 success, 2 input or configuration error, 3 numerical
//! infeasibility (no feasible penalty), 4 internal invariant violation.

mod input;
mod report;
mod scenarios;

use clap::{Args, Parser, Subcommand};
use report::{FitJson, RemovedVariableJson, SimulationRow, TestJson, SIMULATION_CSV_HEADER};
use scenarios::ScenarioDefaults;
use scmanova::data_model::{filter_variables, to_log_data, Grouping};
use scmanova::estimation::{fit_model, PenaltyVector};
use scmanova::inference::{permutation_test, PenaltyChoice, PermutationConfig};
use scmanova::likelihood::information_criterion;
use scmanova::selection::{select_fit, LambdaGrid};
use scmanova::simulation::{paper_grid, run_scenario, Scenario};
use scmanova::ErrorCategory;
use std::path::{Path, PathBuf};
use std::time::Instant;

#[derive(Parser)]
#[command(
    name = "scmanova",
    version,
    about = "MANOVA-type permutation test for high-dimensional semicontinuous data"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Worker threads (default: SCMANOVA_THREADS or all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the permutation test on a CSV dataset.
    Test(TestArgs),
    /// Fit the model and report the estimates.
    Fit(FitArgs),
    /// Run simulation scenarios and tabulate rejection rates.
    Simulate(SimulateArgs),
}

#[derive(Args)]
struct DataArgs {
    /// Input CSV: header row, one group column, numeric columns with zeros
    /// encoding absence.
    #[arg(long)]
    input: PathBuf,

    /// Name of the group column.
    #[arg(long = "group-col")]
    group_col: String,

    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct GridArgs {
    /// Lower bound of the penalty grid (must be positive; zero is always a
    /// candidate).
    #[arg(long = "grid-min", requires = "grid_max")]
    grid_min: Option<f64>,

    /// Upper bound of the penalty grid.
    #[arg(long = "grid-max", requires = "grid_min")]
    grid_max: Option<f64>,

    /// Number of log-spaced grid points.
    #[arg(long = "grid-size", default_value_t = 60)]
    grid_size: usize,

    /// Skip selection and use this fixed penalty.
    #[arg(long = "lambda-fixed", conflicts_with_all = ["grid_min", "grid_max"])]
    lambda_fixed: Option<f64>,
}

impl GridArgs {
    fn grid_for(
        &self,
        ld: &scmanova::data_model::LogData,
        grouping: &Grouping,
    ) -> scmanova::Result<LambdaGrid> {
        match (self.grid_min, self.grid_max) {
            (Some(min), Some(max)) => LambdaGrid::log_spaced_with_zero(min, max, self.grid_size),
            _ => LambdaGrid::default_sized(ld, grouping, self.grid_size),
        }
    }
}

#[derive(Args)]
struct TestArgs {
    #[command(flatten)]
    data: DataArgs,

    #[command(flatten)]
    grid: GridArgs,

    /// Number of permutations B.
    #[arg(long, default_value_t = 999)]
    permutations: usize,

    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Significance level reported in the summary line.
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,

    /// Keep the penalties selected on the observed data for every
    /// permutation instead of re-selecting them.
    #[arg(long = "freeze-lambda")]
    freeze_lambda: bool,

    /// Fixed null-model penalty (defaults to --lambda-fixed).
    #[arg(long = "lambda0-fixed", requires = "lambda_fixed")]
    lambda0_fixed: Option<f64>,
}

#[derive(Args)]
struct FitArgs {
    #[command(flatten)]
    data: DataArgs,

    #[command(flatten)]
    grid: GridArgs,
}

#[derive(Args)]
struct SimulateArgs {
    /// Scenario file: `key = value` blocks separated by blank lines.
    #[arg(long, conflicts_with = "paper_grid")]
    scenarios: Option<PathBuf>,

    /// Enumerate the full 448-scenario reference factorial.
    #[arg(long = "paper-grid")]
    paper_grid: bool,

    /// Replicates per scenario (default for file scenarios, forced for
    /// --paper-grid).
    #[arg(long, default_value_t = 200)]
    replicates: usize,

    /// Permutations per replicate.
    #[arg(long, default_value_t = 199)]
    permutations: usize,

    #[arg(long, default_value_t = 0.05)]
    alpha: f64,

    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// List the scenario table without running anything.
    #[arg(long = "dry-run")]
    dry_run: bool,

    /// Results table path (.json for JSON, anything else CSV); stdout when
    /// absent.
    #[arg(long)]
    output: Option<PathBuf>,
}

fn main() {
    let cli = Cli::parse();
    configure_threads(cli.threads);
    let code = match cli.command {
        Command::Test(args) => cmd_test(&args),
        Command::Fit(args) => cmd_fit(&args),
        Command::Simulate(args) => cmd_simulate(&args),
    };
    std::process::exit(code);
}

fn configure_threads(flag: Option<usize>) {
    let threads = flag.or_else(|| {
        std::env::var("SCMANOVA_THREADS")
            .ok()
            .and_then(|v| v.parse().ok())
    });
    if let Some(n) = threads {
        if n > 0 {
            // Ignore failure: the pool can only be configured once.
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global();
        }
    }
}

fn fail(message: &str, code: i32) -> i32 {
    eprintln!("error: {message}");
    code
}

fn core_fail(err: &scmanova::Error) -> i32 {
    let code = match err.category() {
        ErrorCategory::Input => 2,
        ErrorCategory::Infeasible => 3,
        ErrorCategory::Internal => 4,
    };
    fail(&err.to_string(), code)
}

/// Writes the JSON report to the output path (summary on stdout) or to
/// stdout (summary on stderr).
fn emit_report(output: Option<&Path>, json: &str, summary: &str) -> Result<(), String> {
    match output {
        Some(path) => {
            std::fs::write(path, json)
                .map_err(|e| format!("cannot write {}: {e}", path.display()))?;
            println!("{summary}");
        }
        None => {
            println!("{json}");
            eprintln!("{summary}");
        }
    }
    Ok(())
}

fn cmd_test(args: &TestArgs) -> i32 {
    let start = Instant::now();
    let ds = match input::read_csv(&args.data.input, &args.data.group_col) {
        Ok(ds) => ds,
        Err(e) => return fail(&e, 2),
    };
    if ds.n_groups() < 2 {
        return fail("at least two groups are required", 2);
    }
    if !(args.alpha > 0.0 && args.alpha < 1.0) {
        return fail("alpha must be in (0, 1)", 2);
    }

    let penalties = match args.grid.lambda_fixed {
        Some(lambda) => PenaltyChoice::Fixed {
            lambda,
            lambda0: args.lambda0_fixed.unwrap_or(lambda),
        },
        None => {
            // Resolve the grid now so bound errors surface before the run.
            let ld = to_log_data(&ds);
            let outcome = match filter_variables(&ld) {
                Ok(o) => o,
                Err(e) => return core_fail(&e),
            };
            let ld = ld.restrict(outcome.kept());
            let grouping = Grouping::from_dataset(&ds);
            match args.grid.grid_for(&ld, &grouping) {
                Ok(grid) => PenaltyChoice::Selected {
                    grid: Some(grid),
                    reselect: !args.freeze_lambda,
                },
                Err(e) => return core_fail(&e),
            }
        }
    };

    let config = PermutationConfig {
        permutations: args.permutations,
        seed: args.seed,
        penalties,
        keep_permutation_stats: false,
    };
    let report = match permutation_test(&ds, &config) {
        Ok(r) => r,
        Err(e) => return core_fail(&e),
    };

    let json_body = TestJson::from_report(&report, start.elapsed().as_secs_f64());
    let json = match serde_json::to_string_pretty(&json_body) {
        Ok(j) => j,
        Err(e) => return fail(&format!("serialization: {e}"), 4),
    };
    let verdict = if report.p_value <= args.alpha {
        "reject"
    } else {
        "fail to reject"
    };
    let infeasible_note = if report.infeasible_permutations > 0 {
        format!(
            " ({} infeasible permutations scored conservatively)",
            report.infeasible_permutations
        )
    } else {
        String::new()
    };
    let summary = format!(
        "D = {:.6}, p = {:.6} (B = {}): {} at alpha = {}; p* = {}, lambda = {:.6}, lambda0 = {:.6}, df_wilks = {}{}",
        report.statistic,
        report.p_value,
        report.permutations,
        verdict,
        args.alpha,
        report.p_star,
        report.lambda_hat,
        report.lambda0_hat,
        report.df_wilks,
        infeasible_note,
    );
    match emit_report(args.data.output.as_deref(), &json, &summary) {
        Ok(()) => 0,
        Err(e) => fail(&e, 2),
    }
}

fn cmd_fit(args: &FitArgs) -> i32 {
    let start = Instant::now();
    let ds = match input::read_csv(&args.data.input, &args.data.group_col) {
        Ok(ds) => ds,
        Err(e) => return fail(&e, 2),
    };
    let ld_full = to_log_data(&ds);
    let outcome = match filter_variables(&ld_full) {
        Ok(o) => o,
        Err(e) => return core_fail(&e),
    };
    let ld = ld_full.restrict(outcome.kept());
    let grouping = Grouping::from_dataset(&ds);

    let (params, lambda_hat, criterion_value) = match args.grid.lambda_fixed {
        Some(lambda) => {
            let penalty = match PenaltyVector::scalar(lambda, ld.p()) {
                Ok(p) => p,
                Err(e) => return core_fail(&e),
            };
            let params = match fit_model(&ld, &grouping, &penalty, false) {
                Ok(p) => p,
                Err(e) => return core_fail(&e),
            };
            let criterion = match information_criterion(&ld, &grouping, &params) {
                Ok(m) => m,
                Err(e) => return core_fail(&e),
            };
            (params, lambda, criterion)
        }
        None => {
            let grid = match args.grid.grid_for(&ld, &grouping) {
                Ok(g) => g,
                Err(e) => return core_fail(&e),
            };
            let fitted = match select_fit(&ld, &grouping, &grid, false) {
                Ok(f) => f,
                Err(e) => return core_fail(&e),
            };
            let lambda = fitted.selection.lambda_hat.scalar_value().unwrap_or(0.0);
            (fitted.params, lambda, fitted.selection.criterion_value)
        }
    };

    // Echo check before writing: every pi row must satisfy the binomial-sum
    // constraint.
    for (g, row) in params.pi.iter().enumerate() {
        let total: f64 = row
            .iter()
            .enumerate()
            .map(|(s, &v)| binomial_f64(ld.p(), s) * v)
            .sum();
        if (total - 1.0).abs() > 1e-9 {
            return fail(
                &format!("internal invariant violated: pi row {g} sums to {total}"),
                4,
            );
        }
    }

    let body = FitJson {
        group_labels: ds.group_labels().to_vec(),
        variables: outcome
            .kept()
            .iter()
            .map(|&j| ds.variable_names()[j].clone())
            .collect(),
        p_star: outcome.p_star(),
        removed_variables: outcome
            .removed()
            .iter()
            .map(|r| RemovedVariableJson {
                name: ds.variable_names()[r.index].clone(),
                absences: r.absences,
            })
            .collect(),
        lambda_hat,
        criterion_value,
        pi: params.pi.clone(),
        mu: params.mu.clone(),
        sigma_diag: params.sigma.diagonal(),
        elapsed_seconds: start.elapsed().as_secs_f64(),
    };
    let json = match serde_json::to_string_pretty(&body) {
        Ok(j) => j,
        Err(e) => return fail(&format!("serialization: {e}"), 4),
    };
    let summary = format!(
        "fitted p* = {} ({} removed), lambda = {:.6}, criterion = {:.6}",
        body.p_star,
        body.removed_variables.len(),
        lambda_hat,
        criterion_value,
    );
    match emit_report(args.data.output.as_deref(), &json, &summary) {
        Ok(()) => 0,
        Err(e) => fail(&e, 2),
    }
}

fn binomial_f64(p: usize, s: usize) -> f64 {
    let s = s.min(p - s);
    let mut c = 1.0f64;
    for t in 0..s {
        c = c * (p - t) as f64 / (t + 1) as f64;
    }
    c
}

fn cmd_simulate(args: &SimulateArgs) -> i32 {
    let defaults = ScenarioDefaults {
        replicates: args.replicates,
        permutations: args.permutations,
        alpha: args.alpha,
        seed: args.seed,
    };
    let scenario_list: Vec<Scenario> = if args.paper_grid {
        paper_grid(args.replicates, args.permutations, args.alpha, args.seed)
    } else {
        let path = match &args.scenarios {
            Some(p) => p,
            None => return fail("either --scenarios or --paper-grid is required", 2),
        };
        let text = match std::fs::read_to_string(path) {
            Ok(t) => t,
            Err(e) => return fail(&format!("cannot read {}: {e}", path.display()), 2),
        };
        match scenarios::parse_scenarios(&text, &defaults) {
            Ok(s) => s,
            Err(e) => return fail(&e, 2),
        }
    };

    let mut rows = Vec::with_capacity(scenario_list.len());
    for sc in &scenario_list {
        let mut row = SimulationRow {
            k: sc.groups,
            n_k: sc.group_size,
            p: sc.variables,
            rho: sc.rho,
            c1: sc.c1,
            c2: sc.c2,
            pi_j1: sc.pi_absence,
            replicates: sc.replicates,
            permutations: sc.permutations,
            alpha: sc.alpha,
            seed: sc.seed,
            rejection_rate: None,
            mc_error: None,
            mean_p_star: None,
            mean_lambda: None,
            mean_lambda0: None,
            failed_replicates: None,
            runtime_seconds: None,
        };
        if !args.dry_run {
            match run_scenario(sc) {
                Ok(result) => {
                    row.rejection_rate = Some(result.rejection_rate);
                    row.mc_error = Some(result.mc_error);
                    row.mean_p_star = Some(result.mean_p_star);
                    row.mean_lambda = Some(result.mean_lambda);
                    row.mean_lambda0 = Some(result.mean_lambda0);
                    row.failed_replicates = Some(result.failed_replicates);
                    row.runtime_seconds = Some(result.runtime_seconds);
                }
                Err(e) => return core_fail(&e),
            }
        }
        rows.push(row);
    }

    let as_json = args
        .output
        .as_deref()
        .is_some_and(|p| p.extension().is_some_and(|e| e == "json"));
    let table = if as_json {
        match serde_json::to_string_pretty(&rows) {
            Ok(j) => j,
            Err(e) => return fail(&format!("serialization: {e}"), 4),
        }
    } else {
        let mut text = String::from(SIMULATION_CSV_HEADER);
        text.push('\n');
        for row in &rows {
            text.push_str(&row.csv_line());
            text.push('\n');
        }
        text
    };

    let summary = if args.dry_run {
        format!("enumerated {} scenarios (dry run)", rows.len())
    } else {
        format!("ran {} scenarios", rows.len())
    };
    match args.output.as_deref() {
        Some(path) => {
            if let Err(e) = std::fs::write(path, table) {
                return fail(&format!("cannot write {}: {e}", path.display()), 2);
            }
            println!("{summary}: {}", path.display());
        }
        None => {
            print!("{table}");
            eprintln!("{summary}");
        }
    }
    0
}
