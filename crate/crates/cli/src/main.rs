//! `exdag` — experiment harness for sparse continuous structure
//! learning.
//!
//! Subcommands: `run` executes an experiment described by a TOML config
//! (with `--set key.path=value` overrides), `gen` emits a synthetic
//! dataset, `score` compares an estimated adjacency against a truth
//! matrix, `check` evaluates recovery assumptions on a dataset, and
//! `version` prints the tool version.
//!
//! Exit codes: 0 on success, 1 for configuration or usage errors, 2
//! for failures during an otherwise well-configured run.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{Context, Result};
use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use exdag_core::metrics::{assumption_report, structural_score, BoolAdjacency};
use exdag_core::objective::stability_threshold;
use exdag_core::sem::{generate_dataset, GraphSpec};

use exdag_cli::dataio::{fmt_float, read_dataset_csv, read_matrix_csv, write_dataset_csv, write_matrix_csv};
use exdag_cli::{config, experiments, report};

#[derive(Parser)]
#[command(
    name = "exdag",
    version,
    about = "Sparse structure learning with exact-zero acyclicity certificates",
    disable_help_subcommand = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a TOML config file.
    Run {
        /// Path to the experiment configuration.
        config: PathBuf,
        /// Override a config field by dotted path, e.g.
        /// `--set optim.lambda1=0.5` or `--set seeds=[1,2,3]`.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
    },
    /// Generate a synthetic dataset and its ground-truth adjacency.
    Gen {
        /// Number of variables.
        #[arg(long, default_value_t = 10)]
        d: usize,
        /// Number of edges in the random DAG.
        #[arg(long, default_value_t = 10)]
        edges: usize,
        /// Smallest edge-weight magnitude.
        #[arg(long, default_value_t = 0.5)]
        weight_low: f64,
        /// Largest edge-weight magnitude.
        #[arg(long, default_value_t = 1.0)]
        weight_high: f64,
        /// Seed for the graph draw and the noise.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Number of samples.
        #[arg(long, default_value_t = 1000)]
        n: usize,
        /// Noise standard deviation.
        #[arg(long, default_value_t = 1.0)]
        noise_std: f64,
        /// Output directory for `data.csv` and `w_true.csv`.
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Score an estimated adjacency matrix against a ground truth.
    Score {
        /// CSV file with the estimated weighted adjacency.
        w_est: PathBuf,
        /// CSV file with the true weighted adjacency.
        truth: PathBuf,
        /// Support threshold applied to the estimate before scoring.
        #[arg(long, default_value_t = 0.0)]
        tau: f64,
    },
    /// Check recovery assumptions of a dataset against a known truth.
    Check {
        /// CSV file with the sample matrix.
        data: PathBuf,
        /// CSV file with the true weighted adjacency.
        truth: PathBuf,
        /// ℓ₁ weight the assumptions are checked against.
        #[arg(long, default_value_t = 1.0)]
        lambda1: f64,
        /// Treat the first data row as values rather than a header.
        #[arg(long)]
        no_header: bool,
        /// Skip centering the data columns.
        #[arg(long)]
        no_center: bool,
    },
    /// Print the tool version.
    Version,
}

/// Which phase an error belongs to decides the exit code.
enum Failure {
    /// Bad configuration or unusable input: exit code 1.
    Config(anyhow::Error),
    /// A well-configured run that failed to execute: exit code 2.
    Run(anyhow::Error),
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // Help and version requests are successes; everything else
            // (unknown subcommand, bad flag) prints usage and exits 1.
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(err)) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
        Err(Failure::Run(err)) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Run { config, set } => cmd_run(&config, &set),
        Command::Gen { d, edges, weight_low, weight_high, seed, n, noise_std, out } => {
            cmd_gen(d, edges, weight_low, weight_high, seed, n, noise_std, &out)
        }
        Command::Score { w_est, truth, tau } => cmd_score(&w_est, &truth, tau),
        Command::Check { data, truth, lambda1, no_header, no_center } => {
            cmd_check(&data, &truth, lambda1, !no_header, !no_center)
        }
        Command::Version => {
            println!("exdag {}", env!("CARGO_PKG_VERSION"));
            Ok(())
        }
    }
}

fn cmd_run(config_path: &Path, overrides: &[String]) -> Result<(), Failure> {
    let cfg = config::load_config(config_path, overrides).map_err(Failure::Config)?;
    let start = Instant::now();
    let bundle = experiments::run_experiment(&cfg).map_err(Failure::Run)?;
    let total = start.elapsed().as_secs_f64();
    let files = report::write_bundle(&cfg, &bundle, total).map_err(Failure::Run)?;
    for file in &files {
        println!("wrote {}", file.display());
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_gen(
    d: usize,
    edges: usize,
    weight_low: f64,
    weight_high: f64,
    seed: u64,
    n: usize,
    noise_std: f64,
    out: &Path,
) -> Result<(), Failure> {
    let graph = GraphSpec { d, num_edges: edges, weight_low, weight_high, seed };
    graph
        .validate()
        .map_err(|e| Failure::Config(anyhow::anyhow!("graph: {e:?}")))?;
    if n == 0 {
        return Err(Failure::Config(anyhow::anyhow!("n: must be positive")));
    }
    if !(noise_std > 0.0) {
        return Err(Failure::Config(anyhow::anyhow!("noise_std: must be positive")));
    }
    let dataset = generate_dataset(&graph, n, noise_std, seed)
        .map_err(|e| Failure::Run(anyhow::anyhow!("simulation failed: {e:?}")))?;
    let write = || -> Result<(PathBuf, PathBuf)> {
        let data_path = out.join("data.csv");
        let truth_path = out.join("w_true.csv");
        write_dataset_csv(&data_path, &dataset.x)?;
        let truth = dataset.w_true.as_ref().context("generated dataset must carry its truth")?;
        write_matrix_csv(&truth_path, truth)?;
        Ok((data_path, truth_path))
    };
    let (data_path, truth_path) = write().map_err(Failure::Run)?;
    println!("wrote {}", data_path.display());
    println!("wrote {}", truth_path.display());
    Ok(())
}

fn cmd_score(w_est_path: &Path, truth_path: &Path, tau: f64) -> Result<(), Failure> {
    if !(tau >= 0.0) {
        return Err(Failure::Config(anyhow::anyhow!("tau: must be nonnegative")));
    }
    let w_est = read_matrix_csv(w_est_path).map_err(Failure::Config)?;
    let truth = read_matrix_csv(truth_path).map_err(Failure::Config)?;
    if w_est.rows() != truth.rows() {
        return Err(Failure::Config(anyhow::anyhow!(
            "matrix sizes differ: estimate is {}x{}, truth is {}x{}",
            w_est.rows(),
            w_est.cols(),
            truth.rows(),
            truth.cols()
        )));
    }
    let score = structural_score(&w_est, &truth, tau);
    println!("shd={}", score.shd);
    println!("tpr={}", fmt_float(score.tpr));
    println!("fdr={}", fmt_float(score.fdr));
    println!("nnz={}", score.nnz);
    println!("exact_zero_count={}", score.exact_zero_count);
    println!("sparsity={}", fmt_float(score.sparsity()));
    println!("support_match={}", score.support_match);
    println!("sign_consistent={}", score.sign_consistent);
    Ok(())
}

fn cmd_check(
    data_path: &Path,
    truth_path: &Path,
    lambda1: f64,
    has_header: bool,
    center: bool,
) -> Result<(), Failure> {
    if !(lambda1 > 0.0) {
        return Err(Failure::Config(anyhow::anyhow!("lambda1: must be positive")));
    }
    let x = read_dataset_csv(data_path, has_header, center).map_err(Failure::Config)?;
    let truth = read_matrix_csv(truth_path).map_err(Failure::Config)?;
    if truth.rows() != x.cols() {
        return Err(Failure::Config(anyhow::anyhow!(
            "truth matrix is {}x{} but the dataset has {} variables",
            truth.rows(),
            truth.cols(),
            x.cols()
        )));
    }
    let report = assumption_report(&x, &truth, lambda1);
    let truth_support = BoolAdjacency::from_weights(&truth);
    println!("gamma_hat={}", fmt_float(report.gamma_hat));
    println!("kappa_hat={}", fmt_float(report.kappa_hat));
    println!("beta_min_ok={}", report.beta_min_ok);
    println!("stability_ok={}", report.stability_ok);
    println!("stability_threshold={}", fmt_float(stability_threshold(&x)));
    println!("checked_columns={}", report.checked_columns);
    let singular: Vec<String> =
        report.singular_columns.iter().map(|c| c.to_string()).collect();
    println!("singular_columns=[{}]", singular.join(","));
    println!("truth_edges={}", truth_support.num_edges());
    Ok(())
}
