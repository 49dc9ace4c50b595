//! The experiment protocols behind `exdag run`.
//!
//! Every protocol turns a validated [`ExperimentConfig`] into a
//! [`ReportBundle`]: one CSV table per sweep, a JSON summary that
//! mirrors the tables, and real wall times for the manifest. All
//! randomness flows from the configured seeds, runs at different grid
//! points share no mutable state, and rows are emitted in a fixed
//! order, so reruns are byte-identical (timings excepted; see
//! `runner.record_wall_time`).
//!
//! Two row schemas are shared across protocols. Gradient sweeps emit
//! `[constraint, param, t_or_rho, grad_fro_norm, h_value]`, where
//! `param` is the kind's governing parameter (`s` for logdet, `ε` for
//! aac/ahoc, `α` for sahoc, `δ` for smoothed-ahoc, empty for exp).
//! Solver sweeps emit the benchmark schema `[method, d, seed, lambda1,
//! delta, shd, nnz, exact_zero_count, sparsity, tpr, fdr, final_h_exact,
//! final_h_smoothed, status, wall_seconds]`; score columns are left
//! empty when no ground truth is available, and a run that fails is
//! recorded in its row's status without aborting the sweep.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use exdag_core::constraint::constraint_grad;
use exdag_core::metrics::structural_score;
use exdag_core::optim::{adam_baseline, alm_outer, IterRecord};
use exdag_core::sem::{generate_dataset, near_cyclic_instance, simulate_sem, GraphSpec};
use exdag_core::{ConstraintKind, ConstraintSpec, DenseMatrix, OptimConfig, RunReport};
use serde_json::json;

use crate::config::{ExperimentConfig, ExperimentKind};
use crate::dataio::{fmt_float, read_dataset_csv, read_matrix_csv};
use crate::report::{table_to_json, ReportBundle, SweepTable, Timing};

/// Columns of the gradient-sweep tables.
pub const GRAD_SWEEP_HEADER: [&str; 5] =
    ["constraint", "param", "t_or_rho", "grad_fro_norm", "h_value"];

/// Columns of the benchmark-style tables.
pub const BENCHMARK_HEADER: [&str; 15] = [
    "method",
    "d",
    "seed",
    "lambda1",
    "delta",
    "shd",
    "nnz",
    "exact_zero_count",
    "sparsity",
    "tpr",
    "fdr",
    "final_h_exact",
    "final_h_smoothed",
    "status",
    "wall_seconds",
];

/// Columns of the per-step trace tables.
pub const TRACE_HEADER: [&str; 13] = [
    "seed",
    "lambda1",
    "outer",
    "inner",
    "step",
    "total",
    "fit",
    "h",
    "w_norm",
    "nnz",
    "eta",
    "gmap",
    "pattern_changed",
];

/// Dispatch a validated configuration to its protocol.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ReportBundle> {
    match cfg.experiment {
        ExperimentKind::GradVsRho => grad_vs_rho(cfg),
        ExperimentKind::GradVsMagnitude => grad_vs_magnitude(cfg),
        ExperimentKind::L1Synergy => l1_synergy(cfg),
        ExperimentKind::SparseBenchmark => sparse_benchmark(cfg),
        ExperimentKind::NearCyclic => near_cyclic(cfg),
        ExperimentKind::DeltaSensitivity => delta_sensitivity(cfg),
        ExperimentKind::LambdaTrajectory => lambda_trajectory(cfg),
        ExperimentKind::Scalability => scalability(cfg),
        ExperimentKind::FitCsv => fit_csv(cfg),
    }
}

/// `count` log-spaced points from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    assert!(count >= 2, "a grid needs at least two points");
    assert!(lo > 0.0 && lo <= hi, "grid endpoints must satisfy 0 < lo <= hi");
    let ratio = (hi / lo).ln();
    let mut grid: Vec<f64> = (0..count)
        .map(|i| lo * (ratio * i as f64 / (count - 1) as f64).exp())
        .collect();
    grid[count - 1] = hi;
    grid
}

/// The 3-cycle `0→1→2→0` with equal weights.
fn three_cycle(weight: f64) -> DenseMatrix {
    let mut w = DenseMatrix::zeros(3, 3);
    w.set(0, 1, weight);
    w.set(1, 2, weight);
    w.set(2, 0, weight);
    w
}

/// The ±1 pattern of a weighted support.
fn sign_pattern(w: &DenseMatrix) -> DenseMatrix {
    let mut u = DenseMatrix::zeros(w.rows(), w.cols());
    for i in 0..w.rows() {
        for j in 0..w.cols() {
            let v = w.get(i, j);
            if v > 0.0 {
                u.set(i, j, 1.0);
            } else if v < 0.0 {
                u.set(i, j, -1.0);
            }
        }
    }
    u
}

fn scaled(u: &DenseMatrix, t: f64) -> DenseMatrix {
    let mut m = u.clone();
    for v in m.as_mut_slice() {
        *v *= t;
    }
    m
}

/// The governing parameter rendered into the sweep `param` column.
fn kind_param(spec: &ConstraintSpec) -> String {
    match spec.kind {
        ConstraintKind::Exp => String::new(),
        ConstraintKind::LogDet => fmt_float(spec.s),
        ConstraintKind::Aac | ConstraintKind::Ahoc => fmt_float(spec.epsilon),
        ConstraintKind::SAhoc => fmt_float(spec.alpha),
        ConstraintKind::SmoothedAhoc => fmt_float(spec.delta),
    }
}

/// Run `count` independent jobs, optionally on a worker pool. Results
/// come back in job order either way.
fn run_jobs<T, F>(workers: usize, count: usize, job: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync,
{
    if workers <= 1 || count <= 1 {
        return (0..count).map(job).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .expect("worker pool construction must succeed");
    pool.install(|| {
        use rayon::prelude::*;
        (0..count).into_par_iter().map(|i| job(i)).collect()
    })
}

/// One solver execution inside a sweep, with everything needed to build
/// its row and the summary aggregates.
struct MethodRun {
    method: String,
    d: usize,
    seed: u64,
    lambda1: f64,
    delta: f64,
    tau: f64,
    report: Option<RunReport>,
    truth: Option<DenseMatrix>,
    wall: f64,
}

impl MethodRun {
    fn status_name(&self) -> &str {
        match &self.report {
            Some(r) => r.status.name(),
            None => "panic",
        }
    }

    /// Build the benchmark row. Score columns stay empty without truth.
    fn row(&self, record_wall_time: bool) -> Vec<String> {
        let mut cells = vec![
            self.method.clone(),
            self.d.to_string(),
            self.seed.to_string(),
            fmt_float(self.lambda1),
            fmt_float(self.delta),
        ];
        match &self.report {
            Some(report) => {
                let offdiag = self.d * self.d - self.d;
                match &self.truth {
                    Some(truth) => {
                        let score = structural_score(&report.final_w, truth, self.tau);
                        cells.push(score.shd.to_string());
                        cells.push(score.nnz.to_string());
                        cells.push(score.exact_zero_count.to_string());
                        cells.push(fmt_float(score.sparsity()));
                        cells.push(fmt_float(score.tpr));
                        cells.push(fmt_float(score.fdr));
                    }
                    None => {
                        let nnz = report.final_w.count_nonzero();
                        cells.push(String::new());
                        cells.push(nnz.to_string());
                        cells.push((offdiag - nnz).to_string());
                        cells.push(fmt_float((offdiag - nnz) as f64 / offdiag as f64));
                        cells.push(String::new());
                        cells.push(String::new());
                    }
                }
                cells.push(fmt_float(report.final_h_unsmoothed));
                cells.push(fmt_float(report.final_h_smoothed));
                cells.push(report.status.name().to_string());
            }
            None => {
                for _ in 0..8 {
                    cells.push(String::new());
                }
                cells.push("panic".to_string());
            }
        }
        cells.push(fmt_float(if record_wall_time { self.wall } else { 0.0 }));
        cells
    }

    fn timing(&self) -> Timing {
        Timing {
            label: format!("{}-seed{}-lambda{}-delta{}", self.method, self.seed, self.lambda1, self.delta),
            seconds: self.wall,
        }
    }

    fn shd(&self) -> Option<usize> {
        let report = self.report.as_ref()?;
        let truth = self.truth.as_ref()?;
        Some(structural_score(&report.final_w, truth, self.tau).shd)
    }

    fn sparsity(&self) -> Option<f64> {
        let report = self.report.as_ref()?;
        let offdiag = (self.d * self.d - self.d) as f64;
        let nnz = report.final_w.count_nonzero() as f64;
        Some((offdiag - nnz) / offdiag)
    }

    fn h_exact_zero(&self) -> Option<bool> {
        self.report.as_ref().map(|r| r.h_exact_zero)
    }
}

/// Execute the proximal-gradient solver on one dataset, catching
/// panics so a sweep survives a failed run.
fn timed_spg(
    x: &DenseMatrix,
    spec: &ConstraintSpec,
    optim: &OptimConfig,
    seed: u64,
) -> (Option<RunReport>, f64) {
    let start = Instant::now();
    let outcome = catch_unwind(AssertUnwindSafe(|| alm_outer(x, spec, optim, None)));
    let wall = start.elapsed().as_secs_f64();
    match outcome {
        Ok(mut report) => {
            report.wall_seconds = wall;
            report.seeds = vec![seed];
            (Some(report), wall)
        }
        Err(_) => (None, wall),
    }
}

fn timed_adam(
    x: &DenseMatrix,
    spec: &ConstraintSpec,
    optim: &OptimConfig,
    adam: &exdag_core::optim::AdamParams,
    seed: u64,
) -> (Option<RunReport>, f64) {
    let start = Instant::now();
    let outcome = catch_unwind(AssertUnwindSafe(|| adam_baseline(x, spec, optim, adam)));
    let wall = start.elapsed().as_secs_f64();
    match outcome {
        Ok(mut report) => {
            report.wall_seconds = wall;
            report.seeds = vec![seed];
            (Some(report), wall)
        }
        Err(_) => (None, wall),
    }
}

fn spg_method_name(kind: ConstraintKind) -> String {
    format!("spg-{}", kind.name())
}

/// Generate the synthetic dataset for one seed: the seed drives the
/// graph draw and, on a separate stream, the noise.
fn dataset_for_seed(cfg: &ExperimentConfig, graph: &GraphSpec, seed: u64) -> (DenseMatrix, DenseMatrix) {
    let graph_seeded = GraphSpec { seed, ..*graph };
    let data = generate_dataset(&graph_seeded, cfg.data.n, cfg.data.noise_std, seed)
        .expect("validated graph spec must generate");
    let truth = data.w_true.clone().expect("generated datasets carry their truth");
    (data.x, truth)
}

fn trace_rows(seed: u64, lambda1: f64, trace: &[IterRecord]) -> Vec<Vec<String>> {
    trace
        .iter()
        .map(|r| {
            vec![
                seed.to_string(),
                fmt_float(lambda1),
                r.outer.to_string(),
                r.inner.to_string(),
                r.step.to_string(),
                fmt_float(r.total),
                fmt_float(r.fit),
                fmt_float(r.h),
                fmt_float(r.w_norm),
                r.nonzero_count.to_string(),
                fmt_float(r.eta),
                fmt_float(r.gmap),
                r.pattern_changed.to_string(),
            ]
        })
        .collect()
}

fn median_usize(values: &mut Vec<usize>) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_unstable();
    let n = values.len();
    Some(if n % 2 == 1 {
        values[n / 2] as f64
    } else {
        (values[n / 2 - 1] + values[n / 2]) as f64 / 2.0
    })
}

fn push_runs(
    bundle: &mut ReportBundle,
    table: &mut SweepTable,
    runs: &[MethodRun],
    record_wall_time: bool,
) {
    for run in runs {
        table.rows.push(run.row(record_wall_time));
        bundle.timings.push(run.timing());
    }
}

fn method_aggregates(runs: &[MethodRun], method: &str) -> serde_json::Value {
    let mine: Vec<&MethodRun> = runs.iter().filter(|r| r.method == method).collect();
    let mut shds: Vec<usize> = mine.iter().filter_map(|r| r.shd()).collect();
    let statuses: Vec<&str> = mine.iter().map(|r| r.status_name()).collect();
    let sparsities: Vec<f64> = mine.iter().filter_map(|r| r.sparsity()).collect();
    let min_sparsity = sparsities.iter().cloned().fold(f64::INFINITY, f64::min);
    let all_h_exact_zero =
        !mine.is_empty() && mine.iter().all(|r| r.h_exact_zero().unwrap_or(false));
    json!({
        "method": method,
        "runs": mine.len(),
        "median_shd": median_usize(&mut shds),
        "min_sparsity": if min_sparsity.is_finite() { Some(min_sparsity) } else { None },
        "all_h_exact_zero": all_h_exact_zero,
        "statuses": statuses,
    })
}

// --- gradient sweeps ---------------------------------------------------

/// Constraint gradients on the 3-cycle as `ρ(W∘W)` sweeps up to one.
/// The cycle weight is `√ρ`, so the squared-weight matrix has spectral
/// radius exactly `ρ`.
fn grad_vs_rho(cfg: &ExperimentConfig) -> Result<ReportBundle> {
    let grid = log_grid(cfg.sweep.rho_min, cfg.sweep.rho_max, cfg.sweep.grid_points);
    let mut table = SweepTable::new("grad_vs_rho", &GRAD_SWEEP_HEADER);
    for &kind in &cfg.sweep.kinds {
        let spec = ConstraintSpec { kind, ..cfg.constraint };
        spec.validate().map_err(|e| anyhow::anyhow!("constraint: {e}"))?;
        for &rho in &grid {
            let w = three_cycle(rho.sqrt());
            let eval = constraint_grad(&spec, &w);
            table.rows.push(vec![
                kind.name().to_string(),
                kind_param(&spec),
                fmt_float(rho),
                fmt_float(eval.gradient.frobenius_norm()),
                fmt_float(eval.value),
            ]);
        }
    }
    let mut bundle = ReportBundle::new(cfg.experiment.name());
    bundle.summary = json!({
        "experiment": cfg.experiment.name(),
        "grid_points": grid.len(),
        "kinds": cfg.sweep.kinds.iter().map(|k| k.name()).collect::<Vec<_>>(),
        "rows": table.rows.len(),
        "tables": [table_to_json(&table)],
    });
    bundle.tables.push(table);
    Ok(bundle)
}

/// Constraint gradients along the ray `W = tU` for a fixed ±1 pattern
/// `U` drawn on a random DAG support.
fn grad_vs_magnitude(cfg: &ExperimentConfig) -> Result<ReportBundle> {
    let grid = log_grid(cfg.sweep.t_min, cfg.sweep.t_max, cfg.sweep.grid_points);
    let support = exdag_core::sem::sample_er_dag(&cfg.graph)
        .map_err(|e| anyhow::anyhow!("graph: {e:?}"))?;
    let u = sign_pattern(&support);
    let mut table = SweepTable::new("grad_vs_magnitude", &GRAD_SWEEP_HEADER);
    for &kind in &cfg.sweep.kinds {
        let spec = ConstraintSpec { kind, ..cfg.constraint };
        spec.validate().map_err(|e| anyhow::anyhow!("constraint: {e}"))?;
        for &t in &grid {
            let w = scaled(&u, t);
            let eval = constraint_grad(&spec, &w);
            table.rows.push(vec![
                kind.name().to_string(),
                kind_param(&spec),
                fmt_float(t),
                fmt_float(eval.gradient.frobenius_norm()),
                fmt_float(eval.value),
            ]);
        }
    }
    let mut bundle = ReportBundle::new(cfg.experiment.name());
    bundle.summary = json!({
        "experiment": cfg.experiment.name(),
        "pattern_nnz": u.count_nonzero(),
        "grid_points": grid.len(),
        "kinds": cfg.sweep.kinds.iter().map(|k| k.name()).collect::<Vec<_>>(),
        "rows": table.rows.len(),
        "tables": [table_to_json(&table)],
    });
    bundle.tables.push(table);
    Ok(bundle)
}

// --- solver sweeps -----------------------------------------------------

/// The headline benchmark: the proximal solver per seed, plus a dense
/// Adam baseline on the unnormalized trace-exponential constraint.
fn sparse_benchmark(cfg: &ExperimentConfig) -> Result<ReportBundle> {
    let workers = cfg.effective_workers();
    let spg_method = spg_method_name(cfg.constraint.kind);
    let runs: Vec<Vec<MethodRun>> = run_jobs(workers, cfg.seeds.len(), |i| {
        let seed = cfg.seeds[i];
        let (x, truth) = dataset_for_seed(cfg, &cfg.graph, seed);
        let mut out = Vec::new();
        let (report, wall) = timed_spg(&x, &cfg.constraint, &cfg.optim, seed);
        out.push(MethodRun {
            method: spg_method.clone(),
            d: cfg.graph.d,
            seed,
            lambda1: cfg.optim.lambda1,
            delta: cfg.constraint.delta,
            tau: cfg.score.tau,
            report,
            truth: Some(truth.clone()),
            wall,
        });
        if cfg.runner.include_adam_baseline {
            let adam_spec = ConstraintSpec { kind: ConstraintKind::Exp, ..cfg.constraint };
            let (report, wall) = timed_adam(&x, &adam_spec, &cfg.optim, &cfg.adam, seed);
            out.push(MethodRun {
                method: "adam-exp".to_string(),
                d: cfg.graph.d,
                seed,
                lambda1: cfg.optim.lambda1,
                delta: cfg.constraint.delta,
                tau: cfg.score.adam_tau,
                report,
                truth: Some(truth),
                wall,
            });
        }
        out
    });
    let runs: Vec<MethodRun> = runs.into_iter().flatten().collect();

    let mut bundle = ReportBundle::new(cfg.experiment.name());
    let mut table = SweepTable::new("benchmark", &BENCHMARK_HEADER);
    push_runs(&mut bundle, &mut table, &runs, cfg.runner.record_wall_time);
    let mut methods = vec![spg_method.clone()];
    if cfg.runner.include_adam_baseline {
        methods.push("adam-exp".to_string());
    }
    bundle.summary = json!({
        "experiment": cfg.experiment.name(),
        "aggregates": methods.iter().map(|m| method_aggregates(&runs, m)).collect::<Vec<_>>(),
        "tables": [table_to_json(&table)],
    });
    bundle.tables.push(table);
    Ok(bundle)
}

/// Full solver runs across an ℓ₁ grid.
fn l1_synergy(cfg: &ExperimentConfig) -> Result<ReportBundle> {
    let lambdas = &cfg.sweep.lambda_values;
    let workers = cfg.effective_workers();
    let jobs = cfg.seeds.len() * lambdas.len();
    let method = spg_method_name(cfg.constraint.kind);
    let runs: Vec<MethodRun> = run_jobs(workers, jobs, |idx| {
        let seed = cfg.seeds[idx / lambdas.len()];
        let lambda1 = lambdas[idx % lambdas.len()];
        let (x, truth) = dataset_for_seed(cfg, &cfg.graph, seed);
        let optim = OptimConfig { lambda1, ..cfg.optim };
        let (report, wall) = timed_spg(&x, &cfg.constraint, &optim, seed);
        MethodRun {
            method: method.clone(),
            d: cfg.graph.d,
            seed,
            lambda1,
            delta: cfg.constraint.delta,
            tau: cfg.score.tau,
            report,
            truth: Some(truth),
            wall,
        }
    });

    let mut bundle = ReportBundle::new(cfg.experiment.name());
    let mut table = SweepTable::new("l1_synergy", &BENCHMARK_HEADER);
    push_runs(&mut bundle, &mut table, &runs, cfg.runner.record_wall_time);
    let per_lambda: Vec<serde_json::Value> = lambdas
        .iter()
        .map(|&l| {
            let mine: Vec<&MethodRun> = runs.iter().filter(|r| r.lambda1 == l).collect();
            let mut shds: Vec<usize> = mine.iter().filter_map(|r| r.shd()).collect();
            let nnz: Vec<usize> = mine
                .iter()
                .filter_map(|r| r.report.as_ref().map(|rep| rep.final_w.count_nonzero()))
                .collect();
            json!({
                "lambda1": l,
                "median_shd": median_usize(&mut shds),
                "nnz": nnz,
                "all_h_exact_zero": !mine.is_empty()
                    && mine.iter().all(|r| r.h_exact_zero().unwrap_or(false)),
            })
        })
        .collect();
    bundle.summary = json!({
        "experiment": cfg.experiment.name(),
        "per_lambda": per_lambda,
        "tables": [table_to_json(&table)],
    });
    bundle.tables.push(table);
    Ok(bundle)
}

/// Final structure as a function of the smoothing width δ.
fn delta_sensitivity(cfg: &ExperimentConfig) -> Result<ReportBundle> {
    let deltas = &cfg.sweep.delta_values;
    let workers = cfg.effective_workers();
    let jobs = cfg.seeds.len() * deltas.len();
    let method = spg_method_name(cfg.constraint.kind);
    let runs: Vec<MethodRun> = run_jobs(workers, jobs, |idx| {
        let seed = cfg.seeds[idx / deltas.len()];
        let delta = deltas[idx % deltas.len()];
        let (x, truth) = dataset_for_seed(cfg, &cfg.graph, seed);
        let spec = ConstraintSpec { delta, ..cfg.constraint };
        let (report, wall) = timed_spg(&x, &spec, &cfg.optim, seed);
        MethodRun {
            method: method.clone(),
            d: cfg.graph.d,
            seed,
            lambda1: cfg.optim.lambda1,
            delta,
            tau: cfg.score.tau,
            report,
            truth: Some(truth),
            wall,
        }
    });

    let mut bundle = ReportBundle::new(cfg.experiment.name());
    let mut table = SweepTable::new("delta_sensitivity", &BENCHMARK_HEADER);
    push_runs(&mut bundle, &mut table, &runs, cfg.runner.record_wall_time);
    let per_seed: Vec<serde_json::Value> = cfg
        .seeds
        .iter()
        .map(|&s| {
            let shds: Vec<Option<usize>> =
                runs.iter().filter(|r| r.seed == s).map(|r| r.shd()).collect();
            let identical = shds.first().map_or(false, |first| {
                first.is_some() && shds.iter().all(|x| x == first)
            });
            json!({ "seed": s, "shd_per_delta": shds, "identical": identical })
        })
        .collect();
    bundle.summary = json!({
        "experiment": cfg.experiment.name(),
        "delta_values": deltas,
        "per_seed": per_seed,
        "tables": [table_to_json(&table)],
    });
    bundle.tables.push(table);
    Ok(bundle)
}

/// Per-step iterate norms at different ℓ₁ weights. Emits both a run
/// table and a full trace table; the trace honors `optim.trace_every`.
fn lambda_trajectory(cfg: &ExperimentConfig) -> Result<ReportBundle> {
    let lambdas = &cfg.sweep.lambda_values;
    let workers = cfg.effective_workers();
    let jobs = cfg.seeds.len() * lambdas.len();
    let method = spg_method_name(cfg.constraint.kind);
    let runs: Vec<MethodRun> = run_jobs(workers, jobs, |idx| {
        let seed = cfg.seeds[idx / lambdas.len()];
        let lambda1 = lambdas[idx % lambdas.len()];
        let (x, truth) = dataset_for_seed(cfg, &cfg.graph, seed);
        let optim = OptimConfig { lambda1, ..cfg.optim };
        let (report, wall) = timed_spg(&x, &cfg.constraint, &optim, seed);
        MethodRun {
            method: method.clone(),
            d: cfg.graph.d,
            seed,
            lambda1,
            delta: cfg.constraint.delta,
            tau: cfg.score.tau,
            report,
            truth: Some(truth),
            wall,
        }
    });

    let mut bundle = ReportBundle::new(cfg.experiment.name());
    let mut run_table = SweepTable::new("lambda_trajectory_runs", &BENCHMARK_HEADER);
    let mut trace_table = SweepTable::new("lambda_trajectory_trace", &TRACE_HEADER);
    push_runs(&mut bundle, &mut run_table, &runs, cfg.runner.record_wall_time);
    for run in &runs {
        if let Some(report) = &run.report {
            trace_table
                .rows
                .extend(trace_rows(run.seed, run.lambda1, &report.trace));
        }
    }
    let per_run: Vec<serde_json::Value> = runs
        .iter()
        .map(|run| {
            let first_outer_max_w_norm = run.report.as_ref().map(|report| {
                report
                    .trace
                    .iter()
                    .filter(|r| r.outer == 0)
                    .map(|r| r.w_norm)
                    .fold(0.0, f64::max)
            });
            json!({
                "seed": run.seed,
                "lambda1": run.lambda1,
                "status": run.status_name(),
                "first_outer_max_w_norm": first_outer_max_w_norm,
            })
        })
        .collect();
    bundle.summary = json!({
        "experiment": cfg.experiment.name(),
        "per_run": per_run,
        "tables": [table_to_json(&run_table)],
    });
    bundle.tables.push(run_table);
    bundle.tables.push(trace_table);
    Ok(bundle)
}

/// Recovery and wall time across growing problem sizes. Edge counts
/// scale with `d` in the proportion set by the base graph spec.
fn scalability(cfg: &ExperimentConfig) -> Result<ReportBundle> {
    let sizes = &cfg.sweep.d_values;
    let workers = cfg.effective_workers();
    let jobs = sizes.len() * cfg.seeds.len();
    let method = spg_method_name(cfg.constraint.kind);
    let runs: Vec<MethodRun> = run_jobs(workers, jobs, |idx| {
        let d = sizes[idx / cfg.seeds.len()];
        let seed = cfg.seeds[idx % cfg.seeds.len()];
        let num_edges = (d * cfg.graph.num_edges).div_ceil(cfg.graph.d).max(1);
        let graph = GraphSpec { d, num_edges, ..cfg.graph };
        let (x, truth) = dataset_for_seed(cfg, &graph, seed);
        let (report, wall) = timed_spg(&x, &cfg.constraint, &cfg.optim, seed);
        MethodRun {
            method: method.clone(),
            d,
            seed,
            lambda1: cfg.optim.lambda1,
            delta: cfg.constraint.delta,
            tau: cfg.score.tau,
            report,
            truth: Some(truth),
            wall,
        }
    });

    let mut bundle = ReportBundle::new(cfg.experiment.name());
    let mut table = SweepTable::new("scalability", &BENCHMARK_HEADER);
    push_runs(&mut bundle, &mut table, &runs, cfg.runner.record_wall_time);
    let per_size: Vec<serde_json::Value> = sizes
        .iter()
        .map(|&d| {
            let mine: Vec<&MethodRun> = runs.iter().filter(|r| r.d == d).collect();
            let mut shds: Vec<usize> = mine.iter().filter_map(|r| r.shd()).collect();
            json!({
                "d": d,
                "median_shd": median_usize(&mut shds),
                "statuses": mine.iter().map(|r| r.status_name()).collect::<Vec<_>>(),
            })
        })
        .collect();
    bundle.summary = json!({
        "experiment": cfg.experiment.name(),
        "per_size": per_size,
        "tables": [table_to_json(&table)],
    });
    bundle.tables.push(table);
    Ok(bundle)
}

/// Stress run on data whose generating weights form an almost-cyclic
/// 3-cycle. The estimate is scored against that cyclic truth, so a
/// nonzero distance is expected: the point is how the solver breaks
/// the cycle and whether it still certifies acyclicity exactly.
fn near_cyclic(cfg: &ExperimentConfig) -> Result<ReportBundle> {
    let truth = near_cyclic_instance();
    let workers = cfg.effective_workers();
    let method = spg_method_name(cfg.constraint.kind);
    let runs: Vec<MethodRun> = run_jobs(workers, cfg.seeds.len(), |i| {
        let seed = cfg.seeds[i];
        let x = simulate_sem(&truth, cfg.data.n, cfg.data.noise_std, seed, true)
            .expect("the stress instance is inside the simulable domain");
        let (report, wall) = timed_spg(&x, &cfg.constraint, &cfg.optim, seed);
        MethodRun {
            method: method.clone(),
            d: truth.rows(),
            seed,
            lambda1: cfg.optim.lambda1,
            delta: cfg.constraint.delta,
            tau: cfg.score.tau,
            report,
            truth: Some(truth.clone()),
            wall,
        }
    });

    let mut bundle = ReportBundle::new(cfg.experiment.name());
    let mut run_table = SweepTable::new("near_cyclic_runs", &BENCHMARK_HEADER);
    let mut trace_table = SweepTable::new("near_cyclic_trace", &TRACE_HEADER);
    push_runs(&mut bundle, &mut run_table, &runs, cfg.runner.record_wall_time);
    for run in &runs {
        if let Some(report) = &run.report {
            trace_table
                .rows
                .extend(trace_rows(run.seed, run.lambda1, &report.trace));
        }
    }
    bundle.summary = json!({
        "experiment": cfg.experiment.name(),
        "statuses": runs.iter().map(|r| r.status_name()).collect::<Vec<_>>(),
        "h_exact_zero": runs.iter().map(|r| r.h_exact_zero()).collect::<Vec<_>>(),
        "tables": [table_to_json(&run_table)],
    });
    bundle.tables.push(run_table);
    bundle.tables.push(trace_table);
    Ok(bundle)
}

/// Fit one external dataset. With a truth matrix the row is scored;
/// without one the score columns stay empty. The estimate itself is
/// written as `w_est.csv`.
fn fit_csv(cfg: &ExperimentConfig) -> Result<ReportBundle> {
    let path = cfg.data.path.as_ref().expect("validated fit-csv config carries a path");
    let x = read_dataset_csv(Path::new(path), cfg.data.has_header, cfg.data.center)
        .with_context(|| format!("cannot load dataset '{path}'"))?;
    let truth = match &cfg.data.truth_path {
        Some(tp) => {
            let t = read_matrix_csv(Path::new(tp))
                .with_context(|| format!("cannot load truth matrix '{tp}'"))?;
            if t.rows() != x.cols() {
                bail!(
                    "truth matrix '{tp}' is {}x{} but the dataset has {} variables",
                    t.rows(),
                    t.cols(),
                    x.cols()
                );
            }
            Some(t)
        }
        None => None,
    };
    let seed = cfg.seeds[0];
    let (report, wall) = timed_spg(&x, &cfg.constraint, &cfg.optim, seed);
    let run = MethodRun {
        method: spg_method_name(cfg.constraint.kind),
        d: x.cols(),
        seed,
        lambda1: cfg.optim.lambda1,
        delta: cfg.constraint.delta,
        tau: cfg.score.tau,
        report,
        truth,
        wall,
    };

    let w_est = run.report.as_ref().map(|r| r.final_w.clone());
    let mut bundle = ReportBundle::new(cfg.experiment.name());
    let mut table = SweepTable::new("fit", &BENCHMARK_HEADER);
    push_runs(&mut bundle, &mut table, &[run], cfg.runner.record_wall_time);
    let row_mirror: serde_json::Map<String, serde_json::Value> = BENCHMARK_HEADER
        .iter()
        .map(|s| s.to_string())
        .zip(table.rows[0].iter().map(|c| json!(c)))
        .collect();
    bundle.summary = json!({
        "experiment": cfg.experiment.name(),
        "n": x.rows(),
        "d": x.cols(),
        "row": serde_json::Value::Object(row_mirror),
        "tables": [table_to_json(&table)],
    });
    bundle.tables.push(table);
    if let Some(w) = w_est {
        bundle.matrices.push(("w_est".to_string(), w));
    }
    Ok(bundle)
}
