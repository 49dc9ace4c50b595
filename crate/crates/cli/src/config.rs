//! Experiment configuration: a single TOML tree, overridable from the
//! command line by dotted key paths.
//!
//! Every field except `experiment` has a default, so a minimal config is
//! just `experiment = "sparse-benchmark"`. Validation reports the
//! offending field by name and happens after overrides are applied, so a
//! bad `--set` is caught the same way as a bad file.

use std::fmt;
use std::fs;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use exdag_core::optim::AdamParams;
use exdag_core::sem::GraphSpec;
use exdag_core::{ConstraintKind, ConstraintSpec, OptimConfig};
use serde::{Deserialize, Serialize};

/// Schema version this build reads and writes.
pub const SCHEMA_VERSION: u32 = 1;

/// Which experiment protocol to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    /// Constraint gradient norms on a 3-cycle as its spectral radius
    /// approaches one.
    GradVsRho,
    /// Constraint gradient norms along a ray `W = tU` of shrinking
    /// magnitude.
    GradVsMagnitude,
    /// Full solver runs across an ℓ₁ grid: how sparsity interacts with
    /// the acyclicity certificate.
    L1Synergy,
    /// The headline sparse-recovery benchmark plus a dense Adam baseline.
    SparseBenchmark,
    /// Stress run on data generated from a nearly-cyclic weight matrix.
    NearCyclic,
    /// Final structure as a function of the smoothing width δ.
    DeltaSensitivity,
    /// Per-step iterate norms at different ℓ₁ weights.
    LambdaTrajectory,
    /// Wall time and recovery across growing problem sizes.
    Scalability,
    /// Fit a user-supplied dataset from a CSV file.
    FitCsv,
}

impl ExperimentKind {
    /// Stable kebab-case name, used for file naming and logs.
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::GradVsRho => "grad-vs-rho",
            ExperimentKind::GradVsMagnitude => "grad-vs-magnitude",
            ExperimentKind::L1Synergy => "l1-synergy",
            ExperimentKind::SparseBenchmark => "sparse-benchmark",
            ExperimentKind::NearCyclic => "near-cyclic",
            ExperimentKind::DeltaSensitivity => "delta-sensitivity",
            ExperimentKind::LambdaTrajectory => "lambda-trajectory",
            ExperimentKind::Scalability => "scalability",
            ExperimentKind::FitCsv => "fit-csv",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Where the sample matrix comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    /// Number of samples to simulate (generated data only).
    pub n: usize,
    /// Noise standard deviation for the simulated SEM.
    pub noise_std: f64,
    /// Path to an external dataset CSV; set for `fit-csv`.
    pub path: Option<String>,
    /// Path to a ground-truth adjacency CSV for scoring external data.
    pub truth_path: Option<String>,
    /// Whether the external CSV carries a header row.
    pub has_header: bool,
    /// Whether to subtract column means from external data.
    pub center: bool,
}

impl Default for DataConfig {
    fn default() -> Self {
        DataConfig {
            n: 1000,
            noise_std: 1.0,
            path: None,
            truth_path: None,
            has_header: true,
            center: true,
        }
    }
}

/// Grids used by the sweep experiments. Unused grids are ignored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    /// Constraint kinds to compare in the gradient sweeps.
    pub kinds: Vec<ConstraintKind>,
    /// Number of log-spaced grid points for `t` and ρ sweeps.
    pub grid_points: usize,
    /// Magnitude ray endpoints for `grad-vs-magnitude`.
    pub t_min: f64,
    pub t_max: f64,
    /// Spectral-radius endpoints for `grad-vs-rho`.
    pub rho_min: f64,
    pub rho_max: f64,
    /// Smoothing widths for `delta-sensitivity`.
    pub delta_values: Vec<f64>,
    /// ℓ₁ weights for `l1-synergy` and `lambda-trajectory`.
    pub lambda_values: Vec<f64>,
    /// Problem sizes for `scalability`; edges scale to match.
    pub d_values: Vec<usize>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            kinds: vec![
                ConstraintKind::LogDet,
                ConstraintKind::Aac,
                ConstraintKind::SmoothedAhoc,
            ],
            grid_points: 20,
            t_min: 1e-6,
            t_max: 1.0,
            rho_min: 0.5,
            rho_max: 0.9999,
            delta_values: vec![1e-10, 1e-7, 1e-4, 1e-2],
            lambda_values: vec![0.1, 1.0],
            d_values: vec![10, 20, 50],
        }
    }
}

/// Thresholds applied when scoring estimates against the truth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScoreConfig {
    /// Support threshold for proximal-gradient estimates. Zero: the
    /// exact nonzero pattern is the support.
    pub tau: f64,
    /// Support threshold for the dense Adam baseline, which never
    /// produces exact zeros and needs a cutoff to be scorable.
    pub adam_tau: f64,
}

impl Default for ScoreConfig {
    fn default() -> Self {
        ScoreConfig { tau: 0.0, adam_tau: 0.3 }
    }
}

/// Process-level execution knobs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunnerConfig {
    /// Worker threads for independent runs. `0` defers to the
    /// `EXDAG_WORKERS` environment variable, then to 1.
    pub workers: usize,
    /// When false, the `wall_seconds` column of every CSV row is written
    /// as zero so that reruns are byte-identical; real timings are still
    /// recorded in the manifest.
    pub record_wall_time: bool,
    /// Whether benchmark-style experiments also run the Adam baseline.
    pub include_adam_baseline: bool,
}

impl Default for RunnerConfig {
    fn default() -> Self {
        RunnerConfig { workers: 0, record_wall_time: true, include_adam_baseline: true }
    }
}

/// The whole experiment description. One TOML file, one tree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_schema_version")]
    pub schema_version: u32,
    pub experiment: ExperimentKind,
    #[serde(default = "default_output_dir")]
    pub output_dir: String,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub graph: GraphSpec,
    #[serde(default)]
    pub data: DataConfig,
    #[serde(default)]
    pub constraint: ConstraintSpec,
    #[serde(default)]
    pub optim: OptimConfig,
    #[serde(default)]
    pub adam: AdamParams,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default)]
    pub score: ScoreConfig,
    #[serde(default)]
    pub runner: RunnerConfig,
}

fn default_schema_version() -> u32 {
    SCHEMA_VERSION
}

fn default_output_dir() -> String {
    "out".to_string()
}

fn default_seeds() -> Vec<u64> {
    vec![0]
}

impl ExperimentConfig {
    /// Cross-field validation; every error names the field that caused
    /// it.
    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            bail!(
                "schema_version: unsupported value {} (this build reads version {})",
                self.schema_version,
                SCHEMA_VERSION
            );
        }
        if self.seeds.is_empty() {
            bail!("seeds: at least one seed is required");
        }
        if self.output_dir.is_empty() {
            bail!("output_dir: must not be empty");
        }
        self.constraint
            .validate()
            .map_err(|e| anyhow!("constraint: {e}"))?;
        self.optim.validate().map_err(|e| anyhow!("optim: {e}"))?;
        self.adam.validate().map_err(|e| anyhow!("adam: {e}"))?;
        self.graph.validate().map_err(|e| anyhow!("graph: {e:?}"))?;
        if self.data.n == 0 {
            bail!("data.n: must be positive");
        }
        if !(self.data.noise_std > 0.0) {
            bail!("data.noise_std: must be positive");
        }
        if !(self.score.tau >= 0.0) {
            bail!("score.tau: must be nonnegative");
        }
        if !(self.score.adam_tau >= 0.0) {
            bail!("score.adam_tau: must be nonnegative");
        }
        match self.experiment {
            ExperimentKind::GradVsRho => {
                self.require_kinds()?;
                self.require_grid_points()?;
                if !(self.sweep.rho_min > 0.0 && self.sweep.rho_min <= self.sweep.rho_max) {
                    bail!("sweep.rho_min/rho_max: need 0 < rho_min <= rho_max");
                }
                if !(self.sweep.rho_max < 1.0) {
                    bail!("sweep.rho_max: must stay below 1");
                }
            }
            ExperimentKind::GradVsMagnitude => {
                self.require_kinds()?;
                self.require_grid_points()?;
                if !(self.sweep.t_min > 0.0 && self.sweep.t_min <= self.sweep.t_max) {
                    bail!("sweep.t_min/t_max: need 0 < t_min <= t_max");
                }
            }
            ExperimentKind::L1Synergy | ExperimentKind::LambdaTrajectory => {
                if self.sweep.lambda_values.is_empty() {
                    bail!("sweep.lambda_values: at least one value is required");
                }
                if self.sweep.lambda_values.iter().any(|&l| !(l >= 0.0)) {
                    bail!("sweep.lambda_values: values must be nonnegative");
                }
            }
            ExperimentKind::DeltaSensitivity => {
                if self.sweep.delta_values.is_empty() {
                    bail!("sweep.delta_values: at least one value is required");
                }
                if self.sweep.delta_values.iter().any(|&d| !(d > 0.0)) {
                    bail!("sweep.delta_values: values must be positive");
                }
            }
            ExperimentKind::Scalability => {
                if self.sweep.d_values.is_empty() {
                    bail!("sweep.d_values: at least one value is required");
                }
                if self.sweep.d_values.iter().any(|&d| d < 2) {
                    bail!("sweep.d_values: sizes must be at least 2");
                }
            }
            ExperimentKind::FitCsv => {
                if self.data.path.is_none() {
                    bail!("data.path: required for the fit-csv experiment");
                }
            }
            ExperimentKind::SparseBenchmark | ExperimentKind::NearCyclic => {}
        }
        Ok(())
    }

    fn require_kinds(&self) -> Result<()> {
        if self.sweep.kinds.is_empty() {
            bail!("sweep.kinds: at least one constraint kind is required");
        }
        Ok(())
    }

    fn require_grid_points(&self) -> Result<()> {
        if self.sweep.grid_points < 2 {
            bail!("sweep.grid_points: at least two grid points are required");
        }
        Ok(())
    }

    /// Worker count after resolving `0` against the environment.
    pub fn effective_workers(&self) -> usize {
        if self.runner.workers > 0 {
            return self.runner.workers;
        }
        std::env::var("EXDAG_WORKERS")
            .ok()
            .and_then(|v| v.parse::<usize>().ok())
            .filter(|&w| w > 0)
            .unwrap_or(1)
    }
}

/// Parse a raw override value as TOML if possible, else keep it as a
/// string. `1e-3` becomes a float, `true` a bool, `[1, 2]` an array,
/// `logdet` a string.
fn parse_override_value(raw: &str) -> toml::Value {
    let snippet = format!("v = {raw}");
    if let Ok(table) = snippet.parse::<toml::Table>() {
        if let Some(v) = table.get("v") {
            return v.clone();
        }
    }
    toml::Value::String(raw.to_string())
}

/// Apply one `key.path=value` override into a parsed TOML tree,
/// creating intermediate tables as needed.
pub fn apply_override(table: &mut toml::Table, assignment: &str) -> Result<()> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| anyhow!("override '{assignment}' is not of the form key.path=value"))?;
    let key = key.trim();
    let parts: Vec<&str> = key.split('.').collect();
    if key.is_empty() || parts.iter().any(|p| p.is_empty()) {
        bail!("override '{assignment}' has an empty key segment");
    }
    let mut cursor = table;
    for part in &parts[..parts.len() - 1] {
        cursor = cursor
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .ok_or_else(|| anyhow!("override key '{key}': segment '{part}' is not a table"))?;
    }
    cursor.insert(parts[parts.len() - 1].to_string(), parse_override_value(raw.trim()));
    Ok(())
}

/// Load a config file, apply dotted-path overrides, deserialize and
/// validate.
pub fn load_config(path: &Path, overrides: &[String]) -> Result<ExperimentConfig> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("cannot read config file '{}'", path.display()))?;
    let mut table: toml::Table = text
        .parse()
        .with_context(|| format!("config file '{}' is not valid TOML", path.display()))?;
    for assignment in overrides {
        apply_override(&mut table, assignment)?;
    }
    let cfg: ExperimentConfig = toml::Value::Table(table)
        .try_into()
        .with_context(|| format!("config file '{}' does not match the schema", path.display()))?;
    cfg.validate()
        .with_context(|| format!("config file '{}' failed validation", path.display()))?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal(experiment: &str) -> ExperimentConfig {
        let text = format!("experiment = \"{experiment}\"");
        let cfg: ExperimentConfig = toml::from_str(&text).expect("minimal config must parse");
        cfg
    }

    #[test]
    fn minimal_config_parses_with_defaults() {
        let cfg = minimal("sparse-benchmark");
        assert_eq!(cfg.schema_version, SCHEMA_VERSION);
        assert_eq!(cfg.experiment, ExperimentKind::SparseBenchmark);
        assert_eq!(cfg.seeds, vec![0], "default seed list is [0]");
        assert_eq!(cfg.graph.d, 50);
        assert_eq!(cfg.constraint.kind, ConstraintKind::SmoothedAhoc);
        assert!(cfg.validate().is_ok());
    }

    #[test]
    fn missing_experiment_field_is_an_error() {
        let err = toml::from_str::<ExperimentConfig>("schema_version = 1").unwrap_err();
        assert!(
            err.to_string().contains("experiment"),
            "error must name the missing field, got: {err}"
        );
    }

    #[test]
    fn unknown_field_is_an_error() {
        let err =
            toml::from_str::<ExperimentConfig>("experiment = \"fit-csv\"\nbogus = 3").unwrap_err();
        assert!(err.to_string().contains("bogus"), "error must name the unknown field: {err}");
    }

    #[test]
    fn kind_names_round_trip() {
        for kind in ConstraintKind::ALL {
            let text = format!("experiment = \"grad-vs-rho\"\n[constraint]\nkind = \"{kind}\"");
            let cfg: ExperimentConfig = toml::from_str(&text).expect("kind name must parse");
            assert_eq!(cfg.constraint.kind, kind);
        }
    }

    #[test]
    fn overrides_replace_scalars_and_nested_fields() {
        let mut table: toml::Table = "experiment = \"sparse-benchmark\"".parse().unwrap();
        apply_override(&mut table, "optim.lambda1=0.25").unwrap();
        apply_override(&mut table, "seeds=[3, 4]").unwrap();
        apply_override(&mut table, "constraint.kind=logdet").unwrap();
        let cfg: ExperimentConfig = toml::Value::Table(table).try_into().unwrap();
        assert_eq!(cfg.optim.lambda1, 0.25);
        assert_eq!(cfg.seeds, vec![3, 4]);
        assert_eq!(cfg.constraint.kind, ConstraintKind::LogDet);
    }

    #[test]
    fn override_without_equals_is_rejected() {
        let mut table = toml::Table::new();
        assert!(apply_override(&mut table, "optim.lambda1").is_err());
        assert!(apply_override(&mut table, ".x=1").is_err());
    }

    #[test]
    fn empty_seed_list_fails_validation() {
        let mut cfg = minimal("sparse-benchmark");
        cfg.seeds.clear();
        let err = cfg.validate().unwrap_err();
        assert!(err.to_string().contains("seeds"), "{err}");
    }

    #[test]
    fn per_experiment_grid_requirements() {
        let mut cfg = minimal("delta-sensitivity");
        cfg.sweep.delta_values.clear();
        assert!(cfg.validate().unwrap_err().to_string().contains("delta_values"));

        let mut cfg = minimal("scalability");
        cfg.sweep.d_values.clear();
        assert!(cfg.validate().unwrap_err().to_string().contains("d_values"));

        let cfg = minimal("fit-csv");
        assert!(cfg.validate().unwrap_err().to_string().contains("data.path"));

        let mut cfg = minimal("grad-vs-rho");
        cfg.sweep.rho_max = 1.0;
        assert!(cfg.validate().unwrap_err().to_string().contains("rho_max"));
    }

    #[test]
    fn schema_version_mismatch_is_rejected() {
        let mut cfg = minimal("sparse-benchmark");
        cfg.schema_version = 2;
        assert!(cfg.validate().unwrap_err().to_string().contains("schema_version"));
    }
}
