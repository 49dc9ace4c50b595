//! Report bundles: sweep tables, a JSON summary and a manifest.
//!
//! The contract that matters here is determinism. Every CSV body and
//! the JSON summary are pure functions of the configuration, so a rerun
//! with the same config and seeds reproduces them byte for byte.
//! Wall-clock timestamps and timings live in the manifest only.

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use exdag_core::DenseMatrix;
use serde::Serialize;
use serde_json::json;

use crate::config::ExperimentConfig;
use crate::dataio::{write_matrix_csv, write_table_csv};

/// One named CSV table with preformatted cells.
#[derive(Debug, Clone)]
pub struct SweepTable {
    /// File stem; the table is written to `<name>.csv`.
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl SweepTable {
    pub fn new(name: &str, header: &[&str]) -> Self {
        SweepTable {
            name: name.to_string(),
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }
}

/// A measured wall time, destined for the manifest.
#[derive(Debug, Clone, Serialize)]
pub struct Timing {
    pub label: String,
    pub seconds: f64,
}

/// Everything an experiment produces.
#[derive(Debug, Clone)]
pub struct ReportBundle {
    pub experiment: String,
    pub tables: Vec<SweepTable>,
    /// Machine-readable mirror of the tables plus aggregates.
    pub summary: serde_json::Value,
    /// Extra matrices to write as standalone CSV files (file stem,
    /// matrix).
    pub matrices: Vec<(String, DenseMatrix)>,
    /// Real per-run wall times, regardless of `record_wall_time`.
    pub timings: Vec<Timing>,
}

impl ReportBundle {
    pub fn new(experiment: &str) -> Self {
        ReportBundle {
            experiment: experiment.to_string(),
            tables: Vec::new(),
            summary: serde_json::Value::Null,
            matrices: Vec::new(),
            timings: Vec::new(),
        }
    }
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    schema_version: u32,
    tool_name: &'a str,
    tool_version: &'a str,
    experiment: &'a str,
    /// Unix timestamp at write time. Timestamps are confined to this
    /// file so that every other output is reproducible byte for byte.
    created_unix_seconds: u64,
    total_wall_seconds: f64,
    files: &'a [String],
    timings: &'a [Timing],
    /// Fully resolved configuration, defaults included.
    config: serde_json::Value,
}

/// Write the bundle into `output_dir`; returns the files written.
pub fn write_bundle(
    cfg: &ExperimentConfig,
    bundle: &ReportBundle,
    total_wall_seconds: f64,
) -> Result<Vec<PathBuf>> {
    let dir = Path::new(&cfg.output_dir);
    std::fs::create_dir_all(dir)
        .with_context(|| format!("cannot create output directory '{}'", dir.display()))?;

    let mut written = Vec::new();
    let mut file_names = Vec::new();
    for table in &bundle.tables {
        let path = dir.join(format!("{}.csv", table.name));
        write_table_csv(&path, &table.header, &table.rows)?;
        file_names.push(format!("{}.csv", table.name));
        written.push(path);
    }
    for (stem, matrix) in &bundle.matrices {
        let path = dir.join(format!("{stem}.csv"));
        write_matrix_csv(&path, matrix)?;
        file_names.push(format!("{stem}.csv"));
        written.push(path);
    }

    let summary_path = dir.join("summary.json");
    let summary_text =
        serde_json::to_string_pretty(&bundle.summary).context("cannot serialize summary")?;
    std::fs::write(&summary_path, summary_text + "\n")
        .with_context(|| format!("cannot write '{}'", summary_path.display()))?;
    file_names.push("summary.json".to_string());
    written.push(summary_path);

    let created = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let manifest = Manifest {
        schema_version: cfg.schema_version,
        tool_name: "exdag",
        tool_version: env!("CARGO_PKG_VERSION"),
        experiment: &bundle.experiment,
        created_unix_seconds: created,
        total_wall_seconds,
        files: &file_names,
        timings: &bundle.timings,
        config: serde_json::to_value(cfg).context("cannot serialize config echo")?,
    };
    let manifest_path = dir.join("manifest.json");
    let manifest_text =
        serde_json::to_string_pretty(&manifest).context("cannot serialize manifest")?;
    std::fs::write(&manifest_path, manifest_text + "\n")
        .with_context(|| format!("cannot write '{}'", manifest_path.display()))?;
    written.push(manifest_path);
    Ok(written)
}

/// Build the JSON mirror of a table: one object per row, keyed by the
/// header.
pub fn table_to_json(table: &SweepTable) -> serde_json::Value {
    let rows: Vec<serde_json::Value> = table
        .rows
        .iter()
        .map(|row| {
            let obj: serde_json::Map<String, serde_json::Value> = table
                .header
                .iter()
                .zip(row)
                .map(|(k, v)| (k.clone(), json!(v)))
                .collect();
            serde_json::Value::Object(obj)
        })
        .collect();
    json!({ "name": table.name, "rows": rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ExperimentConfig;
    use tempfile::tempdir;

    fn config_in(dir: &Path) -> ExperimentConfig {
        let text = format!(
            "experiment = \"sparse-benchmark\"\noutput_dir = \"{}\"",
            dir.display()
        );
        toml::from_str(&text).unwrap()
    }

    fn sample_bundle() -> ReportBundle {
        let mut bundle = ReportBundle::new("sparse-benchmark");
        let mut table = SweepTable::new("bench", &["a", "b"]);
        table.rows.push(vec!["1".into(), "2.5000000000000000e0".into()]);
        bundle.summary = json!({ "tables": [table_to_json(&table)] });
        bundle.tables.push(table);
        bundle.timings.push(Timing { label: "seed-0".into(), seconds: 1.25 });
        bundle
    }

    #[test]
    fn bundle_writes_tables_summary_and_manifest() {
        let dir = tempdir().unwrap();
        let cfg = config_in(dir.path());
        let files = write_bundle(&cfg, &sample_bundle(), 2.0).unwrap();
        let names: Vec<String> = files
            .iter()
            .map(|p| p.file_name().unwrap().to_string_lossy().into_owned())
            .collect();
        assert_eq!(names, vec!["bench.csv", "summary.json", "manifest.json"]);
        let csv = std::fs::read_to_string(dir.path().join("bench.csv")).unwrap();
        assert_eq!(csv, "a,b\n1,2.5000000000000000e0\n");
        let manifest = std::fs::read_to_string(dir.path().join("manifest.json")).unwrap();
        assert!(manifest.contains("\"tool_name\": \"exdag\""));
        assert!(manifest.contains("\"config\""), "manifest must echo the config");
    }

    #[test]
    fn csv_and_summary_are_identical_across_reruns() {
        let dir = tempdir().unwrap();
        let cfg = config_in(dir.path());
        write_bundle(&cfg, &sample_bundle(), 2.0).unwrap();
        let csv1 = std::fs::read(dir.path().join("bench.csv")).unwrap();
        let sum1 = std::fs::read(dir.path().join("summary.json")).unwrap();
        std::thread::sleep(std::time::Duration::from_millis(5));
        write_bundle(&cfg, &sample_bundle(), 3.5).unwrap();
        let csv2 = std::fs::read(dir.path().join("bench.csv")).unwrap();
        let sum2 = std::fs::read(dir.path().join("summary.json")).unwrap();
        assert_eq!(csv1, csv2, "CSV bodies must be byte-identical across reruns");
        assert_eq!(sum1, sum2, "summary must be byte-identical across reruns");
    }
}
