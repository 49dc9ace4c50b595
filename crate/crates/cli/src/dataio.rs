//! CSV input and output.
//!
//! All emitted files carry a header row, use `.` as the decimal
//! separator regardless of locale, and print floats with 17 significant
//! digits so that reading a file back reproduces every value bit for
//! bit.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use exdag_core::DenseMatrix;

/// Render a float with enough digits to round-trip exactly.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// Render one CSV row from prepared cells.
fn write_row<W: Write>(out: &mut W, cells: &[String]) -> Result<()> {
    let line = cells.join(",");
    writeln!(out, "{line}").context("failed to write CSV row")?;
    Ok(())
}

/// Write a generic table: a header plus rows of preformatted cells.
pub fn write_table_csv(path: &Path, header: &[String], rows: &[Vec<String>]) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)
            .with_context(|| format!("cannot create output directory '{}'", dir.display()))?;
    }
    let file = File::create(path)
        .with_context(|| format!("cannot create output file '{}'", path.display()))?;
    let mut out = BufWriter::new(file);
    write_row(&mut out, &header.to_vec())?;
    for (idx, row) in rows.iter().enumerate() {
        if row.len() != header.len() {
            bail!(
                "row {idx} of '{}' has {} cells but the header has {}",
                path.display(),
                row.len(),
                header.len()
            );
        }
        write_row(&mut out, row)?;
    }
    out.flush().context("failed to flush CSV output")?;
    Ok(())
}

/// Write a matrix as CSV with a `c0..c{d-1}` header.
pub fn write_matrix_csv(path: &Path, m: &DenseMatrix) -> Result<()> {
    let header: Vec<String> = (0..m.cols()).map(|j| format!("c{j}")).collect();
    let rows: Vec<Vec<String>> = (0..m.rows())
        .map(|i| (0..m.cols()).map(|j| fmt_float(m.get(i, j))).collect())
        .collect();
    write_table_csv(path, &header, &rows)
}

/// Write a sample matrix as CSV with an `x0..x{d-1}` header.
pub fn write_dataset_csv(path: &Path, x: &DenseMatrix) -> Result<()> {
    let header: Vec<String> = (0..x.cols()).map(|j| format!("x{j}")).collect();
    let rows: Vec<Vec<String>> = (0..x.rows())
        .map(|i| (0..x.cols()).map(|j| fmt_float(x.get(i, j))).collect())
        .collect();
    write_table_csv(path, &header, &rows)
}

fn parse_cell(field: &str, path: &Path, row: usize, col: usize) -> Result<f64> {
    let trimmed = field.trim();
    trimmed.parse::<f64>().with_context(|| {
        format!(
            "'{}': row {}, column {}: cannot parse '{}' as a number",
            path.display(),
            row + 1,
            col + 1,
            trimmed
        )
    })
}

/// Does this line look like a header? True when its first field does not
/// parse as a number.
fn looks_like_header(line: &str) -> bool {
    match line.split(',').next() {
        Some(first) => first.trim().parse::<f64>().is_err(),
        None => true,
    }
}

fn read_rows(path: &Path, skip_header: Option<bool>) -> Result<Vec<Vec<f64>>> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("cannot read file '{}'", path.display()))?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut width: Option<usize> = None;
    let mut first_data_line = true;
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        if first_data_line {
            first_data_line = false;
            let skip = skip_header.unwrap_or_else(|| looks_like_header(line));
            if skip {
                continue;
            }
        }
        let mut row = Vec::new();
        for (col, field) in line.split(',').enumerate() {
            row.push(parse_cell(field, path, lineno, col)?);
        }
        if let Some(w) = width {
            if row.len() != w {
                bail!(
                    "'{}': row {} has {} columns, expected {}",
                    path.display(),
                    lineno + 1,
                    row.len(),
                    w
                );
            }
        } else {
            width = Some(row.len());
        }
        rows.push(row);
    }
    if rows.is_empty() {
        bail!("'{}': no data rows found", path.display());
    }
    Ok(rows)
}

fn to_matrix(rows: Vec<Vec<f64>>) -> DenseMatrix {
    let r = rows.len();
    let c = rows[0].len();
    let mut m = DenseMatrix::zeros(r, c);
    for (i, row) in rows.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            m.set(i, j, v);
        }
    }
    m
}

/// Read a square weight matrix. A header row is detected and skipped
/// automatically.
pub fn read_matrix_csv(path: &Path) -> Result<DenseMatrix> {
    let m = to_matrix(read_rows(path, None)?);
    if m.rows() != m.cols() {
        bail!(
            "'{}': expected a square matrix, got {}x{}",
            path.display(),
            m.rows(),
            m.cols()
        );
    }
    Ok(m)
}

/// Read an n×d sample matrix, optionally dropping a declared header and
/// centering each column to mean zero.
pub fn read_dataset_csv(path: &Path, has_header: bool, center: bool) -> Result<DenseMatrix> {
    let mut x = to_matrix(read_rows(path, Some(has_header))?);
    if center {
        let n = x.rows();
        for j in 0..x.cols() {
            let mut mean = 0.0;
            for i in 0..n {
                mean += x.get(i, j);
            }
            mean /= n as f64;
            for i in 0..n {
                let v = x.get(i, j) - mean;
                x.set(i, j, v);
            }
        }
    }
    Ok(x)
}
