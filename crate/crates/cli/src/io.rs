//! CSV and JSON files. Floats are written with 17 significant digits and
//! every file uses LF line endings.

use std::fs;
use std::io::Write;
use std::path::Path;

use robmix_core::mixture::Responsibilities;
use robmix_core::Dataset;
use serde::Serialize;

use crate::error::{CliError, Result};

/// Scientific notation with 17 significant digits; round-trips any `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Empty field for missing values.
pub fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    if let Some(dir) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    let file = fs::File::create(path).map_err(|e| CliError::io(path, e))?;
    Ok(csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(file))
}

fn csv_error(path: &Path, e: csv::Error) -> CliError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => CliError::io(path, io),
        other => CliError::format(path, format!("{other:?}")),
    }
}

/// Writes rows of preformatted fields under `header`.
pub fn write_table(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(header).map_err(|e| csv_error(path, e))?;
    for row in rows {
        w.write_record(&row).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

/// Header `x1..xd,label,outlier`; missing labels and flags are left empty.
pub fn write_dataset(path: &Path, ds: &Dataset) -> Result<()> {
    let mut header: Vec<String> = (1..=ds.dim).map(|j| format!("x{j}")).collect();
    header.push("label".into());
    header.push("outlier".into());
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let rows = ds.points().rows().enumerate().map(|(i, x)| {
        let mut row: Vec<String> = x.iter().map(|&v| fmt_f64(v)).collect();
        row.push(ds.labels.as_ref().map(|l| l[i].to_string()).unwrap_or_default());
        row.push(ds.outliers.as_ref().map(|o| u8::from(o[i]).to_string()).unwrap_or_default());
        row
    });
    write_table(path, &header, rows)
}

/// Reads a dataset CSV with a header row. Columns named `label` and
/// `outlier` are ground truth; every other column is a feature.
pub fn read_dataset(path: &Path) -> Result<Dataset> {
    let file = fs::File::open(path).map_err(|e| CliError::io(path, e))?;
    let mut r = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(file);
    let headers = r.headers().map_err(|e| csv_error(path, e))?.clone();
    let label_col = headers.iter().position(|h| h == "label");
    let outlier_col = headers.iter().position(|h| h == "outlier");
    let features: Vec<usize> = (0..headers.len()).filter(|&j| Some(j) != label_col && Some(j) != outlier_col).collect();
    if features.is_empty() {
        return Err(CliError::format(path, "no feature columns"));
    }
    let mut data = Vec::new();
    let mut labels = Vec::new();
    let mut outliers = Vec::new();
    let mut have_labels = label_col.is_some();
    let mut have_outliers = outlier_col.is_some();
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let row = line + 2;
        for &j in &features {
            let v: f64 =
                rec.get(j).unwrap_or("").parse().map_err(|_| {
                    CliError::format(path, format!("row {row}: column {} is not a number", &headers[j]))
                })?;
            data.push(v);
        }
        if let Some(j) = label_col {
            match rec.get(j).unwrap_or("") {
                "" => have_labels = false,
                s => labels.push(
                    s.parse::<usize>().map_err(|_| CliError::format(path, format!("row {row}: bad label `{s}`")))?,
                ),
            }
        }
        if let Some(j) = outlier_col {
            match rec.get(j).unwrap_or("") {
                "" => have_outliers = false,
                "0" | "false" => outliers.push(false),
                "1" | "true" => outliers.push(true),
                s => return Err(CliError::format(path, format!("row {row}: bad outlier flag `{s}`"))),
            }
        }
    }
    if data.is_empty() {
        return Err(CliError::format(path, "no data rows"));
    }
    let mut ds = Dataset::new(data, features.len()).map_err(|e| CliError::format(path, e))?;
    if have_labels {
        ds = ds.with_labels(labels).map_err(|e| CliError::format(path, e))?;
    }
    if have_outliers {
        ds = ds.with_outliers(outliers).map_err(|e| CliError::format(path, e))?;
    }
    Ok(ds)
}

/// Reads a header-less CSV of numbers, one vector per row.
pub fn read_matrix(path: &Path) -> Result<Vec<Vec<f64>>> {
    let file = fs::File::open(path).map_err(|e| CliError::io(path, e))?;
    let mut r = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_reader(file);
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let row: std::result::Result<Vec<f64>, _> = rec.iter().map(str::parse).collect();
        rows.push(row.map_err(|_| CliError::format(path, "non-numeric entry"))?);
    }
    Ok(rows)
}

/// `row,cluster,uncertainty` with `uncertainty = 1 - max_k tau_ik`.
pub fn write_assignments(path: &Path, tau: &Responsibilities) -> Result<()> {
    let labels = tau.hard_labels();
    let unc = tau.uncertainty();
    let rows = labels.iter().zip(&unc).enumerate().map(|(i, (l, u))| vec![i.to_string(), l.to_string(), fmt_f64(*u)]);
    write_table(path, &["row", "cluster", "uncertainty"], rows)
}

/// Pretty JSON followed by a newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    if let Some(dir) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::format(path, e))?;
    text.push('\n');
    let mut f = fs::File::create(path).map_err(|e| CliError::io(path, e))?;
    f.write_all(text.as_bytes()).map_err(|e| CliError::io(path, e))
}

pub fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}
