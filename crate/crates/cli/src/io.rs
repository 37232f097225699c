//! CSV ingestion and output files.

use std::fs;
use std::io::Write;
use std::path::Path;

use uqd_core::{Dataset, Mat, UncertaintyReport};

use crate::error::{CliError, CliResult};

/// A numeric CSV with a header row.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub path: String,
    pub headers: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn position(&self, name: &str) -> Option<usize> {
        self.headers.iter().position(|h| h == name)
    }

    pub fn require(&self, name: &str) -> CliResult<usize> {
        self.position(name).ok_or_else(|| CliError::SchemaMismatch {
            path: self.path.clone(),
            column: name.to_string(),
            detail: format!("missing; found columns [{}]", self.headers.join(", ")),
        })
    }

    pub fn column(&self, idx: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r[idx]).collect()
    }

    /// Rows restricted to the given columns, in the given order.
    pub fn select(&self, cols: &[usize]) -> Mat {
        let data = self.rows.iter().flat_map(|r| cols.iter().map(|&c| r[c])).collect();
        Mat::from_row_major(self.rows.len(), cols.len(), data).expect("finite by construction")
    }

    pub fn names(&self, cols: &[usize]) -> Vec<String> {
        cols.iter().map(|&c| self.headers[c].clone()).collect()
    }
}

fn csv_error(path: &Path, e: csv::Error) -> CliError {
    CliError::io(path, e)
}

/// Reads a header-first numeric CSV. Every cell must parse as a finite number.
pub fn read_table(path: &Path) -> CliResult<Table> {
    let file = fs::File::open(path).map_err(|e| CliError::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| csv_error(path, e))?
        .iter()
        .map(str::to_string)
        .collect();
    let shown = path.display().to_string();
    if let Some(dup) = headers.iter().enumerate().find(|(i, h)| headers[..*i].contains(h)) {
        return Err(CliError::SchemaMismatch {
            path: shown,
            column: dup.1.clone(),
            detail: "duplicated column".into(),
        });
    }
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| csv_error(path, e))?;
        let mut values = Vec::with_capacity(headers.len());
        for (cell, name) in record.iter().zip(&headers) {
            let v: f64 = cell.parse().map_err(|_| CliError::InvalidValue {
                path: shown.clone(),
                row,
                column: name.clone(),
                value: cell.to_string(),
            })?;
            if !v.is_finite() {
                return Err(CliError::NonFiniteValue {
                    path: shown,
                    row,
                    column: name.clone(),
                });
            }
            values.push(v);
        }
        rows.push(values);
    }
    Ok(Table {
        path: shown,
        headers,
        rows,
    })
}

/// Expected layout of a dataset file.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSchema<'a> {
    pub target: &'a str,
    /// Columns that are neither features nor the target.
    pub exclude: Vec<String>,
    pub min_features: usize,
}

impl<'a> DatasetSchema<'a> {
    pub fn regression(target: &'a str) -> Self {
        DatasetSchema {
            target,
            exclude: vec![],
            min_features: 1,
        }
    }
}

/// Target column by name; every other non-excluded column is a feature.
pub fn parse_dataset(path: &Path, schema: &DatasetSchema) -> CliResult<Dataset> {
    let table = read_table(path)?;
    dataset_from_table(&table, schema)
}

pub fn dataset_from_table(table: &Table, schema: &DatasetSchema) -> CliResult<Dataset> {
    let t = table.require(schema.target)?;
    let features: Vec<usize> = (0..table.headers.len())
        .filter(|&c| c != t && !schema.exclude.contains(&table.headers[c]))
        .collect();
    if features.len() < schema.min_features {
        return Err(CliError::SchemaMismatch {
            path: table.path.clone(),
            column: "<features>".into(),
            detail: format!("need at least {} feature column(s)", schema.min_features),
        });
    }
    Ok(Dataset::new(
        table.names(&features),
        schema.target,
        table.select(&features),
        table.column(t),
    )?)
}

/// Shortest representation that parses back to the same value.
pub fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

pub fn dataset_csv(data: &Dataset) -> String {
    let mut out = data.header().join(",");
    out.push('\n');
    for i in 0..data.len() {
        let mut cells: Vec<String> = data.features().row(i).iter().map(|v| fmt_f64(*v)).collect();
        cells.push(fmt_f64(data.target()[i]));
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// Plot-ready band data: one row per grid point. `mu` is included when given.
pub fn curves_csv(
    x_names: &[String],
    grid: &Mat,
    mu: Option<&[f64]>,
    reports: &[UncertaintyReport],
) -> CliResult<String> {
    if grid.rows() != reports.len() || mu.is_some_and(|m| m.len() != reports.len()) {
        return Err(CliError::Config(format!(
            "curve grid has {} rows but {} reports",
            grid.rows(),
            reports.len()
        )));
    }
    let mut header: Vec<&str> = x_names.iter().map(String::as_str).collect();
    if mu.is_some() {
        header.push("mu");
    }
    header.extend(["total", "aleatoric", "epistemic"]);
    let mut out = header.join(",");
    out.push('\n');
    for (i, r) in reports.iter().enumerate() {
        let mut cells: Vec<String> = grid.row(i).iter().map(|v| fmt_f64(*v)).collect();
        if let Some(m) = mu {
            cells.push(fmt_f64(m[i]));
        }
        cells.extend([r.total, r.aleatoric, r.epistemic].map(fmt_f64));
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    Ok(out)
}

pub fn emit_curves(
    path: &Path,
    x_names: &[String],
    grid: &Mat,
    mu: Option<&[f64]>,
    reports: &[UncertaintyReport],
) -> CliResult<()> {
    write_atomic(path, curves_csv(x_names, grid, mu, reports)?.as_bytes())
}

/// Writes through a sibling temporary file and renames it into place, so a
/// failed run never leaves a partial file behind.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult<()> {
    let name = path
        .file_name()
        .ok_or_else(|| CliError::io(path, "not a file path"))?
        .to_string_lossy();
    let tmp = path.with_file_name(format!(".{name}.{}.tmp", std::process::id()));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if let Err(e) = result {
        let _ = fs::remove_file(&tmp);
        return Err(CliError::io(path, e));
    }
    Ok(())
}
