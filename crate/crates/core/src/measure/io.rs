//! CSV and JSON readers/writers for measures.
//!
//! Point clouds: header `x_1,...,x_N,weight`, one atom per row.
//! Grids: a JSON header `{"origin": [...], "cell_width": h, "extents": [...],
//! "values": "values.csv"}` whose `values` names a CSV (path relative to the
//! header) holding the cell values row-major, one per line, no header.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{GridDensity, PointCloudMeasure};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub fn write_point_cloud<T: Scalar>(path: &Path, cloud: &PointCloudMeasure<T>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header: Vec<String> = (1..=cloud.dim()).map(|i| format!("x_{i}")).collect();
    header.push("weight".into());
    w.write_record(&header)?;
    for (p, wt) in cloud.points().zip(cloud.weights()) {
        let row: Vec<String> = p.iter().chain(std::iter::once(wt)).map(|v| format!("{v:e}")).collect();
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_point_cloud<T: Scalar>(path: &Path) -> Result<PointCloudMeasure<T>> {
    let mut r = csv::Reader::from_path(path)?;
    let header = r.headers()?.clone();
    let cols = header.len();
    if cols < 2 || header.get(cols - 1) != Some("weight") {
        return Err(Error::InvalidMeasure(format!(
            "{}: expected columns x_1..x_N,weight",
            path.display()
        )));
    }
    let dim = cols - 1;
    let mut coords = Vec::new();
    let mut weights = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        for (i, field) in rec.iter().enumerate() {
            let v = parse_number(field, path)?;
            if i < dim {
                coords.push(v);
            } else {
                weights.push(v);
            }
        }
    }
    PointCloudMeasure::new(dim, coords, weights)
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GridHeader {
    origin: Vec<f64>,
    cell_width: f64,
    extents: Vec<usize>,
    values: PathBuf,
}

pub fn read_grid<T: Scalar>(header_path: &Path) -> Result<GridDensity<T>> {
    let text = fs::read_to_string(header_path)?;
    let header: GridHeader = serde_json::from_str(&text)
        .map_err(|e| Error::InvalidMeasure(format!("{}: {e}", header_path.display())))?;
    let values_path = header_path
        .parent()
        .unwrap_or_else(|| Path::new("."))
        .join(&header.values);
    let mut r = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_path(&values_path)?;
    let mut values = Vec::new();
    for rec in r.records() {
        for field in rec?.iter() {
            values.push(parse_number(field, &values_path)?);
        }
    }
    GridDensity::new(
        header.origin.into_iter().map(T::lit).collect(),
        T::lit(header.cell_width),
        header.extents,
        values,
    )
}

/// Writes `<stem>.json` and `<stem>.csv` next to each other.
pub fn write_grid<T: Scalar>(header_path: &Path, grid: &GridDensity<T>) -> Result<()> {
    let values_path = header_path.with_extension("csv");
    let name = values_path
        .file_name()
        .ok_or_else(|| Error::Io(format!("bad grid path {}", header_path.display())))?;
    let header = GridHeader {
        origin: grid.origin().iter().map(|v| v.as_f64()).collect(),
        cell_width: grid.cell_width().as_f64(),
        extents: grid.extents().to_vec(),
        values: PathBuf::from(name),
    };
    let json = serde_json::to_string_pretty(&header).map_err(|e| Error::Io(e.to_string()))?;
    fs::write(header_path, json + "\n")?;
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(&values_path)?;
    for v in grid.values() {
        w.write_record([format!("{v:e}")])?;
    }
    w.flush()?;
    Ok(())
}

/// Two-column numeric table, with or without a header row.
pub fn read_table<T: Scalar>(path: &Path) -> Result<Vec<(T, T)>> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)?;
    let mut rows = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec?;
        if rec.len() != 2 {
            return Err(Error::InvalidPotential(format!(
                "{}: row {} has {} columns",
                path.display(),
                line + 1,
                rec.len()
            )));
        }
        let parsed = (rec[0].parse::<f64>(), rec[1].parse::<f64>());
        match parsed {
            (Ok(a), Ok(b)) => rows.push((T::lit(a), T::lit(b))),
            _ if line == 0 => continue,
            _ => {
                return Err(Error::InvalidPotential(format!(
                    "{}: non-numeric row {}",
                    path.display(),
                    line + 1
                )))
            }
        }
    }
    Ok(rows)
}

fn parse_number<T: Scalar>(field: &str, path: &Path) -> Result<T> {
    field
        .trim()
        .parse::<f64>()
        .map(T::lit)
        .map_err(|_| Error::InvalidMeasure(format!("{}: bad number {field:?}", path.display())))
}
