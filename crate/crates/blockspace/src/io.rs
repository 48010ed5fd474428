//! Delimited text formats.
//!
//! * Matrix: header row `gene_id,<spot ids...>`, then one row per gene.
//! * Coordinates: header `spot_id,x,y`, one row per spot, any order.
//! * Labels: header `id,cluster`, one row per item, clusters one-based.
//!
//! Floats are written in the shortest form that parses back to the same
//! value.

use std::collections::HashMap;
use std::fs::File;
use std::io::Write;
use std::path::Path;

use blockspace_core::{ExpressionDataset, Point};
use nalgebra::DMatrix;

use crate::error::{CliError, Result};

fn reader(path: &Path) -> Result<csv::Reader<File>> {
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    Ok(csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(file))
}

fn csv_error(path: &Path, e: csv::Error) -> CliError {
    let line = e.position().map_or(0, |p| p.line());
    match e.into_kind() {
        csv::ErrorKind::Io(io) => CliError::io(path, io),
        kind => CliError::parse(path, line, format!("{kind:?}")),
    }
}

fn writer(path: &Path) -> Result<csv::Writer<File>> {
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    Ok(csv::Writer::from_writer(file))
}

fn flush(path: &Path, mut w: csv::Writer<File>) -> Result<()> {
    w.flush().map_err(|e| CliError::io(path, e))
}

fn parse_f64(path: &Path, line: u64, column: usize, cell: &str) -> Result<f64> {
    cell.parse::<f64>()
        .map_err(|_| CliError::parse(path, line, format!("column {column}: cannot parse `{cell}` as a number")))
}

/// Reads the coordinate table into `spot_id -> point`.
pub fn read_coords(path: &Path) -> Result<Vec<(String, Point)>> {
    let mut rdr = reader(path)?;
    let header = rdr.headers().map_err(|e| csv_error(path, e))?.clone();
    if header.iter().collect::<Vec<_>>() != ["spot_id", "x", "y"] {
        return Err(CliError::parse(path, 1, "expected header `spot_id,x,y`"));
    }
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let line = rec.position().map_or(0, |p| p.line());
        let x = parse_f64(path, line, 2, &rec[1])?;
        let y = parse_f64(path, line, 3, &rec[2])?;
        out.push((rec[0].to_string(), Point::new(x, y)));
    }
    Ok(out)
}

/// Loads a matrix file and a coordinate file, joining columns to sites by
/// spot id in matrix header order.
pub fn load_dataset(matrix_path: &Path, coords_path: &Path) -> Result<ExpressionDataset> {
    let mut rdr = reader(matrix_path)?;
    let header = rdr.headers().map_err(|e| csv_error(matrix_path, e))?.clone();
    if header.len() < 2 {
        return Err(CliError::parse(matrix_path, 1, "header needs a gene id column and at least one spot"));
    }
    let col_ids: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
    let p = col_ids.len();
    let mut row_ids = Vec::new();
    let mut data = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_error(matrix_path, e))?;
        let line = rec.position().map_or(0, |p| p.line());
        row_ids.push(rec[0].to_string());
        for (j, cell) in rec.iter().skip(1).enumerate() {
            data.push(parse_f64(matrix_path, line, j + 2, cell)?);
        }
    }
    if row_ids.is_empty() {
        return Err(CliError::parse(matrix_path, 2, "matrix has no rows"));
    }
    let values = DMatrix::from_row_slice(row_ids.len(), p, &data);

    let mut sites: HashMap<String, Point> = HashMap::new();
    for (line, (id, pt)) in read_coords(coords_path)?.into_iter().enumerate() {
        if sites.insert(id.clone(), pt).is_some() {
            return Err(CliError::parse(coords_path, line as u64 + 2, format!("duplicate spot id `{id}`")));
        }
    }
    let mut coords = Vec::with_capacity(p);
    for id in &col_ids {
        match sites.remove(id) {
            Some(pt) => coords.push(pt),
            None => return Err(CliError::MissingCoordinate(id.clone())),
        }
    }
    if let Some(extra) = sites.into_keys().min() {
        return Err(CliError::UnknownSpotId(extra));
    }
    Ok(ExpressionDataset::new(values, row_ids, col_ids, coords)?)
}

pub fn write_matrix(ds: &ExpressionDataset, path: &Path) -> Result<()> {
    let mut w = writer(path)?;
    let mut header = vec!["gene_id".to_string()];
    header.extend(ds.col_ids().iter().cloned());
    w.write_record(&header).map_err(|e| csv_error(path, e))?;
    for i in 0..ds.n_rows() {
        let mut rec = vec![ds.row_ids()[i].clone()];
        rec.extend((0..ds.n_cols()).map(|j| ds.value(i, j).to_string()));
        w.write_record(&rec).map_err(|e| csv_error(path, e))?;
    }
    flush(path, w)
}

pub fn write_coords(ds: &ExpressionDataset, path: &Path) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["spot_id", "x", "y"]).map_err(|e| csv_error(path, e))?;
    for (id, p) in ds.col_ids().iter().zip(ds.coords()) {
        w.write_record([id.clone(), p.x.to_string(), p.y.to_string()])
            .map_err(|e| csv_error(path, e))?;
    }
    flush(path, w)
}

/// Writes zero-based `labels` as one-based clusters.
pub fn write_labels(path: &Path, ids: &[String], labels: &[usize]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["id", "cluster"]).map_err(|e| csv_error(path, e))?;
    for (id, l) in ids.iter().zip(labels) {
        w.write_record([id.clone(), (l + 1).to_string()]).map_err(|e| csv_error(path, e))?;
    }
    flush(path, w)
}

/// Reads a label file as written by [`write_labels`]; cluster values are
/// returned as found.
pub fn read_labels(path: &Path) -> Result<(Vec<String>, Vec<i64>)> {
    let mut rdr = reader(path)?;
    let header = rdr.headers().map_err(|e| csv_error(path, e))?.clone();
    if header.iter().collect::<Vec<_>>() != ["id", "cluster"] {
        return Err(CliError::parse(path, 1, "expected header `id,cluster`"));
    }
    let (mut ids, mut labels) = (Vec::new(), Vec::new());
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let line = rec.position().map_or(0, |p| p.line());
        let l = rec[1]
            .parse::<i64>()
            .map_err(|_| CliError::parse(path, line, format!("cannot parse `{}` as a cluster label", &rec[1])))?;
        ids.push(rec[0].to_string());
        labels.push(l);
    }
    Ok((ids, labels))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    let mut f = File::create(path).map_err(|e| CliError::io(path, e))?;
    f.write_all(text.as_bytes()).map_err(|e| CliError::io(path, e))
}

pub fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}
