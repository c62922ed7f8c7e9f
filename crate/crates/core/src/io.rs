//! Flat-file formats: JSON-lines point clouds and CSV distance matrices.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::sequence_space::{DistanceMatrix, Exponent, SparseVector};

#[derive(Debug, Serialize, Deserialize)]
struct PointRecord {
    id: String,
    coords: Vec<(u32, f64)>,
}

/// Reads one `{"id": …, "coords": [[index, value], …]}` object per line.
/// Blank lines are skipped.
pub fn read_cloud_jsonl<T: Scalar, R: BufRead>(reader: R, p: Exponent) -> Result<PointCloud<T>> {
    let mut points = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: PointRecord = serde_json::from_str(&line)
            .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))?;
        let entries = rec.coords.into_iter().map(|(i, v)| (i, T::of(v))).collect();
        let v = SparseVector::new(entries)
            .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))?;
        points.push((rec.id, v));
    }
    PointCloud::new(points, p).map_err(|e| Error::Parse(e.to_string()))
}

pub fn write_cloud_jsonl<T: Scalar, W: Write>(cloud: &PointCloud<T>, mut w: W) -> Result<()> {
    for (id, v) in cloud.points() {
        let rec = PointRecord {
            id: id.clone(),
            coords: v.entries().iter().map(|&(i, x)| (i, x.as_f64())).collect(),
        };
        let line = serde_json::to_string(&rec).map_err(|e| Error::Numerical(e.to_string()))?;
        writeln!(w, "{line}")?;
    }
    Ok(())
}

/// Parses a distance matrix: a header row of ids followed by one row of
/// numbers per id. A row may optionally start with its id.
pub fn read_distance_csv<R: BufRead>(reader: R) -> Result<DistanceMatrix> {
    let mut lines = reader.lines().filter(|l| l.as_ref().map_or(true, |s| !s.trim().is_empty()));
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("empty distance CSV".into()))??;
    let ids: Vec<String> = header.split(',').map(|s| s.trim().to_string()).collect();
    let ids: Vec<String> = if ids.first().is_some_and(|s| s.is_empty()) { ids[1..].to_vec() } else { ids };
    let n = ids.len();
    let mut values = Vec::with_capacity(n);
    for (r, line) in lines.enumerate() {
        let line = line?;
        let mut fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() == n + 1 {
            fields.remove(0);
        }
        if fields.len() != n {
            return Err(Error::Parse(format!("row {}: expected {n} values, found {}", r + 1, fields.len())));
        }
        let row = fields
            .iter()
            .map(|f| f.parse::<f64>().map_err(|_| Error::Parse(format!("row {}: bad number `{f}`", r + 1))))
            .collect::<Result<Vec<f64>>>()?;
        values.push(row);
    }
    DistanceMatrix::new(ids, values).map_err(|e| Error::Parse(e.to_string()))
}
