//! CSV and JSON import and export.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fourier::SpectrumGrid;
use crate::geometry::Polytope;
use crate::rangestruct::WorkloadOp;

#[derive(Serialize, Deserialize)]
struct PolytopeFile {
    vertices: Vec<Vec<f64>>,
}

/// Reads `{"vertices": [[...], ...]}`.
pub fn polytope_from_json(text: &str) -> Result<Polytope> {
    let file: PolytopeFile = serde_json::from_str(text)?;
    Polytope::from_vertices(file.vertices)
}

pub fn read_polytope(path: &Path) -> Result<Polytope> {
    polytope_from_json(&std::fs::read_to_string(path)?)
}

pub fn polytope_to_json(body: &Polytope) -> Result<String> {
    Ok(serde_json::to_string_pretty(&PolytopeFile { vertices: body.vertices().to_vec() })?)
}

/// RFC-4180 table with a header row.
pub fn table_to_csv<R: AsRef<[String]>>(headers: &[&str], rows: &[R]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(headers)?;
    for row in rows {
        w.write_record(row.as_ref())?;
    }
    let bytes = w.into_inner().map_err(|e| Error::InvalidInput(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::InvalidInput(e.to_string()))
}

/// Columns `xi_1..xi_d, re, im`, one row per frequency.
pub fn spectrum_to_csv(spectrum: &SpectrumGrid) -> Result<String> {
    let d = spectrum.d;
    let mut headers: Vec<String> = (1..=d).map(|i| format!("xi_{i}")).collect();
    headers.extend(["re".to_string(), "im".to_string()]);
    let rows: Vec<Vec<String>> = spectrum
        .coefficients()
        .iter()
        .enumerate()
        .map(|(idx, c)| {
            let mut row: Vec<String> = spectrum.frequency(idx).iter().map(i64::to_string).collect();
            row.push(format!("{:e}", c.re));
            row.push(format!("{:e}", c.im));
            row
        })
        .collect();
    let refs: Vec<&str> = headers.iter().map(String::as_str).collect();
    table_to_csv(&refs, &rows)
}

/// One point per row, no header.
pub fn points_from_csv(text: &str) -> Result<Vec<Vec<f64>>> {
    let mut r = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_reader(text.as_bytes());
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let p: std::result::Result<Vec<f64>, _> = rec.iter().map(str::parse::<f64>).collect();
        out.push(p.map_err(|e| Error::InvalidInput(format!("bad coordinate: {e}")))?);
    }
    Ok(out)
}

/// The first `k` columns of a headed table as numbers; other columns are ignored.
pub fn leading_columns_from_csv(text: &str, k: usize) -> Result<Vec<Vec<f64>>> {
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        if rec.len() < k {
            return Err(Error::InvalidInput(format!("row with {} fields, need {k}", rec.len())));
        }
        let row: std::result::Result<Vec<f64>, _> = rec.iter().take(k).map(str::parse::<f64>).collect();
        out.push(row.map_err(|e| Error::InvalidInput(format!("bad number: {e}")))?);
    }
    Ok(out)
}

pub fn points_to_csv(points: &[Vec<f64>]) -> Result<String> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    for p in points {
        w.write_record(p.iter().map(|x| format!("{x:e}")))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::InvalidInput(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::InvalidInput(e.to_string()))
}

/// Workload lines `op,index,value` with a header.
pub fn workload_from_csv(text: &str) -> Result<Vec<WorkloadOp>> {
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    Ok(r.deserialize().collect::<std::result::Result<Vec<WorkloadOp>, _>>()?)
}

pub fn workload_to_csv(ops: &[WorkloadOp]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for op in ops {
        w.serialize(op)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::InvalidInput(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::InvalidInput(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rangestruct::{random_workload, Op};

    #[test]
    fn polytope_round_trip() {
        let tri = polytope_from_json(r#"{"vertices": [[0.1, 0.1], [0.9, 0.2], [0.3, 0.8]]}"#).unwrap();
        let again = polytope_from_json(&polytope_to_json(&tri).unwrap()).unwrap();
        assert_eq!(tri.vertices(), again.vertices());
        assert!(polytope_from_json(r#"{"points": []}"#).is_err());
    }

    #[test]
    fn points_and_workloads_round_trip() {
        let pts = vec![vec![0.1, 0.25], vec![1.0 / 3.0, 0.0]];
        assert_eq!(points_from_csv(&points_to_csv(&pts).unwrap()).unwrap(), pts);
        let ops = random_workload(5, 3, 20, 0);
        assert_eq!(workload_from_csv(&workload_to_csv(&ops).unwrap()).unwrap(), ops);
        let parsed = workload_from_csv("op,index,value\nupdate,1,4\nquery,0,0\n").unwrap();
        assert_eq!(parsed[0].op, Op::Update);
        assert!(points_from_csv("0.1,x\n").is_err());
        let cols = leading_columns_from_csv("n,y,note\n4,1.5,\"a,b\"\n8,2,c\n", 2).unwrap();
        assert_eq!(cols, vec![vec![4.0, 1.5], vec![8.0, 2.0]]);
    }

    #[test]
    fn tables_quote_fields() {
        let csv = table_to_csv(&["a", "b"], &[vec!["1".to_string(), "x,y".to_string()]]).unwrap();
        assert_eq!(csv, "a,b\n1,\"x,y\"\n");
    }
}
