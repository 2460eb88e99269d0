//! JSON reports and CSV artifacts.
//!
//! JSON goes through `serde_json::Value`, whose maps are ordered, so keys
//! come out sorted. Floats use the shortest round-trip form; nothing here
//! reads the clock.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::ensemble::Trajectory;
use crate::error::{Error, Result};
use crate::homogeneous::SphereTrajectory;
use crate::observability::MomentTable;
use crate::synthesis::StudyRow;

pub const SCHEMA_VERSION: &str = "1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub name: String,
    pub pass: bool,
    pub detail: Value,
}

/// Top-level report of one command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: String,
    pub command: String,
    pub verdicts: Vec<Verdict>,
    pub results: Value,
}

impl Report {
    pub fn new(command: &str) -> Self {
        Self {
            schema_version: SCHEMA_VERSION.to_string(),
            command: command.to_string(),
            verdicts: Vec::new(),
            results: Value::Object(Default::default()),
        }
    }

    pub fn verdict(&mut self, name: &str, pass: bool, detail: impl Serialize) -> Result<()> {
        self.verdicts.push(Verdict {
            name: name.to_string(),
            pass,
            detail: serde_json::to_value(detail)?,
        });
        Ok(())
    }

    pub fn result(&mut self, key: &str, value: impl Serialize) -> Result<()> {
        let v = serde_json::to_value(value)?;
        if let Value::Object(map) = &mut self.results {
            map.insert(key.to_string(), v);
        }
        Ok(())
    }

    /// True iff every verdict passed; an empty report passes.
    pub fn pass(&self) -> bool {
        self.verdicts.iter().all(|v| v.pass)
    }

    pub fn to_json(&self) -> Result<String> {
        let mut v = serde_json::to_value(self)?;
        if let Value::Object(map) = &mut v {
            map.insert("pass".into(), Value::Bool(self.pass()));
        }
        to_sorted_json(&v)
    }
}

/// Pretty JSON with sorted keys and a trailing newline.
pub fn to_sorted_json(value: &impl Serialize) -> Result<String> {
    // round-tripping through Value sorts nested maps as well
    let v = serde_json::to_value(value)?;
    let mut s = serde_json::to_string_pretty(&v)?;
    s.push('\n');
    Ok(s)
}

/// Adds `schema_version` to a serializable object.
pub fn versioned(value: &impl Serialize) -> Result<String> {
    let mut v = serde_json::to_value(value)?;
    match &mut v {
        Value::Object(map) => {
            map.insert("schema_version".into(), Value::String(SCHEMA_VERSION.into()));
        }
        _ => return Err(Error::InvalidInput("only objects can carry a schema version".into())),
    }
    to_sorted_json(&v)
}

/// Shortest round-trip form, switching to exponent notation for very small
/// or large magnitudes.
fn num(x: f64) -> String {
    format!("{x:?}")
}

fn csv_string(header: &[String], rows: impl IntoIterator<Item = Vec<String>>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(csv_err)?;
    for row in rows {
        w.write_record(&row).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    String::from_utf8(bytes).map_err(|e| Error::InvalidInput(e.to_string()))
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

/// `t,sigma,m00,m01,...`; complex groups append `im00,...`.
pub fn trajectory_csv(traj: &Trajectory) -> Result<String> {
    let first = traj.last();
    let n = first.n();
    let complex = first.family().is_complex();
    let mut header = vec!["t".to_string(), "sigma".to_string()];
    let entries: Vec<(usize, usize)> = (0..n).flat_map(|r| (0..n).map(move |c| (r, c))).collect();
    header.extend(entries.iter().map(|(r, c)| format!("m{r}{c}")));
    if complex {
        header.extend(entries.iter().map(|(r, c)| format!("im{r}{c}")));
    }
    let mut rows = Vec::new();
    for (t, p) in traj.times().iter().zip(traj.profiles()) {
        for (s, g) in p.grid().nodes().iter().zip(p.states()) {
            let m = g.matrix();
            let mut row = vec![num(*t), num(*s)];
            row.extend(entries.iter().map(|&(r, c)| num(m[(r, c)].re)));
            if complex {
                row.extend(entries.iter().map(|&(r, c)| num(m[(r, c)].im)));
            }
            rows.push(row);
        }
    }
    csv_string(&header, rows)
}

/// `t,i,j,y`.
pub fn output_csv(times: &[f64], outputs: &[DMatrix<f64>]) -> Result<String> {
    let header: Vec<String> = ["t", "i", "j", "y"].iter().map(|s| s.to_string()).collect();
    let mut rows = Vec::new();
    for (t, y) in times.iter().zip(outputs) {
        for i in 0..y.nrows() {
            for j in 0..y.ncols() {
                rows.push(vec![num(*t), i.to_string(), j.to_string(), num(y[(i, j)])]);
            }
        }
    }
    csv_string(&header, rows)
}

/// `K,delta,epsilon,seconds`. Without timings the last column is left
/// empty so the file is reproducible.
pub fn study_csv(rows: &[StudyRow], timings: bool) -> Result<String> {
    let header: Vec<String> = ["K", "delta", "epsilon", "seconds"].iter().map(|s| s.to_string()).collect();
    let body = rows.iter().map(|r| {
        vec![
            r.k.to_string(),
            num(r.delta),
            num(r.epsilon),
            if timings { num(r.seconds) } else { String::new() },
        ]
    });
    csv_string(&header, body)
}

/// `i,j,exponents,value`.
pub fn moments_csv(table: &MomentTable) -> Result<String> {
    let header: Vec<String> = ["i", "j", "exponents", "value"].iter().map(|s| s.to_string()).collect();
    let body = table
        .rows()
        .into_iter()
        .map(|(i, j, mono, v)| vec![i.to_string(), j.to_string(), mono.key(), num(v)]);
    csv_string(&header, body)
}

/// `t,sigma,x1,...,xn`.
pub fn sphere_csv(traj: &SphereTrajectory) -> Result<String> {
    let n = traj.last().dim();
    let mut header = vec!["t".to_string(), "sigma".to_string()];
    header.extend((1..=n).map(|k| format!("x{k}")));
    let mut rows = Vec::new();
    for (t, p) in traj.times().iter().zip(traj.profiles()) {
        for (s, x) in p.grid().nodes().iter().zip(p.points()) {
            let mut row = vec![num(*t), num(*s)];
            row.extend(x.coords().iter().map(|v| num(*v)));
            rows.push(row);
        }
    }
    csv_string(&header, rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_report_is_valid() {
        let r = Report::new("verify");
        let s = r.to_json().unwrap();
        let v: Value = serde_json::from_str(&s).unwrap();
        assert_eq!(v["verdicts"], Value::Array(vec![]));
        assert_eq!(v["schema_version"], SCHEMA_VERSION);
        assert_eq!(v["pass"], true);
    }

    #[test]
    fn keys_are_sorted() {
        let mut r = Report::new("x");
        r.result("zeta", 1).unwrap();
        r.result("alpha", serde_json::json!({"b": 1, "a": 2})).unwrap();
        let s = r.to_json().unwrap();
        assert!(s.find("\"alpha\"").unwrap() < s.find("\"zeta\"").unwrap());
        assert!(s.find("\"a\"").unwrap() < s.find("\"b\"").unwrap());
        assert_eq!(s, r.clone().to_json().unwrap());
    }

    #[test]
    fn study_header_and_blank_seconds() {
        let rows = vec![StudyRow {
            k: 2,
            delta: 0.5,
            epsilon: 0.25,
            seconds: 1.7,
            warnings: vec![],
        }];
        assert_eq!(study_csv(&rows, false).unwrap(), "K,delta,epsilon,seconds\n2,0.5,0.25,\n");
        assert_eq!(study_csv(&rows, true).unwrap(), "K,delta,epsilon,seconds\n2,0.5,0.25,1.7\n");
    }

    #[test]
    fn versioned_rejects_scalars() {
        assert!(versioned(&3).is_err());
        assert!(versioned(&serde_json::json!({"a": 1})).unwrap().contains("schema_version"));
    }
}
