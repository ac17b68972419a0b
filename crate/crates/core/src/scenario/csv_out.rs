use std::fmt;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

/// One CSV cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Field {
    Float(f64),
    Int(u64),
    Bool(bool),
    Text(String),
}

impl fmt::Display for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            // Shortest representation that parses back to the same f64.
            Field::Float(x) => write!(f, "{x}"),
            Field::Int(n) => write!(f, "{n}"),
            Field::Bool(b) => write!(f, "{b}"),
            Field::Text(s) => f.write_str(s),
        }
    }
}

impl From<f64> for Field {
    fn from(x: f64) -> Self {
        Field::Float(x)
    }
}

impl From<u64> for Field {
    fn from(n: u64) -> Self {
        Field::Int(n)
    }
}

impl From<usize> for Field {
    fn from(n: usize) -> Self {
        Field::Int(n as u64)
    }
}

impl From<u32> for Field {
    fn from(n: u32) -> Self {
        Field::Int(n as u64)
    }
}

impl From<bool> for Field {
    fn from(b: bool) -> Self {
        Field::Bool(b)
    }
}

impl From<&str> for Field {
    fn from(s: &str) -> Self {
        Field::Text(s.to_string())
    }
}

impl From<String> for Field {
    fn from(s: String) -> Self {
        Field::Text(s)
    }
}

/// Ordered named fields; one CSV row.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Record {
    pub columns: Vec<(String, Field)>,
}

impl Record {
    pub fn new() -> Self {
        Record::default()
    }

    pub fn push(&mut self, name: &str, value: impl Into<Field>) -> &mut Self {
        self.columns.push((name.to_string(), value.into()));
        self
    }

    pub fn get(&self, name: &str) -> Option<&Field> {
        self.columns.iter().find(|(n, _)| n == name).map(|(_, v)| v)
    }

    pub fn float(&self, name: &str) -> Option<f64> {
        match self.get(name)? {
            Field::Float(x) => Some(*x),
            Field::Int(n) => Some(*n as f64),
            _ => None,
        }
    }

    fn header(&self) -> impl Iterator<Item = &str> {
        self.columns.iter().map(|(n, _)| n.as_str())
    }
}

/// Writes a header row and one row per record.
pub fn write_csv<W: Write>(records: &[Record], out: W) -> Result<()> {
    let first = records
        .first()
        .ok_or_else(|| Error::Schema("no records to write".into()))?;
    let header: Vec<&str> = first.header().collect();
    for (i, r) in records.iter().enumerate() {
        if !r.header().eq(header.iter().copied()) {
            return Err(Error::Schema(format!(
                "record {i} has columns [{}], expected [{}]",
                r.header().collect::<Vec<_>>().join(", "),
                header.join(", ")
            )));
        }
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(&header)?;
    for r in records {
        w.write_record(r.columns.iter().map(|(_, v)| v.to_string()))?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

/// Validates first, so a schema error never leaves a file behind.
pub fn emit_csv(records: &[Record], path: &Path) -> Result<()> {
    let mut buf = Vec::new();
    write_csv(records, &mut buf)?;
    std::fs::write(path, buf).map_err(|e| Error::io(path, e))
}

/// Header and raw rows of a CSV file.
pub fn read_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rdr = csv::Reader::from_reader(file);
    let header = rdr.headers()?.iter().map(str::to_string).collect();
    let rows = rdr
        .records()
        .map(|r| r.map(|r| r.iter().map(str::to_string).collect()))
        .collect::<std::result::Result<Vec<Vec<String>>, _>>()?;
    Ok((header, rows))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rec(x: f64) -> Record {
        let mut r = Record::new();
        r.push("x", x).push("n", 3u64).push("ok", true).push("label", "a,b");
        r
    }

    #[test]
    fn hundred_records_hundred_and_one_lines() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("out.csv");
        let recs: Vec<Record> = (0..100).map(|i| rec(i as f64 * 0.1)).collect();
        emit_csv(&recs, &p).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert_eq!(text.lines().count(), 101);
        assert!(text.starts_with("x,n,ok,label\n"));
    }

    #[test]
    fn empty_and_mixed_rejected_without_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("out.csv");
        assert!(matches!(emit_csv(&[], &p), Err(Error::Schema(_))));
        let mut other = Record::new();
        other.push("y", 1.0);
        assert!(matches!(emit_csv(&[rec(1.0), other], &p), Err(Error::Schema(_))));
        assert!(!p.exists());
    }

    #[test]
    fn unwritable_path_is_io() {
        let p = Path::new("/nonexistent-dir/x/out.csv");
        assert!(matches!(emit_csv(&[rec(1.0)], p), Err(Error::Io { .. })));
    }

    proptest! {
        #[test]
        fn floats_round_trip(xs in prop::collection::vec(-1e300f64..1e300, 1..20)) {
            let dir = tempfile::tempdir().unwrap();
            let p = dir.path().join("rt.csv");
            let recs: Vec<Record> = xs.iter().map(|&x| rec(x)).collect();
            emit_csv(&recs, &p).unwrap();
            let (header, rows) = read_csv(&p).unwrap();
            prop_assert_eq!(header, vec!["x", "n", "ok", "label"]);
            for (row, &x) in rows.iter().zip(&xs) {
                let back: f64 = row[0].parse().unwrap();
                prop_assert!(back == x || ((back - x) / x).abs() <= 1e-12);
                prop_assert_eq!(&row[3], "a,b");
            }
        }
    }
}
