//! Table rendering and atomic file output.

use std::io::Write;
use std::path::Path;

use serde_json::{Map, Value};

/// Version of the per-experiment column sets.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Text(String),
    Bool(bool),
    /// Not applicable to this row.
    Na,
}

impl Cell {
    pub fn opt_float(v: Option<f64>) -> Cell {
        v.map_or(Cell::Na, Cell::Float)
    }

    /// CSV text: floats with 17 significant digits, `NA` for missing cells.
    pub fn to_text(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Float(v) if v.is_finite() => format!("{v:.16e}"),
            Cell::Float(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
            Cell::Na => "NA".into(),
        }
    }

    fn to_json(&self) -> Value {
        match self {
            Cell::Int(v) => Value::from(*v),
            Cell::Float(v) => serde_json::Number::from_f64(*v)
                .map(Value::Number)
                .unwrap_or_else(|| Value::String(v.to_string())),
            Cell::Text(s) => Value::String(s.clone()),
            Cell::Bool(b) => Value::Bool(*b),
            Cell::Na => Value::Null,
        }
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

/// Header plus rows; every row has one cell per column.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| *c == name)
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns).expect("in-memory write");
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::to_text))
                .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("UTF-8 cells")
    }

    /// Array of objects keyed by column name; `NA` becomes `null`.
    pub fn to_json(&self) -> String {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|row| {
                let obj: Map<String, Value> = self
                    .columns
                    .iter()
                    .zip(row)
                    .map(|(c, v)| (c.to_string(), v.to_json()))
                    .collect();
                Value::Object(obj)
            })
            .collect();
        let mut s = serde_json::to_string_pretty(&rows).expect("serializable");
        s.push('\n');
        s
    }
}

/// Writes through a temporary file in the target directory, then renames.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table() -> Table {
        Table {
            columns: vec!["a", "b", "c"],
            rows: vec![
                vec![Cell::Int(3), Cell::Float(0.1), Cell::Na],
                vec![Cell::Int(-1), Cell::Text("x, y".into()), Cell::Bool(true)],
            ],
        }
    }

    #[test]
    fn csv_rendering() {
        assert_eq!(
            table().to_csv(),
            "a,b,c\n3,1.0000000000000001e-1,NA\n-1,\"x, y\",true\n"
        );
    }

    #[test]
    fn float_text_round_trips() {
        for v in [0.1, 1.0 / 3.0, 6.02e23, -2.5e-300] {
            let s = Cell::Float(v).to_text();
            assert_eq!(s.parse::<f64>().unwrap(), v);
        }
    }

    #[test]
    fn json_rendering() {
        let v: Value = serde_json::from_str(&table().to_json()).unwrap();
        assert_eq!(v[0]["a"], 3);
        assert_eq!(v[0]["c"], Value::Null);
        assert_eq!(v[1]["b"], "x, y");
    }

    #[test]
    fn atomic_write_replaces() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("out.csv");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(std::fs::read(&p).unwrap(), b"two");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
