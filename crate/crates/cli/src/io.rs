//! CSV and JSON input/output.

use std::fmt::Display;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use evtdyn::dynsys::Space;
use serde_json::{json, Map, Value};

use crate::failure::{Failure, Outcome};

pub const SCHEMA_VERSION: u32 = 1;

/// Ordered `key=value` facts describing how a result was produced.
#[derive(Debug, Clone, Default)]
pub struct Provenance(Vec<(String, String)>);

impl Provenance {
    pub fn new(command: &str) -> Self {
        let mut p = Provenance::default();
        p.add("generator", format!("evtdyn {}", env!("CARGO_PKG_VERSION")));
        p.add("command", command);
        p
    }

    pub fn add(&mut self, key: &str, value: impl Display) {
        self.0.push((key.to_string(), value.to_string()));
    }

    fn write_comments(&self, out: &mut dyn Write) -> std::io::Result<()> {
        for (k, v) in &self.0 {
            writeln!(out, "# {k}={v}")?;
        }
        Ok(())
    }

    fn to_json(&self) -> Value {
        Value::Object(
            self.0
                .iter()
                .map(|(k, v)| (k.clone(), Value::String(v.clone())))
                .collect::<Map<_, _>>(),
        )
    }
}

pub fn open_out(path: Option<&Path>) -> Outcome<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| {
            Failure::Input(format!("cannot create {}: {e}", p.display()))
        })?)),
        None => Box::new(BufWriter::new(std::io::stdout().lock())),
    })
}

/// Shortest representation that parses back to the same value; empty when missing.
pub fn num(v: f64) -> String {
    format!("{v}")
}

pub fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }
}

pub fn write_csv(out: &mut dyn Write, prov: &Provenance, table: &Table) -> Outcome<()> {
    prov.write_comments(out)?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(&table.header)?;
    for r in &table.rows {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(())
}

/// `{schema_version, provenance, result}`.
pub fn envelope(prov: &Provenance, result: Value) -> Value {
    json!({
        "schema_version": SCHEMA_VERSION,
        "provenance": prov.to_json(),
        "result": result,
    })
}

pub fn write_json(out: &mut dyn Write, value: &Value) -> Outcome<()> {
    serde_json::to_writer_pretty(&mut *out, value)
        .map_err(|e| Failure::Input(format!("cannot write JSON: {e}")))?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}

/// Numeric CSV stored row-major.
pub struct InputTable {
    pub columns: usize,
    pub values: Vec<f64>,
    /// Phase space recorded in the provenance header, if any.
    pub space: Option<Space>,
}

impl InputTable {
    pub fn rows(&self) -> usize {
        self.values.len() / self.columns
    }

    pub fn column(&self, c: usize) -> Vec<f64> {
        self.values
            .chunks_exact(self.columns)
            .map(|r| r[c])
            .collect()
    }
}

fn header_space(path: &Path) -> Outcome<Option<Space>> {
    let f = File::open(path)
        .map_err(|e| Failure::Input(format!("cannot read {}: {e}", path.display())))?;
    for line in BufReader::new(f).lines() {
        let line = line?;
        let Some(body) = line.trim_start().strip_prefix('#') else {
            break;
        };
        if let Some(v) = body.trim().strip_prefix("space=") {
            let space = serde_json::from_value(Value::String(v.trim().into())).map_err(|_| {
                Failure::Input(format!("{}: unknown space '{v}' in header", path.display()))
            })?;
            return Ok(Some(space));
        }
    }
    Ok(None)
}

/// Reads a numeric CSV; `#` lines are comments and a non-numeric first row is a header.
pub fn read_table(path: &Path) -> Outcome<InputTable> {
    let space = header_space(path)?;
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_path(path)
        .map_err(|e| Failure::Input(format!("cannot read {}: {e}", path.display())))?;
    let mut columns = 0;
    let mut values = Vec::new();
    let mut first = true;
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
        let line = rec.position().map_or(0, |p| p.line());
        let parsed: Result<Vec<f64>, _> = rec.iter().map(|f| f.parse::<f64>()).collect();
        match parsed {
            Ok(row) => {
                if columns == 0 {
                    columns = row.len();
                } else if row.len() != columns {
                    return Err(Failure::Input(format!(
                        "{}: line {line}: expected {columns} fields, found {}",
                        path.display(),
                        row.len()
                    )));
                }
                if let Some(bad) = row.iter().position(|v| !v.is_finite()) {
                    return Err(Failure::Input(format!(
                        "{}: line {line}: field {} is not finite",
                        path.display(),
                        bad + 1
                    )));
                }
                values.extend(row);
            }
            Err(_) if first => {}
            Err(_) => {
                return Err(Failure::Input(format!(
                    "{}: line {line}: non-numeric field",
                    path.display()
                )))
            }
        }
        first = false;
    }
    if columns == 0 {
        return Err(Failure::Input(format!("{}: no data rows", path.display())));
    }
    Ok(InputTable {
        columns,
        values,
        space,
    })
}
