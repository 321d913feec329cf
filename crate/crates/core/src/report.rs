//! Machine-readable reports: versioned JSON documents and CSV tables.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::commutator::FluxReport;
use crate::error::{Error, Result};
use crate::spectral::Backend;

pub const SCHEMA: &str = "ohfl-report/1";

/// Column names of the flux-decay CSV.
pub const FLUX_COLUMNS: [&str; 5] = ["s", "flux", "W1_norm", "W2_norm", "W3_norm"];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparison {
    AtMost,
    AtLeast,
}

/// One pass/fail line of a report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub check: String,
    pub backend: Option<Backend>,
    pub field: Option<String>,
    pub s: Option<f64>,
    pub value: f64,
    pub threshold: f64,
    pub comparison: Comparison,
    pub pass: bool,
}

impl Check {
    fn new(check: impl Into<String>, value: f64, threshold: f64, comparison: Comparison) -> Self {
        let pass = match comparison {
            Comparison::AtMost => value <= threshold,
            Comparison::AtLeast => value >= threshold,
        };
        Self { check: check.into(), backend: None, field: None, s: None, value, threshold, comparison, pass }
    }

    /// Passes when `value <= threshold`; NaN fails.
    pub fn at_most(check: impl Into<String>, value: f64, threshold: f64) -> Self {
        Self::new(check, value, threshold, Comparison::AtMost)
    }

    pub fn at_least(check: impl Into<String>, value: f64, threshold: f64) -> Self {
        Self::new(check, value, threshold, Comparison::AtLeast)
    }

    pub fn backend(mut self, b: Backend) -> Self {
        self.backend = Some(b);
        self
    }

    pub fn field(mut self, f: impl Into<String>) -> Self {
        self.field = Some(f.into());
        self
    }

    pub fn at_s(mut self, s: f64) -> Self {
        self.s = Some(s);
        self
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    /// Optional text column written first, e.g. field names.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub labels: Vec<String>,
}

impl Table {
    pub fn new(name: impl Into<String>, columns: &[&str]) -> Self {
        Self {
            name: name.into(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
            label: None,
            labels: Vec::new(),
        }
    }

    pub fn labelled(name: impl Into<String>, label: &str, columns: &[&str]) -> Self {
        Self { label: Some(label.into()), ..Self::new(name, columns) }
    }

    pub fn push_labelled(&mut self, label: impl Into<String>, row: Vec<f64>) -> Result<()> {
        self.push(row)?;
        self.labels.push(label.into());
        Ok(())
    }

    pub fn push(&mut self, row: Vec<f64>) -> Result<()> {
        if row.len() != self.columns.len() {
            return Err(Error::Serialization(format!(
                "row of {} values for {} columns in table {}",
                row.len(),
                self.columns.len(),
                self.name
            )));
        }
        self.rows.push(row);
        Ok(())
    }

    /// Header line then one line per row; values in shortest round-trip form.
    pub fn to_csv(&self) -> String {
        let mut head: Vec<&str> = self.label.iter().map(|s| s.as_str()).collect();
        head.extend(self.columns.iter().map(|s| s.as_str()));
        let mut out = head.join(",");
        out.push('\n');
        for (i, row) in self.rows.iter().enumerate() {
            let mut cells: Vec<String> = Vec::with_capacity(row.len() + 1);
            if self.label.is_some() {
                cells.push(self.labels.get(i).cloned().unwrap_or_default());
            }
            cells.extend(row.iter().map(|v| v.to_string()));
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

pub fn flux_table(report: &FluxReport) -> Table {
    let mut t = Table::new("flux_decay", &FLUX_COLUMNS);
    t.rows = report.records.iter().map(|r| vec![r.s, r.flux, r.w1_norm, r.w2_norm, r.w3_norm]).collect();
    t
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Json,
    Csv,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema: String,
    pub command: String,
    pub version: String,
    /// The full configuration the run used, defaults included.
    pub config: Value,
    pub checks: Vec<Check>,
    pub data: Value,
    pub tables: Vec<Table>,
}

pub fn to_value(v: &impl Serialize) -> Result<Value> {
    serde_json::to_value(v).map_err(|e| Error::Serialization(e.to_string()))
}

impl Report {
    pub fn new(command: impl Into<String>, config: &impl Serialize) -> Result<Self> {
        Ok(Self {
            schema: SCHEMA.into(),
            command: command.into(),
            version: env!("CARGO_PKG_VERSION").into(),
            config: to_value(config)?,
            checks: Vec::new(),
            data: Value::Object(Default::default()),
            tables: Vec::new(),
        })
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.pass)
    }

    /// Stores `value` under `key` in the free-form data object.
    pub fn insert(&mut self, key: &str, value: &impl Serialize) -> Result<()> {
        let v = to_value(value)?;
        if let Value::Object(m) = &mut self.data {
            m.insert(key.into(), v);
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Serialization(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let r: Self = serde_json::from_str(text).map_err(|e| Error::Serialization(e.to_string()))?;
        if r.schema != SCHEMA {
            return Err(Error::Serialization(format!("unknown schema {}", r.schema)));
        }
        Ok(r)
    }

    /// `# schema` line, then each table as `# table <name>` followed by its CSV.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# schema {SCHEMA}");
        for t in &self.tables {
            let _ = writeln!(out, "# table {}", t.name);
            out.push_str(&t.to_csv());
        }
        out
    }

    pub fn render(&self, format: ReportFormat) -> Result<String> {
        match format {
            ReportFormat::Json => self.to_json(),
            ReportFormat::Csv => Ok(self.to_csv()),
        }
    }

    pub fn write(&self, path: impl AsRef<Path>, format: ReportFormat) -> Result<()> {
        std::fs::write(path, self.render(format)?)?;
        Ok(())
    }
}
