//! Experiment reports with a byte-stable CSV rendering.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

pub const CSV_SCHEMA_VERSION: u32 = 1;

/// Relative slack allowed in `measured ≤ bound`.
pub const INEQUALITY_SLACK: f64 = 1e-9;

pub fn within_bound(measured: f64, bound: f64) -> bool {
    measured <= bound * (1.0 + INEQUALITY_SLACK)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub case: String,
    pub trial: u64,
    pub measured: f64,
    pub bound: f64,
    pub ratio: f64,
    pub pass: bool,
    /// Auxiliary named values, kept in insertion order.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub extras: Vec<(String, f64)>,
}

impl Record {
    pub fn new(case: impl Into<String>, trial: u64, measured: f64, bound: f64) -> Self {
        Self {
            case: case.into(),
            trial,
            measured,
            bound,
            ratio: measured / bound,
            pass: within_bound(measured, bound),
            extras: Vec::new(),
        }
    }

    pub fn with(mut self, key: &str, value: f64) -> Self {
        self.extras.push((key.to_string(), value));
        self
    }

    pub fn extra(&self, key: &str) -> Option<f64> {
        self.extras.iter().find(|(k, _)| k == key).map(|(_, v)| *v)
    }
}

/// An aggregate assertion, e.g. a slope window.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    /// Human-readable acceptance rule.
    pub rule: String,
    pub pass: bool,
}

impl Check {
    pub fn new(name: impl Into<String>, value: f64, rule: impl Into<String>, pass: bool) -> Self {
        Self { name: name.into(), value, rule: rule.into(), pass }
    }

    pub fn at_most(name: impl Into<String>, value: f64, max: f64) -> Self {
        Self::new(name, value, format!("<= {max}"), value <= max)
    }

    pub fn in_range(name: impl Into<String>, value: f64, lo: f64, hi: f64) -> Self {
        Self::new(name, value, format!("in [{lo}, {hi}]"), value >= lo && value <= hi)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub id: String,
    pub version: String,
    pub seed: Option<u64>,
    pub parameters: serde_json::Value,
    /// The bound each record is compared against, as a formula.
    pub bound_formula: String,
    pub records: Vec<Record>,
    pub checks: Vec<Check>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    pub wall_time_ms: f64,
}

impl ExperimentReport {
    pub fn new(id: &str, seed: Option<u64>, parameters: serde_json::Value, bound_formula: &str) -> Self {
        Self {
            id: id.into(),
            version: env!("CARGO_PKG_VERSION").into(),
            seed,
            parameters,
            bound_formula: bound_formula.into(),
            records: Vec::new(),
            checks: Vec::new(),
            notes: Vec::new(),
            wall_time_ms: 0.0,
        }
    }

    pub fn passed(&self) -> bool {
        self.records.iter().all(|r| r.pass) && self.checks.iter().all(|c| c.pass)
    }

    pub fn failures(&self) -> Vec<String> {
        let mut out: Vec<String> = self
            .records
            .iter()
            .filter(|r| !r.pass)
            .map(|r| format!("{} trial {}: {} > {}", r.case, r.trial, r.measured, r.bound))
            .collect();
        out.extend(self.checks.iter().filter(|c| !c.pass).map(|c| format!("{}: {} not {}", c.name, c.value, c.rule)));
        out
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    /// CSV with a commented header; excludes the wall time so reruns are byte-identical.
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# latfrac report schema {CSV_SCHEMA_VERSION}");
        let _ = writeln!(s, "# experiment: {}", self.id);
        let _ = writeln!(s, "# version: {}", self.version);
        match self.seed {
            Some(seed) => {
                let _ = writeln!(s, "# seed: {seed}");
            }
            None => {
                let _ = writeln!(s, "# seed: none");
            }
        }
        let _ = writeln!(s, "# parameters: {}", self.parameters);
        let _ = writeln!(s, "# bound: {}", self.bound_formula);
        for note in &self.notes {
            let _ = writeln!(s, "# note: {note}");
        }
        s.push_str("kind,case,trial,measured,bound,ratio,pass,extras\n");
        for r in &self.records {
            let extras: Vec<String> = r.extras.iter().map(|(k, v)| format!("{k}={v}")).collect();
            let _ = writeln!(
                s,
                "record,{},{},{},{},{},{},{}",
                csv_field(&r.case),
                r.trial,
                r.measured,
                r.bound,
                r.ratio,
                r.pass,
                csv_field(&extras.join(";"))
            );
        }
        for c in &self.checks {
            let _ = writeln!(s, "check,{},,{},,,{},{}", csv_field(&c.name), c.value, c.pass, csv_field(&c.rule));
        }
        s
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("report serializes")
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}
