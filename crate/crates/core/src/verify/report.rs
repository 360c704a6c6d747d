//! Structured experiment results and their JSON/CSV/text renderings.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};

/// How a computed value is compared with its prediction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "tolerance", rename_all = "kebab-case")]
pub enum Rule {
    /// `|computed - predicted| <= tol`
    Absolute(f64),
    /// `|computed - predicted| <= tol |predicted|`
    Relative(f64),
    /// `computed >= predicted (1 - slack)`
    AtLeast(f64),
    /// `computed <= predicted (1 + slack)`
    AtMost(f64),
    /// `computed > predicted`
    Exceeds,
}

impl Rule {
    pub fn holds(&self, computed: f64, predicted: f64) -> bool {
        if !computed.is_finite() {
            return false;
        }
        match *self {
            Rule::Absolute(t) => (computed - predicted).abs() <= t,
            Rule::Relative(t) => (computed - predicted).abs() <= t * predicted.abs(),
            Rule::AtLeast(s) => computed >= predicted * (1.0 - s),
            Rule::AtMost(s) => computed <= predicted * (1.0 + s),
            Rule::Exceeds => computed > predicted,
        }
    }

    pub fn tolerance(&self) -> f64 {
        match *self {
            Rule::Absolute(t) | Rule::Relative(t) | Rule::AtLeast(t) | Rule::AtMost(t) => t,
            Rule::Exceeds => 0.0,
        }
    }
}

/// One computed-versus-predicted comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub quantity: String,
    pub parameter: f64,
    pub computed: f64,
    pub predicted: f64,
    pub provenance: String,
    pub rule: Rule,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub experiment_id: String,
    pub parameters: BTreeMap<String, Value>,
    pub checks: Vec<Check>,
    /// Reported quantities without a prediction (fitted constants, norms).
    pub computed: BTreeMap<String, f64>,
    pub truncation_counters: BTreeMap<String, u64>,
    pub pass: bool,
    #[serde(skip)]
    pub wall_time: f64,
}

pub struct ReportBuilder {
    report: ExperimentReport,
    started: std::time::Instant,
}

impl ReportBuilder {
    pub fn new(id: &str) -> Self {
        Self {
            report: ExperimentReport {
                experiment_id: id.to_string(),
                parameters: BTreeMap::new(),
                checks: Vec::new(),
                computed: BTreeMap::new(),
                truncation_counters: BTreeMap::new(),
                pass: true,
                wall_time: 0.0,
            },
            started: std::time::Instant::now(),
        }
    }

    pub fn param<V: Serialize>(&mut self, key: &str, value: V) -> &mut Self {
        let v = serde_json::to_value(value).unwrap_or(Value::Null);
        self.report.parameters.insert(key.to_string(), v);
        self
    }

    /// Adds a check; an empty provenance is rejected.
    pub fn check(
        &mut self,
        quantity: &str,
        parameter: f64,
        computed: f64,
        predicted: f64,
        provenance: &str,
        rule: Rule,
    ) -> Result<bool> {
        if provenance.trim().is_empty() {
            return Err(Error::MissingProvenance(quantity.to_string()));
        }
        let pass = rule.holds(computed, predicted);
        self.report.checks.push(Check {
            quantity: quantity.to_string(),
            parameter,
            computed,
            predicted,
            provenance: provenance.to_string(),
            rule,
            pass,
        });
        Ok(pass)
    }

    pub fn note(&mut self, key: &str, value: f64) -> &mut Self {
        self.report.computed.insert(key.to_string(), value);
        self
    }

    pub fn counter(&mut self, key: &str, value: u64) -> &mut Self {
        *self.report.truncation_counters.entry(key.to_string()).or_insert(0) += value;
        self
    }

    pub fn finish(mut self) -> ExperimentReport {
        self.report.pass = self.report.checks.iter().all(|c| c.pass);
        self.report.wall_time = self.started.elapsed().as_secs_f64();
        self.report
    }
}

/// Header of the scan CSV.
pub const CSV_HEADER: &str = "quantity,parameter,computed,predicted,tolerance,pass";

impl ExperimentReport {
    pub fn check(&self, quantity: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.quantity == quantity)
    }

    pub fn checks_named<'a>(&'a self, quantity: &'a str) -> impl Iterator<Item = &'a Check> + 'a {
        self.checks.iter().filter(move |c| c.quantity == quantity)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidArgument(format!("report json: {e}")))
    }

    /// One row per check; reals with 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let mut s = String::new();
        writeln!(s, "{CSV_HEADER}").unwrap();
        for c in &self.checks {
            writeln!(
                s,
                "{},{:.16e},{:.16e},{:.16e},{:.16e},{}",
                c.quantity,
                c.parameter,
                c.computed,
                c.predicted,
                c.rule.tolerance(),
                c.pass
            )
            .unwrap();
        }
        w.write_all(s.as_bytes())?;
        Ok(())
    }

    /// Aligned plain-text table.
    pub fn summary(&self) -> String {
        let mut s = String::new();
        writeln!(s, "experiment: {}", self.experiment_id).unwrap();
        for (k, v) in &self.parameters {
            writeln!(s, "  {k} = {v}").unwrap();
        }
        let width = self.checks.iter().map(|c| c.quantity.len()).max().unwrap_or(8).max(8);
        writeln!(
            s,
            "{:<width$}  {:>12}  {:>16}  {:>16}  {:<18}  {}",
            "quantity", "parameter", "computed", "predicted", "rule", "result"
        )
        .unwrap();
        for c in &self.checks {
            let rule = match c.rule {
                Rule::Absolute(t) => format!("abs {t:.1e}"),
                Rule::Relative(t) => format!("rel {t:.1e}"),
                Rule::AtLeast(t) => format!(">= (1-{t})"),
                Rule::AtMost(t) => format!("<= (1+{t})"),
                Rule::Exceeds => "> predicted".to_string(),
            };
            writeln!(
                s,
                "{:<width$}  {:>12.6}  {:>16.9e}  {:>16.9e}  {:<18}  {}",
                c.quantity,
                c.parameter,
                c.computed,
                c.predicted,
                rule,
                if c.pass { "pass" } else { "FAIL" }
            )
            .unwrap();
        }
        if !self.computed.is_empty() {
            writeln!(s, "reported:").unwrap();
            for (k, v) in &self.computed {
                writeln!(s, "  {k} = {v:.9e}").unwrap();
            }
        }
        if !self.truncation_counters.is_empty() {
            writeln!(s, "outside-domain reads:").unwrap();
            for (k, v) in &self.truncation_counters {
                writeln!(s, "  {k} = {v}").unwrap();
            }
        }
        writeln!(s, "overall: {}", if self.pass { "pass" } else { "FAIL" }).unwrap();
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rules() {
        assert!(Rule::Absolute(0.1).holds(1.05, 1.0));
        assert!(!Rule::Relative(0.01).holds(1.05, 1.0));
        assert!(Rule::AtLeast(0.1).holds(0.95, 1.0));
        assert!(!Rule::AtLeast(0.0).holds(0.95, 1.0));
        assert!(Rule::AtMost(0.05).holds(1.04, 1.0));
        assert!(!Rule::Exceeds.holds(1.0, 1.0));
        assert!(!Rule::AtMost(1.0).holds(f64::NAN, 1.0));
    }

    #[test]
    fn provenance_is_required() {
        let mut b = ReportBuilder::new("x");
        assert!(matches!(b.check("q", 0.0, 1.0, 1.0, " ", Rule::Absolute(0.0)), Err(Error::MissingProvenance(_))));
    }

    #[test]
    fn pass_is_conjunction_and_json_round_trips() {
        let mut b = ReportBuilder::new("demo");
        b.param("n", 2).param("ts", vec![0.5, 1.0]);
        b.check("a", 0.5, 1.0, 1.0, "identity", Rule::Relative(1e-9)).unwrap();
        b.note("fitted", 3.25).counter("outside", 4);
        let r = b.finish();
        assert!(r.pass);
        let back = ExperimentReport::from_json(&r.to_json()).unwrap();
        assert_eq!(back.checks, r.checks);
        assert_eq!(back.parameters, r.parameters);

        let mut b = ReportBuilder::new("demo");
        b.check("a", 0.0, 1.0, 1.0, "identity", Rule::Relative(1e-9)).unwrap();
        b.check("b", 0.0, 2.0, 1.0, "identity", Rule::AtMost(0.5)).unwrap();
        let r = b.finish();
        assert!(!r.pass);
        let mut csv = Vec::new();
        r.write_csv(&mut csv).unwrap();
        let text = String::from_utf8(csv).unwrap();
        assert_eq!(text.lines().next().unwrap(), CSV_HEADER);
        assert_eq!(text.lines().nth(2).unwrap(), "b,0.0000000000000000e0,2.0000000000000000e0,1.0000000000000000e0,5.0000000000000000e-1,false");
        assert!(r.summary().contains("FAIL"));
    }
}
