//! Uniform result record for the lemma checks.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

/// Direction of the checked inequality.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    /// measured ≤ bound
    AtMost,
    /// measured ≥ bound
    AtLeast,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LemmaReport {
    pub lemma: String,
    pub inputs: BTreeMap<String, Value>,
    pub relation: Relation,
    pub measured: f64,
    pub bound: f64,
    /// Allowed violation before the check fails.
    pub slack: f64,
    /// Signed distance to the bound, positive when the inequality holds.
    pub margin: f64,
    pub pass: bool,
    /// Individually measured terms.
    pub details: BTreeMap<String, f64>,
    pub notes: Vec<String>,
}

impl LemmaReport {
    pub fn new(lemma: &str, relation: Relation, measured: f64, bound: f64, slack: f64) -> Self {
        let margin = match relation {
            Relation::AtMost => bound - measured,
            Relation::AtLeast => measured - bound,
        };
        Self {
            lemma: lemma.to_string(),
            inputs: BTreeMap::new(),
            relation,
            measured,
            bound,
            slack,
            margin,
            pass: margin.is_finite() && margin >= -slack,
            details: BTreeMap::new(),
            notes: Vec::new(),
        }
    }

    pub fn at_most(lemma: &str, measured: f64, bound: f64, slack: f64) -> Self {
        Self::new(lemma, Relation::AtMost, measured, bound, slack)
    }

    pub fn at_least(lemma: &str, measured: f64, bound: f64, slack: f64) -> Self {
        Self::new(lemma, Relation::AtLeast, measured, bound, slack)
    }

    pub fn input(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.inputs.insert(key.to_string(), value.into());
        self
    }

    pub fn detail(mut self, key: &str, value: f64) -> Self {
        self.details.insert(key.to_string(), value);
        self
    }

    pub fn note(mut self, text: impl Into<String>) -> Self {
        self.notes.push(text.into());
        self
    }

    /// Fails the report regardless of margin (used for vacuous or degenerate cases
    /// that must not count as passes).
    pub fn force_fail(mut self, reason: &str) -> Self {
        self.pass = false;
        self.notes.push(reason.to_string());
        self
    }

    /// `key=value` pairs joined by `;`, in key order.
    pub fn params_string(&self) -> String {
        self.inputs
            .iter()
            .map(|(k, v)| match v {
                Value::String(s) => format!("{k}={s}"),
                other => format!("{k}={other}"),
            })
            .collect::<Vec<_>>()
            .join(";")
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("report serializes")
    }
}

/// Combined verdict of a list of reports.
pub fn all_pass(reports: &[LemmaReport]) -> bool {
    reports.iter().all(|r| r.pass)
}

/// Sorts by lemma id, keeping the original order inside one id.
pub fn merge_sorted(mut reports: Vec<LemmaReport>) -> Vec<LemmaReport> {
    reports.sort_by(|a, b| a.lemma.cmp(&b.lemma));
    reports
}
