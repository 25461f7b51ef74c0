//! Shared report shapes for command output. Numerical results never claim
//! more than the computation supports: a failed check is reported as a
//! model violation together with the slack that was in force.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub const REPORT_VERSION: &str = "1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecordStatus {
    /// check ran and the predicted bound held
    Consistent,
    /// check ran and the bound failed at the stated slack
    Violation,
    /// hypotheses of the statement were not met on this space
    NotApplicable,
    /// check could not run (budget, domain, configuration)
    Error,
}

impl RecordStatus {
    pub fn label(self) -> &'static str {
        match self {
            RecordStatus::Consistent => "consistent",
            RecordStatus::Violation => "model violation - inspect slack",
            RecordStatus::NotApplicable => "n/a",
            RecordStatus::Error => "error",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckRecord {
    pub key: String,
    pub status: RecordStatus,
    /// human-readable one-liner
    pub detail: String,
    /// named numeric outputs of the check
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub values: BTreeMap<String, f64>,
    /// slack applied before declaring a violation, when one applies
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slack: Option<f64>,
}

impl CheckRecord {
    pub fn new(key: &str, status: RecordStatus, detail: impl Into<String>) -> Self {
        CheckRecord {
            key: key.to_string(),
            status,
            detail: detail.into(),
            values: BTreeMap::new(),
            slack: None,
        }
    }

    pub fn with(mut self, name: &str, value: f64) -> Self {
        self.values.insert(name.to_string(), value);
        self
    }

    pub fn with_slack(mut self, slack: f64) -> Self {
        self.slack = Some(slack);
        self
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReportEnvelope {
    pub version: String,
    pub command: String,
    /// echo of the resolved configuration (space spec, seed, tolerances)
    pub config: BTreeMap<String, String>,
    pub records: Vec<CheckRecord>,
    pub summary: String,
}

impl ReportEnvelope {
    pub fn new(command: &str) -> Self {
        ReportEnvelope {
            version: REPORT_VERSION.to_string(),
            command: command.to_string(),
            config: BTreeMap::new(),
            records: Vec::new(),
            summary: String::new(),
        }
    }

    pub fn config(&mut self, key: &str, value: impl ToString) {
        self.config.insert(key.to_string(), value.to_string());
    }

    pub fn push(&mut self, record: CheckRecord) {
        self.records.push(record);
    }

    pub fn finalize(&mut self) {
        let violations =
            self.records.iter().filter(|r| r.status == RecordStatus::Violation).count();
        let errors = self.records.iter().filter(|r| r.status == RecordStatus::Error).count();
        self.summary = if errors > 0 {
            format!("{errors} check(s) errored, {violations} violation(s)")
        } else if violations > 0 {
            format!("{violations} violation(s) at stated slack")
        } else {
            "all checks consistent".to_string()
        };
    }

    /// worst outcome across records, for process exit codes
    pub fn worst_status(&self) -> RecordStatus {
        let mut worst = RecordStatus::Consistent;
        for r in &self.records {
            worst = match (worst, r.status) {
                (_, RecordStatus::Error) | (RecordStatus::Error, _) => RecordStatus::Error,
                (_, RecordStatus::Violation) | (RecordStatus::Violation, _) => {
                    RecordStatus::Violation
                }
                (w, RecordStatus::NotApplicable) => w,
                (RecordStatus::NotApplicable, s) => s,
                (w, RecordStatus::Consistent) => w,
            };
        }
        worst
    }

    pub fn to_table(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("command: {}\n", self.command));
        for (k, v) in &self.config {
            out.push_str(&format!("  {k} = {v}\n"));
        }
        let key_w = self.records.iter().map(|r| r.key.len()).max().unwrap_or(3).max(3);
        for r in &self.records {
            out.push_str(&format!("{:key_w$}  {:32}  {}\n", r.key, r.status.label(), r.detail));
            for (name, value) in &r.values {
                out.push_str(&format!("{:key_w$}    {name} = {value:.6}\n", ""));
            }
            if let Some(s) = r.slack {
                out.push_str(&format!("{:key_w$}    slack = {s:.6}\n", ""));
            }
        }
        out.push_str(&format!("summary: {}\n", self.summary));
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn worst_status_ordering() {
        let mut e = ReportEnvelope::new("demo");
        e.push(CheckRecord::new("a", RecordStatus::Consistent, "ok"));
        assert_eq!(e.worst_status(), RecordStatus::Consistent);
        e.push(CheckRecord::new("b", RecordStatus::NotApplicable, "skip"));
        assert_eq!(e.worst_status(), RecordStatus::Consistent);
        e.push(CheckRecord::new("c", RecordStatus::Violation, "bad").with_slack(0.01));
        assert_eq!(e.worst_status(), RecordStatus::Violation);
        e.push(CheckRecord::new("d", RecordStatus::Error, "boom"));
        assert_eq!(e.worst_status(), RecordStatus::Error);
        e.finalize();
        assert!(e.summary.contains("errored"));
    }

    #[test]
    fn json_round_trip() {
        let mut e = ReportEnvelope::new("demo");
        e.config("seed", 7);
        e.push(CheckRecord::new("x", RecordStatus::Consistent, "fine").with("ratio", 1.25));
        e.finalize();
        let s = serde_json::to_string(&e).unwrap();
        let back: ReportEnvelope = serde_json::from_str(&s).unwrap();
        assert_eq!(back.records[0].values["ratio"], 1.25);
        assert_eq!(back.summary, "all checks consistent");
    }

    #[test]
    fn violation_label_never_overclaims() {
        assert!(!RecordStatus::Violation.label().contains("refut"));
    }
}
