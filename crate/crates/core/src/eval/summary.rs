use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::session::{Classification, TrialResult};

/// Operator annotation removing one trial from the outcome table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Exclusion {
    /// Label or EPC of the tag.
    pub tag: String,
    pub completed_at: DateTime<Utc>,
    #[serde(default)]
    pub reason: String,
}

impl Exclusion {
    fn matches(&self, r: &TrialResult) -> bool {
        (r.tag.label == self.tag || r.tag.epc.eq_ignore_ascii_case(&self.tag)) && r.completed_at == self.completed_at
    }
}

pub fn load_exclusions(path: impl AsRef<Path>) -> Result<Vec<Exclusion>, EvalError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| EvalError::Io(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| EvalError::Io(format!("{}: {e}", path.display())))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct OutcomeCounts {
    /// All trials, excluded ones included; every percentage uses this base.
    pub n: usize,
    pub success: usize,
    pub system_failure: usize,
    pub erroneous: usize,
    pub excluded: usize,
    pub success_pct: f64,
    pub system_failure_pct: f64,
    pub erroneous_pct: f64,
    pub excluded_pct: f64,
    /// Set when there was nothing to count.
    pub empty: bool,
}

impl OutcomeCounts {
    fn add(&mut self, c: Classification) {
        match c {
            Classification::Success => self.success += 1,
            Classification::SystemFailure => self.system_failure += 1,
            Classification::Erroneous => self.erroneous += 1,
        }
    }

    fn finish(&mut self) {
        self.empty = self.n == 0;
        let pct = |k: usize| if self.n == 0 { 0.0 } else { 100.0 * k as f64 / self.n as f64 };
        self.success_pct = pct(self.success);
        self.system_failure_pct = pct(self.system_failure);
        self.erroneous_pct = pct(self.erroneous);
        self.excluded_pct = pct(self.excluded);
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SuccessSummary {
    pub per_tag: BTreeMap<String, OutcomeCounts>,
    pub total: OutcomeCounts,
}

pub fn success_summary(trials: &[TrialResult], exclusions: &[Exclusion]) -> SuccessSummary {
    let mut s = SuccessSummary::default();
    for r in trials {
        let row = s.per_tag.entry(r.tag.label.clone()).or_default();
        row.n += 1;
        s.total.n += 1;
        if exclusions.iter().any(|e| e.matches(r)) {
            row.excluded += 1;
            s.total.excluded += 1;
            continue;
        }
        row.add(r.classification);
        s.total.add(r.classification);
    }
    for row in s.per_tag.values_mut() {
        row.finish();
    }
    s.total.finish();
    s
}

impl SuccessSummary {
    /// Columnar text: one row per tag plus a total.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<12} {:>6} {:>16} {:>16} {:>16} {:>16}",
            "tag", "n", "success", "system_failure", "erroneous", "excluded"
        );
        let cell = |k: usize, p: f64| format!("{k} ({p:.1}%)");
        let rows = self.per_tag.iter().map(|(k, v)| (k.as_str(), v));
        for (name, c) in rows.chain(std::iter::once(("total", &self.total))) {
            let _ = writeln!(
                out,
                "{:<12} {:>6} {:>16} {:>16} {:>16} {:>16}",
                name,
                c.n,
                cell(c.success, c.success_pct),
                cell(c.system_failure, c.system_failure_pct),
                cell(c.erroneous, c.erroneous_pct),
                cell(c.excluded, c.excluded_pct)
            );
        }
        out
    }
}
