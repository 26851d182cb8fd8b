use std::collections::BTreeMap;

use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    KillPoles,
    Prescribe,
    Evgrafov,
}

/// One builder step; serialized one record per line.
#[derive(Clone, Debug, Serialize)]
pub struct ProvenanceRecord {
    pub stage: usize,
    pub circle_radius: f64,
    pub branch: Branch,
    pub rank: Option<usize>,
    pub shift_n0: Option<usize>,
    pub residuals: BTreeMap<String, f64>,
}

impl ProvenanceRecord {
    pub(crate) fn new(stage: usize, circle_radius: f64, branch: Branch) -> Self {
        ProvenanceRecord { stage, circle_radius, branch, rank: None, shift_n0: None, residuals: BTreeMap::new() }
    }

    pub(crate) fn residual(mut self, key: &str, v: f64) -> Self {
        self.residuals.insert(key.to_string(), v);
        self
    }
}

/// JSON lines, in step order.
pub fn provenance_jsonl(records: &[ProvenanceRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("provenance records serialize"));
        out.push('\n');
    }
    out
}
