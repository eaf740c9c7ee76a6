//! The JSON run report and its text rendering.

use std::collections::BTreeMap;

use serde::Serialize;

use hornopt_core::hccs::pretty_subst;
use hornopt_core::optimizer::TraceEntry;
use hornopt_core::smtio::SmtStats;
use hornopt_core::OptimizeResult;

use crate::oracle::OracleReport;
use crate::RunOutcome;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct StageIterations {
    pub predicate: String,
    pub iterations: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub schema_version: u32,
    pub status: String,
    /// Why the run ended in Unknown, if it did.
    pub reason: Option<String>,
    pub types: BTreeMap<String, String>,
    pub predicates: BTreeMap<String, String>,
    pub iterations: Vec<StageIterations>,
    pub template_shape: String,
    pub wall_clock_ms: u128,
    pub smt: SmtStats,
    pub validated: Option<bool>,
    pub warnings: Vec<String>,
    pub oracle: Option<OracleReport>,
    pub trace: Vec<TraceEntry>,
}

impl Report {
    pub fn new(out: &RunOutcome, smt: SmtStats, oracle: Option<OracleReport>) -> Report {
        let o = &out.optimized;
        Report {
            schema_version: SCHEMA_VERSION,
            status: o.result.status().to_string(),
            reason: match &o.result {
                OptimizeResult::Unknown(r) => Some(r.clone()),
                _ => None,
            },
            types: out.types.clone(),
            predicates: o
                .result
                .solution()
                .map(|t| t.iter().map(|(p, c)| (p.clone(), c.pretty())).collect())
                .unwrap_or_default(),
            iterations: o
                .iterations
                .iter()
                .map(|(p, n)| StageIterations {
                    predicate: p.clone(),
                    iterations: *n,
                })
                .collect(),
            template_shape: o.shape.to_string(),
            wall_clock_ms: out.elapsed.as_millis(),
            smt,
            validated: out.validated,
            warnings: o.warnings.clone(),
            oracle,
            trace: o.trace.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Human-readable summary: status, then types or the solution.
pub fn render_text(out: &RunOutcome) -> String {
    let mut s = format!("{}\n", out.optimized.result.status());
    if let OptimizeResult::Unknown(r) = &out.optimized.result {
        s.push_str(&format!("reason: {r}\n"));
    }
    if !out.types.is_empty() {
        for (f, t) in &out.types {
            s.push_str(&format!("{f} : {t}\n"));
        }
    } else if let Some(th) = out.solution() {
        s.push_str(&pretty_subst(th));
        if !s.ends_with('\n') {
            s.push('\n');
        }
    }
    s
}
