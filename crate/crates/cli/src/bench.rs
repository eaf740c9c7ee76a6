//! Benchmark harness: every `<case>.ml` or `<case>.hccs` in a directory
//! next to a `<case>.json` sidecar is run under a time limit and
//! classified as Verified, TimeOut or Other.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Duration;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use hornopt_core::hccs::{default_params, parse_formula};
use hornopt_core::optimizer::{pred_compare, Direction, PrefOrder};
use hornopt_core::{ClosedPred, PredSubst};

use crate::oracle::{oracle_check, OracleOpts};
use crate::{load_hccs, load_program, parse_shape, read_file, run, Config, DriverError};

/// Expected outcome of a case.
#[derive(Clone, Debug, Default, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct Sidecar {
    /// Free-form category, e.g. `disprove-termination`.
    pub kind: String,
    #[serde(default)]
    pub instrument: Option<String>,
    #[serde(default)]
    pub max_template: Option<String>,
    #[serde(default)]
    pub directives: Option<String>,
    /// Expected predicates, bodies over `x1 … xn`, matched up to equivalence.
    #[serde(default)]
    pub expect: BTreeMap<String, String>,
    /// Acceptable statuses; Sol and OptSol when empty.
    #[serde(default)]
    pub status: Vec<String>,
}

#[derive(Clone, Copy, Debug, Serialize, PartialEq, Eq)]
pub enum Verdict {
    Verified,
    TimeOut,
    Other,
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct CaseResult {
    pub case: String,
    pub kind: String,
    pub verdict: Verdict,
    pub status: String,
    pub iterations: usize,
    pub ms: u128,
    /// Interpreter sampling of the inferred types; `None` for clause input.
    pub oracle: Option<bool>,
    pub note: String,
}

#[derive(Clone, Debug, Default, Serialize, PartialEq)]
pub struct BenchTable {
    pub cases: Vec<CaseResult>,
}

impl BenchTable {
    pub fn count(&self, v: Verdict) -> usize {
        self.cases.iter().filter(|c| c.verdict == v).count()
    }

    pub fn render(&self) -> String {
        let mut s = format!(
            "{:<28} {:<22} {:<9} {:<8} {:>5} {:>9} {:<6}  note\n",
            "case", "kind", "verdict", "status", "iters", "ms", "oracle"
        );
        for c in &self.cases {
            s.push_str(&format!(
                "{:<28} {:<22} {:<9} {:<8} {:>5} {:>9} {:<6}  {}\n",
                c.case,
                c.kind,
                format!("{:?}", c.verdict),
                c.status,
                c.iterations,
                c.ms,
                match c.oracle {
                    Some(true) => "ok",
                    Some(false) => "FAIL",
                    None => "-",
                },
                c.note
            ));
        }
        s.push_str(&format!(
            "verified {} / timeout {} / other {} of {}\n",
            self.count(Verdict::Verified),
            self.count(Verdict::TimeOut),
            self.count(Verdict::Other),
            self.cases.len()
        ));
        s
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("table serializes")
    }
}

#[derive(Clone, Debug)]
pub struct BenchOpts {
    pub timeout: Duration,
    pub jobs: usize,
}

impl Default for BenchOpts {
    fn default() -> BenchOpts {
        BenchOpts {
            timeout: Duration::from_secs(100),
            jobs: 1,
        }
    }
}

/// Input files with a sidecar, sorted by name.
pub fn discover(dir: &Path) -> Result<Vec<(PathBuf, PathBuf)>, DriverError> {
    let io = |err| DriverError::Io {
        path: dir.display().to_string(),
        err,
    };
    let mut out = Vec::new();
    for e in std::fs::read_dir(dir).map_err(io)? {
        let p = e.map_err(io)?.path();
        let ext = p.extension().and_then(|e| e.to_str());
        if matches!(ext, Some("ml" | "hccs")) {
            let side = p.with_extension("json");
            if side.exists() {
                out.push((p, side));
            }
        }
    }
    out.sort();
    Ok(out)
}

/// `Some(reason)` when `theta` misses an expected predicate.
pub fn mismatch(
    theta: &PredSubst,
    expect: &BTreeMap<String, String>,
    smt: &hornopt_core::smtio::Smt,
) -> Option<String> {
    for (p, body) in expect {
        let Some(got) = theta.get(p) else {
            return Some(format!("no `{p}` in the solution"));
        };
        let want = match parse_formula(body) {
            Ok(f) => ClosedPred::new(default_params(got.arity()), f),
            Err(e) => return Some(format!("bad expectation for `{p}`: {e}")),
        };
        let c = pred_compare(got, &want, Direction::Max, smt);
        if c.order != PrefOrder::Equiv {
            return Some(format!("{p} ↦ {} is not ≡ {body}", got.pretty()));
        }
    }
    None
}

pub fn run_case(input: &Path, sidecar: &Path, opts: &BenchOpts) -> CaseResult {
    let case = input
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("?")
        .to_string();
    let mut res = CaseResult {
        case,
        kind: String::new(),
        verdict: Verdict::Other,
        status: "-".into(),
        iterations: 0,
        ms: 0,
        oracle: None,
        note: String::new(),
    };
    let side: Sidecar = match read_file(sidecar).and_then(|t| {
        serde_json::from_str(&t)
            .map_err(|e| DriverError::Input(format!("{}: {e}", sidecar.display())))
    }) {
        Ok(s) => s,
        Err(e) => {
            res.note = e.to_string();
            return res;
        }
    };
    res.kind = side.kind.clone();
    let loaded = (|| {
        let cfg = Config {
            timeout: Some(opts.timeout),
            max_template: side
                .max_template
                .as_deref()
                .map(parse_shape)
                .transpose()?
                .unwrap_or(Config::default().max_template),
            instrument: side.instrument.clone(),
            directives: side.directives.clone().unwrap_or_default(),
            ..Config::default()
        };
        let src = read_file(input)?;
        let problem = if input.extension().and_then(|e| e.to_str()) == Some("hccs") {
            load_hccs(&src, &cfg)?
        } else {
            load_program(&src, &cfg)?
        };
        Ok::<_, DriverError>((cfg, problem))
    })();
    let (cfg, problem) = match loaded {
        Ok(x) => x,
        Err(e) => {
            res.note = e.to_string();
            return res;
        }
    };
    let smt = cfg.smt();
    let out = run(&problem, &cfg, &smt);
    res.status = out.result().status().to_string();
    res.iterations = out.optimized.iterations.iter().map(|(_, n)| n).sum();
    res.ms = out.elapsed.as_millis();
    let allowed = if side.status.is_empty() {
        vec!["Sol".to_string(), "OptSol".to_string()]
    } else {
        side.status.clone()
    };
    if out.timed_out {
        res.verdict = Verdict::TimeOut;
        return res;
    }
    if !allowed.contains(&res.status) {
        res.note = format!("status {} not in {:?}", res.status, allowed);
        return res;
    }
    if let Some(theta) = out.solution() {
        if let Some(why) = mismatch(theta, &side.expect, &smt) {
            res.note = why;
            return res;
        }
        if let Some((prog, env)) = &problem.source {
            let report = oracle_check(prog, &env.apply(theta), theta, &OracleOpts::default());
            res.oracle = Some(report.passed());
            if !report.passed() {
                res.note = report.summary();
                return res;
            }
        }
    }
    res.verdict = Verdict::Verified;
    res
}

/// Run every case of `dir`; an empty directory gives an empty table.
pub fn run_suite(dir: &Path, opts: &BenchOpts) -> Result<BenchTable, DriverError> {
    let cases = discover(dir)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.jobs.max(1))
        .build()
        .map_err(|e| DriverError::Usage(e.to_string()))?;
    let cases = pool.install(|| {
        cases
            .par_iter()
            .map(|(i, s)| run_case(i, s, opts))
            .collect()
    });
    Ok(BenchTable { cases })
}
