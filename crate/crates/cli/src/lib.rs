//! Driver for the `hornopt` binary: input loading, the inference pipeline,
//! reports, sampling checks against the interpreter and the benchmark
//! harness.

pub mod bench;
pub mod oracle;
pub mod report;

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use hornopt_core::gen::{generate, instrument_counters, templates};
use hornopt_core::hccs::{parse_hccs, HornClause};
use hornopt_core::optimizer::{optimize, OptimizeOpts, Optimized};
use hornopt_core::rtypes::validate_typing;
use hornopt_core::smtio::{Smt, SmtConfig};
use hornopt_core::solver::SolveOpts;
use hornopt_core::surface::{parse_directives, parse_source};
use hornopt_core::{
    DirectiveSet, Hccs, OptimizeResult, PredSubst, PreferenceSpec, Program, Restriction, TypeEnv,
};

#[derive(Debug, thiserror::Error)]
pub enum DriverError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {err}")]
    Io { path: String, err: std::io::Error },
    #[error("{0}")]
    Input(String),
}

impl DriverError {
    pub fn exit_code(&self) -> i32 {
        3
    }
}

fn input<E: std::fmt::Display>(what: &str) -> impl Fn(E) -> DriverError + '_ {
    move |e| DriverError::Input(format!("{what}: {e}"))
}

/// Parse `WxD`, e.g. `2x1`.
pub fn parse_shape(s: &str) -> Result<Restriction, DriverError> {
    let bad = || DriverError::Usage(format!("bad template size `{s}`, expected WxD"));
    let (w, d) = s.split_once(['x', 'X']).ok_or_else(bad)?;
    let w: usize = w.trim().parse().map_err(|_| bad())?;
    let d: usize = d.trim().parse().map_err(|_| bad())?;
    if w == 0 || d == 0 {
        return Err(bad());
    }
    Ok(Restriction::shape(w, d))
}

#[derive(Clone, Debug)]
pub struct Config {
    /// Wall-clock budget for the whole run.
    pub timeout: Option<Duration>,
    pub smt_timeout: Duration,
    pub max_template: Restriction,
    pub max_iterations: usize,
    pub dump_smt: Option<PathBuf>,
    pub instrument: Option<String>,
    /// Extra directive text appended to the program's own.
    pub directives: String,
}

impl Default for Config {
    fn default() -> Config {
        Config {
            timeout: None,
            smt_timeout: Duration::from_secs(10),
            max_template: Restriction::shape(2, 1),
            max_iterations: 50,
            dump_smt: None,
            instrument: None,
            directives: String::new(),
        }
    }
}

impl Config {
    pub fn smt(&self) -> Smt {
        let mut c = SmtConfig::default();
        c.timeout = match self.timeout {
            Some(t) => self.smt_timeout.min(t),
            None => self.smt_timeout,
        };
        c.dump_dir = self.dump_smt.clone();
        Smt::new(c)
    }
}

/// A constraint optimization problem, with the program it came from.
#[derive(Clone, Debug)]
pub struct Problem {
    pub source: Option<(Program, TypeEnv)>,
    pub directives: DirectiveSet,
    pub hccs: Hccs,
    pub spec: PreferenceSpec,
    pub solve: SolveOpts,
}

/// Parse a program with its `(*@ … *)` directives and generate its clauses.
pub fn load_program(src: &str, cfg: &Config) -> Result<Problem, DriverError> {
    let (mut prog, text) = parse_source(src).map_err(input("syntax error"))?;
    let user = parse_directives(&format!("{text}\n{}", cfg.directives))
        .map_err(input("directive error"))?;
    let mut d = DirectiveSet::default();
    if let Some(f) = &cfg.instrument {
        let (q, extra) = instrument_counters(&prog, f).map_err(input("instrumentation"))?;
        prog = q;
        d = extra;
    }
    d.extend(user);
    let env = templates(&prog, &d).map_err(input("template error"))?;
    d.validate(&env.pvs()).map_err(input("directive error"))?;
    let hccs = generate(&prog, &env, &d).map_err(input("constraint generation"))?;
    finish(Some((prog, env)), d, hccs, cfg)
}

/// Parse a constraint set in the clause text format.
pub fn load_hccs(src: &str, cfg: &Config) -> Result<Problem, DriverError> {
    let file = parse_hccs(src).map_err(input("clause syntax error"))?;
    let d = parse_directives(&format!("{}\n{}", file.directives, cfg.directives))
        .map_err(input("directive error"))?;
    d.validate(&file.hccs.pvs())
        .map_err(input("directive error"))?;
    let mut clauses: Vec<HornClause> = file.hccs.clauses.clone();
    clauses.extend(d.clauses.iter().cloned());
    for name in &d.exists {
        let arities = Hccs::new(clauses.clone())
            .arities()
            .map_err(input("arity"))?;
        let n = *arities
            .get(name)
            .ok_or_else(|| DriverError::Input(format!("unknown predicate `{name}`")))?;
        clauses.push(
            hornopt_core::hccs::parse_clause(&exists_clause(name, n)).map_err(input("exists"))?,
        );
    }
    let hccs = Hccs::new(clauses.iter().map(|c| c.apply(&d.fixed)).collect());
    finish(None, d, hccs, cfg)
}

fn exists_clause(name: &str, n: usize) -> String {
    let xs: Vec<String> = (1..=n).map(|i| format!("x{i}")).collect();
    format!(
        "exists {}. {name}({}) <= true",
        xs.join(", "),
        xs.join(", ")
    )
}

fn finish(
    source: Option<(Program, TypeEnv)>,
    directives: DirectiveSet,
    hccs: Hccs,
    cfg: &Config,
) -> Result<Problem, DriverError> {
    let pvs = hccs.pvs();
    let mut d = directives;
    d.directions.retain(|p, _| {
        let keep = pvs.contains(p);
        if !keep {
            log::warn!("`{p}` does not occur in the constraints; its direction is ignored");
        }
        keep
    });
    let spec = PreferenceSpec::from_directives(&d, cfg.max_template).map_err(DriverError::Input)?;
    let solve = SolveOpts {
        templates: d.templates.clone(),
        ..SolveOpts::default()
    };
    Ok(Problem {
        source,
        directives: d,
        hccs,
        spec,
        solve,
    })
}

/// Everything a run produced.
#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub optimized: Optimized,
    /// `f : τ` with the solution applied, per definition.
    pub types: BTreeMap<String, String>,
    /// `⊢ D : θΓ_D` re-checked; `None` for clause input or undecided.
    pub validated: Option<bool>,
    pub elapsed: Duration,
    pub timed_out: bool,
}

impl RunOutcome {
    pub fn result(&self) -> &OptimizeResult {
        &self.optimized.result
    }

    pub fn solution(&self) -> Option<&PredSubst> {
        self.optimized.result.solution()
    }
}

pub fn run(problem: &Problem, cfg: &Config, smt: &Smt) -> RunOutcome {
    let start = Instant::now();
    let opts = OptimizeOpts {
        solve: problem.solve.clone(),
        max_iterations: cfg.max_iterations,
        deadline: cfg.timeout.map(|t| start + t),
    };
    let mut optimized = optimize(&problem.hccs, &problem.spec, &opts, smt);
    let mut types = BTreeMap::new();
    let mut validated = None;
    if let (Some((prog, env)), Some(theta)) = (&problem.source, optimized.result.solution()) {
        validated = validate_typing(prog, theta, env, &problem.directives, smt)
            .ok()
            .flatten();
        if validated == Some(false) {
            // Never report types that do not check.
            log::error!("inferred types do not check");
            optimized.result =
                OptimizeResult::Unknown("inferred types failed re-validation".into());
        } else {
            let typed = env.apply(theta);
            for def in &prog.defs {
                if let Some(t) = typed.lookup(&def.name) {
                    types.insert(def.name.clone(), t.pretty());
                }
            }
        }
    }
    let elapsed = start.elapsed();
    let timed_out = cfg.timeout.is_some_and(|t| elapsed >= t);
    RunOutcome {
        optimized,
        types,
        validated,
        elapsed,
        timed_out,
    }
}

pub fn exit_code(r: &OptimizeResult) -> i32 {
    match r {
        OptimizeResult::OptSol(_) | OptimizeResult::Sol(_) => 0,
        OptimizeResult::NoSol => 1,
        OptimizeResult::Unknown(_) => 2,
    }
}

pub fn read_file(path: &std::path::Path) -> Result<String, DriverError> {
    std::fs::read_to_string(path).map_err(|err| DriverError::Io {
        path: path.display().to_string(),
        err,
    })
}
