//! Sampling checks of inferred types against the interpreter: inputs drawn
//! from a precondition must diverge when the result type is `⊥`, and must
//! satisfy the postcondition whenever they return.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use hornopt_core::eval::{call_expr, run, NondetOracle, Outcome};
use hornopt_core::hccs::Term;
use hornopt_core::{Expr, Formula, PredSubst, Program, RType, TypeEnv};

#[derive(Clone, Debug)]
pub struct OracleOpts {
    pub samples: usize,
    pub budget: u64,
    pub range: (i64, i64),
    pub seed: u64,
}

impl Default for OracleOpts {
    fn default() -> OracleOpts {
        OracleOpts {
            samples: 20,
            budget: 100_000,
            range: (-50, 50),
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct FunCheck {
    pub function: String,
    /// `nontermination` or `safety`.
    pub kind: String,
    pub sampled: usize,
    pub failures: Vec<String>,
    pub skipped: Option<String>,
}

#[derive(Clone, Debug, Default, Serialize, PartialEq)]
pub struct OracleReport {
    pub checks: Vec<FunCheck>,
}

impl OracleReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.failures.is_empty())
    }

    pub fn summary(&self) -> String {
        let parts: Vec<String> = self
            .checks
            .iter()
            .map(|c| match &c.skipped {
                Some(r) => format!("{} skipped ({r})", c.function),
                None => format!(
                    "{} {} {}/{} ok",
                    c.function,
                    c.kind,
                    c.sampled - c.failures.len(),
                    c.sampled
                ),
            })
            .collect();
        parts.join("; ")
    }
}

/// Parameters `(name, refinement over earlier names)` and the result
/// refinement of a first-order type.
fn first_order(t: &RType) -> Option<(Vec<(String, Formula)>, String, Formula)> {
    let mut params = Vec::new();
    let mut t = t;
    loop {
        match t {
            RType::Fun {
                binder,
                param,
                result,
            } => {
                let RType::Int { binder: b, refine } = &**param else {
                    return None;
                };
                let m = BTreeMap::from([(b.clone(), Term::var(binder.clone()))]);
                params.push((binder.clone(), refine.subst(&m)));
                t = result;
            }
            RType::Int { binder, refine } => return Some((params, binder.clone(), refine.clone())),
        }
    }
}

fn has_angelic(e: &Expr) -> bool {
    match e {
        Expr::RandAngelic(..) => true,
        Expr::RandDemonic(_, b) => has_angelic(b),
        Expr::Let(_, a, b) | Expr::Ifz(_, a, b) => has_angelic(a) || has_angelic(b),
        _ => false,
    }
}

/// A value `v` in range with `R(inputs…, v)` for the function's angelic
/// predicate, if it has exactly one whose arguments are its parameters
/// plus the choice.
fn angelic_choice(f: &str, inputs: &[i64], theta: &PredSubst, range: (i64, i64)) -> Option<i64> {
    let prefix = format!("R_{f}_");
    let mut rs = theta.iter().filter(|(p, _)| p.starts_with(&prefix));
    let (_, r) = rs.next()?;
    if rs.next().is_some() || r.arity() != inputs.len() + 1 {
        return None;
    }
    (0..=range.1.max(-range.0)).flat_map(|k| [k, -k]).find(|v| {
        let mut env: BTreeMap<String, i64> = r
            .params
            .iter()
            .cloned()
            .zip(inputs.iter().copied())
            .collect();
        env.insert(r.params[inputs.len()].clone(), *v);
        r.body.eval(&env) == Some(true)
    })
}

/// Check every first-order function of `prog` against its type in `typed`.
pub fn oracle_check(
    prog: &Program,
    typed: &TypeEnv,
    theta: &PredSubst,
    opts: &OracleOpts,
) -> OracleReport {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut report = OracleReport::default();
    let angelic = prog.defs.iter().any(|d| has_angelic(&d.body));
    for def in &prog.defs {
        let Some(t) = typed.lookup(&def.name) else {
            continue;
        };
        let mut check = FunCheck {
            function: def.name.clone(),
            kind: String::new(),
            sampled: 0,
            failures: Vec::new(),
            skipped: None,
        };
        let Some((params, r, post)) = first_order(t) else {
            check.skipped = Some("higher-order".into());
            report.checks.push(check);
            continue;
        };
        let diverges = post.simplify() == Formula::False;
        check.kind = if diverges { "nontermination" } else { "safety" }.into();
        let mut draws = 0;
        while check.sampled < opts.samples && draws < opts.samples * 500 {
            draws += 1;
            let mut env = BTreeMap::new();
            let mut ok = true;
            // each parameter is drawn among the in-range values its
            // refinement admits, so narrow preconditions still get samples
            for (x, phi) in &params {
                let admitted: Vec<i64> = (opts.range.0..=opts.range.1)
                    .filter(|v| {
                        env.insert(x.clone(), *v);
                        phi.eval(&env) == Some(true)
                    })
                    .collect();
                if admitted.is_empty() {
                    ok = false;
                    break;
                }
                env.insert(x.clone(), admitted[rng.gen_range(0..admitted.len())]);
            }
            if !ok {
                continue;
            }
            let inputs: Vec<i64> = params.iter().map(|(x, _)| env[x]).collect();
            let mut oracle = if angelic {
                match angelic_choice(&def.name, &inputs, theta, opts.range) {
                    Some(v) => NondetOracle::constant(v),
                    None => {
                        check.skipped = Some("no usable angelic refinement".into());
                        break;
                    }
                }
            } else {
                NondetOracle::seeded(rng.gen(), opts.range.0, opts.range.1)
            };
            check.sampled += 1;
            let out = run(
                prog,
                &call_expr(&def.name, &inputs),
                &mut oracle,
                opts.budget,
            );
            let fail = match (&out, diverges) {
                (Outcome::BudgetExhausted(_), _) => None,
                (Outcome::Value(_), true) => Some("returned".to_string()),
                (Outcome::Value(_), false) => {
                    let m = out.as_int().and_then(|n| i64::try_from(n).ok());
                    match m {
                        Some(m) => {
                            env.insert(r.clone(), m);
                            match post.eval(&env) {
                                Some(true) => None,
                                _ => Some(format!("result {m} violates {}", post.pretty())),
                            }
                        }
                        None => Some("non-integer result".into()),
                    }
                }
                (Outcome::Stuck(_), _) => Some("stuck".into()),
            };
            if let Some(why) = fail {
                check
                    .failures
                    .push(format!("{}{:?}: {why}", def.name, inputs));
            }
        }
        if check.sampled == 0 && check.skipped.is_none() {
            check.skipped = Some("no input satisfies the precondition in range".into());
        }
        report.checks.push(check);
    }
    report
}
