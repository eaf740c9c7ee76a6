//! Preference orders over predicates and substitutions, and the
//! lexicographic improvement loop over ∃HCCS solutions.

use std::collections::{BTreeMap, BTreeSet};
use std::time::Instant;

use serde::Serialize;

use crate::hccs::{
    default_params, implies, ClosedPred, Formula, Hccs, Head, HornClause, PredApp, PredSubst,
    Restriction, Term,
};
use crate::smtio::Smt;
use crate::solver::{grow_template, solve, SideConstraint, SolveOpts, SolveResult};
pub use crate::surface::Direction;
use crate::surface::DirectiveSet;

/// Directions ρ and a total priority order over dom(ρ), highest first.
#[derive(Clone, Debug, PartialEq)]
pub struct PreferenceSpec {
    pub directions: BTreeMap<String, Direction>,
    pub priority: Vec<String>,
    /// Largest template shape tried.
    pub restriction: Restriction,
}

impl PreferenceSpec {
    /// Completes the user's partial order topologically, breaking ties by name.
    pub fn new(
        directions: BTreeMap<String, Direction>,
        edges: &[(String, String)],
        restriction: Restriction,
    ) -> Result<PreferenceSpec, String> {
        let mut preds: BTreeMap<&str, usize> = directions.keys().map(|p| (p.as_str(), 0)).collect();
        let edges: Vec<(&str, &str)> = edges
            .iter()
            .filter(|(a, b)| directions.contains_key(a) && directions.contains_key(b))
            .map(|(a, b)| (a.as_str(), b.as_str()))
            .collect();
        for (_, b) in &edges {
            *preds.get_mut(b).unwrap() += 1;
        }
        let mut ready: BTreeSet<&str> = preds
            .iter()
            .filter(|(_, n)| **n == 0)
            .map(|(p, _)| *p)
            .collect();
        let mut priority = Vec::new();
        while let Some(p) = ready.pop_first() {
            priority.push(p.to_string());
            for (a, b) in &edges {
                if *a == p {
                    let n = preds.get_mut(b).unwrap();
                    *n -= 1;
                    if *n == 0 {
                        ready.insert(b);
                    }
                }
            }
        }
        if priority.len() != directions.len() {
            return Err("cyclic priority order".into());
        }
        Ok(PreferenceSpec {
            directions,
            priority,
            restriction,
        })
    }

    pub fn from_directives(
        d: &DirectiveSet,
        restriction: Restriction,
    ) -> Result<PreferenceSpec, String> {
        PreferenceSpec::new(d.directions.clone(), &d.priority, restriction)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum OptimizeResult {
    Unknown(String),
    NoSol,
    Sol(PredSubst),
    OptSol(PredSubst),
}

impl OptimizeResult {
    pub fn status(&self) -> &'static str {
        match self {
            OptimizeResult::Unknown(_) => "Unknown",
            OptimizeResult::NoSol => "NoSol",
            OptimizeResult::Sol(_) => "Sol",
            OptimizeResult::OptSol(_) => "OptSol",
        }
    }

    pub fn solution(&self) -> Option<&PredSubst> {
        match self {
            OptimizeResult::Sol(t) | OptimizeResult::OptSol(t) => Some(t),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum PrefOrder {
    Less,
    Equiv,
    Greater,
    Incomparable,
}

/// Outcome of a comparison; `undecided` is set when an SMT query came back
/// unknown, in which case `order` is `Incomparable`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Comparison {
    pub order: PrefOrder,
    pub undecided: bool,
}

/// `p₁` against `p₂` under `d`; `Less` means `p₁` is preferred. For MAX the
/// weaker predicate is preferred, for MIN the stronger.
pub fn pred_compare(p1: &ClosedPred, p2: &ClosedPred, d: Direction, smt: &Smt) -> Comparison {
    assert_eq!(
        p1.arity(),
        p2.arity(),
        "comparing predicates of different arity"
    );
    let a = &p1.body;
    let b = p2.rename(&p1.params).body;
    let (down, up) = match d {
        Direction::Max => (implies(&b, a, smt), implies(a, &b, smt)),
        Direction::Min => (implies(a, &b, smt), implies(&b, a, smt)),
    };
    let order = match (down, up) {
        (Some(true), Some(true)) => PrefOrder::Equiv,
        (Some(true), Some(false)) => PrefOrder::Less,
        (Some(false), Some(true)) => PrefOrder::Greater,
        (Some(false), Some(false)) => PrefOrder::Incomparable,
        _ => {
            return Comparison {
                order: PrefOrder::Incomparable,
                undecided: true,
            }
        }
    };
    Comparison {
        order,
        undecided: false,
    }
}

/// Lexicographic comparison in priority order.
pub fn subst_compare(
    t1: &PredSubst,
    t2: &PredSubst,
    spec: &PreferenceSpec,
    smt: &Smt,
) -> Comparison {
    for p in &spec.priority {
        let c = pred_compare(&t1[p], &t2[p], spec.directions[p], smt);
        if c.order != PrefOrder::Equiv {
            return c;
        }
    }
    Comparison {
        order: PrefOrder::Equiv,
        undecided: false,
    }
}

/// Constraints whose solutions improve on `theta` at stage `i` while
/// keeping the higher-priority predicates fixed.
pub fn improve_side_constraints(
    theta: &PredSubst,
    spec: &PreferenceSpec,
    i: usize,
) -> Vec<SideConstraint> {
    let mut out: Vec<SideConstraint> = spec.priority[..i]
        .iter()
        .filter_map(|p| {
            Some(SideConstraint::Freeze {
                pred: p.clone(),
                closed: theta.get(p)?.clone(),
            })
        })
        .collect();
    let p = &spec.priority[i];
    let cur = &theta[p];
    let xs = default_params(cur.arity());
    let args: Vec<Term> = xs.iter().map(Term::var).collect();
    let app = PredApp::new(p.clone(), args.clone());
    let old = cur.apply(&args);
    let (clause, strict) = match spec.directions[p] {
        Direction::Max => (
            HornClause::new(Head::App(app.clone()), vec![], old.clone()),
            Formula::and(vec![Formula::Pred(app), Formula::not(old)]),
        ),
        Direction::Min => (
            HornClause::new(Head::Pure(old.clone()), vec![app.clone()], Formula::True),
            Formula::and(vec![old, Formula::not(Formula::Pred(app))]),
        ),
    };
    out.push(SideConstraint::Clause(clause));
    out.push(SideConstraint::Exists {
        vars: xs,
        body: strict,
    });
    out
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct TraceEntry {
    pub iteration: usize,
    /// Predicate being improved, or `init` for the first solve.
    pub stage: String,
    pub shape: String,
    pub candidate: BTreeMap<String, String>,
    pub verdict: String,
}

#[derive(Clone, Debug)]
pub struct OptimizeOpts {
    pub solve: SolveOpts,
    pub max_iterations: usize,
    pub deadline: Option<Instant>,
}

impl Default for OptimizeOpts {
    fn default() -> OptimizeOpts {
        OptimizeOpts {
            solve: SolveOpts::default(),
            max_iterations: 50,
            deadline: None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Optimized {
    pub result: OptimizeResult,
    /// Accepted improvements per stage, in priority order.
    pub iterations: Vec<(String, usize)>,
    pub trace: Vec<TraceEntry>,
    /// Template shape in force when the loop stopped.
    pub shape: Restriction,
    pub warnings: Vec<String>,
}

fn candidate(theta: &PredSubst) -> BTreeMap<String, String> {
    theta.iter().map(|(p, c)| (p.clone(), c.pretty())).collect()
}

struct Run<'a> {
    h: &'a Hccs,
    opts: &'a OptimizeOpts,
    smt: &'a Smt,
    cap: Restriction,
    shape: Restriction,
    trace: Vec<TraceEntry>,
}

impl Run<'_> {
    fn expired(&self) -> bool {
        self.opts.deadline.is_some_and(|d| Instant::now() >= d)
    }

    /// Solve, growing the template shape until the cap while no solution
    /// is found. Below the cap the quantified fallback is skipped, so only
    /// the cap shape can report NoSol.
    fn solve(&mut self, side: &[SideConstraint]) -> SolveResult {
        loop {
            let last = self.shape == self.cap;
            let opts = SolveOpts {
                restriction: self.shape,
                fallback: self.opts.solve.fallback && last,
                ..self.opts.solve.clone()
            };
            let r = solve(self.h, side, &opts, self.smt);
            if matches!(r, SolveResult::Sol(_)) {
                return r;
            }
            match grow_template(self.shape, self.cap) {
                Some(n) if !self.expired() => {
                    log::info!("growing templates to {n}");
                    self.shape = n;
                }
                _ => return r,
            }
        }
    }

    fn log(&mut self, iteration: usize, stage: &str, theta: Option<&PredSubst>, verdict: &str) {
        self.trace.push(TraceEntry {
            iteration,
            stage: stage.to_string(),
            shape: self.shape.to_string(),
            candidate: theta.map(candidate).unwrap_or_default(),
            verdict: verdict.to_string(),
        });
    }
}

/// Lexicographic optimization: each predicate in priority order is
/// improved until the improvement query has no solution, then frozen.
pub fn optimize(h: &Hccs, spec: &PreferenceSpec, opts: &OptimizeOpts, smt: &Smt) -> Optimized {
    let mut warnings = Vec::new();
    let ex = h.existential_pvs();
    for (p, d) in &spec.directions {
        if *d == Direction::Min && ex.contains(p) {
            let w = format!(
                "`{p}` is minimized but existentially quantified; a Pareto optimum may not exist"
            );
            log::warn!("{w}");
            warnings.push(w);
        }
    }
    let mut run = Run {
        h,
        opts,
        smt,
        cap: spec.restriction,
        shape: Restriction::AtomicOnly,
        trace: Vec::new(),
    };
    let done = |run: Run, result, iterations, warnings| Optimized {
        result,
        iterations,
        trace: run.trace,
        shape: run.shape,
        warnings,
    };

    let mut theta = match run.solve(&[]) {
        SolveResult::Sol(t) => t,
        SolveResult::NoSol => {
            run.log(0, "init", None, "NoSol");
            return done(run, OptimizeResult::NoSol, vec![], warnings);
        }
        SolveResult::Unknown(r) => {
            run.log(0, "init", None, "Unknown");
            return done(run, OptimizeResult::Unknown(r), vec![], warnings);
        }
    };
    run.log(0, "init", Some(&theta), "Sol");

    let mut optimal = true;
    let mut iterations = Vec::new();
    for (i, p) in spec.priority.iter().enumerate() {
        if !theta.contains_key(p) {
            warnings.push(format!("`{p}` does not occur in the constraints"));
            continue;
        }
        let mut n = 0;
        loop {
            if n >= opts.max_iterations {
                let w = format!(
                    "stage `{p}` stopped at the cap of {} iterations",
                    opts.max_iterations
                );
                log::warn!("{w}");
                warnings.push(w);
                optimal = false;
                break;
            }
            if run.expired() {
                warnings.push(format!("deadline reached in stage `{p}`"));
                optimal = false;
                break;
            }
            let side = improve_side_constraints(&theta, spec, i);
            match run.solve(&side) {
                SolveResult::Sol(next) => {
                    n += 1;
                    let c = pred_compare(&next[p], &theta[p], spec.directions[p], smt);
                    if c.order != PrefOrder::Less && !c.undecided {
                        log::error!("improvement for `{p}` is not strict: {:?}", c.order);
                    }
                    run.log(n, p, Some(&next), "Sol");
                    theta = next;
                }
                SolveResult::NoSol => {
                    run.log(n + 1, p, None, "NoSol");
                    break;
                }
                SolveResult::Unknown(r) => {
                    log::warn!("stage `{p}`: {r}");
                    run.log(n + 1, p, None, "Unknown");
                    optimal = false;
                    break;
                }
            }
        }
        iterations.push((p.clone(), n));
    }
    let result = if optimal {
        OptimizeResult::OptSol(theta)
    } else {
        OptimizeResult::Sol(theta)
    };
    done(run, result, iterations, warnings)
}

/// Re-run every stage's improvement query against `theta`; `true` when
/// all of them are unsatisfiable.
pub fn certify_pareto(
    h: &Hccs,
    theta: &PredSubst,
    spec: &PreferenceSpec,
    opts: &SolveOpts,
    smt: &Smt,
) -> bool {
    (0..spec.priority.len())
        .filter(|i| theta.contains_key(&spec.priority[*i]))
        .all(|i| {
            let side = improve_side_constraints(theta, spec, i);
            solve(h, &side, opts, smt) == SolveResult::NoSol
        })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hccs::{check_solution, parse_formula, parse_hccs};

    fn pred(params: &[&str], body: &str) -> ClosedPred {
        ClosedPred::new(
            params.iter().map(|s| s.to_string()).collect(),
            parse_formula(body).unwrap(),
        )
    }

    fn max_p() -> PreferenceSpec {
        PreferenceSpec::new(
            [("P".to_string(), Direction::Max)].into(),
            &[],
            Restriction::AtomicOnly,
        )
        .unwrap()
    }

    #[test]
    fn compare_predicates() {
        let smt = Smt::default();
        let top = pred(&["x"], "true");
        let c = pred_compare(&top, &pred(&["x"], "x = 0"), Direction::Max, &smt);
        assert_eq!(c.order, PrefOrder::Less);
        let c = pred_compare(
            &pred(&["x"], "x >= 0"),
            &pred(&["y"], "y <= 0"),
            Direction::Max,
            &smt,
        );
        assert_eq!(c.order, PrefOrder::Incomparable);
        let p = pred(&["x"], "x >= 3");
        assert_eq!(
            pred_compare(&p, &p, Direction::Min, &smt).order,
            PrefOrder::Equiv
        );
        let c = pred_compare(&top, &pred(&["x"], "x = 0"), Direction::Min, &smt);
        assert_eq!(c.order, PrefOrder::Greater);
    }

    #[test]
    fn lexicographic_substitutions() {
        let smt = Smt::default();
        let spec = PreferenceSpec::new(
            [
                ("P".to_string(), Direction::Max),
                ("Q".to_string(), Direction::Min),
            ]
            .into(),
            &[("P".into(), "Q".into())],
            Restriction::AtomicOnly,
        )
        .unwrap();
        assert_eq!(spec.priority, ["P", "Q"]);
        let t1: PredSubst = [
            ("P".into(), pred(&["x"], "x = 0")),
            ("Q".into(), pred(&["x", "y"], "y = 0")),
        ]
        .into();
        let t2: PredSubst = [
            ("P".into(), pred(&["x"], "true")),
            ("Q".into(), pred(&["x", "y"], "y >= 0")),
        ]
        .into();
        assert_eq!(subst_compare(&t2, &t1, &spec, &smt).order, PrefOrder::Less);
        assert_eq!(subst_compare(&t1, &t1, &spec, &smt).order, PrefOrder::Equiv);
    }

    #[test]
    fn priority_completion() {
        let dirs: BTreeMap<String, Direction> = ["A", "B", "C"]
            .iter()
            .map(|p| (p.to_string(), Direction::Max))
            .collect();
        let s = PreferenceSpec::new(
            dirs.clone(),
            &[("C".into(), "A".into())],
            Restriction::AtomicOnly,
        )
        .unwrap();
        assert_eq!(s.priority, ["B", "C", "A"]);
        let cyc = [("A".into(), "B".into()), ("B".into(), "A".into())];
        assert!(PreferenceSpec::new(dirs, &cyc, Restriction::AtomicOnly).is_err());
    }

    #[test]
    fn improvement_constraints() {
        let theta: PredSubst = [("P".into(), ClosedPred::bottom(1))].into();
        let side = improve_side_constraints(&theta, &max_p(), 0);
        let SideConstraint::Clause(c) = &side[0] else {
            panic!()
        };
        assert_eq!(c.pretty(), "P(x1) ⇐ ⊥");
        let SideConstraint::Exists { vars, body } = &side[1] else {
            panic!()
        };
        assert_eq!(vars, &["x1"]);
        assert_eq!(body.pretty(), "P(x1)");

        let spec = PreferenceSpec::new(
            [("Q".to_string(), Direction::Min)].into(),
            &[],
            Restriction::AtomicOnly,
        )
        .unwrap();
        let theta: PredSubst = [("Q".into(), ClosedPred::top(2))].into();
        let side = improve_side_constraints(&theta, &spec, 0);
        let SideConstraint::Exists { body, .. } = &side[1] else {
            panic!()
        };
        assert_eq!(body.pretty(), "¬Q(x1, x2)");
    }

    #[test]
    fn sum_bottom_is_optimal_at_negative_inputs() {
        let h = parse_hccs("false <= P(x), x = 0\nP(x - 1) <= P(x), x != 0\n")
            .unwrap()
            .hccs;
        let smt = Smt::default();
        let out = optimize(&h, &max_p(), &OptimizeOpts::default(), &smt);
        let OptimizeResult::OptSol(th) = &out.result else {
            panic!("{:?}", out.result)
        };
        assert!(check_solution(th, &h, &smt).is_valid());
        let c = pred_compare(&th["P"], &pred(&["x"], "x < 0"), Direction::Max, &smt);
        assert_eq!(c.order, PrefOrder::Equiv);
        assert!(out.iterations[0].1 <= 50);
        assert!(certify_pareto(
            &h,
            th,
            &max_p(),
            &SolveOpts::default(),
            &smt
        ));
    }
}
