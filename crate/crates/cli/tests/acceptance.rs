//! Acceptance run: one PASS/FAIL line per criterion.
//!
//! Cases run one after another (the solver is CPU bound). The process exits
//! with status 0 unless `HORNOPT_ACCEPTANCE_STRICT=1` is set, in which case
//! any FAIL line makes it exit 1.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use hornopt_cli::bench::{mismatch, run_suite, BenchOpts, Verdict};
use hornopt_cli::oracle::{oracle_check, OracleOpts};
use hornopt_cli::{load_hccs, load_program, read_file, run, Config, Problem, RunOutcome};
use hornopt_core::gen::{generate, templates};
use hornopt_core::hccs::{
    check_solution, check_solution_quantified, grid_falsify, is_restricted, parse_formula,
    parse_hccs, same_up_to_renaming, CheckResult,
};
use hornopt_core::optimizer::certify_pareto;
use hornopt_core::smtio::Smt;
use hornopt_core::surface::{parse_directives, parse_source};
use hornopt_core::{ClosedPred, OptimizeResult, PredSubst};

/// Wall-clock limit per case.
const CASE_LIMIT: Duration = Duration::from_secs(60);
/// Wall-clock limit per non-termination suite case.
const SUITE_LIMIT: Duration = Duration::from_secs(100);
const MIN_SUITE_CASES: usize = 6;
/// Iteration cap per optimization stage.
const MAX_ITERATIONS: usize = 50;
const ORACLE_SAMPLES: usize = 20;
const ORACLE_BUDGET: u64 = 100_000;
const GRID_RADIUS: i64 = 5;
const GRID_POINTS: usize = 2_000_000;

/// Example 3's clauses for `sum`.
const SUM_CLAUSES: &str =
    "Q(x, 0) <= P(x), x = 0\nP(x - 1) <= P(x), x != 0\nQ(x, x + y) <= P(x), Q(x - 1, y), x != 0";

fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

struct Ran {
    label: String,
    problem: Problem,
    out: RunOutcome,
    smt: Smt,
}

impl Ran {
    fn theta(&self) -> Option<&PredSubst> {
        self.out.solution()
    }

    /// Expected bodies over `x1 … xn`, matched up to equivalence.
    fn matches(&self, expect: &[(&str, &str)]) -> Result<(), String> {
        let theta = self
            .theta()
            .ok_or_else(|| format!("status {}", self.out.result().status()))?;
        let expect: BTreeMap<String, String> = expect
            .iter()
            .map(|(p, b)| (p.to_string(), b.to_string()))
            .collect();
        match mismatch(theta, &expect, &self.smt) {
            Some(why) => Err(why),
            None => Ok(()),
        }
    }

    fn summary(&self) -> String {
        let preds = self
            .theta()
            .map(|t| {
                t.iter()
                    .map(|(p, c)| format!("{p} ↦ {}", c.body.pretty()))
                    .collect::<Vec<_>>()
                    .join(", ")
            })
            .unwrap_or_default();
        format!(
            "{}: {} [{preds}] {:.1}s",
            self.label,
            self.out.result().status(),
            self.out.elapsed.as_secs_f64()
        )
    }

    fn in_time(&self) -> Result<(), String> {
        if self.out.elapsed < CASE_LIMIT {
            Ok(())
        } else {
            Err(format!("took {:.1}s", self.out.elapsed.as_secs_f64()))
        }
    }
}

fn case(file: &str, directives: &[&str]) -> Ran {
    let path = root().join("benchmarks/paper").join(file);
    let cfg = Config {
        timeout: Some(CASE_LIMIT),
        max_iterations: MAX_ITERATIONS,
        directives: directives.join("\n"),
        ..Config::default()
    };
    let src = read_file(&path).expect("bundled case");
    let problem = if file.ends_with(".hccs") {
        load_hccs(&src, &cfg)
    } else {
        load_program(&src, &cfg)
    }
    .expect("bundled case loads");
    let smt = cfg.smt();
    let out = run(&problem, &cfg, &smt);
    let label = if directives.is_empty() {
        file.to_string()
    } else {
        format!("{file} {}", directives.join(" "))
    };
    Ran {
        label,
        problem,
        out,
        smt,
    }
}

struct Report {
    lines: Vec<(String, bool)>,
}

impl Report {
    fn line(&mut self, id: &str, what: &str, result: Result<String, String>) -> bool {
        let (pass, detail) = match result {
            Ok(d) => (true, d),
            Err(d) => (false, d),
        };
        println!(
            "{} {id} {what}: {detail}",
            if pass { "PASS" } else { "FAIL" }
        );
        self.lines.push((id.to_string(), pass));
        pass
    }
}

fn all(parts: Vec<(String, Result<(), String>)>) -> Result<String, String> {
    let ok = parts.iter().all(|(_, r)| r.is_ok());
    let text = parts
        .into_iter()
        .map(|(s, r)| match r {
            Ok(()) => format!("{s} ✓"),
            Err(e) => format!("{s} ✗ ({e})"),
        })
        .collect::<Vec<_>>()
        .join("; ");
    if ok {
        Ok(text)
    } else {
        Err(text)
    }
}

fn expect(r: &Ran, want: &[(&str, &str)], statuses: &[&str]) -> (String, Result<(), String>) {
    let status = r.out.result().status();
    let res = if !statuses.contains(&status) {
        Err(format!("status {status}"))
    } else {
        r.matches(want).and_then(|_| r.in_time())
    };
    (r.summary(), res)
}

const SOLVED: &[&str] = &["Sol", "OptSol"];

fn main() {
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("error"))
        .try_init();
    let start = Instant::now();
    let mut rep = Report { lines: Vec::new() };
    let mut runs: Vec<Ran> = Vec::new();

    // 1
    let pq = case("sum.ml", &["@prioritize P < Q"]);
    let qp = case("sum.ml", &["@prioritize Q < P"]);
    let c1 = rep.line(
        "1",
        "sum under both priorities",
        all(vec![
            expect(&pq, &[("P", "true"), ("Q", "x2 >= 0")], SOLVED),
            expect(&qp, &[("P", "x1 < 0"), ("Q", "false")], SOLVED),
        ]),
    );
    runs.extend([pq, qp]);

    // 2
    let bot = case("sum_bot.hccs", &[]);
    let certified = bot.theta().map(|t| {
        certify_pareto(
            &bot.problem.hccs,
            t,
            &bot.problem.spec,
            &bot.problem.solve,
            &bot.smt,
        )
    });
    let mut r2 = expect(&bot, &[("P", "x1 < 0")], &["OptSol"]);
    if r2.1.is_ok() && certified != Some(true) {
        r2.1 = Err("improvement query did not return NoSol".into());
    }
    let c2 = rep.line(
        "2",
        "bottom sum maximized, certified optimal",
        all(vec![r2]),
    );
    runs.push(bot);

    // 3
    let sp = case("sum_prime.ml", &[]);
    let mut r3 = expect(&sp, &[("P", "x1 >= 0 && x1 <= 1")], SOLVED);
    if r3.1.is_ok() && sp.out.optimized.shape.dims().0 < 2 {
        r3.1 = Err(format!("ended at shape {}", sp.out.optimized.shape));
    }
    let c3 = rep.line("3", "sum' against {y | x = y}", all(vec![r3]));
    runs.push(sp);

    // 4
    let rp = case("repeat.ml", &[]);
    let paper_theta = PredSubst::from([
        ("P1".to_string(), pred(&["x"], "x >= 0")),
        ("P2".to_string(), pred(&["x", "y"], "y >= 0")),
        ("P3".to_string(), pred(&["n", "e"], "e >= 0")),
    ]);
    let paper_valid = check_solution(&paper_theta, &rp.problem.hccs, &rp.smt) == CheckResult::Valid;
    let mut r4 = expect(
        &rp,
        &[("P1", "x1 >= 0"), ("P2", "x2 >= 0"), ("P3", "x2 >= 0")],
        SOLVED,
    );
    r4.0 = format!("{} (expected θ is a solution: {paper_valid})", r4.0);
    let c4 = rep.line(
        "4",
        "repeat with three prioritized predicates",
        all(vec![r4]),
    );
    runs.push(rp);

    // 5
    let t1 = case("sum_t.ml", &["@prioritize P < Bnd"]);
    let t2 = case("sum_t.ml", &["@prioritize Bnd < P", "@exists P"]);
    let c5 = rep.line(
        "5",
        "sum_t bounds",
        all(vec![
            expect(
                &t1,
                &[("P", "x1 >= 0"), ("Bnd", "x2 >= 0 && x2 <= x1")],
                SOLVED,
            ),
            expect(&t2, &[("P", "x1 = 0"), ("Bnd", "x2 = 0")], SOLVED),
        ]),
    );
    runs.extend([t1, t2]);

    // 6
    let u1 = case("sum_t_unsafe.ml", &["@prioritize P < Bnd"]);
    let u2 = case("sum_t_unsafe.ml", &["@prioritize Bnd < P", "@exists P"]);
    let c6 = rep.line(
        "6",
        "sum_t against {y | not (y >= 2)}",
        all(vec![
            expect(&u1, &[("P", "x1 >= 0 && x1 <= 1")], SOLVED),
            expect(&u2, &[("P", "x1 = 0"), ("Bnd", "x2 = 0")], SOLVED),
        ]),
    );
    runs.extend([u1, u2]);

    // 7
    let ri = case("read_int.ml", &[]);
    let r7 = (|| {
        let theta = ri.theta().ok_or("no solution")?;
        let ty = ri.out.types.get("f").ok_or("no type for f")?;
        if ty != "(x:int) → {y | ⊥}" {
            return Err(format!("f : {ty}"));
        }
        theta.get("R_f_n").ok_or("no angelic predicate")?;
        let h = &ri.problem.hccs;
        // The existential clause makes any valid refinement nonempty for every x.
        if check_solution(theta, h, &ri.smt) != CheckResult::Valid {
            return Err("returned θ fails check_solution".into());
        }
        let mut paper = theta.clone();
        paper.insert("R_f_n".into(), pred(&["x", "n"], "n >= 0"));
        if check_solution(&paper, h, &ri.smt) != CheckResult::Valid {
            return Err("n ≥ 0 is rejected by check_solution".into());
        }
        ri.matches(&[("R_f_n", "x2 >= 0")])?;
        ri.in_time()
    })();
    let c7 = rep.line(
        "7",
        "read_int non-termination",
        all(vec![(ri.summary(), r7)]),
    );
    runs.push(ri);

    // 8
    let worst = runs
        .iter()
        .flat_map(|r| r.out.optimized.iterations.iter().map(|(_, n)| *n))
        .max()
        .unwrap_or(0);
    let converged = worst < MAX_ITERATIONS;
    let differ: Vec<&str> = [
        ("1", c1),
        ("2", c2),
        ("3", c3),
        ("4", c4),
        ("5", c5),
        ("6", c6),
        ("7", c7),
    ]
    .iter()
    .filter(|(_, ok)| !ok)
    .map(|(id, _)| *id)
    .collect();
    let detail = format!(
        "{} runs, at most {worst} iterations in a stage (cap {MAX_ITERATIONS}); final types differ in criteria {:?}",
        runs.len(),
        differ
    );
    rep.line(
        "8",
        "convergence within the cap, types of 1-7",
        if converged && differ.is_empty() {
            Ok(detail)
        } else {
            Err(detail)
        },
    );

    // 9
    let suite = run_suite(
        &root().join("benchmarks/nonterm"),
        &BenchOpts {
            timeout: SUITE_LIMIT,
            jobs: 1,
        },
    );
    let r9 = match suite {
        Ok(t) => {
            let detail = t
                .cases
                .iter()
                .map(|c| format!("{} {:?} {:.1}s", c.case, c.verdict, c.ms as f64 / 1000.0))
                .collect::<Vec<_>>()
                .join(", ");
            let ok = t.cases.len() >= MIN_SUITE_CASES
                && t.cases
                    .iter()
                    .all(|c| c.verdict == Verdict::Verified && c.ms < SUITE_LIMIT.as_millis());
            if ok {
                Ok(detail)
            } else {
                Err(detail)
            }
        }
        Err(e) => Err(e.to_string()),
    };
    rep.line("9", "non-termination suite", r9);

    // 10
    let solved: Vec<&Ran> = runs.iter().filter(|r| r.theta().is_some()).collect();

    let mut a = Vec::new();
    for r in runs
        .iter()
        .filter(|r| matches!(r.out.result(), OptimizeResult::OptSol(_)))
    {
        let ok = certify_pareto(
            &r.problem.hccs,
            r.theta().unwrap(),
            &r.problem.spec,
            &r.problem.solve,
            &r.smt,
        );
        a.push((
            r.label.clone(),
            if ok {
                Ok(())
            } else {
                Err("not certified".into())
            },
        ));
    }
    rep.line("10a", "Pareto certificate of every OptSol", all(a));

    let mut b = Vec::new();
    for r in &solved {
        let theta = r.theta().unwrap();
        let res = match check_solution(theta, &r.problem.hccs, &r.smt) {
            CheckResult::Valid if is_restricted(theta, r.problem.spec.restriction) => Ok(()),
            CheckResult::Valid => Err("outside the template restriction".into()),
            other => Err(format!("{other:?}")),
        };
        b.push((r.label.clone(), res));
    }
    rep.line("10b", "check_solution on every returned θ", all(b));

    let mut c = Vec::new();
    for r in &solved {
        let res = match check_solution_quantified(r.theta().unwrap(), &r.problem.hccs, &r.smt) {
            Some(true) => Ok(()),
            Some(false) => Err("refuted".into()),
            None => Err("undecided".into()),
        };
        c.push((r.label.clone(), res));
    }
    rep.line("10c", "quantified re-validation of every θ", all(c));

    let mut d = Vec::new();
    let (mut nonterm, mut safety) = (0, 0);
    for r in &solved {
        let Some((prog, env)) = &r.problem.source else {
            continue;
        };
        let theta = r.theta().unwrap();
        let o = oracle_check(
            prog,
            &env.apply(theta),
            theta,
            &OracleOpts {
                samples: ORACLE_SAMPLES,
                budget: ORACLE_BUDGET,
                ..OracleOpts::default()
            },
        );
        for ch in o.checks.iter().filter(|ch| ch.skipped.is_none()) {
            match ch.kind.as_str() {
                "nontermination" => nonterm += 1,
                _ => safety += 1,
            }
        }
        let short = o
            .checks
            .iter()
            .any(|ch| ch.skipped.is_none() && ch.sampled < ORACLE_SAMPLES);
        let res = if !o.passed() {
            Err(o.summary())
        } else if short {
            Err(format!(
                "fewer than {ORACLE_SAMPLES} samples: {}",
                o.summary()
            ))
        } else {
            Ok(())
        };
        d.push((format!("{} ({})", r.label, o.summary()), res));
    }
    let r10d = all(d).map(|s| format!("{nonterm} non-termination and {safety} safety checks; {s}"));
    rep.line("10d", "interpreter sampling of inferred types", r10d);

    let mut e = Vec::new();
    for r in &solved {
        let theta = r.theta().unwrap();
        let refuted = r.problem.hccs.clauses.iter().find_map(|cl| {
            grid_falsify(&cl.apply(theta), GRID_RADIUS, GRID_POINTS).map(|m| (cl.pretty(), m))
        });
        e.push((
            r.label.clone(),
            match refuted {
                None => Ok(()),
                Some((cl, m)) => Err(format!("{cl} fails at {m:?}")),
            },
        ));
    }
    rep.line("10e", "grid falsifier on accepted clauses", all(e));

    let r10f = (|| {
        let src = read_file(&root().join("benchmarks/paper/sum.ml")).map_err(|e| e.to_string())?;
        let (prog, text) = parse_source(&src).map_err(|e| e.to_string())?;
        let d = parse_directives(&text).map_err(|e| e.to_string())?;
        let env = templates(&prog, &d).map_err(|e| e.to_string())?;
        let got = generate(&prog, &env, &d).map_err(|e| e.to_string())?;
        let want = parse_hccs(SUM_CLAUSES).map_err(|e| e.to_string())?.hccs;
        let smt = Smt::new(Default::default());
        if same_up_to_renaming(&got, &want, &smt) {
            Ok(got.pretty().trim().replace('\n', "; "))
        } else {
            Err(got.pretty().trim().replace('\n', "; "))
        }
    })();
    rep.line("10f", "generated clauses of sum", r10f);

    let passed = rep.lines.iter().filter(|(_, p)| *p).count();
    println!(
        "{passed}/{} criteria pass in {:.0}s",
        rep.lines.len(),
        start.elapsed().as_secs_f64()
    );
    if std::env::var("HORNOPT_ACCEPTANCE_STRICT").as_deref() == Ok("1") && passed < rep.lines.len()
    {
        std::process::exit(1);
    }
}

fn pred(params: &[&str], body: &str) -> ClosedPred {
    ClosedPred::new(
        params.iter().map(|s| s.to_string()).collect(),
        parse_formula(body).unwrap(),
    )
}
