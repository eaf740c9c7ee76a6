//! End-to-end optimization of the small sum constraint sets.

use std::collections::BTreeMap;

use hornopt_core::hccs::{
    check_solution, check_solution_quantified, default_params, is_restricted, parse_formula,
    parse_hccs, CheckResult, Formula, Term,
};
use hornopt_core::optimizer::{
    certify_pareto, optimize, pred_compare, Direction, OptimizeOpts, PrefOrder,
};
use hornopt_core::smtio::Smt;
use hornopt_core::{ClosedPred, Hccs, OptimizeResult, PredSubst, PreferenceSpec, Restriction};

const SUM: &str =
    "Q(x, 0) <= P(x), x = 0\nP(x - 1) <= P(x), x != 0\nQ(x, x + y) <= P(x), Q(x - 1, y), x != 0";
const SUM_BOT: &str = "false <= P(x), x = 0\nP(x - 1) <= P(x), x != 0";

fn hccs(src: &str) -> Hccs {
    parse_hccs(src).unwrap().hccs
}

fn spec(dirs: &[(&str, Direction)], order: &[&str]) -> PreferenceSpec {
    let directions: BTreeMap<String, Direction> =
        dirs.iter().map(|(p, d)| (p.to_string(), *d)).collect();
    let edges: Vec<(String, String)> = order
        .windows(2)
        .map(|w| (w[0].to_string(), w[1].to_string()))
        .collect();
    PreferenceSpec::new(directions, &edges, Restriction::shape(2, 1)).unwrap()
}

fn equiv(theta: &PredSubst, p: &str, body: &str, smt: &Smt) -> bool {
    let got = &theta[p];
    let want = ClosedPred::new(default_params(got.arity()), parse_formula(body).unwrap());
    pred_compare(got, &want, Direction::Max, smt).order == PrefOrder::Equiv
}

#[test]
fn bottom_sum_maximizes_to_negative_inputs() {
    let smt = Smt::new(Default::default());
    let h = hccs(SUM_BOT);
    let s = spec(&[("P", Direction::Max)], &["P"]);
    let opts = OptimizeOpts::default();
    let out = optimize(&h, &s, &opts, &smt);
    let OptimizeResult::OptSol(theta) = &out.result else {
        panic!("{:?}", out.result)
    };
    assert!(equiv(theta, "P", "x1 < 0", &smt));
    assert_eq!(check_solution(theta, &h, &smt), CheckResult::Valid);
    assert_eq!(check_solution_quantified(theta, &h, &smt), Some(true));
    assert!(is_restricted(theta, Restriction::shape(2, 1)));
    assert!(certify_pareto(&h, theta, &s, &opts.solve, &smt));
    assert!(out
        .iterations
        .iter()
        .all(|(_, n)| *n <= opts.max_iterations));
}

/// No atom `a·x + b ≥ 0` with small coefficients is both a solution and
/// strictly weaker than `x < 0`, which is what the optimizer's NoSol claims.
#[test]
fn no_small_atom_improves_on_negative_inputs() {
    let smt = Smt::new(Default::default());
    let h = hccs(SUM_BOT);
    let best = ClosedPred::new(vec!["x".into()], parse_formula("x < 0").unwrap());
    for a in -2..=2 {
        for b in -2..=2 {
            let body = Formula::leq(
                Term::Const(0),
                Term::add(Term::scale(a, Term::var("x")), Term::Const(b)),
            );
            let cand = ClosedPred::new(vec!["x".into()], body);
            let theta = PredSubst::from([("P".to_string(), cand.clone())]);
            if check_solution(&theta, &h, &smt) == CheckResult::Valid {
                let c = pred_compare(&cand, &best, Direction::Max, &smt).order;
                assert_ne!(c, PrefOrder::Less, "{} improves on x < 0", cand.pretty());
            }
        }
    }
}

#[test]
fn sum_with_result_first_diverges_on_negatives() {
    let smt = Smt::new(Default::default());
    let h = hccs(SUM);
    let s = spec(&[("P", Direction::Max), ("Q", Direction::Min)], &["Q", "P"]);
    let out = optimize(&h, &s, &OptimizeOpts::default(), &smt);
    let theta = out.result.solution().expect("a solution");
    assert!(equiv(theta, "Q", "false", &smt));
    assert!(equiv(theta, "P", "x1 < 0", &smt));
    assert_eq!(check_solution(theta, &h, &smt), CheckResult::Valid);
}

#[test]
fn unsatisfiable_set_has_no_solution() {
    let smt = Smt::new(Default::default());
    let h = hccs("P(x) <= x = 0\nfalse <= P(x), x >= 0");
    let s = spec(&[("P", Direction::Max)], &["P"]);
    let out = optimize(&h, &s, &OptimizeOpts::default(), &smt);
    assert_eq!(out.result, OptimizeResult::NoSol);
}
