//! Solution checking: SMT validity per clause, shape restrictions and a
//! brute-force grid falsifier used as an independent oracle.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::clause::{Hccs, Head, HornClause, PredSubst};
use super::formula::{simplify_dnf, to_dnf, Formula, Lit, PredApp, Term};
use crate::smtio::{self, Script, Smt, SmtVerdict};

/// Θ-restriction on the shape of predicate bodies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Restriction {
    AtomicOnly,
    /// At most `disj` disjuncts, each a conjunction of at most `conj` atoms `t ≥ 0`.
    Shape {
        conj: usize,
        disj: usize,
    },
}

impl Restriction {
    pub fn dims(self) -> (usize, usize) {
        match self {
            Restriction::AtomicOnly => (1, 1),
            Restriction::Shape { conj, disj } => (conj, disj),
        }
    }

    pub fn shape(conj: usize, disj: usize) -> Restriction {
        if (conj, disj) == (1, 1) {
            Restriction::AtomicOnly
        } else {
            Restriction::Shape { conj, disj }
        }
    }
}

impl std::fmt::Display for Restriction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let (c, d) = self.dims();
        write!(f, "{c}x{d}")
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CheckResult {
    Valid,
    /// Index of the first failing clause and a countermodel over its variables.
    Invalid {
        clause: usize,
        model: BTreeMap<String, i64>,
    },
    Indeterminate(String),
}

impl CheckResult {
    pub fn is_valid(&self) -> bool {
        matches!(self, CheckResult::Valid)
    }
}

/// `⊨ θ hc` for every clause.
pub fn check_solution(theta: &PredSubst, h: &Hccs, smt: &Smt) -> CheckResult {
    let mut indeterminate = None;
    for (i, c) in h.clauses.iter().enumerate() {
        match check_clause(theta, c, smt) {
            Some(true) => {}
            Some(false) => {
                let model = countermodel(theta, c, smt).unwrap_or_default();
                return CheckResult::Invalid { clause: i, model };
            }
            None => {
                indeterminate.get_or_insert(format!("clause {i} undecided"));
            }
        }
    }
    match indeterminate {
        Some(r) => CheckResult::Indeterminate(r),
        None => CheckResult::Valid,
    }
}

/// `⊨ θ H` as one quantified query, each clause closed by `∀` and its
/// existential head by `∃`. An independent route to the same verdict as
/// [`check_solution`].
pub fn check_solution_quantified(theta: &PredSubst, h: &Hccs, smt: &Smt) -> Option<bool> {
    let mut s = Script::new("LIA");
    for c in &h.clauses {
        let inst = c.apply(theta);
        if !inst.pvs().is_empty() {
            return None;
        }
        let ex: BTreeSet<String> = inst.exists_vars().iter().cloned().collect();
        let head = smtio::quantified("exists", &ex, smtio::formula(&inst.head_formula()));
        let body = format!("(=> {} {head})", smtio::formula(&inst.body_formula()));
        s.assert(smtio::quantified("forall", &inst.universal_vars(), body));
    }
    match smt.check(&s) {
        SmtVerdict::Sat(_) => Some(true),
        SmtVerdict::Unsat => Some(false),
        SmtVerdict::Unknown(_) => None,
    }
}

/// Do `a` and `b` contain the same clauses, up to a renaming of each
/// clause's variables? Arguments are compared as linear expressions and
/// guards by SMT equivalence.
pub fn same_up_to_renaming(a: &Hccs, b: &Hccs, smt: &Smt) -> bool {
    if a.clauses.len() != b.clauses.len() {
        return false;
    }
    let mut used = vec![false; b.clauses.len()];
    a.clauses.iter().all(|ca| {
        let hit = b
            .clauses
            .iter()
            .enumerate()
            .find(|(j, cb)| !used[*j] && clause_renames_to(ca, cb, smt));
        match hit {
            Some((j, _)) => {
                used[j] = true;
                true
            }
            None => false,
        }
    })
}

fn clause_vars(c: &HornClause) -> Vec<String> {
    let mut vs = c.universal_vars();
    vs.extend(c.exists_vars().iter().cloned());
    vs.into_iter().collect()
}

fn clause_renames_to(a: &HornClause, b: &HornClause, smt: &Smt) -> bool {
    let (va, vb) = (clause_vars(a), clause_vars(b));
    if va.len() != vb.len() || va.len() > 8 || a.body.apps.len() != b.body.apps.len() {
        return false;
    }
    let mut perm: Vec<usize> = (0..vb.len()).collect();
    loop {
        let map: BTreeMap<String, Term> = va
            .iter()
            .cloned()
            .zip(perm.iter().map(|&i| Term::var(vb[i].clone())))
            .collect();
        if renamed_equal(a, b, &map, smt) {
            return true;
        }
        if !next_permutation(&mut perm) {
            return false;
        }
    }
}

fn next_permutation(p: &mut [usize]) -> bool {
    let Some(i) = (1..p.len()).rev().find(|&i| p[i - 1] < p[i]) else {
        return false;
    };
    let j = (i..p.len())
        .rev()
        .find(|&j| p[j] > p[i - 1])
        .expect("a larger element exists");
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

fn same_app(x: &PredApp, y: &PredApp) -> bool {
    x.pred == y.pred
        && x.args.len() == y.args.len()
        && x.args.iter().zip(&y.args).all(|(s, t)| s.lin() == t.lin())
}

fn equivalent(f: &Formula, g: &Formula, smt: &Smt) -> bool {
    f == g || (implies(f, g, smt) == Some(true) && implies(g, f, smt) == Some(true))
}

fn renamed_equal(a: &HornClause, b: &HornClause, map: &BTreeMap<String, Term>, smt: &Smt) -> bool {
    let mut rest: Vec<&PredApp> = b.body.apps.iter().collect();
    for app in &a.body.apps {
        let app = app.subst(map);
        match rest.iter().position(|y| same_app(&app, y)) {
            Some(k) => {
                rest.remove(k);
            }
            None => return false,
        }
    }
    let heads = match (&a.head, &b.head) {
        (Head::App(x), Head::App(y)) => same_app(&x.subst(map), y),
        (Head::Pure(f), Head::Pure(g)) => equivalent(&f.subst(map), g, smt),
        (
            Head::Exists {
                app: x, guard: f, ..
            },
            Head::Exists {
                app: y, guard: g, ..
            },
        ) => {
            let apps = match (x, y) {
                (Some(x), Some(y)) => same_app(&x.subst(map), y),
                (None, None) => true,
                _ => false,
            };
            apps && equivalent(&f.subst(map), g, smt)
        }
        _ => false,
    };
    heads && equivalent(&a.body.guard.subst(map), &b.body.guard, smt)
}

/// Three-valued validity of one clause under θ.
pub fn check_clause(theta: &PredSubst, c: &HornClause, smt: &Smt) -> Option<bool> {
    let (script, _) = refutation_script(theta, c)?;
    match smt.check(&script) {
        SmtVerdict::Unsat => Some(true),
        SmtVerdict::Sat(_) => Some(false),
        SmtVerdict::Unknown(r) => {
            log::warn!("clause check undecided: {r}");
            None
        }
    }
}

fn countermodel(theta: &PredSubst, c: &HornClause, smt: &Smt) -> Option<BTreeMap<String, i64>> {
    let (script, _) = refutation_script(theta, c)?;
    match smt.check(&script) {
        SmtVerdict::Sat(m) => Some(m),
        _ => None,
    }
}

/// Script satisfiable iff θ(c) is not valid.
fn refutation_script(theta: &PredSubst, c: &HornClause) -> Option<(Script, BTreeSet<String>)> {
    let inst = c.apply(theta);
    if !inst.pvs().is_empty() {
        return None;
    }
    let vars = inst.universal_vars();
    let body = smtio::formula(&inst.body_formula());
    let (logic, neg_head) = match &inst.head {
        Head::Exists { vars: ex, .. } => {
            let ex: BTreeSet<String> = ex.iter().cloned().collect();
            let h = smtio::formula(&inst.head_formula());
            (
                "LIA",
                smtio::quantified("forall", &ex, format!("(not {h})")),
            )
        }
        _ => (
            "QF_LIA",
            format!("(not {})", smtio::formula(&inst.head_formula())),
        ),
    };
    let mut s = Script::new(logic);
    for v in &vars {
        s.declare(v);
    }
    s.assert(body);
    s.assert(neg_head);
    Some((s, vars))
}

/// Three-valued validity of a predicate-free formula.
pub fn valid(f: &Formula, smt: &Smt) -> Option<bool> {
    let mut s = Script::new("QF_LIA");
    for v in f.vars() {
        s.declare(&v);
    }
    s.assert(format!("(not {})", smtio::formula(f)));
    match smt.check(&s) {
        SmtVerdict::Unsat => Some(true),
        SmtVerdict::Sat(_) => Some(false),
        SmtVerdict::Unknown(_) => None,
    }
}

/// `⊨ a ⇒ b`.
pub fn implies(a: &Formula, b: &Formula, smt: &Smt) -> Option<bool> {
    valid(&Formula::implies(a.clone(), b.clone()), smt)
}

/// Drop conjuncts implied by their siblings and disjuncts covered by
/// theirs; the result is equivalent to `f`. Undecided queries keep the part.
pub fn prune(f: &Formula, smt: &Smt) -> Formula {
    let f = f.simplify();
    if valid(&f, smt) == Some(true) {
        return Formula::True;
    }
    if valid(&Formula::not(f.clone()), smt) == Some(true) {
        return Formula::False;
    }
    match f {
        Formula::And(parts) => Formula::and(drop_redundant(
            parts.iter().map(|p| prune(p, smt)).collect(),
            |rest, p| implies(&Formula::and(rest.to_vec()), p, smt),
        )),
        Formula::Or(parts) => Formula::or(drop_redundant(
            parts.iter().map(|p| prune(p, smt)).collect(),
            |rest, p| implies(p, &Formula::or(rest.to_vec()), smt),
        )),
        f => f,
    }
}

fn drop_redundant(
    mut parts: Vec<Formula>,
    covered: impl Fn(&[Formula], &Formula) -> Option<bool>,
) -> Vec<Formula> {
    let mut i = parts.len();
    while i > 0 {
        i -= 1;
        let mut rest = parts.clone();
        let p = rest.remove(i);
        if covered(&rest, &p) == Some(true) {
            parts = rest;
        }
    }
    parts
}

/// Does every predicate body fit the shape?
pub fn is_restricted(theta: &PredSubst, r: Restriction) -> bool {
    let (conj, disj) = r.dims();
    theta.values().all(|p| match shape_of(&p.body) {
        Some((c, d)) => c <= conj && d <= disj,
        None => false,
    })
}

/// (max atoms per disjunct, number of disjuncts) after flattening to DNF over `t ≥ 0` atoms.
pub fn shape_of(f: &Formula) -> Option<(usize, usize)> {
    let d = simplify_dnf(to_dnf(f, 4096).ok()?);
    let mut cubes: Vec<usize> = Vec::new();
    for cube in d {
        // an equality is two atoms; a disequality splits the cube in two
        let mut variants = vec![0usize];
        for l in &cube {
            match l {
                Lit::Ge(_) => variants.iter_mut().for_each(|v| *v += 1),
                Lit::Eq(_) => variants.iter_mut().for_each(|v| *v += 2),
                Lit::Ne(_) => {
                    variants = variants.iter().flat_map(|v| [v + 1, v + 1]).collect();
                }
                Lit::App(_) => return None,
            }
        }
        cubes.extend(variants);
    }
    Some((cubes.iter().copied().max().unwrap_or(0), cubes.len()))
}

/// Search `[-r, r]^k` for a countermodel of a predicate-free clause.
/// Existential heads are never refuted: a bounded search cannot disprove them.
pub fn grid_falsify(c: &HornClause, r: i64, max_points: usize) -> Option<BTreeMap<String, i64>> {
    if !c.pvs().is_empty() || matches!(c.head, Head::Exists { .. }) {
        return None;
    }
    let vars: Vec<String> = c.universal_vars().into_iter().collect();
    let side = (2 * r + 1) as usize;
    let total = side.checked_pow(vars.len() as u32)?;
    if total > max_points {
        return None;
    }
    let body = c.body_formula();
    let head = c.head_formula();
    let mut env: BTreeMap<String, i64> = vars.iter().map(|v| (v.clone(), -r)).collect();
    for _ in 0..total {
        if body.eval(&env) == Some(true) && head.eval(&env) == Some(false) {
            return Some(env);
        }
        for v in &vars {
            let x = env.get_mut(v).unwrap();
            if *x < r {
                *x += 1;
                break;
            }
            *x = -r;
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hccs::{parse_formula, ClosedPred};

    fn pred(params: &[&str], body: &str) -> ClosedPred {
        ClosedPred::new(
            params.iter().map(|s| s.to_string()).collect(),
            parse_formula(body).unwrap(),
        )
    }

    #[test]
    fn renaming_equivalence() {
        let smt = Smt::new(Default::default());
        let a = crate::hccs::parse_hccs(
            "Q(x, x + y) <= P(x), Q(x - 1, y), x != 0\nP(x - 1) <= P(x), x != 0",
        )
        .unwrap()
        .hccs;
        let b = crate::hccs::parse_hccs(
            "P(a + -1) <= P(a), not (a = 0)\nQ(a, b + a) <= Q(a - 1, b), P(a), a != 0",
        )
        .unwrap()
        .hccs;
        assert!(same_up_to_renaming(&a, &b, &smt));
        let c = crate::hccs::parse_hccs(
            "Q(x, x + y) <= P(x), Q(x - 1, y), x != 0\nP(x - 1) <= P(x), x > 0",
        )
        .unwrap()
        .hccs;
        assert!(!same_up_to_renaming(&a, &c, &smt));
    }

    #[test]
    fn quantified_check_agrees() {
        let smt = Smt::new(Default::default());
        let h = crate::hccs::parse_hccs(
            "false <= P(x), x = 0\nP(x - 1) <= P(x), x != 0\nexists x. P(x) <= true",
        )
        .unwrap()
        .hccs;
        let good = PredSubst::from([("P".to_string(), pred(&["x"], "x < 0"))]);
        let bad = PredSubst::from([("P".to_string(), pred(&["x"], "x <= 0"))]);
        let empty = PredSubst::from([("P".to_string(), pred(&["x"], "false"))]);
        assert_eq!(check_solution_quantified(&good, &h, &smt), Some(true));
        assert_eq!(check_solution_quantified(&bad, &h, &smt), Some(false));
        assert_eq!(check_solution_quantified(&empty, &h, &smt), Some(false));
    }

    #[test]
    fn prune_drops_implied_atoms() {
        let smt = Smt::new(Default::default());
        let f = parse_formula("x >= 0 && x >= -1").unwrap();
        assert_eq!(prune(&f, &smt).pretty(), "x ≥ 0");
        let g = parse_formula("x >= 1 || x >= 0").unwrap();
        assert_eq!(prune(&g, &smt).pretty(), "x ≥ 0");
        let h = parse_formula("x >= 0 || x <= 0").unwrap();
        assert_eq!(prune(&h, &smt), Formula::True);
    }

    #[test]
    fn restriction_counts() {
        let mut th = PredSubst::new();
        th.insert("P".into(), pred(&["x"], "x < 0"));
        assert!(is_restricted(&th, Restriction::AtomicOnly));
        th.insert("Q".into(), pred(&["x", "y"], "y >= 0 && y >= x"));
        assert!(!is_restricted(&th, Restriction::AtomicOnly));
        assert!(is_restricted(&th, Restriction::shape(2, 1)));
        th.insert("R".into(), pred(&["x"], "x = 0"));
        assert!(is_restricted(&th, Restriction::shape(2, 1)));
        th.insert("S".into(), pred(&["x"], "x != 0"));
        assert!(!is_restricted(&th, Restriction::shape(2, 1)));
        assert!(is_restricted(&th, Restriction::shape(2, 2)));
    }

    #[test]
    fn grid_refutes_sum_bottom_at_zero() {
        let c = crate::hccs::parse_clause("false <= P(x), x = 0").unwrap();
        let mut th = PredSubst::new();
        th.insert("P".into(), pred(&["x"], "true"));
        let m = grid_falsify(&c.apply(&th), 5, 10_000).unwrap();
        assert_eq!(m["x"], 0);
    }
}
