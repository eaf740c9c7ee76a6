//! Template-based ∃HCCS solving: predicate templates with unknown
//! coefficients, Skolemization of existential heads, Farkas elimination of
//! universally quantified variables and a nonlinear SMT query, with a
//! direct quantified query as fallback.

mod farkas;
mod pform;

pub use farkas::{split_row, FarkasSystem};
pub use pform::{from_formula, from_pformula, is_unknown, lin_poly, term_poly, PForm, PTemplate};

use std::collections::{BTreeMap, BTreeSet};
use std::time::Duration;

use crate::hccs::{
    check_solution, default_params, prune, CheckResult, ClosedPred, Formula, Hccs, Head,
    HornClause, Poly, PredApp, PredSubst, Restriction,
};
use crate::smtio::{self, Script, Smt, SmtVerdict};
use crate::surface::FixedTemplate;

/// Extra requirements on a solution beyond the clauses of H.
#[derive(Clone, Debug, PartialEq)]
pub enum SideConstraint {
    Clause(HornClause),
    /// `∃x̄. φ`, with predicates of φ read through the solution.
    Exists {
        vars: Vec<String>,
        body: Formula,
    },
    /// The solution must map `pred` to exactly `closed`.
    Freeze {
        pred: String,
        closed: ClosedPred,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub enum SolveResult {
    Unknown(String),
    NoSol,
    Sol(PredSubst),
}

/// Bounds on `|c|` tried in order before the unbounded query.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoefficientSchedule {
    pub bounds: Vec<i64>,
    pub unbounded: bool,
}

impl Default for CoefficientSchedule {
    fn default() -> CoefficientSchedule {
        CoefficientSchedule {
            bounds: vec![1, 2, 4, 8],
            unbounded: true,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ScheduleState {
    pub step: usize,
}

/// The next bound to try: `Some(Some(b))` for `|c| ≤ b`, `Some(None)` for
/// the unbounded pass, `None` once the schedule is exhausted.
pub fn next_coefficient_bound(
    schedule: &CoefficientSchedule,
    state: &mut ScheduleState,
) -> Option<Option<i64>> {
    let i = state.step;
    state.step += 1;
    if i < schedule.bounds.len() {
        Some(Some(schedule.bounds[i]))
    } else if i == schedule.bounds.len() && schedule.unbounded {
        Some(None)
    } else {
        None
    }
}

/// Next template shape after `r`, growing conjunctions before disjunctions
/// at each size, within `cap`.
pub fn grow_template(r: Restriction, cap: Restriction) -> Option<Restriction> {
    let (cw, cd) = cap.dims();
    let mut shapes: Vec<(usize, usize)> = (1..=cw)
        .flat_map(|w| (1..=cd).map(move |d| (w, d)))
        .collect();
    shapes.sort_by_key(|&(w, d)| (w.max(d), d, w));
    let cur = r.dims();
    let i = shapes.iter().position(|s| *s == cur)?;
    shapes.get(i + 1).map(|&(w, d)| Restriction::shape(w, d))
}

#[derive(Clone, Debug)]
pub struct SolveOpts {
    pub restriction: Restriction,
    /// User templates with their own unknowns, used instead of the shape.
    pub templates: BTreeMap<String, FixedTemplate>,
    pub schedule: CoefficientSchedule,
    pub dnf_cap: usize,
    /// Time limit for each Farkas query; a pass that runs out moves on to
    /// the next bound. The quantified fallback uses the full SMT timeout.
    pub pass_timeout: Option<Duration>,
    pub fallback: bool,
}

impl Default for SolveOpts {
    fn default() -> SolveOpts {
        SolveOpts {
            restriction: Restriction::AtomicOnly,
            templates: BTreeMap::new(),
            schedule: CoefficientSchedule::default(),
            dnf_cap: 64,
            pass_timeout: Some(Duration::from_secs(3)),
            fallback: true,
        }
    }
}

/// Templates for every predicate variable together with their unknowns.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TemplateAssignment {
    pub preds: BTreeMap<String, PTemplate>,
    /// Unknowns subject to the coefficient bound.
    pub unknowns: BTreeSet<String>,
    /// Non-constant coefficients of each generated atom, for the L1 bound.
    pub atoms: Vec<Vec<String>>,
}

/// `⋁_{d<D} ⋀_{w<W} c₀ + Σᵢ cᵢ·xᵢ ≥ 0` with unknowns `P#d.w.i`.
pub fn shape_template(pred: &str, arity: usize, r: Restriction) -> (PTemplate, Vec<Vec<String>>) {
    let (w_max, d_max) = r.dims();
    let params = default_params(arity);
    let mut disj = Vec::new();
    let mut atoms = Vec::new();
    for d in 0..d_max {
        let mut conj = Vec::new();
        for w in 0..w_max {
            let name = |i: usize| format!("{pred}#{d}.{w}.{i}");
            let mut p = Poly::var(&name(0));
            let mut coeffs = Vec::new();
            for (i, x) in params.iter().enumerate() {
                p = p.add(&Poly::var(&name(i + 1)).mul(&Poly::var(x)));
                coeffs.push(name(i + 1));
            }
            atoms.push(coeffs);
            conj.push(PForm::Atom(p));
        }
        disj.push(PForm::and(conj));
    }
    (
        PTemplate {
            params,
            body: PForm::or(disj),
        },
        atoms,
    )
}

fn user_template(pred: &str, t: &FixedTemplate) -> Result<(PTemplate, Vec<String>), String> {
    let body = from_pformula(&t.body)?;
    let names: Vec<String> = t.unknowns.iter().map(|k| format!("{pred}#{k}")).collect();
    let map: BTreeMap<String, Poly> = t
        .unknowns
        .iter()
        .zip(&names)
        .map(|(k, n)| (k.clone(), Poly::var(n)))
        .collect();
    Ok((
        PTemplate {
            params: t.params.clone(),
            body: body.subst(&map),
        },
        names,
    ))
}

fn closed_template(c: &ClosedPred) -> PTemplate {
    PTemplate {
        params: c.params.clone(),
        body: from_formula(&c.body, true, &mut |_| PForm::False),
    }
}

/// Templates for all predicates in `arities`: frozen ones are fixed, user
/// templates take precedence over the generated shape.
pub fn instantiate_templates(
    arities: &BTreeMap<String, usize>,
    r: Restriction,
    user: &BTreeMap<String, FixedTemplate>,
    frozen: &PredSubst,
) -> Result<TemplateAssignment, String> {
    let mut out = TemplateAssignment::default();
    for (p, n) in arities {
        if let Some(c) = frozen.get(p) {
            out.preds.insert(p.clone(), closed_template(c));
        } else if let Some(t) = user.get(p) {
            if t.params.len() != *n {
                return Err(format!(
                    "template for `{p}` has arity {}, expected {n}",
                    t.params.len()
                ));
            }
            let (pt, names) = user_template(p, t)?;
            out.unknowns.extend(names);
            out.preds.insert(p.clone(), pt);
        } else {
            let (pt, atoms) = shape_template(p, *n, r);
            let mut b = BTreeSet::new();
            pt.body.vars(&mut b);
            out.unknowns.extend(b.into_iter().filter(|v| is_unknown(v)));
            out.atoms.extend(atoms);
            out.preds.insert(p.clone(), pt);
        }
    }
    Ok(out)
}

/// Skolem terms `z₀ + Σ zₓ·x` over a clause's universal variables, one per
/// existential binder, keyed by `(clause index, binder)`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SkolemMap {
    pub entries: BTreeMap<(usize, String), Poly>,
    pub unknowns: BTreeSet<String>,
}

impl SkolemMap {
    pub fn add(&mut self, clause: usize, y: &str, universals: &BTreeSet<String>) -> Poly {
        let name = |x: &str| format!("sk#{clause}.{y}.{x}");
        let mut p = Poly::var(&name(""));
        self.unknowns.insert(name(""));
        for x in universals {
            p = p.add(&Poly::var(&name(x)).mul(&Poly::var(x)));
            self.unknowns.insert(name(x));
        }
        self.entries.insert((clause, y.to_string()), p.clone());
        p
    }
}

/// Predicates whose value cannot matter to solvability: `⊤` for those
/// that only feed clauses headed by each other, then `⊥` for those never
/// derived. Returns the assignment and the clauses it leaves to solve.
pub fn trivial_preds(
    clauses: &[HornClause],
    arities: &BTreeMap<String, usize>,
    protected: &BTreeSet<String>,
) -> (PredSubst, Vec<HornClause>) {
    let mut top: BTreeSet<String> = arities
        .keys()
        .filter(|p| !protected.contains(*p))
        .cloned()
        .collect();
    for c in clauses {
        if let Head::Exists { app: Some(a), .. } = &c.head {
            top.remove(&a.pred);
        }
    }
    let head_of = |c: &HornClause| match &c.head {
        Head::App(a) => Some(a.pred.clone()),
        Head::Exists { app: Some(a), .. } => Some(a.pred.clone()),
        _ => None,
    };
    let mut changed = true;
    while changed {
        changed = false;
        for c in clauses {
            let feeds_top = matches!(&c.head, Head::App(a) if top.contains(&a.pred));
            if !feeds_top {
                for a in &c.body.apps {
                    changed |= top.remove(&a.pred);
                }
            }
        }
    }
    let live: Vec<&HornClause> = clauses
        .iter()
        .filter(|c| !matches!(&c.head, Head::App(a) if top.contains(&a.pred)))
        .collect();
    let mut bot: BTreeSet<String> = arities
        .keys()
        .filter(|p| !protected.contains(*p) && !top.contains(*p))
        .cloned()
        .collect();
    changed = true;
    while changed {
        changed = false;
        for c in &live {
            if c.body.apps.iter().all(|a| !bot.contains(&a.pred)) {
                if let Some(h) = head_of(c) {
                    changed |= bot.remove(&h);
                }
            }
        }
    }
    let rest = live
        .into_iter()
        .filter(|c| c.body.apps.iter().all(|a| !bot.contains(&a.pred)))
        .cloned()
        .collect();
    let mut theta = PredSubst::new();
    for p in &top {
        theta.insert(p.clone(), ClosedPred::top(arities[p]));
    }
    for p in &bot {
        theta.insert(p.clone(), ClosedPred::bottom(arities[p]));
    }
    (theta, rest)
}

struct Problem {
    templ: TemplateAssignment,
    /// Clauses encoded for the solver.
    clauses: Vec<HornClause>,
    /// All clauses, for validation.
    all: Vec<HornClause>,
    exists: Vec<(Vec<String>, Formula)>,
    frozen: PredSubst,
    dnf_cap: usize,
}

fn collect_arities(f: &Formula, out: &mut BTreeMap<String, usize>) -> Result<(), String> {
    let mut err = None;
    f.visit_apps(&mut |a| {
        if let Some(n) = out.insert(a.pred.clone(), a.args.len()) {
            if n != a.args.len() {
                err = Some(format!(
                    "`{}` used with arities {n} and {}",
                    a.pred,
                    a.args.len()
                ));
            }
        }
    });
    err.map_or(Ok(()), Err)
}

impl Problem {
    fn build(h: &Hccs, side: &[SideConstraint], opts: &SolveOpts) -> Result<Problem, String> {
        let mut clauses = h.clauses.clone();
        let mut exists = Vec::new();
        let mut frozen = PredSubst::new();
        for s in side {
            match s {
                SideConstraint::Clause(c) => clauses.push(c.clone()),
                SideConstraint::Exists { vars, body } => exists.push((vars.clone(), body.clone())),
                SideConstraint::Freeze { pred, closed } => {
                    frozen.insert(pred.clone(), closed.clone());
                }
            }
        }
        let mut arities = BTreeMap::new();
        for c in &clauses {
            collect_arities(&c.body_formula(), &mut arities)?;
            collect_arities(&c.head_formula(), &mut arities)?;
        }
        for (_, b) in &exists {
            collect_arities(b, &mut arities)?;
        }
        for (p, c) in &frozen {
            arities.entry(p.clone()).or_insert(c.arity());
        }
        let mut protected: BTreeSet<String> = frozen
            .keys()
            .chain(opts.templates.keys())
            .cloned()
            .collect();
        for (_, b) in &exists {
            protected.extend(b.preds());
        }
        let (trivial, rest) = trivial_preds(&clauses, &arities, &protected);
        if !trivial.is_empty() {
            log::debug!(
                "trivially solved: {}",
                trivial.keys().cloned().collect::<Vec<_>>().join(", ")
            );
        }
        frozen.extend(trivial);
        let templ = instantiate_templates(&arities, opts.restriction, &opts.templates, &frozen)?;
        Ok(Problem {
            templ,
            all: clauses,
            clauses: rest,
            exists,
            frozen,
            dnf_cap: opts.dnf_cap.max(1),
        })
    }

    fn inst(&self, f: &Formula, pos: bool) -> PForm {
        from_formula(f, pos, &mut |a: &PredApp| {
            self.templ.preds[&a.pred].instantiate(&a.args)
        })
    }

    fn head(&self, c: &HornClause) -> PForm {
        match &c.head {
            Head::App(a) => self.templ.preds[&a.pred].instantiate(&a.args),
            _ => self.inst(&c.head_formula(), true),
        }
    }

    /// Farkas query under coefficient bound `bound`.
    fn farkas_script(&self, bound: Option<i64>) -> Result<Script, String> {
        let mut s = Script::new("QF_NIA");
        let mut sk = SkolemMap::default();
        for (ci, c) in self.clauses.iter().enumerate() {
            let body = self.inst(&c.body_formula(), true);
            let mut head = self.head(c);
            let ex = c.exists_vars();
            if !ex.is_empty() {
                let univ = c.universal_vars();
                let map: BTreeMap<String, Poly> = ex
                    .iter()
                    .map(|y| (y.clone(), sk.add(ci, y, &univ)))
                    .collect();
                head = head.subst(&map);
            }
            let neg = PForm::and(vec![body, head.negate()]);
            let cubes = neg
                .dnf(self.dnf_cap)
                .ok_or_else(|| format!("clause {ci}: more than {} disjuncts", self.dnf_cap))?;
            for (k, cube) in cubes.iter().enumerate() {
                if let Some(sys) = FarkasSystem::for_cube(cube, &format!("w#{ci}.{k}"))? {
                    for w in &sys.multipliers {
                        s.declare(w);
                    }
                    for a in sys.assertions() {
                        s.assert(a);
                    }
                }
            }
        }
        for (ei, (vars, body)) in self.exists.iter().enumerate() {
            let map: BTreeMap<String, Poly> = vars
                .iter()
                .map(|x| (x.clone(), Poly::var(&format!("wit#{ei}.{x}"))))
                .collect();
            let f = self.inst(body, true).subst(&map);
            if !f.program_vars().is_empty() {
                return Err(format!(
                    "existential side constraint {ei} has free variables"
                ));
            }
            for v in map.values() {
                s.declare(&v.vars().into_iter().next().unwrap());
            }
            s.assert(f.to_smt());
        }
        for u in self.templ.unknowns.iter().chain(&sk.unknowns) {
            s.declare(u);
        }
        if let Some(b) = bound {
            for u in self.templ.unknowns.iter().chain(&sk.unknowns) {
                let u = smtio::sym(u);
                s.assert(format!("(<= {} {u} {})", smtio::int(-b), smtio::int(b)));
            }
            for atom in &self.templ.atoms {
                if atom.len() > 1 {
                    let parts: Vec<String> = atom
                        .iter()
                        .map(|c| format!("(abs {})", smtio::sym(c)))
                        .collect();
                    s.assert(format!("(<= (+ {}) {})", parts.join(" "), smtio::int(b)));
                }
            }
        }
        s.comment(format!("farkas query, bound {bound:?}"));
        Ok(s)
    }

    /// `∃c̄. ⋀ ∀x̄. body ⇒ ∃ȳ. head` directly.
    fn quantified_script(&self) -> Script {
        let mut s = Script::new("");
        for c in &self.clauses {
            let body = self.inst(&c.body_formula(), true).to_smt();
            let ex: BTreeSet<String> = c.exists_vars().iter().cloned().collect();
            let head = smtio::quantified("exists", &ex, self.head(c).to_smt());
            s.assert(smtio::quantified(
                "forall",
                &c.universal_vars(),
                format!("(=> {body} {head})"),
            ));
        }
        for (vars, body) in &self.exists {
            let vs: BTreeSet<String> = vars.iter().cloned().collect();
            s.assert(smtio::quantified(
                "exists",
                &vs,
                self.inst(body, true).to_smt(),
            ));
        }
        for u in &self.templ.unknowns {
            s.declare(u);
        }
        s.comment("quantified fallback query");
        s
    }

    fn theta(&self, model: &BTreeMap<String, i64>) -> Option<PredSubst> {
        let mut th = self.frozen.clone();
        for (p, t) in &self.templ.preds {
            if th.contains_key(p) {
                continue;
            }
            let body = t.body.eval_partial(model).to_formula()?.simplify();
            th.insert(p.clone(), ClosedPred::new(t.params.clone(), body));
        }
        Some(th)
    }

    /// Re-check a candidate with plain QFLIA queries.
    fn validate(&self, theta: &PredSubst, smt: &Smt) -> Option<bool> {
        let mut undecided = false;
        match check_solution(theta, &Hccs::new(self.all.clone()), smt) {
            CheckResult::Valid => {}
            CheckResult::Invalid { clause, model } => {
                log::error!("candidate fails clause {clause} at {model:?}");
                return Some(false);
            }
            CheckResult::Indeterminate(_) => undecided = true,
        }
        for (vars, body) in &self.exists {
            let f = crate::hccs::apply_subst(theta, body);
            let mut s = Script::new("QF_LIA");
            for v in f.vars() {
                s.declare(&v);
            }
            s.assert(smtio::formula(&f));
            match smt.check(&s) {
                SmtVerdict::Sat(_) => {}
                SmtVerdict::Unsat => {
                    log::error!("candidate violates ∃{}. {}", vars.join(","), body.pretty());
                    return Some(false);
                }
                SmtVerdict::Unknown(_) => undecided = true,
            }
        }
        if undecided {
            None
        } else {
            Some(true)
        }
    }

    fn accept(&self, model: &BTreeMap<String, i64>, smt: &Smt, how: &str) -> SolveResult {
        let Some(th) = self.theta(model) else {
            return SolveResult::Unknown(format!("{how}: incomplete model"));
        };
        match self.validate(&th, smt) {
            Some(true) => SolveResult::Sol(self.pruned(th, smt)),
            None => {
                log::warn!("{how}: solution could not be re-validated");
                SolveResult::Sol(self.pruned(th, smt))
            }
            Some(false) => SolveResult::Unknown(format!("{how}: model failed validation")),
        }
    }

    /// Solved bodies with redundant atoms removed; frozen ones are kept as given.
    fn pruned(&self, mut th: PredSubst, smt: &Smt) -> PredSubst {
        for (p, c) in th.iter_mut() {
            if !self.frozen.contains_key(p) {
                c.body = prune(&c.body, smt);
            }
        }
        th
    }
}

/// Solve H together with side constraints within the template shape.
pub fn solve(h: &Hccs, side: &[SideConstraint], opts: &SolveOpts, smt: &Smt) -> SolveResult {
    let problem = match Problem::build(h, side, opts) {
        Ok(p) => p,
        Err(e) => return SolveResult::Unknown(e),
    };
    for (vars, body) in &problem.exists {
        if problem.inst(body, true) == PForm::False {
            log::debug!(
                "∃{}. {} is false under any template",
                vars.join(","),
                body.pretty()
            );
            return SolveResult::NoSol;
        }
    }
    let mut state = ScheduleState::default();
    while let Some(bound) = next_coefficient_bound(&opts.schedule, &mut state) {
        let script = match problem.farkas_script(bound) {
            Ok(s) => s,
            Err(e) => return SolveResult::Unknown(e),
        };
        let timeout = opts
            .pass_timeout
            .map_or(smt.config.timeout, |t| t.min(smt.config.timeout));
        match smt.check_with_timeout(&script, timeout) {
            SmtVerdict::Sat(m) => {
                log::debug!("farkas sat at bound {bound:?}");
                return problem.accept(&m, smt, "farkas");
            }
            SmtVerdict::Unsat => log::debug!("farkas unsat at bound {bound:?}"),
            SmtVerdict::Unknown(r) => log::debug!("farkas unknown at bound {bound:?}: {r}"),
        }
    }
    if !opts.fallback {
        return SolveResult::Unknown("no certificate within the coefficient schedule".into());
    }
    match smt.check(&problem.quantified_script()) {
        SmtVerdict::Unsat => SolveResult::NoSol,
        SmtVerdict::Sat(m) => problem.accept(&m, smt, "fallback"),
        SmtVerdict::Unknown(r) => SolveResult::Unknown(r),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hccs::{implies, parse_clause, parse_formula, parse_hccs};

    fn hsum_bot() -> Hccs {
        parse_hccs("false <= P(x), x = 0\nP(x - 1) <= P(x), x != 0\n")
            .unwrap()
            .hccs
    }

    fn pred(params: &[&str], body: &str) -> ClosedPred {
        ClosedPred::new(
            params.iter().map(|s| s.to_string()).collect(),
            parse_formula(body).unwrap(),
        )
    }

    #[test]
    fn bound_schedule() {
        let s = CoefficientSchedule::default();
        let mut st = ScheduleState::default();
        assert_eq!(next_coefficient_bound(&s, &mut st), Some(Some(1)));
        next_coefficient_bound(&s, &mut st);
        next_coefficient_bound(&s, &mut st);
        assert_eq!(next_coefficient_bound(&s, &mut st), Some(Some(8)));
        assert_eq!(next_coefficient_bound(&s, &mut st), Some(None));
        assert_eq!(next_coefficient_bound(&s, &mut st), None);
    }

    #[test]
    fn growth_order() {
        let cap = Restriction::shape(3, 3);
        let mut r = Restriction::AtomicOnly;
        let mut seen = vec![r.to_string()];
        while let Some(n) = grow_template(r, cap) {
            seen.push(n.to_string());
            r = n;
        }
        assert_eq!(seen[..4], ["1x1", "2x1", "1x2", "2x2"]);
        assert_eq!(seen.len(), 9);
        assert_eq!(
            grow_template(Restriction::AtomicOnly, Restriction::shape(2, 1)),
            Some(Restriction::shape(2, 1))
        );
        assert_eq!(
            grow_template(Restriction::shape(2, 1), Restriction::shape(2, 1)),
            None
        );
    }

    #[test]
    fn bottom_from_top_has_no_solution() {
        let h = Hccs::new(vec![parse_clause("false <= true").unwrap()]);
        assert_eq!(
            solve(&h, &[], &SolveOpts::default(), &Smt::default()),
            SolveResult::NoSol
        );
    }

    #[test]
    fn improving_bottom() {
        // first improvement step of maximizing P from λx.⊥
        let side = vec![SideConstraint::Exists {
            vars: vec!["x".into()],
            body: parse_formula("P(x)").unwrap(),
        }];
        let SolveResult::Sol(th) =
            solve(&hsum_bot(), &side, &SolveOpts::default(), &Smt::default())
        else {
            panic!()
        };
        let p = &th["P"];
        let smt = Smt::default();
        assert!(check_solution(&th, &hsum_bot(), &smt).is_valid());
        assert_eq!(
            implies(&p.body, &parse_formula("x1 < 0").unwrap(), &smt),
            Some(true)
        );
    }

    #[test]
    fn optimal_bottom_cannot_improve() {
        let side = vec![
            SideConstraint::Clause(parse_clause("P(x) <= x < 0").unwrap()),
            SideConstraint::Exists {
                vars: vec!["x".into()],
                body: parse_formula("P(x) && x >= 0").unwrap(),
            },
        ];
        assert_eq!(
            solve(&hsum_bot(), &side, &SolveOpts::default(), &Smt::default()),
            SolveResult::NoSol
        );
    }

    #[test]
    fn frozen_predicate_is_kept() {
        let side = vec![SideConstraint::Freeze {
            pred: "P".into(),
            closed: pred(&["x1"], "x1 < -3"),
        }];
        let SolveResult::Sol(th) =
            solve(&hsum_bot(), &side, &SolveOpts::default(), &Smt::default())
        else {
            panic!()
        };
        assert_eq!(th["P"], pred(&["x1"], "x1 < -3"));
    }

    #[test]
    fn skolemized_existential_head() {
        // every x has some y above it
        let h = Hccs::new(vec![
            parse_clause("exists y. Q(x, y) <= true").unwrap(),
            parse_clause("y > x <= Q(x, y)").unwrap(),
        ]);
        let SolveResult::Sol(th) = solve(&h, &[], &SolveOpts::default(), &Smt::default()) else {
            panic!()
        };
        assert!(check_solution(&th, &h, &Smt::default()).is_valid());
    }

    #[test]
    fn user_template_unknowns() {
        let d = crate::surface::parse_directives("@template B(i, c) = 0 <= c && c <= k0 + k1 * i")
            .unwrap();
        let h = Hccs::new(vec![
            parse_clause("B(i, c) <= c = 0 && i >= 0").unwrap(),
            parse_clause("B(i, c + 1) <= B(i, c) && c < i").unwrap(),
        ]);
        let opts = SolveOpts {
            templates: d.templates,
            ..SolveOpts::default()
        };
        let SolveResult::Sol(th) = solve(&h, &[], &opts, &Smt::default()) else {
            panic!()
        };
        assert!(check_solution(&th, &h, &Smt::default()).is_valid());
    }

    #[test]
    fn shape_needs_two_conjuncts() {
        // P must contain 0 and 1 and exclude everything else
        let h = Hccs::new(vec![
            parse_clause("P(x) <= x = 0").unwrap(),
            parse_clause("P(x) <= x = 1").unwrap(),
            parse_clause("false <= P(x), x < 0").unwrap(),
            parse_clause("false <= P(x), x > 1").unwrap(),
        ]);
        let smt = Smt::default();
        assert_eq!(
            solve(&h, &[], &SolveOpts::default(), &smt),
            SolveResult::NoSol
        );
        let opts = SolveOpts {
            restriction: Restriction::shape(2, 1),
            ..SolveOpts::default()
        };
        let SolveResult::Sol(th) = solve(&h, &[], &opts, &smt) else {
            panic!()
        };
        let want = parse_formula("0 <= x1 && x1 <= 1").unwrap();
        assert_eq!(implies(&th["P"].body, &want, &smt), Some(true));
        assert_eq!(implies(&want, &th["P"].body, &smt), Some(true));
    }
}
