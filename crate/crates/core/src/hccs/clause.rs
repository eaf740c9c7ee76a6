//! Existentially quantified Horn clauses, predicate substitutions and the
//! normalizer that turns arbitrary proof obligations into clause form.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::formula::{simplify_dnf, to_dnf, DnfError, Formula, LinExpr, Lit, PredApp, Term};

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Head {
    App(PredApp),
    Pure(Formula),
    /// `∃x̄. P(t̄) ∧ φ`; `app` is `None` once the predicate is instantiated.
    Exists {
        vars: Vec<String>,
        app: Option<PredApp>,
        guard: Formula,
    },
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Body {
    pub apps: Vec<PredApp>,
    pub guard: Formula,
}

impl Default for Formula {
    fn default() -> Formula {
        Formula::True
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HornClause {
    pub head: Head,
    pub body: Body,
}

impl HornClause {
    pub fn new(head: Head, apps: Vec<PredApp>, guard: Formula) -> HornClause {
        HornClause {
            head,
            body: Body { apps, guard },
        }
    }

    /// Body as a single formula.
    pub fn body_formula(&self) -> Formula {
        let mut parts: Vec<Formula> = self.body.apps.iter().cloned().map(Formula::Pred).collect();
        parts.push(self.body.guard.clone());
        Formula::and(parts)
    }

    /// Head as a formula; existential variables are left free.
    pub fn head_formula(&self) -> Formula {
        match &self.head {
            Head::App(a) => Formula::Pred(a.clone()),
            Head::Pure(f) => f.clone(),
            Head::Exists { app, guard, .. } => Formula::and(vec![
                app.clone().map_or(Formula::True, Formula::Pred),
                guard.clone(),
            ]),
        }
    }

    pub fn exists_vars(&self) -> &[String] {
        match &self.head {
            Head::Exists { vars, .. } => vars,
            _ => &[],
        }
    }

    /// Implicitly universally quantified variables.
    pub fn universal_vars(&self) -> BTreeSet<String> {
        let mut out = self.body_formula().vars();
        let mut hv = self.head_formula().vars();
        for v in self.exists_vars() {
            hv.remove(v);
        }
        out.extend(hv);
        out
    }

    pub fn pvs(&self) -> BTreeSet<String> {
        let mut out = self.body_formula().preds();
        out.extend(self.head_formula().preds());
        out
    }

    pub fn apps(&self) -> Vec<&PredApp> {
        let mut out: Vec<&PredApp> = self.body.apps.iter().collect();
        match &self.head {
            Head::App(a) | Head::Exists { app: Some(a), .. } => out.push(a),
            _ => {}
        }
        out
    }

    /// Apply θ. Predicates outside `dom(θ)` stay.
    pub fn apply(&self, theta: &PredSubst) -> HornClause {
        let inst = |f: &Formula| apply_subst(theta, f);
        let mut apps = Vec::new();
        let mut guard = vec![];
        for a in &self.body.apps {
            match theta.get(&a.pred) {
                Some(p) => guard.push(p.apply(&a.args)),
                None => apps.push(a.clone()),
            }
        }
        guard.push(inst(&self.body.guard));
        let head = match &self.head {
            Head::App(a) => match theta.get(&a.pred) {
                Some(p) => Head::Pure(p.apply(&a.args)),
                None => Head::App(a.clone()),
            },
            Head::Pure(f) => Head::Pure(inst(f)),
            Head::Exists {
                vars,
                app,
                guard: g,
            } => match app {
                Some(a) if theta.contains_key(&a.pred) => Head::Exists {
                    vars: vars.clone(),
                    app: None,
                    guard: Formula::and(vec![theta[&a.pred].apply(&a.args), inst(g)]),
                },
                _ => Head::Exists {
                    vars: vars.clone(),
                    app: app.clone(),
                    guard: inst(g),
                },
            },
        };
        HornClause {
            head,
            body: Body {
                apps,
                guard: Formula::and(guard),
            },
        }
    }

    pub fn pretty(&self) -> String {
        let head = match &self.head {
            Head::App(a) => a.to_string(),
            Head::Pure(f) => f.pretty(),
            Head::Exists { vars, app, guard } => {
                let inner = match app {
                    None => guard.pretty(),
                    Some(a) if guard.is_true() => a.to_string(),
                    Some(a) => format!("{a} ∧ {}", guard.pretty()),
                };
                format!("∃{}. {inner}", vars.join(","))
            }
        };
        let mut items: Vec<String> = self.body.apps.iter().map(|a| a.to_string()).collect();
        // Items are joined by ∧, so looser connectives need parentheses.
        let item = |f: &Formula| match f {
            Formula::Or(_) | Formula::Implies(..) => format!("({})", f.pretty()),
            f => f.pretty(),
        };
        match &self.body.guard {
            Formula::True => {}
            Formula::And(parts) if !is_eq(&self.body.guard) => items.extend(parts.iter().map(item)),
            g => items.push(item(g)),
        }
        if items.is_empty() {
            items.push("⊤".into());
        }
        format!("{head} ⇐ {}", items.join(" ∧ "))
    }
}

fn is_eq(f: &Formula) -> bool {
    matches!(Formula::and(vec![f.clone()]), Formula::And(ref p) if p.len() == 2
        && matches!((&p[0], &p[1]), (Formula::Leq(a, b), Formula::Leq(c, d)) if a == d && b == c))
}

/// Textual form, one clause per line, readable by [`super::text::parse_hccs`].
impl fmt::Display for HornClause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let app = |a: &PredApp| Formula::Pred(a.clone()).to_string();
        match &self.head {
            Head::App(a) => write!(f, "{}", app(a))?,
            Head::Pure(Formula::False) => write!(f, "false")?,
            Head::Pure(g) => write!(f, "{g}")?,
            Head::Exists {
                vars,
                app: a,
                guard,
            } => {
                write!(f, "exists {} . ", vars.join(","))?;
                match a {
                    None => write!(f, "{}", paren(guard))?,
                    Some(a) if guard.is_true() => write!(f, "{}", app(a))?,
                    Some(a) => write!(f, "{} & {}", app(a), paren(guard))?,
                }
            }
        }
        write!(f, " <= ")?;
        let mut items: Vec<String> = self.body.apps.iter().map(app).collect();
        if !self.body.guard.is_true() || items.is_empty() {
            items.push(paren(&self.body.guard));
        }
        write!(f, "{}", items.join(", "))
    }
}

fn paren(f: &Formula) -> String {
    match f {
        Formula::Or(_) | Formula::Implies(..) => format!("({f})"),
        _ => f.to_string(),
    }
}

/// A finite set of clauses.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Hccs {
    pub clauses: Vec<HornClause>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ArityError {
    #[error("predicate {pred} used with arities {a} and {b}")]
    Mismatch { pred: String, a: usize, b: usize },
}

impl Hccs {
    pub fn new(clauses: Vec<HornClause>) -> Hccs {
        Hccs { clauses }
    }

    pub fn pvs(&self) -> BTreeSet<String> {
        self.clauses.iter().flat_map(|c| c.pvs()).collect()
    }

    pub fn arities(&self) -> Result<BTreeMap<String, usize>, ArityError> {
        let mut out: BTreeMap<String, usize> = BTreeMap::new();
        for c in &self.clauses {
            let mut all: Vec<PredApp> = c.apps().into_iter().cloned().collect();
            c.body.guard.visit_apps(&mut |a| all.push(a.clone()));
            if let Head::Pure(f) = &c.head {
                f.visit_apps(&mut |a| all.push(a.clone()));
            }
            for a in all {
                match out.get(&a.pred) {
                    Some(&n) if n != a.args.len() => {
                        return Err(ArityError::Mismatch {
                            pred: a.pred.clone(),
                            a: n,
                            b: a.args.len(),
                        })
                    }
                    _ => {
                        out.insert(a.pred.clone(), a.args.len());
                    }
                }
            }
        }
        Ok(out)
    }

    /// Predicates that occur under an existential head.
    pub fn existential_pvs(&self) -> BTreeSet<String> {
        self.clauses
            .iter()
            .filter_map(|c| match &c.head {
                Head::Exists { app: Some(app), .. } => Some(app.pred.clone()),
                _ => None,
            })
            .collect()
    }

    pub fn apply(&self, theta: &PredSubst) -> Hccs {
        Hccs {
            clauses: self.clauses.iter().map(|c| c.apply(theta)).collect(),
        }
    }

    pub fn pretty(&self) -> String {
        self.clauses.iter().map(|c| c.pretty() + "\n").collect()
    }
}

impl fmt::Display for Hccs {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.clauses {
            writeln!(f, "{c}")?;
        }
        Ok(())
    }
}

/// A closed predicate `λx̄.φ`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ClosedPred {
    pub params: Vec<String>,
    pub body: Formula,
}

impl ClosedPred {
    pub fn new(params: Vec<String>, body: Formula) -> ClosedPred {
        ClosedPred { params, body }
    }

    pub fn top(arity: usize) -> ClosedPred {
        ClosedPred::new(default_params(arity), Formula::True)
    }

    pub fn bottom(arity: usize) -> ClosedPred {
        ClosedPred::new(default_params(arity), Formula::False)
    }

    pub fn arity(&self) -> usize {
        self.params.len()
    }

    /// `φ[t̄/x̄]`, simultaneous.
    pub fn apply(&self, args: &[Term]) -> Formula {
        let map: BTreeMap<String, Term> = self
            .params
            .iter()
            .cloned()
            .zip(args.iter().cloned())
            .collect();
        self.body.subst(&map)
    }

    /// Same predicate over different parameter names.
    pub fn rename(&self, params: &[String]) -> ClosedPred {
        let args: Vec<Term> = params.iter().map(|p| Term::var(p.clone())).collect();
        ClosedPred::new(params.to_vec(), self.apply(&args))
    }

    pub fn pretty(&self) -> String {
        format!("λ{}. {}", self.params.join(","), self.body.pretty())
    }
}

pub fn default_params(arity: usize) -> Vec<String> {
    (0..arity).map(|i| format!("x{}", i + 1)).collect()
}

pub type PredSubst = BTreeMap<String, ClosedPred>;

/// Replace every application of a predicate in `dom(θ)`.
pub fn apply_subst(theta: &PredSubst, f: &Formula) -> Formula {
    f.map_apps(&mut |a| match theta.get(&a.pred) {
        Some(p) => p.apply(&a.args),
        None => Formula::Pred(a.clone()),
    })
}

/// Pretty rendering of θ, one entry per line.
pub fn pretty_subst(theta: &PredSubst) -> String {
    theta
        .iter()
        .map(|(k, v)| format!("{k} ↦ {}\n", v.pretty()))
        .collect()
}

/// A proof obligation `body ⇒ head`, not yet in clause form.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Obligation {
    pub body: Formula,
    pub head: ObHead,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ObHead {
    Formula(Formula),
    Exists {
        vars: Vec<String>,
        app: PredApp,
        guard: Formula,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum NormalizeError {
    #[error(transparent)]
    Dnf(#[from] DnfError),
    #[error("unsupported clause head: {0}")]
    Head(String),
}

/// How clause normalization may rewrite variables.
#[derive(Clone, Debug, Default)]
pub struct NormalizeOpts {
    /// Variables that may be eliminated through body equalities, with a
    /// preference rank (higher is eliminated first). Others are kept.
    pub eliminable: BTreeMap<String, usize>,
    pub dnf_cap: usize,
}

/// Split an obligation into grammar-shaped clauses.
pub fn normalize(ob: &Obligation, opts: &NormalizeOpts) -> Result<Vec<HornClause>, NormalizeError> {
    let cap = if opts.dnf_cap == 0 { 64 } else { opts.dnf_cap };
    let cubes = to_dnf(&ob.body, cap)?;
    let heads: Vec<HeadPart> = match &ob.head {
        ObHead::Formula(f) => split_head(f)?,
        ObHead::Exists { vars, app, guard } => {
            vec![HeadPart::Exists(vars.clone(), app.clone(), guard.clone())]
        }
    };
    let mut out = Vec::new();
    for cube in cubes {
        for h in &heads {
            if let Some(c) = finish(cube.clone(), h.clone(), opts) {
                if !out.contains(&c) {
                    out.push(c);
                }
            }
        }
    }
    Ok(out)
}

#[derive(Clone, Debug)]
enum HeadPart {
    App(PredApp),
    Pure(Formula),
    Exists(Vec<String>, PredApp, Formula),
}

fn split_head(f: &Formula) -> Result<Vec<HeadPart>, NormalizeError> {
    if !f.has_preds() {
        return Ok(vec![HeadPart::Pure(f.clone())]);
    }
    match f {
        Formula::Pred(a) => Ok(vec![HeadPart::App(a.clone())]),
        Formula::And(parts) => {
            let mut out = Vec::new();
            for p in parts {
                out.extend(split_head(p)?);
            }
            Ok(out)
        }
        other => Err(NormalizeError::Head(other.pretty())),
    }
}

fn finish(mut cube: Vec<Lit>, mut head: HeadPart, opts: &NormalizeOpts) -> Option<HornClause> {
    let bound: BTreeSet<String> = match &head {
        HeadPart::Exists(vs, ..) => vs.iter().cloned().collect(),
        _ => BTreeSet::new(),
    };
    // equality elimination
    loop {
        let mut best: Option<(usize, usize, String, LinExpr)> = None;
        for (i, l) in cube.iter().enumerate() {
            let Lit::Eq(e) = l else { continue };
            for (v, a) in &e.coeffs {
                if a.abs() != 1 || bound.contains(v) {
                    continue;
                }
                let Some(&rank) = opts.eliminable.get(v) else {
                    continue;
                };
                if best.as_ref().is_none_or(|b| rank > b.0) {
                    // a·v + r = 0  ⇒  v = -a·r
                    let mut r = e.clone();
                    r.coeffs.remove(v);
                    best = Some((rank, i, v.clone(), r.scale(-a)));
                }
            }
        }
        let Some((_, i, v, by)) = best else { break };
        cube.remove(i);
        cube = cube.iter().map(|l| l.subst(&v, &by)).collect();
        head = subst_head(&head, &v, &by);
    }
    let cube = simplify_dnf(vec![cube]).pop()?;
    let mut apps = Vec::new();
    let mut lits = Vec::new();
    for l in cube {
        match l {
            Lit::App(a) => {
                let a = a.normalized();
                if !apps.contains(&a) {
                    apps.push(a);
                }
            }
            l => lits.push(l),
        }
    }
    let head = match head {
        HeadPart::App(a) => {
            let a = a.normalized();
            if apps.contains(&a) {
                return None;
            }
            Head::App(a)
        }
        HeadPart::Pure(f) => {
            let d = simplify_dnf(to_dnf(&f, 256).ok()?);
            if d.iter().any(|c| c.iter().all(|l| lits.contains(l))) {
                return None;
            }
            Head::Pure(Formula::from_dnf(&d))
        }
        HeadPart::Exists(vars, app, guard) => Head::Exists {
            vars,
            app: Some(app.normalized()),
            guard: guard.simplify(),
        },
    };
    Some(HornClause {
        head,
        body: Body {
            apps,
            guard: Formula::from_lits(&lits),
        },
    })
}

fn subst_head(h: &HeadPart, v: &str, by: &LinExpr) -> HeadPart {
    let mut m = BTreeMap::new();
    m.insert(v.to_string(), by.to_term());
    match h {
        HeadPart::App(a) => HeadPart::App(a.subst(&m)),
        HeadPart::Pure(f) => HeadPart::Pure(f.subst(&m)),
        HeadPart::Exists(vs, a, g) => HeadPart::Exists(vs.clone(), a.subst(&m), g.subst(&m)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(x: &str) -> Term {
        Term::var(x)
    }

    #[test]
    fn eliminates_fresh_equalities_only() {
        // t = x - 1 ∧ P(x) ∧ x ≠ 0 ⇒ P(t)
        let body = Formula::and(vec![
            Formula::Pred(PredApp::new("P", vec![v("x")])),
            Formula::eq(v("t"), Term::sub(v("x"), Term::Const(1))),
            Formula::neq(v("x"), Term::Const(0)),
        ]);
        let ob = Obligation {
            body,
            head: ObHead::Formula(Formula::Pred(PredApp::new("P", vec![v("t")]))),
        };
        let mut opts = NormalizeOpts::default();
        opts.eliminable.insert("t".into(), 5);
        let cs = normalize(&ob, &opts).unwrap();
        assert_eq!(cs.len(), 1);
        assert_eq!(cs[0].pretty(), "P(x - 1) ⇐ P(x) ∧ x ≠ 0");
    }

    #[test]
    fn drops_tautologies() {
        let p = Formula::Pred(PredApp::new("P", vec![v("x")]));
        let ob = Obligation {
            body: p.clone(),
            head: ObHead::Formula(p),
        };
        assert!(normalize(&ob, &NormalizeOpts::default())
            .unwrap()
            .is_empty());
        let ob = Obligation {
            body: Formula::False,
            head: ObHead::Formula(Formula::False),
        };
        assert!(normalize(&ob, &NormalizeOpts::default())
            .unwrap()
            .is_empty());
    }

    #[test]
    fn apply_closes_clause() {
        let c = HornClause::new(
            Head::Pure(Formula::False),
            vec![PredApp::new("P", vec![v("x")])],
            Formula::eq(v("x"), Term::Const(0)),
        );
        let mut th = PredSubst::new();
        th.insert(
            "P".into(),
            ClosedPred::new(vec!["y".into()], Formula::lt(v("y"), Term::Const(0))),
        );
        let d = c.apply(&th);
        assert!(d.pvs().is_empty());
        assert!(d.body.apps.is_empty());
    }
}
