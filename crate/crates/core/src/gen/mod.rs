//! Constraint generation: a syntax-directed pass over the typing rules that
//! collects subtyping and angelic-choice obligations and normalizes them
//! into ∃HCCS clauses.

mod instrument;
mod source;

pub use instrument::{instrument_counters, InstrumentError};
pub use source::to_source;

use std::collections::{BTreeMap, BTreeSet};

use num_traits::ToPrimitive;

use crate::hccs::{
    default_params, normalize, Formula, Hccs, Head, HornClause, NormalizeError, NormalizeOpts,
    ObHead, Obligation, PredApp, Term,
};
use crate::rtypes::{
    infer_ml_types, sem_env, template_of, MlError, MlTypes, Namer, RType, TypeEnv,
};
use crate::surface::{DirectiveSet, Expr, FunDef, Op, Program, Value};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GenError {
    #[error(transparent)]
    Ml(#[from] MlError),
    #[error(transparent)]
    Normalize(#[from] NormalizeError),
    #[error("no type template for `{0}`")]
    Missing(String),
    #[error("ill-typed in `{fun}`: {msg}")]
    IllTyped { fun: String, msg: String },
    #[error("unsupported: {0}")]
    Unsupported(String),
}

const DNF_CAP: usize = 64;
/// Elimination rank of the ν's; above every let-bound variable.
const NU_RANK: usize = 1 << 20;

struct Gen<'a> {
    ml: &'a MlTypes,
    fun: String,
    next_nu: usize,
    next_let: usize,
    eliminable: BTreeMap<String, usize>,
    used: BTreeSet<String>,
    obligations: Vec<Obligation>,
}

impl Gen<'_> {
    fn err(&self, msg: impl Into<String>) -> GenError {
        GenError::IllTyped {
            fun: self.fun.clone(),
            msg: msg.into(),
        }
    }

    fn fresh_nu(&mut self) -> String {
        loop {
            self.next_nu += 1;
            let v = format!("ν{}", self.next_nu);
            if self.used.insert(v.clone()) {
                self.eliminable.insert(v.clone(), NU_RANK + self.next_nu);
                return v;
            }
        }
    }

    /// `base` if not yet in use, else a primed variant.
    fn fresh_like(&mut self, base: &str) -> String {
        let mut b = base.to_string();
        while self.used.contains(&b) {
            b.push('\'');
        }
        self.used.insert(b.clone());
        b
    }

    fn term(&self, v: &Value) -> Result<Term, GenError> {
        match v {
            Value::Int(n) => n
                .to_i64()
                .map(Term::Const)
                .ok_or_else(|| GenError::Unsupported(format!("integer literal {n} out of range"))),
            Value::Var(x) => Ok(Term::var(x.clone())),
            Value::PApp(..) => Err(self.err(format!("function value `{v}` used as an integer"))),
        }
    }

    fn obligation(&mut self, env: &TypeEnv, extra: Formula, head: ObHead) {
        let body = Formula::and(vec![sem_env(env), extra]);
        self.obligations.push(Obligation { body, head });
    }

    fn synth_value(&mut self, env: &TypeEnv, v: &Value) -> Result<RType, GenError> {
        self.synth(env, &v.to_expr())
    }

    fn synth(&mut self, env: &TypeEnv, e: &Expr) -> Result<RType, GenError> {
        match e {
            Expr::Int(n) => {
                let t = self.term(&Value::Int(n.clone()))?;
                let nu = self.fresh_nu();
                Ok(RType::refined(&nu, Formula::eq(Term::var(nu.clone()), t)))
            }
            Expr::Var(x) => match env.lookup(x) {
                Some(RType::Int { .. }) => {
                    let nu = self.fresh_nu();
                    Ok(RType::refined(
                        &nu,
                        Formula::eq(Term::var(nu.clone()), Term::var(x.clone())),
                    ))
                }
                Some(t) => Ok(t.clone()),
                None => Err(self.err(format!("unbound `{x}`"))),
            },
            Expr::App(f, v) => {
                let tf = self.synth(env, f)?;
                let RType::Fun {
                    binder,
                    param,
                    result,
                } = tf
                else {
                    return Err(self.err(format!("`{f}` is not a function")));
                };
                self.check_value(env, v, &param)?;
                if param.is_int() {
                    let t = self.term(v)?;
                    Ok(result.subst(&BTreeMap::from([(binder, t)])))
                } else {
                    Ok(*result)
                }
            }
            Expr::Op(op, args) => {
                let (a, b) = (self.term(&args[0])?, self.term(&args[1])?);
                let nu = self.fresh_nu();
                let v = Term::var(nu.clone());
                let f = match op {
                    Op::Add => Formula::eq(v, Term::add(a, b)),
                    Op::Sub => Formula::eq(v, Term::sub(a, b)),
                    Op::Mul => match (&a, &b) {
                        (Term::Const(k), t) | (t, Term::Const(k)) => {
                            Formula::eq(v, Term::scale(*k, t.clone()))
                        }
                        _ => {
                            return Err(GenError::Unsupported(format!(
                                "nonlinear product in `{}`",
                                self.fun
                            )))
                        }
                    },
                    cmp => {
                        let phi = comparison(*cmp, a, b);
                        Formula::or(vec![
                            Formula::and(vec![Formula::eq(v.clone(), Term::Const(1)), phi.clone()]),
                            Formula::and(vec![Formula::eq(v, Term::Const(0)), Formula::not(phi)]),
                        ])
                    }
                };
                Ok(RType::refined(&nu, f))
            }
            _ => Err(self.err("expression needs a type template")),
        }
    }

    fn check_value(&mut self, env: &TypeEnv, v: &Value, t: &RType) -> Result<(), GenError> {
        let s = self.synth_value(env, v)?;
        self.sub(env, &s, t)
    }

    fn check(&mut self, env: &TypeEnv, e: &Expr, t: &RType) -> Result<(), GenError> {
        match e {
            Expr::Let(x, e1, e2) => {
                let t1 = if synthesizable(e1) {
                    self.synth(env, e1)?
                } else {
                    let st = self
                        .ml
                        .local(&self.fun, x)
                        .ok_or_else(|| self.err(format!("no ML type for `{x}`")))?;
                    let mut namer = Namer::new(
                        &format!("{}_{}", self.fun, x.trim_start_matches('_')),
                        self.used.clone(),
                    );
                    let templ = template_of(st, x, &env.int_vars(), &mut namer);
                    self.check(env, e1, &templ)?;
                    templ
                };
                self.next_let += 1;
                self.eliminable.insert(x.clone(), self.next_let);
                let mut inner = env.clone();
                inner.bind(x, t1);
                self.check(&inner, e2, t)
            }
            Expr::Ifz(v, a, b) => {
                let c = self.term(v)?;
                let mut then_env = env.clone();
                then_env.guard(Formula::eq(c.clone(), Term::Const(0)));
                self.check(&then_env, a, t)?;
                let mut else_env = env.clone();
                else_env.guard(Formula::neq(c, Term::Const(0)));
                self.check(&else_env, b, t)
            }
            Expr::RandAngelic(x, body) => {
                let mut args: Vec<Term> = env.int_vars().into_iter().map(Term::var).collect();
                args.push(Term::var(x.clone()));
                let app = PredApp::new(
                    format!("R_{}_{}", self.fun, x.trim_start_matches('_')),
                    args,
                );
                self.obligation(
                    env,
                    Formula::True,
                    ObHead::Exists {
                        vars: vec![x.clone()],
                        app: app.clone(),
                        guard: Formula::True,
                    },
                );
                let mut inner = env.clone();
                inner.bind(x, RType::refined(x, Formula::Pred(app)));
                self.check(&inner, body, t)
            }
            Expr::RandDemonic(x, body) => {
                let mut inner = env.clone();
                inner.bind(x, RType::int(x));
                self.check(&inner, body, t)
            }
            _ => {
                let s = self.synth(env, e)?;
                self.sub(env, &s, t)
            }
        }
    }

    /// `Γ ⊢ τ₁ <: τ₂`.
    fn sub(&mut self, env: &TypeEnv, t1: &RType, t2: &RType) -> Result<(), GenError> {
        match (t1, t2) {
            (
                RType::Int {
                    binder: b1,
                    refine: f1,
                },
                RType::Int {
                    binder: b2,
                    refine: f2,
                },
            ) => {
                if f2.is_true() {
                    return Ok(());
                }
                let nu = self.fresh_nu();
                let v = Term::var(nu);
                let lhs = f1.subst(&BTreeMap::from([(b1.clone(), v.clone())]));
                let rhs = f2.subst(&BTreeMap::from([(b2.clone(), v)]));
                self.obligation(env, lhs, ObHead::Formula(rhs));
                Ok(())
            }
            (
                RType::Fun {
                    binder: b1,
                    param: p1,
                    result: r1,
                },
                RType::Fun {
                    binder: b2,
                    param: p2,
                    result: r2,
                },
            ) => {
                self.sub(env, p2, p1)?;
                let b = self.fresh_like(b2);
                let r1 = r1.subst(&BTreeMap::from([(b1.clone(), Term::var(b.clone()))]));
                let r2 = r2.subst(&BTreeMap::from([(b2.clone(), Term::var(b.clone()))]));
                let mut inner = env.clone();
                inner.bind(&b, p2.with_binder(&b));
                self.sub(&inner, &r1, &r2)
            }
            _ => Err(self.err(format!("shape mismatch between {t1} and {t2}"))),
        }
    }

    fn def(&mut self, env: &TypeEnv, d: &FunDef) -> Result<(), GenError> {
        self.fun = d.name.clone();
        let mut t = env
            .lookup(&d.name)
            .cloned()
            .ok_or_else(|| GenError::Missing(d.name.clone()))?;
        let mut inner = env.clone();
        for x in &d.params {
            let RType::Fun {
                binder,
                param,
                result,
            } = t
            else {
                return Err(self.err(format!("template of `{}` has too few parameters", d.name)));
            };
            inner.bind(x, param.with_binder(x));
            t = if &binder == x {
                *result
            } else {
                result.subst(&BTreeMap::from([(binder, Term::var(x.clone()))]))
            };
        }
        self.check(&inner, &d.body, &t)
    }
}

fn comparison(op: Op, a: Term, b: Term) -> Formula {
    match op {
        Op::Le => Formula::leq(a, b),
        Op::Lt => Formula::lt(a, b),
        Op::Ge => Formula::geq(a, b),
        Op::Gt => Formula::gt(a, b),
        Op::Eq => Formula::eq(a, b),
        Op::Ne => Formula::neq(a, b),
        Op::Add | Op::Sub | Op::Mul => unreachable!("not a comparison"),
    }
}

fn synthesizable(e: &Expr) -> bool {
    matches!(
        e,
        Expr::Int(_) | Expr::Var(_) | Expr::App(..) | Expr::Op(..)
    )
}

fn all_vars(p: &Program) -> BTreeSet<String> {
    let mut out = p.names();
    for d in &p.defs {
        out.extend(d.params.iter().cloned());
        collect_binders(&d.body, &mut out);
    }
    out
}

fn collect_binders(e: &Expr, out: &mut BTreeSet<String>) {
    match e {
        Expr::Let(x, a, b) => {
            out.insert(x.clone());
            collect_binders(a, out);
            collect_binders(b, out);
        }
        Expr::Ifz(_, a, b) => {
            collect_binders(a, out);
            collect_binders(b, out);
        }
        Expr::RandAngelic(x, b) | Expr::RandDemonic(x, b) => {
            out.insert(x.clone());
            collect_binders(b, out);
        }
        Expr::App(f, _) => collect_binders(f, out),
        _ => {}
    }
}

/// Gen(D, Γ_D): the clauses whose solutions θ are exactly those with
/// `⊢ D : θΓ_D`, followed by the directive clauses and one `∃x̄.P(x̄)`
/// clause per `@exists P`. Fixed predicates are substituted throughout.
pub fn generate(p: &Program, env: &TypeEnv, d: &DirectiveSet) -> Result<Hccs, GenError> {
    let ml = infer_ml_types(p)?;
    let mut clauses: Vec<HornClause> = Vec::new();
    let push = |c: HornClause, out: &mut Vec<HornClause>| {
        if !out.contains(&c) {
            out.push(c);
        }
    };
    for def in &p.defs {
        let mut g = Gen {
            ml: &ml,
            fun: def.name.clone(),
            next_nu: 0,
            next_let: 0,
            eliminable: BTreeMap::new(),
            used: all_vars(p),
            obligations: Vec::new(),
        };
        g.def(env, def)?;
        let opts = NormalizeOpts {
            eliminable: g.eliminable.clone(),
            dnf_cap: DNF_CAP,
        };
        for ob in &g.obligations {
            for c in normalize(ob, &opts)? {
                push(c, &mut clauses);
            }
        }
    }
    for c in &d.clauses {
        push(c.clone(), &mut clauses);
    }
    let arities = Hccs::new(clauses.clone())
        .arities()
        .map_err(|e| GenError::Unsupported(e.to_string()))?;
    for name in &d.exists {
        let n = match arities.get(name) {
            Some(n) => *n,
            None => env_arity(env, name).ok_or_else(|| GenError::Missing(name.clone()))?,
        };
        let vars = default_params(n);
        let app = PredApp::new(
            name.clone(),
            vars.iter().map(|x| Term::var(x.clone())).collect(),
        );
        push(
            HornClause::new(
                Head::Exists {
                    vars,
                    app: Some(app),
                    guard: Formula::True,
                },
                vec![],
                Formula::True,
            ),
            &mut clauses,
        );
    }
    let mut out = Vec::new();
    for c in clauses {
        push(c.apply(&d.fixed), &mut out);
    }
    Ok(Hccs::new(out))
}

fn env_arity(env: &TypeEnv, pred: &str) -> Option<usize> {
    let mut found = None;
    let f = crate::rtypes::sem_env(env);
    f.visit_apps(&mut |a| {
        if a.pred == pred {
            found = Some(a.args.len());
        }
    });
    if found.is_none() {
        for name in env.names() {
            if let Some(t) = env.lookup(name) {
                visit_type(t, &mut |f| {
                    f.visit_apps(&mut |a| {
                        if a.pred == pred {
                            found = Some(a.args.len());
                        }
                    })
                });
            }
        }
    }
    found
}

fn visit_type(t: &RType, f: &mut impl FnMut(&Formula)) {
    match t {
        RType::Int { refine, .. } => f(refine),
        RType::Fun { param, result, .. } => {
            visit_type(param, f);
            visit_type(result, f);
        }
    }
}

/// Γ_D for a program and its directives: ML inference followed by template
/// construction.
pub fn templates(p: &Program, d: &DirectiveSet) -> Result<TypeEnv, GenError> {
    let ml = infer_ml_types(p)?;
    crate::rtypes::make_templates(p, &ml, d).map_err(|e| GenError::Unsupported(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hccs::{check_solution, parse_clause, ClosedPred, PredSubst};
    use crate::smtio::Smt;
    use crate::surface::{parse_directives, parse_program};

    pub(crate) const SUM: &str = "let rec sum x = if x = 0 then 0 else x + sum (x - 1)";

    fn gen(src: &str, dirs: &str) -> Hccs {
        let p = parse_program(src).unwrap();
        let d = parse_directives(dirs).unwrap();
        let env = templates(&p, &d).unwrap();
        generate(&p, &env, &d).unwrap()
    }

    fn lines(h: &Hccs) -> Vec<String> {
        h.clauses.iter().map(|c| c.pretty()).collect()
    }

    #[test]
    fn sum_clauses() {
        let h = gen(SUM, "@type sum : (x:{x | P(x)}) -> {y | Q(x, y)}");
        let got = lines(&h);
        assert_eq!(got.len(), 3, "{got:#?}");
        // the call's result temporary plays the role of y
        let got: Vec<String> = got.iter().map(|g| g.replace("_l1c42", "y")).collect();
        let want = [
            "Q(x, 0) ⇐ P(x) ∧ x = 0",
            "P(x - 1) ⇐ P(x) ∧ x ≠ 0",
            "Q(x, y + x) ⇐ P(x) ∧ Q(x - 1, y) ∧ x ≠ 0",
        ];
        for w in want {
            assert!(got.iter().any(|g| g == w), "missing {w} in {got:#?}");
        }
    }

    #[test]
    fn fixed_bottom_result() {
        let h = gen(
            SUM,
            "@type sum : (x:{x | P(x)}) -> {y | Q(x, y)}\n@fix Q(a, b) = false",
        );
        let got = lines(&h);
        assert_eq!(got.len(), 2, "{got:#?}");
        assert!(got.contains(&"⊥ ⇐ P(x) ∧ x = 0".to_string()), "{got:#?}");
        assert!(
            got.contains(&"P(x - 1) ⇐ P(x) ∧ x ≠ 0".to_string()),
            "{got:#?}"
        );
    }

    #[test]
    fn constant_function_is_trivially_typed() {
        let h = gen("let rec k x = 0", "@type k : (x:{x | P(x)}) -> {y | y = 0}");
        let smt = Smt::default();
        for body in ["false", "true", "x >= 3"] {
            let mut th = PredSubst::new();
            th.insert(
                "P".into(),
                ClosedPred::new(vec!["x".into()], crate::hccs::parse_formula(body).unwrap()),
            );
            assert!(check_solution(&th, &h, &smt).is_valid());
        }
    }

    #[test]
    fn angelic_choice_has_existential_head() {
        let h = gen(
            "let rec f x = let n = read_int () in if n < 0 then x else f x",
            "",
        );
        let ex: Vec<&HornClause> = h
            .clauses
            .iter()
            .filter(|c| !c.exists_vars().is_empty())
            .collect();
        assert_eq!(ex.len(), 1);
        assert_eq!(ex[0].pretty(), "∃n. R_f_n(x, n) ⇐ P_f_1(x)");
    }

    #[test]
    fn demonic_choice_is_unconstrained() {
        let h = gen(
            "let rec g x = let n = *forall* in n",
            "@type g : (x:int) -> {r | r >= 0}",
        );
        assert_eq!(lines(&h), vec!["n ≥ 0 ⇐ ⊤".to_string()]);
    }

    #[test]
    fn higher_order_application() {
        let h = gen(
            "let rec repeat f n e = if n<=0 then e else repeat f (n-1) (f e)",
            "",
        );
        assert!(h.clauses.len() >= 4, "{}", h.pretty());
        assert!(h.pvs().contains("P_repeat_1"));
        let ar = h.arities().unwrap();
        assert_eq!(ar["P_repeat_5"], 3);
    }

    #[test]
    fn exists_directive_and_extra_clauses() {
        let h = gen(
            SUM,
            "@type sum : (x:{x | P(x)}) -> {y | Q(x, y)}\n@exists P\n@clause Q(x, y) <= x < 0",
        );
        let got = lines(&h);
        assert!(got.contains(&"∃x1. P(x1) ⇐ ⊤".to_string()), "{got:#?}");
        assert!(got.contains(&parse_clause("Q(x, y) <= x < 0").unwrap().pretty()));
    }

    #[test]
    fn deterministic() {
        let a = gen(SUM, "");
        let b = gen(SUM, "");
        assert_eq!(a, b);
    }
}
