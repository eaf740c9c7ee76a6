//! Linear integer terms, QFLIA formulas and their literal-level normal forms.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

/// A linear integer term.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Term {
    Const(i64),
    Var(String),
    Add(Box<Term>, Box<Term>),
    Mul(i64, Box<Term>),
}

impl Term {
    pub fn var(x: impl Into<String>) -> Term {
        Term::Var(x.into())
    }

    pub fn add(a: Term, b: Term) -> Term {
        Term::Add(Box::new(a), Box::new(b))
    }

    pub fn sub(a: Term, b: Term) -> Term {
        match b {
            Term::Const(n) => Term::add(a, Term::Const(-n)),
            b => Term::add(a, Term::Mul(-1, Box::new(b))),
        }
    }

    pub fn scale(n: i64, t: Term) -> Term {
        Term::Mul(n, Box::new(t))
    }

    pub fn vars(&self, out: &mut BTreeSet<String>) {
        match self {
            Term::Const(_) => {}
            Term::Var(x) => {
                out.insert(x.clone());
            }
            Term::Add(a, b) => {
                a.vars(out);
                b.vars(out);
            }
            Term::Mul(_, t) => t.vars(out),
        }
    }

    pub fn subst(&self, map: &BTreeMap<String, Term>) -> Term {
        match self {
            Term::Const(_) => self.clone(),
            Term::Var(x) => map.get(x).cloned().unwrap_or_else(|| self.clone()),
            Term::Add(a, b) => Term::add(a.subst(map), b.subst(map)),
            Term::Mul(n, t) => Term::Mul(*n, Box::new(t.subst(map))),
        }
    }

    pub fn lin(&self) -> LinExpr {
        match self {
            Term::Const(n) => LinExpr::constant(*n),
            Term::Var(x) => LinExpr::var(x),
            Term::Add(a, b) => a.lin().add(&b.lin()),
            Term::Mul(n, t) => t.lin().scale(*n),
        }
    }
}

impl From<i64> for Term {
    fn from(n: i64) -> Term {
        Term::Const(n)
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn atomic(t: &Term) -> bool {
            matches!(t, Term::Var(_)) || matches!(t, Term::Const(n) if *n >= 0)
        }
        match self {
            Term::Const(n) => write!(f, "{n}"),
            Term::Var(x) => write!(f, "{x}"),
            Term::Add(a, b) => match b.as_ref() {
                Term::Const(n) if *n < 0 => write!(f, "{a} - {}", n.unsigned_abs()),
                Term::Mul(-1, t) if atomic(t) => write!(f, "{a} - {t}"),
                Term::Mul(-1, t) => write!(f, "{a} - ({t})"),
                b if matches!(b, Term::Add(..)) => write!(f, "{a} + ({b})"),
                b => write!(f, "{a} + {b}"),
            },
            Term::Mul(n, t) if atomic(t) => write!(f, "{n}*{t}"),
            Term::Mul(n, t) => write!(f, "{n}*({t})"),
        }
    }
}

/// A normalized linear expression `Σ aᵢ·xᵢ + k` with no zero coefficients.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LinExpr {
    pub coeffs: BTreeMap<String, i64>,
    pub constant: i64,
}

impl LinExpr {
    pub fn constant(k: i64) -> LinExpr {
        LinExpr {
            coeffs: BTreeMap::new(),
            constant: k,
        }
    }

    pub fn var(x: &str) -> LinExpr {
        let mut coeffs = BTreeMap::new();
        coeffs.insert(x.to_string(), 1);
        LinExpr {
            coeffs,
            constant: 0,
        }
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn coeff(&self, x: &str) -> i64 {
        self.coeffs.get(x).copied().unwrap_or(0)
    }

    pub fn add(&self, other: &LinExpr) -> LinExpr {
        let mut out = self.clone();
        for (x, a) in &other.coeffs {
            out.add_term(x, *a);
        }
        out.constant += other.constant;
        out
    }

    pub fn sub(&self, other: &LinExpr) -> LinExpr {
        self.add(&other.scale(-1))
    }

    pub fn scale(&self, n: i64) -> LinExpr {
        if n == 0 {
            return LinExpr::default();
        }
        LinExpr {
            coeffs: self
                .coeffs
                .iter()
                .map(|(x, a)| (x.clone(), a * n))
                .collect(),
            constant: self.constant * n,
        }
    }

    pub fn add_term(&mut self, x: &str, a: i64) {
        let e = self.coeffs.entry(x.to_string()).or_insert(0);
        *e += a;
        if *e == 0 {
            self.coeffs.remove(x);
        }
    }

    /// Replace `x` by `e` everywhere.
    pub fn subst(&self, x: &str, e: &LinExpr) -> LinExpr {
        match self.coeffs.get(x) {
            None => self.clone(),
            Some(a) => {
                let mut rest = self.clone();
                rest.coeffs.remove(x);
                rest.add(&e.scale(*a))
            }
        }
    }

    pub fn subst_all(&self, map: &BTreeMap<String, LinExpr>) -> LinExpr {
        let mut out = LinExpr::constant(self.constant);
        for (x, a) in &self.coeffs {
            match map.get(x) {
                Some(e) => out = out.add(&e.scale(*a)),
                None => out.add_term(x, *a),
            }
        }
        out
    }

    pub fn eval(&self, env: &BTreeMap<String, i64>) -> Option<i128> {
        let mut acc = self.constant as i128;
        for (x, a) in &self.coeffs {
            acc += (*a as i128) * (*env.get(x)? as i128);
        }
        Some(acc)
    }

    pub fn to_term(&self) -> Term {
        let mut acc: Option<Term> = None;
        for (x, a) in &self.coeffs {
            let t = if *a == 1 {
                Term::var(x.clone())
            } else {
                Term::scale(*a, Term::var(x.clone()))
            };
            acc = Some(match acc {
                None => t,
                Some(prev) => match t {
                    Term::Mul(-1, inner) => Term::add(prev, Term::Mul(-1, inner)),
                    t => Term::add(prev, t),
                },
            });
        }
        match acc {
            None => Term::Const(self.constant),
            Some(t) if self.constant == 0 => t,
            Some(t) => Term::add(t, Term::Const(self.constant)),
        }
    }

    /// Sign-normalized copy: first nonzero coefficient positive. Used for `=`/`≠`.
    pub fn canonical_sign(&self) -> LinExpr {
        match self.coeffs.values().next() {
            Some(a) if *a < 0 => self.scale(-1),
            None if self.constant < 0 => self.scale(-1),
            _ => self.clone(),
        }
    }

    /// Split into (positive part, negated negative part) for printing `P op N`.
    fn sides(&self) -> (LinExpr, LinExpr) {
        let mut pos = LinExpr::default();
        let mut neg = LinExpr::default();
        for (x, a) in &self.coeffs {
            if *a > 0 {
                pos.add_term(x, *a);
            } else {
                neg.add_term(x, -*a);
            }
        }
        (pos, neg)
    }
}

impl fmt::Display for LinExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (x, a) in &self.coeffs {
            let mag = a.unsigned_abs();
            if first {
                if *a < 0 {
                    write!(f, "-")?;
                }
            } else if *a < 0 {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            if mag == 1 {
                write!(f, "{x}")?;
            } else {
                write!(f, "{mag}*{x}")?;
            }
            first = false;
        }
        if first {
            write!(f, "{}", self.constant)
        } else if self.constant > 0 {
            write!(f, " + {}", self.constant)
        } else if self.constant < 0 {
            write!(f, " - {}", self.constant.unsigned_abs())
        } else {
            Ok(())
        }
    }
}

/// Application of a predicate variable to terms.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PredApp {
    pub pred: String,
    pub args: Vec<Term>,
}

impl PredApp {
    pub fn new(pred: impl Into<String>, args: Vec<Term>) -> PredApp {
        PredApp {
            pred: pred.into(),
            args,
        }
    }

    pub fn subst(&self, map: &BTreeMap<String, Term>) -> PredApp {
        PredApp {
            pred: self.pred.clone(),
            args: self.args.iter().map(|t| t.subst(map)).collect(),
        }
    }

    /// Arguments normalized to linear expressions, for syntactic comparison.
    pub fn normalized(&self) -> PredApp {
        PredApp {
            pred: self.pred.clone(),
            args: self.args.iter().map(|t| t.lin().to_term()).collect(),
        }
    }

    pub fn vars(&self, out: &mut BTreeSet<String>) {
        for t in &self.args {
            t.vars(out);
        }
    }
}

impl fmt::Display for PredApp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.pred)?;
        for (i, t) in self.args.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{}", t.lin())?;
        }
        write!(f, ")")
    }
}

/// Quantifier-free formulas, possibly containing predicate applications.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Formula {
    True,
    False,
    Leq(Term, Term),
    Pred(PredApp),
    Not(Box<Formula>),
    And(Vec<Formula>),
    Or(Vec<Formula>),
    Implies(Box<Formula>, Box<Formula>),
}

impl Formula {
    pub fn leq(a: Term, b: Term) -> Formula {
        Formula::Leq(a, b)
    }

    pub fn lt(a: Term, b: Term) -> Formula {
        Formula::Leq(Term::add(a, Term::Const(1)), b)
    }

    pub fn geq(a: Term, b: Term) -> Formula {
        Formula::Leq(b, a)
    }

    pub fn gt(a: Term, b: Term) -> Formula {
        Formula::lt(b, a)
    }

    pub fn eq(a: Term, b: Term) -> Formula {
        Formula::And(vec![Formula::Leq(a.clone(), b.clone()), Formula::Leq(b, a)])
    }

    pub fn neq(a: Term, b: Term) -> Formula {
        Formula::not(Formula::eq(a, b))
    }

    pub fn not(f: Formula) -> Formula {
        match f {
            Formula::True => Formula::False,
            Formula::False => Formula::True,
            Formula::Not(g) => *g,
            f => Formula::Not(Box::new(f)),
        }
    }

    pub fn implies(a: Formula, b: Formula) -> Formula {
        Formula::Implies(Box::new(a), Box::new(b))
    }

    /// Conjunction with trivial simplification.
    pub fn and(parts: Vec<Formula>) -> Formula {
        let mut out = Vec::new();
        for p in parts {
            match p {
                Formula::True => {}
                Formula::False => return Formula::False,
                Formula::And(inner) if !is_eq_pair(&inner) => out.extend(inner),
                p => out.push(p),
            }
        }
        match out.len() {
            0 => Formula::True,
            1 => out.pop().unwrap(),
            _ => Formula::And(out),
        }
    }

    pub fn or(parts: Vec<Formula>) -> Formula {
        let mut out = Vec::new();
        for p in parts {
            match p {
                Formula::False => {}
                Formula::True => return Formula::True,
                Formula::Or(inner) => out.extend(inner),
                p => out.push(p),
            }
        }
        match out.len() {
            0 => Formula::False,
            1 => out.pop().unwrap(),
            _ => Formula::Or(out),
        }
    }

    pub fn from_lit(l: &Lit) -> Formula {
        match l {
            Lit::Ge(e) => ge_formula(e),
            Lit::Eq(e) => {
                let (l, r) = eq_sides(e);
                Formula::eq(l, r)
            }
            Lit::Ne(e) => {
                let (l, r) = eq_sides(e);
                Formula::neq(l, r)
            }
            Lit::App(a) => Formula::Pred(a.clone()),
        }
    }

    pub fn from_lits(lits: &[Lit]) -> Formula {
        Formula::and(lits.iter().map(Formula::from_lit).collect())
    }

    pub fn from_dnf(dnf: &[Vec<Lit>]) -> Formula {
        Formula::or(dnf.iter().map(|c| Formula::from_lits(c)).collect())
    }

    pub fn vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    pub fn collect_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            Formula::True | Formula::False => {}
            Formula::Leq(a, b) => {
                a.vars(out);
                b.vars(out);
            }
            Formula::Pred(p) => p.vars(out),
            Formula::Not(f) => f.collect_vars(out),
            Formula::And(fs) | Formula::Or(fs) => fs.iter().for_each(|f| f.collect_vars(out)),
            Formula::Implies(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
        }
    }

    pub fn preds(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.visit_apps(&mut |a| {
            out.insert(a.pred.clone());
        });
        out
    }

    pub fn visit_apps(&self, f: &mut impl FnMut(&PredApp)) {
        match self {
            Formula::Pred(p) => f(p),
            Formula::Not(g) => g.visit_apps(f),
            Formula::And(gs) | Formula::Or(gs) => gs.iter().for_each(|g| g.visit_apps(f)),
            Formula::Implies(a, b) => {
                a.visit_apps(f);
                b.visit_apps(f);
            }
            _ => {}
        }
    }

    pub fn has_preds(&self) -> bool {
        let mut found = false;
        self.visit_apps(&mut |_| found = true);
        found
    }

    /// Simultaneous substitution of terms for variables.
    pub fn subst(&self, map: &BTreeMap<String, Term>) -> Formula {
        if map.is_empty() {
            return self.clone();
        }
        self.map_apps_and_terms(&mut |a| Formula::Pred(a.subst(map)), &mut |t| t.subst(map))
    }

    /// Replace every predicate application via `f`.
    pub fn map_apps(&self, f: &mut impl FnMut(&PredApp) -> Formula) -> Formula {
        self.map_apps_and_terms(f, &mut |t| t.clone())
    }

    fn map_apps_and_terms(
        &self,
        fa: &mut impl FnMut(&PredApp) -> Formula,
        ft: &mut impl FnMut(&Term) -> Term,
    ) -> Formula {
        match self {
            Formula::True => Formula::True,
            Formula::False => Formula::False,
            Formula::Leq(a, b) => Formula::Leq(ft(a), ft(b)),
            Formula::Pred(p) => fa(p),
            Formula::Not(g) => Formula::Not(Box::new(g.map_apps_and_terms(fa, ft))),
            Formula::And(gs) => {
                Formula::And(gs.iter().map(|g| g.map_apps_and_terms(fa, ft)).collect())
            }
            Formula::Or(gs) => {
                Formula::Or(gs.iter().map(|g| g.map_apps_and_terms(fa, ft)).collect())
            }
            Formula::Implies(a, b) => Formula::Implies(
                Box::new(a.map_apps_and_terms(fa, ft)),
                Box::new(b.map_apps_and_terms(fa, ft)),
            ),
        }
    }

    /// Evaluate a predicate-free formula. `None` if a variable is unbound or a predicate occurs.
    pub fn eval(&self, env: &BTreeMap<String, i64>) -> Option<bool> {
        Some(match self {
            Formula::True => true,
            Formula::False => false,
            Formula::Leq(a, b) => a.lin().eval(env)? <= b.lin().eval(env)?,
            Formula::Pred(_) => return None,
            Formula::Not(g) => !g.eval(env)?,
            Formula::And(gs) => {
                let mut all = true;
                for g in gs {
                    all &= g.eval(env)?;
                }
                all
            }
            Formula::Or(gs) => {
                let mut any = false;
                for g in gs {
                    any |= g.eval(env)?;
                }
                any
            }
            Formula::Implies(a, b) => !a.eval(env)? || b.eval(env)?,
        })
    }

    pub fn is_true(&self) -> bool {
        matches!(self, Formula::True)
    }

    pub fn is_false(&self) -> bool {
        matches!(self, Formula::False)
    }

    /// Flatten to a literal DNF and rebuild; folds constant atoms.
    pub fn simplify(&self) -> Formula {
        match to_dnf(self, 4096) {
            Ok(d) => Formula::from_dnf(&simplify_dnf(d)),
            Err(_) => self.clone(),
        }
    }

    /// Paper-style rendering with Unicode connectives.
    pub fn pretty(&self) -> String {
        pretty(self, 0)
    }
}

fn is_eq_pair(parts: &[Formula]) -> bool {
    if let [Formula::Leq(a, b), Formula::Leq(c, d)] = parts {
        a == d && b == c
    } else {
        false
    }
}

fn ge_formula(e: &LinExpr) -> Formula {
    let (pos, neg) = e.sides();
    let k = e.constant;
    // neg - k <= pos  or  neg <= pos + k, keeping constants nonnegative
    let mut lhs = neg.clone();
    let mut rhs = pos.clone();
    if k >= 0 {
        rhs.constant = k;
    } else {
        lhs.constant = -k;
    }
    Formula::Leq(lhs.to_term(), rhs.to_term())
}

fn eq_sides(e: &LinExpr) -> (Term, Term) {
    let e = if e.coeffs.values().all(|a| *a < 0) {
        e.scale(-1)
    } else {
        e.clone()
    };
    let (pos, mut neg) = e.sides();
    neg.constant = -e.constant;
    (pos.to_term(), neg.to_term())
}

/// A literal of the clause normal form: `e ≥ 0`, `e = 0`, `e ≠ 0` or a predicate application.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Lit {
    Ge(LinExpr),
    Eq(LinExpr),
    Ne(LinExpr),
    App(PredApp),
}

impl Lit {
    pub fn negate(&self) -> Option<Lit> {
        Some(match self {
            Lit::Ge(e) => Lit::Ge(e.scale(-1).add(&LinExpr::constant(-1))),
            Lit::Eq(e) => Lit::Ne(e.clone()),
            Lit::Ne(e) => Lit::Eq(e.clone()),
            Lit::App(_) => return None,
        })
    }

    /// Truth value when the literal has no variables.
    pub fn constant_value(&self) -> Option<bool> {
        match self {
            Lit::Ge(e) if e.is_constant() => Some(e.constant >= 0),
            Lit::Eq(e) if e.is_constant() => Some(e.constant == 0),
            Lit::Ne(e) if e.is_constant() => Some(e.constant != 0),
            _ => None,
        }
    }

    pub fn subst(&self, x: &str, by: &LinExpr) -> Lit {
        match self {
            Lit::Ge(e) => Lit::Ge(e.subst(x, by)),
            Lit::Eq(e) => Lit::Eq(e.subst(x, by).canonical_sign()),
            Lit::Ne(e) => Lit::Ne(e.subst(x, by).canonical_sign()),
            Lit::App(a) => {
                let mut m = BTreeMap::new();
                m.insert(x.to_string(), by.to_term());
                Lit::App(a.subst(&m).normalized())
            }
        }
    }

    pub fn vars(&self, out: &mut BTreeSet<String>) {
        match self {
            Lit::Ge(e) | Lit::Eq(e) | Lit::Ne(e) => out.extend(e.coeffs.keys().cloned()),
            Lit::App(a) => a.vars(out),
        }
    }

    pub fn pretty(&self) -> String {
        match self {
            Lit::Ge(e) => pretty_ge(e),
            Lit::Eq(e) => pretty_eq(e, "="),
            Lit::Ne(e) => pretty_eq(e, "≠"),
            Lit::App(a) => a.to_string(),
        }
    }
}

fn pretty_ge(e: &LinExpr) -> String {
    let (pos, neg) = e.sides();
    let k = e.constant;
    if pos.coeffs.is_empty() && neg.coeffs.is_empty() {
        return if k >= 0 { "⊤".into() } else { "⊥".into() };
    }
    if neg.coeffs.is_empty() {
        // pos + k >= 0
        if k == -1 {
            format!("{pos} > 0")
        } else {
            format!("{pos} ≥ {}", -k)
        }
    } else if pos.coeffs.is_empty() {
        // neg <= k
        if k == -1 {
            format!("{neg} < 0")
        } else {
            format!("{neg} ≤ {k}")
        }
    } else if k == 0 {
        format!("{neg} ≤ {pos}")
    } else if k == -1 {
        format!("{neg} < {pos}")
    } else if k > 0 {
        format!("{neg} ≤ {}", pos.add(&LinExpr::constant(k)))
    } else {
        format!("{} ≤ {pos}", neg.add(&LinExpr::constant(-k)))
    }
}

fn pretty_eq(e: &LinExpr, op: &str) -> String {
    let e = if e.coeffs.values().all(|a| *a < 0) {
        e.scale(-1)
    } else {
        e.clone()
    };
    let (pos, mut neg) = e.sides();
    neg.constant = -e.constant;
    if pos.coeffs.is_empty() && neg.coeffs.is_empty() {
        let holds = (e.constant == 0) == (op == "=");
        return if holds { "⊤".into() } else { "⊥".into() };
    }
    format!("{pos} {op} {neg}")
}

fn pretty(f: &Formula, prec: u8) -> String {
    // precedence: 0 implies, 1 or, 2 and, 3 atom
    let wrap = |s: String, p: u8| if p < prec { format!("({s})") } else { s };
    match f {
        Formula::True => "⊤".into(),
        Formula::False => "⊥".into(),
        Formula::Leq(a, b) => pretty_ge(&b.lin().sub(&a.lin())),
        Formula::Pred(p) => p.to_string(),
        Formula::And(parts) if parts.is_empty() => "⊤".into(),
        Formula::Or(parts) if parts.is_empty() => "⊥".into(),
        Formula::And(parts) | Formula::Or(parts) if parts.len() == 1 => pretty(&parts[0], prec),
        Formula::Not(g) => match g.as_ref() {
            Formula::And(parts) if is_eq_pair(parts) => {
                if let [Formula::Leq(a, b), _] = parts.as_slice() {
                    pretty_eq(&a.lin().sub(&b.lin()), "≠")
                } else {
                    unreachable!()
                }
            }
            g => format!("¬{}", pretty(g, 3)),
        },
        Formula::And(parts) if is_eq_pair(parts) => {
            if let [Formula::Leq(a, b), _] = parts.as_slice() {
                pretty_eq(&a.lin().sub(&b.lin()), "=")
            } else {
                unreachable!()
            }
        }
        Formula::And(parts) => wrap(
            parts
                .iter()
                .map(|p| pretty(p, 3))
                .collect::<Vec<_>>()
                .join(" ∧ "),
            2,
        ),
        Formula::Or(parts) => wrap(
            parts
                .iter()
                .map(|p| pretty(p, 2))
                .collect::<Vec<_>>()
                .join(" ∨ "),
            1,
        ),
        Formula::Implies(a, b) => wrap(format!("{} ⇒ {}", pretty(a, 1), pretty(b, 0)), 0),
    }
}

/// ASCII rendering that the text parser reads back to the same tree.
impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", ascii(self, 0))
    }
}

fn ascii(f: &Formula, prec: u8) -> String {
    let wrap = |s: String, p: u8| if p < prec { format!("({s})") } else { s };
    match f {
        Formula::True => "true".into(),
        Formula::False => "false".into(),
        Formula::Leq(a, b) => format!("{a} <= {b}"),
        Formula::Pred(p) => {
            let args: Vec<String> = p.args.iter().map(|t| t.to_string()).collect();
            format!("{}({})", p.pred, args.join(", "))
        }
        Formula::Not(g) => match g.as_ref() {
            Formula::And(parts) if is_eq_pair(parts) => {
                if let [Formula::Leq(a, b), _] = parts.as_slice() {
                    format!("{a} != {b}")
                } else {
                    unreachable!()
                }
            }
            g => format!("!{}", ascii(g, 3)),
        },
        Formula::And(parts) if is_eq_pair(parts) => {
            if let [Formula::Leq(a, b), _] = parts.as_slice() {
                format!("{a} = {b}")
            } else {
                unreachable!()
            }
        }
        Formula::And(parts) if parts.is_empty() => "true".into(),
        Formula::Or(parts) if parts.is_empty() => "false".into(),
        Formula::And(parts) => wrap(
            parts
                .iter()
                .map(|p| ascii(p, 3))
                .collect::<Vec<_>>()
                .join(" && "),
            2,
        ),
        Formula::Or(parts) => wrap(
            parts
                .iter()
                .map(|p| ascii(p, 2))
                .collect::<Vec<_>>()
                .join(" || "),
            1,
        ),
        Formula::Implies(a, b) => wrap(format!("{} => {}", ascii(a, 1), ascii(b, 0)), 0),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DnfError {
    #[error("disjunctive normal form exceeds {0} disjuncts")]
    Overflow(usize),
    #[error("predicate application {0} occurs under negation")]
    NegatedPredicate(String),
}

/// Convert to DNF over literals. `=` pairs stay `Eq`, their negation stays `Ne`.
pub fn to_dnf(f: &Formula, cap: usize) -> Result<Vec<Vec<Lit>>, DnfError> {
    dnf(f, true, cap)
}

fn dnf(f: &Formula, pos: bool, cap: usize) -> Result<Vec<Vec<Lit>>, DnfError> {
    let unit = |l: Lit| Ok(vec![vec![l]]);
    match f {
        Formula::True => Ok(if pos { vec![vec![]] } else { vec![] }),
        Formula::False => Ok(if pos { vec![] } else { vec![vec![]] }),
        Formula::Leq(a, b) => {
            let e = b.lin().sub(&a.lin());
            if pos {
                unit(Lit::Ge(e))
            } else {
                unit(Lit::Ge(e.scale(-1).add(&LinExpr::constant(-1))))
            }
        }
        Formula::Pred(p) => {
            if pos {
                unit(Lit::App(p.clone()))
            } else {
                Err(DnfError::NegatedPredicate(p.to_string()))
            }
        }
        Formula::Not(g) => dnf(g, !pos, cap),
        Formula::And(parts) if is_eq_pair(parts) => {
            let Formula::Leq(a, b) = &parts[0] else {
                unreachable!()
            };
            let e = b.lin().sub(&a.lin()).canonical_sign();
            if pos {
                unit(Lit::Eq(e))
            } else {
                unit(Lit::Ne(e))
            }
        }
        Formula::And(parts) | Formula::Or(parts) => {
            let conj = matches!(f, Formula::And(_)) == pos;
            if conj {
                let mut acc: Vec<Vec<Lit>> = vec![vec![]];
                for p in parts {
                    let d = dnf(p, pos, cap)?;
                    let mut next = Vec::new();
                    for a in &acc {
                        for b in &d {
                            let mut c = a.clone();
                            c.extend(b.iter().cloned());
                            next.push(c);
                            if next.len() > cap {
                                return Err(DnfError::Overflow(cap));
                            }
                        }
                    }
                    acc = next;
                    if acc.is_empty() {
                        break;
                    }
                }
                Ok(acc)
            } else {
                let mut acc = Vec::new();
                for p in parts {
                    acc.extend(dnf(p, pos, cap)?);
                    if acc.len() > cap {
                        return Err(DnfError::Overflow(cap));
                    }
                }
                Ok(acc)
            }
        }
        Formula::Implies(a, b) => {
            let g = Formula::Or(vec![Formula::not((**a).clone()), (**b).clone()]);
            dnf(&g, pos, cap)
        }
    }
}

/// Fold constant literals, drop contradictory cubes, dedupe literals and cubes.
pub fn simplify_dnf(d: Vec<Vec<Lit>>) -> Vec<Vec<Lit>> {
    let mut out: Vec<Vec<Lit>> = Vec::new();
    'cube: for cube in d {
        let mut lits: Vec<Lit> = Vec::new();
        for l in cube {
            match l.constant_value() {
                Some(true) => continue,
                Some(false) => continue 'cube,
                None => {}
            }
            if !lits.contains(&l) {
                lits.push(l);
            }
        }
        // e >= 0 together with -e >= 0 is e = 0
        let mut i = 0;
        while i < lits.len() {
            if let Lit::Ge(e) = &lits[i] {
                let neg = e.scale(-1);
                if let Some(j) = lits.iter().position(|l| l == &Lit::Ge(neg.clone())) {
                    let eq = Lit::Eq(e.canonical_sign());
                    let (a, b) = (i.min(j), i.max(j));
                    lits.remove(b);
                    lits[a] = eq;
                    continue;
                }
                // e >= 0 and -e - k >= 0 with k > 0 is unsat
                let contradicts = lits.iter().any(|l| match l {
                    Lit::Ge(f) => {
                        let s = e.add(f);
                        s.is_constant() && s.constant < 0
                    }
                    _ => false,
                });
                if contradicts {
                    continue 'cube;
                }
            }
            i += 1;
        }
        let mut dedup: Vec<Lit> = Vec::new();
        for l in lits {
            if !dedup.contains(&l) {
                dedup.push(l);
            }
        }
        if !out.contains(&dedup) {
            out.push(dedup);
        }
    }
    if out.iter().any(|c| c.is_empty()) {
        return vec![vec![]];
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x() -> Term {
        Term::var("x")
    }

    #[test]
    fn lin_normalizes() {
        let t = Term::sub(Term::add(x(), Term::Const(3)), Term::scale(2, x()));
        let e = t.lin();
        assert_eq!(e.coeff("x"), -1);
        assert_eq!(e.constant, 3);
    }

    #[test]
    fn pretty_atoms() {
        assert_eq!(Formula::lt(x(), Term::Const(0)).pretty(), "x < 0");
        assert_eq!(Formula::geq(x(), Term::Const(0)).pretty(), "x ≥ 0");
        assert_eq!(Formula::eq(x(), Term::Const(0)).pretty(), "x = 0");
        assert_eq!(Formula::neq(x(), Term::Const(0)).pretty(), "x ≠ 0");
        let inv = Formula::eq(Term::var("i"), Term::add(x(), Term::var("c")));
        assert_eq!(inv.pretty(), "i = c + x");
    }

    #[test]
    fn dnf_keeps_disequality_whole() {
        let f = Formula::and(vec![
            Formula::Pred(PredApp::new("P", vec![x()])),
            Formula::neq(x(), Term::Const(0)),
        ]);
        let d = to_dnf(&f, 8).unwrap();
        assert_eq!(d.len(), 1);
        assert!(matches!(d[0][1], Lit::Ne(_)));
    }

    #[test]
    fn dnf_rejects_negated_pred() {
        let f = Formula::not(Formula::Pred(PredApp::new("P", vec![x()])));
        assert!(matches!(to_dnf(&f, 8), Err(DnfError::NegatedPredicate(_))));
    }

    #[test]
    fn dnf_cap() {
        let atom = |k| {
            Formula::or(vec![
                Formula::eq(x(), Term::Const(k)),
                Formula::eq(x(), Term::Const(-k)),
            ])
        };
        let f = Formula::And((1..10).map(atom).collect());
        assert_eq!(to_dnf(&f, 64), Err(DnfError::Overflow(64)));
    }

    #[test]
    fn simplify_folds() {
        let f = Formula::and(vec![
            Formula::geq(x(), Term::Const(0)),
            Formula::leq(x(), Term::Const(0)),
        ]);
        assert_eq!(f.simplify().pretty(), "x = 0");
        let g = Formula::and(vec![
            Formula::geq(x(), Term::Const(1)),
            Formula::leq(x(), Term::Const(0)),
        ]);
        assert!(g.simplify().is_false());
    }

    #[test]
    fn eval_formula() {
        let mut env = BTreeMap::new();
        env.insert("x".to_string(), -3);
        assert_eq!(Formula::lt(x(), Term::Const(0)).eval(&env), Some(true));
        assert_eq!(Formula::eq(x(), Term::Const(0)).eval(&env), Some(false));
    }
}
