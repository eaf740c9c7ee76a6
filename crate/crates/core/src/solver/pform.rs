//! Negation-normal formulas over parametric atoms `p ≥ 0`, where `p` is
//! linear in program variables with coefficients polynomial in unknowns.
//! Unknowns are the names containing `#`.

use std::collections::{BTreeMap, BTreeSet};

use crate::hccs::{CmpOp, Formula, LinExpr, PFormula, Poly, PredApp, Term};
use crate::smtio;

pub fn is_unknown(name: &str) -> bool {
    name.contains('#')
}

#[derive(Clone, Debug, PartialEq)]
pub enum PForm {
    True,
    False,
    /// `p ≥ 0`
    Atom(Poly),
    And(Vec<PForm>),
    Or(Vec<PForm>),
}

pub fn lin_poly(e: &LinExpr) -> Poly {
    let mut p = Poly::constant(e.constant);
    for (x, a) in &e.coeffs {
        p.add_mono(vec![x.clone()], *a);
    }
    p
}

pub fn term_poly(t: &Term) -> Poly {
    lin_poly(&t.lin())
}

impl PForm {
    pub fn atom(p: Poly) -> PForm {
        match p.as_const() {
            Some(k) if k >= 0 => PForm::True,
            Some(_) => PForm::False,
            None => PForm::Atom(p),
        }
    }

    pub fn and(parts: Vec<PForm>) -> PForm {
        let mut out = Vec::new();
        for p in parts {
            match p {
                PForm::True => {}
                PForm::False => return PForm::False,
                PForm::And(inner) => out.extend(inner),
                p => out.push(p),
            }
        }
        match out.len() {
            0 => PForm::True,
            1 => out.pop().unwrap(),
            _ => PForm::And(out),
        }
    }

    pub fn or(parts: Vec<PForm>) -> PForm {
        let mut out = Vec::new();
        for p in parts {
            match p {
                PForm::False => {}
                PForm::True => return PForm::True,
                PForm::Or(inner) => out.extend(inner),
                p => out.push(p),
            }
        }
        match out.len() {
            0 => PForm::False,
            1 => out.pop().unwrap(),
            _ => PForm::Or(out),
        }
    }

    /// Integer negation: `¬(p ≥ 0)` is `−p − 1 ≥ 0`.
    pub fn negate(&self) -> PForm {
        match self {
            PForm::True => PForm::False,
            PForm::False => PForm::True,
            PForm::Atom(p) => PForm::atom(p.scale(-1).sub(&Poly::constant(1))),
            PForm::And(ps) => PForm::or(ps.iter().map(PForm::negate).collect()),
            PForm::Or(ps) => PForm::and(ps.iter().map(PForm::negate).collect()),
        }
    }

    pub fn subst(&self, map: &BTreeMap<String, Poly>) -> PForm {
        match self {
            PForm::True | PForm::False => self.clone(),
            PForm::Atom(p) => PForm::atom(p.subst(map)),
            PForm::And(ps) => PForm::and(ps.iter().map(|p| p.subst(map)).collect()),
            PForm::Or(ps) => PForm::or(ps.iter().map(|p| p.subst(map)).collect()),
        }
    }

    pub fn eval_partial(&self, model: &BTreeMap<String, i64>) -> PForm {
        match self {
            PForm::True | PForm::False => self.clone(),
            PForm::Atom(p) => PForm::atom(p.eval_partial(model)),
            PForm::And(ps) => PForm::and(ps.iter().map(|p| p.eval_partial(model)).collect()),
            PForm::Or(ps) => PForm::or(ps.iter().map(|p| p.eval_partial(model)).collect()),
        }
    }

    pub fn vars(&self, out: &mut BTreeSet<String>) {
        match self {
            PForm::True | PForm::False => {}
            PForm::Atom(p) => out.extend(p.vars()),
            PForm::And(ps) | PForm::Or(ps) => ps.iter().for_each(|p| p.vars(out)),
        }
    }

    /// Program variables, i.e. names that are not unknowns.
    pub fn program_vars(&self) -> BTreeSet<String> {
        let mut s = BTreeSet::new();
        self.vars(&mut s);
        s.into_iter().filter(|v| !is_unknown(v)).collect()
    }

    pub fn to_smt(&self) -> String {
        match self {
            PForm::True => "true".into(),
            PForm::False => "false".into(),
            PForm::Atom(p) => format!("(>= {} 0)", p.to_smt()),
            PForm::And(ps) => smtio::and(ps.iter().map(PForm::to_smt).collect()),
            PForm::Or(ps) => smtio::or(ps.iter().map(PForm::to_smt).collect()),
        }
    }

    /// Disjunctive normal form as lists of rows `p ≥ 0`; `None` beyond `cap` cubes.
    pub fn dnf(&self, cap: usize) -> Option<Vec<Vec<Poly>>> {
        match self {
            PForm::True => Some(vec![vec![]]),
            PForm::False => Some(vec![]),
            PForm::Atom(p) => Some(vec![vec![p.clone()]]),
            PForm::Or(ps) => {
                let mut out = Vec::new();
                for p in ps {
                    out.extend(p.dnf(cap)?);
                    if out.len() > cap {
                        return None;
                    }
                }
                Some(out)
            }
            PForm::And(ps) => {
                let mut acc: Vec<Vec<Poly>> = vec![vec![]];
                for p in ps {
                    let d = p.dnf(cap)?;
                    let mut next = Vec::new();
                    for a in &acc {
                        for b in &d {
                            let mut c = a.clone();
                            c.extend(b.iter().cloned());
                            next.push(c);
                        }
                    }
                    if next.len() > cap {
                        return None;
                    }
                    acc = next;
                }
                Some(acc)
            }
        }
    }

    /// Back to a linear formula once no unknowns remain.
    pub fn to_formula(&self) -> Option<Formula> {
        Some(match self {
            PForm::True => Formula::True,
            PForm::False => Formula::False,
            PForm::Atom(p) => {
                let mut e = LinExpr::default();
                for (m, k) in &p.terms {
                    match m.as_slice() {
                        [] => e.constant += k,
                        [x] if !is_unknown(x) => e.add_term(x, *k),
                        _ => return None,
                    }
                }
                // over the integers a·x + c ≥ 0 iff (a/g)·x + ⌊c/g⌋ ≥ 0
                let g = e.coeffs.values().fold(0i64, |g, a| gcd(g, a.abs()));
                if g > 1 {
                    e.coeffs.values_mut().for_each(|a| *a /= g);
                    e.constant = e.constant.div_euclid(g);
                }
                Formula::from_lit(&crate::hccs::Lit::Ge(e))
            }
            PForm::And(ps) => {
                Formula::and(ps.iter().map(PForm::to_formula).collect::<Option<_>>()?)
            }
            PForm::Or(ps) => Formula::or(ps.iter().map(PForm::to_formula).collect::<Option<_>>()?),
        })
    }
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// NNF of a formula under `pos` polarity, with predicate applications
/// replaced through `inst`.
pub fn from_formula(f: &Formula, pos: bool, inst: &mut dyn FnMut(&PredApp) -> PForm) -> PForm {
    match f {
        Formula::True => {
            if pos {
                PForm::True
            } else {
                PForm::False
            }
        }
        Formula::False => {
            if pos {
                PForm::False
            } else {
                PForm::True
            }
        }
        Formula::Leq(a, b) => {
            let d = term_poly(b).sub(&term_poly(a));
            let p = PForm::atom(d);
            if pos {
                p
            } else {
                p.negate()
            }
        }
        Formula::Pred(a) => {
            let p = inst(a);
            if pos {
                p
            } else {
                p.negate()
            }
        }
        Formula::Not(g) => from_formula(g, !pos, inst),
        Formula::And(gs) => {
            let parts = gs.iter().map(|g| from_formula(g, pos, inst)).collect();
            if pos {
                PForm::and(parts)
            } else {
                PForm::or(parts)
            }
        }
        Formula::Or(gs) => {
            let parts = gs.iter().map(|g| from_formula(g, pos, inst)).collect();
            if pos {
                PForm::or(parts)
            } else {
                PForm::and(parts)
            }
        }
        Formula::Implies(a, b) => {
            let na = from_formula(a, !pos, inst);
            let b = from_formula(b, pos, inst);
            if pos {
                PForm::or(vec![na, b])
            } else {
                PForm::and(vec![na, b])
            }
        }
    }
}

/// A parametric formula from the surface syntax; predicate applications
/// are rejected.
pub fn from_pformula(f: &PFormula) -> Result<PForm, String> {
    Ok(match f {
        PFormula::True => PForm::True,
        PFormula::False => PForm::False,
        PFormula::Cmp(a, op, b) => {
            let ge = |x: &Poly, y: &Poly, k: i64| PForm::atom(x.sub(y).sub(&Poly::constant(k)));
            match op {
                CmpOp::Le => ge(b, a, 0),
                CmpOp::Lt => ge(b, a, 1),
                CmpOp::Ge => ge(a, b, 0),
                CmpOp::Gt => ge(a, b, 1),
                CmpOp::Eq => PForm::and(vec![ge(a, b, 0), ge(b, a, 0)]),
                CmpOp::Ne => PForm::or(vec![ge(a, b, 1), ge(b, a, 1)]),
            }
        }
        PFormula::Pred(p, _) => return Err(format!("predicate `{p}` inside a template")),
        PFormula::Not(g) => from_pformula(g)?.negate(),
        PFormula::And(gs) => PForm::and(gs.iter().map(from_pformula).collect::<Result<_, _>>()?),
        PFormula::Or(gs) => PForm::or(gs.iter().map(from_pformula).collect::<Result<_, _>>()?),
        PFormula::Implies(a, b) => PForm::or(vec![from_pformula(a)?.negate(), from_pformula(b)?]),
    })
}

/// A predicate body `λx̄.φ` with parametric atoms.
#[derive(Clone, Debug, PartialEq)]
pub struct PTemplate {
    pub params: Vec<String>,
    pub body: PForm,
}

impl PTemplate {
    pub fn instantiate(&self, args: &[Term]) -> PForm {
        let map: BTreeMap<String, Poly> = self
            .params
            .iter()
            .cloned()
            .zip(args.iter().map(term_poly))
            .collect();
        self.body.subst(&map)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hccs::parse_formula;

    #[test]
    fn negation_tightens() {
        let f = parse_formula("x < 0").unwrap();
        let p = from_formula(&f, false, &mut |_| PForm::True);
        // ¬(x + 1 ≤ 0) is x ≥ 0
        assert_eq!(p, PForm::Atom(Poly::var("x")));
        assert_eq!(
            p.negate(),
            PForm::Atom(Poly::var("x").scale(-1).sub(&Poly::constant(1)))
        );
    }

    #[test]
    fn equality_splits_and_disequality_branches() {
        let eq = from_formula(&parse_formula("x = 0").unwrap(), true, &mut |_| PForm::True);
        assert_eq!(
            eq.dnf(8).unwrap(),
            vec![vec![Poly::var("x").scale(-1), Poly::var("x")]]
        );
        let ne = from_formula(&parse_formula("x != 0").unwrap(), true, &mut |_| {
            PForm::True
        });
        assert_eq!(ne.dnf(8).unwrap().len(), 2);
    }

    #[test]
    fn dnf_cap() {
        let f = parse_formula("(a = 1 || b = 1) && (c = 1 || d = 1) && (e = 1 || g = 1)").unwrap();
        let p = from_formula(&f, true, &mut |_| PForm::True);
        assert_eq!(p.dnf(8).unwrap().len(), 8);
        assert!(p.dnf(7).is_none());
    }

    #[test]
    fn back_to_formula() {
        let p = PForm::atom(Poly::constant(-1).sub(&Poly::var("x")));
        assert_eq!(p.to_formula().unwrap().pretty(), "x < 0");
        assert!(PForm::atom(Poly::var("c#1").mul(&Poly::var("x")))
            .to_formula()
            .is_none());
    }
}
