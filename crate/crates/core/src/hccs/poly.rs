//! Integer polynomials over named variables.
//!
//! Used for template coefficients (products of unknowns with Farkas
//! multipliers and Skolem coefficients) and as the raw term form of the text
//! parser before terms are split into variables and unknowns.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::smtio;

/// A monomial: sorted multiset of variable names. Empty is the constant 1.
pub type Mono = Vec<String>;

#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Poly {
    pub terms: BTreeMap<Mono, i64>,
}

impl Poly {
    pub fn zero() -> Poly {
        Poly::default()
    }

    pub fn constant(k: i64) -> Poly {
        let mut p = Poly::zero();
        p.add_mono(Vec::new(), k);
        p
    }

    pub fn var(x: &str) -> Poly {
        let mut p = Poly::zero();
        p.add_mono(vec![x.to_string()], 1);
        p
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn as_const(&self) -> Option<i64> {
        match self.terms.len() {
            0 => Some(0),
            1 => self.terms.get(&Vec::new()).copied(),
            _ => None,
        }
    }

    pub fn degree(&self) -> usize {
        self.terms.keys().map(Vec::len).max().unwrap_or(0)
    }

    pub fn vars(&self) -> BTreeSet<String> {
        self.terms.keys().flatten().cloned().collect()
    }

    pub fn add_mono(&mut self, m: Mono, k: i64) {
        if k == 0 {
            return;
        }
        let e = self.terms.entry(m.clone()).or_insert(0);
        *e += k;
        if *e == 0 {
            self.terms.remove(&m);
        }
    }

    pub fn add(&self, o: &Poly) -> Poly {
        let mut out = self.clone();
        for (m, k) in &o.terms {
            out.add_mono(m.clone(), *k);
        }
        out
    }

    pub fn sub(&self, o: &Poly) -> Poly {
        self.add(&o.scale(-1))
    }

    pub fn scale(&self, n: i64) -> Poly {
        if n == 0 {
            return Poly::zero();
        }
        Poly {
            terms: self.terms.iter().map(|(m, k)| (m.clone(), k * n)).collect(),
        }
    }

    pub fn mul(&self, o: &Poly) -> Poly {
        let mut out = Poly::zero();
        for (m1, k1) in &self.terms {
            for (m2, k2) in &o.terms {
                let mut m = m1.clone();
                m.extend(m2.iter().cloned());
                m.sort();
                out.add_mono(m, k1 * k2);
            }
        }
        out
    }

    /// Substitute integer values; variables without a value stay symbolic.
    pub fn eval_partial(&self, model: &BTreeMap<String, i64>) -> Poly {
        let mut out = Poly::zero();
        for (m, k) in &self.terms {
            let mut coeff = *k;
            let mut rest = Vec::new();
            for v in m {
                match model.get(v) {
                    Some(x) => coeff *= x,
                    None => rest.push(v.clone()),
                }
            }
            out.add_mono(rest, coeff);
        }
        out
    }

    /// Simultaneous substitution of polynomials for variables.
    pub fn subst(&self, map: &BTreeMap<String, Poly>) -> Poly {
        let mut out = Poly::zero();
        for (m, k) in &self.terms {
            let mut acc = Poly::constant(*k);
            for v in m {
                acc = match map.get(v) {
                    Some(p) => acc.mul(p),
                    None => acc.mul(&Poly::var(v)),
                };
            }
            out = out.add(&acc);
        }
        out
    }

    pub fn eval(&self, model: &BTreeMap<String, i64>) -> Option<i64> {
        self.eval_partial(model).as_const()
    }

    pub fn to_smt(&self) -> String {
        let mut parts: Vec<String> = Vec::new();
        for (m, k) in &self.terms {
            let mut factors: Vec<String> = m.iter().map(|v| smtio::sym(v)).collect();
            if *k != 1 || factors.is_empty() {
                factors.insert(0, smtio::int(*k));
            }
            parts.push(if factors.len() == 1 {
                factors.pop().unwrap()
            } else {
                format!("(* {})", factors.join(" "))
            });
        }
        match parts.len() {
            0 => "0".into(),
            1 => parts.pop().unwrap(),
            _ => format!("(+ {})", parts.join(" ")),
        }
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (m, k)) in self.terms.iter().enumerate() {
            let sign = if *k < 0 { "-" } else { "+" };
            if i == 0 {
                if *k < 0 {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {sign} ")?;
            }
            let mag = k.unsigned_abs();
            if m.is_empty() {
                write!(f, "{mag}")?;
            } else {
                if mag != 1 {
                    write!(f, "{mag}*")?;
                }
                write!(f, "{}", m.join("*"))?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn multiply_and_eval() {
        let p = Poly::var("c").add(&Poly::constant(2));
        let q = p.mul(&Poly::var("w"));
        assert_eq!(q.degree(), 2);
        let mut m = BTreeMap::new();
        m.insert("c".to_string(), -1);
        m.insert("w".to_string(), 3);
        assert_eq!(q.eval(&m), Some(3));
        assert_eq!(q.to_smt(), "(+ (* |c| |w|) (* 2 |w|))");
    }

    #[test]
    fn cancellation() {
        let p = Poly::var("a").sub(&Poly::var("a"));
        assert!(p.is_zero());
        assert_eq!(p.as_const(), Some(0));
    }
}
