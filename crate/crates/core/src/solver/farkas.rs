//! Farkas certificates of infeasibility for conjunctions of parametric rows.

use std::collections::BTreeMap;

use crate::hccs::Poly;
use crate::smtio;

use super::pform::is_unknown;

/// `∃w̄ ≥ 0. Σⱼ wⱼ·aⱼₓ = 0 for every program variable x ∧ Σⱼ wⱼ·bⱼ ≤ −1`
/// for rows `Σₓ aⱼₓ·x + bⱼ ≥ 0`. Satisfiable exactly when the rows have
/// no rational solution.
#[derive(Clone, Debug, PartialEq)]
pub struct FarkasSystem {
    pub multipliers: Vec<String>,
    /// Coefficient of each program variable in `Σ wⱼ·rowⱼ`; each must be 0.
    pub equalities: BTreeMap<String, Poly>,
    /// Constant part of `Σ wⱼ·rowⱼ`; must be at most −1.
    pub constant: Poly,
}

/// Split `p` into program-variable coefficients and a constant part, both
/// polynomials over unknowns. Fails on products of program variables.
pub fn split_row(p: &Poly) -> Result<(BTreeMap<String, Poly>, Poly), String> {
    let mut coeffs: BTreeMap<String, Poly> = BTreeMap::new();
    let mut constant = Poly::zero();
    for (m, k) in &p.terms {
        let (vars, unknowns): (Vec<&String>, Vec<&String>) = m.iter().partition(|v| !is_unknown(v));
        let mono: Vec<String> = unknowns.into_iter().cloned().collect();
        match vars.as_slice() {
            [] => constant.add_mono(mono, *k),
            [x] => coeffs.entry((*x).clone()).or_default().add_mono(mono, *k),
            _ => return Err(format!("row `{p}` is not linear in program variables")),
        }
    }
    coeffs.retain(|_, c| !c.is_zero());
    Ok((coeffs, constant))
}

impl FarkasSystem {
    /// The system for one cube. `Ok(None)` when a row is a negative
    /// constant, so the cube is infeasible without any certificate.
    pub fn for_cube(rows: &[Poly], prefix: &str) -> Result<Option<FarkasSystem>, String> {
        let mut sys = FarkasSystem {
            multipliers: Vec::new(),
            equalities: BTreeMap::new(),
            constant: Poly::zero(),
        };
        for row in rows {
            if let Some(k) = row.as_const() {
                if k < 0 {
                    return Ok(None);
                }
                continue;
            }
            let w = format!("{prefix}.{}", sys.multipliers.len() + 1);
            let wp = Poly::var(&w);
            let (coeffs, b) = split_row(row)?;
            for (x, a) in coeffs {
                let e = sys.equalities.entry(x).or_default();
                *e = e.add(&wp.mul(&a));
            }
            sys.constant = sys.constant.add(&wp.mul(&b));
            sys.multipliers.push(w);
        }
        sys.equalities.retain(|_, e| !e.is_zero());
        Ok(Some(sys))
    }

    /// SMT assertions, one per line of the system.
    pub fn assertions(&self) -> Vec<String> {
        let mut out: Vec<String> = self
            .multipliers
            .iter()
            .map(|w| format!("(>= {} 0)", smtio::sym(w)))
            .collect();
        for e in self.equalities.values() {
            out.push(format!("(= {} 0)", e.to_smt()));
        }
        out.push(format!("(<= {} (- 1))", self.constant.to_smt()));
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(terms: &[(&[&str], i64)]) -> Poly {
        let mut out = Poly::zero();
        for (m, k) in terms {
            let mut m: Vec<String> = m.iter().map(|s| s.to_string()).collect();
            m.sort();
            out.add_mono(m, *k);
        }
        out
    }

    #[test]
    fn worked_example_rows() {
        // c0 + c1·x ≥ 0, x ≥ 0, −x ≥ 0
        let rows = vec![
            p(&[(&["c#0"], 1), (&["c#1", "x"], 1)]),
            p(&[(&["x"], 1)]),
            p(&[(&["x"], -1)]),
        ];
        let sys = FarkasSystem::for_cube(&rows, "w#").unwrap().unwrap();
        assert_eq!(sys.multipliers, vec!["w#.1", "w#.2", "w#.3"]);
        assert_eq!(sys.constant, p(&[(&["c#0", "w#.1"], 1)]));
        assert_eq!(
            sys.equalities["x"],
            p(&[(&["c#1", "w#.1"], 1), (&["w#.2"], 1), (&["w#.3"], -1)])
        );
    }

    #[test]
    fn constant_rows() {
        assert_eq!(
            FarkasSystem::for_cube(&[Poly::constant(-1)], "w").unwrap(),
            None
        );
        let sys = FarkasSystem::for_cube(&[Poly::constant(3)], "w")
            .unwrap()
            .unwrap();
        assert!(sys.multipliers.is_empty());
        assert_eq!(sys.assertions(), vec!["(<= 0 (- 1))".to_string()]);
    }

    #[test]
    fn nonlinear_row_rejected() {
        let row = p(&[(&["x", "y"], 1)]);
        assert!(FarkasSystem::for_cube(&[row], "w").is_err());
    }
}
