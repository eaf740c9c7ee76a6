use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::hccs::{apply_subst, Formula, PredSubst, Term};

/// `{binder : refine}` or `(binder : param) → result`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RType {
    Int {
        binder: String,
        refine: Formula,
    },
    Fun {
        binder: String,
        param: Box<RType>,
        result: Box<RType>,
    },
}

impl RType {
    pub fn int(binder: &str) -> RType {
        RType::Int {
            binder: binder.to_string(),
            refine: Formula::True,
        }
    }

    pub fn refined(binder: &str, refine: Formula) -> RType {
        RType::Int {
            binder: binder.to_string(),
            refine,
        }
    }

    pub fn fun(binder: &str, param: RType, result: RType) -> RType {
        RType::Fun {
            binder: binder.to_string(),
            param: Box::new(param),
            result: Box::new(result),
        }
    }

    pub fn is_int(&self) -> bool {
        matches!(self, RType::Int { .. })
    }

    pub fn binder(&self) -> &str {
        match self {
            RType::Int { binder, .. } | RType::Fun { binder, .. } => binder,
        }
    }

    /// Free variables.
    pub fn fvs(&self) -> BTreeSet<String> {
        match self {
            RType::Int { binder, refine } => {
                let mut s = refine.vars();
                s.remove(binder);
                s
            }
            RType::Fun {
                binder,
                param,
                result,
            } => {
                let mut s = result.fvs();
                s.remove(binder);
                s.extend(param.fvs());
                s
            }
        }
    }

    pub fn pvs(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_pvs(&mut out);
        out
    }

    fn collect_pvs(&self, out: &mut BTreeSet<String>) {
        match self {
            RType::Int { refine, .. } => out.extend(refine.preds()),
            RType::Fun { param, result, .. } => {
                param.collect_pvs(out);
                result.collect_pvs(out);
            }
        }
    }

    /// Capture-avoiding simultaneous substitution of terms for free variables.
    pub fn subst(&self, map: &BTreeMap<String, Term>) -> RType {
        if map.is_empty() {
            return self.clone();
        }
        match self {
            RType::Int { binder, refine } => {
                let (b, inner) = under_binder(binder, map, &refine.vars());
                RType::Int {
                    binder: b,
                    refine: refine.subst(&inner),
                }
            }
            RType::Fun {
                binder,
                param,
                result,
            } => {
                let param = param.subst(map);
                let (b, inner) = under_binder(binder, map, &result.fvs());
                RType::Fun {
                    binder: b,
                    param: Box::new(param),
                    result: Box::new(result.subst(&inner)),
                }
            }
        }
    }

    /// The same type with its outermost binder renamed.
    pub fn with_binder(&self, to: &str) -> RType {
        if self.binder() == to {
            return self.clone();
        }
        match self {
            RType::Int { binder, refine } => {
                let m = BTreeMap::from([(binder.clone(), Term::var(to))]);
                RType::Int {
                    binder: to.to_string(),
                    refine: refine.subst(&m),
                }
            }
            RType::Fun {
                binder,
                param,
                result,
            } => {
                let m = BTreeMap::from([(binder.clone(), Term::var(to))]);
                RType::Fun {
                    binder: to.to_string(),
                    param: param.clone(),
                    result: Box::new(result.subst(&m)),
                }
            }
        }
    }

    /// Apply θ to every refinement.
    pub fn apply(&self, theta: &PredSubst) -> RType {
        match self {
            RType::Int { binder, refine } => RType::Int {
                binder: binder.clone(),
                refine: apply_subst(theta, refine),
            },
            RType::Fun {
                binder,
                param,
                result,
            } => RType::Fun {
                binder: binder.clone(),
                param: Box::new(param.apply(theta)),
                result: Box::new(result.apply(theta)),
            },
        }
    }

    /// Paper notation, e.g. `(x:{x | x < 0}) → {y | ⊥}`.
    pub fn pretty(&self) -> String {
        match self {
            RType::Int { binder, refine } => {
                let f = refine.simplify();
                if f.is_true() {
                    "int".to_string()
                } else {
                    format!("{{{binder} | {}}}", f.pretty())
                }
            }
            RType::Fun {
                binder,
                param,
                result,
            } => {
                let p = match param.as_ref() {
                    RType::Int { .. } => param.with_binder(binder).pretty(),
                    p => p.pretty(),
                };
                format!("({binder}:{p}) → {}", result.pretty())
            }
        }
    }
}

/// Substitution to use under a binder, renaming the binder if it would
/// capture a variable of the substituted terms.
fn under_binder(
    binder: &str,
    map: &BTreeMap<String, Term>,
    body_vars: &BTreeSet<String>,
) -> (String, BTreeMap<String, Term>) {
    let mut inner = map.clone();
    inner.remove(binder);
    let mut incoming = BTreeSet::new();
    for t in inner.values() {
        t.vars(&mut incoming);
    }
    if !incoming.contains(binder) {
        return (binder.to_string(), inner);
    }
    let mut b = format!("{binder}'");
    while incoming.contains(&b) || body_vars.contains(&b) || inner.contains_key(&b) {
        b.push('\'');
    }
    inner.insert(binder.to_string(), Term::var(b.clone()));
    (b, inner)
}

impl fmt::Display for RType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.pretty())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Entry {
    Bind(String, RType),
    Guard(Formula),
}

/// An ordered typing environment Γ.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TypeEnv {
    pub entries: Vec<Entry>,
}

impl TypeEnv {
    pub fn new() -> TypeEnv {
        TypeEnv::default()
    }

    pub fn bind(&mut self, x: &str, t: RType) {
        self.entries.push(Entry::Bind(x.to_string(), t));
    }

    pub fn guard(&mut self, f: Formula) {
        self.entries.push(Entry::Guard(f));
    }

    pub fn lookup(&self, x: &str) -> Option<&RType> {
        self.entries.iter().rev().find_map(|e| match e {
            Entry::Bind(y, t) if y == x => Some(t),
            _ => None,
        })
    }

    /// Bound names in order.
    pub fn names(&self) -> Vec<&str> {
        self.entries
            .iter()
            .filter_map(|e| match e {
                Entry::Bind(x, _) => Some(x.as_str()),
                _ => None,
            })
            .collect()
    }

    /// Integer-typed variables in scope, in binding order.
    pub fn int_vars(&self) -> Vec<String> {
        self.entries
            .iter()
            .filter_map(|e| match e {
                Entry::Bind(x, t) if t.is_int() => Some(x.clone()),
                _ => None,
            })
            .collect()
    }

    pub fn pvs(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        for e in &self.entries {
            match e {
                Entry::Bind(_, t) => out.extend(t.pvs()),
                Entry::Guard(f) => out.extend(f.preds()),
            }
        }
        out
    }

    pub fn apply(&self, theta: &PredSubst) -> TypeEnv {
        TypeEnv {
            entries: self
                .entries
                .iter()
                .map(|e| match e {
                    Entry::Bind(x, t) => Entry::Bind(x.clone(), t.apply(theta)),
                    Entry::Guard(f) => Entry::Guard(apply_subst(theta, f)),
                })
                .collect(),
        }
    }

    /// Pretty listing `f : τ`, one binding per line.
    pub fn pretty(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            match e {
                Entry::Bind(x, t) => out.push_str(&format!("{x} : {}\n", t.pretty())),
                Entry::Guard(f) => out.push_str(&format!("{}\n", f.pretty())),
            }
        }
        out
    }
}

/// ⟦Γ⟧: the conjunction of integer refinements (instantiated at their
/// variables) and guards; function bindings contribute ⊤.
pub fn sem_env(env: &TypeEnv) -> Formula {
    let mut parts = Vec::new();
    for e in &env.entries {
        match e {
            Entry::Bind(x, RType::Int { binder, refine }) => {
                let m = BTreeMap::from([(binder.clone(), Term::var(x.clone()))]);
                parts.push(refine.subst(&m));
            }
            Entry::Bind(_, RType::Fun { .. }) => {}
            Entry::Guard(f) => parts.push(f.clone()),
        }
    }
    Formula::and(parts)
}
