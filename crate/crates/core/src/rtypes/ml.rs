//! Monomorphic ML type inference with `int` as the only base type.

use std::collections::BTreeMap;
use std::fmt;

use crate::surface::{Expr, Program, Value};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum SType {
    Int,
    Arrow(Box<SType>, Box<SType>),
    Var(usize),
}

impl SType {
    pub fn arrow(a: SType, b: SType) -> SType {
        SType::Arrow(Box::new(a), Box::new(b))
    }

    /// Argument types and final result of an arrow chain.
    pub fn uncurry(&self) -> (Vec<&SType>, &SType) {
        let mut args = Vec::new();
        let mut t = self;
        while let SType::Arrow(a, b) = t {
            args.push(a.as_ref());
            t = b;
        }
        (args, t)
    }
}

impl fmt::Display for SType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SType::Int => write!(f, "int"),
            SType::Var(n) => write!(f, "'a{n}"),
            SType::Arrow(a, b) => match a.as_ref() {
                SType::Arrow(..) => write!(f, "({a}) -> {b}"),
                _ => write!(f, "{a} -> {b}"),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MlError {
    #[error("type mismatch in `{fun}`: {a} vs {b}")]
    Mismatch { fun: String, a: String, b: String },
    #[error("occurs check failed in `{0}`")]
    Occurs(String),
    #[error("unbound variable `{1}` in `{0}`")]
    Unbound(String, String),
}

/// Simple types of every function and of every local binder, keyed by
/// `(function, variable)`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct MlTypes {
    pub funs: BTreeMap<String, SType>,
    pub locals: BTreeMap<(String, String), SType>,
}

impl MlTypes {
    pub fn local(&self, fun: &str, x: &str) -> Option<&SType> {
        self.locals.get(&(fun.to_string(), x.to_string()))
    }
}

struct Infer {
    subst: Vec<Option<SType>>,
    fun: String,
}

impl Infer {
    fn fresh(&mut self) -> SType {
        self.subst.push(None);
        SType::Var(self.subst.len() - 1)
    }

    fn resolve(&self, t: &SType) -> SType {
        match t {
            SType::Var(n) => match &self.subst[*n] {
                Some(u) => self.resolve(u),
                None => t.clone(),
            },
            SType::Arrow(a, b) => SType::arrow(self.resolve(a), self.resolve(b)),
            SType::Int => SType::Int,
        }
    }

    fn occurs(&self, n: usize, t: &SType) -> bool {
        match self.resolve(t) {
            SType::Var(m) => m == n,
            SType::Arrow(a, b) => self.occurs(n, &a) || self.occurs(n, &b),
            SType::Int => false,
        }
    }

    fn unify(&mut self, a: &SType, b: &SType) -> Result<(), MlError> {
        let (a, b) = (self.resolve(a), self.resolve(b));
        match (&a, &b) {
            (SType::Int, SType::Int) => Ok(()),
            (SType::Var(n), SType::Var(m)) if n == m => Ok(()),
            (SType::Var(n), t) | (t, SType::Var(n)) => {
                if self.occurs(*n, t) {
                    return Err(MlError::Occurs(self.fun.clone()));
                }
                self.subst[*n] = Some(t.clone());
                Ok(())
            }
            (SType::Arrow(a1, b1), SType::Arrow(a2, b2)) => {
                self.unify(a1, a2)?;
                self.unify(b1, b2)
            }
            _ => Err(MlError::Mismatch {
                fun: self.fun.clone(),
                a: a.to_string(),
                b: b.to_string(),
            }),
        }
    }

    fn value(&mut self, v: &Value, env: &BTreeMap<String, SType>) -> Result<SType, MlError> {
        match v {
            Value::Int(_) => Ok(SType::Int),
            Value::Var(x) => env
                .get(x)
                .cloned()
                .ok_or_else(|| MlError::Unbound(self.fun.clone(), x.clone())),
            Value::PApp(..) => self.expr(&v.to_expr(), &mut env.clone(), &mut Vec::new()),
        }
    }

    fn expr(
        &mut self,
        e: &Expr,
        env: &mut BTreeMap<String, SType>,
        locals: &mut Vec<(String, SType)>,
    ) -> Result<SType, MlError> {
        match e {
            Expr::Int(_) => Ok(SType::Int),
            Expr::Var(x) => self.value(&Value::Var(x.clone()), env),
            Expr::App(f, v) => {
                let tf = self.expr(f, env, locals)?;
                let tv = self.value(v, env)?;
                let r = self.fresh();
                self.unify(&tf, &SType::arrow(tv, r.clone()))?;
                Ok(r)
            }
            Expr::Op(_, args) => {
                for a in args {
                    let t = self.value(a, env)?;
                    self.unify(&t, &SType::Int)?;
                }
                Ok(SType::Int)
            }
            Expr::Ifz(v, a, b) => {
                let t = self.value(v, env)?;
                self.unify(&t, &SType::Int)?;
                let ta = self.expr(a, env, locals)?;
                let tb = self.expr(b, env, locals)?;
                self.unify(&ta, &tb)?;
                Ok(ta)
            }
            Expr::Let(x, e1, e2) => {
                let t1 = self.expr(e1, env, locals)?;
                locals.push((x.clone(), t1.clone()));
                let old = env.insert(x.clone(), t1);
                let t2 = self.expr(e2, env, locals);
                restore(env, x, old);
                t2
            }
            Expr::RandDemonic(x, body) | Expr::RandAngelic(x, body) => {
                locals.push((x.clone(), SType::Int));
                let old = env.insert(x.clone(), SType::Int);
                let t = self.expr(body, env, locals);
                restore(env, x, old);
                t
            }
        }
    }
}

fn restore(env: &mut BTreeMap<String, SType>, x: &str, old: Option<SType>) {
    match old {
        Some(t) => env.insert(x.to_string(), t),
        None => env.remove(x),
    };
}

/// Type variables left unconstrained default to `int`.
fn default_int(t: SType) -> SType {
    match t {
        SType::Var(_) => SType::Int,
        SType::Arrow(a, b) => SType::arrow(default_int(*a), default_int(*b)),
        SType::Int => SType::Int,
    }
}

/// Principal monomorphic types for all definitions, typed together so that
/// mutual recursion works.
pub fn infer_ml_types(p: &Program) -> Result<MlTypes, MlError> {
    let mut inf = Infer {
        subst: Vec::new(),
        fun: String::new(),
    };
    let mut globals: BTreeMap<String, SType> = BTreeMap::new();
    let mut param_tys: BTreeMap<String, Vec<SType>> = BTreeMap::new();
    for d in &p.defs {
        let params: Vec<SType> = d.params.iter().map(|_| inf.fresh()).collect();
        let res = inf.fresh();
        let t = params
            .iter()
            .rev()
            .fold(res, |acc, a| SType::arrow(a.clone(), acc));
        globals.insert(d.name.clone(), t);
        param_tys.insert(d.name.clone(), params);
    }
    let mut raw_locals = Vec::new();
    for d in &p.defs {
        inf.fun = d.name.clone();
        let mut env = globals.clone();
        let mut locals = Vec::new();
        for (x, t) in d.params.iter().zip(&param_tys[&d.name]) {
            env.insert(x.clone(), t.clone());
            locals.push((x.clone(), t.clone()));
        }
        let body = inf.expr(&d.body, &mut env, &mut locals)?;
        let mut res = globals[&d.name].clone();
        for _ in &d.params {
            res = match inf.resolve(&res) {
                SType::Arrow(_, b) => *b,
                other => other,
            };
        }
        inf.unify(&res, &body)?;
        raw_locals.push((d.name.clone(), locals));
    }
    let mut out = MlTypes::default();
    for (f, t) in globals {
        out.funs.insert(f, default_int(inf.resolve(&t)));
    }
    for (f, locals) in raw_locals {
        for (x, t) in locals {
            out.locals
                .insert((f.clone(), x), default_int(inf.resolve(&t)));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surface::parse_program;

    fn ty(src: &str, f: &str) -> String {
        let p = parse_program(src).unwrap();
        infer_ml_types(&p).unwrap().funs[f].to_string()
    }

    #[test]
    fn sum_int_to_int() {
        assert_eq!(
            ty(
                "let rec sum x = if x = 0 then 0 else x + sum (x - 1)",
                "sum"
            ),
            "int -> int"
        );
    }

    #[test]
    fn repeat_higher_order() {
        let src = "let rec repeat f n e = if n<=0 then e else repeat f (n-1) (f e)";
        assert_eq!(ty(src, "repeat"), "(int -> int) -> int -> int -> int");
    }

    #[test]
    fn id_defaults_to_int() {
        assert_eq!(ty("let rec id x = x", "id"), "int -> int");
    }

    #[test]
    fn mismatch_detected() {
        let p = parse_program("let rec f x = x 1 + x").unwrap();
        assert!(infer_ml_types(&p).is_err());
    }
}
