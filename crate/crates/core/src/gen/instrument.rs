//! Counter instrumentation for termination bounds: a copy `f_t` of `f`
//! carrying the initial argument `i` and the call depth `c`.

use std::collections::{BTreeMap, BTreeSet};

use crate::rtypes::{infer_ml_types, MlError, SType};
use crate::surface::{parse_directives, DirectiveSet, Expr, FunDef, Op, Program, Value};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum InstrumentError {
    #[error("no function `{0}`")]
    UnknownFun(String),
    #[error("`{0}` is not first-order")]
    HigherOrder(String),
    #[error("`{0}` is mutually recursive with `{1}`")]
    Mutual(String, String),
    #[error(transparent)]
    Ml(#[from] MlError),
}

struct Rewriter<'a> {
    f: &'a str,
    ft: &'a str,
    arity: usize,
    i: &'a str,
    c: &'a str,
    used: BTreeSet<String>,
}

impl Rewriter<'_> {
    fn fresh(&mut self, base: &str) -> String {
        let mut k = 0;
        let mut name = base.to_string();
        while self.used.contains(&name) {
            k += 1;
            name = format!("{base}{k}");
        }
        self.used.insert(name.clone());
        name
    }

    /// Arguments of a saturated call to `f`.
    fn call_args(&self, e: &Expr) -> Option<Vec<Value>> {
        let mut args = Vec::new();
        let mut h = e;
        while let Expr::App(g, a) = h {
            args.push(a.clone());
            h = g;
        }
        match h {
            Expr::Var(g) if g == self.f && args.len() == self.arity => {
                args.reverse();
                Some(args)
            }
            _ => None,
        }
    }

    fn counted_call(&mut self, args: Vec<Value>, body: impl FnOnce(Expr) -> Expr) -> Expr {
        let cc = self.fresh("_c");
        let call = args
            .into_iter()
            .chain([Value::var(self.i), Value::var(&cc)])
            .fold(Expr::Var(self.ft.to_string()), |e, a| {
                Expr::App(Box::new(e), a)
            });
        Expr::Let(
            cc,
            Box::new(Expr::Op(Op::Add, vec![Value::var(self.c), Value::int(1)])),
            Box::new(body(call)),
        )
    }

    fn expr(&mut self, e: &Expr) -> Result<Expr, InstrumentError> {
        Ok(match e {
            Expr::Let(x, e1, e2) => match self.call_args(e1) {
                Some(args) => {
                    self.no_escape_values(&args)?;
                    let rest = self.expr(e2)?;
                    let x = x.clone();
                    self.counted_call(args, move |call| {
                        Expr::Let(x, Box::new(call), Box::new(rest))
                    })
                }
                None => Expr::Let(
                    x.clone(),
                    Box::new(self.expr(e1)?),
                    Box::new(self.expr(e2)?),
                ),
            },
            Expr::Ifz(v, a, b) => {
                self.no_escape_values(std::slice::from_ref(v))?;
                Expr::Ifz(v.clone(), Box::new(self.expr(a)?), Box::new(self.expr(b)?))
            }
            Expr::RandAngelic(x, b) => Expr::RandAngelic(x.clone(), Box::new(self.expr(b)?)),
            Expr::RandDemonic(x, b) => Expr::RandDemonic(x.clone(), Box::new(self.expr(b)?)),
            e => match self.call_args(e) {
                Some(args) => {
                    self.no_escape_values(&args)?;
                    self.counted_call(args, |call| call)
                }
                None => {
                    if e.free_vars().contains(self.f) {
                        return Err(InstrumentError::HigherOrder(self.f.to_string()));
                    }
                    e.clone()
                }
            },
        })
    }

    fn no_escape_values(&self, vs: &[Value]) -> Result<(), InstrumentError> {
        let mut s = BTreeSet::new();
        vs.iter().for_each(|v| v.free_vars(&mut s));
        if s.contains(self.f) {
            return Err(InstrumentError::HigherOrder(self.f.to_string()));
        }
        Ok(())
    }
}

fn callees(p: &Program) -> BTreeMap<String, BTreeSet<String>> {
    let names = p.names();
    p.defs
        .iter()
        .map(|d| {
            let fv: BTreeSet<String> = d.body.free_vars().intersection(&names).cloned().collect();
            (d.name.clone(), fv)
        })
        .collect()
}

fn reaches(graph: &BTreeMap<String, BTreeSet<String>>, from: &str, to: &str) -> bool {
    let mut seen = BTreeSet::new();
    let mut stack = vec![from.to_string()];
    while let Some(g) = stack.pop() {
        if !seen.insert(g.clone()) {
            continue;
        }
        for h in graph.get(&g).into_iter().flatten() {
            if h == to {
                return true;
            }
            stack.push(h.clone());
        }
    }
    false
}

fn binders(e: &Expr, out: &mut BTreeSet<String>) {
    match e {
        Expr::Let(x, a, b) => {
            out.insert(x.clone());
            binders(a, out);
            binders(b, out);
        }
        Expr::Ifz(_, a, b) => {
            binders(a, out);
            binders(b, out);
        }
        Expr::RandAngelic(x, b) | Expr::RandDemonic(x, b) => {
            out.insert(x.clone());
            binders(b, out);
        }
        _ => {}
    }
}

/// Replace `f x̄` by a wrapper calling `f_t x̄ x₁ 0`, where `f_t` passes
/// `i` unchanged and `c + 1` to each recursive call. The returned
/// directives type `f_t` as
/// `(x₁:{P(x₁)}) → … → (i:int) → (c:{Inv(x̄,i,c)}) → _` and add
/// `Inv(x̄,i,c) ⇐ c = 0 ∧ i = x₁`, `Bnd(i,c) ⇐ P(x₁) ∧ Inv(x̄,i,c)` and the
/// template `Bnd(i,c) = 0 ≤ c ≤ k0 + k1·i`.
pub fn instrument_counters(
    p: &Program,
    f: &str,
) -> Result<(Program, DirectiveSet), InstrumentError> {
    let def = p
        .get(f)
        .ok_or_else(|| InstrumentError::UnknownFun(f.to_string()))?;
    let ml = infer_ml_types(p)?;
    let (args, res) = ml.funs[f].uncurry();
    if args.len() != def.params.len()
        || args.iter().any(|a| **a != SType::Int)
        || *res != SType::Int
    {
        return Err(InstrumentError::HigherOrder(f.to_string()));
    }
    let graph = callees(p);
    for g in &graph[f] {
        if g != f && reaches(&graph, g, f) {
            return Err(InstrumentError::Mutual(f.to_string(), g.clone()));
        }
    }
    let mut used = p.names();
    used.extend(def.params.iter().cloned());
    binders(&def.body, &mut used);
    let mut rw = Rewriter {
        f,
        ft: "",
        arity: def.params.len(),
        i: "",
        c: "",
        used,
    };
    let ft = rw.fresh(&format!("{f}_t"));
    let i = rw.fresh("i");
    let c = rw.fresh("c");
    let body = {
        let mut rw = Rewriter {
            ft: &ft,
            i: &i,
            c: &c,
            ..rw
        };
        rw.expr(&def.body)?
    };
    let mut params = def.params.clone();
    params.extend([i.clone(), c.clone()]);
    let x1 = def.params[0].clone();
    let wrapper = def
        .params
        .iter()
        .map(|x| Value::var(x))
        .chain([Value::var(&x1), Value::int(0)])
        .fold(Expr::Var(ft.clone()), |e, a| Expr::App(Box::new(e), a));
    let mut defs = Vec::new();
    for d in &p.defs {
        if d.name == f {
            defs.push(FunDef {
                name: ft.clone(),
                params: params.clone(),
                body: body.clone(),
            });
            defs.push(FunDef {
                name: f.to_string(),
                params: def.params.clone(),
                body: wrapper.clone(),
            });
        } else {
            defs.push(d.clone());
        }
    }

    let xs = def.params.join(", ");
    let mut ty = format!("({x1}:{{{x1} | P({x1})}})");
    for x in &def.params[1..] {
        ty.push_str(&format!(" -> ({x}:_)"));
    }
    ty.push_str(&format!(
        " -> ({i}:int) -> ({c}:{{{c} | Inv({xs}, {i}, {c})}}) -> _"
    ));
    let text = format!(
        "@type {ft} : {ty}\n\
         @clause Inv({xs}, {i}, {c}) <= {c} = 0 && {i} = {x1}\n\
         @clause Bnd({i}, {c}) <= P({x1}) && Inv({xs}, {i}, {c})\n\
         @template Bnd({i}, {c}) = 0 <= {c} && {c} <= k0 + k1 * {i}\n"
    );
    let d = parse_directives(&text).expect("generated directives parse");
    Ok((Program { defs }, d))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::{call_expr, run, NondetOracle, Outcome};
    use crate::gen::to_source;
    use crate::surface::parse_program;

    const SUM: &str = "let rec sum x = if x = 0 then 0 else x + sum (x - 1)";

    #[test]
    fn sum_instrumented() {
        let p = parse_program(SUM).unwrap();
        let (q, d) = instrument_counters(&p, "sum").unwrap();
        let src: String = to_source(&q).split_whitespace().collect();
        assert!(src.contains("sum_t(x-1)i(c+1)"), "{}", to_source(&q));
        assert!(src.contains("letrecsum_txic="), "{}", to_source(&q));
        assert!(src.contains("andsumx=sum_txx0"), "{}", to_source(&q));
        assert_eq!(d.clauses.len(), 2);
        assert_eq!(d.clauses[0].pretty(), "Inv(x, i, c) ⇐ c = 0 ∧ i = x");
        assert_eq!(d.clauses[1].pretty(), "Bnd(i, c) ⇐ P(x) ∧ Inv(x, i, c)");
        assert!(d.templates.contains_key("Bnd"));
        assert!(d.types.contains_key("sum_t"));
    }

    #[test]
    fn counter_counts_calls() {
        let src = "let rec sum_t x i c = if x = 0 then c else x + sum_t (x - 1) i (c + 1)";
        let p = parse_program(src).unwrap();
        let out = run(
            &p,
            &call_expr("sum_t", &[3, 3, 0]),
            &mut NondetOracle::constant(0),
            1000,
        );
        assert_eq!(out, Outcome::Value(Value::int(6 + 3)));
        let q = parse_program(SUM).unwrap();
        let (q, _) = instrument_counters(&q, "sum").unwrap();
        for x in 0..6 {
            let a = run(
                &q,
                &call_expr("sum", &[x]),
                &mut NondetOracle::constant(0),
                10_000,
            );
            assert_eq!(a, Outcome::Value(Value::int(x * (x + 1) / 2)));
        }
    }

    #[test]
    fn non_recursive_unchanged() {
        let p = parse_program("let rec k x = x + 1").unwrap();
        let (q, d) = instrument_counters(&p, "k").unwrap();
        assert_eq!(q.get("k_t").unwrap().body, p.get("k").unwrap().body);
        assert_eq!(d.clauses.len(), 2);
    }

    #[test]
    fn rejects_higher_order_and_mutual() {
        let p = parse_program("let rec repeat f n e = if n<=0 then e else repeat f (n-1) (f e)")
            .unwrap();
        assert!(matches!(
            instrument_counters(&p, "repeat"),
            Err(InstrumentError::HigherOrder(_))
        ));
        let p = parse_program("let rec ev x = if x = 0 then 1 else od (x - 1)\nand od x = if x = 0 then 0 else ev (x - 1)")
            .unwrap();
        assert!(matches!(
            instrument_counters(&p, "ev"),
            Err(InstrumentError::Mutual(..))
        ));
        let p = parse_program("let rec g x = x").unwrap();
        assert!(matches!(
            instrument_counters(&p, "h"),
            Err(InstrumentError::UnknownFun(_))
        ));
    }
}
