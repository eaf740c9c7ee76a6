//! Surface-syntax printing that folds single-use temporaries back into
//! their use sites, so ANF programs read like the source they came from.

use std::collections::BTreeMap;

use num_bigint::BigInt;

use crate::surface::{Expr, Op, Program, Value};

#[derive(Clone, Copy, PartialEq)]
enum Kind {
    Atom,
    App,
    Arith,
    Cmp,
}

#[derive(Clone)]
struct Piece {
    text: String,
    kind: Kind,
}

impl Piece {
    fn as_arg(&self) -> String {
        match self.kind {
            Kind::Atom => self.text.clone(),
            _ => format!("({})", self.text),
        }
    }

    fn as_operand(&self) -> String {
        match self.kind {
            Kind::Atom | Kind::App => self.text.clone(),
            _ => format!("({})", self.text),
        }
    }
}

type Inline = BTreeMap<String, Piece>;

fn value(v: &Value, inl: &Inline) -> Piece {
    match v {
        Value::Var(x) => inl.get(x).cloned().unwrap_or(Piece {
            text: x.clone(),
            kind: Kind::Atom,
        }),
        Value::Int(n) if n < &BigInt::from(0) => Piece {
            text: format!("({n})"),
            kind: Kind::Atom,
        },
        Value::Int(n) => Piece {
            text: n.to_string(),
            kind: Kind::Atom,
        },
        Value::PApp(f, args) if args.is_empty() => Piece {
            text: f.clone(),
            kind: Kind::Atom,
        },
        Value::PApp(f, args) => Piece {
            text: std::iter::once(f.clone())
                .chain(args.iter().map(|a| value(a, inl).as_arg()))
                .collect::<Vec<_>>()
                .join(" "),
            kind: Kind::App,
        },
    }
}

/// Pieces for expressions that can be folded into a use site.
fn simple(e: &Expr, inl: &Inline) -> Option<Piece> {
    match e {
        Expr::Var(x) => Some(value(&Value::Var(x.clone()), inl)),
        Expr::Int(n) => Some(value(&Value::Int(n.clone()), inl)),
        Expr::Op(op, args) => {
            let (a, b) = (value(&args[0], inl), value(&args[1], inl));
            let kind = if op.is_comparison() {
                Kind::Cmp
            } else {
                Kind::Arith
            };
            let rhs = match b.kind {
                Kind::Arith if op.is_comparison() => b.text,
                _ => b.as_operand(),
            };
            let lhs = match a.kind {
                Kind::Arith if *op != Op::Mul => a.text,
                _ => a.as_operand(),
            };
            Some(Piece {
                text: format!("{lhs} {} {rhs}", op.symbol()),
                kind,
            })
        }
        Expr::App(..) => {
            let mut args = Vec::new();
            let mut h = e;
            while let Expr::App(f, a) = h {
                args.push(a);
                h = f;
            }
            let head = simple(h, inl)?;
            let mut parts = vec![head.as_arg()];
            parts.extend(args.iter().rev().map(|a| value(a, inl).as_arg()));
            Some(Piece {
                text: parts.join(" "),
                kind: Kind::App,
            })
        }
        _ => None,
    }
}

fn uses(e: &Expr, x: &str) -> usize {
    let val = |v: &Value| -> usize {
        match v {
            Value::Var(y) => usize::from(y == x),
            Value::PApp(_, args) => args.iter().map(|a| uses(&a.to_expr(), x)).sum(),
            Value::Int(_) => 0,
        }
    };
    match e {
        Expr::Var(y) => usize::from(y == x),
        Expr::Int(_) => 0,
        Expr::App(f, a) => uses(f, x) + val(a),
        Expr::Op(_, args) => args.iter().map(val).sum(),
        Expr::Ifz(v, a, b) => val(v) + uses(a, x) + uses(b, x),
        Expr::Let(_, a, b) => uses(a, x) + uses(b, x),
        Expr::RandAngelic(_, b) | Expr::RandDemonic(_, b) => uses(b, x),
    }
}

/// Whether the first thing `e` evaluates reads `x`, so that folding a
/// possibly effectful definition of `x` into it keeps evaluation order.
fn used_first(e: &Expr, x: &str) -> bool {
    match e {
        Expr::Let(_, a, _) => used_first(a, x),
        Expr::Ifz(v, ..) => matches!(v, Value::Var(y) if y == x),
        Expr::RandAngelic(..) | Expr::RandDemonic(..) => false,
        e => uses(e, x) > 0,
    }
}

fn expr(e: &Expr, inl: &mut Inline) -> String {
    match e {
        Expr::Let(x, e1, e2) => {
            if let Some(p) = simple(e1, inl) {
                let pure = !matches!(**e1, Expr::App(..));
                if x.starts_with('_') && uses(e2, x) == 1 && (pure || used_first(e2, x)) {
                    inl.insert(x.clone(), p);
                    return expr(e2, inl);
                }
                return format!("let {x} = {} in {}", p.text, expr(e2, inl));
            }
            format!("let {x} = ({}) in {}", expr(e1, inl), expr(e2, inl))
        }
        Expr::Ifz(v, a, b) => {
            let c = value(v, inl);
            if c.kind == Kind::Cmp {
                format!("if {} then {} else {}", c.text, expr(b, inl), expr(a, inl))
            } else {
                format!(
                    "ifz {} then {} else {}",
                    c.as_operand(),
                    expr(a, inl),
                    expr(b, inl)
                )
            }
        }
        Expr::RandAngelic(x, b) => format!("let {x} = read_int () in {}", expr(b, inl)),
        Expr::RandDemonic(x, b) => format!("let {x} = *forall* in {}", expr(b, inl)),
        e => simple(e, inl).map(|p| p.text).unwrap_or_default(),
    }
}

/// Program text in surface syntax; parses back to an equivalent program.
pub fn to_source(p: &Program) -> String {
    let mut out = String::new();
    for (i, d) in p.defs.iter().enumerate() {
        let kw = if i == 0 { "let rec" } else { "and" };
        let body = expr(&d.body, &mut Inline::new());
        out.push_str(&format!(
            "{kw} {} {} = {body}\n",
            d.name,
            d.params.join(" ")
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::{run, NondetOracle, Outcome};
    use crate::surface::parse_program;

    #[test]
    fn folds_temporaries() {
        let p = parse_program("let rec sum x = if x = 0 then 0 else x + sum (x - 1)").unwrap();
        assert_eq!(
            to_source(&p).trim(),
            "let rec sum x = if x = 0 then 0 else x + sum (x - 1)"
        );
    }

    #[test]
    fn round_trips() {
        for src in [
            "let rec repeat f n e = if n <= 0 then e else repeat f (n - 1) (f e)",
            "let rec f x = let n = read_int () in if n < 0 then x else f x",
            "let rec g x = let y = if x > 0 then 1 else 2 in y * 3 - (x - 1)\nand h x = g (g x)",
            "let rec k x = let n = *forall* in ifz n then x else k (-2 * x)",
        ] {
            let p = parse_program(src).unwrap();
            let q = parse_program(&to_source(&p)).unwrap();
            for x in -3..4 {
                for f in p
                    .defs
                    .iter()
                    .map(|d| d.name.clone())
                    .filter(|f| p.arity(f) == Some(1))
                {
                    let e = crate::eval::call_expr(&f, &[x]);
                    let a = run(&p, &e, &mut NondetOracle::constant(1), 500);
                    let b = run(&q, &e, &mut NondetOracle::constant(1), 500);
                    match (a, b) {
                        (Outcome::Value(u), Outcome::Value(v)) => assert_eq!(u, v),
                        (Outcome::BudgetExhausted(_), Outcome::BudgetExhausted(_)) => {}
                        (a, b) => panic!("{src}: {a:?} vs {b:?}"),
                    }
                }
            }
        }
    }
}
