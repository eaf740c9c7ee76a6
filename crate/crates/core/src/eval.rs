//! Reference interpreter: the call-by-value small-step semantics of the
//! language with explicit evaluation contexts.
//!
//! Nondeterministic choices are drawn from a [`NondetOracle`]. Operationally
//! the demonic and angelic choice rules are the same ("pick an integer");
//! they differ only in how the type system treats them.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::surface::{Args, Expr, Op, Program, Value};

pub const DEFAULT_BUDGET: u64 = 100_000;
pub const DEFAULT_RANGE: (i64, i64) = (-100, 100);

/// Source of integers for `*forall*` and `*exists*` choices.
#[derive(Clone, Debug)]
pub enum NondetOracle {
    /// Cycle through fixed lists; an empty list yields 0.
    Fixed {
        demonic: Vec<BigInt>,
        angelic: Vec<BigInt>,
        pos: (usize, usize),
    },
    /// Uniform draws from `[lo, hi]`.
    Seeded {
        rng: Box<ChaCha8Rng>,
        lo: i64,
        hi: i64,
    },
    /// Walk `-b, -b+1, ..., b` and wrap around, separately per stream.
    Enumerate { bound: i64, next: (i64, i64) },
}

impl NondetOracle {
    pub fn fixed(demonic: Vec<i64>, angelic: Vec<i64>) -> NondetOracle {
        NondetOracle::Fixed {
            demonic: demonic.into_iter().map(BigInt::from).collect(),
            angelic: angelic.into_iter().map(BigInt::from).collect(),
            pos: (0, 0),
        }
    }

    /// Every choice returns `n`.
    pub fn constant(n: i64) -> NondetOracle {
        NondetOracle::fixed(vec![n], vec![n])
    }

    pub fn seeded(seed: u64, lo: i64, hi: i64) -> NondetOracle {
        NondetOracle::Seeded {
            rng: Box::new(ChaCha8Rng::seed_from_u64(seed)),
            lo,
            hi,
        }
    }

    pub fn enumerate(bound: i64) -> NondetOracle {
        NondetOracle::Enumerate {
            bound,
            next: (-bound, -bound),
        }
    }

    pub fn demonic(&mut self) -> BigInt {
        self.draw(false)
    }

    pub fn angelic(&mut self) -> BigInt {
        self.draw(true)
    }

    fn draw(&mut self, angelic: bool) -> BigInt {
        match self {
            NondetOracle::Fixed {
                demonic,
                angelic: a,
                pos,
            } => {
                let (list, i) = if angelic {
                    (a, &mut pos.1)
                } else {
                    (demonic, &mut pos.0)
                };
                if list.is_empty() {
                    return BigInt::zero();
                }
                let v = list[*i % list.len()].clone();
                *i += 1;
                v
            }
            NondetOracle::Seeded { rng, lo, hi } => BigInt::from(rng.gen_range(*lo..=*hi)),
            NondetOracle::Enumerate { bound, next } => {
                let slot = if angelic { &mut next.1 } else { &mut next.0 };
                let v = *slot;
                *slot = if v >= *bound { -*bound } else { v + 1 };
                BigInt::from(v)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Outcome {
    Value(Value),
    BudgetExhausted(u64),
    Stuck(Expr),
}

impl Outcome {
    pub fn as_int(&self) -> Option<&BigInt> {
        match self {
            Outcome::Value(Value::Int(n)) => Some(n),
            _ => None,
        }
    }
}

/// Result of a single reduction.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Step {
    Next(Expr),
    Done(Value),
    Stuck,
}

/// The value denoted by a closed expression in value form, if any.
fn value_of(p: &Program, e: &Expr) -> Option<Value> {
    match e {
        Expr::Int(n) => Some(Value::Int(n.clone())),
        Expr::Var(f) if p.arity(f).is_some() => Some(Value::PApp(f.clone(), Args::default())),
        Expr::App(..) => {
            let mut args = Vec::new();
            let mut h = e;
            while let Expr::App(g, a) = h {
                args.push(norm_value(p, a).unwrap_or_else(|| a.clone()));
                h = g;
            }
            args.reverse();
            match h {
                Expr::Var(f) if p.arity(f).is_some_and(|n| args.len() < n) => {
                    Some(Value::PApp(f.clone(), args.into()))
                }
                _ => None,
            }
        }
        _ => None,
    }
}

/// Function names inside `v` replaced by their nullary partial
/// applications, so that the result is closed.
fn norm_value(p: &Program, v: &Value) -> Option<Value> {
    match v {
        Value::Int(_) => Some(v.clone()),
        Value::Var(f) if p.arity(f).is_some() => Some(Value::PApp(f.clone(), Args::default())),
        Value::Var(_) => None,
        Value::PApp(_, args) if args.is_closed() => Some(v.clone()),
        Value::PApp(f, args) => Some(Value::PApp(
            f.clone(),
            args.iter()
                .map(|a| norm_value(p, a))
                .collect::<Option<Args>>()?,
        )),
    }
}

fn op_apply(op: Op, a: &BigInt, b: &BigInt) -> BigInt {
    let flag = |c: bool| if c { BigInt::one() } else { BigInt::zero() };
    match op {
        Op::Add => a + b,
        Op::Sub => a - b,
        Op::Mul => a * b,
        Op::Le => flag(a <= b),
        Op::Lt => flag(a < b),
        Op::Eq => flag(a == b),
        Op::Ne => flag(a != b),
        Op::Ge => flag(a >= b),
        Op::Gt => flag(a > b),
    }
}

fn int_of(p: &Program, v: &Value) -> Option<BigInt> {
    match norm_value(p, v)? {
        Value::Int(n) => Some(n),
        _ => None,
    }
}

/// Instantiate a saturated call `f v̄`.
fn call(p: &Program, f: &str, args: &[Value]) -> Expr {
    let d = p.get(f).expect("defined function");
    d.params
        .iter()
        .zip(args)
        .fold(d.body.clone(), |e, (x, v)| e.subst(x, v))
}

/// Reduce the redex of a non-context expression.
fn reduce(p: &Program, e: &Expr, oracle: &mut NondetOracle) -> Option<Expr> {
    match e {
        Expr::Op(op, args) => {
            let a = int_of(p, &args[0])?;
            let b = int_of(p, &args[1])?;
            Some(Expr::Int(op_apply(*op, &a, &b)))
        }
        Expr::Ifz(v, a, b) => {
            let n = int_of(p, v)?;
            Some(if n.is_zero() {
                (**a).clone()
            } else {
                (**b).clone()
            })
        }
        Expr::RandDemonic(x, body) => Some(body.subst(x, &Value::Int(oracle.demonic()))),
        Expr::RandAngelic(x, body) => Some(body.subst(x, &Value::Int(oracle.angelic()))),
        _ => None,
    }
}

/// One reduction step of a closed expression.
pub fn step(p: &Program, e: &Expr, oracle: &mut NondetOracle) -> Step {
    if let Some(v) = value_of(p, e) {
        return Step::Done(v);
    }
    match step_inner(p, e, oracle) {
        Some(e) => Step::Next(e),
        None => Step::Stuck,
    }
}

fn step_inner(p: &Program, e: &Expr, oracle: &mut NondetOracle) -> Option<Expr> {
    match e {
        Expr::App(f, a) => match value_of(p, f) {
            Some(Value::PApp(g, mut args)) => {
                args.push(norm_value(p, a)?);
                (args.len() == p.arity(&g)?).then(|| call(p, &g, &args))
            }
            Some(_) => None,
            None => Some(Expr::App(Box::new(step_inner(p, f, oracle)?), a.clone())),
        },
        Expr::Let(x, e1, e2) => match value_of(p, e1) {
            Some(v) => Some(e2.subst(x, &v)),
            None => Some(Expr::Let(
                x.clone(),
                Box::new(step_inner(p, e1, oracle)?),
                e2.clone(),
            )),
        },
        _ => reduce(p, e, oracle),
    }
}

enum Frame {
    Arg(Value),
    LetBody(String, Expr),
}

/// Evaluate `entry` for at most `budget` reductions.
///
/// Equivalent to iterating [`step`], but keeps the evaluation context as an
/// explicit stack so each reduction costs time proportional to the redex.
pub fn run(p: &Program, entry: &Expr, oracle: &mut NondetOracle, budget: u64) -> Outcome {
    let mut stack: Vec<Frame> = Vec::new();
    let mut e = entry.clone();
    let mut steps = 0u64;
    let arities: BTreeMap<String, usize> = p.arities();
    loop {
        // descend into the evaluation context
        loop {
            match e {
                Expr::App(f, a) if value_of(p, &Expr::App(f.clone(), a.clone())).is_none() => {
                    stack.push(Frame::Arg(a));
                    e = *f;
                }
                Expr::Let(x, e1, e2) => {
                    stack.push(Frame::LetBody(x, *e2));
                    e = *e1;
                }
                other => {
                    e = other;
                    break;
                }
            }
        }
        if let Some(mut v) = value_of(p, &e) {
            // plug the value into the innermost frame
            match stack.pop() {
                None => return Outcome::Value(v),
                Some(Frame::LetBody(x, body)) => {
                    if steps >= budget {
                        return Outcome::BudgetExhausted(steps);
                    }
                    steps += 1;
                    e = body.subst(&x, &v);
                }
                Some(Frame::Arg(a)) => {
                    let Value::PApp(g, args) = &mut v else {
                        return Outcome::Stuck(rebuild(Expr::App(Box::new(e), a), stack));
                    };
                    let Some(a) = norm_value(p, &a) else {
                        return Outcome::Stuck(rebuild(Expr::App(Box::new(e), a), stack));
                    };
                    args.push(a);
                    if args.len() == arities[g.as_str()] {
                        if steps >= budget {
                            return Outcome::BudgetExhausted(steps);
                        }
                        steps += 1;
                        e = call(p, g, args);
                    } else {
                        e = v.to_expr();
                    }
                }
            }
            continue;
        }
        if steps >= budget {
            return Outcome::BudgetExhausted(steps);
        }
        match reduce(p, &e, oracle) {
            Some(next) => {
                steps += 1;
                e = next;
            }
            None => return Outcome::Stuck(rebuild(e, stack)),
        }
    }
}

fn rebuild(mut e: Expr, mut stack: Vec<Frame>) -> Expr {
    while let Some(f) = stack.pop() {
        e = match f {
            Frame::Arg(a) => Expr::App(Box::new(e), a),
            Frame::LetBody(x, body) => Expr::Let(x, Box::new(e), Box::new(body)),
        };
    }
    e
}

/// `f n₁ … n_k` as an expression.
pub fn call_expr(f: &str, args: &[i64]) -> Expr {
    args.iter().fold(Expr::Var(f.to_string()), |e, n| {
        Expr::App(Box::new(e), Value::int(*n))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surface::parse_program;

    fn sum() -> Program {
        parse_program("let rec sum x = if x = 0 then 0 else x + sum (x - 1)").unwrap()
    }

    #[test]
    fn ifz_zero_takes_then() {
        let p = Program::default();
        let e = Expr::Ifz(
            Value::int(0),
            Box::new(Expr::Int(1.into())),
            Box::new(Expr::Int(2.into())),
        );
        assert_eq!(
            step(&p, &e, &mut NondetOracle::constant(0)),
            Step::Next(Expr::Int(1.into()))
        );
    }

    #[test]
    fn let_value() {
        let p = Program::default();
        let e = Expr::Let(
            "x".into(),
            Box::new(Expr::Int(5.into())),
            Box::new(Expr::Var("x".into())),
        );
        assert_eq!(
            step(&p, &e, &mut NondetOracle::constant(0)),
            Step::Next(Expr::Int(5.into()))
        );
        assert_eq!(
            run(&p, &e, &mut NondetOracle::constant(0), 10),
            Outcome::Value(Value::int(5))
        );
    }

    #[test]
    fn sum_two() {
        let out = run(
            &sum(),
            &call_expr("sum", &[2]),
            &mut NondetOracle::constant(0),
            10_000,
        );
        assert_eq!(out, Outcome::Value(Value::int(3)));
    }

    #[test]
    fn sum_negative_diverges() {
        let out = run(
            &sum(),
            &call_expr("sum", &[-1]),
            &mut NondetOracle::constant(0),
            10_000,
        );
        assert!(matches!(out, Outcome::BudgetExhausted(10_000)));
    }

    #[test]
    fn cps_continuations_stay_cheap() {
        // each call wraps `k` once more; substituting into it must not rewalk it
        let p = parse_program(
            "let id x = x\nlet rec loop n k = if n = 0 then k 0 else loop (n - 1) (kont k)\nlet kont k v = k (v + 1)",
        )
        .unwrap();
        let out = run(
            &p,
            &Expr::App(Box::new(call_expr("loop", &[3])), Value::var("id")),
            &mut NondetOracle::constant(0),
            1_000,
        );
        assert_eq!(out, Outcome::Value(Value::int(3)));
        let t = std::time::Instant::now();
        let out = run(
            &p,
            &Expr::App(Box::new(call_expr("loop", &[-1])), Value::var("id")),
            &mut NondetOracle::constant(0),
            40_000,
        );
        assert!(matches!(out, Outcome::BudgetExhausted(40_000)));
        assert!(t.elapsed().as_secs() < 10, "{:?}", t.elapsed());
    }

    #[test]
    fn zero_budget_value() {
        let out = run(
            &Program::default(),
            &Expr::Int(42.into()),
            &mut NondetOracle::constant(0),
            0,
        );
        assert_eq!(out, Outcome::Value(Value::int(42)));
    }

    #[test]
    fn read_int_nonnegative_diverges() {
        let p =
            parse_program("let rec f x = let n = read_int () in if n<0 then x else f x").unwrap();
        let out = run(
            &p,
            &call_expr("f", &[0]),
            &mut NondetOracle::fixed(vec![], vec![0, 3, 7]),
            10_000,
        );
        assert!(matches!(out, Outcome::BudgetExhausted(_)));
        let out = run(
            &p,
            &call_expr("f", &[4]),
            &mut NondetOracle::fixed(vec![], vec![1, -1]),
            10_000,
        );
        assert_eq!(out, Outcome::Value(Value::int(4)));
    }

    #[test]
    fn applying_an_integer_is_stuck() {
        let p = parse_program("let rec g x = x").unwrap();
        let e = Expr::App(Box::new(Expr::Int(1.into())), Value::int(2));
        assert!(matches!(
            run(&p, &e, &mut NondetOracle::constant(0), 10),
            Outcome::Stuck(_)
        ));
        assert_eq!(step(&p, &e, &mut NondetOracle::constant(0)), Step::Stuck);
    }

    #[test]
    fn higher_order_repeat() {
        let p = parse_program(
            "let rec repeat f n e = if n<=0 then e else repeat f (n-1) (f e)\nlet rec inc x = x + 1\nlet rec main n = repeat inc n 0",
        )
        .unwrap();
        let out = run(
            &p,
            &call_expr("main", &[5]),
            &mut NondetOracle::constant(0),
            10_000,
        );
        assert_eq!(out, Outcome::Value(Value::int(5)));
    }

    #[test]
    fn step_and_run_agree() {
        let p = sum();
        let mut e = call_expr("sum", &[3]);
        let mut o = NondetOracle::constant(0);
        let v = loop {
            match step(&p, &e, &mut o) {
                Step::Next(n) => e = n,
                Step::Done(v) => break v,
                Step::Stuck => panic!("stuck"),
            }
        };
        assert_eq!(v, Value::int(6));
    }
}
