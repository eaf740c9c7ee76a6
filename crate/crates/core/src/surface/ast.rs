//! A-normal-form abstract syntax of the language.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops::Deref;
use std::sync::Arc;

use num_bigint::BigInt;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Op {
    Add,
    Sub,
    /// Multiplication; at least one operand is an integer literal.
    Mul,
    Le,
    Lt,
    Eq,
    Ne,
    Ge,
    Gt,
}

impl Op {
    pub fn arity(self) -> usize {
        2
    }

    pub fn is_comparison(self) -> bool {
        matches!(self, Op::Le | Op::Lt | Op::Eq | Op::Ne | Op::Ge | Op::Gt)
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Op::Add => "+",
            Op::Sub => "-",
            Op::Mul => "*",
            Op::Le => "<=",
            Op::Lt => "<",
            Op::Eq => "=",
            Op::Ne => "<>",
            Op::Ge => ">=",
            Op::Gt => ">",
        }
    }
}

/// Values: integers, variables and partial applications of defined functions.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Value {
    Int(BigInt),
    Var(String),
    PApp(String, Args),
}

/// Arguments of a partial application. Cloning shares them, and whether
/// any variable occurs in them is cached, so substituting into the closed
/// values built during evaluation is constant time however deep they nest.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(from = "Vec<Value>", into = "Vec<Value>")]
pub struct Args {
    vals: Arc<Vec<Value>>,
    closed: bool,
}

impl Args {
    pub fn push(&mut self, v: Value) {
        self.closed &= v.is_closed();
        Arc::make_mut(&mut self.vals).push(v);
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }
}

impl Default for Args {
    fn default() -> Args {
        Vec::new().into()
    }
}

impl Deref for Args {
    type Target = [Value];
    fn deref(&self) -> &[Value] {
        &self.vals
    }
}

impl PartialEq for Args {
    fn eq(&self, other: &Args) -> bool {
        Arc::ptr_eq(&self.vals, &other.vals) || self.vals == other.vals
    }
}

impl Eq for Args {}

impl std::hash::Hash for Args {
    fn hash<H: std::hash::Hasher>(&self, h: &mut H) {
        self.vals.hash(h)
    }
}

impl From<Vec<Value>> for Args {
    fn from(vals: Vec<Value>) -> Args {
        let closed = vals.iter().all(Value::is_closed);
        Args {
            vals: Arc::new(vals),
            closed,
        }
    }
}

impl From<Args> for Vec<Value> {
    fn from(mut a: Args) -> Vec<Value> {
        match Arc::get_mut(&mut a.vals) {
            Some(v) => std::mem::take(v),
            None => a.vals.to_vec(),
        }
    }
}

impl Drop for Args {
    // Unlink nested arguments with a worklist; the default drop recurses
    // once per level.
    fn drop(&mut self) {
        let Some(v) = Arc::get_mut(&mut self.vals) else {
            return;
        };
        let mut work = std::mem::take(v);
        while let Some(v) = work.pop() {
            if let Value::PApp(_, mut a) = v {
                if let Some(inner) = Arc::get_mut(&mut a.vals) {
                    work.append(inner);
                }
            }
        }
    }
}

impl FromIterator<Value> for Args {
    fn from_iter<I: IntoIterator<Item = Value>>(it: I) -> Args {
        it.into_iter().collect::<Vec<_>>().into()
    }
}

impl<'a> IntoIterator for &'a Args {
    type Item = &'a Value;
    type IntoIter = std::slice::Iter<'a, Value>;
    fn into_iter(self) -> Self::IntoIter {
        self.vals.iter()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Expr {
    Var(String),
    Int(BigInt),
    App(Box<Expr>, Value),
    Op(Op, Vec<Value>),
    Ifz(Value, Box<Expr>, Box<Expr>),
    Let(String, Box<Expr>, Box<Expr>),
    RandDemonic(String, Box<Expr>),
    RandAngelic(String, Box<Expr>),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FunDef {
    pub name: String,
    pub params: Vec<String>,
    pub body: Expr,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Program {
    pub defs: Vec<FunDef>,
}

impl Program {
    pub fn get(&self, name: &str) -> Option<&FunDef> {
        self.defs.iter().find(|d| d.name == name)
    }

    pub fn arity(&self, name: &str) -> Option<usize> {
        self.get(name).map(|d| d.params.len())
    }

    pub fn names(&self) -> BTreeSet<String> {
        self.defs.iter().map(|d| d.name.clone()).collect()
    }

    pub fn arities(&self) -> BTreeMap<String, usize> {
        self.defs
            .iter()
            .map(|d| (d.name.clone(), d.params.len()))
            .collect()
    }

    /// Number of AST nodes, for size-linearity checks.
    pub fn size(&self) -> usize {
        self.defs.iter().map(|d| d.body.size()).sum()
    }
}

impl Value {
    pub fn int(n: i64) -> Value {
        Value::Int(BigInt::from(n))
    }

    pub fn var(x: &str) -> Value {
        Value::Var(x.to_string())
    }

    /// No variable occurs in the value, not even a function name.
    pub fn is_closed(&self) -> bool {
        match self {
            Value::Int(_) => true,
            Value::Var(_) => false,
            Value::PApp(_, args) => args.is_closed(),
        }
    }

    pub fn subst(&self, x: &str, v: &Value) -> Value {
        match self {
            Value::Var(y) if y == x => v.clone(),
            Value::PApp(_, args) if args.is_closed() => self.clone(),
            Value::PApp(f, args) => {
                Value::PApp(f.clone(), args.iter().map(|a| a.subst(x, v)).collect())
            }
            _ => self.clone(),
        }
    }

    pub fn free_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            Value::Int(_) => {}
            Value::Var(x) => {
                out.insert(x.clone());
            }
            Value::PApp(f, args) => {
                out.insert(f.clone());
                args.iter().for_each(|a| a.free_vars(out));
            }
        }
    }

    /// The value as an expression.
    pub fn to_expr(&self) -> Expr {
        match self {
            Value::Int(n) => Expr::Int(n.clone()),
            Value::Var(x) => Expr::Var(x.clone()),
            Value::PApp(f, args) => args.iter().fold(Expr::Var(f.clone()), |e, a| {
                Expr::App(Box::new(e), a.clone())
            }),
        }
    }
}

impl Expr {
    pub fn size(&self) -> usize {
        match self {
            Expr::Var(_) | Expr::Int(_) => 1,
            Expr::App(e, _) => 1 + e.size(),
            Expr::Op(_, _) => 1,
            Expr::Ifz(_, a, b) | Expr::Let(_, a, b) => 1 + a.size() + b.size(),
            Expr::RandDemonic(_, e) | Expr::RandAngelic(_, e) => 1 + e.size(),
        }
    }

    /// `[v/x]e`. Values substituted here are closed, so no capture can occur.
    pub fn subst(&self, x: &str, v: &Value) -> Expr {
        match self {
            Expr::Var(y) if y == x => v.to_expr(),
            Expr::Var(_) | Expr::Int(_) => self.clone(),
            Expr::App(e, a) => Expr::App(Box::new(e.subst(x, v)), a.subst(x, v)),
            Expr::Op(op, args) => Expr::Op(*op, args.iter().map(|a| a.subst(x, v)).collect()),
            Expr::Ifz(c, a, b) => Expr::Ifz(
                c.subst(x, v),
                Box::new(a.subst(x, v)),
                Box::new(b.subst(x, v)),
            ),
            Expr::Let(y, e1, e2) => {
                let e2 = if y == x {
                    (**e2).clone()
                } else {
                    e2.subst(x, v)
                };
                Expr::Let(y.clone(), Box::new(e1.subst(x, v)), Box::new(e2))
            }
            Expr::RandDemonic(y, e) => Expr::RandDemonic(
                y.clone(),
                Box::new(if y == x { (**e).clone() } else { e.subst(x, v) }),
            ),
            Expr::RandAngelic(y, e) => Expr::RandAngelic(
                y.clone(),
                Box::new(if y == x { (**e).clone() } else { e.subst(x, v) }),
            ),
        }
    }

    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_free(&mut out, &mut Vec::new());
        out
    }

    fn collect_free(&self, out: &mut BTreeSet<String>, bound: &mut Vec<String>) {
        let add_val = |v: &Value, out: &mut BTreeSet<String>, bound: &Vec<String>| {
            let mut s = BTreeSet::new();
            v.free_vars(&mut s);
            out.extend(s.into_iter().filter(|x| !bound.contains(x)));
        };
        match self {
            Expr::Var(x) => {
                if !bound.contains(x) {
                    out.insert(x.clone());
                }
            }
            Expr::Int(_) => {}
            Expr::App(e, a) => {
                e.collect_free(out, bound);
                add_val(a, out, bound);
            }
            Expr::Op(_, args) => args.iter().for_each(|a| add_val(a, out, bound)),
            Expr::Ifz(c, a, b) => {
                add_val(c, out, bound);
                a.collect_free(out, bound);
                b.collect_free(out, bound);
            }
            Expr::Let(x, e1, e2) => {
                e1.collect_free(out, bound);
                bound.push(x.clone());
                e2.collect_free(out, bound);
                bound.pop();
            }
            Expr::RandDemonic(x, e) | Expr::RandAngelic(x, e) => {
                bound.push(x.clone());
                e.collect_free(out, bound);
                bound.pop();
            }
        }
    }

    /// Is this expression a value (an integer or a partial application)?
    pub fn as_value(&self, arities: &BTreeMap<String, usize>) -> Option<Value> {
        match self {
            Expr::Int(n) => Some(Value::Int(n.clone())),
            Expr::Var(x) => Some(Value::Var(x.clone())),
            Expr::App(..) => {
                let mut args = Vec::new();
                let mut e = self;
                while let Expr::App(f, a) = e {
                    args.push(a.clone());
                    e = f;
                }
                args.reverse();
                match e {
                    Expr::Var(f) if arities.get(f).is_some_and(|n| args.len() < *n) => {
                        Some(Value::PApp(f.clone(), args.into()))
                    }
                    _ => None,
                }
            }
            _ => None,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(n) if n < &BigInt::from(0) => write!(f, "({n})"),
            Value::Int(n) => write!(f, "{n}"),
            Value::Var(x) => write!(f, "{x}"),
            Value::PApp(g, args) if args.is_empty() => write!(f, "{g}"),
            Value::PApp(g, args) => {
                write!(f, "({g}")?;
                for a in args {
                    write!(f, " {a}")?;
                }
                write!(f, ")")
            }
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Var(x) => write!(f, "{x}"),
            Expr::Int(n) if n < &BigInt::from(0) => write!(f, "({n})"),
            Expr::Int(n) => write!(f, "{n}"),
            Expr::App(e, a) => match e.as_ref() {
                Expr::Var(_) | Expr::App(..) => write!(f, "{e} {a}"),
                e => write!(f, "({e}) {a}"),
            },
            Expr::Op(op, args) => {
                write!(f, "{} {} {}", args[0], op.symbol(), args[1])
            }
            Expr::Ifz(c, a, b) => write!(f, "(ifz {c} then {a} else {b})"),
            Expr::Let(x, e1, e2) => write!(f, "(let {x} = {e1} in {e2})"),
            Expr::RandDemonic(x, e) => write!(f, "(let {x} = *forall* in {e})"),
            Expr::RandAngelic(x, e) => write!(f, "(let {x} = *exists* in {e})"),
        }
    }
}

/// Concrete syntax that [`super::parse_program`] reads back to the same program.
impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, d) in self.defs.iter().enumerate() {
            let kw = if i == 0 { "let rec" } else { "and" };
            writeln!(f, "{kw} {} {} = {}", d.name, d.params.join(" "), d.body)?;
        }
        Ok(())
    }
}
