//! OCaml-flavoured concrete syntax and its A-normalization.
//!
//! ```text
//! let rec sum x = if x = 0 then 0 else x + sum (x - 1)
//! let rec f x = let n = read_int () in if n < 0 then x else f x
//! ```
//!
//! `read_int ()` and `*exists*` are angelic choices, `*forall*` a demonic one.
//! `if c then a else b` is `ifz c then b else a`: the Boolean encoding maps
//! false to 0. Directives live in `(*@ ... *)` comments and are returned
//! separately by [`parse_source`].

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;

use super::ast::{Expr, FunDef, Op, Program, Value};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SyntaxError {
    #[error("{line}:{col}: syntax error: {msg}")]
    Syntax {
        line: usize,
        col: usize,
        msg: String,
    },
    #[error("{line}:{col}: unbound variable `{name}`")]
    Unbound {
        line: usize,
        col: usize,
        name: String,
    },
    #[error("{line}:{col}: `{name}` has arity {arity} but is applied to {given} arguments")]
    Arity {
        line: usize,
        col: usize,
        name: String,
        arity: usize,
        given: usize,
    },
    #[error("{line}:{col}: duplicate definition of `{name}`")]
    Duplicate {
        line: usize,
        col: usize,
        name: String,
    },
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum T {
    Ident(String),
    Int(BigInt),
    Kw(&'static str),
    Sym(&'static str),
    Forall,
    Exists,
    Eof,
}

#[derive(Clone, Debug)]
struct Tok {
    t: T,
    line: usize,
    col: usize,
}

const KEYWORDS: &[&str] = &[
    "let", "rec", "and", "in", "if", "then", "else", "ifz", "read_int",
];
const SYMS: &[&str] = &[
    ";;", "()", "<>", "!=", "<=", ">=", "->", "(", ")", "=", "<", ">", "+", "-", "*",
];

/// Lex, collecting the bodies of `(*@ ... *)` comments into `directives`.
fn lex(src: &str, directives: &mut String) -> Result<Vec<Tok>, SyntaxError> {
    let c: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    let advance = |i: &mut usize, line: &mut usize, col: &mut usize, c: &[char]| {
        if c[*i] == '\n' {
            *line += 1;
            *col = 1;
        } else {
            *col += 1;
        }
        *i += 1;
    };
    while i < c.len() {
        let ch = c[i];
        if ch.is_whitespace() {
            advance(&mut i, &mut line, &mut col, &c);
            continue;
        }
        let (l0, c0) = (line, col);
        let err = |msg: String| SyntaxError::Syntax {
            line: l0,
            col: c0,
            msg,
        };
        if ch == '(' && c.get(i + 1) == Some(&'*') {
            let directive = c.get(i + 2) == Some(&'@');
            let mut depth = 0;
            let start = i + 3;
            let mut end = None;
            while i < c.len() {
                if c[i] == '(' && c.get(i + 1) == Some(&'*') {
                    depth += 1;
                    advance(&mut i, &mut line, &mut col, &c);
                    advance(&mut i, &mut line, &mut col, &c);
                } else if c[i] == '*' && c.get(i + 1) == Some(&')') {
                    depth -= 1;
                    advance(&mut i, &mut line, &mut col, &c);
                    advance(&mut i, &mut line, &mut col, &c);
                    if depth == 0 {
                        end = Some(i - 2);
                        break;
                    }
                } else {
                    advance(&mut i, &mut line, &mut col, &c);
                }
            }
            let Some(end) = end else {
                return Err(err("unterminated comment".into()));
            };
            if directive {
                directives.extend(&c[start..end]);
                directives.push('\n');
            }
            continue;
        }
        if ch.is_ascii_digit() {
            let s = i;
            while i < c.len() && c[i].is_ascii_digit() {
                advance(&mut i, &mut line, &mut col, &c);
            }
            let digits: String = c[s..i].iter().collect();
            out.push(Tok {
                t: T::Int(digits.parse().expect("digits")),
                line: l0,
                col: c0,
            });
            continue;
        }
        if ch.is_alphabetic() || ch == '_' {
            let s = i;
            while i < c.len() && (c[i].is_alphanumeric() || c[i] == '_' || c[i] == '\'') {
                advance(&mut i, &mut line, &mut col, &c);
            }
            let w: String = c[s..i].iter().collect();
            let t = match KEYWORDS.iter().find(|k| **k == w) {
                Some(k) => T::Kw(k),
                None => T::Ident(w),
            };
            out.push(Tok {
                t,
                line: l0,
                col: c0,
            });
            continue;
        }
        let rest: String = c[i..(i + 8).min(c.len())].iter().collect();
        for (word, t) in [("*forall*", T::Forall), ("*exists*", T::Exists)] {
            if rest.starts_with(word) {
                for _ in 0..word.len() {
                    advance(&mut i, &mut line, &mut col, &c);
                }
                out.push(Tok {
                    t,
                    line: l0,
                    col: c0,
                });
                break;
            }
        }
        if out.last().is_some_and(|t| t.line == l0 && t.col == c0) {
            continue;
        }
        if rest.starts_with("( )") {
            for _ in 0..3 {
                advance(&mut i, &mut line, &mut col, &c);
            }
            out.push(Tok {
                t: T::Sym("()"),
                line: l0,
                col: c0,
            });
            continue;
        }
        match SYMS.iter().find(|s| rest.starts_with(**s)) {
            Some(s) => {
                for _ in 0..s.len() {
                    advance(&mut i, &mut line, &mut col, &c);
                }
                out.push(Tok {
                    t: T::Sym(s),
                    line: l0,
                    col: c0,
                });
            }
            None => return Err(err(format!("unexpected character `{ch}`"))),
        }
    }
    out.push(Tok {
        t: T::Eof,
        line,
        col,
    });
    Ok(out)
}

/// Surface expression before A-normalization.
#[derive(Clone, Debug)]
enum S {
    Int(BigInt),
    Var(String),
    App(Box<SE>, Box<SE>),
    Bin(Op, Box<SE>, Box<SE>),
    Neg(Box<SE>),
    If(Box<SE>, Box<SE>, Box<SE>),
    Ifz(Box<SE>, Box<SE>, Box<SE>),
    Let(String, Box<SE>, Box<SE>),
    Rand { angelic: bool },
}

#[derive(Clone, Debug)]
struct SE {
    e: S,
    line: usize,
    col: usize,
}

struct P {
    toks: Vec<Tok>,
    pos: usize,
}

impl P {
    fn peek(&self) -> &T {
        &self.toks[self.pos].t
    }
    fn here(&self) -> (usize, usize) {
        let t = &self.toks[self.pos];
        (t.line, t.col)
    }
    fn bump(&mut self) -> T {
        let t = self.toks[self.pos].t.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }
    fn err(&self, msg: impl Into<String>) -> SyntaxError {
        let (line, col) = self.here();
        SyntaxError::Syntax {
            line,
            col,
            msg: msg.into(),
        }
    }
    fn is(&self, t: &T) -> bool {
        self.peek() == t
    }
    fn eat(&mut self, t: &T) -> bool {
        if self.is(t) {
            self.bump();
            true
        } else {
            false
        }
    }
    fn expect(&mut self, t: &T) -> Result<(), SyntaxError> {
        if self.eat(t) {
            Ok(())
        } else {
            Err(self.err(format!("expected {}, found {}", show(t), show(self.peek()))))
        }
    }
    fn ident(&mut self) -> Result<String, SyntaxError> {
        match self.peek().clone() {
            T::Ident(s) => {
                self.bump();
                Ok(s)
            }
            t => Err(self.err(format!("expected identifier, found {}", show(&t)))),
        }
    }

    fn mk(&self, e: S, at: (usize, usize)) -> SE {
        SE {
            e,
            line: at.0,
            col: at.1,
        }
    }

    fn expr(&mut self) -> Result<SE, SyntaxError> {
        let at = self.here();
        match self.peek() {
            T::Kw("let") => {
                self.bump();
                let x = self.ident()?;
                self.expect(&T::Sym("="))?;
                let e1 = self.expr()?;
                self.expect(&T::Kw("in"))?;
                let e2 = self.expr()?;
                Ok(self.mk(S::Let(x, Box::new(e1), Box::new(e2)), at))
            }
            T::Kw("if") | T::Kw("ifz") => {
                let z = self.bump() == T::Kw("ifz");
                let c = self.expr()?;
                self.expect(&T::Kw("then"))?;
                let a = self.expr()?;
                self.expect(&T::Kw("else"))?;
                let b = self.expr()?;
                let e = if z {
                    S::Ifz(Box::new(c), Box::new(a), Box::new(b))
                } else {
                    S::If(Box::new(c), Box::new(a), Box::new(b))
                };
                Ok(self.mk(e, at))
            }
            _ => self.comparison(),
        }
    }

    fn comparison(&mut self) -> Result<SE, SyntaxError> {
        let at = self.here();
        let a = self.additive()?;
        let op = match self.peek() {
            T::Sym("=") => Op::Eq,
            T::Sym("<>") | T::Sym("!=") => Op::Ne,
            T::Sym("<=") => Op::Le,
            T::Sym("<") => Op::Lt,
            T::Sym(">=") => Op::Ge,
            T::Sym(">") => Op::Gt,
            _ => return Ok(a),
        };
        self.bump();
        let b = self.additive()?;
        Ok(self.mk(S::Bin(op, Box::new(a), Box::new(b)), at))
    }

    fn additive(&mut self) -> Result<SE, SyntaxError> {
        let at = self.here();
        let mut acc = self.multiplicative()?;
        loop {
            let op = match self.peek() {
                T::Sym("+") => Op::Add,
                T::Sym("-") => Op::Sub,
                _ => return Ok(acc),
            };
            self.bump();
            let rhs = self.tail_or(Self::multiplicative)?;
            acc = self.mk(S::Bin(op, Box::new(acc), Box::new(rhs)), at);
        }
    }

    fn multiplicative(&mut self) -> Result<SE, SyntaxError> {
        let at = self.here();
        let mut acc = self.unary()?;
        while self.eat(&T::Sym("*")) {
            let rhs = self.tail_or(Self::unary)?;
            acc = self.mk(S::Bin(Op::Mul, Box::new(acc), Box::new(rhs)), at);
        }
        Ok(acc)
    }

    /// OCaml lets `let`/`if` appear as the last operand without parentheses.
    fn tail_or(&mut self, f: fn(&mut P) -> Result<SE, SyntaxError>) -> Result<SE, SyntaxError> {
        match self.peek() {
            T::Kw("let") | T::Kw("if") | T::Kw("ifz") => self.expr(),
            _ => f(self),
        }
    }

    fn unary(&mut self) -> Result<SE, SyntaxError> {
        let at = self.here();
        if self.eat(&T::Sym("-")) {
            let e = self.unary()?;
            return Ok(self.mk(S::Neg(Box::new(e)), at));
        }
        self.application()
    }

    fn application(&mut self) -> Result<SE, SyntaxError> {
        let at = self.here();
        if self.eat(&T::Kw("read_int")) {
            self.expect(&T::Sym("()"))?;
            return Ok(self.mk(S::Rand { angelic: true }, at));
        }
        let mut acc = self.atom()?;
        while self.starts_atom() {
            let arg = self.atom()?;
            acc = self.mk(S::App(Box::new(acc), Box::new(arg)), at);
        }
        Ok(acc)
    }

    fn starts_atom(&self) -> bool {
        matches!(
            self.peek(),
            T::Ident(_) | T::Int(_) | T::Sym("(") | T::Forall | T::Exists
        )
    }

    fn atom(&mut self) -> Result<SE, SyntaxError> {
        let at = self.here();
        match self.bump() {
            T::Ident(x) => Ok(self.mk(S::Var(x), at)),
            T::Int(n) => Ok(self.mk(S::Int(n), at)),
            T::Forall => Ok(self.mk(S::Rand { angelic: false }, at)),
            T::Exists => Ok(self.mk(S::Rand { angelic: true }, at)),
            T::Sym("(") => {
                let e = self.expr()?;
                self.expect(&T::Sym(")"))?;
                Ok(e)
            }
            t => {
                self.pos -= 1;
                Err(self.err(format!("expected expression, found {}", show(&t))))
            }
        }
    }
}

fn show(t: &T) -> String {
    match t {
        T::Ident(s) => format!("`{s}`"),
        T::Int(n) => format!("`{n}`"),
        T::Kw(k) => format!("`{k}`"),
        T::Sym(s) => format!("`{s}`"),
        T::Forall => "`*forall*`".into(),
        T::Exists => "`*exists*`".into(),
        T::Eof => "end of input".into(),
    }
}

struct RawDef {
    name: String,
    params: Vec<String>,
    body: SE,
    line: usize,
    col: usize,
}

fn toplevel(p: &mut P) -> Result<Vec<RawDef>, SyntaxError> {
    let mut defs = Vec::new();
    while !p.is(&T::Eof) {
        if p.eat(&T::Sym(";;")) {
            continue;
        }
        p.expect(&T::Kw("let"))?;
        p.eat(&T::Kw("rec"));
        loop {
            let (line, col) = p.here();
            let name = p.ident()?;
            let mut params = Vec::new();
            while let T::Ident(x) = p.peek().clone() {
                p.bump();
                params.push(x);
            }
            if params.is_empty() {
                return Err(p.err(format!("`{name}` must take at least one parameter")));
            }
            p.expect(&T::Sym("="))?;
            let body = p.expr()?;
            defs.push(RawDef {
                name,
                params,
                body,
                line,
                col,
            });
            if !p.eat(&T::Kw("and")) {
                break;
            }
        }
    }
    Ok(defs)
}

/// Parse a program and return it with the concatenated directive comments.
pub fn parse_source(src: &str) -> Result<(Program, String), SyntaxError> {
    let mut directives = String::new();
    let toks = lex(src, &mut directives)?;
    let mut p = P { toks, pos: 0 };
    let raw = toplevel(&mut p)?;
    let mut arities = BTreeMap::new();
    for d in &raw {
        if arities.insert(d.name.clone(), d.params.len()).is_some() {
            return Err(SyntaxError::Duplicate {
                line: d.line,
                col: d.col,
                name: d.name.clone(),
            });
        }
    }
    let mut defs = Vec::new();
    for d in raw {
        let mut cx = Anf {
            arities: &arities,
            used: BTreeSet::new(),
        };
        let mut scope: Vec<String> = d.params.clone();
        cx.check_scope(&d.body, &mut scope)?;
        let body = cx.expr(&d.body)?;
        let body = uniquify(&d.name, &d.params, body, &arities);
        defs.push(FunDef {
            name: d.name,
            params: d.params,
            body,
        });
    }
    Ok((Program { defs }, directives))
}

/// Parse a program, ignoring directive comments.
pub fn parse_program(src: &str) -> Result<Program, SyntaxError> {
    parse_source(src).map(|(p, _)| p)
}

struct Anf<'a> {
    arities: &'a BTreeMap<String, usize>,
    used: BTreeSet<String>,
}

enum Bind {
    Let(String, Expr),
    Rand(String, bool),
}

fn wrap(binds: Vec<Bind>, mut e: Expr) -> Expr {
    for b in binds.into_iter().rev() {
        e = match b {
            Bind::Let(x, e1) => Expr::Let(x, Box::new(e1), Box::new(e)),
            Bind::Rand(x, true) => Expr::RandAngelic(x, Box::new(e)),
            Bind::Rand(x, false) => Expr::RandDemonic(x, Box::new(e)),
        };
    }
    e
}

impl Anf<'_> {
    fn check_scope(&self, e: &SE, scope: &mut Vec<String>) -> Result<(), SyntaxError> {
        match &e.e {
            S::Var(x) => {
                if scope.contains(x) || self.arities.contains_key(x) {
                    Ok(())
                } else {
                    Err(SyntaxError::Unbound {
                        line: e.line,
                        col: e.col,
                        name: x.clone(),
                    })
                }
            }
            S::Int(_) | S::Rand { .. } => Ok(()),
            S::App(a, b) | S::Bin(_, a, b) => {
                self.check_scope(a, scope)?;
                self.check_scope(b, scope)
            }
            S::Neg(a) => self.check_scope(a, scope),
            S::If(c, a, b) | S::Ifz(c, a, b) => {
                self.check_scope(c, scope)?;
                self.check_scope(a, scope)?;
                self.check_scope(b, scope)
            }
            S::Let(x, a, b) => {
                self.check_scope(a, scope)?;
                scope.push(x.clone());
                let r = self.check_scope(b, scope);
                scope.pop();
                r
            }
        }
    }

    fn fresh(&mut self, e: &SE) -> String {
        let base = format!("_l{}c{}", e.line, e.col);
        let mut name = base.clone();
        let mut k = 2;
        while self.used.contains(&name) {
            name = format!("{base}_{k}");
            k += 1;
        }
        self.used.insert(name.clone());
        name
    }

    fn expr(&mut self, e: &SE) -> Result<Expr, SyntaxError> {
        let mut binds = Vec::new();
        let core = self.core(e, &mut binds)?;
        Ok(wrap(binds, core))
    }

    /// The expression itself, with operand computations pushed to `binds`.
    fn core(&mut self, e: &SE, binds: &mut Vec<Bind>) -> Result<Expr, SyntaxError> {
        Ok(match &e.e {
            S::Int(n) => Expr::Int(n.clone()),
            S::Var(x) => Expr::Var(x.clone()),
            S::Neg(inner) => match &inner.e {
                S::Int(n) => Expr::Int(-n.clone()),
                _ => {
                    let v = self.value(inner, binds)?;
                    Expr::Op(Op::Mul, vec![Value::int(-1), v])
                }
            },
            S::Bin(op, a, b) => {
                let va = self.value(a, binds)?;
                let vb = self.value(b, binds)?;
                if *op == Op::Mul && !matches!(va, Value::Int(_)) && !matches!(vb, Value::Int(_)) {
                    return Err(SyntaxError::Syntax {
                        line: e.line,
                        col: e.col,
                        msg: "multiplication needs a constant operand".into(),
                    });
                }
                Expr::Op(*op, vec![va, vb])
            }
            S::App(..) => {
                let (head, args) = spine(e);
                if let S::Var(f) = &head.e {
                    if let Some(&n) = self.arities.get(f) {
                        if args.len() > n {
                            return Err(SyntaxError::Arity {
                                line: e.line,
                                col: e.col,
                                name: f.clone(),
                                arity: n,
                                given: args.len(),
                            });
                        }
                    }
                }
                let mut vals = Vec::new();
                for a in &args {
                    vals.push(self.value(a, binds)?);
                }
                let h = self.core(head, binds)?;
                vals.into_iter()
                    .fold(h, |acc, v| Expr::App(Box::new(acc), v))
            }
            S::If(c, a, b) => {
                let vc = self.value(c, binds)?;
                Expr::Ifz(vc, Box::new(self.expr(b)?), Box::new(self.expr(a)?))
            }
            S::Ifz(c, a, b) => {
                let vc = self.value(c, binds)?;
                Expr::Ifz(vc, Box::new(self.expr(a)?), Box::new(self.expr(b)?))
            }
            S::Let(x, e1, e2) => match &e1.e {
                S::Rand { angelic } => {
                    let body = Box::new(self.expr(e2)?);
                    if *angelic {
                        Expr::RandAngelic(x.clone(), body)
                    } else {
                        Expr::RandDemonic(x.clone(), body)
                    }
                }
                _ => Expr::Let(
                    x.clone(),
                    Box::new(self.expr(e1)?),
                    Box::new(self.expr(e2)?),
                ),
            },
            S::Rand { angelic } => {
                let t = self.fresh(e);
                binds.push(Bind::Rand(t.clone(), *angelic));
                Expr::Var(t)
            }
        })
    }

    fn value(&mut self, e: &SE, binds: &mut Vec<Bind>) -> Result<Value, SyntaxError> {
        match &e.e {
            S::Int(n) => return Ok(Value::Int(n.clone())),
            S::Var(x) => return Ok(Value::Var(x.clone())),
            S::Neg(inner) => {
                if let S::Int(n) = &inner.e {
                    return Ok(Value::Int(-n.clone()));
                }
            }
            S::App(..) => {
                let (head, args) = spine(e);
                if let S::Var(f) = &head.e {
                    if self.arities.get(f).is_some_and(|n| args.len() < *n) {
                        let mut vals = Vec::new();
                        for a in &args {
                            vals.push(self.value(a, binds)?);
                        }
                        return Ok(Value::PApp(f.clone(), vals.into()));
                    }
                }
            }
            S::Rand { angelic } => {
                let t = self.fresh(e);
                binds.push(Bind::Rand(t.clone(), *angelic));
                return Ok(Value::Var(t));
            }
            _ => {}
        }
        let core = self.core(e, binds)?;
        let t = self.fresh(e);
        binds.push(Bind::Let(t.clone(), core));
        Ok(Value::Var(t))
    }
}

fn spine(e: &SE) -> (&SE, Vec<&SE>) {
    let mut args = Vec::new();
    let mut h = e;
    while let S::App(f, a) = &h.e {
        args.push(a.as_ref());
        h = f;
    }
    args.reverse();
    (h, args)
}

/// Rename binders so that every binder of a definition is distinct from the
/// parameters, the other binders and all function names.
fn uniquify(
    _fname: &str,
    params: &[String],
    body: Expr,
    arities: &BTreeMap<String, usize>,
) -> Expr {
    let mut taken: BTreeSet<String> = params.iter().cloned().collect();
    taken.extend(arities.keys().cloned());
    let mut env: BTreeMap<String, String> = BTreeMap::new();
    rename(&body, &mut env, &mut taken)
}

fn rename(e: &Expr, env: &mut BTreeMap<String, String>, taken: &mut BTreeSet<String>) -> Expr {
    let rv = |v: &Value, env: &BTreeMap<String, String>| rename_value(v, env);
    match e {
        Expr::Var(x) => Expr::Var(env.get(x).cloned().unwrap_or_else(|| x.clone())),
        Expr::Int(_) => e.clone(),
        Expr::App(f, a) => Expr::App(Box::new(rename(f, env, taken)), rv(a, env)),
        Expr::Op(op, args) => Expr::Op(*op, args.iter().map(|a| rv(a, env)).collect()),
        Expr::Ifz(c, a, b) => Expr::Ifz(
            rv(c, env),
            Box::new(rename(a, env, taken)),
            Box::new(rename(b, env, taken)),
        ),
        Expr::Let(x, e1, e2) => {
            let e1 = rename(e1, env, taken);
            let (y, old) = bind(x, env, taken);
            let e2 = rename(e2, env, taken);
            restore(x, old, env);
            Expr::Let(y, Box::new(e1), Box::new(e2))
        }
        Expr::RandDemonic(x, e1) | Expr::RandAngelic(x, e1) => {
            let (y, old) = bind(x, env, taken);
            let e1 = rename(e1, env, taken);
            restore(x, old, env);
            if matches!(e, Expr::RandDemonic(..)) {
                Expr::RandDemonic(y, Box::new(e1))
            } else {
                Expr::RandAngelic(y, Box::new(e1))
            }
        }
    }
}

fn bind(
    x: &str,
    env: &mut BTreeMap<String, String>,
    taken: &mut BTreeSet<String>,
) -> (String, Option<String>) {
    let mut y = x.to_string();
    let mut k = 1;
    while taken.contains(&y) {
        y = format!("{x}_{k}");
        k += 1;
    }
    taken.insert(y.clone());
    let old = env.insert(x.to_string(), y.clone());
    (y, old)
}

fn restore(x: &str, old: Option<String>, env: &mut BTreeMap<String, String>) {
    match old {
        Some(o) => env.insert(x.to_string(), o),
        None => env.remove(x),
    };
}

fn rename_value(v: &Value, env: &BTreeMap<String, String>) -> Value {
    match v {
        Value::Var(x) => Value::Var(env.get(x).cloned().unwrap_or_else(|| x.clone())),
        Value::PApp(f, args) => Value::PApp(
            f.clone(),
            args.iter().map(|a| rename_value(a, env)).collect(),
        ),
        Value::Int(_) => v.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sum_is_anf() {
        let p = parse_program("let rec sum x = if x = 0 then 0 else x + sum (x - 1)").unwrap();
        assert_eq!(p.defs.len(), 1);
        let body = &p.defs[0].body;
        let Expr::Let(t, e1, rest) = body else {
            panic!("{body}")
        };
        assert!(matches!(e1.as_ref(), Expr::Op(Op::Eq, _)));
        let Expr::Ifz(Value::Var(c), _, els) = rest.as_ref() else {
            panic!()
        };
        assert_eq!(c, t);
        assert_eq!(els.as_ref(), &Expr::Int(0.into()));
    }

    #[test]
    fn identity() {
        let p = parse_program("let rec id x = x").unwrap();
        assert_eq!(p.defs[0].body, Expr::Var("x".into()));
    }

    #[test]
    fn over_application_is_arity_error() {
        let e = parse_program("let rec f x = f (x+1) x").unwrap_err();
        assert!(
            matches!(
                e,
                SyntaxError::Arity {
                    arity: 1,
                    given: 2,
                    ..
                }
            ),
            "{e}"
        );
    }

    #[test]
    fn unbound_variable() {
        let e = parse_program("let rec f x = y").unwrap_err();
        assert!(matches!(e, SyntaxError::Unbound { .. }));
    }

    #[test]
    fn read_int_is_angelic() {
        let p =
            parse_program("let rec f x = let n = read_int () in if n<0 then x else f x").unwrap();
        assert!(matches!(p.defs[0].body, Expr::RandAngelic(..)));
        let q = parse_program("let rec g x = let n = *forall* in n").unwrap();
        assert!(matches!(q.defs[0].body, Expr::RandDemonic(..)));
    }

    #[test]
    fn partial_application_stays_value() {
        let p = parse_program("let rec add x y = x + y\nlet rec g x = add 1").unwrap();
        assert!(matches!(p.defs[1].body, Expr::App(..)));
        let q = parse_program(
            "let rec add x y = x + y\nlet rec h f x = f x\nlet rec g x = h (add 1) x",
        )
        .unwrap();
        let Expr::App(inner, _) = &q.defs[2].body else {
            panic!()
        };
        let Expr::App(_, v) = inner.as_ref() else {
            panic!()
        };
        assert!(matches!(v, Value::PApp(f, a) if f == "add" && a.len() == 1));
    }

    #[test]
    fn binders_made_unique() {
        let p = parse_program("let rec f x = let x = x + 1 in let x = x + 1 in x").unwrap();
        let s = p.defs[0].body.to_string();
        assert!(s.contains("x_1") && s.contains("x_2"), "{s}");
    }

    #[test]
    fn directives_collected() {
        let (_, d) = parse_source("(*@ @maximize P *)\nlet rec f x = x (* plain *)").unwrap();
        assert_eq!(d.trim(), "@maximize P");
    }

    #[test]
    fn round_trip() {
        let src = "let rec repeat f n e = if n<=0 then e else repeat f (n-1) (f e)";
        let p = parse_program(src).unwrap();
        let q = parse_program(&p.to_string()).unwrap();
        assert_eq!(p, q);
    }
}
