//! Textual formulas and the line-based clause format.
//!
//! ```text
//! # sum with Q fixed to false
//! false <= P(x), x = 0
//! P(x - 1) <= P(x), x != 0
//! exists n . R(x, n) <= true
//! @maximize P
//! ```
//!
//! A clause is `head <= item, ..., item`. Heads are a predicate application,
//! `false` or another formula, or `exists x,y . P(t, ...) & formula`.
//! Comparisons never chain, so the first `<=` that follows a complete head is
//! the clause separator. `#` starts a comment; lines starting with `@` are
//! directives and are handed back verbatim. The Unicode connectives used by
//! the pretty printer (`⇐ ∧ ∨ ¬ ≤ ≥ ≠ ⊤ ⊥ ∃`) are accepted too.

use std::collections::BTreeSet;

use super::clause::{Body, Hccs, Head, HornClause};
use super::formula::{Formula, LinExpr, PredApp, Term};
use super::poly::Poly;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{line}:{col}: {msg}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub msg: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Int(i64),
    Sym(&'static str),
    Eof,
}

#[derive(Clone, Debug)]
pub struct Token {
    pub tok: Tok,
    pub line: usize,
    pub col: usize,
}

const SYMS: &[&str] = &[
    "&&", "||", "=>", "->", "<=", ">=", "!=", "<>", "==", "(", ")", "{", "}", "[", "]", ",", ".",
    ":", ";", "+", "-", "*", "<", ">", "=", "&", "|", "!", "~", "@",
];

fn unicode(c: char) -> Option<Tok> {
    Some(match c {
        '≤' => Tok::Sym("<="),
        '⇐' => Tok::Sym("<="),
        '≥' => Tok::Sym(">="),
        '≠' => Tok::Sym("!="),
        '∧' => Tok::Sym("&&"),
        '∨' => Tok::Sym("||"),
        '¬' => Tok::Sym("!"),
        '⇒' => Tok::Sym("=>"),
        '→' => Tok::Sym("->"),
        '−' => Tok::Sym("-"),
        '·' => Tok::Sym("*"),
        '⊤' => Tok::Ident("true".into()),
        '⊥' => Tok::Ident("false".into()),
        '∃' => Tok::Ident("exists".into()),
        _ => return None,
    })
}

/// Tokenize; `#` comments run to end of line.
pub fn lex(src: &str) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    let err = |line, col, msg: String| ParseError { line, col, msg };
    while i < chars.len() {
        let c = chars[i];
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let (l0, c0) = (line, col);
        if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let s: String = chars[start..i].iter().collect();
            let n: i64 = s
                .parse()
                .map_err(|_| err(l0, c0, format!("integer literal {s} out of range")))?;
            col += i - start;
            out.push(Token {
                tok: Tok::Int(n),
                line: l0,
                col: c0,
            });
            continue;
        }
        if c.is_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len()
                && (chars[i].is_alphanumeric() || chars[i] == '_' || chars[i] == '\'')
            {
                i += 1;
            }
            col += i - start;
            out.push(Token {
                tok: Tok::Ident(chars[start..i].iter().collect()),
                line: l0,
                col: c0,
            });
            continue;
        }
        if let Some(t) = unicode(c) {
            i += 1;
            col += 1;
            out.push(Token {
                tok: t,
                line: l0,
                col: c0,
            });
            continue;
        }
        let rest: String = chars[i..(i + 3).min(chars.len())].iter().collect();
        match SYMS.iter().find(|s| rest.starts_with(**s)) {
            Some(s) => {
                i += s.len();
                col += s.len();
                out.push(Token {
                    tok: Tok::Sym(s),
                    line: l0,
                    col: c0,
                });
            }
            None => return Err(err(l0, c0, format!("unexpected character `{c}`"))),
        }
    }
    out.push(Token {
        tok: Tok::Eof,
        line,
        col,
    });
    Ok(out)
}

/// Comparison operators of the surface formula syntax.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CmpOp {
    Le,
    Lt,
    Ge,
    Gt,
    Eq,
    Ne,
}

/// Formula whose terms are raw polynomials over identifiers, before the
/// identifiers are classified as variables or unknown coefficients.
#[derive(Clone, Debug, PartialEq)]
pub enum PFormula {
    True,
    False,
    Cmp(Poly, CmpOp, Poly),
    Pred(String, Vec<Poly>),
    Not(Box<PFormula>),
    And(Vec<PFormula>),
    Or(Vec<PFormula>),
    Implies(Box<PFormula>, Box<PFormula>),
}

impl PFormula {
    pub fn idents(&self, out: &mut BTreeSet<String>) {
        match self {
            PFormula::True | PFormula::False => {}
            PFormula::Cmp(a, _, b) => {
                out.extend(a.vars());
                out.extend(b.vars());
            }
            PFormula::Pred(_, args) => args.iter().for_each(|a| out.extend(a.vars())),
            PFormula::Not(f) => f.idents(out),
            PFormula::And(fs) | PFormula::Or(fs) => fs.iter().for_each(|f| f.idents(out)),
            PFormula::Implies(a, b) => {
                a.idents(out);
                b.idents(out);
            }
        }
    }

    pub fn preds(&self, out: &mut BTreeSet<String>) {
        match self {
            PFormula::Pred(p, _) => {
                out.insert(p.clone());
            }
            PFormula::Not(f) => f.preds(out),
            PFormula::And(fs) | PFormula::Or(fs) => fs.iter().for_each(|f| f.preds(out)),
            PFormula::Implies(a, b) => {
                a.preds(out);
                b.preds(out);
            }
            _ => {}
        }
    }

    /// Linear formula; fails on products of identifiers.
    pub fn to_formula(&self) -> Result<Formula, String> {
        Ok(match self {
            PFormula::True => Formula::True,
            PFormula::False => Formula::False,
            PFormula::Cmp(a, op, b) => {
                let (a, b) = (poly_term(a)?, poly_term(b)?);
                cmp(a, *op, b)
            }
            PFormula::Pred(p, args) => Formula::Pred(PredApp::new(
                p.clone(),
                args.iter().map(poly_term).collect::<Result<_, _>>()?,
            )),
            PFormula::Not(f) => Formula::not(f.to_formula()?),
            PFormula::And(fs) => Formula::and(
                fs.iter()
                    .map(|f| f.to_formula())
                    .collect::<Result<_, _>>()?,
            ),
            PFormula::Or(fs) => Formula::or(
                fs.iter()
                    .map(|f| f.to_formula())
                    .collect::<Result<_, _>>()?,
            ),
            PFormula::Implies(a, b) => Formula::implies(a.to_formula()?, b.to_formula()?),
        })
    }
}

pub fn cmp(a: Term, op: CmpOp, b: Term) -> Formula {
    match op {
        CmpOp::Le => Formula::leq(a, b),
        CmpOp::Lt => Formula::lt(a, b),
        CmpOp::Ge => Formula::geq(a, b),
        CmpOp::Gt => Formula::gt(a, b),
        CmpOp::Eq => Formula::eq(a, b),
        CmpOp::Ne => Formula::neq(a, b),
    }
}

fn poly_term(p: &Poly) -> Result<Term, String> {
    let mut e = LinExpr::default();
    for (m, k) in &p.terms {
        match m.as_slice() {
            [] => e.constant += k,
            [x] => e.add_term(x, *k),
            _ => return Err(format!("nonlinear term `{p}`")),
        }
    }
    Ok(e.to_term())
}

/// Recursive-descent parser over a token stream, shared with the directive parser.
pub struct Parser {
    toks: Vec<Token>,
    pub pos: usize,
}

impl Parser {
    pub fn new(src: &str) -> Result<Parser, ParseError> {
        Ok(Parser {
            toks: lex(src)?,
            pos: 0,
        })
    }

    pub fn from_tokens(toks: Vec<Token>) -> Parser {
        Parser { toks, pos: 0 }
    }

    pub fn peek(&self) -> &Tok {
        &self.toks[self.pos.min(self.toks.len() - 1)].tok
    }

    pub fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.pos + k).min(self.toks.len() - 1)].tok
    }

    pub fn next(&mut self) -> Tok {
        let t = self.peek().clone();
        if self.pos < self.toks.len() - 1 {
            self.pos += 1;
        }
        t
    }

    pub fn at_eof(&self) -> bool {
        matches!(self.peek(), Tok::Eof)
    }

    pub fn error(&self, msg: impl Into<String>) -> ParseError {
        let t = &self.toks[self.pos.min(self.toks.len() - 1)];
        ParseError {
            line: t.line,
            col: t.col,
            msg: msg.into(),
        }
    }

    pub fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Sym(x) if *x == s)
    }

    pub fn is_ident(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Ident(x) if x == s)
    }

    pub fn eat_sym(&mut self, s: &str) -> bool {
        if self.is_sym(s) {
            self.next();
            true
        } else {
            false
        }
    }

    pub fn eat_ident(&mut self, s: &str) -> bool {
        if self.is_ident(s) {
            self.next();
            true
        } else {
            false
        }
    }

    pub fn expect_sym(&mut self, s: &str) -> Result<(), ParseError> {
        if self.eat_sym(s) {
            Ok(())
        } else {
            Err(self.error(format!("expected `{s}`, found {}", describe(self.peek()))))
        }
    }

    pub fn ident(&mut self) -> Result<String, ParseError> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.next();
                Ok(s)
            }
            t => Err(self.error(format!("expected identifier, found {}", describe(&t)))),
        }
    }

    pub fn formula(&mut self) -> Result<PFormula, ParseError> {
        let lhs = self.or_formula()?;
        if self.eat_sym("=>") {
            let rhs = self.formula()?;
            return Ok(PFormula::Implies(Box::new(lhs), Box::new(rhs)));
        }
        Ok(lhs)
    }

    fn or_formula(&mut self) -> Result<PFormula, ParseError> {
        let mut parts = vec![self.and_formula()?];
        while self.eat_sym("||") {
            parts.push(self.and_formula()?);
        }
        Ok(if parts.len() == 1 {
            parts.pop().unwrap()
        } else {
            PFormula::Or(parts)
        })
    }

    fn and_formula(&mut self) -> Result<PFormula, ParseError> {
        let mut parts = vec![self.unary_formula()?];
        while self.eat_sym("&&") || self.eat_sym("&") || self.eat_ident("and") {
            parts.push(self.unary_formula()?);
        }
        Ok(if parts.len() == 1 {
            parts.pop().unwrap()
        } else {
            PFormula::And(parts)
        })
    }

    fn unary_formula(&mut self) -> Result<PFormula, ParseError> {
        if self.eat_sym("!") || self.eat_sym("~") || self.eat_ident("not") {
            return Ok(PFormula::Not(Box::new(self.unary_formula()?)));
        }
        self.primary_formula()
    }

    fn primary_formula(&mut self) -> Result<PFormula, ParseError> {
        if self.eat_ident("true") {
            return Ok(PFormula::True);
        }
        if self.eat_ident("false") {
            return Ok(PFormula::False);
        }
        if self.is_sym("(") {
            let save = self.pos;
            self.next();
            if let Ok(f) = self.formula() {
                if self.eat_sym(")") && !self.at_term_continuation() {
                    return Ok(f);
                }
            }
            self.pos = save;
        }
        if let (Tok::Ident(p), Tok::Sym("(")) = (self.peek().clone(), self.peek_at(1).clone()) {
            self.next();
            self.next();
            let mut args = Vec::new();
            if !self.is_sym(")") {
                args.push(self.term()?);
                while self.eat_sym(",") {
                    args.push(self.term()?);
                }
            }
            self.expect_sym(")")?;
            return Ok(PFormula::Pred(p, args));
        }
        let a = self.term()?;
        let op = match self.peek() {
            Tok::Sym("<=") => CmpOp::Le,
            Tok::Sym("<") => CmpOp::Lt,
            Tok::Sym(">=") => CmpOp::Ge,
            Tok::Sym(">") => CmpOp::Gt,
            Tok::Sym("=") | Tok::Sym("==") => CmpOp::Eq,
            Tok::Sym("!=") | Tok::Sym("<>") => CmpOp::Ne,
            t => return Err(self.error(format!("expected comparison, found {}", describe(t)))),
        };
        self.next();
        let b = self.term()?;
        Ok(PFormula::Cmp(a, op, b))
    }

    fn at_term_continuation(&self) -> bool {
        matches!(
            self.peek(),
            Tok::Sym("+" | "-" | "*" | "<=" | "<" | ">=" | ">" | "=" | "==" | "!=" | "<>")
        )
    }

    pub fn term(&mut self) -> Result<Poly, ParseError> {
        let mut acc = self.product()?;
        loop {
            if self.eat_sym("+") {
                acc = acc.add(&self.product()?);
            } else if self.eat_sym("-") {
                acc = acc.sub(&self.product()?);
            } else {
                return Ok(acc);
            }
        }
    }

    fn product(&mut self) -> Result<Poly, ParseError> {
        let mut acc = self.unary_term()?;
        while self.eat_sym("*") {
            acc = acc.mul(&self.unary_term()?);
        }
        Ok(acc)
    }

    fn unary_term(&mut self) -> Result<Poly, ParseError> {
        if self.eat_sym("-") {
            return Ok(self.unary_term()?.scale(-1));
        }
        match self.peek().clone() {
            Tok::Int(n) => {
                self.next();
                Ok(Poly::constant(n))
            }
            Tok::Ident(x) if !matches!(self.peek_at(1), Tok::Sym("(")) && !is_keyword(&x) => {
                self.next();
                Ok(Poly::var(&x))
            }
            Tok::Sym("(") => {
                self.next();
                let t = self.term()?;
                self.expect_sym(")")?;
                Ok(t)
            }
            t => Err(self.error(format!("expected term, found {}", describe(&t)))),
        }
    }
}

fn is_keyword(s: &str) -> bool {
    matches!(s, "true" | "false" | "exists" | "not" | "and")
}

pub fn describe(t: &Tok) -> String {
    match t {
        Tok::Ident(s) => format!("`{s}`"),
        Tok::Int(n) => format!("`{n}`"),
        Tok::Sym(s) => format!("`{s}`"),
        Tok::Eof => "end of input".into(),
    }
}

/// Parse a standalone linear formula.
pub fn parse_formula(src: &str) -> Result<Formula, ParseError> {
    let mut p = Parser::new(src)?;
    let f = p.formula()?;
    if !p.at_eof() {
        return Err(p.error(format!("unexpected {}", describe(p.peek()))));
    }
    f.to_formula().map_err(|m| ParseError {
        line: 1,
        col: 1,
        msg: m,
    })
}

/// A parsed clause file: the clauses plus any directive lines.
#[derive(Clone, Debug, Default)]
pub struct HccsFile {
    pub hccs: Hccs,
    pub directives: String,
}

pub fn parse_hccs(src: &str) -> Result<HccsFile, ParseError> {
    let mut out = HccsFile::default();
    for (i, raw) in src.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if line.starts_with('@') {
            out.directives.push_str(line);
            out.directives.push('\n');
            continue;
        }
        let c = parse_clause(line).map_err(|mut e| {
            e.line = i + 1;
            e
        })?;
        out.hccs.clauses.push(c);
    }
    Ok(out)
}

/// Parse one clause in the line format.
pub fn parse_clause(src: &str) -> Result<HornClause, ParseError> {
    let mut p = Parser::new(src)?;
    let c = clause(&mut p)?;
    if !p.at_eof() {
        return Err(p.error(format!("unexpected {} after clause", describe(p.peek()))));
    }
    Ok(c)
}

/// Parse a clause starting at the parser's position; used by `@clause`.
pub fn clause(p: &mut Parser) -> Result<HornClause, ParseError> {
    let conv = |p: &Parser, f: &PFormula| f.to_formula().map_err(|m| p.error(m));
    let head = if p.eat_ident("exists") {
        let mut vars = vec![p.ident()?];
        while p.eat_sym(",") {
            vars.push(p.ident()?);
        }
        p.expect_sym(".")?;
        let f = p.formula()?;
        let f = conv(p, &f)?;
        let mut parts = match f {
            Formula::And(parts)
                if !matches!(parts.as_slice(), [Formula::Leq(..), Formula::Leq(..)]) =>
            {
                parts
            }
            f => vec![f],
        };
        let app = match parts.iter().position(|f| matches!(f, Formula::Pred(_))) {
            Some(i) => match parts.remove(i) {
                Formula::Pred(a) => Some(a),
                _ => unreachable!(),
            },
            None => None,
        };
        let guard = Formula::and(parts);
        if guard.has_preds() {
            return Err(p.error("an existential head has at most one predicate application"));
        }
        Head::Exists { vars, app, guard }
    } else {
        let f = p.formula()?;
        match conv(p, &f)? {
            Formula::Pred(a) => Head::App(a),
            f if !f.has_preds() => Head::Pure(f),
            f => return Err(p.error(format!("unsupported clause head `{f}`"))),
        }
    };
    let mut apps = Vec::new();
    let mut guard = Vec::new();
    if p.eat_sym("<=") {
        loop {
            let f = p.formula()?;
            let f = conv(p, &f)?;
            let items = match f {
                Formula::And(parts)
                    if !matches!(parts.as_slice(), [Formula::Leq(..), Formula::Leq(..)]) =>
                {
                    parts
                }
                f => vec![f],
            };
            for it in items {
                match it {
                    Formula::Pred(a) => apps.push(a),
                    f if f.has_preds() => {
                        return Err(p.error(
                            "a predicate application in a body must be a top-level conjunct",
                        ))
                    }
                    f => guard.push(f),
                }
            }
            if !p.eat_sym(",") {
                break;
            }
        }
    }
    Ok(HornClause {
        head,
        body: Body {
            apps,
            guard: Formula::and(guard),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn separator_after_comparison_head() {
        let c = parse_clause("x <= 1 <= P(x), x >= 0").unwrap();
        assert!(matches!(c.head, Head::Pure(_)));
        assert_eq!(c.body.apps.len(), 1);
    }

    #[test]
    fn parses_sum_clauses() {
        let f = parse_hccs(
            "Q(x,0) <= P(x), x = 0\nP(x-1) <= P(x), x != 0\nQ(x, x+y) <= P(x), Q(x-1, y), x != 0\n@maximize P\n",
        )
        .unwrap();
        assert_eq!(f.hccs.clauses.len(), 3);
        assert_eq!(f.directives.trim(), "@maximize P");
        assert_eq!(
            f.hccs.clauses[2].pretty(),
            "Q(x, x + y) ⇐ P(x) ∧ Q(x - 1, y) ∧ x ≠ 0"
        );
    }

    #[test]
    fn parses_existential_head() {
        let c = parse_clause("exists n . R(x, n) & n >= 0 <= true").unwrap();
        let Head::Exists { vars, app, .. } = &c.head else {
            panic!()
        };
        assert_eq!(vars, &vec!["n".to_string()]);
        assert_eq!(app.as_ref().unwrap().pred, "R");
    }

    #[test]
    fn pretty_output_reparses() {
        let c = parse_clause("Q(x, x + y) ⇐ P(x) ∧ Q(x - 1, y) ∧ x ≠ 0").unwrap();
        assert_eq!(c.body.apps.len(), 2);
    }

    #[test]
    fn parenthesized_terms_and_formulas() {
        let f = parse_formula("(x + 1) <= y && (y < 3 || !(x = 2))").unwrap();
        assert_eq!(f.vars().len(), 2);
        assert!(parse_formula("k1*i <= 0").is_err());
    }

    #[test]
    fn error_positions() {
        let e = parse_clause("P(x) <= x >").unwrap_err();
        assert_eq!(e.line, 1);
        assert!(e.col > 5);
    }
}
