//! The optimization directive language.
//!
//! ```text
//! @type sum : (x:{x | P(x)}) -> {y | Q(x, y)}
//! @maximize P
//! @minimize Q
//! @prioritize Q < P
//! @clause Inv(x, i, c) <= c = 0 && i = x
//! @template Bnd(i, c) = 0 <= c && c <= k0 + k1*i
//! @fix Q(x, y) = false
//! @exists P
//! ```
//!
//! In a type, `int` is the unrefined integer type and `_` (or `{v | _}`)
//! asks for a fresh predicate variable at that position.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::hccs::{self, ClosedPred, Formula, HornClause, PFormula, ParseError, Parser, Tok};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Direction {
    Max,
    Min,
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::Max => "MAX",
            Direction::Min => "MIN",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Refine {
    Top,
    Fresh,
    Formula(Formula),
}

/// A user type annotation; it must have the shape of the ML type.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum AnnType {
    Int {
        binder: Option<String>,
        refine: Refine,
    },
    Fun {
        binder: Option<String>,
        param: Box<AnnType>,
        result: Box<AnnType>,
    },
}

/// A parametric predicate such as `0 ≤ c ≤ k0 + k1·i` with unknowns `k0, k1`.
#[derive(Clone, Debug, PartialEq)]
pub struct FixedTemplate {
    pub params: Vec<String>,
    pub body: PFormula,
    pub unknowns: BTreeSet<String>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct DirectiveSet {
    pub types: BTreeMap<String, AnnType>,
    pub directions: BTreeMap<String, Direction>,
    /// Edges `a ⊏ b` of the user's priority order, in source order.
    pub priority: Vec<(String, String)>,
    pub clauses: Vec<HornClause>,
    pub templates: BTreeMap<String, FixedTemplate>,
    pub fixed: BTreeMap<String, ClosedPred>,
    pub exists: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DirectiveError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("cyclic priority involving `{0}`")]
    Cycle(String),
    #[error("unknown predicate variable `{0}`")]
    UnknownPred(String),
    #[error("`{0}` is declared more than once")]
    Duplicate(String),
}

impl DirectiveSet {
    pub fn is_empty(&self) -> bool {
        *self == DirectiveSet::default()
    }

    /// Predicate variables this directive set introduces by itself.
    pub fn declared(&self) -> BTreeSet<String> {
        let mut out: BTreeSet<String> = self.templates.keys().cloned().collect();
        out.extend(self.fixed.keys().cloned());
        for t in self.types.values() {
            t.preds(&mut out);
        }
        out
    }

    /// Predicate variables the directives refer to.
    pub fn mentioned(&self) -> BTreeSet<String> {
        let mut out: BTreeSet<String> = self.directions.keys().cloned().collect();
        for (a, b) in &self.priority {
            out.insert(a.clone());
            out.insert(b.clone());
        }
        for c in &self.clauses {
            out.extend(c.pvs());
        }
        out.extend(self.exists.iter().cloned());
        out
    }

    /// Check every mentioned predicate variable against `known` plus the
    /// declared ones.
    pub fn validate(&self, known: &BTreeSet<String>) -> Result<(), DirectiveError> {
        let declared = self.declared();
        for p in self.mentioned() {
            if !known.contains(&p) && !declared.contains(&p) {
                return Err(DirectiveError::UnknownPred(p));
            }
        }
        Ok(())
    }

    /// Merge `other` into `self`; later directions and definitions win.
    pub fn extend(&mut self, other: DirectiveSet) {
        self.types.extend(other.types);
        self.directions.extend(other.directions);
        self.priority.extend(other.priority);
        self.clauses.extend(other.clauses);
        self.templates.extend(other.templates);
        self.fixed.extend(other.fixed);
        self.exists.extend(other.exists);
    }
}

impl AnnType {
    pub fn preds(&self, out: &mut BTreeSet<String>) {
        match self {
            AnnType::Int {
                refine: Refine::Formula(f),
                ..
            } => out.extend(f.preds()),
            AnnType::Int { .. } => {}
            AnnType::Fun { param, result, .. } => {
                param.preds(out);
                result.preds(out);
            }
        }
    }
}

/// Parse directives without checking predicate names.
pub fn parse_directives(text: &str) -> Result<DirectiveSet, DirectiveError> {
    let mut p = Parser::new(text)?;
    let mut d = DirectiveSet::default();
    while !p.at_eof() {
        p.expect_sym("@")?;
        let kw = p.ident()?;
        match kw.as_str() {
            "type" => {
                let f = p.ident()?;
                p.expect_sym(":")?;
                let t = ann_type(&mut p)?;
                if d.types.insert(f.clone(), t).is_some() {
                    return Err(DirectiveError::Duplicate(f));
                }
            }
            "maximize" | "minimize" => {
                let dir = if kw == "maximize" {
                    Direction::Max
                } else {
                    Direction::Min
                };
                for name in name_list(&mut p)? {
                    d.directions.insert(name, dir);
                }
            }
            "prioritize" => {
                let mut chain = vec![p.ident()?];
                while p.eat_sym("<") {
                    chain.push(p.ident()?);
                }
                if chain.len() < 2 {
                    return Err(p.error("expected `<` in priority chain").into());
                }
                for w in chain.windows(2) {
                    d.priority.push((w[0].clone(), w[1].clone()));
                }
            }
            "clause" => d.clauses.push(hccs::clause(&mut p)?),
            "template" | "fix" => {
                let name = p.ident()?;
                let params = param_list(&mut p)?;
                p.expect_sym("=")?;
                let body = p.formula()?;
                let mut ids = BTreeSet::new();
                body.idents(&mut ids);
                let unknowns: BTreeSet<String> =
                    ids.into_iter().filter(|x| !params.contains(x)).collect();
                if d.templates.contains_key(&name) || d.fixed.contains_key(&name) {
                    return Err(DirectiveError::Duplicate(name));
                }
                if kw == "fix" {
                    if let Some(u) = unknowns.iter().next() {
                        return Err(p
                            .error(format!("`{u}` is not a parameter of `{name}`"))
                            .into());
                    }
                    let f = body.to_formula().map_err(|m| p.error(m))?;
                    if f.has_preds() {
                        return Err(p
                            .error("a fixed predicate must not mention predicate variables")
                            .into());
                    }
                    d.fixed.insert(name, ClosedPred::new(params, f));
                } else {
                    let mut preds = BTreeSet::new();
                    body.preds(&mut preds);
                    if !preds.is_empty() {
                        return Err(p
                            .error("a template must not mention predicate variables")
                            .into());
                    }
                    d.templates.insert(
                        name,
                        FixedTemplate {
                            params,
                            body,
                            unknowns,
                        },
                    );
                }
            }
            "exists" => d.exists.extend(name_list(&mut p)?),
            other => return Err(p.error(format!("unknown directive `@{other}`")).into()),
        }
    }
    check_acyclic(&d.priority)?;
    Ok(d)
}

/// Parse and check that every mentioned predicate variable is declared in
/// the text or listed in `known`.
pub fn parse_directives_in(
    text: &str,
    known: &BTreeSet<String>,
) -> Result<DirectiveSet, DirectiveError> {
    let d = parse_directives(text)?;
    d.validate(known)?;
    Ok(d)
}

fn name_list(p: &mut Parser) -> Result<Vec<String>, ParseError> {
    let mut out = vec![p.ident()?];
    loop {
        p.eat_sym(",");
        match p.peek() {
            Tok::Ident(_) => out.push(p.ident()?),
            _ => return Ok(out),
        }
    }
}

fn param_list(p: &mut Parser) -> Result<Vec<String>, ParseError> {
    p.expect_sym("(")?;
    let mut out = Vec::new();
    if !p.is_sym(")") {
        out.push(p.ident()?);
        while p.eat_sym(",") {
            out.push(p.ident()?);
        }
    }
    p.expect_sym(")")?;
    Ok(out)
}

fn ann_type(p: &mut Parser) -> Result<AnnType, ParseError> {
    let (binder, param) = ann_arg(p)?;
    if p.eat_sym("->") {
        let result = ann_type(p)?;
        return Ok(AnnType::Fun {
            binder,
            param: Box::new(param),
            result: Box::new(result),
        });
    }
    if binder.is_some() {
        return Err(p.error("a named parameter must be followed by `->`"));
    }
    Ok(param)
}

/// One arrow operand, with its binder when written `(x : τ)`.
fn ann_arg(p: &mut Parser) -> Result<(Option<String>, AnnType), ParseError> {
    if p.is_sym("(") {
        if let (Tok::Ident(x), Tok::Sym(":")) = (p.peek_at(1).clone(), p.peek_at(2).clone()) {
            p.next();
            p.next();
            p.next();
            let t = ann_type(p)?;
            p.expect_sym(")")?;
            let t = match t {
                AnnType::Int {
                    binder: None,
                    refine,
                } => AnnType::Int {
                    binder: Some(x.clone()),
                    refine,
                },
                t => t,
            };
            return Ok((Some(x), t));
        }
        p.next();
        let t = ann_type(p)?;
        p.expect_sym(")")?;
        return Ok((None, t));
    }
    if p.eat_ident("int") {
        return Ok((
            None,
            AnnType::Int {
                binder: None,
                refine: Refine::Top,
            },
        ));
    }
    if p.eat_ident("_") {
        return Ok((
            None,
            AnnType::Int {
                binder: None,
                refine: Refine::Fresh,
            },
        ));
    }
    p.expect_sym("{")?;
    let v = p.ident()?;
    if p.eat_sym(":") && !p.eat_ident("int") {
        return Err(p.error("expected `int`"));
    }
    p.expect_sym("|")?;
    let refine = if p.eat_ident("_") {
        Refine::Fresh
    } else {
        let f = p.formula()?;
        Refine::Formula(f.to_formula().map_err(|m| p.error(m))?)
    };
    p.expect_sym("}")?;
    Ok((
        None,
        AnnType::Int {
            binder: Some(v),
            refine,
        },
    ))
}

fn check_acyclic(edges: &[(String, String)]) -> Result<(), DirectiveError> {
    let mut succ: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for (a, b) in edges {
        succ.entry(a).or_default().push(b);
    }
    // 0 = unvisited, 1 = on stack, 2 = done
    let mut state: BTreeMap<&str, u8> = BTreeMap::new();
    fn dfs<'a>(
        n: &'a str,
        succ: &BTreeMap<&'a str, Vec<&'a str>>,
        state: &mut BTreeMap<&'a str, u8>,
    ) -> Result<(), String> {
        match state.get(n) {
            Some(1) => return Err(n.to_string()),
            Some(2) => return Ok(()),
            _ => {}
        }
        state.insert(n, 1);
        for m in succ.get(n).into_iter().flatten() {
            dfs(m, succ, state)?;
        }
        state.insert(n, 2);
        Ok(())
    }
    for n in succ.keys() {
        dfs(n, &succ, &mut state).map_err(DirectiveError::Cycle)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn directions_and_priority() {
        let d = parse_directives("@maximize P  @minimize Q  @prioritize P < Q").unwrap();
        assert_eq!(d.directions["P"], Direction::Max);
        assert_eq!(d.directions["Q"], Direction::Min);
        assert_eq!(d.priority, vec![("P".to_string(), "Q".to_string())]);
    }

    #[test]
    fn empty() {
        assert!(parse_directives("").unwrap().is_empty());
        assert!(parse_directives("  \n ").unwrap().is_empty());
    }

    #[test]
    fn template_unknowns() {
        let d = parse_directives("@template Bnd(i,c) = 0 <= c && c <= k0 + k1*i").unwrap();
        let t = &d.templates["Bnd"];
        assert_eq!(t.params, vec!["i", "c"]);
        assert_eq!(
            t.unknowns.iter().cloned().collect::<Vec<_>>(),
            vec!["k0", "k1"]
        );
    }

    #[test]
    fn cycle_rejected() {
        let e = parse_directives("@prioritize A < B\n@prioritize B < A").unwrap_err();
        assert!(matches!(e, DirectiveError::Cycle(_)));
    }

    #[test]
    fn unknown_pred_rejected() {
        let e = parse_directives_in("@maximize Z", &BTreeSet::new()).unwrap_err();
        assert_eq!(e, DirectiveError::UnknownPred("Z".into()));
        let ok = parse_directives_in(
            "@type f : (x:{x | P(x)}) -> int\n@maximize P",
            &BTreeSet::new(),
        );
        assert!(ok.is_ok());
    }

    #[test]
    fn higher_order_type() {
        let d = parse_directives(
            "@type repeat : (f:(x:{x | P1(x)}) -> {y | P2(x,y)}) -> (n:int) -> (e:{e | P3(n,e)}) -> {r | r >= 0}",
        )
        .unwrap();
        let AnnType::Fun { binder, param, .. } = &d.types["repeat"] else {
            panic!()
        };
        assert_eq!(binder.as_deref(), Some("f"));
        assert!(matches!(param.as_ref(), AnnType::Fun { .. }));
        assert_eq!(d.declared().len(), 3);
    }

    #[test]
    fn clause_and_fix() {
        let d = parse_directives(
            "@clause Inv(x,i,c) <= c = 0 && i = x\n@fix Q(x,y) = false\n@exists P",
        )
        .unwrap();
        assert_eq!(d.clauses.len(), 1);
        assert!(d.fixed["Q"].body.is_false());
        assert_eq!(d.exists, vec!["P"]);
    }

    #[test]
    fn malformed_clause() {
        assert!(parse_directives("@clause P(x) <= x <").is_err());
    }
}
