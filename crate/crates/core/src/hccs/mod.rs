//! QFLIA terms and formulas, the ∃HCCS data model, the clause text format
//! and solution checking.

mod check;
mod clause;
mod formula;
mod poly;
mod text;

pub use check::{
    check_clause, check_solution, check_solution_quantified, grid_falsify, implies, is_restricted,
    prune, same_up_to_renaming, shape_of, valid, CheckResult, Restriction,
};
pub use clause::{
    apply_subst, default_params, normalize, pretty_subst, ArityError, Body, ClosedPred, Hccs, Head,
    HornClause, NormalizeError, NormalizeOpts, ObHead, Obligation, PredSubst,
};
pub use formula::{simplify_dnf, to_dnf, DnfError, Formula, LinExpr, Lit, PredApp, Term};
pub use poly::{Mono, Poly};
pub use text::{
    clause, cmp, describe, lex, parse_clause, parse_formula, parse_hccs, CmpOp, HccsFile, PFormula,
    ParseError, Parser, Tok, Token,
};
