//! Concrete syntax of programs and directives.

mod ast;
mod directives;
mod parse;

pub use ast::{Args, Expr, FunDef, Op, Program, Value};
pub use directives::{
    parse_directives, parse_directives_in, AnnType, Direction, DirectiveError, DirectiveSet,
    FixedTemplate, Refine,
};
pub use parse::{parse_program, parse_source, SyntaxError};
