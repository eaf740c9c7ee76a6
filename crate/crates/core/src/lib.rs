//! Pareto-optimal refinement type inference for a small higher-order
//! functional language.
//!
//! The pipeline parses a program ([`surface`]), builds refinement type
//! templates ([`rtypes`]), generates existentially quantified Horn clauses
//! ([`gen`]) and optimizes their solutions ([`optimizer`]) with a
//! template/Farkas solver ([`solver`]) that talks to an external SMT solver
//! ([`smtio`]). [`eval`] is a reference interpreter used to test inferred
//! types against concrete runs.

pub mod eval;
pub mod gen;
pub mod hccs;
pub mod optimizer;
pub mod rtypes;
pub mod smtio;
pub mod solver;
pub mod surface;

pub use hccs::{ClosedPred, Formula, Hccs, HornClause, PredSubst, Restriction, Term};
pub use optimizer::{Direction, OptimizeResult, PreferenceSpec};
pub use rtypes::{RType, TypeEnv};
pub use surface::{DirectiveSet, Expr, Program, Value};
