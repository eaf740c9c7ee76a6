//! Refinement types, typing environments, ML type inference and template
//! construction.

mod ml;
mod templates;
mod types;

pub use ml::{infer_ml_types, MlError, MlTypes, SType};
pub use templates::{make_templates, template_of, Namer, TemplateError};
pub use types::{sem_env, Entry, RType, TypeEnv};

use crate::gen::{generate, GenError};
use crate::hccs::{check_solution, CheckResult, PredSubst};
use crate::smtio::Smt;
use crate::surface::{DirectiveSet, Program};

/// `⊢ D : θΓ_D`, decided clause by clause: `Some(true)` if every generated
/// and extra clause is valid under θ, `None` if the SMT solver could not
/// decide some clause.
pub fn validate_typing(
    p: &Program,
    theta: &PredSubst,
    env: &TypeEnv,
    d: &DirectiveSet,
    smt: &Smt,
) -> Result<Option<bool>, GenError> {
    let h = generate(p, env, d)?;
    Ok(match check_solution(theta, &h, smt) {
        CheckResult::Valid => Some(true),
        CheckResult::Invalid { .. } => Some(false),
        CheckResult::Indeterminate(_) => None,
    })
}
