use std::collections::{BTreeMap, BTreeSet};

use super::ml::{MlTypes, SType};
use super::types::{RType, TypeEnv};
use crate::hccs::{Formula, PredApp, Term};
use crate::surface::{AnnType, DirectiveSet, Program, Refine};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TemplateError {
    #[error("annotation for `{fun}` does not match its ML type {ml}")]
    Shape { fun: String, ml: String },
    #[error("annotation for unknown function `{0}`")]
    UnknownFun(String),
}

/// Hands out predicate variable names `P_<fun>_<k>` and fresh binders.
pub struct Namer {
    pub fun: String,
    pub next: usize,
    pub used: BTreeSet<String>,
}

impl Namer {
    pub fn new(fun: &str, used: BTreeSet<String>) -> Namer {
        Namer {
            fun: fun.to_string(),
            next: 1,
            used,
        }
    }

    pub fn pred(&mut self) -> String {
        let p = format!("P_{}_{}", self.fun, self.next);
        self.next += 1;
        p
    }

    /// `base` itself if unused, else `base1`, `base2`, ...
    pub fn binder(&mut self, base: &str) -> String {
        let mut name = base.to_string();
        let mut k = 1;
        while self.used.contains(&name) {
            name = format!("{base}{k}");
            k += 1;
        }
        self.used.insert(name.clone());
        name
    }
}

fn app(pred: String, scope: &[String], nu: &str) -> Formula {
    let mut args: Vec<Term> = scope.iter().map(|x| Term::var(x.clone())).collect();
    args.push(Term::var(nu));
    Formula::Pred(PredApp::new(pred, args))
}

/// A template of ML type `st` whose integer positions get fresh predicate
/// variables over the integer binders in `scope` and those preceding them
/// inside the type. `binder` names the position when it is an integer.
pub fn template_of(st: &SType, binder: &str, scope: &[String], namer: &mut Namer) -> RType {
    match st {
        SType::Arrow(a, r) => {
            let pb = namer.binder("x");
            let mut inner = scope.to_vec();
            let param = template_of(a, &pb, scope, namer);
            if param.is_int() {
                inner.push(pb.clone());
            }
            let rb = namer.binder("y");
            let result = template_of(r, &rb, &inner, namer);
            RType::fun(&pb, param, result)
        }
        _ => RType::refined(binder, app(namer.pred(), scope, binder)),
    }
}

/// Template for a definition: parameters keep their program names and the
/// final result binder is `r`.
fn def_template(
    st: &SType,
    params: &[String],
    ann: Option<&AnnType>,
    namer: &mut Namer,
    scope: &mut Vec<String>,
    depth: usize,
) -> Result<RType, ()> {
    let suggested = params.get(depth).cloned();
    match (st, ann) {
        (SType::Arrow(a, r), None) => {
            let b = match &suggested {
                Some(x) => x.clone(),
                None => namer.binder("r"),
            };
            let param = if a.as_ref() == &SType::Int {
                RType::refined(&b, app(namer.pred(), scope, &b))
            } else {
                template_of(a, &b, scope, namer)
            };
            if param.is_int() {
                scope.push(b.clone());
            }
            let result = def_template(r, params, None, namer, scope, depth + 1)?;
            Ok(RType::fun(&b, param, result))
        }
        (
            SType::Arrow(a, r),
            Some(AnnType::Fun {
                binder,
                param,
                result,
            }),
        ) => {
            let b = binder
                .clone()
                .or_else(|| ann_binder(param))
                .or(suggested)
                .unwrap_or_else(|| namer.binder("r"));
            namer.used.insert(b.clone());
            let p = ann_template(a, param, &b, scope, namer)?;
            if p.is_int() {
                scope.push(b.clone());
            }
            let res = def_template(r, params, Some(result), namer, scope, depth + 1)?;
            Ok(RType::fun(&b, p, res))
        }
        (SType::Arrow(..), Some(AnnType::Int { .. })) => Err(()),
        (_, None) => {
            let b = namer.binder("r");
            Ok(RType::refined(&b, app(namer.pred(), scope, &b)))
        }
        (_, Some(ann)) => {
            let b = match ann {
                AnnType::Int {
                    binder: Some(b), ..
                } => b.clone(),
                _ => namer.binder("r"),
            };
            ann_template(st, ann, &b, scope, namer)
        }
    }
}

/// Template from an annotation; `_` positions get fresh predicate variables.
/// `binder` names the position when it is an integer.
fn ann_template(
    st: &SType,
    ann: &AnnType,
    binder: &str,
    scope: &[String],
    namer: &mut Namer,
) -> Result<RType, ()> {
    match (st, ann) {
        (SType::Arrow(..), AnnType::Int { .. })
        | (SType::Int, AnnType::Fun { .. })
        | (SType::Var(_), _) => Err(()),
        (SType::Int, AnnType::Int { binder: b, refine }) => {
            let refine = match refine {
                Refine::Top => Formula::True,
                Refine::Fresh => app(namer.pred(), scope, binder),
                Refine::Formula(f) => match b {
                    Some(v) if v != binder => {
                        f.subst(&BTreeMap::from([(v.clone(), Term::var(binder))]))
                    }
                    _ => f.clone(),
                },
            };
            Ok(RType::refined(binder, refine))
        }
        (
            SType::Arrow(a, r),
            AnnType::Fun {
                binder: fb,
                param,
                result,
            },
        ) => {
            let pb = fb
                .clone()
                .or_else(|| ann_binder(param))
                .unwrap_or_else(|| namer.binder("x"));
            namer.used.insert(pb.clone());
            let p = ann_template(a, param, &pb, scope, namer)?;
            let mut inner = scope.to_vec();
            if p.is_int() {
                inner.push(pb.clone());
            }
            let rb = ann_binder(result).unwrap_or_else(|| namer.binder("y"));
            let res = ann_template(r, result, &rb, &inner, namer)?;
            Ok(RType::fun(&pb, p, res))
        }
    }
}

fn ann_binder(a: &AnnType) -> Option<String> {
    match a {
        AnnType::Int { binder, .. } => binder.clone(),
        AnnType::Fun { .. } => None,
    }
}

/// Γ_D: a refinement type template for every definition. Annotations
/// replace generated templates position by position; fixed predicates are
/// substituted.
pub fn make_templates(
    p: &Program,
    ml: &MlTypes,
    d: &DirectiveSet,
) -> Result<TypeEnv, TemplateError> {
    for f in d.types.keys() {
        if p.get(f).is_none() {
            return Err(TemplateError::UnknownFun(f.clone()));
        }
    }
    let mut env = TypeEnv::new();
    for def in &p.defs {
        let st = &ml.funs[&def.name];
        let used: BTreeSet<String> = def.params.iter().cloned().collect();
        let mut namer = Namer::new(&def.name, used);
        let t = def_template(
            st,
            &def.params,
            d.types.get(&def.name),
            &mut namer,
            &mut Vec::new(),
            0,
        )
        .map_err(|_| TemplateError::Shape {
            fun: def.name.clone(),
            ml: st.to_string(),
        })?;
        env.bind(&def.name, t.apply(&d.fixed));
    }
    Ok(env)
}
