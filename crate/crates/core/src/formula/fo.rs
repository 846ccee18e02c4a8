//! First-order formulas over the coalition signature, with de Bruijn variables.
//!
//! Variable `i` refers to the `i`-th most recently bound quantifier; free
//! variables index into the assignment from its end in the same way.

use super::ast::Formula;
use crate::coalition::Coalition;
use crate::kripke::{CKStructure, World};
use thiserror::Error;

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum FOFormula {
    Top,
    Bot,
    /// `R_α(x, y)`.
    Rel(Coalition, usize, usize),
    /// `P_i(x)`.
    Pred(usize, usize),
    Eq(usize, usize),
    Not(Box<FOFormula>),
    And(Vec<FOFormula>),
    Or(Vec<FOFormula>),
    Exists(Box<FOFormula>),
    Forall(Box<FOFormula>),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FOError {
    #[error("unbound variable {0}")]
    UnboundVariable(usize),
}

impl FOFormula {
    pub fn quantifier_rank(&self) -> usize {
        match self {
            FOFormula::Top
            | FOFormula::Bot
            | FOFormula::Rel(..)
            | FOFormula::Pred(..)
            | FOFormula::Eq(..) => 0,
            FOFormula::Not(f) => f.quantifier_rank(),
            FOFormula::And(fs) | FOFormula::Or(fs) => {
                fs.iter().map(|f| f.quantifier_rank()).max().unwrap_or(0)
            }
            FOFormula::Exists(f) | FOFormula::Forall(f) => 1 + f.quantifier_rank(),
        }
    }

    /// Free variables, as indices relative to the outside of the formula.
    pub fn free_vars(&self) -> Vec<usize> {
        let mut out = Vec::new();
        self.collect_free(0, &mut out);
        out.sort_unstable();
        out.dedup();
        out
    }

    fn collect_free(&self, depth: usize, out: &mut Vec<usize>) {
        let mut var = |x: usize| {
            if x >= depth {
                out.push(x - depth)
            }
        };
        match self {
            FOFormula::Top | FOFormula::Bot => {}
            FOFormula::Rel(_, x, y) | FOFormula::Eq(x, y) => {
                var(*x);
                var(*y);
            }
            FOFormula::Pred(_, x) => var(*x),
            FOFormula::Not(f) => f.collect_free(depth, out),
            FOFormula::And(fs) | FOFormula::Or(fs) => {
                fs.iter().for_each(|f| f.collect_free(depth, out))
            }
            FOFormula::Exists(f) | FOFormula::Forall(f) => f.collect_free(depth + 1, out),
        }
    }
}

/// Translate a modal formula into FO with free variable `x` (a de Bruijn index).
pub fn standard_translation(f: &Formula, x: usize) -> FOFormula {
    match f {
        Formula::Top => FOFormula::Top,
        Formula::Bot => FOFormula::Bot,
        Formula::Prop(i) => FOFormula::Pred(*i, x),
        Formula::Not(g) => FOFormula::Not(Box::new(standard_translation(g, x))),
        Formula::And(gs) => FOFormula::And(gs.iter().map(|g| standard_translation(g, x)).collect()),
        Formula::Or(gs) => FOFormula::Or(gs.iter().map(|g| standard_translation(g, x)).collect()),
        Formula::Box(a, g) => FOFormula::Forall(Box::new(FOFormula::Or(vec![
            FOFormula::Not(Box::new(FOFormula::Rel(*a, x + 1, 0))),
            standard_translation(g, 0),
        ]))),
        Formula::Diamond(a, g) => FOFormula::Exists(Box::new(FOFormula::And(vec![
            FOFormula::Rel(*a, x + 1, 0),
            standard_translation(g, 0),
        ]))),
    }
}

/// Tarskian evaluation; `assignment` lists values with the innermost variable last.
pub fn fo_eval(ck: &CKStructure, assignment: &[World], phi: &FOFormula) -> Result<bool, FOError> {
    let mut env = assignment.to_vec();
    eval(ck, &mut env, phi)
}

fn lookup(env: &[World], x: usize) -> Result<World, FOError> {
    if x < env.len() {
        Ok(env[env.len() - 1 - x])
    } else {
        Err(FOError::UnboundVariable(x - env.len()))
    }
}

fn eval(ck: &CKStructure, env: &mut Vec<World>, phi: &FOFormula) -> Result<bool, FOError> {
    Ok(match phi {
        FOFormula::Top => true,
        FOFormula::Bot => false,
        FOFormula::Rel(a, x, y) => ck.same_class(lookup(env, *x)?, lookup(env, *y)?, *a),
        FOFormula::Pred(i, x) => ck.holds(*i, lookup(env, *x)?),
        FOFormula::Eq(x, y) => lookup(env, *x)? == lookup(env, *y)?,
        FOFormula::Not(f) => !eval(ck, env, f)?,
        FOFormula::And(fs) => {
            for f in fs {
                if !eval(ck, env, f)? {
                    return Ok(false);
                }
            }
            true
        }
        FOFormula::Or(fs) => {
            for f in fs {
                if eval(ck, env, f)? {
                    return Ok(true);
                }
            }
            false
        }
        FOFormula::Exists(f) | FOFormula::Forall(f) => {
            let exists = matches!(phi, FOFormula::Exists(_));
            for w in 0..ck.n() {
                env.push(w);
                let r = eval(ck, env, f);
                env.pop();
                if r? == exists {
                    return Ok(exists);
                }
            }
            !exists
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::ast::*;
    use crate::kripke::{ck_expand, validate_s5, ValidateOptions};

    fn chain3() -> CKStructure {
        let m = validate_s5(
            vec!["a".into(), "b".into()],
            &[vec![(0, 1)], vec![(1, 2)]],
            3,
            vec!["p0".into()],
            &[vec![0]],
            ValidateOptions::default(),
        )
        .unwrap();
        ck_expand(&m)
    }

    #[test]
    fn examples() {
        let ck = chain3();
        let refl = FOFormula::Forall(Box::new(FOFormula::Rel(Coalition::EMPTY, 0, 0)));
        assert_eq!(fo_eval(&ck, &[], &refl), Ok(true));
        let ex = FOFormula::Exists(Box::new(FOFormula::Pred(0, 0)));
        assert_eq!(fo_eval(&ck, &[], &ex), Ok(true));
        let a = Coalition::singleton(0);
        let sep = FOFormula::Exists(Box::new(FOFormula::Exists(Box::new(FOFormula::And(vec![
            FOFormula::Not(Box::new(FOFormula::Rel(a, 1, 0))),
            FOFormula::Rel(Coalition::full(2), 1, 0),
        ])))));
        assert_eq!(fo_eval(&ck, &[], &sep), Ok(true));
        assert_eq!(
            fo_eval(&ck, &[], &FOFormula::Pred(0, 0)),
            Err(FOError::UnboundVariable(0))
        );
    }

    #[test]
    fn translation_shape() {
        let a = Coalition::singleton(0);
        assert_eq!(standard_translation(&Formula::Prop(2), 0), FOFormula::Pred(2, 0));
        let t = standard_translation(&boxed(a, not(prop(0))), 0);
        assert_eq!(t.quantifier_rank(), 1);
        assert_eq!(t.free_vars(), vec![0]);
        let ck = chain3();
        for w in 0..3 {
            assert_eq!(fo_eval(&ck, &[w], &t), Ok(w == 2));
        }
    }
}
