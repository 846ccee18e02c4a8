use super::ast::{Formula, F};
use crate::kripke::{CKStructure, World};
use std::collections::HashMap;
use std::sync::Arc;

/// Bottom-up evaluator computing the truth set of every subformula once.
///
/// Memoisation is keyed by node address, so shared subformulas of a
/// hash-consed DAG are evaluated a single time per call.
pub struct Evaluator<'a> {
    ck: &'a CKStructure,
    memo: HashMap<usize, (F, Arc<Vec<bool>>)>,
}

impl<'a> Evaluator<'a> {
    pub fn new(ck: &'a CKStructure) -> Self {
        Evaluator {
            ck,
            memo: HashMap::new(),
        }
    }

    /// Truth value at every world.
    pub fn eval(&mut self, f: &F) -> Arc<Vec<bool>> {
        let key = Arc::as_ptr(f) as usize;
        if let Some((_, v)) = self.memo.get(&key) {
            return v.clone();
        }
        let n = self.ck.n();
        let v: Vec<bool> = match &**f {
            Formula::Top => vec![true; n],
            Formula::Bot => vec![false; n],
            Formula::Prop(i) => (0..n).map(|w| self.ck.holds(*i, w)).collect(),
            Formula::Not(g) => self.eval(g).iter().map(|b| !b).collect(),
            Formula::And(gs) => {
                let mut acc = vec![true; n];
                for g in gs {
                    let t = self.eval(g);
                    acc.iter_mut().zip(t.iter()).for_each(|(a, b)| *a &= *b);
                }
                acc
            }
            Formula::Or(gs) => {
                let mut acc = vec![false; n];
                for g in gs {
                    let t = self.eval(g);
                    acc.iter_mut().zip(t.iter()).for_each(|(a, b)| *a |= *b);
                }
                acc
            }
            Formula::Box(alpha, g) | Formula::Diamond(alpha, g) => {
                let t = self.eval(g);
                let is_box = matches!(&**f, Formula::Box(..));
                let part = self.ck.partition(*alpha);
                let mut out = vec![false; n];
                for block in part.blocks() {
                    let val = if is_box {
                        block.iter().all(|&u| t[u])
                    } else {
                        block.iter().any(|&u| t[u])
                    };
                    for &u in block {
                        out[u] = val;
                    }
                }
                out
            }
        };
        let v = Arc::new(v);
        self.memo.insert(key, (f.clone(), v.clone()));
        v
    }
}

pub fn model_check(ck: &CKStructure, w: World, f: &F) -> bool {
    Evaluator::new(ck).eval(f)[w]
}

/// Worlds at which `f` holds.
pub fn extension(ck: &CKStructure, f: &F) -> Vec<World> {
    let t = Evaluator::new(ck).eval(f);
    (0..ck.n()).filter(|&w| t[w]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coalition::Coalition;
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
    fn basics() {
        let ck = chain3();
        assert!(model_check(&ck, 1, &top()));
        let ab = Coalition::full(2);
        assert!(model_check(&ck, 2, &diamond(ab, prop(0))));
        let b = Coalition::singleton(1);
        assert!(!model_check(&ck, 2, &diamond(b, prop(0))));
        for w in 0..3 {
            let p = prop(0);
            assert_eq!(
                model_check(&ck, w, &boxed(Coalition::EMPTY, p.clone())),
                model_check(&ck, w, &p)
            );
        }
        assert_eq!(extension(&ck, &boxed(Coalition::singleton(0), not(prop(0)))), vec![2]);
    }
}
