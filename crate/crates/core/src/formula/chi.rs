//! Characteristic (Hintikka) formulas for bounded bisimilarity.

use super::ast::{Formula, Interner, F};
use crate::bisim::self_levels;
use crate::coalition::Coalition;
use crate::kripke::{CKStructure, World};
use std::collections::HashMap;

/// Builds `χ^ℓ` formulas for worlds of one structure, sharing subformulas
/// between worlds of the same `∼^ℓ` class.
pub struct CharBuilder<'a> {
    ck: &'a CKStructure,
    levels: Vec<Vec<u32>>,
    interner: Interner,
    memo: HashMap<(usize, u32), F>,
}

impl<'a> CharBuilder<'a> {
    pub fn new(ck: &'a CKStructure, max_level: usize) -> Self {
        CharBuilder {
            ck,
            levels: self_levels(ck, max_level),
            interner: Interner::new(),
            memo: HashMap::new(),
        }
    }

    fn class(&self, w: World, l: usize) -> u32 {
        let i = l.min(self.levels.len() - 1);
        self.levels[i][w]
    }

    fn atomic_type(&mut self, w: World) -> F {
        let lits: Vec<F> = (0..self.ck.num_props())
            .map(|i| {
                let p = self.interner.intern(Formula::Prop(i));
                if self.ck.holds(i, w) {
                    p
                } else {
                    self.interner.intern(Formula::Not(p))
                }
            })
            .collect();
        self.interner.and(lits)
    }

    /// `χ^ℓ_w`.
    ///
    /// Note: the class key at level `ℓ` is the level-`min(ℓ, stable)` label
    /// paired with `ℓ`, so formulas of different depth never alias.
    pub fn chi(&mut self, w: World, l: usize) -> F {
        let key = (l, self.class(w, l));
        if let Some(f) = self.memo.get(&key) {
            return f.clone();
        }
        let f = if l == 0 {
            self.atomic_type(w)
        } else {
            let mut conj = vec![self.atomic_type(w)];
            let k = self.ck.num_agents();
            for alpha in Coalition::all(k).filter(|c| !c.is_empty()) {
                let mut seen: Vec<u32> = Vec::new();
                let mut reps: Vec<World> = Vec::new();
                for &u in self.ck.partition(alpha).block(self.ck.class_id(w, alpha)) {
                    let c = self.class(u, l - 1);
                    if !seen.contains(&c) {
                        seen.push(c);
                        reps.push(u);
                    }
                }
                reps.sort_by_key(|&u| self.class(u, l - 1));
                let subs: Vec<F> = reps.iter().map(|&u| self.chi(u, l - 1)).collect();
                for s in &subs {
                    conj.push(self.interner.intern(Formula::Diamond(alpha, s.clone())));
                }
                let disj = self.interner.or(subs);
                conj.push(self.interner.intern(Formula::Box(alpha, disj)));
            }
            self.interner.and(conj)
        };
        self.memo.insert(key, f.clone());
        f
    }

    pub fn interned_nodes(&self) -> usize {
        self.interner.len()
    }
}

/// `χ^ℓ_{ck,w}`: holds at `(N, v)` iff `N, v ∼^ℓ ck, w`.
pub fn characteristic_formula(ck: &CKStructure, w: World, l: usize) -> F {
    CharBuilder::new(ck, l).chi(w, l)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bisim::l_bisimilar;
    use crate::formula::ast::modal_depth;
    use crate::formula::check::model_check;
    use crate::kripke::{ck_expand, validate_s5, ValidateOptions};

    fn chain3() -> CKStructure {
        ck_expand(
            &validate_s5(
                vec!["a".into(), "b".into()],
                &[vec![(0, 1)], vec![(1, 2)]],
                3,
                vec!["p0".into()],
                &[vec![0]],
                ValidateOptions::default(),
            )
            .unwrap(),
        )
    }

    #[test]
    fn base_case_is_literals() {
        let ck = chain3();
        let f = characteristic_formula(&ck, 1, 0);
        assert_eq!(*f, Formula::Not(crate::formula::ast::prop(0)));
        assert_eq!(modal_depth(&f), 0);
    }

    #[test]
    fn depth_and_self_agreement() {
        let ck = chain3();
        for l in 0..4 {
            for w in 0..3 {
                let f = characteristic_formula(&ck, w, l);
                assert_eq!(modal_depth(&f), l);
                for v in 0..3 {
                    assert_eq!(model_check(&ck, v, &f), l_bisimilar(&ck, w, &ck, v, l).unwrap());
                }
            }
        }
    }
}
