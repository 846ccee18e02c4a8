//! Coset cycles, n-acyclicity, the 2-acyclicity identity and `agt`.

use crate::coalition::Coalition;
use crate::kripke::{CKStructure, World};
use thiserror::Error;

/// Cyclic tuple `(w_i, α_i)`; each `w_i` is the least world of its hinge coset
/// `[w_i]_{α_{i-1} ∩ α_i}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CosetCycle {
    pub steps: Vec<(World, Coalition)>,
}

impl CosetCycle {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Re-check the defining conditions against `ck`.
    pub fn is_valid(&self, ck: &CKStructure) -> bool {
        is_coset_cycle(ck, &self.steps)
    }
}

/// Direct evaluation of the coset-cycle conditions on a cyclic tuple.
pub fn is_coset_cycle(ck: &CKStructure, steps: &[(World, Coalition)]) -> bool {
    let m = steps.len();
    if m < 2 {
        return false;
    }
    (0..m).all(|i| {
        let (w, a) = steps[i];
        let (_, prev) = steps[(i + m - 1) % m];
        let (w1, a1) = steps[(i + 1) % m];
        ck.same_class(w, w1, a) && !ck.classes_intersect(w, prev.intersection(a), w1, a.intersection(a1))
    })
}

struct Search<'a> {
    ck: &'a CKStructure,
    coalitions: Vec<Coalition>,
    /// `inside[α][class][β]`: least worlds of the β-classes inside an α-class (β ⊆ α).
    inside: Vec<Vec<Vec<Vec<World>>>>,
}

impl<'a> Search<'a> {
    fn new(ck: &'a CKStructure) -> Self {
        let k = ck.num_agents();
        let ncoal = 1usize << k;
        let coalitions: Vec<Coalition> = Coalition::all(k).filter(|c| !c.is_empty()).collect();
        let mut inside = vec![Vec::new(); ncoal];
        for &alpha in &coalitions {
            let part = ck.partition(alpha);
            let mut per_class = Vec::with_capacity(part.num_blocks());
            for block in part.blocks() {
                let mut per_beta = vec![Vec::new(); ncoal];
                for beta in alpha.subsets() {
                    let bp = ck.partition(beta);
                    per_beta[beta.index()] = block.iter().copied().filter(|&u| bp.block_of(u)[0] == u).collect();
                }
                per_class.push(per_beta);
            }
            inside[alpha.index()] = per_class;
        }
        Search { ck, coalitions, inside }
    }

    fn rep(&self, w: World, beta: Coalition) -> World {
        self.ck.partition(beta).block_of(w)[0]
    }

    /// Search cycles of length exactly `m`.
    fn find(&self, m: usize) -> Option<CosetCycle> {
        for &a_last in &self.coalitions {
            for &a0 in &self.coalitions {
                if m == 2 && a_last == a0 {
                    continue;
                }
                if comparable(a_last, a0) {
                    continue;
                }
                let beta0 = a_last.intersection(a0);
                for w0 in 0..self.ck.n() {
                    if self.rep(w0, beta0) != w0 {
                        continue;
                    }
                    let mut path = vec![(w0, a0)];
                    if self.extend(m, a_last, &mut path) {
                        return Some(CosetCycle { steps: path });
                    }
                }
            }
        }
        None
    }

    fn extend(&self, m: usize, a_last: Coalition, path: &mut Vec<(World, Coalition)>) -> bool {
        let i = path.len() - 1;
        let (wi, ai) = path[i];
        let prev = if i == 0 { a_last } else { path[i - 1].1 };
        let hinge_i = prev.intersection(ai);
        let (start, a0) = path[0];
        let class = self.ck.class_id(wi, ai);
        if i + 1 == m - 1 {
            // Last step: α_{m-1} = a_last, then close at w_0.
            let next = a_last;
            if comparable(ai, next) || comparable(next, a0) {
                return false;
            }
            if m == 2 && next == ai {
                return false;
            }
            let beta = ai.intersection(next);
            for &w in &self.inside[ai.index()][class][beta.index()] {
                if w < start || self.ck.classes_intersect(wi, hinge_i, w, beta) {
                    continue;
                }
                // Closing edge w -a_last-> w_0 and the two hinge conditions at the seam.
                if !self.ck.same_class(w, start, next) {
                    continue;
                }
                let beta0 = next.intersection(a0);
                if self.ck.classes_intersect(w, beta, start, beta0) {
                    continue;
                }
                path.push((w, next));
                return true;
            }
            return false;
        }
        for &next in &self.coalitions {
            if comparable(ai, next) {
                continue;
            }
            let beta = ai.intersection(next);
            for &w in &self.inside[ai.index()][class][beta.index()] {
                if w < start || self.ck.classes_intersect(wi, hinge_i, w, beta) {
                    continue;
                }
                path.push((w, next));
                if self.extend(m, a_last, path) {
                    return true;
                }
                path.pop();
            }
        }
        false
    }
}

/// Consecutive labels of a coset cycle are never ⊆-comparable: if `α ⊆ β`
/// the hinge after the α-step is the whole α-class and meets the one before.
fn comparable(a: Coalition, b: Coalition) -> bool {
    a.is_subset(b) || b.is_subset(a)
}

/// Shortest coset cycle of length `2..=n`, if any.
pub fn find_coset_cycle(ck: &CKStructure, n: usize) -> Option<CosetCycle> {
    let s = Search::new(ck);
    (2..=n).find_map(|m| s.find(m))
}

pub fn is_n_acyclic(ck: &CKStructure, n: usize) -> bool {
    find_coset_cycle(ck, n).is_none()
}

/// Largest `n ≤ cap` for which `ck` is n-acyclic (1 if a 2-cycle exists).
pub fn acyclicity_level(ck: &CKStructure, cap: usize) -> usize {
    let s = Search::new(ck);
    for m in 2..=cap {
        if s.find(m).is_some() {
            return m - 1;
        }
    }
    cap
}

/// First `(w, α, β)` with `[w]_α ∩ [w]_β ≠ [w]_{α∩β}`.
pub fn two_acyclic_violation(ck: &CKStructure) -> Option<(World, Coalition, Coalition)> {
    let coals: Vec<Coalition> = ck.coalitions().collect();
    for w in 0..ck.n() {
        for (i, &a) in coals.iter().enumerate() {
            for &b in &coals[i + 1..] {
                if comparable(a, b) {
                    continue;
                }
                let meet = ck.partition(a.intersection(b)).block_of(w).len();
                let both = ck
                    .partition(a)
                    .block_of(w)
                    .iter()
                    .filter(|&&u| ck.same_class(w, u, b))
                    .count();
                if both != meet {
                    return Some((w, a, b));
                }
            }
        }
    }
    None
}

pub fn check_2acyclic_char(ck: &CKStructure) -> bool {
    two_acyclic_violation(ck).is_none()
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AgtError {
    #[error("structure is not 2-acyclic: witness world {0:?}")]
    Not2Acyclic(Option<(World, Coalition, Coalition)>),
    #[error("worlds are not in one connected component")]
    NotConnectedTuple,
    #[error("no least connecting coalition")]
    NoLeastElement,
    #[error("empty tuple")]
    EmptyTuple,
}

/// `agt` without the 2-acyclicity guard: the intersection of all connecting
/// coalitions, provided it connects the tuple itself.
pub fn agt_unchecked(ck: &CKStructure, ws: &[World]) -> Result<Coalition, AgtError> {
    let first = *ws.first().ok_or(AgtError::EmptyTuple)?;
    let mut meet = ck.grand();
    let mut any = false;
    for alpha in ck.coalitions() {
        if ws.iter().all(|&w| ck.same_class(first, w, alpha)) {
            meet = meet.intersection(alpha);
            any = true;
        }
    }
    if !any {
        return Err(AgtError::NotConnectedTuple);
    }
    if ws.iter().all(|&w| ck.same_class(first, w, meet)) {
        Ok(meet)
    } else {
        Err(AgtError::NoLeastElement)
    }
}

/// Least coalition connecting all of `ws`.
pub fn agt(ck: &CKStructure, ws: &[World]) -> Result<Coalition, AgtError> {
    if let Some(v) = two_acyclic_violation(ck) {
        return Err(AgtError::Not2Acyclic(Some(v)));
    }
    agt_unchecked(ck, ws)
}

/// Pairwise `agt` table for a 2-acyclic, connected structure.
#[derive(Clone, Debug)]
pub struct AgtTable {
    n: usize,
    table: Vec<u8>,
}

impl AgtTable {
    pub fn new(ck: &CKStructure) -> Result<Self, AgtError> {
        if let Some(v) = two_acyclic_violation(ck) {
            return Err(AgtError::Not2Acyclic(Some(v)));
        }
        let n = ck.n();
        let mut table = vec![0u8; n * n];
        let coals: Vec<Coalition> = ck.coalitions().collect();
        for w in 0..n {
            for v in 0..n {
                let mut meet = ck.grand();
                let mut any = false;
                for &alpha in &coals {
                    if ck.same_class(w, v, alpha) {
                        meet = meet.intersection(alpha);
                        any = true;
                    }
                }
                if !any {
                    return Err(AgtError::NotConnectedTuple);
                }
                table[w * n + v] = meet.mask();
            }
        }
        Ok(AgtTable { n, table })
    }

    pub fn get(&self, w: World, v: World) -> Coalition {
        Coalition(self.table[w * self.n + v])
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum AgtStepViolation {
    /// Clause (1): `agt(w,v') ≠ agt(w,v) ∪ {a}`.
    AddAgent { w: World, v: World, a: usize, v_prime: World },
    /// Clause (2): two distinct `v' ∈ [v]_a` reach `agt(w,v) \ {a}`.
    TwoDescents { w: World, v: World, a: usize, first: World, second: World },
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct AgtStepReport {
    pub checked: usize,
    pub violations: Vec<AgtStepViolation>,
}

/// Exhaustive check of both step clauses over all `(w, v, a)`.
pub fn verify_agt_steps(ck: &CKStructure) -> Result<AgtStepReport, AgtError> {
    let t = AgtTable::new(ck)?;
    let mut report = AgtStepReport::default();
    for w in 0..ck.n() {
        for v in 0..ck.n() {
            let base = t.get(w, v);
            for a in 0..ck.num_agents() {
                let class = ck.partition(Coalition::singleton(a)).block_of(v);
                report.checked += 1;
                if !base.contains(a) {
                    for &v2 in class {
                        if v2 != v && t.get(w, v2) != base.with(a) {
                            report.violations.push(AgtStepViolation::AddAgent { w, v, a, v_prime: v2 });
                        }
                    }
                } else {
                    let hits: Vec<World> = class.iter().copied().filter(|&v2| t.get(w, v2) == base.without(a)).collect();
                    if hits.len() > 1 {
                        report.violations.push(AgtStepViolation::TwoDescents {
                            w,
                            v,
                            a,
                            first: hits[0],
                            second: hits[1],
                        });
                    }
                }
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kripke::{ck_expand, validate_s5, ValidateOptions};

    fn build(agents: &[&str], edges: &[Vec<(usize, usize)>], n: usize) -> CKStructure {
        ck_expand(
            &validate_s5(
                agents.iter().map(|s| s.to_string()).collect(),
                edges,
                n,
                vec![],
                &[],
                ValidateOptions::default(),
            )
            .unwrap(),
        )
    }

    #[test]
    fn double_edge_is_a_two_cycle() {
        let ck = build(&["a", "b"], &[vec![(0, 1)], vec![(0, 1)]], 2);
        let c = find_coset_cycle(&ck, 2).unwrap();
        assert_eq!(c.len(), 2);
        assert!(c.is_valid(&ck));
        assert!(!check_2acyclic_char(&ck));
    }

    #[test]
    fn chain_agt() {
        let ck = build(&["a", "b"], &[vec![(0, 1)], vec![(1, 2)]], 3);
        assert!(check_2acyclic_char(&ck));
        assert_eq!(agt(&ck, &[0, 0]), Ok(Coalition::EMPTY));
        assert_eq!(agt(&ck, &[0, 1]), Ok(Coalition::singleton(0)));
        assert_eq!(agt(&ck, &[0, 2]), Ok(Coalition::full(2)));
        assert!(verify_agt_steps(&ck).unwrap().violations.is_empty());
    }

    #[test]
    fn singleton_is_clean() {
        let ck = build(&["a"], &[vec![]], 1);
        assert!(check_2acyclic_char(&ck));
        assert!(find_coset_cycle(&ck, 6).is_none());
        assert_eq!(verify_agt_steps(&ck).unwrap().violations, vec![]);
    }

    #[test]
    fn cyclic_guard() {
        let ck = build(&["a", "b"], &[vec![(0, 1)], vec![(0, 1)]], 2);
        assert!(matches!(verify_agt_steps(&ck), Err(AgtError::Not2Acyclic(_))));
    }
}
