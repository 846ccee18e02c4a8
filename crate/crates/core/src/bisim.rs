//! Bisimulation: coarsest stable partitions, bounded bisimilarity and coverings.

use crate::coalition::Coalition;
use crate::kripke::{CKStructure, World};
use std::collections::HashMap;
use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    /// Moves along single-agent relations only.
    S5,
    /// Moves along every coalition relation.
    CK,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BisimError {
    #[error("structures have different agents or propositions")]
    SignatureMismatch,
}

/// Block assignment on the disjoint union of two structures.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BisimPartition {
    pub left_n: usize,
    pub right_n: usize,
    /// Block id per world; left worlds first, then right worlds.
    pub block: Vec<u32>,
    /// Rounds of level-wise refinement until the partition no longer changes.
    pub rounds_to_stabilize: usize,
}

impl BisimPartition {
    pub fn left(&self, w: World) -> u32 {
        self.block[w]
    }

    pub fn right(&self, v: World) -> u32 {
        self.block[self.left_n + v]
    }

    pub fn bisimilar(&self, w: World, v: World) -> bool {
        self.left(w) == self.right(v)
    }

    pub fn num_blocks(&self) -> usize {
        self.block.iter().map(|&b| b as usize + 1).max().unwrap_or(0)
    }
}

/// The relations of a mode, laid out over the disjoint union.
struct UnionView {
    n: usize,
    atoms: Vec<u32>,
    /// Per relation: class id of each union world and the member lists.
    rel_class: Vec<Vec<u32>>,
    rel_members: Vec<Vec<Vec<usize>>>,
}

fn relations(k: usize, mode: Mode) -> Vec<Coalition> {
    match mode {
        Mode::S5 => (0..k).map(Coalition::singleton).collect(),
        Mode::CK => Coalition::all(k).filter(|c| !c.is_empty()).collect(),
    }
}

impl UnionView {
    fn new(parts: &[&CKStructure], mode: Mode) -> Self {
        let k = parts[0].num_agents();
        let n: usize = parts.iter().map(|p| p.n()).sum();
        let mut ids: HashMap<Vec<bool>, u32> = HashMap::new();
        let mut atoms = Vec::with_capacity(n);
        for p in parts {
            for w in 0..p.n() {
                let key = p.base().atoms(w);
                let next = ids.len() as u32;
                atoms.push(*ids.entry(key).or_insert(next));
            }
        }
        let rels = relations(k, mode);
        let mut rel_class = Vec::new();
        let mut rel_members = Vec::new();
        for r in rels {
            let mut class = Vec::with_capacity(n);
            let mut members: Vec<Vec<usize>> = Vec::new();
            let mut offset = 0usize;
            let mut base = 0usize;
            for p in parts {
                let part = p.partition(r);
                for w in 0..p.n() {
                    class.push((base + part.block_id(w)) as u32);
                }
                for b in part.blocks() {
                    members.push(b.iter().map(|&w| w + offset).collect());
                }
                base += part.num_blocks();
                offset += p.n();
            }
            rel_class.push(class);
            rel_members.push(members);
        }
        UnionView {
            n,
            atoms,
            rel_class,
            rel_members,
        }
    }

    /// One round of refinement: new label = old label plus, per relation, the
    /// set of old labels present in the class.
    fn refine(&self, labels: &[u32]) -> Vec<u32> {
        let mut sigs: Vec<Vec<u32>> = vec![Vec::new(); self.n];
        for (r, members) in self.rel_members.iter().enumerate() {
            let mut class_sig: Vec<u32> = Vec::with_capacity(members.len());
            let mut intern: HashMap<Vec<u32>, u32> = HashMap::new();
            for m in members {
                let mut s: Vec<u32> = m.iter().map(|&x| labels[x]).collect();
                s.sort_unstable();
                s.dedup();
                let next = intern.len() as u32;
                class_sig.push(*intern.entry(s).or_insert(next));
            }
            for x in 0..self.n {
                sigs[x].push(class_sig[self.rel_class[r][x] as usize]);
            }
        }
        let mut intern: HashMap<(u32, Vec<u32>), u32> = HashMap::new();
        let mut out = Vec::with_capacity(self.n);
        for (x, sig) in sigs.into_iter().enumerate() {
            let next = intern.len() as u32;
            out.push(*intern.entry((labels[x], sig)).or_insert(next));
        }
        out
    }

    fn atom_labels(&self) -> Vec<u32> {
        canonical(&self.atoms)
    }

    /// Level labels up to `max_level`, stopping early once stable.
    fn levels(&self, max_level: usize) -> Vec<Vec<u32>> {
        let mut out = vec![self.atom_labels()];
        for _ in 0..max_level {
            let next = self.refine(out.last().unwrap());
            let stable = count(&next) == count(out.last().unwrap());
            out.push(next);
            if stable {
                break;
            }
        }
        out
    }

    /// Splitter-queue refinement keyed by (block, relation).
    fn coarsest(&self) -> Vec<u32> {
        let mut block_of: Vec<usize> = self.atom_labels().iter().map(|&b| b as usize).collect();
        let mut blocks: Vec<Vec<usize>> = vec![Vec::new(); count_usize(&block_of)];
        for (x, &b) in block_of.iter().enumerate() {
            blocks[b].push(x);
        }
        let nrel = self.rel_class.len();
        let mut queue: std::collections::VecDeque<(usize, usize)> = std::collections::VecDeque::new();
        let mut queued: std::collections::HashSet<(usize, usize)> = std::collections::HashSet::new();
        for b in 0..blocks.len() {
            for r in 0..nrel {
                queue.push_back((b, r));
                queued.insert((b, r));
            }
        }
        let mut class_hit: Vec<Vec<bool>> = self
            .rel_members
            .iter()
            .map(|m| vec![false; m.len()])
            .collect();
        while let Some((b, r)) = queue.pop_front() {
            queued.remove(&(b, r));
            // Classes of relation r that meet block b.
            let mut hit_classes = Vec::new();
            for &x in &blocks[b] {
                let c = self.rel_class[r][x] as usize;
                if !class_hit[r][c] {
                    class_hit[r][c] = true;
                    hit_classes.push(c);
                }
            }
            let mut touched: HashMap<usize, Vec<usize>> = HashMap::new();
            for &c in &hit_classes {
                class_hit[r][c] = false;
                for &x in &self.rel_members[r][c] {
                    touched.entry(block_of[x]).or_default().push(x);
                }
            }
            let mut touched: Vec<(usize, Vec<usize>)> = touched.into_iter().collect();
            touched.sort_unstable_by_key(|(blk, _)| *blk);
            for (blk, inside) in touched {
                if inside.len() == blocks[blk].len() {
                    continue;
                }
                let new_id = blocks.len();
                let mut mark = std::collections::HashSet::new();
                mark.extend(inside.iter().copied());
                let (kept, moved): (Vec<usize>, Vec<usize>) =
                    blocks[blk].iter().partition(|x| !mark.contains(x));
                for &x in &moved {
                    block_of[x] = new_id;
                }
                blocks[blk] = kept;
                blocks.push(moved);
                for r2 in 0..nrel {
                    for id in [blk, new_id] {
                        if queued.insert((id, r2)) {
                            queue.push_back((id, r2));
                        }
                    }
                }
            }
        }
        canonical(&block_of.iter().map(|&b| b as u32).collect::<Vec<_>>())
    }
}

fn canonical(labels: &[u32]) -> Vec<u32> {
    let mut ids: HashMap<u32, u32> = HashMap::new();
    labels
        .iter()
        .map(|l| {
            let next = ids.len() as u32;
            *ids.entry(*l).or_insert(next)
        })
        .collect()
}

fn count(labels: &[u32]) -> usize {
    labels.iter().map(|&l| l as usize + 1).max().unwrap_or(0)
}

fn count_usize(labels: &[usize]) -> usize {
    labels.iter().map(|&l| l + 1).max().unwrap_or(0)
}

fn check_signature(m: &CKStructure, n: &CKStructure) -> Result<(), BisimError> {
    if m.base().same_signature(n.base()) {
        Ok(())
    } else {
        Err(BisimError::SignatureMismatch)
    }
}

/// Greatest bisimulation between `m` and `n`, as a partition of their disjoint union.
pub fn coarsest_bisimulation(m: &CKStructure, n: &CKStructure, mode: Mode) -> Result<BisimPartition, BisimError> {
    check_signature(m, n)?;
    let view = UnionView::new(&[m, n], mode);
    let block = view.coarsest();
    let levels = view.levels(usize::MAX);
    let rounds = levels.len() - 1;
    debug_assert_eq!(count(levels.last().unwrap()), count(&block));
    Ok(BisimPartition {
        left_n: m.n(),
        right_n: n.n(),
        block,
        rounds_to_stabilize: rounds.saturating_sub(1),
    })
}

/// Bisimulation classes of a single structure (CK mode).
pub fn self_bisimulation(ck: &CKStructure) -> Vec<u32> {
    UnionView::new(&[ck], Mode::CK).coarsest()
}

/// `∼^ℓ` class labels of a single structure for levels `0..=ℓ`.
///
/// The returned vector may be shorter than `ℓ + 1` once refinement has
/// stabilised; later levels equal the last entry.
pub fn self_levels(ck: &CKStructure, l: usize) -> Vec<Vec<u32>> {
    UnionView::new(&[ck], Mode::CK).levels(l)
}

/// `∼^ℓ` labels on the disjoint union, levels `0..=ℓ` (truncated once stable).
pub fn pair_levels(m: &CKStructure, n: &CKStructure, l: usize, mode: Mode) -> Result<Vec<Vec<u32>>, BisimError> {
    check_signature(m, n)?;
    Ok(UnionView::new(&[m, n], mode).levels(l))
}

/// Whether Duplicator survives `ℓ` rounds from `(w, v)`; moves along every coalition relation.
pub fn l_bisimilar(m: &CKStructure, w: World, n: &CKStructure, v: World, l: usize) -> Result<bool, BisimError> {
    l_bisimilar_mode(m, w, n, v, l, Mode::CK)
}

pub fn l_bisimilar_mode(
    m: &CKStructure,
    w: World,
    n: &CKStructure,
    v: World,
    l: usize,
    mode: Mode,
) -> Result<bool, BisimError> {
    let levels = pair_levels(m, n, l, mode)?;
    let last = levels.last().unwrap();
    Ok(last[w] == last[m.n() + v])
}

/// A candidate bisimilar covering `π: source → target`.
#[derive(Clone, Debug)]
pub struct CoveringMap {
    pub source: CKStructure,
    pub target: CKStructure,
    pub map: Vec<World>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CoveringError {
    #[error("structures have different agents or propositions")]
    SignatureMismatch,
    #[error("map has wrong length or points outside the target")]
    MalformedMap,
    #[error("world {missing} of the target has no preimage")]
    NotSurjective { missing: World },
    #[error("not a homomorphism: {0}")]
    NotHomomorphism(HomWitness),
    #[error("world {world} is not bisimilar to its image")]
    NotBisimilar { world: World },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum HomWitness {
    Edge { agent: usize, from: World, to: World },
    Valuation { world: World },
}

impl std::fmt::Display for HomWitness {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            HomWitness::Edge { agent, from, to } => {
                write!(f, "edge ({from},{to}) of agent {agent} not preserved")
            }
            HomWitness::Valuation { world } => write!(f, "valuation differs at world {world}"),
        }
    }
}

/// Verify surjectivity, the homomorphism property and bisimilar fibres.
pub fn check_covering(cm: &CoveringMap) -> Result<(), CoveringError> {
    let (src, tgt) = (&cm.source, &cm.target);
    if !src.base().same_signature(tgt.base()) {
        return Err(CoveringError::SignatureMismatch);
    }
    if cm.map.len() != src.n() || cm.map.iter().any(|&t| t >= tgt.n()) {
        return Err(CoveringError::MalformedMap);
    }
    let mut hit = vec![false; tgt.n()];
    cm.map.iter().for_each(|&t| hit[t] = true);
    if let Some(missing) = hit.iter().position(|h| !h) {
        return Err(CoveringError::NotSurjective { missing });
    }
    for w in 0..src.n() {
        if src.base().atoms(w) != tgt.base().atoms(cm.map[w]) {
            return Err(CoveringError::NotHomomorphism(HomWitness::Valuation { world: w }));
        }
    }
    for a in 0..src.num_agents() {
        let alpha = Coalition::singleton(a);
        for block in src.partition(alpha).blocks() {
            let img = cm.map[block[0]];
            for &u in &block[1..] {
                if !tgt.same_class(img, cm.map[u], alpha) {
                    return Err(CoveringError::NotHomomorphism(HomWitness::Edge {
                        agent: a,
                        from: block[0],
                        to: u,
                    }));
                }
            }
        }
    }
    let bp = coarsest_bisimulation(src, tgt, Mode::S5).map_err(|_| CoveringError::SignatureMismatch)?;
    for w in 0..src.n() {
        if !bp.bisimilar(w, cm.map[w]) {
            return Err(CoveringError::NotBisimilar { world: w });
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kripke::{ck_expand, validate_s5, ValidateOptions};

    fn s(agents: &[&str], edges: &[Vec<(usize, usize)>], n: usize, val: &[Vec<usize>]) -> CKStructure {
        let props = (0..val.len()).map(|i| format!("p{i}")).collect();
        ck_expand(
            &validate_s5(
                agents.iter().map(|x| x.to_string()).collect(),
                edges,
                n,
                props,
                val,
                ValidateOptions { strict: false, close: true },
            )
            .unwrap(),
        )
    }

    #[test]
    fn identity_bisimulation() {
        let m = s(&["a", "b"], &[vec![(0, 1)], vec![(1, 2)]], 3, &[vec![0]]);
        let bp = coarsest_bisimulation(&m, &m, Mode::S5).unwrap();
        for w in 0..3 {
            assert!(bp.bisimilar(w, w));
        }
    }

    #[test]
    fn atomic_violation() {
        let m = s(&["a"], &[vec![]], 1, &[vec![0]]);
        let n = s(&["a"], &[vec![]], 1, &[vec![]]);
        assert!(!coarsest_bisimulation(&m, &n, Mode::CK).unwrap().bisimilar(0, 0));
        assert!(!l_bisimilar(&m, 0, &n, 0, 0).unwrap());
    }

    #[test]
    fn signature_mismatch() {
        let m = s(&["a"], &[vec![]], 1, &[vec![0]]);
        let n = s(&["b"], &[vec![]], 1, &[vec![0]]);
        assert_eq!(coarsest_bisimulation(&m, &n, Mode::S5), Err(BisimError::SignatureMismatch));
    }

    #[test]
    fn twins_collapse() {
        // 0 -a- 1 -a- 2 with 1 and 2 twins (both ¬p), 0 satisfies p.
        let twin = s(&["a"], &[vec![(0, 1), (1, 2)]], 3, &[vec![0]]);
        let base = s(&["a"], &[vec![(0, 1)]], 2, &[vec![0]]);
        let cm = CoveringMap {
            source: twin,
            target: base,
            map: vec![0, 1, 1],
        };
        assert_eq!(check_covering(&cm), Ok(()));
    }

    #[test]
    fn covering_errors() {
        let m = s(&["a"], &[vec![(0, 1)]], 2, &[vec![0]]);
        let id = CoveringMap {
            source: m.clone(),
            target: m.clone(),
            map: vec![0, 1],
        };
        assert_eq!(check_covering(&id), Ok(()));
        let bad_val = CoveringMap {
            source: m.clone(),
            target: m.clone(),
            map: vec![1, 0],
        };
        assert!(matches!(
            check_covering(&bad_val),
            Err(CoveringError::NotHomomorphism(HomWitness::Valuation { .. }))
        ));
        let bad = CoveringMap {
            source: m.clone(),
            target: m,
            map: vec![0, 0],
        };
        assert_eq!(check_covering(&bad), Err(CoveringError::NotSurjective { missing: 1 }));
    }

    #[test]
    fn level_monotone_and_stable() {
        let m = s(&["a", "b"], &[vec![(0, 1), (2, 3)], vec![(1, 2)]], 4, &[vec![0]]);
        let lv = self_levels(&m, 10);
        for i in 1..lv.len() {
            assert!(count(&lv[i]) >= count(&lv[i - 1]));
        }
        let bp = coarsest_bisimulation(&m, &m, Mode::CK).unwrap();
        assert_eq!(canonical(&bp.block[..4]), canonical(lv.last().unwrap()));
    }
}
