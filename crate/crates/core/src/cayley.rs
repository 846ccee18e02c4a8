//! Cayley structures: finite group coverings, richness boosting and
//! truncated free-group unfoldings.
//!
//! A group element is stored as its action on `W ⊔ 2^E`: a permutation of
//! the source worlds together with a parity vector over the generators.
//! Elements act from the right, so `w·(gh) = (w·g)·h`.

use crate::bisim::{self_bisimulation, CoveringMap};
use crate::coalition::Coalition;
use crate::kripke::{ck_expand, CKStructure, KripkeError, Partition, S5Structure, UnionFind, World};
use std::collections::HashMap;
use thiserror::Error;

pub const DEFAULT_GROUP_CAP: usize = 200_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum EdgeSet {
    /// Every unordered pair inside every class, loops included.
    Full,
    /// A path through each class in world order; no loops.
    Spanning,
}

impl std::str::FromStr for EdgeSet {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "full" => Ok(EdgeSet::Full),
            "spanning" => Ok(EdgeSet::Spanning),
            _ => Err(format!("unknown edge set '{s}' (expected full or spanning)")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GeneratorId {
    /// Unordered source pair, smaller world first.
    pub edge: (World, World),
    pub agent: usize,
    pub copy: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct GroupElement {
    pub wperm: Vec<u32>,
    pub parity: Vec<u64>,
}

impl GroupElement {
    pub fn identity(worlds: usize, gens: usize) -> Self {
        GroupElement {
            wperm: (0..worlds as u32).collect(),
            parity: vec![0; gens.div_ceil(64)],
        }
    }

    fn generator(worlds: usize, gens: usize, index: usize, edge: (World, World)) -> Self {
        let mut g = Self::identity(worlds, gens);
        g.wperm.swap(edge.0, edge.1);
        g.parity[index / 64] |= 1 << (index % 64);
        g
    }

    /// `self · other`: apply `self` first.
    pub fn mul(&self, other: &GroupElement) -> GroupElement {
        GroupElement {
            wperm: self.wperm.iter().map(|&w| other.wperm[w as usize]).collect(),
            parity: self.parity.iter().zip(&other.parity).map(|(a, b)| a ^ b).collect(),
        }
    }

    pub fn inverse(&self) -> GroupElement {
        let mut inv = vec![0u32; self.wperm.len()];
        for (w, &img) in self.wperm.iter().enumerate() {
            inv[img as usize] = w as u32;
        }
        GroupElement {
            wperm: inv,
            parity: self.parity.clone(),
        }
    }

    /// `w · self`.
    pub fn apply(&self, w: World) -> World {
        self.wperm[w] as World
    }

    pub fn parity_bit(&self, i: usize) -> bool {
        self.parity[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn is_identity(&self) -> bool {
        self.parity.iter().all(|&p| p == 0) && self.wperm.iter().enumerate().all(|(w, &x)| x as usize == w)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Generator {
    pub id: GeneratorId,
    pub image: GroupElement,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CayleyError {
    #[error("source structure is not connected")]
    NotConnected,
    #[error("group has more than {cap} elements")]
    GroupTooLarge { cap: usize },
    #[error("base world {0} out of range")]
    BadBaseWorld(World),
    #[error("unfolding depth must be at least 1")]
    BadDepth,
    #[error(transparent)]
    Kripke(#[from] KripkeError),
}

/// A Cayley CK-structure with its covering map onto the source structure.
#[derive(Clone, Debug)]
pub struct CayleyStructure {
    pub generators: Vec<Generator>,
    /// Action of each world (group element or reduced word) on `W ⊔ 2^E`.
    pub elements: Vec<GroupElement>,
    /// A shortest generator word per world (the reduced word itself for unfoldings).
    pub words: Vec<Vec<u32>>,
    /// `step[g][e]` is the world `g·e`; `None` past the truncation boundary.
    pub step: Vec<Vec<Option<u32>>>,
    pub base_world: World,
    pub covering: CoveringMap,
    /// Depth of a free-group truncation, `None` for a full finite group.
    pub truncated: Option<usize>,
    index: HashMap<GroupElement, u32>,
}

impl CayleyStructure {
    pub fn ck(&self) -> &CKStructure {
        &self.covering.source
    }

    pub fn n(&self) -> usize {
        self.elements.len()
    }

    pub fn map(&self) -> &[World] {
        &self.covering.map
    }

    /// World id of a group element (finite groups only).
    pub fn index_of(&self, g: &GroupElement) -> Option<World> {
        self.index.get(g).map(|&i| i as World)
    }

    pub fn generators_of(&self, alpha: Coalition) -> impl Iterator<Item = usize> + '_ {
        self.generators
            .iter()
            .enumerate()
            .filter(move |(_, g)| alpha.contains(g.id.agent))
            .map(|(i, _)| i)
    }
}

/// Generator set for a source structure.
pub fn generator_ids(m: &S5Structure, edges: EdgeSet, k_copies: usize) -> Vec<GeneratorId> {
    let mut base = Vec::new();
    for a in 0..m.num_agents() {
        for block in m.partition(a).blocks() {
            match edges {
                EdgeSet::Full => {
                    for (i, &u) in block.iter().enumerate() {
                        for &v in &block[i..] {
                            base.push((u, v, a));
                        }
                    }
                }
                EdgeSet::Spanning => {
                    for pair in block.windows(2) {
                        base.push((pair[0], pair[1], a));
                    }
                }
            }
        }
    }
    let mut out = Vec::with_capacity(base.len() * (k_copies + 1));
    for copy in 0..=k_copies {
        for &(u, v, agent) in &base {
            out.push(GeneratorId {
                edge: (u, v),
                agent,
                copy,
            });
        }
    }
    out
}

fn make_generators(m: &S5Structure, ids: Vec<GeneratorId>) -> Vec<Generator> {
    let total = ids.len();
    ids.into_iter()
        .enumerate()
        .map(|(i, id)| Generator {
            image: GroupElement::generator(m.n(), total, i, id.edge),
            id,
        })
        .collect()
}

fn check_source(m: &S5Structure, w0: World) -> Result<(), CayleyError> {
    if w0 >= m.n() {
        return Err(CayleyError::BadBaseWorld(w0));
    }
    if !crate::kripke::is_connected(&ck_expand(m))? {
        return Err(CayleyError::NotConnected);
    }
    Ok(())
}

fn assemble(
    m: &S5Structure,
    w0: World,
    generators: Vec<Generator>,
    elements: Vec<GroupElement>,
    words: Vec<Vec<u32>>,
    step: Vec<Vec<Option<u32>>>,
    truncated: Option<usize>,
    index: HashMap<GroupElement, u32>,
) -> Result<CayleyStructure, CayleyError> {
    let n = elements.len();
    let mut partitions = Vec::with_capacity(m.num_agents());
    for a in 0..m.num_agents() {
        let mut uf = UnionFind::new(n);
        for (e, g) in generators.iter().enumerate() {
            if g.id.agent == a {
                for x in 0..n {
                    if let Some(y) = step[x][e] {
                        uf.union(x, y as usize);
                    }
                }
            }
        }
        partitions.push(uf.partition());
    }
    let map: Vec<World> = elements.iter().map(|g| g.apply(w0)).collect();
    let valuation: Vec<Vec<World>> = (0..m.num_props())
        .map(|i| (0..n).filter(|&x| m.holds(i, map[x])).collect())
        .collect();
    let s5 = S5Structure::with_worlds(n, m.agents().to_vec(), partitions, m.props().to_vec(), &valuation)?;
    Ok(CayleyStructure {
        generators,
        elements,
        words,
        step,
        base_world: w0,
        covering: CoveringMap {
            source: ck_expand(&s5),
            target: ck_expand(m),
            map,
        },
        truncated,
        index,
    })
}

/// Finite Cayley covering of a connected structure, enumerated by BFS.
pub fn build_covering(
    m: &S5Structure,
    w0: World,
    edges: EdgeSet,
    k_copies: usize,
) -> Result<CayleyStructure, CayleyError> {
    build_covering_capped(m, w0, edges, k_copies, DEFAULT_GROUP_CAP)
}

pub fn build_covering_capped(
    m: &S5Structure,
    w0: World,
    edges: EdgeSet,
    k_copies: usize,
    cap: usize,
) -> Result<CayleyStructure, CayleyError> {
    check_source(m, w0)?;
    let generators = make_generators(m, generator_ids(m, edges, k_copies));
    let ng = generators.len();
    let id = GroupElement::identity(m.n(), ng);
    let mut index: HashMap<GroupElement, u32> = HashMap::new();
    let mut elements = vec![id.clone()];
    let mut words: Vec<Vec<u32>> = vec![Vec::new()];
    index.insert(id, 0);
    let mut step: Vec<Vec<Option<u32>>> = Vec::new();
    let mut head = 0;
    while head < elements.len() {
        let mut row = Vec::with_capacity(ng);
        for (e, gen) in generators.iter().enumerate() {
            let h = elements[head].mul(&gen.image);
            let next = match index.get(&h) {
                Some(&j) => j,
                None => {
                    if elements.len() >= cap {
                        return Err(CayleyError::GroupTooLarge { cap });
                    }
                    let j = elements.len() as u32;
                    let mut w = words[head].clone();
                    w.push(e as u32);
                    words.push(w);
                    index.insert(h.clone(), j);
                    elements.push(h);
                    j
                }
            };
            row.push(Some(next));
        }
        step.push(row);
        head += 1;
    }
    assemble(m, w0, generators, elements, words, step, None, index)
}

/// Covering by a Cayley structure with `k_copies + 1` parity-separated copies of each generator.
pub fn boost_richness(m: &S5Structure, w0: World, edges: EdgeSet, k_copies: usize) -> Result<CayleyStructure, CayleyError> {
    build_covering(m, w0, edges, k_copies)
}

/// Reduced words of length at most `depth` over involutive generators.
///
/// Classes are computed inside the truncation, so worlds near the boundary
/// lose part of their neighbourhood; only games of small depth see a covering.
pub fn tree_unfold(
    m: &S5Structure,
    w0: World,
    depth: usize,
    edges: EdgeSet,
    k_copies: usize,
) -> Result<CayleyStructure, CayleyError> {
    tree_unfold_capped(m, w0, depth, edges, k_copies, DEFAULT_GROUP_CAP)
}

pub fn tree_unfold_capped(
    m: &S5Structure,
    w0: World,
    depth: usize,
    edges: EdgeSet,
    k_copies: usize,
    cap: usize,
) -> Result<CayleyStructure, CayleyError> {
    if depth == 0 {
        return Err(CayleyError::BadDepth);
    }
    check_source(m, w0)?;
    let generators = make_generators(m, generator_ids(m, edges, k_copies));
    let ng = generators.len();
    let mut elements = vec![GroupElement::identity(m.n(), ng)];
    let mut words: Vec<Vec<u32>> = vec![Vec::new()];
    let mut parent: Vec<u32> = vec![0];
    let mut step: Vec<Vec<Option<u32>>> = Vec::new();
    let mut head = 0;
    while head < words.len() {
        let mut row = vec![None; ng];
        let word = words[head].clone();
        if let Some(&last) = word.last() {
            row[last as usize] = Some(parent[head]);
        }
        if word.len() < depth {
            for (e, gen) in generators.iter().enumerate() {
                if word.last() == Some(&(e as u32)) {
                    continue;
                }
                if words.len() >= cap {
                    return Err(CayleyError::GroupTooLarge { cap });
                }
                let j = words.len() as u32;
                let mut w = word.clone();
                w.push(e as u32);
                words.push(w);
                parent.push(head as u32);
                elements.push(elements[head].mul(&gen.image));
                row[e] = Some(j);
            }
        }
        step.push(row);
        head += 1;
    }
    assemble(m, w0, generators, elements, words, step, Some(depth), HashMap::new())
}

/// A bisimulation type occurring fewer than `k` times in some class.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RichnessViolation {
    pub alpha: Coalition,
    /// Least world of the offending class.
    pub class_rep: World,
    pub bisim_block: u32,
    pub count: usize,
}

/// Least multiplicity of a realised bisimulation type within a class,
/// over all classes of non-empty coalitions (or all coalitions if `include_empty`).
pub fn richness_profile(ck: &CKStructure, include_empty: bool) -> Option<RichnessViolation> {
    let types = self_bisimulation(ck);
    let mut worst: Option<RichnessViolation> = None;
    for alpha in ck.coalitions() {
        if alpha.is_empty() && !include_empty {
            continue;
        }
        for block in ck.partition(alpha).blocks() {
            let mut counts: Vec<(u32, usize)> = Vec::new();
            for &u in block {
                match counts.iter_mut().find(|(t, _)| *t == types[u]) {
                    Some(c) => c.1 += 1,
                    None => counts.push((types[u], 1)),
                }
            }
            for (t, c) in counts {
                if worst.as_ref().is_none_or(|w| c < w.count) {
                    worst = Some(RichnessViolation {
                        alpha,
                        class_rep: block[0],
                        bisim_block: t,
                        count: c,
                    });
                }
            }
        }
    }
    worst
}

/// `k`-richness; `α = ∅` is skipped unless `include_empty` is set.
pub fn check_richness(ck: &CKStructure, k: usize, include_empty: bool) -> Result<(), RichnessViolation> {
    let types = self_bisimulation(ck);
    for alpha in ck.coalitions() {
        if alpha.is_empty() && !include_empty {
            continue;
        }
        for block in ck.partition(alpha).blocks() {
            let mut counts: HashMap<u32, usize> = HashMap::new();
            for &u in block {
                *counts.entry(types[u]).or_default() += 1;
            }
            let mut bad: Vec<(u32, usize)> = counts.into_iter().filter(|&(_, c)| c < k).collect();
            bad.sort_unstable();
            if let Some(&(t, c)) = bad.first() {
                return Err(RichnessViolation {
                    alpha,
                    class_rep: block[0],
                    bisim_block: t,
                    count: c,
                });
            }
        }
    }
    Ok(())
}

/// Cosets `g·G_α` by BFS over α-generators; used to cross-check the CK-expansion.
pub fn coset_partition(c: &CayleyStructure, alpha: Coalition) -> Partition {
    let n = c.n();
    let gens: Vec<usize> = c.generators_of(alpha).collect();
    let mut label = vec![u32::MAX; n];
    let mut next = 0u32;
    for s in 0..n {
        if label[s] != u32::MAX {
            continue;
        }
        label[s] = next;
        let mut stack = vec![s];
        while let Some(x) = stack.pop() {
            for &e in &gens {
                if let Some(y) = c.step[x][e] {
                    if label[y as usize] == u32::MAX {
                        label[y as usize] = next;
                        stack.push(y as usize);
                    }
                }
            }
        }
        next += 1;
    }
    Partition::from_labels(&label)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bisim::check_covering;
    use crate::kripke::{validate_s5, ValidateOptions};

    fn chain3() -> S5Structure {
        validate_s5(
            vec!["a".into(), "b".into()],
            &[vec![(0, 1)], vec![(1, 2)]],
            3,
            vec!["p0".into()],
            &[vec![0]],
            ValidateOptions::default(),
        )
        .unwrap()
    }

    #[test]
    fn chain_spanning_has_order_12() {
        let c = build_covering(&chain3(), 0, EdgeSet::Spanning, 0).unwrap();
        assert_eq!(c.n(), 12);
        assert_eq!(check_covering(&c.covering), Ok(()));
    }

    #[test]
    fn reflexive_single_world() {
        let m = validate_s5(
            vec!["a".into()],
            &[vec![(0, 0)]],
            1,
            vec![],
            &[],
            ValidateOptions::default(),
        )
        .unwrap();
        let c = build_covering(&m, 0, EdgeSet::Full, 0).unwrap();
        assert_eq!(c.generators.len(), 1);
        assert_eq!(c.generators[0].image.wperm, vec![0]);
        assert_eq!(c.n(), 2);
        assert_eq!(c.map(), &[0, 0]);
    }

    #[test]
    fn unfold_depth_one() {
        let m = validate_s5(
            vec!["a".into()],
            &[vec![(0, 1)]],
            2,
            vec![],
            &[],
            ValidateOptions::default(),
        )
        .unwrap();
        let c = tree_unfold(&m, 0, 1, EdgeSet::Spanning, 0).unwrap();
        assert_eq!(c.words, vec![vec![], vec![0]]);
        assert_eq!(c.map(), &[0, 1]);
    }

    #[test]
    fn disconnected_source_rejected() {
        let m = validate_s5(vec!["a".into()], &[vec![]], 2, vec![], &[], ValidateOptions::default()).unwrap();
        assert_eq!(build_covering(&m, 0, EdgeSet::Full, 0).unwrap_err(), CayleyError::NotConnected);
    }

    #[test]
    fn richness_trivial_cases() {
        let c = build_covering(&chain3(), 0, EdgeSet::Spanning, 0).unwrap();
        assert_eq!(check_richness(c.ck(), 1, true), Ok(()));
        let single = ck_expand(
            &validate_s5(vec!["a".into()], &[vec![]], 1, vec![], &[], ValidateOptions::default()).unwrap(),
        );
        assert!(check_richness(&single, 2, true).is_err());
    }
}
