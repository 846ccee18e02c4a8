//! S5 structures, validation, and their CK-expansions.

use crate::coalition::{AgentId, Coalition, MAX_AGENTS};
use std::fmt;
use thiserror::Error;

pub type World = usize;

/// A partition of `0..n` stored as a block id per world.
///
/// Blocks are numbered in order of their least element and each block
/// lists its worlds in increasing order, so equal partitions compare equal.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Partition {
    block_of: Vec<u32>,
    blocks: Vec<Vec<World>>,
}

impl Partition {
    /// Canonicalise an arbitrary labelling: worlds with equal labels share a block.
    pub fn from_labels<T: Eq + std::hash::Hash + Clone>(labels: &[T]) -> Self {
        let mut ids = std::collections::HashMap::new();
        let mut block_of = Vec::with_capacity(labels.len());
        let mut blocks: Vec<Vec<World>> = Vec::new();
        for (w, l) in labels.iter().enumerate() {
            let next = ids.len() as u32;
            let id = *ids.entry(l.clone()).or_insert(next);
            if id as usize == blocks.len() {
                blocks.push(Vec::new());
            }
            blocks[id as usize].push(w);
            block_of.push(id);
        }
        Partition { block_of, blocks }
    }

    pub fn discrete(n: usize) -> Self {
        Partition {
            block_of: (0..n as u32).collect(),
            blocks: (0..n).map(|w| vec![w]).collect(),
        }
    }

    pub fn trivial(n: usize) -> Self {
        Partition::from_labels(&vec![0u8; n])
    }

    pub fn from_blocks(n: usize, blocks: &[Vec<World>]) -> Self {
        let mut label = vec![usize::MAX; n];
        for (i, b) in blocks.iter().enumerate() {
            for &w in b {
                label[w] = i;
            }
        }
        for (w, l) in label.iter_mut().enumerate() {
            if *l == usize::MAX {
                *l = blocks.len() + w;
            }
        }
        Partition::from_labels(&label)
    }

    pub fn n(&self) -> usize {
        self.block_of.len()
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn block_id(&self, w: World) -> usize {
        self.block_of[w] as usize
    }

    pub fn block_of(&self, w: World) -> &[World] {
        &self.blocks[self.block_of[w] as usize]
    }

    pub fn block(&self, id: usize) -> &[World] {
        &self.blocks[id]
    }

    pub fn blocks(&self) -> &[Vec<World>] {
        &self.blocks
    }

    pub fn labels(&self) -> &[u32] {
        &self.block_of
    }

    pub fn same(&self, u: World, v: World) -> bool {
        self.block_of[u] == self.block_of[v]
    }

    /// Finest common coarsening (transitive closure of the union).
    pub fn join(&self, other: &Partition) -> Partition {
        let mut uf = UnionFind::new(self.n());
        for p in [self, other] {
            for b in &p.blocks {
                for w in &b[1..] {
                    uf.union(b[0], *w);
                }
            }
        }
        uf.partition()
    }

    /// True if every block of `self` lies inside a block of `other`.
    pub fn refines(&self, other: &Partition) -> bool {
        self.blocks
            .iter()
            .all(|b| b.iter().all(|&w| other.same(b[0], w)))
    }
}

/// Plain union-find with path halving.
#[derive(Clone, Debug)]
pub struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
        }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    pub fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }

    pub fn partition(&mut self) -> Partition {
        let labels: Vec<usize> = (0..self.parent.len()).map(|x| self.find(x)).collect();
        Partition::from_labels(&labels)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    /// Strict mode: the reflexive pair `(w, w)` was not listed.
    StrictnessViolation { agent: AgentId, world: World },
    /// The closure contains a pair the input relation lacks.
    MissingPair { agent: AgentId, pair: (World, World) },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::StrictnessViolation { agent, world } => {
                write!(f, "agent {agent}: missing loop ({world},{world})")
            }
            Violation::MissingPair { agent, pair } => {
                write!(f, "agent {agent}: missing ({},{})", pair.0, pair.1)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn missing_pairs(&self) -> Vec<(World, World)> {
        self.violations
            .iter()
            .filter_map(|v| match v {
                Violation::MissingPair { pair, .. } => Some(*pair),
                _ => None,
            })
            .collect()
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum KripkeError {
    #[error("world id {world} out of range (n = {n})")]
    DanglingWorldId { world: World, n: usize },
    #[error("relation is not an equivalence: {} violation(s)", .0.violations.len())]
    NotEquivalence(ValidationReport),
    #[error("structure has no worlds")]
    EmptyStructure,
    #[error("too many agents ({0}, at most {MAX_AGENTS})")]
    TooManyAgents(usize),
    #[error("malformed structure: {0}")]
    Malformed(String),
}

#[derive(Clone, Copy, Debug, Default)]
pub struct ValidateOptions {
    /// Require explicit loops.
    pub strict: bool,
    /// Accept non-transitive input and close it instead of reporting.
    pub close: bool,
}

/// A finite multi-agent S5 Kripke structure.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct S5Structure {
    n: usize,
    agents: Vec<String>,
    partitions: Vec<Partition>,
    props: Vec<String>,
    /// `val[i][w]` is true iff proposition `i` holds at `w`.
    val: Vec<Vec<bool>>,
    /// Explicit loops that were present in validated input, per agent.
    loops: Vec<Vec<World>>,
}

impl S5Structure {
    /// Build from per-agent partitions; valuation given as world sets per proposition.
    pub fn from_partitions(
        agents: Vec<String>,
        partitions: Vec<Partition>,
        props: Vec<String>,
        valuation: &[Vec<World>],
    ) -> Result<Self, KripkeError> {
        if agents.len() > MAX_AGENTS {
            return Err(KripkeError::TooManyAgents(agents.len()));
        }
        if agents.len() != partitions.len() || props.len() != valuation.len() {
            return Err(KripkeError::Malformed(
                "agent/partition or prop/valuation count mismatch".into(),
            ));
        }
        let n = partitions.first().map(|p| p.n()).unwrap_or(0);
        let n = if partitions.is_empty() {
            valuation.iter().flatten().map(|w| w + 1).max().unwrap_or(0)
        } else {
            n
        };
        if partitions.iter().any(|p| p.n() != n) {
            return Err(KripkeError::Malformed("partitions of different sizes".into()));
        }
        Self::assemble(agents, partitions, props, valuation, n, None)
    }

    /// Like `from_partitions`, for structures with no agents the world count must be explicit.
    pub fn with_worlds(
        n: usize,
        agents: Vec<String>,
        partitions: Vec<Partition>,
        props: Vec<String>,
        valuation: &[Vec<World>],
    ) -> Result<Self, KripkeError> {
        if partitions.iter().any(|p| p.n() != n) {
            return Err(KripkeError::Malformed("partition size mismatch".into()));
        }
        Self::assemble(agents, partitions, props, valuation, n, None)
    }

    fn assemble(
        agents: Vec<String>,
        partitions: Vec<Partition>,
        props: Vec<String>,
        valuation: &[Vec<World>],
        n: usize,
        loops: Option<Vec<Vec<World>>>,
    ) -> Result<Self, KripkeError> {
        if agents.len() > MAX_AGENTS {
            return Err(KripkeError::TooManyAgents(agents.len()));
        }
        let mut val = vec![vec![false; n]; props.len()];
        for (i, ws) in valuation.iter().enumerate() {
            for &w in ws {
                if w >= n {
                    return Err(KripkeError::DanglingWorldId { world: w, n });
                }
                val[i][w] = true;
            }
        }
        let k = agents.len();
        Ok(S5Structure {
            n,
            agents,
            partitions,
            props,
            val,
            loops: loops.unwrap_or_else(|| vec![Vec::new(); k]),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn num_agents(&self) -> usize {
        self.agents.len()
    }

    pub fn agents(&self) -> &[String] {
        &self.agents
    }

    pub fn props(&self) -> &[String] {
        &self.props
    }

    pub fn num_props(&self) -> usize {
        self.props.len()
    }

    pub fn partition(&self, a: AgentId) -> &Partition {
        &self.partitions[a]
    }

    pub fn partitions(&self) -> &[Partition] {
        &self.partitions
    }

    pub fn holds(&self, prop: usize, w: World) -> bool {
        self.val[prop][w]
    }

    pub fn atoms(&self, w: World) -> Vec<bool> {
        self.val.iter().map(|v| v[w]).collect()
    }

    /// Worlds satisfying each proposition.
    pub fn valuation(&self) -> Vec<Vec<World>> {
        self.val
            .iter()
            .map(|v| (0..self.n).filter(|&w| v[w]).collect())
            .collect()
    }

    pub fn explicit_loops(&self, a: AgentId) -> &[World] {
        &self.loops[a]
    }

    pub fn agent_index(&self, name: &str) -> Option<AgentId> {
        self.agents.iter().position(|x| x == name)
    }

    pub fn prop_index(&self, name: &str) -> Option<usize> {
        self.props.iter().position(|x| x == name)
    }

    /// Edge list per agent: every unordered pair inside a block, plus retained loops.
    pub fn edge_list(&self, a: AgentId) -> Vec<(World, World)> {
        let mut out = Vec::new();
        for b in self.partitions[a].blocks() {
            for (i, &u) in b.iter().enumerate() {
                for &v in &b[i + 1..] {
                    out.push((u, v));
                }
            }
        }
        out.extend(self.loops[a].iter().map(|&w| (w, w)));
        out.sort_unstable();
        out
    }

    /// Same signature (agents and propositions, by name and order).
    pub fn same_signature(&self, other: &S5Structure) -> bool {
        self.agents == other.agents && self.props == other.props
    }

    pub fn with_retained_loops(mut self, loops: Vec<Vec<World>>) -> Self {
        self.loops = loops;
        self
    }
}

/// Check that raw per-agent edge lists describe equivalence relations and build the structure.
pub fn validate_s5(
    agents: Vec<String>,
    raw_edges: &[Vec<(World, World)>],
    n_worlds: usize,
    props: Vec<String>,
    valuation: &[Vec<World>],
    opts: ValidateOptions,
) -> Result<S5Structure, KripkeError> {
    if agents.len() > MAX_AGENTS {
        return Err(KripkeError::TooManyAgents(agents.len()));
    }
    if raw_edges.len() != agents.len() {
        return Err(KripkeError::Malformed("one edge list per agent expected".into()));
    }
    for &(u, v) in raw_edges.iter().flatten() {
        for w in [u, v] {
            if w >= n_worlds {
                return Err(KripkeError::DanglingWorldId { world: w, n: n_worlds });
            }
        }
    }
    let mut report = ValidationReport::default();
    let mut partitions = Vec::new();
    let mut loops = Vec::new();
    for (a, edges) in raw_edges.iter().enumerate() {
        let mut present = std::collections::HashSet::new();
        let mut uf = UnionFind::new(n_worlds);
        let mut agent_loops = Vec::new();
        for &(u, v) in edges {
            present.insert((u.min(v), u.max(v)));
            uf.union(u, v);
            if u == v {
                agent_loops.push(u);
            }
        }
        agent_loops.sort_unstable();
        agent_loops.dedup();
        let part = uf.partition();
        if opts.strict {
            for w in 0..n_worlds {
                if !present.contains(&(w, w)) {
                    report
                        .violations
                        .push(Violation::StrictnessViolation { agent: a, world: w });
                }
            }
        }
        if !opts.close {
            for b in part.blocks() {
                for (i, &u) in b.iter().enumerate() {
                    for &v in &b[i + 1..] {
                        if !present.contains(&(u, v)) {
                            report.violations.push(Violation::MissingPair {
                                agent: a,
                                pair: (u, v),
                            });
                        }
                    }
                }
            }
        }
        partitions.push(part);
        loops.push(agent_loops);
    }
    if !report.violations.is_empty() {
        return Err(KripkeError::NotEquivalence(report));
    }
    S5Structure::assemble(agents, partitions, props, valuation, n_worlds, Some(loops))
}

/// An S5 structure together with the partitions for every coalition.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CKStructure {
    base: S5Structure,
    classes: Vec<Partition>,
}

/// Derive `R_α` for every coalition as the connected components of the agents' union.
pub fn ck_expand(m: &S5Structure) -> CKStructure {
    let n = m.n();
    let k = m.num_agents();
    let mut classes: Vec<Partition> = Vec::with_capacity(1 << k);
    for alpha in Coalition::all(k) {
        let p = if alpha.is_empty() {
            Partition::discrete(n)
        } else if alpha.len() == 1 {
            m.partition(alpha.agents().next().unwrap()).clone()
        } else {
            // α = β ∪ {a} with β already computed.
            let a = alpha.agents().last().unwrap();
            let beta = alpha.without(a);
            classes[beta.index()].join(m.partition(a))
        };
        classes.push(p);
    }
    CKStructure {
        base: m.clone(),
        classes,
    }
}

impl CKStructure {
    pub fn base(&self) -> &S5Structure {
        &self.base
    }

    pub fn n(&self) -> usize {
        self.base.n()
    }

    pub fn num_agents(&self) -> usize {
        self.base.num_agents()
    }

    pub fn agents(&self) -> &[String] {
        self.base.agents()
    }

    pub fn grand(&self) -> Coalition {
        Coalition::full(self.num_agents())
    }

    pub fn coalitions(&self) -> impl Iterator<Item = Coalition> {
        Coalition::all(self.num_agents())
    }

    pub fn num_coalitions(&self) -> usize {
        1 << self.num_agents()
    }

    pub fn partition(&self, alpha: Coalition) -> &Partition {
        &self.classes[alpha.index()]
    }

    pub fn class_id(&self, w: World, alpha: Coalition) -> usize {
        self.classes[alpha.index()].block_id(w)
    }

    pub fn same_class(&self, u: World, v: World, alpha: Coalition) -> bool {
        self.classes[alpha.index()].same(u, v)
    }

    pub fn holds(&self, prop: usize, w: World) -> bool {
        self.base.holds(prop, w)
    }

    pub fn num_props(&self) -> usize {
        self.base.num_props()
    }

    /// Sorted worlds of `[w]_α ∩ [v]_β`.
    pub fn class_intersection(&self, w: World, alpha: Coalition, v: World, beta: Coalition) -> Vec<World> {
        let (x, y) = (coset(self, w, alpha), coset(self, v, beta));
        let (small, other, ob) = if x.len() <= y.len() { (x, v, beta) } else { (y, w, alpha) };
        small
            .iter()
            .copied()
            .filter(|&u| self.same_class(u, other, ob))
            .collect()
    }

    pub fn classes_intersect(&self, w: World, alpha: Coalition, v: World, beta: Coalition) -> bool {
        let (x, y) = (coset(self, w, alpha), coset(self, v, beta));
        let (small, other, ob) = if x.len() <= y.len() { (x, v, beta) } else { (y, w, alpha) };
        small.iter().any(|&u| self.same_class(u, other, ob))
    }

    /// `[w]_α ⊆ [v]_β`.
    pub fn class_subset(&self, w: World, alpha: Coalition, v: World, beta: Coalition) -> bool {
        let x = coset(self, w, alpha);
        let y = coset(self, v, beta);
        x.len() <= y.len() && x.iter().all(|&u| self.same_class(u, v, beta))
    }
}

/// The α-class of `w`, as a sorted slice.
pub fn coset(ck: &CKStructure, w: World, alpha: Coalition) -> &[World] {
    ck.partition(alpha).block_of(w)
}

pub fn is_connected(ck: &CKStructure) -> Result<bool, KripkeError> {
    if ck.n() == 0 {
        return Err(KripkeError::EmptyStructure);
    }
    Ok(ck.partition(ck.grand()).num_blocks() == 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(xs: &[&str]) -> Vec<String> {
        xs.iter().map(|s| s.to_string()).collect()
    }

    pub(crate) fn chain3() -> S5Structure {
        validate_s5(
            names(&["a", "b"]),
            &[vec![(0, 1)], vec![(1, 2)]],
            3,
            names(&["p0"]),
            &[vec![0]],
            ValidateOptions::default(),
        )
        .unwrap()
    }

    #[test]
    fn singleton_is_valid() {
        let m = validate_s5(names(&["a"]), &[vec![]], 1, vec![], &[], ValidateOptions::default())
            .unwrap();
        assert_eq!(m.partition(0).blocks(), &[vec![0]]);
    }

    #[test]
    fn reflexive_closure_non_strict() {
        let m = validate_s5(
            names(&["a"]),
            &[vec![(0, 1)]],
            3,
            vec![],
            &[],
            ValidateOptions::default(),
        )
        .unwrap();
        assert_eq!(m.partition(0).blocks(), &[vec![0, 1], vec![2]]);
    }

    #[test]
    fn strict_mode_reports_loops_and_transitivity() {
        let err = validate_s5(
            names(&["a"]),
            &[vec![(0, 1), (1, 2)]],
            3,
            vec![],
            &[],
            ValidateOptions { strict: true, close: false },
        )
        .unwrap_err();
        let KripkeError::NotEquivalence(rep) = err else { panic!() };
        assert_eq!(rep.missing_pairs(), vec![(0, 2)]);
        let loops = rep
            .violations
            .iter()
            .filter(|v| matches!(v, Violation::StrictnessViolation { .. }))
            .count();
        assert_eq!(loops, 3);
    }

    #[test]
    fn strict_mode_accepts_full_relation() {
        let m = validate_s5(
            names(&["a"]),
            &[vec![(0, 0), (1, 1), (0, 1)]],
            2,
            vec![],
            &[],
            ValidateOptions { strict: true, close: false },
        )
        .unwrap();
        assert_eq!(m.explicit_loops(0), &[0, 1]);
        assert!(m.edge_list(0).contains(&(1, 1)));
    }

    #[test]
    fn dangling_world() {
        let err = validate_s5(names(&["a"]), &[vec![(0, 5)]], 3, vec![], &[], ValidateOptions::default())
            .unwrap_err();
        assert_eq!(err, KripkeError::DanglingWorldId { world: 5, n: 3 });
    }

    #[test]
    fn expansion_of_chain() {
        let ck = ck_expand(&chain3());
        let ab = Coalition::full(2);
        assert_eq!(coset(&ck, 1, ab), &[0, 1, 2]);
        assert_eq!(coset(&ck, 2, Coalition::EMPTY), &[2]);
        assert_eq!(coset(&ck, 0, Coalition::singleton(0)), &[0, 1]);
        assert_eq!(is_connected(&ck), Ok(true));
    }

    #[test]
    fn disconnected_pair() {
        let m = validate_s5(names(&["a"]), &[vec![]], 2, vec![], &[], ValidateOptions::default())
            .unwrap();
        assert_eq!(is_connected(&ck_expand(&m)), Ok(false));
        let empty = S5Structure::with_worlds(0, names(&["a"]), vec![Partition::discrete(0)], vec![], &[])
            .unwrap();
        assert_eq!(is_connected(&ck_expand(&empty)), Err(KripkeError::EmptyStructure));
    }

    #[test]
    fn canonical_partitions() {
        let p = Partition::from_labels(&[7, 3, 7, 1]);
        assert_eq!(p.blocks(), &[vec![0, 2], vec![1], vec![3]]);
        assert_eq!(p, Partition::from_blocks(4, &[vec![3], vec![1], vec![0, 2]]));
        assert!(Partition::discrete(4).refines(&p));
    }
}
