//! Hypergraphs, dual hypergraphs of CK-frames, convex closures and join trees.

use crate::coalition::Coalition;
use crate::kripke::{CKStructure, World};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};
use thiserror::Error;

pub type Vertex = u32;

/// A finite hypergraph with its Gaifman graph.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Hypergraph {
    n: usize,
    edges: Vec<Vec<Vertex>>,
    adj: Vec<Vec<Vertex>>,
    incidence: Vec<Vec<u32>>,
}

impl Hypergraph {
    /// Hyperedges are sorted and deduplicated; empty ones are dropped.
    pub fn new(n: usize, edges: Vec<Vec<Vertex>>) -> Self {
        let mut seen = HashSet::new();
        let mut clean = Vec::new();
        for mut e in edges {
            e.sort_unstable();
            e.dedup();
            if !e.is_empty() && seen.insert(e.clone()) {
                clean.push(e);
            }
        }
        let mut adj: Vec<Vec<Vertex>> = vec![Vec::new(); n];
        let mut incidence: Vec<Vec<u32>> = vec![Vec::new(); n];
        for (i, e) in clean.iter().enumerate() {
            for &x in e {
                incidence[x as usize].push(i as u32);
                for &y in e {
                    if x != y {
                        adj[x as usize].push(y);
                    }
                }
            }
        }
        for a in adj.iter_mut() {
            a.sort_unstable();
            a.dedup();
        }
        Hypergraph {
            n,
            edges: clean,
            adj,
            incidence,
        }
    }

    pub fn num_vertices(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[Vec<Vertex>] {
        &self.edges
    }

    pub fn neighbours(&self, v: Vertex) -> &[Vertex] {
        &self.adj[v as usize]
    }

    pub fn adjacent(&self, u: Vertex, v: Vertex) -> bool {
        self.adj[u as usize].binary_search(&v).is_ok()
    }

    /// Hyperedges containing `v`.
    pub fn incident(&self, v: Vertex) -> &[u32] {
        &self.incidence[v as usize]
    }

    /// Whether some hyperedge contains all of `set`.
    pub fn covered(&self, set: &[Vertex]) -> bool {
        match set.first() {
            None => true,
            Some(&v) => self.incident(v).iter().any(|&e| {
                let edge = &self.edges[e as usize];
                set.iter().all(|x| edge.binary_search(x).is_ok())
            }),
        }
    }

    pub fn is_clique(&self, set: &[Vertex]) -> bool {
        set.iter()
            .enumerate()
            .all(|(i, &x)| set[i + 1..].iter().all(|&y| self.adjacent(x, y)))
    }

    /// Hypergraph induced on `keep`: hyperedges intersected with it, vertex ids unchanged.
    pub fn induced(&self, keep: &BTreeSet<Vertex>) -> Hypergraph {
        let edges = self
            .edges
            .iter()
            .map(|e| e.iter().copied().filter(|v| keep.contains(v)).collect())
            .collect();
        Hypergraph::new(self.n, edges)
    }
}

/// Distance between two vertex sets in the Gaifman graph of the hypergraph induced on `A ∖ t`.
pub fn gaifman_distance(h: &Hypergraph, xs: &[Vertex], ys: &[Vertex], t: &HashSet<Vertex>) -> Option<usize> {
    let mut dist = vec![usize::MAX; h.n];
    let mut queue = VecDeque::new();
    for &x in xs {
        if !t.contains(&x) && dist[x as usize] == usize::MAX {
            dist[x as usize] = 0;
            queue.push_back(x);
        }
    }
    let targets: HashSet<Vertex> = ys.iter().copied().filter(|y| !t.contains(y)).collect();
    if targets.is_empty() {
        return None;
    }
    while let Some(x) = queue.pop_front() {
        if targets.contains(&x) {
            return Some(dist[x as usize]);
        }
        for &y in h.neighbours(x) {
            if !t.contains(&y) && dist[y as usize] == usize::MAX {
                dist[y as usize] = dist[x as usize] + 1;
                queue.push_back(y);
            }
        }
    }
    None
}

/// Why a hypergraph fails n-acyclicity.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum HgCycleWitness {
    /// A clique of at most n vertices contained in no hyperedge.
    UncoveredClique(Vec<Vertex>),
    /// A chordless Gaifman cycle of length 4..=n.
    ChordlessCycle(Vec<Vertex>),
}

/// A minimal uncovered clique of size `≤ n`, if one exists.
///
/// Only covered cliques are extended, and those are subsets of hyperedges,
/// so the search stays small.
pub fn uncovered_clique(h: &Hypergraph, n: usize) -> Option<Vec<Vertex>> {
    fn grow(h: &Hypergraph, n: usize, clique: &mut Vec<Vertex>) -> Option<Vec<Vertex>> {
        if clique.len() >= n {
            return None;
        }
        let last = *clique.last().unwrap();
        let cands: Vec<Vertex> = h
            .neighbours(last)
            .iter()
            .copied()
            .filter(|&v| v > last && clique.iter().all(|&c| h.adjacent(c, v)))
            .collect();
        for v in cands {
            clique.push(v);
            if !h.covered(clique) {
                return Some(clique.clone());
            }
            if let Some(w) = grow(h, n, clique) {
                return Some(w);
            }
            clique.pop();
        }
        None
    }
    for v in 0..h.n as Vertex {
        let mut c = vec![v];
        if !h.covered(&c) {
            return Some(c);
        }
        if let Some(w) = grow(h, n, &mut c) {
            return Some(w);
        }
    }
    None
}

pub fn is_n_conformal(h: &Hypergraph, n: usize) -> bool {
    uncovered_clique(h, n).is_none()
}

/// A chordless cycle of length `4..=n` in the Gaifman graph.
pub fn chordless_cycle(h: &Hypergraph, n: usize) -> Option<Vec<Vertex>> {
    fn extend(h: &Hypergraph, n: usize, path: &mut Vec<Vertex>) -> Option<Vec<Vertex>> {
        let v0 = path[0];
        let last = *path.last().unwrap();
        for &u in h.neighbours(last) {
            if u <= v0 || path.contains(&u) {
                continue;
            }
            // u may touch only `last` among the interior vertices.
            if path[1..path.len() - 1].iter().any(|&p| h.adjacent(p, u)) {
                continue;
            }
            if h.adjacent(u, v0) {
                if path.len() >= 3 {
                    let mut cyc = path.clone();
                    cyc.push(u);
                    return Some(cyc);
                }
                continue;
            }
            if path.len() + 1 < n {
                path.push(u);
                if let Some(c) = extend(h, n, path) {
                    return Some(c);
                }
                path.pop();
            }
        }
        None
    }
    if n < 4 {
        return None;
    }
    for v0 in 0..h.n as Vertex {
        for &v1 in h.neighbours(v0) {
            if v1 <= v0 {
                continue;
            }
            let mut path = vec![v0, v1];
            if let Some(c) = extend(h, n, &mut path) {
                return Some(c);
            }
        }
    }
    None
}

pub fn is_n_chordal(h: &Hypergraph, n: usize) -> bool {
    chordless_cycle(h, n).is_none()
}

pub fn n_acyclicity_witness(h: &Hypergraph, n: usize) -> Option<HgCycleWitness> {
    if let Some(c) = uncovered_clique(h, n) {
        return Some(HgCycleWitness::UncoveredClique(c));
    }
    chordless_cycle(h, n).map(HgCycleWitness::ChordlessCycle)
}

pub fn is_n_acyclic_hg(h: &Hypergraph, n: usize) -> bool {
    n_acyclicity_witness(h, n).is_none()
}

/// Least `m`-closed superset of `p`.
pub fn cl_m(h: &Hypergraph, p: &BTreeSet<Vertex>, m: usize) -> BTreeSet<Vertex> {
    let mut q = p.clone();
    let mut member = vec![false; h.n];
    for &v in &q {
        member[v as usize] = true;
    }
    let mut work: VecDeque<Vertex> = q.iter().copied().collect();
    while let Some(s) = work.pop_front() {
        let mut found: Vec<Vertex> = Vec::new();
        let mut path = vec![s];
        chordless_paths_to(h, m, &member, &mut path, &mut found);
        for v in found {
            if !member[v as usize] {
                member[v as usize] = true;
                q.insert(v);
                work.push_back(v);
            }
        }
    }
    q
}

/// Extend a chordless path; collect interiors of those ending in a member.
fn chordless_paths_to(h: &Hypergraph, m: usize, member: &[bool], path: &mut Vec<Vertex>, found: &mut Vec<Vertex>) {
    let last = *path.last().unwrap();
    for &u in h.neighbours(last) {
        if path.contains(&u) || path[..path.len() - 1].iter().any(|&p| h.adjacent(p, u)) {
            continue;
        }
        if member[u as usize] {
            if path.len() >= 2 {
                found.extend_from_slice(&path[1..]);
            }
            continue;
        }
        if path.len() < m {
            path.push(u);
            chordless_paths_to(h, m, member, path, found);
            path.pop();
        }
    }
}

/// Whether `q` contains every chordless path of length `≤ m` between its members.
pub fn is_m_closed(h: &Hypergraph, q: &BTreeSet<Vertex>, m: usize) -> bool {
    cl_m(h, q, m).len() == q.len()
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum HypergraphError {
    #[error("distance from Q to the new vertex is {0:?}, expected 1..=m")]
    PreconditionDistance(Option<usize>),
    #[error("Q is not m-closed")]
    NotClosed,
    #[error("restriction is not acyclic; {} hyperedges remain after reduction", .0.len())]
    NotAcyclic(Vec<Vec<Vertex>>),
    #[error("empty hypergraph")]
    Empty,
}

/// The four assertions about attaching a vertex to an m-closed set.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AttachChecks {
    pub new_part_connected: bool,
    /// No path of length `≤ m` from `Q̂ ∖ Q` to `Q ∖ D` avoids `D`.
    pub separates: bool,
    pub decomposition: bool,
    /// `Some` iff `Q` is `(2m+1)`-closed.
    pub d_is_clique: Option<bool>,
}

impl AttachChecks {
    pub fn all_pass(&self) -> bool {
        self.new_part_connected && self.separates && self.decomposition && self.d_is_clique != Some(false)
    }
}

#[derive(Clone, Debug)]
pub struct Attachment {
    pub q_hat: BTreeSet<Vertex>,
    pub d: BTreeSet<Vertex>,
    pub checks: AttachChecks,
}

pub fn attach_region(h: &Hypergraph, q: &BTreeSet<Vertex>, a: Vertex, m: usize) -> Result<Attachment, HypergraphError> {
    let qv: Vec<Vertex> = q.iter().copied().collect();
    let dist = gaifman_distance(h, &qv, &[a], &HashSet::new());
    match dist {
        Some(d) if d >= 1 && d <= m => {}
        other => return Err(HypergraphError::PreconditionDistance(other)),
    }
    if !is_m_closed(h, q, m) {
        return Err(HypergraphError::NotClosed);
    }
    let mut p = q.clone();
    p.insert(a);
    let q_hat = cl_m(h, &p, m);
    let new: BTreeSet<Vertex> = q_hat.difference(q).copied().collect();
    let d: BTreeSet<Vertex> = q
        .iter()
        .copied()
        .filter(|&x| h.neighbours(x).iter().any(|y| new.contains(y)))
        .collect();

    let new_part_connected = connected_within(h, &new);

    let rest: Vec<Vertex> = q.difference(&d).copied().collect();
    let newv: Vec<Vertex> = new.iter().copied().collect();
    let separates = match gaifman_distance(h, &newv, &rest, &d.iter().copied().collect()) {
        Some(len) => len > m,
        None => true,
    };

    let mut da = d.clone();
    da.insert(a);
    let mut rebuilt = cl_m(h, &da, m);
    rebuilt.extend(q.iter().copied());
    let decomposition = rebuilt == q_hat;

    let d_is_clique = if is_m_closed(h, q, 2 * m + 1) {
        Some(h.is_clique(&d.iter().copied().collect::<Vec<_>>()))
    } else {
        None
    };
    Ok(Attachment {
        q_hat,
        d,
        checks: AttachChecks {
            new_part_connected,
            separates,
            decomposition,
            d_is_clique,
        },
    })
}

/// Whether `set` induces a connected subgraph of the Gaifman graph (empty counts as connected).
pub fn connected_within(h: &Hypergraph, set: &BTreeSet<Vertex>) -> bool {
    let Some(&start) = set.iter().next() else {
        return true;
    };
    let mut seen = HashSet::from([start]);
    let mut stack = vec![start];
    while let Some(x) = stack.pop() {
        for &y in h.neighbours(x) {
            if set.contains(&y) && seen.insert(y) {
                stack.push(y);
            }
        }
    }
    seen.len() == set.len()
}

/// Tree decomposition: node `i` carries bag `bags[i]`, a hyperedge of the hypergraph.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct JoinTree {
    pub bags: Vec<Vec<Vertex>>,
    /// `parent[i]` is `None` only for the root.
    pub parent: Vec<Option<usize>>,
    pub root: usize,
}

impl JoinTree {
    pub fn children(&self, node: usize) -> Vec<usize> {
        (0..self.bags.len()).filter(|&i| self.parent[i] == Some(node)).collect()
    }

    /// Nodes in breadth-first order from the root.
    pub fn bfs_order(&self) -> Vec<usize> {
        let mut out = vec![self.root];
        let mut i = 0;
        while i < out.len() {
            out.extend(self.children(out[i]));
            i += 1;
        }
        out
    }

    /// Re-root at `node`.
    pub fn rerooted(&self, node: usize) -> JoinTree {
        let n = self.bags.len();
        let mut adj = vec![Vec::new(); n];
        for (i, p) in self.parent.iter().enumerate() {
            if let Some(p) = *p {
                adj[i].push(p);
                adj[p].push(i);
            }
        }
        let mut parent = vec![None; n];
        let mut seen = vec![false; n];
        seen[node] = true;
        let mut queue = VecDeque::from([node]);
        while let Some(x) = queue.pop_front() {
            adj[x].sort_unstable();
            for &y in &adj[x] {
                if !seen[y] {
                    seen[y] = true;
                    parent[y] = Some(x);
                    queue.push_back(y);
                }
            }
        }
        JoinTree {
            bags: self.bags.clone(),
            parent,
            root: node,
        }
    }

    /// Both decomposition conditions against the given hyperedges.
    pub fn verify(&self, edges: &[Vec<Vertex>]) -> bool {
        let bagset: HashSet<&Vec<Vertex>> = self.bags.iter().collect();
        let image: HashSet<&Vec<Vertex>> = edges.iter().collect();
        if bagset != image {
            return false;
        }
        // Tree shape: exactly one root, every parent chain reaches it.
        let n = self.bags.len();
        if self.parent.iter().filter(|p| p.is_none()).count() != 1 || self.parent[self.root].is_some() {
            return false;
        }
        for i in 0..n {
            let mut x = i;
            let mut steps = 0;
            while let Some(p) = self.parent[x] {
                x = p;
                steps += 1;
                if steps > n {
                    return false;
                }
            }
        }
        // Occurrence sets connected: each vertex's nodes have exactly one "top" node.
        let mut tops: HashMap<Vertex, usize> = HashMap::new();
        for i in 0..n {
            for &v in &self.bags[i] {
                let top = match self.parent[i] {
                    None => true,
                    Some(p) => !self.bags[p].contains(&v),
                };
                if top {
                    *tops.entry(v).or_default() += 1;
                }
            }
        }
        tops.values().all(|&c| c == 1)
    }
}

/// Join tree by GYO ear removal; the stuck remainder is returned when not acyclic.
pub fn join_tree(h: &Hypergraph) -> Result<JoinTree, HypergraphError> {
    let edges = h.edges().to_vec();
    let n = edges.len();
    if n == 0 {
        return Err(HypergraphError::Empty);
    }
    let mut cur: Vec<BTreeSet<Vertex>> = edges.iter().map(|e| e.iter().copied().collect()).collect();
    let mut alive = vec![true; n];
    let mut parent: Vec<Option<usize>> = vec![None; n];
    let mut remaining = n;
    loop {
        let mut changed = false;
        // Drop vertices that occur in a single live edge.
        let mut count: HashMap<Vertex, usize> = HashMap::new();
        for i in (0..n).filter(|&i| alive[i]) {
            for &v in &cur[i] {
                *count.entry(v).or_default() += 1;
            }
        }
        for i in (0..n).filter(|&i| alive[i]) {
            let before = cur[i].len();
            cur[i].retain(|v| count[v] > 1);
            changed |= cur[i].len() != before;
        }
        // Remove an edge contained in another live edge.
        if remaining > 1 {
            'outer: for i in 0..n {
                if !alive[i] {
                    continue;
                }
                for j in 0..n {
                    if i != j && alive[j] && cur[i].is_subset(&cur[j]) {
                        alive[i] = false;
                        parent[i] = Some(j);
                        remaining -= 1;
                        changed = true;
                        break 'outer;
                    }
                }
            }
        }
        if remaining == 1 {
            break;
        }
        if !changed {
            let rest = (0..n)
                .filter(|&i| alive[i])
                .map(|i| cur[i].iter().copied().collect())
                .collect();
            return Err(HypergraphError::NotAcyclic(rest));
        }
    }
    let root = (0..n).find(|&i| alive[i]).unwrap();
    Ok(JoinTree {
        bags: edges,
        parent,
        root,
    })
}

/// Largest closure of a `k`-set: exhaustive over k-subsets when there are at
/// most 2000 of them, otherwise `samples` sets drawn around random anchors.
pub fn measure_f(h: &Hypergraph, m: usize, k: usize, samples: usize, seed: u64) -> usize {
    let n = h.num_vertices();
    if k == 0 || n == 0 {
        return 0;
    }
    let k = k.min(n);
    let mut best = 0;
    if binomial(n, k) <= 2000 {
        let mut comb: Vec<usize> = (0..k).collect();
        loop {
            let p: BTreeSet<Vertex> = comb.iter().map(|&x| x as Vertex).collect();
            best = best.max(cl_m(h, &p, m).len());
            if !next_combination(&mut comb, n) {
                break;
            }
        }
        return best;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..samples {
        let anchor = rng.gen_range(0..n) as Vertex;
        let ball = ball(h, anchor, m);
        let mut p: BTreeSet<Vertex> = BTreeSet::from([anchor]);
        let picks: Vec<&Vertex> = ball.choose_multiple(&mut rng, k - 1).collect();
        p.extend(picks.into_iter().copied());
        best = best.max(cl_m(h, &p, m).len());
    }
    best
}

fn ball(h: &Hypergraph, v: Vertex, r: usize) -> Vec<Vertex> {
    let mut dist: HashMap<Vertex, usize> = HashMap::from([(v, 0)]);
    let mut queue = VecDeque::from([v]);
    let mut out = Vec::new();
    while let Some(x) = queue.pop_front() {
        let d = dist[&x];
        if x != v {
            out.push(x);
        }
        if d == r {
            continue;
        }
        for &y in h.neighbours(x) {
            if let std::collections::hash_map::Entry::Vacant(e) = dist.entry(y) {
                e.insert(d + 1);
                queue.push_back(y);
            }
        }
    }
    out.sort_unstable();
    out
}

fn binomial(n: usize, k: usize) -> u128 {
    let mut r: u128 = 1;
    for i in 0..k as u128 {
        r = r * (n as u128 - i) / (i + 1);
        if r > 1 << 100 {
            return r;
        }
    }
    r
}

fn next_combination(c: &mut [usize], n: usize) -> bool {
    let k = c.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if c[i] < n - k + i {
            c[i] += 1;
            for j in i + 1..k {
                c[j] = c[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Dual hypergraph: one vertex per `(α, class)`, one hyperedge `⟦w⟧` per world.
#[derive(Clone, Debug)]
pub struct DualHypergraph {
    pub hypergraph: Hypergraph,
    /// Colour and class id of each vertex.
    pub vertices: Vec<(Coalition, u32)>,
    offsets: Vec<u32>,
    /// Hyperedge index of `⟦w⟧` for every world.
    pub edge_of_world: Vec<u32>,
    /// Worlds inducing each hyperedge.
    pub witnesses: Vec<Vec<World>>,
}

impl DualHypergraph {
    pub fn vertex(&self, w: World, alpha: Coalition, ck: &CKStructure) -> Vertex {
        self.offsets[alpha.index()] + ck.class_id(w, alpha) as Vertex
    }

    pub fn vertex_of_class(&self, alpha: Coalition, class: usize) -> Vertex {
        self.offsets[alpha.index()] + class as Vertex
    }

    /// `⟦w⟧` as a sorted vertex list.
    pub fn hyperedge(&self, w: World) -> &[Vertex] {
        &self.hypergraph.edges()[self.edge_of_world[w] as usize]
    }

    pub fn color(&self, v: Vertex) -> Coalition {
        self.vertices[v as usize].0
    }

    /// Worlds of the coset a vertex stands for.
    pub fn extent<'a>(&self, v: Vertex, ck: &'a CKStructure) -> &'a [World] {
        let (alpha, class) = self.vertices[v as usize];
        ck.partition(alpha).block(class as usize)
    }

    /// The vertex `[w]_∅`.
    pub fn point(&self, w: World) -> Vertex {
        self.offsets[0] + w as Vertex
    }
}

pub fn dual(ck: &CKStructure) -> DualHypergraph {
    let mut vertices = Vec::new();
    let mut offsets = Vec::with_capacity(ck.num_coalitions());
    for alpha in ck.coalitions() {
        offsets.push(vertices.len() as Vertex);
        for c in 0..ck.partition(alpha).num_blocks() {
            vertices.push((alpha, c as u32));
        }
    }
    let mut edges = Vec::with_capacity(ck.n());
    for w in 0..ck.n() {
        let e: Vec<Vertex> = ck
            .coalitions()
            .map(|a| offsets[a.index()] + ck.class_id(w, a) as Vertex)
            .collect();
        edges.push(e);
    }
    let hypergraph = Hypergraph::new(vertices.len(), edges.clone());
    let index: HashMap<&Vec<Vertex>, u32> = hypergraph
        .edges()
        .iter()
        .enumerate()
        .map(|(i, e)| (e, i as u32))
        .collect();
    let mut edge_of_world = Vec::with_capacity(ck.n());
    let mut witnesses = vec![Vec::new(); hypergraph.edges().len()];
    for (w, e) in edges.iter_mut().enumerate() {
        e.sort_unstable();
        let i = index[&*e];
        edge_of_world.push(i);
        witnesses[i as usize].push(w);
    }
    DualHypergraph {
        hypergraph,
        vertices,
        offsets,
        edge_of_world,
        witnesses,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kripke::{ck_expand, validate_s5, ValidateOptions};

    fn set(xs: &[Vertex]) -> BTreeSet<Vertex> {
        xs.iter().copied().collect()
    }

    #[test]
    fn singleton_dual() {
        let ck = ck_expand(&validate_s5(vec!["a".into()], &[vec![]], 1, vec![], &[], ValidateOptions::default()).unwrap());
        let d = dual(&ck);
        assert_eq!(d.vertices.len(), 2);
        assert_eq!(d.hypergraph.edges(), &[vec![0, 1]]);
    }

    #[test]
    fn four_cycle_not_chordal() {
        let h = Hypergraph::new(4, vec![vec![0, 1], vec![1, 2], vec![2, 3], vec![3, 0]]);
        assert!(is_n_conformal(&h, 4));
        assert!(!is_n_chordal(&h, 4));
        assert!(is_n_chordal(&h, 3));
        assert!(matches!(join_tree(&h), Err(HypergraphError::NotAcyclic(_))));
    }

    #[test]
    fn triangle_not_conformal() {
        let h = Hypergraph::new(3, vec![vec![0, 1], vec![1, 2], vec![2, 0]]);
        assert_eq!(uncovered_clique(&h, 3), Some(vec![0, 1, 2]));
        assert!(is_n_conformal(&h, 2));
    }

    #[test]
    fn closure_basics() {
        let h = Hypergraph::new(5, vec![vec![0, 1], vec![1, 2], vec![2, 3], vec![3, 4]]);
        assert_eq!(cl_m(&h, &set(&[0]), 3), set(&[0]));
        assert_eq!(cl_m(&h, &set(&[0, 1]), 3), set(&[0, 1]));
        assert_eq!(cl_m(&h, &set(&[0, 3]), 3), set(&[0, 1, 2, 3]));
        assert_eq!(cl_m(&h, &set(&[0, 4]), 3), set(&[0, 4]));
        assert_eq!(cl_m(&h, &set(&[0, 4]), 1), set(&[0, 4]));
    }

    #[test]
    fn gaifman_distance_conventions() {
        let h = Hypergraph::new(3, vec![vec![0, 1], vec![1, 2]]);
        let none = HashSet::new();
        assert_eq!(gaifman_distance(&h, &[0], &[0], &none), Some(0));
        assert_eq!(gaifman_distance(&h, &[0], &[2], &none), Some(2));
        assert_eq!(gaifman_distance(&h, &[0], &[2], &HashSet::from([1])), None);
        assert_eq!(gaifman_distance(&h, &[0], &[2], &HashSet::from([0])), None);
    }

    #[test]
    fn join_tree_small() {
        let one = Hypergraph::new(2, vec![vec![0, 1]]);
        let t = join_tree(&one).unwrap();
        assert_eq!(t.bags.len(), 1);
        assert!(t.verify(one.edges()));
        let two = Hypergraph::new(3, vec![vec![0, 1], vec![1, 2]]);
        let t = join_tree(&two).unwrap();
        assert_eq!(t.bags.len(), 2);
        assert!(t.verify(two.edges()));
        assert!(t.rerooted(1 - t.root).verify(two.edges()));
    }

    #[test]
    fn attach_on_chain() {
        let h = Hypergraph::new(5, vec![vec![0, 1], vec![1, 2], vec![2, 3], vec![3, 4]]);
        let at = attach_region(&h, &set(&[0, 1]), 2, 2).unwrap();
        assert_eq!(at.d, set(&[1]));
        assert!(at.checks.all_pass());
        assert_eq!(
            attach_region(&h, &set(&[0, 1]), 1, 2).unwrap_err(),
            HypergraphError::PreconditionDistance(Some(0))
        );
    }

    #[test]
    fn measure_f_trivial() {
        let h = Hypergraph::new(5, vec![vec![0, 1], vec![1, 2], vec![2, 3], vec![3, 4]]);
        assert_eq!(measure_f(&h, 3, 1, 10, 0), 1);
        assert_eq!(measure_f(&h, 1, 2, 10, 0), 2);
        assert_eq!(measure_f(&h, 3, 2, 10, 0), 4);
    }
}
