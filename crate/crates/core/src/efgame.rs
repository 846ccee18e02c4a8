//! The upgrading game: round schedules, a Duplicator engine that keeps
//! isomorphic closed sets and tree decompositions in both dual hypergraphs,
//! the tree formulas `φ_T`, and a brute-force first-order game oracle.

use crate::acyclicity::AgtTable;
use crate::bisim::{l_bisimilar, pair_levels, BisimError, Mode};
use crate::cayley::richness_profile;
use crate::formula::ast::{and, diamond, F};
use crate::formula::check::Evaluator;
use crate::formula::chi::CharBuilder;
use crate::freeness::{brute_force_witness, find_free_witness, FreenessContext};
use crate::hypergraph::{attach_region, is_m_closed, join_tree, measure_f, Hypergraph, Vertex};
use crate::kripke::{coset, CKStructure, World};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GameError {
    #[error("node {0} is not below the root")]
    NotConnectedTree(usize),
    #[error("invariant broken ({bullet}): {witness}")]
    InvariantBroken { bullet: &'static str, witness: String },
    #[error("no free witness for tree node {node}: {detail}")]
    FreenessUnavailable { node: usize, detail: String },
    #[error("gates failed: {0}")]
    GatesFailed(String),
    #[error("all {0} rounds already played")]
    RoundsExhausted(usize),
    #[error("world {0} out of range")]
    WorldOutOfRange(World),
    #[error(transparent)]
    Bisim(#[from] BisimError),
}

fn broken(bullet: &'static str, witness: impl Into<String>) -> GameError {
    GameError::InvariantBroken {
        bullet,
        witness: witness.into(),
    }
}

/// Critical distances and bisimulation depths per round; index `i` is round `i`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Schedules {
    pub q: usize,
    pub m: Vec<usize>,
    pub ell: Vec<usize>,
    /// `f_hat[i]` is the closure bound used at `m_i` (entry 0 is recorded but unused).
    pub f_hat: Vec<usize>,
}

impl Schedules {
    /// `ℓ = ℓ₀`, the bisimulation depth the game starts from.
    pub fn ell0(&self) -> usize {
        self.ell[0]
    }
}

/// `m_q = 2`, `m_{i-1} = 2m_i + 1`; `ℓ_q = 1`, `ℓ_{i-1} = ℓ_i + f̂(m_i)`.
pub fn make_schedules(q: usize, f_hat: impl Fn(usize) -> usize) -> Schedules {
    let mut m = vec![0; q + 1];
    m[q] = 2;
    for i in (1..=q).rev() {
        m[i - 1] = 2 * m[i] + 1;
    }
    let f: Vec<usize> = m.iter().map(|&x| f_hat(x)).collect();
    let mut ell = vec![0; q + 1];
    ell[q] = 1;
    for i in (1..=q).rev() {
        ell[i - 1] = ell[i] + f[i];
    }
    Schedules { q, m, ell, f_hat: f }
}

/// Tree with a world attached to every node.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TreeSkeleton {
    pub parent: Vec<Option<usize>>,
    pub hat: Vec<World>,
}

impl TreeSkeleton {
    fn children(&self) -> Vec<Vec<usize>> {
        let mut ch = vec![Vec::new(); self.parent.len()];
        for (u, p) in self.parent.iter().enumerate() {
            if let Some(p) = *p {
                ch[p].push(u);
            }
        }
        ch
    }

    /// Nodes reachable from `root`, parents before children.
    fn order_from(&self, root: usize) -> Result<Vec<usize>, GameError> {
        let n = self.parent.len();
        if root >= n {
            return Err(GameError::NotConnectedTree(root));
        }
        let ch = self.children();
        let mut order = vec![root];
        let mut seen = vec![false; n];
        seen[root] = true;
        let mut i = 0;
        while i < order.len() {
            for &c in &ch[order[i]] {
                if c != root && !seen[c] {
                    seen[c] = true;
                    order.push(c);
                }
            }
            i += 1;
        }
        match seen.iter().position(|&s| !s) {
            Some(u) => Err(GameError::NotConnectedTree(u)),
            None => Ok(order),
        }
    }
}

/// `φ_{T,u}` for every node, computed bottom-up along `order`.
fn subtree_formulas(chars: &mut CharBuilder, agt: &AgtTable, tree: &TreeSkeleton, order: &[usize], l: usize) -> Vec<Option<F>> {
    let ch = tree.children();
    let mut phi: Vec<Option<F>> = vec![None; tree.parent.len()];
    for &u in order.iter().rev() {
        let w = tree.hat[u];
        let mut conj = vec![chars.chi(w, l)];
        for &c in &ch[u] {
            if let Some(f) = &phi[c] {
                conj.push(diamond(agt.get(w, tree.hat[c]), f.clone()));
            }
        }
        phi[u] = Some(and(conj));
    }
    phi
}

/// `φ_T = φ_{T,root}` with `χ^ℓ` at every node and `◇_{agt(w_u,w_c)}` along edges.
pub fn build_phi_t(ck: &CKStructure, tree: &TreeSkeleton, root: usize, l: usize) -> Result<F, GameError> {
    let order = tree.order_from(root)?;
    if let Some(&w) = tree.hat.iter().find(|&&w| w >= ck.n()) {
        return Err(GameError::WorldOutOfRange(w));
    }
    let agt = AgtTable::new(ck).map_err(|e| broken("agt", e.to_string()))?;
    let mut chars = CharBuilder::new(ck, l);
    let phi = subtree_formulas(&mut chars, &agt, tree, &order, l);
    Ok(phi[root].clone().unwrap())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub fn index(self) -> usize {
        match self {
            Side::Left => 0,
            Side::Right => 1,
        }
    }

    pub fn other(self) -> Side {
        match self {
            Side::Left => Side::Right,
            Side::Right => Side::Left,
        }
    }
}

/// One structure's half of the invariant.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SideState {
    pub pebbles: Vec<World>,
    /// The closed set `Q_i` in the dual hypergraph.
    pub q: BTreeSet<Vertex>,
    /// Bag `δ_i(u)` of every tree node.
    pub bags: Vec<Vec<Vertex>>,
    /// World `δ̂_i(u)` of every tree node.
    pub hat: Vec<World>,
}

/// Invariant after round `round`; both sides share the tree shape.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct GameInvariant {
    pub round: usize,
    pub parent: Vec<Option<usize>>,
    pub sides: [SideState; 2],
}

impl GameInvariant {
    pub fn initial(ctx: &GameContext, w0: World, v0: World) -> Result<Self, GameError> {
        for (s, x) in [(0, w0), (1, v0)] {
            if x >= ctx.sides[s].ck.n() {
                return Err(GameError::WorldOutOfRange(x));
            }
        }
        let side = |s: usize, x: World| {
            let p = ctx.sides[s].dual.point(x);
            SideState {
                pebbles: vec![x],
                q: BTreeSet::from([p]),
                bags: vec![vec![p]],
                hat: vec![x],
            }
        };
        Ok(GameInvariant {
            round: 0,
            parent: vec![None],
            sides: [side(0, w0), side(1, v0)],
        })
    }

    /// `σ_i` as sorted pairs `(left world, right world)`.
    pub fn sigma(&self) -> Vec<(World, World)> {
        let mut s: Vec<(World, World)> = self.sides[0].hat.iter().copied().zip(self.sides[1].hat.iter().copied()).collect();
        s.sort_unstable();
        s.dedup();
        s
    }

    fn image_of(&self, from: usize, w: World) -> Option<World> {
        let u = self.sides[from].hat.iter().position(|&x| x == w)?;
        Some(self.sides[1 - from].hat[u])
    }
}

/// Everything a game reads, computed once per pair of structures.
pub struct GameContext<'a> {
    pub sides: [FreenessContext<'a>; 2],
    pub schedules: Schedules,
    /// `∼^ℓ` labels on the disjoint union for `ℓ ≤ ℓ₀` (truncated once stable).
    levels: Vec<Vec<u32>>,
}

impl<'a> GameContext<'a> {
    /// Fails with `GatesFailed` unless both structures are 2-acyclic and connected.
    pub fn new(left: &'a CKStructure, right: &'a CKStructure, schedules: Schedules, acyclicity_cap: usize) -> Result<Self, GameError> {
        let ctx = |ck: &'a CKStructure, name: &str| {
            FreenessContext::new(ck, acyclicity_cap).map_err(|e| GameError::GatesFailed(format!("{name}: {e}")))
        };
        let levels = pair_levels(left, right, schedules.ell0(), Mode::CK)?;
        Ok(GameContext {
            sides: [ctx(left, "left")?, ctx(right, "right")?],
            schedules,
            levels,
        })
    }

    /// Whether left `w` and right `v` are `ℓ`-bisimilar.
    pub fn l_equiv(&self, w: World, v: World, l: usize) -> bool {
        let lv = &self.levels[l.min(self.levels.len() - 1)];
        lv[w] == lv[self.sides[0].ck.n() + v]
    }
}

/// Per-round certificate.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RoundDigest {
    pub round: usize,
    pub side: Side,
    pub spoiler: World,
    pub response: World,
    /// Spoiler's world was already in `M_{i-1}`.
    pub reused: bool,
    pub attach_size: usize,
    pub new_nodes: usize,
    pub constructive: usize,
    pub fallback: usize,
    pub q_size: usize,
    pub m_size: usize,
}

/// Edges `⟦x⟧ ∩ set` of the restriction, deduplicated.
fn restricted_edges(h: &Hypergraph, set: &BTreeSet<Vertex>) -> BTreeSet<Vec<Vertex>> {
    h.edges()
        .iter()
        .map(|e| e.iter().copied().filter(|v| set.contains(v)).collect::<Vec<_>>())
        .filter(|e| !e.is_empty())
        .collect()
}

/// Whether `(parent, bags)` is a tree decomposition of `h ↾ set`.
pub fn check_decomposition(h: &Hypergraph, set: &BTreeSet<Vertex>, parent: &[Option<usize>], bags: &[Vec<Vertex>]) -> Result<(), String> {
    let n = bags.len();
    if parent.len() != n || n == 0 {
        return Err("tree and bag counts differ".into());
    }
    let roots: Vec<usize> = (0..n).filter(|&i| parent[i].is_none()).collect();
    if roots.len() != 1 {
        return Err(format!("{} roots", roots.len()));
    }
    for i in 0..n {
        let mut x = i;
        let mut steps = 0;
        while let Some(p) = parent[x] {
            x = p;
            steps += 1;
            if steps > n {
                return Err(format!("node {i} lies on a parent cycle"));
            }
        }
    }
    let union: BTreeSet<Vertex> = bags.iter().flatten().copied().collect();
    if &union != set {
        return Err("bags do not cover exactly the closed set".into());
    }
    for e in restricted_edges(h, set) {
        if !bags.iter().any(|b| e.iter().all(|v| b.contains(v))) {
            return Err(format!("hyperedge {e:?} lies in no bag"));
        }
    }
    let mut tops: HashMap<Vertex, usize> = HashMap::new();
    for i in 0..n {
        for &v in &bags[i] {
            let top = parent[i].is_none_or(|p| !bags[p].contains(&v));
            if top {
                *tops.entry(v).or_default() += 1;
            }
        }
    }
    match tops.iter().find(|(_, &c)| c != 1) {
        Some((v, _)) => Err(format!("occurrences of vertex {v} are disconnected")),
        None => Ok(()),
    }
}

/// Every bullet of the invariant at its round; the first failure is returned.
pub fn verify_invariant(ctx: &GameContext, inv: &GameInvariant) -> Result<(), GameError> {
    let i = inv.round;
    let (m_i, ell_i) = (ctx.schedules.m[i], ctx.schedules.ell[i]);
    let [a, b] = &inv.sides;
    let [fa, fb] = &ctx.sides;
    let nodes = inv.parent.len();
    if a.hat.len() != nodes || b.hat.len() != nodes || a.bags.len() != nodes || b.bags.len() != nodes {
        return Err(broken("tree", "node counts differ between sides"));
    }
    // σ well defined and injective.
    let mut fwd: HashMap<World, World> = HashMap::new();
    let mut bwd: HashMap<World, World> = HashMap::new();
    for u in 0..nodes {
        let (x, y) = (a.hat[u], b.hat[u]);
        if *fwd.entry(x).or_insert(y) != y || *bwd.entry(y).or_insert(x) != x {
            return Err(broken("sigma", format!("node {u}: {x} ↦ {y} clashes")));
        }
    }
    if a.pebbles.len() != b.pebbles.len() {
        return Err(broken("pebbles", "pebble counts differ"));
    }
    for (&x, &y) in a.pebbles.iter().zip(&b.pebbles) {
        if fwd.get(&x) != Some(&y) {
            return Err(broken("pebbles", format!("pebble pair ({x},{y}) not matched by σ")));
        }
    }
    let dom: Vec<(World, World)> = inv.sigma();
    for &(x, y) in &dom {
        if (0..fa.ck.num_props()).any(|p| fa.ck.holds(p, x) != fb.ck.holds(p, y)) {
            return Err(broken("isomorphism", format!("atoms differ at {x} ↦ {y}")));
        }
        for &(x2, y2) in &dom {
            if fa.agt(x, x2) != fb.agt(y, y2) {
                return Err(broken(
                    "isomorphism",
                    format!("agt({x},{x2}) = {:?} but agt({y},{y2}) = {:?}", fa.agt(x, x2), fb.agt(y, y2)),
                ));
            }
        }
    }
    // Bags sit inside their hyperedges and correspond colour by colour.
    let mut vmap: HashMap<Vertex, Vertex> = HashMap::new();
    for u in 0..nodes {
        for (s, f) in [(a, fa), (b, fb)] {
            let e = f.dual.hyperedge(s.hat[u]);
            if let Some(x) = s.bags[u].iter().find(|x| e.binary_search(x).is_err()) {
                return Err(broken("bags", format!("node {u}: vertex {x} not in ⟦{}⟧", s.hat[u])));
            }
        }
        let mut img: Vec<Vertex> = a.bags[u]
            .iter()
            .map(|&x| fb.dual.vertex(b.hat[u], fa.dual.color(x), fb.ck))
            .collect();
        img.sort_unstable();
        if img != b.bags[u] {
            return Err(broken("bags", format!("node {u}: bags do not correspond")));
        }
        for &x in &a.bags[u] {
            let y = fb.dual.vertex(b.hat[u], fa.dual.color(x), fb.ck);
            if *vmap.entry(x).or_insert(y) != y {
                return Err(broken("bags", format!("vertex {x} has two images")));
            }
        }
    }
    let mapped: BTreeSet<Vertex> = a.q.iter().filter_map(|x| vmap.get(x).copied()).collect();
    if mapped.len() != a.q.len() || mapped != b.q {
        return Err(broken("dual isomorphism", "Q' is not the image of Q"));
    }
    let ea: BTreeSet<Vec<Vertex>> = restricted_edges(&fa.dual.hypergraph, &a.q)
        .into_iter()
        .map(|e| {
            let mut m: Vec<Vertex> = e.iter().map(|x| vmap[x]).collect();
            m.sort_unstable();
            m
        })
        .collect();
    if ea != restricted_edges(&fb.dual.hypergraph, &b.q) {
        return Err(broken("dual isomorphism", "restricted hyperedges differ"));
    }
    for (s, f, name) in [(a, fa, "left"), (b, fb, "right")] {
        check_decomposition(&f.dual.hypergraph, &s.q, &inv.parent, &s.bags).map_err(|e| broken("decomposition", format!("{name}: {e}")))?;
        if !is_m_closed(&f.dual.hypergraph, &s.q, m_i) {
            return Err(broken("closure", format!("{name} Q is not {m_i}-closed")));
        }
    }
    for &(x, y) in &dom {
        if !ctx.l_equiv(x, y, ell_i) {
            return Err(broken("bisimilarity", format!("{x} ≁^{ell_i} {y}")));
        }
    }
    Ok(())
}

/// Duplicator's answer to Spoiler pebbling `world` on `side`, with the updated invariant.
pub fn duplicator_round(ctx: &GameContext, inv: &GameInvariant, side: Side, world: World) -> Result<(GameInvariant, RoundDigest), GameError> {
    let i = inv.round + 1;
    if i > ctx.schedules.q {
        return Err(GameError::RoundsExhausted(ctx.schedules.q));
    }
    let (a, b) = (side.index(), side.other().index());
    let (fa, fb) = (&ctx.sides[a], &ctx.sides[b]);
    if world >= fa.ck.n() {
        return Err(GameError::WorldOutOfRange(world));
    }
    let (m_i, ell_i) = (ctx.schedules.m[i], ctx.schedules.ell[i]);
    let mut next = inv.clone();
    next.round = i;
    let mut digest = RoundDigest {
        round: i,
        side,
        spoiler: world,
        response: world,
        reused: false,
        attach_size: 0,
        new_nodes: 0,
        constructive: 0,
        fallback: 0,
        q_size: 0,
        m_size: 0,
    };

    if let Some(resp) = inv.image_of(a, world) {
        digest.reused = true;
        digest.response = resp;
        next.sides[a].pebbles.push(world);
        next.sides[b].pebbles.push(resp);
        verify_invariant(ctx, &next)?;
        digest.q_size = next.sides[a].q.len();
        digest.m_size = next.sigma().len();
        return Ok((next, digest));
    }

    let h = &fa.dual.hypergraph;
    let old_q = &inv.sides[a].q;
    let att = attach_region(h, old_q, fa.dual.point(world), m_i).map_err(|e| broken("closure", e.to_string()))?;
    if !att.checks.all_pass() {
        return Err(broken("attachment", format!("{:?}", att.checks)));
    }
    digest.attach_size = att.d.len();
    let mut part: BTreeSet<Vertex> = att.q_hat.difference(old_q).copied().collect();
    part.extend(att.d.iter().copied());

    // Maximal hyperedges of d ↾ part, joined into a tree rooted at a bag containing D.
    let edges: Vec<Vec<Vertex>> = restricted_edges(h, &part).into_iter().collect();
    let maximal: Vec<Vec<Vertex>> = edges
        .iter()
        .filter(|e| !edges.iter().any(|f| f.len() > e.len() && e.iter().all(|x| f.binary_search(x).is_ok())))
        .cloned()
        .collect();
    let jt = join_tree(&Hypergraph::new(h.num_vertices(), maximal)).map_err(|e| broken("decomposition", e.to_string()))?;
    let contains_d = |bag: &[Vertex]| att.d.iter().all(|x| bag.binary_search(x).is_ok());
    let r = (0..jt.bags.len())
        .find(|&k| contains_d(&jt.bags[k]))
        .ok_or_else(|| broken("decomposition", "no new bag contains the attachment region"))?;
    let lambda = (0..inv.parent.len())
        .find(|&u| contains_d(&inv.sides[a].bags[u]))
        .ok_or_else(|| broken("decomposition", "no old bag contains the attachment region"))?;
    let jt = jt.rerooted(r);
    let order = jt.bfs_order();
    let base = inv.parent.len();
    let index: HashMap<usize, usize> = order.iter().enumerate().map(|(k, &x)| (x, base + k)).collect();
    let old_image: HashSet<World> = inv.sides[a].hat.iter().copied().collect();
    for &x in &order {
        let bag = jt.bags[x].clone();
        let fits = |w: &World| bag.iter().all(|v| fa.dual.hyperedge(*w).binary_search(v).is_ok());
        let hat = (0..fa.ck.n())
            .filter(fits)
            .min_by_key(|w| (old_image.contains(w), *w))
            .ok_or_else(|| broken("bags", format!("bag {bag:?} lies in no hyperedge")))?;
        next.parent.push(Some(jt.parent[x].map_or(lambda, |p| index[&p])));
        next.sides[a].bags.push(bag);
        next.sides[a].hat.push(hat);
    }
    next.sides[a].q = att.q_hat.clone();
    digest.new_nodes = order.len();

    // Skeleton of λ and the new nodes; node 0 is λ.
    let local = |u: usize| if u == lambda { 0 } else { u - base + 1 };
    let mut skel = TreeSkeleton {
        parent: vec![None],
        hat: vec![inv.sides[a].hat[lambda]],
    };
    for u in base..next.parent.len() {
        skel.parent.push(Some(local(next.parent[u].unwrap())));
        skel.hat.push(next.sides[a].hat[u]);
    }
    let sk_order = skel.order_from(0)?;
    let mut chars = CharBuilder::new(fa.ck, ell_i);
    let phi = subtree_formulas(&mut chars, &fa.agt, &skel, &sk_order, ell_i);
    let mut eval = Evaluator::new(fb.ck);
    let v_lambda = inv.sides[b].hat[lambda];
    if !eval.eval(phi[0].as_ref().unwrap())[v_lambda] {
        return Err(broken("transfer", format!("φ_T fails at {v_lambda}, the image of the attachment node")));
    }

    for u in base..next.parent.len() {
        let p = next.parent[u].unwrap();
        let (wp, wu) = (next.sides[a].hat[p], next.sides[a].hat[u]);
        let vp = next.sides[b].hat[p];
        let vu = if let Some(v) = inv.image_of(a, wu) {
            v
        } else {
            let alpha = fa.agt(wp, wu);
            let ext = eval.eval(phi[local(u)].as_ref().unwrap());
            let v_prime = coset(fb.ck, vp, alpha)
                .iter()
                .copied()
                .find(|&x| ext[x])
                .ok_or_else(|| broken("transfer", format!("no {alpha:?}-successor of {vp} satisfies φ for node {u}")))?;
            let mut zs: Vec<World> = next.sides[b].hat.clone();
            zs.sort_unstable();
            zs.dedup();
            match find_free_witness(fb, v_prime, &zs, vp, alpha, m_i) {
                Ok(out) => {
                    digest.constructive += 1;
                    out.v_star
                }
                Err(e) => {
                    let found = brute_force_witness(fb, v_prime, &zs, vp, alpha, m_i).ok_or_else(|| GameError::FreenessUnavailable {
                        node: u,
                        detail: e.to_string(),
                    })?;
                    digest.fallback += 1;
                    found
                }
            }
        };
        let mut bag: Vec<Vertex> = next.sides[a].bags[u]
            .iter()
            .map(|&x| fb.dual.vertex(vu, fa.dual.color(x), fb.ck))
            .collect();
        bag.sort_unstable();
        next.sides[b].q.extend(bag.iter().copied());
        next.sides[b].bags.push(bag);
        next.sides[b].hat.push(vu);
    }
    let resp = next
        .image_of(a, world)
        .ok_or_else(|| broken("pebbles", format!("spoiler's world {world} is not a node world")))?;
    next.sides[a].pebbles.push(world);
    next.sides[b].pebbles.push(resp);
    digest.response = resp;
    verify_invariant(ctx, &next)?;
    digest.q_size = next.sides[a].q.len();
    digest.m_size = next.sigma().len();
    Ok((next, digest))
}

/// Whether pebbled tuples agree on equality, atoms and every coalition relation.
pub fn pebbles_partial_iso(m: &CKStructure, ws: &[World], n: &CKStructure, vs: &[World]) -> bool {
    if ws.len() != vs.len() {
        return false;
    }
    let k = ws.len();
    (0..k).all(|i| (0..m.num_props()).all(|p| m.holds(p, ws[i]) == n.holds(p, vs[i])))
        && (0..k).all(|i| {
            (0..k).all(|j| (ws[i] == ws[j]) == (vs[i] == vs[j]) && m.coalitions().all(|al| m.same_class(ws[i], ws[j], al) == n.same_class(vs[i], vs[j], al)))
        })
}

/// Exhaustive first-order game over `R_α`, `P_i` and equality.
struct EfSearch<'a> {
    m: &'a CKStructure,
    n: &'a CKStructure,
    memo: HashMap<(Vec<(World, World)>, usize), bool>,
    visited: usize,
}

impl EfSearch<'_> {
    fn extends(&self, pebbles: &[(World, World)], x: World, y: World) -> bool {
        if (0..self.m.num_props()).any(|p| self.m.holds(p, x) != self.n.holds(p, y)) {
            return false;
        }
        pebbles.iter().all(|&(a, b)| {
            (x == a) == (y == b) && self.m.coalitions().all(|al| self.m.same_class(x, a, al) == self.n.same_class(y, b, al))
        })
    }

    /// First winning Spoiler move, or `None` if Duplicator survives `r` rounds.
    fn spoiler_move(&mut self, pebbles: &[(World, World)], r: usize) -> Option<(Side, World)> {
        if r == 0 {
            return None;
        }
        for side in [Side::Left, Side::Right] {
            let size = if side == Side::Left { self.m.n() } else { self.n.n() };
            for x in 0..size {
                let taken = pebbles.iter().any(|&(a, b)| if side == Side::Left { a == x } else { b == x });
                if taken {
                    continue;
                }
                if !self.answerable(pebbles, side, x, r) {
                    return Some((side, x));
                }
            }
        }
        None
    }

    fn answerable(&mut self, pebbles: &[(World, World)], side: Side, x: World, r: usize) -> bool {
        let other = if side == Side::Left { self.n.n() } else { self.m.n() };
        for y in 0..other {
            let (l, rr) = if side == Side::Left { (x, y) } else { (y, x) };
            if !self.extends(pebbles, l, rr) {
                continue;
            }
            let mut next = pebbles.to_vec();
            next.push((l, rr));
            next.sort_unstable();
            next.dedup();
            if self.wins(next, r - 1) {
                return true;
            }
        }
        false
    }

    fn wins(&mut self, pebbles: Vec<(World, World)>, r: usize) -> bool {
        self.visited += 1;
        if r == 0 {
            return true;
        }
        let key = (pebbles, r);
        if let Some(&v) = self.memo.get(&key) {
            return v;
        }
        let v = self.spoiler_move(&key.0, r).is_none();
        self.memo.insert(key, v);
        v
    }
}

/// Outcome of the first-order game with Spoiler's winning opening, if any.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct EfOutcome {
    pub duplicator_wins: bool,
    pub spoiler_opening: Option<(Side, World)>,
    /// Game positions visited, the opening included.
    pub positions: usize,
}

pub fn fo_ef_game(m: &CKStructure, w: World, n: &CKStructure, v: World, q: usize) -> EfOutcome {
    let mut s = EfSearch {
        m,
        n,
        memo: HashMap::new(),
        visited: 0,
    };
    if !s.extends(&[], w, v) {
        return EfOutcome {
            duplicator_wins: false,
            spoiler_opening: None,
            positions: 0,
        };
    }
    let opening = s.spoiler_move(&[(w, v)], q);
    EfOutcome {
        duplicator_wins: opening.is_none(),
        spoiler_opening: opening,
        positions: s.visited + 1,
    }
}

/// `M,w ≡_q N,v` by exhaustive minimax.
pub fn fo_ef_oracle(m: &CKStructure, w: World, n: &CKStructure, v: World, q: usize) -> bool {
    fo_ef_game(m, w, n, v, q).duplicator_wins
}

/// Thresholds a pair must meet before the experiment runs.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Gates {
    pub min_acyclicity: usize,
    pub min_richness: usize,
    /// Samples per `measure_f` call when exhaustive enumeration is too large.
    pub f_samples: usize,
    /// Spoiler lines sampled when `q > 2`.
    pub replay_samples: usize,
    pub seed: u64,
}

impl Default for Gates {
    fn default() -> Self {
        Gates {
            min_acyclicity: 3,
            min_richness: 2,
            f_samples: 200,
            replay_samples: 200,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ReplayFailure {
    pub moves: Vec<(Side, World)>,
    pub error: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ReplayReport {
    pub exhaustive: bool,
    pub lines: usize,
    pub survived: usize,
    pub constructive: usize,
    pub fallback: usize,
    pub first_failure: Option<ReplayFailure>,
    /// Round digests of the first Spoiler line.
    pub sample_transcript: Vec<RoundDigest>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct UpgradeReport {
    pub q: usize,
    pub schedules: Schedules,
    pub acyclicity: [usize; 2],
    /// Least multiplicity of a bisimulation type in a class (`None` if there is no class).
    pub richness: [Option<usize>; 2],
    /// Verified acyclicity below `2·m₁ + 1` on some side.
    pub out_of_warranty: bool,
    pub l_bisimilar: bool,
    pub oracle: Option<bool>,
    pub oracle_positions: usize,
    pub replay: Option<ReplayReport>,
}

impl UpgradeReport {
    /// `∼^ℓ ⇒ ≡_q` confirmed by the oracle and by every replayed line.
    pub fn confirmed(&self) -> bool {
        !self.l_bisimilar
            || (self.oracle == Some(true) && self.replay.as_ref().is_some_and(|r| r.first_failure.is_none() && r.survived == r.lines))
    }
}

#[derive(Default)]
struct Tally {
    lines: usize,
    survived: usize,
    constructive: usize,
    fallback: usize,
    first_failure: Option<ReplayFailure>,
    transcript: Option<Vec<RoundDigest>>,
}

impl Tally {
    fn merge(&mut self, o: Tally) {
        self.lines += o.lines;
        self.survived += o.survived;
        self.constructive += o.constructive;
        self.fallback += o.fallback;
        if self.first_failure.is_none() {
            self.first_failure = o.first_failure;
        }
        if self.transcript.is_none() {
            self.transcript = o.transcript;
        }
    }
}

fn all_moves(ctx: &GameContext) -> Vec<(Side, World)> {
    let mut out: Vec<(Side, World)> = (0..ctx.sides[0].ck.n()).map(|w| (Side::Left, w)).collect();
    out.extend((0..ctx.sides[1].ck.n()).map(|v| (Side::Right, v)));
    out
}

fn play_line(ctx: &GameContext, inv: &GameInvariant, line: &mut Vec<(Side, World)>, digests: &mut Vec<RoundDigest>, moves: &[(Side, World)], tally: &mut Tally) {
    if inv.round == ctx.schedules.q {
        tally.lines += 1;
        let ok = pebbles_partial_iso(ctx.sides[0].ck, &inv.sides[0].pebbles, ctx.sides[1].ck, &inv.sides[1].pebbles);
        if ok {
            tally.survived += 1;
            if tally.transcript.is_none() {
                tally.transcript = Some(digests.clone());
            }
        } else if tally.first_failure.is_none() {
            tally.first_failure = Some(ReplayFailure {
                moves: line.clone(),
                error: "final pebbles are not a partial isomorphism".into(),
            });
        }
        return;
    }
    for &(side, x) in moves {
        line.push((side, x));
        match duplicator_round(ctx, inv, side, x) {
            Ok((next, d)) => {
                tally.constructive += d.constructive;
                tally.fallback += d.fallback;
                digests.push(d);
                play_line(ctx, &next, line, digests, moves, tally);
                digests.pop();
            }
            Err(e) => {
                tally.lines += 1;
                if tally.first_failure.is_none() {
                    tally.first_failure = Some(ReplayFailure {
                        moves: line.clone(),
                        error: e.to_string(),
                    });
                }
            }
        }
        line.pop();
    }
}

/// Duplicator against every Spoiler line (or `samples` random lines when not exhaustive).
pub fn replay(ctx: &GameContext, w: World, v: World, exhaustive: bool, samples: usize, seed: u64) -> Result<ReplayReport, GameError> {
    let init = GameInvariant::initial(ctx, w, v)?;
    verify_invariant(ctx, &init)?;
    let moves = all_moves(ctx);
    let tally = if exhaustive {
        let parts: Vec<Tally> = moves
            .par_iter()
            .map(|&mv| {
                let mut t = Tally::default();
                let mut line = vec![mv];
                match duplicator_round(ctx, &init, mv.0, mv.1) {
                    Ok((next, d)) => {
                        t.constructive += d.constructive;
                        t.fallback += d.fallback;
                        let mut digests = vec![d];
                        play_line(ctx, &next, &mut line, &mut digests, &moves, &mut t);
                    }
                    Err(e) => {
                        t.lines += 1;
                        t.first_failure = Some(ReplayFailure {
                            moves: line,
                            error: e.to_string(),
                        });
                    }
                }
                t
            })
            .collect();
        let mut all = Tally::default();
        for p in parts {
            all.merge(p);
        }
        all
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let lines: Vec<Vec<(Side, World)>> = (0..samples)
            .map(|_| (0..ctx.schedules.q).map(|_| moves[rng.gen_range(0..moves.len())]).collect())
            .collect();
        let parts: Vec<Tally> = lines
            .par_iter()
            .map(|l| {
                let mut t = Tally::default();
                let mut inv = init.clone();
                let mut digests = Vec::new();
                for (k, &(side, x)) in l.iter().enumerate() {
                    match duplicator_round(ctx, &inv, side, x) {
                        Ok((next, d)) => {
                            t.constructive += d.constructive;
                            t.fallback += d.fallback;
                            digests.push(d);
                            inv = next;
                        }
                        Err(e) => {
                            t.lines = 1;
                            t.first_failure = Some(ReplayFailure {
                                moves: l[..=k].to_vec(),
                                error: e.to_string(),
                            });
                            return t;
                        }
                    }
                }
                play_line(ctx, &inv, &mut l.clone(), &mut digests, &[], &mut t);
                t
            })
            .collect();
        let mut all = Tally::default();
        for p in parts {
            all.merge(p);
        }
        all
    };
    Ok(ReplayReport {
        exhaustive,
        lines: tally.lines,
        survived: tally.survived,
        constructive: tally.constructive,
        fallback: tally.fallback,
        first_failure: tally.first_failure,
        sample_transcript: tally.transcript.unwrap_or_default(),
    })
}

/// `f̂(m) = 2 · max` of the measured closure bound on both duals, with `k = |τ| + 1`.
pub fn measured_schedules(left: &CKStructure, right: &CKStructure, q: usize, samples: usize, seed: u64) -> Schedules {
    let (dl, dr) = (crate::hypergraph::dual(left), crate::hypergraph::dual(right));
    let k = left.num_coalitions() + 1;
    let mut cache: BTreeMap<usize, usize> = BTreeMap::new();
    let mut f = |m: usize| {
        *cache.entry(m).or_insert_with(|| {
            2 * measure_f(&dl.hypergraph, m, k, samples, seed).max(measure_f(&dr.hypergraph, m, k, samples, seed))
        })
    };
    let probe = make_schedules(q, |_| 0);
    let values: BTreeMap<usize, usize> = probe.m.iter().map(|&m| (m, f(m))).collect();
    make_schedules(q, |m| values[&m])
}

/// Gate the pair, derive `ℓ(q)`, and if `M,w ∼^ℓ N,v` check `≡_q` with the
/// oracle and replay the Duplicator engine against Spoiler.
pub fn upgrade_experiment(m: &CKStructure, w: World, n: &CKStructure, v: World, q: usize, gates: &Gates) -> Result<UpgradeReport, GameError> {
    if w >= m.n() {
        return Err(GameError::WorldOutOfRange(w));
    }
    if v >= n.n() {
        return Err(GameError::WorldOutOfRange(v));
    }
    if !m.base().same_signature(n.base()) {
        return Err(BisimError::SignatureMismatch.into());
    }
    let schedules = measured_schedules(m, n, q, gates.f_samples, gates.seed);
    let warranty = if q >= 1 { 2 * schedules.m[1] + 1 } else { 0 };
    let cap = warranty.max(gates.min_acyclicity);
    let ctx = GameContext::new(m, n, schedules.clone(), cap)?;
    let acyclicity = [ctx.sides[0].acyclicity, ctx.sides[1].acyclicity];
    let richness = [richness_profile(m, false).map(|r| r.count), richness_profile(n, false).map(|r| r.count)];
    for s in 0..2 {
        if acyclicity[s] < gates.min_acyclicity {
            return Err(GameError::GatesFailed(format!("side {s} is {}-acyclic, {} required", acyclicity[s], gates.min_acyclicity)));
        }
        if richness[s].is_some_and(|r| r < gates.min_richness) {
            return Err(GameError::GatesFailed(format!("side {s} is {}-rich, {} required", richness[s].unwrap_or(0), gates.min_richness)));
        }
    }
    let bisimilar = l_bisimilar(m, w, n, v, schedules.ell0())?;
    let mut report = UpgradeReport {
        q,
        schedules,
        acyclicity,
        richness,
        out_of_warranty: acyclicity.iter().any(|&a| a < warranty),
        l_bisimilar: bisimilar,
        oracle: None,
        oracle_positions: 0,
        replay: None,
    };
    if bisimilar {
        let ef = fo_ef_game(m, w, n, v, q);
        report.oracle = Some(ef.duplicator_wins);
        report.oracle_positions = ef.positions;
        report.replay = Some(replay(&ctx, w, v, q <= 2, gates.replay_samples, gates.seed)?);
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schedule_values() {
        let s = make_schedules(2, |_| 0);
        assert_eq!(s.m, vec![11, 5, 2]);
        let s = make_schedules(1, |_| 3);
        assert_eq!(s.ell, vec![4, 1]);
        assert_eq!(make_schedules(3, |_| 0).m[0], 23);
    }

    #[test]
    fn closed_form() {
        for q in 1..6 {
            let s = make_schedules(q, |m| m + 1);
            for i in 0..=q {
                assert_eq!(s.m[i], 3 * (1 << (q - i)) - 1);
            }
        }
    }
}
