//! Coset paths, t-distance, `short_t`, the triangle and push-away moves, and
//! (m,k)-freeness.
//!
//! All procedures work on a [`FreenessContext`], which caches the pairwise
//! `agt` table, the self-bisimulation blocks and the dual hypergraph.

use crate::acyclicity::{acyclicity_level, AgtError, AgtTable};
use crate::bisim::self_bisimulation;
use crate::coalition::Coalition;
use crate::hypergraph::{dual, gaifman_distance, DualHypergraph, Vertex};
use crate::kripke::{coset, CKStructure, World};
use rayon::prelude::*;
use serde::Serialize;
use std::collections::{HashMap, HashSet};
use thiserror::Error;

/// Default cap on coset-path length in searches.
pub const DEFAULT_PATH_CAP: usize = 6;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FreenessError {
    #[error(transparent)]
    Agt(#[from] AgtError),
    #[error("malformed path: {0}")]
    MalformedPath(String),
    #[error("distance between a world and itself")]
    SameWorld,
    #[error("structure is {verified}-acyclic, {needed} required")]
    InsufficientAcyclicity { needed: usize, verified: usize },
    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),
    #[error("no bisimilar candidate in the {agent}-class of world {world}")]
    NoCandidate { agent: usize, world: World },
    #[error("postcondition failed: {reason}")]
    PostconditionFailed { reason: String, path: Option<CosetPath> },
}

/// Everything the freeness procedures read, computed once per structure.
pub struct FreenessContext<'a> {
    pub ck: &'a CKStructure,
    pub agt: AgtTable,
    pub bisim: Vec<u32>,
    pub dual: DualHypergraph,
    /// Verified coset acyclicity (capped).
    pub acyclicity: usize,
    pub path_cap: usize,
}

impl<'a> FreenessContext<'a> {
    /// Fails unless the structure is 2-acyclic and connected.
    pub fn new(ck: &'a CKStructure, acyclicity_cap: usize) -> Result<Self, FreenessError> {
        let agt = AgtTable::new(ck)?;
        Ok(FreenessContext {
            ck,
            agt,
            bisim: self_bisimulation(ck),
            dual: dual(ck),
            acyclicity: acyclicity_level(ck, acyclicity_cap),
            path_cap: DEFAULT_PATH_CAP,
        })
    }

    pub fn agt(&self, w: World, v: World) -> Coalition {
        self.agt.get(w, v)
    }

    pub fn bisimilar(&self, w: World, v: World) -> bool {
        self.bisim[w] == self.bisim[v]
    }

    pub fn rho(&self, v: World, gamma: Coalition) -> AvoidSet {
        AvoidSet { v, gamma }
    }

    /// `d_t(w,v)`, or `None` if no non-t path of length at most `cap` exists.
    pub fn t_distance(&self, w: World, v: World, t: &AvoidSet, cap: usize) -> Result<Option<usize>, FreenessError> {
        t_distance(self.ck, w, v, t, cap)
    }

    /// `min_z d_t(z,v)`; `None` if all are beyond `cap`.
    pub fn t_distance_set(&self, zs: &[World], v: World, t: &AvoidSet, cap: usize) -> Result<Option<usize>, FreenessError> {
        let mut best: Option<usize> = None;
        for &z in zs {
            if let Some(d) = self.t_distance(z, v, t, cap)? {
                best = Some(best.map_or(d, |b| b.min(d)));
            }
        }
        Ok(best)
    }

    /// Whether `d_t(zs, v) > bound`.
    fn far(&self, zs: &[World], v: World, t: &AvoidSet, bound: usize) -> Result<bool, FreenessError> {
        Ok(self.t_distance_set(zs, v, t, bound)?.is_none())
    }
}

/// `ρ(v,γ) = { [v]_β : β ⊇ γ }`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct AvoidSet {
    pub v: World,
    pub gamma: Coalition,
}

impl AvoidSet {
    /// Dual vertices `[v]_β` for `β ⊇ γ`.
    pub fn extent(&self, ck: &CKStructure, d: &DualHypergraph) -> Vec<Vertex> {
        let mut out: Vec<Vertex> = self
            .gamma
            .supersets(ck.num_agents())
            .map(|b| d.vertex(self.v, b, ck))
            .collect();
        out.sort_unstable();
        out
    }

    /// Whether the coset `[w]_α` is excluded by a non-t path, i.e. `[w]_α ⊇ [v]_γ`.
    pub fn blocks(&self, ck: &CKStructure, w: World, alpha: Coalition) -> bool {
        ck.class_subset(self.v, self.gamma, w, alpha)
    }
}

pub fn rho(ck: &CKStructure, v: World, gamma: Coalition) -> Result<AvoidSet, FreenessError> {
    if let Some(x) = crate::acyclicity::two_acyclic_violation(ck) {
        return Err(AgtError::Not2Acyclic(Some(x)).into());
    }
    Ok(AvoidSet { v, gamma })
}

/// An alternating list `w₁, α₁, …, α_ℓ, w_{ℓ+1}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CosetPath {
    pub worlds: Vec<World>,
    pub labels: Vec<Coalition>,
}

impl CosetPath {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn start(&self) -> World {
        self.worlds[0]
    }

    pub fn end(&self) -> World {
        *self.worlds.last().unwrap()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct PathFlags {
    pub length: usize,
    /// The hinge condition holds at every step.
    pub separated: bool,
    pub nontrivial: bool,
    pub inner: bool,
    pub non_t: Option<bool>,
}

/// Validity and flags of a candidate coset path.
pub fn classify_path(ck: &CKStructure, path: &CosetPath, t: Option<&AvoidSet>) -> Result<PathFlags, FreenessError> {
    let l = path.labels.len();
    if l == 0 {
        return Err(FreenessError::MalformedPath("no labels".into()));
    }
    if path.worlds.len() != l + 1 {
        return Err(FreenessError::MalformedPath(format!(
            "{} worlds for {} labels",
            path.worlds.len(),
            l
        )));
    }
    if let Some(&w) = path.worlds.iter().find(|&&w| w >= ck.n()) {
        return Err(FreenessError::MalformedPath(format!("world {w} out of range")));
    }
    if let Some(a) = path.labels.iter().find(|a| !a.is_subset(ck.grand())) {
        return Err(FreenessError::MalformedPath(format!("coalition {a:?} out of range")));
    }
    for i in 0..l {
        if !ck.same_class(path.worlds[i], path.worlds[i + 1], path.labels[i]) {
            return Err(FreenessError::MalformedPath(format!("step {} is not an edge", i + 1)));
        }
    }
    let label = |i: usize| if i == 0 || i > l { Coalition::EMPTY } else { path.labels[i - 1] };
    let separated = (1..=l).all(|i| {
        let (x, y) = (path.worlds[i - 1], path.worlds[i]);
        !ck.classes_intersect(x, label(i - 1).intersection(label(i)), y, label(i).intersection(label(i + 1)))
    });
    let (w1, wl) = (path.start(), path.end());
    let alpha = crate::acyclicity::agt_unchecked(ck, &[w1, wl])?;
    let classes = || (0..l).map(|i| (path.worlds[i], path.labels[i]));
    let nontrivial = classes().all(|(x, a)| !ck.class_subset(w1, alpha, x, a));
    let inner = classes().all(|(x, a)| {
        ck.class_subset(x, a, w1, alpha) && coset(ck, x, a).len() < coset(ck, w1, alpha).len()
    });
    let non_t = t.map(|t| classes().all(|(x, a)| !t.blocks(ck, x, a)));
    Ok(PathFlags {
        length: l,
        separated,
        nontrivial,
        inner,
        non_t,
    })
}

/// Search state: current world, previous label, current label.
type State = (World, Coalition, Coalition);

/// Layered search over coset paths from `from` to `to` whose every coset passes
/// `allow`. Returns, for each length `1..=max_len`, a witness of exactly that
/// length if one exists.
fn layered_paths(
    ck: &CKStructure,
    from: World,
    to: World,
    max_len: usize,
    first: Option<Coalition>,
    allow: &dyn Fn(World, Coalition) -> bool,
    stop_at_first: bool,
) -> Vec<Option<CosetPath>> {
    let coals: Vec<Coalition> = ck.coalitions().filter(|a| !a.is_empty()).collect();
    let mut out = vec![None; max_len];
    let mut layers: Vec<HashMap<State, Option<State>>> = Vec::new();
    let mut layer: HashMap<State, Option<State>> = HashMap::new();
    for &a in &coals {
        if first.is_some_and(|f| f != a) {
            continue;
        }
        if allow(from, a) {
            layer.insert((from, Coalition::EMPTY, a), None);
        }
    }
    for len in 1..=max_len {
        if layer.is_empty() {
            break;
        }
        let mut done: Option<State> = None;
        let mut keys: Vec<&State> = layer.keys().collect();
        keys.sort_unstable();
        for &&(x, prev, cur) in &keys {
            if ck.same_class(x, to, cur) && !ck.same_class(x, to, prev.intersection(cur)) {
                done = Some((x, prev, cur));
                break;
            }
        }
        let next = if len < max_len && !(stop_at_first && done.is_some()) {
            let mut next: HashMap<State, Option<State>> = HashMap::new();
            for &&(x, prev, cur) in &keys {
                let hinge = prev.intersection(cur);
                for &y in coset(ck, x, cur) {
                    for &a in &coals {
                        let st = (y, cur, a);
                        if next.contains_key(&st) || !allow(y, a) {
                            continue;
                        }
                        if ck.classes_intersect(x, hinge, y, cur.intersection(a)) {
                            continue;
                        }
                        next.insert(st, Some((x, prev, cur)));
                    }
                }
            }
            Some(next)
        } else {
            None
        };
        layers.push(std::mem::take(&mut layer));
        if let Some(end) = done {
            out[len - 1] = Some(reconstruct(&layers, end, to));
            if stop_at_first {
                break;
            }
        }
        match next {
            Some(n) => layer = n,
            None => break,
        }
    }
    out
}

fn reconstruct(layers: &[HashMap<State, Option<State>>], end: State, to: World) -> CosetPath {
    let mut worlds = vec![to];
    let mut labels = Vec::new();
    let mut st = Some(end);
    let mut depth = layers.len();
    while let Some(s) = st {
        depth -= 1;
        worlds.push(s.0);
        labels.push(s.2);
        st = layers[depth][&s];
    }
    worlds.reverse();
    labels.reverse();
    CosetPath { worlds, labels }
}

/// A minimal non-t coset path from `w` to `v` of length at most `cap`.
pub fn minimal_non_t_path(ck: &CKStructure, w: World, v: World, t: &AvoidSet, cap: usize) -> Result<Option<CosetPath>, FreenessError> {
    if w == v {
        return Err(FreenessError::SameWorld);
    }
    let allow = |x: World, a: Coalition| !t.blocks(ck, x, a);
    Ok(layered_paths(ck, w, v, cap, None, &allow, true).into_iter().flatten().next())
}

/// `d_t(w,v)`; `None` stands for "greater than `cap`".
pub fn t_distance(ck: &CKStructure, w: World, v: World, t: &AvoidSet, cap: usize) -> Result<Option<usize>, FreenessError> {
    Ok(minimal_non_t_path(ck, w, v, t, cap)?.map(|p| p.len()))
}

/// Inner non-t paths from `w` to `v`, one witness per length `1..=max_len`
/// (length 1 is never inner).
pub fn inner_non_t_paths(ck: &CKStructure, agt: &AgtTable, w: World, v: World, t: &AvoidSet, max_len: usize) -> Vec<Option<CosetPath>> {
    let alpha = agt.get(w, v);
    let outer = coset(ck, w, alpha).len();
    let allow = |x: World, a: Coalition| {
        !t.blocks(ck, x, a) && ck.class_subset(x, a, w, alpha) && coset(ck, x, a).len() < outer
    };
    let mut out = layered_paths(ck, w, v, max_len, None, &allow, false);
    if let Some(first) = out.first_mut() {
        *first = None;
    }
    out
}

/// `short_t(v,z)` with a report on how well-behaved it is.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct ShortT {
    pub coalition: Coalition,
    /// Number of distinct first labels seen on short non-t paths.
    pub first_labels: usize,
    /// Some short non-t path starts with exactly `coalition`.
    pub attained: bool,
    pub nonempty: bool,
}

impl ShortT {
    pub fn unique(&self) -> bool {
        self.attained && self.nonempty
    }
}

/// Intersection of the first labels of all non-t paths of length at most
/// `n_cap` from `v` to `z`.
pub fn short_t(ck: &CKStructure, v: World, z: World, t: &AvoidSet, n_cap: usize) -> Option<ShortT> {
    if v == z {
        return None;
    }
    let allow = |x: World, a: Coalition| !t.blocks(ck, x, a);
    let firsts: Vec<Coalition> = ck
        .coalitions()
        .filter(|a| !a.is_empty() && allow(v, *a))
        .filter(|&a| layered_paths(ck, v, z, n_cap, Some(a), &allow, true).iter().any(Option::is_some))
        .collect();
    if firsts.is_empty() {
        return None;
    }
    let meet = firsts.iter().fold(ck.grand(), |m, a| m.intersection(*a));
    Some(ShortT {
        coalition: meet,
        first_labels: firsts.len(),
        attained: firsts.contains(&meet),
        nonempty: !meet.is_empty(),
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct StepAwayViolation {
    pub agent: usize,
    pub v_prime: World,
    pub short: Option<Coalition>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct StepAwayReport {
    pub short: Option<Coalition>,
    pub checked: usize,
    pub violations: Vec<StepAwayViolation>,
}

/// For every `a ∉ short_t(v,z)` and `v' ∈ [v]_a ∖ {v}` with `d_t(v',z) ≤ m`,
/// checks `a ∈ short_t(v',z)`, where `t = ρ(v,γ)`.
pub fn step_away_check(ctx: &FreenessContext, v: World, z: World, gamma: Coalition, m: usize) -> Result<StepAwayReport, FreenessError> {
    let ck = ctx.ck;
    if ctx.acyclicity < 2 * m + 1 {
        return Err(FreenessError::InsufficientAcyclicity {
            needed: 2 * m + 1,
            verified: ctx.acyclicity,
        });
    }
    if v == z {
        return Err(FreenessError::SameWorld);
    }
    if !gamma.is_subset(ctx.agt(v, z)) {
        return Err(FreenessError::HypothesisViolated(format!(
            "γ = {gamma:?} is not contained in agt(v,z) = {:?}",
            ctx.agt(v, z)
        )));
    }
    let t = AvoidSet { v, gamma };
    if t_distance(ck, z, v, &t, m)?.is_none() {
        return Err(FreenessError::HypothesisViolated(format!("d_t(z,v) > {m}")));
    }
    let s = short_t(ck, v, z, &t, m).map(|s| s.coalition);
    let mut report = StepAwayReport {
        short: s,
        ..Default::default()
    };
    for a in 0..ck.num_agents() {
        if s.is_some_and(|s| s.contains(a)) {
            continue;
        }
        for &vp in coset(ck, v, Coalition::singleton(a)) {
            if vp == v || vp == z || t_distance(ck, vp, z, &t, m)?.is_none() {
                continue;
            }
            report.checked += 1;
            let sp = short_t(ck, vp, z, &t, m).map(|s| s.coalition);
            if !sp.is_some_and(|sp| sp.contains(a)) {
                report.violations.push(StepAwayViolation {
                    agent: a,
                    v_prime: vp,
                    short: sp,
                });
            }
        }
    }
    Ok(report)
}

/// A single move `v → v'` inside `[v]_a`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Move {
    pub agent: usize,
    pub to: World,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TriangleOutcome {
    pub v_star: World,
    pub moves: Vec<Move>,
}

/// Least `v' ∈ [v]_a ∖ {v}` bisimilar to `v` that keeps `agt(·,z)` for all
/// `keep` and satisfies `extra`.
fn bisimilar_neighbour(
    ctx: &FreenessContext,
    v: World,
    a: usize,
    keep: &[World],
    extra: &mut dyn FnMut(World) -> Result<bool, FreenessError>,
) -> Result<Option<World>, FreenessError> {
    for &vp in coset(ctx.ck, v, Coalition::singleton(a)) {
        if vp == v || !ctx.bisimilar(v, vp) {
            continue;
        }
        if keep.iter().any(|&z| ctx.agt(vp, z) != ctx.agt(v, z)) {
            continue;
        }
        if extra(vp)? {
            return Ok(Some(vp));
        }
    }
    Ok(None)
}

/// Moves `v` to a bisimilar `v*` with `agt(v*,u) = agt(v*,z₀) ∪ agt(z₀,u)`,
/// keeping `agt(v*,z)` for every `z ∈ zs`.
pub fn triangle_step(ctx: &FreenessContext, v: World, u: World, zs: &[World], z0: World) -> Result<TriangleOutcome, FreenessError> {
    for &z in zs {
        if ctx.agt(v, z) != ctx.agt(v, z0).union(ctx.agt(z0, z)) {
            return Err(FreenessError::HypothesisViolated(format!(
                "agt(v,{z}) ≠ agt(v,z₀) ∪ agt(z₀,{z})"
            )));
        }
    }
    let mut keep: Vec<World> = zs.to_vec();
    keep.push(z0);
    let alpha1 = ctx.agt(v, z0);
    let alpha2 = ctx.agt(z0, u);
    let mut cur = v;
    let mut moves = Vec::new();
    loop {
        let alpha3 = ctx.agt(u, cur);
        let missing = alpha1.union(alpha2).minus(alpha3);
        let Some(a) = missing.agents().next() else { break };
        if !alpha1.contains(a) {
            return Err(FreenessError::PostconditionFailed {
                reason: format!("agent {a} is missing from agt(v,z₀) and agt(u,v), contradicting 2-acyclicity"),
                path: None,
            });
        }
        let next = bisimilar_neighbour(ctx, cur, a, &keep, &mut |_| Ok(true))?
            .ok_or(FreenessError::NoCandidate { agent: a, world: cur })?;
        if ctx.agt(u, next) != alpha3.with(a) {
            return Err(FreenessError::PostconditionFailed {
                reason: format!("agt(u,{next}) = {:?}, expected {:?}", ctx.agt(u, next), alpha3.with(a)),
                path: None,
            });
        }
        moves.push(Move { agent: a, to: next });
        cur = next;
    }
    if ctx.agt(cur, u) != ctx.agt(cur, z0).union(alpha2) || keep.iter().any(|&z| ctx.agt(cur, z) != ctx.agt(v, z)) {
        return Err(FreenessError::PostconditionFailed {
            reason: "triangle equation or preserved agt values fail at the result".into(),
            path: None,
        });
    }
    Ok(TriangleOutcome { v_star: cur, moves })
}

/// One step of a push-away round.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PushStep {
    pub agent: usize,
    pub world: World,
    /// `β_n = short_t(v_n, w)`, when `d_t(w,v_n)` is still at most `ℓ`.
    pub beta: Option<Coalition>,
    pub gamma: Coalition,
}

/// One application of the construction, raising `d_t(w,·)` above `ell`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PushRound {
    pub ell: usize,
    pub beta0: Coalition,
    pub gamma0: Coalition,
    pub steps: Vec<PushStep>,
}

impl PushRound {
    /// `γ_n ⊊ γ_{n−1}`; a final step that already cleared the
    /// distance carries no `β` and is not counted.
    pub fn gamma_strictly_decreasing(&self) -> bool {
        let mut prev = self.gamma0;
        for s in self.steps.iter().filter(|s| s.beta.is_some()) {
            if !s.gamma.is_proper_subset(prev) {
                return false;
            }
            prev = s.gamma;
        }
        true
    }

    /// `β_n` is `{a_j,…,a_n}` for some `j`, or contains
    /// `β₀ ∪ {a_1,…,a_n}`.
    pub fn beta_shape(&self) -> bool {
        let agents: Vec<usize> = self.steps.iter().map(|s| s.agent).collect();
        self.steps.iter().enumerate().all(|(n, s)| {
            let Some(beta) = s.beta else { return true };
            let upto = &agents[..=n];
            let all = Coalition::from_agents(upto.iter().copied());
            let tail = (0..=n).any(|j| Coalition::from_agents(upto[j..].iter().copied()) == beta);
            tail || self.beta0.union(all).is_subset(beta)
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PushAwayOutcome {
    pub v_star: World,
    pub rounds: Vec<PushRound>,
}

impl PushAwayOutcome {
    pub fn properties_hold(&self) -> bool {
        self.rounds.iter().all(|r| r.gamma_strictly_decreasing() && r.beta_shape())
    }
}

/// Moves `v` within `[v]_{agt(z₀,v)}` to a bisimilar `v*` with
/// `d_t(zs,v*) > m` and `d_t(w,v*) > m`, where `t = ρ(v, agt(z₀,v))`.
pub fn push_away(ctx: &FreenessContext, w: World, v: World, zs: &[World], z0: World, m: usize) -> Result<PushAwayOutcome, FreenessError> {
    let ck = ctx.ck;
    let gamma = ctx.agt(z0, v);
    let t = AvoidSet { v, gamma };
    if w == v || zs.contains(&v) {
        return Err(FreenessError::SameWorld);
    }
    if !gamma.is_subset(ctx.agt(w, v)) {
        return Err(FreenessError::HypothesisViolated("agt(z₀,v) ⊄ agt(w,v)".into()));
    }
    if let Some(&z) = zs.iter().find(|&&z| !gamma.is_subset(ctx.agt(z, v))) {
        return Err(FreenessError::HypothesisViolated(format!("agt(z₀,v) ⊄ agt({z},v)")));
    }
    if !ctx.far(zs, v, &t, m)? {
        return Err(FreenessError::HypothesisViolated(format!("d_t(z̄,v) ≤ {m}")));
    }
    let mut keep: Vec<World> = zs.to_vec();
    keep.push(w);
    let mut cur = v;
    let mut rounds = Vec::new();
    while let Some(ell) = t_distance(ck, w, cur, &t, m)? {
        let beta0 = short_t(ck, cur, w, &t, m)
            .ok_or_else(|| FreenessError::PostconditionFailed {
                reason: format!("d_t(w,v) = {ell} but no short path from v to w"),
                path: None,
            })?
            .coalition;
        let gamma0 = gamma.minus(beta0);
        if gamma0.is_empty() {
            return Err(FreenessError::PostconditionFailed {
                reason: format!("agt(z₀,v) ⊆ short_t(v,w) = {beta0:?}"),
                path: minimal_non_t_path(ck, w, cur, &t, m)?,
            });
        }
        let mut round = PushRound {
            ell,
            beta0,
            gamma0,
            steps: Vec::new(),
        };
        let mut g = gamma0;
        let mut vn = cur;
        loop {
            let a = g.agents().next().expect("γ_n is non-empty inside the loop");
            let next = bisimilar_neighbour(ctx, vn, a, &keep, &mut |x| ctx.far(zs, x, &t, m))?
                .ok_or(FreenessError::NoCandidate { agent: a, world: vn })?;
            vn = next;
            let d = t_distance(ck, w, vn, &t, ell)?;
            if d.is_none() {
                round.steps.push(PushStep {
                    agent: a,
                    world: vn,
                    beta: None,
                    gamma: g,
                });
                break;
            }
            let b = short_t(ck, vn, w, &t, m).map(|s| s.coalition).unwrap_or(Coalition::EMPTY);
            let g_next = g.minus(b);
            round.steps.push(PushStep {
                agent: a,
                world: vn,
                beta: Some(b),
                gamma: g_next,
            });
            if !g_next.is_proper_subset(g) {
                return Err(FreenessError::PostconditionFailed {
                    reason: format!("γ did not shrink at step {} ({g:?} → {g_next:?})", round.steps.len()),
                    path: None,
                });
            }
            g = g_next;
            if g.is_empty() {
                break;
            }
        }
        if let Some(p) = minimal_non_t_path(ck, w, vn, &t, ell)? {
            return Err(FreenessError::PostconditionFailed {
                reason: format!("d_t(w,v_k) = {} is not above {ell}", p.len()),
                path: Some(p),
            });
        }
        if !round.beta_shape() {
            return Err(FreenessError::PostconditionFailed {
                reason: "β sequence violates its shape property".into(),
                path: None,
            });
        }
        rounds.push(round);
        cur = vn;
    }
    if !ctx.bisimilar(cur, v) || !ck.same_class(cur, v, gamma) || keep.iter().any(|&z| ctx.agt(cur, z) != ctx.agt(v, z)) {
        return Err(FreenessError::PostconditionFailed {
            reason: "result left the bisimulation class, the γ-class, or changed an agt value".into(),
            path: None,
        });
    }
    if let Some(p) = zs
        .iter()
        .map(|&z| minimal_non_t_path(ck, z, cur, &t, m))
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .flatten()
        .next()
    {
        return Err(FreenessError::PostconditionFailed {
            reason: format!("d_t(z̄,v*) = {} ≤ {m}", p.len()),
            path: Some(p),
        });
    }
    Ok(PushAwayOutcome { v_star: cur, rounds })
}

/// Dual-hypergraph distance between `⋃⟦z̄⟧ ∖ t` and `⟦v⟧ ∖ t` in `d ∖ t`,
/// for `t = ⟦v⟧ ∩ ⟦z₀⟧`; `None` means unreachable.
pub fn free_distance(ck: &CKStructure, d: &DualHypergraph, v: World, zs: &[World], z0: World) -> Option<usize> {
    let _ = ck;
    let ev = d.hyperedge(v);
    let t: HashSet<Vertex> = d.hyperedge(z0).iter().copied().filter(|x| ev.contains(x)).collect();
    let mut xs: Vec<Vertex> = zs.iter().chain(std::iter::once(&z0)).flat_map(|&z| d.hyperedge(z).iter().copied()).collect();
    xs.sort_unstable();
    xs.dedup();
    gaifman_distance(&d.hypergraph, &xs, ev, &t)
}

/// `(z̄,z₀) ⊥_m v`.
pub fn is_m_free(ck: &CKStructure, d: &DualHypergraph, v: World, zs: &[World], z0: World, m: usize) -> bool {
    free_distance(ck, d, v, zs, z0).is_none_or(|x| x > m)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum WitnessStage {
    Raise { agent: usize, to: World },
    Triangle { u: World, outcome: TriangleOutcome },
    PushAway { w: World, outcome: PushAwayOutcome },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct WitnessOutcome {
    pub v_star: World,
    pub stages: Vec<WitnessStage>,
    pub dual_distance: Option<usize>,
}

/// A bisimilar copy `v*` of `v` with `agt(v*,z₀) = γ` and `(z̄,z₀) ⊥_m v*`,
/// built by the triangle step followed by repeated push-away.
pub fn find_free_witness(
    ctx: &FreenessContext,
    v: World,
    zs: &[World],
    z0: World,
    gamma: Coalition,
    m: usize,
) -> Result<WitnessOutcome, FreenessError> {
    let ck = ctx.ck;
    if !ctx.agt(v, z0).is_subset(gamma) || !gamma.is_subset(ck.grand()) {
        return Err(FreenessError::HypothesisViolated("γ ⊉ agt(v,z₀)".into()));
    }
    let mut others: Vec<World> = zs.iter().copied().filter(|&z| z != z0).collect();
    others.sort_unstable();
    others.dedup();
    let mut stages = Vec::new();
    let mut cur = v;
    // Raise agt(·,z₀) to γ one agent at a time.
    while let Some(a) = gamma.minus(ctx.agt(cur, z0)).agents().next() {
        let before = ctx.agt(cur, z0);
        let next = bisimilar_neighbour(ctx, cur, a, &[], &mut |x| Ok(ctx.agt(x, z0) == before.with(a)))?
            .ok_or(FreenessError::NoCandidate { agent: a, world: cur })?;
        stages.push(WitnessStage::Raise { agent: a, to: next });
        cur = next;
    }
    if !gamma.is_empty() {
        let mut done: Vec<World> = Vec::new();
        for &u in &others {
            let out = triangle_step(ctx, cur, u, &done, z0)?;
            cur = out.v_star;
            stages.push(WitnessStage::Triangle { u, outcome: out });
            done.push(u);
        }
        let t = AvoidSet { v: cur, gamma };
        let target = m + 1;
        let mut processed: Vec<World> = Vec::new();
        for &w in std::iter::once(&z0).chain(others.iter()) {
            if t_distance(ck, w, cur, &t, target)?.is_some() {
                let out = push_away(ctx, w, cur, &processed, z0, target)?;
                cur = out.v_star;
                stages.push(WitnessStage::PushAway { w, outcome: out });
            }
            processed.push(w);
        }
    }
    let dual_distance = free_distance(ck, &ctx.dual, cur, zs, z0);
    if !(ctx.bisimilar(cur, v) && ctx.agt(cur, z0) == gamma && dual_distance.is_none_or(|x| x > m)) {
        return Err(FreenessError::PostconditionFailed {
            reason: format!("candidate {cur} is not a free witness (dual distance {dual_distance:?})"),
            path: None,
        });
    }
    Ok(WitnessOutcome {
        v_star: cur,
        stages,
        dual_distance,
    })
}

/// Exhaustive scan of `v`'s bisimulation class for a free witness.
pub fn brute_force_witness(ctx: &FreenessContext, v: World, zs: &[World], z0: World, gamma: Coalition, m: usize) -> Option<World> {
    (0..ctx.ck.n()).find(|&x| {
        ctx.bisimilar(x, v) && ctx.agt(x, z0) == gamma && is_m_free(ctx.ck, &ctx.dual, x, zs, z0, m)
    })
}

/// One quantifier instance of (m,k)-freeness.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FreenessCell {
    pub v: World,
    pub zs: Vec<World>,
    pub z0: World,
    pub gamma: Coalition,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FreenessReport {
    pub m: usize,
    pub k: usize,
    pub holds: bool,
    pub cells: usize,
    /// Cells settled by the constructive procedure.
    pub constructive: usize,
    /// Cells where the procedure failed but the exhaustive scan found a witness.
    pub fallback: usize,
    pub counterexample: Option<FreenessCell>,
    /// First procedure error seen, for diagnosis.
    pub first_error: Option<String>,
}

fn subsets_up_to(items: &[World], k: usize) -> Vec<Vec<World>> {
    let mut out = vec![Vec::new()];
    fn go(items: &[World], k: usize, start: usize, cur: &mut Vec<World>, out: &mut Vec<Vec<World>>) {
        if cur.len() == k {
            return;
        }
        for i in start..items.len() {
            cur.push(items[i]);
            out.push(cur.clone());
            go(items, k, i + 1, cur, out);
            cur.pop();
        }
    }
    go(items, k, 0, &mut Vec::new(), &mut out);
    out
}

/// Exhaustive (m,k)-freeness: all `v`, pointed sets `(z̄,z₀)` with
/// `z₀ ∈ z̄`, `|z̄| ≤ k`, and `γ ⊇ agt(v,z₀)`.
pub fn check_mk_free(ctx: &FreenessContext, m: usize, k: usize) -> FreenessReport {
    let ck = ctx.ck;
    let n = ck.n();
    let mut report = FreenessReport {
        m,
        k,
        holds: true,
        cells: 0,
        constructive: 0,
        fallback: 0,
        counterexample: None,
        first_error: None,
    };
    if k == 0 || m == 0 || n == 0 {
        return report;
    }
    let worlds: Vec<World> = (0..n).collect();
    let pointed: Vec<(World, Vec<World>)> = (0..n)
        .flat_map(|z0| {
            let rest: Vec<World> = worlds.iter().copied().filter(|&z| z != z0).collect();
            subsets_up_to(&rest, k - 1).into_iter().map(move |mut s| {
                s.push(z0);
                s.sort_unstable();
                (z0, s)
            })
        })
        .collect();
    // Per v: (cells, constructive, fallback, first failure, first error).
    type Tally = (usize, usize, usize, Option<FreenessCell>, Option<String>);
    let per_v: Vec<Tally> = (0..n)
        .into_par_iter()
        .map(|v| {
            let mut tally: Tally = (0, 0, 0, None, None);
            for (z0, zs) in &pointed {
                for gamma in ctx.agt(v, *z0).supersets(ck.num_agents()) {
                    tally.0 += 1;
                    match find_free_witness(ctx, v, zs, *z0, gamma, m) {
                        Ok(_) => tally.1 += 1,
                        Err(e) => {
                            if tally.4.is_none() {
                                tally.4 = Some(format!("v={v} z̄={zs:?} z₀={z0} γ={gamma:?}: {e}"));
                            }
                            if brute_force_witness(ctx, v, zs, *z0, gamma, m).is_some() {
                                tally.2 += 1;
                            } else if tally.3.is_none() {
                                tally.3 = Some(FreenessCell {
                                    v,
                                    zs: zs.clone(),
                                    z0: *z0,
                                    gamma,
                                });
                            }
                        }
                    }
                }
            }
            tally
        })
        .collect();
    for (cells, cons, fb, fail, err) in per_v {
        report.cells += cells;
        report.constructive += cons;
        report.fallback += fb;
        if report.counterexample.is_none() && fail.is_some() {
            report.counterexample = fail;
        }
        if report.first_error.is_none() {
            report.first_error = err;
        }
    }
    report.holds = report.counterexample.is_none();
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cayley::{tree_unfold, EdgeSet};
    use crate::kripke::{ck_expand, validate_s5, ValidateOptions};

    fn chain3() -> crate::kripke::S5Structure {
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
    fn length_one_paths() {
        let ck = ck_expand(&chain3());
        let p = CosetPath {
            worlds: vec![0, 1],
            labels: vec![Coalition::singleton(0)],
        };
        let f = classify_path(&ck, &p, None).unwrap();
        assert!(f.separated);
        assert!(!f.inner);
        let bad = CosetPath {
            worlds: vec![0, 2],
            labels: vec![Coalition::singleton(0)],
        };
        assert!(matches!(classify_path(&ck, &bad, None), Err(FreenessError::MalformedPath(_))));
    }

    #[test]
    fn distance_one_shortcut() {
        let c = tree_unfold(&chain3(), 0, 3, EdgeSet::Spanning, 1).unwrap();
        let ctx = FreenessContext::new(c.ck(), 4).unwrap();
        let ck = ctx.ck;
        for w in 0..ck.n().min(12) {
            for v in 0..ck.n().min(12) {
                if w == v {
                    continue;
                }
                for gamma in ck.coalitions() {
                    let t = AvoidSet { v, gamma };
                    let d = t_distance(ck, w, v, &t, 3).unwrap();
                    let at = ctx.agt(w, v);
                    assert_eq!(d == Some(1), !ck.class_subset(v, gamma, v, at), "w={w} v={v} γ={gamma:?}");
                    if gamma.is_subset(at) {
                        assert_ne!(d, Some(1));
                    }
                    if let Some(p) = minimal_non_t_path(ck, w, v, &t, 3).unwrap() {
                        let f = classify_path(ck, &p, Some(&t)).unwrap();
                        assert!(f.separated && f.non_t == Some(true));
                    }
                }
            }
        }
    }

    #[test]
    fn same_world_rejected() {
        let ck = ck_expand(&chain3());
        let t = AvoidSet { v: 0, gamma: Coalition::EMPTY };
        assert_eq!(t_distance(&ck, 0, 0, &t, 3), Err(FreenessError::SameWorld));
    }

    #[test]
    fn triangle_zero_iterations() {
        let c = tree_unfold(&chain3(), 0, 3, EdgeSet::Spanning, 1).unwrap();
        let ctx = FreenessContext::new(c.ck(), 4).unwrap();
        let out = triangle_step(&ctx, 0, 0, &[], 0).unwrap();
        assert_eq!(out.v_star, 0);
        assert!(out.moves.is_empty());
    }
}
