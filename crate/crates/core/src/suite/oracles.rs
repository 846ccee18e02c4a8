//! Brute-force reference implementations used by the acceptance suite.
//!
//! Everything here works from the raw agent partitions or hyperedge lists and
//! shares no code with the modules it checks.

use crate::coalition::Coalition;
use crate::kripke::{S5Structure, World};
use std::collections::{BTreeSet, HashSet, VecDeque};

/// Reachability matrices `R_α` for every coalition, by Floyd–Warshall over
/// the union of the agents' equivalences (reflexive, so `R_∅` is the identity).
pub struct Reach {
    pub n: usize,
    pub k: usize,
    /// `mats[α][u * n + v]`.
    mats: Vec<Vec<bool>>,
}

impl Reach {
    pub fn new(m: &S5Structure) -> Self {
        let (n, k) = (m.n(), m.num_agents());
        let mats = (0..1usize << k)
            .map(|bits| {
                let mut r = vec![false; n * n];
                for u in 0..n {
                    r[u * n + u] = true;
                    for v in 0..n {
                        if (0..k).any(|a| bits >> a & 1 == 1 && m.partition(a).same(u, v)) {
                            r[u * n + v] = true;
                        }
                    }
                }
                for x in 0..n {
                    for u in 0..n {
                        if r[u * n + x] {
                            for v in 0..n {
                                if r[x * n + v] {
                                    r[u * n + v] = true;
                                }
                            }
                        }
                    }
                }
                r
            })
            .collect();
        Reach { n, k, mats }
    }

    pub fn get(&self, alpha: Coalition, u: World, v: World) -> bool {
        self.mats[alpha.index()][u * self.n + v]
    }

    pub fn coalitions(&self) -> impl Iterator<Item = Coalition> {
        Coalition::all(self.k)
    }

    pub fn class(&self, alpha: Coalition, u: World) -> Vec<World> {
        (0..self.n).filter(|&v| self.get(alpha, u, v)).collect()
    }

    /// `[u]_α ∩ [v]_β ≠ ∅`.
    pub fn meet(&self, u: World, alpha: Coalition, v: World, beta: Coalition) -> bool {
        (0..self.n).any(|x| self.get(alpha, u, x) && self.get(beta, v, x))
    }

    /// `[u]_α ⊆ [v]_β`.
    pub fn within(&self, u: World, alpha: Coalition, v: World, beta: Coalition) -> bool {
        (0..self.n).all(|x| !self.get(alpha, u, x) || self.get(beta, v, x))
    }

    /// Intersection of all coalitions connecting `u` and `v`, if it connects them itself.
    pub fn agt(&self, u: World, v: World) -> Option<Coalition> {
        let meet = self
            .coalitions()
            .filter(|&a| self.get(a, u, v))
            .fold(Coalition::full(self.k), |m, a| m.intersection(a));
        self.get(meet, u, v).then_some(meet)
    }
}

/// Coarsest bisimulation relation on the disjoint union of `m` and `n` by naive
/// fixpoint iteration, with one relation per agent (`ck = false`) or per coalition.
/// Returns the relation after `levels` rounds, or at the fixpoint if `None`.
pub fn naive_bisimulation(m: &S5Structure, n: &S5Structure, ck: bool, levels: Option<usize>) -> Vec<Vec<bool>> {
    let (rm, rn) = (Reach::new(m), Reach::new(n));
    let size = m.n() + n.n();
    let k = m.num_agents();
    let side = |x: usize| if x < m.n() { (0, x) } else { (1, x - m.n()) };
    let rels: Vec<Coalition> = if ck {
        Coalition::all(k).filter(|a| !a.is_empty()).collect()
    } else {
        (0..k).map(Coalition::singleton).collect()
    };
    let related = |x: usize, y: usize, a: Coalition| {
        let ((sx, ix), (sy, iy)) = (side(x), side(y));
        sx == sy && if sx == 0 { rm.get(a, ix, iy) } else { rn.get(a, ix, iy) }
    };
    let atoms = |x: usize| {
        let (s, i) = side(x);
        if s == 0 {
            m.atoms(i)
        } else {
            n.atoms(i)
        }
    };
    let mut z: Vec<Vec<bool>> = (0..size).map(|x| (0..size).map(|y| atoms(x) == atoms(y)).collect()).collect();
    let mut round = 0;
    loop {
        if levels.is_some_and(|l| round >= l) {
            return z;
        }
        let next: Vec<Vec<bool>> = (0..size)
            .map(|x| {
                (0..size)
                    .map(|y| {
                        z[x][y]
                            && rels.iter().all(|&a| {
                                (0..size).filter(|&x2| related(x, x2, a)).all(|x2| (0..size).any(|y2| related(y, y2, a) && z[x2][y2]))
                                    && (0..size).filter(|&y2| related(y, y2, a)).all(|y2| (0..size).any(|x2| related(x, x2, a) && z[x2][y2]))
                            })
                    })
                    .collect()
            })
            .collect();
        round += 1;
        if next == z {
            return z;
        }
        z = next;
    }
}

/// Whether some coset cycle of length 2 exists, by trying every
/// `(w₁, α₁, w₂, α₂)`.
pub fn has_two_cycle(r: &Reach) -> bool {
    let coals: Vec<Coalition> = r.coalitions().collect();
    for w1 in 0..r.n {
        for &a1 in &coals {
            for w2 in 0..r.n {
                if !r.get(a1, w1, w2) {
                    continue;
                }
                for &a2 in &coals {
                    let h = a1.intersection(a2);
                    if r.get(a2, w2, w1) && !r.meet(w1, h, w2, h) {
                        return true;
                    }
                }
            }
        }
    }
    false
}

/// Gaifman graph of a hyperedge list, as sorted adjacency lists.
pub fn gaifman(n: usize, edges: &[Vec<u32>]) -> Vec<BTreeSet<u32>> {
    let mut adj = vec![BTreeSet::new(); n];
    for e in edges {
        for &x in e {
            for &y in e {
                if x != y {
                    adj[x as usize].insert(y);
                }
            }
        }
    }
    adj
}

/// BFS distance from `xs` to `ys` avoiding `t`; `None` if unreachable.
pub fn bfs_distance(adj: &[BTreeSet<u32>], xs: &[u32], ys: &[u32], t: &HashSet<u32>) -> Option<usize> {
    let targets: HashSet<u32> = ys.iter().copied().filter(|y| !t.contains(y)).collect();
    let mut dist = vec![usize::MAX; adj.len()];
    let mut q = VecDeque::new();
    for &x in xs {
        if !t.contains(&x) && dist[x as usize] == usize::MAX {
            dist[x as usize] = 0;
            q.push_back(x);
        }
    }
    while let Some(x) = q.pop_front() {
        if targets.contains(&x) {
            return Some(dist[x as usize]);
        }
        for &y in &adj[x as usize] {
            if !t.contains(&y) && dist[y as usize] == usize::MAX {
                dist[y as usize] = dist[x as usize] + 1;
                q.push_back(y);
            }
        }
    }
    None
}

pub fn connected(adj: &[BTreeSet<u32>], set: &BTreeSet<u32>) -> bool {
    let Some(&s) = set.iter().next() else { return true };
    let mut seen = BTreeSet::from([s]);
    let mut q = vec![s];
    while let Some(x) = q.pop() {
        for &y in &adj[x as usize] {
            if set.contains(&y) && seen.insert(y) {
                q.push(y);
            }
        }
    }
    seen.len() == set.len()
}

/// Every simple path of at most `m` edges between two members of `q` whose
/// vertices have no adjacency besides consecutive ones; returns the interior
/// vertices not yet in `q`.
fn chordless_interiors(adj: &[BTreeSet<u32>], q: &BTreeSet<u32>, m: usize) -> BTreeSet<u32> {
    fn dfs(adj: &[BTreeSet<u32>], q: &BTreeSet<u32>, m: usize, path: &mut Vec<u32>, out: &mut BTreeSet<u32>) {
        let last = *path.last().unwrap();
        for &u in &adj[last as usize] {
            if path.contains(&u) {
                continue;
            }
            path.push(u);
            let chordless = (0..path.len()).all(|i| (i + 2..path.len()).all(|j| !adj[path[i] as usize].contains(&path[j])));
            if chordless {
                if q.contains(&u) {
                    out.extend(path[1..path.len() - 1].iter().filter(|x| !q.contains(x)));
                } else if path.len() <= m {
                    dfs(adj, q, m, path, out);
                }
            }
            path.pop();
        }
    }
    let mut out = BTreeSet::new();
    for &s in q {
        dfs(adj, q, m, &mut vec![s], &mut out);
    }
    out
}

/// Least `m`-closed superset of `p` by repeated path enumeration.
pub fn closure(adj: &[BTreeSet<u32>], p: &BTreeSet<u32>, m: usize) -> BTreeSet<u32> {
    let mut q = p.clone();
    loop {
        let add = chordless_interiors(adj, &q, m);
        if add.is_empty() {
            return q;
        }
        q.extend(add);
    }
}

pub fn is_closed(adj: &[BTreeSet<u32>], q: &BTreeSet<u32>, m: usize) -> bool {
    chordless_interiors(adj, q, m).is_empty()
}

/// Whether some clique of at most `n` vertices lies in no hyperedge, by
/// enumerating cliques in increasing vertex order.
pub fn uncovered_small_clique(adj: &[BTreeSet<u32>], edges: &[Vec<u32>], n: usize) -> bool {
    let sets: Vec<BTreeSet<u32>> = edges.iter().map(|e| e.iter().copied().collect()).collect();
    let covered = |c: &[u32]| sets.iter().any(|s| c.iter().all(|x| s.contains(x)));
    fn go(adj: &[BTreeSet<u32>], n: usize, c: &mut Vec<u32>, covered: &dyn Fn(&[u32]) -> bool) -> bool {
        if !covered(c) {
            return true;
        }
        if c.len() == n {
            return false;
        }
        let last = *c.last().unwrap();
        let cands: Vec<u32> = adj[last as usize].iter().copied().filter(|&v| v > last && c.iter().all(|x| adj[*x as usize].contains(&v))).collect();
        for v in cands {
            c.push(v);
            if go(adj, n, c, covered) {
                return true;
            }
            c.pop();
        }
        false
    }
    (0..adj.len() as u32).any(|v| go(adj, n, &mut vec![v], &covered))
}

/// Whether the Gaifman graph has a chordless cycle of length `4..=n`.
pub fn has_chordless_cycle(adj: &[BTreeSet<u32>], n: usize) -> bool {
    fn go(adj: &[BTreeSet<u32>], n: usize, path: &mut Vec<u32>) -> bool {
        let last = *path.last().unwrap();
        for &u in &adj[last as usize] {
            if u <= path[0] || path.contains(&u) {
                continue;
            }
            path.push(u);
            let l = path.len();
            let chordless_path = (0..l).all(|i| (i + 2..l).all(|j| (i == 0 && j == l - 1) || !adj[path[i] as usize].contains(&path[j])));
            if chordless_path {
                if l >= 4 && adj[u as usize].contains(&path[0]) {
                    return true;
                }
                if l < n && (l == 2 || !adj[u as usize].contains(&path[0])) && go(adj, n, path) {
                    return true;
                }
            }
            path.pop();
        }
        false
    }
    (0..adj.len() as u32).any(|v| go(adj, n, &mut vec![v]))
}

/// One coset path `w₁, α₁, …, α_ℓ, w_{ℓ+1}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RawPath {
    pub worlds: Vec<World>,
    pub labels: Vec<Coalition>,
}

/// Whether a labelled walk satisfies the coset-path conditions: consecutive
/// worlds are related, and the hinge cosets of consecutive worlds are
/// disjoint (with empty labels before the first and after the last step).
pub fn is_coset_path(r: &Reach, p: &RawPath) -> bool {
    let l = p.labels.len();
    if l == 0 || p.worlds.len() != l + 1 {
        return false;
    }
    let lab = |i: usize| if i == 0 || i > l { Coalition::EMPTY } else { p.labels[i - 1] };
    (1..=l).all(|i| {
        let (x, y) = (p.worlds[i - 1], p.worlds[i]);
        r.get(lab(i), x, y) && !r.meet(x, lab(i - 1).intersection(lab(i)), y, lab(i).intersection(lab(i + 1)))
    })
}

/// All coset paths of exactly `len` steps from `w` to `v` whose cosets
/// `[w_i]_{α_i}` all pass `allow`; stops after `limit` paths.
pub fn coset_paths(r: &Reach, w: World, v: World, len: usize, allow: &dyn Fn(World, Coalition) -> bool, limit: usize) -> Vec<RawPath> {
    let coals: Vec<Coalition> = r.coalitions().filter(|a| !a.is_empty()).collect();
    let mut out = Vec::new();
    let mut p = RawPath {
        worlds: vec![w],
        labels: vec![],
    };
    fn go(r: &Reach, v: World, len: usize, coals: &[Coalition], allow: &dyn Fn(World, Coalition) -> bool, p: &mut RawPath, out: &mut Vec<RawPath>, limit: usize) {
        if out.len() >= limit {
            return;
        }
        let x = *p.worlds.last().unwrap();
        let i = p.labels.len();
        if i == len {
            if x == v && is_coset_path(r, p) {
                out.push(p.clone());
            }
            return;
        }
        for &a in coals {
            if !allow(x, a) {
                continue;
            }
            // The hinge between the previous step and this one only depends on labels chosen so far.
            if i >= 1 {
                let (y, b) = (p.worlds[i - 1], p.labels[i - 1]);
                let before = if i >= 2 { p.labels[i - 2] } else { Coalition::EMPTY };
                if r.meet(y, before.intersection(b), x, b.intersection(a)) {
                    continue;
                }
            }
            for y in 0..r.n {
                if y == x || !r.get(a, x, y) {
                    continue;
                }
                p.labels.push(a);
                p.worlds.push(y);
                go(r, v, len, coals, allow, p, out, limit);
                p.labels.pop();
                p.worlds.pop();
            }
        }
    }
    go(r, v, len, &coals, allow, &mut p, &mut out, limit);
    out
}

/// Whether an inner non-t coset path of exactly `len ≥ 2` steps leads from
/// `w` to `v`, for `t = ρ(v,γ)`.
pub fn has_inner_non_t_path(r: &Reach, w: World, v: World, gamma: Coalition, len: usize) -> bool {
    let Some(alpha) = r.agt(w, v) else { return false };
    let outer = r.class(alpha, w).len();
    let allow = |x: World, a: Coalition| {
        r.within(x, a, w, alpha) && r.class(a, x).len() < outer && !r.within(v, gamma, x, a)
    };
    len >= 2 && !coset_paths(r, w, v, len, &allow, 1).is_empty()
}

/// `d_t(w,v)` for `t = ρ(anchor,γ)` if it is at most `cap`.
pub fn non_t_distance(r: &Reach, w: World, v: World, anchor: World, gamma: Coalition, cap: usize) -> Option<usize> {
    let allow = |x: World, a: Coalition| !r.within(anchor, gamma, x, a);
    (1..=cap).find(|&l| !coset_paths(r, w, v, l, &allow, 1).is_empty())
}

/// First labels of all non-t paths of length at most `cap` from `v` to `z`,
/// for `t = ρ(anchor,γ)`.
pub fn first_labels(r: &Reach, v: World, z: World, anchor: World, gamma: Coalition, cap: usize) -> BTreeSet<Coalition> {
    let allow = |x: World, a: Coalition| !r.within(anchor, gamma, x, a);
    (1..=cap)
        .flat_map(|l| coset_paths(r, v, z, l, &allow, usize::MAX))
        .map(|p| p.labels[0])
        .collect()
}
