//! Acceptance suite: twelve property checks over seeded random structures and
//! a generated corpus, each compared against a brute-force oracle.
//!
//! Reports contain no timings, so equal specs give byte-identical reports.

pub mod oracles;

use crate::acyclicity::{acyclicity_level, check_2acyclic_char, find_coset_cycle};
use crate::bisim::{check_covering, coarsest_bisimulation, pair_levels, CoveringMap, Mode};
use crate::cayley::{build_covering_capped, richness_profile, EdgeSet};
use crate::coalition::Coalition;
use crate::corpus::{gen_corpus, random_s5, Corpus, CorpusError, CorpusSpec, Origin, Step};
use crate::efgame::{upgrade_experiment, GameError, Gates};
use crate::formula::{CharBuilder, Evaluator, F};
use crate::freeness::{check_mk_free, push_away, step_away_check, t_distance, triangle_step, AvoidSet, FreenessContext, FreenessError};
use crate::hypergraph::{attach_region, cl_m, dual, gaifman_distance, is_n_acyclic_hg, Vertex};
use crate::kripke::{ck_expand, CKStructure, Partition, S5Structure, World};
use oracles::Reach;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet, HashSet};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SuiteError {
    #[error("cannot parse suite spec: {0}")]
    SpecParse(String),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
}

/// Size limits and sample counts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Limits {
    /// Largest structure analysed by the corpus-wide checks.
    pub max_worlds: usize,
    /// Largest structure for brute-force reachability oracles.
    pub oracle_worlds: usize,
    /// Largest structure for sampled closure instances.
    pub attach_worlds: usize,
    /// Largest structure for coset-path enumeration.
    pub path_worlds: usize,
    /// Largest structure for exhaustive freeness checks.
    pub free_worlds: usize,
    /// Largest structure in an upgrade pair, per round count.
    pub game_worlds: [usize; 2],
    pub attach_samples: usize,
    pub path_samples: usize,
    pub procedure_calls: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            max_worlds: 3000,
            oracle_worlds: 200,
            attach_worlds: 400,
            path_worlds: 200,
            free_worlds: 64,
            game_worlds: [200, 64],
            attach_samples: 12,
            path_samples: 40,
            procedure_calls: 120,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteSpec {
    pub seed: u64,
    /// Its seed is replaced by the suite seed.
    #[serde(default)]
    pub corpus: CorpusSpec,
    /// Criteria to run; empty means all.
    #[serde(default)]
    pub criteria: Vec<usize>,
    #[serde(default)]
    pub limits: Limits,
}

impl SuiteSpec {
    pub fn parse(text: &str) -> Result<Self, SuiteError> {
        serde_json::from_str(text).map_err(|e| SuiteError::SpecParse(e.to_string()))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CriterionResult {
    pub id: usize,
    pub title: String,
    pub passed: bool,
    /// Nothing to check (empty corpus).
    pub vacuous: bool,
    /// Number of checked instances.
    pub checked: usize,
    pub summary: String,
    pub notes: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SuiteReport {
    pub seed: u64,
    pub corpus_entries: usize,
    pub corpus_skipped: Vec<(String, String)>,
    pub warnings: Vec<String>,
    pub criteria: Vec<CriterionResult>,
    pub passed: bool,
}

impl SuiteReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serialises");
        s.push('\n');
        s
    }

    pub fn to_junit(&self) -> String {
        let failures = self.criteria.iter().filter(|c| !c.passed).count();
        let mut out = String::from("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
        out += &format!(
            "<testsuite name=\"epistemia-acceptance\" tests=\"{}\" failures=\"{failures}\" errors=\"0\">\n",
            self.criteria.len()
        );
        out += &format!("  <properties><property name=\"seed\" value=\"{}\"/></properties>\n", self.seed);
        for c in &self.criteria {
            out += &format!("  <testcase classname=\"acceptance\" name=\"{:02} {}\">\n", c.id, xml(&c.title));
            if !c.passed {
                out += &format!("    <failure message=\"{}\"/>\n", xml(&c.summary));
            }
            if c.vacuous {
                out += "    <skipped message=\"vacuous\"/>\n";
            }
            let mut body = c.summary.clone();
            for n in &c.notes {
                body.push('\n');
                body += n;
            }
            out += &format!("    <system-out>{}</system-out>\n", xml(&body));
            out += "  </testcase>\n";
        }
        for w in &self.warnings {
            out += &format!("  <system-err>{}</system-err>\n", xml(w));
        }
        out += "</testsuite>\n";
        out
    }
}

fn xml(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

pub const TITLES: [&str; 12] = [
    "CK-expansion matches Floyd–Warshall reachability",
    "bounded bisimilarity iff characteristic formula",
    "Cayley coverings are bisimilar coverings",
    "S5 and CK bisimulations coincide",
    "2-acyclicity identity matches 2-cycle search",
    "n-acyclic frames have n-acyclic duals",
    "attaching a vertex to a closed set",
    "no short inner non-t path bounds t-distances",
    "triangle, step-away and push-away postconditions",
    "(m,k)-freeness of rich acyclic coverings",
    "bounded bisimilarity upgrades to FO equivalence",
    "reports are deterministic",
];

/// Coset-cycle search cap for corpus items.
pub const ACYCLICITY_CAP: usize = 9;

/// A corpus entry prepared for analysis.
pub struct Item {
    pub name: String,
    pub origin: Origin,
    pub s5: S5Structure,
    pub ck: CKStructure,
    /// Verified acyclicity, capped at [`ACYCLICITY_CAP`].
    pub acyclicity: usize,
}

impl Item {
    fn boosted(&self) -> bool {
        matches!(&self.origin, Origin::Covering { step: Step::Cover { copies, .. } | Step::Unfold { copies, .. }, .. } if *copies >= 1)
    }

    /// Coverings built from a full Cayley group; unfoldings are truncated.
    fn is_cayley(&self) -> bool {
        matches!(self.origin, Origin::Covering { step: Step::Cover { .. }, .. })
    }

    fn base(&self) -> &str {
        match &self.origin {
            Origin::Base => &self.name,
            Origin::Covering { base, .. } => base,
        }
    }
}

/// Generated corpus plus per-entry analysis, shared by all criteria.
pub struct Prepared {
    pub spec: SuiteSpec,
    pub corpus: Corpus,
    /// Entries of at most `max_worlds` worlds, in corpus order.
    pub items: Vec<Item>,
}

impl Prepared {
    pub fn new(spec: &SuiteSpec) -> Result<Self, SuiteError> {
        let mut cs = spec.corpus.clone();
        cs.seed = spec.seed;
        let corpus = gen_corpus(&cs)?;
        let items = corpus
            .entries
            .par_iter()
            .filter(|e| e.s5.n() <= spec.limits.max_worlds)
            .map(|e| {
                let ck = ck_expand(&e.s5);
                Item {
                    name: e.name.clone(),
                    origin: e.origin.clone(),
                    s5: e.s5.clone(),
                    acyclicity: acyclicity_level(&ck, ACYCLICITY_CAP),
                    ck,
                }
            })
            .collect();
        Ok(Prepared {
            spec: spec.clone(),
            corpus,
            items,
        })
    }

    fn rng(&self, id: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.spec.seed ^ id.wrapping_mul(0x9E37_79B9_7F4A_7C15))
    }

    pub fn warnings(&self) -> Vec<String> {
        if self.corpus.is_empty() {
            vec!["corpus is empty; corpus-based criteria pass vacuously".into()]
        } else {
            Vec::new()
        }
    }

    pub fn run(&self, id: usize) -> CriterionResult {
        match id {
            1 => c1_ck_expansion(self),
            2 => c2_characteristic(self),
            3 => c3_coverings(self),
            4 => c4_ck_safety(self),
            5 => c5_two_acyclic(self),
            6 => c6_dual_acyclicity(self),
            7 => c7_attach(self),
            8 => c8_distance(self),
            9 => c9_procedures(self),
            10 => c10_freeness(self),
            11 => c11_upgrade(self),
            12 => c12_determinism(self),
            _ => result(id, false, 0, format!("unknown criterion {id}"), vec![]),
        }
    }
}

fn result(id: usize, passed: bool, checked: usize, summary: String, notes: Vec<String>) -> CriterionResult {
    CriterionResult {
        id,
        title: TITLES.get(id.wrapping_sub(1)).copied().unwrap_or("unknown").to_string(),
        passed,
        vacuous: false,
        checked,
        summary,
        notes,
    }
}

fn vacuous(id: usize) -> CriterionResult {
    CriterionResult {
        vacuous: true,
        ..result(id, true, 0, "empty corpus".into(), vec![])
    }
}

/// Keep the first few notes and count the rest.
fn cap_notes(mut notes: Vec<String>, keep: usize) -> Vec<String> {
    if notes.len() > keep {
        let extra = notes.len() - keep;
        notes.truncate(keep);
        notes.push(format!("... {extra} more"));
    }
    notes
}

pub fn run_suite(spec: &SuiteSpec) -> Result<SuiteReport, SuiteError> {
    let p = Prepared::new(spec)?;
    let ids: Vec<usize> = if spec.criteria.is_empty() { (1..=12).collect() } else { spec.criteria.clone() };
    let criteria: Vec<CriterionResult> = ids.iter().map(|&id| p.run(id)).collect();
    Ok(assemble(&p, criteria))
}

pub fn assemble(p: &Prepared, criteria: Vec<CriterionResult>) -> SuiteReport {
    SuiteReport {
        seed: p.spec.seed,
        corpus_entries: p.corpus.entries.len(),
        corpus_skipped: p.corpus.skipped.clone(),
        warnings: p.warnings(),
        passed: criteria.iter().all(|c| c.passed),
        criteria,
    }
}

fn names(prefix: &str, k: usize) -> Vec<String> {
    (0..k).map(|i| format!("{prefix}{i}")).collect()
}

fn c1_ck_expansion(p: &Prepared) -> CriterionResult {
    let mut rng = p.rng(1);
    let structures: Vec<S5Structure> = (0..200)
        .map(|_| {
            let n = rng.gen_range(1..=8);
            let k = rng.gen_range(1..=3);
            let d = rng.gen_range(0.1..0.6);
            random_s5(&mut rng, n, k, 1, d, false)
        })
        .collect();
    let notes: Vec<String> = structures
        .par_iter()
        .enumerate()
        .filter_map(|(i, m)| {
            let ck = ck_expand(m);
            let r = Reach::new(m);
            for alpha in Coalition::all(m.num_agents()) {
                for u in 0..m.n() {
                    for v in 0..m.n() {
                        if ck.same_class(u, v, alpha) != r.get(alpha, u, v) {
                            return Some(format!("structure {i}: coalition {alpha:?}, worlds ({u},{v})"));
                        }
                    }
                }
            }
            None
        })
        .collect();
    let passed = notes.is_empty();
    result(1, passed, structures.len(), format!("{} structures, {} mismatches", structures.len(), notes.len()), cap_notes(notes, 5))
}

/// All set partitions of `0..n`, by restricted growth strings.
fn set_partitions(n: usize) -> Vec<Partition> {
    fn go(i: usize, max: u32, rgs: &mut Vec<u32>, out: &mut Vec<Partition>) {
        if i == rgs.len() {
            out.push(Partition::from_labels(rgs));
            return;
        }
        for c in 0..=max + 1 {
            if i == 0 && c > 0 {
                break;
            }
            rgs[i] = c;
            go(i + 1, max.max(c), rgs, out);
        }
    }
    let mut out = Vec::new();
    go(0, 0, &mut vec![0; n], &mut out);
    out
}

/// Every S5 structure with `1..=max_n` worlds, `k` agents and one proposition.
fn all_small(k: usize, max_n: usize) -> Vec<S5Structure> {
    let mut out = Vec::new();
    for n in 1..=max_n {
        let parts = set_partitions(n);
        let mut combos: Vec<Vec<Partition>> = vec![vec![]];
        for _ in 0..k {
            combos = combos.into_iter().flat_map(|c| parts.iter().map(move |p| [c.clone(), vec![p.clone()]].concat())).collect();
        }
        for c in &combos {
            for bits in 0..1u32 << n {
                let val = vec![(0..n).filter(|&w| bits >> w & 1 == 1).collect::<Vec<World>>()];
                out.push(S5Structure::with_worlds(n, names("a", k), c.clone(), names("p", 1), &val).expect("small structure"));
            }
        }
    }
    out
}

fn c2_characteristic(_p: &Prepared) -> CriterionResult {
    const L: usize = 3;
    let mut checked = 0usize;
    let mut notes = Vec::new();
    for k in 1..=2 {
        let all = all_small(k, 3);
        let cks: Vec<CKStructure> = all.iter().map(ck_expand).collect();
        let chis: Vec<Vec<Vec<F>>> = cks
            .iter()
            .map(|ck| {
                let mut b = CharBuilder::new(ck, L);
                (0..ck.n()).map(|w| (0..=L).map(|l| b.chi(w, l)).collect()).collect()
            })
            .collect();
        let per_n: Vec<(usize, Vec<String>)> = (0..all.len())
            .into_par_iter()
            .map(|j| {
                let ckn = &cks[j];
                let mut ev = Evaluator::new(ckn);
                let mut count = 0;
                let mut bad = Vec::new();
                for i in 0..all.len() {
                    let ckm = &cks[i];
                    let levels = pair_levels(ckm, ckn, L, Mode::CK).expect("same signature");
                    let naive: Vec<Vec<Vec<bool>>> = (0..=L).map(|l| oracles::naive_bisimulation(&all[i], &all[j], true, Some(l))).collect();
                    for w in 0..ckm.n() {
                        for l in 0..=L {
                            let lv = &levels[l.min(levels.len() - 1)];
                            let sat = ev.eval(&chis[i][w][l]);
                            for v in 0..ckn.n() {
                                count += 1;
                                let bis = lv[w] == lv[ckm.n() + v];
                                let nb = naive[l][w][ckm.n() + v];
                                if bis != sat[v] || bis != nb {
                                    bad.push(format!(
                                        "agents {k}, structures {i}/{j}, worlds ({w},{v}), level {l}: bisimilar {bis}, χ holds {}, naive {nb}",
                                        sat[v]
                                    ));
                                }
                            }
                        }
                    }
                }
                (count, bad)
            })
            .collect();
        for (c, b) in per_n {
            checked += c;
            notes.extend(b);
        }
    }
    let passed = notes.is_empty();
    result(2, passed, checked, format!("{checked} pointed pairs and levels, {} mismatches", notes.len()), cap_notes(notes, 5))
}

fn c3_coverings(p: &Prepared) -> CriterionResult {
    if p.corpus.is_empty() {
        return vacuous(3);
    }
    let bases: Vec<_> = p.corpus.bases().collect();
    let outcomes: Vec<(String, [Result<(), String>; 2])> = bases
        .par_iter()
        .map(|e| {
            let target = ck_expand(&e.s5);
            let r = Reach::new(&e.s5);
            let run = |mode: EdgeSet| -> Result<(), String> {
                let c = build_covering_capped(&e.s5, 0, mode, 0, p.spec.corpus.cap).map_err(|err| format!("skip: {err}"))?;
                let map = c.map().to_vec();
                let cm = CoveringMap {
                    source: c.ck().clone(),
                    target: target.clone(),
                    map: map.clone(),
                };
                check_covering(&cm).map_err(|err| format!("fail: check_covering: {err}"))?;
                hom_oracle(c.ck().base(), &e.s5, &r, &map).map_err(|err| format!("fail: {err}"))
            };
            (e.name.clone(), [run(EdgeSet::Spanning), run(EdgeSet::Full)])
        })
        .collect();
    let mut notes = Vec::new();
    let mut both = 0;
    let mut checked = 0;
    let mut failed = 0;
    for (name, rs) in &outcomes {
        let mut ok = 0;
        for (mode, r) in ["spanning", "full"].iter().zip(rs) {
            match r {
                Ok(()) => {
                    ok += 1;
                    checked += 1;
                }
                Err(e) => {
                    if e.starts_with("fail") {
                        failed += 1;
                    }
                    notes.push(format!("{name} {mode}: {e}"));
                }
            }
        }
        if ok == 2 {
            both += 1;
        }
    }
    let passed = failed == 0 && both >= 30;
    result(
        3,
        passed,
        checked,
        format!("{checked} coverings verified, {both} bases in both modes (30 required), {failed} failures"),
        notes,
    )
}

/// Surjective, relation- and valuation-preserving, checked pair by pair against
/// the target's reachability matrices.
fn hom_oracle(src: &S5Structure, tgt: &S5Structure, r: &Reach, map: &[World]) -> Result<(), String> {
    let hit: BTreeSet<World> = map.iter().copied().collect();
    if hit.len() != tgt.n() {
        return Err("map is not surjective".into());
    }
    for w in 0..src.n() {
        if src.atoms(w) != tgt.atoms(map[w]) {
            return Err(format!("valuation differs at {w}"));
        }
    }
    for a in 0..src.num_agents() {
        for block in src.partition(a).blocks() {
            let img = map[block[0]];
            if let Some(&u) = block.iter().find(|&&u| !r.get(Coalition::singleton(a), img, map[u])) {
                return Err(format!("edge ({},{u}) of agent {a} not preserved", block[0]));
            }
        }
    }
    Ok(())
}

fn relabel(labels: impl Iterator<Item = u32>) -> Vec<u32> {
    let mut seen = BTreeMap::new();
    labels
        .map(|l| {
            let k = seen.len() as u32;
            *seen.entry(l).or_insert(k)
        })
        .collect()
}

fn c4_ck_safety(p: &Prepared) -> CriterionResult {
    let mut rng = p.rng(4);
    let pairs: Vec<(S5Structure, S5Structure)> = (0..100)
        .map(|i| {
            let k = rng.gen_range(1..=3);
            let n1 = rng.gen_range(1..=6);
            let d1 = rng.gen_range(0.2..0.7);
            let m = random_s5(&mut rng, n1, k, 1, d1, false);
            let n = if i % 2 == 0 {
                let n2 = rng.gen_range(1..=6);
                let d2 = rng.gen_range(0.2..0.7);
                random_s5(&mut rng, n2, k, 1, d2, false)
            } else {
                let mut perm: Vec<World> = (0..n1).collect();
                perm.shuffle(&mut rng);
                let parts = m
                    .partitions()
                    .iter()
                    .map(|pt| Partition::from_labels(&(0..n1).map(|w| pt.block_id(perm[w])).collect::<Vec<_>>()))
                    .collect();
                let val: Vec<Vec<World>> = vec![(0..n1).filter(|&w| m.holds(0, perm[w])).collect()];
                S5Structure::with_worlds(n1, m.agents().to_vec(), parts, m.props().to_vec(), &val).expect("permuted copy")
            };
            (m, n)
        })
        .collect();
    let notes: Vec<String> = pairs
        .par_iter()
        .enumerate()
        .filter_map(|(i, (m, n))| {
            let (cm, cn) = (ck_expand(m), ck_expand(n));
            let s5 = coarsest_bisimulation(&cm, &cn, Mode::S5).ok()?;
            let ck = coarsest_bisimulation(&cm, &cn, Mode::CK).ok()?;
            let lab = |b: &crate::bisim::BisimPartition| relabel((0..m.n()).map(|w| b.left(w)).chain((0..n.n()).map(|v| b.right(v))));
            let (a, b) = (lab(&s5), lab(&ck));
            let naive = oracles::naive_bisimulation(m, n, false, None);
            let size = m.n() + n.n();
            let agrees = (0..size).all(|x| (0..size).all(|y| (a[x] == a[y]) == naive[x][y]));
            (a != b || !agrees).then(|| format!("pair {i}: S5 {a:?}, CK {b:?}, naive agrees with S5: {agrees}"))
        })
        .collect();
    let passed = notes.is_empty();
    result(4, passed, pairs.len(), format!("{} pairs, {} mismatches", pairs.len(), notes.len()), cap_notes(notes, 5))
}

fn c5_two_acyclic(p: &Prepared) -> CriterionResult {
    if p.corpus.is_empty() {
        return vacuous(5);
    }
    let outcomes: Vec<(String, bool, bool, Option<bool>)> = p
        .corpus
        .entries
        .par_iter()
        .map(|e| {
            let ck = ck_expand(&e.s5);
            let ch = check_2acyclic_char(&ck);
            let cyc = find_coset_cycle(&ck, 2).is_none();
            let oracle = (e.s5.n() <= p.spec.limits.oracle_worlds).then(|| !oracles::has_two_cycle(&Reach::new(&e.s5)));
            (e.name.clone(), ch, cyc, oracle)
        })
        .collect();
    let mut notes = Vec::new();
    let negatives = outcomes.iter().filter(|o| !o.2).count();
    let oracle_checked = outcomes.iter().filter(|o| o.3.is_some()).count();
    for (name, ch, cyc, oracle) in &outcomes {
        if ch != cyc || oracle.is_some_and(|o| o != *cyc) {
            notes.push(format!("{name}: identity {ch}, cycle search {cyc}, oracle {oracle:?}"));
        }
    }
    let passed = notes.is_empty() && negatives > 0;
    result(
        5,
        passed,
        outcomes.len(),
        format!(
            "{} structures ({negatives} with 2-cycles, {oracle_checked} also by brute force), {} mismatches",
            outcomes.len(),
            notes.len()
        ),
        notes,
    )
}

fn c6_dual_acyclicity(p: &Prepared) -> CriterionResult {
    if p.corpus.is_empty() {
        return vacuous(6);
    }
    let outcomes: Vec<(usize, Vec<String>, usize)> = p
        .items
        .par_iter()
        .map(|it| {
            let mut checked = 0;
            let mut bad = Vec::new();
            let mut oracle = 0;
            let d = dual(&it.ck);
            let h = &d.hypergraph;
            let small = h.num_vertices() <= p.spec.limits.oracle_worlds;
            let adj = if small { oracles::gaifman(h.num_vertices(), h.edges()) } else { Vec::new() };
            for n in [3, 4] {
                if it.acyclicity < n {
                    continue;
                }
                checked += 1;
                if !is_n_acyclic_hg(h, n) {
                    bad.push(format!("{}: {n}-acyclic frame, dual not {n}-acyclic", it.name));
                }
                if small {
                    oracle += 1;
                    if oracles::uncovered_small_clique(&adj, h.edges(), n) || oracles::has_chordless_cycle(&adj, n) {
                        bad.push(format!("{}: brute force finds a {n}-cycle in the dual", it.name));
                    }
                }
            }
            (checked, bad, oracle)
        })
        .collect();
    let checked: usize = outcomes.iter().map(|o| o.0).sum();
    let oracle: usize = outcomes.iter().map(|o| o.2).sum();
    let notes: Vec<String> = outcomes.into_iter().flat_map(|o| o.1).collect();
    let passed = notes.is_empty() && checked > 0;
    result(
        6,
        passed,
        checked,
        format!("{checked} (structure, n) cases, {oracle} also by brute force, {} failures", notes.len()),
        notes,
    )
}

/// One sampled closure instance and what went wrong with it.
struct AttachSample {
    gated: bool,
    failure: Option<String>,
}

fn c7_attach(p: &Prepared) -> CriterionResult {
    if p.corpus.is_empty() {
        return vacuous(7);
    }
    let lim = &p.spec.limits;
    let items: Vec<(usize, &Item)> = p.items.iter().enumerate().filter(|(_, it)| it.s5.n() <= lim.attach_worlds && it.s5.n() > 1).collect();
    let samples: Vec<(String, usize, usize, AttachSample)> = items
        .par_iter()
        .flat_map_iter(|&(idx, it)| {
            let mut rng = p.rng(7_000 + idx as u64);
            let d = dual(&it.ck);
            let h = d.hypergraph.clone();
            let adj = oracles::gaifman(h.num_vertices(), h.edges());
            let mut out = Vec::new();
            for m in [2usize, 3] {
                let gated = it.acyclicity >= 2 * m + 1;
                let mut tries = 0;
                let mut got = 0;
                while got < lim.attach_samples && tries < 4 * lim.attach_samples {
                    tries += 1;
                    let w = rng.gen_range(0..it.ck.n());
                    let alpha = Coalition::all(it.ck.num_agents()).nth(rng.gen_range(1..it.ck.num_coalitions())).unwrap();
                    let class = crate::kripke::coset(&it.ck, w, alpha);
                    let w2 = class[rng.gen_range(0..class.len())];
                    let seed: BTreeSet<Vertex> = d.hyperedge(w).iter().chain(d.hyperedge(w2)).copied().collect();
                    let q = cl_m(&h, &seed, 2 * m + 1);
                    if q.len() * 3 > h.num_vertices() * 2 {
                        continue;
                    }
                    let dist = layers(&adj, &q, m);
                    let cands: Vec<Vertex> = (0..h.num_vertices() as Vertex).filter(|&a| dist[a as usize].is_some_and(|x| x >= 1)).collect();
                    let Some(&a) = cands.choose(&mut rng) else { continue };
                    got += 1;
                    let failure = attach_failure(&h, &adj, &q, a, m);
                    out.push((it.name.clone(), it.acyclicity, m, AttachSample { gated, failure }));
                }
            }
            out
        })
        .collect();
    let gated: Vec<_> = samples.iter().filter(|s| s.3.gated).collect();
    let gated_fail: Vec<String> = gated
        .iter()
        .filter_map(|s| s.3.failure.as_ref().map(|f| format!("{} (acyclicity {}, m={}): {f}", s.0, s.1, s.2)))
        .collect();
    let ungated_fail: Vec<String> = samples
        .iter()
        .filter(|s| !s.3.gated)
        .filter_map(|s| s.3.failure.as_ref().map(|f| format!("shortfall: {} is {}-acyclic, m={} needs {}: {f}", s.0, s.1, s.2, 2 * s.2 + 1)))
        .collect();
    let passed = gated_fail.is_empty() && gated.len() >= 50;
    let mut notes = gated_fail.clone();
    notes.extend(cap_notes(ungated_fail.clone(), 10));
    result(
        7,
        passed,
        gated.len(),
        format!(
            "{} instances on sufficiently acyclic duals (50 required), {} failures; {} further instances below 2m+1, {} of them failing",
            gated.len(),
            gated_fail.len(),
            samples.len() - gated.len(),
            ungated_fail.len()
        ),
        notes,
    )
}

/// Gaifman distance from `q` to every vertex, up to `m`.
fn layers(adj: &[BTreeSet<u32>], q: &BTreeSet<Vertex>, m: usize) -> Vec<Option<usize>> {
    let mut dist = vec![None; adj.len()];
    let mut frontier: Vec<Vertex> = q.iter().copied().collect();
    for &x in &frontier {
        dist[x as usize] = Some(0);
    }
    for d in 1..=m {
        let mut next = Vec::new();
        for &x in &frontier {
            for &y in &adj[x as usize] {
                if dist[y as usize].is_none() {
                    dist[y as usize] = Some(d);
                    next.push(y);
                }
            }
        }
        frontier = next;
    }
    dist
}

/// Run `attach_region` and recheck all four assertions by brute force.
fn attach_failure(h: &crate::hypergraph::Hypergraph, adj: &[BTreeSet<u32>], q: &BTreeSet<Vertex>, a: Vertex, m: usize) -> Option<String> {
    if !oracles::is_closed(adj, q, m) {
        return Some("sampled Q is not m-closed".into());
    }
    let att = match attach_region(h, q, a, m) {
        Ok(x) => x,
        Err(e) => return Some(format!("attach_region: {e}")),
    };
    let mut p = q.clone();
    p.insert(a);
    let q_hat = oracles::closure(adj, &p, m);
    if q_hat != att.q_hat {
        return Some(format!("closure differs from brute force ({} vs {})", att.q_hat.len(), q_hat.len()));
    }
    let new: BTreeSet<Vertex> = q_hat.difference(q).copied().collect();
    let d: BTreeSet<Vertex> = q.iter().copied().filter(|x| adj[*x as usize].iter().any(|y| new.contains(y))).collect();
    if d != att.d {
        return Some("attachment region differs from brute force".into());
    }
    let connected = oracles::connected(adj, &new);
    let rest: Vec<Vertex> = q.difference(&d).copied().collect();
    let newv: Vec<Vertex> = new.iter().copied().collect();
    let separates = oracles::bfs_distance(adj, &newv, &rest, &d.iter().copied().collect()).is_none_or(|x| x > m);
    let mut da = d.clone();
    da.insert(a);
    let mut rebuilt = oracles::closure(adj, &da, m);
    rebuilt.extend(q.iter().copied());
    let decomposition = rebuilt == q_hat;
    let dv: Vec<Vertex> = d.iter().copied().collect();
    let clique = dv.iter().enumerate().all(|(i, &x)| dv[i + 1..].iter().all(|y| adj[x as usize].contains(y)));
    let c = &att.checks;
    if (c.new_part_connected, c.separates, c.decomposition, c.d_is_clique) != (connected, separates, decomposition, Some(clique)) {
        return Some(format!("implementation checks {c:?} disagree with brute force"));
    }
    let failed: Vec<&str> = [(connected, "connectedness"), (separates, "separation"), (decomposition, "decomposition"), (clique, "clique")]
        .iter()
        .filter(|(ok, _)| !ok)
        .map(|(_, n)| *n)
        .collect();
    (!failed.is_empty()).then(|| format!("fails {}", failed.join(", ")))
}

/// Outcome of the sampled `(w, v, γ)` triples of one structure.
#[derive(Default)]
struct DistanceTally {
    triples: usize,
    /// Cases inside the gate whose hypothesis holds.
    hypotheses: usize,
    failures: Vec<String>,
    /// Cases outside the gate (not a covering, or too little acyclicity).
    outside: usize,
    outside_violations: usize,
    literal_hypotheses: usize,
    literal_counterexamples: usize,
    disagreements: Vec<String>,
}

/// Least verified acyclicity for which length-`l` paths count as short.
fn distance_gate(l: usize) -> usize {
    2 * l
}

fn c8_distance(p: &Prepared) -> CriterionResult {
    if p.corpus.is_empty() {
        return vacuous(8);
    }
    let lim = &p.spec.limits;
    let items: Vec<(usize, &Item)> = p
        .items
        .iter()
        .enumerate()
        .filter(|(_, it)| it.s5.n() <= lim.path_worlds && it.s5.n() > 1 && it.acyclicity >= 2)
        .collect();
    let tallies: Vec<(usize, bool, usize, DistanceTally)> = items
        .par_iter()
        .map(|&(idx, it)| {
            let mut rng = p.rng(8_000 + idx as u64);
            let cayley = it.is_cayley();
            let ck = &it.ck;
            let r = Reach::new(&it.s5);
            let d = dual(ck);
            let h = &d.hypergraph;
            let adj = oracles::gaifman(h.num_vertices(), h.edges());
            let mut t = DistanceTally::default();
            for _ in 0..lim.path_samples {
                let w = rng.gen_range(0..ck.n());
                let v = rng.gen_range(0..ck.n());
                if w == v {
                    continue;
                }
                let Some(agt) = r.agt(w, v) else { continue };
                let subs: Vec<Coalition> = agt.subsets().collect();
                let gamma = subs[rng.gen_range(0..subs.len())];
                t.triples += 1;
                let avoid = AvoidSet { v, gamma };
                let text: HashSet<Vertex> = avoid.extent(ck, &d).into_iter().collect();
                let xs: Vec<Vertex> = d.hyperedge(w).iter().copied().filter(|x| !text.contains(x)).collect();
                let ys: Vec<Vertex> = d.hyperedge(v).iter().copied().filter(|x| !text.contains(x)).collect();
                let dd = gaifman_distance(h, &xs, &ys, &text);
                let dd_o = oracles::bfs_distance(&adj, &xs, &ys, &text);
                if dd != dd_o {
                    t.disagreements.push(format!("{}: dual distance {dd:?} vs brute force {dd_o:?}", it.name));
                }
                let mut cumulative = true;
                for l in 1..=4usize {
                    let literal = l < 2 || !oracles::has_inner_non_t_path(&r, w, v, gamma, l);
                    cumulative &= literal;
                    let dt = t_distance(ck, w, v, &avoid, l).ok().flatten();
                    let dt_o = oracles::non_t_distance(&r, w, v, v, gamma, l);
                    if dt != dt_o {
                        t.disagreements.push(format!("{}: d_t({w},{v}) {dt:?} vs brute force {dt_o:?} at cap {l}", it.name));
                    }
                    let bounds = dt.is_none() && dd.is_none_or(|x| x + 1 > l);
                    let gated = cayley && it.acyclicity >= distance_gate(l);
                    if literal && gated {
                        t.literal_hypotheses += 1;
                        if !bounds {
                            t.literal_counterexamples += 1;
                        }
                    }
                    if !cumulative {
                        continue;
                    }
                    if gated {
                        t.hypotheses += 1;
                        if !bounds {
                            t.failures.push(format!(
                                "{} ({}-acyclic): w={w} v={v} γ={gamma:?} ℓ={l}: d_t {dt:?}, dual {dd:?}",
                                it.name, it.acyclicity
                            ));
                        }
                    } else {
                        t.outside += 1;
                        if !bounds {
                            t.outside_violations += 1;
                        }
                    }
                }
            }
            (it.ck.num_agents(), cayley, it.acyclicity, t)
        })
        .collect();
    let mut total = DistanceTally::default();
    let mut outside: BTreeMap<(bool, usize), (usize, usize)> = BTreeMap::new();
    let mut multi = 0;
    for (agents, cayley, acyc, t) in tallies {
        if agents > 1 {
            multi += t.hypotheses;
        }
        let e = outside.entry((cayley, acyc)).or_default();
        e.0 += t.outside;
        e.1 += t.outside_violations;
        total.triples += t.triples;
        total.hypotheses += t.hypotheses;
        total.literal_hypotheses += t.literal_hypotheses;
        total.literal_counterexamples += t.literal_counterexamples;
        total.failures.extend(t.failures);
        total.disagreements.extend(t.disagreements);
    }
    let mut notes: Vec<String> = outside
        .iter()
        .filter(|(_, (h, _))| *h > 0)
        .map(|((cayley, a), (h, f))| {
            let kind = if *cayley { "coverings" } else { "other structures" };
            format!("outside the gate, {a}-acyclic {kind}: {h} cases, {f} with a bound violated")
        })
        .collect();
    notes.insert(0, format!("inside the gate: {multi} cases on coverings with at least two agents"));
    notes.push(format!(
        "exact-length hypothesis inside the gate: {} cases, {} with a bound violated",
        total.literal_hypotheses, total.literal_counterexamples
    ));
    notes.extend(cap_notes(total.disagreements.clone(), 5));
    notes.extend(cap_notes(total.failures.clone(), 10));
    let passed = total.failures.is_empty() && total.disagreements.is_empty() && total.hypotheses > 0;
    result(
        8,
        passed,
        total.hypotheses,
        format!(
            "{} triples; {} cases on coverings with acyclicity ≥ 2ℓ and no inner non-t path up to ℓ, {} bound violations, {} oracle disagreements",
            total.triples,
            total.hypotheses,
            total.failures.len(),
            total.disagreements.len()
        ),
        notes,
    )
}

/// Signature-refinement bisimulation classes from reachability matrices.
fn oracle_bisim(s5: &S5Structure, r: &Reach) -> Vec<u32> {
    let n = s5.n();
    let coals: Vec<Coalition> = r.coalitions().filter(|a| !a.is_empty()).collect();
    let mut lab = relabel((0..n).map(|w| s5.atoms(w).iter().fold(0u32, |acc, &b| acc * 2 + b as u32)));
    loop {
        let sigs: Vec<(u32, Vec<BTreeSet<u32>>)> = (0..n)
            .map(|w| (lab[w], coals.iter().map(|&a| r.class(a, w).into_iter().map(|u| lab[u]).collect()).collect()))
            .collect();
        let mut ids = BTreeMap::new();
        let next: Vec<u32> = sigs
            .iter()
            .map(|s| {
                let k = ids.len() as u32;
                *ids.entry(s.clone()).or_insert(k)
            })
            .collect();
        let next = relabel(next.into_iter());
        if next == lab {
            return lab;
        }
        lab = next;
    }
}

#[derive(Default)]
struct ProcTally {
    calls: [usize; 3],
    unavailable: [usize; 3],
    failures: Vec<String>,
    push_rounds: usize,
}

fn c9_procedures(p: &Prepared) -> CriterionResult {
    if p.corpus.is_empty() {
        return vacuous(9);
    }
    let lim = &p.spec.limits;
    const M: usize = 2;
    let items: Vec<(usize, &Item)> = p
        .items
        .iter()
        .enumerate()
        .filter(|(_, it)| {
            it.is_cayley() && it.s5.n() <= lim.path_worlds && it.s5.n() > 2 && it.acyclicity >= 2 * M + 1 && it.ck.num_agents() >= 2
        })
        .collect();
    let per_call = lim.procedure_calls;
    let tallies: Vec<ProcTally> = items
        .par_iter()
        .map(|&(idx, it)| procedure_calls(p, idx, it, M, per_call))
        .collect();
    let mut t = ProcTally::default();
    for x in tallies {
        for i in 0..3 {
            t.calls[i] += x.calls[i];
            t.unavailable[i] += x.unavailable[i];
        }
        t.failures.extend(x.failures);
        t.push_rounds += x.push_rounds;
    }
    let enough = t.calls.iter().all(|&c| c >= 100);
    let passed = t.failures.is_empty() && enough;
    let notes = vec![
        format!("structures: {}", items.iter().map(|(_, it)| format!("{} ({}-acyclic)", it.name, it.acyclicity)).collect::<Vec<_>>().join(", ")),
        format!(
            "no bisimilar candidate in a class (richness shortfall): triangle {}, push-away {}",
            t.unavailable[0], t.unavailable[2]
        ),
        format!("push-away rounds checked for decreasing γ and the β shape: {}", t.push_rounds),
    ]
    .into_iter()
    .chain(cap_notes(t.failures.clone(), 10))
    .collect();
    result(
        9,
        passed,
        t.calls.iter().sum(),
        format!(
            "triangle {} calls, step-away {} calls, push-away {} calls (100 each required), {} failures",
            t.calls[0],
            t.calls[1],
            t.calls[2],
            t.failures.len()
        ),
        notes,
    )
}

fn procedure_calls(p: &Prepared, idx: usize, it: &Item, m: usize, per_call: usize) -> ProcTally {
    let mut rng = p.rng(9_000 + idx as u64);
    let mut t = ProcTally::default();
    let Ok(ctx) = FreenessContext::new(&it.ck, ACYCLICITY_CAP) else {
        t.failures.push(format!("{}: no freeness context", it.name));
        return t;
    };
    let ck = &it.ck;
    let r = Reach::new(&it.s5);
    let bis = oracle_bisim(&it.s5, &r);
    let agt = |a: World, b: World| r.agt(a, b).expect("2-acyclic and connected");
    let n = ck.n();
    let name = &it.name;
    // Distinct inputs only, keyed by procedure.
    let mut seen: HashSet<(u8, usize, usize, Vec<World>, usize)> = HashSet::new();
    // Triangle step.
    let mut tries = 0;
    while t.calls[0] < per_call && tries < 50 * per_call {
        tries += 1;
        let (v, u, z0) = (rng.gen_range(0..n), rng.gen_range(0..n), rng.gen_range(0..n));
        let zs: Vec<World> = (0..n)
            .filter(|&z| z != z0 && agt(v, z) == agt(v, z0).union(agt(z0, z)))
            .collect::<Vec<_>>()
            .choose(&mut rng)
            .map(|&z| vec![z])
            .unwrap_or_default();
        if !seen.insert((0, v, u, zs.clone(), z0)) {
            continue;
        }
        match triangle_step(&ctx, v, u, &zs, z0) {
            Ok(out) => {
                t.calls[0] += 1;
                let vs = out.v_star;
                let mut prev = v;
                let moves_ok = out.moves.iter().all(|mv| {
                    let ok = r.get(Coalition::singleton(mv.agent), prev, mv.to);
                    prev = mv.to;
                    ok
                });
                let keep_ok = zs.iter().chain([&z0]).all(|&z| agt(vs, z) == agt(v, z));
                if bis[vs] != bis[v] || agt(vs, u) != agt(vs, z0).union(agt(z0, u)) || !keep_ok || !moves_ok {
                    t.failures.push(format!("{name}: triangle_step(v={v}, u={u}, z̄={zs:?}, z₀={z0}) gave {vs}, which fails the brute-force postcondition"));
                }
            }
            Err(FreenessError::NoCandidate { .. }) => t.unavailable[0] += 1,
            Err(FreenessError::HypothesisViolated(_)) => {}
            Err(e) => {
                t.calls[0] += 1;
                t.failures.push(format!("{name}: triangle_step(v={v}, u={u}, z₀={z0}): {e}"));
            }
        }
    }
    // Step-away check.
    let mut tries = 0;
    while t.calls[1] < per_call && tries < 50 * per_call {
        tries += 1;
        let (v, z) = (rng.gen_range(0..n), rng.gen_range(0..n));
        if v == z {
            continue;
        }
        let subs: Vec<Coalition> = agt(v, z).subsets().collect();
        let gamma = subs[rng.gen_range(0..subs.len())];
        if oracles::non_t_distance(&r, z, v, v, gamma, m).is_none() {
            continue;
        }
        if !seen.insert((1, v, z, vec![], gamma.index())) {
            continue;
        }
        match step_away_check(&ctx, v, z, gamma, m) {
            Ok(rep) => {
                t.calls[1] += 1;
                if !rep.violations.is_empty() {
                    t.failures.push(format!("{name}: step-away from v={v} towards z={z}, γ={gamma:?}: {:?}", rep.violations[0]));
                }
                let short = |x: World| {
                    let fl = oracles::first_labels(&r, x, z, v, gamma, m);
                    (!fl.is_empty()).then(|| fl.iter().fold(Coalition::full(r.k), |acc, a| acc.intersection(*a)))
                };
                if rep.short != short(v) {
                    t.failures.push(format!("{name}: short_t({v},{z}) is {:?}, brute force {:?}", rep.short, short(v)));
                }
            }
            Err(FreenessError::HypothesisViolated(_)) => {}
            Err(e) => {
                t.calls[1] += 1;
                t.failures.push(format!("{name}: step_away_check(v={v}, z={z}, γ={gamma:?}): {e}"));
            }
        }
    }
    // Push-away.
    let mut tries = 0;
    while t.calls[2] < per_call && tries < 400 * per_call {
        tries += 1;
        let (w, v, z0) = (rng.gen_range(0..n), rng.gen_range(0..n), rng.gen_range(0..n));
        if w == v || z0 == v {
            continue;
        }
        let gamma = agt(z0, v);
        if !gamma.is_subset(agt(w, v)) || oracles::non_t_distance(&r, w, v, v, gamma, m).is_none() {
            continue;
        }
        let zs: Vec<World> = if rng.gen_bool(0.5) && oracles::non_t_distance(&r, z0, v, v, gamma, m).is_none() {
            vec![z0]
        } else {
            vec![]
        };
        if !seen.insert((2, w, v, zs.clone(), z0)) {
            continue;
        }
        match push_away(&ctx, w, v, &zs, z0, m) {
            Ok(out) => {
                t.calls[2] += 1;
                t.push_rounds += out.rounds.len();
                let vs = out.v_star;
                let far = |z: World| oracles::non_t_distance(&r, z, vs, v, gamma, m).is_none();
                let ok = bis[vs] == bis[v]
                    && r.get(gamma, vs, v)
                    && zs.iter().chain([&w]).all(|&z| agt(vs, z) == agt(v, z) && far(z))
                    && out.properties_hold();
                if !ok {
                    t.failures.push(format!("{name}: push_away(w={w}, v={v}, z̄={zs:?}, z₀={z0}) gave {vs}, which fails the brute-force postcondition"));
                }
            }
            Err(FreenessError::NoCandidate { .. }) => t.unavailable[2] += 1,
            Err(FreenessError::HypothesisViolated(_)) => {}
            Err(e) => {
                t.calls[2] += 1;
                t.failures.push(format!("{name}: push_away(w={w}, v={v}, z̄={zs:?}, z₀={z0}): {e}"));
            }
        }
    }
    t
}

fn c10_freeness(p: &Prepared) -> CriterionResult {
    if p.corpus.is_empty() {
        return vacuous(10);
    }
    let lim = &p.spec.limits;
    const K: usize = 2;
    let items: Vec<&Item> = p.items.iter().filter(|it| it.is_cayley() && it.boosted() && it.s5.n() <= lim.free_worlds).collect();
    let rows: Vec<(String, usize, usize, Option<String>, bool, Option<String>)> = items
        .par_iter()
        .flat_map_iter(|it| {
            let rich = richness_profile(&it.ck, false).map_or(usize::MAX, |r| r.count);
            let ctx = FreenessContext::new(&it.ck, ACYCLICITY_CAP);
            [2usize, 3]
                .into_iter()
                .map(|m| {
                    let mut gate = Vec::new();
                    if rich < K + 2 {
                        gate.push(format!("{rich}-rich, {} required", K + 2));
                    }
                    if it.acyclicity < 2 * m + 3 {
                        gate.push(format!("{}-acyclic, {} required", it.acyclicity, 2 * m + 3));
                    }
                    let gate = (!gate.is_empty()).then(|| gate.join("; "));
                    let (holds, detail) = match &ctx {
                        Ok(ctx) => {
                            let rep = check_mk_free(ctx, m, K);
                            (rep.holds, rep.counterexample.map(|c| format!("counterexample {c:?}")))
                        }
                        Err(e) => (false, Some(e.to_string())),
                    };
                    (it.name.clone(), m, K, gate, holds, detail)
                })
                .collect::<Vec<_>>()
        })
        .collect();
    let mut notes = Vec::new();
    let mut trues = [0usize; 2];
    let mut bad = 0;
    for (name, m, k, gate, holds, detail) in &rows {
        let i = m - 2;
        match (holds, gate) {
            (true, _) => {
                trues[i] += 1;
                notes.push(format!("({m},{k}) {name}: free"));
            }
            (false, Some(g)) => notes.push(format!("({m},{k}) {name}: not free, gate failure: {g}")),
            (false, None) => {
                bad += 1;
                notes.push(format!("({m},{k}) {name}: NOT FREE despite passing the gates: {}", detail.clone().unwrap_or_default()));
            }
        }
    }
    let passed = bad == 0 && trues.iter().all(|&t| t >= 5);
    result(
        10,
        passed,
        rows.len(),
        format!(
            "(2,2): {} free, (3,2): {} free (5 each required); {bad} unexplained failures",
            trues[0], trues[1]
        ),
        notes,
    )
}

fn c11_upgrade(p: &Prepared) -> CriterionResult {
    if p.corpus.is_empty() {
        return vacuous(11);
    }
    let lim = &p.spec.limits;
    let mut notes = Vec::new();
    let mut confirmed = [0usize; 2];
    let mut bad = 0;
    let mut checked = 0;
    for q in [1usize, 2] {
        let cap = lim.game_worlds[q - 1];
        let covers: Vec<&Item> = p.items.iter().filter(|it| it.is_cayley() && it.s5.n() <= cap).collect();
        let mut pairs: Vec<(&Item, &Item, World, World)> = Vec::new();
        for (i, a) in covers.iter().enumerate() {
            for b in &covers[i..] {
                if a.base() == b.base() {
                    pairs.push((a, b, 0, 0));
                    pairs.push((a, b, 0, 1.min(b.s5.n() - 1)));
                }
            }
        }
        let gates = Gates {
            min_acyclicity: 3,
            min_richness: q + 2,
            seed: p.spec.seed,
            ..Gates::default()
        };
        let rows: Vec<(String, Result<crate::efgame::UpgradeReport, GameError>)> = pairs
            .par_iter()
            .map(|(a, b, w, v)| (format!("q={q} {}@{w} / {}@{v}", a.name, b.name), upgrade_experiment(&a.ck, *w, &b.ck, *v, q, &gates)))
            .collect();
        let mut gate_failures = 0;
        let mut not_bisimilar = 0;
        let mut shown = Vec::new();
        for (label, r) in rows {
            match r {
                Err(GameError::GatesFailed(_)) => gate_failures += 1,
                Err(e) => {
                    bad += 1;
                    notes.push(format!("{label}: {e}"));
                }
                Ok(rep) if rep.out_of_warranty => {
                    gate_failures += 1;
                }
                Ok(rep) if !rep.l_bisimilar => not_bisimilar += 1,
                Ok(rep) => {
                    checked += 1;
                    let replay = rep.replay.as_ref().expect("replay runs for bisimilar pairs");
                    if rep.confirmed() {
                        confirmed[q - 1] += 1;
                        shown.push(format!(
                            "{label}: ℓ={}, oracle ≡_{q} over {} positions, {} Spoiler lines survived ({} fallback witnesses)",
                            rep.schedules.ell0(),
                            rep.oracle_positions,
                            replay.lines,
                            replay.fallback
                        ));
                    } else {
                        bad += 1;
                        notes.push(format!(
                            "{label}: NOT CONFIRMED: oracle {:?}, replay {}/{} survived, first failure {:?}",
                            rep.oracle, replay.survived, replay.lines, replay.first_failure
                        ));
                    }
                }
            }
        }
        notes.push(format!(
            "q={q}: {} candidate pairs, {gate_failures} failed the richness/acyclicity gates, {not_bisimilar} not ℓ-bisimilar",
            pairs.len()
        ));
        notes.extend(cap_notes(shown, 12));
    }
    let passed = bad == 0 && confirmed.iter().all(|&c| c >= 10);
    result(
        11,
        passed,
        checked,
        format!("q=1: {} confirmed, q=2: {} confirmed (10 each required), {bad} failures", confirmed[0], confirmed[1]),
        notes,
    )
}

fn c12_determinism(p: &Prepared) -> CriterionResult {
    let mut cs = p.spec.corpus.clone();
    cs.seed = p.spec.seed;
    let mut notes = Vec::new();
    match gen_corpus(&cs) {
        Ok(again) => {
            let same = again.entries.len() == p.corpus.entries.len()
                && again.entries.iter().zip(&p.corpus.entries).all(|(a, b)| a.name == b.name && a.s5 == b.s5);
            if !same {
                notes.push("regenerated corpus differs".into());
            }
            let small: Vec<_> = again.entries.iter().zip(&p.corpus.entries).filter(|(a, _)| a.s5.n() <= 200).collect();
            if small.iter().any(|(a, b)| a.to_file().to_json() != b.to_file().to_json()) {
                notes.push("serialised corpus differs".into());
            }
        }
        Err(e) => notes.push(format!("corpus regeneration failed: {e}")),
    }
    let (a, b) = (p.run(1), p.run(1));
    if serde_json::to_string(&a).ok() != serde_json::to_string(&b).ok() {
        notes.push("criterion 1 report differs between runs".into());
    }
    let passed = notes.is_empty();
    result(
        12,
        passed,
        p.corpus.entries.len(),
        if passed { "corpus and a repeated criterion are byte-identical".into() } else { "nondeterminism detected".into() },
        notes,
    )
}
