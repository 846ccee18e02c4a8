//! Seeded structure corpora: random S5 bases, a fixed family of small named
//! bases, and pipelines of coverings and unfoldings over them.

use crate::cayley::{build_covering_capped, tree_unfold_capped, CayleyError, EdgeSet};
use crate::io::StructureFile;
use crate::kripke::{is_connected, ck_expand, Partition, S5Structure, UnionFind, World};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("bad corpus spec: {0}")]
    Spec(String),
    #[error(transparent)]
    Io(#[from] crate::io::IoError),
}

/// One pipeline stage applied to every base.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "step", rename_all = "lowercase")]
pub enum Step {
    Cover { edges: String, copies: usize },
    Unfold { depth: usize, edges: String, copies: usize },
}

impl Step {
    fn edge_set(&self) -> Result<EdgeSet, CorpusError> {
        let e = match self {
            Step::Cover { edges, .. } | Step::Unfold { edges, .. } => edges,
        };
        e.parse().map_err(CorpusError::Spec)
    }

    fn suffix(&self) -> String {
        match self {
            Step::Cover { edges, copies } => format!("cover-{edges}-k{copies}"),
            Step::Unfold { depth, edges, copies } => format!("unfold{depth}-{edges}-k{copies}"),
        }
    }
}

fn default_cap() -> usize {
    200_000
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusSpec {
    #[serde(default)]
    pub seed: u64,
    /// Number of random bases.
    pub count: usize,
    pub worlds: [usize; 2],
    pub agents: [usize; 2],
    #[serde(default = "one")]
    pub props: usize,
    /// Probability that a pair of worlds is merged for an agent.
    pub density: f64,
    /// Include the fixed named bases.
    #[serde(default)]
    pub named: bool,
    #[serde(default)]
    pub pipeline: Vec<Step>,
    /// Extra steps applied to the named bases only.
    #[serde(default)]
    pub named_pipeline: Vec<Step>,
    /// Group order cap for coverings and unfoldings.
    #[serde(default = "default_cap")]
    pub cap: usize,
}

fn one() -> usize {
    1
}

impl Default for CorpusSpec {
    fn default() -> Self {
        CorpusSpec {
            seed: 0,
            count: 30,
            worlds: [2, 4],
            agents: [1, 2],
            props: 1,
            density: 0.4,
            named: true,
            pipeline: vec![
                Step::Cover {
                    edges: "spanning".into(),
                    copies: 0,
                },
                Step::Cover {
                    edges: "full".into(),
                    copies: 0,
                },
            ],
            named_pipeline: (1..=3)
                .map(|copies| Step::Cover {
                    edges: "spanning".into(),
                    copies,
                })
                .chain([Step::Unfold {
                    depth: 3,
                    edges: "spanning".into(),
                    copies: 1,
                }])
                .collect(),
            cap: default_cap(),
        }
    }
}

/// How an entry was produced.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum Origin {
    Base,
    Covering { base: String, step: Step },
}

#[derive(Clone, Debug)]
pub struct CorpusEntry {
    pub name: String,
    pub origin: Origin,
    pub s5: S5Structure,
}

impl CorpusEntry {
    pub fn to_file(&self) -> StructureFile {
        StructureFile::from_s5(&self.s5)
    }
}

#[derive(Clone, Debug, Default)]
pub struct Corpus {
    pub entries: Vec<CorpusEntry>,
    /// Pipeline steps that were skipped, with the reason.
    pub skipped: Vec<(String, String)>,
}

impl Corpus {
    pub fn bases(&self) -> impl Iterator<Item = &CorpusEntry> {
        self.entries.iter().filter(|e| e.origin == Origin::Base)
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

fn names(prefix: &str, k: usize) -> Vec<String> {
    (0..k).map(|i| format!("{prefix}{i}")).collect()
}

/// Random S5 structure: each pair is merged per agent with probability `density`,
/// then components are joined if `connected` is set.
pub fn random_s5(rng: &mut ChaCha8Rng, n: usize, agents: usize, props: usize, density: f64, connected: bool) -> S5Structure {
    let mut ufs: Vec<UnionFind> = (0..agents).map(|_| UnionFind::new(n)).collect();
    for uf in ufs.iter_mut() {
        for u in 0..n {
            for v in u + 1..n {
                if rng.gen_bool(density) {
                    uf.union(u, v);
                }
            }
        }
    }
    if connected && agents > 0 {
        let mut all = UnionFind::new(n);
        for uf in ufs.iter_mut() {
            for w in 0..n {
                let r = uf.find(w);
                all.union(w, r);
            }
        }
        for w in 1..n {
            if all.find(w) != all.find(0) {
                let a = rng.gen_range(0..agents);
                let u = rng.gen_range(0..w);
                ufs[a].union(u, w);
                all.union(u, w);
            }
        }
    }
    let parts: Vec<Partition> = ufs.iter_mut().map(|uf| uf.partition()).collect();
    let val: Vec<Vec<World>> = (0..props).map(|_| (0..n).filter(|_| rng.gen_bool(0.5)).collect()).collect();
    S5Structure::with_worlds(n, names("a", agents), parts, names("p", props), &val).expect("random structure is well formed")
}

fn from_blocks(n: usize, agents: &[&[&[World]]], val: &[&[World]]) -> S5Structure {
    let parts = agents.iter().map(|bs| Partition::from_blocks(n, &bs.iter().map(|b| b.to_vec()).collect::<Vec<_>>())).collect();
    let val: Vec<Vec<World>> = val.iter().map(|v| v.to_vec()).collect();
    S5Structure::with_worlds(n, names("a", agents.len()), parts, names("p", val.len()), &val).expect("named structure is well formed")
}

/// Small hand-picked bases, including 2-cyclic ones.
pub fn named_bases() -> Vec<(String, S5Structure)> {
    vec![
        ("one2".into(), from_blocks(2, &[&[&[0, 1]]], &[&[0]])),
        ("one2u".into(), from_blocks(2, &[&[&[0, 1]]], &[&[0, 1]])),
        ("one3".into(), from_blocks(3, &[&[&[0, 1, 2]]], &[&[0]])),
        ("one3b".into(), from_blocks(3, &[&[&[0, 1, 2]]], &[&[0], &[1]])),
        ("chain3".into(), from_blocks(3, &[&[&[0, 1], &[2]], &[&[0], &[1, 2]]], &[&[0]])),
        ("chain3np".into(), from_blocks(3, &[&[&[0, 1], &[2]], &[&[0], &[1, 2]]], &[&[]])),
        ("chain4".into(), from_blocks(4, &[&[&[0, 1], &[2, 3]], &[&[0], &[1, 2], &[3]]], &[&[0]])),
        ("blk3".into(), from_blocks(4, &[&[&[0, 1, 2], &[3]], &[&[0], &[1], &[2, 3]]], &[&[0]])),
        ("twin".into(), from_blocks(2, &[&[&[0, 1]], &[&[0, 1]]], &[&[0]])),
        ("tri3".into(), from_blocks(3, &[&[&[0, 1], &[2]], &[&[0], &[1, 2]], &[&[0, 2], &[1]]], &[&[0]])),
    ]
}

/// Apply one pipeline step to a base, rooted at world 0.
pub fn apply_step(base: &S5Structure, step: &Step, cap: usize) -> Result<S5Structure, CayleyError> {
    let edges = step.edge_set().map_err(|_| CayleyError::BadDepth)?;
    let c = match step {
        Step::Cover { copies, .. } => build_covering_capped(base, 0, edges, *copies, cap)?,
        Step::Unfold { depth, copies, .. } => tree_unfold_capped(base, 0, *depth, edges, *copies, cap)?,
    };
    Ok(c.ck().base().clone())
}

/// Deterministic corpus: same spec, same entries in the same order.
pub fn gen_corpus(spec: &CorpusSpec) -> Result<Corpus, CorpusError> {
    if spec.worlds[0] == 0 || spec.worlds[0] > spec.worlds[1] || spec.agents[0] > spec.agents[1] {
        return Err(CorpusError::Spec("ranges must be non-empty with a positive world count".into()));
    }
    if !(0.0..=1.0).contains(&spec.density) {
        return Err(CorpusError::Spec("density must lie in [0,1]".into()));
    }
    for s in spec.pipeline.iter().chain(&spec.named_pipeline) {
        s.edge_set()?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut bases: Vec<(String, S5Structure, bool)> = if spec.named {
        named_bases().into_iter().map(|(n, s)| (n, s, true)).collect()
    } else {
        Vec::new()
    };
    for i in 0..spec.count {
        let n = rng.gen_range(spec.worlds[0]..=spec.worlds[1]);
        let k = rng.gen_range(spec.agents[0]..=spec.agents[1]);
        let connected = !spec.pipeline.is_empty();
        bases.push((format!("r{:03}-n{n}-g{k}", i), random_s5(&mut rng, n, k, spec.props, spec.density, connected), false));
    }
    let mut corpus = Corpus::default();
    for (name, s5, named) in bases {
        corpus.entries.push(CorpusEntry {
            name: name.clone(),
            origin: Origin::Base,
            s5: s5.clone(),
        });
        if !is_connected(&ck_expand(&s5)).unwrap_or(false) {
            continue;
        }
        let extra: &[Step] = if named { &spec.named_pipeline } else { &[] };
        for step in spec.pipeline.iter().chain(extra) {
            let cname = format!("{name}-{}", step.suffix());
            match apply_step(&s5, step, spec.cap) {
                Ok(c) => corpus.entries.push(CorpusEntry {
                    name: cname,
                    origin: Origin::Covering {
                        base: name.clone(),
                        step: step.clone(),
                    },
                    s5: c,
                }),
                Err(e) => corpus.skipped.push((cname, e.to_string())),
            }
        }
    }
    Ok(corpus)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_bytes() {
        let spec = CorpusSpec {
            count: 5,
            named: false,
            pipeline: vec![],
            named_pipeline: vec![],
            ..CorpusSpec::default()
        };
        let a: Vec<String> = gen_corpus(&spec).unwrap().entries.iter().map(|e| e.to_file().to_json()).collect();
        let b: Vec<String> = gen_corpus(&spec).unwrap().entries.iter().map(|e| e.to_file().to_json()).collect();
        assert_eq!(a, b);
    }

    #[test]
    fn singleton_range() {
        let spec = CorpusSpec {
            count: 4,
            worlds: [1, 1],
            named: false,
            pipeline: vec![],
            named_pipeline: vec![],
            ..CorpusSpec::default()
        };
        assert!(gen_corpus(&spec).unwrap().entries.iter().all(|e| e.s5.n() == 1));
    }
}
