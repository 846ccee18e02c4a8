//! JSON file formats for structures, coverings and dual hypergraphs.
//!
//! Keys are written in a fixed order, maps are sorted by name and every pair
//! is written smaller world first, so equal structures serialise to equal bytes.

use crate::cayley::CayleyStructure;
use crate::hypergraph::DualHypergraph;
use crate::kripke::{validate_s5, CKStructure, KripkeError, S5Structure, ValidateOptions, World};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("cannot read or write {path}: {source}")]
    File { path: String, source: std::io::Error },
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("edges given for unknown agent '{0}'")]
    UnknownAgent(String),
    #[error(transparent)]
    Kripke(#[from] KripkeError),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneratorEntry {
    pub agent: String,
    pub edge: [World; 2],
    pub copy: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoveringBlock {
    pub map: Vec<World>,
    pub base: World,
    pub generators: Vec<GeneratorEntry>,
}

/// On-disk structure.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StructureFile {
    pub agents: Vec<String>,
    pub worlds: usize,
    #[serde(default)]
    pub edges: BTreeMap<String, Vec<[World; 2]>>,
    #[serde(default)]
    pub props: BTreeMap<String, Vec<World>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub covering: Option<CoveringBlock>,
}

impl StructureFile {
    pub fn from_s5(m: &S5Structure) -> Self {
        let edges = (0..m.num_agents())
            .map(|a| (m.agents()[a].clone(), m.edge_list(a).into_iter().map(|(u, v)| [u, v]).collect()))
            .collect();
        let props = m.props().iter().cloned().zip(m.valuation()).collect();
        StructureFile {
            agents: m.agents().to_vec(),
            worlds: m.n(),
            edges,
            props,
            covering: None,
        }
    }

    pub fn from_cayley(c: &CayleyStructure) -> Self {
        let mut f = Self::from_s5(c.ck().base());
        let agents = c.ck().agents();
        f.covering = Some(CoveringBlock {
            map: c.map().to_vec(),
            base: c.base_world,
            generators: c
                .generators
                .iter()
                .map(|g| GeneratorEntry {
                    agent: agents[g.id.agent].clone(),
                    edge: [g.id.edge.0, g.id.edge.1],
                    copy: g.id.copy,
                })
                .collect(),
        });
        f
    }

    /// Validate into an S5 structure; propositions are indexed in name order.
    pub fn to_s5(&self, opts: ValidateOptions) -> Result<S5Structure, IoError> {
        if let Some(name) = self.edges.keys().find(|k| !self.agents.contains(k)) {
            return Err(IoError::UnknownAgent(name.clone()));
        }
        let raw: Vec<Vec<(World, World)>> = self
            .agents
            .iter()
            .map(|a| self.edges.get(a).map_or_else(Vec::new, |es| es.iter().map(|e| (e[0], e[1])).collect()))
            .collect();
        let props: Vec<String> = self.props.keys().cloned().collect();
        let val: Vec<Vec<World>> = self.props.values().cloned().collect();
        Ok(validate_s5(self.agents.clone(), &raw, self.worlds, props, &val, opts)?)
    }

    pub fn to_ck(&self) -> Result<CKStructure, IoError> {
        Ok(crate::kripke::ck_expand(&self.to_s5(ValidateOptions::default())?))
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string(self).expect("structure serialises");
        s.push('\n');
        s
    }

    pub fn parse(text: &str) -> Result<Self, IoError> {
        Ok(serde_json::from_str(text)?)
    }
}

pub fn read_structure(path: &str) -> Result<StructureFile, IoError> {
    let text = std::fs::read_to_string(path).map_err(|source| IoError::File {
        path: path.into(),
        source,
    })?;
    StructureFile::parse(&text)
}

pub fn write_text(path: &str, text: &str) -> Result<(), IoError> {
    std::fs::write(path, text).map_err(|source| IoError::File {
        path: path.into(),
        source,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct VertexEntry {
    pub coalition: String,
    pub class: u32,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct HypergraphFile {
    pub vertices: Vec<VertexEntry>,
    pub hyperedges: Vec<Vec<u32>>,
    /// Hyperedge index of `⟦w⟧` per world.
    pub edge_of_world: Vec<u32>,
}

impl HypergraphFile {
    pub fn from_dual(d: &DualHypergraph, ck: &CKStructure) -> Self {
        HypergraphFile {
            vertices: d
                .vertices
                .iter()
                .map(|&(alpha, class)| VertexEntry {
                    coalition: alpha.agents().map(|a| ck.agents()[a].as_str()).collect::<Vec<_>>().join(","),
                    class,
                })
                .collect(),
            hyperedges: d.hypergraph.edges().to_vec(),
            edge_of_world: d.edge_of_world.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_byte_exact() {
        let text = r#"{"agents":["a","b"],"worlds":3,"edges":{"a":[[0,1]],"b":[[1,2]]},"props":{"p0":[0,2]}}"#;
        let f = StructureFile::parse(text).unwrap();
        let m = f.to_s5(ValidateOptions::default()).unwrap();
        let back = StructureFile::from_s5(&m);
        assert_eq!(back.to_json().trim_end(), text);
    }

    #[test]
    fn loops_survive() {
        let text = r#"{"agents":["a"],"worlds":1,"edges":{"a":[[0,0]]},"props":{}}"#;
        let m = StructureFile::parse(text).unwrap().to_s5(ValidateOptions::default()).unwrap();
        assert_eq!(StructureFile::from_s5(&m).to_json().trim_end(), text);
    }

    #[test]
    fn unknown_agent_rejected() {
        let text = r#"{"agents":["a"],"worlds":2,"edges":{"z":[[0,1]]}}"#;
        assert!(matches!(StructureFile::parse(text).unwrap().to_s5(ValidateOptions::default()), Err(IoError::UnknownAgent(_))));
    }
}
