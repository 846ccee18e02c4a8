//! Epistemic modal logic with common knowledge over finite S5 structures.
//!
//! The crate covers CK-expansion, bisimulation, bisimilar coverings by Cayley
//! structures, coset acyclicity, dual hypergraphs, freeness and the
//! Ehrenfeucht–Fraïssé upgrading game, each with brute-force cross-checks.
//!
//! ```
//! use epistemia::cayley::{build_covering, EdgeSet};
//! use epistemia::formula::{model_check, parse};
//! use epistemia::io::StructureFile;
//!
//! let text = r#"{"agents":["a","b"],"worlds":3,"edges":{"a":[[0,1]],"b":[[1,2]]},"props":{"p0":[0,2]}}"#;
//! let s5 = StructureFile::parse(text).unwrap().to_s5(Default::default()).unwrap();
//! let ck = epistemia::ck_expand(&s5);
//! let f = parse("[a]p0", ck.agents(), s5.props()).unwrap();
//! assert!(model_check(&ck, 2, &f) && !model_check(&ck, 0, &f));
//!
//! let c = build_covering(&s5, 0, EdgeSet::Spanning, 1).unwrap();
//! assert!(epistemia::bisim::check_covering(&c.covering).is_ok());
//! ```

pub mod acyclicity;
pub mod bisim;
pub mod cayley;
pub mod coalition;
pub mod corpus;
pub mod efgame;
pub mod formula;
pub mod freeness;
pub mod hypergraph;
pub mod io;
pub mod kripke;
pub mod suite;

pub use coalition::{AgentId, Coalition, MAX_AGENTS};
pub use kripke::{ck_expand, coset, is_connected, validate_s5, CKStructure, Partition, S5Structure, World};
