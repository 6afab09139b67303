//! Group-structured skill retrieval.
//!
//! Offline, a skill library is turned into a pool of anchor-centered skill groups
//! connected by a typed group graph. At query time the engine picks an anchor
//! group, adds support groups, reduces the plan to a small presented skill set,
//! backfills uncovered requirements, and renders a fixed execution contract.

pub mod config;
pub mod contract;
pub mod dictionary;
pub mod engine;
pub mod error;
pub mod gate;
pub mod library;
pub mod pipeline;
pub mod pool;
pub mod schema;
pub mod scoring;

pub use dictionary::{Category, Dictionary};
pub use error::{Error, Result};
pub use library::{load_library, load_library_with, EdgeType, FacetSet, Library, Skill, SkillEdge};
pub use pool::{build_pool, GroupPool, PoolParams, Role, SkillGroup};
pub use config::{Ablation, Config, Mode};
pub use contract::{truncate_payload, ExecutionContract};
pub use engine::Engine;
pub use gate::{run_gate, GateAnnotations, GateReport, Retriever};
pub use pipeline::{retrieve, RetrievalResult};
pub use schema::{extract_schema, high_confidence_facets, QuerySchema};
