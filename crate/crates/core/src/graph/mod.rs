//! Persistent text-attributed knowledge graph.

mod snapshot;
mod store;
mod types;

use thiserror::Error;

use crate::gateway::DimensionError;

pub use snapshot::SnapshotError;
pub use store::{normalize_name, GraphParts, GraphStore};
pub use types::*;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("not found: {0}")]
    NotFound(String),
    #[error("{name:?} matches several existing entities: {candidates:?}")]
    AmbiguousEntity {
        name: String,
        candidates: Vec<EntityId>,
    },
    #[error("document ({source_id}, {chunk_index}) already exists")]
    Conflict {
        source_id: String,
        chunk_index: usize,
    },
    #[error("invalid relation: {0}")]
    InvalidRelation(String),
    #[error("invalid embedding: {0}")]
    InvalidEmbedding(String),
    #[error("embedding dimension {got}, store uses {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("entity name is empty")]
    EmptyName,
    #[error("{0} text is empty")]
    EmptyText(&'static str),
    #[error("integrity violation: {0}")]
    Integrity(String),
}

impl From<DimensionError> for GraphError {
    fn from(e: DimensionError) -> Self {
        GraphError::DimensionMismatch {
            expected: e.right,
            got: e.left,
        }
    }
}
