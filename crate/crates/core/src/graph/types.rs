use std::fmt;

use serde::{Deserialize, Serialize};

use crate::gateway::Embedding;

macro_rules! id_type {
    ($name:ident, $prefix:literal) => {
        #[derive(
            Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize,
        )]
        #[serde(transparent)]
        pub struct $name(pub u32);

        impl $name {
            pub fn index(self) -> usize {
                self.0 as usize
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, concat!($prefix, "{}"), self.0)
            }
        }
    };
}

id_type!(EntityId, "e");
id_type!(DescriptionId, "desc");
id_type!(DocumentId, "doc");
id_type!(RelationId, "rel");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum EntityType {
    Person,
    Organization,
    Gpe,
    Misc,
}

impl EntityType {
    /// Parses the extraction label, case-insensitively.
    pub fn parse(label: &str) -> Option<EntityType> {
        match label.trim().to_ascii_uppercase().as_str() {
            "PERSON" => Some(EntityType::Person),
            "ORGANIZATION" | "ORGANISATION" => Some(EntityType::Organization),
            "GPE" => Some(EntityType::Gpe),
            "MISC" => Some(EntityType::Misc),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            EntityType::Person => "PERSON",
            EntityType::Organization => "ORGANIZATION",
            EntityType::Gpe => "GPE",
            EntityType::Misc => "MISC",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntityNode {
    pub id: EntityId,
    pub name: String,
    #[serde(rename = "type")]
    pub entity_type: EntityType,
    pub aliases: Vec<String>,
}

impl EntityNode {
    /// Name followed by aliases.
    pub fn names(&self) -> impl Iterator<Item = &str> {
        std::iter::once(self.name.as_str()).chain(self.aliases.iter().map(String::as_str))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DescriptionNode {
    pub id: DescriptionId,
    pub entity_id: EntityId,
    pub text: String,
    pub embedding: Embedding,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocumentNode {
    pub id: DocumentId,
    pub source_id: String,
    pub chunk_index: usize,
    pub text: String,
    pub embedding: Embedding,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelatedToLink {
    pub id: RelationId,
    pub source: EntityId,
    pub target: EntityId,
    pub relation: String,
    pub embedding: Embedding,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DescribesSource {
    Document(DocumentId),
    Description(DescriptionId),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DescribesLink {
    pub from: DescribesSource,
    pub entity: EntityId,
}

/// Outcome of [`GraphStore::upsert_entity`](super::GraphStore::upsert_entity).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Upserted {
    pub id: EntityId,
    pub created: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoredDescription {
    pub description: DescriptionId,
    pub entity: EntityId,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoredDocument {
    pub document: DocumentId,
    pub score: f64,
}

/// Entities and related_to links within n hops of a seed set.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Neighborhood {
    pub entities: std::collections::BTreeSet<EntityId>,
    pub links: Vec<RelationId>,
    pub seeds: std::collections::BTreeSet<EntityId>,
    pub skipped_seeds: usize,
}
