use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};

use log::warn;

use super::types::*;
use super::GraphError;
use crate::gateway::{cosine, Embedding};

/// Normalized lookup key for entity names and aliases: trimmed, inner
/// whitespace collapsed to single spaces, lowercased.
pub fn normalize_name(name: &str) -> String {
    name.split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .to_lowercase()
}

/// Text-attributed knowledge graph: entity, description and document nodes
/// joined by describes and related_to links.
///
/// Ids are dense indices assigned in insertion order, so iteration over any
/// node kind is insertion-ordered and deterministic.
#[derive(Debug, Clone, Default)]
pub struct GraphStore {
    dim: Option<usize>,
    entities: Vec<EntityNode>,
    descriptions: Vec<DescriptionNode>,
    documents: Vec<DocumentNode>,
    relations: Vec<RelatedToLink>,
    describes: Vec<DescribesLink>,

    name_index: HashMap<String, EntityId>,
    document_keys: HashMap<(String, usize), DocumentId>,
    describes_pairs: HashSet<(DescribesSource, EntityId)>,
    entity_documents: Vec<Vec<DocumentId>>,
    entity_descriptions: Vec<Vec<DescriptionId>>,
    incident_relations: Vec<Vec<RelationId>>,
}

/// Raw node and link lists, as written to and read from a snapshot.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct GraphParts {
    pub dim: Option<usize>,
    pub entities: Vec<EntityNode>,
    pub descriptions: Vec<DescriptionNode>,
    pub documents: Vec<DocumentNode>,
    pub relations: Vec<RelatedToLink>,
    pub describes: Vec<DescribesLink>,
}

impl GraphStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn dim(&self) -> Option<usize> {
        self.dim
    }

    pub fn entities(&self) -> &[EntityNode] {
        &self.entities
    }

    pub fn descriptions(&self) -> &[DescriptionNode] {
        &self.descriptions
    }

    pub fn documents(&self) -> &[DocumentNode] {
        &self.documents
    }

    pub fn relations(&self) -> &[RelatedToLink] {
        &self.relations
    }

    pub fn describes_links(&self) -> &[DescribesLink] {
        &self.describes
    }

    pub fn entity(&self, id: EntityId) -> Option<&EntityNode> {
        self.entities.get(id.index())
    }

    pub fn description(&self, id: DescriptionId) -> Option<&DescriptionNode> {
        self.descriptions.get(id.index())
    }

    pub fn document(&self, id: DocumentId) -> Option<&DocumentNode> {
        self.documents.get(id.index())
    }

    pub fn relation(&self, id: RelationId) -> Option<&RelatedToLink> {
        self.relations.get(id.index())
    }

    pub fn is_empty(&self) -> bool {
        self.entities.is_empty() && self.documents.is_empty()
    }

    pub fn find_entity(&self, name: &str) -> Option<EntityId> {
        self.name_index.get(&normalize_name(name)).copied()
    }

    pub fn descriptions_of(&self, id: EntityId) -> &[DescriptionId] {
        self.entity_descriptions
            .get(id.index())
            .map_or(&[], Vec::as_slice)
    }

    /// "subject relation object" rendering of a link.
    pub fn render_relation(&self, id: RelationId) -> Option<String> {
        let link = self.relation(id)?;
        let source = &self.entity(link.source)?.name;
        let target = &self.entity(link.target)?.name;
        Some(format!("{source} {} {target}", link.relation))
    }

    fn check_embedding(&mut self, embedding: &Embedding) -> Result<(), GraphError> {
        if !embedding.is_unit() {
            return Err(GraphError::InvalidEmbedding(format!(
                "norm {} is not 1",
                embedding.norm()
            )));
        }
        match self.dim {
            Some(d) if d != embedding.dim() => Err(GraphError::DimensionMismatch {
                expected: d,
                got: embedding.dim(),
            }),
            Some(_) => Ok(()),
            None => {
                self.dim = Some(embedding.dim());
                Ok(())
            }
        }
    }

    fn check_entity(&self, id: EntityId) -> Result<(), GraphError> {
        if id.index() < self.entities.len() {
            Ok(())
        } else {
            Err(GraphError::NotFound(id.to_string()))
        }
    }

    /// Inserts an entity, or resolves it against an existing one when its
    /// normalized name or any alias is already known, in which case the
    /// alias sets are unioned.
    ///
    /// An alias set touching two distinct existing entities is rejected
    /// with [`GraphError::AmbiguousEntity`] and the store is left unchanged.
    pub fn upsert_entity(
        &mut self,
        name: &str,
        entity_type: EntityType,
        aliases: &[String],
    ) -> Result<Upserted, GraphError> {
        let name = name.split_whitespace().collect::<Vec<_>>().join(" ");
        if name.is_empty() {
            return Err(GraphError::EmptyName);
        }
        let mut candidates: Vec<&str> = vec![name.as_str()];
        candidates.extend(aliases.iter().map(|a| a.trim()).filter(|a| !a.is_empty()));

        let mut matched = BTreeSet::new();
        for c in &candidates {
            if let Some(&id) = self.name_index.get(&normalize_name(c)) {
                matched.insert(id);
            }
        }

        match matched.len() {
            0 => {
                let id = EntityId(self.entities.len() as u32);
                let mut node = EntityNode {
                    id,
                    name: name.clone(),
                    entity_type,
                    aliases: Vec::new(),
                };
                self.name_index.insert(normalize_name(&name), id);
                for alias in &candidates[1..] {
                    let key = normalize_name(alias);
                    if let std::collections::hash_map::Entry::Vacant(slot) =
                        self.name_index.entry(key)
                    {
                        slot.insert(id);
                        node.aliases
                            .push(alias.split_whitespace().collect::<Vec<_>>().join(" "));
                    }
                }
                self.entities.push(node);
                self.entity_documents.push(Vec::new());
                self.entity_descriptions.push(Vec::new());
                self.incident_relations.push(Vec::new());
                Ok(Upserted { id, created: true })
            }
            1 => {
                let id = *matched.iter().next().expect("one match");
                for c in &candidates {
                    let key = normalize_name(c);
                    if let std::collections::hash_map::Entry::Vacant(slot) =
                        self.name_index.entry(key)
                    {
                        slot.insert(id);
                        self.entities[id.index()]
                            .aliases
                            .push(c.split_whitespace().collect::<Vec<_>>().join(" "));
                    }
                }
                Ok(Upserted { id, created: false })
            }
            _ => Err(GraphError::AmbiguousEntity {
                name,
                candidates: matched.into_iter().collect(),
            }),
        }
    }

    pub fn add_description(
        &mut self,
        entity: EntityId,
        text: &str,
        embedding: Embedding,
    ) -> Result<DescriptionId, GraphError> {
        self.check_entity(entity)?;
        if text.trim().is_empty() {
            return Err(GraphError::EmptyText("description"));
        }
        self.check_embedding(&embedding)?;
        let id = DescriptionId(self.descriptions.len() as u32);
        self.descriptions.push(DescriptionNode {
            id,
            entity_id: entity,
            text: text.to_string(),
            embedding,
        });
        self.push_describes(DescribesSource::Description(id), entity);
        Ok(id)
    }

    pub fn add_document(
        &mut self,
        source_id: &str,
        chunk_index: usize,
        text: &str,
        embedding: Embedding,
        mentioned: &[EntityId],
    ) -> Result<DocumentId, GraphError> {
        for &e in mentioned {
            self.check_entity(e)?;
        }
        let key = (source_id.to_string(), chunk_index);
        if self.document_keys.contains_key(&key) {
            return Err(GraphError::Conflict {
                source_id: source_id.to_string(),
                chunk_index,
            });
        }
        self.check_embedding(&embedding)?;
        let id = DocumentId(self.documents.len() as u32);
        self.documents.push(DocumentNode {
            id,
            source_id: source_id.to_string(),
            chunk_index,
            text: text.to_string(),
            embedding,
        });
        self.document_keys.insert(key, id);
        for &e in mentioned {
            self.push_describes(DescribesSource::Document(id), e);
        }
        Ok(id)
    }

    /// Adds a describes link from an existing document to an entity; a
    /// duplicate pair is a no-op returning false.
    pub fn link_document(
        &mut self,
        document: DocumentId,
        entity: EntityId,
    ) -> Result<bool, GraphError> {
        self.check_entity(entity)?;
        if document.index() >= self.documents.len() {
            return Err(GraphError::NotFound(document.to_string()));
        }
        Ok(self.push_describes(DescribesSource::Document(document), entity))
    }

    fn push_describes(&mut self, from: DescribesSource, entity: EntityId) -> bool {
        if !self.describes_pairs.insert((from, entity)) {
            return false;
        }
        self.describes.push(DescribesLink { from, entity });
        match from {
            DescribesSource::Document(d) => self.entity_documents[entity.index()].push(d),
            DescribesSource::Description(d) => self.entity_descriptions[entity.index()].push(d),
        }
        true
    }

    pub fn add_relation(
        &mut self,
        source: EntityId,
        target: EntityId,
        relation: &str,
        embedding: Embedding,
    ) -> Result<RelationId, GraphError> {
        self.check_entity(source)?;
        self.check_entity(target)?;
        if source == target {
            return Err(GraphError::InvalidRelation(format!(
                "self-loop on {source}"
            )));
        }
        if relation.trim().is_empty() {
            return Err(GraphError::EmptyText("relation"));
        }
        self.check_embedding(&embedding)?;
        let id = RelationId(self.relations.len() as u32);
        self.relations.push(RelatedToLink {
            id,
            source,
            target,
            relation: relation.to_string(),
            embedding,
        });
        self.incident_relations[source.index()].push(id);
        self.incident_relations[target.index()].push(id);
        Ok(id)
    }

    /// Descriptions by descending cosine similarity to `query`; ties keep
    /// insertion order.
    pub fn top_k_descriptions(
        &self,
        query: &Embedding,
        k: usize,
    ) -> Result<Vec<ScoredDescription>, GraphError> {
        let mut scored = self
            .descriptions
            .iter()
            .map(|d| {
                Ok(ScoredDescription {
                    description: d.id,
                    entity: d.entity_id,
                    score: cosine(query, &d.embedding)?,
                })
            })
            .collect::<Result<Vec<_>, GraphError>>()?;
        scored.sort_by(|a, b| b.score.total_cmp(&a.score));
        scored.truncate(k);
        Ok(scored)
    }

    /// Documents by descending cosine similarity to `query`; ties keep
    /// insertion order.
    pub fn top_k_documents(
        &self,
        query: &Embedding,
        k: usize,
    ) -> Result<Vec<ScoredDocument>, GraphError> {
        let mut scored = self
            .documents
            .iter()
            .map(|d| {
                Ok(ScoredDocument {
                    document: d.id,
                    score: cosine(query, &d.embedding)?,
                })
            })
            .collect::<Result<Vec<_>, GraphError>>()?;
        scored.sort_by(|a, b| b.score.total_cmp(&a.score));
        scored.truncate(k);
        Ok(scored)
    }

    /// Entities within `hops` related_to steps of any seed, links traversed
    /// in both directions, plus every link with both endpoints inside.
    pub fn neighborhood(&self, seeds: &[EntityId], hops: usize) -> Neighborhood {
        let mut result = Neighborhood::default();
        let mut queue = VecDeque::new();
        for &s in seeds {
            if s.index() >= self.entities.len() {
                result.skipped_seeds += 1;
                continue;
            }
            result.seeds.insert(s);
            if result.entities.insert(s) {
                queue.push_back((s, 0usize));
            }
        }
        if result.skipped_seeds > 0 {
            warn!(
                "neighborhood: skipped {} unknown seed ids",
                result.skipped_seeds
            );
        }
        while let Some((node, depth)) = queue.pop_front() {
            if depth == hops {
                continue;
            }
            for &rel in &self.incident_relations[node.index()] {
                let link = &self.relations[rel.index()];
                let other = if link.source == node {
                    link.target
                } else {
                    link.source
                };
                if result.entities.insert(other) {
                    queue.push_back((other, depth + 1));
                }
            }
        }
        let mut links: BTreeSet<RelationId> = BTreeSet::new();
        for &e in &result.entities {
            for &rel in &self.incident_relations[e.index()] {
                let link = &self.relations[rel.index()];
                if result.entities.contains(&link.source) && result.entities.contains(&link.target)
                {
                    links.insert(rel);
                }
            }
        }
        result.links = links.into_iter().collect();
        result
    }

    /// Documents with a describes link to at least one of `entities`,
    /// deduplicated, in id order.
    pub fn documents_for_entities(&self, entities: &[EntityId]) -> Vec<&DocumentNode> {
        let ids: BTreeSet<DocumentId> = entities
            .iter()
            .filter_map(|e| self.entity_documents.get(e.index()))
            .flatten()
            .copied()
            .collect();
        ids.into_iter()
            .map(|d| &self.documents[d.index()])
            .collect()
    }

    pub fn entities_of_document(&self, document: DocumentId) -> Vec<EntityId> {
        self.describes
            .iter()
            .filter(|l| l.from == DescribesSource::Document(document))
            .map(|l| l.entity)
            .collect()
    }

    pub fn to_parts(&self) -> GraphParts {
        GraphParts {
            dim: self.dim,
            entities: self.entities.clone(),
            descriptions: self.descriptions.clone(),
            documents: self.documents.clone(),
            relations: self.relations.clone(),
            describes: self.describes.clone(),
        }
    }

    /// Rebuilds a store from raw parts, re-deriving indexes and checking
    /// every invariant. Ids must be dense and in order.
    pub fn from_parts(parts: GraphParts) -> Result<GraphStore, GraphError> {
        let mut store = GraphStore {
            dim: parts.dim,
            ..Default::default()
        };
        for (i, e) in parts.entities.into_iter().enumerate() {
            if e.id.index() != i {
                return Err(GraphError::Integrity(format!(
                    "entity id {} at position {i}",
                    e.id
                )));
            }
            if e.name.trim().is_empty() {
                return Err(GraphError::EmptyName);
            }
            for n in e.names() {
                if store.name_index.insert(normalize_name(n), e.id).is_some() {
                    return Err(GraphError::Integrity(format!(
                        "duplicate entity name {n:?}"
                    )));
                }
            }
            store.entities.push(e);
            store.entity_documents.push(Vec::new());
            store.entity_descriptions.push(Vec::new());
            store.incident_relations.push(Vec::new());
        }
        for (i, d) in parts.descriptions.into_iter().enumerate() {
            if d.id.index() != i {
                return Err(GraphError::Integrity(format!(
                    "description id {} at position {i}",
                    d.id
                )));
            }
            store.check_entity(d.entity_id)?;
            store.check_embedding(&d.embedding)?;
            store.descriptions.push(d);
        }
        for (i, d) in parts.documents.into_iter().enumerate() {
            if d.id.index() != i {
                return Err(GraphError::Integrity(format!(
                    "document id {} at position {i}",
                    d.id
                )));
            }
            store.check_embedding(&d.embedding)?;
            let key = (d.source_id.clone(), d.chunk_index);
            if store.document_keys.insert(key, d.id).is_some() {
                return Err(GraphError::Conflict {
                    source_id: d.source_id,
                    chunk_index: d.chunk_index,
                });
            }
            store.documents.push(d);
        }
        for (i, r) in parts.relations.into_iter().enumerate() {
            if r.id.index() != i {
                return Err(GraphError::Integrity(format!(
                    "relation id {} at position {i}",
                    r.id
                )));
            }
            store.check_entity(r.source)?;
            store.check_entity(r.target)?;
            if r.source == r.target {
                return Err(GraphError::InvalidRelation(format!(
                    "self-loop on {}",
                    r.source
                )));
            }
            store.check_embedding(&r.embedding)?;
            store.incident_relations[r.source.index()].push(r.id);
            store.incident_relations[r.target.index()].push(r.id);
            store.relations.push(r);
        }
        for link in parts.describes {
            store.check_entity(link.entity)?;
            match link.from {
                DescribesSource::Document(d) if d.index() >= store.documents.len() => {
                    return Err(GraphError::NotFound(d.to_string()))
                }
                DescribesSource::Description(d) => {
                    let node = store
                        .descriptions
                        .get(d.index())
                        .ok_or_else(|| GraphError::NotFound(d.to_string()))?;
                    if node.entity_id != link.entity {
                        return Err(GraphError::Integrity(format!(
                            "{d} describes {} but is linked to {}",
                            node.entity_id, link.entity
                        )));
                    }
                }
                _ => {}
            }
            if !store.push_describes(link.from, link.entity) {
                return Err(GraphError::Integrity(format!(
                    "duplicate describes link {link:?}"
                )));
            }
        }
        store.validate()?;
        Ok(store)
    }

    /// Full-scan referential integrity and uniqueness check.
    pub fn validate(&self) -> Result<(), GraphError> {
        let mut seen = HashMap::new();
        for e in &self.entities {
            if e.name.trim().is_empty() {
                return Err(GraphError::EmptyName);
            }
            for n in e.names() {
                if let Some(other) = seen.insert(normalize_name(n), e.id) {
                    return Err(GraphError::Integrity(format!(
                        "{n:?} shared by {other} and {}",
                        e.id
                    )));
                }
            }
        }
        let mut outgoing = vec![0usize; self.descriptions.len()];
        for link in &self.describes {
            self.check_entity(link.entity)?;
            match link.from {
                DescribesSource::Document(d) => {
                    if d.index() >= self.documents.len() {
                        return Err(GraphError::NotFound(d.to_string()));
                    }
                }
                DescribesSource::Description(d) => {
                    let node = self
                        .descriptions
                        .get(d.index())
                        .ok_or_else(|| GraphError::NotFound(d.to_string()))?;
                    if node.entity_id != link.entity {
                        return Err(GraphError::Integrity(format!("{d} linked to wrong entity")));
                    }
                    outgoing[d.index()] += 1;
                }
            }
        }
        if let Some(i) = outgoing.iter().position(|&n| n != 1) {
            return Err(GraphError::Integrity(format!(
                "description desc{i} has {} describes links",
                outgoing[i]
            )));
        }
        for r in &self.relations {
            self.check_entity(r.source)?;
            self.check_entity(r.target)?;
            if r.source == r.target {
                return Err(GraphError::InvalidRelation(format!(
                    "self-loop on {}",
                    r.source
                )));
            }
        }
        let unit = self
            .descriptions
            .iter()
            .map(|d| &d.embedding)
            .chain(self.documents.iter().map(|d| &d.embedding))
            .chain(self.relations.iter().map(|r| &r.embedding))
            .all(|e| e.is_unit() && Some(e.dim()) == self.dim);
        if !unit {
            return Err(GraphError::InvalidEmbedding(
                "non-unit or mis-sized embedding".into(),
            ));
        }
        Ok(())
    }
}
