use std::collections::{BTreeSet, HashSet};

use serde::{Deserialize, Serialize};

use crate::gateway::{cosine, Embedding};
use crate::graph::{DocumentId, EntityId, GraphError, GraphStore, RelationId};

use super::Subgraph;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContextDocument {
    pub document: DocumentId,
    pub source_id: String,
    pub chunk_index: usize,
    pub text: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContextRelation {
    pub link: RelationId,
    pub text: String,
    pub score: f64,
}

/// Retrieved evidence handed to the answering model: documents, then
/// relation sentences, each ordered by descending score.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Context {
    pub documents: Vec<ContextDocument>,
    pub relations: Vec<ContextRelation>,
}

impl Context {
    pub fn is_empty(&self) -> bool {
        self.documents.is_empty() && self.relations.is_empty()
    }

    pub fn document_ids(&self) -> Vec<DocumentId> {
        self.documents.iter().map(|d| d.document).collect()
    }
}

/// Documents describing an activated entity with cosine >= `tau_d`, plus
/// relation sentences for links between activated entities whose raw
/// weight is > `tau_r`.
pub fn assemble_context(
    store: &GraphStore,
    activated: &BTreeSet<EntityId>,
    subgraph: &Subgraph,
    query: &Embedding,
    tau_d: f64,
    tau_r: f64,
) -> Result<Context, GraphError> {
    let ids: Vec<EntityId> = activated.iter().copied().collect();
    let mut documents = Vec::new();
    for doc in store.documents_for_entities(&ids) {
        let score = cosine(query, &doc.embedding)?;
        if score >= tau_d {
            documents.push(ContextDocument {
                document: doc.id,
                source_id: doc.source_id.clone(),
                chunk_index: doc.chunk_index,
                text: doc.text.clone(),
                score,
            });
        }
    }
    documents.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then(a.document.cmp(&b.document))
    });

    let mut candidates: Vec<(RelationId, f64)> = subgraph
        .links()
        .into_iter()
        .filter(|(link, raw)| {
            *raw > tau_r
                && store
                    .relation(*link)
                    .is_some_and(|l| activated.contains(&l.source) && activated.contains(&l.target))
        })
        .collect();
    candidates.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    let mut seen = HashSet::new();
    let relations = candidates
        .into_iter()
        .filter_map(|(link, score)| {
            let text = store.render_relation(link)?;
            seen.insert(text.clone())
                .then_some(ContextRelation { link, text, score })
        })
        .collect();

    Ok(Context {
        documents,
        relations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::EntityType;
    use crate::retrieval::{fetch_subgraph, RetrievalConfig};

    fn emb(values: &[f64]) -> Embedding {
        Embedding::normalized(values.to_vec()).unwrap()
    }

    /// Unit vector in the (x, y) plane with cosine `c` to the query (1, 0).
    fn at(c: f64) -> Embedding {
        emb(&[c, (1.0 - c * c).sqrt()])
    }

    #[test]
    fn nothing_activated_gives_empty_context() {
        let s = GraphStore::new();
        let ctx = assemble_context(
            &s,
            &BTreeSet::new(),
            &Subgraph::default(),
            &emb(&[1.0, 0.0]),
            0.45,
            0.5,
        )
        .unwrap();
        assert!(ctx.is_empty());
    }

    #[test]
    fn pruning_boundary_is_inclusive() {
        let mut s = GraphStore::new();
        let a = s.upsert_entity("A", EntityType::Misc, &[]).unwrap().id;
        s.add_document("d", 0, "low", at(0.44), &[a]).unwrap();
        s.add_document("d", 1, "edge", emb(&[1.0, 1.0]), &[a])
            .unwrap();
        let activated = [a].into_iter().collect();
        let edge = cosine(&emb(&[1.0, 0.0]), &emb(&[1.0, 1.0])).unwrap();
        let ctx = assemble_context(
            &s,
            &activated,
            &Subgraph::default(),
            &emb(&[1.0, 0.0]),
            edge,
            0.5,
        )
        .unwrap();
        assert_eq!(ctx.documents.len(), 1);
        assert_eq!(ctx.documents[0].text, "edge");
        let ctx = assemble_context(
            &s,
            &activated,
            &Subgraph::default(),
            &emb(&[1.0, 0.0]),
            0.45,
            0.5,
        )
        .unwrap();
        assert_eq!(ctx.documents.len(), 1);
    }

    #[test]
    fn thresholds_applied_by_hand() {
        // Two activated entities, three linked documents with cosines 0.9,
        // 0.5, 0.3, one relation at 0.8 between them and one at 0.45 (below
        // tau_r).
        let mut s = GraphStore::new();
        let a = s.upsert_entity("A", EntityType::Misc, &[]).unwrap().id;
        let b = s.upsert_entity("B", EntityType::Misc, &[]).unwrap().id;
        s.add_description(a, "a", at(1.0)).unwrap();
        s.add_document("x", 0, "d09", at(0.9), &[a]).unwrap();
        s.add_document("x", 1, "d05", at(0.5), &[b]).unwrap();
        s.add_document("x", 2, "d03", at(0.3), &[a, b]).unwrap();
        s.add_relation(a, b, "knows", at(0.8)).unwrap();
        s.add_relation(b, a, "met", at(0.45)).unwrap();
        let q = at(1.0);
        let cfg = RetrievalConfig::with_seeds_and_hops(1, 1);
        let g = fetch_subgraph(&s, &q, &cfg).unwrap();
        let activated: BTreeSet<_> = [a, b].into_iter().collect();
        let ctx = assemble_context(&s, &activated, &g, &q, 0.45, 0.5).unwrap();
        let texts: Vec<_> = ctx.documents.iter().map(|d| d.text.as_str()).collect();
        assert_eq!(texts, vec!["d09", "d05"]);
        assert_eq!(ctx.relations.len(), 1);
        assert_eq!(ctx.relations[0].text, "A knows B");
    }

    #[test]
    fn relation_needs_both_endpoints_activated() {
        let mut s = GraphStore::new();
        let a = s.upsert_entity("A", EntityType::Misc, &[]).unwrap().id;
        let b = s.upsert_entity("B", EntityType::Misc, &[]).unwrap().id;
        s.add_description(a, "a", at(1.0)).unwrap();
        s.add_relation(a, b, "knows", at(0.9)).unwrap();
        let q = at(1.0);
        let g = fetch_subgraph(&s, &q, &RetrievalConfig::with_seeds_and_hops(1, 1)).unwrap();
        let ctx = assemble_context(&s, &[a].into_iter().collect(), &g, &q, 0.45, 0.5).unwrap();
        assert!(ctx.relations.is_empty());
    }

    #[test]
    fn duplicate_relation_sentences_collapse() {
        let mut s = GraphStore::new();
        let a = s.upsert_entity("A", EntityType::Misc, &[]).unwrap().id;
        let b = s.upsert_entity("B", EntityType::Misc, &[]).unwrap().id;
        s.add_description(a, "a", at(1.0)).unwrap();
        s.add_relation(a, b, "knows", at(0.7)).unwrap();
        s.add_relation(a, b, "knows", at(0.9)).unwrap();
        let q = at(1.0);
        let g = fetch_subgraph(&s, &q, &RetrievalConfig::with_seeds_and_hops(1, 1)).unwrap();
        let ctx = assemble_context(&s, &[a, b].into_iter().collect(), &g, &q, 0.45, 0.5).unwrap();
        assert_eq!(ctx.relations.len(), 1);
        assert!((ctx.relations[0].score - 0.9).abs() < 1e-6);
        assert_eq!(ctx.relations[0].link, RelationId(1));
    }
}
