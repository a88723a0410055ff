//! Indexing orchestration.
//!
//! Model work for a window of chunks (embedding, entity and relation
//! extraction) runs on scoped threads; the results are then applied to the
//! store one chunk at a time in corpus order, so the resulting graph does
//! not depend on thread scheduling.

use log::{info, warn};
use serde::{Deserialize, Serialize};

use super::chunk::{chunk_text, Chunk, ChunkError, ChunkParams};
use super::corpus::SourceDocument;
use super::extract::{extract_entities, extract_relations, ExtractedEntity, ExtractedTriple};
use crate::gateway::{Embedding, GatewayError, ModelGateway};
use crate::graph::{EntityId, GraphError, GraphStore};

pub const DEFAULT_CONCURRENCY: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IndexParams {
    pub chunking: ChunkParams,
    /// Chunks whose model calls may be in flight at once.
    pub concurrency: usize,
}

impl IndexParams {
    pub fn graph() -> Self {
        IndexParams {
            chunking: ChunkParams::GRAPH,
            concurrency: DEFAULT_CONCURRENCY,
        }
    }

    pub fn baseline() -> Self {
        IndexParams {
            chunking: ChunkParams::BASELINE,
            concurrency: DEFAULT_CONCURRENCY,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChunkFailure {
    pub source_id: String,
    pub chunk_index: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct IndexReport {
    pub sources: usize,
    pub chunks: usize,
    pub entities_created: usize,
    pub entities_merged: usize,
    pub descriptions: usize,
    pub relations: usize,
    pub describes_links: usize,
    pub warnings: Vec<String>,
    pub failures: Vec<ChunkFailure>,
}

#[derive(Debug, thiserror::Error)]
pub enum IndexError {
    #[error(transparent)]
    Chunking(#[from] ChunkError),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

struct ChunkWork {
    chunk: Chunk,
    embedding: Result<Embedding, GatewayError>,
    extraction: Result<Extraction, String>,
}

struct Extraction {
    entities: Vec<(ExtractedEntity, Embedding)>,
    triples: Vec<(ExtractedTriple, Embedding)>,
    warnings: Vec<String>,
}

fn description_text(e: &ExtractedEntity) -> String {
    if e.entity_information.trim().is_empty() {
        e.name.clone()
    } else {
        e.entity_information.clone()
    }
}

fn extract_chunk(gateway: &dyn ModelGateway, chunk: &Chunk) -> Result<Extraction, String> {
    let entities = extract_entities(gateway, &chunk.text).map_err(|e| e.to_string())?;
    let mut names: Vec<String> = Vec::new();
    for e in &entities.items {
        for n in std::iter::once(&e.name).chain(&e.aliases) {
            if !names.contains(n) {
                names.push(n.clone());
            }
        }
    }
    let triples = extract_relations(gateway, &chunk.text, &names).map_err(|e| e.to_string())?;

    let entity_embeddings = if entities.items.is_empty() {
        Vec::new()
    } else {
        let texts: Vec<String> = entities.items.iter().map(description_text).collect();
        gateway.embed(&texts).map_err(|e| e.to_string())?
    };
    let triple_embeddings = if triples.items.is_empty() {
        Vec::new()
    } else {
        let texts: Vec<String> = triples
            .items
            .iter()
            .map(ExtractedTriple::sentence)
            .collect();
        gateway.embed(&texts).map_err(|e| e.to_string())?
    };
    let mut warnings = entities.warnings;
    warnings.extend(triples.warnings);
    Ok(Extraction {
        entities: entities.items.into_iter().zip(entity_embeddings).collect(),
        triples: triples.items.into_iter().zip(triple_embeddings).collect(),
        warnings,
    })
}

fn chunk_corpus(
    documents: &[SourceDocument],
    params: ChunkParams,
) -> Result<Vec<Chunk>, ChunkError> {
    let mut chunks = Vec::new();
    for doc in documents {
        chunks.extend(chunk_text(&doc.id, &doc.full_text(), params)?);
    }
    Ok(chunks)
}

fn run_windows<T: Send>(
    chunks: Vec<Chunk>,
    concurrency: usize,
    work: impl Fn(Chunk) -> T + Sync,
    mut apply: impl FnMut(T) -> Result<(), IndexError>,
) -> Result<(), IndexError> {
    let mut pending = chunks.into_iter().peekable();
    while pending.peek().is_some() {
        let window: Vec<Chunk> = pending.by_ref().take(concurrency.max(1)).collect();
        let results: Vec<T> = std::thread::scope(|s| {
            let handles: Vec<_> = window
                .into_iter()
                .map(|c| {
                    let work = &work;
                    s.spawn(move || work(c))
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("indexing worker panicked"))
                .collect()
        });
        for r in results {
            apply(r)?;
        }
    }
    Ok(())
}

/// Builds the knowledge graph: for each chunk, a document node, entities
/// (resolved against existing ones) with one description each, describes
/// links from the document to its entities, and related_to links for the
/// extracted triples.
///
/// A chunk whose extraction fails is still stored as a document without
/// entities and the failure is recorded in the report.
pub fn index_corpus(
    documents: &[SourceDocument],
    store: &mut GraphStore,
    gateway: &dyn ModelGateway,
    params: IndexParams,
) -> Result<IndexReport, IndexError> {
    let chunks = chunk_corpus(documents, params.chunking)?;
    let mut report = IndexReport {
        sources: documents.len(),
        ..Default::default()
    };
    let work = |chunk: Chunk| {
        let embedding = gateway.embed_one(&chunk.text);
        let extraction = match &embedding {
            Ok(_) => extract_chunk(gateway, &chunk),
            Err(e) => Err(e.to_string()),
        };
        ChunkWork {
            chunk,
            embedding,
            extraction,
        }
    };
    run_windows(chunks, params.concurrency, work, |w| {
        apply_chunk(store, w, &mut report)
    })?;
    report.describes_links = store.describes_links().len();
    info!(
        "indexed {} chunks: {} entities created, {} merged, {} relations",
        report.chunks, report.entities_created, report.entities_merged, report.relations
    );
    Ok(report)
}

fn apply_chunk(
    store: &mut GraphStore,
    work: ChunkWork,
    report: &mut IndexReport,
) -> Result<(), IndexError> {
    let ChunkWork {
        chunk,
        embedding,
        extraction,
    } = work;
    let failure = |message: String| ChunkFailure {
        source_id: chunk.source_id.clone(),
        chunk_index: chunk.chunk_index,
        message,
    };
    let embedding = match embedding {
        Ok(e) => e,
        Err(e) => {
            warn!(
                "{}#{}: embedding failed: {e}",
                chunk.source_id, chunk.chunk_index
            );
            report
                .failures
                .push(failure(format!("embedding failed: {e}")));
            return Ok(());
        }
    };
    let extraction = match extraction {
        Ok(x) => x,
        Err(message) => {
            warn!(
                "{}#{}: extraction failed: {message}",
                chunk.source_id, chunk.chunk_index
            );
            report.failures.push(failure(message));
            store.add_document(
                &chunk.source_id,
                chunk.chunk_index,
                &chunk.text,
                embedding,
                &[],
            )?;
            report.chunks += 1;
            return Ok(());
        }
    };
    let tag = |w: &str| format!("{}#{}: {w}", chunk.source_id, chunk.chunk_index);
    report
        .warnings
        .extend(extraction.warnings.iter().map(|w| tag(w)));

    let mut mentioned: Vec<EntityId> = Vec::new();
    for (entity, desc_embedding) in extraction.entities {
        let id = match store.upsert_entity(&entity.name, entity.entity_type, &entity.aliases) {
            Ok(u) => {
                if u.created {
                    report.entities_created += 1;
                } else {
                    report.entities_merged += 1;
                }
                u.id
            }
            Err(GraphError::AmbiguousEntity { name, candidates }) => {
                let first = candidates[0];
                let msg = format!("{name:?} matches entities {candidates:?}; attached to {first}");
                warn!("{}", tag(&msg));
                report.warnings.push(tag(&msg));
                report.entities_merged += 1;
                first
            }
            Err(e) => return Err(e.into()),
        };
        store.add_description(id, &description_text(&entity), desc_embedding)?;
        report.descriptions += 1;
        if !mentioned.contains(&id) {
            mentioned.push(id);
        }
    }
    store.add_document(
        &chunk.source_id,
        chunk.chunk_index,
        &chunk.text,
        embedding,
        &mentioned,
    )?;
    report.chunks += 1;

    for (triple, rel_embedding) in extraction.triples {
        let (Some(s), Some(o)) = (
            store.find_entity(&triple.subject),
            store.find_entity(&triple.object),
        ) else {
            report.warnings.push(tag(&format!(
                "triple endpoint not in graph: {}",
                triple.sentence()
            )));
            continue;
        };
        if s == o {
            report.warnings.push(tag(&format!(
                "triple resolves to a self-relation: {}",
                triple.sentence()
            )));
            continue;
        }
        store.add_relation(s, o, &triple.relation, rel_embedding)?;
        report.relations += 1;
    }
    Ok(())
}

/// Builds the similarity-only baseline store: chunk documents with
/// embeddings and no entities.
pub fn index_chunks(
    documents: &[SourceDocument],
    store: &mut GraphStore,
    gateway: &dyn ModelGateway,
    params: IndexParams,
) -> Result<IndexReport, IndexError> {
    let chunks = chunk_corpus(documents, params.chunking)?;
    let mut report = IndexReport {
        sources: documents.len(),
        ..Default::default()
    };
    let work = |chunk: Chunk| {
        let embedding = gateway.embed_one(&chunk.text);
        (chunk, embedding)
    };
    run_windows(chunks, params.concurrency, work, |(chunk, embedding)| {
        match embedding {
            Ok(e) => {
                store.add_document(&chunk.source_id, chunk.chunk_index, &chunk.text, e, &[])?;
                report.chunks += 1;
            }
            Err(e) => report.failures.push(ChunkFailure {
                source_id: chunk.source_id,
                chunk_index: chunk.chunk_index,
                message: format!("embedding failed: {e}"),
            }),
        }
        Ok(())
    })?;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gateway::{MockGateway, MockRule};
    use crate::prompts::Prompt;

    fn doc(id: &str, text: &str) -> SourceDocument {
        SourceDocument {
            id: id.into(),
            title: String::new(),
            text: text.into(),
        }
    }

    fn ner_rule(needle: &str, response: &str) -> MockRule {
        MockRule {
            system_contains: vec!["extract entities".into()],
            user_contains: vec![needle.into()],
            response: response.into(),
            ..Default::default()
        }
    }

    fn re_rule(needle: &str, response: &str) -> MockRule {
        MockRule {
            system_contains: vec!["relationship extraction".into()],
            user_contains: vec![needle.into()],
            response: response.into(),
            ..Default::default()
        }
    }

    const TWO: &str = r#"[{"name":"Ada Marrow","type":"PERSON","aliases":[],"entity_information":"Engineer."},{"name":"Kestrel Works","type":"ORGANIZATION","aliases":["Kestrel"],"entity_information":"Shipyard."}]"#;

    #[test]
    fn prompts_used_are_the_assets() {
        assert!(Prompt::Ner.text().contains("extract entities"));
        assert!(Prompt::RelationExtraction
            .text()
            .contains("relationship extraction"));
    }

    #[test]
    fn one_chunk_two_entities_one_relation() {
        let mock = MockGateway::embeddings_only(16).with_rules([
            ner_rule("Ada Marrow founded", TWO),
            re_rule(
                "Ada Marrow founded",
                r#"{"triples":[["Ada Marrow","founded","Kestrel"]]}"#,
            ),
        ]);
        let mut store = GraphStore::new();
        let report = index_corpus(
            &[doc("d1", "Ada Marrow founded Kestrel Works.")],
            &mut store,
            &mock,
            IndexParams::graph(),
        )
        .unwrap();
        assert_eq!(store.documents().len(), 1);
        assert_eq!(store.entities().len(), 2);
        assert_eq!(store.descriptions().len(), 2);
        assert_eq!(store.relations().len(), 1);
        assert_eq!(store.describes_links().len(), 4);
        assert_eq!(
            (report.chunks, report.entities_created, report.relations),
            (1, 2, 1)
        );
        assert_eq!(
            store.render_relation(crate::graph::RelationId(0)).unwrap(),
            "Ada Marrow founded Kestrel Works"
        );
        store.validate().unwrap();
    }

    #[test]
    fn same_entity_in_two_chunks_gets_two_descriptions() {
        let mock = MockGateway::embeddings_only(16).with_rules([
            ner_rule("first", r#"[{"name":"Ada Marrow","type":"PERSON","aliases":[],"entity_information":"Engineer."}]"#),
            ner_rule("second", r#"[{"name":"ada marrow","type":"PERSON","aliases":["A. Marrow"],"entity_information":"Founder."}]"#),
            re_rule("", r#"{"triples":[]}"#),
        ]);
        let mut store = GraphStore::new();
        let report = index_corpus(
            &[doc("a", "first text"), doc("b", "second text")],
            &mut store,
            &mock,
            IndexParams::graph(),
        )
        .unwrap();
        assert_eq!(store.entities().len(), 1);
        assert_eq!(store.descriptions().len(), 2);
        assert_eq!((report.entities_created, report.entities_merged), (1, 1));
        assert_eq!(store.entities()[0].aliases, vec!["A. Marrow".to_string()]);
    }

    #[test]
    fn extraction_failure_keeps_document() {
        let mock = MockGateway::embeddings_only(16).with_rules([ner_rule("bad", "no json here")]);
        let mut store = GraphStore::new();
        let report = index_corpus(
            &[doc("x", "bad chunk")],
            &mut store,
            &mock,
            IndexParams::graph(),
        )
        .unwrap();
        assert_eq!(store.documents().len(), 1);
        assert!(store.entities().is_empty());
        assert_eq!(report.failures.len(), 1);
        assert_eq!(report.chunks, 1);
    }

    #[test]
    fn empty_corpus() {
        let mock = MockGateway::embeddings_only(16);
        let mut store = GraphStore::new();
        let report = index_corpus(&[], &mut store, &mock, IndexParams::graph()).unwrap();
        assert_eq!(report, IndexReport::default());
    }

    #[test]
    fn reindexing_never_adds_entities() {
        let mock = MockGateway::embeddings_only(16).with_rules([
            ner_rule("Ada Marrow founded", TWO),
            re_rule(
                "Ada Marrow founded",
                r#"{"triples":[["Ada Marrow","founded","Kestrel Works"]]}"#,
            ),
        ]);
        let corpus = [doc("d1", "Ada Marrow founded Kestrel Works.")];
        let mut store = GraphStore::new();
        index_corpus(&corpus, &mut store, &mock, IndexParams::graph()).unwrap();
        let again = [doc("d2", "Ada Marrow founded Kestrel Works.")];
        let report = index_corpus(&again, &mut store, &mock, IndexParams::graph()).unwrap();
        assert_eq!(report.entities_created, 0);
        assert_eq!(store.entities().len(), 2);
    }

    #[test]
    fn chunk_store_has_only_documents() {
        let mock = MockGateway::embeddings_only(8);
        let words = (0..1200)
            .map(|i| format!("w{i}"))
            .collect::<Vec<_>>()
            .join(" ");
        let mut store = GraphStore::new();
        let report = index_chunks(
            &[doc("big", &words)],
            &mut store,
            &mock,
            IndexParams::baseline(),
        )
        .unwrap();
        // stride 400: starts 0, 400, 800
        assert_eq!(report.chunks, 3);
        assert!(store.entities().is_empty());
    }

    #[test]
    fn concurrency_does_not_change_the_graph() {
        let rules = || {
            (0..6)
                .map(|i| {
                    ner_rule(
                        &format!("chunk{i} "),
                        &format!(r#"[{{"name":"E{i}","type":"MISC","aliases":[],"entity_information":"n{i}"}},{{"name":"Hub","type":"GPE","aliases":[],"entity_information":"hub"}}]"#),
                    )
                })
                .chain([re_rule("", r#"{"triples":[]}"#)])
                .collect::<Vec<_>>()
        };
        let corpus: Vec<_> = (0..6)
            .map(|i| doc(&format!("s{i}"), &format!("chunk{i} text")))
            .collect();
        let mut a = GraphStore::new();
        let mut b = GraphStore::new();
        index_corpus(
            &corpus,
            &mut a,
            &MockGateway::embeddings_only(8).with_rules(rules()),
            IndexParams {
                concurrency: 1,
                ..IndexParams::graph()
            },
        )
        .unwrap();
        index_corpus(
            &corpus,
            &mut b,
            &MockGateway::embeddings_only(8).with_rules(rules()),
            IndexParams {
                concurrency: 5,
                ..IndexParams::graph()
            },
        )
        .unwrap();
        assert_eq!(a.to_parts(), b.to_parts());
        assert_eq!(a.entities().len(), 7);
    }
}
