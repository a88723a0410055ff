use serde::{Deserialize, Serialize};

use super::PipelineError;
use crate::gateway::ModelGateway;
use crate::graph::{DocumentId, GraphStore, RelationId};
use crate::prompts::Prompt;
use crate::retrieval::{retrieve, Context, ContextDocument, RetrievalConfig};

/// A source of context for a query string, together with the prompts used
/// to reason and answer over that kind of context.
pub trait Retriever: Sync {
    fn retrieve(&self, gateway: &dyn ModelGateway, query: &str) -> Result<Context, PipelineError>;

    fn answering_prompt(&self) -> Prompt;

    fn reasoning_prompt(&self) -> Prompt;
}

/// Top-k chunks by cosine similarity to the query.
#[derive(Debug, Clone, Copy)]
pub struct ChunkRetriever<'a> {
    pub store: &'a GraphStore,
    pub k: usize,
}

impl Retriever for ChunkRetriever<'_> {
    fn retrieve(&self, gateway: &dyn ModelGateway, query: &str) -> Result<Context, PipelineError> {
        let embedding = gateway.embed_one(query)?;
        let documents = self
            .store
            .top_k_documents(&embedding, self.k)?
            .into_iter()
            .map(|scored| {
                let doc = self
                    .store
                    .document(scored.document)
                    .expect("scored document exists");
                ContextDocument {
                    document: doc.id,
                    source_id: doc.source_id.clone(),
                    chunk_index: doc.chunk_index,
                    text: doc.text.clone(),
                    score: scored.score,
                }
            })
            .collect();
        Ok(Context {
            documents,
            relations: Vec::new(),
        })
    }

    fn answering_prompt(&self) -> Prompt {
        Prompt::AnsweringBaseline
    }

    fn reasoning_prompt(&self) -> Prompt {
        Prompt::ReasoningBaseline
    }
}

/// Subgraph fetching, spreading activation and context assembly over the
/// knowledge graph.
#[derive(Debug, Clone, Copy)]
pub struct SaRetriever<'a> {
    pub store: &'a GraphStore,
    pub config: RetrievalConfig,
}

impl Retriever for SaRetriever<'_> {
    fn retrieve(&self, gateway: &dyn ModelGateway, query: &str) -> Result<Context, PipelineError> {
        let embedding = gateway.embed_one(query)?;
        Ok(retrieve(self.store, &embedding, &self.config)?.context)
    }

    fn answering_prompt(&self) -> Prompt {
        Prompt::AnsweringSa
    }

    fn reasoning_prompt(&self) -> Prompt {
        Prompt::ReasoningSa
    }
}

/// What one retrieval returned, as kept in an answer trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievalRecord {
    pub purpose: String,
    pub query: String,
    pub documents: Vec<DocumentId>,
    pub relations: Vec<RelationId>,
}

impl RetrievalRecord {
    pub fn new(purpose: &str, query: &str, context: &Context) -> Self {
        RetrievalRecord {
            purpose: purpose.to_string(),
            query: query.to_string(),
            documents: context.document_ids(),
            relations: context.relations.iter().map(|r| r.link).collect(),
        }
    }
}
