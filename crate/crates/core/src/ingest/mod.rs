//! Turning raw documents into graph content.

mod chunk;
mod corpus;
mod extract;
mod index;
mod payload;

pub use chunk::{chunk_text, Chunk, ChunkError, ChunkParams};
pub use corpus::{load_corpus, CorpusError, SourceDocument};
pub use extract::{
    extract_entities, extract_relations, relation_user_prompt, Extracted, ExtractedEntity,
    ExtractedTriple, ExtractionError,
};
pub use index::{
    index_chunks, index_corpus, ChunkFailure, IndexError, IndexParams, IndexReport,
    DEFAULT_CONCURRENCY,
};
pub use payload::{ask_structured, parse_model_payload, ModelCall, ParseFailure, StructuredError};
