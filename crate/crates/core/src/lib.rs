pub mod commands;
pub mod config;
pub mod eval;
pub mod gateway;
pub mod graph;
pub mod ingest;
pub mod pipelines;
pub mod prompts;
pub mod retrieval;
