//! Run configuration read from TOML.
//!
//! Unknown keys are rejected. Secrets never live in the file: the API key
//! is read from the environment variable named by `gateway.api_key_env`.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::eval::DatasetFormat;
use crate::gateway::HttpGatewaySettings;
use crate::ingest::ChunkParams;
use crate::pipelines::PipelineKind;
use crate::retrieval::RetrievalConfig;

pub const DEFAULT_API_KEY_ENV: &str = "SARAG_API_KEY";

#[derive(Debug, Error)]
pub enum RunConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("config {path}: {message}")]
    Parse { path: String, message: String },
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GatewayConfig {
    pub base_url: String,
    pub chat_model: String,
    pub embedding_model: String,
    pub timeout_secs: u64,
    pub max_in_flight: usize,
    pub max_retries: u32,
    pub backoff_base_ms: u64,
    pub api_key_env: String,
    /// Cut user prompts to this many characters before sending.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_prompt_chars: Option<usize>,
    /// Serve all model calls from these fixture files instead of a server.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mock_fixtures: Option<PathBuf>,
}

impl Default for GatewayConfig {
    fn default() -> Self {
        let http = HttpGatewaySettings::default();
        GatewayConfig {
            base_url: http.base_url,
            chat_model: http.chat_model,
            embedding_model: http.embedding_model,
            timeout_secs: http.timeout_secs,
            max_in_flight: http.max_in_flight,
            max_retries: http.max_retries,
            backoff_base_ms: http.backoff_base_ms,
            api_key_env: DEFAULT_API_KEY_ENV.into(),
            max_prompt_chars: http.max_prompt_chars,
            mock_fixtures: None,
        }
    }
}

impl GatewayConfig {
    pub fn http_settings(&self) -> HttpGatewaySettings {
        HttpGatewaySettings {
            base_url: self.base_url.clone(),
            api_key: std::env::var(&self.api_key_env)
                .ok()
                .filter(|k| !k.is_empty()),
            chat_model: self.chat_model.clone(),
            embedding_model: self.embedding_model.clone(),
            timeout_secs: self.timeout_secs,
            max_in_flight: self.max_in_flight,
            max_retries: self.max_retries,
            backoff_base_ms: self.backoff_base_ms,
            max_prompt_chars: self.max_prompt_chars,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChunkingConfig {
    /// Knowledge-graph store.
    pub graph: ChunkParams,
    /// Similarity-only chunk store.
    pub chunks: ChunkParams,
    /// Chunks extracted concurrently during indexing.
    pub concurrency: usize,
}

impl Default for ChunkingConfig {
    fn default() -> Self {
        ChunkingConfig {
            graph: ChunkParams::GRAPH,
            chunks: ChunkParams::BASELINE,
            concurrency: crate::ingest::DEFAULT_CONCURRENCY,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunSection {
    pub store: PathBuf,
    pub output_dir: PathBuf,
    pub pipelines: Vec<PipelineKind>,
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection {
            store: PathBuf::from("store"),
            output_dir: PathBuf::from("runs"),
            pipelines: vec![PipelineKind::Sa],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvalSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dataset: Option<PathBuf>,
    pub format: DatasetFormat,
    pub sample: usize,
    pub seed: u64,
    pub concurrency: usize,
}

impl Default for EvalSection {
    fn default() -> Self {
        EvalSection {
            dataset: None,
            format: DatasetFormat::Musique,
            sample: 100,
            seed: 0,
            concurrency: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub gateway: GatewayConfig,
    pub chunking: ChunkingConfig,
    pub retrieval: RetrievalConfig,
    pub run: RunSection,
    pub eval: EvalSection,
}

impl RunConfig {
    pub fn parse(text: &str, origin: &str) -> Result<RunConfig, RunConfigError> {
        let config: RunConfig = toml::from_str(text).map_err(|e| RunConfigError::Parse {
            path: origin.to_string(),
            message: e.to_string(),
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<RunConfig, RunConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| RunConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        RunConfig::parse(&text, &path.display().to_string())
    }

    pub fn render(&self) -> String {
        toml::to_string_pretty(self).expect("config is representable as TOML")
    }

    pub fn validate(&self) -> Result<(), RunConfigError> {
        let invalid = |m: String| Err(RunConfigError::Invalid(m));
        self.retrieval
            .validate()
            .map_err(|e| RunConfigError::Invalid(e.0))?;
        for (name, p) in [
            ("chunking.graph", self.chunking.graph),
            ("chunking.chunks", self.chunking.chunks),
        ] {
            if p.validate().is_err() {
                return invalid(format!(
                    "{name}: need 0 <= overlap < size, got size {} overlap {}",
                    p.size, p.overlap
                ));
            }
        }
        if self.chunking.concurrency == 0 {
            return invalid("chunking.concurrency must be at least 1".into());
        }
        if self.eval.concurrency == 0 {
            return invalid("eval.concurrency must be at least 1".into());
        }
        if self.eval.sample == 0 {
            return invalid("eval.sample must be at least 1".into());
        }
        if self.gateway.max_in_flight == 0 {
            return invalid("gateway.max_in_flight must be at least 1".into());
        }
        if self.gateway.timeout_secs == 0 {
            return invalid("gateway.timeout_secs must be at least 1".into());
        }
        if self.gateway.max_prompt_chars == Some(0) {
            return invalid("gateway.max_prompt_chars must be at least 1".into());
        }
        if self.run.pipelines.is_empty() {
            return invalid("run.pipelines must name at least one pipeline".into());
        }
        Ok(())
    }
}
