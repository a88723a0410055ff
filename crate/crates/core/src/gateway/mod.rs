//! Access to chat-completion and embedding services.
//!
//! Everything above this module talks to a [`ModelGateway`]. Two backends
//! exist: [`HttpGateway`] speaks the chat-completions/embeddings JSON wire
//! protocol, and [`MockGateway`] answers from fixture files so that whole
//! pipelines run offline and deterministically.

mod http;
mod limiter;
mod mock;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use http::{HttpGateway, HttpGatewaySettings};
pub use limiter::Limiter;
pub use mock::{EmbeddingMode, MockFixture, MockGateway, MockRule, TranscriptEntry};

/// Tolerance on the L2 norm of stored and returned embeddings.
pub const UNIT_NORM_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum GatewayError {
    #[error("transport error (retryable: {retryable}): {message}")]
    Transport { message: String, retryable: bool },
    #[error("request timed out after {0} s")]
    Timeout(u64),
    #[error("mock backend has no scripted response for prompt {fingerprint}")]
    MockMiss { fingerprint: String },
    #[error("malformed response from backend: {0}")]
    BadResponse(String),
    #[error("invalid request: {0}")]
    InvalidRequest(String),
}

impl GatewayError {
    pub fn is_retryable(&self) -> bool {
        match self {
            GatewayError::Transport { retryable, .. } => *retryable,
            GatewayError::Timeout(_) => true,
            _ => false,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
#[error("dimension mismatch: {left} vs {right}")]
pub struct DimensionError {
    pub left: usize,
    pub right: usize,
}

/// One chat-completion call. The system prompt carries a prompt asset, the
/// user prompt carries the rendered input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub system_prompt: String,
    pub user_prompt: String,
    pub expect_structured: bool,
    pub temperature: f64,
}

impl ChatRequest {
    pub fn new(system_prompt: impl Into<String>, user_prompt: impl Into<String>) -> Self {
        ChatRequest {
            system_prompt: system_prompt.into(),
            user_prompt: user_prompt.into(),
            expect_structured: true,
            temperature: 0.0,
        }
    }

    /// Stable hex digest of the prompt pair; used as the mock lookup key and
    /// recorded in answer traces.
    pub fn fingerprint(&self) -> String {
        prompt_fingerprint(&self.system_prompt, &self.user_prompt)
    }
}

pub fn prompt_fingerprint(system_prompt: &str, user_prompt: &str) -> String {
    let mut hasher = Sha256::new();
    hasher.update(system_prompt.as_bytes());
    hasher.update([0u8]);
    hasher.update(user_prompt.as_bytes());
    hex::encode(&hasher.finalize()[..16])
}

/// A unit-norm embedding vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Embedding(Vec<f32>);

impl Embedding {
    /// Normalizes `values` to unit length. Fails on empty or zero vectors.
    pub fn normalized(values: Vec<f64>) -> Option<Embedding> {
        let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
        if values.is_empty() || !norm.is_finite() || norm == 0.0 {
            return None;
        }
        Some(Embedding(
            values.iter().map(|v| (v / norm) as f32).collect(),
        ))
    }

    /// Wraps values that are already unit-norm, checking the norm.
    pub fn from_unit(values: Vec<f32>) -> Option<Embedding> {
        let e = Embedding(values);
        if e.is_unit() {
            Some(e)
        } else {
            None
        }
    }

    pub fn values(&self) -> &[f32] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn norm(&self) -> f64 {
        self.0
            .iter()
            .map(|&v| f64::from(v) * f64::from(v))
            .sum::<f64>()
            .sqrt()
    }

    pub fn is_unit(&self) -> bool {
        !self.0.is_empty() && (self.norm() - 1.0).abs() <= UNIT_NORM_TOLERANCE
    }
}

/// Cosine similarity of two unit vectors, i.e. their dot product, clamped
/// to [-1, 1] against rounding.
pub fn cosine(a: &Embedding, b: &Embedding) -> Result<f64, DimensionError> {
    if a.dim() != b.dim() {
        return Err(DimensionError {
            left: a.dim(),
            right: b.dim(),
        });
    }
    let dot: f64 =
        a.0.iter()
            .zip(&b.0)
            .map(|(&x, &y)| f64::from(x) * f64::from(y))
            .sum();
    Ok(dot.clamp(-1.0, 1.0))
}

/// Uniform access to a language model and an embedding model.
pub trait ModelGateway: Send + Sync {
    fn complete(&self, request: &ChatRequest) -> Result<String, GatewayError>;

    fn embed(&self, texts: &[String]) -> Result<Vec<Embedding>, GatewayError>;

    /// Whether outputs are a pure function of inputs (mock backend).
    fn is_deterministic(&self) -> bool {
        false
    }

    fn embed_one(&self, text: &str) -> Result<Embedding, GatewayError> {
        let mut out = self.embed(&[text.to_string()])?;
        out.pop()
            .ok_or_else(|| GatewayError::BadResponse("empty embedding batch".into()))
    }
}

impl<G: ModelGateway + ?Sized> ModelGateway for &G {
    fn complete(&self, request: &ChatRequest) -> Result<String, GatewayError> {
        (**self).complete(request)
    }
    fn embed(&self, texts: &[String]) -> Result<Vec<Embedding>, GatewayError> {
        (**self).embed(texts)
    }
    fn is_deterministic(&self) -> bool {
        (**self).is_deterministic()
    }
}

impl<G: ModelGateway + ?Sized> ModelGateway for Box<G> {
    fn complete(&self, request: &ChatRequest) -> Result<String, GatewayError> {
        (**self).complete(request)
    }
    fn embed(&self, texts: &[String]) -> Result<Vec<Embedding>, GatewayError> {
        (**self).embed(texts)
    }
    fn is_deterministic(&self) -> bool {
        (**self).is_deterministic()
    }
}
