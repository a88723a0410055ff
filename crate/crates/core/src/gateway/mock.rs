//! Deterministic offline backend.
//!
//! Chat responses come from fixture rules: an exact prompt fingerprint, or
//! substring conditions on the system and user prompts (first matching rule
//! wins). Embeddings are pseudo-random unit vectors seeded from a hash of the
//! text, optionally overridden per text.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;
use std::sync::Mutex;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{ChatRequest, Embedding, GatewayError, ModelGateway};

pub const DEFAULT_MOCK_DIM: usize = 64;

/// How the mock derives embeddings for texts without a pinned vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EmbeddingMode {
    /// One pseudo-random vector per distinct text.
    #[default]
    Hash,
    /// Sum of per-token pseudo-random vectors plus a small whole-text term,
    /// so that texts sharing content words have positive similarity.
    Lexical,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmbeddingSettings {
    #[serde(default)]
    pub mode: EmbeddingMode,
    #[serde(default = "default_dim")]
    pub dim: usize,
    /// Weight `a` of one direction shared by every derived vector. Two
    /// unrelated texts then have an expected cosine of `a^2 / (1 + a^2)`,
    /// which mimics the positive baseline similarity of dense sentence
    /// encoders. Pinned vectors are not affected.
    #[serde(default, skip_serializing_if = "is_zero")]
    pub anisotropy: f64,
}

fn is_zero(v: &f64) -> bool {
    *v == 0.0
}

impl Default for EmbeddingSettings {
    fn default() -> Self {
        EmbeddingSettings {
            mode: EmbeddingMode::Hash,
            dim: DEFAULT_MOCK_DIM,
            anisotropy: 0.0,
        }
    }
}

fn default_dim() -> usize {
    DEFAULT_MOCK_DIM
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PinnedEmbedding {
    pub text: String,
    pub vector: Vec<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MockRule {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fingerprint: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub system_contains: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub user_contains: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub user_excludes: Vec<String>,
    /// A string is returned verbatim; any other JSON value is returned in
    /// its compact serialization.
    pub response: serde_json::Value,
}

impl MockRule {
    pub fn exact(request: &ChatRequest, response: impl Into<String>) -> Self {
        MockRule {
            fingerprint: Some(request.fingerprint()),
            response: serde_json::Value::String(response.into()),
            ..Default::default()
        }
    }

    pub fn when_user_contains(needle: impl Into<String>, response: impl Into<String>) -> Self {
        MockRule {
            user_contains: vec![needle.into()],
            response: serde_json::Value::String(response.into()),
            ..Default::default()
        }
    }

    fn matches(&self, request: &ChatRequest, fingerprint: &str) -> bool {
        if let Some(fp) = &self.fingerprint {
            if fp != fingerprint {
                return false;
            }
        }
        self.system_contains
            .iter()
            .all(|s| request.system_prompt.contains(s.as_str()))
            && self
                .user_contains
                .iter()
                .all(|s| request.user_prompt.contains(s.as_str()))
            && !self
                .user_excludes
                .iter()
                .any(|s| request.user_prompt.contains(s.as_str()))
    }

    fn rendered_response(&self) -> String {
        match &self.response {
            serde_json::Value::String(s) => s.clone(),
            other => other.to_string(),
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MockFixture {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub embedding: Option<EmbeddingSettings>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub embeddings: Vec<PinnedEmbedding>,
    #[serde(default)]
    pub responses: Vec<MockRule>,
}

impl MockFixture {
    /// Loads one fixture file, or every `*.json` file of a directory in
    /// name order with their rules concatenated.
    pub fn load(path: &Path) -> Result<MockFixture, GatewayError> {
        let bad = |e: String| GatewayError::InvalidRequest(format!("{}: {e}", path.display()));
        if path.is_dir() {
            let mut files: Vec<_> = std::fs::read_dir(path)
                .map_err(|e| bad(e.to_string()))?
                .filter_map(|entry| entry.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|x| x == "json"))
                .collect();
            files.sort();
            let mut merged = MockFixture::default();
            for file in files {
                let part = MockFixture::load(&file)?;
                if merged.embedding.is_none() {
                    merged.embedding = part.embedding;
                }
                merged.embeddings.extend(part.embeddings);
                merged.responses.extend(part.responses);
            }
            Ok(merged)
        } else {
            let text = std::fs::read_to_string(path).map_err(|e| bad(e.to_string()))?;
            serde_json::from_str(&text).map_err(|e| bad(e.to_string()))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    pub fingerprint: String,
    pub user_prompt: String,
    pub response: String,
    pub calls: usize,
}

pub struct MockGateway {
    settings: EmbeddingSettings,
    pinned: HashMap<String, Embedding>,
    rules: Vec<MockRule>,
    transcript: Mutex<BTreeMap<String, TranscriptEntry>>,
}

impl MockGateway {
    pub fn new(fixture: MockFixture) -> Result<Self, GatewayError> {
        let settings = fixture.embedding.unwrap_or_default();
        if settings.dim == 0 {
            return Err(GatewayError::InvalidRequest(
                "mock embedding dim must be > 0".into(),
            ));
        }
        if !settings.anisotropy.is_finite() || settings.anisotropy < 0.0 {
            return Err(GatewayError::InvalidRequest(
                "mock anisotropy must be finite and >= 0".into(),
            ));
        }
        let mut pinned = HashMap::new();
        for p in fixture.embeddings {
            if p.vector.len() != settings.dim {
                return Err(GatewayError::InvalidRequest(format!(
                    "pinned embedding for {:?} has dim {}, expected {}",
                    p.text,
                    p.vector.len(),
                    settings.dim
                )));
            }
            let e = Embedding::normalized(p.vector).ok_or_else(|| {
                GatewayError::InvalidRequest(format!("pinned embedding for {:?} is zero", p.text))
            })?;
            pinned.insert(p.text, e);
        }
        Ok(MockGateway {
            settings,
            pinned,
            rules: fixture.responses,
            transcript: Mutex::new(BTreeMap::new()),
        })
    }

    pub fn from_path(path: &Path) -> Result<Self, GatewayError> {
        MockGateway::new(MockFixture::load(path)?)
    }

    /// A mock with hash embeddings of the given dimension and no chat rules.
    pub fn embeddings_only(dim: usize) -> Self {
        MockGateway::new(MockFixture {
            embedding: Some(EmbeddingSettings {
                dim,
                ..Default::default()
            }),
            ..Default::default()
        })
        .expect("valid settings")
    }

    pub fn with_rules(mut self, rules: impl IntoIterator<Item = MockRule>) -> Self {
        self.rules.extend(rules);
        self
    }

    pub fn pin(&mut self, text: impl Into<String>, vector: Vec<f64>) {
        assert_eq!(vector.len(), self.settings.dim, "pinned vector dimension");
        let e = Embedding::normalized(vector).expect("non-zero pinned vector");
        self.pinned.insert(text.into(), e);
    }

    pub fn dim(&self) -> usize {
        self.settings.dim
    }

    /// Chat calls served so far, ordered by fingerprint so the listing does
    /// not depend on thread interleaving.
    pub fn transcript(&self) -> Vec<TranscriptEntry> {
        self.transcript
            .lock()
            .unwrap_or_else(|e| e.into_inner())
            .values()
            .cloned()
            .collect()
    }

    fn hash_vector(&self, domain: &str, text: &str) -> Vec<f64> {
        let mut hasher = Sha256::new();
        hasher.update(domain.as_bytes());
        hasher.update([0u8]);
        hasher.update(text.as_bytes());
        let seed: [u8; 32] = hasher.finalize().into();
        let mut rng = ChaCha8Rng::from_seed(seed);
        (0..self.settings.dim)
            .map(|_| StandardNormal.sample(&mut rng))
            .collect()
    }

    fn derive(&self, text: &str) -> Embedding {
        if let Some(e) = self.pinned.get(text) {
            return e.clone();
        }
        let mut values = self.hash_vector("text", text);
        if self.settings.mode == EmbeddingMode::Lexical {
            let tokens = content_tokens(text);
            if !tokens.is_empty() {
                for v in values.iter_mut() {
                    *v *= 0.1;
                }
                for token in tokens {
                    let tv = self.hash_vector("token", &token);
                    for (v, t) in values.iter_mut().zip(tv) {
                        *v += t;
                    }
                }
            }
        }
        if self.settings.anisotropy > 0.0 {
            let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
            let shared = self.hash_vector("shared", "");
            let shared_norm = shared.iter().map(|v| v * v).sum::<f64>().sqrt();
            let a = self.settings.anisotropy;
            for (v, s) in values.iter_mut().zip(shared) {
                *v = *v / norm + a * s / shared_norm;
            }
        }
        Embedding::normalized(values).unwrap_or_else(|| {
            // Probability zero with Gaussian draws; fall back to a basis vector.
            let mut basis = vec![0.0; self.settings.dim];
            basis[0] = 1.0;
            Embedding::normalized(basis).expect("basis vector")
        })
    }
}

const STOPWORDS: &[&str] = &[
    "the", "and", "for", "was", "were", "with", "that", "this", "from", "which", "who", "what",
    "when", "where", "how", "did", "does", "has", "have", "had", "are", "its", "his", "her",
    "their", "into", "also", "than", "then", "but", "not", "all", "any", "one",
];

fn content_tokens(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .map(str::to_lowercase)
        .filter(|t| t.chars().count() >= 3 && !STOPWORDS.contains(&t.as_str()))
        .collect()
}

impl ModelGateway for MockGateway {
    fn complete(&self, request: &ChatRequest) -> Result<String, GatewayError> {
        if request.user_prompt.trim().is_empty() {
            return Err(GatewayError::InvalidRequest("user prompt is empty".into()));
        }
        let fingerprint = request.fingerprint();
        let rule = self
            .rules
            .iter()
            .find(|r| r.matches(request, &fingerprint))
            .ok_or_else(|| GatewayError::MockMiss {
                fingerprint: fingerprint.clone(),
            })?;
        let response = rule.rendered_response();
        let mut transcript = self.transcript.lock().unwrap_or_else(|e| e.into_inner());
        transcript
            .entry(fingerprint.clone())
            .and_modify(|e| e.calls += 1)
            .or_insert_with(|| TranscriptEntry {
                fingerprint,
                user_prompt: request.user_prompt.clone(),
                response: response.clone(),
                calls: 1,
            });
        Ok(response)
    }

    fn embed(&self, texts: &[String]) -> Result<Vec<Embedding>, GatewayError> {
        if texts.is_empty() {
            return Err(GatewayError::InvalidRequest(
                "embed called with no texts".into(),
            ));
        }
        Ok(texts.iter().map(|t| self.derive(t)).collect())
    }

    fn is_deterministic(&self) -> bool {
        true
    }
}
