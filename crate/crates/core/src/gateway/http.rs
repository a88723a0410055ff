//! Chat-completions/embeddings client for OpenAI-compatible servers.

use std::time::Duration;

use log::{debug, warn};
use serde::{Deserialize, Serialize};

use super::{ChatRequest, Embedding, GatewayError, Limiter, ModelGateway};

#[derive(Debug, Clone, PartialEq)]
pub struct HttpGatewaySettings {
    pub base_url: String,
    pub api_key: Option<String>,
    pub chat_model: String,
    pub embedding_model: String,
    pub timeout_secs: u64,
    pub max_in_flight: usize,
    pub max_retries: u32,
    pub backoff_base_ms: u64,
    /// User prompts longer than this many characters are cut to it before
    /// sending, with a warning. `None` sends prompts whole.
    pub max_prompt_chars: Option<usize>,
}

impl Default for HttpGatewaySettings {
    fn default() -> Self {
        HttpGatewaySettings {
            base_url: "http://localhost:11434/v1".into(),
            api_key: None,
            chat_model: "phi4".into(),
            embedding_model: "bge-large-en-v1.5".into(),
            timeout_secs: 120,
            max_in_flight: 4,
            max_retries: 2,
            backoff_base_ms: 500,
            max_prompt_chars: None,
        }
    }
}

pub struct HttpGateway {
    settings: HttpGatewaySettings,
    client: reqwest::blocking::Client,
    limiter: Limiter,
}

#[derive(Serialize)]
struct WireMessage<'a> {
    role: &'static str,
    content: &'a str,
}

#[derive(Serialize)]
struct WireChatRequest<'a> {
    model: &'a str,
    messages: Vec<WireMessage<'a>>,
    temperature: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    response_format: Option<serde_json::Value>,
}

#[derive(Deserialize)]
struct WireChatResponse {
    choices: Vec<WireChoice>,
}

#[derive(Deserialize)]
struct WireChoice {
    message: WireResponseMessage,
}

#[derive(Deserialize)]
struct WireResponseMessage {
    content: Option<String>,
}

#[derive(Serialize)]
struct WireEmbeddingRequest<'a> {
    model: &'a str,
    input: &'a [String],
}

#[derive(Deserialize)]
struct WireEmbeddingResponse {
    data: Vec<WireEmbedding>,
}

#[derive(Deserialize)]
struct WireEmbedding {
    #[serde(default)]
    index: usize,
    embedding: Vec<f64>,
}

impl HttpGateway {
    pub fn new(settings: HttpGatewaySettings) -> Result<Self, GatewayError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(settings.timeout_secs))
            .connect_timeout(Duration::from_secs(10))
            .build()
            .map_err(|e| GatewayError::InvalidRequest(e.to_string()))?;
        let limiter = Limiter::new(settings.max_in_flight);
        Ok(HttpGateway {
            settings,
            client,
            limiter,
        })
    }

    pub fn settings(&self) -> &HttpGatewaySettings {
        &self.settings
    }

    fn url(&self, path: &str) -> String {
        format!("{}/{}", self.settings.base_url.trim_end_matches('/'), path)
    }

    fn post<B: Serialize, R: for<'de> Deserialize<'de>>(
        &self,
        path: &str,
        body: &B,
    ) -> Result<R, GatewayError> {
        let mut attempt = 0;
        loop {
            let result = {
                let _permit = self.limiter.acquire();
                self.post_once(path, body)
            };
            match result {
                Err(e) if e.is_retryable() && attempt < self.settings.max_retries => {
                    let delay = self.settings.backoff_base_ms * (1 << attempt);
                    warn!("{path}: {e}; retrying in {delay} ms");
                    std::thread::sleep(Duration::from_millis(delay));
                    attempt += 1;
                }
                other => return other,
            }
        }
    }

    fn post_once<B: Serialize, R: for<'de> Deserialize<'de>>(
        &self,
        path: &str,
        body: &B,
    ) -> Result<R, GatewayError> {
        let mut request = self.client.post(self.url(path)).json(body);
        if let Some(key) = &self.settings.api_key {
            request = request.bearer_auth(key);
        }
        let response = request.send().map_err(|e| self.transport_error(e))?;
        let status = response.status();
        if !status.is_success() {
            let text = response.text().unwrap_or_default();
            return Err(GatewayError::Transport {
                message: format!("HTTP {status}: {}", truncate(&text, 300)),
                retryable: status.as_u16() == 429 || status.is_server_error(),
            });
        }
        response
            .json::<R>()
            .map_err(|e| GatewayError::BadResponse(e.to_string()))
    }

    fn transport_error(&self, e: reqwest::Error) -> GatewayError {
        if e.is_timeout() {
            GatewayError::Timeout(self.settings.timeout_secs)
        } else {
            GatewayError::Transport {
                message: e.to_string(),
                retryable: e.is_connect() || e.is_request(),
            }
        }
    }
}

fn truncate(s: &str, max: usize) -> &str {
    match s.char_indices().nth(max) {
        Some((i, _)) => &s[..i],
        None => s,
    }
}

impl ModelGateway for HttpGateway {
    fn complete(&self, request: &ChatRequest) -> Result<String, GatewayError> {
        if request.user_prompt.trim().is_empty() {
            return Err(GatewayError::InvalidRequest("user prompt is empty".into()));
        }
        let mut messages = Vec::with_capacity(2);
        if !request.system_prompt.is_empty() {
            messages.push(WireMessage {
                role: "system",
                content: &request.system_prompt,
            });
        }
        let mut user_prompt = request.user_prompt.as_str();
        if let Some(limit) = self.settings.max_prompt_chars {
            let cut = truncate(user_prompt, limit);
            if cut.len() < user_prompt.len() {
                warn!(
                    "chat request {}: user prompt of {} chars truncated to {limit}",
                    request.fingerprint(),
                    user_prompt.chars().count()
                );
                user_prompt = cut;
            }
        }
        messages.push(WireMessage {
            role: "user",
            content: user_prompt,
        });
        let body = WireChatRequest {
            model: &self.settings.chat_model,
            messages,
            temperature: request.temperature,
            response_format: request
                .expect_structured
                .then(|| serde_json::json!({"type": "json_object"})),
        };
        debug!("chat request {}", request.fingerprint());
        let response: WireChatResponse = self.post("chat/completions", &body)?;
        response
            .choices
            .into_iter()
            .next()
            .and_then(|c| c.message.content)
            .ok_or_else(|| GatewayError::BadResponse("no message content in response".into()))
    }

    fn embed(&self, texts: &[String]) -> Result<Vec<Embedding>, GatewayError> {
        if texts.is_empty() {
            return Err(GatewayError::InvalidRequest(
                "embed called with no texts".into(),
            ));
        }
        let body = WireEmbeddingRequest {
            model: &self.settings.embedding_model,
            input: texts,
        };
        let mut response: WireEmbeddingResponse = self.post("embeddings", &body)?;
        if response.data.len() != texts.len() {
            return Err(GatewayError::BadResponse(format!(
                "{} embeddings for {} inputs",
                response.data.len(),
                texts.len()
            )));
        }
        response.data.sort_by_key(|d| d.index);
        response
            .data
            .into_iter()
            .map(|d| {
                Embedding::normalized(d.embedding)
                    .ok_or_else(|| GatewayError::BadResponse("zero or empty embedding".into()))
            })
            .collect()
    }
}
