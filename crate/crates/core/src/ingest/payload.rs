//! Recovering structured payloads from free-form model output, with one
//! repair round-trip on failure.

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::gateway::{ChatRequest, GatewayError, ModelGateway};

#[derive(Debug, Error, Clone, PartialEq)]
#[error("no parseable payload (offset {offset}): {message}")]
pub struct ParseFailure {
    pub offset: usize,
    pub message: String,
}

/// One model call as recorded in reports and traces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelCall {
    pub purpose: String,
    pub fingerprint: String,
    pub raw_output: String,
}

fn first_value(s: &str) -> Result<Value, serde_json::Error> {
    let mut stream = serde_json::Deserializer::from_str(s).into_iter::<Value>();
    match stream.next() {
        Some(v) => v,
        None => serde_json::from_str(s),
    }
}

/// Strips code fences and surrounding prose, then parses the first
/// well-formed `{...}` or `[...]` value.
pub fn parse_model_payload(raw: &str) -> Result<Value, ParseFailure> {
    if let Some(open) = raw.find("```") {
        let after = &raw[open + 3..];
        let body_start = after.find('\n').map_or(0, |i| i + 1);
        let body = &after[body_start..];
        let body = body.find("```").map_or(body, |end| &body[..end]);
        if let Ok(v) = parse_model_payload(body) {
            return Ok(v);
        }
    }
    let mut first_error: Option<ParseFailure> = None;
    for (offset, ch) in raw.char_indices() {
        if ch != '{' && ch != '[' {
            continue;
        }
        match first_value(&raw[offset..]) {
            Ok(v @ (Value::Object(_) | Value::Array(_))) => return Ok(v),
            Ok(_) => {}
            Err(e) => {
                first_error.get_or_insert(ParseFailure {
                    offset,
                    message: e.to_string(),
                });
            }
        }
    }
    Err(first_error.unwrap_or(ParseFailure {
        offset: 0,
        message: "no '{' or '[' in output".into(),
    }))
}

#[derive(Debug, Error)]
pub enum StructuredError {
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error("unusable model output after repair: {message}")]
    Unparseable {
        message: String,
        raw_output: String,
        calls: Vec<ModelCall>,
    },
}

/// Asks the model, parses the payload and interprets it with `interpret`.
/// On failure the request is re-sent once with the error appended.
pub fn ask_structured<T>(
    gateway: &dyn ModelGateway,
    purpose: &str,
    request: &ChatRequest,
    calls: &mut Vec<ModelCall>,
    interpret: impl Fn(Value) -> Result<T, String>,
) -> Result<T, StructuredError> {
    let raw = gateway.complete(request)?;
    calls.push(ModelCall {
        purpose: purpose.to_string(),
        fingerprint: request.fingerprint(),
        raw_output: raw.clone(),
    });
    let message = match parse_model_payload(&raw)
        .map_err(|e| e.to_string())
        .and_then(&interpret)
    {
        Ok(v) => return Ok(v),
        Err(message) => message,
    };
    let repair = ChatRequest {
        user_prompt: format!(
            "{}\n\nYour previous response could not be used ({message}). Respond again with only the JSON output in the required format.",
            request.user_prompt
        ),
        ..request.clone()
    };
    let raw = gateway.complete(&repair)?;
    calls.push(ModelCall {
        purpose: format!("{purpose}/repair"),
        fingerprint: repair.fingerprint(),
        raw_output: raw.clone(),
    });
    parse_model_payload(&raw)
        .map_err(|e| e.to_string())
        .and_then(interpret)
        .map_err(|message| StructuredError::Unparseable {
            message,
            raw_output: raw,
            calls: calls.clone(),
        })
}
