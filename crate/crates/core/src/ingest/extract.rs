//! Prompted entity and relation extraction.

use std::collections::HashSet;

use log::warn;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use super::payload::{ask_structured, ModelCall, StructuredError};
use crate::gateway::{ChatRequest, GatewayError, ModelGateway};
use crate::graph::{normalize_name, EntityType};
use crate::prompts::Prompt;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractedEntity {
    pub name: String,
    pub entity_type: EntityType,
    pub aliases: Vec<String>,
    pub entity_information: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtractedTriple {
    pub subject: String,
    pub relation: String,
    pub object: String,
}

impl ExtractedTriple {
    /// Text embedded for the related_to link.
    pub fn sentence(&self) -> String {
        format!("{} {} {}", self.subject, self.relation, self.object)
    }
}

#[derive(Debug, Error)]
pub enum ExtractionError {
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error("unparseable extraction output: {message}")]
    Unparseable { message: String, raw_output: String },
}

impl From<StructuredError> for ExtractionError {
    fn from(e: StructuredError) -> Self {
        match e {
            StructuredError::Gateway(g) => ExtractionError::Gateway(g),
            StructuredError::Unparseable {
                message,
                raw_output,
                ..
            } => ExtractionError::Unparseable {
                message,
                raw_output,
            },
        }
    }
}

/// Parsed extraction output plus the warnings raised while filtering it.
#[derive(Debug, Clone, PartialEq)]
pub struct Extracted<T> {
    pub items: Vec<T>,
    pub warnings: Vec<String>,
    pub calls: Vec<ModelCall>,
}

impl<T> Default for Extracted<T> {
    fn default() -> Self {
        Extracted {
            items: Vec::new(),
            warnings: Vec::new(),
            calls: Vec::new(),
        }
    }
}

fn string_field(obj: &serde_json::Map<String, Value>, key: &str) -> String {
    obj.get(key)
        .and_then(Value::as_str)
        .unwrap_or_default()
        .trim()
        .to_string()
}

fn interpret_entities(value: Value) -> Result<(Vec<ExtractedEntity>, Vec<String>), String> {
    let list = match value {
        Value::Array(list) => list,
        Value::Object(mut obj) => match obj.remove("entities") {
            Some(Value::Array(list)) => list,
            _ => return Err("expected a JSON array of entities".into()),
        },
        _ => return Err("expected a JSON array of entities".into()),
    };
    let mut entities = Vec::new();
    let mut warnings = Vec::new();
    for item in list {
        let Value::Object(obj) = item else {
            warnings.push(format!("dropped non-object entity {item}"));
            continue;
        };
        let name = string_field(&obj, "name");
        if name.is_empty() {
            warnings.push("dropped entity with empty name".into());
            continue;
        }
        let label = string_field(&obj, "type");
        let entity_type = EntityType::parse(&label).unwrap_or_else(|| {
            warnings.push(format!(
                "entity {name:?}: unknown type {label:?}, using MISC"
            ));
            EntityType::Misc
        });
        let aliases = match obj.get("aliases") {
            Some(Value::Array(a)) => a
                .iter()
                .filter_map(Value::as_str)
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(String::from)
                .collect(),
            Some(Value::String(s)) if !s.trim().is_empty() => vec![s.trim().to_string()],
            _ => Vec::new(),
        };
        entities.push(ExtractedEntity {
            name,
            entity_type,
            aliases,
            entity_information: string_field(&obj, "entity_information"),
        });
    }
    Ok((entities, warnings))
}

pub fn extract_entities(
    gateway: &dyn ModelGateway,
    chunk_text: &str,
) -> Result<Extracted<ExtractedEntity>, ExtractionError> {
    if chunk_text.trim().is_empty() {
        return Ok(Extracted::default());
    }
    let request = ChatRequest::new(Prompt::Ner.text(), chunk_text);
    let mut calls = Vec::new();
    let (items, warnings) =
        ask_structured(gateway, "ner", &request, &mut calls, interpret_entities)?;
    for w in &warnings {
        warn!("ner: {w}");
    }
    Ok(Extracted {
        items,
        warnings,
        calls,
    })
}

/// User prompt for relation extraction, shaped like the prompt's own
/// demonstration.
pub fn relation_user_prompt(chunk_text: &str, entity_names: &[String]) -> String {
    format!("{chunk_text}\n\nEntity list: {}", entity_names.join(", "))
}

fn interpret_triples(value: Value) -> Result<Vec<Value>, String> {
    match value {
        Value::Object(mut obj) => match obj.remove("triples") {
            Some(Value::Array(list)) => Ok(list),
            _ => Err("expected an object with a \"triples\" list".into()),
        },
        Value::Array(list) => Ok(list),
        _ => Err("expected an object with a \"triples\" list".into()),
    }
}

pub fn extract_relations(
    gateway: &dyn ModelGateway,
    chunk_text: &str,
    entity_names: &[String],
) -> Result<Extracted<ExtractedTriple>, ExtractionError> {
    if entity_names.is_empty() || chunk_text.trim().is_empty() {
        return Ok(Extracted::default());
    }
    let request = ChatRequest::new(
        Prompt::RelationExtraction.text(),
        relation_user_prompt(chunk_text, entity_names),
    );
    let mut calls = Vec::new();
    let raw_triples = ask_structured(gateway, "re", &request, &mut calls, interpret_triples)?;

    let known: HashSet<String> = entity_names.iter().map(|n| normalize_name(n)).collect();
    let mut items = Vec::new();
    let mut warnings = Vec::new();
    for t in raw_triples {
        let parts: Option<Vec<String>> = t.as_array().and_then(|a| {
            (a.len() == 3)
                .then(|| {
                    a.iter()
                        .map(|v| v.as_str().map(|s| s.trim().to_string()))
                        .collect()
                })
                .flatten()
        });
        let Some(parts) = parts.filter(|p| p.iter().all(|s| !s.is_empty())) else {
            warnings.push(format!("dropped malformed triple {t}"));
            continue;
        };
        let [subject, relation, object]: [String; 3] = parts.try_into().expect("three parts");
        let (s, o) = (normalize_name(&subject), normalize_name(&object));
        if !known.contains(&s) || !known.contains(&o) {
            warnings.push(format!(
                "dropped triple with unknown entity: [{subject}, {relation}, {object}]"
            ));
            continue;
        }
        if s == o {
            warnings.push(format!("dropped self-relation on {subject:?}"));
            continue;
        }
        items.push(ExtractedTriple {
            subject,
            relation,
            object,
        });
    }
    for w in &warnings {
        warn!("re: {w}");
    }
    Ok(Extracted {
        items,
        warnings,
        calls,
    })
}
