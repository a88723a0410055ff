//! Prompt assets, embedded verbatim from `prompts/`.
//!
//! `prompts/SHA256SUMS` pins the digest of every asset; the tests fail if an
//! asset is edited without updating the checksum file.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Prompt {
    AnsweringBaseline,
    ReasoningBaseline,
    Decomposition,
    Ner,
    RelationExtraction,
    AnsweringSa,
    ReasoningSa,
}

impl Prompt {
    pub const ALL: [Prompt; 7] = [
        Prompt::AnsweringBaseline,
        Prompt::ReasoningBaseline,
        Prompt::Decomposition,
        Prompt::Ner,
        Prompt::RelationExtraction,
        Prompt::AnsweringSa,
        Prompt::ReasoningSa,
    ];

    pub fn text(self) -> &'static str {
        match self {
            Prompt::AnsweringBaseline => include_str!("../prompts/answering_baseline.txt"),
            Prompt::ReasoningBaseline => include_str!("../prompts/reasoning_baseline.txt"),
            Prompt::Decomposition => include_str!("../prompts/decomposition.txt"),
            Prompt::Ner => include_str!("../prompts/ner.txt"),
            Prompt::RelationExtraction => include_str!("../prompts/relation_extraction.txt"),
            Prompt::AnsweringSa => include_str!("../prompts/answering_sa.txt"),
            Prompt::ReasoningSa => include_str!("../prompts/reasoning_sa.txt"),
        }
    }

    pub fn file_name(self) -> &'static str {
        match self {
            Prompt::AnsweringBaseline => "answering_baseline.txt",
            Prompt::ReasoningBaseline => "reasoning_baseline.txt",
            Prompt::Decomposition => "decomposition.txt",
            Prompt::Ner => "ner.txt",
            Prompt::RelationExtraction => "relation_extraction.txt",
            Prompt::AnsweringSa => "answering_sa.txt",
            Prompt::ReasoningSa => "reasoning_sa.txt",
        }
    }
}

pub const CHECKSUMS: &str = include_str!("../prompts/SHA256SUMS");
