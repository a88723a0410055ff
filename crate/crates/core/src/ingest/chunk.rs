use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Word-window chunking parameters. A word is a maximal run of
/// non-whitespace characters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChunkParams {
    pub size: usize,
    pub overlap: usize,
}

impl ChunkParams {
    /// Chunking used when building the knowledge graph.
    pub const GRAPH: ChunkParams = ChunkParams {
        size: 500,
        overlap: 200,
    };
    /// Chunking used for the similarity-only baseline store.
    pub const BASELINE: ChunkParams = ChunkParams {
        size: 500,
        overlap: 100,
    };

    pub fn stride(&self) -> usize {
        self.size - self.overlap
    }

    pub fn validate(&self) -> Result<(), ChunkError> {
        if self.size == 0 || self.overlap >= self.size {
            return Err(ChunkError {
                size: self.size,
                overlap: self.overlap,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Error, PartialEq)]
#[error("invalid chunk parameters: size {size}, overlap {overlap} (need 0 <= overlap < size)")]
pub struct ChunkError {
    pub size: usize,
    pub overlap: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Chunk {
    pub source_id: String,
    pub chunk_index: usize,
    /// The chunk's words joined by single spaces.
    pub text: String,
    /// Half-open word range within the source.
    pub word_span: (usize, usize),
}

impl Chunk {
    pub fn word_count(&self) -> usize {
        self.word_span.1 - self.word_span.0
    }
}

/// Chunk `i` starts at word `i * (size - overlap)`; the last chunk ends at
/// the final word and may be short.
pub fn chunk_text(
    source_id: &str,
    text: &str,
    params: ChunkParams,
) -> Result<Vec<Chunk>, ChunkError> {
    params.validate()?;
    let words: Vec<&str> = text.split_whitespace().collect();
    let mut chunks = Vec::new();
    let mut start = 0;
    while start < words.len() {
        let end = (start + params.size).min(words.len());
        chunks.push(Chunk {
            source_id: source_id.to_string(),
            chunk_index: chunks.len(),
            text: words[start..end].join(" "),
            word_span: (start, end),
        });
        if end == words.len() {
            break;
        }
        start += params.stride();
    }
    Ok(chunks)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn words(n: usize) -> String {
        (0..n)
            .map(|i| format!("w{i}"))
            .collect::<Vec<_>>()
            .join(" ")
    }

    #[test]
    fn short_text_is_one_chunk() {
        let c = chunk_text("s", &words(400), ChunkParams::GRAPH).unwrap();
        assert_eq!(c.len(), 1);
        assert_eq!(c[0].word_count(), 400);
    }

    #[test]
    fn twelve_hundred_words() {
        let c = chunk_text("s", &words(1200), ChunkParams::GRAPH).unwrap();
        let starts: Vec<_> = c.iter().map(|c| c.word_span.0).collect();
        assert_eq!(starts, vec![0, 300, 600, 900]);
        assert_eq!(c[3].word_count(), 300);
        assert!(c[0].text.starts_with("w0 w1"));
    }

    #[test]
    fn exact_size_boundary() {
        assert_eq!(
            chunk_text("s", &words(500), ChunkParams::BASELINE)
                .unwrap()
                .len(),
            1
        );
        assert_eq!(
            chunk_text("s", &words(501), ChunkParams::BASELINE)
                .unwrap()
                .len(),
            2
        );
    }

    #[test]
    fn empty_and_invalid() {
        assert!(chunk_text("s", "  \n\t ", ChunkParams::GRAPH)
            .unwrap()
            .is_empty());
        let bad = ChunkParams {
            size: 10,
            overlap: 10,
        };
        assert!(chunk_text("s", "a b", bad).is_err());
    }

    #[test]
    fn whitespace_runs_are_one_separator() {
        let c = chunk_text(
            "s",
            "a\t\tb\n\nc  d",
            ChunkParams {
                size: 3,
                overlap: 1,
            },
        )
        .unwrap();
        assert_eq!(c[0].text, "a b c");
        assert_eq!(c[1].text, "c d");
    }
}
