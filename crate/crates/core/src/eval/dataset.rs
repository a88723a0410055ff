//! Benchmark records and seeded sampling.
//!
//! Field mapping, one JSON object per line:
//!
//! * `musique`: `id`, `question`, `answer`, optional `answer_aliases`, and
//!   `paragraphs` of `{title, paragraph_text, is_supporting}`.
//! * `twowiki`: `_id`, `question`, `answer`, optional `answer_aliases`,
//!   `context` as `[title, [sentence, ...]]` pairs, and optional
//!   `supporting_facts` as `[title, sentence_index]` pairs; a paragraph is
//!   supporting when its title appears in `supporting_facts`.

use std::collections::HashSet;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::ingest::SourceDocument;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Paragraph {
    pub title: String,
    pub text: String,
    pub is_supporting: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QaItem {
    pub id: String,
    pub question: String,
    pub gold_answer: String,
    pub gold_aliases: Vec<String>,
    pub paragraphs: Vec<Paragraph>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DatasetFormat {
    Musique,
    Twowiki,
}

impl DatasetFormat {
    pub fn parse(s: &str) -> Option<DatasetFormat> {
        match s.to_ascii_lowercase().as_str() {
            "musique" => Some(DatasetFormat::Musique),
            "twowiki" | "2wiki" | "2wikimultihopqa" => Some(DatasetFormat::Twowiki),
            _ => None,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            DatasetFormat::Musique => "MuSiQue",
            DatasetFormat::Twowiki => "2WikiMultihopQA",
        }
    }
}

#[derive(Deserialize)]
struct MusiqueParagraph {
    #[serde(default)]
    title: String,
    paragraph_text: String,
    #[serde(default)]
    is_supporting: bool,
}

#[derive(Deserialize)]
struct MusiqueLine {
    id: String,
    question: String,
    answer: String,
    #[serde(default)]
    answer_aliases: Vec<String>,
    #[serde(default)]
    paragraphs: Vec<MusiqueParagraph>,
}

#[derive(Deserialize)]
struct TwowikiLine {
    #[serde(rename = "_id")]
    id: String,
    question: String,
    answer: String,
    #[serde(default)]
    answer_aliases: Vec<String>,
    #[serde(default)]
    context: Vec<(String, Vec<String>)>,
    #[serde(default)]
    supporting_facts: Vec<(String, serde_json::Value)>,
}

fn parse_line(line: &str, format: DatasetFormat) -> Result<QaItem, String> {
    let item = match format {
        DatasetFormat::Musique => {
            let m: MusiqueLine = serde_json::from_str(line).map_err(|e| e.to_string())?;
            QaItem {
                id: m.id,
                question: m.question,
                gold_answer: m.answer,
                gold_aliases: m.answer_aliases,
                paragraphs: m
                    .paragraphs
                    .into_iter()
                    .map(|p| Paragraph {
                        title: p.title,
                        text: p.paragraph_text,
                        is_supporting: p.is_supporting,
                    })
                    .collect(),
            }
        }
        DatasetFormat::Twowiki => {
            let w: TwowikiLine = serde_json::from_str(line).map_err(|e| e.to_string())?;
            let supporting: HashSet<&str> =
                w.supporting_facts.iter().map(|(t, _)| t.as_str()).collect();
            let paragraphs = w
                .context
                .iter()
                .map(|(title, sentences)| Paragraph {
                    title: title.clone(),
                    text: sentences
                        .iter()
                        .map(|s| s.trim())
                        .collect::<Vec<_>>()
                        .join(" "),
                    is_supporting: supporting.contains(title.as_str()),
                })
                .collect();
            QaItem {
                id: w.id,
                question: w.question,
                gold_answer: w.answer,
                gold_aliases: w.answer_aliases,
                paragraphs,
            }
        }
    };
    if item.question.trim().is_empty() {
        return Err("empty question".into());
    }
    if item.gold_answer.trim().is_empty() {
        return Err("empty answer".into());
    }
    Ok(item)
}

pub fn load_dataset(path: &Path, format: DatasetFormat) -> Result<Vec<QaItem>, EvalError> {
    let text = std::fs::read_to_string(path).map_err(|source| EvalError::Io {
        path: path.display().to_string(),
        source,
    })?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            parse_line(l, format).map_err(|message| EvalError::Parse {
                path: path.display().to_string(),
                line: i + 1,
                message,
            })
        })
        .collect()
}

/// `n` distinct items chosen by a seeded shuffle.
pub fn sample(items: &[QaItem], n: usize, seed: u64) -> Result<Vec<QaItem>, EvalError> {
    if n > items.len() {
        return Err(EvalError::SampleTooLarge {
            requested: n,
            available: items.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..items.len()).collect();
    order.shuffle(&mut rng);
    Ok(order[..n].iter().map(|&i| items[i].clone()).collect())
}

/// The paragraphs of `items` as a corpus, one source per distinct
/// (title, text) pair, in first-seen order.
pub fn corpus_from_items(items: &[QaItem]) -> Vec<SourceDocument> {
    let mut seen = HashSet::new();
    let mut corpus = Vec::new();
    for p in items.iter().flat_map(|i| &i.paragraphs) {
        if seen.insert((p.title.clone(), p.text.clone())) {
            corpus.push(SourceDocument {
                id: format!("p{:05}", corpus.len()),
                title: p.title.clone(),
                text: p.text.clone(),
            });
        }
    }
    corpus
}

#[cfg(test)]
mod tests {
    use super::*;

    fn musique_line(id: &str) -> String {
        serde_json::json!({
            "id": id,
            "question": "Who?",
            "answer": "Ada",
            "answer_aliases": ["A."],
            "paragraphs": [
                {"idx": 0, "title": "T", "paragraph_text": "Ada was here.", "is_supporting": true},
                {"idx": 1, "title": "U", "paragraph_text": "Noise."}
            ]
        })
        .to_string()
    }

    fn write(lines: &[String]) -> tempfile::NamedTempFile {
        let f = tempfile::NamedTempFile::new().unwrap();
        std::fs::write(f.path(), lines.join("\n")).unwrap();
        f
    }

    #[test]
    fn three_lines_three_items() {
        let f = write(&[musique_line("a"), musique_line("b"), musique_line("c")]);
        let items = load_dataset(f.path(), DatasetFormat::Musique).unwrap();
        assert_eq!(items.len(), 3);
        assert_eq!(items[0].gold_aliases, vec!["A.".to_string()]);
        assert!(items[0].paragraphs[0].is_supporting);
        assert!(!items[0].paragraphs[1].is_supporting);
    }

    #[test]
    fn missing_aliases_default_to_empty() {
        let line = r#"{"id":"x","question":"Q?","answer":"A","paragraphs":[]}"#.to_string();
        let f = write(&[line]);
        assert!(load_dataset(f.path(), DatasetFormat::Musique).unwrap()[0]
            .gold_aliases
            .is_empty());
    }

    #[test]
    fn corrupt_line_two() {
        let f = write(&[musique_line("a"), "{oops".into(), musique_line("c")]);
        match load_dataset(f.path(), DatasetFormat::Musique) {
            Err(EvalError::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn twowiki_mapping() {
        let line = serde_json::json!({
            "_id": "w1",
            "type": "compositional",
            "question": "Where was the director born?",
            "answer": "Paris",
            "context": [["Film", ["It was directed by X.", " It won."]], ["X", ["X was born in Paris."]], ["Other", ["Noise."]]],
            "supporting_facts": [["Film", 0], ["X", 0]]
        })
        .to_string();
        let f = write(&[line]);
        let item = &load_dataset(f.path(), DatasetFormat::Twowiki).unwrap()[0];
        assert_eq!(item.id, "w1");
        assert_eq!(item.paragraphs[0].text, "It was directed by X. It won.");
        let flags: Vec<bool> = item.paragraphs.iter().map(|p| p.is_supporting).collect();
        assert_eq!(flags, vec![true, true, false]);
    }

    fn items(n: usize) -> Vec<QaItem> {
        (0..n)
            .map(|i| QaItem {
                id: format!("q{i}"),
                question: "Q".into(),
                gold_answer: "A".into(),
                gold_aliases: vec![],
                paragraphs: vec![],
            })
            .collect()
    }

    #[test]
    fn sampling() {
        let all = items(100);
        assert_eq!(sample(&all, 10, 7).unwrap(), sample(&all, 10, 7).unwrap());
        assert_ne!(sample(&all, 10, 7).unwrap(), sample(&all, 10, 8).unwrap());
        let mut perm: Vec<String> = sample(&all, 100, 1)
            .unwrap()
            .into_iter()
            .map(|i| i.id)
            .collect();
        perm.sort();
        let mut ids: Vec<String> = all.iter().map(|i| i.id.clone()).collect();
        ids.sort();
        assert_eq!(perm, ids);
        assert!(matches!(
            sample(&all, 101, 1),
            Err(EvalError::SampleTooLarge { .. })
        ));
    }

    #[test]
    fn corpus_dedups_shared_paragraphs() {
        let f = write(&[musique_line("a"), musique_line("b")]);
        let items = load_dataset(f.path(), DatasetFormat::Musique).unwrap();
        let corpus = corpus_from_items(&items);
        assert_eq!(corpus.len(), 2);
        assert_eq!(corpus[0].full_text(), "T\nAda was here.");
    }
}
