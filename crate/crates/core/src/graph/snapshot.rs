//! Line-delimited snapshot format.
//!
//! One JSON record per line, tagged by `record`: a header, then entities,
//! descriptions, documents, related_to links and describes links, then an
//! `end` trailer carrying record counts. A file without a matching trailer
//! is treated as truncated.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::store::{GraphParts, GraphStore};
use super::types::*;

const FORMAT: &str = "sarag-graph";
const VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum SnapshotError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Counts {
    entities: usize,
    descriptions: usize,
    documents: usize,
    relations: usize,
    describes: usize,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "snake_case", deny_unknown_fields)]
enum Record {
    Header {
        format: String,
        version: u32,
        dim: Option<usize>,
    },
    Entity(EntityNode),
    Description(DescriptionNode),
    Document(DocumentNode),
    RelatedTo(RelatedToLink),
    Describes(DescribesLink),
    End(Counts),
}

fn counts(parts: &GraphParts) -> Counts {
    Counts {
        entities: parts.entities.len(),
        descriptions: parts.descriptions.len(),
        documents: parts.documents.len(),
        relations: parts.relations.len(),
        describes: parts.describes.len(),
    }
}

impl GraphStore {
    pub fn write_snapshot<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let parts = self.to_parts();
        let mut line = |r: &Record| -> std::io::Result<()> {
            serde_json::to_writer(&mut out, r)?;
            out.write_all(b"\n")
        };
        line(&Record::Header {
            format: FORMAT.into(),
            version: VERSION,
            dim: parts.dim,
        })?;
        for e in &parts.entities {
            line(&Record::Entity(e.clone()))?;
        }
        for d in &parts.descriptions {
            line(&Record::Description(d.clone()))?;
        }
        for d in &parts.documents {
            line(&Record::Document(d.clone()))?;
        }
        for r in &parts.relations {
            line(&Record::RelatedTo(r.clone()))?;
        }
        for l in &parts.describes {
            line(&Record::Describes(*l))?;
        }
        line(&Record::End(counts(&parts)))?;
        out.flush()
    }

    pub fn read_snapshot<R: BufRead>(input: R) -> Result<GraphStore, SnapshotError> {
        let mut parts = GraphParts::default();
        let mut header_seen = false;
        let mut end: Option<(usize, Counts)> = None;
        let mut last_line = 0;
        for (i, line) in input.lines().enumerate() {
            let lineno = i + 1;
            last_line = lineno;
            let line = line.map_err(|e| SnapshotError::Parse {
                line: lineno,
                message: e.to_string(),
            })?;
            if line.trim().is_empty() {
                continue;
            }
            let parse_err = |message: String| SnapshotError::Parse {
                line: lineno,
                message,
            };
            if end.is_some() {
                return Err(parse_err("record after end trailer".into()));
            }
            let record: Record =
                serde_json::from_str(&line).map_err(|e| parse_err(e.to_string()))?;
            match record {
                Record::Header {
                    format,
                    version,
                    dim,
                } => {
                    if header_seen || lineno != 1 {
                        return Err(parse_err("header must be the first line".into()));
                    }
                    if format != FORMAT || version != VERSION {
                        return Err(parse_err(format!("unsupported format {format} v{version}")));
                    }
                    parts.dim = dim;
                    header_seen = true;
                }
                _ if !header_seen => return Err(parse_err("missing header".into())),
                Record::Entity(e) => parts.entities.push(e),
                Record::Description(d) => parts.descriptions.push(d),
                Record::Document(d) => parts.documents.push(d),
                Record::RelatedTo(r) => parts.relations.push(r),
                Record::Describes(l) => parts.describes.push(l),
                Record::End(c) => end = Some((lineno, c)),
            }
        }
        let (end_line, expected) = end.ok_or_else(|| SnapshotError::Parse {
            line: last_line + 1,
            message: "truncated snapshot: missing end trailer".into(),
        })?;
        if counts(&parts) != expected {
            return Err(SnapshotError::Parse {
                line: end_line,
                message: format!(
                    "record counts {:?} do not match trailer {expected:?}",
                    counts(&parts)
                ),
            });
        }
        GraphStore::from_parts(parts).map_err(|e| SnapshotError::Parse {
            line: end_line,
            message: e.to_string(),
        })
    }

    /// Writes to a temporary sibling and renames, so readers never observe
    /// a partial file.
    pub fn save(&self, path: &Path) -> Result<(), SnapshotError> {
        let io = |source| SnapshotError::Io {
            path: path.display().to_string(),
            source,
        };
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            std::fs::create_dir_all(parent).map_err(io)?;
        }
        let tmp = path.with_extension("tmp");
        let file = File::create(&tmp).map_err(io)?;
        self.write_snapshot(BufWriter::new(file)).map_err(io)?;
        std::fs::rename(&tmp, path).map_err(io)
    }

    pub fn load(path: &Path) -> Result<GraphStore, SnapshotError> {
        let file = File::open(path).map_err(|source| SnapshotError::Io {
            path: path.display().to_string(),
            source,
        })?;
        GraphStore::read_snapshot(BufReader::new(file))
    }
}
