//! JSONL corpus ingestion. Each line is an object with an `id` and exactly one of
//! `contents` (raw text) or `vector` (array for dense, term→weight object for sparse).

use std::collections::HashMap;
use std::path::Path;

use serde_json::Value;

use crate::encoding::{vector_from_json, QueryVector};
use crate::error::{Error, Result};
use crate::model::{DenseVector, SparseVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorpusKind {
    Text,
    Dense,
    Sparse,
}

impl std::fmt::Display for CorpusKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            CorpusKind::Text => "text",
            CorpusKind::Dense => "dense",
            CorpusKind::Sparse => "sparse",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CorpusRecord {
    Text { id: String, contents: String },
    Dense { id: String, vector: DenseVector },
    Sparse { id: String, vector: SparseVector },
}

impl CorpusRecord {
    pub fn id(&self) -> &str {
        match self {
            CorpusRecord::Text { id, .. }
            | CorpusRecord::Dense { id, .. }
            | CorpusRecord::Sparse { id, .. } => id,
        }
    }

    pub fn kind(&self) -> CorpusKind {
        match self {
            CorpusRecord::Text { .. } => CorpusKind::Text,
            CorpusRecord::Dense { .. } => CorpusKind::Dense,
            CorpusRecord::Sparse { .. } => CorpusKind::Sparse,
        }
    }

    /// Parses one JSONL line.
    pub fn parse(line: &str) -> std::result::Result<Self, String> {
        let value: Value = serde_json::from_str(line).map_err(|e| format!("invalid JSON: {e}"))?;
        let Value::Object(obj) = value else {
            return Err("record is not a JSON object".into());
        };
        let id = match obj.get("id") {
            Some(Value::String(s)) if !s.is_empty() => s.clone(),
            Some(Value::Number(n)) => n.to_string(),
            Some(Value::String(_)) => return Err("empty id".into()),
            Some(_) => return Err("id must be a string".into()),
            None => return Err("missing id".into()),
        };
        if id.chars().any(char::is_whitespace) {
            return Err(format!("id {id:?} contains whitespace"));
        }
        match (obj.get("contents"), obj.get("vector")) {
            (Some(_), Some(_)) => Err("record has both contents and vector".into()),
            (Some(Value::String(contents)), None) => Ok(CorpusRecord::Text {
                id,
                contents: contents.clone(),
            }),
            (Some(_), None) => Err("contents must be a string".into()),
            (None, Some(v)) => Ok(match vector_from_json(v)? {
                QueryVector::Dense(vector) => CorpusRecord::Dense { id, vector },
                QueryVector::Sparse(vector) => CorpusRecord::Sparse { id, vector },
            }),
            (None, None) => Err("record has neither contents nor vector".into()),
        }
    }
}

/// A parsed corpus; every record has the same kind.
#[derive(Debug, Clone, PartialEq)]
pub enum Corpus {
    Text(Vec<(String, String)>),
    Dense(Vec<(String, DenseVector)>),
    Sparse(Vec<(String, SparseVector)>),
}

impl Corpus {
    pub fn kind(&self) -> CorpusKind {
        match self {
            Corpus::Text(_) => CorpusKind::Text,
            Corpus::Dense(_) => CorpusKind::Dense,
            Corpus::Sparse(_) => CorpusKind::Sparse,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Corpus::Text(v) => v.len(),
            Corpus::Dense(v) => v.len(),
            Corpus::Sparse(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Parses JSONL text. Blank lines are skipped. Errors name the offending line.
    pub fn parse(text: &str) -> Result<Self> {
        let mut corpus: Option<Corpus> = None;
        let mut seen: HashMap<String, usize> = HashMap::new();
        for (i, line) in text.lines().enumerate() {
            let line_no = i + 1;
            if line.trim().is_empty() {
                continue;
            }
            let record = CorpusRecord::parse(line).map_err(|m| Error::parse(line_no, m))?;
            if let Some(first) = seen.insert(record.id().to_owned(), line_no) {
                return Err(Error::parse(
                    line_no,
                    format!("duplicate id {:?} (first on line {first})", record.id()),
                ));
            }
            let corpus = corpus.get_or_insert_with(|| match record.kind() {
                CorpusKind::Text => Corpus::Text(Vec::new()),
                CorpusKind::Dense => Corpus::Dense(Vec::new()),
                CorpusKind::Sparse => Corpus::Sparse(Vec::new()),
            });
            match (corpus, record) {
                (Corpus::Text(v), CorpusRecord::Text { id, contents }) => v.push((id, contents)),
                (Corpus::Dense(v), CorpusRecord::Dense { id, vector }) => {
                    if let Some((_, first)) = v.first() {
                        if first.dim() != vector.dim() {
                            return Err(Error::parse(
                                line_no,
                                format!("dimension {} differs from {}", vector.dim(), first.dim()),
                            ));
                        }
                    }
                    v.push((id, vector));
                }
                (Corpus::Sparse(v), CorpusRecord::Sparse { id, vector }) => v.push((id, vector)),
                (corpus, record) => {
                    return Err(Error::parse(
                        line_no,
                        format!("{} record in a {} corpus", record.kind(), corpus.kind()),
                    ))
                }
            }
        }
        corpus.ok_or(Error::EmptyCorpus)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }
}
