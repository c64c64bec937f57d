use std::collections::HashMap;
use std::path::Path;

use serde_json::Value;

use super::{EncoderKind, QueryEncoder, QueryVector};
use crate::error::{Error, Result};
use crate::model::{DenseVector, SparseVector};

/// Encoder backed by a table of pre-encoded queries.
#[derive(Debug, Clone)]
pub struct LookupEncoder {
    kind: EncoderKind,
    table: HashMap<String, QueryVector>,
}

impl LookupEncoder {
    /// Parses `<query> TAB <json vector>` records, one per line. Blank lines are skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let mut kind = None;
        let mut table = HashMap::new();
        let mut lines_of: HashMap<String, usize> = HashMap::new();
        for (i, line) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() {
                continue;
            }
            let (query, json) = line
                .split_once('\t')
                .ok_or_else(|| Error::parse(line_no, "expected <query> TAB <json vector>"))?;
            let vector = parse_vector(json).map_err(|m| Error::parse(line_no, m))?;
            match kind {
                None => kind = Some(vector.kind()),
                Some(k) if k != vector.kind() => {
                    return Err(Error::parse(line_no, "mixes dense and sparse records"))
                }
                Some(_) => {}
            }
            if let QueryVector::Dense(v) = &vector {
                if let Some(QueryVector::Dense(first)) = table.values().next() {
                    if first.dim() != v.dim() {
                        return Err(Error::parse(
                            line_no,
                            format!("dimension {} differs from {}", v.dim(), first.dim()),
                        ));
                    }
                }
            }
            if let Some(&first_line) = lines_of.get(query) {
                return Err(Error::DuplicateQuery {
                    query: query.to_owned(),
                    first_line,
                    second_line: line_no,
                });
            }
            lines_of.insert(query.to_owned(), line_no);
            table.insert(query.to_owned(), vector);
        }
        let kind =
            kind.ok_or_else(|| Error::InvalidArgument("no pre-encoded query records".into()))?;
        Ok(Self { kind, table })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    pub fn get(&self, query: &str) -> Option<&QueryVector> {
        self.table.get(query)
    }

    /// Table keys in ascending order.
    pub fn keys(&self) -> Vec<&str> {
        let mut keys: Vec<&str> = self.table.keys().map(String::as_str).collect();
        keys.sort_unstable();
        keys
    }
}

impl QueryEncoder for LookupEncoder {
    fn kind(&self) -> EncoderKind {
        self.kind
    }

    fn encode(&self, query: &str) -> Result<QueryVector> {
        self.table
            .get(query)
            .cloned()
            .ok_or_else(|| Error::QueryNotEncoded(query.to_owned()))
    }
}

/// A JSON array is a dense vector; a JSON object maps terms to sparse weights.
pub(crate) fn parse_vector(json: &str) -> std::result::Result<QueryVector, String> {
    let value: Value = serde_json::from_str(json).map_err(|e| format!("invalid JSON: {e}"))?;
    vector_from_json(&value)
}

pub(crate) fn vector_from_json(value: &Value) -> std::result::Result<QueryVector, String> {
    match value {
        Value::Array(items) => {
            let values = items
                .iter()
                .map(|x| {
                    x.as_f64()
                        .filter(|f| f.is_finite())
                        .map(|f| f as f32)
                        .ok_or_else(|| format!("dense component {x} is not a number"))
                })
                .collect::<std::result::Result<Vec<f32>, String>>()?;
            DenseVector::new(values)
                .map(QueryVector::Dense)
                .map_err(|e| e.to_string())
        }
        Value::Object(map) => {
            let entries = map
                .iter()
                .map(|(term, w)| {
                    w.as_f64()
                        .map(|w| (term.clone(), w))
                        .ok_or_else(|| format!("weight of {term:?} is not a number"))
                })
                .collect::<std::result::Result<Vec<_>, String>>()?;
            SparseVector::new(entries)
                .map(QueryVector::Sparse)
                .map_err(|e| e.to_string())
        }
        other => Err(format!("expected array or object, found {other}")),
    }
}
