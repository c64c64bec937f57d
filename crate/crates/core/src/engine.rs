//! Loading an index of either kind and answering text queries against it.

use std::path::Path;

use crate::bench::BenchEngine;
use crate::codec::read_file;
use crate::dense_index::{HnswGraph, DEFAULT_EF_SEARCH, DENSE_MAGIC};
use crate::encoding::{EncoderKind, QueryEncoder, QueryVector};
use crate::error::{Error, Result};
use crate::model::ScoredHit;
use crate::run::Run;
use crate::sparse_index::{IndexMode, SparseIndex, SPARSE_MAGIC};

#[derive(Debug, Clone)]
pub enum AnyIndex {
    Sparse(SparseIndex),
    Dense(HnswGraph),
}

impl AnyIndex {
    /// Decodes an index of either kind, chosen by its magic bytes.
    pub fn from_bytes(data: &[u8]) -> Result<Self> {
        match data.get(..8) {
            Some(m) if m == SPARSE_MAGIC => SparseIndex::from_bytes(data).map(AnyIndex::Sparse),
            Some(m) if m == DENSE_MAGIC => HnswGraph::from_bytes(data).map(AnyIndex::Dense),
            Some(m) => Err(Error::UnknownIndexKind(m.to_vec())),
            None => Err(Error::Truncated),
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_bytes(&read_file(path.as_ref())?)
    }

    pub fn doc_count(&self) -> usize {
        match self {
            AnyIndex::Sparse(s) => s.doc_count(),
            AnyIndex::Dense(d) => d.len(),
        }
    }

    /// `bm25`, `impact` or `hnsw`.
    pub fn kind_name(&self) -> &'static str {
        match self {
            AnyIndex::Sparse(s) => match s.mode() {
                IndexMode::Bm25 { .. } => "bm25",
                IndexMode::Impact { .. } => "impact",
            },
            AnyIndex::Dense(_) => "hnsw",
        }
    }

    fn query_kind(&self) -> EncoderKind {
        match self {
            AnyIndex::Sparse(_) => EncoderKind::Sparse,
            AnyIndex::Dense(_) => EncoderKind::Dense,
        }
    }

    pub fn search_vector(&self, query: &QueryVector, k: usize, ef_search: usize) -> Result<Vec<ScoredHit>> {
        match (self, query) {
            (AnyIndex::Sparse(s), QueryVector::Sparse(q)) => s.search(q, k),
            (AnyIndex::Dense(d), QueryVector::Dense(q)) => d.search(q, k, ef_search.max(k)),
            (_, q) => Err(Error::KindMismatch(format!(
                "{:?} query against a {} index",
                q.kind(),
                self.kind_name()
            ))),
        }
    }
}

/// An index plus the encoder used to turn query text into vectors. A BM25 index may
/// omit the encoder and analyze query text directly.
pub struct Searcher {
    index: AnyIndex,
    encoder: Option<Box<dyn QueryEncoder>>,
    ef_search: usize,
}

impl Searcher {
    pub fn new(index: AnyIndex, encoder: Option<Box<dyn QueryEncoder>>) -> Result<Self> {
        match (&index, &encoder) {
            (_, Some(e)) if e.kind() != index.query_kind() => {
                return Err(Error::KindMismatch(format!(
                    "{:?} encoder for a {} index",
                    e.kind(),
                    index.kind_name()
                )))
            }
            (AnyIndex::Sparse(s), None) if matches!(s.mode(), IndexMode::Bm25 { .. }) => {}
            (_, None) => {
                return Err(Error::InvalidArgument(format!(
                    "a {} index needs a query encoder",
                    index.kind_name()
                )))
            }
            _ => {}
        }
        Ok(Self {
            index,
            encoder,
            ef_search: DEFAULT_EF_SEARCH,
        })
    }

    /// Beam width for dense search; raised to `k` when smaller.
    pub fn with_ef_search(mut self, ef_search: usize) -> Self {
        self.ef_search = ef_search.max(1);
        self
    }

    pub fn index(&self) -> &AnyIndex {
        &self.index
    }

    pub fn search(&self, query: &str, k: usize) -> Result<Vec<ScoredHit>> {
        match (&self.encoder, &self.index) {
            (Some(enc), index) => index.search_vector(&enc.encode(query)?, k, self.ef_search),
            (None, AnyIndex::Sparse(s)) => s.search_text(query, k),
            (None, AnyIndex::Dense(_)) => unreachable!("checked in Searcher::new"),
        }
    }

    /// Searches every `(qid, text)` topic in order.
    pub fn search_all(&self, topics: &[(String, String)], k: usize, tag: &str) -> Result<Run> {
        let mut run = Run::new(tag);
        for (qid, text) in topics {
            let hits = self.search(text, k).map_err(|e| Error::QueryFailed {
                query: qid.clone(),
                message: e.to_string(),
            })?;
            run.insert(qid.clone(), hits)?;
        }
        Ok(run)
    }
}

impl BenchEngine for Searcher {
    type Query = String;

    fn run(&self, query: &String, k: usize) -> Result<usize> {
        self.search(query, k).map(|h| h.len())
    }
}

/// Parses `qid TAB query text` lines. Blank lines are skipped.
pub fn parse_topics(text: &str) -> Result<Vec<(String, String)>> {
    let mut topics = Vec::new();
    let mut seen = std::collections::HashMap::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let (qid, query) = line
            .split_once('\t')
            .ok_or_else(|| Error::parse(line_no, "expected <qid> TAB <query text>"))?;
        let qid = qid.trim();
        if qid.is_empty() || qid.chars().any(char::is_whitespace) {
            return Err(Error::parse(line_no, format!("invalid query id {qid:?}")));
        }
        if let Some(first_line) = seen.insert(qid.to_owned(), line_no) {
            return Err(Error::DuplicateQuery {
                query: qid.to_owned(),
                first_line,
                second_line: line_no,
            });
        }
        topics.push((qid.to_owned(), query.to_owned()));
    }
    Ok(topics)
}

pub fn load_topics(path: impl AsRef<Path>) -> Result<Vec<(String, String)>> {
    parse_topics(&std::fs::read_to_string(path)?)
}
