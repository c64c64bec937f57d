use std::collections::{BTreeMap, HashSet};

use crate::error::{Error, Result};
use crate::model::{rank_hits, ScoredHit};

/// Ranked hit lists keyed by query id.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Run {
    pub tag: String,
    queries: BTreeMap<String, Vec<ScoredHit>>,
}

impl Run {
    pub fn new(tag: impl Into<String>) -> Self {
        Self {
            tag: tag.into(),
            queries: BTreeMap::new(),
        }
    }

    /// Inserts a hit list already in result order. Ranks are reassigned 1..n.
    pub fn insert(&mut self, qid: impl Into<String>, hits: Vec<ScoredHit>) -> Result<()> {
        let qid = qid.into();
        let mut seen = HashSet::with_capacity(hits.len());
        for h in &hits {
            if !seen.insert(h.doc_id.as_str()) {
                return Err(Error::InvalidArgument(format!(
                    "doc {:?} appears twice for query {qid:?}",
                    h.doc_id
                )));
            }
        }
        let hits = hits
            .into_iter()
            .enumerate()
            .map(|(i, h)| ScoredHit {
                rank: i as u32 + 1,
                ..h
            })
            .collect();
        self.queries.insert(qid, hits);
        Ok(())
    }

    /// Sorts `(doc_id, score)` pairs into result order and inserts them.
    pub fn insert_scored(&mut self, qid: impl Into<String>, scored: Vec<(String, f64)>) -> Result<()> {
        let n = scored.len();
        self.insert(qid, rank_hits(scored, n))
    }

    pub fn get(&self, qid: &str) -> Option<&[ScoredHit]> {
        self.queries.get(qid).map(Vec::as_slice)
    }

    /// Queries in ascending id order.
    pub fn iter(&self) -> impl Iterator<Item = (&str, &[ScoredHit])> {
        self.queries.iter().map(|(q, h)| (q.as_str(), h.as_slice()))
    }

    pub fn query_ids(&self) -> impl Iterator<Item = &str> {
        self.queries.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.queries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.queries.is_empty()
    }
}
