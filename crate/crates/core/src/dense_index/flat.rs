use crate::error::{Error, Result};
use crate::model::{dot_slices, normalize, DenseVector, ScoredHit};
use crate::topk::{lexical_ranks, Candidate, TopK};

use super::HnswGraph;

/// Exhaustive index over normalized vectors; the exact reference for HNSW recall.
#[derive(Debug, Clone, Default)]
pub struct FlatIndex {
    dim: usize,
    doc_ids: Vec<String>,
    vectors: Vec<f32>,
    tie_ranks: Vec<u32>,
}

impl FlatIndex {
    pub fn build<I, S>(items: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, DenseVector)>,
        S: Into<String>,
    {
        let mut out = FlatIndex::default();
        let mut seen = std::collections::HashSet::new();
        for (id, v) in items {
            let id = id.into();
            if out.dim != 0 && v.dim() != out.dim {
                return Err(Error::DimensionMismatch {
                    expected: out.dim,
                    found: v.dim(),
                });
            }
            if !seen.insert(id.clone()) {
                return Err(Error::DuplicateDocId(id));
            }
            out.dim = v.dim();
            out.vectors.extend_from_slice(normalize(&v)?.values());
            out.doc_ids.push(id);
        }
        out.tie_ranks = lexical_ranks(&out.doc_ids);
        Ok(out)
    }

    /// Copies the (already normalized) vectors out of a graph.
    pub fn from_graph(graph: &HnswGraph) -> Self {
        Self {
            dim: graph.dim,
            doc_ids: graph.doc_ids.clone(),
            vectors: graph.vectors.clone(),
            tie_ranks: lexical_ranks(&graph.doc_ids),
        }
    }

    pub fn len(&self) -> usize {
        self.doc_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.doc_ids.is_empty()
    }

    /// Exact top-`k` by dot product with the normalized query.
    pub fn search(&self, query: &DenseVector, k: usize) -> Result<Vec<ScoredHit>> {
        if k < 1 {
            return Err(Error::InvalidArgument("k must be >= 1".into()));
        }
        if self.is_empty() {
            return Ok(Vec::new());
        }
        if query.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: query.dim(),
            });
        }
        let q = normalize(query)?;
        let mut top = TopK::new(k);
        for (i, v) in self.vectors.chunks_exact(self.dim).enumerate() {
            top.push(Candidate {
                score: dot_slices(q.values(), v),
                tie_rank: self.tie_ranks[i],
                ordinal: i as u32,
            });
        }
        Ok(top
            .into_sorted()
            .into_iter()
            .enumerate()
            .map(|(i, c)| ScoredHit {
                doc_id: self.doc_ids[c.ordinal as usize].clone(),
                score: c.score,
                rank: i as u32 + 1,
            })
            .collect())
    }
}
