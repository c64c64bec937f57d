//! Single-segment inverted index over quantized impacts or BM25 term frequencies.
//!
//! Postings are sorted by document ordinal and searched document-at-a-time with a
//! bounded heap. Learned sparse weights are stored as integer impacts, so a query
//! scores each document with an exact integer dot product.

mod analyzer;
mod bm25;
mod format;

use std::collections::{HashMap, HashSet};

pub use analyzer::analyze;
pub use bm25::{bm25_score, idf, DEFAULT_B, DEFAULT_K1};
pub use format::{SPARSE_MAGIC, SPARSE_VERSION};

use crate::error::{Error, Result};
use crate::model::{quantize, ScoredHit, SparseVector};
use crate::topk::{lexical_ranks, Candidate, TopK};

/// Scoring mode of a [`SparseIndex`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum IndexMode {
    /// Postings hold quantized impacts; score is the integer dot product.
    Impact { scale: u32 },
    /// Postings hold raw term frequencies; score is BM25.
    Bm25 { k1: f64, b: f64 },
}

/// Docid-sorted postings for one term.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PostingList {
    ordinals: Vec<u32>,
    impacts: Vec<u32>,
    max_impact: u32,
}

impl PostingList {
    fn push(&mut self, ordinal: u32, impact: u32) {
        debug_assert!(self.ordinals.last().is_none_or(|&last| last < ordinal));
        self.ordinals.push(ordinal);
        self.impacts.push(impact);
        self.max_impact = self.max_impact.max(impact);
    }

    pub fn len(&self) -> usize {
        self.ordinals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ordinals.is_empty()
    }

    pub fn max_impact(&self) -> u32 {
        self.max_impact
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        self.ordinals.iter().copied().zip(self.impacts.iter().copied())
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Bm25Stats {
    doc_lengths: Vec<u32>,
    avg_doc_length: f64,
}

#[derive(Debug, Clone)]
pub struct SparseIndex {
    mode: IndexMode,
    terms: HashMap<String, PostingList>,
    doc_ids: Vec<String>,
    tie_ranks: Vec<u32>,
    bm25: Option<Bm25Stats>,
}

impl SparseIndex {
    /// Builds an impact index. Ordinals follow ingestion order.
    pub fn build_impact<I, S>(corpus: I, scale: u32) -> Result<Self>
    where
        I: IntoIterator<Item = (S, SparseVector)>,
        S: Into<String>,
    {
        if scale == 0 {
            return Err(Error::InvalidArgument("quantization scale must be >= 1".into()));
        }
        let mut builder = Builder::default();
        for (doc_id, vector) in corpus {
            let ordinal = builder.add_doc(doc_id.into())?;
            for (term, impact) in quantize(&vector, scale)?.iter() {
                builder.post(term, ordinal, u32::from(impact));
            }
        }
        builder.finish(IndexMode::Impact { scale }, None)
    }

    /// Builds a BM25 index from pre-tokenized documents.
    pub fn build_bm25<I, S, T>(corpus: I, k1: f64, b: f64) -> Result<Self>
    where
        I: IntoIterator<Item = (S, T)>,
        S: Into<String>,
        T: IntoIterator,
        T::Item: AsRef<str>,
    {
        if !(k1.is_finite() && k1 >= 0.0 && b.is_finite() && (0.0..=1.0).contains(&b)) {
            return Err(Error::InvalidArgument(format!("bm25 parameters k1={k1} b={b}")));
        }
        let mut builder = Builder::default();
        let mut doc_lengths = Vec::new();
        for (doc_id, tokens) in corpus {
            let ordinal = builder.add_doc(doc_id.into())?;
            let mut tf: HashMap<String, u32> = HashMap::new();
            let mut len = 0u32;
            for tok in tokens {
                let tok = tok.as_ref();
                if tok.is_empty() {
                    continue;
                }
                len += 1;
                *tf.entry(tok.to_owned()).or_insert(0) += 1;
            }
            doc_lengths.push(len);
            for (term, count) in tf {
                builder.post(&term, ordinal, count);
            }
        }
        let stats = Bm25Stats {
            avg_doc_length: mean_length(&doc_lengths),
            doc_lengths,
        };
        builder.finish(IndexMode::Bm25 { k1, b }, Some(stats))
    }

    /// Builds a BM25 index from raw text using [`analyze`].
    pub fn build_bm25_text<I, S, T>(corpus: I, k1: f64, b: f64) -> Result<Self>
    where
        I: IntoIterator<Item = (S, T)>,
        S: Into<String>,
        T: AsRef<str>,
    {
        Self::build_bm25(
            corpus.into_iter().map(|(id, text)| (id, analyze(text.as_ref()))),
            k1,
            b,
        )
    }

    pub fn mode(&self) -> IndexMode {
        self.mode
    }

    pub fn doc_count(&self) -> usize {
        self.doc_ids.len()
    }

    pub fn doc_id(&self, ordinal: u32) -> Option<&str> {
        self.doc_ids.get(ordinal as usize).map(String::as_str)
    }

    pub fn postings(&self, term: &str) -> Option<&PostingList> {
        self.terms.get(term)
    }

    pub fn document_frequency(&self, term: &str) -> usize {
        self.terms.get(term).map_or(0, PostingList::len)
    }

    pub fn vocabulary_size(&self) -> usize {
        self.terms.len()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&str, &PostingList)> {
        self.terms.iter().map(|(t, p)| (t.as_str(), p))
    }

    /// Token count of a document (BM25 mode only).
    pub fn doc_length(&self, ordinal: u32) -> Option<u32> {
        self.bm25
            .as_ref()
            .and_then(|s| s.doc_lengths.get(ordinal as usize).copied())
    }

    pub fn avg_doc_length(&self) -> Option<f64> {
        self.bm25.as_ref().map(|s| s.avg_doc_length)
    }

    /// Exact top-`k` search. Query terms absent from the dictionary contribute nothing.
    ///
    /// In impact mode the query is quantized with the index scale. In BM25 mode each
    /// query weight multiplies that term's BM25 contribution, so a bag-of-words query
    /// weights repeated terms by their count.
    pub fn search(&self, query: &SparseVector, k: usize) -> Result<Vec<ScoredHit>> {
        if k < 1 {
            return Err(Error::InvalidArgument("k must be >= 1".into()));
        }
        let mut cursors = Vec::with_capacity(query.len());
        match self.mode {
            IndexMode::Impact { scale } => {
                for (term, impact) in quantize(query, scale)?.iter() {
                    if let Some(pl) = self.terms.get(term) {
                        cursors.push(Cursor::new(pl, TermScorer::Impact(u64::from(impact))));
                    }
                }
            }
            IndexMode::Bm25 { .. } => {
                let n = self.doc_count() as u64;
                for (term, weight) in query.iter() {
                    if let Some(pl) = self.terms.get(term) {
                        let idf = idf(pl.len() as u64, n);
                        cursors.push(Cursor::new(pl, TermScorer::Bm25 { weight, idf }));
                    }
                }
            }
        }
        Ok(self.traverse(cursors, k))
    }

    /// Analyzes `text` and searches with the resulting bag of words.
    pub fn search_text(&self, text: &str, k: usize) -> Result<Vec<ScoredHit>> {
        self.search(&SparseVector::from_tokens(analyze(text)), k)
    }

    fn traverse(&self, mut cursors: Vec<Cursor<'_>>, k: usize) -> Vec<ScoredHit> {
        let mut top = TopK::new(k);
        loop {
            let Some(doc) = cursors.iter().filter_map(Cursor::current).min() else {
                break;
            };
            let mut int_score = 0u64;
            let mut real_score = 0f64;
            for c in cursors.iter_mut() {
                if c.current() != Some(doc) {
                    continue;
                }
                let tf = c.list.impacts[c.pos];
                match c.scorer {
                    TermScorer::Impact(q) => int_score += q * u64::from(tf),
                    TermScorer::Bm25 { weight, idf } => {
                        real_score += weight * self.bm25_term(tf, idf, doc);
                    }
                }
                c.pos += 1;
            }
            let score = match self.mode {
                IndexMode::Impact { .. } => int_score as f64,
                IndexMode::Bm25 { .. } => real_score,
            };
            if score > 0.0 {
                top.push(Candidate {
                    score,
                    tie_rank: self.tie_ranks[doc as usize],
                    ordinal: doc,
                });
            }
        }
        top.into_sorted()
            .into_iter()
            .enumerate()
            .map(|(i, c)| ScoredHit {
                doc_id: self.doc_ids[c.ordinal as usize].clone(),
                score: c.score,
                rank: i as u32 + 1,
            })
            .collect()
    }

    #[inline]
    fn bm25_term(&self, tf: u32, idf: f64, doc: u32) -> f64 {
        let (IndexMode::Bm25 { k1, b }, Some(stats)) = (self.mode, &self.bm25) else {
            unreachable!("bm25 scorer on impact index")
        };
        bm25::term_weight(
            f64::from(tf),
            idf,
            f64::from(stats.doc_lengths[doc as usize]),
            stats.avg_doc_length,
            k1,
            b,
        )
    }
}

fn mean_length(lengths: &[u32]) -> f64 {
    if lengths.is_empty() {
        return 0.0;
    }
    lengths.iter().map(|&l| f64::from(l)).sum::<f64>() / lengths.len() as f64
}

#[derive(Clone, Copy)]
enum TermScorer {
    Impact(u64),
    Bm25 { weight: f64, idf: f64 },
}

struct Cursor<'a> {
    list: &'a PostingList,
    pos: usize,
    scorer: TermScorer,
}

impl<'a> Cursor<'a> {
    fn new(list: &'a PostingList, scorer: TermScorer) -> Self {
        Self { list, pos: 0, scorer }
    }

    #[inline]
    fn current(&self) -> Option<u32> {
        self.list.ordinals.get(self.pos).copied()
    }
}

#[derive(Default)]
struct Builder {
    terms: HashMap<String, PostingList>,
    doc_ids: Vec<String>,
    seen: HashSet<String>,
}

impl Builder {
    fn add_doc(&mut self, doc_id: String) -> Result<u32> {
        if doc_id.is_empty() {
            return Err(Error::InvalidArgument("empty doc_id".into()));
        }
        if !self.seen.insert(doc_id.clone()) {
            return Err(Error::DuplicateDocId(doc_id));
        }
        let ordinal = u32::try_from(self.doc_ids.len())
            .map_err(|_| Error::InvalidArgument("too many documents".into()))?;
        self.doc_ids.push(doc_id);
        Ok(ordinal)
    }

    fn post(&mut self, term: &str, ordinal: u32, impact: u32) {
        match self.terms.get_mut(term) {
            Some(pl) => pl.push(ordinal, impact),
            None => {
                let mut pl = PostingList::default();
                pl.push(ordinal, impact);
                self.terms.insert(term.to_owned(), pl);
            }
        }
    }

    fn finish(self, mode: IndexMode, bm25: Option<Bm25Stats>) -> Result<SparseIndex> {
        if self.doc_ids.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        Ok(SparseIndex::from_parts(mode, self.terms, self.doc_ids, bm25))
    }
}

impl SparseIndex {
    fn from_parts(
        mode: IndexMode,
        terms: HashMap<String, PostingList>,
        doc_ids: Vec<String>,
        bm25: Option<Bm25Stats>,
    ) -> Self {
        let tie_ranks = lexical_ranks(&doc_ids);
        Self {
            mode,
            terms,
            doc_ids,
            tie_ranks,
            bm25,
        }
    }
}
