//! On-disk layout (little-endian):
//!
//! ```text
//! magic "DUETSPRS" | version u32
//! header section:     mode u8 | scale u32 | k1 f64 | b f64 | doc_count u32
//! dictionary section: term_count u32, then per term (ascending):
//!                     term str | df u32 | max_impact u32 | offset u64 | length u64
//! postings section:   per term, df pairs of varint(ordinal gap) varint(impact)
//! doc table section:  count u32, then per ordinal: doc_id str [| doc_len u32 in bm25 mode]
//! crc32 u32 over all preceding bytes
//! ```
//!
//! Sections are prefixed with their u64 byte length; strings with a u32 byte length.

use std::collections::{HashMap, HashSet};
use std::path::Path;

use super::{mean_length, Bm25Stats, IndexMode, PostingList, SparseIndex};
use crate::codec::{self, ByteReader, ByteWriter};
use crate::error::{Error, Result};

pub const SPARSE_MAGIC: &[u8; 8] = b"DUETSPRS";
pub const SPARSE_VERSION: u32 = 1;

const MODE_IMPACT: u8 = 0;
const MODE_BM25: u8 = 1;

impl SparseIndex {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = ByteWriter::new();
        w.bytes(SPARSE_MAGIC);
        w.u32(SPARSE_VERSION);
        w.section(|h| {
            match self.mode {
                IndexMode::Impact { scale } => {
                    h.u8(MODE_IMPACT);
                    h.u32(scale);
                    h.f64(0.0);
                    h.f64(0.0);
                }
                IndexMode::Bm25 { k1, b } => {
                    h.u8(MODE_BM25);
                    h.u32(0);
                    h.f64(k1);
                    h.f64(b);
                }
            }
            h.u32(self.doc_ids.len() as u32);
        });

        let mut terms: Vec<(&String, &PostingList)> = self.terms.iter().collect();
        terms.sort_unstable_by(|a, b| a.0.cmp(b.0));
        let mut postings = ByteWriter::new();
        let mut entries = Vec::with_capacity(terms.len());
        let mut offset = 0u64;
        for (term, pl) in &terms {
            let mut blob = ByteWriter::new();
            let mut prev = 0u32;
            for (i, (ord, impact)) in pl.iter().enumerate() {
                blob.varint(u64::from(if i == 0 { ord } else { ord - prev }));
                blob.varint(u64::from(impact));
                prev = ord;
            }
            let blob = blob.into_inner();
            entries.push((*term, pl.len() as u32, pl.max_impact, offset, blob.len() as u64));
            offset += blob.len() as u64;
            postings.bytes(&blob);
        }
        w.section(|d| {
            d.u32(entries.len() as u32);
            for (term, df, max_impact, off, len) in &entries {
                d.str(term);
                d.u32(*df);
                d.u32(*max_impact);
                d.u64(*off);
                d.u64(*len);
            }
        });
        let postings = postings.into_inner();
        w.section(|p| p.bytes(&postings));
        w.section(|t| {
            t.u32(self.doc_ids.len() as u32);
            for (i, id) in self.doc_ids.iter().enumerate() {
                t.str(id);
                if let Some(stats) = &self.bm25 {
                    t.u32(stats.doc_lengths[i]);
                }
            }
        });
        w.finish()
    }

    /// Decodes an index image, validating structure, invariants and checksum.
    pub fn from_bytes(data: &[u8]) -> Result<Self> {
        let mut r = codec::open(data, SPARSE_MAGIC, SPARSE_VERSION, || Error::NotSparseIndex)?;

        let mut h = r.section()?;
        let mode_tag = h.u8()?;
        let scale = h.u32()?;
        let k1 = h.f64()?;
        let b = h.f64()?;
        let doc_count = h.u32()? as usize;
        h.expect_end("header")?;
        let mode = match mode_tag {
            MODE_IMPACT if scale >= 1 => IndexMode::Impact { scale },
            MODE_IMPACT => return Err(Error::Corrupt("quantization scale is 0".into())),
            MODE_BM25 if k1.is_finite() && k1 >= 0.0 && (0.0..=1.0).contains(&b) => {
                IndexMode::Bm25 { k1, b }
            }
            MODE_BM25 => return Err(Error::Corrupt(format!("bm25 parameters k1={k1} b={b}"))),
            other => return Err(Error::Corrupt(format!("unknown index mode {other}"))),
        };
        if doc_count == 0 {
            return Err(Error::Corrupt("index has no documents".into()));
        }

        let mut dict = r.section()?;
        let postings = r.section()?;
        let mut table = r.section()?;
        codec::verify_checksum(data, &mut r)?;

        let mut doc_ids = Vec::new();
        let mut seen = HashSet::new();
        let mut doc_lengths = Vec::new();
        let n = table.count(4)?;
        if n != doc_count {
            return Err(Error::Corrupt(format!(
                "doc table has {n} entries, header says {doc_count}"
            )));
        }
        for _ in 0..n {
            let id = table.str()?;
            if id.is_empty() || !seen.insert(id.clone()) {
                return Err(Error::Corrupt(format!("invalid or duplicate doc_id {id:?}")));
            }
            doc_ids.push(id);
            if matches!(mode, IndexMode::Bm25 { .. }) {
                doc_lengths.push(table.u32()?);
            }
        }
        table.expect_end("doc table")?;

        let postings = postings.rest();
        let term_count = dict.count(4 + 4 + 4 + 8 + 8)?;
        let mut terms = HashMap::with_capacity(term_count);
        let mut prev_term: Option<String> = None;
        for _ in 0..term_count {
            let term = dict.str()?;
            if term.is_empty() || prev_term.as_ref().is_some_and(|p| *p >= term) {
                return Err(Error::Corrupt("dictionary terms not strictly ascending".into()));
            }
            let df = dict.u32()? as usize;
            let max_impact = dict.u32()?;
            let offset = dict.u64()?;
            let len = dict.u64()?;
            let blob = usize::try_from(offset)
                .ok()
                .zip(usize::try_from(len).ok())
                .and_then(|(o, l)| postings.get(o..o.checked_add(l)?))
                .ok_or_else(|| Error::Corrupt(format!("postings of {term:?} out of bounds")))?;
            let pl = decode_postings(blob, df, doc_count, mode, &doc_lengths)
                .map_err(|e| match e {
                    Error::Truncated => Error::Corrupt(format!("postings of {term:?} truncated")),
                    e => e,
                })?;
            if pl.max_impact != max_impact {
                return Err(Error::Corrupt(format!("max_impact mismatch for {term:?}")));
            }
            prev_term = Some(term.clone());
            terms.insert(term, pl);
        }
        dict.expect_end("dictionary")?;

        let bm25 = match mode {
            IndexMode::Bm25 { .. } => Some(Bm25Stats {
                avg_doc_length: mean_length(&doc_lengths),
                doc_lengths,
            }),
            IndexMode::Impact { .. } => None,
        };
        Ok(SparseIndex::from_parts(mode, terms, doc_ids, bm25))
    }

    /// Writes the index atomically.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        codec::write_atomic(path.as_ref(), &self.to_bytes())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_bytes(&codec::read_file(path.as_ref())?)
    }
}

fn decode_postings(
    blob: &[u8],
    df: usize,
    doc_count: usize,
    mode: IndexMode,
    doc_lengths: &[u32],
) -> Result<PostingList> {
    if df == 0 || df > doc_count || df.saturating_mul(2) > blob.len() {
        return Err(Error::Corrupt(format!("bad document frequency {df}")));
    }
    let max_allowed = match mode {
        IndexMode::Impact { .. } => u64::from(u16::MAX),
        IndexMode::Bm25 { .. } => u64::from(u32::MAX),
    };
    let mut r = ByteReader::new(blob);
    let mut pl = PostingList::default();
    pl.ordinals.reserve(df);
    pl.impacts.reserve(df);
    let mut prev: Option<u64> = None;
    for _ in 0..df {
        let gap = r.varint()?;
        let ord = match prev {
            None => gap,
            Some(_) if gap == 0 => return Err(Error::Corrupt("ordinals not increasing".into())),
            Some(p) => p.checked_add(gap).ok_or_else(|| Error::Corrupt("ordinal overflow".into()))?,
        };
        if ord >= doc_count as u64 {
            return Err(Error::Corrupt(format!("ordinal {ord} out of range")));
        }
        let impact = r.varint()?;
        if impact == 0 || impact > max_allowed {
            return Err(Error::Corrupt(format!("impact {impact} out of range")));
        }
        if let Some(&len) = doc_lengths.get(ord as usize) {
            if impact > u64::from(len) {
                return Err(Error::Corrupt("term frequency exceeds document length".into()));
            }
        }
        pl.push(ord as u32, impact as u32);
        prev = Some(ord);
    }
    r.expect_end("posting list")?;
    Ok(pl)
}
