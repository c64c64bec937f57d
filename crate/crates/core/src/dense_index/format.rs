//! On-disk layout (little-endian):
//!
//! ```text
//! magic "DUETHNSW" | version u32
//! header section: dim u32 | M u32 | ef_construction u32 | mL f64 | seed u64
//!                 | node_count u32 | entry_point u32 (u32::MAX when empty)
//! nodes section:  per node: doc_id str | top_layer u8 | dim x f32
//!                 | per layer 0..=top_layer: count u32, count x u32
//! crc32 u32 over all preceding bytes
//! ```

use std::collections::HashSet;
use std::path::Path;

use super::{HnswGraph, HnswParams};
use crate::codec::{self, ByteWriter};
use crate::error::{Error, Result};

pub const DENSE_MAGIC: &[u8; 8] = b"DUETHNSW";
pub const DENSE_VERSION: u32 = 1;

const NO_ENTRY: u32 = u32::MAX;

impl HnswGraph {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = ByteWriter::new();
        w.bytes(DENSE_MAGIC);
        w.u32(DENSE_VERSION);
        w.section(|h| {
            h.u32(self.dim as u32);
            h.u32(self.params.m as u32);
            h.u32(self.params.ef_construction as u32);
            h.f64(self.params.level_multiplier);
            h.u64(self.params.seed);
            h.u32(self.len() as u32);
            h.u32(self.entry_point.unwrap_or(NO_ENTRY));
        });
        w.section(|s| {
            for node in 0..self.len() as u32 {
                s.str(self.doc_id(node));
                s.u8(self.top_layer(node) as u8);
                for &x in self.stored_vector(node) {
                    s.f32(x);
                }
                for list in &self.links[node as usize] {
                    s.u32(list.len() as u32);
                    for &nb in list {
                        s.u32(nb);
                    }
                }
            }
        });
        w.finish()
    }

    /// Decodes a graph image. Structural invariants are re-checked, so a decoded graph
    /// is always safe to search.
    pub fn from_bytes(data: &[u8]) -> Result<Self> {
        let mut r = codec::open(data, DENSE_MAGIC, DENSE_VERSION, || Error::NotDenseIndex)?;
        let mut h = r.section()?;
        let dim = h.u32()? as usize;
        let m = h.u32()? as usize;
        let ef_construction = h.u32()? as usize;
        let level_multiplier = h.f64()?;
        let seed = h.u64()?;
        let n = h.u32()? as usize;
        let entry = h.u32()?;
        h.expect_end("header")?;
        let params = HnswParams {
            m,
            ef_construction,
            level_multiplier,
            seed,
        };
        params.validate().map_err(|e| Error::Corrupt(e.to_string()))?;

        let mut s = r.section()?;
        // Smallest possible node record: empty id, level byte, vector, one empty layer.
        let min_node = 4 + 1 + 4 * dim + 4;
        if n.saturating_mul(min_node) > s.remaining() {
            return Err(Error::Truncated);
        }
        if n > 0 && dim == 0 {
            return Err(Error::Corrupt("zero dimension".into()));
        }
        let mut doc_ids = Vec::with_capacity(n);
        let mut vectors = Vec::with_capacity(n * dim);
        let mut links = Vec::with_capacity(n);
        let mut seen = HashSet::with_capacity(n);
        for _ in 0..n {
            let id = s.str()?;
            if id.is_empty() || !seen.insert(id.clone()) {
                return Err(Error::Corrupt(format!("invalid or duplicate doc_id {id:?}")));
            }
            doc_ids.push(id);
            let top = s.u8()? as usize;
            for _ in 0..dim {
                vectors.push(s.f32()?);
            }
            let mut layers = Vec::with_capacity(top + 1);
            for layer in 0..=top {
                let count = s.count(4)?;
                if count > params.max_degree(layer) {
                    return Err(Error::Corrupt(format!("degree {count} exceeds bound on layer {layer}")));
                }
                let mut list = Vec::with_capacity(count);
                for _ in 0..count {
                    list.push(s.u32()?);
                }
                layers.push(list);
            }
            links.push(layers);
        }
        s.expect_end("nodes")?;
        codec::verify_checksum(data, &mut r)?;

        let entry_point = match (entry, n) {
            (NO_ENTRY, 0) => None,
            (e, _) if (e as usize) < n => Some(e),
            _ => return Err(Error::Corrupt(format!("entry point {entry} invalid for {n} nodes"))),
        };
        let graph = HnswGraph::from_parts(params, dim, doc_ids, vectors, links, entry_point);
        let report = graph.audit();
        if !report.is_ok() {
            return Err(Error::Corrupt(report.violations[0].clone()));
        }
        Ok(graph)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        codec::write_atomic(path.as_ref(), &self.to_bytes())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_bytes(&codec::read_file(path.as_ref())?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::DenseVector;

    fn graph() -> HnswGraph {
        let items = (0..30).map(|i| {
            let x = i as f32;
            (format!("d{i}"), DenseVector::new(vec![x.cos(), x.sin(), 0.5]).unwrap())
        });
        HnswGraph::build(HnswParams::new(4, 20, 11), items, 1).unwrap()
    }

    #[test]
    fn round_trip_preserves_graph() {
        let g = graph();
        let back = HnswGraph::from_bytes(&g.to_bytes()).unwrap();
        assert_eq!(back.links, g.links);
        assert_eq!(back.vectors, g.vectors);
        assert_eq!(back.doc_ids, g.doc_ids);
        assert_eq!(back.entry_point, g.entry_point);
        assert_eq!(back.to_bytes(), g.to_bytes());
    }

    #[test]
    fn empty_graph_round_trips() {
        let g = HnswGraph::new(HnswParams::default()).unwrap();
        let back = HnswGraph::from_bytes(&g.to_bytes()).unwrap();
        assert!(back.is_empty());
    }

    #[test]
    fn wrong_magic() {
        let mut bytes = graph().to_bytes();
        bytes[..8].copy_from_slice(b"DUETSPRS");
        assert_eq!(HnswGraph::from_bytes(&bytes).unwrap_err().to_string(), "not a dense index");
    }

    #[test]
    fn truncated_payload() {
        let bytes = graph().to_bytes();
        for len in [0, 5, 12, 40, bytes.len() / 2, bytes.len() - 1] {
            let err = HnswGraph::from_bytes(&bytes[..len]).unwrap_err();
            assert_eq!(err.to_string(), "truncated index", "len {len}");
        }
    }

    #[test]
    fn checksum_detected() {
        let mut bytes = graph().to_bytes();
        let i = bytes.len() - 6;
        bytes[i] ^= 0x40;
        assert!(matches!(HnswGraph::from_bytes(&bytes), Err(Error::ChecksumMismatch { .. })));
    }
}
