//! Vector types, similarity kernels and impact quantization.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default quantization scale applied to learned sparse weights.
pub const DEFAULT_QUANTIZATION_SCALE: u32 = 100;

/// Fixed-dimension real vector.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseVector {
    values: Vec<f32>,
}

impl DenseVector {
    pub fn new(values: Vec<f32>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyVector);
        }
        Ok(Self { values })
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f32> {
        self.values
    }

    pub fn norm(&self) -> f64 {
        self.values
            .iter()
            .map(|&x| f64::from(x) * f64::from(x))
            .sum::<f64>()
            .sqrt()
    }
}

/// Returns `v` scaled to unit L2 norm.
pub fn normalize(v: &DenseVector) -> Result<DenseVector> {
    let norm = v.norm();
    if norm == 0.0 || !norm.is_finite() {
        return Err(Error::ZeroVector);
    }
    Ok(DenseVector {
        values: v
            .values
            .iter()
            .map(|&x| (f64::from(x) / norm) as f32)
            .collect(),
    })
}

/// Inner product accumulated in f64. Equals cosine similarity for unit vectors.
pub fn dot(a: &DenseVector, b: &DenseVector) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            found: b.dim(),
        });
    }
    Ok(dot_slices(&a.values, &b.values))
}

#[inline]
pub(crate) fn dot_slices(a: &[f32], b: &[f32]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(&x, &y)| f64::from(x) * f64::from(y))
        .sum()
}

/// Term → positive weight mapping, kept sorted by term.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BTreeMap<String, f64>", into = "BTreeMap<String, f64>")]
pub struct SparseVector {
    entries: Vec<(String, f64)>,
}

impl SparseVector {
    /// Builds a sparse vector, dropping zero weights.
    ///
    /// Rejects empty terms, duplicate terms and negative or non-finite weights.
    pub fn new<I, S>(entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, f64)>,
        S: Into<String>,
    {
        let mut out: Vec<(String, f64)> = Vec::new();
        for (term, weight) in entries {
            let term = term.into();
            if term.is_empty() {
                return Err(Error::EmptyTerm);
            }
            if !weight.is_finite() || weight < 0.0 {
                return Err(Error::InvalidWeight { term, weight });
            }
            out.push((term, weight));
        }
        out.sort_by(|a, b| a.0.cmp(&b.0));
        if let Some(w) = out.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(Error::DuplicateTerm(w[0].0.clone()));
        }
        out.retain(|(_, w)| *w > 0.0);
        Ok(Self { entries: out })
    }

    /// Bag-of-words vector: each distinct token weighted by its count.
    pub fn from_tokens<I, S>(tokens: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut counts: BTreeMap<String, f64> = BTreeMap::new();
        for tok in tokens {
            let tok = tok.as_ref();
            if tok.is_empty() {
                continue;
            }
            *counts.entry(tok.to_owned()).or_insert(0.0) += 1.0;
        }
        Self {
            entries: counts.into_iter().collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, term: &str) -> Option<f64> {
        self.entries
            .binary_search_by(|(t, _)| t.as_str().cmp(term))
            .ok()
            .map(|i| self.entries[i].1)
    }

    /// Entries in ascending term order.
    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.entries.iter().map(|(t, w)| (t.as_str(), *w))
    }

    pub fn dot(&self, other: &SparseVector) -> f64 {
        let mut sum = 0.0;
        merge_join(&self.entries, &other.entries, |a, b| sum += a * b);
        sum
    }
}

impl TryFrom<BTreeMap<String, f64>> for SparseVector {
    type Error = Error;

    fn try_from(map: BTreeMap<String, f64>) -> Result<Self> {
        SparseVector::new(map)
    }
}

impl From<SparseVector> for BTreeMap<String, f64> {
    fn from(v: SparseVector) -> Self {
        v.entries.into_iter().collect()
    }
}

/// Term → integer impact mapping, kept sorted by term. Zero impacts are never stored.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct QuantizedSparseVector {
    entries: Vec<(String, u16)>,
}

impl QuantizedSparseVector {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, term: &str) -> Option<u16> {
        self.entries
            .binary_search_by(|(t, _)| t.as_str().cmp(term))
            .ok()
            .map(|i| self.entries[i].1)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, u16)> {
        self.entries.iter().map(|(t, w)| (t.as_str(), *w))
    }

    pub fn dot(&self, other: &QuantizedSparseVector) -> u64 {
        let mut sum = 0u64;
        merge_join(&self.entries, &other.entries, |a, b| {
            sum += u64::from(a) * u64::from(b)
        });
        sum
    }
}

fn merge_join<T: Copy>(a: &[(String, T)], b: &[(String, T)], mut f: impl FnMut(T, T)) {
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].0.cmp(&b[j].0) {
            Ordering::Less => i += 1,
            Ordering::Greater => j += 1,
            Ordering::Equal => {
                f(a[i].1, b[j].1);
                i += 1;
                j += 1;
            }
        }
    }
}

/// Sum of products over shared terms.
pub fn sparse_dot(q: &SparseVector, d: &SparseVector) -> f64 {
    q.dot(d)
}

/// Integer sum of impact products over shared terms.
pub fn quantized_dot(q: &QuantizedSparseVector, d: &QuantizedSparseVector) -> u64 {
    q.dot(d)
}

/// Quantizes each weight to `round(w * scale)` (half away from zero), dropping zero impacts.
pub fn quantize(v: &SparseVector, scale: u32) -> Result<QuantizedSparseVector> {
    if scale == 0 {
        return Err(Error::InvalidArgument("quantization scale must be >= 1".into()));
    }
    let mut entries = Vec::with_capacity(v.len());
    for (term, weight) in v.iter() {
        let impact = (weight * f64::from(scale)).round();
        if impact > f64::from(u16::MAX) {
            return Err(Error::ImpactOverflow {
                term: term.to_owned(),
                impact,
            });
        }
        if impact >= 1.0 {
            entries.push((term.to_owned(), impact as u16));
        }
    }
    Ok(QuantizedSparseVector { entries })
}

/// One ranked result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredHit {
    pub doc_id: String,
    pub score: f64,
    /// 1-based.
    pub rank: u32,
}

/// Result ordering: higher score first, then `doc_id` ascending.
pub fn hit_order(a_score: f64, a_id: &str, b_score: f64, b_id: &str) -> Ordering {
    b_score.total_cmp(&a_score).then_with(|| a_id.cmp(b_id))
}

/// Sorts `(doc_id, score)` pairs by the result ordering and assigns ranks 1..n.
pub fn rank_hits(mut scored: Vec<(String, f64)>, k: usize) -> Vec<ScoredHit> {
    scored.sort_by(|a, b| hit_order(a.1, &a.0, b.1, &b.0));
    scored.truncate(k);
    scored
        .into_iter()
        .enumerate()
        .map(|(i, (doc_id, score))| ScoredHit {
            doc_id,
            score,
            rank: i as u32 + 1,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sv(pairs: &[(&str, f64)]) -> SparseVector {
        SparseVector::new(pairs.iter().map(|&(t, w)| (t, w))).unwrap()
    }

    fn dv(v: &[f32]) -> DenseVector {
        DenseVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn normalize_examples() {
        let n = normalize(&dv(&[3.0, 4.0])).unwrap();
        assert!((n.values()[0] - 0.6).abs() < 1e-7);
        assert!((n.values()[1] - 0.8).abs() < 1e-7);
        assert_eq!(normalize(&dv(&[1.0, 0.0, 0.0])).unwrap().values(), &[1.0, 0.0, 0.0]);
        let err = normalize(&dv(&[0.0, 0.0])).unwrap_err();
        assert_eq!(err.to_string(), "cannot normalize zero vector");
    }

    #[test]
    fn dot_examples() {
        assert_eq!(dot(&dv(&[1.0, 0.0]), &dv(&[0.0, 1.0])).unwrap(), 0.0);
        assert_eq!(dot(&dv(&[1.0, 2.0, 3.0]), &dv(&[4.0, 5.0, 6.0])).unwrap(), 32.0);
        let n = normalize(&dv(&[3.0, 4.0])).unwrap();
        assert!((dot(&n, &n).unwrap() - 1.0).abs() < 1e-6);
        assert!(matches!(
            dot(&dv(&[1.0]), &dv(&[1.0, 2.0])),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn sparse_dot_examples() {
        assert_eq!(sparse_dot(&sv(&[("a", 2.0), ("b", 3.0)]), &sv(&[("b", 4.0), ("c", 1.0)])), 12.0);
        assert_eq!(sparse_dot(&sv(&[("a", 1.0)]), &sv(&[("b", 1.0)])), 0.0);
        assert_eq!(sparse_dot(&sv(&[("a", 2.0), ("b", 3.0)]), &sv(&[("a", 5.0), ("b", 7.0)])), 31.0);
    }

    #[test]
    fn quantize_examples() {
        let q = quantize(&sv(&[("a", 2.37)]), 100).unwrap();
        assert_eq!(q.iter().collect::<Vec<_>>(), vec![("a", 237)]);
        assert!(quantize(&sv(&[("a", 0.004)]), 100).unwrap().is_empty());
        let q = quantize(&sv(&[("a", 1.0), ("b", 0.015)]), 100).unwrap();
        assert_eq!(q.iter().collect::<Vec<_>>(), vec![("a", 100), ("b", 2)]);
    }

    #[test]
    fn quantize_overflow_names_term() {
        let err = quantize(&sv(&[("big", 700.0)]), 100).unwrap_err();
        assert!(err.to_string().contains("\"big\""), "{err}");
        assert!(quantize(&sv(&[("edge", 655.35)]), 100).is_ok());
        assert!(quantize(&sv(&[("a", 1.0)]), 0).is_err());
    }

    #[test]
    fn sparse_vector_construction_rules() {
        let v = sv(&[("b", 1.0), ("a", 0.0), ("c", 2.0)]);
        assert_eq!(v.iter().collect::<Vec<_>>(), vec![("b", 1.0), ("c", 2.0)]);
        assert!(matches!(SparseVector::new([("a", -1.0)]), Err(Error::InvalidWeight { .. })));
        assert!(matches!(SparseVector::new([("", 1.0)]), Err(Error::EmptyTerm)));
        assert!(matches!(
            SparseVector::new([("a", 1.0), ("a", 2.0)]),
            Err(Error::DuplicateTerm(_))
        ));
        let v = SparseVector::from_tokens(["x", "y", "x"]);
        assert_eq!(v.get("x"), Some(2.0));
        assert_eq!(v.get("y"), Some(1.0));
    }

    #[test]
    fn rank_hits_ties_by_doc_id() {
        let hits = rank_hits(
            vec![("b".into(), 1.0), ("a".into(), 1.0), ("c".into(), 2.0)],
            10,
        );
        let ids: Vec<_> = hits.iter().map(|h| h.doc_id.as_str()).collect();
        assert_eq!(ids, ["c", "a", "b"]);
        assert_eq!(hits.iter().map(|h| h.rank).collect::<Vec<_>>(), [1, 2, 3]);
    }

    fn arb_sparse() -> impl Strategy<Value = SparseVector> {
        prop::collection::btree_map("[a-f]{1,2}", 0.0f64..10.0, 0..12)
            .prop_map(|m| SparseVector::new(m).unwrap())
    }

    proptest! {
        #[test]
        fn normalized_self_dot_is_one(v in prop::collection::vec(-100.0f32..100.0, 1..32)) {
            let v = DenseVector::new(v).unwrap();
            prop_assume!(v.norm() > 1e-3);
            let n = normalize(&v).unwrap();
            prop_assert!((n.norm() - 1.0).abs() <= 1e-4);
            prop_assert!((dot(&n, &n).unwrap() - 1.0).abs() <= 1e-6);
        }

        #[test]
        fn dot_is_bilinear(
            pairs in prop::collection::vec((-10.0f32..10.0, -10.0f32..10.0), 1..32),
            alpha in -4.0f32..4.0,
        ) {
            let a = DenseVector::new(pairs.iter().map(|p| p.0).collect()).unwrap();
            let b = DenseVector::new(pairs.iter().map(|p| p.1).collect()).unwrap();
            let scaled = DenseVector::new(a.values().iter().map(|x| x * alpha).collect()).unwrap();
            let lhs = dot(&scaled, &b).unwrap();
            let rhs = f64::from(alpha) * dot(&a, &b).unwrap();
            // scaling happens in f32, so the bound is relative to the magnitude summed
            let mag: f64 = pairs.iter().map(|p| f64::from(alpha * p.0 * p.1).abs()).sum();
            prop_assert!((lhs - rhs).abs() <= 1e-6 * (1.0 + mag));
        }

        #[test]
        fn sparse_dot_is_symmetric(a in arb_sparse(), b in arb_sparse()) {
            prop_assert_eq!(sparse_dot(&a, &b), sparse_dot(&b, &a));
            let (qa, qb) = (quantize(&a, 100).unwrap(), quantize(&b, 100).unwrap());
            prop_assert_eq!(quantized_dot(&qa, &qb), quantized_dot(&qb, &qa));
        }

        #[test]
        fn quantize_is_monotone(w1 in 0.0f64..600.0, w2 in 0.0f64..600.0, scale in 1u32..100) {
            let (lo, hi) = if w1 <= w2 { (w1, w2) } else { (w2, w1) };
            let qlo = quantize(&SparseVector::new([("t", lo)]).unwrap(), scale).unwrap();
            let qhi = quantize(&SparseVector::new([("t", hi)]).unwrap(), scale).unwrap();
            prop_assert!(qlo.get("t").unwrap_or(0) <= qhi.get("t").unwrap_or(0));
        }
    }
}
