//! Seeded synthetic data and brute-force oracles shared by the integration tests.
#![allow(dead_code)]

use std::cmp::Ordering;
use std::collections::HashMap;

use duet_core::model::{DenseVector, SparseVector};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Ids without zero padding so that lexical and ingestion order differ.
pub fn doc_id(i: usize) -> String {
    format!("d{i}")
}

pub fn random_sparse(rng: &mut ChaCha8Rng, vocab: usize, nnz: usize, max_weight: f64) -> SparseVector {
    let terms = sample(rng, vocab, nnz.min(vocab));
    SparseVector::new(
        terms
            .into_iter()
            .map(|t| (format!("t{t}"), rng.random_range(0.01..max_weight)))
            .collect::<Vec<_>>(),
    )
    .unwrap()
}

/// `docs` documents with about `nnz` terms each over a vocabulary of `vocab` terms.
/// Weights are drawn from a coarse grid so that equal scores, and so tie-breaking,
/// actually occur.
pub fn sparse_corpus(seed: u64, docs: usize, vocab: usize, nnz: usize) -> Vec<(String, SparseVector)> {
    let mut rng = rng(seed);
    (0..docs)
        .map(|i| {
            let n = rng.random_range(nnz - nnz / 4..=nnz + nnz / 4);
            let terms = sample(&mut rng, vocab, n);
            let v = SparseVector::new(
                terms
                    .into_iter()
                    .map(|t| (format!("t{t}"), f64::from(rng.random_range(1u32..=40)) * 0.05))
                    .collect::<Vec<_>>(),
            )
            .unwrap();
            (doc_id(i), v)
        })
        .collect()
}

pub fn sparse_queries(seed: u64, count: usize, vocab: usize) -> Vec<SparseVector> {
    let mut rng = rng(seed);
    (0..count)
        .map(|_| {
            let n = rng.random_range(3..=12);
            random_sparse(&mut rng, vocab, n, 3.0)
        })
        .collect()
}

fn round_half_away(x: f64) -> f64 {
    if x >= 0.0 {
        (x + 0.5).floor()
    } else {
        (x - 0.5).ceil()
    }
}

/// Independent quantizer: `round(w * scale)` with halves away from zero, zeros dropped.
pub fn oracle_quantize(v: &SparseVector, scale: u32) -> HashMap<String, u64> {
    v.iter()
        .map(|(t, w)| (t.to_owned(), round_half_away(w * f64::from(scale)) as u64))
        .filter(|&(_, q)| q > 0)
        .collect()
}

/// Exhaustive quantized dot-product ranking: positive scores only, descending, ties by id.
pub fn oracle_sparse_topk(
    corpus: &[(String, SparseVector)],
    query: &SparseVector,
    scale: u32,
    k: usize,
) -> Vec<(String, f64)> {
    let q = oracle_quantize(query, scale);
    let mut scored: Vec<(String, f64)> = corpus
        .iter()
        .map(|(id, d)| {
            let d = oracle_quantize(d, scale);
            let s: u64 = q.iter().map(|(t, w)| w * d.get(t).copied().unwrap_or(0)).sum();
            (id.clone(), s as f64)
        })
        .filter(|(_, s)| *s > 0.0)
        .collect();
    scored.sort_by(by_score_then_id);
    scored.truncate(k);
    scored
}

pub fn by_score_then_id(a: &(String, f64), b: &(String, f64)) -> Ordering {
    b.1.partial_cmp(&a.1).unwrap().then_with(|| a.0.cmp(&b.0))
}

/// Uniformly distributed unit vectors (normalized Gaussians via Box-Muller).
pub fn unit_vectors(seed: u64, count: usize, dim: usize) -> Vec<DenseVector> {
    let mut rng = rng(seed);
    (0..count)
        .map(|_| {
            let mut v: Vec<f64> = (0..dim)
                .map(|_| {
                    let u1: f64 = rng.random_range(f64::MIN_POSITIVE..1.0);
                    let u2: f64 = rng.random();
                    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
                })
                .collect();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            v.iter_mut().for_each(|x| *x /= norm);
            DenseVector::new(v.into_iter().map(|x| x as f32).collect()).unwrap()
        })
        .collect()
}

/// Exhaustive cosine top-k ids.
pub fn oracle_dense_topk(corpus: &[(String, DenseVector)], query: &DenseVector, k: usize) -> Vec<String> {
    let qn = norm(query.values());
    let mut scored: Vec<(String, f64)> = corpus
        .iter()
        .map(|(id, v)| {
            let dot: f64 = v
                .values()
                .iter()
                .zip(query.values())
                .map(|(a, b)| f64::from(*a) * f64::from(*b))
                .sum();
            (id.clone(), dot / (norm(v.values()) * qn))
        })
        .collect();
    scored.sort_by(by_score_then_id);
    scored.into_iter().take(k).map(|(id, _)| id).collect()
}

fn norm(v: &[f32]) -> f64 {
    v.iter().map(|x| f64::from(*x).powi(2)).sum::<f64>().sqrt()
}
