//! Per-query effectiveness metrics. `None` means the query is excluded from the mean
//! (no relevant documents for binary metrics, zero ideal DCG for nDCG).

use std::collections::BTreeMap;

use crate::model::ScoredHit;

fn relevant_count(judged: &BTreeMap<String, u32>, threshold: u32) -> usize {
    judged.values().filter(|&&g| g >= threshold).count()
}

fn is_relevant(judged: &BTreeMap<String, u32>, doc_id: &str, threshold: u32) -> bool {
    judged.get(doc_id).is_some_and(|&g| g >= threshold)
}

/// `1/r` for the first relevant hit at rank `r <= cutoff`, else 0.
pub fn recip_rank(
    hits: &[ScoredHit],
    judged: &BTreeMap<String, u32>,
    cutoff: usize,
    threshold: u32,
) -> Option<f64> {
    if relevant_count(judged, threshold) == 0 {
        return None;
    }
    Some(
        hits.iter()
            .take(cutoff)
            .position(|h| is_relevant(judged, &h.doc_id, threshold))
            .map_or(0.0, |i| 1.0 / (i + 1) as f64),
    )
}

/// Sum of precision at each relevant hit within `depth`, divided by the number of
/// relevant documents in the judgments.
pub fn average_precision(
    hits: &[ScoredHit],
    judged: &BTreeMap<String, u32>,
    depth: usize,
    threshold: u32,
) -> Option<f64> {
    let total = relevant_count(judged, threshold);
    if total == 0 {
        return None;
    }
    let mut found = 0usize;
    let mut sum = 0.0;
    for (i, h) in hits.iter().take(depth).enumerate() {
        if is_relevant(judged, &h.doc_id, threshold) {
            found += 1;
            sum += found as f64 / (i + 1) as f64;
        }
    }
    Some(sum / total as f64)
}

fn gain(grade: u32) -> f64 {
    2f64.powi(grade.min(1023) as i32) - 1.0
}

fn discount(rank0: usize) -> f64 {
    ((rank0 + 2) as f64).log2()
}

/// DCG@k with gain `2^g - 1` and discount `log2(i + 1)`, normalized by the ideal DCG
/// over all judged grades.
pub fn ndcg_at(hits: &[ScoredHit], judged: &BTreeMap<String, u32>, k: usize) -> Option<f64> {
    let mut ideal: Vec<u32> = judged.values().copied().filter(|&g| g > 0).collect();
    ideal.sort_unstable_by(|a, b| b.cmp(a));
    let idcg: f64 = ideal
        .iter()
        .take(k)
        .enumerate()
        .map(|(i, &g)| gain(g) / discount(i))
        .sum();
    if idcg == 0.0 {
        return None;
    }
    let dcg: f64 = hits
        .iter()
        .take(k)
        .enumerate()
        .map(|(i, h)| gain(judged.get(&h.doc_id).copied().unwrap_or(0)) / discount(i))
        .sum();
    Some(dcg / idcg)
}

/// Fraction of relevant documents found in the top `k`.
pub fn recall_at(
    hits: &[ScoredHit],
    judged: &BTreeMap<String, u32>,
    k: usize,
    threshold: u32,
) -> Option<f64> {
    let total = relevant_count(judged, threshold);
    if total == 0 {
        return None;
    }
    let found = hits
        .iter()
        .take(k)
        .filter(|h| is_relevant(judged, &h.doc_id, threshold))
        .count();
    Some(found as f64 / total as f64)
}
