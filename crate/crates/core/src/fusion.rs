//! Hybrid fusion of two runs by averaging per-query min-max normalized scores.

use std::collections::{BTreeSet, HashMap};

use log::warn;

use crate::error::{Error, Result};
use crate::model::{hit_order, rank_hits, ScoredHit};
use crate::run::Run;

pub const DEFAULT_FUSION_DEPTH: usize = 1000;

/// Maps scores to `(s - min) / (max - min)`, or to 1.0 when all scores are equal.
/// The returned hits are in result order.
pub fn min_max_normalize(hits: &[ScoredHit]) -> Result<Vec<ScoredHit>> {
    if hits.is_empty() {
        return Err(Error::InvalidArgument("cannot normalize an empty hit list".into()));
    }
    let (min, max) = hits
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), h| {
            (lo.min(h.score), hi.max(h.score))
        });
    let range = max - min;
    let mut out: Vec<ScoredHit> = hits
        .iter()
        .map(|h| ScoredHit {
            doc_id: h.doc_id.clone(),
            score: if range > 0.0 { (h.score - min) / range } else { 1.0 },
            rank: 0,
        })
        .collect();
    out.sort_by(|a, b| hit_order(a.score, &a.doc_id, b.score, &b.doc_id));
    for (i, h) in out.iter_mut().enumerate() {
        h.rank = i as u32 + 1;
    }
    Ok(out)
}

fn normalized_scores(hits: Option<&[ScoredHit]>, depth: usize) -> Result<HashMap<String, f64>> {
    match hits {
        Some(hits) if !hits.is_empty() => Ok(min_max_normalize(&hits[..hits.len().min(depth)])?
            .into_iter()
            .map(|h| (h.doc_id, h.score))
            .collect()),
        _ => Ok(HashMap::new()),
    }
}

/// Fuses two runs query by query. A document missing from one side contributes 0 for
/// that side. Queries present in only one run are fused against an empty side.
pub fn average_fuse(a: &Run, b: &Run, depth: usize) -> Result<Run> {
    if depth == 0 {
        return Err(Error::InvalidArgument("fusion depth must be at least 1".into()));
    }
    let tag = match (a.tag.as_str(), b.tag.as_str()) {
        ("", "") => "fusion".to_owned(),
        (x, y) => format!("{x}+{y}"),
    };
    let mut fused = Run::new(tag);
    let qids: BTreeSet<&str> = a.query_ids().chain(b.query_ids()).collect();
    for qid in qids {
        let (ha, hb) = (a.get(qid), b.get(qid));
        if ha.is_none() || hb.is_none() {
            warn!("query {qid} appears in only one run; fusing against an empty side");
        }
        let na = normalized_scores(ha, depth)?;
        let nb = normalized_scores(hb, depth)?;
        let docs: BTreeSet<&String> = na.keys().chain(nb.keys()).collect();
        let scored = docs
            .into_iter()
            .map(|d| {
                let sa = na.get(d).copied().unwrap_or(0.0);
                let sb = nb.get(d).copied().unwrap_or(0.0);
                (d.clone(), (sa + sb) / 2.0)
            })
            .collect();
        fused.insert(qid, rank_hits(scored, depth))?;
    }
    Ok(fused)
}
