//! TREC-format I/O and the RR@10 / R@1k / AP / nDCG@10 effectiveness metrics.

mod metrics;
mod trec;

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;

use serde::Serialize;

pub use metrics::{average_precision, ndcg_at, recall_at, recip_rank};
pub use trec::{format_run, load_run, parse_run, write_run, Qrels};

use crate::error::{Error, Result};
use crate::run::Run;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalConfig {
    /// Minimum grade counted as relevant by RR, AP and recall. The TREC Deep Learning
    /// track passage judgments conventionally use 2.
    pub rel_threshold: u32,
    pub rr_cutoff: usize,
    pub ndcg_cutoff: usize,
    pub recall_depth: usize,
    pub ap_depth: usize,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            rel_threshold: 1,
            rr_cutoff: 10,
            ndcg_cutoff: 10,
            recall_depth: 1000,
            ap_depth: 1000,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct QueryMetrics {
    pub rr: Option<f64>,
    pub recall: Option<f64>,
    pub ap: Option<f64>,
    pub ndcg: Option<f64>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct MeanMetrics {
    pub rr: f64,
    pub recall: f64,
    pub ap: f64,
    pub ndcg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricReport {
    pub per_query: BTreeMap<String, QueryMetrics>,
    pub mean: MeanMetrics,
    pub config_threshold: u32,
}

fn mean_of(values: impl Iterator<Item = Option<f64>>) -> f64 {
    let (sum, n) = values.flatten().fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

/// Evaluates every query judged in `qrels`. Judged queries missing from the run score 0;
/// run queries without judgments are ignored.
pub fn evaluate(run: &Run, qrels: &Qrels, config: &EvalConfig) -> Result<MetricReport> {
    let judged_ids: HashSet<&str> = qrels.query_ids().collect();
    if !run.query_ids().any(|q| judged_ids.contains(q)) {
        return Err(Error::NoOverlappingQueries);
    }
    let mut per_query = BTreeMap::new();
    for qid in qrels.query_ids() {
        let judged = qrels.get(qid).expect("qid from qrels");
        let hits = run.get(qid).unwrap_or(&[]);
        let t = config.rel_threshold;
        per_query.insert(
            qid.to_owned(),
            QueryMetrics {
                rr: recip_rank(hits, judged, config.rr_cutoff, t),
                recall: recall_at(hits, judged, config.recall_depth, t),
                ap: average_precision(hits, judged, config.ap_depth, t),
                ndcg: ndcg_at(hits, judged, config.ndcg_cutoff),
            },
        );
    }
    let mean = MeanMetrics {
        rr: mean_of(per_query.values().map(|m: &QueryMetrics| m.rr)),
        recall: mean_of(per_query.values().map(|m| m.recall)),
        ap: mean_of(per_query.values().map(|m| m.ap)),
        ndcg: mean_of(per_query.values().map(|m| m.ndcg)),
    };
    Ok(MetricReport {
        per_query,
        mean,
        config_threshold: config.rel_threshold,
    })
}

impl MetricReport {
    pub fn header(config: &EvalConfig) -> String {
        format!(
            "{:<24} {:>8} {:>8} {:>8} {:>8}",
            "run",
            format!("RR@{}", config.rr_cutoff),
            format!("R@{}", short_depth(config.recall_depth)),
            "AP",
            format!("nDCG@{}", config.ndcg_cutoff)
        )
    }

    /// One row with the metric means, in the same column order as [`MetricReport::header`].
    pub fn row(&self, label: &str) -> String {
        let mut s = String::new();
        let _ = write!(
            s,
            "{:<24} {:>8.4} {:>8.4} {:>8.4} {:>8.4}",
            label, self.mean.rr, self.mean.recall, self.mean.ap, self.mean.ndcg
        );
        s
    }
}

fn short_depth(depth: usize) -> String {
    if depth >= 1000 && depth % 1000 == 0 {
        format!("{}k", depth / 1000)
    } else {
        depth.to_string()
    }
}
