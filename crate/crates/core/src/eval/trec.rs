//! TREC run (`qid Q0 docid rank score tag`) and qrels (`qid 0 docid grade`) formats.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::path::Path;

use log::warn;

use crate::codec::write_atomic;
use crate::error::{Error, Result};
use crate::model::{hit_order, ScoredHit};
use crate::run::Run;

/// Relevance judgments: query id → doc id → grade.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Qrels {
    judgments: BTreeMap<String, BTreeMap<String, u32>>,
}

impl Qrels {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, qid: impl Into<String>, doc_id: impl Into<String>, grade: u32) -> bool {
        self.judgments
            .entry(qid.into())
            .or_default()
            .insert(doc_id.into(), grade)
            .is_none()
    }

    pub fn get(&self, qid: &str) -> Option<&BTreeMap<String, u32>> {
        self.judgments.get(qid)
    }

    pub fn query_ids(&self) -> impl Iterator<Item = &str> {
        self.judgments.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.judgments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.judgments.is_empty()
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut qrels = Qrels::new();
        for (i, line) in text.lines().enumerate() {
            let line_no = i + 1;
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.is_empty() {
                continue;
            }
            let [qid, _iter, doc_id, grade] = fields[..] else {
                return Err(Error::parse(
                    line_no,
                    format!("expected 4 fields `qid 0 docid grade`, found {}", fields.len()),
                ));
            };
            let grade: u32 = grade
                .parse()
                .map_err(|_| Error::parse(line_no, format!("grade {grade:?} is not a nonnegative integer")))?;
            if !qrels.insert(qid, doc_id, grade) {
                return Err(Error::parse(
                    line_no,
                    format!("duplicate judgment for ({qid}, {doc_id})"),
                ));
            }
        }
        Ok(qrels)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }
}

/// Parses a TREC run. Hits are re-sorted by score (ties by doc id); a warning is logged
/// when the file's rank column disagrees with that order.
pub fn parse_run(text: &str) -> Result<Run> {
    let mut tag: Option<String> = None;
    // qid → (doc, rank, score)
    let mut rows: BTreeMap<String, Vec<(String, u64, f64)>> = BTreeMap::new();
    let mut seen: HashMap<(String, String), usize> = HashMap::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        let [qid, _q0, doc_id, rank, score, run_tag] = fields[..] else {
            return Err(Error::parse(
                line_no,
                format!("expected 6 fields `qid Q0 docid rank score tag`, found {}", fields.len()),
            ));
        };
        let rank: u64 = rank
            .parse()
            .map_err(|_| Error::parse(line_no, format!("rank {rank:?} is not an integer")))?;
        let score: f64 = score
            .parse()
            .ok()
            .filter(|s: &f64| s.is_finite())
            .ok_or_else(|| Error::parse(line_no, format!("score {score:?} is not a finite number")))?;
        if let Some(first) = seen.insert((qid.to_owned(), doc_id.to_owned()), line_no) {
            return Err(Error::parse(
                line_no,
                format!("doc {doc_id} already listed for query {qid} on line {first}"),
            ));
        }
        tag.get_or_insert_with(|| run_tag.to_owned());
        rows.entry(qid.to_owned())
            .or_default()
            .push((doc_id.to_owned(), rank, score));
    }

    let mut run = Run::new(tag.unwrap_or_default());
    for (qid, mut hits) in rows {
        let by_rank: Vec<String> = {
            let mut v = hits.clone();
            v.sort_by_key(|h| h.1);
            v.into_iter().map(|h| h.0).collect()
        };
        hits.sort_by(|a, b| hit_order(a.2, &a.0, b.2, &b.0));
        if hits.iter().map(|h| &h.0).ne(by_rank.iter()) {
            warn!("query {qid}: rank column disagrees with scores; re-ranking by score");
        }
        let hits = hits
            .into_iter()
            .enumerate()
            .map(|(i, (doc_id, _, score))| ScoredHit {
                doc_id,
                score,
                rank: i as u32 + 1,
            })
            .collect();
        run.insert(qid, hits)?;
    }
    Ok(run)
}

pub fn load_run(path: impl AsRef<Path>) -> Result<Run> {
    parse_run(&std::fs::read_to_string(path)?)
}

/// Formats a run, queries in ascending id order. Scores use the shortest
/// representation that parses back to the same value.
pub fn format_run(run: &Run) -> String {
    let tag = if run.tag.is_empty() { "run" } else { run.tag.as_str() };
    let mut out = String::new();
    for (qid, hits) in run.iter() {
        for h in hits {
            let _ = writeln!(out, "{qid} Q0 {} {} {} {tag}", h.doc_id, h.rank, h.score);
        }
    }
    out
}

/// Writes a run atomically.
pub fn write_run(run: &Run, path: impl AsRef<Path>) -> Result<()> {
    if run.tag.chars().any(char::is_whitespace) {
        return Err(Error::InvalidArgument(format!("run tag {:?} contains whitespace", run.tag)));
    }
    write_atomic(path.as_ref(), format_run(run).as_bytes())
}
