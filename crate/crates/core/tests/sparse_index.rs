mod common;

use std::collections::{HashMap, HashSet};

use duet_core::model::SparseVector;
use duet_core::sparse_index::{analyze, IndexMode, SparseIndex};
use duet_core::Error;
use proptest::prelude::*;

#[test]
fn impact_search_matches_oracle_for_every_k() {
    let corpus = common::sparse_corpus(21, 400, 120, 12);
    let index = SparseIndex::build_impact(corpus.clone(), 100).unwrap();
    for q in common::sparse_queries(22, 20, 120) {
        for k in [1, 7, 50, 1000] {
            let got: Vec<(String, f64)> =
                index.search(&q, k).unwrap().into_iter().map(|h| (h.doc_id, h.score)).collect();
            assert_eq!(got, common::oracle_sparse_topk(&corpus, &q, 100, k), "k={k}");
        }
    }
}

#[test]
fn coarser_scale_still_exact() {
    let corpus = common::sparse_corpus(23, 200, 60, 10);
    let index = SparseIndex::build_impact(corpus.clone(), 3).unwrap();
    for q in common::sparse_queries(24, 20, 60) {
        let got: Vec<(String, f64)> =
            index.search(&q, 30).unwrap().into_iter().map(|h| (h.doc_id, h.score)).collect();
        assert_eq!(got, common::oracle_sparse_topk(&corpus, &q, 3, 30));
    }
}

const TEXTS: [&str; 6] = [
    "The quick brown fox jumps over the lazy dog",
    "A quick brown dog outpaces a quick red fox",
    "Lazy dogs sleep; foxes don't.",
    "brown bears and brown foxes",
    "nothing relevant here at all",
    "Dog dog dog DOG",
];

fn oracle_tokens(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_owned)
        .collect()
}

#[test]
fn document_frequencies_match_counting() {
    let docs: Vec<(String, &str)> = TEXTS.iter().enumerate().map(|(i, t)| (format!("doc{i}"), *t)).collect();
    let index = SparseIndex::build_bm25_text(docs, 0.9, 0.4).unwrap();
    let mut df: HashMap<String, usize> = HashMap::new();
    for t in TEXTS {
        for term in oracle_tokens(t).into_iter().collect::<HashSet<_>>() {
            *df.entry(term).or_default() += 1;
        }
    }
    assert_eq!(index.vocabulary_size(), df.len());
    for (term, n) in &df {
        assert_eq!(index.document_frequency(term), *n, "{term}");
    }
    assert_eq!(analyze("Don't STOP"), ["don", "t", "stop"]);
}

/// Exhaustive BM25 written out from the formula.
fn oracle_bm25(query: &str, k1: f64, b: f64) -> Vec<(String, f64)> {
    let docs: Vec<Vec<String>> = TEXTS.iter().map(|t| oracle_tokens(t)).collect();
    let n = docs.len() as f64;
    let avg = docs.iter().map(Vec::len).sum::<usize>() as f64 / n;
    let mut qtf: HashMap<String, f64> = HashMap::new();
    for t in oracle_tokens(query) {
        *qtf.entry(t).or_default() += 1.0;
    }
    let mut out: Vec<(String, f64)> = docs
        .iter()
        .enumerate()
        .map(|(i, d)| {
            let score: f64 = qtf
                .iter()
                .map(|(t, w)| {
                    let df = docs.iter().filter(|d| d.contains(t)).count() as f64;
                    let tf = d.iter().filter(|x| *x == t).count() as f64;
                    if tf == 0.0 {
                        return 0.0;
                    }
                    let idf = (1.0 + (n - df + 0.5) / (df + 0.5)).ln();
                    w * idf * tf * (k1 + 1.0) / (tf + k1 * (1.0 - b + b * d.len() as f64 / avg))
                })
                .sum();
            (format!("doc{i}"), score)
        })
        .filter(|(_, s)| *s > 0.0)
        .collect();
    out.sort_by(common::by_score_then_id);
    out
}

#[test]
fn bm25_search_matches_formula() {
    for (k1, b) in [(0.9, 0.4), (1.2, 0.75), (0.0, 0.0), (2.0, 1.0)] {
        let docs: Vec<(String, &str)> = TEXTS.iter().enumerate().map(|(i, t)| (format!("doc{i}"), *t)).collect();
        let index = SparseIndex::build_bm25_text(docs, k1, b).unwrap();
        assert_eq!(index.mode(), IndexMode::Bm25 { k1, b });
        for q in ["quick fox", "dog dog", "lazy brown bears", "absent", "FOX's"] {
            let got = index.search_text(q, 10).unwrap();
            let want = oracle_bm25(q, k1, b);
            assert_eq!(got.len(), want.len(), "{q}");
            for (h, (id, s)) in got.iter().zip(&want) {
                assert_eq!(&h.doc_id, id, "{q}");
                assert!((h.score - s).abs() < 1e-9, "{q}: {} vs {s}", h.score);
            }
        }
    }
}

#[test]
fn bm25_round_trip_preserves_scores() {
    let docs: Vec<(String, &str)> = TEXTS.iter().enumerate().map(|(i, t)| (format!("doc{i}"), *t)).collect();
    let index = SparseIndex::build_bm25_text(docs, 0.9, 0.4).unwrap();
    let loaded = SparseIndex::from_bytes(&index.to_bytes()).unwrap();
    for q in ["quick fox", "dog"] {
        assert_eq!(index.search_text(q, 10).unwrap(), loaded.search_text(q, 10).unwrap());
    }
    assert_eq!(loaded.to_bytes(), index.to_bytes());
}

#[test]
fn duplicate_ids_and_bad_parameters_rejected() {
    let v = SparseVector::new([("a", 1.0)]).unwrap();
    let err = SparseIndex::build_impact([("x", v.clone()), ("x", v.clone())], 100).unwrap_err();
    assert!(matches!(err, Error::DuplicateDocId(ref id) if id == "x"));
    assert!(SparseIndex::build_impact([("x", v)], 0).is_err());
    assert!(SparseIndex::build_bm25_text([("x", "a")], 0.9, 1.5).is_err());
}

fn arb_corpus() -> impl Strategy<Value = Vec<(String, SparseVector)>> {
    prop::collection::vec(prop::collection::btree_map(0u8..12, 1u32..60, 1..6), 1..30).prop_map(|docs| {
        docs.into_iter()
            .enumerate()
            .map(|(i, terms)| {
                let v = SparseVector::new(terms.into_iter().map(|(t, w)| (format!("t{t}"), f64::from(w) / 20.0)).collect::<Vec<_>>())
                    .unwrap();
                (format!("{}", 29 - i), v)
            })
            .collect()
    })
}

proptest! {
    #[test]
    fn impact_search_is_exact(corpus in arb_corpus(), q in prop::collection::btree_map(0u8..14, 1u32..60, 1..5), k in 1usize..40) {
        let query = SparseVector::new(q.into_iter().map(|(t, w)| (format!("t{t}"), f64::from(w) / 20.0)).collect::<Vec<_>>()).unwrap();
        let index = SparseIndex::build_impact(corpus.clone(), 100).unwrap();
        let got: Vec<(String, f64)> = index.search(&query, k).unwrap().into_iter().map(|h| (h.doc_id, h.score)).collect();
        prop_assert_eq!(got, common::oracle_sparse_topk(&corpus, &query, 100, k));
    }

    #[test]
    fn decoding_arbitrary_mutations_never_panics(corpus in arb_corpus(), flips in prop::collection::vec((any::<prop::sample::Index>(), any::<u8>()), 1..8), cut in any::<prop::sample::Index>()) {
        let bytes = SparseIndex::build_impact(corpus, 100).unwrap().to_bytes();
        let mut mutated = bytes.clone();
        for (at, x) in flips {
            let i = at.index(mutated.len());
            mutated[i] ^= x | 1;
        }
        prop_assert!(SparseIndex::from_bytes(&mutated).is_err());
        let n = cut.index(bytes.len());
        prop_assert!(SparseIndex::from_bytes(&bytes[..n]).is_err());
    }
}
