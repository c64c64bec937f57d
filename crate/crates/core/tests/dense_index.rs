mod common;

use duet_core::dense_index::{FlatIndex, HnswGraph, HnswParams};
use duet_core::model::DenseVector;
use duet_core::Error;
use proptest::prelude::*;

fn corpus(seed: u64, n: usize, dim: usize) -> Vec<(String, DenseVector)> {
    common::unit_vectors(seed, n, dim)
        .into_iter()
        .enumerate()
        .map(|(i, v)| (common::doc_id(i), v))
        .collect()
}

fn recall(graph: &HnswGraph, docs: &[(String, DenseVector)], seed: u64, ef: usize) -> f64 {
    let queries = common::unit_vectors(seed, 50, docs[0].1.dim());
    let mut found = 0;
    for q in &queries {
        let exact = common::oracle_dense_topk(docs, q, 10);
        found += graph.search(q, 10, ef).unwrap().iter().filter(|h| exact.contains(&h.doc_id)).count();
    }
    found as f64 / 500.0
}

#[test]
fn parallel_build_is_structurally_sound_and_accurate() {
    let docs = corpus(31, 5000, 32);
    let graph = HnswGraph::build(HnswParams::new(16, 200, 32), docs.clone(), 4).unwrap();
    assert_eq!(graph.len(), 5000);
    let report = graph.audit();
    assert!(report.is_ok(), "{report}");
    let r = recall(&graph, &docs, 33, 100);
    assert!(r >= 0.9, "recall {r}");
}

#[test]
fn flat_index_agrees_with_oracle() {
    let docs = corpus(34, 500, 16);
    let flat = FlatIndex::build(docs.clone()).unwrap();
    for q in common::unit_vectors(35, 10, 16) {
        let got: Vec<String> = flat.search(&q, 10).unwrap().into_iter().map(|h| h.doc_id).collect();
        assert_eq!(got, common::oracle_dense_topk(&docs, &q, 10));
    }
}

#[test]
fn larger_beam_does_not_lower_recall_much() {
    let docs = corpus(36, 2000, 24);
    let graph = HnswGraph::build(HnswParams::new(8, 100, 37), docs.clone(), 1).unwrap();
    let narrow = recall(&graph, &docs, 38, 10);
    let wide = recall(&graph, &docs, 38, 400);
    assert!(wide >= narrow, "{wide} < {narrow}");
    assert!(wide > 0.97, "{wide}");
}

#[test]
fn search_returns_all_nodes_when_k_exceeds_size() {
    let docs = corpus(39, 30, 8);
    let graph = HnswGraph::build(HnswParams::new(4, 16, 40), docs, 1).unwrap();
    let q = common::unit_vectors(41, 1, 8).pop().unwrap();
    let hits = graph.search(&q, 100, 100).unwrap();
    assert_eq!(hits.len(), 30);
    let mut ids: Vec<&str> = hits.iter().map(|h| h.doc_id.as_str()).collect();
    ids.sort_unstable();
    ids.dedup();
    assert_eq!(ids.len(), 30);
    assert!(hits.windows(2).all(|w| w[0].score >= w[1].score));
}

#[test]
fn rejects_mismatched_dimension_and_duplicates() {
    let mut g = HnswGraph::new(HnswParams::new(4, 16, 1)).unwrap();
    g.insert("a", &DenseVector::new(vec![1.0, 0.0]).unwrap()).unwrap();
    assert!(matches!(
        g.insert("b", &DenseVector::new(vec![1.0, 0.0, 0.0]).unwrap()),
        Err(Error::DimensionMismatch { expected: 2, found: 3 })
    ));
    assert!(matches!(g.insert("a", &DenseVector::new(vec![0.0, 1.0]).unwrap()), Err(Error::DuplicateDocId(_))));
    assert!(matches!(g.insert("z", &DenseVector::new(vec![0.0, 0.0]).unwrap()), Err(Error::ZeroVector)));
}

#[test]
fn save_load_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("g.idx");
    let graph = HnswGraph::build(HnswParams::new(8, 40, 42), corpus(43, 300, 12), 1).unwrap();
    graph.save(&path).unwrap();
    assert_eq!(std::fs::read(&path).unwrap(), graph.to_bytes());
    let loaded = HnswGraph::load(&path).unwrap();
    assert_eq!(loaded.to_bytes(), graph.to_bytes());
    assert!(matches!(HnswGraph::load(dir.path().join("missing")), Err(Error::Io(_))));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn any_seeded_build_passes_audit(n in 1usize..400, m in 2usize..12, seed in any::<u64>(), dim in 2usize..10) {
        let graph = HnswGraph::build(HnswParams::new(m, 2 * m + 8, seed), corpus(seed, n, dim), 1).unwrap();
        let report = graph.audit();
        prop_assert!(report.is_ok(), "{}", report);
    }

    #[test]
    fn duplicate_vectors_keep_graph_sound(copies in 2usize..60, seed in any::<u64>()) {
        let v = DenseVector::new(vec![0.6, 0.8]).unwrap();
        let items: Vec<(String, DenseVector)> = (0..copies).map(|i| (format!("x{i}"), v.clone())).collect();
        let graph = HnswGraph::build(HnswParams::new(4, 16, seed), items, 1).unwrap();
        prop_assert!(graph.audit().is_ok());
        // pruning among exact ties can orphan nodes, so not every copy need be found
        let hits = graph.search(&v, copies, copies).unwrap();
        prop_assert!(!hits.is_empty() && hits.len() <= copies);
        // equal scores come back in doc id order
        let ids: Vec<&str> = hits.iter().map(|h| h.doc_id.as_str()).collect();
        let mut sorted = ids.clone();
        sorted.sort_unstable();
        prop_assert_eq!(ids, sorted);
    }

    #[test]
    fn corrupted_files_are_rejected(seed in any::<u64>(), at in any::<prop::sample::Index>(), x in 1u8..) {
        let bytes = HnswGraph::build(HnswParams::new(4, 16, seed), corpus(seed, 20, 4), 1).unwrap().to_bytes();
        let mut mutated = bytes.clone();
        let i = at.index(mutated.len());
        mutated[i] ^= x;
        prop_assert!(HnswGraph::from_bytes(&mutated).is_err());
        prop_assert!(HnswGraph::from_bytes(&bytes[..i]).is_err());
    }
}
