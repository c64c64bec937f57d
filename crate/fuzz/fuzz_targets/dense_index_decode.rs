#![no_main]

use duet_core::dense_index::HnswGraph;
use duet_core::model::DenseVector;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(graph) = HnswGraph::from_bytes(data) else {
        return;
    };
    assert!(graph.audit().is_ok());
    assert_eq!(HnswGraph::from_bytes(&graph.to_bytes()).expect("re-encoded graph decodes").to_bytes(), graph.to_bytes());
    if graph.len() > 0 {
        let q = DenseVector::new(graph.stored_vector(0).to_vec()).unwrap();
        let _ = graph.search(&q, 5, 16);
    }
});
