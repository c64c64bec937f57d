#![no_main]

use duet_core::engine::AnyIndex;
use duet_core::model::SparseVector;
use duet_core::sparse_index::SparseIndex;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let _ = AnyIndex::from_bytes(data);
    let Ok(index) = SparseIndex::from_bytes(data) else {
        return;
    };
    // anything that decodes must re-encode to an equivalent index
    let again = SparseIndex::from_bytes(&index.to_bytes()).expect("re-encoded index decodes");
    assert_eq!(again.to_bytes(), index.to_bytes());
    let terms: Vec<(String, f64)> = index.terms().take(4).map(|(t, _)| (t.to_owned(), 1.0)).collect();
    if let Ok(q) = SparseVector::new(terms) {
        let _ = index.search(&q, 10);
    }
});
