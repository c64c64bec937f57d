#![no_main]

use duet_core::encoding::{LookupEncoder, QueryEncoder};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|text: &str| {
    if let Ok(enc) = LookupEncoder::parse(text) {
        for key in enc.keys() {
            assert_eq!(enc.encode(key).expect("listed key encodes").kind(), enc.kind());
        }
    }
});
