#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|text: &str| {
    let _ = duet_core::corpus::Corpus::parse(text);
});
