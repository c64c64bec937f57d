#![no_main]

use duet_core::eval::{format_run, parse_run};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|text: &str| {
    if let Ok(run) = parse_run(text) {
        if !run.tag.is_empty() {
            let again = parse_run(&format_run(&run)).expect("formatted run parses");
            assert_eq!(again, run);
        }
    }
});
