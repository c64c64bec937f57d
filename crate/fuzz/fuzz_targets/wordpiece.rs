#![no_main]

use duet_core::encoding::Vocab;
use libfuzzer_sys::fuzz_target;

// Input is `<vocabulary file> NUL <query text>`.
fuzz_target!(|text: &str| {
    let (vocab, query) = text.split_once('\0').unwrap_or((text, ""));
    let Ok(vocab) = Vocab::parse(vocab) else {
        return;
    };
    let vocab = vocab.with_max_tokens(32);
    let ids = vocab.tokenize(query);
    assert!(ids.len() >= 2 && ids.len() <= 32);
    assert!(ids.iter().all(|&id| vocab.token(id).is_some()));
});
