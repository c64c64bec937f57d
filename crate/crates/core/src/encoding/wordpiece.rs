use std::collections::HashMap;

use crate::error::{Error, Result};

pub const CLS: &str = "[CLS]";
pub const SEP: &str = "[SEP]";
pub const UNK: &str = "[UNK]";
pub const CONTINUATION_PREFIX: &str = "##";
pub const DEFAULT_MAX_TOKENS: usize = 64;

/// Words longer than this map straight to the unknown token.
const MAX_CHARS_PER_WORD: usize = 100;

/// WordPiece vocabulary. Token ids are line numbers of the vocabulary file.
#[derive(Debug, Clone)]
pub struct Vocab {
    ids: HashMap<String, u32>,
    tokens: Vec<String>,
    cls: u32,
    sep: u32,
    unk: u32,
    max_tokens: usize,
}

impl Vocab {
    /// Builds a vocabulary from tokens in id order. Requires `[CLS]`, `[SEP]` and `[UNK]`.
    pub fn new<I, S>(tokens: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut ids = HashMap::new();
        let mut list = Vec::new();
        for (i, tok) in tokens.into_iter().enumerate() {
            let tok = tok.into();
            if tok.is_empty() {
                return Err(Error::parse(i + 1, "empty vocabulary token"));
            }
            if let Some(prev) = ids.insert(tok.clone(), i as u32) {
                return Err(Error::parse(
                    i + 1,
                    format!("token {tok:?} already defined on line {}", prev + 1),
                ));
            }
            list.push(tok);
        }
        let special = |name: &str| {
            ids.get(name)
                .copied()
                .ok_or_else(|| Error::InvalidArgument(format!("vocabulary lacks {name}")))
        };
        Ok(Self {
            cls: special(CLS)?,
            sep: special(SEP)?,
            unk: special(UNK)?,
            ids,
            tokens: list,
            max_tokens: DEFAULT_MAX_TOKENS,
        })
    }

    /// Parses a vocabulary file body: one token per line.
    pub fn parse(text: &str) -> Result<Self> {
        Self::new(text.lines().map(|l| l.trim_end_matches('\r')))
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Sequence length cap, including the start and end tokens. Clamped to at least 2.
    pub fn with_max_tokens(mut self, max_tokens: usize) -> Self {
        self.max_tokens = max_tokens.max(2);
        self
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn id(&self, token: &str) -> Option<u32> {
        self.ids.get(token).copied()
    }

    pub fn token(&self, id: u32) -> Option<&str> {
        self.tokens.get(id as usize).map(String::as_str)
    }

    pub fn unk_id(&self) -> u32 {
        self.unk
    }

    /// Lowercases, splits on whitespace and punctuation, then applies greedy
    /// longest-match-first WordPiece to every word. The result is wrapped in
    /// `[CLS] ... [SEP]` and truncated to the sequence cap.
    pub fn tokenize(&self, text: &str) -> Vec<u32> {
        let budget = self.max_tokens - 2;
        let mut out = Vec::with_capacity(budget.min(64) + 2);
        out.push(self.cls);
        'words: for word in pre_split(&text.to_lowercase()) {
            for id in self.word_pieces(word) {
                if out.len() - 1 >= budget {
                    break 'words;
                }
                out.push(id);
            }
        }
        out.push(self.sep);
        out
    }

    fn word_pieces(&self, word: &str) -> Vec<u32> {
        if word.chars().count() > MAX_CHARS_PER_WORD {
            return vec![self.unk];
        }
        let mut pieces = Vec::new();
        let mut start = 0;
        let mut buf = String::new();
        while start < word.len() {
            let mut end = word.len();
            let mut found = None;
            while end > start {
                buf.clear();
                if start > 0 {
                    buf.push_str(CONTINUATION_PREFIX);
                }
                buf.push_str(&word[start..end]);
                if let Some(&id) = self.ids.get(buf.as_str()) {
                    found = Some(id);
                    break;
                }
                end = prev_boundary(word, end);
            }
            match found {
                Some(id) => {
                    pieces.push(id);
                    start = end;
                }
                None => return vec![self.unk],
            }
        }
        pieces
    }
}

fn prev_boundary(s: &str, mut i: usize) -> usize {
    i -= 1;
    while !s.is_char_boundary(i) {
        i -= 1;
    }
    i
}

/// Whitespace split, with every punctuation or symbol character as its own word.
fn pre_split(text: &str) -> Vec<&str> {
    let mut words = Vec::new();
    let mut start: Option<usize> = None;
    for (i, c) in text.char_indices() {
        if c.is_whitespace() || c.is_control() {
            if let Some(s) = start.take() {
                words.push(&text[s..i]);
            }
        } else if !c.is_alphanumeric() {
            if let Some(s) = start.take() {
                words.push(&text[s..i]);
            }
            words.push(&text[i..i + c.len_utf8()]);
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        words.push(&text[s..]);
    }
    words
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vocab() -> Vocab {
        Vocab::new(["[CLS]", "[SEP]", "[UNK]", "play", "##ing", "un", "##play", "##able", ",", "a"])
            .unwrap()
    }

    fn render(v: &Vocab, ids: &[u32]) -> Vec<String> {
        ids.iter().map(|&i| v.token(i).unwrap().to_owned()).collect()
    }

    #[test]
    fn canonical_wordpiece() {
        let v = Vocab::new(["[CLS]", "[SEP]", "[UNK]", "play", "##ing"]).unwrap();
        assert_eq!(render(&v, &v.tokenize("playing")), ["[CLS]", "play", "##ing", "[SEP]"]);
        assert_eq!(render(&v, &v.tokenize("")), ["[CLS]", "[SEP]"]);
        assert_eq!(render(&v, &v.tokenize("zzz")), ["[CLS]", "[UNK]", "[SEP]"]);
    }

    #[test]
    fn longest_match_first_and_punctuation() {
        let v = vocab();
        assert_eq!(
            render(&v, &v.tokenize("Unplayable, PLAYING a")),
            ["[CLS]", "un", "##play", "##able", ",", "play", "##ing", "a", "[SEP]"]
        );
        // partial match followed by an unmatchable suffix maps the whole word to [UNK]
        assert_eq!(render(&v, &v.tokenize("playx")), ["[CLS]", "[UNK]", "[SEP]"]);
    }

    #[test]
    fn truncates_to_cap() {
        let v = vocab().with_max_tokens(4);
        assert_eq!(render(&v, &v.tokenize("a a a a a")), ["[CLS]", "a", "a", "[SEP]"]);
    }

    #[test]
    fn vocabulary_validation() {
        assert!(Vocab::new(["[CLS]", "[SEP]"]).is_err());
        let err = Vocab::parse("[CLS]\n[SEP]\n[UNK]\nx\nx\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 5, .. }), "{err}");
    }

    #[test]
    fn multibyte_words_do_not_split_inside_chars() {
        let v = Vocab::new(["[CLS]", "[SEP]", "[UNK]", "é", "##t", "##é"]).unwrap();
        assert_eq!(render(&v, &v.tokenize("été")), ["[CLS]", "é", "##t", "##é", "[SEP]"]);
    }
}
