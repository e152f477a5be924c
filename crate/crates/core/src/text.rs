//! Unicode normalization and word tokenization shared by marker matching
//! and the fallback embedder.

use unicode_normalization::UnicodeNormalization;

/// NFKC + lowercase view of a text that remembers, for every normalized
/// char, which char of the original text produced it.
#[derive(Debug, Clone)]
pub struct NormalizedText {
    pub chars: Vec<char>,
    origin: Vec<usize>,
    original_len: usize,
}

impl NormalizedText {
    pub fn new(text: &str) -> Self {
        let mut chars = Vec::with_capacity(text.len());
        let mut origin = Vec::with_capacity(text.len());
        let mut original_len = 0;
        for (i, c) in text.chars().enumerate() {
            original_len = i + 1;
            for n in std::iter::once(c).nfkc() {
                for l in n.to_lowercase() {
                    chars.push(l);
                    origin.push(i);
                }
            }
        }
        NormalizedText {
            chars,
            origin,
            original_len,
        }
    }

    pub fn len(&self) -> usize {
        self.chars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chars.is_empty()
    }

    /// Maps a half-open range of normalized chars back to the original text.
    pub fn original_span(&self, start: usize, end: usize) -> (usize, usize) {
        debug_assert!(start < end && end <= self.chars.len());
        let s = self.origin[start];
        let e = self.origin[end - 1] + 1;
        (s, e.min(self.original_len))
    }

    pub fn as_string(&self) -> String {
        self.chars.iter().collect()
    }
}

/// A word token over normalized chars, `[start, end)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub text: String,
    pub start: usize,
    pub end: usize,
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric()
}

fn is_joiner(c: char) -> bool {
    matches!(c, '\'' | '\u{2019}' | '-')
}

/// Splits into maximal alphanumeric runs. Apostrophes and hyphens are kept
/// when flanked by word chars ("don't", "well-known"). Chars from
/// Japanese/CJK scripts each become their own token.
pub fn tokenize(chars: &[char]) -> Vec<Token> {
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if is_cjk(c) {
            tokens.push(Token {
                text: c.to_string(),
                start: i,
                end: i + 1,
            });
            i += 1;
            continue;
        }
        if !is_word_char(c) {
            i += 1;
            continue;
        }
        let start = i;
        while i < chars.len() {
            let c = chars[i];
            if is_cjk(c) {
                break;
            }
            if is_word_char(c)
                || (is_joiner(c)
                    && i + 1 < chars.len()
                    && is_word_char(chars[i + 1])
                    && !is_cjk(chars[i + 1]))
            {
                i += 1;
            } else {
                break;
            }
        }
        tokens.push(Token {
            text: chars[start..i].iter().collect(),
            start,
            end: i,
        });
    }
    tokens
}

/// Hiragana, Katakana (full and half width) and CJK ideographs.
pub fn is_cjk(c: char) -> bool {
    matches!(c as u32,
        0x3040..=0x309F
        | 0x30A0..=0x30FF
        | 0x31F0..=0x31FF
        | 0x3400..=0x4DBF
        | 0x4E00..=0x9FFF
        | 0xF900..=0xFAFF
        | 0xFF66..=0xFF9F)
}

pub fn contains_japanese_script(text: &str) -> bool {
    text.chars().any(is_cjk)
}

/// Converts a char range of `text` into a byte range.
pub fn char_to_byte_range(text: &str, start: usize, end: usize) -> (usize, usize) {
    let mut bs = text.len();
    let mut be = text.len();
    for (ci, (bi, _)) in text.char_indices().enumerate() {
        if ci == start {
            bs = bi;
        }
        if ci == end {
            be = bi;
            break;
        }
    }
    (bs, be)
}
