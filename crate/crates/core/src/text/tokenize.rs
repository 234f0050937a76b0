//! Tokenization of raw document text.
//!
//! Exact rules, in order of precedence:
//!
//! 1. Emoticons from a fixed lexicon (see `data/emoticons.txt`, about a
//!    hundred common ASCII emoticons) are matched first, longest match wins,
//!    and are emitted verbatim as single tokens, never lowercased. A match
//!    whose first character is alphanumeric requires a non-alphanumeric (or
//!    absent) preceding character, and one whose last character is
//!    alphanumeric requires a non-alphanumeric (or absent) following
//!    character, so `"128)"` does not contain the emoticon `8)` and `":Dog"`
//!    does not contain `:D`.
//! 2. Outside emoticons, a token is a maximal run of word characters: any
//!    alphanumeric character, or an apostrophe flanked by alphanumerics on
//!    both sides (so `don't` is one token while quoting apostrophes are
//!    delimiters). Every other character is a delimiter.
//! 3. Word tokens are lowercased when `lowercase` is set.
//! 4. Tokens found in the stopword set are removed. Matching is exact, so a
//!    stopword list should be lowercase when `lowercase` is set.
//! 5. With `drop_numbers`, tokens consisting solely of ASCII digits are
//!    removed.

use std::collections::HashSet;
use std::sync::OnceLock;

/// Options controlling [`tokenize`].
#[derive(Debug, Clone, Default)]
pub struct TokenizerOptions {
    pub lowercase: bool,
    pub stopwords: Option<HashSet<String>>,
    pub drop_numbers: bool,
}

impl TokenizerOptions {
    pub fn lowercased() -> Self {
        TokenizerOptions {
            lowercase: true,
            ..Default::default()
        }
    }
}

const EMOTICON_DATA: &str = include_str!("data/emoticons.txt");

/// Lexicon entries grouped by first byte, longest first within a group.
fn emoticon_table() -> &'static [Vec<&'static str>; 256] {
    static TABLE: OnceLock<[Vec<&'static str>; 256]> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut table: [Vec<&'static str>; 256] = std::array::from_fn(|_| Vec::new());
        for emo in EMOTICON_DATA.lines().map(str::trim).filter(|l| !l.is_empty()) {
            table[emo.as_bytes()[0] as usize].push(emo);
        }
        for group in &mut table {
            group.sort_by(|a, b| b.len().cmp(&a.len()).then(a.cmp(b)));
        }
        table
    })
}

/// The emoticon lexicon, as shipped. Exposed so callers can seed
/// vocabularies or inspect coverage.
pub fn emoticon_lexicon() -> impl Iterator<Item = &'static str> {
    EMOTICON_DATA.lines().map(str::trim).filter(|l| !l.is_empty())
}

fn match_emoticon(text: &str, pos: usize, prev: Option<char>) -> Option<&'static str> {
    let rest = &text[pos..];
    let first = rest.as_bytes()[0];
    for &emo in &emoticon_table()[first as usize] {
        if !rest.starts_with(emo) {
            continue;
        }
        let first_alnum = emo.chars().next().unwrap().is_alphanumeric();
        if first_alnum && prev.is_some_and(|c| c.is_alphanumeric()) {
            continue;
        }
        let last_alnum = emo.chars().last().unwrap().is_alphanumeric();
        let next = rest[emo.len()..].chars().next();
        if last_alnum && next.is_some_and(|c| c.is_alphanumeric()) {
            continue;
        }
        return Some(emo);
    }
    None
}

/// Splits raw text into tokens. Empty input yields an empty sequence.
pub fn tokenize(text: &str, opts: &TokenizerOptions) -> Vec<String> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut tokens: Vec<String> = Vec::new();
    let mut word = String::new();

    let flush = |word: &mut String, tokens: &mut Vec<String>| {
        if !word.is_empty() {
            tokens.push(std::mem::take(word));
        }
    };

    let mut i = 0;
    while i < chars.len() {
        let (pos, c) = chars[i];
        let prev = if i > 0 { Some(chars[i - 1].1) } else { None };
        if let Some(emo) = match_emoticon(text, pos, prev) {
            flush(&mut word, &mut tokens);
            tokens.push(emo.to_string());
            let end = pos + emo.len();
            while i < chars.len() && chars[i].0 < end {
                i += 1;
            }
            continue;
        }
        let next = chars.get(i + 1).map(|&(_, c)| c);
        let is_word_char = c.is_alphanumeric()
            || (c == '\''
                && prev.is_some_and(|p| p.is_alphanumeric())
                && next.is_some_and(|n| n.is_alphanumeric()));
        if is_word_char {
            if opts.lowercase {
                word.extend(c.to_lowercase());
            } else {
                word.push(c);
            }
        } else {
            flush(&mut word, &mut tokens);
        }
        i += 1;
    }
    flush(&mut word, &mut tokens);

    if let Some(stop) = &opts.stopwords {
        tokens.retain(|t| !stop.contains(t));
    }
    if opts.drop_numbers {
        tokens.retain(|t| !t.bytes().all(|b| b.is_ascii_digit()));
    }
    tokens
}
