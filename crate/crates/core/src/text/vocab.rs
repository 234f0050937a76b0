//! Vocabulary induction and lookup.
//!
//! A vocabulary selects the `max_size` most frequent training tokens
//! (frequency ties broken by ascending byte order) and then assigns indices
//! in ascending lexicographic byte order over the selected set, so the
//! mapping is a pure function of the training corpus.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::sparse::SparseVector;
use crate::text::TokenId;

/// Separator used to join the tokens of an n-gram into one feature string.
/// The tokenizer never emits control characters, so the joined form is
/// unambiguous.
pub const NGRAM_SEPARATOR: char = '\x1f';

const VOCAB_HEADER_TAG: &str = "tv1";

/// Token-to-index mapping. Indices are contiguous from 0 and follow
/// ascending byte order of the entries.
#[derive(Debug, Clone)]
pub struct Vocabulary {
    entries: Vec<String>,
    index: HashMap<String, usize>,
}

impl Vocabulary {
    /// Builds a vocabulary from entries that are already unique and sorted
    /// ascending; returns a data error otherwise.
    pub fn from_entries(entries: Vec<String>) -> Result<Self> {
        for w in entries.windows(2) {
            if w[0] >= w[1] {
                return Err(Error::data(format!(
                    "vocabulary entries not unique and sorted: {:?} before {:?}",
                    w[0], w[1]
                )));
            }
        }
        let index = entries
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        Ok(Vocabulary { entries, index })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Index of `token`, if in vocabulary.
    pub fn get(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    /// Entry at `ix`. Panics if out of range.
    pub fn entry(&self, ix: usize) -> &str {
        &self.entries[ix]
    }

    pub fn entries(&self) -> &[String] {
        &self.entries
    }

    /// Maps each token to its index or the OOV sentinel.
    pub fn encode(&self, tokens: &[String]) -> Vec<TokenId> {
        tokens
            .iter()
            .map(|t| match self.get(t) {
                Some(ix) => TokenId::word(ix),
                None => TokenId::OOV,
            })
            .collect()
    }

    /// Writes the `tv1` vocabulary file: a header line, then one entry per
    /// line in index order.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut out = String::with_capacity(self.entries.len() * 8 + 16);
        out.push_str(&format!("{VOCAB_HEADER_TAG} {}\n", self.entries.len()));
        for e in &self.entries {
            out.push_str(e);
            out.push('\n');
        }
        fs::write(path, out)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::data(format!("cannot read vocabulary {}: {e}", path.display())))?;
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::data(format!("empty vocabulary file {}", path.display())))?;
        let mut parts = header.split_whitespace();
        let (tag, size) = (parts.next(), parts.next());
        if tag != Some(VOCAB_HEADER_TAG) {
            return Err(Error::data(format!(
                "bad vocabulary header in {}: expected `{VOCAB_HEADER_TAG} <size>`, got {header:?}",
                path.display()
            )));
        }
        let size: usize = size
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::data(format!("bad vocabulary size in {}", path.display())))?;
        let entries: Vec<String> = lines.map(|l| l.to_string()).collect();
        if entries.len() != size {
            return Err(Error::data(format!(
                "vocabulary {} declares {size} entries but contains {}",
                path.display(),
                entries.len()
            )));
        }
        Self::from_entries(entries)
            .map_err(|e| Error::data(format!("{}: {e}", path.display())))
    }
}

fn select_top(counts: HashMap<String, u64>, max_size: usize) -> Vocabulary {
    let mut ranked: Vec<(String, u64)> = counts.into_iter().collect();
    ranked.sort_unstable_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    ranked.truncate(max_size);
    let mut entries: Vec<String> = ranked.into_iter().map(|(t, _)| t).collect();
    entries.sort_unstable();
    Vocabulary::from_entries(entries).expect("selected entries are unique")
}

/// Builds the word vocabulary from tokenized training documents.
pub fn build_vocabulary<'a>(
    docs: impl IntoIterator<Item = &'a [String]>,
    max_size: usize,
) -> Vocabulary {
    let mut counts: HashMap<String, u64> = HashMap::new();
    for doc in docs {
        for t in doc {
            *counts.entry(t.clone()).or_insert(0) += 1;
        }
    }
    select_top(counts, max_size)
}

/// All n-grams of the requested orders, in ascending order then position,
/// as a multiset of separator-joined strings. Orders longer than the
/// document contribute nothing.
pub fn extract_ngrams(tokens: &[String], orders: &[usize]) -> Vec<String> {
    let mut out = Vec::new();
    for &n in orders {
        assert!(n >= 1, "n-gram order must be at least 1");
        if n > tokens.len() {
            continue;
        }
        for w in tokens.windows(n) {
            let mut gram = String::with_capacity(w.iter().map(|t| t.len() + 1).sum());
            for (i, t) in w.iter().enumerate() {
                if i > 0 {
                    gram.push(NGRAM_SEPARATOR);
                }
                gram.push_str(t);
            }
            out.push(gram);
        }
    }
    out
}

/// Vocabulary over n-gram features. Entries are separator-joined n-grams;
/// each entry's order is recoverable from its separator count.
#[derive(Debug, Clone)]
pub struct NGramVocabulary {
    vocab: Vocabulary,
    orders: Vec<usize>,
}

impl NGramVocabulary {
    /// Builds the feature vocabulary from tokenized training documents,
    /// keeping the `max_size` most frequent n-grams of the given orders.
    pub fn build<'a>(
        docs: impl IntoIterator<Item = &'a [String]>,
        orders: &[usize],
        max_size: usize,
    ) -> Result<Self> {
        let mut sorted: Vec<usize> = orders.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.is_empty() || sorted[0] == 0 {
            return Err(Error::config("n-gram orders must be a nonempty set of positive integers"));
        }
        let mut counts: HashMap<String, u64> = HashMap::new();
        for doc in docs {
            for g in extract_ngrams(doc, &sorted) {
                *counts.entry(g).or_insert(0) += 1;
            }
        }
        Ok(NGramVocabulary {
            vocab: select_top(counts, max_size),
            orders: sorted,
        })
    }

    pub fn len(&self) -> usize {
        self.vocab.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vocab.is_empty()
    }

    pub fn orders(&self) -> &[usize] {
        &self.orders
    }

    pub fn get(&self, gram: &str) -> Option<usize> {
        self.vocab.get(gram)
    }

    /// The feature string at `ix`, with separators replaced by spaces for
    /// display.
    pub fn display_entry(&self, ix: usize) -> String {
        self.vocab.entry(ix).replace(NGRAM_SEPARATOR, " ")
    }

    /// Order of the n-gram at `ix`.
    pub fn order_of(&self, ix: usize) -> usize {
        self.vocab
            .entry(ix)
            .chars()
            .filter(|&c| c == NGRAM_SEPARATOR)
            .count()
            + 1
    }

    /// Counts of each in-vocabulary n-gram in the document. Unknown n-grams
    /// contribute nothing; a document with no known n-grams yields the zero
    /// vector.
    pub fn doc_counts(&self, tokens: &[String]) -> SparseVector {
        let pairs = extract_ngrams(tokens, &self.orders)
            .into_iter()
            .filter_map(|g| self.vocab.get(&g).map(|ix| (ix, 1.0)));
        SparseVector::from_pairs(self.vocab.len(), pairs).expect("indices in range")
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        self.vocab.save(path)
    }

    /// Loads an n-gram vocabulary. The order set is recovered from the
    /// entries; an order that contributed no surviving entries is absent,
    /// which is harmless since no feature of that order could match anyway.
    pub fn load(path: &Path) -> Result<Self> {
        let vocab = Vocabulary::load(path)?;
        let mut orders: Vec<usize> = (0..vocab.len())
            .map(|ix| {
                vocab
                    .entry(ix)
                    .chars()
                    .filter(|&c| c == NGRAM_SEPARATOR)
                    .count()
                    + 1
            })
            .collect();
        orders.sort_unstable();
        orders.dedup();
        if orders.is_empty() {
            orders.push(1);
        }
        Ok(NGramVocabulary { vocab, orders })
    }
}
