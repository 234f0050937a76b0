//! Text pipeline: tokenization, vocabulary induction, document encoding,
//! and dataset file parsing.

pub mod dataset;
pub mod tokenize;
pub mod vocab;

pub use dataset::{load_dataset, RawDocument};
pub use tokenize::{emoticon_lexicon, tokenize, TokenizerOptions};
pub use vocab::{build_vocabulary, extract_ngrams, NGramVocabulary, Vocabulary, NGRAM_SEPARATOR};

use crate::sparse::SparseVector;

/// A token after vocabulary lookup: either an in-vocabulary index or the
/// out-of-vocabulary sentinel. The sentinel contributes nothing to region
/// vectors downstream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TokenId(u32);

impl TokenId {
    pub const OOV: TokenId = TokenId(u32::MAX);

    /// In-vocabulary id. `ix` must be a valid vocabulary index.
    pub fn word(ix: usize) -> TokenId {
        assert!(ix < u32::MAX as usize, "vocabulary index {ix} too large");
        TokenId(ix as u32)
    }

    /// The vocabulary index, or `None` for the OOV sentinel.
    pub fn index(self) -> Option<usize> {
        if self == Self::OOV {
            None
        } else {
            Some(self.0 as usize)
        }
    }

    pub fn is_oov(self) -> bool {
        self == Self::OOV
    }
}

/// An encoded document: token ids over the word vocabulary plus its gold
/// labels (one for single-label tasks, several for multi-label).
///
/// `ngram_features` caches the whole-document bag-of-n-gram vector for
/// models that consume one; it is populated by the encoding pipeline when
/// the model requires it and is `None` otherwise.
#[derive(Debug, Clone)]
pub struct Document {
    pub tokens: Vec<TokenId>,
    pub labels: Vec<usize>,
    pub ngram_features: Option<SparseVector>,
}

impl Document {
    pub fn new(tokens: Vec<TokenId>, labels: Vec<usize>) -> Self {
        Document {
            tokens,
            labels,
            ngram_features: None,
        }
    }
}
