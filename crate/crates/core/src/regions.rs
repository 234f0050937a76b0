//! Region vector enumeration: converting a token sequence into the sparse
//! inputs of a convolution layer.
//!
//! A region of size `p` starting at position `l` covers tokens
//! `l .. l + p`. Two representations exist:
//!
//! * sequential: the concatenation of `p` one-hot vectors, dimension
//!   `p * |V|`; the token at slot `t` activates component `t * |V| + index`.
//!   Word order within the region is preserved.
//! * bag-of-words: dimension `|V|`; each component holds the count of that
//!   word inside the region. Word order within the region is discarded.
//!
//! Out-of-vocabulary tokens activate nothing, so a region of pure OOV
//! sentinels is the zero vector. With `pad` set, `p - 1` sentinels are
//! prepended and appended so every token participates in `p` regions
//! (except when `stride` skips some).
//!
//! Enumeration starts at `l = 0` and advances by `stride` while
//! `l + p <= L`. With `variable_stride` (bag representation only), a region
//! equal to the previously emitted one as a sparse vector is skipped, which
//! collapses runs of identical content. If enumeration produces no region
//! at all (a document shorter than `p` without padding, or an empty
//! document with `p = 1`), a single zero region is emitted so downstream
//! layers always see at least one row.

use crate::error::{Error, Result};
use crate::sparse::SparseVector;
use crate::text::TokenId;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegionRepr {
    Seq,
    Bow,
}

impl RegionRepr {
    pub fn as_str(self) -> &'static str {
        match self {
            RegionRepr::Seq => "seq",
            RegionRepr::Bow => "bow",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "seq" => Ok(RegionRepr::Seq),
            "bow" => Ok(RegionRepr::Bow),
            other => Err(Error::config(format!(
                "unknown region representation {other:?} (expected seq or bow)"
            ))),
        }
    }
}

/// Configuration of one region-enumeration pass.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionConfig {
    /// Region size `p`, at least 1.
    pub size: usize,
    /// Step between consecutive region starts, at least 1.
    pub stride: usize,
    pub repr: RegionRepr,
    /// Skip regions identical to the previously emitted one. Only
    /// meaningful for the bag representation, where region content is
    /// order-free.
    pub variable_stride: bool,
    /// Pad with `p - 1` OOV sentinels on each side.
    pub pad: bool,
}

impl RegionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.size < 1 {
            return Err(Error::config("region size must be at least 1"));
        }
        if self.stride < 1 {
            return Err(Error::config("region stride must be at least 1"));
        }
        if self.variable_stride && self.repr != RegionRepr::Bow {
            return Err(Error::config(
                "variable stride requires the bag-of-words region representation",
            ));
        }
        Ok(())
    }

    /// Input dimension of the convolution layer fed by this enumeration.
    pub fn input_dim(&self, vocab_size: usize) -> usize {
        match self.repr {
            RegionRepr::Seq => self.size * vocab_size,
            RegionRepr::Bow => vocab_size,
        }
    }
}

/// Surrounds the document with `p - 1` OOV sentinels on each side.
pub fn pad(tokens: &[TokenId], p: usize) -> Vec<TokenId> {
    assert!(p >= 1, "region size must be at least 1");
    let wing = p - 1;
    let mut out = Vec::with_capacity(tokens.len() + 2 * wing);
    out.extend(std::iter::repeat_n(TokenId::OOV, wing));
    out.extend_from_slice(tokens);
    out.extend(std::iter::repeat_n(TokenId::OOV, wing));
    out
}

fn seq_vector(window: &[TokenId], vocab_size: usize) -> SparseVector {
    let mut indices = Vec::with_capacity(window.len());
    let mut values = Vec::with_capacity(window.len());
    for (slot, id) in window.iter().enumerate() {
        if let Some(ix) = id.index() {
            indices.push(slot * vocab_size + ix);
            values.push(1.0);
        }
    }
    SparseVector::from_sorted(window.len() * vocab_size, indices, values)
}

fn bow_vector(window: &[TokenId], vocab_size: usize) -> SparseVector {
    let mut ixs: Vec<usize> = window.iter().filter_map(|id| id.index()).collect();
    ixs.sort_unstable();
    let mut indices = Vec::with_capacity(ixs.len());
    let mut values: Vec<f64> = Vec::with_capacity(ixs.len());
    for ix in ixs {
        if indices.last() == Some(&ix) {
            *values.last_mut().unwrap() += 1.0;
        } else {
            indices.push(ix);
            values.push(1.0);
        }
    }
    SparseVector::from_sorted(vocab_size, indices, values)
}

/// Enumerates regions together with their start position in the (padded)
/// token sequence, used for tracing activations back to source text.
pub fn regions_with_spans(
    tokens: &[TokenId],
    cfg: &RegionConfig,
    vocab_size: usize,
) -> Vec<(usize, SparseVector)> {
    debug_assert!(cfg.validate().is_ok());
    let padded: Vec<TokenId>;
    let view: &[TokenId] = if cfg.pad {
        padded = pad(tokens, cfg.size);
        &padded
    } else {
        tokens
    };
    let dim = cfg.input_dim(vocab_size);
    let mut out: Vec<(usize, SparseVector)> = Vec::new();
    let mut l = 0;
    while l + cfg.size <= view.len() {
        let window = &view[l..l + cfg.size];
        let vec = match cfg.repr {
            RegionRepr::Seq => seq_vector(window, vocab_size),
            RegionRepr::Bow => bow_vector(window, vocab_size),
        };
        let duplicate = cfg.variable_stride && out.last().map(|(_, v)| v) == Some(&vec);
        if !duplicate {
            out.push((l, vec));
        }
        l += cfg.stride;
    }
    if out.is_empty() {
        out.push((0, SparseVector::empty(dim)));
    }
    out
}

/// Enumerates regions in the representation selected by `cfg`.
pub fn regions(tokens: &[TokenId], cfg: &RegionConfig, vocab_size: usize) -> Vec<SparseVector> {
    regions_with_spans(tokens, cfg, vocab_size)
        .into_iter()
        .map(|(_, v)| v)
        .collect()
}

/// Sequential (order-preserving) region vectors of dimension
/// `p * vocab_size`.
pub fn seq_regions(tokens: &[TokenId], cfg: &RegionConfig, vocab_size: usize) -> Vec<SparseVector> {
    assert_eq!(cfg.repr, RegionRepr::Seq);
    regions(tokens, cfg, vocab_size)
}

/// Bag-of-words region vectors of dimension `vocab_size`, components are
/// within-region counts.
pub fn bow_regions(tokens: &[TokenId], cfg: &RegionConfig, vocab_size: usize) -> Vec<SparseVector> {
    assert_eq!(cfg.repr, RegionRepr::Bow);
    regions(tokens, cfg, vocab_size)
}
