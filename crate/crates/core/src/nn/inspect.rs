//! Tracing which text regions excite a neuron.
//!
//! After training, a neuron's strongest activations over a corpus show
//! what it learned to detect. Regions are re-enumerated exactly as in the
//! forward pass and ranked by the neuron's rectified response.

use crate::error::{Error, Result};
use crate::nn::network::{BranchInput, NetworkParams};
use crate::regions::regions_with_spans;
use crate::text::{Document, Vocabulary};

/// One high-activation region: where it came from and what it said.
#[derive(Debug, Clone, PartialEq)]
pub struct TopRegion {
    /// Index of the document in the scanned dataset.
    pub doc: usize,
    /// Region start in the padded token sequence.
    pub position: usize,
    pub activation: f64,
    /// Region tokens, OOV and padding rendered as `*`.
    pub text: String,
}

/// The `count` regions of the dataset with the highest activation of
/// `neuron` in `branch`, strongest first. Ties are ordered by document,
/// then position, so the result is deterministic. Only region branches
/// can be inspected; a whole-document branch has no regions to rank.
pub fn top_regions(
    params: &NetworkParams,
    docs: &[Document],
    vocab: &Vocabulary,
    branch: usize,
    neuron: usize,
    count: usize,
) -> Result<Vec<TopRegion>> {
    let spec = &params.spec;
    let branch_spec = spec.branches.get(branch).ok_or_else(|| {
        Error::config(format!(
            "branch {branch} out of range: the network has {} branches",
            spec.branches.len()
        ))
    })?;
    if neuron >= branch_spec.neurons {
        return Err(Error::config(format!(
            "neuron {neuron} out of range: branch {branch} has {} neurons",
            branch_spec.neurons
        )));
    }
    let cfg = match &branch_spec.input {
        BranchInput::Region(cfg) => cfg,
        BranchInput::WholeDoc { .. } => {
            return Err(Error::config(
                "whole-document branches have no regions to inspect",
            ))
        }
    };
    let layer = &params.conv[branch];

    let mut found: Vec<TopRegion> = Vec::new();
    for (di, doc) in docs.iter().enumerate() {
        let padded = if cfg.pad {
            crate::regions::pad(&doc.tokens, cfg.size)
        } else {
            doc.tokens.clone()
        };
        for (l, region) in regions_with_spans(&doc.tokens, cfg, spec.vocab_size) {
            let activation = layer.neuron_response(neuron, &region);
            let end = (l + cfg.size).min(padded.len());
            let text = padded[l.min(padded.len())..end]
                .iter()
                .map(|t| match t.index() {
                    Some(ix) => vocab.entry(ix),
                    None => "*",
                })
                .collect::<Vec<&str>>()
                .join(" ");
            found.push(TopRegion {
                doc: di,
                position: l,
                activation,
                text,
            });
        }
    }
    found.sort_by(|a, b| {
        b.activation
            .partial_cmp(&a.activation)
            .unwrap()
            .then(a.doc.cmp(&b.doc))
            .then(a.position.cmp(&b.position))
    });
    found.truncate(count);
    Ok(found)
}
