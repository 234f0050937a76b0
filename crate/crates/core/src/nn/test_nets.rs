//! Small fixtures shared by the unit tests in this module.

use crate::nn::network::{BranchInput, BranchSpec, NetworkParams, NetworkSpec};
use crate::nn::pool::{PoolKind, PoolingSpec};
use crate::regions::{RegionConfig, RegionRepr};
use crate::text::{Document, TokenId};

/// Document from raw vocabulary indices; negative values become OOV.
pub fn doc_from_ixs(ixs: &[usize], labels: &[usize]) -> Document {
    Document::new(ixs.iter().map(|&i| TokenId::word(i)).collect(), labels.to_vec())
}

/// One sequential branch, p=2, m=3, max pooling into two units.
pub fn tiny_spec(vocab_size: usize, classes: usize) -> NetworkSpec {
    NetworkSpec {
        vocab_size,
        classes,
        branches: vec![BranchSpec {
            input: BranchInput::Region(RegionConfig {
                size: 2,
                stride: 1,
                repr: RegionRepr::Seq,
                variable_stride: false,
                pad: true,
            }),
            neurons: 3,
            pooling: PoolingSpec {
                kind: PoolKind::Max,
                units: 2,
            },
            response_norm: false,
        }],
        dropout: 0.0,
    }
}

/// Flat parameter access for finite-difference checks: per branch the
/// weight matrix then the bias, then the top weights and top bias.
pub fn param_count(p: &NetworkParams) -> usize {
    let conv: usize = p
        .conv
        .iter()
        .map(|c| c.input_dim() * c.neurons() + c.neurons())
        .sum();
    conv + p.top_weights.rows() * p.top_weights.cols() + p.top_bias.len()
}

pub fn get_param(p: &NetworkParams, mut i: usize) -> f64 {
    for layer in &p.conv {
        let w = layer.input_dim() * layer.neurons();
        if i < w {
            return layer.weights().data()[i];
        }
        i -= w;
        if i < layer.neurons() {
            return layer.bias()[i];
        }
        i -= layer.neurons();
    }
    let tw = p.top_weights.rows() * p.top_weights.cols();
    if i < tw {
        return p.top_weights.data()[i];
    }
    p.top_bias[i - tw]
}

pub fn set_param(p: &mut NetworkParams, mut i: usize, v: f64) {
    for layer in &mut p.conv {
        let w = layer.input_dim() * layer.neurons();
        if i < w {
            layer.weights_mut().data_mut()[i] = v;
            return;
        }
        i -= w;
        if i < layer.neurons() {
            layer.bias_mut()[i] = v;
            return;
        }
        i -= layer.neurons();
    }
    let tw = p.top_weights.rows() * p.top_weights.cols();
    if i < tw {
        p.top_weights.data_mut()[i] = v;
        return;
    }
    p.top_bias[i - tw] = v;
}

/// Gradient coordinate in the same flat order as [`get_param`].
pub fn get_grad(g: &crate::nn::network::Gradients, mut i: usize) -> f64 {
    for (w, b) in &g.conv {
        let wn = w.rows() * w.cols();
        if i < wn {
            return w.data()[i];
        }
        i -= wn;
        if i < b.len() {
            return b[i];
        }
        i -= b.len();
    }
    let tw = g.top_weights.rows() * g.top_weights.cols();
    if i < tw {
        return g.top_weights.data()[i];
    }
    g.top_bias[i - tw]
}
