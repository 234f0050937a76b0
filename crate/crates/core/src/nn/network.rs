//! Network assembly: parallel convolution branches feeding one
//! fully-connected output layer.
//!
//! Each branch enumerates its own region vectors from the document (or
//! consumes the precomputed whole-document n-gram vector), convolves,
//! pools to a fixed number of rows, and optionally response-normalizes.
//! The pooled rows of all branches are concatenated into one feature
//! vector, dropout is applied to it in training mode, and class scores are
//! an affine map of the result.
//!
//! Training minimizes squared error against one-of-K targets in
//! `{-1, +1}`, plus an L2 penalty on weight matrices (never biases).

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::mat::Mat;
use crate::nn::conv::ConvLayer;
use crate::nn::norm::{response_normalize, response_normalize_backward};
use crate::nn::pool::{pool, pool_backward, PoolingSpec};
use crate::regions::{regions, RegionConfig};
use crate::sparse::SparseVector;
use crate::text::Document;

/// What a branch convolves over.
#[derive(Debug, Clone, PartialEq)]
pub enum BranchInput {
    /// Region vectors enumerated from the document's word ids.
    Region(RegionConfig),
    /// The whole-document bag-of-n-gram vector, fed as a single region.
    /// `dim` is the n-gram feature space size.
    WholeDoc { dim: usize },
}

/// One convolution branch.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchSpec {
    pub input: BranchInput,
    /// Number of neurons `m`.
    pub neurons: usize,
    pub pooling: PoolingSpec,
    /// Response-normalize each pooled row.
    pub response_norm: bool,
}

/// Architecture of a network: everything needed to shape its parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkSpec {
    /// Word vocabulary size shared by the region branches.
    pub vocab_size: usize,
    /// Number of classes `K`.
    pub classes: usize,
    pub branches: Vec<BranchSpec>,
    /// Dropout rate on the top-layer input, in `[0, 1)`. Applied in
    /// training mode only.
    pub dropout: f64,
}

impl NetworkSpec {
    pub fn validate(&self) -> Result<()> {
        if self.classes < 1 {
            return Err(Error::config("network needs at least one class"));
        }
        if self.branches.is_empty() {
            return Err(Error::config("network needs at least one branch"));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::config(format!(
                "dropout rate must lie in [0, 1), got {}",
                self.dropout
            )));
        }
        for (i, b) in self.branches.iter().enumerate() {
            if b.neurons < 1 {
                return Err(Error::config(format!("branch {i} needs at least one neuron")));
            }
            if b.pooling.units < 1 {
                return Err(Error::config(format!(
                    "branch {i} needs at least one pooling unit"
                )));
            }
            match &b.input {
                BranchInput::Region(cfg) => cfg.validate()?,
                BranchInput::WholeDoc { .. } => {
                    if b.pooling.units != 1 {
                        return Err(Error::config(format!(
                            "branch {i}: a whole-document branch has a single region and \
                             must use one pooling unit"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Convolution input dimension of branch `b`.
    pub fn branch_input_dim(&self, b: usize) -> usize {
        match &self.branches[b].input {
            BranchInput::Region(cfg) => cfg.input_dim(self.vocab_size),
            BranchInput::WholeDoc { dim } => *dim,
        }
    }

    /// Width of the concatenated pooled feature vector.
    pub fn feature_width(&self) -> usize {
        self.branches
            .iter()
            .map(|b| b.neurons * b.pooling.units)
            .sum()
    }
}

/// A network's parameters together with its architecture.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkParams {
    pub spec: NetworkSpec,
    /// One convolution layer per branch.
    pub conv: Vec<ConvLayer>,
    /// `K x feature_width`.
    pub top_weights: Mat,
    /// One bias per class.
    pub top_bias: Vec<f64>,
}

/// Per-branch intermediate results kept for the backward pass.
#[derive(Debug)]
pub struct BranchCache {
    pub regions: Vec<SparseVector>,
    /// `L x m`, post-rectifier.
    pub conv_act: Mat,
    /// `k x m`, before response normalization.
    pub pooled_raw: Mat,
    pub max_src: Option<Vec<Option<usize>>>,
}

/// Everything the backward pass needs from one forward evaluation.
#[derive(Debug)]
pub struct ForwardCache {
    pub branch: Vec<BranchCache>,
    /// The feature vector the top layer consumed (after dropout).
    pub features: Vec<f64>,
    /// Multiplier applied per feature by dropout: `0` for dropped
    /// features, `1 / keep` for kept ones, `1` everywhere without dropout.
    pub dropout_scale: Vec<f64>,
    pub scores: Vec<f64>,
}

/// Forward evaluation mode. Training mode samples a dropout mask from the
/// given generator; inference applies no dropout.
pub enum Mode<'a> {
    Infer,
    Train { rng: &'a mut ChaCha8Rng },
}

/// Sum of squared differences between scores and targets.
pub fn square_loss(scores: &[f64], target: &[f64]) -> f64 {
    debug_assert_eq!(scores.len(), target.len());
    scores
        .iter()
        .zip(target)
        .map(|(s, t)| (s - t) * (s - t))
        .sum()
}

/// One-of-K target encoding: `+1` for each gold label, `-1` elsewhere.
pub fn target_vector(classes: usize, labels: &[usize]) -> Vec<f64> {
    let mut t = vec![-1.0; classes];
    for &l in labels {
        debug_assert!(l < classes);
        t[l] = 1.0;
    }
    t
}

/// Gradients with the same shapes as the parameters.
#[derive(Debug, Clone)]
pub struct Gradients {
    /// Per branch: input-major weight gradient and bias gradient.
    pub conv: Vec<(Mat, Vec<f64>)>,
    pub top_weights: Mat,
    pub top_bias: Vec<f64>,
}

impl Gradients {
    pub fn zeros_like(params: &NetworkParams) -> Self {
        Gradients {
            conv: params
                .conv
                .iter()
                .map(|c| {
                    (
                        Mat::zeros(c.input_dim(), c.neurons()),
                        vec![0.0; c.neurons()],
                    )
                })
                .collect(),
            top_weights: Mat::zeros(params.top_weights.rows(), params.top_weights.cols()),
            top_bias: vec![0.0; params.top_bias.len()],
        }
    }

    pub fn clear(&mut self) {
        for (w, b) in &mut self.conv {
            w.fill(0.0);
            b.fill(0.0);
        }
        self.top_weights.fill(0.0);
        self.top_bias.fill(0.0);
    }

    pub fn scale(&mut self, s: f64) {
        for (w, b) in &mut self.conv {
            w.scale(s);
            for x in b {
                *x *= s;
            }
        }
        self.top_weights.scale(s);
        for x in &mut self.top_bias {
            *x *= s;
        }
    }

    /// Adds the L2 term `2 lambda W` for every weight matrix. Biases carry
    /// no penalty.
    pub fn add_l2(&mut self, params: &NetworkParams, lambda: f64) {
        if lambda == 0.0 {
            return;
        }
        for ((gw, _), layer) in self.conv.iter_mut().zip(&params.conv) {
            gw.axpy(2.0 * lambda, layer.weights());
        }
        self.top_weights.axpy(2.0 * lambda, &params.top_weights);
    }
}

impl NetworkParams {
    /// Zero-initialized parameters for the architecture.
    pub fn zeros(spec: NetworkSpec) -> Result<Self> {
        spec.validate()?;
        let conv = (0..spec.branches.len())
            .map(|b| ConvLayer::zeros(spec.branch_input_dim(b), spec.branches[b].neurons))
            .collect();
        let top_weights = Mat::zeros(spec.classes, spec.feature_width());
        let top_bias = vec![0.0; spec.classes];
        Ok(NetworkParams {
            spec,
            conv,
            top_weights,
            top_bias,
        })
    }

    fn branch_regions(&self, b: usize, doc: &Document) -> Result<Vec<SparseVector>> {
        match &self.spec.branches[b].input {
            BranchInput::Region(cfg) => Ok(regions(&doc.tokens, cfg, self.spec.vocab_size)),
            BranchInput::WholeDoc { dim } => {
                let features = doc.ngram_features.as_ref().ok_or_else(|| {
                    Error::config(
                        "document carries no n-gram features but the network has a \
                         whole-document branch",
                    )
                })?;
                if features.dim() != *dim {
                    return Err(Error::config(format!(
                        "document n-gram features have dimension {} but the branch expects {}",
                        features.dim(),
                        dim
                    )));
                }
                Ok(vec![features.clone()])
            }
        }
    }

    /// Runs the network on one document. Returns the class scores and the
    /// cache consumed by [`NetworkParams::backward`].
    pub fn forward(&self, doc: &Document, mode: Mode<'_>) -> Result<(Vec<f64>, ForwardCache)> {
        let width = self.spec.feature_width();
        let mut features = Vec::with_capacity(width);
        let mut branch_caches = Vec::with_capacity(self.spec.branches.len());

        for (b, branch) in self.spec.branches.iter().enumerate() {
            let regs = self.branch_regions(b, doc)?;
            let conv_act = self.conv[b].forward(&regs)?;
            let out = pool(&conv_act, &branch.pooling);
            let mut rows = out.pooled.clone();
            if branch.response_norm {
                for s in 0..rows.rows() {
                    response_normalize(rows.row_mut(s));
                }
            }
            features.extend_from_slice(rows.data());
            branch_caches.push(BranchCache {
                regions: regs,
                conv_act,
                pooled_raw: out.pooled,
                max_src: out.max_src,
            });
        }
        debug_assert_eq!(features.len(), width);

        let mut dropout_scale = vec![1.0; width];
        if let Mode::Train { rng } = mode {
            let rate = self.spec.dropout;
            if rate > 0.0 {
                let keep = 1.0 - rate;
                let inv_keep = 1.0 / keep;
                for i in 0..width {
                    if rng.random::<f64>() < keep {
                        dropout_scale[i] = inv_keep;
                    } else {
                        dropout_scale[i] = 0.0;
                    }
                    features[i] *= dropout_scale[i];
                }
            }
        }

        let mut scores = self.top_bias.clone();
        for (k, score) in scores.iter_mut().enumerate() {
            let wrow = self.top_weights.row(k);
            *score += wrow.iter().zip(&features).map(|(w, f)| w * f).sum::<f64>();
        }

        let cache = ForwardCache {
            branch: branch_caches,
            features,
            dropout_scale,
            scores: scores.clone(),
        };
        Ok((scores, cache))
    }

    /// Class scores without dropout.
    pub fn infer_scores(&self, doc: &Document) -> Result<Vec<f64>> {
        Ok(self.forward(doc, Mode::Infer)?.0)
    }

    /// Predicted class: the arg-max score, smallest id on ties.
    pub fn predict(&self, doc: &Document) -> Result<usize> {
        let scores = self.infer_scores(doc)?;
        Ok(argmax(&scores))
    }

    /// Accumulates the gradient of `square_loss(scores, target)` into
    /// `grads`, reusing the sampled dropout mask recorded in `cache`. The
    /// L2 term is not included; see [`Gradients::add_l2`].
    pub fn accumulate_backward(&self, cache: &ForwardCache, target: &[f64], grads: &mut Gradients) {
        let classes = self.spec.classes;
        debug_assert_eq!(target.len(), classes);
        let dscores: Vec<f64> = cache
            .scores
            .iter()
            .zip(target)
            .map(|(s, t)| 2.0 * (s - t))
            .collect();

        let width = cache.features.len();
        let mut dfeatures = vec![0.0; width];
        for (k, &ds) in dscores.iter().enumerate().take(classes) {
            grads.top_bias[k] += ds;
            let gw = grads.top_weights.row_mut(k);
            let w = self.top_weights.row(k);
            for f in 0..width {
                gw[f] += ds * cache.features[f];
                dfeatures[f] += w[f] * ds;
            }
        }
        // Dropout: the same mask and scaling the forward pass applied.
        for (df, sc) in dfeatures.iter_mut().zip(&cache.dropout_scale) {
            *df *= sc;
        }

        let mut offset = 0;
        for (b, branch) in self.spec.branches.iter().enumerate() {
            let bc = &cache.branch[b];
            let m = branch.neurons;
            let units = branch.pooling.units;
            let mut dpooled =
                Mat::from_vec(units, m, dfeatures[offset..offset + units * m].to_vec());
            offset += units * m;

            if branch.response_norm {
                let mut dz = vec![0.0; m];
                for s in 0..units {
                    response_normalize_backward(bc.pooled_raw.row(s), dpooled.row(s), &mut dz);
                    dpooled.row_mut(s).copy_from_slice(&dz);
                }
            }

            let mut dconv = pool_backward(
                &dpooled,
                &branch.pooling,
                bc.conv_act.rows(),
                bc.max_src.as_deref(),
            );
            // Rectifier: zero activation means zero subgradient.
            for l in 0..dconv.rows() {
                let act = bc.conv_act.row(l);
                let row = dconv.row_mut(l);
                for j in 0..m {
                    if act[j] <= 0.0 {
                        row[j] = 0.0;
                    }
                }
            }

            let (gw, gb) = &mut grads.conv[b];
            for (l, region) in bc.regions.iter().enumerate() {
                let drow = dconv.row(l);
                // Max pooling leaves most rows without gradient; skip them.
                if drow.iter().all(|&x| x == 0.0) {
                    continue;
                }
                for (x, d) in gb.iter_mut().zip(drow) {
                    *x += d;
                }
                for (ix, val) in region.iter() {
                    let grow = gw.row_mut(ix);
                    for (g, d) in grow.iter_mut().zip(drow) {
                        *g += val * d;
                    }
                }
            }
        }
    }

    /// Gradient of `loss + lambda * l2_penalty` for one document, under the
    /// dropout mask sampled during the forward pass.
    pub fn backward(&self, cache: &ForwardCache, target: &[f64], lambda: f64) -> Gradients {
        let mut grads = Gradients::zeros_like(self);
        self.accumulate_backward(cache, target, &mut grads);
        grads.add_l2(self, lambda);
        grads
    }

    /// Sum of squared weight-matrix entries (biases excluded), the quantity
    /// scaled by lambda in the training objective.
    pub fn l2_penalty(&self) -> f64 {
        let conv: f64 = self.conv.iter().map(|c| c.weights().squared_norm()).sum();
        conv + self.top_weights.squared_norm()
    }

    /// Mean squared loss over the documents plus `lambda * l2_penalty`,
    /// evaluated without dropout.
    pub fn objective(&self, docs: &[Document], lambda: f64) -> Result<f64> {
        let mut total = 0.0;
        for doc in docs {
            let scores = self.infer_scores(doc)?;
            let target = target_vector(self.spec.classes, &doc.labels);
            total += square_loss(&scores, &target);
        }
        Ok(total / docs.len().max(1) as f64 + lambda * self.l2_penalty())
    }

    /// Rounds every parameter through 32-bit precision, the precision used
    /// by the model file, so that in-memory and reloaded models agree
    /// exactly.
    pub fn quantize_f32(&mut self) {
        for layer in &mut self.conv {
            for x in layer.weights_mut().data_mut() {
                *x = *x as f32 as f64;
            }
            for x in layer.bias_mut() {
                *x = *x as f32 as f64;
            }
        }
        for x in self.top_weights.data_mut() {
            *x = *x as f32 as f64;
        }
        for x in &mut self.top_bias {
            *x = *x as f32 as f64;
        }
    }
}

/// Index of the largest score, smallest index on ties.
pub fn argmax(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] {
            best = i;
        }
    }
    best
}
