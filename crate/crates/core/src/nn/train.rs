//! Seeded stochastic gradient descent on the square-loss objective.
//!
//! The run is a pure function of (seed, data, architecture): one ChaCha
//! generator seeded from the config drives initialization, the per-epoch
//! shuffle, and the dropout masks, in that order. Weights start from a
//! zero-mean Gaussian with standard deviation 0.01, biases from zero.
//!
//! Each minibatch step averages the per-example gradients and applies
//!
//! ```text
//! W <- W * (1 - 2 lr lambda) - lr * grad    (weight matrices)
//! b <- b - lr * grad                        (biases, no decay)
//! ```
//!
//! which is exactly one gradient step on `mean loss + lambda |W|^2`. The
//! decay form keeps the regularizer's dense update separate from the
//! sparse data gradient.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::nn::network::{square_loss, target_vector, Gradients, Mode, NetworkParams, NetworkSpec};
use crate::text::Document;

/// Standard deviation of the weight initialization Gaussian.
pub const INIT_STDDEV: f64 = 0.01;

/// Hyper-parameters of one training run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    /// Step size. Zero is accepted as a degenerate no-op step.
    pub learning_rate: f64,
    /// L2 coefficient on weight matrices.
    pub l2_lambda: f64,
    pub epochs: usize,
    pub minibatch: usize,
    pub seed: u64,
    /// Fraction of the training set held out by model selection.
    pub dev_fraction: f64,
    /// Halve the learning rate after every this many epochs.
    pub halve_every: Option<usize>,
}

impl TrainConfig {
    pub fn new(learning_rate: f64, epochs: usize, seed: u64) -> Self {
        TrainConfig {
            learning_rate,
            l2_lambda: 0.0,
            epochs,
            minibatch: 100,
            seed,
            dev_fraction: 0.1,
            halve_every: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.learning_rate.is_finite() || self.learning_rate < 0.0 {
            return Err(Error::config(format!(
                "learning rate must be finite and non-negative, got {}",
                self.learning_rate
            )));
        }
        if !self.l2_lambda.is_finite() || self.l2_lambda < 0.0 {
            return Err(Error::config(format!(
                "L2 coefficient must be finite and non-negative, got {}",
                self.l2_lambda
            )));
        }
        if self.epochs < 1 {
            return Err(Error::config("training needs at least one epoch"));
        }
        if self.minibatch < 1 {
            return Err(Error::config("minibatch size must be at least 1"));
        }
        if !(0.0..1.0).contains(&self.dev_fraction) {
            return Err(Error::config(format!(
                "dev fraction must lie in [0, 1), got {}",
                self.dev_fraction
            )));
        }
        if self.halve_every == Some(0) {
            return Err(Error::config("halving interval must be at least 1 epoch"));
        }
        Ok(())
    }

    pub(crate) fn effective_lr(&self, epoch: usize) -> f64 {
        match self.halve_every {
            Some(every) => self.learning_rate / f64::powi(2.0, (epoch / every) as i32),
            None => self.learning_rate,
        }
    }
}

/// Draws initial parameters from the generator: per branch the weight
/// matrix in storage order, then the top weights; biases stay zero.
pub fn init_params(spec: &NetworkSpec, rng: &mut ChaCha8Rng) -> Result<NetworkParams> {
    let mut params = NetworkParams::zeros(spec.clone())?;
    let normal = Normal::new(0.0, INIT_STDDEV).expect("valid stddev");
    for layer in &mut params.conv {
        for w in layer.weights_mut().data_mut() {
            *w = normal.sample(rng);
        }
    }
    for w in params.top_weights.data_mut() {
        *w = normal.sample(rng);
    }
    Ok(params)
}

fn apply_update(params: &mut NetworkParams, grads: &Gradients, lr: f64, lambda: f64) {
    let decay = 1.0 - 2.0 * lr * lambda;
    for (layer, (gw, gb)) in params.conv.iter_mut().zip(&grads.conv) {
        if lambda > 0.0 {
            layer.weights_mut().scale(decay);
        }
        layer.weights_mut().axpy(-lr, gw);
        for (b, g) in layer.bias_mut().iter_mut().zip(gb) {
            *b -= lr * g;
        }
    }
    if lambda > 0.0 {
        params.top_weights.scale(decay);
    }
    params.top_weights.axpy(-lr, &grads.top_weights);
    for (b, g) in params.top_bias.iter_mut().zip(&grads.top_bias) {
        *b -= lr * g;
    }
}

/// Trains a fresh network on the documents. Fully deterministic given the
/// seed. Aborts with a training error if the objective becomes non-finite.
pub fn sgd_train(docs: &[Document], spec: &NetworkSpec, cfg: &TrainConfig) -> Result<NetworkParams> {
    spec.validate()?;
    cfg.validate()?;
    if docs.is_empty() {
        return Err(Error::data("cannot train on an empty dataset"));
    }
    for (i, doc) in docs.iter().enumerate() {
        if let Some(&l) = doc.labels.iter().find(|&&l| l >= spec.classes) {
            return Err(Error::data(format!(
                "document {i} has label {l} but the network has {} classes",
                spec.classes
            )));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut params = init_params(spec, &mut rng)?;
    let mut grads = Gradients::zeros_like(&params);
    let targets: Vec<Vec<f64>> = docs
        .iter()
        .map(|d| target_vector(spec.classes, &d.labels))
        .collect();
    let mut order: Vec<usize> = (0..docs.len()).collect();

    for epoch in 0..cfg.epochs {
        let lr = cfg.effective_lr(epoch);
        order.shuffle(&mut rng);
        for chunk in order.chunks(cfg.minibatch) {
            grads.clear();
            let mut batch_loss = 0.0;
            for &i in chunk {
                let (scores, cache) = params.forward(&docs[i], Mode::Train { rng: &mut rng })?;
                batch_loss += square_loss(&scores, &targets[i]);
                params.accumulate_backward(&cache, &targets[i], &mut grads);
            }
            if !batch_loss.is_finite() {
                return Err(Error::train(format!(
                    "objective became non-finite in epoch {epoch} (learning rate {lr}); \
                     training diverged, lower the learning rate"
                )));
            }
            grads.scale(1.0 / chunk.len() as f64);
            apply_update(&mut params, &grads, lr, cfg.l2_lambda);
        }
    }
    Ok(params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::network::BranchInput;
    use crate::nn::pool::{PoolKind, PoolingSpec};
    use crate::nn::test_nets::{doc_from_ixs, tiny_spec};
    use crate::regions::{RegionConfig, RegionRepr};

    fn tiny_docs() -> Vec<Document> {
        vec![
            doc_from_ixs(&[0, 1, 2, 3], &[0]),
            doc_from_ixs(&[4, 5, 6], &[1]),
            doc_from_ixs(&[7, 8, 9, 0, 1], &[0]),
            doc_from_ixs(&[2, 4, 6, 8], &[1]),
        ]
    }

    #[test]
    fn zero_epochs_is_rejected() {
        let spec = tiny_spec(10, 2);
        let mut cfg = TrainConfig::new(0.1, 1, 7);
        cfg.epochs = 0;
        let err = sgd_train(&tiny_docs(), &spec, &cfg).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn zero_learning_rate_keeps_initialization() {
        let spec = tiny_spec(10, 2);
        let cfg = TrainConfig::new(0.0, 3, 7);
        let trained = sgd_train(&tiny_docs(), &spec, &cfg).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let init = init_params(&spec, &mut rng).unwrap();
        assert_eq!(trained, init);
    }

    #[test]
    fn one_small_full_batch_step_decreases_the_objective() {
        let spec = tiny_spec(10, 2);
        let docs = vec![doc_from_ixs(&[0, 3, 5, 7], &[1])];
        let lambda = 0.01;
        let mut cfg = TrainConfig::new(1e-3, 1, 11);
        cfg.l2_lambda = lambda;
        cfg.minibatch = docs.len();

        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let init = init_params(&spec, &mut rng).unwrap();
        let before = init.objective(&docs, lambda).unwrap();
        let after_params = sgd_train(&docs, &spec, &cfg).unwrap();
        let after = after_params.objective(&docs, lambda).unwrap();
        assert!(
            after < before,
            "objective did not decrease: {before} -> {after}"
        );
    }

    #[test]
    fn same_seed_gives_bit_identical_parameters() {
        let spec = tiny_spec(10, 2);
        let mut cfg = TrainConfig::new(0.05, 3, 42);
        cfg.minibatch = 2;
        let a = sgd_train(&tiny_docs(), &spec, &cfg).unwrap();
        let b = sgd_train(&tiny_docs(), &spec, &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn different_seeds_give_different_parameters() {
        let spec = tiny_spec(10, 2);
        let a = sgd_train(&tiny_docs(), &spec, &TrainConfig::new(0.05, 2, 1)).unwrap();
        let b = sgd_train(&tiny_docs(), &spec, &TrainConfig::new(0.05, 2, 2)).unwrap();
        assert_ne!(a, b);
    }

    #[test]
    fn out_of_range_labels_are_rejected() {
        let spec = tiny_spec(10, 2);
        let docs = vec![doc_from_ixs(&[0, 1], &[2])];
        let err = sgd_train(&docs, &spec, &TrainConfig::new(0.1, 1, 0)).unwrap_err();
        assert!(matches!(err, Error::Data(_)));
    }

    #[test]
    fn empty_dataset_is_rejected() {
        let spec = tiny_spec(10, 2);
        let err = sgd_train(&[], &spec, &TrainConfig::new(0.1, 1, 0)).unwrap_err();
        assert!(matches!(err, Error::Data(_)));
    }

    #[test]
    fn divergence_aborts_with_a_training_error() {
        // An absurd learning rate blows the parameters up within a few
        // steps; training must stop with a diagnostic instead of returning
        // non-finite parameters.
        let spec = tiny_spec(10, 2);
        let mut cfg = TrainConfig::new(1e12, 50, 3);
        cfg.minibatch = 1;
        match sgd_train(&tiny_docs(), &spec, &cfg) {
            Err(Error::Train(msg)) => assert!(msg.contains("non-finite")),
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn learning_rate_halving_changes_the_run() {
        let spec = tiny_spec(10, 2);
        let mut plain = TrainConfig::new(0.1, 4, 5);
        plain.minibatch = 2;
        let mut halved = plain.clone();
        halved.halve_every = Some(2);
        let a = sgd_train(&tiny_docs(), &spec, &plain).unwrap();
        let b = sgd_train(&tiny_docs(), &spec, &halved).unwrap();
        assert_ne!(a, b);
    }

    #[test]
    fn dropout_training_is_deterministic_too() {
        let mut spec = tiny_spec(10, 2);
        spec.dropout = 0.5;
        let mut cfg = TrainConfig::new(0.05, 2, 9);
        cfg.minibatch = 2;
        let a = sgd_train(&tiny_docs(), &spec, &cfg).unwrap();
        let b = sgd_train(&tiny_docs(), &spec, &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn trains_multi_branch_networks() {
        let spec = NetworkSpec {
            vocab_size: 10,
            classes: 2,
            branches: vec![
                crate::nn::network::BranchSpec {
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
                    response_norm: true,
                },
                crate::nn::network::BranchSpec {
                    input: BranchInput::Region(RegionConfig {
                        size: 3,
                        stride: 2,
                        repr: RegionRepr::Bow,
                        variable_stride: false,
                        pad: true,
                    }),
                    neurons: 2,
                    pooling: PoolingSpec {
                        kind: PoolKind::Average,
                        units: 1,
                    },
                    response_norm: false,
                },
            ],
            dropout: 0.0,
        };
        let mut cfg = TrainConfig::new(0.05, 2, 13);
        cfg.minibatch = 2;
        let params = sgd_train(&tiny_docs(), &spec, &cfg).unwrap();
        assert_eq!(params.conv.len(), 2);
        assert!(params.top_weights.data().iter().all(|x| x.is_finite()));
    }
}
