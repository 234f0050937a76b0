//! Bag-of-n-gram baselines: document vectorization schemes, NB-weights,
//! and seeded linear classifiers.
//!
//! Three vectorizations of a document's n-gram counts are supported:
//! `log(x+1)` components scaled to unit length, binary components scaled
//! to unit length, and NB-weighted binary components left unscaled. The
//! last one doubles as the whole-document input of a parallel network
//! branch. Linear models train with plain seeded SGD under logistic or
//! square loss, one classifier per class (one-vs-rest), sharing the
//! update rule of the network trainer: averaged minibatch gradients,
//! L2 decay on weights only.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::mat::Mat;
use crate::nn::argmax;
use crate::nn::TrainConfig;
use crate::sparse::SparseVector;
use crate::text::NGramVocabulary;

/// How a document's n-gram counts become vector components.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BowKind {
    /// `log(count+1)`, then scaled to unit L2 length.
    LogCountUnit,
    /// 1 per present n-gram, then scaled to unit L2 length.
    BinaryUnit,
    /// 1 per present n-gram, multiplied by its NB-weight, no scaling.
    NbBinary,
}

impl BowKind {
    pub fn as_str(self) -> &'static str {
        match self {
            BowKind::LogCountUnit => "log_count_unit",
            BowKind::BinaryUnit => "binary_unit",
            BowKind::NbBinary => "nb_binary",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "log_count_unit" => Ok(BowKind::LogCountUnit),
            "binary_unit" => Ok(BowKind::BinaryUnit),
            "nb_binary" => Ok(BowKind::NbBinary),
            other => Err(Error::config(format!(
                "unknown bag-of-n-gram scheme {other:?} \
                 (expected log_count_unit, binary_unit, or nb_binary)"
            ))),
        }
    }
}

/// A vectorization scheme bound to its feature vocabulary.
#[derive(Debug, Clone)]
pub struct BowScheme<'a> {
    kind: BowKind,
    vocab: &'a NGramVocabulary,
    nb_weights: Option<Vec<f64>>,
}

impl<'a> BowScheme<'a> {
    pub fn log_count_unit(vocab: &'a NGramVocabulary) -> Self {
        BowScheme {
            kind: BowKind::LogCountUnit,
            vocab,
            nb_weights: None,
        }
    }

    pub fn binary_unit(vocab: &'a NGramVocabulary) -> Self {
        BowScheme {
            kind: BowKind::BinaryUnit,
            vocab,
            nb_weights: None,
        }
    }

    pub fn nb_binary(vocab: &'a NGramVocabulary, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != vocab.len() {
            return Err(Error::config(format!(
                "NB-weight vector has {} entries but the vocabulary has {}",
                weights.len(),
                vocab.len()
            )));
        }
        Ok(BowScheme {
            kind: BowKind::NbBinary,
            vocab,
            nb_weights: Some(weights),
        })
    }

    pub fn with_kind(
        kind: BowKind,
        vocab: &'a NGramVocabulary,
        nb_weights: Option<Vec<f64>>,
    ) -> Result<Self> {
        match kind {
            BowKind::LogCountUnit => Ok(Self::log_count_unit(vocab)),
            BowKind::BinaryUnit => Ok(Self::binary_unit(vocab)),
            BowKind::NbBinary => {
                let weights = nb_weights.ok_or_else(|| {
                    Error::config("the nb_binary scheme needs an NB-weight vector")
                })?;
                Self::nb_binary(vocab, weights)
            }
        }
    }

    pub fn kind(&self) -> BowKind {
        self.kind
    }

    pub fn vocab(&self) -> &NGramVocabulary {
        self.vocab
    }

    pub fn dim(&self) -> usize {
        self.vocab.len()
    }

    pub fn nb_weights(&self) -> Option<&[f64]> {
        self.nb_weights.as_deref()
    }
}

fn unit_normalize(v: SparseVector) -> SparseVector {
    let norm = v.squared_norm().sqrt();
    if norm > 0.0 {
        v.map_values(|x| x / norm)
    } else {
        v
    }
}

/// The document's feature vector under the scheme. A document with no
/// in-vocabulary n-grams yields the zero vector, left unnormalized.
pub fn bow_vectorize(tokens: &[String], scheme: &BowScheme) -> SparseVector {
    let counts = scheme.vocab.doc_counts(tokens);
    match scheme.kind {
        BowKind::LogCountUnit => unit_normalize(counts.map_values(|x| (x + 1.0).ln())),
        BowKind::BinaryUnit => unit_normalize(counts.map_values(|_| 1.0)),
        BowKind::NbBinary => {
            let weights = scheme
                .nb_weights
                .as_deref()
                .expect("nb_binary schemes carry weights by construction");
            let pairs = counts.iter().map(|(ix, _)| (ix, weights[ix]));
            SparseVector::from_pairs(counts.dim(), pairs).expect("indices already in range")
        }
    }
}

/// Per-feature log-ratio of smoothed class-conditional presence rates,
///
/// ```text
/// w_f = ln (1 + #{positive docs containing f}) / (2 + #positive docs)
///     - ln (1 + #{negative docs containing f}) / (2 + #negative docs)
/// ```
///
/// computed as a difference of logs so that swapping the two classes
/// negates every weight exactly. Counts are document-level presence, not
/// token frequency.
pub fn nb_weights(
    docs: &[Vec<String>],
    positive: &[bool],
    vocab: &NGramVocabulary,
) -> Result<Vec<f64>> {
    if docs.len() != positive.len() {
        return Err(Error::config(format!(
            "{} documents but {} polarity flags",
            docs.len(),
            positive.len()
        )));
    }
    let pos_docs = positive.iter().filter(|&&p| p).count();
    let neg_docs = docs.len() - pos_docs;
    if pos_docs == 0 || neg_docs == 0 {
        return Err(Error::data(
            "NB-weights need at least one document of each class",
        ));
    }
    let mut pos_present = vec![0u64; vocab.len()];
    let mut neg_present = vec![0u64; vocab.len()];
    for (tokens, &is_pos) in docs.iter().zip(positive) {
        let counts = if is_pos {
            &mut pos_present
        } else {
            &mut neg_present
        };
        for (ix, _) in vocab.doc_counts(tokens).iter() {
            counts[ix] += 1;
        }
    }
    let weight = |present: u64, total: usize| ((1 + present) as f64 / (2 + total) as f64).ln();
    Ok((0..vocab.len())
        .map(|i| weight(pos_present[i], pos_docs) - weight(neg_present[i], neg_docs))
        .collect())
}

/// Loss driving a linear classifier's SGD.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinearLoss {
    Logistic,
    Square,
}

impl LinearLoss {
    pub fn as_str(self) -> &'static str {
        match self {
            LinearLoss::Logistic => "logistic",
            LinearLoss::Square => "square",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "logistic" => Ok(LinearLoss::Logistic),
            "square" => Ok(LinearLoss::Square),
            other => Err(Error::config(format!(
                "unknown linear loss {other:?} (expected logistic or square)"
            ))),
        }
    }

    /// Loss and its derivative in the score, for a ±1 target.
    fn loss_and_dscore(self, score: f64, y: f64) -> (f64, f64) {
        match self {
            LinearLoss::Square => {
                let d = score - y;
                (d * d, 2.0 * d)
            }
            LinearLoss::Logistic => {
                // ln(1+e^t) with t = -ys, kept overflow-free by splitting
                // off the positive part.
                let t = -y * score;
                let loss = t.max(0.0) + (-t.abs()).exp().ln_1p();
                let sigmoid_t = if t >= 0.0 {
                    1.0 / (1.0 + (-t).exp())
                } else {
                    let e = t.exp();
                    e / (1.0 + e)
                };
                (loss, -y * sigmoid_t)
            }
        }
    }
}

/// One linear scorer per class over a shared sparse feature space.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    /// Class-by-feature weights.
    pub weights: Mat,
    pub bias: Vec<f64>,
    /// The L2 coefficient the model was trained with.
    pub lambda: f64,
}

impl LinearModel {
    pub fn zeros(classes: usize, features: usize, lambda: f64) -> Self {
        LinearModel {
            weights: Mat::zeros(classes, features),
            bias: vec![0.0; classes],
            lambda,
        }
    }

    pub fn classes(&self) -> usize {
        self.weights.rows()
    }

    pub fn features(&self) -> usize {
        self.weights.cols()
    }

    pub fn scores(&self, x: &SparseVector) -> Result<Vec<f64>> {
        if x.dim() != self.features() {
            return Err(Error::config(format!(
                "feature vector has dimension {} but the model expects {}",
                x.dim(),
                self.features()
            )));
        }
        Ok((0..self.classes())
            .map(|k| self.bias[k] + x.dot_dense(self.weights.row(k)))
            .collect())
    }

    pub fn predict(&self, x: &SparseVector) -> Result<usize> {
        Ok(argmax(&self.scores(x)?))
    }

    /// Rounds every parameter through 32-bit precision, the model file's
    /// storage width, so the in-memory model equals its reload.
    pub fn quantize_f32(&mut self) {
        for w in self.weights.data_mut() {
            *w = *w as f32 as f64;
        }
        for b in &mut self.bias {
            *b = *b as f32 as f64;
        }
    }
}

/// Trains one-vs-rest linear classifiers with seeded SGD. Weights start
/// at zero (the objective is convex, so no symmetry needs breaking) and
/// `epochs = 0` returns that initialization unchanged. The minibatch
/// update matches the network trainer: averaged gradients, then
/// `W <- W (1 - 2 lr lambda) - lr g` on weights and a plain step on
/// biases.
pub fn linear_train(
    xs: &[SparseVector],
    labels: &[Vec<usize>],
    classes: usize,
    loss: LinearLoss,
    cfg: &TrainConfig,
) -> Result<LinearModel> {
    // Zero epochs is legal here; borrow the remaining field checks with
    // the epoch count floored to one.
    let mut floored = cfg.clone();
    floored.epochs = floored.epochs.max(1);
    floored.validate()?;
    if classes < 1 {
        return Err(Error::config("a linear model needs at least one class"));
    }
    if xs.is_empty() {
        return Err(Error::data("cannot train on an empty dataset"));
    }
    if xs.len() != labels.len() {
        return Err(Error::config(format!(
            "{} feature vectors but {} label sets",
            xs.len(),
            labels.len()
        )));
    }
    let features = xs[0].dim();
    for (i, x) in xs.iter().enumerate() {
        if x.dim() != features {
            return Err(Error::config(format!(
                "document {i} has feature dimension {} but document 0 has {features}",
                x.dim()
            )));
        }
    }
    for (i, ls) in labels.iter().enumerate() {
        if let Some(&l) = ls.iter().find(|&&l| l >= classes) {
            return Err(Error::data(format!(
                "document {i} has label {l} but the model has {classes} classes"
            )));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut model = LinearModel::zeros(classes, features, cfg.l2_lambda);
    let mut grad_w = Mat::zeros(classes, features);
    let mut grad_b = vec![0.0; classes];
    let targets: Vec<Vec<f64>> = labels
        .iter()
        .map(|ls| {
            (0..classes)
                .map(|k| if ls.contains(&k) { 1.0 } else { -1.0 })
                .collect()
        })
        .collect();
    let mut order: Vec<usize> = (0..xs.len()).collect();

    for epoch in 0..cfg.epochs {
        let lr = cfg.effective_lr(epoch);
        order.shuffle(&mut rng);
        for chunk in order.chunks(cfg.minibatch) {
            grad_w.fill(0.0);
            grad_b.iter_mut().for_each(|g| *g = 0.0);
            let mut batch_loss = 0.0;
            for &i in chunk {
                let scores = model.scores(&xs[i])?;
                for k in 0..classes {
                    let (l, d) = loss.loss_and_dscore(scores[k], targets[i][k]);
                    batch_loss += l;
                    grad_b[k] += d;
                    let row = grad_w.row_mut(k);
                    for (ix, v) in xs[i].iter() {
                        row[ix] += d * v;
                    }
                }
            }
            if !batch_loss.is_finite() {
                return Err(Error::train(format!(
                    "objective became non-finite in epoch {epoch} (learning rate {lr}); \
                     training diverged, lower the learning rate"
                )));
            }
            let inv = 1.0 / chunk.len() as f64;
            if cfg.l2_lambda > 0.0 {
                model.weights.scale(1.0 - 2.0 * lr * cfg.l2_lambda);
            }
            grad_w.scale(inv);
            model.weights.axpy(-lr, &grad_w);
            for (b, g) in model.bias.iter_mut().zip(&grad_b) {
                *b -= lr * g * inv;
            }
        }
    }
    Ok(model)
}

/// Logistic regression over NB-weighted binary bag-of-n-gram vectors.
/// Binary tasks only: every document must carry exactly the label 0 or
/// the label 1, with class 1 as the positive class. Returns the model
/// together with the NB-weight vector, which prediction needs to
/// vectorize unseen documents.
pub fn nb_lm_train(
    docs: &[Vec<String>],
    labels: &[Vec<usize>],
    vocab: &NGramVocabulary,
    cfg: &TrainConfig,
) -> Result<(LinearModel, Vec<f64>)> {
    let mut positive = Vec::with_capacity(docs.len());
    for (i, ls) in labels.iter().enumerate() {
        match ls.as_slice() {
            [0] => positive.push(false),
            [1] => positive.push(true),
            _ => {
                return Err(Error::data(format!(
                    "document {i} has labels {ls:?}; this model needs exactly one \
                     label of 0 or 1 per document"
                )))
            }
        }
    }
    let weights = nb_weights(docs, &positive, vocab)?;
    let scheme = BowScheme::nb_binary(vocab, weights.clone())?;
    let xs: Vec<SparseVector> = docs.iter().map(|t| bow_vectorize(t, &scheme)).collect();
    let model = linear_train(&xs, labels, 2, LinearLoss::Logistic, cfg)?;
    Ok((model, weights))
}


#[cfg(test)]
mod proptests {
    use super::*;
    use proptest::prelude::*;

    fn arb_corpus() -> impl Strategy<Value = (Vec<Vec<String>>, Vec<bool>)> {
        let word = prop::sample::select(vec!["a", "b", "c", "d", "e"]);
        let doc = prop::collection::vec(word, 0..8)
            .prop_map(|ws| ws.into_iter().map(str::to_string).collect::<Vec<_>>());
        prop::collection::vec((doc, any::<bool>()), 2..20)
            .prop_map(|pairs| pairs.into_iter().unzip())
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn unit_schemes_produce_unit_vectors((docs, _) in arb_corpus()) {
            let vocab = NGramVocabulary::build(
                docs.iter().map(|d| d.as_slice()), &[1, 2], usize::MAX).unwrap();
            for doc in &docs {
                for scheme in [BowScheme::log_count_unit(&vocab), BowScheme::binary_unit(&vocab)] {
                    let v = bow_vectorize(doc, &scheme);
                    if !v.is_empty() {
                        prop_assert!((v.squared_norm() - 1.0).abs() < 1e-9);
                    }
                }
            }
        }

        #[test]
        fn unigram_vectors_ignore_token_order((docs, _) in arb_corpus()) {
            let vocab = NGramVocabulary::build(
                docs.iter().map(|d| d.as_slice()), &[1], usize::MAX).unwrap();
            let scheme = BowScheme::log_count_unit(&vocab);
            for doc in &docs {
                let mut reversed = doc.clone();
                reversed.reverse();
                prop_assert_eq!(
                    bow_vectorize(doc, &scheme),
                    bow_vectorize(&reversed, &scheme)
                );
            }
        }

        #[test]
        fn label_swap_negates_weights((docs, positive) in arb_corpus()) {
            let vocab = NGramVocabulary::build(
                docs.iter().map(|d| d.as_slice()), &[1], usize::MAX).unwrap();
            prop_assume!(positive.iter().any(|&p| p) && positive.iter().any(|&p| !p));
            prop_assume!(!vocab.is_empty());
            let w = nb_weights(&docs, &positive, &vocab).unwrap();
            let flipped: Vec<bool> = positive.iter().map(|p| !p).collect();
            let v = nb_weights(&docs, &flipped, &vocab).unwrap();
            for (a, b) in w.iter().zip(&v) {
                prop_assert_eq!(*a, -b);
            }
        }
    }
}
