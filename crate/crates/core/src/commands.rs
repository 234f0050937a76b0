//! The workflow commands behind the command-line tool, as library
//! functions. Each takes a parsed config and returns a human-readable
//! report; printing and exit codes stay in the binary.
//!
//! Model files record everything prediction needs to reproduce the
//! training-time document pipeline: tokenizer switches, vocabulary
//! references, and (for NB-weighted inputs) the weight vector itself.
//! Vocabulary references are stored as written in the training config
//! and resolved at load time in this order: absolute paths as-is, then
//! relative to the model file's directory, then relative to the working
//! directory.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::baselines::{
    bow_vectorize, linear_train, nb_lm_train, nb_weights, BowKind, BowScheme, LinearLoss,
    LinearModel,
};
use crate::config::{network_spec, tokenizer_options, train_config, Config};
use crate::error::{Error, Result};
use crate::metrics::{error_rate, f_measures, PredictionSet};
use crate::model_io;
use crate::nn::{argmax, sgd_train, top_regions, BranchInput, NetworkParams};
use crate::select::{describe_point, dev_split, evaluate_grid, pick_best, selection_points};
use crate::sparse::SparseVector;
use crate::text::{
    build_vocabulary, load_dataset, tokenize, Document, NGramVocabulary, TokenizerOptions,
    Vocabulary,
};

/// A dataset after tokenization.
struct Corpus {
    tokens: Vec<Vec<String>>,
    labels: Vec<Vec<usize>>,
}

impl Corpus {
    fn len(&self) -> usize {
        self.tokens.len()
    }
}

fn load_corpus(path: &Path, opts: &TokenizerOptions) -> Result<Corpus> {
    let raw = load_dataset(path)?;
    let tokens = raw.iter().map(|d| tokenize(&d.text, opts)).collect();
    let labels = raw.into_iter().map(|d| d.labels).collect();
    Ok(Corpus { tokens, labels })
}

fn subset<T: Clone>(xs: &[T], ixs: &[usize]) -> Vec<T> {
    ixs.iter().map(|&i| xs[i].clone()).collect()
}

/// Class count: the `classes` entry when present, otherwise one past the
/// largest label in the data.
fn class_count(cfg: &Config, labels: &[Vec<usize>]) -> Result<usize> {
    if let Some(k) = cfg.parse_opt("classes")? {
        return Ok(k);
    }
    labels
        .iter()
        .flatten()
        .max()
        .map(|&m| m + 1)
        .ok_or_else(|| Error::data("cannot infer the class count from an empty dataset"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ModelKind {
    Cnn,
    Linear,
    NbLm,
}

impl ModelKind {
    fn as_str(self) -> &'static str {
        match self {
            ModelKind::Cnn => "cnn",
            ModelKind::Linear => "linear",
            ModelKind::NbLm => "nblm",
        }
    }
}

fn model_kind(cfg: &Config) -> Result<ModelKind> {
    match cfg.get("model.kind").unwrap_or("cnn") {
        "cnn" => Ok(ModelKind::Cnn),
        "linear" => Ok(ModelKind::Linear),
        "nblm" => Ok(ModelKind::NbLm),
        other => Err(Error::config(format!(
            "unknown model.kind {other:?} (expected cnn, linear, or nblm)"
        ))),
    }
}

/// True when a single label of 0 marks negative and 1 marks positive;
/// anything else is not a binary task.
fn binary_polarity(labels: &[Vec<usize>]) -> Result<Vec<bool>> {
    labels
        .iter()
        .enumerate()
        .map(|(i, ls)| match ls.as_slice() {
            [0] => Ok(false),
            [1] => Ok(true),
            _ => Err(Error::data(format!(
                "document {i} has labels {ls:?}; NB-weights need exactly one label \
                 of 0 or 1 per document"
            ))),
        })
        .collect()
}

fn ngram_orders(cfg: &Config) -> Result<Vec<usize>> {
    match cfg.get("ngram.orders") {
        None => Ok(vec![1, 2, 3]),
        Some(raw) => raw
            .split(',')
            .map(|p| {
                p.trim().parse().map_err(|_| {
                    Error::config(format!("config entry ngram.orders={raw} does not parse"))
                })
            })
            .collect(),
    }
}

fn load_ngram_vocab(cfg: &Config) -> Result<Option<NGramVocabulary>> {
    cfg.path("ngram.path")
        .map(|p| NGramVocabulary::load(&p))
        .transpose()
}

fn wholedoc_configured(cfg: &Config) -> Result<bool> {
    let count = cfg.branch_count()?;
    Ok((0..count).any(|i| cfg.get(&format!("branch.{i}.input")) == Some("wholedoc")))
}

/// Resolves a path recorded in a model file: absolute as-is, then
/// relative to the model's directory, then relative to the working
/// directory.
fn resolve_ref(model_path: &Path, raw: &str) -> PathBuf {
    let p = Path::new(raw);
    if p.is_absolute() {
        return p.to_path_buf();
    }
    let beside = model_path.parent().unwrap_or(Path::new(".")).join(p);
    if beside.exists() {
        beside
    } else {
        p.to_path_buf()
    }
}

fn meta_get<'a>(meta: &'a [(String, String)], key: &str) -> Option<&'a str> {
    meta.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
}

fn meta_require<'a>(meta: &'a [(String, String)], key: &str) -> Result<&'a str> {
    meta_get(meta, key)
        .ok_or_else(|| Error::data(format!("model file is missing the {key} entry")))
}

/// Tokenizer switches recorded at training time.
fn tokenizer_from_meta(meta: &[(String, String)], model_path: &Path) -> Result<TokenizerOptions> {
    let parse_bool = |key: &str, default: bool| -> Result<bool> {
        match meta_get(meta, key) {
            None => Ok(default),
            Some(raw) => raw.parse().map_err(|_| {
                Error::data(format!("model file entry {key}={raw} does not parse"))
            }),
        }
    };
    let stopwords = match meta_get(meta, "tokenize.stopwords") {
        None => None,
        Some(raw) => {
            let path = resolve_ref(model_path, raw);
            let text = std::fs::read_to_string(&path).map_err(|e| {
                Error::data(format!("cannot read stopword file {}: {e}", path.display()))
            })?;
            Some(
                text.lines()
                    .map(str::trim)
                    .filter(|l| !l.is_empty())
                    .map(str::to_string)
                    .collect(),
            )
        }
    };
    Ok(TokenizerOptions {
        lowercase: parse_bool("tokenize.lowercase", true)?,
        stopwords,
        drop_numbers: parse_bool("tokenize.drop_numbers", false)?,
    })
}

/// The metadata block every trained model records.
fn base_meta(cfg: &Config, kind: ModelKind) -> Result<Vec<(String, String)>> {
    let mut meta = vec![("model.kind".to_string(), kind.as_str().to_string())];
    let mut copy = |key: &str| {
        if let Some(v) = cfg.get(key) {
            meta.push((key.to_string(), v.to_string()));
        }
    };
    copy("data.train");
    copy("tokenize.lowercase");
    copy("tokenize.drop_numbers");
    copy("tokenize.stopwords");
    copy("train.learning_rate");
    copy("train.lambda");
    copy("train.epochs");
    copy("train.minibatch");
    copy("train.seed");
    copy("train.dev_fraction");
    copy("train.halve_every");
    Ok(meta)
}

fn build_documents(
    tokens: &[Vec<String>],
    labels: &[Vec<usize>],
    vocab: &Vocabulary,
    scheme: Option<&BowScheme>,
) -> Vec<Document> {
    tokens
        .iter()
        .zip(labels)
        .map(|(t, ls)| {
            let mut doc = Document::new(vocab.encode(t), ls.clone());
            if let Some(s) = scheme {
                doc.ngram_features = Some(bow_vectorize(t, s));
            }
            doc
        })
        .collect()
}

/// Trains a network on the given documents. When the architecture has a
/// whole-document branch, NB-weights are computed from these documents
/// (and only these, so model selection never sees its dev split).
fn train_cnn(
    cfg: &Config,
    tokens: &[Vec<String>],
    labels: &[Vec<usize>],
    classes: usize,
    vocab: &Vocabulary,
    ngram: Option<&NGramVocabulary>,
) -> Result<(NetworkParams, Option<Vec<f64>>)> {
    let (weights, dim) = if wholedoc_configured(cfg)? {
        let ng = ngram.ok_or_else(|| {
            Error::config(
                "a wholedoc branch needs an n-gram vocabulary (set ngram.path and \
                 run build-vocab)",
            )
        })?;
        let polarity = binary_polarity(labels)?;
        let w = nb_weights(tokens, &polarity, ng)?;
        (Some(w), Some(ng.len()))
    } else {
        (None, None)
    };
    let scheme = match (&weights, ngram) {
        (Some(w), Some(ng)) => Some(BowScheme::nb_binary(ng, w.clone())?),
        _ => None,
    };
    let docs = build_documents(tokens, labels, vocab, scheme.as_ref());
    let spec = network_spec(cfg, vocab.len(), classes, dim)?;
    let tc = train_config(cfg)?;
    let mut params = sgd_train(&docs, &spec, &tc)?;
    params.quantize_f32();
    Ok((params, weights))
}

/// Trains a linear model over bag-of-n-gram vectors.
fn train_linear_model(
    cfg: &Config,
    kind: ModelKind,
    tokens: &[Vec<String>],
    labels: &[Vec<usize>],
    classes: usize,
    ngram: Option<&NGramVocabulary>,
) -> Result<(LinearModel, Option<Vec<f64>>, BowKind, LinearLoss)> {
    let ng = ngram.ok_or_else(|| {
        Error::config("linear models need an n-gram vocabulary (set ngram.path)")
    })?;
    let tc = train_config(cfg)?;
    if kind == ModelKind::NbLm {
        let (mut model, weights) = nb_lm_train(tokens, labels, ng, &tc)?;
        model.quantize_f32();
        return Ok((model, Some(weights), BowKind::NbBinary, LinearLoss::Logistic));
    }
    let bow_kind = BowKind::parse(cfg.get("linear.scheme").unwrap_or("log_count_unit"))?;
    let loss = LinearLoss::parse(cfg.get("linear.loss").unwrap_or("logistic"))?;
    let weights = if bow_kind == BowKind::NbBinary {
        Some(nb_weights(tokens, &binary_polarity(labels)?, ng)?)
    } else {
        None
    };
    let scheme = BowScheme::with_kind(bow_kind, ng, weights.clone())?;
    let xs: Vec<SparseVector> = tokens.iter().map(|t| bow_vectorize(t, &scheme)).collect();
    let mut model = linear_train(&xs, labels, classes, loss, &tc)?;
    model.quantize_f32();
    Ok((model, weights, bow_kind, loss))
}

/// Scores every document, in parallel, preserving order. The earliest
/// failure in document order is the one reported.
fn cnn_scores(params: &NetworkParams, docs: &[Document]) -> Result<Vec<Vec<f64>>> {
    let outcomes: Vec<Result<Vec<f64>>> =
        docs.par_iter().map(|d| params.infer_scores(d)).collect();
    outcomes.into_iter().collect()
}

fn linear_scores(model: &LinearModel, xs: &[SparseVector]) -> Result<Vec<Vec<f64>>> {
    let outcomes: Vec<Result<Vec<f64>>> = xs.par_iter().map(|x| model.scores(x)).collect();
    outcomes.into_iter().collect()
}

/// Fraction of documents whose top-scoring class is not a gold label.
fn misclassification(scores: &[Vec<f64>], labels: &[Vec<usize>]) -> f64 {
    let wrong = scores
        .iter()
        .zip(labels)
        .filter(|(s, ls)| !ls.contains(&argmax(s)))
        .count();
    wrong as f64 / scores.len() as f64
}

/// Builds the word and n-gram vocabularies from the training data.
pub fn cmd_build_vocab(cfg: &Config) -> Result<String> {
    let opts = tokenizer_options(cfg)?;
    let corpus = load_corpus(&cfg.require_path("data.train")?, &opts)?;
    let mut report = String::new();

    let vocab_path = cfg.require_path("vocab.path")?;
    let size = cfg.parse_or("vocab.size", 30000)?;
    let vocab = build_vocabulary(corpus.tokens.iter().map(|t| t.as_slice()), size);
    vocab.save(&vocab_path)?;
    writeln!(report, "wrote {} words to {}", vocab.len(), vocab_path.display()).unwrap();

    if let Some(ngram_path) = cfg.path("ngram.path") {
        let orders = ngram_orders(cfg)?;
        let size = cfg.parse_or("ngram.size", 30000)?;
        let ng = NGramVocabulary::build(corpus.tokens.iter().map(|t| t.as_slice()), &orders, size)?;
        ng.save(&ngram_path)?;
        writeln!(
            report,
            "wrote {} n-grams (orders {:?}) to {}",
            ng.len(),
            orders,
            ngram_path.display()
        )
        .unwrap();
    }
    Ok(report)
}

/// Trains a model on the full training set and writes the model file.
pub fn cmd_train(cfg: &Config) -> Result<String> {
    let opts = tokenizer_options(cfg)?;
    let corpus = load_corpus(&cfg.require_path("data.train")?, &opts)?;
    let classes = class_count(cfg, &corpus.labels)?;
    let kind = model_kind(cfg)?;
    let model_path = cfg.require_path("model.path")?;
    let ngram = load_ngram_vocab(cfg)?;
    let mut meta = base_meta(cfg, kind)?;

    match kind {
        ModelKind::Cnn => {
            let vocab = Vocabulary::load(&cfg.require_path("vocab.path")?)?;
            meta.push(("vocab.path".to_string(), cfg.require("vocab.path")?.to_string()));
            if let Some(raw) = cfg.get("ngram.path") {
                meta.push(("ngram.path".to_string(), raw.to_string()));
            }
            let (params, weights) =
                train_cnn(cfg, &corpus.tokens, &corpus.labels, classes, &vocab, ngram.as_ref())?;
            let extra_vecs = match weights {
                Some(w) => vec![("nb.weights".to_string(), w)],
                None => Vec::new(),
            };
            model_io::save_cnn(&model_path, &params, &meta, &extra_vecs)?;
        }
        ModelKind::Linear | ModelKind::NbLm => {
            let (model, weights, bow_kind, loss) = train_linear_model(
                cfg,
                kind,
                &corpus.tokens,
                &corpus.labels,
                classes,
                ngram.as_ref(),
            )?;
            meta.push(("ngram.path".to_string(), cfg.require("ngram.path")?.to_string()));
            meta.push(("linear.scheme".to_string(), bow_kind.as_str().to_string()));
            meta.push(("linear.loss".to_string(), loss.as_str().to_string()));
            model_io::save_linear(&model_path, &model, weights.as_deref(), &meta)?;
        }
    }
    Ok(format!(
        "trained a {} model on {} documents ({} classes)\nwrote {}\n",
        kind.as_str(),
        corpus.len(),
        classes,
        model_path.display()
    ))
}

/// Everything prediction needs, reconstructed from a model file.
enum LoadedModel {
    Cnn {
        params: NetworkParams,
        vocab: Vocabulary,
        bag: Option<(NGramVocabulary, Vec<f64>)>,
        opts: TokenizerOptions,
    },
    Linear {
        model: LinearModel,
        ngram: NGramVocabulary,
        bow_kind: BowKind,
        nb: Option<Vec<f64>>,
        opts: TokenizerOptions,
    },
}

fn load_model(model_path: &Path) -> Result<LoadedModel> {
    match model_io::file_kind(model_path)? {
        model_io::FileKind::Cnn => {
            let (params, meta, vecs) = model_io::load_cnn(model_path)?;
            let opts = tokenizer_from_meta(&meta, model_path)?;
            let vocab =
                Vocabulary::load(&resolve_ref(model_path, meta_require(&meta, "vocab.path")?))?;
            if vocab.len() != params.spec.vocab_size {
                return Err(Error::data(format!(
                    "vocabulary has {} words but the model was trained with {}",
                    vocab.len(),
                    params.spec.vocab_size
                )));
            }
            let wholedoc_dim = params.spec.branches.iter().find_map(|b| match b.input {
                BranchInput::WholeDoc { dim } => Some(dim),
                _ => None,
            });
            let bag = match wholedoc_dim {
                None => None,
                Some(dim) => {
                    let ng = NGramVocabulary::load(&resolve_ref(
                        model_path,
                        meta_require(&meta, "ngram.path")?,
                    ))?;
                    if ng.len() != dim {
                        return Err(Error::data(format!(
                            "n-gram vocabulary has {} entries but the model was \
                             trained with {dim}",
                            ng.len()
                        )));
                    }
                    let nb = vecs
                        .into_iter()
                        .find(|(name, _)| name == "nb.weights")
                        .map(|(_, w)| w)
                        .ok_or_else(|| {
                            Error::data("model file is missing the nb.weights vector")
                        })?;
                    if nb.len() != dim {
                        return Err(Error::data(format!(
                            "nb.weights has {} entries but the n-gram space has {dim}",
                            nb.len()
                        )));
                    }
                    Some((ng, nb))
                }
            };
            Ok(LoadedModel::Cnn {
                params,
                vocab,
                bag,
                opts,
            })
        }
        model_io::FileKind::Linear => {
            let (model, nb, meta) = model_io::load_linear(model_path)?;
            let opts = tokenizer_from_meta(&meta, model_path)?;
            let ngram = NGramVocabulary::load(&resolve_ref(
                model_path,
                meta_require(&meta, "ngram.path")?,
            ))?;
            if ngram.len() != model.features() {
                return Err(Error::data(format!(
                    "n-gram vocabulary has {} entries but the model scores {}",
                    ngram.len(),
                    model.features()
                )));
            }
            let bow_kind = BowKind::parse(meta_require(&meta, "linear.scheme")?)?;
            Ok(LoadedModel::Linear {
                model,
                ngram,
                bow_kind,
                nb,
                opts,
            })
        }
    }
}

fn score_with_model(loaded: &LoadedModel, data_path: &Path) -> Result<Vec<Vec<f64>>> {
    match loaded {
        LoadedModel::Cnn {
            params,
            vocab,
            bag,
            opts,
        } => {
            let corpus = load_corpus(data_path, opts)?;
            let scheme = bag
                .as_ref()
                .map(|(ng, nb)| BowScheme::nb_binary(ng, nb.clone()))
                .transpose()?;
            let docs = build_documents(&corpus.tokens, &corpus.labels, vocab, scheme.as_ref());
            cnn_scores(params, &docs)
        }
        LoadedModel::Linear {
            model,
            ngram,
            bow_kind,
            nb,
            opts,
        } => {
            let corpus = load_corpus(data_path, opts)?;
            let scheme = BowScheme::with_kind(*bow_kind, ngram, nb.clone())?;
            let xs: Vec<SparseVector> = corpus
                .tokens
                .iter()
                .map(|t| bow_vectorize(t, &scheme))
                .collect();
            linear_scores(model, &xs)
        }
    }
}

/// Scores a dataset with a saved model and writes one line per document:
/// the top class id, a tab, and the scores with six significant digits.
pub fn cmd_predict(cfg: &Config) -> Result<String> {
    let model_path = cfg.require_path("model.path")?;
    let data_path = cfg.require_path("data.test")?;
    let out_path = cfg.require_path("predictions.path")?;
    let loaded = load_model(&model_path)?;
    let scores = score_with_model(&loaded, &data_path)?;
    let mut out = String::new();
    for s in &scores {
        let cols: Vec<String> = s.iter().map(|x| format!("{x:.5e}")).collect();
        writeln!(out, "{}\t{}", argmax(s), cols.join(",")).unwrap();
    }
    std::fs::write(&out_path, out)?;
    Ok(format!(
        "wrote {} predictions to {}\n",
        scores.len(),
        out_path.display()
    ))
}

fn read_predictions(path: &Path) -> Result<Vec<(usize, Vec<f64>)>> {
    let content = std::fs::read_to_string(path)
        .map_err(|e| Error::data(format!("cannot read predictions {}: {e}", path.display())))?;
    let mut out = Vec::new();
    for (i, line) in content.lines().enumerate() {
        let bad = |what: &str| {
            Error::data(format!("predictions line {}: {what}", i + 1))
        };
        let (id, rest) = line
            .split_once('\t')
            .ok_or_else(|| bad("expected <class id><TAB><scores>"))?;
        let id = id.parse().map_err(|_| bad("class id does not parse"))?;
        let scores = rest
            .split(',')
            .map(|p| p.trim().parse().map_err(|_| bad("score does not parse")))
            .collect::<Result<Vec<f64>>>()?;
        out.push((id, scores));
    }
    Ok(out)
}

/// Compares a predictions file against gold labels. The error rate is
/// reported for single-label data; micro- and macro-F always.
pub fn cmd_eval(cfg: &Config) -> Result<String> {
    let preds = read_predictions(&cfg.require_path("predictions.path")?)?;
    let gold = load_dataset(&cfg.require_path("data.test")?)?;
    if preds.len() != gold.len() {
        return Err(Error::data(format!(
            "{} predictions against {} gold documents",
            preds.len(),
            gold.len()
        )));
    }
    if preds.is_empty() {
        return Err(Error::data("nothing to evaluate"));
    }
    let classes = preds
        .iter()
        .map(|(id, _)| *id)
        .chain(gold.iter().flat_map(|d| d.labels.iter().copied()))
        .max()
        .unwrap_or(0)
        + 1;
    let mut set = PredictionSet::new(classes);
    for ((id, _), doc) in preds.iter().zip(&gold) {
        set.push(&[*id], &doc.labels)?;
    }
    let (micro, macro_f) = f_measures(&set);
    let single_label = gold.iter().all(|d| d.labels.len() == 1);

    let mut report = String::new();
    writeln!(report, "{:<14}{}", "documents", preds.len()).unwrap();
    writeln!(report, "{:<14}{}", "classes", classes).unwrap();
    let mut kv = vec![
        ("documents".to_string(), preds.len().to_string()),
        ("classes".to_string(), classes.to_string()),
    ];
    if single_label {
        let pred_ids: Vec<usize> = preds.iter().map(|(id, _)| *id).collect();
        let gold_ids: Vec<usize> = gold.iter().map(|d| d.labels[0]).collect();
        let err = error_rate(&pred_ids, &gold_ids)?;
        writeln!(report, "{:<14}{:.6}", "error_rate", err).unwrap();
        kv.push(("error_rate".to_string(), format!("{err:.6}")));
    }
    writeln!(report, "{:<14}{:.6}", "micro_f", micro).unwrap();
    writeln!(report, "{:<14}{:.6}", "macro_f", macro_f).unwrap();
    kv.push(("micro_f".to_string(), format!("{micro:.6}")));
    kv.push(("macro_f".to_string(), format!("{macro_f:.6}")));
    writeln!(report).unwrap();
    for (k, v) in kv {
        writeln!(report, "{k}={v}").unwrap();
    }
    Ok(report)
}

/// Grid search over the config's `grid.<key>` axes: every point is
/// trained on the training side of a deterministic dev split and scored
/// on the dev side; the winner (smallest dev error, earliest on ties) is
/// retrained on the full training set and saved.
pub fn cmd_select(cfg: &Config) -> Result<String> {
    let points = selection_points(cfg)?;
    let opts = tokenizer_options(cfg)?;
    let corpus = load_corpus(&cfg.require_path("data.train")?, &opts)?;
    let classes = class_count(cfg, &corpus.labels)?;
    let kind = model_kind(cfg)?;
    let base_tc = train_config(cfg)?;
    if base_tc.dev_fraction <= 0.0 {
        return Err(Error::config(
            "model selection needs train.dev_fraction > 0",
        ));
    }
    let (train_ix, dev_ix) = dev_split(corpus.len(), base_tc.dev_fraction, base_tc.seed);
    if dev_ix.is_empty() {
        return Err(Error::data(
            "the training set is too small to hold out development documents",
        ));
    }
    let train_tokens = subset(&corpus.tokens, &train_ix);
    let train_labels = subset(&corpus.labels, &train_ix);
    let dev_tokens = subset(&corpus.tokens, &dev_ix);
    let dev_labels = subset(&corpus.labels, &dev_ix);

    let vocab = match kind {
        ModelKind::Cnn => Some(Vocabulary::load(&cfg.require_path("vocab.path")?)?),
        _ => None,
    };
    let ngram = load_ngram_vocab(cfg)?;

    let errors = evaluate_grid(cfg, &points, |_, point_cfg| match kind {
        ModelKind::Cnn => {
            let vocab = vocab.as_ref().expect("loaded for cnn");
            let (params, weights) = train_cnn(
                point_cfg,
                &train_tokens,
                &train_labels,
                classes,
                vocab,
                ngram.as_ref(),
            )?;
            let scheme = match (&weights, &ngram) {
                (Some(w), Some(ng)) => Some(BowScheme::nb_binary(ng, w.clone())?),
                _ => None,
            };
            let dev_docs = build_documents(&dev_tokens, &dev_labels, vocab, scheme.as_ref());
            let scores = cnn_scores(&params, &dev_docs)?;
            Ok(misclassification(&scores, &dev_labels))
        }
        ModelKind::Linear | ModelKind::NbLm => {
            let (model, weights, bow_kind, _) = train_linear_model(
                point_cfg,
                kind,
                &train_tokens,
                &train_labels,
                classes,
                ngram.as_ref(),
            )?;
            let ng = ngram.as_ref().expect("train_linear_model requires it");
            let scheme = BowScheme::with_kind(bow_kind, ng, weights)?;
            let xs: Vec<SparseVector> = dev_tokens
                .iter()
                .map(|t| bow_vectorize(t, &scheme))
                .collect();
            let scores = linear_scores(&model, &xs)?;
            Ok(misclassification(&scores, &dev_labels))
        }
    })?;
    let best = pick_best(&errors);

    let mut report = String::new();
    writeln!(
        report,
        "evaluated {} grid points on {} dev documents \
         (dev_fraction={}, seed={}, {} training documents)",
        points.len(),
        dev_ix.len(),
        base_tc.dev_fraction,
        base_tc.seed,
        train_ix.len()
    )
    .unwrap();
    for (i, (point, err)) in points.iter().zip(&errors).enumerate() {
        let marker = if i == best { "  <- selected" } else { "" };
        writeln!(
            report,
            "point {i}: {} dev_error={err:.6}{marker}",
            describe_point(point)
        )
        .unwrap();
    }
    writeln!(report, "retraining the selected point on the full training set").unwrap();

    let mut winner = cfg.clone();
    for (key, value) in &points[best] {
        winner.set(key, value);
    }
    let train_report = cmd_train(&winner)?;
    report.push_str(&train_report);
    Ok(report)
}

/// Lists the regions that excite one convolution neuron the most, over
/// the dataset named by `inspect.data` (default: the training set).
pub fn cmd_inspect(cfg: &Config) -> Result<String> {
    let model_path = cfg.require_path("model.path")?;
    if model_io::file_kind(&model_path)? != model_io::FileKind::Cnn {
        return Err(Error::config(
            "inspect reads convolution neurons, which linear models do not have",
        ));
    }
    let (params, meta, _) = model_io::load_cnn(&model_path)?;
    let opts = tokenizer_from_meta(&meta, &model_path)?;
    let data_path = cfg
        .path("inspect.data")
        .or_else(|| cfg.path("data.train"))
        .ok_or_else(|| Error::config("inspect needs inspect.data or data.train"))?;
    let corpus = load_corpus(&data_path, &opts)?;
    let vocab = Vocabulary::load(&resolve_ref(&model_path, meta_require(&meta, "vocab.path")?))?;
    let docs = build_documents(&corpus.tokens, &corpus.labels, &vocab, None);
    let branch = cfg.parse_or("inspect.branch", 0)?;
    let neuron = cfg.parse_or("inspect.neuron", 0)?;
    let count = cfg.parse_or("inspect.count", 10)?;
    let tops = top_regions(&params, &docs, &vocab, branch, neuron, count)?;
    let mut report = format!(
        "top {} regions for branch {branch} neuron {neuron} over {} documents\n",
        tops.len(),
        docs.len()
    );
    for (rank, t) in tops.iter().enumerate() {
        writeln!(
            report,
            "{:>3}  {:>12.6}  doc {:>5} @ {:>4}  {}",
            rank + 1,
            t.activation,
            t.doc,
            t.position,
            t.text
        )
        .unwrap();
    }
    Ok(report)
}
