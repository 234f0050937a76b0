//! Experiment configuration: a flat key=value text file.
//!
//! The format is one `key=value` pair per line, with `#` comment lines
//! and blank lines ignored and whitespace trimmed around both sides.
//! There is no nesting: parallel branches use numbered prefixes
//! (`branch.0.size=3`), and model selection declares candidate lists as
//! `grid.<key>=v1,v2,...`, each naming the base key it overrides. Flat
//! files diff cleanly, which is the point: a config is the experiment's
//! record.
//!
//! Relative paths in a config resolve against the directory containing
//! the config file, so an experiment directory can be moved as a unit.
//!
//! Key reference (defaults in parentheses):
//!
//! ```text
//! data.train, data.test            dataset paths
//! tokenize.lowercase (true)        tokenizer switches
//! tokenize.drop_numbers (false)
//! tokenize.stopwords               optional stopword file, one word per line
//! vocab.path, vocab.size           word vocabulary file and size cap
//! ngram.path, ngram.orders, ngram.size   n-gram vocabulary (bag features)
//! classes                          number of classes
//! model.kind (cnn)                 cnn | linear | nblm
//! model.path                       model file to write or read
//! dropout (0)                      dropout rate on the top-layer input
//! branch.<i>.input (region)        region | wholedoc
//! branch.<i>.repr (seq)            seq | bow
//! branch.<i>.size                  region size, required for region branches
//! branch.<i>.stride (1)
//! branch.<i>.variable_stride (false)
//! branch.<i>.pad (true)
//! branch.<i>.neurons               required
//! branch.<i>.pool (max)            max | average
//! branch.<i>.pool_units (1)
//! branch.<i>.response_norm (false)
//! linear.scheme (log_count_unit)   log_count_unit | binary_unit | nb_binary
//! linear.loss (logistic)           logistic | square
//! train.learning_rate              required for training commands
//! train.lambda (0)
//! train.epochs (30)
//! train.minibatch (100)
//! train.seed (1)
//! train.dev_fraction (0.1)
//! train.halve_every                optional epoch interval
//! predictions.path                 output of predict, input of eval
//! inspect.branch (0), inspect.neuron (0), inspect.count (10)
//! grid.<key>                       selection candidates for <key>
//! ```

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::nn::{BranchInput, BranchSpec, NetworkSpec, PoolKind, PoolingSpec, TrainConfig};
use crate::regions::{RegionConfig, RegionRepr};
use crate::text::TokenizerOptions;

/// A parsed configuration: ordered entries plus a unique-key index.
#[derive(Debug, Clone)]
pub struct Config {
    base: PathBuf,
    entries: Vec<(String, String)>,
    index: HashMap<String, usize>,
}

impl Config {
    /// Parses configuration text. `base` is the directory relative paths
    /// resolve against.
    pub fn parse(text: &str, base: impl Into<PathBuf>) -> Result<Self> {
        let mut entries = Vec::new();
        let mut index = HashMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::config(format!("line {}: expected key=value, got {line:?}", lineno + 1))
            })?;
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            if key.is_empty() {
                return Err(Error::config(format!("line {}: empty key", lineno + 1)));
            }
            if index.contains_key(&key) {
                return Err(Error::config(format!(
                    "line {}: duplicate key {key}",
                    lineno + 1
                )));
            }
            index.insert(key.clone(), entries.len());
            entries.push((key, value));
        }
        Ok(Config {
            base: base.into(),
            entries,
            index,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(format!("cannot read config {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(".")).to_path_buf();
        Self::parse(&text, base)
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.index.get(key).map(|&i| self.entries[i].1.as_str())
    }

    pub fn require(&self, key: &str) -> Result<&str> {
        self.get(key)
            .ok_or_else(|| Error::config(format!("config is missing the {key} entry")))
    }

    fn parse_value<T: std::str::FromStr>(key: &str, raw: &str) -> Result<T> {
        raw.parse()
            .map_err(|_| Error::config(format!("config entry {key}={raw} does not parse")))
    }

    pub fn parse_opt<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>> {
        self.get(key)
            .map(|raw| Self::parse_value(key, raw))
            .transpose()
    }

    pub fn parse_or<T: std::str::FromStr>(&self, key: &str, default: T) -> Result<T> {
        Ok(self.parse_opt(key)?.unwrap_or(default))
    }

    pub fn require_parse<T: std::str::FromStr>(&self, key: &str) -> Result<T> {
        Self::parse_value(key, self.require(key)?)
    }

    /// The value of `key` as a path, resolved against the config's base
    /// directory when relative.
    pub fn path(&self, key: &str) -> Option<PathBuf> {
        self.get(key).map(|v| {
            let p = Path::new(v);
            if p.is_absolute() {
                p.to_path_buf()
            } else {
                self.base.join(p)
            }
        })
    }

    pub fn require_path(&self, key: &str) -> Result<PathBuf> {
        self.require(key)?;
        Ok(self.path(key).expect("key just checked"))
    }

    pub fn base(&self) -> &Path {
        &self.base
    }

    /// Sets or replaces an entry. Used by grid expansion and flag
    /// overrides; new keys append at the end.
    pub fn set(&mut self, key: &str, value: &str) {
        match self.index.get(key) {
            Some(&i) => self.entries[i].1 = value.to_string(),
            None => {
                self.index.insert(key.to_string(), self.entries.len());
                self.entries.push((key.to_string(), value.to_string()));
            }
        }
    }

    pub fn entries(&self) -> impl Iterator<Item = (&str, &str)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    /// Selection axes in file order: each `grid.<key>` entry becomes
    /// `(<key>, candidates)` with candidates split on commas.
    pub fn grid_axes(&self) -> Result<Vec<(String, Vec<String>)>> {
        let mut axes = Vec::new();
        for (key, value) in &self.entries {
            if let Some(target) = key.strip_prefix("grid.") {
                let candidates: Vec<String> =
                    value.split(',').map(|v| v.trim().to_string()).collect();
                if candidates.iter().any(|c| c.is_empty()) {
                    return Err(Error::config(format!(
                        "grid axis {key} has an empty candidate"
                    )));
                }
                axes.push((target.to_string(), candidates));
            }
        }
        Ok(axes)
    }

    /// Number of configured branches. Branch indices must be contiguous
    /// from 0.
    pub fn branch_count(&self) -> Result<usize> {
        let mut seen = Vec::new();
        for (key, _) in &self.entries {
            if let Some(rest) = key.strip_prefix("branch.") {
                if let Some((ix, _)) = rest.split_once('.') {
                    let ix: usize = ix.parse().map_err(|_| {
                        Error::config(format!("bad branch index in config key {key}"))
                    })?;
                    if !seen.contains(&ix) {
                        seen.push(ix);
                    }
                }
            }
        }
        let count = seen.len();
        seen.sort_unstable();
        if seen.iter().enumerate().any(|(want, &got)| want != got) {
            return Err(Error::config(format!(
                "branch indices must be contiguous from 0, found {seen:?}"
            )));
        }
        Ok(count)
    }
}

/// Tokenizer switches from the config, loading the stopword file when
/// one is named.
pub fn tokenizer_options(cfg: &Config) -> Result<TokenizerOptions> {
    let stopwords = match cfg.path("tokenize.stopwords") {
        Some(path) => {
            let text = std::fs::read_to_string(&path).map_err(|e| {
                Error::config(format!("cannot read stopword file {}: {e}", path.display()))
            })?;
            Some(
                text.lines()
                    .map(str::trim)
                    .filter(|l| !l.is_empty())
                    .map(str::to_string)
                    .collect(),
            )
        }
        None => None,
    };
    Ok(TokenizerOptions {
        lowercase: cfg.parse_or("tokenize.lowercase", true)?,
        stopwords,
        drop_numbers: cfg.parse_or("tokenize.drop_numbers", false)?,
    })
}

/// Training hyper-parameters from the config.
pub fn train_config(cfg: &Config) -> Result<TrainConfig> {
    let tc = TrainConfig {
        learning_rate: cfg.require_parse("train.learning_rate")?,
        l2_lambda: cfg.parse_or("train.lambda", 0.0)?,
        epochs: cfg.parse_or("train.epochs", 30)?,
        minibatch: cfg.parse_or("train.minibatch", 100)?,
        seed: cfg.parse_or("train.seed", 1)?,
        dev_fraction: cfg.parse_or("train.dev_fraction", 0.1)?,
        halve_every: cfg.parse_opt("train.halve_every")?,
    };
    tc.validate()?;
    Ok(tc)
}

/// Builds the network architecture from the numbered branch entries.
/// `wholedoc_dim` is the n-gram feature dimension, needed only when a
/// branch reads whole-document features.
pub fn network_spec(
    cfg: &Config,
    vocab_size: usize,
    classes: usize,
    wholedoc_dim: Option<usize>,
) -> Result<NetworkSpec> {
    let count = cfg.branch_count()?;
    if count == 0 {
        return Err(Error::config(
            "a network needs at least one branch.<i>. group",
        ));
    }
    let mut branches = Vec::with_capacity(count);
    for i in 0..count {
        let key = |field: &str| format!("branch.{i}.{field}");
        let input = match cfg.get(&key("input")).unwrap_or("region") {
            "region" => BranchInput::Region(RegionConfig {
                size: cfg.require_parse(&key("size"))?,
                stride: cfg.parse_or(&key("stride"), 1)?,
                repr: RegionRepr::parse(cfg.get(&key("repr")).unwrap_or("seq"))?,
                variable_stride: cfg.parse_or(&key("variable_stride"), false)?,
                pad: cfg.parse_or(&key("pad"), true)?,
            }),
            "wholedoc" => BranchInput::WholeDoc {
                dim: wholedoc_dim.ok_or_else(|| {
                    Error::config(format!(
                        "branch {i} reads whole-document features but no n-gram \
                         vocabulary is configured (set ngram.path)"
                    ))
                })?,
            },
            other => {
                return Err(Error::config(format!(
                    "branch {i} has unknown input kind {other:?} (expected region or wholedoc)"
                )))
            }
        };
        branches.push(BranchSpec {
            input,
            neurons: cfg.require_parse(&key("neurons"))?,
            pooling: PoolingSpec {
                kind: PoolKind::parse(cfg.get(&key("pool")).unwrap_or("max"))?,
                units: cfg.parse_or(&key("pool_units"), 1)?,
            },
            response_norm: cfg.parse_or(&key("response_norm"), false)?,
        });
    }
    let spec = NetworkSpec {
        vocab_size,
        classes,
        branches,
        dropout: cfg.parse_or("dropout", 0.0)?,
    };
    spec.validate()?;
    Ok(spec)
}
