//! Model file container: a text header describing the architecture,
//! followed by raw parameter blobs.
//!
//! Layout, shared by both model kinds:
//!
//! ```text
//! tcnn1                          (or lin1 for linear models)
//! key=value                      (architecture, then caller metadata)
//! ...
//! mat <name> <rows> <cols>
//! <rows * cols little-endian 32-bit floats, row-major>
//! ...
//! end
//! ```
//!
//! Each blob line pair is a `mat` header followed by the raw bytes and a
//! terminating newline. Parameters are stored at 32-bit precision; callers
//! that want the in-memory model to equal its reload quantize before
//! saving. Writing is deterministic: the same model and metadata produce
//! identical bytes.

use std::fs;
use std::path::Path;

use crate::baselines::LinearModel;
use crate::error::{Error, Result};
use crate::mat::Mat;
use crate::nn::{BranchInput, BranchSpec, NetworkParams, NetworkSpec, PoolKind, PoolingSpec};
use crate::regions::{RegionConfig, RegionRepr};

/// Header line of network model files.
pub const CNN_MAGIC: &str = "tcnn1";

/// What a model file holds, as announced by its first line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FileKind {
    Cnn,
    Linear,
}

/// Reads just the header line to decide which loader applies.
pub fn file_kind(path: &Path) -> Result<FileKind> {
    use std::io::BufRead;
    let file = fs::File::open(path)
        .map_err(|e| Error::data(format!("cannot open model {}: {e}", path.display())))?;
    let mut line = String::new();
    std::io::BufReader::new(file).read_line(&mut line)?;
    match line.trim_end_matches('\n') {
        CNN_MAGIC => Ok(FileKind::Cnn),
        LINEAR_MAGIC => Ok(FileKind::Linear),
        other => Err(Error::data(format!(
            "unrecognized model header {other:?} in {}",
            path.display()
        ))),
    }
}
/// Header line of linear model files.
pub const LINEAR_MAGIC: &str = "lin1";

fn check_key(key: &str) -> Result<()> {
    if key.is_empty()
        || key.contains(['=', '\n'])
        || key.starts_with("mat ")
        || key == "end"
    {
        return Err(Error::config(format!("invalid metadata key {key:?}")));
    }
    Ok(())
}

fn push_kv(buf: &mut Vec<u8>, key: &str, value: &str) -> Result<()> {
    check_key(key)?;
    if value.contains('\n') {
        return Err(Error::config(format!(
            "metadata value for {key:?} contains a newline"
        )));
    }
    buf.extend_from_slice(key.as_bytes());
    buf.push(b'=');
    buf.extend_from_slice(value.as_bytes());
    buf.push(b'\n');
    Ok(())
}

fn push_mat_data(buf: &mut Vec<u8>, name: &str, rows: usize, cols: usize, data: &[f64]) {
    debug_assert_eq!(data.len(), rows * cols);
    buf.extend_from_slice(format!("mat {name} {rows} {cols}\n").as_bytes());
    for &v in data {
        buf.extend_from_slice(&(v as f32).to_le_bytes());
    }
    buf.push(b'\n');
}

fn push_mat(buf: &mut Vec<u8>, name: &str, m: &Mat) {
    push_mat_data(buf, name, m.rows(), m.cols(), m.data());
}

struct Container {
    magic: String,
    kv: Vec<(String, String)>,
    mats: Vec<(String, Mat)>,
}

fn take_line<'a>(bytes: &'a [u8], pos: &mut usize) -> Result<&'a str> {
    let rest = &bytes[*pos..];
    let nl = rest
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| Error::data("model file ends in the middle of a line"))?;
    let line = std::str::from_utf8(&rest[..nl])
        .map_err(|_| Error::data("model file header is not UTF-8"))?;
    *pos += nl + 1;
    Ok(line)
}

fn read_container(path: &Path) -> Result<Container> {
    let bytes = fs::read(path)?;
    let mut pos = 0;
    let magic = take_line(&bytes, &mut pos)?.to_string();
    let mut kv = Vec::new();
    let mut mats = Vec::new();
    loop {
        let line = take_line(&bytes, &mut pos)?;
        if line == "end" {
            break;
        }
        if let Some(rest) = line.strip_prefix("mat ") {
            let mut parts = rest.split(' ');
            let bad = || Error::data(format!("malformed matrix header {line:?}"));
            let name = parts.next().ok_or_else(bad)?.to_string();
            let rows: usize = parts.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
            let cols: usize = parts.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
            if parts.next().is_some() {
                return Err(bad());
            }
            let bytes_needed = rows
                .checked_mul(cols)
                .and_then(|n| n.checked_mul(4))
                .ok_or_else(bad)?;
            if bytes.len() - pos < bytes_needed + 1 {
                return Err(Error::data(format!(
                    "model file is truncated inside matrix {name:?}"
                )));
            }
            let data: Vec<f64> = bytes[pos..pos + bytes_needed]
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
                .collect();
            pos += bytes_needed;
            if bytes[pos] != b'\n' {
                return Err(Error::data(format!(
                    "matrix {name:?} is not followed by a newline"
                )));
            }
            pos += 1;
            mats.push((name, Mat::from_vec(rows, cols, data)));
        } else if let Some((k, v)) = line.split_once('=') {
            kv.push((k.to_string(), v.to_string()));
        } else {
            return Err(Error::data(format!("unrecognized model file line {line:?}")));
        }
    }
    if pos != bytes.len() {
        return Err(Error::data("model file has trailing bytes after the end marker"));
    }
    Ok(Container { magic, kv, mats })
}

fn spec_to_kv(spec: &NetworkSpec, out: &mut Vec<(String, String)>) {
    out.push(("classes".into(), spec.classes.to_string()));
    out.push(("vocab_size".into(), spec.vocab_size.to_string()));
    out.push(("dropout".into(), spec.dropout.to_string()));
    out.push(("branches".into(), spec.branches.len().to_string()));
    for (i, b) in spec.branches.iter().enumerate() {
        let key = |field: &str| format!("branch.{i}.{field}");
        match &b.input {
            BranchInput::Region(r) => {
                out.push((key("input"), "region".into()));
                out.push((key("region.size"), r.size.to_string()));
                out.push((key("region.stride"), r.stride.to_string()));
                out.push((key("region.repr"), r.repr.as_str().into()));
                out.push((key("region.variable_stride"), r.variable_stride.to_string()));
                out.push((key("region.pad"), r.pad.to_string()));
            }
            BranchInput::WholeDoc { dim } => {
                out.push((key("input"), "wholedoc".into()));
                out.push((key("dim"), dim.to_string()));
            }
        }
        out.push((key("neurons"), b.neurons.to_string()));
        out.push((key("pool.kind"), b.pooling.kind.as_str().into()));
        out.push((key("pool.units"), b.pooling.units.to_string()));
        out.push((key("response_norm"), b.response_norm.to_string()));
    }
}

/// Key-value lookup that remembers which keys were consumed, so the
/// remainder can be handed back as caller metadata.
struct KvReader<'a> {
    kv: &'a [(String, String)],
    consumed: Vec<bool>,
}

impl<'a> KvReader<'a> {
    fn new(kv: &'a [(String, String)]) -> Self {
        KvReader {
            kv,
            consumed: vec![false; kv.len()],
        }
    }

    fn get(&mut self, key: &str) -> Result<&'a str> {
        for (i, (k, v)) in self.kv.iter().enumerate() {
            if k == key {
                self.consumed[i] = true;
                return Ok(v);
            }
        }
        Err(Error::data(format!("model file is missing the {key} entry")))
    }

    fn parse<T: std::str::FromStr>(&mut self, key: &str) -> Result<T> {
        let raw = self.get(key)?;
        raw.parse().map_err(|_| {
            Error::data(format!("model file entry {key}={raw} does not parse"))
        })
    }

    fn rest(self) -> Vec<(String, String)> {
        self.kv
            .iter()
            .zip(self.consumed)
            .filter(|(_, used)| !used)
            .map(|((k, v), _)| (k.clone(), v.clone()))
            .collect()
    }
}

fn spec_from_kv(reader: &mut KvReader) -> Result<NetworkSpec> {
    let classes = reader.parse("classes")?;
    let vocab_size = reader.parse("vocab_size")?;
    let dropout = reader.parse("dropout")?;
    let branch_count: usize = reader.parse("branches")?;
    let mut branches = Vec::with_capacity(branch_count);
    for i in 0..branch_count {
        let key = |field: &str| format!("branch.{i}.{field}");
        let input = match reader.get(&key("input"))? {
            "region" => BranchInput::Region(RegionConfig {
                size: reader.parse(&key("region.size"))?,
                stride: reader.parse(&key("region.stride"))?,
                repr: RegionRepr::parse(reader.get(&key("region.repr"))?)?,
                variable_stride: reader.parse(&key("region.variable_stride"))?,
                pad: reader.parse(&key("region.pad"))?,
            }),
            "wholedoc" => BranchInput::WholeDoc {
                dim: reader.parse(&key("dim"))?,
            },
            other => {
                return Err(Error::data(format!(
                    "unknown branch input kind {other:?}"
                )))
            }
        };
        branches.push(BranchSpec {
            input,
            neurons: reader.parse(&key("neurons"))?,
            pooling: PoolingSpec {
                kind: PoolKind::parse(reader.get(&key("pool.kind"))?)?,
                units: reader.parse(&key("pool.units"))?,
            },
            response_norm: reader.parse(&key("response_norm"))?,
        });
    }
    Ok(NetworkSpec {
        vocab_size,
        classes,
        branches,
        dropout,
    })
}

/// Saves a network model with caller metadata (vocabulary references,
/// tokenizer options, training record) and extra named vectors such as
/// the NB-weights of a whole-document branch. Metadata keys must not
/// collide with the architecture block, and extra vector names must not
/// collide with the parameter matrices.
pub fn save_cnn(
    path: &Path,
    params: &NetworkParams,
    extra: &[(String, String)],
    extra_vecs: &[(String, Vec<f64>)],
) -> Result<()> {
    params.spec.validate()?;
    let mut buf = Vec::new();
    buf.extend_from_slice(CNN_MAGIC.as_bytes());
    buf.push(b'\n');
    let mut kv = Vec::new();
    spec_to_kv(&params.spec, &mut kv);
    for (k, v) in extra {
        kv.push((k.clone(), v.clone()));
    }
    for (k, v) in &kv {
        push_kv(&mut buf, k, v)?;
    }
    for (i, layer) in params.conv.iter().enumerate() {
        push_mat(&mut buf, &format!("branch.{i}.weights"), layer.weights());
        push_mat_data(
            &mut buf,
            &format!("branch.{i}.bias"),
            1,
            layer.bias().len(),
            layer.bias(),
        );
    }
    push_mat(&mut buf, "top.weights", &params.top_weights);
    push_mat_data(&mut buf, "top.bias", 1, params.top_bias.len(), &params.top_bias);
    for (name, data) in extra_vecs {
        if name.starts_with("branch.") || name.starts_with("top.") {
            return Err(Error::config(format!(
                "extra vector name {name:?} collides with the parameter matrices"
            )));
        }
        push_mat_data(&mut buf, name, 1, data.len(), data);
    }
    buf.extend_from_slice(b"end\n");
    fs::write(path, buf)?;
    Ok(())
}

fn take_mat(
    mats: &mut Vec<(String, Mat)>,
    name: &str,
    rows: usize,
    cols: usize,
) -> Result<Mat> {
    let ix = mats
        .iter()
        .position(|(n, _)| n == name)
        .ok_or_else(|| Error::data(format!("model file is missing matrix {name:?}")))?;
    let (_, m) = mats.remove(ix);
    if m.rows() != rows || m.cols() != cols {
        return Err(Error::data(format!(
            "matrix {name:?} has shape {}x{} but the architecture needs {rows}x{cols}",
            m.rows(),
            m.cols()
        )));
    }
    Ok(m)
}

/// Loads a network model, returning the parameters, the caller metadata
/// in file order, and any extra named vectors.
#[allow(clippy::type_complexity)]
pub fn load_cnn(
    path: &Path,
) -> Result<(NetworkParams, Vec<(String, String)>, Vec<(String, Vec<f64>)>)> {
    let mut container = read_container(path)?;
    if container.magic != CNN_MAGIC {
        return Err(Error::data(format!(
            "not a network model file (header {:?}, expected {CNN_MAGIC:?})",
            container.magic
        )));
    }
    let mut reader = KvReader::new(&container.kv);
    let spec = spec_from_kv(&mut reader)?;
    spec.validate()?;
    let mut params = NetworkParams::zeros(spec)?;
    for (i, layer) in params.conv.iter_mut().enumerate() {
        let w = take_mat(
            &mut container.mats,
            &format!("branch.{i}.weights"),
            layer.input_dim(),
            layer.neurons(),
        )?;
        *layer.weights_mut() = w;
        let b = take_mat(&mut container.mats, &format!("branch.{i}.bias"), 1, layer.neurons())?;
        layer.bias_mut().copy_from_slice(b.data());
    }
    params.top_weights = take_mat(
        &mut container.mats,
        "top.weights",
        params.top_weights.rows(),
        params.top_weights.cols(),
    )?;
    let b = take_mat(&mut container.mats, "top.bias", 1, params.top_bias.len())?;
    params.top_bias.copy_from_slice(b.data());
    let extra_vecs = container
        .mats
        .into_iter()
        .map(|(name, m)| {
            if m.rows() != 1 {
                return Err(Error::data(format!(
                    "extra vector {name:?} has {} rows, expected 1",
                    m.rows()
                )));
            }
            Ok((name, m.data().to_vec()))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((params, reader.rest(), extra_vecs))
}

/// Saves a linear model, with the NB-weight vector alongside when the
/// model scores NB-weighted inputs.
pub fn save_linear(
    path: &Path,
    model: &LinearModel,
    nb_weights: Option<&[f64]>,
    extra: &[(String, String)],
) -> Result<()> {
    let mut buf = Vec::new();
    buf.extend_from_slice(LINEAR_MAGIC.as_bytes());
    buf.push(b'\n');
    let mut kv = vec![
        ("classes".to_string(), model.classes().to_string()),
        ("features".to_string(), model.features().to_string()),
        ("lambda".to_string(), model.lambda.to_string()),
    ];
    for (k, v) in extra {
        kv.push((k.clone(), v.clone()));
    }
    for (k, v) in &kv {
        push_kv(&mut buf, k, v)?;
    }
    push_mat(&mut buf, "linear.weights", &model.weights);
    push_mat_data(&mut buf, "linear.bias", 1, model.bias.len(), &model.bias);
    if let Some(w) = nb_weights {
        push_mat_data(&mut buf, "nb.weights", 1, w.len(), w);
    }
    buf.extend_from_slice(b"end\n");
    fs::write(path, buf)?;
    Ok(())
}

/// Loads a linear model: the model, the NB-weight vector if present, and
/// the caller metadata in file order.
#[allow(clippy::type_complexity)]
pub fn load_linear(path: &Path) -> Result<(LinearModel, Option<Vec<f64>>, Vec<(String, String)>)> {
    let mut container = read_container(path)?;
    if container.magic != LINEAR_MAGIC {
        return Err(Error::data(format!(
            "not a linear model file (header {:?}, expected {LINEAR_MAGIC:?})",
            container.magic
        )));
    }
    let mut reader = KvReader::new(&container.kv);
    let classes: usize = reader.parse("classes")?;
    let features: usize = reader.parse("features")?;
    let lambda: f64 = reader.parse("lambda")?;
    let weights = take_mat(&mut container.mats, "linear.weights", classes, features)?;
    let bias = take_mat(&mut container.mats, "linear.bias", 1, classes)?;
    let nb = match container
        .mats
        .iter()
        .position(|(n, _)| n == "nb.weights")
    {
        Some(_) => Some(take_mat(&mut container.mats, "nb.weights", 1, features)?.data().to_vec()),
        None => None,
    };
    if let Some((name, _)) = container.mats.first() {
        return Err(Error::data(format!(
            "model file contains an unexpected matrix {name:?}"
        )));
    }
    let model = LinearModel {
        weights,
        bias: bias.data().to_vec(),
        lambda,
    };
    Ok((model, nb, reader.rest()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{init_params, Mode};
    use crate::nn::test_nets::{doc_from_ixs, tiny_spec};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn quantized_tiny_params(seed: u64) -> NetworkParams {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = init_params(&tiny_spec(10, 2), &mut rng).unwrap();
        params.quantize_f32();
        params
    }

    #[test]
    fn cnn_round_trip_preserves_params_and_metadata() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.tcnn");
        let params = quantized_tiny_params(5);
        let extra = vec![
            ("vocab.path".to_string(), "words.vocab".to_string()),
            ("train.seed".to_string(), "5".to_string()),
        ];
        save_cnn(&path, &params, &extra, &[]).unwrap();
        let (loaded, meta, vecs) = load_cnn(&path).unwrap();
        assert_eq!(loaded, params);
        assert_eq!(meta, extra);
        assert!(vecs.is_empty());
    }

    #[test]
    fn saving_twice_gives_identical_bytes() {
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a");
        let b = dir.path().join("b");
        let params = quantized_tiny_params(7);
        save_cnn(&a, &params, &[], &[]).unwrap();
        save_cnn(&b, &params, &[], &[]).unwrap();
        assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
        // Reload and save again: still the same bytes, because reload is
        // exact for 32-bit-quantized parameters.
        let (loaded, _, _) = load_cnn(&a).unwrap();
        let c = dir.path().join("c");
        save_cnn(&c, &loaded, &[], &[]).unwrap();
        assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&c).unwrap());
    }

    #[test]
    fn reloaded_models_predict_identically() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.tcnn");
        let params = quantized_tiny_params(9);
        save_cnn(&path, &params, &[], &[]).unwrap();
        let (loaded, _, _) = load_cnn(&path).unwrap();
        for seed in 0..5u64 {
            let doc = doc_from_ixs(&[seed as usize % 10, 3, 8, 1], &[0]);
            let (a, _) = params.forward(&doc, Mode::Infer).unwrap();
            let (b, _) = loaded.forward(&doc, Mode::Infer).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn unquantized_saves_load_as_their_quantization() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.tcnn");
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let params = init_params(&tiny_spec(10, 2), &mut rng).unwrap();
        save_cnn(&path, &params, &[], &[]).unwrap();
        let (loaded, _, _) = load_cnn(&path).unwrap();
        let mut quantized = params;
        quantized.quantize_f32();
        assert_eq!(loaded, quantized);
    }

    #[test]
    fn header_bytes_are_as_documented() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.tcnn");
        let params = quantized_tiny_params(1);
        save_cnn(&path, &params, &[], &[]).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        let text = String::from_utf8_lossy(&bytes);
        assert!(text.starts_with("tcnn1\nclasses=2\nvocab_size=10\ndropout=0\nbranches=1\n"));
        assert!(text.contains("mat branch.0.weights 20 3\n"));
        assert!(bytes.ends_with(b"end\n"));
    }

    #[test]
    fn truncation_and_corruption_are_data_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.tcnn");
        let params = quantized_tiny_params(3);
        save_cnn(&path, &params, &[], &[]).unwrap();
        let bytes = std::fs::read(&path).unwrap();

        let cut = dir.path().join("cut");
        std::fs::write(&cut, &bytes[..bytes.len() / 2]).unwrap();
        assert!(matches!(load_cnn(&cut).unwrap_err(), Error::Data(_)));

        let trailing = dir.path().join("trailing");
        let mut extended = bytes.clone();
        extended.extend_from_slice(b"junk");
        std::fs::write(&trailing, extended).unwrap();
        assert!(matches!(load_cnn(&trailing).unwrap_err(), Error::Data(_)));

        let wrong_magic = dir.path().join("magic");
        let mut swapped = bytes;
        swapped[0] = b'x';
        std::fs::write(&wrong_magic, swapped).unwrap();
        assert!(matches!(load_cnn(&wrong_magic).unwrap_err(), Error::Data(_)));
    }

    #[test]
    fn metadata_keys_are_validated() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.tcnn");
        let params = quantized_tiny_params(3);
        let bad = vec![("a=b".to_string(), "c".to_string())];
        assert!(matches!(
            save_cnn(&path, &params, &bad, &[]).unwrap_err(),
            Error::Config(_)
        ));
        let bad = vec![("a".to_string(), "two\nlines".to_string())];
        assert!(matches!(
            save_cnn(&path, &params, &bad, &[]).unwrap_err(),
            Error::Config(_)
        ));
    }

    #[test]
    fn extra_vectors_round_trip_and_cannot_shadow_parameters() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.tcnn");
        let params = quantized_tiny_params(13);
        let vecs = vec![("nb.weights".to_string(), vec![0.5, -0.25, 2.0])];
        save_cnn(&path, &params, &[], &vecs).unwrap();
        let (loaded, _, got) = load_cnn(&path).unwrap();
        assert_eq!(loaded, params);
        assert_eq!(got, vecs);

        let clash = vec![("top.weights".to_string(), vec![1.0])];
        assert!(matches!(
            save_cnn(&path, &params, &[], &clash).unwrap_err(),
            Error::Config(_)
        ));
    }

    #[test]
    fn linear_round_trip_with_and_without_nb_weights() {
        let dir = tempfile::tempdir().unwrap();
        let mut model = LinearModel::zeros(2, 4, 0.25);
        model.weights.set(0, 1, 0.5);
        model.weights.set(1, 3, -1.5);
        model.bias[0] = 0.125;
        model.quantize_f32();

        let plain = dir.path().join("plain.lin");
        save_linear(&plain, &model, None, &[]).unwrap();
        let (loaded, nb, meta) = load_linear(&plain).unwrap();
        assert_eq!(loaded, model);
        assert_eq!(nb, None);
        assert!(meta.is_empty());

        let weighted = dir.path().join("weighted.lin");
        let nb_src: Vec<f64> = vec![0.5, -0.25, 0.0, 2.0];
        let extra = vec![("scheme".to_string(), "nb_binary".to_string())];
        save_linear(&weighted, &model, Some(&nb_src), &extra).unwrap();
        let (loaded, nb, meta) = load_linear(&weighted).unwrap();
        assert_eq!(loaded, model);
        assert_eq!(nb.unwrap(), nb_src);
        assert_eq!(meta, extra);
    }

    #[test]
    fn model_kinds_do_not_cross_load() {
        let dir = tempfile::tempdir().unwrap();
        let cnn_path = dir.path().join("model.tcnn");
        save_cnn(&cnn_path, &quantized_tiny_params(3), &[], &[]).unwrap();
        assert!(matches!(load_linear(&cnn_path).unwrap_err(), Error::Data(_)));

        let lin_path = dir.path().join("model.lin");
        save_linear(&lin_path, &LinearModel::zeros(2, 2, 0.0), None, &[]).unwrap();
        assert!(matches!(load_cnn(&lin_path).unwrap_err(), Error::Data(_)));
    }
}
