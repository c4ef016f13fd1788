//! On-disk formats: per-run metric CSVs, learning curves, queue snapshots and
//! network parameter snapshots. Reals are written with 13 significant digits.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use freqdyna_core::agents::MetricRow;
use freqdyna_core::diffcore::{Activation, MlpNet};
use freqdyna_core::supervised::LearningCurve;
use freqdyna_core::StateVec;
use serde::{Deserialize, Serialize};

use crate::error::{io_err, HarnessError, Result};

pub const METRIC_COLUMNS: [&str; 6] = ["env_step", "episode_return", "eval_return", "loss", "queue_size", "model_mse"];

pub fn fmt_real(v: f64) -> String {
    format!("{v:.12e}")
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_real).unwrap_or_default()
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> HarnessError + '_ {
    move |source| HarnessError::Csv { path: path.to_path_buf(), source }
}

fn malformed(path: &Path, reason: impl Into<String>) -> HarnessError {
    HarnessError::Format { path: path.to_path_buf(), reason: reason.into() }
}

pub fn write_metrics(path: &Path, rows: &[MetricRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    w.write_record(METRIC_COLUMNS).map_err(csv_err(path))?;
    for r in rows {
        w.write_record([
            r.env_step.to_string(),
            fmt_opt(r.episode_return),
            fmt_opt(r.eval_return),
            fmt_opt(r.loss),
            r.queue_size.to_string(),
            fmt_opt(r.model_mse),
        ])
        .map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

pub fn read_metrics(path: &Path) -> Result<Vec<MetricRow>> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err(path))?;
    let header = r.headers().map_err(csv_err(path))?;
    if header.iter().ne(METRIC_COLUMNS) {
        return Err(malformed(path, "unexpected metric columns"));
    }
    let opt = |s: &str| -> Result<Option<f64>> {
        if s.is_empty() {
            Ok(None)
        } else {
            s.parse().map(Some).map_err(|_| malformed(path, format!("bad number {s:?}")))
        }
    };
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(csv_err(path))?;
        rows.push(MetricRow {
            env_step: rec[0].parse().map_err(|_| malformed(path, "bad env_step"))?,
            episode_return: opt(&rec[1])?,
            eval_return: opt(&rec[2])?,
            loss: opt(&rec[3])?,
            queue_size: rec[4].parse().map_err(|_| malformed(path, "bad queue_size"))?,
            model_mse: opt(&rec[5])?,
        });
    }
    Ok(rows)
}

/// `(env_step, eval_return)` pairs of a metric file.
pub fn read_eval_curve(path: &Path) -> Result<Vec<(u64, f64)>> {
    Ok(read_metrics(path)?.into_iter().filter_map(|r| r.eval_return.map(|v| (r.env_step, v))).collect())
}

pub fn write_learning_curve(path: &Path, curve: &LearningCurve) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    w.write_record(["iteration", "test_rmse"]).map_err(csv_err(path))?;
    for (it, e) in curve.iterations.iter().zip(&curve.rmse) {
        w.write_record([it.to_string(), fmt_real(*e)]).map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

pub fn read_learning_curve(path: &Path) -> Result<Vec<(u64, f64)>> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err(path))?;
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(csv_err(path))?;
        let it = rec.get(0).and_then(|s| s.parse().ok());
        let e = rec.get(1).and_then(|s| s.parse().ok());
        match (it, e) {
            (Some(it), Some(e)) => out.push((it, e)),
            _ => return Err(malformed(path, "expected iteration,test_rmse")),
        }
    }
    Ok(out)
}

/// One state per row under a header of dimension labels.
pub fn write_queue_snapshot(path: &Path, labels: &[&str], states: &[StateVec]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    w.write_record(labels).map_err(csv_err(path))?;
    for s in states {
        if s.len() != labels.len() {
            return Err(malformed(path, "state dimension does not match the labels"));
        }
        w.write_record(s.iter().map(|v| fmt_real(*v))).map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

pub fn read_queue_snapshot(path: &Path) -> Result<Vec<StateVec>> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err(path))?;
    let dim = r.headers().map_err(csv_err(path))?.len();
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(csv_err(path))?;
        let s: Option<StateVec> = rec.iter().map(|v| v.parse().ok()).collect();
        match s {
            Some(s) if s.len() == dim => out.push(s),
            _ => return Err(malformed(path, "bad state row")),
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct LayerJson {
    inputs: usize,
    outputs: usize,
    activation: String,
    /// `outputs` rows of `inputs` weights.
    weights: Vec<Vec<f64>>,
    bias: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct NetJson {
    input_center: Vec<f64>,
    input_scale: Vec<f64>,
    layers: Vec<LayerJson>,
}

fn activation_name(a: Activation) -> &'static str {
    match a {
        Activation::Identity => "identity",
        Activation::Tanh => "tanh",
        Activation::Relu => "relu",
    }
}

fn activation_from(name: &str) -> Option<Activation> {
    match name {
        "identity" => Some(Activation::Identity),
        "tanh" => Some(Activation::Tanh),
        "relu" => Some(Activation::Relu),
        _ => None,
    }
}

fn activation_code(a: Activation) -> u8 {
    match a {
        Activation::Identity => 0,
        Activation::Tanh => 1,
        Activation::Relu => 2,
    }
}

/// Layer matrices in JSON with their shapes. Values round-trip exactly since
/// serde_json prints the shortest representation that parses back.
pub fn write_params_json(path: &Path, net: &MlpNet) -> Result<()> {
    let layers = net
        .layers()
        .iter()
        .enumerate()
        .map(|(l, shape)| LayerJson {
            inputs: shape.inputs,
            outputs: shape.outputs,
            activation: activation_name(shape.activation).to_string(),
            weights: (0..shape.outputs).map(|i| (0..shape.inputs).map(|j| net.weight(l, i, j)).collect()).collect(),
            bias: net.bias(l).to_vec(),
        })
        .collect();
    let doc = NetJson { input_center: net.input_center().to_vec(), input_scale: net.input_scale().to_vec(), layers };
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer(&mut w, &doc).map_err(|source| HarnessError::Json { path: path.to_path_buf(), source })?;
    w.flush().map_err(io_err(path))
}

pub fn read_params_json(path: &Path) -> Result<MlpNet> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    let doc: NetJson =
        serde_json::from_str(&text).map_err(|source| HarnessError::Json { path: path.to_path_buf(), source })?;
    let shapes = doc
        .layers
        .iter()
        .map(|l| {
            activation_from(&l.activation)
                .map(|a| (l.inputs, l.outputs, a))
                .ok_or_else(|| malformed(path, format!("unknown activation {:?}", l.activation)))
        })
        .collect::<Result<Vec<_>>>()?;
    let zeros: Vec<f64> = vec![0.0; shapes.iter().map(|(i, o, _)| i * o + o).sum()];
    let mut net = MlpNet::from_parts(&shapes, zeros)?.with_input_normalization(doc.input_center, doc.input_scale)?;
    for (l, layer) in doc.layers.iter().enumerate() {
        if layer.weights.len() != layer.outputs
            || layer.bias.len() != layer.outputs
            || layer.weights.iter().any(|r| r.len() != layer.inputs)
        {
            return Err(malformed(path, format!("layer {l} does not match its shape")));
        }
        for (i, row) in layer.weights.iter().enumerate() {
            for (j, &w) in row.iter().enumerate() {
                net.set_weight(l, i, j, w);
            }
            net.set_bias(l, i, layer.bias[i]);
        }
    }
    Ok(net)
}

const MAGIC: &[u8; 8] = b"FQDYNET1";

/// Little-endian binary: magic, layer count, `(inputs, outputs, activation)`
/// per layer, input normalization, then the flat parameter vector.
pub fn write_params_bin(path: &Path, net: &MlpNet) -> Result<()> {
    let mut buf = Vec::with_capacity(16 + 8 * net.num_params());
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&(net.layers().len() as u32).to_le_bytes());
    for shape in net.layers() {
        buf.extend_from_slice(&(shape.inputs as u32).to_le_bytes());
        buf.extend_from_slice(&(shape.outputs as u32).to_le_bytes());
        buf.push(activation_code(shape.activation));
    }
    for v in net.input_center().iter().chain(net.input_scale()).chain(net.params()) {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    std::fs::write(path, buf).map_err(io_err(path))
}

pub fn read_params_bin(path: &Path) -> Result<MlpNet> {
    let mut bytes = Vec::new();
    File::open(path).and_then(|mut f| f.read_to_end(&mut bytes)).map_err(io_err(path))?;
    let mut cur = bytes.as_slice();
    let mut take = |n: usize| -> Result<&[u8]> {
        if cur.len() < n {
            return Err(malformed(path, "truncated"));
        }
        let (head, tail) = cur.split_at(n);
        cur = tail;
        Ok(head)
    };
    if take(8)? != MAGIC {
        return Err(malformed(path, "not a parameter snapshot"));
    }
    let u32_at = |b: &[u8]| u32::from_le_bytes(b.try_into().expect("4 bytes")) as usize;
    let layers = u32_at(take(4)?);
    let mut shapes = Vec::with_capacity(layers);
    for _ in 0..layers {
        let inputs = u32_at(take(4)?);
        let outputs = u32_at(take(4)?);
        let activation = match take(1)?[0] {
            0 => Activation::Identity,
            1 => Activation::Tanh,
            2 => Activation::Relu,
            c => return Err(malformed(path, format!("unknown activation code {c}"))),
        };
        shapes.push((inputs, outputs, activation));
    }
    let n_in = shapes.first().map(|s| s.0).ok_or_else(|| malformed(path, "no layers"))?;
    let n_params: usize = shapes.iter().map(|(i, o, _)| i * o + o).sum();
    let mut reals = |n: usize| -> Result<Vec<f64>> {
        Ok(take(8 * n)?.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect())
    };
    let center = reals(n_in)?;
    let scale = reals(n_in)?;
    let params = reals(n_params)?;
    if !cur.is_empty() {
        return Err(malformed(path, "trailing bytes"));
    }
    Ok(MlpNet::from_parts(&shapes, params)?.with_input_normalization(center, scale)?)
}
