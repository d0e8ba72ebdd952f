//! Two-level FBS detection: a per-packet classifier built from a stateful
//! recurrent branch and an attention branch, followed by a logistic trace
//! classifier over aggregate features of the packet verdicts.

#![allow(clippy::needless_range_loop)]

use std::collections::BTreeMap;

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::featurize::{FeatureMatrix, FeatureRow, Window, WindowSet};
use crate::model::{Label, Layer, MessageKind, Prediction};
use crate::numkernel::attention::{
    attended_backward, attended_forward, attention_backward, attention_forward, AttendedCache,
    AttentionCache,
};
use crate::numkernel::ops::{
    dense_backward, dense_forward, mse_loss, mse_loss_backward, sigmoid, sigmoid_grad,
};
use crate::numkernel::{LstmCell, LstmStepCache, OutputActivation, ParamSet, Tensor};

pub const PACKET_MODEL_TYPE: &str = "fbs_packet_v1";
pub const TRACE_MODEL_TYPE: &str = "fbs_trace_v1";

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PacketConfig {
    pub len_seq: usize,
    pub hidden: usize,
    pub lr: f64,
    pub epochs: usize,
    pub seed: u64,
}

impl PacketConfig {
    /// Defaults per layer: sequence length 12 for NAS and 100 for RRC.
    /// Learning rates are tuned per layer; plain SGD with per-window
    /// updates needs a larger step than framework defaults to converge
    /// within the epoch budget.
    pub fn for_layer(layer: Layer) -> PacketConfig {
        match layer {
            Layer::Nas => PacketConfig {
                len_seq: 12,
                hidden: 64,
                lr: 0.2,
                epochs: 40,
                seed: 1,
            },
            Layer::Rrc => PacketConfig {
                len_seq: 100,
                hidden: 64,
                lr: 0.3,
                epochs: 30,
                seed: 1,
            },
        }
    }
}

/// Per-packet binary classifier. The stateful branch carries hidden and
/// cell state across consecutive windows of one trace and resets at trace
/// boundaries; the attention branch is stateless per window. Both
/// recurrent branches run their cell output through a sigmoid.
#[derive(Debug, Clone)]
pub struct PacketModel {
    pub layer: Layer,
    pub config: PacketConfig,
    pub input_dim: usize,
    /// Per-column input scale, 1/(column max code + 1).
    pub input_scale: Vec<f64>,
    pub params: ParamSet,
    trained: bool,
}

fn stateful_cell(input: usize, hidden: usize) -> LstmCell {
    LstmCell::new(input, hidden, OutputActivation::Sigmoid)
}

fn attender_cell(input: usize, hidden: usize) -> LstmCell {
    LstmCell::new(input, hidden, OutputActivation::Sigmoid)
}

pub(crate) struct WindowForward {
    caches_a: Vec<LstmStepCache>,
    caches_b: Vec<LstmStepCache>,
    states_b: Tensor,
    attn: Vec<AttentionCache>,
    attended: Vec<AttendedCache>,
    head_inputs: Vec<Vec<f64>>,
    head_pre: Vec<f64>,
    pub probs: Vec<f64>,
    pub state_out: (Vec<f64>, Vec<f64>),
}

pub(crate) fn window_forward(
    params: &ParamSet,
    input_dim: usize,
    hidden: usize,
    xs: &[Vec<f64>],
    state_in: &(Vec<f64>, Vec<f64>),
) -> Result<WindowForward> {
    let cell_a = stateful_cell(input_dim, hidden);
    let cell_b = attender_cell(input_dim, hidden);
    let t_len = xs.len();

    let caches_a = cell_a.forward_seq(params, "stateful", xs, &state_in.0, &state_in.1)?;
    let zeros = vec![0.0; hidden];
    let caches_b = cell_b.forward_seq(params, "attender", xs, &zeros, &zeros)?;

    let mut states_b = Tensor::zeros(&[t_len, hidden]);
    for (t, cache) in caches_b.iter().enumerate() {
        states_b.row_mut(t).copy_from_slice(&cache.h);
    }

    let mut attn = Vec::with_capacity(t_len);
    let mut attended = Vec::with_capacity(t_len);
    let mut head_inputs = Vec::with_capacity(t_len);
    let mut head_pre = Vec::with_capacity(t_len);
    let mut probs = Vec::with_capacity(t_len);
    for t in 0..t_len {
        let att = attention_forward(&states_b, &caches_b[t].h)?;
        let combined = attended_forward(params, "combine", &att.context, &caches_b[t].h)?;
        let mut input = Vec::with_capacity(2 * hidden);
        input.extend_from_slice(&caches_a[t].h);
        input.extend_from_slice(&combined.output);
        let pre = dense_forward(params, "head", &input)?[0];
        probs.push(sigmoid(pre));
        head_pre.push(pre);
        head_inputs.push(input);
        attn.push(att);
        attended.push(combined);
    }

    let state_out = match caches_a.last() {
        Some(last) => (last.h.clone(), last.c.clone()),
        None => state_in.clone(),
    };
    Ok(WindowForward {
        caches_a,
        caches_b,
        states_b,
        attn,
        attended,
        head_inputs,
        head_pre,
        probs,
        state_out,
    })
}

/// Backward through one window given dL/dprob per step. Gradients stop at
/// the window boundary; the carried state only forwards values.
pub(crate) fn window_backward(
    params: &mut ParamSet,
    input_dim: usize,
    hidden: usize,
    fwd: &WindowForward,
    dprobs: &[f64],
) {
    let cell_a = stateful_cell(input_dim, hidden);
    let cell_b = attender_cell(input_dim, hidden);
    let t_len = fwd.probs.len();

    let mut dh_a = vec![vec![0.0; hidden]; t_len];
    let mut dh_b = vec![vec![0.0; hidden]; t_len];
    let mut dstates_b = Tensor::zeros(&[t_len, hidden]);

    for t in 0..t_len {
        let dpre = dprobs[t] * sigmoid_grad(fwd.probs[t]);
        let dinput = dense_backward(params, "head", &fwd.head_inputs[t], &[dpre]);
        dh_a[t]
            .iter_mut()
            .zip(dinput[..hidden].iter())
            .for_each(|(a, b)| *a += b);
        let dcombined = &dinput[hidden..];
        let (dcontext, dquery_state) =
            attended_backward(params, "combine", &fwd.attended[t], dcombined);
        let (dquery_attn, dstates) = attention_backward(&fwd.states_b, &fwd.attn[t], &dcontext);
        for (acc, d) in dh_b[t]
            .iter_mut()
            .zip(dquery_state.iter().zip(dquery_attn.iter()))
        {
            *acc += d.0 + d.1;
        }
        for (acc, d) in dstates_b.values.iter_mut().zip(dstates.values.iter()) {
            *acc += d;
        }
    }
    for t in 0..t_len {
        for (acc, d) in dh_b[t].iter_mut().zip(dstates_b.row(t).iter()) {
            *acc += d;
        }
    }

    cell_a.backward_seq(params, "stateful", &fwd.caches_a, &dh_a);
    cell_b.backward_seq(params, "attender", &fwd.caches_b, &dh_b);
    let _ = fwd.head_pre.len();
}

fn scale_window(window: &Window, scales: &[f64]) -> Vec<Vec<f64>> {
    window
        .codes
        .iter()
        .map(|row| {
            row.iter()
                .zip(scales.iter())
                .map(|(&c, &s)| c as f64 * s)
                .collect()
        })
        .collect()
}

impl PacketModel {
    pub fn new(layer: Layer, input_dim: usize, input_scale: Vec<f64>, config: PacketConfig) -> PacketModel {
        let mut rng = <ChaCha8Rng as rand::SeedableRng>::seed_from_u64(config.seed);
        let mut params = ParamSet::new();
        stateful_cell(input_dim, config.hidden).init_params(&mut params, "stateful", &mut rng);
        attender_cell(input_dim, config.hidden).init_params(&mut params, "attender", &mut rng);
        params.insert_init("combine.w", &[config.hidden, 2 * config.hidden], 2 * config.hidden, &mut rng);
        params.insert("combine.b", Tensor::zeros(&[config.hidden]));
        params.insert_init("head.w", &[1, 2 * config.hidden], 2 * config.hidden, &mut rng);
        params.insert("head.b", Tensor::zeros(&[1]));
        PacketModel {
            layer,
            config,
            input_dim,
            input_scale,
            params,
            trained: false,
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "format_version": 1,
            "model_type": PACKET_MODEL_TYPE,
            "layer": self.layer,
            "config": self.config,
            "input_dim": self.input_dim,
            "input_scale": self.input_scale,
            "params": self.params.to_json(),
        })
    }

    pub fn from_json(value: &serde_json::Value) -> Result<PacketModel> {
        if value["model_type"] != PACKET_MODEL_TYPE {
            return Err(Error::Parse(format!(
                "expected model_type {PACKET_MODEL_TYPE}, got {}",
                value["model_type"]
            )));
        }
        Ok(PacketModel {
            layer: serde_json::from_value(value["layer"].clone())?,
            config: serde_json::from_value(value["config"].clone())?,
            input_dim: serde_json::from_value(value["input_dim"].clone())?,
            input_scale: serde_json::from_value(value["input_scale"].clone())?,
            params: ParamSet::from_json(&value["params"])?,
            trained: true,
        })
    }
}

/// Trains the packet classifier on non-overlapping windows carrying
/// per-step binary labels. Windows must arrive grouped per trace and in
/// offset order; the stateful branch carries state across a trace's
/// windows and resets at every trace boundary.
pub fn train_packet_model(
    windows: &WindowSet,
    layer: Layer,
    input_scale: Vec<f64>,
    config: PacketConfig,
) -> Result<(PacketModel, Vec<f64>)> {
    if windows.windows.is_empty() {
        return Err(Error::EmptyTrainingSet);
    }
    assert_eq!(
        windows.stride, windows.len_seq,
        "training expects non-overlapping windows"
    );
    let input_dim = windows.columns;
    if input_scale.len() != input_dim {
        return Err(Error::ShapeMismatch {
            op: "train_packet_model",
            detail: format!("{} scales for {} columns", input_scale.len(), input_dim),
        });
    }
    let hidden = config.hidden;
    let mut model = PacketModel::new(layer, input_dim, input_scale, config);

    let mut losses = Vec::with_capacity(config.epochs);
    for _ in 0..config.epochs {
        let mut epoch_loss = 0.0;
        let mut counted = 0usize;
        let mut state: (Vec<f64>, Vec<f64>) = (vec![0.0; hidden], vec![0.0; hidden]);
        let mut current_trace: Option<&str> = None;
        for w in &windows.windows {
            if current_trace != Some(w.trace_id.as_str()) {
                state = (vec![0.0; hidden], vec![0.0; hidden]);
                current_trace = Some(w.trace_id.as_str());
            }
            if w.mask.iter().all(|&m| m == 0.0) {
                continue;
            }
            let xs = scale_window(w, &model.input_scale);
            let targets: Vec<f64> = w.labels.iter().map(|&l| l.min(1) as f64).collect();
            let fwd = window_forward(&model.params, input_dim, hidden, &xs, &state)?;
            epoch_loss += mse_loss(&fwd.probs, &targets, &w.mask)?;
            counted += 1;
            let dprobs = mse_loss_backward(&fwd.probs, &targets, &w.mask);
            window_backward(&mut model.params, input_dim, hidden, &fwd, &dprobs);
            model.params.sgd_step(model.config.lr);
            state = fwd.state_out;
        }
        if counted == 0 {
            return Err(Error::EmptyTrainingSet);
        }
        losses.push(epoch_loss / counted as f64);
    }
    model.trained = true;
    Ok((model, losses))
}

/// Per-packet probabilities for one trace's rows, in order. The stateful
/// branch runs continuously over the whole trace; the attention branch
/// sees windows at the given stride, and overlapping outputs are averaged.
pub fn predict_packets(model: &PacketModel, rows: &[FeatureRow], stride: usize) -> Result<Vec<f64>> {
    predict_packets_inner(model, rows, stride, true)
}

fn predict_packets_inner(
    model: &PacketModel,
    rows: &[FeatureRow],
    stride: usize,
    carry_state: bool,
) -> Result<Vec<f64>> {
    if !model.trained {
        return Err(Error::UntrainedModel);
    }
    if rows.is_empty() {
        return Ok(Vec::new());
    }
    if rows.iter().any(|r| r.trace_id != rows[0].trace_id) {
        return Err(Error::ShapeMismatch {
            op: "predict_packets",
            detail: "rows span multiple traces".into(),
        });
    }
    if rows.iter().any(|r| r.codes.len() != model.input_dim) {
        return Err(Error::ShapeMismatch {
            op: "predict_packets",
            detail: "row width differs from model input".into(),
        });
    }
    let hidden = model.config.hidden;
    let len_seq = model.config.len_seq;
    let len = rows.len();
    let xs_full: Vec<Vec<f64>> = rows
        .iter()
        .map(|r| {
            r.codes
                .iter()
                .zip(model.input_scale.iter())
                .map(|(&c, &s)| c as f64 * s)
                .collect()
        })
        .collect();

    // stateful branch over the whole trace
    let cell_a = stateful_cell(model.input_dim, hidden);
    let zeros = vec![0.0; hidden];
    let caches_a: Vec<LstmStepCache> = if carry_state {
        cell_a.forward_seq(&model.params, "stateful", &xs_full, &zeros, &zeros)?
    } else {
        // window-reset variant used to demonstrate that statefulness
        // matters; each window restarts from zero state
        let mut all = Vec::with_capacity(len);
        let mut offset = 0;
        while offset < len {
            let hi = (offset + len_seq).min(len);
            all.extend(cell_a.forward_seq(&model.params, "stateful", &xs_full[offset..hi], &zeros, &zeros)?);
            offset = hi;
        }
        all
    };

    let n_windows = if len <= len_seq {
        1
    } else {
        (len - len_seq).div_ceil(stride) + 1
    };
    let cell_b = attender_cell(model.input_dim, hidden);
    let mut sums = vec![0.0; len];
    let mut counts = vec![0usize; len];
    for w in 0..n_windows {
        let offset = w * stride;
        let mut xs: Vec<Vec<f64>> = Vec::with_capacity(len_seq);
        for t in 0..len_seq {
            if offset + t < len {
                xs.push(xs_full[offset + t].clone());
            } else {
                xs.push(vec![0.0; model.input_dim]);
            }
        }
        let caches_b = cell_b.forward_seq(&model.params, "attender", &xs, &zeros, &zeros)?;
        let mut states_b = Tensor::zeros(&[len_seq, hidden]);
        for (t, cache) in caches_b.iter().enumerate() {
            states_b.row_mut(t).copy_from_slice(&cache.h);
        }
        for t in 0..len_seq {
            let idx = offset + t;
            if idx >= len {
                break;
            }
            let att = attention_forward(&states_b, &caches_b[t].h)?;
            let combined = attended_forward(&model.params, "combine", &att.context, &caches_b[t].h)?;
            let mut input = Vec::with_capacity(2 * hidden);
            input.extend_from_slice(&caches_a[idx].h);
            input.extend_from_slice(&combined.output);
            let pre = dense_forward(&model.params, "head", &input)?[0];
            sums[idx] += sigmoid(pre);
            counts[idx] += 1;
        }
    }
    Ok(sums
        .iter()
        .zip(counts.iter())
        .map(|(s, &c)| s / c.max(1) as f64)
        .collect())
}

#[cfg(test)]
pub(crate) fn predict_packets_no_carry(
    model: &PacketModel,
    rows: &[FeatureRow],
    stride: usize,
) -> Result<Vec<f64>> {
    predict_packets_inner(model, rows, stride, false)
}

/// Groups a matrix's rows by trace, preserving order.
pub fn rows_by_trace(matrix: &FeatureMatrix) -> Vec<(String, Vec<FeatureRow>)> {
    let mut out: Vec<(String, Vec<FeatureRow>)> = Vec::new();
    for row in &matrix.rows {
        match out.last_mut() {
            Some((id, rows)) if *id == row.trace_id => rows.push(row.clone()),
            _ => out.push((row.trace_id.clone(), vec![row.clone()])),
        }
    }
    out
}

const TRACE_FEATURES: usize = 8;

fn is_tau(kind: MessageKind) -> bool {
    matches!(
        kind,
        MessageKind::TrackingAreaUpdateRequest
            | MessageKind::TrackingAreaUpdateAccept
            | MessageKind::TrackingAreaUpdateReject
    )
}

fn is_identity(kind: MessageKind) -> bool {
    matches!(kind, MessageKind::IdentityRequest | MessageKind::IdentityResponse)
}

fn is_reject(kind: MessageKind) -> bool {
    matches!(
        kind,
        MessageKind::AttachReject
            | MessageKind::AuthenticationReject
            | MessageKind::SecurityModeReject
            | MessageKind::TrackingAreaUpdateReject
            | MessageKind::ServiceReject
            | MessageKind::RrcReject
            | MessageKind::RrcConnectionReestablishmentReject
    )
}

/// Aggregates per-packet probabilities and message-kind counts into the
/// fixed 8-component trace feature vector.
pub fn trace_features(probs: &[f64], kinds: &[MessageKind]) -> [f64; TRACE_FEATURES] {
    let len = probs.len().max(1) as f64;
    let frac = probs.iter().filter(|&&p| p > 0.5).count() as f64 / len;
    let max = probs.iter().cloned().fold(0.0, f64::max);
    let mean = probs.iter().sum::<f64>() / len;
    let mut longest = 0usize;
    let mut run = 0usize;
    for &p in probs {
        if p > 0.5 {
            run += 1;
            longest = longest.max(run);
        } else {
            run = 0;
        }
    }
    let tau = kinds.iter().filter(|&&k| is_tau(k)).count() as f64 / len;
    let identity = kinds.iter().filter(|&&k| is_identity(k)).count() as f64 / len;
    let reject = kinds.iter().filter(|&&k| is_reject(k)).count() as f64 / len;
    [
        frac,
        max,
        mean,
        longest as f64 / len,
        tau,
        identity,
        reject,
        (1.0 + probs.len() as f64).ln() / (1.0 + 1000.0f64).ln(),
    ]
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TraceConfig {
    pub lr: f64,
    pub epochs: usize,
}

impl Default for TraceConfig {
    fn default() -> Self {
        TraceConfig { lr: 0.8, epochs: 500 }
    }
}

/// Logistic classifier over the 8 trace features.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TraceModel {
    pub layer: Layer,
    pub weights: Vec<f64>,
    pub bias: f64,
    trained: bool,
}

impl TraceModel {
    pub fn output(&self, features: &[f64; TRACE_FEATURES]) -> f64 {
        let z: f64 = self
            .weights
            .iter()
            .zip(features.iter())
            .map(|(w, x)| w * x)
            .sum::<f64>()
            + self.bias;
        sigmoid(z)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "format_version": 1,
            "model_type": TRACE_MODEL_TYPE,
            "layer": self.layer,
            "weights": self.weights,
            "bias": self.bias,
        })
    }

    pub fn from_json(value: &serde_json::Value) -> Result<TraceModel> {
        if value["model_type"] != TRACE_MODEL_TYPE {
            return Err(Error::Parse(format!(
                "expected model_type {TRACE_MODEL_TYPE}, got {}",
                value["model_type"]
            )));
        }
        Ok(TraceModel {
            layer: serde_json::from_value(value["layer"].clone())?,
            weights: serde_json::from_value(value["weights"].clone())?,
            bias: serde_json::from_value(value["bias"].clone())?,
            trained: true,
        })
    }
}

/// Full-batch gradient descent on the logistic loss.
pub fn train_trace_model(
    layer: Layer,
    features: &[[f64; TRACE_FEATURES]],
    labels: &[f64],
    config: TraceConfig,
) -> Result<(TraceModel, Vec<f64>)> {
    if features.is_empty() {
        return Err(Error::EmptyTrainingSet);
    }
    if features.len() != labels.len() {
        return Err(Error::LengthMismatch(features.len(), labels.len()));
    }
    let n = features.len() as f64;
    let mut model = TraceModel {
        layer,
        weights: vec![0.0; TRACE_FEATURES],
        bias: 0.0,
        trained: false,
    };
    let mut losses = Vec::with_capacity(config.epochs);
    for _ in 0..config.epochs {
        let mut gw = [0.0; TRACE_FEATURES];
        let mut gb = 0.0;
        let mut loss = 0.0;
        for (x, &y) in features.iter().zip(labels.iter()) {
            let p = model.output(x);
            let eps = 1e-12;
            loss -= y * (p + eps).ln() + (1.0 - y) * (1.0 - p + eps).ln();
            let d = p - y;
            for (g, xv) in gw.iter_mut().zip(x.iter()) {
                *g += d * xv;
            }
            gb += d;
        }
        for (w, g) in model.weights.iter_mut().zip(gw.iter()) {
            *w -= config.lr * g / n;
        }
        model.bias -= config.lr * gb / n;
        losses.push(loss / n);
    }
    model.trained = true;
    Ok((model, losses))
}

/// Binary trace verdict; confidence is the probability of the emitted
/// label.
pub fn predict_trace(model: &TraceModel, features: &[f64; TRACE_FEATURES]) -> Result<Prediction> {
    if !model.trained {
        return Err(Error::UntrainedModel);
    }
    let p = model.output(features);
    if p >= 0.5 {
        Ok(Prediction {
            label: Label::Fbs,
            confidence: p,
            layer: model.layer,
        })
    } else {
        Ok(Prediction {
            label: Label::Benign,
            confidence: 1.0 - p,
            layer: model.layer,
        })
    }
}

/// Message kinds per trace in row order, recovered from the original
/// traces; used to build trace features next to the probabilities.
pub fn kinds_by_trace(traces: &[crate::model::Trace], layer: Layer) -> BTreeMap<String, Vec<MessageKind>> {
    traces
        .iter()
        .map(|t| {
            (
                t.trace_id.clone(),
                t.packets
                    .iter()
                    .filter(|p| p.layer == layer)
                    .map(|p| p.kind)
                    .collect(),
            )
        })
        .collect()
}
