//! Elementwise activations, the dense layer, softmax heads, and losses,
//! each paired with its exact backward pass.

use super::params::ParamSet;
use super::tensor::{dot, matvec_acc, matvec_t_acc, outer_acc, Tensor};
use crate::error::{Error, Result};

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub fn sigmoid_vec(xs: &[f64]) -> Vec<f64> {
    xs.iter().map(|&x| sigmoid(x)).collect()
}

/// d/dx sigmoid given the forward output y.
pub fn sigmoid_grad(y: f64) -> f64 {
    y * (1.0 - y)
}

pub fn tanh_vec(xs: &[f64]) -> Vec<f64> {
    xs.iter().map(|&x| x.tanh()).collect()
}

/// d/dx tanh given the forward output y.
pub fn tanh_grad(y: f64) -> f64 {
    1.0 - y * y
}

pub fn concat(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    out.extend_from_slice(a);
    out.extend_from_slice(b);
    out
}

/// Splits a gradient over `concat(a, b)` back into the two halves.
pub fn concat_backward(grad: &[f64], a_len: usize) -> (Vec<f64>, Vec<f64>) {
    (grad[..a_len].to_vec(), grad[a_len..].to_vec())
}

/// Numerically stable softmax of one vector; the result sums to 1.
pub fn softmax(xs: &[f64]) -> Vec<f64> {
    let max = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = xs.iter().map(|&x| (x - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.iter().map(|e| e / sum).collect()
}

/// dL/dx for y = softmax(x) given dL/dy and the forward output y.
pub fn softmax_backward(y: &[f64], dy: &[f64]) -> Vec<f64> {
    let inner = dot(y, dy);
    y.iter().zip(dy.iter()).map(|(&yi, &di)| yi * (di - inner)).collect()
}

/// log ∘ softmax computed with max subtraction.
pub fn log_softmax(xs: &[f64]) -> Vec<f64> {
    let max = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let log_sum: f64 = xs.iter().map(|&x| (x - max).exp()).sum::<f64>().ln() + max;
    xs.iter().map(|&x| x - log_sum).collect()
}

/// dL/dx for y = log_softmax(x) given dL/dy.
pub fn log_softmax_backward(y: &[f64], dy: &[f64]) -> Vec<f64> {
    let dy_sum: f64 = dy.iter().sum();
    y.iter()
        .zip(dy.iter())
        .map(|(&yi, &di)| di - yi.exp() * dy_sum)
        .collect()
}

/// y = W·x + b. Parameter names are `{prefix}.w` `[out, in]` and `{prefix}.b` `[out]`.
pub fn dense_forward(params: &ParamSet, prefix: &str, x: &[f64]) -> Result<Vec<f64>> {
    let w = params.value(&format!("{prefix}.w"));
    let b = params.value(&format!("{prefix}.b"));
    if w.cols() != x.len() {
        return Err(Error::ShapeMismatch {
            op: "dense",
            detail: format!("weight cols {} vs input {}", w.cols(), x.len()),
        });
    }
    let mut y = b.values.clone();
    matvec_acc(w, x, &mut y);
    Ok(y)
}

/// Accumulates dense gradients and returns dL/dx.
pub fn dense_backward(params: &mut ParamSet, prefix: &str, x: &[f64], dy: &[f64]) -> Vec<f64> {
    let w_name = format!("{prefix}.w");
    let mut dx = vec![0.0; x.len()];
    {
        let w = params.value(&w_name);
        matvec_t_acc(w, dy, &mut dx);
    }
    outer_acc(params.grad_mut(&w_name), dy, x);
    let db = params.grad_mut(&format!("{prefix}.b"));
    for (g, d) in db.values.iter_mut().zip(dy.iter()) {
        *g += d;
    }
    dx
}

/// Mean squared error over unmasked elements; `mask` entries are 0 or 1.
pub fn mse_loss(pred: &[f64], target: &[f64], mask: &[f64]) -> Result<f64> {
    check_same_len("mse_loss", pred, target, mask)?;
    let n: f64 = mask.iter().sum();
    if n == 0.0 {
        return Err(Error::AllMasked);
    }
    let sum: f64 = pred
        .iter()
        .zip(target.iter())
        .zip(mask.iter())
        .map(|((p, t), m)| m * (p - t) * (p - t))
        .sum();
    Ok(sum / n)
}

/// dL/dpred for [`mse_loss`]; masked positions get exactly zero gradient.
pub fn mse_loss_backward(pred: &[f64], target: &[f64], mask: &[f64]) -> Vec<f64> {
    let n: f64 = mask.iter().sum::<f64>().max(1.0);
    pred.iter()
        .zip(target.iter())
        .zip(mask.iter())
        .map(|((p, t), m)| 2.0 * m * (p - t) / n)
        .collect()
}

fn check_same_len(op: &'static str, a: &[f64], b: &[f64], c: &[f64]) -> Result<()> {
    if a.len() != b.len() || a.len() != c.len() {
        return Err(Error::ShapeMismatch {
            op,
            detail: format!("lengths {} / {} / {}", a.len(), b.len(), c.len()),
        });
    }
    Ok(())
}

/// Negative log-likelihood over rows of log-probabilities.
///
/// `log_probs` is [n, classes] row-major, `classes[i]` the target class of
/// row i, `mask[i]` ∈ {0,1}, and `class_weights` (len = classes) rescales
/// each row's contribution; pass `None` for uniform weighting.
pub fn nll_loss(
    log_probs: &Tensor,
    classes: &[usize],
    mask: &[f64],
    class_weights: Option<&[f64]>,
) -> Result<f64> {
    let n_rows = log_probs.rows();
    if classes.len() != n_rows || mask.len() != n_rows {
        return Err(Error::ShapeMismatch {
            op: "nll_loss",
            detail: format!("{n_rows} rows vs {} classes / {} mask", classes.len(), mask.len()),
        });
    }
    let mut denom = 0.0;
    let mut sum = 0.0;
    for i in 0..n_rows {
        if mask[i] == 0.0 {
            continue;
        }
        let w = class_weights.map_or(1.0, |cw| cw[classes[i]]);
        denom += w;
        sum -= w * log_probs.row(i)[classes[i]];
    }
    if denom == 0.0 {
        return Err(Error::AllMasked);
    }
    Ok(sum / denom)
}

/// dL/dlog_probs for [`nll_loss`].
pub fn nll_loss_backward(
    log_probs: &Tensor,
    classes: &[usize],
    mask: &[f64],
    class_weights: Option<&[f64]>,
) -> Tensor {
    let mut grad = Tensor::zeros(&log_probs.shape);
    let mut denom = 0.0;
    for i in 0..log_probs.rows() {
        if mask[i] == 0.0 {
            continue;
        }
        denom += class_weights.map_or(1.0, |cw| cw[classes[i]]);
    }
    let denom = denom.max(1e-12);
    for i in 0..log_probs.rows() {
        if mask[i] == 0.0 {
            continue;
        }
        let w = class_weights.map_or(1.0, |cw| cw[classes[i]]);
        grad.row_mut(i)[classes[i]] = -w / denom;
    }
    grad
}
