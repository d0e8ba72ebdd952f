//! Scaled dot-product attention over a sequence of hidden states, plus the
//! tanh-combined attended output. Neither adds trainable parameters beyond
//! the combine weights, which keeps gradient verification simple.

#![allow(clippy::needless_range_loop)]

use super::ops::{concat, concat_backward, dense_backward, dense_forward, softmax, softmax_backward, tanh_grad};
use super::params::ParamSet;
use super::tensor::{dot, Tensor};
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct AttentionCache {
    pub weights: Vec<f64>,
    pub context: Vec<f64>,
    query: Vec<f64>,
    scale: f64,
}

/// Attention over the rows of `states` [T, h] with the given query:
/// scores e_i = q·h_i/√h, weights α = softmax(e), context = Σ α_i h_i.
pub fn attention_forward(states: &Tensor, query: &[f64]) -> Result<AttentionCache> {
    let (t, h) = (states.rows(), states.cols());
    if t == 0 || query.len() != h {
        return Err(Error::ShapeMismatch {
            op: "attention",
            detail: format!("states [{t}, {h}] vs query {}", query.len()),
        });
    }
    let scale = 1.0 / (h as f64).sqrt();
    let scores: Vec<f64> = (0..t).map(|i| dot(query, states.row(i)) * scale).collect();
    let weights = softmax(&scores);
    let mut context = vec![0.0; h];
    for (i, &w) in weights.iter().enumerate() {
        for (c, s) in context.iter_mut().zip(states.row(i).iter()) {
            *c += w * s;
        }
    }
    Ok(AttentionCache {
        weights,
        context,
        query: query.to_vec(),
        scale,
    })
}

/// Backward for [`attention_forward`] given dL/dcontext.
/// Returns (dquery, dstates).
pub fn attention_backward(states: &Tensor, cache: &AttentionCache, dcontext: &[f64]) -> (Vec<f64>, Tensor) {
    let (t, h) = (states.rows(), states.cols());
    let mut dstates = Tensor::zeros(&[t, h]);
    let mut dweights = vec![0.0; t];
    for i in 0..t {
        dweights[i] = dot(dcontext, states.row(i));
        for (ds, dcv) in dstates.row_mut(i).iter_mut().zip(dcontext.iter()) {
            *ds += cache.weights[i] * dcv;
        }
    }
    let dscores = softmax_backward(&cache.weights, &dweights);
    let mut dquery = vec![0.0; h];
    for i in 0..t {
        let ds = dscores[i] * cache.scale;
        for (dq, s) in dquery.iter_mut().zip(states.row(i).iter()) {
            *dq += ds * s;
        }
        for (dst, q) in dstates.row_mut(i).iter_mut().zip(cache.query.iter()) {
            *dst += ds * q;
        }
    }
    (dquery, dstates)
}

#[derive(Debug, Clone)]
pub struct AttendedCache {
    pub output: Vec<f64>,
    joined: Vec<f64>,
    context_len: usize,
}

/// h' = tanh(W_c·[context; state] + b_c). Parameters live under
/// `{prefix}.w` and `{prefix}.b`.
pub fn attended_forward(
    params: &ParamSet,
    prefix: &str,
    context: &[f64],
    state: &[f64],
) -> Result<AttendedCache> {
    let joined = concat(context, state);
    let pre = dense_forward(params, prefix, &joined)?;
    Ok(AttendedCache {
        output: pre.iter().map(|v| v.tanh()).collect(),
        joined,
        context_len: context.len(),
    })
}

/// Backward for [`attended_forward`]; returns (dcontext, dstate).
pub fn attended_backward(
    params: &mut ParamSet,
    prefix: &str,
    cache: &AttendedCache,
    doutput: &[f64],
) -> (Vec<f64>, Vec<f64>) {
    let dpre: Vec<f64> = doutput
        .iter()
        .zip(cache.output.iter())
        .map(|(d, y)| d * tanh_grad(*y))
        .collect();
    let djoined = dense_backward(params, prefix, &cache.joined, &dpre);
    concat_backward(&djoined, cache.context_len)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_states_give_uniform_weights() {
        let states = Tensor::from_vec(&[3, 2], vec![0.4, -0.2, 0.4, -0.2, 0.4, -0.2]).unwrap();
        let cache = attention_forward(&states, &[1.0, 2.0]).unwrap();
        for w in &cache.weights {
            assert!((w - 1.0 / 3.0).abs() < 1e-12);
        }
        assert!((cache.context[0] - 0.4).abs() < 1e-12);
        assert!((cache.context[1] + 0.2).abs() < 1e-12);
    }

    #[test]
    fn single_state_gets_full_weight() {
        let states = Tensor::from_vec(&[1, 2], vec![0.7, -0.1]).unwrap();
        let cache = attention_forward(&states, &[0.3, 0.9]).unwrap();
        assert_eq!(cache.weights, vec![1.0]);
        assert_eq!(cache.context, vec![0.7, -0.1]);
    }

    #[test]
    fn weights_sum_to_one() {
        let states = Tensor::from_vec(&[4, 3], (0..12).map(|v| v as f64 / 3.0).collect()).unwrap();
        let cache = attention_forward(&states, &[0.5, -0.5, 0.25]).unwrap();
        let sum: f64 = cache.weights.iter().sum();
        assert!((sum - 1.0).abs() < 1e-12);
    }

    #[test]
    fn attended_output_zero_weights() {
        let mut params = ParamSet::new();
        params.insert("a.w", Tensor::zeros(&[2, 4]));
        params.insert("a.b", Tensor::zeros(&[2]));
        let cache = attended_forward(&params, "a", &[1.0, 2.0], &[3.0, 4.0]).unwrap();
        assert_eq!(cache.output, vec![0.0, 0.0]);

        // large bias saturates tanh toward 1
        *params.value_mut("a.b") = Tensor::from_vec(&[2], vec![10.0, 10.0]).unwrap();
        let cache = attended_forward(&params, "a", &[1.0, 2.0], &[3.0, 4.0]).unwrap();
        assert!(cache.output.iter().all(|&v| v > 0.9999));
    }
}
