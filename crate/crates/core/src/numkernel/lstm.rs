//! Gated recurrent cell with explicit backward pass.
//!
//! Gate order inside the packed weight matrices is input, forget,
//! candidate, output. The candidate always goes through tanh; the cell
//! output activation (applied to c_t inside h_t = o ⊙ act(c_t)) is
//! configurable because the packet model runs its recurrent output
//! through a sigmoid.

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::ops::{sigmoid, sigmoid_grad, tanh_grad};
use super::params::ParamSet;
use super::tensor::{matvec_acc, matvec_t_acc, outer_acc, Tensor};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OutputActivation {
    Tanh,
    Sigmoid,
}

impl OutputActivation {
    fn apply(&self, x: f64) -> f64 {
        match self {
            OutputActivation::Tanh => x.tanh(),
            OutputActivation::Sigmoid => sigmoid(x),
        }
    }

    fn grad_from_output(&self, y: f64) -> f64 {
        match self {
            OutputActivation::Tanh => tanh_grad(y),
            OutputActivation::Sigmoid => sigmoid_grad(y),
        }
    }
}

/// Static shape/configuration of one cell; parameters live in a ParamSet
/// under `{prefix}.wx` `[4h, d]`, `{prefix}.wh` `[4h, h]`, `{prefix}.b` `[4h]`.
#[derive(Debug, Clone, Copy)]
pub struct LstmCell {
    pub input: usize,
    pub hidden: usize,
    pub out_act: OutputActivation,
}

/// Per-step values cached by the forward pass for the backward pass.
#[derive(Debug, Clone)]
pub struct LstmStepCache {
    x: Vec<f64>,
    h_prev: Vec<f64>,
    c_prev: Vec<f64>,
    i: Vec<f64>,
    f: Vec<f64>,
    g: Vec<f64>,
    o: Vec<f64>,
    act_c: Vec<f64>,
    pub h: Vec<f64>,
    pub c: Vec<f64>,
}

impl LstmCell {
    pub fn new(input: usize, hidden: usize, out_act: OutputActivation) -> LstmCell {
        LstmCell { input, hidden, out_act }
    }

    pub fn init_params(&self, params: &mut ParamSet, prefix: &str, rng: &mut ChaCha8Rng) {
        let h4 = 4 * self.hidden;
        params.insert_init(&format!("{prefix}.wx"), &[h4, self.input], self.input, rng);
        params.insert_init(&format!("{prefix}.wh"), &[h4, self.hidden], self.hidden, rng);
        params.insert(&format!("{prefix}.b"), Tensor::zeros(&[h4]));
    }

    /// One recurrence step: returns the cache holding h_t and c_t.
    pub fn forward(
        &self,
        params: &ParamSet,
        prefix: &str,
        x: &[f64],
        h_prev: &[f64],
        c_prev: &[f64],
    ) -> Result<LstmStepCache> {
        let h = self.hidden;
        if x.len() != self.input || h_prev.len() != h || c_prev.len() != h {
            return Err(Error::ShapeMismatch {
                op: "lstm_cell",
                detail: format!(
                    "x {} (want {}), h {} c {} (want {h})",
                    x.len(),
                    self.input,
                    h_prev.len(),
                    c_prev.len()
                ),
            });
        }
        let wx = params.value(&format!("{prefix}.wx"));
        let wh = params.value(&format!("{prefix}.wh"));
        let b = params.value(&format!("{prefix}.b"));

        let mut z = b.values.clone();
        matvec_acc(wx, x, &mut z);
        matvec_acc(wh, h_prev, &mut z);

        let i: Vec<f64> = z[0..h].iter().map(|&v| sigmoid(v)).collect();
        let f: Vec<f64> = z[h..2 * h].iter().map(|&v| sigmoid(v)).collect();
        let g: Vec<f64> = z[2 * h..3 * h].iter().map(|&v| v.tanh()).collect();
        let o: Vec<f64> = z[3 * h..4 * h].iter().map(|&v| sigmoid(v)).collect();

        let mut c = vec![0.0; h];
        for k in 0..h {
            c[k] = f[k] * c_prev[k] + i[k] * g[k];
        }
        let act_c: Vec<f64> = c.iter().map(|&v| self.out_act.apply(v)).collect();
        let h_t: Vec<f64> = (0..h).map(|k| o[k] * act_c[k]).collect();

        Ok(LstmStepCache {
            x: x.to_vec(),
            h_prev: h_prev.to_vec(),
            c_prev: c_prev.to_vec(),
            i,
            f,
            g,
            o,
            act_c,
            h: h_t,
            c,
        })
    }

    /// Backward through one step. `dh`/`dc` are the gradients flowing into
    /// h_t and c_t; returns (dx, dh_prev, dc_prev) and accumulates into the
    /// parameter gradients.
    pub fn backward(
        &self,
        params: &mut ParamSet,
        prefix: &str,
        cache: &LstmStepCache,
        dh: &[f64],
        dc: &[f64],
    ) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let h = self.hidden;
        let mut dz = vec![0.0; 4 * h];
        let mut dc_total = dc.to_vec();
        for k in 0..h {
            dc_total[k] += dh[k] * cache.o[k] * self.out_act.grad_from_output(cache.act_c[k]);
            let do_k = dh[k] * cache.act_c[k];
            dz[3 * h + k] = do_k * sigmoid_grad(cache.o[k]);
            dz[k] = dc_total[k] * cache.g[k] * sigmoid_grad(cache.i[k]);
            dz[h + k] = dc_total[k] * cache.c_prev[k] * sigmoid_grad(cache.f[k]);
            dz[2 * h + k] = dc_total[k] * cache.i[k] * tanh_grad(cache.g[k]);
        }
        let dc_prev: Vec<f64> = (0..h).map(|k| dc_total[k] * cache.f[k]).collect();

        let wx_name = format!("{prefix}.wx");
        let wh_name = format!("{prefix}.wh");
        let mut dx = vec![0.0; self.input];
        let mut dh_prev = vec![0.0; h];
        matvec_t_acc(params.value(&wx_name), &dz, &mut dx);
        matvec_t_acc(params.value(&wh_name), &dz, &mut dh_prev);
        outer_acc(params.grad_mut(&wx_name), &dz, &cache.x);
        outer_acc(params.grad_mut(&wh_name), &dz, &cache.h_prev);
        let db = params.grad_mut(&format!("{prefix}.b"));
        for (gacc, d) in db.values.iter_mut().zip(dz.iter()) {
            *gacc += d;
        }
        (dx, dh_prev, dc_prev)
    }

    /// Runs the cell over a sequence from the given initial state.
    pub fn forward_seq(
        &self,
        params: &ParamSet,
        prefix: &str,
        xs: &[Vec<f64>],
        h0: &[f64],
        c0: &[f64],
    ) -> Result<Vec<LstmStepCache>> {
        let mut caches = Vec::with_capacity(xs.len());
        let mut h = h0.to_vec();
        let mut c = c0.to_vec();
        for x in xs {
            let cache = self.forward(params, prefix, x, &h, &c)?;
            h = cache.h.clone();
            c = cache.c.clone();
            caches.push(cache);
        }
        Ok(caches)
    }

    /// Backpropagates through a sequence given per-step gradients on h_t.
    /// Returns (dxs, dh0, dc0).
    pub fn backward_seq(
        &self,
        params: &mut ParamSet,
        prefix: &str,
        caches: &[LstmStepCache],
        dh_steps: &[Vec<f64>],
    ) -> (Vec<Vec<f64>>, Vec<f64>, Vec<f64>) {
        let h = self.hidden;
        let mut dh_carry = vec![0.0; h];
        let mut dc_carry = vec![0.0; h];
        let mut dxs = vec![Vec::new(); caches.len()];
        for t in (0..caches.len()).rev() {
            let mut dh = dh_steps[t].clone();
            for k in 0..h {
                dh[k] += dh_carry[k];
            }
            let (dx, dh_prev, dc_prev) =
                self.backward(params, prefix, &caches[t], &dh, &dc_carry);
            dxs[t] = dx;
            dh_carry = dh_prev;
            dc_carry = dc_prev;
        }
        (dxs, dh_carry, dc_carry)
    }
}
