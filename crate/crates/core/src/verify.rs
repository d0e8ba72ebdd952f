//! Gradient verification battery: runs central-difference checks against
//! every differentiable building block and the full composite models.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::fbs::{window_backward, window_forward, PacketConfig, PacketModel};
use crate::model::{AttackKind, FieldMap, Label, Layer, MessageKind, Packet};
use crate::msa::{build_graph, sage_backward, sage_edge_nll, sage_forward, SageConfig, SageModel, N_CLASSES};
use crate::numkernel::attention::{attended_backward, attended_forward, attention_backward, attention_forward};
use crate::numkernel::gradcheck::grad_check;
use crate::numkernel::ops::{dense_backward, dense_forward, mse_loss, mse_loss_backward};
use crate::numkernel::{LstmCell, OutputActivation, ParamSet, Tensor};

#[derive(Debug, Clone, Serialize)]
pub struct GradCheckResult {
    pub name: String,
    pub seeds: u64,
    pub max_rel_err: f64,
    pub threshold: f64,
    pub pass: bool,
}

fn rand_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

pub fn check_dense_mse(seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut params = ParamSet::new();
    params.insert_init("d.w", &[3, 4], 4, &mut rng);
    params.insert_init("d.b", &[3], 4, &mut rng);
    let x = rand_vec(&mut rng, 4);
    let target = rand_vec(&mut rng, 3);
    let mask = vec![1.0; 3];

    params.zero_grads();
    let y = dense_forward(&params, "d", &x).expect("dense forward");
    let dy = mse_loss_backward(&y, &target, &mask);
    dense_backward(&mut params, "d", &x, &dy);
    grad_check(
        &mut params,
        |p| mse_loss(&dense_forward(p, "d", &x).expect("forward"), &target, &mask).expect("loss"),
        1e-5,
    )
}

pub fn check_lstm_cell(seed: u64) -> f64 {
    let (d, h) = (3, 4);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cell = LstmCell::new(d, h, OutputActivation::Tanh);
    let mut params = ParamSet::new();
    cell.init_params(&mut params, "l", &mut rng);
    let x = rand_vec(&mut rng, d);
    let h0 = rand_vec(&mut rng, h);
    let c0 = rand_vec(&mut rng, h);
    let target = rand_vec(&mut rng, h);
    let mask = vec![1.0; h];

    params.zero_grads();
    let cache = cell.forward(&params, "l", &x, &h0, &c0).expect("forward");
    let dh = mse_loss_backward(&cache.h, &target, &mask);
    cell.backward(&mut params, "l", &cache, &dh, &vec![0.0; h]);
    grad_check(
        &mut params,
        |p| {
            let cache = cell.forward(p, "l", &x, &h0, &c0).expect("forward");
            mse_loss(&cache.h, &target, &mask).expect("loss")
        },
        1e-5,
    )
}

pub fn check_attention(seed: u64) -> f64 {
    let (t, h) = (5, 4);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut params = ParamSet::new();
    params.insert_init("q.w", &[h, h], h, &mut rng);
    params.insert_init("q.b", &[h], h, &mut rng);
    let states = Tensor::from_vec(&[t, h], rand_vec(&mut rng, t * h)).expect("states");
    let q_in = rand_vec(&mut rng, h);
    let target = rand_vec(&mut rng, h);
    let mask = vec![1.0; h];

    params.zero_grads();
    let q = dense_forward(&params, "q", &q_in).expect("query");
    let att = attention_forward(&states, &q).expect("attention");
    let dctx = mse_loss_backward(&att.context, &target, &mask);
    let (dq, _) = attention_backward(&states, &att, &dctx);
    dense_backward(&mut params, "q", &q_in, &dq);
    grad_check(
        &mut params,
        |p| {
            let q = dense_forward(p, "q", &q_in).expect("query");
            let att = attention_forward(&states, &q).expect("attention");
            mse_loss(&att.context, &target, &mask).expect("loss")
        },
        1e-5,
    )
}

pub fn check_attended_output(seed: u64) -> f64 {
    let h = 4;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut params = ParamSet::new();
    params.insert_init("c.w", &[h, 2 * h], 2 * h, &mut rng);
    params.insert_init("c.b", &[h], 2 * h, &mut rng);
    let context = rand_vec(&mut rng, h);
    let state = rand_vec(&mut rng, h);
    let target = rand_vec(&mut rng, h);
    let mask = vec![1.0; h];

    params.zero_grads();
    let cache = attended_forward(&params, "c", &context, &state).expect("forward");
    let dout = mse_loss_backward(&cache.output, &target, &mask);
    attended_backward(&mut params, "c", &cache, &dout);
    grad_check(
        &mut params,
        |p| {
            let cache = attended_forward(p, "c", &context, &state).expect("forward");
            mse_loss(&cache.output, &target, &mask).expect("loss")
        },
        1e-5,
    )
}

pub fn check_sage_edge_head(seed: u64) -> f64 {
    use MessageKind::*;
    let mk = |seq: u32, kind: MessageKind, label: Label| Packet {
        trace_id: "g".into(),
        seq,
        layer: Layer::Nas,
        kind,
        fields: FieldMap::new(),
        label,
    };
    let a20 = Label::Msa(AttackKind::from_id(20).expect("registered"));
    let packets = vec![
        mk(0, AttachRequest, Label::Benign),
        mk(1, AuthenticationRequest, Label::Benign),
        mk(2, TrackingAreaUpdateRequest, Label::Benign),
        mk(3, TrackingAreaUpdateReject, a20),
        mk(4, TrackingAreaUpdateRequest, Label::Benign),
        mk(5, TrackingAreaUpdateReject, a20),
    ];
    let graph = build_graph(&packets).expect("graph");
    let weights = vec![1.0; N_CLASSES];
    let config = SageConfig { hidden: 8, seed, ..Default::default() };
    let model = SageModel::new(Layer::Nas, config);
    let mut params = model.params.clone();

    params.zero_grads();
    let fwd = sage_forward(&params, config.hidden, &graph);
    sage_backward(&mut params, &weights, config.hidden, &graph, &fwd);
    grad_check(
        &mut params,
        |p| sage_edge_nll(&sage_forward(p, config.hidden, &graph), &graph, &weights),
        1e-5,
    )
}

pub fn check_fbs_composite(seed: u64) -> f64 {
    let (d, h, t_len) = (4, 3, 5);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let config = PacketConfig { len_seq: t_len, hidden: h, lr: 0.05, epochs: 1, seed };
    let model = PacketModel::new(Layer::Nas, d, vec![1.0; d], config);
    let mut params = model.params.clone();
    let xs: Vec<Vec<f64>> = (0..t_len)
        .map(|_| (0..d).map(|_| rng.gen_range(0.0..1.0)).collect())
        .collect();
    let targets: Vec<f64> = (0..t_len).map(|_| f64::from(rng.gen_bool(0.5))).collect();
    let mask = vec![1.0; t_len];
    let state = (rand_vec(&mut rng, h), rand_vec(&mut rng, h));

    params.zero_grads();
    let fwd = window_forward(&params, d, h, &xs, &state).expect("forward");
    let dprobs = mse_loss_backward(&fwd.probs, &targets, &mask);
    window_backward(&mut params, d, h, &fwd, &dprobs);
    grad_check(
        &mut params,
        |p| {
            let fwd = window_forward(p, d, h, &xs, &state).expect("forward");
            mse_loss(&fwd.probs, &targets, &mask).expect("loss")
        },
        1e-5,
    )
}

/// Runs every check over `seeds` seeds and reports the worst error per op.
pub fn gradient_report(seeds: u64) -> Vec<GradCheckResult> {
    let run = |name: &str, threshold: f64, f: &dyn Fn(u64) -> f64| {
        let max_rel_err = (0..seeds).map(f).fold(0.0, f64::max);
        GradCheckResult {
            name: name.to_string(),
            seeds,
            max_rel_err,
            threshold,
            pass: max_rel_err < threshold,
        }
    };
    vec![
        run("dense+mse", 1e-6, &check_dense_mse),
        run("lstm_cell", 1e-6, &check_lstm_cell),
        run("attention", 1e-6, &check_attention),
        run("attended_output", 1e-6, &check_attended_output),
        run("sage_edge_head", 1e-5, &check_sage_edge_head),
        run("fbs_composite", 1e-4, &check_fbs_composite),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_battery_passes() {
        for result in gradient_report(20) {
            assert!(
                result.pass,
                "{}: {} >= {}",
                result.name, result.max_rel_err, result.threshold
            );
        }
    }
}
