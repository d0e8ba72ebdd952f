//! Central-difference verification of analytic gradients.

use super::params::ParamSet;

/// Compares the analytic gradients stored in `params` against central
/// differences of `loss_fn` and returns the maximum relative error over
/// all parameter coordinates.
///
/// The caller must have run one forward/backward pass so that the gradient
/// accumulators hold dL/dθ for the same loss that `loss_fn` computes.
pub fn grad_check<F>(params: &mut ParamSet, mut loss_fn: F, eps: f64) -> f64
where
    F: FnMut(&ParamSet) -> f64,
{
    let mut max_rel = 0.0f64;
    for name in params.names() {
        let len = params.value(&name).len();
        for idx in 0..len {
            let analytic = params.grad_mut(&name).values[idx];
            let original = params.value(&name).values[idx];

            params.value_mut(&name).values[idx] = original + eps;
            let loss_plus = loss_fn(params);
            params.value_mut(&name).values[idx] = original - eps;
            let loss_minus = loss_fn(params);
            params.value_mut(&name).values[idx] = original;

            let numeric = (loss_plus - loss_minus) / (2.0 * eps);
            let rel = (analytic - numeric).abs() / (analytic.abs() + numeric.abs()).max(1e-3);
            if rel > max_rel {
                max_rel = rel;
            }
        }
    }
    max_rel
}
