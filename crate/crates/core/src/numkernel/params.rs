//! Named trainable parameters with gradient accumulators.

use std::collections::BTreeMap;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::tensor::Tensor;
use crate::error::Result;

#[derive(Debug, Clone)]
pub struct Param {
    pub value: Tensor,
    pub grad: Tensor,
}

impl Param {
    pub fn new(value: Tensor) -> Param {
        let grad = Tensor::zeros(&value.shape);
        Param { value, grad }
    }
}

/// Name-keyed parameter store; iteration order is the sorted name order,
/// which keeps training and serialization deterministic.
#[derive(Debug, Clone, Default)]
pub struct ParamSet {
    params: BTreeMap<String, Param>,
}

pub const PARAMSET_FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct ParamSetWire {
    format_version: u32,
    tensors: BTreeMap<String, Tensor>,
}

impl ParamSet {
    pub fn new() -> ParamSet {
        ParamSet::default()
    }

    pub fn insert(&mut self, name: &str, value: Tensor) {
        self.params.insert(name.to_string(), Param::new(value));
    }

    /// Inserts a tensor initialized uniform(-1/√fan_in, +1/√fan_in).
    pub fn insert_init(&mut self, name: &str, shape: &[usize], fan_in: usize, rng: &mut ChaCha8Rng) {
        let bound = 1.0 / (fan_in.max(1) as f64).sqrt();
        let mut t = Tensor::zeros(shape);
        for v in t.values.iter_mut() {
            *v = rng.gen_range(-bound..bound);
        }
        self.insert(name, t);
    }

    pub fn value(&self, name: &str) -> &Tensor {
        &self.params.get(name).unwrap_or_else(|| panic!("unknown param `{name}`")).value
    }

    pub fn grad_mut(&mut self, name: &str) -> &mut Tensor {
        &mut self
            .params
            .get_mut(name)
            .unwrap_or_else(|| panic!("unknown param `{name}`"))
            .grad
    }

    pub fn value_mut(&mut self, name: &str) -> &mut Tensor {
        &mut self
            .params
            .get_mut(name)
            .unwrap_or_else(|| panic!("unknown param `{name}`"))
            .value
    }

    pub fn names(&self) -> Vec<String> {
        self.params.keys().cloned().collect()
    }

    pub fn zero_grads(&mut self) {
        for p in self.params.values_mut() {
            p.grad.values.iter_mut().for_each(|v| *v = 0.0);
        }
    }

    /// value ← value − lr·grad, then grads are zeroed.
    pub fn sgd_step(&mut self, lr: f64) {
        for p in self.params.values_mut() {
            for (v, g) in p.value.values.iter_mut().zip(p.grad.values.iter_mut()) {
                *v -= lr * *g;
                *g = 0.0;
            }
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        let tensors: BTreeMap<String, Tensor> = self
            .params
            .iter()
            .map(|(k, p)| (k.clone(), p.value.clone()))
            .collect();
        serde_json::to_value(ParamSetWire {
            format_version: PARAMSET_FORMAT_VERSION,
            tensors,
        })
        .expect("paramset serializes")
    }

    pub fn from_json(value: &serde_json::Value) -> Result<ParamSet> {
        let wire: ParamSetWire = serde_json::from_value(value.clone())?;
        let mut set = ParamSet::new();
        for (name, tensor) in wire.tensors {
            set.params.insert(name, Param::new(tensor));
        }
        Ok(set)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn sgd_step_updates_and_clears() {
        let mut ps = ParamSet::new();
        ps.insert("w", Tensor::from_vec(&[1], vec![1.0]).unwrap());
        ps.grad_mut("w").values[0] = 2.0;
        ps.sgd_step(0.1);
        assert!((ps.value("w").values[0] - 0.8).abs() < 1e-12);
        assert_eq!(ps.grad_mut("w").values[0], 0.0);

        // zero gradient leaves values alone
        ps.sgd_step(0.1);
        assert!((ps.value("w").values[0] - 0.8).abs() < 1e-12);
    }

    #[test]
    fn serialization_roundtrip() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut ps = ParamSet::new();
        ps.insert_init("a", &[2, 3], 3, &mut rng);
        ps.insert_init("b", &[4], 4, &mut rng);
        let json = ps.to_json();
        let back = ParamSet::from_json(&json).unwrap();
        assert_eq!(back.value("a"), ps.value("a"));
        assert_eq!(back.value("b"), ps.value("b"));
        assert_eq!(json["format_version"], 1);
    }

    #[test]
    fn init_respects_fan_in_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut ps = ParamSet::new();
        ps.insert_init("w", &[8, 16], 16, &mut rng);
        let bound = 1.0 / 4.0;
        assert!(ps.value("w").values.iter().all(|v| v.abs() < bound));
    }
}
