//! Minimal dense-tensor numerical kernel: every layer the detection models
//! need, with hand-written backward passes verified by finite differences.

pub mod attention;
pub mod gradcheck;
pub mod lstm;
pub mod ops;
pub mod params;
pub mod tensor;

pub use attention::{attended_backward, attended_forward, attention_backward, attention_forward};
pub use gradcheck::grad_check;
pub use lstm::{LstmCell, LstmStepCache, OutputActivation};
pub use params::{Param, ParamSet};
pub use tensor::Tensor;
