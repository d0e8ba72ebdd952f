//! Detection engine for fake base stations and multi-step attacks in 4G
//! layer-3 (NAS/RRC) packet traces.
//!
//! The crate bundles a deterministic attack-scenario simulator, feature
//! extraction, a small dense-tensor kernel with verified gradients, a
//! two-level FBS detector, a graph-learning multi-step-attack recognizer
//! with overlap matching, NAS/RRC prediction fusion, and signature
//! baselines (DFA, Mealy, past-time LTL).

pub mod detect;
pub mod error;
pub mod fbs;
pub mod fusion;
pub mod metrics;
pub mod signatures;
pub mod featurize;
pub mod jsonl;
pub mod model;
pub mod msa;
pub mod numkernel;
pub mod sim;
pub mod verify;

pub use error::{Error, Result};
