//! Multi-step-attack recognition: flow-graph construction, a single-layer
//! mean-aggregation graph network classifying edges into benign + 21
//! attack classes, and edge-overlap matching for unseen or reshaped
//! attacks.

#![allow(clippy::needless_range_loop)]

use std::collections::{BTreeMap, BTreeSet};

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{AttackKind, DatasetKind, Label, Layer, MessageKind, Packet, Trace};
use crate::numkernel::ops::{log_softmax, log_softmax_backward};
use crate::numkernel::tensor::{matvec_acc, matvec_t_acc, outer_acc};
use crate::numkernel::{ParamSet, Tensor};

/// Number of edge classes: benign plus the 21 attacks.
pub const N_CLASSES: usize = 22;

#[derive(Debug, Clone, PartialEq)]
pub struct FlowEdge {
    pub src: usize,
    pub dst: usize,
    pub count: u32,
    /// label code → multiplicity carrying that label (training data).
    pub labels: BTreeMap<u32, u32>,
    /// Normalized position of the first occurrence in the packet stream.
    pub first_pos: f64,
}

impl FlowEdge {
    /// Majority label; count ties break toward the smaller code.
    pub fn majority_label(&self) -> u32 {
        self.labels
            .iter()
            .max_by_key(|(code, n)| (**n, std::cmp::Reverse(**code)))
            .map(|(code, _)| *code)
            .unwrap_or(0)
    }
}

/// Directed multigraph with one node per distinct message kind and one
/// aggregated edge per consecutive-kind pair. Node and edge order is
/// canonical (sorted by kind name), so construction order cannot leak in.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowGraph {
    pub layer: Layer,
    pub nodes: Vec<MessageKind>,
    pub edges: Vec<FlowEdge>,
}

impl FlowGraph {
    pub fn node_index(&self, kind: MessageKind) -> Option<usize> {
        self.nodes.iter().position(|k| *k == kind)
    }

    /// Directed (src, dst) kind-name pairs present in the graph.
    pub fn edge_pairs(&self) -> BTreeSet<(String, String)> {
        self.edges
            .iter()
            .map(|e| {
                (
                    self.nodes[e.src].name().to_string(),
                    self.nodes[e.dst].name().to_string(),
                )
            })
            .collect()
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "format_version": 1,
            "layer": self.layer,
            "nodes": self.nodes.iter().map(|k| k.name()).collect::<Vec<_>>(),
            "edges": self.edges.iter().map(|e| {
                serde_json::json!({
                    "src": self.nodes[e.src].name(),
                    "dst": self.nodes[e.dst].name(),
                    "count": e.count,
                    "label": e.majority_label(),
                })
            }).collect::<Vec<_>>(),
        })
    }
}

/// Builds the flow graph of one packet sequence: a node per distinct kind,
/// an edge per consecutive pair labeled with the successor packet's label.
pub fn build_graph(packets: &[Packet]) -> Result<FlowGraph> {
    if packets.is_empty() {
        return Err(Error::EmptyInput);
    }
    let layer = packets[0].layer;
    if packets.iter().any(|p| p.layer != layer) {
        return Err(Error::MixedLayers);
    }

    let mut node_set: BTreeSet<MessageKind> = BTreeSet::new();
    for p in packets {
        node_set.insert(p.kind);
    }
    let mut nodes: Vec<MessageKind> = node_set.into_iter().collect();
    nodes.sort_by_key(|k| k.name());
    let index: BTreeMap<MessageKind, usize> =
        nodes.iter().enumerate().map(|(i, k)| (*k, i)).collect();

    let denom = (packets.len().max(2) - 1) as f64;
    let mut edges: BTreeMap<(usize, usize), FlowEdge> = BTreeMap::new();
    for (pos, pair) in packets.windows(2).enumerate() {
        let src = index[&pair[0].kind];
        let dst = index[&pair[1].kind];
        let label = crate::model::label_code(pair[1].label, DatasetKind::Msa)?;
        let entry = edges.entry((src, dst)).or_insert_with(|| FlowEdge {
            src,
            dst,
            count: 0,
            labels: BTreeMap::new(),
            first_pos: pos as f64 / denom,
        });
        entry.count += 1;
        *entry.labels.entry(label).or_insert(0) += 1;
    }

    Ok(FlowGraph {
        layer,
        nodes,
        edges: edges.into_values().collect(),
    })
}

pub fn build_layer_graph(trace: &Trace, layer: Layer) -> Result<FlowGraph> {
    let packets: Vec<Packet> = trace
        .packets
        .iter()
        .filter(|p| p.layer == layer)
        .cloned()
        .collect();
    build_graph(&packets)
}

/// Inference-path construction: label information is not consulted (real
/// captures carry none), so every edge is recorded with the benign code.
pub fn build_layer_graph_for_inference(trace: &Trace, layer: Layer) -> Result<FlowGraph> {
    let packets: Vec<Packet> = trace
        .packets
        .iter()
        .filter(|p| p.layer == layer)
        .map(|p| Packet {
            label: Label::Benign,
            ..p.clone()
        })
        .collect();
    build_graph(&packets)
}

/// Per-attack set of directed edges observed with that attack's label in
/// training graphs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AttackPathBank {
    pub format_version: u32,
    pub layer: Layer,
    banks: BTreeMap<u8, BTreeSet<(String, String)>>,
}

impl AttackPathBank {
    pub fn from_graphs(layer: Layer, graphs: &[FlowGraph]) -> AttackPathBank {
        let mut banks: BTreeMap<u8, BTreeSet<(String, String)>> = BTreeMap::new();
        for g in graphs.iter().filter(|g| g.layer == layer) {
            for e in &g.edges {
                for (&code, _) in e.labels.iter().filter(|(c, _)| **c > 0) {
                    banks.entry(code as u8).or_default().insert((
                        g.nodes[e.src].name().to_string(),
                        g.nodes[e.dst].name().to_string(),
                    ));
                }
            }
        }
        AttackPathBank {
            format_version: 1,
            layer,
            banks,
        }
    }

    pub fn attacks(&self) -> impl Iterator<Item = AttackKind> + '_ {
        self.banks.keys().filter_map(|id| AttackKind::from_id(*id).ok())
    }

    pub fn edges(&self, attack: AttackKind) -> Result<&BTreeSet<(String, String)>> {
        self.banks
            .get(&attack.id())
            .ok_or(Error::UnknownAttack(attack.id()))
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("bank serializes")
    }

    pub fn from_json(value: &serde_json::Value) -> Result<AttackPathBank> {
        Ok(serde_json::from_value(value.clone())?)
    }
}

/// Fraction of the attack's known edge set present in the observed graph.
pub fn overlap_score(graph: &FlowGraph, attack: AttackKind, bank: &AttackPathBank) -> Result<f64> {
    let bank_edges = bank.edges(attack)?;
    if bank_edges.is_empty() {
        return Ok(0.0);
    }
    let graph_edges = graph.edge_pairs();
    let shared = bank_edges.intersection(&graph_edges).count();
    Ok(shared as f64 / bank_edges.len() as f64)
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SageConfig {
    pub hidden: usize,
    pub epochs: usize,
    pub lr: f64,
    pub seed: u64,
}

impl Default for SageConfig {
    fn default() -> Self {
        SageConfig {
            hidden: 64,
            epochs: 120,
            lr: 0.08,
            seed: 7,
        }
    }
}

/// One mean-aggregation layer plus a per-edge classification head.
#[derive(Debug, Clone)]
pub struct SageModel {
    pub layer: Layer,
    pub config: SageConfig,
    pub params: ParamSet,
    pub class_weights: Vec<f64>,
    trained: bool,
}

pub const SAGE_MODEL_TYPE: &str = "msa_sage_v1";

fn vocab_size(layer: Layer) -> usize {
    MessageKind::layer_kinds(layer).len()
}

fn node_feature_dim(layer: Layer) -> usize {
    vocab_size(layer) + 3
}

/// One-hot kind plus normalized in/out/total degree.
fn node_features(graph: &FlowGraph) -> Tensor {
    let dim = node_feature_dim(graph.layer);
    let n = graph.nodes.len();
    let mut x = Tensor::zeros(&[n, dim]);
    let voc = vocab_size(graph.layer);
    let mut in_deg = vec![0.0f64; n];
    let mut out_deg = vec![0.0f64; n];
    for e in &graph.edges {
        out_deg[e.src] += e.count as f64;
        in_deg[e.dst] += e.count as f64;
    }
    let max_in = in_deg.iter().cloned().fold(1.0, f64::max);
    let max_out = out_deg.iter().cloned().fold(1.0, f64::max);
    let max_tot = in_deg
        .iter()
        .zip(out_deg.iter())
        .map(|(a, b)| a + b)
        .fold(1.0, f64::max);
    for (i, kind) in graph.nodes.iter().enumerate() {
        let row = x.row_mut(i);
        row[kind.layer_ordinal()] = 1.0;
        row[voc] = in_deg[i] / max_in;
        row[voc + 1] = out_deg[i] / max_out;
        row[voc + 2] = (in_deg[i] + out_deg[i]) / max_tot;
    }
    x
}

/// Undirected distinct-neighbor lists used by the mean aggregator.
fn neighbor_lists(graph: &FlowGraph) -> Vec<Vec<usize>> {
    let n = graph.nodes.len();
    let mut sets: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
    for e in &graph.edges {
        if e.src != e.dst {
            sets[e.src].insert(e.dst);
            sets[e.dst].insert(e.src);
        } else {
            sets[e.src].insert(e.src);
        }
    }
    sets.into_iter().map(|s| s.into_iter().collect()).collect()
}

fn edge_features(e: &FlowEdge) -> [f64; 2] {
    [(1.0 + e.count as f64).ln(), e.first_pos]
}

pub(crate) struct SageForward {
    joined: Tensor,
    pre: Tensor,
    edge_inputs: Vec<Vec<f64>>,
    pub log_probs: Vec<Vec<f64>>,
}

pub(crate) fn sage_forward(params: &ParamSet, hidden_dim: usize, graph: &FlowGraph) -> SageForward {
    let x = node_features(graph);
    let neighbors = neighbor_lists(graph);
    let n = graph.nodes.len();
    let dim = x.cols();
    let h = hidden_dim;

    let mut joined = Tensor::zeros(&[n, 2 * dim]);
    for v in 0..n {
        let row = joined.row_mut(v);
        row[..dim].copy_from_slice(x.row(v));
        if !neighbors[v].is_empty() {
            let scale = 1.0 / neighbors[v].len() as f64;
            for &u in &neighbors[v] {
                for (slot, value) in row[dim..].iter_mut().zip(x.row(u).iter()) {
                    *slot += scale * value;
                }
            }
        }
    }

    let w = params.value("sage.w");
    let b = params.value("sage.b");
    let mut pre = Tensor::zeros(&[n, h]);
    let mut hidden = Tensor::zeros(&[n, h]);
    for v in 0..n {
        let row = pre.row_mut(v);
        row.copy_from_slice(&b.values);
        matvec_acc(w, joined.row(v), row);
        for (out, &p) in hidden.row_mut(v).iter_mut().zip(pre.row(v).iter()) {
            *out = p.max(0.0);
        }
    }

    let ew = params.value("edge.w");
    let eb = params.value("edge.b");
    let mut edge_inputs = Vec::with_capacity(graph.edges.len());
    let mut log_probs = Vec::with_capacity(graph.edges.len());
    for e in &graph.edges {
        let mut input = Vec::with_capacity(2 * h + 2);
        input.extend_from_slice(hidden.row(e.src));
        input.extend_from_slice(hidden.row(e.dst));
        input.extend_from_slice(&edge_features(e));
        let mut logits = eb.values.clone();
        matvec_acc(ew, &input, &mut logits);
        log_probs.push(log_softmax(&logits));
        edge_inputs.push(input);
    }

    SageForward {
        joined,
        pre,
        edge_inputs,
        log_probs,
    }
}

/// Weighted NLL of a forward pass over the graph's edge label multiset.
pub(crate) fn sage_edge_nll(fwd: &SageForward, graph: &FlowGraph, class_weights: &[f64]) -> f64 {
    let mut total_weight = 0.0;
    for e in &graph.edges {
        for (&code, &mult) in &e.labels {
            total_weight += class_weights[code as usize] * mult as f64;
        }
    }
    if total_weight == 0.0 {
        return 0.0;
    }
    let mut loss = 0.0;
    for (idx, e) in graph.edges.iter().enumerate() {
        for (&code, &mult) in &e.labels {
            let w = class_weights[code as usize] * mult as f64 / total_weight;
            loss -= w * fwd.log_probs[idx][code as usize];
        }
    }
    loss
}

/// Backward for [`sage_forward`] under the weighted edge NLL; accumulates
/// into the parameter gradients and returns the loss.
pub(crate) fn sage_backward(
    params: &mut ParamSet,
    class_weights: &[f64],
    hidden_dim: usize,
    graph: &FlowGraph,
    fwd: &SageForward,
) -> f64 {
    let h = hidden_dim;
    let n = graph.nodes.len();
    let mut total_weight = 0.0;
    for e in &graph.edges {
        for (&code, &mult) in &e.labels {
            total_weight += class_weights[code as usize] * mult as f64;
        }
    }
    if total_weight == 0.0 {
        return 0.0;
    }

    let mut loss = 0.0;
    let mut dhidden = Tensor::zeros(&[n, h]);
    for (idx, e) in graph.edges.iter().enumerate() {
        let lp = &fwd.log_probs[idx];
        let mut dlp = vec![0.0; N_CLASSES];
        for (&code, &mult) in &e.labels {
            let w = class_weights[code as usize] * mult as f64 / total_weight;
            loss -= w * lp[code as usize];
            dlp[code as usize] -= w;
        }
        let dlogits = log_softmax_backward(lp, &dlp);
        let mut dinput = vec![0.0; 2 * h + 2];
        matvec_t_acc(params.value("edge.w"), &dlogits, &mut dinput);
        outer_acc(params.grad_mut("edge.w"), &dlogits, &fwd.edge_inputs[idx]);
        for (g, d) in params.grad_mut("edge.b").values.iter_mut().zip(dlogits.iter()) {
            *g += d;
        }
        for (slot, d) in dhidden.row_mut(e.src).iter_mut().zip(dinput[..h].iter()) {
            *slot += d;
        }
        for (slot, d) in dhidden.row_mut(e.dst).iter_mut().zip(dinput[h..2 * h].iter()) {
            *slot += d;
        }
    }

    for v in 0..n {
        let dpre: Vec<f64> = dhidden
            .row(v)
            .iter()
            .zip(fwd.pre.row(v).iter())
            .map(|(d, &p)| if p > 0.0 { *d } else { 0.0 })
            .collect();
        outer_acc(params.grad_mut("sage.w"), &dpre, fwd.joined.row(v));
        for (g, d) in params.grad_mut("sage.b").values.iter_mut().zip(dpre.iter()) {
            *g += d;
        }
    }
    loss
}

impl SageModel {
    pub fn new(layer: Layer, config: SageConfig) -> SageModel {
        let mut rng = <ChaCha8Rng as rand::SeedableRng>::seed_from_u64(config.seed);
        let dim = node_feature_dim(layer);
        let mut params = ParamSet::new();
        params.insert_init("sage.w", &[config.hidden, 2 * dim], 2 * dim, &mut rng);
        params.insert("sage.b", Tensor::zeros(&[config.hidden]));
        params.insert_init(
            "edge.w",
            &[N_CLASSES, 2 * config.hidden + 2],
            2 * config.hidden + 2,
            &mut rng,
        );
        params.insert("edge.b", Tensor::zeros(&[N_CLASSES]));
        SageModel {
            layer,
            config,
            params,
            class_weights: vec![1.0; N_CLASSES],
            trained: false,
        }
    }

    fn forward(&self, graph: &FlowGraph) -> SageForward {
        sage_forward(&self.params, self.config.hidden, graph)
    }

    fn backward(&mut self, graph: &FlowGraph, fwd: &SageForward) -> f64 {
        sage_backward(&mut self.params, &self.class_weights, self.config.hidden, graph, fwd)
    }

    /// Per-edge log-probability rows for a graph.
    pub fn edge_log_probs(&self, graph: &FlowGraph) -> Result<Vec<Vec<f64>>> {
        if !self.trained {
            return Err(Error::UntrainedModel);
        }
        Ok(self.forward(graph).log_probs)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "format_version": 1,
            "model_type": SAGE_MODEL_TYPE,
            "layer": self.layer,
            "config": self.config,
            "class_weights": self.class_weights,
            "params": self.params.to_json(),
        })
    }

    pub fn from_json(value: &serde_json::Value) -> Result<SageModel> {
        if value["model_type"] != SAGE_MODEL_TYPE {
            return Err(Error::Parse(format!(
                "expected model_type {SAGE_MODEL_TYPE}, got {}",
                value["model_type"]
            )));
        }
        let layer: Layer = serde_json::from_value(value["layer"].clone())?;
        let config: SageConfig = serde_json::from_value(value["config"].clone())?;
        let class_weights: Vec<f64> = serde_json::from_value(value["class_weights"].clone())?;
        let params = ParamSet::from_json(&value["params"])?;
        Ok(SageModel {
            layer,
            config,
            params,
            class_weights,
            trained: true,
        })
    }
}

/// Trains the edge classifier; also populates the attack-path bank from
/// the same graphs. Errors unless all 22 classes appear in the edge
/// labels.
pub fn train_msa(
    graphs: &[FlowGraph],
    layer: Layer,
    config: SageConfig,
) -> Result<(SageModel, AttackPathBank, Vec<f64>)> {
    train_msa_impl(graphs, layer, config, None)
}

/// Hold-one-attack-out variant for the unseen-attack protocol: the
/// excluded class is expected to be absent; every other class must still
/// be present.
pub fn train_msa_excluding(
    graphs: &[FlowGraph],
    layer: Layer,
    config: SageConfig,
    excluded: AttackKind,
) -> Result<(SageModel, AttackPathBank, Vec<f64>)> {
    train_msa_impl(graphs, layer, config, Some(excluded))
}

fn train_msa_impl(
    graphs: &[FlowGraph],
    layer: Layer,
    config: SageConfig,
    excluded: Option<AttackKind>,
) -> Result<(SageModel, AttackPathBank, Vec<f64>)> {
    let graphs: Vec<&FlowGraph> = graphs.iter().filter(|g| g.layer == layer).collect();
    if graphs.is_empty() {
        return Err(Error::EmptyTrainingSet);
    }
    let mut counts = [0f64; N_CLASSES];
    for g in &graphs {
        for e in &g.edges {
            for (&code, &mult) in &e.labels {
                counts[code as usize] += mult as f64;
            }
        }
    }
    for (code, &count) in counts.iter().enumerate() {
        if excluded.is_some_and(|a| a.id() as usize == code) {
            continue;
        }
        if count == 0.0 {
            return Err(Error::MissingClass(code as u32));
        }
    }

    let total: f64 = counts.iter().sum();
    let mut model = SageModel::new(layer, config);
    model.class_weights = counts
        .iter()
        .map(|&c| (total / (N_CLASSES as f64 * c)).clamp(0.05, 20.0))
        .collect();

    let mut losses = Vec::with_capacity(config.epochs);
    for _ in 0..config.epochs {
        let mut epoch_loss = 0.0;
        for g in &graphs {
            let fwd = model.forward(g);
            epoch_loss += model.backward(g, &fwd);
            model.params.sgd_step(config.lr);
        }
        losses.push(epoch_loss / graphs.len() as f64);
    }
    model.trained = true;

    let owned: Vec<FlowGraph> = graphs.iter().map(|g| (*g).clone()).collect();
    let bank = AttackPathBank::from_graphs(layer, &owned);
    Ok((model, bank, losses))
}

pub use crate::model::Prediction;

/// Verdict rule: benign unless some edge's argmax is an attack class; the
/// winning attack takes the largest summed probability over its supporting
/// edges, with confidence the mean probability across them.
pub fn predict_attack(model: &SageModel, graph: &FlowGraph) -> Result<Prediction> {
    let log_probs = model.edge_log_probs(graph)?;
    if log_probs.is_empty() {
        return Ok(Prediction {
            label: Label::Benign,
            confidence: 1.0,
            layer: graph.layer,
        });
    }
    let mut vote: BTreeMap<usize, (f64, usize)> = BTreeMap::new();
    let mut benign_prob_sum = 0.0;
    for lp in &log_probs {
        let (argmax, _) = lp
            .iter()
            .enumerate()
            .max_by(|(_, a), (_, b)| a.partial_cmp(b).expect("finite"))
            .expect("non-empty");
        benign_prob_sum += lp[0].exp();
        if argmax > 0 {
            let entry = vote.entry(argmax).or_insert((0.0, 0));
            entry.0 += lp[argmax].exp();
            entry.1 += 1;
        }
    }
    if vote.is_empty() {
        return Ok(Prediction {
            label: Label::Benign,
            confidence: benign_prob_sum / log_probs.len() as f64,
            layer: graph.layer,
        });
    }
    let (&class, &(prob_sum, support)) = vote
        .iter()
        .max_by(|(_, (a, _)), (_, (b, _))| a.partial_cmp(b).expect("finite"))
        .expect("non-empty vote");
    Ok(Prediction {
        label: Label::Msa(AttackKind::from_id(class as u8)?),
        confidence: prob_sum / support as f64,
        layer: graph.layer,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NearestVerdict {
    pub label: Label,
    pub confidence: f64,
    pub overlap: f64,
    pub variant: bool,
}

/// Combines the classifier with overlap matching: a low-confidence model
/// verdict falls back to the best-overlapping known attack (flagged as a
/// variant) when that overlap clears `tau`; a non-benign model verdict is
/// never downgraded to benign.
pub fn nearest_attack(
    model: &SageModel,
    graph: &FlowGraph,
    bank: &AttackPathBank,
    tau: f64,
) -> Result<NearestVerdict> {
    let prediction = predict_attack(model, graph)?;
    let mut best: Option<(AttackKind, f64)> = None;
    for attack in bank.attacks() {
        let score = overlap_score(graph, attack, bank)?;
        if best.is_none_or(|(_, s)| score > s) {
            best = Some((attack, score));
        }
    }
    let (best_attack, best_overlap) = match best {
        Some(b) => b,
        None => {
            return Ok(NearestVerdict {
                label: prediction.label,
                confidence: prediction.confidence,
                overlap: 0.0,
                variant: false,
            })
        }
    };

    if prediction.confidence < 0.5 && best_overlap >= tau {
        return Ok(NearestVerdict {
            label: Label::Msa(best_attack),
            confidence: prediction.confidence,
            overlap: best_overlap,
            variant: true,
        });
    }
    Ok(NearestVerdict {
        label: prediction.label,
        confidence: prediction.confidence,
        overlap: best_overlap,
        variant: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{AttackerLevel, FieldMap};
    use crate::sim::{gen_msa, ScenarioSpec};

    fn packet(trace_id: &str, seq: u32, kind: MessageKind, label: Label) -> Packet {
        Packet {
            trace_id: trace_id.into(),
            seq,
            layer: kind.layer(),
            kind,
            fields: FieldMap::new(),
            label,
        }
    }

    #[test]
    fn direct_construction_example() {
        use MessageKind::*;
        let packets = vec![
            packet("t", 0, AttachRequest, Label::Benign),
            packet("t", 1, AuthenticationRequest, Label::Benign),
            packet("t", 2, AuthenticationResponse, Label::Benign),
        ];
        let g = build_graph(&packets).unwrap();
        assert_eq!(g.nodes.len(), 3);
        assert_eq!(g.edges.len(), 2);

        let single = build_graph(&packets[..1]).unwrap();
        assert_eq!(single.nodes.len(), 1);
        assert!(single.edges.is_empty());

        assert!(matches!(build_graph(&[]), Err(Error::EmptyInput)));
    }

    #[test]
    fn tau_reject_trace_contains_labeled_edge() {
        let attack = AttackKind::from_id(20).unwrap();
        let spec = ScenarioSpec {
            scenario: Label::Msa(attack),
            attacker_level: AttackerLevel::new(3).unwrap(),
            mobility: false,
            n_traces: 1,
            master_seed: 4,
            noise: 0.2,
        };
        let trace = gen_msa(&spec, 0).unwrap();
        let g = build_layer_graph(&trace, Layer::Nas).unwrap();
        let req = g.node_index(MessageKind::TrackingAreaUpdateRequest).unwrap();
        let rej = g.node_index(MessageKind::TrackingAreaUpdateReject).unwrap();
        let edge = g
            .edges
            .iter()
            .find(|e| e.src == req && e.dst == rej)
            .expect("request→reject edge");
        assert_eq!(edge.majority_label(), 20);
    }

    #[test]
    fn build_graph_matches_brute_force_enumerator() {
        use rand::{Rng, SeedableRng};
        let kinds = MessageKind::layer_kinds(Layer::Nas);
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..200 {
            let len = rng.gen_range(1..=20usize);
            let packets: Vec<Packet> = (0..len)
                .map(|i| {
                    let kind = kinds[rng.gen_range(0..kinds.len())];
                    let label = if rng.gen_bool(0.3) {
                        Label::Msa(AttackKind::from_id(rng.gen_range(1..=21)).unwrap())
                    } else {
                        Label::Benign
                    };
                    packet("t", i as u32, kind, label)
                })
                .collect();
            let g = build_graph(&packets).unwrap();

            // oracle: enumerate pairs directly into maps
            let mut pair_count: BTreeMap<(String, String), u32> = BTreeMap::new();
            let mut pair_labels: BTreeMap<(String, String), BTreeMap<u32, u32>> = BTreeMap::new();
            let mut pair_first: BTreeMap<(String, String), usize> = BTreeMap::new();
            for (pos, w) in packets.windows(2).enumerate() {
                let key = (w[0].kind.name().to_string(), w[1].kind.name().to_string());
                *pair_count.entry(key.clone()).or_insert(0) += 1;
                let code = crate::model::label_code(w[1].label, DatasetKind::Msa).unwrap();
                *pair_labels.entry(key.clone()).or_default().entry(code).or_insert(0) += 1;
                pair_first.entry(key).or_insert(pos);
            }

            assert_eq!(g.edges.len(), pair_count.len());
            let mut node_names: Vec<&str> = packets.iter().map(|p| p.kind.name()).collect();
            node_names.sort_unstable();
            node_names.dedup();
            assert_eq!(
                g.nodes.iter().map(|k| k.name()).collect::<Vec<_>>(),
                node_names
            );
            let denom = (packets.len().max(2) - 1) as f64;
            for e in &g.edges {
                let key = (
                    g.nodes[e.src].name().to_string(),
                    g.nodes[e.dst].name().to_string(),
                );
                assert_eq!(e.count, pair_count[&key]);
                assert_eq!(&e.labels, &pair_labels[&key]);
                assert!((e.first_pos - pair_first[&key] as f64 / denom).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn insertion_order_does_not_change_serialization() {
        use MessageKind::*;
        let a = vec![
            packet("t", 0, TrackingAreaUpdateRequest, Label::Benign),
            packet("t", 1, AttachRequest, Label::Benign),
            packet("t", 2, TrackingAreaUpdateRequest, Label::Benign),
        ];
        // same node kinds, first seen in a different order
        let b = vec![
            packet("t", 0, AttachRequest, Label::Benign),
            packet("t", 1, TrackingAreaUpdateRequest, Label::Benign),
        ];
        let ga = build_graph(&a).unwrap();
        let gb = build_graph(&b).unwrap();
        // node order is canonical regardless of first appearance
        assert_eq!(
            ga.nodes.iter().map(|k| k.name()).collect::<Vec<_>>(),
            gb.nodes.iter().map(|k| k.name()).collect::<Vec<_>>()
        );
    }

    #[test]
    fn overlap_containment_and_unknown_attack() {
        let attack = AttackKind::from_id(14).unwrap();
        let spec = ScenarioSpec {
            scenario: Label::Msa(attack),
            attacker_level: AttackerLevel::new(3).unwrap(),
            mobility: false,
            n_traces: 1,
            master_seed: 6,
            noise: 0.2,
        };
        let trace = gen_msa(&spec, 0).unwrap();
        let g = build_layer_graph(&trace, Layer::Nas).unwrap();
        let bank = AttackPathBank::from_graphs(Layer::Nas, std::slice::from_ref(&g));
        assert_eq!(overlap_score(&g, attack, &bank).unwrap(), 1.0);
        assert!(matches!(
            overlap_score(&g, AttackKind::from_id(5).unwrap(), &bank),
            Err(Error::UnknownAttack(5))
        ));
    }

    #[test]
    fn sage_and_edge_head_pass_gradient_check() {
        use crate::numkernel::grad_check;
        use MessageKind::*;
        let packets = vec![
            packet("t", 0, AttachRequest, Label::Benign),
            packet("t", 1, AuthenticationRequest, Label::Benign),
            packet("t", 2, TrackingAreaUpdateRequest, Label::Benign),
            packet("t", 3, TrackingAreaUpdateReject, Label::Msa(AttackKind::from_id(20).unwrap())),
            packet("t", 4, TrackingAreaUpdateRequest, Label::Benign),
            packet("t", 5, TrackingAreaUpdateReject, Label::Msa(AttackKind::from_id(20).unwrap())),
            packet("t", 6, IdentityRequest, Label::Msa(AttackKind::from_id(14).unwrap())),
        ];
        let graph = build_graph(&packets).unwrap();
        let weights = vec![1.0; N_CLASSES];
        for seed in 0..20u64 {
            let config = SageConfig { hidden: 8, seed: 900 + seed, ..Default::default() };
            let model = SageModel::new(Layer::Nas, config);
            let mut params = model.params.clone();
            params.zero_grads();
            let fwd = sage_forward(&params, config.hidden, &graph);
            sage_backward(&mut params, &weights, config.hidden, &graph, &fwd);
            let err = grad_check(
                &mut params,
                |p| sage_edge_nll(&sage_forward(p, config.hidden, &graph), &graph, &weights),
                1e-5,
            );
            assert!(err < 1e-5, "seed {seed}: rel err {err}");
        }
    }

    #[test]
    fn missing_class_is_reported() {
        use MessageKind::*;
        let packets = vec![
            packet("t", 0, AttachRequest, Label::Benign),
            packet("t", 1, AuthenticationRequest, Label::Benign),
        ];
        let g = build_graph(&packets).unwrap();
        let err = train_msa(&[g], Layer::Nas, SageConfig { epochs: 1, ..Default::default() });
        assert!(matches!(err, Err(Error::MissingClass(_))));
    }
}
