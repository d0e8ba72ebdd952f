//! Signature-baseline detectors: DFA, Mealy machine, and past-time LTL
//! monitors over message-kind alphabets, with the eight rules the
//! comparison harness runs. Each rule keys on an attack's defining
//! message, its cause field, or a one-step ordering.

use serde::{Deserialize, Serialize};

use crate::model::{AttackKind, FieldValue, Label, Layer, MessageKind, Packet, Trace};

/// Predicate over a single packet: a message kind and, optionally, an
/// integer field constrained to a value set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PacketPred {
    pub kind: String,
    pub layer: Layer,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub field_in: Option<(String, Vec<i64>)>,
}

impl PacketPred {
    pub fn kind(layer: Layer, kind: MessageKind) -> PacketPred {
        PacketPred {
            kind: kind.name().to_string(),
            layer,
            field_in: None,
        }
    }

    pub fn kind_field(layer: Layer, kind: MessageKind, field: &str, values: &[i64]) -> PacketPred {
        PacketPred {
            kind: kind.name().to_string(),
            layer,
            field_in: Some((field.to_string(), values.to_vec())),
        }
    }

    pub fn matches(&self, packet: &Packet) -> bool {
        if packet.kind.name() != self.kind {
            return false;
        }
        match &self.field_in {
            None => true,
            Some((field, values)) => matches!(
                packet.fields.get(field),
                Some(FieldValue::Int(v)) if values.contains(v)
            ),
        }
    }
}

/// Source rule a signature is compiled from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule")]
pub enum SignatureRule {
    /// Fires as soon as a matching packet is seen.
    Presence { pred: PacketPred },
    /// Fires when `then` immediately follows `first`.
    Adjacency { first: PacketPred, then: PacketPred },
    /// Fires when `target` is seen and the previous packet does not match
    /// `exempt_prev`.
    NotPrecededBy { target: PacketPred, exempt_prev: PacketPred },
}

/// Deterministic automaton over packet symbols; the transition function is
/// total (unlisted symbols self-loop through the symbol classifier).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DfaSignature {
    pub attack: AttackKind,
    pub layer: Layer,
    pub rule: SignatureRule,
    /// transitions[state][symbol] → state
    transitions: Vec<Vec<usize>>,
    accepting: Vec<bool>,
}

/// Same automaton with the alarm attached to the transition instead of
/// the state.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MealySignature {
    pub dfa: DfaSignature,
}

impl SignatureRule {
    /// Maps a packet to the automaton's input symbol.
    fn symbol(&self, packet: &Packet) -> usize {
        match self {
            SignatureRule::Presence { pred } => usize::from(pred.matches(packet)),
            SignatureRule::Adjacency { first, then } => {
                match (first.matches(packet), then.matches(packet)) {
                    (false, false) => 0,
                    (true, false) => 1,
                    (false, true) => 2,
                    (true, true) => 3,
                }
            }
            SignatureRule::NotPrecededBy { target, exempt_prev } => {
                if target.matches(packet) {
                    2
                } else if exempt_prev.matches(packet) {
                    1
                } else {
                    0
                }
            }
        }
    }

    fn compile(&self) -> (Vec<Vec<usize>>, Vec<bool>) {
        match self {
            SignatureRule::Presence { .. } => (
                vec![
                    vec![0, 1], // start
                    vec![1, 1], // accept
                ],
                vec![false, true],
            ),
            SignatureRule::Adjacency { .. } => (
                // symbols: 0 other, 1 first, 2 then, 3 both
                vec![
                    vec![0, 1, 0, 1], // start
                    vec![0, 1, 2, 2], // saw-first
                    vec![2, 2, 2, 2], // accept
                ],
                vec![false, false, true],
            ),
            SignatureRule::NotPrecededBy { .. } => (
                // symbols: 0 other, 1 exempt, 2 target
                vec![
                    vec![0, 1, 2], // prev not exempt
                    vec![0, 1, 0], // prev exempt
                    vec![2, 2, 2], // accept
                ],
                vec![false, false, true],
            ),
        }
    }
}

impl DfaSignature {
    pub fn compile(attack: AttackKind, layer: Layer, rule: SignatureRule) -> DfaSignature {
        let (transitions, accepting) = rule.compile();
        DfaSignature {
            attack,
            layer,
            rule,
            transitions,
            accepting,
        }
    }

    pub fn n_states(&self) -> usize {
        self.transitions.len()
    }
}

fn layer_packets(trace: &Trace, layer: Layer) -> Vec<&Packet> {
    trace.packets.iter().filter(|p| p.layer == layer).collect()
}

/// Runs the automaton; detected iff an accepting state is entered, with
/// the index (within the signature's layer) of the first detection.
pub fn eval_dfa(sig: &DfaSignature, trace: &Trace) -> (bool, Option<usize>) {
    let mut state = 0usize;
    for (idx, packet) in layer_packets(trace, sig.layer).iter().enumerate() {
        let symbol = sig.rule.symbol(packet);
        state = sig.transitions[state][symbol];
        if sig.accepting[state] {
            return (true, Some(idx));
        }
    }
    (false, None)
}

/// Mealy semantics: the alarm fires on the transition that enters an
/// accepting state.
pub fn eval_mealy(sig: &MealySignature, trace: &Trace) -> (bool, Option<usize>) {
    let dfa = &sig.dfa;
    let mut state = 0usize;
    for (idx, packet) in layer_packets(trace, dfa.layer).iter().enumerate() {
        let symbol = dfa.rule.symbol(packet);
        let next = dfa.transitions[state][symbol];
        let alarm = dfa.accepting[next] && !dfa.accepting[state];
        state = next;
        if alarm {
            return (true, Some(idx));
        }
    }
    (false, None)
}

/// Past-time LTL formula over packet predicates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op")]
pub enum PltlFormula {
    Atom { pred: PacketPred },
    Not { f: Box<PltlFormula> },
    And { lhs: Box<PltlFormula>, rhs: Box<PltlFormula> },
    Or { lhs: Box<PltlFormula>, rhs: Box<PltlFormula> },
    Yesterday { f: Box<PltlFormula> },
    Once { f: Box<PltlFormula> },
    Historically { f: Box<PltlFormula> },
    Since { lhs: Box<PltlFormula>, rhs: Box<PltlFormula> },
}

impl PltlFormula {
    pub fn atom(pred: PacketPred) -> PltlFormula {
        PltlFormula::Atom { pred }
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: PltlFormula) -> PltlFormula {
        PltlFormula::Not { f: Box::new(f) }
    }

    pub fn and(lhs: PltlFormula, rhs: PltlFormula) -> PltlFormula {
        PltlFormula::And { lhs: Box::new(lhs), rhs: Box::new(rhs) }
    }

    pub fn or(lhs: PltlFormula, rhs: PltlFormula) -> PltlFormula {
        PltlFormula::Or { lhs: Box::new(lhs), rhs: Box::new(rhs) }
    }

    pub fn yesterday(f: PltlFormula) -> PltlFormula {
        PltlFormula::Yesterday { f: Box::new(f) }
    }

    pub fn once(f: PltlFormula) -> PltlFormula {
        PltlFormula::Once { f: Box::new(f) }
    }

    /// Subformulas in evaluation order (children before parents).
    fn postorder(&self) -> Vec<&PltlFormula> {
        let mut out = Vec::new();
        fn walk<'f>(f: &'f PltlFormula, out: &mut Vec<&'f PltlFormula>) {
            match f {
                PltlFormula::Atom { .. } => {}
                PltlFormula::Not { f: inner }
                | PltlFormula::Yesterday { f: inner }
                | PltlFormula::Once { f: inner }
                | PltlFormula::Historically { f: inner } => walk(inner, out),
                PltlFormula::And { lhs, rhs }
                | PltlFormula::Or { lhs, rhs }
                | PltlFormula::Since { lhs, rhs } => {
                    walk(lhs, out);
                    walk(rhs, out);
                }
            }
            out.push(f);
        }
        walk(self, &mut out);
        out
    }
}

/// Single left-to-right pass with constant per-step state: every
/// subformula keeps only its previous-step value.
pub fn eval_pltl(formula: &PltlFormula, packets: &[&Packet]) -> (Vec<bool>, bool) {
    let order = formula.postorder();
    let index_of = |f: &PltlFormula| -> usize {
        order
            .iter()
            .position(|g| std::ptr::eq(*g, f))
            .expect("subformula present")
    };
    let mut prev: Vec<bool> = vec![false; order.len()];
    let mut per_step = Vec::with_capacity(packets.len());

    for (step, packet) in packets.iter().enumerate() {
        let mut cur = vec![false; order.len()];
        for (i, f) in order.iter().enumerate() {
            cur[i] = match f {
                PltlFormula::Atom { pred } => pred.matches(packet),
                PltlFormula::Not { f } => !cur[index_of(f)],
                PltlFormula::And { lhs, rhs } => cur[index_of(lhs)] && cur[index_of(rhs)],
                PltlFormula::Or { lhs, rhs } => cur[index_of(lhs)] || cur[index_of(rhs)],
                PltlFormula::Yesterday { f } => step > 0 && prev[index_of(f)],
                PltlFormula::Once { f } => cur[index_of(f)] || (step > 0 && prev[i]),
                PltlFormula::Historically { f } => {
                    cur[index_of(f)] && (step == 0 || prev[i])
                }
                PltlFormula::Since { lhs, rhs } => {
                    cur[index_of(rhs)] || (step > 0 && prev[i] && cur[index_of(lhs)])
                }
            };
        }
        per_step.push(cur[order.len() - 1]);
        prev = cur;
    }
    let verdict = per_step.iter().any(|&v| v);
    (per_step, verdict)
}

/// Reference evaluator that recomputes satisfaction from scratch at every
/// step by recursion over the whole prefix. Test oracle only.
pub fn eval_pltl_brute(formula: &PltlFormula, packets: &[&Packet]) -> (Vec<bool>, bool) {
    fn sat(f: &PltlFormula, packets: &[&Packet], i: usize) -> bool {
        match f {
            PltlFormula::Atom { pred } => pred.matches(packets[i]),
            PltlFormula::Not { f } => !sat(f, packets, i),
            PltlFormula::And { lhs, rhs } => sat(lhs, packets, i) && sat(rhs, packets, i),
            PltlFormula::Or { lhs, rhs } => sat(lhs, packets, i) || sat(rhs, packets, i),
            PltlFormula::Yesterday { f } => i > 0 && sat(f, packets, i - 1),
            PltlFormula::Once { f } => (0..=i).any(|j| sat(f, packets, j)),
            PltlFormula::Historically { f } => (0..=i).all(|j| sat(f, packets, j)),
            PltlFormula::Since { lhs, rhs } => (0..=i).any(|j| {
                sat(rhs, packets, j) && ((j + 1)..=i).all(|k| sat(lhs, packets, k))
            }),
        }
    }
    let per_step: Vec<bool> = (0..packets.len())
        .map(|i| sat(formula, packets, i))
        .collect();
    let verdict = per_step.iter().any(|&v| v);
    (per_step, verdict)
}

pub fn eval_pltl_trace(formula: &PltlFormula, layer: Layer, trace: &Trace) -> (Vec<bool>, bool) {
    eval_pltl(formula, &layer_packets(trace, layer))
}

/// One attack's three signature representations.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SignatureSet {
    pub attack: AttackKind,
    pub layer: Layer,
    pub dfa: DfaSignature,
    pub mealy: MealySignature,
    pub pltl: PltlFormula,
}

impl SignatureSet {
    fn new(attack_id: u8, layer: Layer, rule: SignatureRule, pltl: PltlFormula) -> SignatureSet {
        let attack = AttackKind::from_id(attack_id).expect("registered attack");
        let dfa = DfaSignature::compile(attack, layer, rule);
        SignatureSet {
            attack,
            layer,
            mealy: MealySignature { dfa: dfa.clone() },
            dfa,
            pltl,
        }
    }
}

/// EMM causes that deny service or force a downgrade.
const REJECT_CAUSES: [i64; 3] = [3, 7, 8];

/// The eight signature-covered attacks.
pub fn builtin_signatures() -> Vec<SignatureSet> {
    use MessageKind::*;
    let nas = Layer::Nas;
    let rrc = Layer::Rrc;
    let adjacency_pltl = |first: PacketPred, then: PacketPred| {
        PltlFormula::and(PltlFormula::atom(then), PltlFormula::yesterday(PltlFormula::atom(first)))
    };

    vec![
        // Attach Reject: the reject message itself, keyed on the
        // downgrade causes.
        SignatureSet::new(
            2,
            nas,
            SignatureRule::Presence {
                pred: PacketPred::kind_field(nas, AttachReject, "emm_cause", &REJECT_CAUSES),
            },
            PltlFormula::atom(PacketPred::kind_field(nas, AttachReject, "emm_cause", &REJECT_CAUSES)),
        ),
        // IMSI catching: identity probe right after the tracking-area
        // update.
        SignatureSet::new(
            14,
            nas,
            SignatureRule::Adjacency {
                first: PacketPred::kind(nas, TrackingAreaUpdateRequest),
                then: PacketPred::kind(nas, IdentityRequest),
            },
            adjacency_pltl(
                PacketPred::kind(nas, TrackingAreaUpdateRequest),
                PacketPred::kind(nas, IdentityRequest),
            ),
        ),
        // Service Reject with a denial cause.
        SignatureSet::new(
            8,
            nas,
            SignatureRule::Presence {
                pred: PacketPred::kind_field(nas, ServiceReject, "emm_cause", &REJECT_CAUSES),
            },
            PltlFormula::atom(PacketPred::kind_field(nas, ServiceReject, "emm_cause", &REJECT_CAUSES)),
        ),
        // TAU Reject with a denial cause.
        SignatureSet::new(
            20,
            nas,
            SignatureRule::Presence {
                pred: PacketPred::kind_field(nas, TrackingAreaUpdateReject, "emm_cause", &REJECT_CAUSES),
            },
            PltlFormula::atom(PacketPred::kind_field(
                nas,
                TrackingAreaUpdateReject,
                "emm_cause",
                &REJECT_CAUSES,
            )),
        ),
        // Measurement report theft: a UE information request straight
        // after connection setup.
        SignatureSet::new(
            4,
            rrc,
            SignatureRule::Adjacency {
                first: PacketPred::kind(rrc, RrcConnectionSetupComplete),
                then: PacketPred::kind(rrc, UeInformationRequest),
            },
            adjacency_pltl(
                PacketPred::kind(rrc, RrcConnectionSetupComplete),
                PacketPred::kind(rrc, UeInformationRequest),
            ),
        ),
        // Paging with IMSI: cloned IMSI paging right after the
        // tracking-area update.
        SignatureSet::new(
            12,
            nas,
            SignatureRule::Adjacency {
                first: PacketPred::kind(nas, TrackingAreaUpdateRequest),
                then: PacketPred::kind(nas, PagingWithImsi),
            },
            adjacency_pltl(
                PacketPred::kind(nas, TrackingAreaUpdateRequest),
                PacketPred::kind(nas, PagingWithImsi),
            ),
        ),
        // Authentication failure storm, keyed on the failure causes.
        SignatureSet::new(
            10,
            nas,
            SignatureRule::Presence {
                pred: PacketPred::kind_field(nas, AuthenticationFailure, "emm_cause", &[20, 21]),
            },
            PltlFormula::atom(PacketPred::kind_field(nas, AuthenticationFailure, "emm_cause", &[20, 21])),
        ),
        // Numb attack: an authentication reject that does not follow an
        // authentication response. The automaton variant keys on the
        // desync's opening move, a security-mode complete straight after
        // the tracking-area update.
        SignatureSet::new(
            15,
            nas,
            SignatureRule::Adjacency {
                first: PacketPred::kind(nas, TrackingAreaUpdateRequest),
                then: PacketPred::kind(nas, SecurityModeComplete),
            },
            PltlFormula::and(
                PltlFormula::atom(PacketPred::kind(nas, AuthenticationReject)),
                PltlFormula::not(PltlFormula::yesterday(PltlFormula::atom(PacketPred::kind(
                    nas,
                    AuthenticationResponse,
                )))),
            ),
        ),
    ]
}

/// Signature JSON DSL entry ({type, attack, layer, …}).
pub fn signatures_to_json(sets: &[SignatureSet]) -> serde_json::Value {
    let mut out = Vec::new();
    for s in sets {
        out.push(serde_json::json!({
            "type": "dfa",
            "attack": s.attack.id(),
            "layer": s.layer,
            "rule": s.dfa.rule,
        }));
        out.push(serde_json::json!({
            "type": "mealy",
            "attack": s.attack.id(),
            "layer": s.layer,
            "rule": s.mealy.dfa.rule,
        }));
        out.push(serde_json::json!({
            "type": "pltl",
            "attack": s.attack.id(),
            "layer": s.layer,
            "formula": s.pltl,
        }));
    }
    serde_json::json!({ "format_version": 1, "signatures": out })
}

/// Per-attack signature detection rates on original vs reshaped traces,
/// with an optional companion classifier's recovery rates.
#[derive(Debug, Clone, Serialize)]
pub struct EvasionEntry {
    pub attack_id: u8,
    pub attack_name: String,
    pub n_original: usize,
    pub n_reshaped: usize,
    pub dfa_original: f64,
    pub dfa_reshaped: f64,
    pub mealy_original: f64,
    pub mealy_reshaped: f64,
    pub pltl_original: f64,
    pub pltl_reshaped: f64,
    pub companion_original: Option<f64>,
    pub companion_reshaped: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct EvasionReport {
    pub entries: Vec<EvasionEntry>,
}

/// Runs every registered signature over its attack's original and
/// reshaped traces. `companion` is the learning-based recognizer run on
/// the same traces; it reports the rate at which the original class is
/// recovered.
pub fn evasion_report(
    originals: &[Trace],
    reshaped: &[Trace],
    companion: Option<&dyn Fn(&Trace) -> Label>,
) -> EvasionReport {
    let mut entries = Vec::new();
    for set in builtin_signatures() {
        let attack = set.attack;
        let matching = |traces: &[Trace]| -> Vec<Trace> {
            traces
                .iter()
                .filter(|t| t.scenario == Label::Msa(attack))
                .cloned()
                .collect()
        };
        let orig = matching(originals);
        let resh = matching(reshaped);
        let rate = |traces: &[Trace], f: &dyn Fn(&Trace) -> bool| -> f64 {
            if traces.is_empty() {
                return 0.0;
            }
            traces.iter().filter(|t| f(t)).count() as f64 / traces.len() as f64
        };
        let companion_rate = |traces: &[Trace]| -> Option<f64> {
            companion.map(|classify| {
                if traces.is_empty() {
                    return 0.0;
                }
                traces
                    .iter()
                    .filter(|t| classify(t) == Label::Msa(attack))
                    .count() as f64
                    / traces.len() as f64
            })
        };

        entries.push(EvasionEntry {
            attack_id: attack.id(),
            attack_name: attack.name().to_string(),
            n_original: orig.len(),
            n_reshaped: resh.len(),
            dfa_original: rate(&orig, &|t| eval_dfa(&set.dfa, t).0),
            dfa_reshaped: rate(&resh, &|t| eval_dfa(&set.dfa, t).0),
            mealy_original: rate(&orig, &|t| eval_mealy(&set.mealy, t).0),
            mealy_reshaped: rate(&resh, &|t| eval_mealy(&set.mealy, t).0),
            pltl_original: rate(&orig, &|t| eval_pltl_trace(&set.pltl, set.layer, t).1),
            pltl_reshaped: rate(&resh, &|t| eval_pltl_trace(&set.pltl, set.layer, t).1),
            companion_original: companion_rate(&orig),
            companion_reshaped: companion_rate(&resh),
        });
    }
    EvasionReport { entries }
}
