//! Level-4 adaptive reshaping: mutate non-critical fields of attack
//! messages and inject benign protocol messages ahead of them, without
//! touching the attack packets' ground-truth labels.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{mix64, msg_fields, CellParams};
use crate::error::{Error, Result};
use crate::model::{FieldValue, Label, Layer, MessageKind, Packet, Trace};

/// Cause values an adaptive attacker swaps in; they keep the attack
/// working but sit outside the usual downgrade set.
const ALT_EMM_CAUSES: [i64; 8] = [2, 5, 6, 9, 10, 11, 12, 13];
const RESERVED_SECURITY_HEADERS: [i64; 4] = [12, 13, 14, 15];

/// Non-critical fields an adaptive attacker may rewrite, per message kind.
/// Everything else is treated as attack-critical and left alone.
pub fn mutable_fields(kind: MessageKind) -> &'static [&'static str] {
    use MessageKind::*;
    match kind {
        AttachReject | AuthenticationFailure | SecurityModeReject
        | TrackingAreaUpdateReject | ServiceReject => &["emm_cause", "security_header_type"],
        AuthenticationReject | PagingWithImsi | EmmInformation => &["security_header_type", "timezone"],
        RrcConnectionRelease => &["release_cause"],
        RrcConnectionReestablishmentReject | RrcConnectionReestablishmentRequest => {
            &["reestablishment_cause"]
        }
        Paging => &["paging_record_count"],
        k if k.layer() == Layer::Nas => &["security_header_type"],
        _ => &["transaction_id"],
    }
}

fn mutate_field(name: &str, value: &FieldValue, rng: &mut ChaCha8Rng) -> FieldValue {
    match (name, value) {
        ("emm_cause", _) => FieldValue::Int(*ALT_EMM_CAUSES.choose(rng).expect("non-empty")),
        ("security_header_type", _) => {
            FieldValue::Int(*RESERVED_SECURITY_HEADERS.choose(rng).expect("non-empty"))
        }
        ("release_cause", FieldValue::Int(v)) | ("reestablishment_cause", FieldValue::Int(v)) => {
            FieldValue::Int((v + 4) % 8 + 8)
        }
        ("paging_record_count", FieldValue::Int(v)) => FieldValue::Int(v + 3),
        ("timezone", FieldValue::Int(v)) => FieldValue::Int((v + 5) % 24),
        ("transaction_id", FieldValue::Int(v)) => FieldValue::Int((v + 1) % 4),
        (_, v) => v.clone(),
    }
}

const NAS_INJECTION_KINDS: [MessageKind; 3] = [
    MessageKind::IdentityRequest,
    MessageKind::AuthenticationRequest,
    MessageKind::EmmInformation,
];
const RRC_INJECTION_KINDS: [MessageKind; 2] = [
    MessageKind::UlInformationTransfer,
    MessageKind::DlInformationTransfer,
];

/// Cell parameters recovered from the first broadcast packet, used to fill
/// plausible fields on injected messages.
fn recover_cell(trace: &Trace) -> CellParams {
    let get = |p: &Packet, name: &str| -> Option<i64> {
        match p.fields.get(name) {
            Some(FieldValue::Int(v)) => Some(*v),
            _ => None,
        }
    };
    for p in &trace.packets {
        if p.fields.contains_key("cell_identity") {
            return CellParams {
                mcc: get(p, "mcc").unwrap_or(310),
                mnc: get(p, "mnc").unwrap_or(260),
                tac: get(p, "tac").unwrap_or(1),
                cell_identity: get(p, "cell_identity").unwrap_or(1),
                pci: get(p, "pci").unwrap_or(0),
                rsrp: get(p, "rsrp").unwrap_or(-80),
            };
        }
    }
    CellParams { mcc: 310, mnc: 260, tac: 1, cell_identity: 1, pci: 0, rsrp: -80 }
}

/// Applies both level-4 strategies to an attack trace. Deterministic for a
/// given (trace, seed); errors on benign traces.
pub fn reshape(trace: &Trace, seed: u64) -> Result<Trace> {
    if trace.scenario.is_benign() {
        return Err(Error::NotAnAttackTrace);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(mix64(seed, trace.seed));
    let cell = recover_cell(trace);

    // strategy 1: rewrite non-critical fields on every attack packet
    let mut packets: Vec<Packet> = trace.packets.clone();
    for p in packets.iter_mut().filter(|p| !p.label.is_benign()) {
        for name in mutable_fields(p.kind) {
            if let Some(value) = p.fields.get(*name) {
                let mutated = mutate_field(name, value, &mut rng);
                p.fields.insert(name.to_string(), mutated);
            }
        }
    }

    // strategy 2: per layer, drop 1..=3 benign messages in front of attack
    // packets; the first attack packet always gets one so the attack no
    // longer follows its usual predecessor
    let mut inject_before: Vec<(usize, MessageKind)> = Vec::new();
    for layer in [Layer::Nas, Layer::Rrc] {
        let attack_pos: Vec<usize> = packets
            .iter()
            .enumerate()
            .filter(|(_, p)| p.layer == layer && !p.label.is_benign())
            .map(|(i, _)| i)
            .collect();
        if attack_pos.is_empty() {
            continue;
        }
        let total = rng.gen_range(1..=3usize).min(attack_pos.len());
        let mut chosen = vec![attack_pos[0]];
        let mut rest: Vec<usize> = attack_pos[1..].to_vec();
        rest.shuffle(&mut rng);
        chosen.extend(rest.into_iter().take(total - 1));

        let candidates: &[MessageKind] = match layer {
            Layer::Nas => &NAS_INJECTION_KINDS,
            Layer::Rrc => &RRC_INJECTION_KINDS,
        };
        let offset = rng.gen_range(0..candidates.len());
        for (n, pos) in chosen.into_iter().enumerate() {
            // never duplicate the message being masked
            let mut kind = candidates[(offset + n) % candidates.len()];
            if kind == packets[pos].kind {
                kind = candidates[(offset + n + 1) % candidates.len()];
            }
            inject_before.push((pos, kind));
        }
    }
    inject_before.sort_by_key(|(pos, _)| *pos);

    let mut reshaped: Vec<Packet> = Vec::with_capacity(packets.len() + inject_before.len());
    let mut pending = inject_before.into_iter().peekable();
    for (idx, packet) in packets.into_iter().enumerate() {
        while pending.peek().is_some_and(|(pos, _)| *pos == idx) {
            let (_, kind) = pending.next().expect("peeked");
            reshaped.push(Packet {
                trace_id: trace.trace_id.clone(),
                seq: 0,
                layer: kind.layer(),
                kind,
                fields: msg_fields(kind, &cell, None, false),
                label: Label::Benign,
            });
        }
        reshaped.push(packet);
    }
    for (seq, p) in reshaped.iter_mut().enumerate() {
        p.seq = seq as u32;
    }

    Ok(Trace {
        trace_id: trace.trace_id.clone(),
        scenario: trace.scenario,
        attacker_level: trace.attacker_level,
        seed: trace.seed,
        mobility: trace.mobility,
        packets: reshaped,
    })
}
