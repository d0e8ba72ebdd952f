//! Deterministic generator of labeled benign, FBS, and multi-step-attack
//! traces, with mobility handovers and level-4 attack reshaping.

pub mod reshape;
pub mod scripts;

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    AttackKind, AttackerLevel, FieldMap, FieldValue, Label, Layer, MessageKind, Packet, Trace,
};
use scripts::{attack_script, ScriptStep};

pub use reshape::reshape;

/// One generation request: a scenario class, attacker level, mobility flag,
/// and how many traces to emit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub scenario: Label,
    pub attacker_level: AttackerLevel,
    pub mobility: bool,
    pub n_traces: u32,
    pub master_seed: u64,
    /// Benign-chatter rate in `[0,1]`; also scales benign behavioral
    /// variation (identity re-requests, congestion rejects).
    pub noise: f64,
}

impl ScenarioSpec {
    pub fn validate(&self) -> Result<()> {
        let lvl = self.attacker_level.value();
        match self.scenario {
            Label::Msa(_) if lvl < 3 => {
                return Err(Error::InvalidSpec(format!(
                    "MSA scenarios need attacker level >= 3, got {lvl}"
                )))
            }
            Label::Fbs if lvl > 2 => {
                return Err(Error::InvalidSpec(format!(
                    "FBS scenarios need attacker level <= 2, got {lvl}"
                )))
            }
            _ => {}
        }
        if !(0.0..=1.0).contains(&self.noise) {
            return Err(Error::InvalidSpec(format!("noise {} not in [0,1]", self.noise)));
        }
        if self.n_traces == 0 {
            return Err(Error::InvalidSpec("n_traces must be positive".into()));
        }
        Ok(())
    }
}

/// 64-bit mix of (master seed, trace index) into a per-trace seed.
/// splitmix64 finalizer over the golden-ratio-spread index.
pub fn mix64(master: u64, index: u64) -> u64 {
    let mut z = master.wrapping_add(index.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Radio/cell parameters stamped onto messages.
#[derive(Debug, Clone, Copy)]
pub struct CellParams {
    pub mcc: i64,
    pub mnc: i64,
    pub tac: i64,
    pub cell_identity: i64,
    pub pci: i64,
    pub rsrp: i64,
}

impl CellParams {
    fn legitimate(rng: &mut ChaCha8Rng) -> CellParams {
        CellParams {
            mcc: 310,
            mnc: 260,
            tac: 1000 + rng.gen_range(0..200),
            cell_identity: 10_000 + rng.gen_range(0..5_000),
            pci: rng.gen_range(0..504),
            rsrp: -rng.gen_range(75..96),
        }
    }

    fn neighbor(&self, rng: &mut ChaCha8Rng) -> CellParams {
        CellParams {
            tac: self.tac + 1 + rng.gen_range(0..20),
            cell_identity: self.cell_identity + 1 + rng.gen_range(0..500),
            pci: (self.pci + 7) % 504,
            rsrp: -rng.gen_range(75..96),
            ..*self
        }
    }

    /// FBS cell parameters per attacker level.
    fn fbs(legit: &CellParams, level: u8, rng: &mut ChaCha8Rng) -> CellParams {
        match level {
            // naive: test-network identifiers, absurd signal strength
            0 => CellParams {
                mcc: 1,
                mnc: 1,
                tac: legit.tac + 500,
                cell_identity: rng.gen_range(1..1000),
                pci: rng.gen_range(0..504),
                rsrp: -30,
            },
            // plausible signal, operator codes kept, different TAC to
            // force a tracking-area update
            1 => CellParams {
                tac: legit.tac + 500,
                cell_identity: rng.gen_range(1..1000),
                pci: rng.gen_range(0..504),
                rsrp: -60,
                ..*legit
            },
            // full clone of the legitimate cell
            _ => CellParams { rsrp: -60, ..*legit },
        }
    }
}

struct TraceBuilder {
    trace_id: String,
    next_seq: u32,
    packets: Vec<Packet>,
}

impl TraceBuilder {
    fn new(trace_id: &str) -> TraceBuilder {
        TraceBuilder {
            trace_id: trace_id.to_string(),
            next_seq: 0,
            packets: Vec::new(),
        }
    }

    fn push(&mut self, kind: MessageKind, label: Label, cell: &CellParams, cause: Option<i64>, secure: bool) {
        let packet = Packet {
            trace_id: self.trace_id.clone(),
            seq: self.next_seq,
            layer: kind.layer(),
            kind,
            fields: msg_fields(kind, cell, cause, secure),
            label,
        };
        self.next_seq += 1;
        self.packets.push(packet);
    }
}

fn put(fields: &mut FieldMap, name: &str, value: FieldValue) {
    fields.insert(name.to_string(), value);
}

/// Field template per message kind.
pub fn msg_fields(kind: MessageKind, cell: &CellParams, cause: Option<i64>, secure: bool) -> FieldMap {
    use MessageKind::*;
    let mut f = FieldMap::new();
    match kind.layer() {
        Layer::Nas => {
            put(&mut f, "emm_msg_type", FieldValue::from(kind.name()));
            put(&mut f, "security_header_type", FieldValue::Int(if secure { 4 } else { 0 }));
        }
        Layer::Rrc => {
            put(&mut f, "c1_msg_type", FieldValue::from(kind.name()));
        }
    }
    match kind {
        AttachRequest => {
            put(&mut f, "mcc", FieldValue::Int(cell.mcc));
            put(&mut f, "mnc", FieldValue::Int(cell.mnc));
            put(&mut f, "tac", FieldValue::Int(cell.tac));
            put(&mut f, "attach_type", FieldValue::Int(1));
            put(&mut f, "nas_key_set_id", FieldValue::Int(7));
        }
        AttachAccept => {
            put(&mut f, "tac", FieldValue::Int(cell.tac));
            put(&mut f, "tmsi", FieldValue::Int(cell.cell_identity * 13 % 65_536));
        }
        AttachReject | AuthenticationFailure | SecurityModeReject | TrackingAreaUpdateReject
        | ServiceReject => {
            put(&mut f, "emm_cause", FieldValue::Int(cause.unwrap_or(15)));
        }
        AuthenticationRequest | AuthenticationResponse => {
            put(&mut f, "auth_param", FieldValue::Int(cell.cell_identity % 9973));
            put(&mut f, "nas_key_set_id", FieldValue::Int(0));
        }
        IdentityRequest | IdentityResponse => {
            put(&mut f, "identity_type", FieldValue::Int(cause.unwrap_or(1)));
        }
        SecurityModeCommand => {
            put(&mut f, "nas_key_set_id", FieldValue::Int(0));
        }
        TrackingAreaUpdateRequest => {
            put(&mut f, "mcc", FieldValue::Int(cell.mcc));
            put(&mut f, "mnc", FieldValue::Int(cell.mnc));
            put(&mut f, "tac", FieldValue::Int(cell.tac));
            put(&mut f, "update_type", FieldValue::Int(0));
        }
        TrackingAreaUpdateAccept => {
            put(&mut f, "tac", FieldValue::Int(cell.tac));
        }
        DetachRequest => {
            put(&mut f, "detach_type", FieldValue::Int(cause.unwrap_or(1)));
        }
        EmmInformation => {
            put(&mut f, "timezone", FieldValue::Int(cause.unwrap_or(0)));
        }
        PagingWithImsi => {
            put(&mut f, "paging_imsi", FieldValue::Int(1));
        }
        SystemInformation | SystemInformationBlockType1 => {
            put(&mut f, "mcc", FieldValue::Int(cell.mcc));
            put(&mut f, "mnc", FieldValue::Int(cell.mnc));
            put(&mut f, "tac", FieldValue::Int(cell.tac));
            put(&mut f, "cell_identity", FieldValue::Int(cell.cell_identity));
            put(&mut f, "pci", FieldValue::Int(cell.pci));
            put(&mut f, "rsrp", FieldValue::Int(cell.rsrp));
            put(&mut f, "arfcn", FieldValue::Int(1850));
            if kind == SystemInformation {
                put(&mut f, "sib_scheduling", FieldValue::Int(1));
                if let Some(c) = cause {
                    put(&mut f, "emergency_indication", FieldValue::Int(c));
                }
            }
        }
        RrcConnectionRequest => {
            put(&mut f, "establishment_cause", FieldValue::Int(cause.unwrap_or(0)));
            put(&mut f, "pci", FieldValue::Int(cell.pci));
            put(&mut f, "rsrp", FieldValue::Int(cell.rsrp));
        }
        RrcConnectionSetup => {
            put(&mut f, "pci", FieldValue::Int(cell.pci));
            put(&mut f, "transaction_id", FieldValue::Int(0));
        }
        RrcConnectionSetupComplete => {
            put(&mut f, "mcc", FieldValue::Int(cell.mcc));
            put(&mut f, "mnc", FieldValue::Int(cell.mnc));
            put(&mut f, "transaction_id", FieldValue::Int(0));
        }
        RrcConnectionRelease => {
            put(&mut f, "release_cause", FieldValue::Int(cause.unwrap_or(0)));
        }
        RrcConnectionReconfiguration | RrcConnectionReestablishment | RrcSecurityModeCommand
        | RrcSecurityModeComplete | UeInformationRequest => {
            put(&mut f, "transaction_id", FieldValue::Int(1));
        }
        RrcConnectionReestablishmentRequest => {
            put(&mut f, "reestablishment_cause", FieldValue::Int(cause.unwrap_or(0)));
            put(&mut f, "pci", FieldValue::Int(cell.pci));
        }
        RrcConnectionReestablishmentReject => {
            put(&mut f, "reestablishment_cause", FieldValue::Int(cause.unwrap_or(1)));
        }
        UeCapabilityEnquiry | UeCapabilityInformation => {
            put(&mut f, "capability_rat_list", FieldValue::Int(1));
        }
        UeInformationResponse => {
            put(&mut f, "transaction_id", FieldValue::Int(1));
            put(&mut f, "rsrp", FieldValue::Int(cell.rsrp));
            put(&mut f, "pci", FieldValue::Int(cell.pci));
        }
        Paging => {
            put(&mut f, "paging_record_count", FieldValue::Int(cause.unwrap_or(1)));
        }
        RrcResume => {
            put(&mut f, "transaction_id", FieldValue::Int(2));
        }
        _ => {}
    }
    f
}

fn trace_rng(master_seed: u64, trace_index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(mix64(master_seed, trace_index))
}

/// Emits the shared benign session body (connection, attach,
/// authentication, security, capability, configuration, chatter and the
/// optional mobility handover) and returns the state needed to continue
/// the trace. `closing` appends paging/detach/release.
struct BenignBody {
    cell: CellParams,
}

fn benign_chatter(b: &mut TraceBuilder, cell: &CellParams, rng: &mut ChaCha8Rng, noise: f64) {
    if noise <= 0.0 {
        return;
    }
    let mut pairs = 0;
    while pairs < 6 && rng.gen_bool(noise) {
        b.push(MessageKind::UlInformationTransfer, Label::Benign, cell, None, true);
        b.push(MessageKind::DlInformationTransfer, Label::Benign, cell, None, true);
        pairs += 1;
    }
}

fn benign_body(b: &mut TraceBuilder, spec: &ScenarioSpec, rng: &mut ChaCha8Rng) -> BenignBody {
    use MessageKind::*;
    let cell = CellParams::legitimate(rng);
    let noise = spec.noise;

    b.push(SystemInformationBlockType1, Label::Benign, &cell, None, false);
    b.push(SystemInformation, Label::Benign, &cell, None, false);
    b.push(RrcConnectionRequest, Label::Benign, &cell, None, false);
    b.push(RrcConnectionSetup, Label::Benign, &cell, None, false);
    b.push(RrcConnectionSetupComplete, Label::Benign, &cell, None, false);
    b.push(AttachRequest, Label::Benign, &cell, None, false);
    // some operators re-request an identity during attach
    if noise > 0.0 && rng.gen_bool((noise * 1.6).min(0.9)) {
        b.push(IdentityRequest, Label::Benign, &cell, None, false);
        b.push(IdentityResponse, Label::Benign, &cell, None, false);
    }
    b.push(AuthenticationRequest, Label::Benign, &cell, None, false);
    b.push(AuthenticationResponse, Label::Benign, &cell, None, false);
    b.push(RrcSecurityModeCommand, Label::Benign, &cell, None, false);
    b.push(RrcSecurityModeComplete, Label::Benign, &cell, None, false);
    b.push(SecurityModeCommand, Label::Benign, &cell, None, false);
    b.push(SecurityModeComplete, Label::Benign, &cell, None, true);
    b.push(UeCapabilityEnquiry, Label::Benign, &cell, None, true);
    b.push(UeCapabilityInformation, Label::Benign, &cell, None, true);
    b.push(AttachAccept, Label::Benign, &cell, None, true);
    b.push(AttachComplete, Label::Benign, &cell, None, true);
    b.push(RrcConnectionReconfiguration, Label::Benign, &cell, None, true);
    b.push(EmmInformation, Label::Benign, &cell, None, true);
    benign_chatter(b, &cell, rng, noise);

    let mut current = cell;
    if spec.mobility {
        let handovers = 1 + usize::from(noise > 0.0 && rng.gen_bool(noise.min(0.9)));
        for _ in 0..handovers {
            let next = current.neighbor(rng);
            b.push(TrackingAreaUpdateRequest, Label::Benign, &next, None, true);
            // occasional congestion reject before the accept
            if noise > 0.0 && rng.gen_bool((noise * 0.8).min(0.9)) {
                b.push(TrackingAreaUpdateReject, Label::Benign, &next, Some(22), true);
                b.push(TrackingAreaUpdateRequest, Label::Benign, &next, None, true);
            }
            b.push(TrackingAreaUpdateAccept, Label::Benign, &next, None, true);
            b.push(RrcConnectionReconfiguration, Label::Benign, &next, None, true);
            benign_chatter(b, &next, rng, noise);
            current = next;
        }
    }

    BenignBody { cell: current }
}

fn finish_trace(b: TraceBuilder, spec: &ScenarioSpec, seed: u64) -> Trace {
    Trace {
        trace_id: b.trace_id.clone(),
        scenario: spec.scenario,
        attacker_level: spec.attacker_level,
        seed,
        mobility: spec.mobility,
        packets: b.packets,
    }
}

/// Benign session: attach, authenticate, secure, chatter, optional
/// handovers, detach.
pub fn gen_benign(spec: &ScenarioSpec, trace_index: u64) -> Result<Trace> {
    use MessageKind::*;
    spec.validate()?;
    if spec.scenario != Label::Benign {
        return Err(Error::InvalidSpec("gen_benign wants a benign scenario".into()));
    }
    let seed = mix64(spec.master_seed, trace_index);
    let mut rng = trace_rng(spec.master_seed, trace_index);
    let mut b = TraceBuilder::new(&format!("t{trace_index:05}"));
    let body = benign_body(&mut b, spec, &mut rng);
    b.push(Paging, Label::Benign, &body.cell, None, true);
    b.push(DetachRequest, Label::Benign, &body.cell, None, true);
    b.push(RrcConnectionRelease, Label::Benign, &body.cell, None, true);
    Ok(finish_trace(b, spec, seed))
}

/// FBS session: benign body, then the fake cell lures the UE through a
/// tracking-area update and identity probe before rejecting or dropping.
pub fn gen_fbs(spec: &ScenarioSpec, trace_index: u64) -> Result<Trace> {
    use MessageKind::*;
    spec.validate()?;
    if spec.scenario != Label::Fbs {
        return Err(Error::InvalidSpec("gen_fbs wants an FBS scenario".into()));
    }
    let seed = mix64(spec.master_seed, trace_index);
    let mut rng = trace_rng(spec.master_seed, trace_index);
    let mut b = TraceBuilder::new(&format!("t{trace_index:05}"));
    let body = benign_body(&mut b, spec, &mut rng);
    let fbs_cell = CellParams::fbs(&body.cell, spec.attacker_level.value(), &mut rng);

    b.push(SystemInformation, Label::Fbs, &fbs_cell, None, false);
    b.push(RrcConnectionRequest, Label::Fbs, &fbs_cell, None, false);
    b.push(RrcConnectionSetup, Label::Fbs, &fbs_cell, None, false);
    b.push(RrcConnectionSetupComplete, Label::Fbs, &fbs_cell, None, false);
    b.push(TrackingAreaUpdateRequest, Label::Fbs, &fbs_cell, None, false);
    b.push(IdentityRequest, Label::Fbs, &fbs_cell, None, false);
    b.push(IdentityResponse, Label::Fbs, &fbs_cell, None, false);
    if rng.gen_bool(0.5) {
        b.push(TrackingAreaUpdateReject, Label::Fbs, &fbs_cell, Some(7), false);
    } else {
        b.push(RrcConnectionRelease, Label::Fbs, &fbs_cell, Some(1), false);
    }
    Ok(finish_trace(b, spec, seed))
}

/// Multi-step attack session: benign body, cloned-cell FBS hook, then the
/// registered script with NAS/RRC steps interleaved.
pub fn gen_msa(spec: &ScenarioSpec, trace_index: u64) -> Result<Trace> {
    use MessageKind::*;
    spec.validate()?;
    let attack = match spec.scenario {
        Label::Msa(a) => a,
        _ => return Err(Error::InvalidSpec("gen_msa wants an MSA scenario".into())),
    };
    let seed = mix64(spec.master_seed, trace_index);
    let mut rng = trace_rng(spec.master_seed, trace_index);
    let mut b = TraceBuilder::new(&format!("t{trace_index:05}"));
    let body = benign_body(&mut b, spec, &mut rng);
    // levels 3-4 run a parameter-cloning FBS as the hook
    let fbs_cell = CellParams::fbs(&body.cell, 2, &mut rng);

    b.push(SystemInformation, Label::Benign, &fbs_cell, None, false);
    b.push(RrcConnectionRequest, Label::Benign, &fbs_cell, None, false);
    b.push(RrcConnectionSetup, Label::Benign, &fbs_cell, None, false);
    b.push(RrcConnectionSetupComplete, Label::Benign, &fbs_cell, None, false);
    b.push(TrackingAreaUpdateRequest, Label::Benign, &fbs_cell, None, false);

    let script = attack_script(attack);
    let emit = |b: &mut TraceBuilder, s: &ScriptStep| {
        let label = if s.attack { Label::Msa(attack) } else { Label::Benign };
        b.push(s.kind, label, &fbs_cell, s.cause, false);
    };
    // interleave the two layers' steps round-robin
    let mut nas = script.nas_steps.iter();
    let mut rrc = script.rrc_steps.iter();
    loop {
        match (nas.next(), rrc.next()) {
            (None, None) => break,
            (n, r) => {
                if let Some(s) = n {
                    emit(&mut b, s);
                }
                if let Some(s) = r {
                    emit(&mut b, s);
                }
            }
        }
    }

    let mut trace = finish_trace(b, spec, seed);
    if spec.attacker_level.value() >= 4 {
        trace = reshape(&trace, seed)?;
    }
    Ok(trace)
}

pub fn gen_trace(spec: &ScenarioSpec, trace_index: u64) -> Result<Trace> {
    match spec.scenario {
        Label::Benign => gen_benign(spec, trace_index),
        Label::Fbs => gen_fbs(spec, trace_index),
        Label::Msa(_) => gen_msa(spec, trace_index),
    }
}

pub const MANIFEST_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub trace_id: String,
    pub class: String,
    pub attacker_level: u8,
    pub seed: u64,
    pub packets: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub format_version: u32,
    pub counts: BTreeMap<String, u32>,
    pub traces: Vec<ManifestEntry>,
}

#[derive(Debug, Clone)]
pub struct Dataset {
    pub traces: Vec<Trace>,
    pub manifest: Manifest,
}

fn class_key(label: &Label) -> String {
    label.as_wire()
}

/// Generates every spec in order. Trace indices are global across the
/// dataset, so per-trace seeds do not depend on how work is scheduled.
pub fn gen_dataset(specs: &[ScenarioSpec]) -> Result<Dataset> {
    for spec in specs {
        spec.validate()?;
    }
    let mut traces = Vec::new();
    let mut counts: BTreeMap<String, u32> = BTreeMap::new();
    let mut entries = Vec::new();
    let mut global_index = 0u64;
    for spec in specs {
        for _ in 0..spec.n_traces {
            let trace = gen_trace(spec, global_index)?;
            *counts.entry(class_key(&trace.scenario)).or_insert(0) += 1;
            entries.push(ManifestEntry {
                trace_id: trace.trace_id.clone(),
                class: class_key(&trace.scenario),
                attacker_level: trace.attacker_level.value(),
                seed: trace.seed,
                packets: trace.packets.len(),
            });
            traces.push(trace);
            global_index += 1;
        }
    }
    Ok(Dataset {
        traces,
        manifest: Manifest {
            format_version: MANIFEST_FORMAT_VERSION,
            counts,
            traces: entries,
        },
    })
}

/// Parses the key-value scenario config: one spec per non-comment line,
/// `key=value` pairs separated by whitespace. Keys: scenario
/// (benign, fbs, msa:N, msa:all), level, traces, mobility, noise, seed.
pub fn parse_spec_line(line: &str, default_seed: u64) -> Result<Vec<ScenarioSpec>> {
    let mut scenario = None;
    let mut level = 0u8;
    let mut traces = 1u32;
    let mut mobility = false;
    let mut noise = 0.3f64;
    let mut seed = default_seed;
    for pair in line.split_whitespace() {
        let (key, value) = pair
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("expected key=value, got `{pair}`")))?;
        match key {
            "scenario" => scenario = Some(value.to_string()),
            "level" => level = value.parse().map_err(|_| Error::Parse(format!("bad level `{value}`")))?,
            "traces" => traces = value.parse().map_err(|_| Error::Parse(format!("bad traces `{value}`")))?,
            "mobility" => mobility = value.parse().map_err(|_| Error::Parse(format!("bad mobility `{value}`")))?,
            "noise" => noise = value.parse().map_err(|_| Error::Parse(format!("bad noise `{value}`")))?,
            "seed" => seed = value.parse().map_err(|_| Error::Parse(format!("bad seed `{value}`")))?,
            other => return Err(Error::Parse(format!("unknown spec key `{other}`"))),
        }
    }
    let scenario = scenario.ok_or_else(|| Error::Parse("spec line missing scenario=".into()))?;
    let build = |sc: Label, lvl: u8| -> Result<ScenarioSpec> {
        let spec = ScenarioSpec {
            scenario: sc,
            attacker_level: AttackerLevel::new(lvl)?,
            mobility,
            n_traces: traces,
            master_seed: seed,
            noise,
        };
        spec.validate()?;
        Ok(spec)
    };
    match scenario.as_str() {
        "benign" => Ok(vec![build(Label::Benign, level)?]),
        "fbs" => Ok(vec![build(Label::Fbs, level)?]),
        "msa:all" => AttackKind::all()
            .map(|a| build(Label::Msa(a), level.max(3)))
            .collect(),
        other => {
            let label = Label::from_wire(other)?;
            Ok(vec![build(label, level.max(3))?])
        }
    }
}

pub fn parse_spec_file(content: &str, default_seed: u64) -> Result<Vec<ScenarioSpec>> {
    let mut specs = Vec::new();
    for line in content.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        specs.extend(parse_spec_line(line, default_seed)?);
    }
    if specs.is_empty() {
        return Err(Error::Parse("config contains no scenario specs".into()));
    }
    Ok(specs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::validate;

    fn spec(scenario: Label, level: u8, mobility: bool, noise: f64) -> ScenarioSpec {
        ScenarioSpec {
            scenario,
            attacker_level: AttackerLevel::new(level).unwrap(),
            mobility,
            n_traces: 1,
            master_seed: 99,
            noise,
        }
    }

    #[test]
    fn benign_golden_nas_sequence() {
        let t = gen_benign(&spec(Label::Benign, 0, false, 0.0), 0).unwrap();
        let nas = t.split_layer(Layer::Nas);
        let kinds: Vec<&str> = nas.packets.iter().map(|p| p.kind.name()).collect();
        assert_eq!(
            kinds,
            vec![
                "AttachRequest",
                "AuthenticationRequest",
                "AuthenticationResponse",
                "SecurityModeCommand",
                "SecurityModeComplete",
                "AttachAccept",
                "AttachComplete",
                "EMMInformation",
                "DetachRequest",
            ]
        );
    }

    #[test]
    fn benign_mobility_adds_tau_pair() {
        let t = gen_benign(&spec(Label::Benign, 0, true, 0.0), 3).unwrap();
        let kinds = t.kinds();
        let req = kinds
            .iter()
            .filter(|k| **k == MessageKind::TrackingAreaUpdateRequest)
            .count();
        let acc = kinds
            .iter()
            .filter(|k| **k == MessageKind::TrackingAreaUpdateAccept)
            .count();
        assert!(req >= 1 && acc >= 1);
    }

    #[test]
    fn generation_is_deterministic() {
        let s = spec(Label::Benign, 0, true, 0.5);
        let a = gen_benign(&s, 7).unwrap();
        let b = gen_benign(&s, 7).unwrap();
        assert_eq!(a, b);
        let c = gen_benign(&s, 8).unwrap();
        assert_ne!(a.packets, c.packets);
    }

    #[test]
    fn fbs_levels_control_field_cloning() {
        for (level, expect_clone) in [(0u8, false), (2u8, true)] {
            let t = gen_fbs(&spec(Label::Fbs, level, false, 0.0), 1).unwrap();
            let legit_tac = t.packets[0].fields.get("tac").cloned();
            let fbs_si = t
                .packets
                .iter()
                .find(|p| p.label == Label::Fbs && p.kind == MessageKind::SystemInformation)
                .expect("fbs system information");
            let fbs_tac = fbs_si.fields.get("tac").cloned();
            let fbs_mcc = fbs_si.fields.get("mcc").cloned();
            if expect_clone {
                assert_eq!(fbs_tac, legit_tac, "level 2 clones the TAC");
                assert_eq!(fbs_mcc, Some(FieldValue::Int(310)));
            } else {
                assert_ne!(fbs_tac, legit_tac, "level 0 runs on a different TAC");
                assert_eq!(fbs_mcc, Some(FieldValue::Int(1)));
            }
        }
    }

    #[test]
    fn fbs_trace_has_fbs_packets_and_validates() {
        for level in 0..=2u8 {
            for idx in 0..5 {
                let t = gen_fbs(&spec(Label::Fbs, level, idx % 2 == 0, 0.4), idx as u64).unwrap();
                assert!(t.packets.iter().any(|p| p.label == Label::Fbs));
                assert!(validate(&t).is_empty(), "violations at level {level}");
            }
        }
    }

    #[test]
    fn msa_traces_validate_for_every_attack() {
        for attack in AttackKind::all() {
            let s = spec(Label::Msa(attack), 3, false, 0.3);
            let t = gen_msa(&s, attack.id() as u64).unwrap();
            assert!(
                t.packets.iter().any(|p| p.label == Label::Msa(attack)),
                "{attack} trace lacks attack packets"
            );
            assert!(validate(&t).is_empty(), "{attack} trace has violations");
        }
    }

    #[test]
    fn msa_examples_from_narratives() {
        // TAU-Reject bidding down carries a request followed by a
        // cause-tagged reject
        let t = gen_msa(&spec(Label::Msa(AttackKind::from_id(20).unwrap()), 3, false, 0.0), 0).unwrap();
        let nas = t.split_layer(Layer::Nas).kinds();
        let has_pair = nas.windows(2).any(|w| {
            w[0] == MessageKind::TrackingAreaUpdateRequest
                && w[1] == MessageKind::TrackingAreaUpdateReject
        });
        assert!(has_pair);

        // IMSI catching probes identity before any security establishment
        // inside the FBS session
        let t = gen_msa(&spec(Label::Msa(AttackKind::from_id(14).unwrap()), 3, false, 0.0), 0).unwrap();
        let attack_ir = t.packets.iter().any(|p| {
            p.kind == MessageKind::IdentityRequest && !p.label.is_benign()
        });
        assert!(attack_ir);

        // measurement-report tracking pulls a UE information exchange
        let t = gen_msa(&spec(Label::Msa(AttackKind::from_id(4).unwrap()), 3, false, 0.0), 0).unwrap();
        let rrc = t.split_layer(Layer::Rrc).kinds();
        let has_exchange = rrc.windows(2).any(|w| {
            w[0] == MessageKind::UeInformationRequest && w[1] == MessageKind::UeInformationResponse
        });
        assert!(has_exchange);
    }

    #[test]
    fn level_validation() {
        assert!(spec(Label::Msa(AttackKind::from_id(1).unwrap()), 2, false, 0.0)
            .validate()
            .is_err());
        assert!(spec(Label::Fbs, 3, false, 0.0).validate().is_err());
        assert!(spec(Label::Fbs, 2, false, 0.0).validate().is_ok());
    }

    #[test]
    fn dataset_manifest_counts_match_label_scan() {
        let specs = vec![
            spec_with_traces(Label::Benign, 0, 10),
            spec_with_traces(Label::Fbs, 2, 10),
        ];
        let ds = gen_dataset(&specs).unwrap();
        assert_eq!(ds.traces.len(), 20);
        assert_eq!(ds.manifest.counts["benign"], 10);
        assert_eq!(ds.manifest.counts["fbs"], 10);
        // recount oracle: scan emitted traces
        let mut recount: BTreeMap<String, u32> = BTreeMap::new();
        for t in &ds.traces {
            *recount.entry(t.scenario.as_wire()).or_insert(0) += 1;
        }
        assert_eq!(recount, ds.manifest.counts);
        // ids unique
        let mut ids: Vec<_> = ds.traces.iter().map(|t| &t.trace_id).collect();
        ids.sort();
        ids.dedup();
        assert_eq!(ids.len(), 20);
    }

    fn spec_with_traces(scenario: Label, level: u8, n: u32) -> ScenarioSpec {
        ScenarioSpec {
            scenario,
            attacker_level: AttackerLevel::new(level).unwrap(),
            mobility: false,
            n_traces: n,
            master_seed: 5,
            noise: 0.2,
        }
    }

    #[test]
    fn dataset_bytes_are_reproducible() {
        let specs = vec![spec_with_traces(Label::Benign, 0, 3), spec_with_traces(Label::Fbs, 1, 3)];
        let ds1 = gen_dataset(&specs).unwrap();
        let ds2 = gen_dataset(&specs).unwrap();
        let mut buf1 = Vec::new();
        let mut buf2 = Vec::new();
        crate::jsonl::write_traces(&mut buf1, &ds1.traces).unwrap();
        crate::jsonl::write_traces(&mut buf2, &ds2.traces).unwrap();
        assert_eq!(buf1, buf2);
    }

    #[test]
    fn spec_file_parsing() {
        let content = "# comment\nscenario=benign traces=4 noise=0.2\nscenario=fbs level=2 traces=3 mobility=true\n";
        let specs = parse_spec_file(content, 42).unwrap();
        assert_eq!(specs.len(), 2);
        assert_eq!(specs[0].n_traces, 4);
        assert_eq!(specs[1].scenario, Label::Fbs);
        assert!(specs[1].mobility);
        assert_eq!(specs[1].master_seed, 42);

        let all = parse_spec_line("scenario=msa:all traces=2 level=3", 1).unwrap();
        assert_eq!(all.len(), 21);
        assert!(parse_spec_line("scenario=bogus", 1).is_err());
    }
}
