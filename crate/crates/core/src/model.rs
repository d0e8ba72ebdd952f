//! Domain vocabulary: layers, message kinds, attacks, labels, packets, traces.
//!
//! Every other module builds on the types here. The message vocabulary is
//! closed at build time; simulator output and replayed traces must stay
//! inside it.

use std::fmt;
use std::sync::OnceLock;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The two layer-3 protocols a packet can belong to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Layer {
    #[serde(rename = "nas")]
    Nas,
    #[serde(rename = "rrc")]
    Rrc,
}

impl Layer {
    pub fn as_str(&self) -> &'static str {
        match self {
            Layer::Nas => "nas",
            Layer::Rrc => "rrc",
        }
    }
}

impl fmt::Display for Layer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

macro_rules! message_kinds {
    ($( $variant:ident => ($layer:ident, $name:literal) ),+ $(,)?) => {
        /// One message kind from the closed per-layer vocabulary.
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub enum MessageKind {
            $( $variant, )+
        }

        impl MessageKind {
            pub const ALL: &'static [MessageKind] = &[ $( MessageKind::$variant, )+ ];

            pub fn layer(&self) -> Layer {
                match self {
                    $( MessageKind::$variant => Layer::$layer, )+
                }
            }

            /// Canonical wire name, e.g. `TrackingAreaUpdateReject` or `rrcConnectionRequest`.
            pub fn name(&self) -> &'static str {
                match self {
                    $( MessageKind::$variant => $name, )+
                }
            }

            pub fn from_name(layer: Layer, name: &str) -> Option<MessageKind> {
                match (layer, name) {
                    $( (Layer::$layer, $name) => Some(MessageKind::$variant), )+
                    _ => None,
                }
            }
        }
    };
}

message_kinds! {
    // NAS (EMM) vocabulary.
    AttachRequest => (Nas, "AttachRequest"),
    AttachAccept => (Nas, "AttachAccept"),
    AttachComplete => (Nas, "AttachComplete"),
    AttachReject => (Nas, "AttachReject"),
    AuthenticationRequest => (Nas, "AuthenticationRequest"),
    AuthenticationResponse => (Nas, "AuthenticationResponse"),
    AuthenticationFailure => (Nas, "AuthenticationFailure"),
    AuthenticationReject => (Nas, "AuthenticationReject"),
    IdentityRequest => (Nas, "IdentityRequest"),
    IdentityResponse => (Nas, "IdentityResponse"),
    SecurityModeCommand => (Nas, "SecurityModeCommand"),
    SecurityModeComplete => (Nas, "SecurityModeComplete"),
    SecurityModeReject => (Nas, "SecurityModeReject"),
    TrackingAreaUpdateRequest => (Nas, "TrackingAreaUpdateRequest"),
    TrackingAreaUpdateAccept => (Nas, "TrackingAreaUpdateAccept"),
    TrackingAreaUpdateReject => (Nas, "TrackingAreaUpdateReject"),
    ServiceReject => (Nas, "ServiceReject"),
    DetachRequest => (Nas, "DetachRequest"),
    EmmInformation => (Nas, "EMMInformation"),
    PagingWithImsi => (Nas, "PagingWithIMSI"),
    // RRC vocabulary.
    RrcConnectionRequest => (Rrc, "rrcConnectionRequest"),
    RrcConnectionSetup => (Rrc, "rrcConnectionSetup"),
    RrcConnectionSetupComplete => (Rrc, "rrcConnectionSetupComplete"),
    RrcConnectionRelease => (Rrc, "rrcConnectionRelease"),
    RrcConnectionReconfiguration => (Rrc, "rrcConnectionReconfiguration"),
    RrcConnectionReestablishmentRequest => (Rrc, "rrcConnectionReestablishmentRequest"),
    RrcConnectionReestablishment => (Rrc, "rrcConnectionReestablishment"),
    RrcConnectionReestablishmentReject => (Rrc, "rrcConnectionReestablishmentReject"),
    RrcSecurityModeCommand => (Rrc, "securityModeCommand"),
    RrcSecurityModeComplete => (Rrc, "securityModeComplete"),
    UeCapabilityEnquiry => (Rrc, "ueCapabilityEnquiry"),
    UeCapabilityInformation => (Rrc, "ueCapabilityInformation"),
    UeInformationRequest => (Rrc, "ueInformationRequest"),
    UeInformationResponse => (Rrc, "ueInformationResponse"),
    SystemInformation => (Rrc, "systemInformation"),
    SystemInformationBlockType1 => (Rrc, "systemInformationBlockType1"),
    DlInformationTransfer => (Rrc, "dlInformationTransfer"),
    UlInformationTransfer => (Rrc, "ulInformationTransfer"),
    Paging => (Rrc, "paging"),
    RrcResume => (Rrc, "rrcResume"),
    RrcReject => (Rrc, "rrcReject"),
}

impl MessageKind {
    /// Kinds of one layer, in declaration order (the one-hot ordering).
    pub fn layer_kinds(layer: Layer) -> Vec<MessageKind> {
        MessageKind::ALL
            .iter()
            .copied()
            .filter(|k| k.layer() == layer)
            .collect()
    }

    /// Index of this kind within its layer's vocabulary.
    pub fn layer_ordinal(&self) -> usize {
        MessageKind::ALL
            .iter()
            .filter(|k| k.layer() == self.layer())
            .position(|k| *k == *self)
            .expect("kind present in its own layer")
    }
}

impl fmt::Display for MessageKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl Serialize for MessageKind {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

/// Broad effect class of a multi-step attack.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AttackCategory {
    DoS,
    LocationTracking,
    ActivityMonitoring,
    BiddingDown,
    BatteryDrain,
    InfoLeak,
    Misinformation,
    ResourceWaste,
    DeviceIdentification,
}

struct AttackInfo {
    name: &'static str,
    category: AttackCategory,
}

/// The 21 registered multi-step attacks, indexed by id 1..=21.
const ATTACK_TABLE: [AttackInfo; 21] = {
    use AttackCategory::*;
    [
        AttackInfo { name: "Authentication relay attack", category: ActivityMonitoring },
        AttackInfo { name: "Bidding down with AttachReject", category: BiddingDown },
        AttackInfo { name: "Paging channel hijacking attack", category: DoS },
        AttackInfo { name: "Location tracking via measurement reports", category: LocationTracking },
        AttackInfo { name: "Capability hijacking", category: BiddingDown },
        AttackInfo { name: "Incarceration with rrcReestablishReject", category: DoS },
        AttackInfo { name: "Lullaby attack using rrcReestablishRequest", category: BatteryDrain },
        AttackInfo { name: "Bidding down with ServiceReject", category: BiddingDown },
        AttackInfo { name: "Mobile network mapping", category: DeviceIdentification },
        AttackInfo { name: "Energy depletion attack", category: BatteryDrain },
        AttackInfo { name: "Lullaby attack with rrcResume", category: BatteryDrain },
        AttackInfo { name: "Stealthy kickoff attack", category: DoS },
        AttackInfo { name: "Incarceration with rrcReject and rrcRelease", category: DoS },
        AttackInfo { name: "IMSI catching", category: InfoLeak },
        AttackInfo { name: "NAS counter desync attack", category: DoS },
        AttackInfo { name: "X2 signalling flood", category: ResourceWaste },
        AttackInfo { name: "Handover hijacking", category: DoS },
        AttackInfo { name: "RRC replay attack", category: DoS },
        AttackInfo { name: "Lullaby attack with rrcReconfiguration", category: BatteryDrain },
        AttackInfo { name: "Bidding down with TAUReject", category: BiddingDown },
        AttackInfo { name: "Panic attack", category: Misinformation },
    ]
};

/// One of the 21 registered multi-step attacks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AttackKind(u8);

impl AttackKind {
    pub const COUNT: u8 = 21;

    pub fn from_id(id: u8) -> Result<AttackKind> {
        if (1..=Self::COUNT).contains(&id) {
            Ok(AttackKind(id))
        } else {
            Err(Error::UnknownAttack(id))
        }
    }

    pub fn all() -> impl Iterator<Item = AttackKind> {
        (1..=Self::COUNT).map(AttackKind)
    }

    pub fn id(&self) -> u8 {
        self.0
    }

    pub fn name(&self) -> &'static str {
        ATTACK_TABLE[(self.0 - 1) as usize].name
    }

    pub fn category(&self) -> AttackCategory {
        ATTACK_TABLE[(self.0 - 1) as usize].category
    }
}

impl fmt::Display for AttackKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ({})", self.0, self.name())
    }
}

/// Ground-truth class of a packet, and also the scenario class of a trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    Benign,
    Fbs,
    Msa(AttackKind),
}

impl Label {
    pub fn is_benign(&self) -> bool {
        matches!(self, Label::Benign)
    }

    pub fn as_wire(&self) -> String {
        match self {
            Label::Benign => "benign".to_string(),
            Label::Fbs => "fbs".to_string(),
            Label::Msa(a) => format!("msa:{}", a.id()),
        }
    }

    pub fn from_wire(s: &str) -> Result<Label> {
        match s {
            "benign" => Ok(Label::Benign),
            "fbs" => Ok(Label::Fbs),
            other => {
                let id = other
                    .strip_prefix("msa:")
                    .and_then(|v| v.parse::<u8>().ok())
                    .ok_or_else(|| Error::Parse(format!("bad label `{other}`")))?;
                Ok(Label::Msa(AttackKind::from_id(id)?))
            }
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.as_wire())
    }
}

impl Serialize for Label {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.as_wire())
    }
}

impl<'de> Deserialize<'de> for Label {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Label, D::Error> {
        let s = String::deserialize(d)?;
        Label::from_wire(&s).map_err(serde::de::Error::custom)
    }
}

/// Which dataset's labeling rule applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DatasetKind {
    Fbs,
    Msa,
}

/// Class verdict with the model's confidence in the emitted label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub label: Label,
    pub confidence: f64,
    pub layer: Layer,
}

/// Integer code of a label under the given dataset's labeling rule.
///
/// FBS dataset: benign packets are 0, FBS-generated packets are 1.
/// MSA dataset: benign packets are 0, packets of attack `j` carry `j`.
pub fn label_code(label: Label, kind: DatasetKind) -> Result<u32> {
    match (kind, label) {
        (DatasetKind::Fbs, Label::Benign) => Ok(0),
        (DatasetKind::Fbs, Label::Fbs) => Ok(1),
        (DatasetKind::Fbs, Label::Msa(_)) => Err(Error::MsaLabelInFbsDataset),
        (DatasetKind::Msa, Label::Benign) => Ok(0),
        (DatasetKind::Msa, Label::Msa(a)) => Ok(a.id() as u32),
        (DatasetKind::Msa, Label::Fbs) => Err(Error::FbsLabelInMsaDataset),
    }
}

/// Inverse of [`label_code`].
pub fn decode_label(code: u32, kind: DatasetKind) -> Result<Label> {
    match (kind, code) {
        (_, 0) => Ok(Label::Benign),
        (DatasetKind::Fbs, 1) => Ok(Label::Fbs),
        (DatasetKind::Fbs, c) => Err(Error::UnknownLabelCode(c, "FBS")),
        (DatasetKind::Msa, c) if c <= AttackKind::COUNT as u32 => {
            Ok(Label::Msa(AttackKind::from_id(c as u8)?))
        }
        (DatasetKind::Msa, c) => Err(Error::UnknownLabelCode(c, "MSA")),
    }
}

/// Attacker sophistication, 0 (naive FBS) through 4 (adaptive reshaping).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AttackerLevel(u8);

impl AttackerLevel {
    pub fn new(level: u8) -> Result<AttackerLevel> {
        if level <= 4 {
            Ok(AttackerLevel(level))
        } else {
            Err(Error::InvalidSpec(format!("attacker level {level} > 4")))
        }
    }

    pub fn value(&self) -> u8 {
        self.0
    }
}

/// A typed field value carried by a packet. Absent fields are simply
/// missing from the packet's field map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FieldValue {
    Int(i64),
    Str(String),
}

impl FieldValue {
    /// Stable key used for codebook lookups.
    pub fn codebook_key(&self) -> String {
        match self {
            FieldValue::Int(v) => format!("i:{v}"),
            FieldValue::Str(v) => format!("s:{v}"),
        }
    }
}

impl From<i64> for FieldValue {
    fn from(v: i64) -> Self {
        FieldValue::Int(v)
    }
}

impl From<&str> for FieldValue {
    fn from(v: &str) -> Self {
        FieldValue::Str(v.to_string())
    }
}

pub type FieldMap = IndexMap<String, FieldValue>;

/// One layer-3 message observation.
#[derive(Debug, Clone, PartialEq)]
pub struct Packet {
    pub trace_id: String,
    pub seq: u32,
    pub layer: Layer,
    pub kind: MessageKind,
    pub fields: FieldMap,
    pub label: Label,
}

/// An ordered, labeled capture of one experiment session.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub trace_id: String,
    pub scenario: Label,
    pub attacker_level: AttackerLevel,
    pub seed: u64,
    pub mobility: bool,
    pub packets: Vec<Packet>,
}

impl Trace {
    /// Packets of one layer, order and seq preserved, metadata copied.
    pub fn split_layer(&self, layer: Layer) -> Trace {
        Trace {
            trace_id: self.trace_id.clone(),
            scenario: self.scenario,
            attacker_level: self.attacker_level,
            seed: self.seed,
            mobility: self.mobility,
            packets: self
                .packets
                .iter()
                .filter(|p| p.layer == layer)
                .cloned()
                .collect(),
        }
    }

    pub fn kinds(&self) -> Vec<MessageKind> {
        self.packets.iter().map(|p| p.kind).collect()
    }
}

/// Fixed per-layer field schema. NAS packets align to 119 columns and RRC
/// packets to 183; columns the simulator never fills stay reserved.
pub fn field_schema(layer: Layer) -> &'static [String] {
    static NAS: OnceLock<Vec<String>> = OnceLock::new();
    static RRC: OnceLock<Vec<String>> = OnceLock::new();
    match layer {
        Layer::Nas => NAS.get_or_init(|| build_schema(NAS_ACTIVE_FIELDS, "nas", 119)),
        Layer::Rrc => RRC.get_or_init(|| build_schema(RRC_ACTIVE_FIELDS, "rrc", 183)),
    }
}

/// NAS columns the simulator actually populates.
pub const NAS_ACTIVE_FIELDS: &[&str] = &[
    "emm_msg_type",
    "security_header_type",
    "emm_cause",
    "mcc",
    "mnc",
    "tac",
    "identity_type",
    "attach_type",
    "detach_type",
    "nas_key_set_id",
    "tmsi",
    "paging_imsi",
    "timezone",
    "update_type",
    "auth_param",
];

/// RRC columns the simulator actually populates.
pub const RRC_ACTIVE_FIELDS: &[&str] = &[
    "c1_msg_type",
    "mcc",
    "mnc",
    "tac",
    "cell_identity",
    "pci",
    "rsrp",
    "arfcn",
    "establishment_cause",
    "reestablishment_cause",
    "release_cause",
    "paging_record_count",
    "emergency_indication",
    "transaction_id",
    "capability_rat_list",
    "sib_scheduling",
];

fn build_schema(active: &[&str], prefix: &str, width: usize) -> Vec<String> {
    assert!(active.len() <= width);
    let mut cols: Vec<String> = active.iter().map(|s| s.to_string()).collect();
    for i in cols.len()..width {
        cols.push(format!("{prefix}_col_{i:03}"));
    }
    cols
}

pub fn schema_contains(layer: Layer, field: &str) -> bool {
    field_schema(layer).iter().any(|f| f == field)
}

/// A single invariant violation found by [`validate`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    /// Packet the violation anchors to, if any.
    pub seq: Option<u32>,
    pub rule: ViolationRule,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum ViolationRule {
    NonMonotonicSeq,
    TraceIdMismatch,
    KindLayerMismatch,
    ScenarioLabelMismatch,
    NoAttackPackets,
    UnknownField(String),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.seq {
            Some(seq) => write!(f, "packet {seq}: {:?}", self.rule),
            None => write!(f, "trace: {:?}", self.rule),
        }
    }
}

/// Checks every trace/packet invariant; empty result means well-formed.
pub fn validate(trace: &Trace) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut prev_seq: Option<u32> = None;
    let mut saw_attack_label = false;

    for p in &trace.packets {
        if let Some(prev) = prev_seq {
            if p.seq <= prev {
                out.push(Violation {
                    seq: Some(p.seq),
                    rule: ViolationRule::NonMonotonicSeq,
                });
            }
        }
        prev_seq = Some(p.seq);

        if p.trace_id != trace.trace_id {
            out.push(Violation {
                seq: Some(p.seq),
                rule: ViolationRule::TraceIdMismatch,
            });
        }
        if p.kind.layer() != p.layer {
            out.push(Violation {
                seq: Some(p.seq),
                rule: ViolationRule::KindLayerMismatch,
            });
        }
        for field in p.fields.keys() {
            if !schema_contains(p.layer, field) {
                out.push(Violation {
                    seq: Some(p.seq),
                    rule: ViolationRule::UnknownField(field.clone()),
                });
            }
        }

        match (&trace.scenario, &p.label) {
            (Label::Benign, l) if !l.is_benign() => out.push(Violation {
                seq: Some(p.seq),
                rule: ViolationRule::ScenarioLabelMismatch,
            }),
            (Label::Fbs, Label::Msa(_)) => out.push(Violation {
                seq: Some(p.seq),
                rule: ViolationRule::ScenarioLabelMismatch,
            }),
            (Label::Msa(a), Label::Msa(b)) if a != b => out.push(Violation {
                seq: Some(p.seq),
                rule: ViolationRule::ScenarioLabelMismatch,
            }),
            (Label::Msa(_), Label::Fbs) => out.push(Violation {
                seq: Some(p.seq),
                rule: ViolationRule::ScenarioLabelMismatch,
            }),
            _ => {}
        }

        if !p.label.is_benign() {
            saw_attack_label = true;
        }
    }

    if !trace.scenario.is_benign() && !saw_attack_label {
        out.push(Violation {
            seq: None,
            rule: ViolationRule::NoAttackPackets,
        });
    }

    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vocabulary_is_closed_and_unique() {
        assert_eq!(MessageKind::layer_kinds(Layer::Nas).len(), 20);
        assert_eq!(MessageKind::layer_kinds(Layer::Rrc).len(), 21);
        for layer in [Layer::Nas, Layer::Rrc] {
            let kinds = MessageKind::layer_kinds(layer);
            for (i, k) in kinds.iter().enumerate() {
                assert_eq!(k.layer_ordinal(), i);
                assert_eq!(MessageKind::from_name(layer, k.name()), Some(*k));
            }
            let mut names: Vec<_> = kinds.iter().map(|k| k.name()).collect();
            names.sort_unstable();
            names.dedup();
            assert_eq!(names.len(), kinds.len(), "duplicate name in {layer}");
        }
    }

    #[test]
    fn attack_registry_has_21_entries() {
        assert_eq!(AttackKind::all().count(), 21);
        let a20 = AttackKind::from_id(20).unwrap();
        assert_eq!(a20.name(), "Bidding down with TAUReject");
        assert_eq!(a20.category(), AttackCategory::BiddingDown);
        assert_eq!(
            AttackKind::from_id(4).unwrap().category(),
            AttackCategory::LocationTracking
        );
        assert_eq!(
            AttackKind::from_id(14).unwrap().category(),
            AttackCategory::InfoLeak
        );
        assert!(AttackKind::from_id(0).is_err());
        assert!(AttackKind::from_id(22).is_err());
    }

    #[test]
    fn label_codes_match_case_equations() {
        assert_eq!(label_code(Label::Benign, DatasetKind::Fbs).unwrap(), 0);
        assert_eq!(label_code(Label::Fbs, DatasetKind::Fbs).unwrap(), 1);
        let a20 = AttackKind::from_id(20).unwrap();
        assert_eq!(label_code(Label::Msa(a20), DatasetKind::Msa).unwrap(), 20);
        assert!(matches!(
            label_code(Label::Msa(a20), DatasetKind::Fbs),
            Err(Error::MsaLabelInFbsDataset)
        ));
    }

    #[test]
    fn label_code_roundtrips() {
        for code in 0..=1u32 {
            let l = decode_label(code, DatasetKind::Fbs).unwrap();
            assert_eq!(label_code(l, DatasetKind::Fbs).unwrap(), code);
        }
        for code in 0..=21u32 {
            let l = decode_label(code, DatasetKind::Msa).unwrap();
            assert_eq!(label_code(l, DatasetKind::Msa).unwrap(), code);
        }
        assert!(decode_label(2, DatasetKind::Fbs).is_err());
        assert!(decode_label(22, DatasetKind::Msa).is_err());
    }

    #[test]
    fn label_wire_roundtrip() {
        for l in [
            Label::Benign,
            Label::Fbs,
            Label::Msa(AttackKind::from_id(7).unwrap()),
        ] {
            assert_eq!(Label::from_wire(&l.as_wire()).unwrap(), l);
        }
        assert!(Label::from_wire("msa:99").is_err());
    }

    #[test]
    fn schemas_have_fixed_width() {
        assert_eq!(field_schema(Layer::Nas).len(), 119);
        assert_eq!(field_schema(Layer::Rrc).len(), 183);
        assert!(schema_contains(Layer::Nas, "emm_cause"));
        assert!(schema_contains(Layer::Rrc, "rsrp"));
        assert!(!schema_contains(Layer::Nas, "nonexistent"));
    }

    fn packet(trace_id: &str, seq: u32, kind: MessageKind, label: Label) -> Packet {
        Packet {
            trace_id: trace_id.to_string(),
            seq,
            layer: kind.layer(),
            kind,
            fields: FieldMap::new(),
            label,
        }
    }

    fn benign_trace() -> Trace {
        Trace {
            trace_id: "t0".into(),
            scenario: Label::Benign,
            attacker_level: AttackerLevel::new(0).unwrap(),
            seed: 1,
            mobility: false,
            packets: vec![
                packet("t0", 0, MessageKind::AttachRequest, Label::Benign),
                packet("t0", 1, MessageKind::AuthenticationRequest, Label::Benign),
                packet("t0", 2, MessageKind::RrcConnectionRequest, Label::Benign),
            ],
        }
    }

    #[test]
    fn validate_accepts_well_formed() {
        assert!(validate(&benign_trace()).is_empty());
    }

    #[test]
    fn validate_flags_label_mismatch_and_seq() {
        let mut t = benign_trace();
        t.packets[1].label = Label::Fbs;
        let v = validate(&t);
        assert!(v
            .iter()
            .any(|v| v.rule == ViolationRule::ScenarioLabelMismatch && v.seq == Some(1)));

        let mut t = benign_trace();
        t.packets[2].seq = 1;
        let v = validate(&t);
        assert!(v.iter().any(|v| v.rule == ViolationRule::NonMonotonicSeq));
    }

    #[test]
    fn split_layer_partitions() {
        let t = benign_trace();
        let nas = t.split_layer(Layer::Nas);
        let rrc = t.split_layer(Layer::Rrc);
        assert_eq!(nas.packets.len(), 2);
        assert_eq!(rrc.packets.len(), 1);
        assert_eq!(nas.packets.len() + rrc.packets.len(), t.packets.len());
        assert!(nas.packets.iter().all(|p| p.layer == Layer::Nas));
        let empty = nas.split_layer(Layer::Rrc);
        assert!(empty.packets.is_empty());
    }
}
