//! Canonical trace JSONL: one trace per line, UTF-8, stable key order.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{AttackerLevel, FieldMap, Label, Layer, MessageKind, Packet, Trace};

#[derive(Serialize, Deserialize)]
struct PacketWire {
    seq: u32,
    layer: Layer,
    kind: String,
    fields: FieldMap,
    label: Label,
}

#[derive(Serialize, Deserialize)]
struct TraceWire {
    trace_id: String,
    scenario: String,
    attack: Option<u8>,
    attacker_level: AttackerLevel,
    seed: u64,
    mobility: bool,
    packets: Vec<PacketWire>,
}

pub fn trace_to_line(trace: &Trace) -> String {
    let (scenario, attack) = match trace.scenario {
        Label::Benign => ("benign", None),
        Label::Fbs => ("fbs", None),
        Label::Msa(a) => ("msa", Some(a.id())),
    };
    let wire = TraceWire {
        trace_id: trace.trace_id.clone(),
        scenario: scenario.to_string(),
        attack,
        attacker_level: trace.attacker_level,
        seed: trace.seed,
        mobility: trace.mobility,
        packets: trace
            .packets
            .iter()
            .map(|p| PacketWire {
                seq: p.seq,
                layer: p.layer,
                kind: p.kind.name().to_string(),
                fields: p.fields.clone(),
                label: p.label,
            })
            .collect(),
    };
    serde_json::to_string(&wire).expect("trace serializes")
}

pub fn trace_from_line(line: &str) -> Result<Trace> {
    let wire: TraceWire = serde_json::from_str(line)?;
    let scenario = match (wire.scenario.as_str(), wire.attack) {
        ("benign", _) => Label::Benign,
        ("fbs", _) => Label::Fbs,
        ("msa", Some(id)) => Label::Msa(crate::model::AttackKind::from_id(id)?),
        (other, _) => return Err(Error::Parse(format!("bad scenario `{other}`"))),
    };
    let packets = wire
        .packets
        .into_iter()
        .map(|p| {
            let kind = MessageKind::from_name(p.layer, &p.kind)
                .ok_or_else(|| Error::Parse(format!("unknown {} kind `{}`", p.layer, p.kind)))?;
            Ok(Packet {
                trace_id: wire.trace_id.clone(),
                seq: p.seq,
                layer: p.layer,
                kind,
                fields: p.fields,
                label: p.label,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Trace {
        trace_id: wire.trace_id,
        scenario,
        attacker_level: wire.attacker_level,
        seed: wire.seed,
        mobility: wire.mobility,
        packets,
    })
}

pub fn write_traces<W: Write>(mut w: W, traces: &[Trace]) -> Result<()> {
    for t in traces {
        writeln!(w, "{}", trace_to_line(t))?;
    }
    Ok(())
}

pub fn read_traces<R: BufRead>(r: R) -> Result<Vec<Trace>> {
    let mut out = Vec::new();
    for line in r.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(trace_from_line(&line)?);
    }
    Ok(out)
}

pub fn read_traces_path(path: &std::path::Path) -> Result<Vec<Trace>> {
    let file = std::fs::File::open(path)?;
    read_traces(std::io::BufReader::new(file))
}

pub fn write_traces_path(path: &std::path::Path, traces: &[Trace]) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut w = std::io::BufWriter::new(file);
    write_traces(&mut w, traces)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::FieldValue;

    #[test]
    fn roundtrip_preserves_bytes() {
        let mut fields = FieldMap::new();
        fields.insert("emm_msg_type".into(), FieldValue::from("AttachRequest"));
        fields.insert("tac".into(), FieldValue::Int(1042));
        let trace = Trace {
            trace_id: "t00001".into(),
            scenario: Label::Fbs,
            attacker_level: AttackerLevel::new(2).unwrap(),
            seed: 42,
            mobility: true,
            packets: vec![Packet {
                trace_id: "t00001".into(),
                seq: 0,
                layer: Layer::Nas,
                kind: MessageKind::AttachRequest,
                fields,
                label: Label::Fbs,
            }],
        };
        let line = trace_to_line(&trace);
        let back = trace_from_line(&line).unwrap();
        assert_eq!(back, trace);
        assert_eq!(trace_to_line(&back), line);
    }

    #[test]
    fn rejects_unknown_kind() {
        let line = r#"{"trace_id":"x","scenario":"benign","attack":null,"attacker_level":0,"seed":0,"mobility":false,"packets":[{"seq":0,"layer":"nas","kind":"Bogus","fields":{},"label":"benign"}]}"#;
        assert!(trace_from_line(line).is_err());
    }
}
