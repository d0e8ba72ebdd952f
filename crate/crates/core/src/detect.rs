//! The end-to-end detection pipeline shared by streaming detection and
//! batch evaluation: per-layer packet scoring, trace classification,
//! graph-based attack recognition, and NAS/RRC fusion.

use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fbs::{predict_packets, predict_trace, trace_features, PacketModel, TraceModel};
use crate::featurize::{encode_for_inference, Codebook};
use crate::fusion::{fuse, FusedVerdict};
use crate::jsonl;
use crate::model::{Label, Layer, Prediction, Trace};
use crate::msa::{
    build_layer_graph_for_inference, nearest_attack, AttackPathBank, NearestVerdict, SageModel,
};

/// Trained artifacts for one or both layers and one or both tasks.
#[derive(Default)]
pub struct ModelBundle {
    /// Window stride for packet-level inference; defaults to each
    /// model's sequence length (non-overlapping). Stride 1 scores every
    /// packet under all windows covering it, averaged.
    pub stride_override: Option<usize>,
    pub codebook_nas: Option<Codebook>,
    pub codebook_rrc: Option<Codebook>,
    pub fbs_packet_nas: Option<PacketModel>,
    pub fbs_packet_rrc: Option<PacketModel>,
    pub fbs_trace_nas: Option<TraceModel>,
    pub fbs_trace_rrc: Option<TraceModel>,
    pub msa_nas: Option<SageModel>,
    pub msa_rrc: Option<SageModel>,
    pub bank_nas: Option<AttackPathBank>,
    pub bank_rrc: Option<AttackPathBank>,
}

impl ModelBundle {
    fn codebook(&self, layer: Layer) -> Option<&Codebook> {
        match layer {
            Layer::Nas => self.codebook_nas.as_ref(),
            Layer::Rrc => self.codebook_rrc.as_ref(),
        }
    }

    fn fbs_models(&self, layer: Layer) -> Option<(&PacketModel, &TraceModel)> {
        match layer {
            Layer::Nas => Some((self.fbs_packet_nas.as_ref()?, self.fbs_trace_nas.as_ref()?)),
            Layer::Rrc => Some((self.fbs_packet_rrc.as_ref()?, self.fbs_trace_rrc.as_ref()?)),
        }
    }

    fn msa_models(&self, layer: Layer) -> Option<(&SageModel, &AttackPathBank)> {
        match layer {
            Layer::Nas => Some((self.msa_nas.as_ref()?, self.bank_nas.as_ref()?)),
            Layer::Rrc => Some((self.msa_rrc.as_ref()?, self.bank_rrc.as_ref()?)),
        }
    }

    /// Loads a bundle from a manifest JSON mapping artifact names to file
    /// paths (relative paths resolve against the manifest's directory).
    pub fn load_manifest(path: &Path) -> Result<ModelBundle> {
        let content = std::fs::read_to_string(path)?;
        let manifest: serde_json::Value = serde_json::from_str(&content)?;
        let dir = path.parent().unwrap_or(Path::new("."));
        let read = |key: &str| -> Result<Option<serde_json::Value>> {
            match manifest.get(key) {
                None | Some(serde_json::Value::Null) => Ok(None),
                Some(serde_json::Value::String(p)) => {
                    let full = dir.join(p);
                    let text = std::fs::read_to_string(&full)?;
                    Ok(Some(serde_json::from_str(&text)?))
                }
                Some(other) => Err(Error::Parse(format!("manifest key {key}: expected path, got {other}"))),
            }
        };
        let mut bundle = ModelBundle::default();
        if let Some(v) = read("codebook_nas")? {
            bundle.codebook_nas = Some(Codebook::from_json(&v)?);
        }
        if let Some(v) = read("codebook_rrc")? {
            bundle.codebook_rrc = Some(Codebook::from_json(&v)?);
        }
        if let Some(v) = read("fbs_packet_nas")? {
            bundle.fbs_packet_nas = Some(PacketModel::from_json(&v)?);
        }
        if let Some(v) = read("fbs_packet_rrc")? {
            bundle.fbs_packet_rrc = Some(PacketModel::from_json(&v)?);
        }
        if let Some(v) = read("fbs_trace_nas")? {
            bundle.fbs_trace_nas = Some(TraceModel::from_json(&v)?);
        }
        if let Some(v) = read("fbs_trace_rrc")? {
            bundle.fbs_trace_rrc = Some(TraceModel::from_json(&v)?);
        }
        if let Some(v) = read("msa_nas")? {
            bundle.msa_nas = Some(SageModel::from_json(&v)?);
        }
        if let Some(v) = read("msa_rrc")? {
            bundle.msa_rrc = Some(SageModel::from_json(&v)?);
        }
        if let Some(v) = read("bank_nas")? {
            bundle.bank_nas = Some(AttackPathBank::from_json(&v)?);
        }
        if let Some(v) = read("bank_rrc")? {
            bundle.bank_rrc = Some(AttackPathBank::from_json(&v)?);
        }
        Ok(bundle)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FbsLayerVerdict {
    pub label: Label,
    pub confidence: f64,
    pub per_packet: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FusionNote {
    pub label: Label,
    pub winning_layer: Layer,
    pub w_nas: f64,
    pub w_rrc: f64,
}

impl From<&FusedVerdict> for FusionNote {
    fn from(f: &FusedVerdict) -> FusionNote {
        FusionNote {
            label: f.label,
            winning_layer: f.winning_layer,
            w_nas: f.w_nas,
            w_rrc: f.w_rrc,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FbsVerdictSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nas: Option<FbsLayerVerdict>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rrc: Option<FbsLayerVerdict>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fused: Option<FusionNote>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MsaLayerVerdict {
    pub label: Label,
    pub confidence: f64,
    pub overlap: f64,
    pub variant: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MsaVerdictSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nas: Option<MsaLayerVerdict>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rrc: Option<MsaLayerVerdict>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fused: Option<FusionNote>,
}

/// One trace's full verdict line.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TraceVerdict {
    pub trace_id: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fbs: Option<FbsVerdictSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub msa: Option<MsaVerdictSection>,
}

impl TraceVerdict {
    /// Final FBS label, preferring the fused verdict.
    pub fn fbs_label(&self) -> Option<Label> {
        let section = self.fbs.as_ref()?;
        if let Some(f) = &section.fused {
            return Some(f.label);
        }
        section
            .nas
            .as_ref()
            .map(|v| v.label)
            .or_else(|| section.rrc.as_ref().map(|v| v.label))
    }

    /// Final MSA label, preferring the fused verdict.
    pub fn msa_label(&self) -> Option<Label> {
        let section = self.msa.as_ref()?;
        if let Some(f) = &section.fused {
            return Some(f.label);
        }
        section
            .nas
            .as_ref()
            .map(|v| v.label)
            .or_else(|| section.rrc.as_ref().map(|v| v.label))
    }
}

fn fbs_layer_verdict(
    bundle: &ModelBundle,
    trace: &Trace,
    layer: Layer,
) -> Result<Option<(FbsLayerVerdict, Prediction)>> {
    let Some((packet_model, trace_model)) = bundle.fbs_models(layer) else {
        return Ok(None);
    };
    let Some(book) = bundle.codebook(layer) else {
        return Ok(None);
    };
    let matrix = encode_for_inference(std::slice::from_ref(trace), layer, book)?;
    if matrix.rows.is_empty() {
        return Ok(None);
    }
    let stride = bundle
        .stride_override
        .unwrap_or(packet_model.config.len_seq)
        .min(packet_model.config.len_seq)
        .max(1);
    let probs = predict_packets(packet_model, &matrix.rows, stride)?;
    let kinds: Vec<_> = trace
        .packets
        .iter()
        .filter(|p| p.layer == layer)
        .map(|p| p.kind)
        .collect();
    let features = trace_features(&probs, &kinds);
    let prediction = predict_trace(trace_model, &features)?;
    Ok(Some((
        FbsLayerVerdict {
            label: prediction.label,
            confidence: prediction.confidence,
            per_packet: probs,
        },
        prediction,
    )))
}

fn msa_layer_verdict(
    bundle: &ModelBundle,
    trace: &Trace,
    layer: Layer,
) -> Result<Option<(MsaLayerVerdict, Prediction)>> {
    let Some((model, bank)) = bundle.msa_models(layer) else {
        return Ok(None);
    };
    if !trace.packets.iter().any(|p| p.layer == layer) {
        return Ok(None);
    }
    let graph = build_layer_graph_for_inference(trace, layer)?;
    let verdict: NearestVerdict = nearest_attack(model, &graph, bank, 0.5)?;
    let prediction = Prediction {
        label: verdict.label,
        confidence: verdict.confidence,
        layer,
    };
    Ok(Some((
        MsaLayerVerdict {
            label: verdict.label,
            confidence: verdict.confidence,
            overlap: verdict.overlap,
            variant: verdict.variant,
        },
        prediction,
    )))
}

/// Runs every model in the bundle over one trace.
pub fn verdict_for_trace(bundle: &ModelBundle, trace: &Trace) -> Result<TraceVerdict> {
    let fbs_nas = fbs_layer_verdict(bundle, trace, Layer::Nas)?;
    let fbs_rrc = fbs_layer_verdict(bundle, trace, Layer::Rrc)?;
    let fbs = if fbs_nas.is_some() || fbs_rrc.is_some() {
        let fused = match (&fbs_nas, &fbs_rrc) {
            (Some((_, pn)), Some((_, pr))) => Some(FusionNote::from(&fuse(pn, pr)?)),
            _ => None,
        };
        Some(FbsVerdictSection {
            nas: fbs_nas.map(|(v, _)| v),
            rrc: fbs_rrc.map(|(v, _)| v),
            fused,
        })
    } else {
        None
    };

    let msa_nas = msa_layer_verdict(bundle, trace, Layer::Nas)?;
    let msa_rrc = msa_layer_verdict(bundle, trace, Layer::Rrc)?;
    let msa = if msa_nas.is_some() || msa_rrc.is_some() {
        let fused = match (&msa_nas, &msa_rrc) {
            (Some((_, pn)), Some((_, pr))) => Some(FusionNote::from(&fuse(pn, pr)?)),
            _ => None,
        };
        Some(MsaVerdictSection {
            nas: msa_nas.map(|(v, _)| v),
            rrc: msa_rrc.map(|(v, _)| v),
            fused,
        })
    } else {
        None
    };

    Ok(TraceVerdict {
        trace_id: trace.trace_id.clone(),
        fbs,
        msa,
    })
}

/// Batch evaluation path: one verdict per trace, in input order.
pub fn verdicts_for_traces(bundle: &ModelBundle, traces: &[Trace]) -> Result<Vec<TraceVerdict>> {
    traces.iter().map(|t| verdict_for_trace(bundle, t)).collect()
}

/// Streaming path: trace JSONL in, verdict JSONL out, flushed per line.
pub fn detect_stream<R: BufRead, W: Write>(bundle: &ModelBundle, reader: R, mut writer: W) -> Result<usize> {
    let mut n = 0usize;
    for line in reader.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let trace = jsonl::trace_from_line(&line)?;
        let verdict = verdict_for_trace(bundle, &trace)?;
        serde_json::to_writer(&mut writer, &verdict)?;
        writer.write_all(b"\n")?;
        writer.flush()?;
        n += 1;
    }
    Ok(n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fbs::{rows_by_trace, train_packet_model, train_trace_model, PacketConfig, TraceConfig};
    use crate::featurize::{encode, window};
    use crate::model::{AttackerLevel, DatasetKind};
    use crate::sim::{gen_dataset, ScenarioSpec};

    fn tiny_bundle() -> (ModelBundle, Vec<Trace>) {
        let specs = vec![
            ScenarioSpec {
                scenario: Label::Benign,
                attacker_level: AttackerLevel::new(0).unwrap(),
                mobility: true,
                n_traces: 10,
                master_seed: 60,
                noise: 0.4,
            },
            ScenarioSpec {
                scenario: Label::Fbs,
                attacker_level: AttackerLevel::new(0).unwrap(),
                mobility: false,
                n_traces: 10,
                master_seed: 61,
                noise: 0.4,
            },
        ];
        let traces = gen_dataset(&specs).unwrap().traces;
        let (matrix, book) = encode(&traces, Layer::Nas, DatasetKind::Fbs, None).unwrap();
        let ws = window(&matrix, 12, 12);
        let scale = book.column_scales(&matrix.columns);
        let config = PacketConfig { epochs: 10, ..PacketConfig::for_layer(Layer::Nas) };
        let (packet_model, _) = train_packet_model(&ws, Layer::Nas, scale, config).unwrap();

        let mut features = Vec::new();
        let mut labels = Vec::new();
        for (tid, rows) in rows_by_trace(&matrix) {
            let probs = predict_packets(&packet_model, &rows, 12).unwrap();
            let trace = traces.iter().find(|t| t.trace_id == tid).unwrap();
            let kinds: Vec<_> = trace
                .packets
                .iter()
                .filter(|p| p.layer == Layer::Nas)
                .map(|p| p.kind)
                .collect();
            features.push(trace_features(&probs, &kinds));
            labels.push(f64::from(!trace.scenario.is_benign()));
        }
        let (trace_model, _) =
            train_trace_model(Layer::Nas, &features, &labels, TraceConfig::default()).unwrap();

        let bundle = ModelBundle {
            codebook_nas: Some(book),
            fbs_packet_nas: Some(packet_model),
            fbs_trace_nas: Some(trace_model),
            ..Default::default()
        };
        (bundle, traces)
    }

    #[test]
    fn streaming_equals_batch() {
        let (bundle, traces) = tiny_bundle();
        let batch = verdicts_for_traces(&bundle, &traces).unwrap();

        let mut jsonl_in = Vec::new();
        jsonl::write_traces(&mut jsonl_in, &traces).unwrap();
        let mut out = Vec::new();
        let n = detect_stream(&bundle, std::io::BufReader::new(&jsonl_in[..]), &mut out).unwrap();
        assert_eq!(n, traces.len());

        let stream_lines: Vec<&str> = std::str::from_utf8(&out).unwrap().lines().collect();
        assert_eq!(stream_lines.len(), batch.len());
        for (line, verdict) in stream_lines.iter().zip(batch.iter()) {
            assert_eq!(*line, serde_json::to_string(verdict).unwrap());
        }
    }

    #[test]
    fn verdict_has_fbs_section_without_msa_models() {
        let (bundle, traces) = tiny_bundle();
        let v = verdict_for_trace(&bundle, &traces[0]).unwrap();
        assert!(v.fbs.is_some());
        assert!(v.msa.is_none());
        let section = v.fbs.unwrap();
        assert!(section.nas.is_some());
        assert!(section.rrc.is_none());
        assert!(section.fused.is_none(), "fusion needs both layers");
    }
}
