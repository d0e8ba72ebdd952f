//! Trace → aligned numeric matrices, fixed-length windows, and the
//! trace-preserving train/test split.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{field_schema, label_code, DatasetKind, Layer, Trace};

/// Reserved code for a field that is absent from a packet.
pub const ABSENT_CODE: u32 = 0;
/// Reserved code for a value never seen while the codebook was built.
pub const UNK_CODE: u32 = 1;

pub const CODEBOOK_FORMAT_VERSION: u32 = 1;

/// Per-field categorical value → integer code mapping.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Codebook {
    pub format_version: u32,
    pub layer: Layer,
    fields: BTreeMap<String, BTreeMap<String, u32>>,
}

impl Codebook {
    fn new(layer: Layer) -> Codebook {
        Codebook {
            format_version: CODEBOOK_FORMAT_VERSION,
            layer,
            fields: BTreeMap::new(),
        }
    }

    fn assign(&mut self, field: &str, key: &str) -> u32 {
        let per_field = self.fields.entry(field.to_string()).or_default();
        if let Some(code) = per_field.get(key) {
            return *code;
        }
        let code = per_field.len() as u32 + 2;
        per_field.insert(key.to_string(), code);
        code
    }

    pub fn lookup(&self, field: &str, key: &str) -> u32 {
        self.fields
            .get(field)
            .and_then(|m| m.get(key))
            .copied()
            .unwrap_or(UNK_CODE)
    }

    /// Largest code across all fields.
    pub fn max_code(&self) -> u32 {
        self.fields
            .values()
            .flat_map(|m| m.values())
            .copied()
            .max()
            .unwrap_or(UNK_CODE)
    }

    /// Largest code assigned within one field.
    pub fn field_max_code(&self, field: &str) -> u32 {
        self.fields
            .get(field)
            .and_then(|m| m.values().copied().max())
            .unwrap_or(UNK_CODE)
    }

    /// Per-column input scale 1/(max_code+1), in schema order. Columns
    /// with many distinct values (identifiers) scale down harder than
    /// low-cardinality ones, keeping each column roughly in `[0,1]`.
    pub fn column_scales(&self, columns: &[String]) -> Vec<f64> {
        columns
            .iter()
            .map(|c| 1.0 / (self.field_max_code(c) + 1) as f64)
            .collect()
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("codebook serializes")
    }

    pub fn from_json(value: &serde_json::Value) -> Result<Codebook> {
        Ok(serde_json::from_value(value.clone())?)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRow {
    pub trace_id: String,
    pub seq: u32,
    pub codes: Vec<u32>,
    pub label: u32,
}

/// Packet-aligned code matrix for one layer. Columns follow the fixed
/// schema; every row adds trace_id, seq and label bookkeeping.
#[derive(Debug, Clone)]
pub struct FeatureMatrix {
    pub layer: Layer,
    pub columns: Vec<String>,
    pub rows: Vec<FeatureRow>,
}

impl FeatureMatrix {
    pub fn width_with_bookkeeping(&self) -> usize {
        self.columns.len() + 3
    }

    pub fn to_csv<W: std::io::Write>(&self, mut w: W) -> Result<()> {
        write!(w, "trace_id,seq")?;
        for c in &self.columns {
            write!(w, ",{c}")?;
        }
        writeln!(w, ",label")?;
        for row in &self.rows {
            write!(w, "{},{}", row.trace_id, row.seq)?;
            for code in &row.codes {
                write!(w, ",{code}")?;
            }
            writeln!(w, ",{}", row.label)?;
        }
        Ok(())
    }

    pub fn from_csv<R: std::io::BufRead>(r: R, layer: Layer) -> Result<FeatureMatrix> {
        let mut lines = r.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty feature csv".into()))??;
        let cols: Vec<String> = header.split(',').map(|s| s.to_string()).collect();
        if cols.len() < 3 || cols[0] != "trace_id" || cols[1] != "seq" || cols.last().map(String::as_str) != Some("label") {
            return Err(Error::Parse("bad feature csv header".into()));
        }
        let columns: Vec<String> = cols[2..cols.len() - 1].to_vec();
        let mut rows = Vec::new();
        for line in lines {
            let line = line?;
            if line.is_empty() {
                continue;
            }
            let parts: Vec<&str> = line.split(',').collect();
            if parts.len() != columns.len() + 3 {
                return Err(Error::Parse(format!("row width {} != {}", parts.len(), columns.len() + 3)));
            }
            let parse = |s: &str| -> Result<u32> {
                s.parse().map_err(|_| Error::Parse(format!("bad code `{s}`")))
            };
            rows.push(FeatureRow {
                trace_id: parts[0].to_string(),
                seq: parse(parts[1])?,
                codes: parts[2..parts.len() - 1]
                    .iter()
                    .map(|s| parse(s))
                    .collect::<Result<_>>()?,
                label: parse(parts[parts.len() - 1])?,
            });
        }
        Ok(FeatureMatrix { layer, columns, rows })
    }
}

/// Encodes one layer of a dataset into a feature matrix. With no existing
/// codebook the mapping is built first-seen; with one, unseen values fall
/// back to [`UNK_CODE`].
pub fn encode(
    traces: &[Trace],
    layer: Layer,
    dataset_kind: DatasetKind,
    existing: Option<&Codebook>,
) -> Result<(FeatureMatrix, Codebook)> {
    let schema = field_schema(layer);
    let mut book = existing.cloned().unwrap_or_else(|| Codebook::new(layer));
    let building = existing.is_none();
    let mut rows = Vec::new();

    for trace in traces {
        for packet in trace.packets.iter().filter(|p| p.layer == layer) {
            for field in packet.fields.keys() {
                if !crate::model::schema_contains(layer, field) {
                    return Err(Error::SchemaMismatch {
                        seq: packet.seq,
                        field: field.clone(),
                        layer: layer.as_str(),
                    });
                }
            }
            let codes: Vec<u32> = schema
                .iter()
                .map(|col| match packet.fields.get(col) {
                    None => ABSENT_CODE,
                    Some(v) => {
                        let key = v.codebook_key();
                        if building {
                            book.assign(col, &key)
                        } else {
                            book.lookup(col, &key)
                        }
                    }
                })
                .collect();
            rows.push(FeatureRow {
                trace_id: trace.trace_id.clone(),
                seq: packet.seq,
                codes,
                label: label_code(packet.label, dataset_kind)?,
            });
        }
    }

    Ok((
        FeatureMatrix {
            layer,
            columns: schema.to_vec(),
            rows,
        },
        book,
    ))
}

/// Inference-path encoding: identical to [`encode`] with a frozen
/// codebook, except ground-truth labels are not consulted (label column
/// zeroed). Real captures carry no labels.
pub fn encode_for_inference(
    traces: &[Trace],
    layer: Layer,
    book: &Codebook,
) -> Result<FeatureMatrix> {
    let schema = field_schema(layer);
    let mut rows = Vec::new();
    for trace in traces {
        for packet in trace.packets.iter().filter(|p| p.layer == layer) {
            for field in packet.fields.keys() {
                if !crate::model::schema_contains(layer, field) {
                    return Err(Error::SchemaMismatch {
                        seq: packet.seq,
                        field: field.clone(),
                        layer: layer.as_str(),
                    });
                }
            }
            let codes: Vec<u32> = schema
                .iter()
                .map(|col| match packet.fields.get(col) {
                    None => ABSENT_CODE,
                    Some(v) => book.lookup(col, &v.codebook_key()),
                })
                .collect();
            rows.push(FeatureRow {
                trace_id: trace.trace_id.clone(),
                seq: packet.seq,
                codes,
                label: 0,
            });
        }
    }
    Ok(FeatureMatrix {
        layer,
        columns: schema.to_vec(),
        rows,
    })
}

/// One fixed-length slice of a trace's rows, padded at the tail.
#[derive(Debug, Clone)]
pub struct Window {
    pub trace_id: String,
    pub start: usize,
    /// `[len_seq][columns]` codes; padding rows are all-ABSENT.
    pub codes: Vec<Vec<u32>>,
    pub labels: Vec<u32>,
    /// 1.0 for real rows, 0.0 for padding.
    pub mask: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct WindowSet {
    pub len_seq: usize,
    pub stride: usize,
    pub columns: usize,
    pub windows: Vec<Window>,
}

/// Cuts the matrix into per-trace windows at offsets 0, stride, 2·stride…
/// with the final partial window padded. Windows never span traces.
pub fn window(matrix: &FeatureMatrix, len_seq: usize, stride: usize) -> WindowSet {
    assert!(len_seq >= 1 && stride >= 1, "len_seq and stride must be >= 1");
    let width = matrix.columns.len();
    let mut windows = Vec::new();

    let mut trace_bounds: Vec<(usize, usize)> = Vec::new();
    let mut start = 0usize;
    for i in 1..=matrix.rows.len() {
        if i == matrix.rows.len() || matrix.rows[i].trace_id != matrix.rows[start].trace_id {
            trace_bounds.push((start, i));
            start = i;
        }
    }

    for (lo, hi) in trace_bounds {
        let len = hi - lo;
        let n_windows = if len <= len_seq {
            1
        } else {
            (len - len_seq).div_ceil(stride) + 1
        };
        for w in 0..n_windows {
            let offset = w * stride;
            let mut codes = Vec::with_capacity(len_seq);
            let mut labels = Vec::with_capacity(len_seq);
            let mut mask = Vec::with_capacity(len_seq);
            for t in 0..len_seq {
                let idx = offset + t;
                if idx < len {
                    let row = &matrix.rows[lo + idx];
                    codes.push(row.codes.clone());
                    labels.push(row.label);
                    mask.push(1.0);
                } else {
                    codes.push(vec![ABSENT_CODE; width]);
                    labels.push(0);
                    mask.push(0.0);
                }
            }
            windows.push(Window {
                trace_id: matrix.rows[lo].trace_id.clone(),
                start: offset,
                codes,
                labels,
                mask,
            });
        }
    }

    WindowSet {
        len_seq,
        stride,
        columns: width,
        windows,
    }
}

/// Stratified trace-granularity split. Within each class, traces are
/// shuffled by seed and assigned to the training side until it holds
/// roughly `ratio` of the class's packets; both sides keep at least one
/// trace per class.
pub fn split(traces: &[Trace], ratio: f64, seed: u64) -> Result<(Vec<Trace>, Vec<Trace>)> {
    assert!((0.0..1.0).contains(&ratio) && ratio > 0.0);
    let mut classes: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    for (i, t) in traces.iter().enumerate() {
        classes.entry(t.scenario.as_wire()).or_default().push(i);
    }
    for (class, members) in &classes {
        if members.len() < 2 {
            return Err(Error::ClassTooSmall(class.clone(), 2));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train_ids: Vec<bool> = vec![false; traces.len()];
    for members in classes.values() {
        let mut order = members.clone();
        order.shuffle(&mut rng);
        let total_packets: usize = order.iter().map(|&i| traces[i].packets.len()).sum();
        let target = ratio * total_packets as f64;
        let mut train_packets = 0usize;
        let mut n_train = 0usize;
        for (pos, &idx) in order.iter().enumerate() {
            let remaining = order.len() - pos;
            // leave at least one trace for the test side
            if remaining == 1 && n_train > 0 {
                break;
            }
            if (train_packets as f64) < target || n_train == 0 {
                train_ids[idx] = true;
                train_packets += traces[idx].packets.len();
                n_train += 1;
            } else {
                break;
            }
        }
    }

    let train: Vec<Trace> = traces
        .iter()
        .enumerate()
        .filter(|(i, _)| train_ids[*i])
        .map(|(_, t)| t.clone())
        .collect();
    let test: Vec<Trace> = traces
        .iter()
        .enumerate()
        .filter(|(i, _)| !train_ids[*i])
        .map(|(_, t)| t.clone())
        .collect();
    Ok((train, test))
}
