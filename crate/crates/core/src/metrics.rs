//! Evaluation metrics: accuracy, macro precision/recall/F1, the false
//! positive rate with benign as the negative class, and the confusion
//! matrix.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::Label;

#[derive(Debug, Clone, Serialize)]
pub struct ClassMetrics {
    pub support: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct MetricsReport {
    pub accuracy: f64,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
    /// FP/(FP+TN) with benign as the negative class.
    pub fpr: f64,
    pub confusion: BTreeMap<String, BTreeMap<String, usize>>,
    pub per_class: BTreeMap<String, ClassMetrics>,
}

/// Macro-averaged metrics over the classes present in the ground truth.
pub fn compute_metrics(predictions: &[Label], actuals: &[Label]) -> Result<MetricsReport> {
    if predictions.len() != actuals.len() {
        return Err(Error::LengthMismatch(predictions.len(), actuals.len()));
    }
    if actuals.is_empty() {
        return Err(Error::EmptyTrainingSet);
    }

    let mut confusion: BTreeMap<String, BTreeMap<String, usize>> = BTreeMap::new();
    let mut hits = 0usize;
    for (pred, actual) in predictions.iter().zip(actuals.iter()) {
        *confusion
            .entry(actual.as_wire())
            .or_default()
            .entry(pred.as_wire())
            .or_insert(0) += 1;
        if pred == actual {
            hits += 1;
        }
    }

    let mut classes: Vec<String> = confusion.keys().cloned().collect();
    classes.sort();

    let mut per_class = BTreeMap::new();
    let mut macro_p = 0.0;
    let mut macro_r = 0.0;
    let mut macro_f = 0.0;
    for class in &classes {
        let support: usize = confusion[class].values().sum();
        let tp = confusion[class].get(class).copied().unwrap_or(0);
        let predicted_as: usize = confusion
            .values()
            .map(|row| row.get(class).copied().unwrap_or(0))
            .sum();
        let precision = if predicted_as > 0 {
            tp as f64 / predicted_as as f64
        } else {
            0.0
        };
        let recall = tp as f64 / support as f64;
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        macro_p += precision;
        macro_r += recall;
        macro_f += f1;
        per_class.insert(
            class.clone(),
            ClassMetrics { support, precision, recall, f1 },
        );
    }
    let n_classes = classes.len() as f64;

    let benign_key = Label::Benign.as_wire();
    let (mut fp, mut tn) = (0usize, 0usize);
    if let Some(row) = confusion.get(&benign_key) {
        for (pred, count) in row {
            if *pred == benign_key {
                tn += count;
            } else {
                fp += count;
            }
        }
    }
    let fpr = if fp + tn > 0 {
        fp as f64 / (fp + tn) as f64
    } else {
        0.0
    };

    Ok(MetricsReport {
        accuracy: hits as f64 / actuals.len() as f64,
        macro_precision: macro_p / n_classes,
        macro_recall: macro_r / n_classes,
        macro_f1: macro_f / n_classes,
        fpr,
        confusion,
        per_class,
    })
}
