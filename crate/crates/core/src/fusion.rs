//! Weighted confidence fusion of the NAS and RRC trace-level predictions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Label, Layer, Prediction};

/// Final NAS+RRC decision with provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FusedVerdict {
    pub label: Label,
    pub winning_layer: Layer,
    pub w_nas: f64,
    pub w_rrc: f64,
    pub nas: Prediction,
    pub rrc: Prediction,
}

/// Fusion weight of one prediction: the support score is the prediction's
/// own confidence (identity proportionality).
pub fn support_score(prediction: &Prediction) -> f64 {
    prediction.confidence
}

fn same_label_space(a: &Label, b: &Label) -> bool {
    // both binary (benign/fbs) or both attack-recognition labels
    let fbsish = |l: &Label| matches!(l, Label::Benign | Label::Fbs);
    let msaish = |l: &Label| matches!(l, Label::Benign | Label::Msa(_));
    (fbsish(a) && fbsish(b)) || (msaish(a) && msaish(b))
}

/// Case rule: agreement keeps the label; disagreement goes to the side
/// with the larger weight; an exact tie goes to NAS.
pub fn fuse(p_nas: &Prediction, p_rrc: &Prediction) -> Result<FusedVerdict> {
    if p_nas.layer != Layer::Nas || p_rrc.layer != Layer::Rrc {
        return Err(Error::LabelSpaceMismatch);
    }
    if !same_label_space(&p_nas.label, &p_rrc.label) {
        return Err(Error::LabelSpaceMismatch);
    }
    let w_nas = support_score(p_nas);
    let w_rrc = support_score(p_rrc);
    let (label, winning_layer) = if p_nas.label == p_rrc.label || w_nas >= w_rrc {
        (p_nas.label, Layer::Nas)
    } else {
        (p_rrc.label, Layer::Rrc)
    };
    Ok(FusedVerdict {
        label,
        winning_layer,
        w_nas,
        w_rrc,
        nas: p_nas.clone(),
        rrc: p_rrc.clone(),
    })
}

/// Brute-force verification of [`fuse`] against a direct transcription of
/// the case rule over every label pair and a weight grid; returns the
/// number of mismatches (0 when correct).
#[allow(clippy::if_same_then_else)] // literal transcription of the case rule
pub fn fuse_exhaustive_check() -> usize {
    use crate::model::AttackKind;
    let labels = [
        Label::Benign,
        Label::Fbs,
        Label::Msa(AttackKind::from_id(1).unwrap()),
        Label::Msa(AttackKind::from_id(20).unwrap()),
    ];
    let mut mismatches = 0usize;
    let grid: Vec<f64> = (0..=20).map(|i| i as f64 * 0.05).collect();
    for &la in &labels {
        for &lb in &labels {
            if !same_label_space(&la, &lb) {
                continue;
            }
            for &wa in &grid {
                for &wb in &grid {
                    let p_nas = Prediction { label: la, confidence: wa, layer: Layer::Nas };
                    let p_rrc = Prediction { label: lb, confidence: wb, layer: Layer::Rrc };
                    let fused = fuse(&p_nas, &p_rrc).expect("same space");

                    // direct case transcription
                    let expected = if la == lb {
                        la
                    } else if wa > wb {
                        la
                    } else if wa < wb {
                        lb
                    } else {
                        la // tie → NAS
                    };
                    if fused.label != expected {
                        mismatches += 1;
                    }
                    // winner's weight must not trail the loser's when the
                    // labels disagree
                    if la != lb {
                        let (ww, wl) = match fused.winning_layer {
                            Layer::Nas => (fused.w_nas, fused.w_rrc),
                            Layer::Rrc => (fused.w_rrc, fused.w_nas),
                        };
                        if ww < wl {
                            mismatches += 1;
                        }
                    }
                }
            }
        }
    }
    mismatches
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::AttackKind;

    fn pred(label: Label, confidence: f64, layer: Layer) -> Prediction {
        Prediction { label, confidence, layer }
    }

    #[test]
    fn paper_cases() {
        // agreement
        let f = fuse(
            &pred(Label::Fbs, 0.8, Layer::Nas),
            &pred(Label::Fbs, 0.6, Layer::Rrc),
        )
        .unwrap();
        assert_eq!(f.label, Label::Fbs);

        // NAS wins on weight
        let f = fuse(
            &pred(Label::Fbs, 0.9, Layer::Nas),
            &pred(Label::Benign, 0.7, Layer::Rrc),
        )
        .unwrap();
        assert_eq!(f.label, Label::Fbs);
        assert_eq!(f.winning_layer, Layer::Nas);

        // RRC wins on weight
        let f = fuse(
            &pred(Label::Benign, 0.6, Layer::Nas),
            &pred(Label::Fbs, 0.8, Layer::Rrc),
        )
        .unwrap();
        assert_eq!(f.label, Label::Fbs);
        assert_eq!(f.winning_layer, Layer::Rrc);
    }

    #[test]
    fn ties_go_to_nas_and_labels_never_invented() {
        let f = fuse(
            &pred(Label::Benign, 0.7, Layer::Nas),
            &pred(Label::Fbs, 0.7, Layer::Rrc),
        )
        .unwrap();
        assert_eq!(f.label, Label::Benign);
        assert_eq!(f.winning_layer, Layer::Nas);

        let a = Label::Msa(AttackKind::from_id(3).unwrap());
        let b = Label::Msa(AttackKind::from_id(9).unwrap());
        let f = fuse(&pred(a, 0.2, Layer::Nas), &pred(b, 0.9, Layer::Rrc)).unwrap();
        assert!(f.label == a || f.label == b);
        assert_eq!(f.label, b);
    }

    #[test]
    fn support_score_is_identity_and_monotone() {
        assert_eq!(support_score(&pred(Label::Fbs, 0.9, Layer::Nas)), 0.9);
        assert_eq!(support_score(&pred(Label::Fbs, 0.0, Layer::Nas)), 0.0);
        assert!(
            support_score(&pred(Label::Fbs, 0.8, Layer::Nas))
                > support_score(&pred(Label::Fbs, 0.3, Layer::Nas))
        );
    }

    #[test]
    fn mixed_label_spaces_are_rejected() {
        let err = fuse(
            &pred(Label::Fbs, 0.5, Layer::Nas),
            &pred(Label::Msa(AttackKind::from_id(1).unwrap()), 0.5, Layer::Rrc),
        );
        assert!(matches!(err, Err(Error::LabelSpaceMismatch)));

        let err = fuse(
            &pred(Label::Fbs, 0.5, Layer::Rrc),
            &pred(Label::Fbs, 0.5, Layer::Nas),
        );
        assert!(matches!(err, Err(Error::LabelSpaceMismatch)));
    }

    #[test]
    fn exhaustive_grid_has_no_mismatches() {
        assert_eq!(fuse_exhaustive_check(), 0);
    }
}
