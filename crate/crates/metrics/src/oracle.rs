//! Brute-force cross-check for the average precision evaluator.
//!
//! Instead of running the greedy matcher, the oracle enumerates every
//! injective assignment of predictions to ground truth within an image
//! and keeps the one whose step-by-step choices are argmax-consistent,
//! then integrates the precision-recall curve by scanning the raw points
//! at each recall threshold rather than building a monotone envelope.
//! Exponential enumeration caps the instance size; anything bigger is
//! refused rather than approximated.

use std::collections::BTreeMap;

use crosslight_control::domain::{iou, ObjectClass};

use crate::error::{MetricsError, Result};
use crate::eval::{AreaBand, EvalResult, GroundTruth, Prediction, IOU_THRESHOLDS};

/// Largest number of boxes (predictions plus ground truth, all classes)
/// the oracle will enumerate for a single image.
pub const ORACLE_MAX_BOXES_PER_IMAGE: usize = 6;

/// Reference implementation of the evaluator for small instances.
pub fn ap_oracle(predictions: &[Prediction], ground_truth: &[GroundTruth]) -> Result<EvalResult> {
    let mut boxes_per_image: BTreeMap<&str, usize> = BTreeMap::new();
    for p in predictions {
        *boxes_per_image.entry(p.image_id.as_str()).or_default() += 1;
    }
    for g in ground_truth {
        *boxes_per_image.entry(g.image_id.as_str()).or_default() += 1;
    }
    if let Some((image, count)) = boxes_per_image
        .iter()
        .find(|(_, &count)| count > ORACLE_MAX_BOXES_PER_IMAGE)
    {
        return Err(MetricsError::OracleTooLarge(format!(
            "image {image:?} holds {count} boxes, limit is {ORACLE_MAX_BOXES_PER_IMAGE}"
        )));
    }
    for p in predictions {
        if !p.confidence.is_finite() || !(0.0..=1.0).contains(&p.confidence) {
            return Err(MetricsError::InvalidRecord(format!(
                "confidence must lie in [0, 1], got {}",
                p.confidence
            )));
        }
    }

    // Every (class, band, threshold) cell, None where the class has no
    // in-band ground truth and is therefore excluded from averages.
    let bands = [AreaBand::All, AreaBand::Small, AreaBand::Large];
    let mut cells: Vec<(usize, usize, Option<f64>)> = Vec::new();
    for class in ObjectClass::ALL {
        let mut preds: Vec<&Prediction> =
            predictions.iter().filter(|p| p.class == class).collect();
        preds.sort_by(|a, b| {
            b.confidence
                .partial_cmp(&a.confidence)
                .expect("confidences validated finite")
        });
        let gts: Vec<&GroundTruth> = ground_truth
            .iter()
            .filter(|g| g.class == class)
            .collect();
        if preds.is_empty() && gts.is_empty() {
            continue;
        }
        for (band_idx, band) in bands.into_iter().enumerate() {
            for (t_idx, &threshold) in IOU_THRESHOLDS.iter().enumerate() {
                cells.push((
                    band_idx,
                    t_idx,
                    oracle_class_ap(&preds, &gts, threshold, band),
                ));
            }
        }
    }

    let collect = |want_band: usize, want_t: Option<usize>| -> Vec<f64> {
        cells
            .iter()
            .filter(|(band, t, _)| *band == want_band && want_t.is_none_or(|w| *t == w))
            .filter_map(|(_, _, ap)| *ap)
            .collect()
    };
    let average = |values: Vec<f64>| -> f64 {
        if values.is_empty() {
            0.0
        } else {
            values.iter().sum::<f64>() / values.len() as f64
        }
    };

    Ok(EvalResult {
        ap: average(collect(0, None)),
        ap50: average(collect(0, Some(0))),
        ap75: average(collect(0, Some(5))),
        ap_s: average(collect(1, None)),
        ap_l: average(collect(2, None)),
    })
}

fn oracle_class_ap(
    preds: &[&Prediction],
    gts: &[&GroundTruth],
    threshold: f64,
    band: AreaBand,
) -> Option<f64> {
    let gt_ignored: Vec<bool> = gts.iter().map(|g| !band.contains(g.bbox.area())).collect();
    let real_gt_count = gt_ignored.iter().filter(|&&ig| !ig).count();
    if real_gt_count == 0 {
        return None;
    }

    // Solve each image independently, then stitch assignments back into
    // the global confidence order.
    let mut assignment: Vec<Option<usize>> = vec![None; preds.len()];
    let mut images: Vec<&str> = preds
        .iter()
        .map(|p| p.image_id.as_str())
        .chain(gts.iter().map(|g| g.image_id.as_str()))
        .collect();
    images.sort_unstable();
    images.dedup();
    for image in images {
        let pred_idx: Vec<usize> = (0..preds.len())
            .filter(|&i| preds[i].image_id == image)
            .collect();
        let gt_idx: Vec<usize> = (0..gts.len())
            .filter(|&g| gts[g].image_id == image)
            .collect();
        let mappings = enumerate_injective(pred_idx.len(), gt_idx.len());
        let consistent: Vec<&Vec<Option<usize>>> = mappings
            .iter()
            .filter(|m| is_greedy_consistent(m, &pred_idx, &gt_idx, preds, gts, &gt_ignored, threshold))
            .collect();
        assert_eq!(
            consistent.len(),
            1,
            "exactly one assignment should survive the consistency filter"
        );
        for (slot, &p) in pred_idx.iter().enumerate() {
            assignment[p] = consistent[0][slot].map(|local| gt_idx[local]);
        }
    }

    // Raw precision-recall points, ignored predictions dropped.
    let mut points: Vec<(f64, f64)> = Vec::new();
    let (mut tp, mut fp) = (0u64, 0u64);
    for (i, pred) in preds.iter().enumerate() {
        let counted = match assignment[i] {
            Some(g) => {
                if gt_ignored[g] {
                    false
                } else {
                    tp += 1;
                    true
                }
            }
            None => {
                if band.contains(pred.bbox.area()) {
                    fp += 1;
                    true
                } else {
                    false
                }
            }
        };
        if counted {
            points.push((
                tp as f64 / real_gt_count as f64,
                tp as f64 / (tp + fp) as f64,
            ));
        }
    }

    let mut total = 0.0;
    for j in 0..=100u32 {
        let r = f64::from(j) / 100.0;
        let mut best = 0.0f64;
        for &(recall, precision) in &points {
            if recall >= r && precision > best {
                best = precision;
            }
        }
        total += best;
    }
    Some(total / 101.0)
}

/// All injective mappings from `npreds` slots to `Some(gt)` or `None`.
fn enumerate_injective(npreds: usize, ngts: usize) -> Vec<Vec<Option<usize>>> {
    let mut out = Vec::new();
    let mut current: Vec<Option<usize>> = Vec::with_capacity(npreds);
    fn recurse(
        npreds: usize,
        ngts: usize,
        current: &mut Vec<Option<usize>>,
        out: &mut Vec<Vec<Option<usize>>>,
    ) {
        if current.len() == npreds {
            out.push(current.clone());
            return;
        }
        current.push(None);
        recurse(npreds, ngts, current, out);
        current.pop();
        for g in 0..ngts {
            if current.contains(&Some(g)) {
                continue;
            }
            current.push(Some(g));
            recurse(npreds, ngts, current, out);
            current.pop();
        }
    }
    recurse(npreds, ngts, &mut current, &mut out);
    out
}

/// Check one candidate assignment against the matching rule: walking the
/// image's predictions in confidence order, each must take the unmatched
/// ground truth with the highest overlap at or above the threshold (first
/// listed wins ties), consulting ignored boxes only when no regular box
/// qualifies.
#[allow(clippy::too_many_arguments)]
fn is_greedy_consistent(
    mapping: &[Option<usize>],
    pred_idx: &[usize],
    gt_idx: &[usize],
    preds: &[&Prediction],
    gts: &[&GroundTruth],
    gt_ignored: &[bool],
    threshold: f64,
) -> bool {
    let mut taken = vec![false; gt_idx.len()];
    for (slot, &p) in pred_idx.iter().enumerate() {
        let mut expected: Option<usize> = None;
        for tier_ignored in [false, true] {
            let mut best_overlap = f64::NEG_INFINITY;
            for (local, &g) in gt_idx.iter().enumerate() {
                if taken[local] || gt_ignored[g] != tier_ignored {
                    continue;
                }
                let overlap = iou(&preds[p].bbox, &gts[g].bbox);
                if overlap >= threshold && overlap > best_overlap {
                    best_overlap = overlap;
                    expected = Some(local);
                }
            }
            if expected.is_some() {
                break;
            }
        }
        if mapping[slot] != expected {
            return false;
        }
        if let Some(local) = expected {
            taken[local] = true;
        }
    }
    true
}
