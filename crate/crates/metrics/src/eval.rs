//! COCO-style average precision over the 12-class detection scheme.
//!
//! Matching follows the reference protocol: per class, predictions are
//! taken in descending confidence order and greedily matched per image to
//! the unmatched ground truth with the highest overlap at or above the
//! threshold. Ground truth outside the active area band is ignored rather
//! than counted; a prediction that matches an ignored box, or that goes
//! unmatched while itself lying outside the band, drops out of the
//! precision-recall curve instead of counting as a false positive.

use serde::{Deserialize, Serialize};

use crosslight_control::domain::{iou, BoundingBox, ObjectClass};

use crate::error::{MetricsError, Result};

/// Overlap thresholds for the averaged metric, 0.50 to 0.95 in steps of
/// 0.05. Spelled out as literals so each threshold is the exact f64 the
/// comparisons use; accumulating 0.05 would drift off 0.75.
pub const IOU_THRESHOLDS: [f64; 10] = [0.50, 0.55, 0.60, 0.65, 0.70, 0.75, 0.80, 0.85, 0.90, 0.95];

/// Boxes with pixel area below this count as small objects (96 x 96).
pub const SMALL_AREA_THRESHOLD_PX: f64 = 9216.0;

const AP50_INDEX: usize = 0;
const AP75_INDEX: usize = 5;

/// One scored detection in pixel coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub image_id: String,
    pub class: ObjectClass,
    pub bbox: BoundingBox,
    pub confidence: f64,
}

impl Prediction {
    pub fn new(
        image_id: String,
        class: ObjectClass,
        bbox: BoundingBox,
        confidence: f64,
    ) -> Result<Prediction> {
        validate_confidence(confidence)?;
        Ok(Prediction {
            image_id,
            class,
            bbox,
            confidence,
        })
    }
}

/// One reference box in pixel coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub image_id: String,
    pub class: ObjectClass,
    pub bbox: BoundingBox,
}

fn validate_confidence(confidence: f64) -> Result<()> {
    if !confidence.is_finite() || !(0.0..=1.0).contains(&confidence) {
        return Err(MetricsError::InvalidRecord(format!(
            "confidence must lie in [0, 1], got {confidence}"
        )));
    }
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PredictionRecord {
    image_id: String,
    class_index: usize,
    x_min: f64,
    y_min: f64,
    x_max: f64,
    y_max: f64,
    confidence: f64,
}

/// Parse newline-delimited JSON predictions. `file_label` names the
/// source in error messages.
pub fn parse_prediction_lines(text: &str, file_label: &str) -> Result<Vec<Prediction>> {
    let mut predictions = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let parse_err = |reason: String| MetricsError::Parse {
            file: file_label.to_string(),
            line: idx + 1,
            reason,
        };
        let record: PredictionRecord =
            serde_json::from_str(raw.trim()).map_err(|e| parse_err(e.to_string()))?;
        let class = ObjectClass::from_index(record.class_index)
            .map_err(|e| parse_err(e.to_string()))?;
        let bbox = BoundingBox::new(record.x_min, record.y_min, record.x_max, record.y_max)
            .map_err(|e| parse_err(e.to_string()))?;
        predictions.push(
            Prediction::new(record.image_id, class, bbox, record.confidence)
                .map_err(|e| parse_err(e.to_string()))?,
        );
    }
    Ok(predictions)
}

pub fn prediction_lines_to_string(predictions: &[Prediction]) -> String {
    let mut out = String::new();
    for p in predictions {
        let record = PredictionRecord {
            image_id: p.image_id.clone(),
            class_index: p.class.index(),
            x_min: p.bbox.x_min(),
            y_min: p.bbox.y_min(),
            x_max: p.bbox.x_max(),
            y_max: p.bbox.y_max(),
            confidence: p.confidence,
        };
        out.push_str(&serde_json::to_string(&record).expect("prediction record serializes"));
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum AreaBand {
    All,
    Small,
    Large,
}

impl AreaBand {
    pub(crate) fn contains(self, area: f64) -> bool {
        match self {
            AreaBand::All => true,
            AreaBand::Small => area < SMALL_AREA_THRESHOLD_PX,
            AreaBand::Large => area >= SMALL_AREA_THRESHOLD_PX,
        }
    }
}

/// Averaged detection quality. `ap` averages over all ten thresholds,
/// `ap50` and `ap75` fix the threshold, `ap_s` and `ap_l` restrict ground
/// truth to small and large boxes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalResult {
    pub ap: f64,
    pub ap50: f64,
    pub ap75: f64,
    pub ap_s: f64,
    pub ap_l: f64,
}

/// Evaluate predictions against ground truth.
pub fn evaluate_ap(predictions: &[Prediction], ground_truth: &[GroundTruth]) -> Result<EvalResult> {
    for p in predictions {
        validate_confidence(p.confidence)?;
    }

    // ap_matrix[band][threshold] collects the per-class APs that are
    // eligible at that (band, threshold): a class counts only when it has
    // in-band ground truth there.
    let bands = [AreaBand::All, AreaBand::Small, AreaBand::Large];
    let mut ap_matrix: [Vec<Vec<f64>>; 3] =
        std::array::from_fn(|_| vec![Vec::new(); IOU_THRESHOLDS.len()]);

    for class in ObjectClass::ALL {
        let mut class_preds: Vec<&Prediction> =
            predictions.iter().filter(|p| p.class == class).collect();
        class_preds.sort_by(|a, b| {
            b.confidence
                .partial_cmp(&a.confidence)
                .expect("confidences validated finite")
        });
        let class_gts: Vec<&GroundTruth> = ground_truth
            .iter()
            .filter(|g| g.class == class)
            .collect();
        if class_preds.is_empty() && class_gts.is_empty() {
            continue;
        }
        for (band_idx, band) in bands.into_iter().enumerate() {
            for (t_idx, &threshold) in IOU_THRESHOLDS.iter().enumerate() {
                if let Some(ap) = class_band_ap(&class_preds, &class_gts, threshold, band) {
                    ap_matrix[band_idx][t_idx].push(ap);
                }
            }
        }
    }

    let mean = |values: &[f64]| -> f64 {
        if values.is_empty() {
            0.0
        } else {
            values.iter().sum::<f64>() / values.len() as f64
        }
    };
    let band_mean = |band_idx: usize| -> f64 {
        let all: Vec<f64> = ap_matrix[band_idx].iter().flatten().copied().collect();
        mean(&all)
    };

    Ok(EvalResult {
        ap: band_mean(0),
        ap50: mean(&ap_matrix[0][AP50_INDEX]),
        ap75: mean(&ap_matrix[0][AP75_INDEX]),
        ap_s: band_mean(1),
        ap_l: band_mean(2),
    })
}

/// Average precision for one class at one threshold and band, or None when
/// the class has no in-band ground truth and is excluded from the average.
fn class_band_ap(
    preds: &[&Prediction],
    gts: &[&GroundTruth],
    threshold: f64,
    band: AreaBand,
) -> Option<f64> {
    let gt_ignored: Vec<bool> = gts.iter().map(|g| !band.contains(g.bbox.area())).collect();
    let in_band_gt_count = gt_ignored.iter().filter(|&&ig| !ig).count();
    if in_band_gt_count == 0 {
        return None;
    }

    let mut gt_matched = vec![false; gts.len()];
    // (recall, precision) after each scored prediction, ignored ones
    // dropped from the curve.
    let mut curve: Vec<(f64, f64)> = Vec::new();
    let mut tp = 0u64;
    let mut fp = 0u64;
    for pred in preds {
        let matched = best_match(pred, gts, &gt_matched, &gt_ignored, threshold);
        let ignored = match matched {
            Some(g) => {
                gt_matched[g] = true;
                if gt_ignored[g] {
                    true
                } else {
                    tp += 1;
                    false
                }
            }
            None => {
                if band.contains(pred.bbox.area()) {
                    fp += 1;
                    false
                } else {
                    true
                }
            }
        };
        if !ignored {
            curve.push((
                tp as f64 / in_band_gt_count as f64,
                tp as f64 / (tp + fp) as f64,
            ));
        }
    }

    Some(ap_from_curve(&curve))
}

/// Greedy match for one prediction: the unmatched ground truth with the
/// highest overlap at or above the threshold, first ground truth winning
/// ties. Ignored boxes form a second tier consulted only when no regular
/// box qualifies, so an ignored box can absorb a prediction but never
/// steal one.
fn best_match(
    pred: &Prediction,
    gts: &[&GroundTruth],
    gt_matched: &[bool],
    gt_ignored: &[bool],
    threshold: f64,
) -> Option<usize> {
    for tier_ignored in [false, true] {
        let mut best: Option<(usize, f64)> = None;
        for (g, gt) in gts.iter().enumerate() {
            if gt_matched[g] || gt_ignored[g] != tier_ignored || gt.image_id != pred.image_id {
                continue;
            }
            let overlap = iou(&pred.bbox, &gt.bbox);
            if overlap >= threshold && best.is_none_or(|(_, b)| overlap > b) {
                best = Some((g, overlap));
            }
        }
        if let Some((g, _)) = best {
            return Some(g);
        }
    }
    None
}

/// 101-point interpolated average precision. Precision is first made
/// non-increasing in recall (each point takes the max over everything to
/// its right), then sampled at recalls 0.00, 0.01, ..., 1.00; recalls the
/// curve never reaches contribute zero.
fn ap_from_curve(curve: &[(f64, f64)]) -> f64 {
    let n = curve.len();
    let mut envelope: Vec<f64> = curve.iter().map(|&(_, p)| p).collect();
    for i in (0..n.saturating_sub(1)).rev() {
        envelope[i] = envelope[i].max(envelope[i + 1]);
    }
    let mut total = 0.0;
    for j in 0..=100u32 {
        let r = f64::from(j) / 100.0;
        let idx = curve.partition_point(|&(rec, _)| rec < r);
        if idx < n {
            total += envelope[idx];
        }
    }
    total / 101.0
}

/// Render the metrics as a single-row CSV.
pub fn eval_csv(result: &EvalResult) -> String {
    format!(
        "ap,ap50,ap75,ap_s,ap_l\n{:.6},{:.6},{:.6},{:.6},{:.6}\n",
        result.ap, result.ap50, result.ap75, result.ap_s, result.ap_l
    )
}

/// Render the metrics as labelled lines for terminal output.
pub fn eval_report(result: &EvalResult) -> String {
    format!(
        "average precision (IoU 0.50:0.95)   {:.6}\n\
         average precision (IoU 0.50)        {:.6}\n\
         average precision (IoU 0.75)        {:.6}\n\
         average precision (small objects)   {:.6}\n\
         average precision (large objects)   {:.6}\n",
        result.ap, result.ap50, result.ap75, result.ap_s, result.ap_l
    )
}
