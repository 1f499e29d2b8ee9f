//! The evaluator and the brute-force oracle must agree on every instance
//! small enough for the oracle, and the evaluator must obey the ordering
//! properties that hold regardless of instance size.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crosslight_control::domain::{iou, BoundingBox, ObjectClass};
use crosslight_metrics::{ap_oracle, evaluate_ap, EvalResult, GroundTruth, Prediction};

fn metric_fields(r: &EvalResult) -> [(&'static str, f64); 5] {
    [
        ("ap", r.ap),
        ("ap50", r.ap50),
        ("ap75", r.ap75),
        ("ap_s", r.ap_s),
        ("ap_l", r.ap_l),
    ]
}

fn random_box(rng: &mut ChaCha8Rng) -> BoundingBox {
    let x = rng.gen_range(0.0..400.0);
    let y = rng.gen_range(0.0..400.0);
    // Sizes straddle the 96 px small/large boundary, occasionally landing
    // exactly on it.
    let side = |rng: &mut ChaCha8Rng| {
        if rng.gen_bool(0.1) {
            96.0
        } else {
            rng.gen_range(40.0..150.0)
        }
    };
    let (w, h) = (side(rng), side(rng));
    BoundingBox::new(x, y, x + w, y + h).unwrap()
}

fn jitter_box(rng: &mut ChaCha8Rng, base: &BoundingBox) -> BoundingBox {
    let dx = rng.gen_range(-30.0..30.0);
    let dy = rng.gen_range(-30.0..30.0);
    let scale = rng.gen_range(0.8..1.2);
    let w = base.width() * scale;
    let h = base.height() * scale;
    BoundingBox::new(
        base.x_min() + dx,
        base.y_min() + dy,
        base.x_min() + dx + w,
        base.y_min() + dy + h,
    )
    .unwrap()
}

fn random_confidence(rng: &mut ChaCha8Rng) -> f64 {
    if rng.gen_bool(0.4) {
        // Quantized levels provoke confidence ties.
        [0.2, 0.4, 0.6, 0.8][rng.gen_range(0..4)]
    } else {
        rng.gen_range(0.0..1.0)
    }
}

fn random_class(rng: &mut ChaCha8Rng) -> ObjectClass {
    ObjectClass::from_index(rng.gen_range(0..3)).unwrap()
}

/// An instance the oracle accepts: at most `max_per_image` boxes per
/// image, predictions correlated with ground truth often enough that
/// matches, near-misses, and band conflicts all occur.
fn random_instance(
    rng: &mut ChaCha8Rng,
    max_per_image: usize,
) -> (Vec<Prediction>, Vec<GroundTruth>) {
    let mut preds = Vec::new();
    let mut gts = Vec::new();
    for img in 0..rng.gen_range(1..=3) {
        let image_id = format!("img{img}");
        let total = rng.gen_range(0..=max_per_image);
        let gt_count = rng.gen_range(0..=total);
        for _ in 0..gt_count {
            gts.push(GroundTruth {
                image_id: image_id.clone(),
                class: random_class(rng),
                bbox: random_box(rng),
            });
        }
        let image_gts: Vec<GroundTruth> = gts
            .iter()
            .filter(|g| g.image_id == image_id)
            .cloned()
            .collect();
        for _ in 0..(total - gt_count) {
            let (class, bbox) = if !image_gts.is_empty() && rng.gen_bool(0.65) {
                let base = &image_gts[rng.gen_range(0..image_gts.len())];
                let class = if rng.gen_bool(0.8) {
                    base.class
                } else {
                    random_class(rng)
                };
                (class, jitter_box(rng, &base.bbox))
            } else {
                (random_class(rng), random_box(rng))
            };
            preds.push(
                Prediction::new(image_id.clone(), class, bbox, random_confidence(rng)).unwrap(),
            );
        }
    }
    (preds, gts)
}

#[test]
fn oracle_agrees_on_three_hundred_random_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for case in 0..300 {
        let (preds, gts) = random_instance(&mut rng, 6);
        let fast = evaluate_ap(&preds, &gts).unwrap();
        let slow = ap_oracle(&preds, &gts).unwrap();
        for ((name, a), (_, b)) in metric_fields(&fast).into_iter().zip(metric_fields(&slow)) {
            assert!(
                (a - b).abs() <= 1e-12,
                "case {case}: {name} diverged, {a} vs {b}"
            );
        }
        for (name, v) in metric_fields(&fast) {
            assert!((0.0..=1.0).contains(&v), "case {case}: {name} = {v}");
        }
        assert!(
            fast.ap <= fast.ap50 + 1e-12,
            "case {case}: ap {} exceeds ap50 {}",
            fast.ap,
            fast.ap50
        );
    }
}

/// A box that overlaps every same-class ground truth of its image below
/// 0.5 can never match at any scored threshold, so it is a genuine false
/// positive wherever it lands.
fn true_false_positive(
    rng: &mut ChaCha8Rng,
    gts: &[GroundTruth],
    image_id: &str,
    class: ObjectClass,
) -> BoundingBox {
    let rivals: Vec<&GroundTruth> = gts
        .iter()
        .filter(|g| g.image_id == image_id && g.class == class)
        .collect();
    for _ in 0..50 {
        let candidate = random_box(rng);
        if rivals.iter().all(|g| iou(&candidate, &g.bbox) < 0.5) {
            return candidate;
        }
    }
    // Far outside the populated region, disjoint from everything.
    BoundingBox::new(10_000.0, 10_000.0, 10_100.0, 10_100.0).unwrap()
}

#[test]
fn adding_a_false_positive_never_raises_any_metric() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for case in 0..200 {
        let (mut preds, gts) = random_instance(&mut rng, 8);
        let before = evaluate_ap(&preds, &gts).unwrap();
        let image_id = format!("img{}", rng.gen_range(0..3));
        let class = random_class(&mut rng);
        let bbox = true_false_positive(&mut rng, &gts, &image_id, class);
        preds.push(Prediction::new(image_id, class, bbox, random_confidence(&mut rng)).unwrap());
        let after = evaluate_ap(&preds, &gts).unwrap();
        for ((name, b), (_, a)) in metric_fields(&before).into_iter().zip(metric_fields(&after))
        {
            assert!(
                a <= b + 1e-12,
                "case {case}: {name} rose from {b} to {a} after a false positive"
            );
        }
    }
}

#[test]
fn renaming_images_changes_nothing() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..50 {
        let (preds, gts) = random_instance(&mut rng, 6);
        let renamed_preds: Vec<Prediction> = preds
            .iter()
            .map(|p| {
                Prediction::new(
                    format!("renamed/{}", p.image_id),
                    p.class,
                    p.bbox,
                    p.confidence,
                )
                .unwrap()
            })
            .collect();
        let renamed_gts: Vec<GroundTruth> = gts
            .iter()
            .map(|g| GroundTruth {
                image_id: format!("renamed/{}", g.image_id),
                class: g.class,
                bbox: g.bbox,
            })
            .collect();
        let original = evaluate_ap(&preds, &gts).unwrap();
        let renamed = evaluate_ap(&renamed_preds, &renamed_gts).unwrap();
        assert_eq!(metric_fields(&original), metric_fields(&renamed));
    }
}

#[test]
fn permuting_class_labels_permutes_nothing_in_the_average() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let relabel = |c: ObjectClass| ObjectClass::from_index((c.index() + 5) % 12).unwrap();
    for _ in 0..50 {
        let (preds, gts) = random_instance(&mut rng, 6);
        let mapped_preds: Vec<Prediction> = preds
            .iter()
            .map(|p| {
                Prediction::new(p.image_id.clone(), relabel(p.class), p.bbox, p.confidence)
                    .unwrap()
            })
            .collect();
        let mapped_gts: Vec<GroundTruth> = gts
            .iter()
            .map(|g| GroundTruth {
                image_id: g.image_id.clone(),
                class: relabel(g.class),
                bbox: g.bbox,
            })
            .collect();
        let original = evaluate_ap(&preds, &gts).unwrap();
        let mapped = evaluate_ap(&mapped_preds, &mapped_gts).unwrap();
        for ((name, a), (_, b)) in metric_fields(&original)
            .into_iter()
            .zip(metric_fields(&mapped))
        {
            assert!((a - b).abs() <= 1e-12, "{name}: {a} vs {b}");
        }
    }
}
