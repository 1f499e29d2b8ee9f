//! End-to-end checks over a real directory tree: load season-tagged
//! labels, aggregate statistics, split, denormalize, and evaluate.

use std::collections::BTreeSet;
use std::path::Path;

use crosslight_control::domain::ObjectClass;
use crosslight_metrics::{
    class_distribution, evaluate_ap, ground_truth_from_annotations, load_annotation_dir,
    parse_prediction_lines, prediction_lines_to_string, split_dataset, MetricsError, Prediction,
    Season,
};

fn write(path: &Path, contents: &str) {
    std::fs::create_dir_all(path.parent().unwrap()).unwrap();
    std::fs::write(path, contents).unwrap();
}

fn build_tree(root: &Path) {
    // Two wheelchair users in spring, a car and a blind pedestrian in
    // summer, one unrestricted pedestrian untagged at the root. The
    // summer file sits one level deeper to exercise nested ids.
    write(
        &root.join("spring/imgA.txt"),
        "1 0.3 0.5 0.1 0.2\n1 0.7 0.5 0.1 0.2\n",
    );
    write(
        &root.join("summer/cam2/imgB.txt"),
        "11 0.5 0.6 0.4 0.4\n4 0.2 0.3 0.05 0.1\n",
    );
    write(&root.join("imgC.txt"), "0 0.5 0.5 0.2 0.4\n");
    write(&root.join("classes.txt"), &ObjectClass::names_file_contents());
}

#[test]
fn loads_tags_and_counts_a_season_layout() {
    let dir = tempfile::tempdir().unwrap();
    build_tree(dir.path());
    let records =
        load_annotation_dir(dir.path(), &ObjectClass::names_file_contents()).unwrap();
    assert_eq!(records.len(), 5);

    let ids: BTreeSet<&str> = records.iter().map(|r| r.image_id.as_str()).collect();
    assert_eq!(
        ids,
        BTreeSet::from(["spring/imgA", "summer/cam2/imgB", "imgC"])
    );
    for r in &records {
        let expected = match r.image_id.as_str() {
            "spring/imgA" => Some(Season::Spring),
            "summer/cam2/imgB" => Some(Season::Summer),
            _ => None,
        };
        assert_eq!(r.season, expected, "{}", r.image_id);
    }

    let dist = class_distribution(&records);
    assert_eq!(dist.counts[1], 2);
    assert_eq!(dist.counts[11], 1);
    assert_eq!(dist.counts[4], 1);
    assert_eq!(dist.counts[0], 1);
    assert_eq!(dist.total_images, 3);
    assert_eq!(dist.imbalance_ratio(), Some(2.0));
    assert_eq!(dist.per_season_counts[&Season::Spring][1], 2);
    assert_eq!(dist.images_per_season[&Season::Summer], 1);
}

#[test]
fn a_wrong_names_manifest_blocks_loading() {
    let dir = tempfile::tempdir().unwrap();
    build_tree(dir.path());
    let err = load_annotation_dir(dir.path(), "person\ncar\n").unwrap_err();
    assert!(matches!(err, MetricsError::Names(_)), "{err}");
}

#[test]
fn a_malformed_line_reports_its_file_and_line() {
    let dir = tempfile::tempdir().unwrap();
    write(&dir.path().join("bad.txt"), "1 0.5 0.5 0.2 0.3\n13 0.5 0.5 0.2 0.3\n");
    let err =
        load_annotation_dir(dir.path(), &ObjectClass::names_file_contents()).unwrap_err();
    match err {
        MetricsError::Parse { file, line, .. } => {
            assert!(file.ends_with("bad.txt"), "{file}");
            assert_eq!(line, 2);
        }
        other => panic!("unexpected error {other}"),
    }
}

#[test]
fn split_keeps_all_boxes_of_an_image_together() {
    let dir = tempfile::tempdir().unwrap();
    build_tree(dir.path());
    let records =
        load_annotation_dir(dir.path(), &ObjectClass::names_file_contents()).unwrap();
    let split = split_dataset(&records, 0.8, 3).unwrap();
    assert_eq!(split.train.len() + split.eval.len(), 3);
    let rerun = split_dataset(&records, 0.8, 3).unwrap();
    assert_eq!(split, rerun);
    let mut union: Vec<&String> = split.train.iter().chain(split.eval.iter()).collect();
    union.sort();
    union.dedup();
    assert_eq!(union.len(), 3, "train and eval must partition the images");
}

#[test]
fn perfect_predictions_on_loaded_ground_truth_score_one() {
    let dir = tempfile::tempdir().unwrap();
    build_tree(dir.path());
    let records =
        load_annotation_dir(dir.path(), &ObjectClass::names_file_contents()).unwrap();
    let gts = ground_truth_from_annotations(&records, 640.0, 512.0).unwrap();
    // The tree mixes areas on both sides of the 96 x 96 threshold, so a
    // perfect score requires every band to be handled.
    let areas: Vec<f64> = gts.iter().map(|g| g.bbox.area()).collect();
    assert!(areas.iter().any(|&a| a < 9216.0));
    assert!(areas.iter().any(|&a| a >= 9216.0));

    let preds: Vec<Prediction> = gts
        .iter()
        .map(|g| Prediction::new(g.image_id.clone(), g.class, g.bbox, 1.0).unwrap())
        .collect();
    let text = prediction_lines_to_string(&preds);
    let reparsed = parse_prediction_lines(&text, "roundtrip.jsonl").unwrap();
    assert_eq!(reparsed, preds);

    let result = evaluate_ap(&reparsed, &gts).unwrap();
    for v in [result.ap, result.ap50, result.ap75, result.ap_s, result.ap_l] {
        assert!((v - 1.0).abs() < 1e-12, "{result:?}");
    }
}
