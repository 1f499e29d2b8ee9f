//! Dataset tooling and detection-quality evaluation for the 12-class
//! thermal crossing scheme.
//!
//! Three concerns live here: ingesting normalized center-size annotation
//! files (with per-season tagging and strict validation), deterministic
//! dataset statistics and train/eval splitting, and a COCO-style average
//! precision evaluator. The evaluator ships with an independent
//! brute-force oracle that enumerates matchings and integrates the
//! precision-recall curve by direct summation; the two are required to
//! agree to 1e-12 on every instance small enough for the oracle.

mod annotations;
mod error;
mod eval;
mod oracle;

pub use annotations::{
    class_distribution, ground_truth_from_annotations, load_annotation_dir, parse_annotation_text,
    split_dataset, split_image_ids, verify_names_file, AnnotationRecord, ClassDistribution,
    Season, SplitResult,
};
pub use error::{MetricsError, Result};
pub use eval::{
    eval_csv, eval_report, evaluate_ap, parse_prediction_lines, prediction_lines_to_string,
    EvalResult, GroundTruth, Prediction, IOU_THRESHOLDS, SMALL_AREA_THRESHOLD_PX,
};
pub use oracle::{ap_oracle, ORACLE_MAX_BOXES_PER_IMAGE};

/// Crate version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
