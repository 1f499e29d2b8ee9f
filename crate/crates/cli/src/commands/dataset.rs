//! `dataset stats|split|eval-ap`: annotation tooling.

use std::path::Path;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use crosslight_control::domain::ObjectClass;
use crosslight_metrics::{
    class_distribution, eval_csv, eval_report, evaluate_ap, ground_truth_from_annotations,
    load_annotation_dir, parse_prediction_lines, split_dataset, AnnotationRecord, Season,
};

use crate::config::canonical_flags;
use crate::manifest::{write_run, RunManifest};
use crate::{EvalApArgs, SplitArgs, StatsArgs};

fn load_labels(labels: &Path, names: &Path) -> Result<Vec<AnnotationRecord>> {
    let names_text = std::fs::read_to_string(names)
        .with_context(|| format!("reading names file {}", names.display()))?;
    let records = load_annotation_dir(labels, &names_text)
        .with_context(|| format!("loading labels under {}", labels.display()))?;
    Ok(records)
}

pub fn stats(args: StatsArgs) -> Result<ExitCode> {
    let records = load_labels(&args.labels, &args.names)?;
    let dist = class_distribution(&records);

    let mut out = String::new();
    out.push_str(&format!(
        "# {} records over {} images\n",
        dist.total_records, dist.total_images
    ));
    for season in Season::ALL {
        if let Some(counts) = dist.per_season_counts.get(&season) {
            out.push_str(&format!(
                "# season {}: {} records over {} images\n",
                season.name(),
                counts.iter().sum::<u64>(),
                dist.images_per_season.get(&season).copied().unwrap_or(0)
            ));
        }
    }
    match dist.imbalance_ratio() {
        Some(ratio) => out.push_str(&format!(
            "# class imbalance ratio (max/min over nonzero): {ratio:.2}\n"
        )),
        None => out.push_str("# class imbalance ratio: undefined (no records)\n"),
    }
    out.push_str("class_index,class_name,count\n");
    for class in ObjectClass::ALL {
        out.push_str(&format!(
            "{},{},{}\n",
            class.index(),
            class.name(),
            dist.counts[class.index()]
        ));
    }
    print!("{out}");

    let manifest = RunManifest::new(
        "dataset stats",
        &canonical_flags(&[
            ("labels", args.labels.display().to_string()),
            ("names", args.names.display().to_string()),
        ]),
    );
    write_run(&args.out.resolve(), manifest, &[("stats.csv", &out)])?;
    Ok(ExitCode::SUCCESS)
}

pub fn split(args: SplitArgs) -> Result<ExitCode> {
    let records = load_labels(&args.labels, &args.names)?;
    let split = split_dataset(&records, args.ratio, args.seed)?;
    println!(
        "{} train / {} eval images",
        split.train.len(),
        split.eval.len()
    );

    let list = |ids: &[String]| {
        let mut text = String::new();
        for id in ids {
            text.push_str(id);
            text.push('\n');
        }
        text
    };
    let manifest = RunManifest::new(
        "dataset split",
        &canonical_flags(&[
            ("labels", args.labels.display().to_string()),
            ("names", args.names.display().to_string()),
            ("ratio", format!("{}", args.ratio)),
            ("seed", args.seed.to_string()),
        ]),
    )
    .with_seed("split", args.seed);
    write_run(
        &args.out.resolve(),
        manifest,
        &[
            ("train.txt", &list(&split.train)),
            ("eval.txt", &list(&split.eval)),
        ],
    )?;
    Ok(ExitCode::SUCCESS)
}

pub fn eval_ap(args: EvalApArgs) -> Result<ExitCode> {
    let (width, height) = parse_image_size(&args.image_size)?;
    let records = load_labels(&args.labels, &args.names)?;
    let ground_truth = ground_truth_from_annotations(&records, width, height)?;
    let pred_text = std::fs::read_to_string(&args.predictions)
        .with_context(|| format!("reading predictions {}", args.predictions.display()))?;
    let predictions =
        parse_prediction_lines(&pred_text, &args.predictions.display().to_string())?;

    let result = evaluate_ap(&predictions, &ground_truth)?;
    print!("{}", eval_report(&result));

    let manifest = RunManifest::new(
        "dataset eval-ap",
        &canonical_flags(&[
            ("labels", args.labels.display().to_string()),
            ("names", args.names.display().to_string()),
            ("predictions", args.predictions.display().to_string()),
            ("image_size", args.image_size.clone()),
        ]),
    );
    write_run(&args.out.resolve(), manifest, &[("eval.csv", &eval_csv(&result))])?;
    Ok(ExitCode::SUCCESS)
}

/// Parse `WIDTHxHEIGHT` in pixels, for example `640x512`.
fn parse_image_size(spec: &str) -> Result<(f64, f64)> {
    let Some((w, h)) = spec.trim().split_once('x') else {
        bail!("image size {spec:?} is not WIDTHxHEIGHT");
    };
    let width: u32 = w.trim().parse().with_context(|| format!("width in {spec:?}"))?;
    let height: u32 = h
        .trim()
        .parse()
        .with_context(|| format!("height in {spec:?}"))?;
    if width == 0 || height == 0 {
        bail!("image size {spec:?} must be positive");
    }
    Ok((f64::from(width), f64::from(height)))
}
