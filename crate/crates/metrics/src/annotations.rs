//! Normalized annotation records, dataset statistics, and splitting.
//!
//! Label files carry one box per line as `class_index cx cy w h` with all
//! coordinates normalized to the unit square; the class-names file pins the
//! 12-class order and is verified before any labels are trusted. Season
//! tags are read from the directory layout: a path component named after a
//! season (spring/summer/autumn/winter) tags every record below it.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use walkdir::WalkDir;

use crosslight_control::domain::{BoundingBox, ObjectClass};

use crate::error::{MetricsError, Result};
use crate::eval::GroundTruth;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Season {
    Spring,
    Summer,
    Autumn,
    Winter,
}

impl Season {
    pub const ALL: [Season; 4] = [Season::Spring, Season::Summer, Season::Autumn, Season::Winter];

    pub fn name(self) -> &'static str {
        match self {
            Season::Spring => "spring",
            Season::Summer => "summer",
            Season::Autumn => "autumn",
            Season::Winter => "winter",
        }
    }

    pub fn from_name(name: &str) -> Option<Season> {
        Season::ALL.iter().copied().find(|s| s.name() == name)
    }
}

/// One annotated box in normalized center-size form.
#[derive(Debug, Clone, PartialEq)]
pub struct AnnotationRecord {
    pub image_id: String,
    pub class: ObjectClass,
    pub cx: f64,
    pub cy: f64,
    pub w: f64,
    pub h: f64,
    pub season: Option<Season>,
}

impl AnnotationRecord {
    pub fn new(
        image_id: String,
        class: ObjectClass,
        cx: f64,
        cy: f64,
        w: f64,
        h: f64,
        season: Option<Season>,
    ) -> Result<AnnotationRecord> {
        for (name, v) in [("cx", cx), ("cy", cy), ("w", w), ("h", h)] {
            if !v.is_finite() || !(0.0..=1.0).contains(&v) {
                return Err(MetricsError::InvalidRecord(format!(
                    "{name} must lie in [0, 1], got {v}"
                )));
            }
        }
        if w <= 0.0 || h <= 0.0 {
            return Err(MetricsError::InvalidRecord(format!(
                "box size must be positive, got w={w} h={h}"
            )));
        }
        let record = AnnotationRecord {
            image_id,
            class,
            cx,
            cy,
            w,
            h,
            season,
        };
        let (x_min, y_min, x_max, y_max) = record.corners();
        if x_min < 0.0 || y_min < 0.0 || x_max > 1.0 || y_max > 1.0 {
            return Err(MetricsError::InvalidRecord(format!(
                "box exceeds the unit square: [{x_min}, {y_min}, {x_max}, {y_max}]"
            )));
        }
        Ok(record)
    }

    pub fn corners(&self) -> (f64, f64, f64, f64) {
        (
            self.cx - self.w / 2.0,
            self.cy - self.h / 2.0,
            self.cx + self.w / 2.0,
            self.cy + self.h / 2.0,
        )
    }

    /// Denormalize to a pixel-space box for a width x height image.
    pub fn to_pixel_box(&self, image_width: f64, image_height: f64) -> Result<BoundingBox> {
        let (x_min, y_min, x_max, y_max) = self.corners();
        BoundingBox::new(
            x_min * image_width,
            y_min * image_height,
            x_max * image_width,
            y_max * image_height,
        )
        .map_err(|e| MetricsError::InvalidRecord(e.to_string()))
    }
}

/// Check that a names file carries exactly the 12 known class names in
/// index order, one per line.
pub fn verify_names_file(text: &str) -> Result<()> {
    let lines: Vec<&str> = text.lines().map(str::trim).collect();
    if lines.len() != 12 {
        return Err(MetricsError::Names(format!(
            "expected 12 class names, found {}",
            lines.len()
        )));
    }
    for (i, line) in lines.iter().enumerate() {
        let expected = ObjectClass::from_index(i)
            .expect("index below 12")
            .name();
        if *line != expected {
            return Err(MetricsError::Names(format!(
                "line {}: expected {expected:?}, found {line:?}",
                i + 1
            )));
        }
    }
    Ok(())
}

/// Parse the label lines of one image.
pub fn parse_annotation_text(
    image_id: &str,
    season: Option<Season>,
    text: &str,
    file_label: &str,
) -> Result<Vec<AnnotationRecord>> {
    let mut records = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        records.push(
            parse_label_line(image_id, season, line).map_err(|reason| MetricsError::Parse {
                file: file_label.to_string(),
                line: idx + 1,
                reason,
            })?,
        );
    }
    Ok(records)
}

fn parse_label_line(
    image_id: &str,
    season: Option<Season>,
    line: &str,
) -> std::result::Result<AnnotationRecord, String> {
    let fields: Vec<&str> = line.split_whitespace().collect();
    if fields.len() != 5 {
        return Err(format!(
            "expected 5 fields `class cx cy w h`, found {}",
            fields.len()
        ));
    }
    let class_index: usize = fields[0]
        .parse()
        .map_err(|_| format!("class index {:?} is not an integer", fields[0]))?;
    let class = ObjectClass::from_index(class_index).map_err(|e| e.to_string())?;
    let mut coords = [0.0f64; 4];
    for (slot, field) in coords.iter_mut().zip(&fields[1..]) {
        *slot = field
            .parse()
            .map_err(|_| format!("coordinate {field:?} is not a number"))?;
    }
    AnnotationRecord::new(
        image_id.to_string(),
        class,
        coords[0],
        coords[1],
        coords[2],
        coords[3],
        season,
    )
    .map_err(|e| e.to_string())
}

/// Load every `.txt` label file under `dir` (recursively), tagging seasons
/// from directory names. The image id is the file's path relative to
/// `dir`, without the extension, with `/` separators; nested files stay
/// distinct that way. A file whose content is exactly the class-name
/// manifest is skipped, so a names file stored beside the labels does not
/// trip label parsing.
pub fn load_annotation_dir(dir: &Path, names_text: &str) -> Result<Vec<AnnotationRecord>> {
    verify_names_file(names_text)?;
    let mut paths = Vec::new();
    for entry in WalkDir::new(dir).sort_by_file_name() {
        let entry = entry.map_err(|e| MetricsError::Io {
            path: dir.display().to_string(),
            source: e.into(),
        })?;
        if entry.file_type().is_file()
            && entry.path().extension().is_some_and(|ext| ext == "txt")
        {
            paths.push(entry.into_path());
        }
    }
    paths.sort();
    let mut records = Vec::new();
    for path in paths {
        let relative = path.strip_prefix(dir).unwrap_or(&path);
        let season = relative
            .components()
            .filter_map(|c| Season::from_name(&c.as_os_str().to_string_lossy()))
            .next_back();
        let image_id = relative
            .with_extension("")
            .components()
            .map(|c| c.as_os_str().to_string_lossy().into_owned())
            .collect::<Vec<_>>()
            .join("/");
        let text = std::fs::read_to_string(&path).map_err(|e| MetricsError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        if verify_names_file(&text).is_ok() {
            continue;
        }
        records.extend(parse_annotation_text(
            &image_id,
            season,
            &text,
            &path.display().to_string(),
        )?);
    }
    Ok(records)
}

/// Class histogram with optional per-season breakdown.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassDistribution {
    pub counts: [u64; 12],
    pub per_season_counts: BTreeMap<Season, [u64; 12]>,
    pub images_per_season: BTreeMap<Season, u64>,
    pub total_records: u64,
    pub total_images: u64,
}

impl ClassDistribution {
    /// max/min over classes that occur at least once; none when the
    /// histogram is empty.
    pub fn imbalance_ratio(&self) -> Option<f64> {
        let nonzero: Vec<u64> = self.counts.iter().copied().filter(|&c| c > 0).collect();
        let max = nonzero.iter().max()?;
        let min = nonzero.iter().min()?;
        Some(*max as f64 / *min as f64)
    }
}

pub fn class_distribution(records: &[AnnotationRecord]) -> ClassDistribution {
    let mut counts = [0u64; 12];
    let mut per_season_counts: BTreeMap<Season, [u64; 12]> = BTreeMap::new();
    let mut season_images: BTreeMap<Season, BTreeSet<&str>> = BTreeMap::new();
    let mut images = BTreeSet::new();
    for r in records {
        counts[r.class.index()] += 1;
        images.insert(r.image_id.as_str());
        if let Some(season) = r.season {
            per_season_counts.entry(season).or_insert([0u64; 12])[r.class.index()] += 1;
            season_images
                .entry(season)
                .or_default()
                .insert(r.image_id.as_str());
        }
    }
    ClassDistribution {
        counts,
        per_season_counts,
        images_per_season: season_images
            .into_iter()
            .map(|(s, set)| (s, set.len() as u64))
            .collect(),
        total_records: records.len() as u64,
        total_images: images.len() as u64,
    }
}

/// A deterministic train/eval partition of image ids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitResult {
    pub train: Vec<String>,
    pub eval: Vec<String>,
}

/// Split distinct image ids with a seeded shuffle. The evaluation side
/// receives floor(n * (1 - ratio)) images, so tiny datasets keep their
/// images in training (1 image at ratio 0.8 trains on it; 100 images give
/// the expected 80/20).
pub fn split_image_ids(ids: &[String], ratio: f64, seed: u64) -> Result<SplitResult> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(MetricsError::InvalidParameter(format!(
            "split ratio must lie in (0, 1), got {ratio}"
        )));
    }
    let mut distinct: Vec<String> = BTreeSet::from_iter(ids.iter().cloned())
        .into_iter()
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    distinct.shuffle(&mut rng);
    // The nudge keeps exact fractions exact: 100 * (1 - 0.8) evaluates to
    // 19.999999999999996 in f64 and must still floor to 20.
    let eval_count = ((distinct.len() as f64 * (1.0 - ratio)) + 1e-9).floor() as usize;
    let eval_count = eval_count.min(distinct.len());
    let train_count = distinct.len() - eval_count;
    let eval = distinct.split_off(train_count);
    Ok(SplitResult {
        train: distinct,
        eval,
    })
}

pub fn split_dataset(records: &[AnnotationRecord], ratio: f64, seed: u64) -> Result<SplitResult> {
    let ids: Vec<String> = records.iter().map(|r| r.image_id.clone()).collect();
    split_image_ids(&ids, ratio, seed)
}

/// Denormalize annotations into pixel-space ground truth for evaluation.
pub fn ground_truth_from_annotations(
    records: &[AnnotationRecord],
    image_width: f64,
    image_height: f64,
) -> Result<Vec<GroundTruth>> {
    if !(image_width.is_finite() && image_width > 0.0)
        || !(image_height.is_finite() && image_height > 0.0)
    {
        return Err(MetricsError::InvalidParameter(format!(
            "image size must be positive, got {image_width}x{image_height}"
        )));
    }
    records
        .iter()
        .map(|r| {
            Ok(GroundTruth {
                image_id: r.image_id.clone(),
                class: r.class,
                bbox: r.to_pixel_box(image_width, image_height)?,
            })
        })
        .collect()
}
