//! On-disk TOML forms of the controller and scenario settings.
//!
//! Unknown fields are hard errors: a typo in a safety-relevant parameter
//! like the validation window or an extension cap must fail loudly, not
//! fall back to a default. The same wire structs rendered as JSON (fixed
//! field order, sorted maps) serve as the canonical bytes that manifests
//! digest.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

use crosslight_control::controller::{ControllerConfig, ExtensionCaps};
use crosslight_control::domain::MobilityGroup;
use crosslight_control::geometry::PolygonZone;
use crosslight_control::sim::{Arrival, ScenarioConfig, SpeedProfile};

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfigFile {
    pub crossing_length_m: f64,
    pub miss_probability: f64,
    pub frame_interval_ms: f64,
    pub inference_ms: f64,
    pub num_cameras: u32,
    pub base_green_s: u32,
    pub validation_frames: u32,
    pub rng_seed: u64,
    pub speed_m_s: BTreeMap<MobilityGroup, SpeedProfile>,
    pub arrivals: Vec<Arrival>,
}

impl ScenarioConfigFile {
    pub fn from_config(cfg: &ScenarioConfig) -> ScenarioConfigFile {
        ScenarioConfigFile {
            crossing_length_m: cfg.crossing_length_m,
            miss_probability: cfg.miss_probability,
            frame_interval_ms: cfg.frame_interval_ms,
            inference_ms: cfg.inference_ms,
            num_cameras: cfg.num_cameras,
            base_green_s: cfg.base_green_s,
            validation_frames: cfg.validation_frames,
            rng_seed: cfg.rng_seed,
            speed_m_s: cfg.speed_m_s.clone(),
            arrivals: cfg.arrivals.clone(),
        }
    }

    pub fn into_config(self) -> ScenarioConfig {
        ScenarioConfig {
            crossing_length_m: self.crossing_length_m,
            speed_m_s: self.speed_m_s,
            arrivals: self.arrivals,
            miss_probability: self.miss_probability,
            frame_interval_ms: self.frame_interval_ms,
            inference_ms: self.inference_ms,
            num_cameras: self.num_cameras,
            base_green_s: self.base_green_s,
            validation_frames: self.validation_frames,
            rng_seed: self.rng_seed,
        }
    }
}

/// Load a scenario, apply the optional seed override, and return it with
/// its canonical JSON form (digested by the manifest).
pub fn load_scenario(
    path: Option<&Path>,
    seed_override: Option<u64>,
) -> Result<(ScenarioConfig, String)> {
    let mut cfg = match path {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading scenario config {}", path.display()))?;
            let file: ScenarioConfigFile = toml::from_str(&text)
                .with_context(|| format!("parsing scenario config {}", path.display()))?;
            file.into_config()
        }
        None => ScenarioConfig::default(),
    };
    if let Some(seed) = seed_override {
        cfg.rng_seed = seed;
    }
    cfg.validate().context("validating scenario config")?;
    let canonical = serde_json::to_string(&ScenarioConfigFile::from_config(&cfg))
        .context("canonicalizing scenario config")?;
    Ok((cfg, canonical))
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerConfigFile {
    pub base_green_s: u32,
    pub validation_frames: u32,
    pub confidence_threshold: f64,
    pub frame_interval_ms: f64,
    #[serde(default)]
    pub max_extension: ExtensionCaps,
    /// Camera id (decimal string, TOML keys are strings) to zone polygon.
    pub zones: BTreeMap<String, Vec<(f64, f64)>>,
}

impl ControllerConfigFile {
    pub fn from_config(cfg: &ControllerConfig) -> ControllerConfigFile {
        ControllerConfigFile {
            base_green_s: cfg.base_green_s,
            validation_frames: cfg.validation_frames,
            confidence_threshold: cfg.confidence_threshold,
            frame_interval_ms: cfg.frame_interval_ms,
            max_extension: cfg.max_extension,
            zones: cfg
                .zones
                .iter()
                .map(|(id, zone)| (id.to_string(), Vec::from(zone.clone())))
                .collect(),
        }
    }

    pub fn into_config(self) -> Result<ControllerConfig> {
        let mut zones = BTreeMap::new();
        for (key, coords) in self.zones {
            let id: u32 = key
                .parse()
                .with_context(|| format!("zone key {key:?} is not a camera id"))?;
            let zone = PolygonZone::from_coords(&coords)
                .with_context(|| format!("zone for camera {id}"))?;
            zones.insert(id, zone);
        }
        Ok(ControllerConfig {
            base_green_s: self.base_green_s,
            max_extension: self.max_extension,
            validation_frames: self.validation_frames,
            confidence_threshold: self.confidence_threshold,
            zones,
            frame_interval_ms: self.frame_interval_ms,
        })
    }
}

/// Load controller settings with their canonical JSON form.
pub fn load_controller(path: &Path) -> Result<(ControllerConfig, String)> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading controller config {}", path.display()))?;
    let file: ControllerConfigFile = toml::from_str(&text)
        .with_context(|| format!("parsing controller config {}", path.display()))?;
    let cfg = file.into_config()?;
    cfg.validate().context("validating controller config")?;
    let canonical = serde_json::to_string(&ControllerConfigFile::from_config(&cfg))
        .context("canonicalizing controller config")?;
    Ok((cfg, canonical))
}

/// Canonical JSON for commands whose configuration is just their flags.
pub fn canonical_flags(pairs: &[(&str, String)]) -> String {
    let map: BTreeMap<&str, &String> = pairs.iter().map(|(k, v)| (*k, v)).collect();
    serde_json::to_string(&map).expect("flag map serializes")
}
