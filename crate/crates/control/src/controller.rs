//! Adaptive green-phase state machine with multi-frame absence validation.
//!
//! The controller watches a totally ordered stream of camera frames. During
//! a green phase, the first in-zone detection of a restricted mobility group
//! arms that group's presence tracker; the group then stays "present" until
//! it goes undetected for N consecutive frames, at which point its absence
//! is confirmed for the rest of the phase. When the green time is about to
//! expire and a present group remains, the controller grants one extra
//! second at a time, up to the cap of the group currently governing (the
//! highest-priority present group). Granted seconds are never revoked, so a
//! group confirmed absent mid-extension stops future grants but keeps the
//! seconds already given.
//!
//! Everything is integer-second and deterministic: the same ordered frame
//! and tick sequence always yields the same command log.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::domain::{FrameDetections, MobilityGroup};
use crate::geometry::PolygonZone;
use crate::{ControlError, Result};

/// Per-stream frame cadence of the deployed eight-camera ring, in ms.
pub const DEFAULT_FRAME_INTERVAL_MS: f64 = 363.4;

/// Default confidence gate for counting a detection toward presence.
pub const DEFAULT_CONFIDENCE_THRESHOLD: f64 = 0.5;

/// Maximum green extension per mobility group, whole seconds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExtensionCaps {
    pub walking_impairment_s: u32,
    pub visual_impairment_s: u32,
    pub mobility_burden_s: u32,
}

impl Default for ExtensionCaps {
    fn default() -> Self {
        ExtensionCaps {
            walking_impairment_s: 6,
            visual_impairment_s: 8,
            mobility_burden_s: 3,
        }
    }
}

impl ExtensionCaps {
    pub fn cap(&self, group: MobilityGroup) -> Result<u32> {
        match group {
            MobilityGroup::WalkingImpairment => Ok(self.walking_impairment_s),
            MobilityGroup::VisualImpairment => Ok(self.visual_impairment_s),
            MobilityGroup::MobilityBurden => Ok(self.mobility_burden_s),
            MobilityGroup::Unrestricted => Err(ControlError::UnsupportedGroup(
                group.name(),
                "extension cap",
            )),
        }
    }
}

/// Static controller parameters plus the camera-to-zone mapping.
#[derive(Debug, Clone, PartialEq)]
pub struct ControllerConfig {
    /// Base green time in whole seconds, at least 1.
    pub base_green_s: u32,
    pub max_extension: ExtensionCaps,
    /// Consecutive undetected frames required to confirm absence, at least 1.
    pub validation_frames: u32,
    /// Detections below this confidence are treated as misses.
    pub confidence_threshold: f64,
    /// Crossing zone per camera id; frames from unknown cameras are errors.
    pub zones: BTreeMap<u32, PolygonZone>,
    /// Nominal per-stream frame spacing in ms; used to lay out the frame
    /// grid when reconstructing streams, not by the state machine itself.
    pub frame_interval_ms: f64,
}

impl ControllerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.base_green_s < 1 {
            return Err(ControlError::InvalidConfig(
                "base_green_s must be at least 1".to_string(),
            ));
        }
        if self.validation_frames < 1 {
            return Err(ControlError::InvalidConfig(
                "validation_frames must be at least 1".to_string(),
            ));
        }
        if !(0.0..=1.0).contains(&self.confidence_threshold) {
            return Err(ControlError::InvalidConfig(format!(
                "confidence_threshold must lie in [0, 1], got {}",
                self.confidence_threshold
            )));
        }
        if self.zones.is_empty() {
            return Err(ControlError::InvalidConfig(
                "at least one camera zone is required".to_string(),
            ));
        }
        if !(self.frame_interval_ms.is_finite() && self.frame_interval_ms >= 1.0) {
            return Err(ControlError::InvalidConfig(format!(
                "frame_interval_ms must be at least 1, got {}",
                self.frame_interval_ms
            )));
        }
        Ok(())
    }
}

/// Presence state of one mobility group within one green phase.
///
/// Absence confirmation is terminal for the phase: once a group has been
/// undetected for N consecutive frames it cannot re-arm until the next
/// green phase begins. This keeps the extension budget from oscillating on
/// flickering detections of a pedestrian who has already left.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PresenceTracker {
    group: MobilityGroup,
    first_seen: bool,
    consecutive_misses: u32,
    confirmed_absent: bool,
}

impl PresenceTracker {
    pub fn new(group: MobilityGroup) -> PresenceTracker {
        PresenceTracker {
            group,
            first_seen: false,
            consecutive_misses: 0,
            confirmed_absent: false,
        }
    }

    /// Feed one frame's detected/missed outcome for this group.
    pub fn update(&mut self, detected: bool, validation_frames: u32) {
        if self.confirmed_absent {
            return;
        }
        if !self.first_seen {
            if detected {
                self.first_seen = true;
            }
            return;
        }
        if detected {
            self.consecutive_misses = 0;
        } else {
            self.consecutive_misses += 1;
            if self.consecutive_misses >= validation_frames {
                self.confirmed_absent = true;
            }
        }
    }

    pub fn group(&self) -> MobilityGroup {
        self.group
    }

    pub fn first_seen(&self) -> bool {
        self.first_seen
    }

    pub fn consecutive_misses(&self) -> u32 {
        self.consecutive_misses
    }

    pub fn confirmed_absent(&self) -> bool {
        self.confirmed_absent
    }

    /// Armed and not yet confirmed absent.
    pub fn is_present(&self) -> bool {
        self.first_seen && !self.confirmed_absent
    }
}

/// Signal phase. Green carries its elapsed whole seconds and the extension
/// granted so far.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignalPhase {
    Red,
    Green {
        elapsed_s: u32,
        granted_extension_s: u32,
    },
}

/// What the signal head should do after a tick.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignalCommand {
    /// Whole seconds of extension granted at this tick (0 or 1).
    pub extend_green_by: u32,
    /// Raise audible guidance volume while a visually impaired pedestrian
    /// is validated present.
    pub audible_boost: bool,
}

/// Cumulative per-camera ingest counters, maintained in every phase.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ZoneStats {
    pub frames: u64,
    pub in_zone_detections: u64,
}

/// The deterministic green-extension state machine.
#[derive(Debug, Clone)]
pub struct SignalController {
    config: ControllerConfig,
    phase: SignalPhase,
    green_start_s: u64,
    trackers: [PresenceTracker; 3],
    zone_stats: BTreeMap<u32, ZoneStats>,
    last_timestamp_ms: Option<u64>,
}

impl SignalController {
    pub fn new(config: ControllerConfig) -> Result<SignalController> {
        config.validate()?;
        let zone_stats = config.zones.keys().map(|&id| (id, ZoneStats::default())).collect();
        Ok(SignalController {
            config,
            phase: SignalPhase::Red,
            green_start_s: 0,
            trackers: MobilityGroup::RESTRICTED.map(PresenceTracker::new),
            zone_stats,
            last_timestamp_ms: None,
        })
    }

    pub fn config(&self) -> &ControllerConfig {
        &self.config
    }

    pub fn phase(&self) -> SignalPhase {
        self.phase
    }

    pub fn tracker(&self, group: MobilityGroup) -> Option<&PresenceTracker> {
        self.trackers.iter().find(|t| t.group() == group)
    }

    pub fn zone_stats(&self) -> &BTreeMap<u32, ZoneStats> {
        &self.zone_stats
    }

    pub fn granted_extension_s(&self) -> u32 {
        match self.phase {
            SignalPhase::Green {
                granted_extension_s,
                ..
            } => granted_extension_s,
            SignalPhase::Red => 0,
        }
    }

    /// Start the pedestrian green phase at whole second `now_s`. Presence
    /// trackers reset: only detections made during this green phase count.
    pub fn begin_green(&mut self, now_s: u64) {
        self.phase = SignalPhase::Green {
            elapsed_s: 0,
            granted_extension_s: 0,
        };
        self.green_start_s = now_s;
        self.trackers = MobilityGroup::RESTRICTED.map(PresenceTracker::new);
    }

    /// The highest-priority group currently validated present, if any.
    pub fn active_group(&self) -> Option<MobilityGroup> {
        MobilityGroup::RESTRICTED
            .iter()
            .copied()
            .filter(|&g| self.tracker(g).is_some_and(|t| t.is_present()))
            .min_by_key(|&g| g.priority_rank().expect("restricted group has a rank"))
    }

    /// Ingest one camera frame. Zone statistics update in every phase;
    /// presence trackers only move during Green.
    pub fn ingest_frame(&mut self, frame: &FrameDetections) -> Result<()> {
        let zone = self
            .config
            .zones
            .get(&frame.camera_id())
            .ok_or(ControlError::UnknownCamera(frame.camera_id()))?;
        if let Some(last) = self.last_timestamp_ms {
            if frame.timestamp_ms() < last {
                return Err(ControlError::OutOfOrder {
                    last,
                    got: frame.timestamp_ms(),
                });
            }
        }
        self.last_timestamp_ms = Some(frame.timestamp_ms());

        let mut detected = [false; 3];
        let mut in_zone_count = 0u64;
        for d in frame.detections() {
            if !zone.contains(d.bbox.anchor_point()) {
                continue;
            }
            in_zone_count += 1;
            if d.confidence < self.config.confidence_threshold {
                continue;
            }
            let group = d.object_class.group();
            if let Some(slot) = MobilityGroup::RESTRICTED.iter().position(|&g| g == group) {
                detected[slot] = true;
            }
        }
        let stats = self
            .zone_stats
            .get_mut(&frame.camera_id())
            .expect("stats entry exists for every configured camera");
        stats.frames += 1;
        stats.in_zone_detections += in_zone_count;

        if matches!(self.phase, SignalPhase::Green { .. }) {
            for (slot, tracker) in self.trackers.iter_mut().enumerate() {
                tracker.update(detected[slot], self.config.validation_frames);
            }
        }
        Ok(())
    }

    /// Advance the clock to the whole second `now_s`. Must be called once
    /// per second boundary during Green; during Red it is a no-op command.
    ///
    /// At the expiry boundary (elapsed green has used up base plus granted
    /// time), one extra second is granted when a present group still has
    /// budget under the governing cap; otherwise the phase ends.
    pub fn tick(&mut self, now_s: u64) -> SignalCommand {
        let SignalPhase::Green {
            granted_extension_s,
            ..
        } = self.phase
        else {
            return SignalCommand {
                extend_green_by: 0,
                audible_boost: false,
            };
        };
        let elapsed_s = now_s.saturating_sub(self.green_start_s) as u32;
        let mut granted = granted_extension_s;
        let mut extend = 0u32;
        if elapsed_s >= self.config.base_green_s + granted {
            let can_extend = self.active_group().is_some_and(|g| {
                granted < self.config.max_extension.cap(g).expect("restricted group has a cap")
            });
            if can_extend {
                granted += 1;
                extend = 1;
            } else {
                self.phase = SignalPhase::Red;
                return SignalCommand {
                    extend_green_by: 0,
                    audible_boost: false,
                };
            }
        }
        self.phase = SignalPhase::Green {
            elapsed_s,
            granted_extension_s: granted,
        };
        SignalCommand {
            extend_green_by: extend,
            audible_boost: self.active_group() == Some(MobilityGroup::VisualImpairment),
        }
    }
}
