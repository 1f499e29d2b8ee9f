//! Line-delimited event formats and deterministic replay.
//!
//! Detection logs carry one JSON object per line with the fixed field set
//! `ts_ms, camera_id, class_id, x_min, y_min, x_max, y_max, confidence`.
//! Command logs mirror the controller's per-tick output as
//! `ts_s, extend_green_by, audible_boost, active_group`.
//!
//! A detection log records only what was detected; the frames in which
//! nothing was seen are exactly as important, because consecutive empty
//! frames are what confirm absence. Replay therefore reconstructs the full
//! frame grid from the controller config: frame k is stamped
//! round(k * frame_interval_ms) and assigned to the configured cameras in
//! round-robin order. Every logged event must land on that grid.

use serde::{Deserialize, Serialize};

use crate::controller::{SignalCommand, SignalController, SignalPhase};
use crate::domain::{BoundingBox, Detection, FrameDetections, MobilityGroup, ObjectClass};
use crate::{ControlError, Result};

/// One detected object, as logged on the wire.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectionEvent {
    pub ts_ms: u64,
    pub camera_id: u32,
    pub class_id: usize,
    pub x_min: f64,
    pub y_min: f64,
    pub x_max: f64,
    pub y_max: f64,
    pub confidence: f64,
}

impl DetectionEvent {
    pub fn from_detection(d: &Detection) -> DetectionEvent {
        DetectionEvent {
            ts_ms: d.timestamp_ms,
            camera_id: d.camera_id,
            class_id: d.object_class.index(),
            x_min: d.bbox.x_min(),
            y_min: d.bbox.y_min(),
            x_max: d.bbox.x_max(),
            y_max: d.bbox.y_max(),
            confidence: d.confidence,
        }
    }

    pub fn to_detection(&self) -> Result<Detection> {
        let class = ObjectClass::from_index(self.class_id)?;
        let bbox = BoundingBox::new(self.x_min, self.y_min, self.x_max, self.y_max)?;
        Detection::new(class, bbox, self.confidence, self.camera_id, self.ts_ms)
    }
}

/// One controller tick, as logged on the wire.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CommandLogEntry {
    pub ts_s: u64,
    pub extend_green_by: u32,
    pub audible_boost: bool,
    pub active_group: Option<MobilityGroup>,
}

/// Parse a detection log. Line numbers are 1-based; blank lines are errors
/// because positions in the file double as event identifiers in replay
/// diagnostics.
pub fn parse_event_lines(text: &str) -> Result<Vec<DetectionEvent>> {
    let mut events = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let event: DetectionEvent =
            serde_json::from_str(line).map_err(|e| ControlError::EventLine {
                line: idx + 1,
                reason: e.to_string(),
            })?;
        event.to_detection().map_err(|e| ControlError::EventLine {
            line: idx + 1,
            reason: e.to_string(),
        })?;
        events.push(event);
    }
    Ok(events)
}

pub fn event_lines_to_string(events: &[DetectionEvent]) -> String {
    let mut out = String::new();
    for e in events {
        out.push_str(&serde_json::to_string(e).expect("event serializes"));
        out.push('\n');
    }
    out
}

pub fn parse_command_log(text: &str) -> Result<Vec<CommandLogEntry>> {
    let mut entries = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let entry: CommandLogEntry =
            serde_json::from_str(line).map_err(|e| ControlError::EventLine {
                line: idx + 1,
                reason: e.to_string(),
            })?;
        entries.push(entry);
    }
    Ok(entries)
}

pub fn command_log_to_string(entries: &[CommandLogEntry]) -> String {
    let mut out = String::new();
    for e in entries {
        out.push_str(&serde_json::to_string(e).expect("entry serializes"));
        out.push('\n');
    }
    out
}

/// The frame grid implied by a controller config: timestamps and camera
/// assignment for frame index k.
#[derive(Debug, Clone)]
pub struct FrameGrid {
    interval_ms: f64,
    camera_ids: Vec<u32>,
}

impl FrameGrid {
    pub fn new(interval_ms: f64, mut camera_ids: Vec<u32>) -> Result<FrameGrid> {
        if !(interval_ms.is_finite() && interval_ms >= 1.0) {
            return Err(ControlError::InvalidConfig(format!(
                "frame interval must be at least 1 ms, got {interval_ms}"
            )));
        }
        if camera_ids.is_empty() {
            return Err(ControlError::InvalidConfig(
                "frame grid needs at least one camera".to_string(),
            ));
        }
        camera_ids.sort_unstable();
        camera_ids.dedup();
        Ok(FrameGrid {
            interval_ms,
            camera_ids,
        })
    }

    pub fn timestamp_ms(&self, k: u64) -> u64 {
        (k as f64 * self.interval_ms).round() as u64
    }

    pub fn camera_id(&self, k: u64) -> u32 {
        self.camera_ids[(k % self.camera_ids.len() as u64) as usize]
    }

    /// The frame index whose timestamp is exactly `ts_ms`, if any. The
    /// interval is at least 1 ms, so timestamps are strictly increasing and
    /// the index is unique.
    pub fn index_at(&self, ts_ms: u64) -> Option<u64> {
        let guess = (ts_ms as f64 / self.interval_ms).round() as i64;
        for k in (guess - 1).max(0)..=(guess + 1) {
            if self.timestamp_ms(k as u64) == ts_ms {
                return Some(k as u64);
            }
        }
        None
    }
}

/// Everything replay produces: the command log plus summary counters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReplayOutcome {
    pub commands: Vec<CommandLogEntry>,
    pub total_extension_s: u32,
    pub audible_boost_any: bool,
    pub frames_processed: u64,
    pub green_end_s: u64,
}

/// Stream a detection log through a fresh controller.
///
/// The green phase starts at t = 0 s and ticks every whole second. Frame k
/// of the grid is delivered before the tick at the same or later
/// millisecond, carrying whichever logged events belong to it (none means
/// an empty frame, which counts toward absence validation). Ticking stops
/// when the controller returns to Red; events stamped later are still
/// ingested, moving zone statistics but no trackers.
pub fn replay_events(
    controller: &mut SignalController,
    events: &[DetectionEvent],
) -> Result<ReplayOutcome> {
    let grid = FrameGrid::new(
        controller.config().frame_interval_ms,
        controller.config().zones.keys().copied().collect(),
    )?;

    // Slot each event into its frame, validating grid alignment and order.
    let mut slotted: Vec<(u64, Vec<Detection>)> = Vec::new();
    let mut last_ts = None;
    for (idx, event) in events.iter().enumerate() {
        let line = idx + 1;
        if let Some(last) = last_ts {
            if event.ts_ms < last {
                return Err(ControlError::EventLine {
                    line,
                    reason: format!(
                        "out-of-order timestamp: {} ms after {} ms",
                        event.ts_ms, last
                    ),
                });
            }
        }
        last_ts = Some(event.ts_ms);
        let k = grid.index_at(event.ts_ms).ok_or_else(|| ControlError::EventLine {
            line,
            reason: format!(
                "timestamp {} ms is not on the frame grid (interval {} ms)",
                event.ts_ms, grid.interval_ms
            ),
        })?;
        let expected_camera = grid.camera_id(k);
        if event.camera_id != expected_camera {
            return Err(ControlError::EventLine {
                line,
                reason: format!(
                    "camera {} is not scheduled at {} ms (frame {} belongs to camera {})",
                    event.camera_id, event.ts_ms, k, expected_camera
                ),
            });
        }
        let det = event.to_detection().map_err(|e| ControlError::EventLine {
            line,
            reason: e.to_string(),
        })?;
        match slotted.last_mut() {
            Some((last_k, dets)) if *last_k == k => dets.push(det),
            _ => slotted.push((k, vec![det])),
        }
    }

    controller.begin_green(0);
    let mut commands = Vec::new();
    let mut total_extension = 0u32;
    let mut audible_any = false;
    let mut frames_processed = 0u64;
    let mut slot_cursor = 0usize;
    let mut k = 0u64;
    let mut tick_s = 1u64;
    let green_end_s = loop {
        let frame_ms = grid.timestamp_ms(k);
        if frame_ms <= tick_s * 1000 {
            let detections = match slotted.get(slot_cursor) {
                Some((slot_k, dets)) if *slot_k == k => {
                    slot_cursor += 1;
                    dets.clone()
                }
                _ => Vec::new(),
            };
            let frame = FrameDetections::new(grid.camera_id(k), frame_ms, detections)?;
            controller.ingest_frame(&frame)?;
            frames_processed += 1;
            k += 1;
        } else {
            let cmd: SignalCommand = controller.tick(tick_s);
            total_extension += cmd.extend_green_by;
            audible_any |= cmd.audible_boost;
            commands.push(CommandLogEntry {
                ts_s: tick_s,
                extend_green_by: cmd.extend_green_by,
                audible_boost: cmd.audible_boost,
                active_group: controller.active_group(),
            });
            if controller.phase() == SignalPhase::Red {
                break tick_s;
            }
            tick_s += 1;
        }
    };

    // Green is over; deliver any remaining logged frames for the record.
    while let Some((slot_k, dets)) = slotted.get(slot_cursor) {
        let frame = FrameDetections::new(
            grid.camera_id(*slot_k),
            grid.timestamp_ms(*slot_k),
            dets.clone(),
        )?;
        controller.ingest_frame(&frame)?;
        frames_processed += 1;
        slot_cursor += 1;
    }

    Ok(ReplayOutcome {
        commands,
        total_extension_s: total_extension,
        audible_boost_any: audible_any,
        frames_processed,
        green_end_s,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::controller::{ControllerConfig, ExtensionCaps};
    use crate::geometry::PolygonZone;
    use std::collections::BTreeMap;

    fn config() -> ControllerConfig {
        let mut zones = BTreeMap::new();
        zones.insert(0, PolygonZone::rectangle(0.0, 0.0, 12.0, 3.0).unwrap());
        ControllerConfig {
            base_green_s: 5,
            max_extension: ExtensionCaps::default(),
            validation_frames: 2,
            confidence_threshold: 0.5,
            zones,
            frame_interval_ms: 500.0,
        }
    }

    fn wheelchair_event(ts_ms: u64) -> DetectionEvent {
        DetectionEvent {
            ts_ms,
            camera_id: 0,
            class_id: 1,
            x_min: 5.0,
            y_min: 0.5,
            x_max: 6.0,
            y_max: 1.5,
            confidence: 0.9,
        }
    }

    #[test]
    fn detection_event_json_round_trip_uses_declared_field_names() {
        let e = wheelchair_event(500);
        let json = serde_json::to_string(&e).unwrap();
        for field in [
            "ts_ms",
            "camera_id",
            "class_id",
            "x_min",
            "y_min",
            "x_max",
            "y_max",
            "confidence",
        ] {
            assert!(json.contains(field), "missing {field} in {json}");
        }
        let back: DetectionEvent = serde_json::from_str(&json).unwrap();
        assert_eq!(e, back);
    }

    #[test]
    fn command_entry_serializes_group_as_snake_case_or_null() {
        let e = CommandLogEntry {
            ts_s: 7,
            extend_green_by: 1,
            audible_boost: true,
            active_group: Some(MobilityGroup::VisualImpairment),
        };
        let json = serde_json::to_string(&e).unwrap();
        assert!(json.contains("\"visual_impairment\""));
        let none = CommandLogEntry {
            active_group: None,
            ..e
        };
        assert!(serde_json::to_string(&none).unwrap().contains("null"));
    }

    #[test]
    fn parse_reports_line_numbers() {
        let text = format!(
            "{}\nnot json\n",
            serde_json::to_string(&wheelchair_event(0)).unwrap()
        );
        let err = parse_event_lines(&text).unwrap_err();
        assert!(matches!(err, ControlError::EventLine { line: 2, .. }));
        // Unknown field is also a parse error, not silently ignored.
        let text = r#"{"ts_ms":0,"camera_id":0,"class_id":1,"x_min":5.0,"y_min":0.5,"x_max":6.0,"y_max":1.5,"confidence":0.9,"extra":1}"#;
        assert!(parse_event_lines(text).is_err());
    }

    #[test]
    fn grid_round_trips_indices_at_fractional_intervals() {
        let grid = FrameGrid::new(363.4, vec![0, 1, 2]).unwrap();
        for k in 0..10_000u64 {
            let ts = grid.timestamp_ms(k);
            assert_eq!(grid.index_at(ts), Some(k), "k = {k}");
        }
        assert_eq!(grid.index_at(1), None);
        assert_eq!(grid.camera_id(0), 0);
        assert_eq!(grid.camera_id(4), 1);
    }

    #[test]
    fn empty_log_replays_to_zero_extension() {
        let mut ctrl = SignalController::new(config()).unwrap();
        let out = replay_events(&mut ctrl, &[]).unwrap();
        assert_eq!(out.total_extension_s, 0);
        assert_eq!(out.green_end_s, 5);
        assert!(!out.audible_boost_any);
        // Frame grid at 500 ms spacing: frames 0..=10 are stamped at or
        // before the closing 5 s tick.
        assert_eq!(out.frames_processed, 11);
    }

    #[test]
    fn persistent_wheelchair_log_extends_by_six() {
        // One event per 500 ms grid slot while the pedestrian crosses.
        let events: Vec<DetectionEvent> = (0..=21).map(|k| wheelchair_event(k * 500)).collect();
        let mut ctrl = SignalController::new(config()).unwrap();
        let out = replay_events(&mut ctrl, &events).unwrap();
        assert_eq!(out.total_extension_s, 6);
        assert_eq!(out.green_end_s, 11);
        assert!(!out.audible_boost_any);
    }

    #[test]
    fn replay_is_deterministic() {
        let events: Vec<DetectionEvent> = (0..=15).map(|k| wheelchair_event(k * 500)).collect();
        let mut a = SignalController::new(config()).unwrap();
        let mut b = SignalController::new(config()).unwrap();
        let out_a = replay_events(&mut a, &events).unwrap();
        let out_b = replay_events(&mut b, &events).unwrap();
        assert_eq!(out_a, out_b);
        assert_eq!(
            command_log_to_string(&out_a.commands),
            command_log_to_string(&out_b.commands)
        );
    }

    #[test]
    fn off_grid_timestamp_is_rejected_with_its_line() {
        let events = vec![wheelchair_event(0), wheelchair_event(777)];
        let mut ctrl = SignalController::new(config()).unwrap();
        let err = replay_events(&mut ctrl, &events).unwrap_err();
        assert!(matches!(err, ControlError::EventLine { line: 2, .. }), "{err}");
    }

    #[test]
    fn out_of_order_events_are_rejected_with_their_line() {
        let events = vec![wheelchair_event(1000), wheelchair_event(500)];
        let mut ctrl = SignalController::new(config()).unwrap();
        let err = replay_events(&mut ctrl, &events).unwrap_err();
        assert!(matches!(err, ControlError::EventLine { line: 2, .. }), "{err}");
    }

    #[test]
    fn wrong_camera_for_grid_slot_is_rejected() {
        let mut zones = BTreeMap::new();
        zones.insert(0, PolygonZone::rectangle(0.0, 0.0, 12.0, 3.0).unwrap());
        zones.insert(1, PolygonZone::rectangle(0.0, 0.0, 12.0, 3.0).unwrap());
        let cfg = ControllerConfig {
            zones,
            ..config()
        };
        // Frame 0 belongs to camera 0 in round-robin order.
        let mut e = wheelchair_event(0);
        e.camera_id = 1;
        let mut ctrl = SignalController::new(cfg).unwrap();
        let err = replay_events(&mut ctrl, &[e]).unwrap_err();
        assert!(matches!(err, ControlError::EventLine { line: 1, .. }), "{err}");
    }

    #[test]
    fn events_after_green_end_update_stats_but_grant_nothing() {
        let events = vec![wheelchair_event(60_000)];
        let mut ctrl = SignalController::new(config()).unwrap();
        let out = replay_events(&mut ctrl, &events).unwrap();
        assert_eq!(out.total_extension_s, 0);
        assert_eq!(out.green_end_s, 5);
        assert_eq!(ctrl.zone_stats()[&0].in_zone_detections, 1);
    }
}
