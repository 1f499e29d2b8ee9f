//! End-to-end conformance of the green-extension state machine: scripted
//! event logs replayed through the controller must land exactly on the
//! per-group extension caps, and randomized streams must uphold the
//! controller's safety invariants.

use std::collections::BTreeMap;

use proptest::prelude::*;

use crosslight_control::controller::{
    ControllerConfig, ExtensionCaps, SignalController, SignalPhase,
};
use crosslight_control::domain::{BoundingBox, Detection, FrameDetections, MobilityGroup, ObjectClass};
use crosslight_control::events::{
    command_log_to_string, event_lines_to_string, parse_event_lines, replay_events, DetectionEvent,
    FrameGrid,
};
use crosslight_control::geometry::PolygonZone;
use crosslight_control::sim::{
    absence_false_alarm_prob, premature_confirmation_frequency, run_scenario, ScenarioConfig,
};

fn single_camera_config(base_green_s: u32, validation_frames: u32) -> ControllerConfig {
    let mut zones = BTreeMap::new();
    zones.insert(0, PolygonZone::rectangle(0.0, 0.0, 12.0, 3.0).unwrap());
    ControllerConfig {
        base_green_s,
        max_extension: ExtensionCaps::default(),
        validation_frames,
        confidence_threshold: 0.5,
        zones,
        frame_interval_ms: 363.4,
    }
}

/// A log with one in-zone detection of `class` per grid frame while the
/// pedestrian is on the crossing (frames 0..frame_count).
fn scripted_log(config: &ControllerConfig, class: ObjectClass, frame_count: u64) -> Vec<DetectionEvent> {
    let grid = FrameGrid::new(config.frame_interval_ms, vec![0]).unwrap();
    (0..frame_count)
        .map(|k| DetectionEvent {
            ts_ms: grid.timestamp_ms(k),
            camera_id: 0,
            class_id: class.index(),
            x_min: 5.0,
            y_min: 0.5,
            x_max: 6.0,
            y_max: 1.5,
            confidence: 0.95,
        })
        .collect()
}

#[test]
fn wheelchair_log_reaches_exactly_the_six_second_cap() {
    let config = single_camera_config(10, 2);
    // Present for 60 frames (about 21.8 s), well past base green plus cap.
    let events = scripted_log(&config, ObjectClass::PersonWithWheelchair, 60);
    let mut ctrl = SignalController::new(config).unwrap();
    let out = replay_events(&mut ctrl, &events).unwrap();
    assert_eq!(out.total_extension_s, 6);
    assert_eq!(out.green_end_s, 16);
    assert!(!out.audible_boost_any);
}

#[test]
fn blindstick_log_reaches_the_eight_second_cap_with_audible_boost() {
    let config = single_camera_config(10, 2);
    let events = scripted_log(&config, ObjectClass::PersonWithBlindstick, 60);
    let mut ctrl = SignalController::new(config).unwrap();
    let out = replay_events(&mut ctrl, &events).unwrap();
    assert_eq!(out.total_extension_s, 8);
    assert_eq!(out.green_end_s, 18);
    assert!(out.audible_boost_any);
    let boosted: Vec<_> = out.commands.iter().filter(|c| c.audible_boost).collect();
    assert!(!boosted.is_empty());
    for c in boosted {
        assert_eq!(c.active_group, Some(MobilityGroup::VisualImpairment));
    }
}

#[test]
fn stroller_log_reaches_the_three_second_cap() {
    let config = single_camera_config(10, 2);
    let events = scripted_log(&config, ObjectClass::PersonWithStroller, 60);
    let mut ctrl = SignalController::new(config).unwrap();
    let out = replay_events(&mut ctrl, &events).unwrap();
    assert_eq!(out.total_extension_s, 3);
    assert_eq!(out.green_end_s, 13);
    assert!(!out.audible_boost_any);
}

#[test]
fn mixed_wheelchair_and_blindstick_log_resolves_to_the_visual_strategy() {
    let config = single_camera_config(10, 2);
    let grid = FrameGrid::new(config.frame_interval_ms, vec![0]).unwrap();
    let mut events = Vec::new();
    for k in 0..60u64 {
        for (class, x) in [
            (ObjectClass::PersonWithWheelchair, 2.0),
            (ObjectClass::PersonWithBlindstick, 8.0),
        ] {
            events.push(DetectionEvent {
                ts_ms: grid.timestamp_ms(k),
                camera_id: 0,
                class_id: class.index(),
                x_min: x,
                y_min: 0.5,
                x_max: x + 1.0,
                y_max: 1.5,
                confidence: 0.95,
            });
        }
    }
    let mut ctrl = SignalController::new(config).unwrap();
    let out = replay_events(&mut ctrl, &events).unwrap();
    assert_eq!(out.total_extension_s, 8);
    assert!(out.audible_boost_any);
}

#[test]
fn replay_round_trips_through_the_line_format_byte_identically() {
    let config = single_camera_config(10, 2);
    let events = scripted_log(&config, ObjectClass::PersonWithBlindstick, 40);
    let text = event_lines_to_string(&events);
    let parsed = parse_event_lines(&text).unwrap();
    assert_eq!(parsed, events);

    let mut ctrl_a = SignalController::new(config.clone()).unwrap();
    let mut ctrl_b = SignalController::new(config).unwrap();
    let log_a = command_log_to_string(&replay_events(&mut ctrl_a, &parsed).unwrap().commands);
    let log_b = command_log_to_string(&replay_events(&mut ctrl_b, &events).unwrap().commands);
    assert_eq!(log_a, log_b);
    assert!(!log_a.is_empty());
}

#[test]
fn simulated_event_logs_survive_serialization_and_replay() {
    let cfg = ScenarioConfig {
        miss_probability: 0.15,
        rng_seed: 1234,
        ..ScenarioConfig::default()
    };
    let out = run_scenario(&cfg).unwrap();
    let text = event_lines_to_string(&out.phase.events);
    let parsed = parse_event_lines(&text).unwrap();
    let mut ctrl = SignalController::new(cfg.controller_config().unwrap()).unwrap();
    let replay = replay_events(&mut ctrl, &parsed).unwrap();
    assert_eq!(replay.commands, out.phase.commands);
}

#[test]
fn empirical_false_alarm_rate_tracks_the_dp_oracle_across_settings() {
    let windows = 12_000u32;
    for &p in &[0.1, 0.5] {
        for &n in &[1u32, 3] {
            for &m in &[5u32, 20] {
                let expected = absence_false_alarm_prob(p, n, m).unwrap();
                let freq = premature_confirmation_frequency(p, n, m, windows, 7).unwrap();
                let sd = (expected * (1.0 - expected) / windows as f64).sqrt();
                assert!(
                    (freq - expected).abs() <= 3.0 * sd.max(1e-9),
                    "p={p} n={n} m={m}: freq={freq} expected={expected}"
                );
            }
        }
    }
}

/// Strategy: a per-frame action for up to three pedestrians (one per
/// restricted group): bitmask of who is visibly in zone this frame.
fn stream_strategy() -> impl Strategy<Value = (u32, u32, Vec<u8>)> {
    (1u32..=12, 1u32..=4, prop::collection::vec(0u8..8, 1..80))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn random_streams_never_exceed_the_governing_cap((base, n, pattern) in stream_strategy()) {
        let config = single_camera_config(base, n);
        let caps = config.max_extension;
        let mut ctrl = SignalController::new(config).unwrap();
        ctrl.begin_green(0);
        let classes = [
            ObjectClass::PersonWithWheelchair,
            ObjectClass::PersonWithBlindstick,
            ObjectClass::PersonWithStroller,
        ];
        let mut highest_seen: Option<MobilityGroup> = None;
        let mut granted_total = 0u32;
        for (s, &mask) in pattern.iter().enumerate() {
            let ts = (s as u64 + 1) * 1000;
            let mut dets = Vec::new();
            for (bit, class) in classes.iter().enumerate() {
                if mask & (1 << bit) != 0 {
                    let bbox = BoundingBox::new(4.0, 0.5, 5.0, 1.5).unwrap();
                    dets.push(Detection::new(*class, bbox, 0.9, 0, ts).unwrap());
                }
            }
            ctrl.ingest_frame(&FrameDetections::new(0, ts, dets).unwrap()).unwrap();
            if let Some(active) = ctrl.active_group() {
                let is_higher = highest_seen.is_none_or(|h| {
                    active.priority_rank().unwrap() < h.priority_rank().unwrap()
                });
                if is_higher {
                    highest_seen = Some(active);
                }
            }
            let cmd = ctrl.tick(s as u64 + 1);
            granted_total += cmd.extend_green_by;
            prop_assert!(cmd.extend_green_by <= 1);
            if cmd.audible_boost {
                prop_assert_eq!(ctrl.active_group(), Some(MobilityGroup::VisualImpairment));
            }
            prop_assert!(granted_total <= 8);
            if let Some(h) = highest_seen {
                prop_assert!(granted_total <= caps.cap(h).unwrap());
            } else {
                prop_assert_eq!(granted_total, 0);
            }
            if ctrl.phase() == SignalPhase::Red {
                break;
            }
        }
    }

    #[test]
    fn random_scenarios_produce_well_formed_metrics(
        seed in 0u64..1000,
        p in 0.0f64..=1.0,
        n in 1u32..=4,
        base in 5u32..=15,
    ) {
        let cfg = ScenarioConfig {
            rng_seed: seed,
            miss_probability: p,
            validation_frames: n,
            base_green_s: base,
            ..ScenarioConfig::default()
        };
        let out = run_scenario(&cfg).unwrap();
        prop_assert!((0.0..=100.0).contains(&out.metrics.success_rate));
        prop_assert!((0.0..=100.0).contains(&out.metrics.real_success_rate));
        prop_assert!(out.metrics.real_success_rate >= out.metrics.success_rate);
        prop_assert!(out.metrics.latency_s >= 0.0);
        prop_assert!(out.phase.total_extension_s <= 8);
        // The emitted log always replays to the same command sequence.
        let mut ctrl = SignalController::new(cfg.controller_config().unwrap()).unwrap();
        let replay = replay_events(&mut ctrl, &out.phase.events).unwrap();
        prop_assert_eq!(replay.commands, out.phase.commands);
    }
}
