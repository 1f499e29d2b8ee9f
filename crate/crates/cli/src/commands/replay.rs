//! `controller replay`: stream a recorded detection log through a fresh
//! controller and emit the command log it produces.

use std::process::ExitCode;

use anyhow::{Context, Result};
use crosslight_control::controller::SignalController;
use crosslight_control::events::{command_log_to_string, parse_event_lines, replay_events};

use crate::config::load_controller;
use crate::manifest::{write_run, RunManifest};
use crate::ReplayArgs;

pub fn replay(args: ReplayArgs) -> Result<ExitCode> {
    let (cfg, canonical) = load_controller(&args.config)?;
    let text = std::fs::read_to_string(&args.events)
        .with_context(|| format!("reading event log {}", args.events.display()))?;
    let events = parse_event_lines(&text)
        .with_context(|| format!("parsing event log {}", args.events.display()))?;

    let mut controller = SignalController::new(cfg)?;
    let outcome = replay_events(&mut controller, &events)
        .with_context(|| format!("replaying {}", args.events.display()))?;
    let log = command_log_to_string(&outcome.commands);

    println!(
        "replayed {} events over {} frames; green ended at {} s, total extension {} s, audible boost {}",
        events.len(),
        outcome.frames_processed,
        outcome.green_end_s,
        outcome.total_extension_s,
        if outcome.audible_boost_any {
            "engaged"
        } else {
            "never engaged"
        }
    );

    let manifest = RunManifest::new("controller replay", &canonical);
    write_run(&args.out.resolve(), manifest, &[("commands.jsonl", &log)])?;
    Ok(ExitCode::SUCCESS)
}
