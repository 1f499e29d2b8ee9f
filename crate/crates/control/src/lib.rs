//! Detection-side vocabulary and the adaptive signal controller for a
//! barrier-free pedestrian crossing, plus a discrete-event simulator used to
//! study the controller's multi-frame validation trade-off.
//!
//! The crate is split into four layers:
//!
//! * [`domain`]: the twelve detector classes, their mobility groups with
//!   per-group green-extension caps and priorities, and box utilities.
//! * [`geometry`]: simple polygons with boundary-inclusive containment,
//!   used for per-camera crossing zones.
//! * [`controller`]: a deterministic state machine that arms per-group
//!   presence trackers from in-zone detections during a green phase and
//!   grants one-second green extensions up to the active group's cap,
//!   confirming absence only after N consecutive missed frames.
//! * [`sim`]: constant-speed agents crossing under a lossy detection
//!   channel, reproducing the validation-depth ablation, plus the
//!   dynamic-programming false-alarm oracle for the miss channel.
//!
//! [`events`] defines the line-delimited wire formats shared by the
//! simulator, the replay tool, and external producers.

pub mod controller;
pub mod domain;
pub mod events;
pub mod geometry;
pub mod sim;

mod error;

pub use error::{ControlError, Result};

/// Crate version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
