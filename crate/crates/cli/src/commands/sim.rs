//! `sim run` and `sim ablate-n`: scenario simulation and the
//! validation-window sweep.

use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use crosslight_control::events::{command_log_to_string, event_lines_to_string};
use crosslight_control::sim::{ablate_n, ablation_csv, run_csv, run_scenario};

use crate::config::load_scenario;
use crate::manifest::{write_run, RunManifest};
use crate::{AblateArgs, SimRunArgs};

pub fn run(args: SimRunArgs) -> Result<ExitCode> {
    let (cfg, canonical) = load_scenario(args.config.as_deref(), args.seed)?;
    let outcome = run_scenario(&cfg)?;

    let metrics_csv = run_csv(&cfg, &outcome.metrics);
    let events = event_lines_to_string(&outcome.phase.events);
    let commands = command_log_to_string(&outcome.phase.commands);
    println!(
        "green ended at {} s with {} s extension; success {:.1}%, latency {:.3} s",
        outcome.phase.green_end_s,
        outcome.phase.total_extension_s,
        outcome.metrics.success_rate,
        outcome.metrics.latency_s
    );

    let manifest = RunManifest::new("sim run", &canonical).with_seed("scenario", cfg.rng_seed);
    write_run(
        &args.out.resolve(),
        manifest,
        &[
            ("metrics.csv", &metrics_csv),
            ("events.jsonl", &events),
            ("commands.jsonl", &commands),
        ],
    )?;
    Ok(ExitCode::SUCCESS)
}

pub fn ablate(args: AblateArgs) -> Result<ExitCode> {
    let (cfg, canonical) = load_scenario(args.config.as_deref(), args.seed)?;
    let n_values = parse_n_values(&args.n_values)?;
    if args.runs == 0 {
        bail!("--runs must be at least 1");
    }

    let rows = ablate_n(&cfg, &n_values, args.runs)?;
    let csv = ablation_csv(&cfg, &rows);
    print!("{csv}");

    let scenario: serde_json::Value =
        serde_json::from_str(&canonical).context("recomposing canonical scenario")?;
    let full = serde_json::json!({
        "n_values": n_values,
        "runs": args.runs,
        "scenario": scenario,
    });
    let manifest = RunManifest::new(
        "sim ablate-n",
        &serde_json::to_string(&full).context("canonicalizing ablation config")?,
    )
    .with_seed("scenario", cfg.rng_seed);
    write_run(&args.out.resolve(), manifest, &[("ablation.csv", &csv)])?;
    Ok(ExitCode::SUCCESS)
}

/// Accept `1..5` (inclusive range) or a comma list like `1,3,5`.
fn parse_n_values(spec: &str) -> Result<Vec<u32>> {
    let spec = spec.trim();
    let values: Vec<u32> = if let Some((lo, hi)) = spec.split_once("..") {
        let lo: u32 = lo
            .trim()
            .parse()
            .with_context(|| format!("range start in {spec:?}"))?;
        let hi: u32 = hi
            .trim()
            .parse()
            .with_context(|| format!("range end in {spec:?}"))?;
        if hi < lo {
            bail!("window range {spec:?} is empty");
        }
        (lo..=hi).collect()
    } else {
        spec.split(',')
            .map(|part| {
                part.trim()
                    .parse::<u32>()
                    .with_context(|| format!("window value {part:?}"))
            })
            .collect::<Result<Vec<u32>>>()?
    };
    if values.is_empty() {
        bail!("no validation windows given");
    }
    if values.contains(&0) {
        bail!("validation windows must be at least 1");
    }
    Ok(values)
}
