//! `kernels selfcheck`: run the tensor-kernel invariant suite.

use std::process::ExitCode;

use anyhow::Result;
use crosslight_kernels::{run_selfcheck, PropertyReport};

use crate::config::canonical_flags;
use crate::manifest::{write_run, RunManifest};
use crate::SelfcheckArgs;

pub fn selfcheck(args: SelfcheckArgs) -> Result<ExitCode> {
    let mut reports = run_selfcheck(args.cases, args.seed);
    if args.inject_failure {
        reports.push(PropertyReport {
            name: "injected_failure",
            passed: false,
            cases: 0,
            max_error: f64::INFINITY,
        });
    }

    let mut report_text = String::new();
    for r in &reports {
        let line = format!(
            "{} {:<26} cases {:>5}  max error {:.3e}",
            if r.passed { "PASS" } else { "FAIL" },
            r.name,
            r.cases,
            r.max_error
        );
        println!("{line}");
        report_text.push_str(&line);
        report_text.push('\n');
    }
    let failed: Vec<&str> = reports
        .iter()
        .filter(|r| !r.passed)
        .map(|r| r.name)
        .collect();
    let summary = if failed.is_empty() {
        format!("all {} properties passed\n", reports.len())
    } else {
        format!(
            "{} of {} properties failed: {}\n",
            failed.len(),
            reports.len(),
            failed.join(", ")
        )
    };
    print!("{summary}");
    report_text.push_str(&summary);

    let manifest = RunManifest::new(
        "kernels selfcheck",
        &canonical_flags(&[
            ("cases", args.cases.to_string()),
            ("seed", args.seed.to_string()),
            ("inject_failure", args.inject_failure.to_string()),
        ]),
    )
    .with_seed("selfcheck", args.seed);
    write_run(
        &args.out.resolve(),
        manifest,
        &[("selfcheck.txt", &report_text)],
    )?;

    Ok(if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}
