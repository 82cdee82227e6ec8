//! Acceptance suite: one line per criterion, nonzero exit if any fails.
//!
//! `SAM_ACCEPTANCE_SCALE=quick` shrinks the sample sizes for a fast dry run;
//! `SAM_ACCEPTANCE_ONLY=a,b` restricts the run to the named checks.

use std::process::ExitCode;

use sam_cli::validation::{run_check, Scale, CHECKS};

const SEED: u64 = 1;

fn main() -> ExitCode {
    let scale = match std::env::var("SAM_ACCEPTANCE_SCALE").as_deref() {
        Ok("quick") => Scale::Quick,
        _ => Scale::Full,
    };
    let only = std::env::var("SAM_ACCEPTANCE_ONLY").ok();
    let selected: Vec<&str> = CHECKS
        .iter()
        .copied()
        .filter(|c| only.as_deref().is_none_or(|o| o.split(',').any(|s| s.trim() == *c)))
        .collect();
    let mut failed = 0;
    for (i, name) in selected.iter().enumerate() {
        let number = CHECKS.iter().position(|c| c == name).unwrap() + 1;
        match run_check(name, scale, SEED) {
            Ok(report) => {
                println!("[{number:2}] {}", report.line());
                failed += usize::from(!report.passed);
            }
            Err(e) => {
                println!("[{number:2}] FAIL {name}: error: {e:#}");
                failed += 1;
            }
        }
        if i + 1 == selected.len() {
            println!("acceptance: {} of {} passed", selected.len() - failed, selected.len());
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
