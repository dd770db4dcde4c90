//! Runs every reproduction criterion and prints one status line per criterion.
//!
//! A criterion whose only failing checks carry a documented deviation is
//! reported as BLOCKED and does not fail the run; its supporting checks must
//! still pass. `AOI_ACCEPTANCE_VERBOSE=1` also prints every individual check.

use std::process::ExitCode;

use aoi_mfq::validation::{run_criterion, Status, ValidationOptions, CRITERIA};

fn main() -> ExitCode {
    // libtest-style flags such as --nocapture or a name filter may be passed
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let verbose = std::env::var_os("AOI_ACCEPTANCE_VERBOSE").is_some();
    let opts = ValidationOptions::default();

    let (mut failed, mut blocked) = (0, 0);
    for (id, title) in CRITERIA {
        if !filter.is_empty() && !filter.iter().any(|f| title.contains(f.as_str()) || *f == id.to_string()) {
            continue;
        }
        let report = run_criterion(*id, &opts);
        println!("{}", report.summary());
        for check in &report.checks {
            if verbose || !check.passed {
                println!("    {}", check.describe());
            }
        }
        match report.status() {
            Status::Fail => failed += 1,
            Status::Blocked => blocked += 1,
            Status::Pass => {}
        }
    }
    if failed == 0 {
        if blocked == 0 {
            println!("acceptance: all criteria passed");
        } else {
            println!("acceptance: no failures, {blocked} criteria blocked by documented deviations");
        }
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {failed} criteria failed");
        ExitCode::FAILURE
    }
}
