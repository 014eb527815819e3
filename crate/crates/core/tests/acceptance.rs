//! Prints one PASS/FAIL line per criterion. `ACCEPT_FILTER` or a trailing
//! argument restricts the run to criteria whose name contains it.

use std::process::ExitCode;

use nested_control::harness::acceptance::run_acceptance;

fn main() -> ExitCode {
    // libtest flags such as --nocapture may be forwarded; skip them
    let arg = std::env::args().skip(1).find(|a| !a.starts_with('-'));
    let filter = arg.or_else(|| std::env::var("ACCEPT_FILTER").ok());
    let results = run_acceptance(filter.as_deref());
    for r in &results {
        println!("{}", r.line());
    }
    let failed = results.iter().filter(|r| !r.passed).count();
    println!("{} of {} criteria passed", results.len() - failed, results.len());
    if failed == 0 { ExitCode::SUCCESS } else { ExitCode::FAILURE }
}
