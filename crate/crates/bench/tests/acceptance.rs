//! One PASS/FAIL line per acceptance criterion.

use std::process::ExitCode;

use sympstiefel_bench::acceptance::run_all;

fn main() -> ExitCode {
    let results = run_all();
    for r in &results {
        println!("{r}");
    }
    let failed: Vec<u8> = results.iter().filter(|r| !r.pass).map(|r| r.id).collect();
    if failed.is_empty() {
        println!("acceptance: {} of {} criteria pass", results.len(), results.len());
        ExitCode::SUCCESS
    } else {
        println!("acceptance: failed criteria {failed:?}");
        ExitCode::FAILURE
    }
}
