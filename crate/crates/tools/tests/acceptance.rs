//! Acceptance suite: runs every numbered criterion at full size, prints one
//! `PASS`/`FAIL` line per criterion with its failing sub-checks, and exits
//! nonzero if any criterion fails.

use std::process::ExitCode;

use bs5_tools::validate::{self, Level, Status, ValidateOptions};

fn main() -> ExitCode {
    let opts = ValidateOptions { level: Level::Full, ..ValidateOptions::default() };
    let report = validate::run(&opts);
    println!("acceptance: {} criteria, seed {}", report.checks.len(), opts.seed);
    for c in &report.checks {
        println!("{}", c.summary_line());
        if c.status == Status::Fail {
            for d in c.details.iter().filter(|d| d.pass == Some(false)) {
                match d.tolerance {
                    Some(t) => println!("    {} = {:e} (tolerance {t:e})", d.name, d.value),
                    None => println!("    {} = {:e}", d.name, d.value),
                }
            }
        }
    }
    let failed_notes: Vec<_> = report.notes.iter().filter(|d| d.pass == Some(false)).collect();
    println!(
        "diagnostics: {} of {} gated residual checks passed",
        report.notes.iter().filter(|d| d.pass == Some(true)).count(),
        report.notes.iter().filter(|d| d.pass.is_some()).count()
    );
    for d in &failed_notes {
        println!("    FAIL {} = {:e}", d.name, d.value);
    }
    let all_ran = report.checks.iter().all(|c| c.status != Status::Skipped) && report.checks.len() == 9;
    let ok = report.passed() && failed_notes.is_empty() && all_ran;
    println!("acceptance result: {}", if ok { "PASS" } else { "FAIL" });
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
