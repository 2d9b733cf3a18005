//! Acceptance gate: every verification criterion at its pinned tolerance,
//! one pass/fail line per criterion. Criterion 9 (bitwise-identical
//! artifacts across process runs) lives with the command-line crate, which
//! owns the artifact writer.

use phaseflow::suite::{run_suite, CheckResult, SuiteConfig};

fn print_line(check: &CheckResult) {
    println!(
        "[{}] criterion {}: {}",
        if check.pass { "PASS" } else { "FAIL" },
        check.id,
        check.name
    );
    for line in &check.lines {
        if !line.pass {
            println!(
                "       FAIL {} (measured {:e}, tolerance {:e})",
                line.label, line.measured, line.tolerance
            );
        }
    }
}

#[test]
fn acceptance_criteria() {
    let report = run_suite(&SuiteConfig::default()).expect("suite runs to completion");
    for check in &report.checks {
        print_line(check);
    }
    assert!(
        report.all_pass(),
        "one or more acceptance criteria failed; see the lines above"
    );
}
