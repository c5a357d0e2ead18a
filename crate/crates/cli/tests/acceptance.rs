//! Acceptance criteria, one line each. Runs without the libtest harness so
//! the PASS/FAIL lines always reach the output.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use finalchain::props::{run_suite, SuiteConfig};
use finalchain_cli::run;

struct Outcome {
    ok: bool,
    detail: String,
}

fn suite(name: &str) -> Outcome {
    let report = run_suite(name, &SuiteConfig::default()).expect("known suite").expect("suite runs");
    let detail = match report.failures.first() {
        None => format!("{} checks, 0 violations", report.checks),
        Some(w) => format!("{} of {} checks failed; first: {w}", report.failure_count, report.checks),
    };
    Outcome { ok: report.passed(), detail }
}

fn level_counts() -> Outcome {
    let expected = ["1", "2", "4", "16", "65536"];
    let mut got = Vec::new();
    for n in 0..expected.len() {
        let mut out = Vec::new();
        let code = run(["finalchain", "levels", &n.to_string(), "--count"], &mut out, &mut Vec::new());
        let text = String::from_utf8(out).unwrap_or_default();
        got.push(if code == 0 { text.trim().to_string() } else { format!("exit {code}") });
    }
    Outcome { ok: got == expected, detail: format!("|nu_n| = {}", got.join(", ")) }
}

type Criterion = (&'static str, u64, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("level counts", 5, level_counts),
        ("strong extensionality", 30, || suite("strong-extensionality")),
        ("von Neumann table", 5, || suite("von-neumann-table")),
        ("kernel-projection agreement", 60, || suite("kernel-projection")),
        ("audit matrix", 5, || suite("audit-matrix")),
        ("successors of projected ordinals", 5, || suite("ordinal-successors")),
        ("successors at omega", 10, || suite("omega-successors")),
        ("restriction and prefixes", 60, || suite("restrict-lemma")),
        ("König extraction", 30, || suite("konig")),
        ("range injectivity", 60, || suite("range-injectivity")),
    ];
    let mut failed = 0;
    for (k, (name, limit, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = check();
        let elapsed = start.elapsed();
        let in_time = elapsed < Duration::from_secs(*limit);
        let pass = outcome.ok && in_time;
        failed += usize::from(!pass);
        println!(
            "{} {:>2}. {name}: {} [{:.2?} / limit {limit}s{}]",
            if pass { "PASS" } else { "FAIL" },
            k + 1,
            outcome.detail,
            elapsed,
            if in_time { "" } else { ", too slow" },
        );
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 { ExitCode::SUCCESS } else { ExitCode::FAILURE }
}
