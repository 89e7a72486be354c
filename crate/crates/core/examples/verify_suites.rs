//! Runs every property suite at its documented scale and prints the summary.
//!
//! `cargo run --release --example verify_suites -- [seed] [scale]`

use liptest::verify::{verify_all, VerifyOptions};

fn main() {
    let mut args = std::env::args().skip(1);
    let seed = args.next().and_then(|s| s.parse().ok()).unwrap_or(0);
    let scale = args.next().and_then(|s| s.parse().ok()).unwrap_or(1.0);
    let opts = VerifyOptions {
        seed,
        scale,
        fault: None,
    };
    let summary = verify_all(&opts, |r, secs| {
        let status = if r.passed { "pass" } else { "FAIL" };
        eprintln!("{status} {:<28} {:>6} checks {:>8.2}s", r.name, r.checks, secs);
    });
    println!("{}", serde_json::to_string_pretty(&summary).expect("summary serializes"));
    std::process::exit(if summary.all_passed { 0 } else { 1 });
}
