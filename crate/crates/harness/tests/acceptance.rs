//! Runs every acceptance criterion and prints one PASS/FAIL line for each.
//! Exits nonzero when any criterion fails.
//!
//! `SINGHYP_ACCEPTANCE_SEED` and `SINGHYP_ACCEPTANCE_WORKERS` override the
//! defaults (seed 1, four workers); `SINGHYP_ACCEPTANCE_OUT` keeps the
//! tables and verdict file.

use std::io::Write;
use std::process::ExitCode;

use singhyp::acceptance::{run_acceptance, verdict, Suite};
use singhyp::manifest::ArtifactWriter;

fn env_or<T: std::str::FromStr>(key: &str, default: T) -> T {
    std::env::var(key)
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(default)
}

fn main() -> ExitCode {
    // `cargo test -- --list` and filters are not meaningful here.
    if std::env::args().any(|a| a == "--list") {
        println!("acceptance: test");
        return ExitCode::SUCCESS;
    }
    let seed = env_or("SINGHYP_ACCEPTANCE_SEED", 1u64);
    let workers = env_or("SINGHYP_ACCEPTANCE_WORKERS", 4usize);
    let mut err = std::io::stderr();
    let _ = writeln!(err, "acceptance: seed {seed}, {workers} workers");
    let outcomes = run_acceptance(&Suite::ALL, seed, workers, |o| {
        let _ = writeln!(std::io::stderr(), "{}", o.line());
    });
    let v = verdict(seed, &outcomes);
    if let Ok(dir) = std::env::var("SINGHYP_ACCEPTANCE_OUT") {
        let mut w = ArtifactWriter::new(std::path::Path::new(&dir)).expect("output directory");
        for o in &outcomes {
            for (name, csv) in &o.tables {
                w.text(&format!("{}/{name}", o.suite), csv)
                    .expect("write table");
            }
        }
        w.json("verdict.json", &v).expect("write verdict");
    }
    let passed = v.criteria.iter().filter(|c| c.pass).count();
    let _ = writeln!(
        err,
        "acceptance: {passed}/{} criteria passed",
        v.criteria.len()
    );
    if v.pass && v.criteria.len() == 9 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
