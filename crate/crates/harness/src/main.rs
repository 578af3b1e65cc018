use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::Context as _;
use clap::Parser;
use serde_json::json;
use singhyp::acceptance::{parse_selection, run_acceptance, verdict};
use singhyp::config::{Experiment, LoadedConfig};
use singhyp::experiments::{self, Context, RunError};
use singhyp::manifest::{ArtifactWriter, RunManifest};
use singhyp_core::par::{with_workers, Exec};

const DEFAULT_SEED: u64 = 1;

/// Run an experiment from a config file, or the acceptance suites.
#[derive(Debug, Parser)]
#[command(name = "singhyp", version, about)]
struct Cli {
    /// ulam, convergence, correlations, loglaw-map, dimension, flow-loglaw,
    /// norms-audit, or acceptance
    experiment: String,

    /// Suite for `acceptance`: all (default), w1, transfer, ly, norms,
    /// correlations, dimension, loglaw, flow or determinism
    suite: Option<String>,

    /// Experiment config (TOML)
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Overrides the config seed
    #[arg(long, value_name = "N")]
    seed: Option<u64>,

    /// Worker threads (defaults to the number of CPUs)
    #[arg(long, value_name = "K")]
    workers: Option<usize>,

    /// Output directory
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let workers = cli
        .workers
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
        .max(1);
    let result = if cli.experiment == "acceptance" {
        acceptance(&cli, workers)
    } else {
        experiment(&cli, workers)
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn usage(msg: impl std::fmt::Display) -> anyhow::Result<u8> {
    eprintln!("usage error: {msg}");
    Ok(1)
}

fn experiment(cli: &Cli, workers: usize) -> anyhow::Result<u8> {
    let exp: Experiment = match cli.experiment.parse() {
        Ok(e) => e,
        Err(msg) => return usage(msg),
    };
    if cli.suite.is_some() {
        return usage(format!("unexpected argument after `{exp}`"));
    }
    let Some(path) = &cli.config else {
        return usage(format!("`{exp}` needs --config FILE"));
    };
    let cfg = match LoadedConfig::from_path(path) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{}: {e}", path.display());
            return Ok(1);
        }
    };
    if let Some(named) = cfg.config.experiment {
        if named != exp {
            return usage(format!("config is for `{named}`, not `{exp}`"));
        }
    }
    let seed = cli.seed.or(cfg.config.seed).unwrap_or(DEFAULT_SEED);
    let out = cli
        .out
        .clone()
        .or_else(|| cfg.output_dir().map(Path::to_path_buf))
        .unwrap_or_else(|| PathBuf::from("out").join(exp.name()));

    let start = Instant::now();
    let ctx = Context {
        seed,
        exec: Exec::default(),
    };
    let result = with_workers(workers, || experiments::run(exp, &cfg, &ctx));
    let mut manifest = RunManifest::new(exp.name(), Some(&cfg.text), seed, workers);
    let mut writer =
        ArtifactWriter::new(&out).with_context(|| format!("cannot create {}", out.display()))?;
    let code = match result {
        Ok(art) => {
            for (name, csv) in &art.tables {
                writer.text(name, csv)?;
            }
            writer.json("summary.json", &art.summary)?;
            manifest.warnings = art.warnings;
            if art.violations.is_empty() {
                0
            } else {
                for v in &art.violations {
                    eprintln!("invariant violated: {v}");
                }
                manifest.status = "violation".into();
                manifest.error = Some(art.violations.join("; "));
                2
            }
        }
        Err(e) => {
            eprintln!("{exp} failed: {e}");
            manifest.status = if e.exit_code() == 2 {
                "violation"
            } else {
                "error"
            }
            .into();
            manifest.error = Some(e.to_string());
            if let RunError::Core(core) = &e {
                manifest.warnings.push(format!("{core:?}"));
            }
            e.exit_code() as u8
        }
    };
    manifest.wall_time_s = start.elapsed().as_secs_f64();
    manifest.outputs = writer.written().to_vec();
    manifest.outputs.push("manifest.json".into());
    writer.json("manifest.json", &manifest)?;
    if code == 0 {
        println!(
            "{exp}: wrote {} files to {}",
            manifest.outputs.len(),
            out.display()
        );
    }
    Ok(code)
}

fn acceptance(cli: &Cli, workers: usize) -> anyhow::Result<u8> {
    let selection = match parse_selection(cli.suite.as_deref().unwrap_or("all")) {
        Ok(s) => s,
        Err(msg) => return usage(msg),
    };
    let config_text = match &cli.config {
        Some(p) => Some(
            std::fs::read_to_string(p).with_context(|| format!("cannot read {}", p.display()))?,
        ),
        None => None,
    };
    let seed = cli.seed.unwrap_or(DEFAULT_SEED);
    let out = cli
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from("out/acceptance"));
    let start = Instant::now();
    let outcomes = run_acceptance(&selection, seed, workers, |o| println!("{}", o.line()));

    let mut writer =
        ArtifactWriter::new(&out).with_context(|| format!("cannot create {}", out.display()))?;
    for o in &outcomes {
        for (name, csv) in &o.tables {
            writer.text(&format!("{}/{name}", o.suite), csv)?;
        }
    }
    let v = verdict(seed, &outcomes);
    writer.json("verdict.json", &v)?;
    let timings: serde_json::Map<String, serde_json::Value> = outcomes
        .iter()
        .map(|o| (o.suite.name().to_owned(), json!(o.seconds)))
        .collect();
    writer.json("timings.json", &timings)?;

    let mut manifest = RunManifest::new("acceptance", config_text.as_deref(), seed, workers);
    manifest.wall_time_s = start.elapsed().as_secs_f64();
    for o in &outcomes {
        if !o.within_budget() {
            manifest.warnings.push(format!(
                "{} took {:.1}s, over its budget",
                o.suite, o.seconds
            ));
        }
        for c in o.failures() {
            manifest
                .warnings
                .push(format!("{}: {} failed: {}", o.suite, c.name, c.detail));
        }
    }
    if !v.pass {
        manifest.status = "violation".into();
    }
    manifest.outputs = writer.written().to_vec();
    manifest.outputs.push("manifest.json".into());
    writer.json("manifest.json", &manifest)?;
    println!(
        "{}: {}/{} criteria passed",
        if v.pass { "PASS" } else { "FAIL" },
        v.criteria.iter().filter(|c| c.pass).count(),
        v.criteria.len()
    );
    Ok(if v.pass { 0 } else { 2 })
}
