//! Command-line harness: JSON configs in, CSV fields and JSON reports out.
//!
//! Every run writes into `<out>/<command>-<hash>/`, where the hash covers the
//! parsed config and the seed, so identical inputs land in the same place
//! with byte-identical contents.

pub mod config;
pub mod report;
pub mod solve;
pub mod verify;

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use kricci::radial::write_csv;
use kricci::regularity::{verdict_csv, verdict_table};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::json;

use config::{config_hash, load, ClassifyConfig, SolveJob, SweepConfig, VerifyConfig};
use report::{create_dir, print_failures, write_json, write_text, Check, Report, RunOutcome};

/// Options shared by all verbs.
#[derive(Debug, Clone)]
pub struct RunOptions {
    pub config: Option<PathBuf>,
    pub out: PathBuf,
    pub seed: u64,
    /// Worker threads for sweeps; 0 means one per core.
    pub jobs: usize,
}

fn run_dir(opts: &RunOptions, command: &str, hash: &str) -> Result<PathBuf> {
    let dir = opts.out.join(format!("{command}-{hash}"));
    create_dir(&dir)?;
    Ok(dir)
}

fn finish(dir: PathBuf, report: &Report) -> Result<RunOutcome> {
    write_json(&dir.join("report.json"), report)?;
    print_failures(report);
    let verdict = if report.passed { "PASS" } else { "FAIL" };
    println!("{verdict} {} ({} checks) -> {}", report.command, report.checks.len(), dir.display());
    Ok(RunOutcome { dir, passed: report.passed })
}

pub fn cmd_verify(opts: &RunOptions) -> Result<RunOutcome> {
    let cfg: VerifyConfig = load(opts.config.as_deref())?;
    let hash = config_hash(&cfg, opts.seed);
    let dir = run_dir(opts, "verify", &hash)?;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut checks = Vec::new();
    if cfg.exact {
        checks.extend(verify::exact_checks(&cfg, &mut rng)?);
    }
    if let Some(b) = &cfg.barriers {
        checks.extend(verify::barrier_checks(b)?);
    }
    let report = Report::new("verify", &hash, opts.seed, checks, json!({ "config": cfg }));
    finish(dir, &report)
}

/// Run one job and write its fields and report into `dir`.
fn solve_into(job: &SolveJob, dir: &Path, hash: &str, seed: u64) -> Result<Report> {
    let report = match solve::run_job(job) {
        Ok(res) => {
            for (name, field) in &res.fields {
                let mut buf = Vec::new();
                write_csv(field, &job.equation.spec()?, &mut buf)?;
                std::fs::write(dir.join(format!("{name}.csv")), buf)?;
            }
            print!("{}", res.table);
            let mut details = res.details;
            details["config"] = json!(job);
            Report::new("solve", hash, seed, res.checks, details)
        }
        // solver failures still leave a report behind
        Err(err) => Report::new(
            "solve",
            hash,
            seed,
            vec![Check::flag("solver", false, f64::NAN)],
            json!({ "config": job, "error": format!("{err:#}") }),
        ),
    };
    write_json(&dir.join("report.json"), &report)?;
    Ok(report)
}

pub fn cmd_solve(opts: &RunOptions) -> Result<RunOutcome> {
    let cfg: config::SolveConfig = load(opts.config.as_deref())?;
    let job = cfg.job();
    job.equation.spec()?;
    let hash = config_hash(&job, opts.seed);
    let dir = run_dir(opts, "solve", &hash)?;
    let report = solve_into(&job, &dir, &hash, opts.seed)?;
    if let Some(err) = report.details.get("error") {
        eprintln!("solver error: {}", err.as_str().unwrap_or_default());
    }
    finish(dir, &report)
}

pub fn cmd_classify(opts: &RunOptions) -> Result<RunOutcome> {
    let cfg: ClassifyConfig = load(opts.config.as_deref())?;
    let hash = config_hash(&cfg, opts.seed);
    let dir = run_dir(opts, "classify", &hash)?;
    let [n0, n1] = cfg.n;
    let [k0, k1] = cfg.k;
    let [m0, m1] = cfg.m.unwrap_or([1, n1]);
    let rows = verdict_table(n0..=n1, m0..=m1, k0..=k1)?;
    write_text(&dir.join("verdicts.csv"), &verdict_csv(&rows))?;
    let open = rows.iter().filter(|r| r.is_open()).count();
    println!("{} rows, {open} OPEN", rows.len());
    let report = Report::new("classify", &hash, opts.seed, Vec::new(), json!({ "config": cfg, "rows": rows.len(), "open": open }));
    finish(dir, &report)
}

pub fn cmd_sweep(opts: &RunOptions) -> Result<RunOutcome> {
    let cfg: SweepConfig = load(opts.config.as_deref())?;
    let hash = config_hash(&cfg, opts.seed);
    let dir = run_dir(opts, "sweep", &hash)?;
    let jobs: Vec<SolveJob> = cfg
        .cases
        .iter()
        .map(|eq| SolveJob {
            equation: *eq,
            ..cfg.base.clone()
        })
        .collect();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(opts.jobs).build().context("building worker pool")?;
    let mut results: Vec<(String, SolveJob, Report)> = pool.install(|| {
        jobs.par_iter()
            .map(|job| -> Result<_> {
                let h = config_hash(job, opts.seed);
                let sub = dir.join(&h);
                create_dir(&sub)?;
                let rep = solve_into(job, &sub, &h, opts.seed)?;
                Ok((h, job.clone(), rep))
            })
            .collect::<Result<_>>()
    })?;
    // aggregation is keyed by case hash, independent of completion order
    results.sort_by(|a, b| a.0.cmp(&b.0));
    let mut summary = String::from("hash,n,k,alpha,alpha0,passed,failed_checks\n");
    let mut checks = Vec::new();
    for (h, job, rep) in &results {
        let (alpha, alpha0) = job.equation.general.map(|g| (g.alpha.to_string(), g.alpha0.to_string())).unwrap_or_default();
        let failed = rep.failures().count();
        summary.push_str(&format!("{h},{},{},{alpha},{alpha0},{},{failed}\n", job.equation.n, job.equation.k, rep.passed));
        checks.push(Check::flag(format!("case {h} n={} k={}", job.equation.n, job.equation.k), rep.passed, failed as f64));
    }
    write_text(&dir.join("summary.csv"), &summary)?;
    let report = Report::new("sweep", &hash, opts.seed, checks, json!({ "config": cfg }));
    finish(dir, &report)
}
