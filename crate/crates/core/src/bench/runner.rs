use std::fs;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::config::{BenchConfig, Metric, ObjectiveSpec, Variant};
use super::diagnostics::{diagnostics_report, DiagnosticsReport};
use super::output::{
    aggregate_csv, content_hash, strip_wallclock, summary_csv, trace_csv, write_atomic, Manifest, MetricFn,
};
use crate::error::{Error, Result};
use crate::optimizers::{run, RunTrace};
use crate::testbed::{make_rkhs_function_with_budget, standard_function, NoisyOracle, Objective, RkhsFunction};

/// Marker file left in the output directory when a run fails.
pub const FAILED_MARKER: &str = "FAILED";

/// The objective of a benchmark with its certified optimum.
pub struct Target {
    pub objective: Box<dyn Objective>,
    pub optimum: f64,
    /// Text identifying the target, hashed into the manifest.
    pub description: String,
    pub rkhs: Option<RkhsFunction>,
}

pub fn build_target(spec: &ObjectiveSpec, kernel: crate::kernels::KernelSpec) -> Result<Target> {
    match spec {
        ObjectiveSpec::Standard(name) => {
            let f = standard_function(*name)?;
            Ok(Target {
                optimum: f.optimum_value(),
                description: format!("standard:{name}"),
                objective: Box::new(f),
                rkhs: None,
            })
        }
        ObjectiveSpec::Rkhs {
            dim,
            centers,
            seed,
            optimum_budget,
        } => {
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            let f = make_rkhs_function_with_budget(kernel, *dim, *centers, *optimum_budget, &mut rng)?;
            rkhs_target(f)
        }
        ObjectiveSpec::RkhsFile(path) => rkhs_target(RkhsFunction::load(path)?),
    }
}

fn rkhs_target(f: RkhsFunction) -> Result<Target> {
    if !f.optimum_value.is_finite() {
        return Err(Error::Config("RKHS target has no certified optimum".into()));
    }
    Ok(Target {
        optimum: f.optimum_value,
        description: serde_json::to_string(&f)?,
        objective: Box::new(f.clone()),
        rkhs: Some(f),
    })
}

#[derive(Debug)]
pub struct BenchOutcome {
    pub traces: Vec<RunTrace>,
    pub manifest: Manifest,
    pub output_dir: PathBuf,
}

/// One run of one variant.
#[derive(Debug, Clone, Copy)]
struct Job {
    variant: Variant,
    horizon: usize,
    repeat: usize,
}

fn trace_file(job: &Job) -> String {
    format!("traces/{}_T{}_r{:03}.csv", job.variant, job.horizon, job.repeat)
}

fn metrics(metric: Metric) -> Vec<(&'static str, MetricFn)> {
    let log: (&str, MetricFn) = ("log10_distance", |r| r.log10_distance);
    let cum: (&str, MetricFn) = ("cum_regret", |r| r.cum_regret);
    match metric {
        Metric::LogDistance => vec![log],
        Metric::CumulativeRegret => vec![cum],
        Metric::Both => vec![log, cum],
    }
}

/// Runs every variant `repeats` times at `config.horizon` and writes traces,
/// aggregates, a summary and the manifest.
pub fn run_benchmark(config: &BenchConfig) -> Result<BenchOutcome> {
    execute(config, &[config.horizon], "run")
}

/// Runs every variant at each of `config.horizons`, writes the same files as
/// [`run_benchmark`] plus `diagnostics.json` and `diagnostics.txt`.
pub fn run_diagnostics(config: &BenchConfig) -> Result<(BenchOutcome, DiagnosticsReport)> {
    let outcome = execute(config, &config.horizons, "diag")?;
    let report = diagnostics_report(&outcome.traces)?;
    let dir = &outcome.output_dir;
    write_atomic(&dir.join("diagnostics.json"), &serde_json::to_string_pretty(&report)?)?;
    write_atomic(&dir.join("diagnostics.txt"), &report.to_text())?;
    Ok((outcome, report))
}

fn execute(config: &BenchConfig, horizons: &[usize], command: &str) -> Result<BenchOutcome> {
    let dir = config.output_dir.clone();
    fs::create_dir_all(dir.join("traces"))?;
    let _ = fs::remove_file(dir.join(FAILED_MARKER));
    match execute_inner(config, horizons, command, &dir) {
        Ok(o) => Ok(o),
        Err(e) => {
            let _ = fs::write(dir.join(FAILED_MARKER), format!("{e}\n"));
            Err(e)
        }
    }
}

fn execute_inner(config: &BenchConfig, horizons: &[usize], command: &str, dir: &Path) -> Result<BenchOutcome> {
    let target = build_target(&config.objective, config.kernel)?;
    if let Some(f) = &target.rkhs {
        f.save(&dir.join("target.json"))?;
    }
    let config_text = config.to_text();
    write_atomic(&dir.join("config.txt"), &config_text)?;

    let mut jobs = Vec::new();
    for &variant in &config.variants {
        for &horizon in horizons {
            for repeat in 0..config.repeats {
                jobs.push(Job {
                    variant,
                    horizon,
                    repeat,
                });
            }
        }
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.threads)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let results: Vec<Result<(String, RunTrace)>> = pool.install(|| {
        jobs.par_iter()
            .map(|job| {
                let seed = config.seed_base + job.repeat as u64;
                let rc = config.run_config(job.variant, job.horizon, seed)?;
                let oracle = NoisyOracle::seeded(target.objective.as_ref(), config.noise_stddev, seed)?;
                let mut trace = run(rc, oracle, target.optimum)?;
                trace.label = job.variant.to_string();
                trace.run_id = format!("{}-T{}-s{}", job.variant, job.horizon, seed);
                let file = trace_file(job);
                let csv = trace_csv(&trace);
                write_atomic(&dir.join(&file), &csv)?;
                Ok((file, trace))
            })
            .collect()
    });
    let mut files = Vec::new();
    let mut traces = Vec::new();
    let mut stripped = String::new();
    for r in results {
        let (file, trace) = r?;
        stripped.push_str(&strip_wallclock(&trace_csv(&trace)));
        files.push(file);
        traces.push(trace);
    }

    let metric_cols = metrics(config.metric);
    for &variant in &config.variants {
        for &horizon in horizons {
            let group: Vec<&RunTrace> = traces
                .iter()
                .filter(|t| t.label == variant.as_str() && t.horizon == horizon)
                .collect();
            let name = if horizons.len() == 1 {
                format!("aggregate_{variant}.csv")
            } else {
                format!("aggregate_{variant}_T{horizon}.csv")
            };
            write_atomic(&dir.join(&name), &aggregate_csv(&group, &metric_cols))?;
            files.push(name);
        }
    }
    let all: Vec<&RunTrace> = traces.iter().collect();
    write_atomic(&dir.join("summary.csv"), &summary_csv(&all))?;
    files.push("summary.csv".into());

    // where and how fast it ran does not change the results
    let mut inputs: Vec<u8> = config
        .pairs()
        .iter()
        .filter(|(k, _)| !matches!(k.as_str(), "output_dir" | "threads"))
        .flat_map(|(k, v)| format!("{k}={v}\n").into_bytes())
        .collect();
    inputs.extend_from_slice(target.description.as_bytes());
    let manifest = Manifest {
        command: command.to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        config: config.pairs().clone(),
        inputs_hash: content_hash(&inputs),
        traces_hash: content_hash(stripped.as_bytes()),
        files,
        flagged_rows: traces.iter().map(RunTrace::flagged_rows).sum(),
        status: "ok".into(),
    };
    write_atomic(&dir.join("manifest.json"), &serde_json::to_string_pretty(&manifest)?)?;
    Ok(BenchOutcome {
        traces,
        manifest,
        output_dir: dir.to_path_buf(),
    })
}

/// Re-runs the benchmark recorded in a manifest, writing to `output_dir`.
pub fn rerun_manifest(manifest: &Manifest, output_dir: &Path) -> Result<BenchOutcome> {
    let config = BenchConfig::from_pairs(&manifest.config)?.with_output_dir(output_dir);
    match manifest.command.as_str() {
        "diag" => run_diagnostics(&config).map(|(o, _)| o),
        _ => run_benchmark(&config),
    }
}
