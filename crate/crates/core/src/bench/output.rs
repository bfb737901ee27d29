use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::Result;
use crate::optimizers::{RunTrace, TraceRow};

pub const TRACE_HEADER: &str = "run_id,algorithm,seed,t,x_coords,y,f_best,log10_distance,instant_regret,cum_regret,omega_t,info_gain,cell_count,wallclock_ms";

/// 17 significant digits, enough to round-trip any `f64`.
pub fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}

fn trace_line(trace: &RunTrace, r: &TraceRow) -> String {
    let coords: Vec<String> = r.x.iter().map(|v| fmt_float(*v)).collect();
    format!(
        "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
        trace.run_id,
        trace.label,
        trace.seed,
        r.t,
        coords.join(";"),
        fmt_float(r.y),
        fmt_float(r.f_best),
        fmt_float(r.log10_distance),
        fmt_float(r.instant_regret),
        fmt_float(r.cum_regret),
        fmt_float(r.omega),
        fmt_float(r.info_gain),
        r.cell_count,
        fmt_float(r.wallclock_ms),
    )
}

pub fn trace_csv(trace: &RunTrace) -> String {
    let mut out = String::with_capacity(256 * (trace.rows.len() + 1));
    out.push_str(TRACE_HEADER);
    out.push('\n');
    for r in &trace.rows {
        out.push_str(&trace_line(trace, r));
        out.push('\n');
    }
    out
}

/// The trace CSV without its last (wallclock) column.
pub fn strip_wallclock(csv: &str) -> String {
    csv.lines()
        .map(|l| l.rsplit_once(',').map_or(l, |(head, _)| head))
        .fold(String::new(), |mut acc, l| {
            acc.push_str(l);
            acc.push('\n');
            acc
        })
}

/// Writes `contents` to a sibling temp file and renames it into place.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Git-style object hash: SHA-256 of `"blob <len>\0" + contents`, hex.
pub fn content_hash(contents: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(format!("blob {}\0", contents.len()).as_bytes());
    h.update(contents);
    h.finalize().iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quantiles {
    pub median: f64,
    pub q25: f64,
    pub q75: f64,
    pub mean: f64,
    pub std: f64,
}

/// Linear-interpolation quantiles, mean and sample standard deviation.
pub fn summarize(values: &[f64]) -> Quantiles {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    let q = |p: f64| {
        if n == 0 {
            return f64::NAN;
        }
        let h = p * (n - 1) as f64;
        let lo = h.floor() as usize;
        let hi = h.ceil() as usize;
        v[lo] + (h - lo as f64) * (v[hi] - v[lo])
    };
    let mean = v.iter().sum::<f64>() / n as f64;
    let std = if n > 1 {
        (v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64).sqrt()
    } else {
        0.0
    };
    Quantiles {
        median: q(0.5),
        q25: q(0.25),
        q75: q(0.75),
        mean,
        std,
    }
}

pub type MetricFn = fn(&TraceRow) -> f64;

/// Per-`t` statistics of each metric across runs of equal length.
pub fn aggregate_csv(traces: &[&RunTrace], metrics: &[(&str, MetricFn)]) -> String {
    let mut out = String::from("t,runs");
    for (name, _) in metrics {
        for stat in ["median", "q25", "q75", "mean", "std"] {
            let _ = write!(out, ",{name}_{stat}");
        }
    }
    out.push('\n');
    let len = traces.iter().map(|t| t.rows.len()).min().unwrap_or(0);
    for i in 0..len {
        let _ = write!(out, "{},{}", i + 1, traces.len());
        for (_, f) in metrics {
            let vals: Vec<f64> = traces.iter().map(|t| f(&t.rows[i])).collect();
            let s = summarize(&vals);
            for v in [s.median, s.q25, s.q75, s.mean, s.std] {
                let _ = write!(out, ",{}", fmt_float(v));
            }
        }
        out.push('\n');
    }
    out
}

pub const SUMMARY_HEADER: &str = "run_id,algorithm,seed,horizon,final_cum_regret,final_log10_distance,flagged_rows,cells_final,cells_ever,max_depth,max_cell_info_gain,cover_ratio,mean_wallclock_ms";

pub fn summary_csv(traces: &[&RunTrace]) -> String {
    let mut out = String::from(SUMMARY_HEADER);
    out.push('\n');
    for t in traces {
        let last = t.rows.last();
        let (cf, ce, md, mg, ratio) = match &t.cover {
            Some(c) => (
                c.cells_final.to_string(),
                c.cells_ever.to_string(),
                c.max_depth.to_string(),
                fmt_float(c.max_cell_info_gain),
                fmt_float(c.cells_ever as f64 / (t.horizon as f64).powf(c.q)),
            ),
            None => Default::default(),
        };
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{cf},{ce},{md},{mg},{ratio},{}",
            t.run_id,
            t.label,
            t.seed,
            t.horizon,
            fmt_float(t.final_cum_regret()),
            fmt_float(last.map_or(f64::NAN, |r| r.log10_distance)),
            t.flagged_rows(),
            fmt_float(t.mean_wallclock_ms()),
        );
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub version: String,
    /// Every config key with its resolved value.
    pub config: BTreeMap<String, String>,
    /// Hash of the resolved config (without `output_dir` and `threads`) and
    /// the target description.
    pub inputs_hash: String,
    /// Hash of all trace CSVs with the wallclock column removed.
    pub traces_hash: String,
    pub files: Vec<String>,
    pub flagged_rows: usize,
    pub status: String,
}

impl Manifest {
    pub fn load(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
    }
}
