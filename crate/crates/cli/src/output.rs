//! Trace CSVs, aggregate statistics and other result files.

use std::fs;
use std::path::Path;

use invbo::benchmarks::{Benchmark, Objective};
use invbo::bo::BoTrace;
use serde::Serialize;

use crate::CliError;

pub const TRACE_COLUMNS: [&str; 11] = [
    "t",
    "x",
    "y",
    "f_true",
    "r_t",
    "R_t",
    "s_t",
    "lambda",
    "lengthscale",
    "noise_var",
    "wall_ms",
];

pub fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

pub fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        ensure_dir(parent)?;
    }
    fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

/// One row per evaluation; hyperparameter columns are empty for the initial
/// design. `wall_ms` is written as 0 when `with_wall_time` is false.
pub fn trace_csv(trace: &BoTrace, with_wall_time: bool) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(TRACE_COLUMNS)?;
    for r in &trace.records {
        let x = r.x.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(";");
        let (lam, len, noise) = match r.hyperparams {
            Some(h) => (
                h.signal_variance.to_string(),
                h.lengthscale.to_string(),
                h.noise_variance.to_string(),
            ),
            None => (String::new(), String::new(), String::new()),
        };
        let wall = if with_wall_time { format!("{:.3}", r.wall_ms) } else { "0".into() };
        w.write_record([
            r.t.to_string(),
            x,
            r.y.to_string(),
            r.f_true.to_string(),
            r.instantaneous_regret.to_string(),
            r.cumulative_regret.to_string(),
            r.simple_regret.to_string(),
            lam,
            len,
            noise,
            wall,
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Config(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv is utf-8"))
}

/// Access-point coordinates and per-user links at the best observed
/// placement of a WLAN trace; `None` for other benchmarks.
pub fn wlan_placement_csv(bench: &Benchmark, trace: &BoTrace) -> Result<Option<String>, CliError> {
    let Objective::Wlan(scenario) = &bench.objective else {
        return Ok(None);
    };
    let Some(best) = trace.records.iter().max_by(|a, b| a.f_true.total_cmp(&b.f_true).then(b.t.cmp(&a.t))) else {
        return Ok(None);
    };
    let (xs, ys) = scenario.split(&best.x)?;
    let links = scenario.links(&xs, &ys)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["kind", "index", "x", "y", "ap", "sinr", "capacity_mbps"])?;
    for i in 0..xs.len() {
        w.write_record(["ap".into(), i.to_string(), xs[i].to_string(), ys[i].to_string(), String::new(), String::new(), String::new()])?;
    }
    for l in &links {
        let u = scenario.users[l.user];
        w.write_record([
            "user".into(),
            l.user.to_string(),
            u[0].to_string(),
            u[1].to_string(),
            l.ap.to_string(),
            l.sinr.to_string(),
            l.capacity.to_string(),
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Config(e.to_string()))?;
    Ok(Some(String::from_utf8(bytes).expect("csv is utf-8")))
}

/// Mean, standard error and the normal 95% interval `m ± 1.96·se`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Stat {
    pub mean: f64,
    pub stderr: f64,
    pub ci95: [f64; 2],
    /// `m ± se` with one decimal.
    pub formatted: String,
}

impl Stat {
    pub fn from_samples(v: &[f64]) -> Self {
        let n = v.len() as f64;
        let mean = v.iter().sum::<f64>() / n;
        let stderr = if v.len() > 1 {
            (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt() / n.sqrt()
        } else {
            0.0
        };
        Self {
            mean,
            stderr,
            ci95: [mean - 1.96 * stderr, mean + 1.96 * stderr],
            formatted: format!("{mean:.1} ± {stderr:.1}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CellAggregate {
    pub benchmark: String,
    pub mode: String,
    pub family: String,
    pub seeds: Vec<u64>,
    pub cumulative_regret: Stat,
    pub simple_regret: Stat,
    pub average_regret: Stat,
    /// Negated best noise-free value, the reporting convention for
    /// benchmarks without a known optimum.
    pub negated_best: Stat,
    pub warnings: usize,
}

pub fn aggregate(traces: &[&BoTrace]) -> CellAggregate {
    let first = traces[0];
    let pick = |f: fn(&BoTrace) -> f64| Stat::from_samples(&traces.iter().map(|t| f(t)).collect::<Vec<_>>());
    CellAggregate {
        benchmark: first.benchmark.clone(),
        mode: first.mode.to_string(),
        family: first.family.to_string(),
        seeds: traces.iter().map(|t| t.seed).collect(),
        cumulative_regret: pick(|t| t.summary.cumulative_regret),
        simple_regret: pick(|t| t.summary.simple_regret),
        average_regret: pick(|t| t.summary.average_regret),
        negated_best: pick(|t| -t.summary.best_value),
        warnings: traces.iter().map(|t| t.warnings.len()).sum(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stat_of_known_samples() {
        let s = Stat::from_samples(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(s.mean, 2.5);
        let se = (5.0f64 / 3.0).sqrt() / 2.0;
        assert!((s.stderr - se).abs() < 1e-15);
        assert!((s.ci95[1] - (2.5 + 1.96 * se)).abs() < 1e-15);
        assert_eq!(s.formatted, "2.5 ± 0.6");
        assert_eq!(Stat::from_samples(&[7.0]).stderr, 0.0);
    }
}
