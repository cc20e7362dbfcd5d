//! Subcommand implementations.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use invbo::benchmarks::Benchmark;
use invbo::bo::{run_bo_on, BoTrace};
use invbo::groups::{Cardinality, GroupAction, GroupKey};
use invbo::kernels::{Family, Invariance, KernelSpec, Mode};
use invbo::psd_nystrom::psd_project;
use invbo::spectra::{empirical_spectrum, reduced_domain_spectrum, BoxDomain, SpectrumReport};
use nalgebra::SymmetricEigen;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{Cell, ExperimentConfig, SpectraConfig};
use crate::output::{aggregate, ensure_dir, trace_csv, wlan_placement_csv, write_file, CellAggregate};
use crate::CliError;

fn pool(workers: usize) -> Result<rayon::ThreadPool, CliError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| CliError::Config(format!("worker pool: {e}")))
}

macro_rules! say {
    ($out:expr, $($arg:tt)*) => {
        writeln!($out, $($arg)*).map_err(|e| CliError::io("<stdout>", e))?
    };
}

fn trace_stem(cell: &Cell) -> String {
    format!(
        "{}_{}_{}_seed{}",
        cell.benchmark, cell.mode, cell.config.family, cell.seed
    )
}

#[derive(Serialize)]
struct AggregateFile {
    cells: Vec<CellAggregate>,
    warnings: Vec<String>,
    failures: Vec<String>,
}

/// Runs every cell, writing `traces/*.csv`, WLAN placements and
/// `aggregate.json` under the output directory.
pub fn run_bo(
    config_path: &Path,
    out: Option<PathBuf>,
    workers: usize,
    seed: Option<u64>,
    stdout: &mut dyn Write,
) -> Result<(), CliError> {
    let mut cfg = ExperimentConfig::load(config_path)?;
    if let Some(dir) = out {
        cfg.output_dir = dir;
    }
    if let Some(s) = seed {
        cfg.seeds = vec![s];
    }
    let cells = cfg.cells()?;
    let dir = cfg.output_dir.clone();
    ensure_dir(&dir.join("traces"))?;

    let results: Vec<Result<BoTrace, String>> = pool(workers)?.install(|| {
        cells
            .par_iter()
            .map(|cell| {
                let bench = Benchmark::by_name(&cell.benchmark).map_err(|e| e.to_string())?;
                let trace = run_bo_on(&bench, &cell.config).map_err(|e| format!("{}: {e}", trace_stem(cell)))?;
                let stem = trace_stem(cell);
                let csv = trace_csv(&trace, cfg.record_wall_time).map_err(|e| e.to_string())?;
                write_file(&dir.join("traces").join(format!("{stem}.csv")), &csv).map_err(|e| e.to_string())?;
                if let Some(p) = wlan_placement_csv(&bench, &trace).map_err(|e| e.to_string())? {
                    write_file(&dir.join("placements").join(format!("{stem}.csv")), &p).map_err(|e| e.to_string())?;
                }
                Ok(trace)
            })
            .collect()
    });

    let mut groups: BTreeMap<(usize, usize), Vec<&BoTrace>> = BTreeMap::new();
    let bench_index = |b: &str| cfg.benchmarks.iter().position(|x| x == b).unwrap_or(0);
    let modes = cfg.modes()?;
    let mut warnings = Vec::new();
    let mut failures = Vec::new();
    for (cell, res) in cells.iter().zip(&results) {
        match res {
            Ok(trace) => {
                let mode_index = modes.iter().position(|m| *m == cell.mode).unwrap_or(0);
                groups.entry((bench_index(&cell.benchmark), mode_index)).or_default().push(trace);
                warnings.extend(trace.warnings.iter().map(|w| format!("{}: {w}", trace_stem(cell))));
            }
            Err(e) => failures.push(e.clone()),
        }
    }
    let aggregates: Vec<CellAggregate> = groups.values().map(|t| aggregate(t)).collect();
    for a in &aggregates {
        say!(
            stdout,
            "{:<12} {:<5} R_T = {:<16} s_T = {:<14} -best = {}",
            a.benchmark,
            a.mode,
            a.cumulative_regret.formatted,
            a.simple_regret.formatted,
            a.negated_best.formatted
        );
    }
    for f in &failures {
        say!(stdout, "failed: {f}");
    }
    let file = AggregateFile {
        cells: aggregates,
        warnings,
        failures,
    };
    let json = serde_json::to_string_pretty(&file).expect("aggregate serializes");
    write_file(&dir.join("aggregate.json"), &(json + "\n"))?;
    say!(stdout, "wrote {}", dir.display());
    Ok(())
}

#[derive(Serialize)]
struct SpectrumSummary {
    kernel_id: String,
    domain_id: String,
    seed: u64,
    n: usize,
    decay_slope: Option<f64>,
    min_eigenvalue: f64,
}

fn file_safe(s: &str) -> String {
    s.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' { c } else { '_' }).collect()
}

/// Writes one CSV per report, a combined overlay CSV and `summary.json`.
pub fn spectra(
    config_path: &Path,
    out: Option<PathBuf>,
    workers: usize,
    seed: Option<u64>,
    stdout: &mut dyn Write,
) -> Result<(), CliError> {
    let mut cfg = SpectraConfig::load(config_path)?;
    if let Some(dir) = out {
        cfg.output_dir = dir;
    }
    if let Some(s) = seed {
        cfg.seeds = vec![s];
    }
    let family: Family = cfg.family.parse()?;
    let key: GroupKey = cfg.group.parse()?;
    let group = GroupAction::from_key(key, cfg.dim, cfg.block_size)?;
    let domain = BoxDomain::cube(group.dim(), cfg.lower, cfg.upper)?;
    let mut specs = Vec::new();
    for m in &cfg.modes {
        let mode: Mode = m.parse()?;
        let g = (mode != Mode::Base).then(|| group.clone());
        specs.push(KernelSpec::new(family, cfg.lengthscale, cfg.signal_variance, Invariance::new(mode, g)?)?);
    }
    let mut jobs: Vec<(Option<&KernelSpec<f64>>, u64)> = Vec::new();
    for &s in &cfg.seeds {
        for spec in &specs {
            jobs.push((Some(spec), s));
        }
        if cfg.reduced_domain {
            jobs.push((None, s));
        }
    }
    let order = match group.cardinality() {
        Cardinality::Finite(k) => k,
        Cardinality::Infinite => 1,
    };
    if cfg.reduced_domain && !group.is_finite() {
        return Err(CliError::Config("reduced_domain needs a finite group".into()));
    }
    let base = KernelSpec::base(family, cfg.lengthscale, cfg.signal_variance)?;
    let reports: Vec<invbo::Result<SpectrumReport>> = pool(workers)?.install(|| {
        jobs.par_iter()
            .map(|(spec, s)| match spec {
                Some(spec) => empirical_spectrum(spec, &domain, cfg.n, *s),
                None => reduced_domain_spectrum(&base, &domain, order, cfg.n, *s),
            })
            .collect()
    });

    let dir = &cfg.output_dir;
    ensure_dir(dir)?;
    let mut combined = String::from("kernel_id,domain_id,seed,rank,eigenvalue\n");
    let mut summaries = Vec::new();
    for (i, r) in reports.into_iter().enumerate() {
        let r = r?;
        let reduced = jobs[i].0.is_none();
        let tag = if reduced { "reduced" } else { "full" };
        let name = format!("{}_{tag}_seed{}.csv", file_safe(&r.kernel_id), r.seed);
        write_file(&dir.join(&name), &r.to_csv())?;
        for (k, v) in r.eigenvalues.iter().enumerate() {
            combined.push_str(&format!("{},\"{}\",{},{},{v:e}\n", r.kernel_id, r.domain_id, r.seed, k + 1));
        }
        let slope = r.decay_slope();
        say!(
            stdout,
            "{:<32} {:<7} seed {:<4} slope {:>9} min eig {:.3e}",
            r.kernel_id,
            tag,
            r.seed,
            slope.map_or("n/a".into(), |s| format!("{s:.3}")),
            r.min_eigenvalue()
        );
        summaries.push(SpectrumSummary {
            kernel_id: r.kernel_id.clone(),
            domain_id: r.domain_id.clone(),
            seed: r.seed,
            n: r.n,
            decay_slope: slope,
            min_eigenvalue: r.min_eigenvalue(),
        });
    }
    write_file(&dir.join("combined.csv"), &combined)?;
    let json = serde_json::to_string_pretty(&summaries).expect("summary serializes");
    write_file(&dir.join("summary.json"), &(json + "\n"))?;
    Ok(())
}

/// Projects the max-kernel Gram of `n` random points in `[−1, 1]^4` and
/// checks it against an independent eigen-clip and the nearest-PSD distance
/// identity `‖K − K₊‖_F² = Σ_{λ<0} λ²`.
pub fn psd_check(
    n: usize,
    seed: u64,
    group: &str,
    lengthscale: f64,
    out: Option<PathBuf>,
    stdout: &mut dyn Write,
) -> Result<(), CliError> {
    if n == 0 {
        return Err(CliError::Config("psd-check needs n ≥ 1".into()));
    }
    let g = match group {
        "permutations" => GroupAction::permutations(2, 2)?,
        "signflips" => GroupAction::sign_flips(4)?,
        "hyperoctahedral" => GroupAction::hyperoctahedral(4)?,
        other => {
            return Err(CliError::Config(format!(
                "psd-check group must be permutations, signflips or hyperoctahedral, got {other}"
            )))
        }
    };
    let spec = KernelSpec::new(Family::Rbf, lengthscale, 1.0, Invariance::Max(g))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pts: Vec<Vec<f64>> = (0..n).map(|_| (0..4).map(|_| rng.random_range(-1.0..=1.0)).collect()).collect();
    let k = spec.gram(&pts)?;
    let proj = psd_project(&k)?;
    let kp = proj.reconstruct();

    let oracle = {
        let eig = SymmetricEigen::new(k.clone());
        let clipped = eig.eigenvalues.map(|v| v.max(0.0));
        &eig.eigenvectors * nalgebra::DMatrix::from_diagonal(&clipped) * eig.eigenvectors.transpose()
    };
    let scale = 1.0 + k.norm();
    let oracle_gap = (&kp - &oracle).norm();
    let neg_mass: f64 = proj.raw_eigvals.iter().filter(|v| **v < 0.0).map(|v| v * v).sum::<f64>().sqrt();
    let dist_gap = ((&k - &kp).norm() - neg_mass).abs();
    let min_after = SymmetricEigen::new(kp.clone()).eigenvalues.min();

    let mut csv = String::from("index,before,after\n");
    for (i, (b, a)) in proj.raw_eigvals.iter().zip(proj.clipped_eigvals.iter()).enumerate() {
        csv.push_str(&format!("{},{b:e},{a:e}\n", i + 1));
    }
    if let Some(dir) = out {
        write_file(&dir.join("psd_check.csv"), &csv)?;
    }
    stdout.write_all(csv.as_bytes()).map_err(|e| CliError::io("<stdout>", e))?;
    say!(stdout, "min eigenvalue before: {:.6e}", proj.min_raw_eigval());
    say!(stdout, "min eigenvalue after:  {:.6e}", min_after);
    if proj.is_identity(1e-10 * scale) {
        say!(stdout, "projection is identity");
    } else {
        say!(stdout, "clipped {} negative eigenvalues", proj.raw_eigvals.iter().filter(|v| **v < 0.0).count());
    }
    let ok = oracle_gap <= 1e-10 * scale && dist_gap <= 1e-10 * scale && min_after >= -1e-10 * scale;
    say!(
        stdout,
        "oracle: {} (clip gap {:.2e}, distance gap {:.2e})",
        if ok { "PASS" } else { "FAIL" },
        oracle_gap,
        dist_gap
    );
    if ok {
        Ok(())
    } else {
        Err(CliError::Config("PSD projection disagrees with the oracle".into()))
    }
}

pub fn bench_info(name: &str, stdout: &mut dyn Write) -> Result<(), CliError> {
    let b = Benchmark::by_name(name)?;
    let order = match b.group.cardinality() {
        Cardinality::Finite(k) => k.to_string(),
        Cardinality::Infinite => "infinite".into(),
    };
    let fmt = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ");
    say!(stdout, "name: {}", b.name);
    say!(stdout, "dimension: {}", b.dim);
    say!(stdout, "domain: [{}] x [{}]", fmt(&b.lower), fmt(&b.upper));
    say!(stdout, "group: {}", b.group.key());
    say!(stdout, "group order: {order}");
    match b.known_max {
        Some(m) => say!(stdout, "known optimum: {m}"),
        None => say!(stdout, "known optimum: none (regret against best observed)"),
    }
    if let Some(x) = b.known_maximizer() {
        say!(stdout, "maximizer: ({})", fmt(&x));
    }
    say!(stdout, "objective variance over the box: {:.6e}", b.signal_variance());
    Ok(())
}
