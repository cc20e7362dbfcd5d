//! TOML experiment configurations.

use std::path::{Path, PathBuf};

use invbo::bo::{AcquisitionOptions, BoConfig};
use invbo::kernels::{Family, Mode};
use serde::{Deserialize, Serialize};

use crate::CliError;

/// A batch of BO runs: every benchmark × mode × seed cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub benchmarks: Vec<String>,
    /// `rbf`, `matern32` or `matern52`.
    pub family: String,
    /// Any of `base`, `avg`, `max`, `plus`.
    pub modes: Vec<String>,
    pub seeds: Vec<u64>,
    pub n_init: usize,
    pub n_iters: usize,
    pub output_dir: PathBuf,
    /// Write measured wall time per iteration; when false the column is 0 so
    /// reruns produce byte-identical files.
    pub record_wall_time: bool,
    pub overrides: Overrides,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            benchmarks: vec!["Ackley2d".into()],
            family: "matern52".into(),
            modes: vec!["base".into(), "avg".into(), "plus".into()],
            seeds: (0..10).collect(),
            n_init: 5,
            n_iters: 50,
            output_dir: PathBuf::from("results"),
            record_wall_time: true,
            overrides: Overrides::default(),
        }
    }
}

/// Protocol knobs with their default values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Overrides {
    pub beta_coefficient: f64,
    pub noise_fraction: f64,
    pub m_starts: usize,
    /// Uniform acquisition candidates; absent means `max(64, n)`.
    pub candidates: Option<usize>,
    pub ascent_steps: usize,
    pub step_fraction: f64,
    pub fit_restarts: usize,
    pub fit_max_iters: usize,
}

impl Default for Overrides {
    fn default() -> Self {
        let acq = AcquisitionOptions::default();
        let bo = BoConfig::new("", Mode::Base, Family::Rbf, 0);
        Self {
            beta_coefficient: bo.beta_coefficient,
            noise_fraction: bo.noise_fraction,
            m_starts: acq.m_starts,
            candidates: acq.candidates,
            ascent_steps: acq.ascent_steps,
            step_fraction: acq.step_fraction,
            fit_restarts: bo.fit_restarts,
            fit_max_iters: bo.fit_max_iters,
        }
    }
}

/// One (benchmark, mode, seed) run.
#[derive(Clone, Debug, PartialEq)]
pub struct Cell {
    pub benchmark: String,
    pub mode: Mode,
    pub seed: u64,
    pub config: BoConfig,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let cfg: Self = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn family(&self) -> Result<Family, CliError> {
        self.family.parse().map_err(|e: invbo::Error| CliError::Config(e.to_string()))
    }

    pub fn modes(&self) -> Result<Vec<Mode>, CliError> {
        self.modes
            .iter()
            .map(|m| m.parse().map_err(|e: invbo::Error| CliError::Config(e.to_string())))
            .collect()
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.benchmarks.is_empty() || self.modes.is_empty() || self.seeds.is_empty() {
            return Err(CliError::Config("benchmarks, modes and seeds must be non-empty".into()));
        }
        for b in &self.benchmarks {
            invbo::benchmarks::Benchmark::by_name(b).map_err(|e| CliError::Config(e.to_string()))?;
        }
        self.family()?;
        self.modes()?;
        for c in self.cells()? {
            c.config.validate().map_err(|e| CliError::Config(e.to_string()))?;
        }
        Ok(())
    }

    /// Cells in benchmark, mode, seed order.
    pub fn cells(&self) -> Result<Vec<Cell>, CliError> {
        let family = self.family()?;
        let modes = self.modes()?;
        let o = &self.overrides;
        let mut cells = Vec::new();
        for b in &self.benchmarks {
            for &mode in &modes {
                for &seed in &self.seeds {
                    let mut config = BoConfig::new(b.clone(), mode, family, seed);
                    config.n_init = self.n_init;
                    config.n_iters = self.n_iters;
                    config.beta_coefficient = o.beta_coefficient;
                    config.noise_fraction = o.noise_fraction;
                    config.acquisition = AcquisitionOptions {
                        m_starts: o.m_starts,
                        candidates: o.candidates,
                        ascent_steps: o.ascent_steps,
                        step_fraction: o.step_fraction,
                    };
                    config.fit_restarts = o.fit_restarts;
                    config.fit_max_iters = o.fit_max_iters;
                    cells.push(Cell {
                        benchmark: b.clone(),
                        mode,
                        seed,
                        config,
                    });
                }
            }
        }
        Ok(cells)
    }
}

/// Spectrum reports for one kernel family and group over a box.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpectraConfig {
    pub family: String,
    pub lengthscale: f64,
    pub signal_variance: f64,
    /// `hyperoctahedral`, `signflips`, `permutations`, `rotations2d` or `scalings2d`.
    pub group: String,
    pub dim: usize,
    /// Block size for `permutations`; `dim` is the ambient dimension.
    pub block_size: usize,
    pub lower: f64,
    pub upper: f64,
    pub modes: Vec<String>,
    pub n: usize,
    pub seeds: Vec<u64>,
    /// Also report the base kernel on the sub-box of volume `vol/|G|`.
    pub reduced_domain: bool,
    pub output_dir: PathBuf,
}

impl Default for SpectraConfig {
    fn default() -> Self {
        Self {
            family: "rbf".into(),
            lengthscale: 0.5,
            signal_variance: 1.0,
            group: "hyperoctahedral".into(),
            dim: 2,
            block_size: 1,
            lower: -1.0,
            upper: 1.0,
            modes: vec!["base".into(), "plus".into()],
            n: 1000,
            seeds: vec![0],
            reduced_domain: true,
            output_dir: PathBuf::from("results/spectra"),
        }
    }
}

impl SpectraConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let cfg: Self = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        if cfg.n == 0 || cfg.seeds.is_empty() || cfg.modes.is_empty() {
            return Err(CliError::Config("spectra needs n ≥ 1, seeds and modes".into()));
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}
