//! Empirical eigendecay of kernel Gram matrices and spectral distances.

use std::fmt::Write as _;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::kernels::{Invariance, KernelSpec, Mode};
use crate::psd_nystrom::psd_project;
use crate::scalar::Real;

/// Eigenvalues below this are ignored by slope fits.
pub const SLOPE_FLOOR: f64 = 1e-12;
pub const SLOPE_TOP: usize = 100;

/// Spectrum of `K/n` for one kernel on one sampled domain.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectrumReport {
    pub kernel_id: String,
    pub domain_id: String,
    pub n: usize,
    /// Nonincreasing.
    pub eigenvalues: Vec<f64>,
    pub seed: u64,
}

impl SpectrumReport {
    pub fn decay_slope(&self) -> Option<f64> {
        decay_slope(&self.eigenvalues, SLOPE_TOP, SLOPE_FLOOR)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues.last().copied().unwrap_or(0.0)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("rank,eigenvalue\n");
        for (i, v) in self.eigenvalues.iter().enumerate() {
            writeln!(s, "{},{v:e}", i + 1).expect("string write");
        }
        s
    }
}

/// An axis-aligned box.
#[derive(Clone, Debug, PartialEq)]
pub struct BoxDomain {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl BoxDomain {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::DimensionMismatch {
                expected: lower.len(),
                got: upper.len(),
            });
        }
        if lower.is_empty() || lower.iter().zip(&upper).any(|(l, u)| !(l < u)) {
            return Err(Error::InvalidParameter("box needs lower < upper in every coordinate".into()));
        }
        Ok(Self { lower, upper })
    }

    pub fn cube(dim: usize, lo: f64, hi: f64) -> Result<Self> {
        Self::new(vec![lo; dim], vec![hi; dim])
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn volume(&self) -> f64 {
        self.lower.iter().zip(&self.upper).map(|(l, u)| u - l).product()
    }

    /// Corner-anchored sub-box with volume `vol / group_order`.
    pub fn reduced(&self, group_order: usize) -> Result<Self> {
        if group_order == 0 {
            return Err(Error::InvalidParameter("group order must be ≥ 1".into()));
        }
        let shrink = (group_order as f64).powf(-1.0 / self.dim() as f64);
        let upper = self
            .lower
            .iter()
            .zip(&self.upper)
            .map(|(l, u)| l + (u - l) * shrink)
            .collect();
        Self::new(self.lower.clone(), upper)
    }

    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<Vec<f64>> {
        (0..n)
            .map(|_| {
                self.lower
                    .iter()
                    .zip(&self.upper)
                    .map(|(&l, &u)| rng.random_range(l..u))
                    .collect()
            })
            .collect()
    }

    pub fn id(&self) -> String {
        let side = |v: &[f64]| v.iter().map(|c| format!("{c}")).collect::<Vec<_>>().join(",");
        format!("[{}]..[{}]", side(&self.lower), side(&self.upper))
    }
}

fn kernel_id(spec: &KernelSpec<f64>) -> String {
    let group = spec.group().map(|g| format!("/{}", g.key().as_str())).unwrap_or_default();
    format!("{}-{}{}", spec.family.as_str(), spec.mode().as_str(), group)
}

/// Eigenvalues of `K/n` on `n` uniform draws from `domain`, nonincreasing.
/// Plus mode reports the clipped spectrum of the projection built on the
/// same points.
pub fn empirical_spectrum(spec: &KernelSpec<f64>, domain: &BoxDomain, n: usize, seed: u64) -> Result<SpectrumReport> {
    if n == 0 {
        return Err(Error::InvalidParameter("spectrum needs n ≥ 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points = domain.sample(n, &mut rng);
    let eigenvalues = gram_spectrum(spec, &points)?;
    Ok(SpectrumReport {
        kernel_id: kernel_id(spec),
        domain_id: domain.id(),
        n,
        eigenvalues,
        seed,
    })
}

/// Spectrum of `K/n` at the given points.
pub fn gram_spectrum(spec: &KernelSpec<f64>, points: &[Vec<f64>]) -> Result<Vec<f64>> {
    let n = points.len() as f64;
    let gram = spec.gram(points)?;
    let proj = psd_project(&gram)?;
    let eig = if spec.mode() == Mode::Plus {
        &proj.clipped_eigvals
    } else {
        &proj.raw_eigvals
    };
    Ok(eig.iter().map(|v| v / n).collect())
}

/// Base-kernel spectrum on the corner-anchored sub-box of volume
/// `vol(domain) / group_order`.
pub fn reduced_domain_spectrum(
    base: &KernelSpec<f64>,
    domain: &BoxDomain,
    group_order: usize,
    n: usize,
    seed: u64,
) -> Result<SpectrumReport> {
    let reduced = domain.reduced(group_order)?;
    empirical_spectrum(&base.with_invariance(Invariance::Base), &reduced, n, seed)
}

/// `ℓ₂` distance of two spectra after sorting nonincreasing and zero-padding
/// the shorter one.
pub fn delta2(a: &[f64], b: &[f64]) -> f64 {
    let sorted = |s: &[f64]| {
        let mut v = s.to_vec();
        v.sort_by(|x, y| y.total_cmp(x));
        v
    };
    let (a, b) = (sorted(a), sorted(b));
    let n = a.len().max(b.len());
    (0..n)
        .map(|i| {
            let d = a.get(i).copied().unwrap_or(0.0) - b.get(i).copied().unwrap_or(0.0);
            d * d
        })
        .sum::<f64>()
        .sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Schatten {
    One,
    Two,
    Inf,
}

/// Schatten norm of a symmetric matrix from its absolute eigenvalues.
pub fn schatten_norm<T: Real>(k: &DMatrix<T>, p: Schatten) -> Result<T> {
    if k.iter().any(|v| !v.is_finite()) {
        return Err(Error::Eigen {
            n: k.nrows(),
            max_abs: k.iter().map(|v| v.as_f64().abs()).fold(0.0, f64::max),
            non_finite: k.iter().filter(|v| !v.is_finite()).count(),
        });
    }
    let sym = (k + k.transpose()) * T::lit(0.5);
    let eig = SymmetricEigen::new(sym).eigenvalues;
    let abs = eig.iter().map(|v| v.abs());
    Ok(match p {
        Schatten::One => abs.fold(T::zero(), |a, v| a + v),
        Schatten::Two => abs.fold(T::zero(), |a, v| a + v * v).sqrt(),
        Schatten::Inf => abs.fold(T::zero(), |a, v| if v > a { v } else { a }),
    })
}

/// Least-squares slope of `ln λ_i` against `ln i` over the leading `top`
/// eigenvalues above `floor`. `None` with fewer than two usable values.
pub fn decay_slope(eigenvalues: &[f64], top: usize, floor: f64) -> Option<f64> {
    let pts: Vec<(f64, f64)> = eigenvalues
        .iter()
        .take(top)
        .enumerate()
        .take_while(|(_, &v)| v > floor)
        .map(|(i, &v)| (((i + 1) as f64).ln(), v.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Some(sxy / sxx)
}

/// Medians over `resamples` seeds of `delta2(spectrum at n, spectrum at 2n)`
/// for each `n` in `sizes`.
pub fn delta2_convergence(
    spec: &KernelSpec<f64>,
    domain: &BoxDomain,
    sizes: &[usize],
    resamples: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    let mut medians = Vec::with_capacity(sizes.len());
    for &n in sizes {
        let mut dists = Vec::with_capacity(resamples);
        for r in 0..resamples {
            let base = seed.wrapping_add(1_000_003 * r as u64).wrapping_add(n as u64);
            let a = empirical_spectrum(spec, domain, n, base)?;
            let b = empirical_spectrum(spec, domain, 2 * n, base ^ 0x9e37_79b9)?;
            dists.push(delta2(&a.eigenvalues, &b.eigenvalues));
        }
        dists.sort_by(f64::total_cmp);
        let mid = dists.len() / 2;
        medians.push(if dists.len() % 2 == 1 {
            dists[mid]
        } else {
            0.5 * (dists[mid - 1] + dists[mid])
        });
    }
    Ok(medians)
}
