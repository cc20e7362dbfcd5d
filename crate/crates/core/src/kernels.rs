//! Isotropic base kernels and their orbit-level invariant versions.
//!
//! Every kernel value factors as `λ · κ(r / l)` for a nonincreasing profile
//! `κ`, which is what lets the max-alignment kernel reduce to the base kernel
//! evaluated at the minimal orbit distance.

use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::groups::{self, GroupAction, GroupKind};
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Family {
    Rbf,
    Matern32,
    Matern52,
}

impl Family {
    pub fn as_str(self) -> &'static str {
        match self {
            Family::Rbf => "rbf",
            Family::Matern32 => "matern32",
            Family::Matern52 => "matern52",
        }
    }

    /// Unit-variance profile `κ` as a function of the squared scaled distance `(r/l)²`.
    #[inline]
    pub fn profile_sq<T: Real>(self, scaled_sq: T) -> T {
        match self {
            Family::Rbf => (-scaled_sq * T::lit(0.5)).exp(),
            Family::Matern32 => {
                let u = (T::lit(3.0) * scaled_sq).sqrt();
                (T::one() + u) * (-u).exp()
            }
            Family::Matern52 => {
                let u = (T::lit(5.0) * scaled_sq).sqrt();
                (T::one() + u + u * u / T::lit(3.0)) * (-u).exp()
            }
        }
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rbf" => Ok(Family::Rbf),
            "matern32" => Ok(Family::Matern32),
            "matern52" => Ok(Family::Matern52),
            other => Err(Error::Unknown {
                kind: "kernel family",
                name: other.to_string(),
            }),
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Config-level invariance mode without its group.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Mode {
    Base,
    Avg,
    Max,
    Plus,
}

impl Mode {
    pub const ALL: [Mode; 4] = [Mode::Base, Mode::Avg, Mode::Max, Mode::Plus];

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Base => "base",
            Mode::Avg => "avg",
            Mode::Max => "max",
            Mode::Plus => "plus",
        }
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "base" => Ok(Mode::Base),
            "avg" => Ok(Mode::Avg),
            "max" => Ok(Mode::Max),
            "plus" => Ok(Mode::Plus),
            other => Err(Error::Unknown {
                kind: "kernel mode",
                name: other.to_string(),
            }),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Invariance {
    Base,
    Avg(GroupAction),
    Max(GroupAction),
    /// PSD projection of the max kernel. Pointwise evaluation of a spec in
    /// this mode yields the max kernel; the projection itself lives in
    /// [`crate::psd_nystrom::ProjectedKernel`].
    Plus(GroupAction),
}

impl Invariance {
    pub fn new(mode: Mode, group: Option<GroupAction>) -> Result<Self> {
        let need = |g: Option<GroupAction>| {
            g.ok_or_else(|| Error::InvalidParameter(format!("mode {mode} requires a group")))
        };
        Ok(match mode {
            Mode::Base => Invariance::Base,
            Mode::Avg => Invariance::Avg(need(group)?),
            Mode::Max => Invariance::Max(need(group)?),
            Mode::Plus => Invariance::Plus(need(group)?),
        })
    }

    pub fn mode(&self) -> Mode {
        match self {
            Invariance::Base => Mode::Base,
            Invariance::Avg(_) => Mode::Avg,
            Invariance::Max(_) => Mode::Max,
            Invariance::Plus(_) => Mode::Plus,
        }
    }

    pub fn group(&self) -> Option<&GroupAction> {
        match self {
            Invariance::Base => None,
            Invariance::Avg(g) | Invariance::Max(g) | Invariance::Plus(g) => Some(g),
        }
    }
}

/// Base kernel family, hyperparameters and invariance mode.
#[derive(Clone, Debug, PartialEq)]
pub struct KernelSpec<T> {
    pub family: Family,
    pub lengthscale: T,
    pub signal_variance: T,
    pub invariance: Invariance,
}

/// Hyperparameter-free summary of a pair of points from which the kernel
/// value follows for any lengthscale and signal variance.
#[derive(Clone, Debug, PartialEq)]
pub enum PairGeometry<T> {
    /// A single squared distance (base kernel, max kernel, or ray features).
    SqDist(T),
    /// Squared distances from `x` to every image `g·x'` (finite-group average).
    Orbit(Vec<T>),
    /// Norms `(‖x‖, ‖x'‖)` (rotation average).
    Radii(T, T),
}

impl<T: Real> KernelSpec<T> {
    pub fn new(family: Family, lengthscale: T, signal_variance: T, invariance: Invariance) -> Result<Self> {
        if !(lengthscale > T::zero()) || !(signal_variance > T::zero()) {
            return Err(Error::InvalidParameter(format!(
                "lengthscale and signal variance must be positive (l = {lengthscale:?}, λ = {signal_variance:?})"
            )));
        }
        Ok(Self {
            family,
            lengthscale,
            signal_variance,
            invariance,
        })
    }

    pub fn base(family: Family, lengthscale: T, signal_variance: T) -> Result<Self> {
        Self::new(family, lengthscale, signal_variance, Invariance::Base)
    }

    pub fn mode(&self) -> Mode {
        self.invariance.mode()
    }

    pub fn group(&self) -> Option<&GroupAction> {
        self.invariance.group()
    }

    /// Same family and invariance with new hyperparameters.
    pub fn with_hyperparams(&self, lengthscale: T, signal_variance: T) -> Result<Self> {
        Self::new(self.family, lengthscale, signal_variance, self.invariance.clone())
    }

    /// Same hyperparameters under a different invariance.
    pub fn with_invariance(&self, invariance: Invariance) -> Self {
        Self {
            invariance,
            ..self.clone()
        }
    }

    #[inline]
    fn from_sq(&self, sq: T) -> T {
        self.signal_variance * self.family.profile_sq(sq / (self.lengthscale * self.lengthscale))
    }

    /// `λ·κ(‖x − x'‖ / l)`, ignoring the invariance mode.
    pub fn eval_base(&self, x: &[T], y: &[T]) -> Result<T> {
        check_pair(x, y)?;
        Ok(self.from_sq(groups::sq_dist(x, y)))
    }

    /// Orbit-averaged kernel `(1/|G|²) Σ_{g,g'} k_b(g·x, g'·x')`.
    ///
    /// Isometric finite groups collapse the double sum to a single sum.
    /// Rotations use the closed form with `I₀` for the RBF base and angular
    /// quadrature for Matérn bases. Scalings evaluate the base kernel on
    /// unit-ray features.
    pub fn eval_avg(&self, group: &GroupAction, x: &[T], y: &[T]) -> Result<T> {
        let geom = avg_geometry(group, x, y)?;
        Ok(self.value(&geom))
    }

    /// Brute-force double sum over `(g, g')`; finite groups only.
    pub fn eval_avg_double_sum(&self, group: &GroupAction, x: &[T], y: &[T]) -> Result<T> {
        check_pair(x, y)?;
        let perms = group.signed_perms()?;
        let mut gx = vec![T::zero(); x.len()];
        let mut acc = T::zero();
        for g in perms.iter() {
            g.apply_into(x, &mut gx);
            for h in perms.iter() {
                acc += self.from_sq(h.sq_distance_to_image(&gx, y));
            }
        }
        let n = T::from_usize_lossy(perms.len());
        Ok(acc / (n * n))
    }

    /// Max-alignment kernel `max_{g,g'} k_b(g·x, g'·x')`, evaluated as the
    /// base profile at the minimal orbit distance.
    pub fn eval_max(&self, group: &GroupAction, x: &[T], y: &[T]) -> Result<T> {
        let geom = max_geometry(group, x, y)?;
        Ok(self.value(&geom))
    }

    /// Brute-force maximum over `(g, g')` of the base kernel; finite groups only.
    pub fn eval_max_double_loop(&self, group: &GroupAction, x: &[T], y: &[T]) -> Result<T> {
        check_pair(x, y)?;
        let perms = group.signed_perms()?;
        let mut gx = vec![T::zero(); x.len()];
        let mut best = T::min_value().unwrap();
        for g in perms.iter() {
            g.apply_into(x, &mut gx);
            for h in perms.iter() {
                let v = self.from_sq(h.sq_distance_to_image(&gx, y));
                if v > best {
                    best = v;
                }
            }
        }
        Ok(best)
    }

    /// Pointwise kernel according to the invariance mode (`Plus` evaluates
    /// the max kernel it projects).
    pub fn eval(&self, x: &[T], y: &[T]) -> Result<T> {
        Ok(self.value(&self.pair_geometry(x, y)?))
    }

    pub fn pair_geometry(&self, x: &[T], y: &[T]) -> Result<PairGeometry<T>> {
        match &self.invariance {
            Invariance::Base => {
                check_pair(x, y)?;
                Ok(PairGeometry::SqDist(groups::sq_dist(x, y)))
            }
            Invariance::Avg(g) => avg_geometry(g, x, y),
            Invariance::Max(g) | Invariance::Plus(g) => max_geometry(g, x, y),
        }
    }

    /// Kernel value for a precomputed pair geometry under this spec's
    /// hyperparameters.
    pub fn value(&self, geom: &PairGeometry<T>) -> T {
        match geom {
            PairGeometry::SqDist(sq) => self.from_sq(*sq),
            PairGeometry::Orbit(sqs) => {
                let sum = sqs.iter().fold(T::zero(), |acc, &sq| acc + self.from_sq(sq));
                sum / T::from_usize_lossy(sqs.len())
            }
            PairGeometry::Radii(r, s) => self.rotation_average(*r, *s),
        }
    }

    fn rotation_average(&self, r: T, s: T) -> T {
        let l2 = self.lengthscale * self.lengthscale;
        match self.family {
            Family::Rbf => {
                // exp(−(r²+s²)/2l²)·I₀(rs/l²) = exp(−(r−s)²/2l²)·e^{−z}I₀(z)
                let diff = r - s;
                self.signal_variance
                    * (-(diff * diff) / (T::lit(2.0) * l2)).exp()
                    * bessel_i0e(r * s / l2)
            }
            _ => {
                // (1/π) ∫_0^π κ(√(r² + s² − 2rs cos θ)/l) dθ
                let rule = angular_rule();
                let mut acc = T::zero();
                for &(theta, w) in rule {
                    let theta = T::lit(theta);
                    let sq = r * r + s * s - T::lit(2.0) * r * s * theta.cos();
                    acc += T::lit(w) * self.from_sq(if sq > T::zero() { sq } else { T::zero() });
                }
                acc / T::pi()
            }
        }
    }

    /// Symmetric `n×n` Gram matrix, one evaluation per unordered pair.
    pub fn gram(&self, points: &[Vec<T>]) -> Result<DMatrix<T>> {
        Ok(GramGeometry::new(self, points)?.gram(self))
    }

    /// Cross matrix `k(a_i, b_j)`.
    pub fn cross(&self, a: &[Vec<T>], b: &[Vec<T>]) -> Result<DMatrix<T>> {
        let mut out = DMatrix::zeros(a.len(), b.len());
        for (i, x) in a.iter().enumerate() {
            for (j, y) in b.iter().enumerate() {
                out[(i, j)] = self.eval(x, y)?;
            }
        }
        Ok(out)
    }
}

/// Upper-triangular cache of pair geometries for a fixed point set, so that
/// Gram matrices for many hyperparameter values cost `O(n²)` profile
/// evaluations (times `|G|` for averages).
#[derive(Clone, Debug)]
pub struct GramGeometry<T> {
    n: usize,
    pairs: Vec<PairGeometry<T>>,
}

impl<T: Real> GramGeometry<T> {
    pub fn new(spec: &KernelSpec<T>, points: &[Vec<T>]) -> Result<Self> {
        let n = points.len();
        let mut pairs = Vec::with_capacity(n * (n + 1) / 2);
        for i in 0..n {
            for j in i..n {
                pairs.push(spec.pair_geometry(&points[i], &points[j])?);
            }
        }
        Ok(Self { n, pairs })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn gram(&self, spec: &KernelSpec<T>) -> DMatrix<T> {
        let n = self.n;
        let mut k = DMatrix::zeros(n, n);
        let mut idx = 0;
        for i in 0..n {
            for j in i..n {
                let v = spec.value(&self.pairs[idx]);
                k[(i, j)] = v;
                k[(j, i)] = v;
                idx += 1;
            }
        }
        k
    }
}

fn check_pair<T>(x: &[T], y: &[T]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            got: y.len(),
        });
    }
    Ok(())
}

fn avg_geometry<T: Real>(group: &GroupAction, x: &[T], y: &[T]) -> Result<PairGeometry<T>> {
    match group.kind() {
        GroupKind::PlanarRotations => {
            let r = group.canonical_feature(x)?[0];
            let s = group.canonical_feature(y)?[0];
            Ok(PairGeometry::Radii(r, s))
        }
        GroupKind::Scalings => ray_geometry(group, x, y),
        _ => {
            let mut out = Vec::new();
            group.orbit_sq_distances(x, y, &mut out)?;
            Ok(PairGeometry::Orbit(out))
        }
    }
}

fn max_geometry<T: Real>(group: &GroupAction, x: &[T], y: &[T]) -> Result<PairGeometry<T>> {
    match group.kind() {
        GroupKind::Scalings => ray_geometry(group, x, y),
        _ => Ok(PairGeometry::SqDist(group.orbit_min_sq_distance(x, y)?)),
    }
}

fn ray_geometry<T: Real>(group: &GroupAction, x: &[T], y: &[T]) -> Result<PairGeometry<T>> {
    let a = group.canonical_feature(x)?;
    let b = group.canonical_feature(y)?;
    Ok(PairGeometry::SqDist(groups::sq_dist(&a, &b)))
}

/// Exponentially scaled modified Bessel function `e^{−z}·I₀(z)` for `z ≥ 0`.
///
/// Power series below `z = 25`, Hankel asymptotic expansion above; relative
/// error below `1e−14` in `f64` across the range.
pub fn bessel_i0e<T: Real>(z: T) -> T {
    let z = z.abs();
    if z <= T::lit(25.0) {
        let q = z * z / T::lit(4.0);
        let mut term = T::one();
        let mut sum = T::one();
        let mut k = 1.0;
        loop {
            term *= q / T::lit(k * k);
            sum += term;
            if term <= sum * T::lit(1e-17) {
                break;
            }
            k += 1.0;
        }
        sum * (-z).exp()
    } else {
        // e^{−z}I₀(z) ~ (2πz)^{−1/2} Σ_k ((2k−1)!!)² / (k! (8z)^k)
        let mut term = T::one();
        let mut sum = T::one();
        for k in 1..60 {
            let kf = k as f64;
            let next = term * T::lit((2.0 * kf - 1.0) * (2.0 * kf - 1.0)) / (T::lit(8.0 * kf) * z);
            if next.abs() >= term.abs() {
                break;
            }
            term = next;
            sum += term;
            if term.abs() <= sum * T::lit(1e-17) {
                break;
            }
        }
        sum / (T::two_pi() * z).sqrt()
    }
}

/// Modified Bessel function of the first kind, order zero.
pub fn bessel_i0<T: Real>(z: T) -> T {
    bessel_i0e(z) * z.abs().exp()
}

/// Composite Gauss–Legendre rule on `[0, π]`, with panels graded towards
/// `θ = 0` where the integrand is sharpest.
fn angular_rule() -> &'static [(f64, f64)] {
    static RULE: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    RULE.get_or_init(|| {
        let nodes = gauss_legendre(24);
        let pi = std::f64::consts::PI;
        let mut edges = vec![0.0];
        edges.extend((0..6).rev().map(|k| pi / 4f64.powi(k)));
        let mut rule = Vec::new();
        for w in edges.windows(2) {
            let (a, b) = (w[0], w[1]);
            let half = 0.5 * (b - a);
            let mid = 0.5 * (a + b);
            for &(t, wt) in &nodes {
                rule.push((mid + half * t, half * wt));
            }
        }
        rule
    })
}

/// Gauss–Legendre nodes and weights on `[−1, 1]` via Newton iteration.
pub(crate) fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rbf(l: f64) -> KernelSpec<f64> {
        KernelSpec::base(Family::Rbf, l, 1.0).unwrap()
    }

    #[test]
    fn base_examples() {
        let k = rbf(1.0);
        assert_eq!(k.eval_base(&[0.3, 0.4], &[0.3, 0.4]).unwrap(), 1.0);
        let k = rbf(0.5);
        assert!((k.eval_base(&[0.0], &[1.0]).unwrap() - (-2.0f64).exp()).abs() < 1e-15);
        let m = KernelSpec::base(Family::Matern52, 1.0, 1.0).unwrap();
        assert_eq!(m.eval_base(&[2.0], &[2.0]).unwrap(), 1.0);
    }

    #[test]
    fn matern_closed_forms() {
        let r: f64 = 0.7;
        let m32 = KernelSpec::base(Family::Matern32, 1.3, 2.0).unwrap();
        let u = 3f64.sqrt() * r / 1.3;
        let want = 2.0 * (1.0 + u) * (-u).exp();
        assert!((m32.eval_base(&[0.0], &[r]).unwrap() - want).abs() < 1e-14);
        let m52 = KernelSpec::base(Family::Matern52, 1.3, 2.0).unwrap();
        let u = 5f64.sqrt() * r / 1.3;
        let want = 2.0 * (1.0 + u + u * u / 3.0) * (-u).exp();
        assert!((m52.eval_base(&[0.0], &[r]).unwrap() - want).abs() < 1e-14);
    }

    #[test]
    fn rejects_bad_hyperparameters() {
        assert!(KernelSpec::base(Family::Rbf, 0.0, 1.0).is_err());
        assert!(KernelSpec::base(Family::Rbf, 1.0, -1.0).is_err());
        assert!(rbf(1.0).eval_base(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn works_in_single_precision() {
        let k = KernelSpec::<f32>::base(Family::Rbf, 0.5, 1.0).unwrap();
        let v = k.eval_base(&[0.0], &[1.0]).unwrap();
        assert!((v - (-2.0f32).exp()).abs() < 1e-6);
        let g = GroupAction::sign_flips(2).unwrap();
        let m = KernelSpec::<f32>::base(Family::Matern52, 1.0, 1.0).unwrap();
        assert!((m.eval_max(&g, &[1.0, 1.0], &[-1.0, -1.0]).unwrap() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn bessel_reference_values() {
        // Reference values of I₀ from standard tables.
        let table = [
            (0.0, 1.0),
            (0.5, 1.063_483_370_741_323_6),
            (1.0, 1.266_065_877_752_008_4),
            (3.75, 9.118_945_860_844_564),
            (10.0, 2_815.716_628_466_254),
        ];
        for (z, want) in table {
            let got: f64 = bessel_i0(z);
            assert!(((got - want) / want).abs() < 1e-12, "I0({z}) = {got}, want {want}");
        }
        // e^{−z}I₀(z) on both sides of the series/asymptotic switch
        for (z, want) in [
            (24.999999999, 0.080_196_773_549_057_368_8),
            (25.0, 0.080_196_773_547_436_708_4),
            (30.0, 0.073_145_946_482_237_3),
            (100.0, 0.039_944_379_299_096_68),
        ] {
            let got: f64 = bessel_i0e(z);
            assert!(((got - want) / want).abs() < 1e-14, "I0e({z}) = {got}, want {want}");
        }
    }

    #[test]
    fn rotation_average_examples() {
        let k = rbf(1.0);
        let rot = GroupAction::planar_rotations();
        assert!((k.eval_avg(&rot, &[0.0, 0.0], &[0.0, 0.0]).unwrap() - 1.0).abs() < 1e-15);
        let v = k.eval_avg(&rot, &[1.0, 0.0], &[0.0, 1.0]).unwrap();
        assert!((v - (-1.0f64).exp() * 1.266_065_877_752_008_4).abs() < 1e-12);
    }

    #[test]
    fn rotation_max_example() {
        let k = rbf(1.0);
        let rot = GroupAction::planar_rotations();
        let v = k.eval_max(&rot, &[3.0, 0.0], &[0.0, 4.0]).unwrap();
        assert!((v - (-0.5f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn sign_flip_average_two_elements() {
        let a = 0.8;
        let l = 0.6;
        let k = rbf(l);
        let g = GroupAction::sign_flips(1).unwrap();
        let want = 0.5 * (1.0 + (-2.0 * a * a / (l * l)).exp());
        assert!((k.eval_avg(&g, &[a], &[a]).unwrap() - want).abs() < 1e-15);
    }

    #[test]
    fn max_on_orbit_is_signal_variance() {
        let k = rbf(0.7);
        let g = GroupAction::hyperoctahedral(2).unwrap();
        let x = [0.4, -1.3];
        for e in g.elements::<f64>().unwrap() {
            let gx = e.apply(&x).unwrap();
            assert!((k.eval_max(&g, &x, &gx).unwrap() - 1.0).abs() < 1e-15);
        }
        let m = KernelSpec::base(Family::Matern52, 1.0, 1.0).unwrap();
        let s2 = GroupAction::sign_flips(2).unwrap();
        assert_eq!(m.eval_max(&s2, &[1.0, 1.0], &[-1.0, -1.0]).unwrap(), 1.0);
    }

    #[test]
    fn single_sums_match_double_sums() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let groups = [
            GroupAction::hyperoctahedral(2).unwrap(),
            GroupAction::hyperoctahedral(3).unwrap(),
            GroupAction::sign_flips(3).unwrap(),
            GroupAction::permutations(3, 2).unwrap(),
        ];
        for family in [Family::Rbf, Family::Matern32, Family::Matern52] {
            let k = KernelSpec::base(family, 0.9, 1.7).unwrap();
            for g in &groups {
                for _ in 0..30 {
                    let x: Vec<f64> = (0..g.dim()).map(|_| rng.random_range(-2.0..2.0)).collect();
                    let y: Vec<f64> = (0..g.dim()).map(|_| rng.random_range(-2.0..2.0)).collect();
                    let a1 = k.eval_avg(g, &x, &y).unwrap();
                    let a2 = k.eval_avg_double_sum(g, &x, &y).unwrap();
                    assert!((a1 - a2).abs() <= 1e-13 * a2.abs().max(1e-300), "{a1} vs {a2}");
                    let m1 = k.eval_max(g, &x, &y).unwrap();
                    let m2 = k.eval_max_double_loop(g, &x, &y).unwrap();
                    assert!((m1 - m2).abs() <= 1e-13 * m2, "{m1} vs {m2}");
                    // pointwise sandwich k_avg ≤ k_max ≤ |G|² k_avg
                    let n = g.signed_perms().unwrap().len() as f64;
                    assert!(a1 <= m1 * (1.0 + 1e-12));
                    assert!(m1 <= n * n * a1 * (1.0 + 1e-12));
                }
            }
        }
    }

    #[test]
    fn gram_is_symmetric_with_signal_variance_diagonal() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let pts: Vec<Vec<f64>> = (0..6)
            .map(|_| (0..2).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let g = GroupAction::hyperoctahedral(2).unwrap();
        let spec = KernelSpec::new(Family::Matern52, 0.4, 2.5, Invariance::Max(g)).unwrap();
        let k = spec.gram(&pts).unwrap();
        assert_eq!(k, k.transpose());
        for i in 0..6 {
            assert_eq!(k[(i, i)], 2.5);
        }
        let single = spec.gram(&pts[..1]).unwrap();
        assert_eq!(single[(0, 0)], 2.5);
    }

    #[test]
    fn geometry_cache_matches_direct_gram() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let pts: Vec<Vec<f64>> = (0..5)
            .map(|_| (0..2).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let g = GroupAction::hyperoctahedral(2).unwrap();
        let spec = KernelSpec::new(Family::Rbf, 0.4, 1.0, Invariance::Avg(g)).unwrap();
        let cache = GramGeometry::new(&spec, &pts).unwrap();
        let other = spec.with_hyperparams(0.9, 3.0).unwrap();
        let direct = other.cross(&pts, &pts).unwrap();
        let cached = cache.gram(&other);
        assert!((direct - cached).abs().max() < 1e-15);
    }

    #[test]
    fn parse_keys() {
        assert_eq!("matern32".parse::<Family>().unwrap(), Family::Matern32);
        assert_eq!("plus".parse::<Mode>().unwrap(), Mode::Plus);
        assert!("laplace".parse::<Family>().is_err());
        assert!(Invariance::new(Mode::Avg, None).is_err());
    }
}
