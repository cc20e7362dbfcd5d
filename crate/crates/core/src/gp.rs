//! Exact GP regression: posterior mean/covariance, log marginal likelihood,
//! and multi-start likelihood ascent over `(λ, l, σ₀²)`.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::kernels::{Family, GramGeometry, Invariance, KernelSpec, Mode};
use crate::psd_nystrom::{psd_project, ProjectedKernel, RANK_TOL};
use crate::scalar::Real;

const JITTER_ATTEMPTS: usize = 6;

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset<T> {
    pub x: Vec<Vec<T>>,
    pub y: Vec<T>,
    pub noise_variance: T,
}

impl<T: Real> Dataset<T> {
    pub fn new(x: Vec<Vec<T>>, y: Vec<T>, noise_variance: T) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::DimensionMismatch {
                expected: x.len(),
                got: y.len(),
            });
        }
        if noise_variance < T::zero() {
            return Err(Error::InvalidParameter("noise variance must be ≥ 0".into()));
        }
        Ok(Self { x, y, noise_variance })
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }
}

/// Covariance used by the GP: either a pointwise kernel or the Nyström
/// surrogate of a projected max kernel.
#[derive(Clone, Debug)]
pub enum GpKernel<T: Real> {
    Direct(KernelSpec<T>),
    Projected(ProjectedKernel<T>),
}

impl<T: Real> GpKernel<T> {
    /// `Plus` specs are projected on `design`; other modes evaluate directly.
    pub fn build(spec: &KernelSpec<T>, design: &[Vec<T>]) -> Result<Self> {
        match spec.mode() {
            Mode::Plus => Ok(GpKernel::Projected(ProjectedKernel::build(spec, design)?)),
            _ => Ok(GpKernel::Direct(spec.clone())),
        }
    }

    pub fn spec(&self) -> &KernelSpec<T> {
        match self {
            GpKernel::Direct(s) => s,
            GpKernel::Projected(p) => p.spec(),
        }
    }

    pub fn eval(&self, x: &[T], y: &[T]) -> Result<T> {
        match self {
            GpKernel::Direct(s) => s.eval(x, y),
            GpKernel::Projected(p) => p.eval(x, y),
        }
    }

    pub fn gram(&self, points: &[Vec<T>]) -> Result<DMatrix<T>> {
        match self {
            GpKernel::Direct(s) => s.gram(points),
            GpKernel::Projected(p) => {
                if points == p.design() {
                    Ok(p.design_gram())
                } else {
                    Ok(p.cross_gram(points)?.query_gram)
                }
            }
        }
    }
}

/// Cholesky factorization of `K + σ₀²I`, escalating diagonal jitter from
/// `1e−10·tr(K)/t` by factors of ten.
pub fn factorize<T: Real>(k: &DMatrix<T>, noise_variance: T) -> Result<(Cholesky<T, Dyn>, T)> {
    let t = k.nrows();
    let mut base = k.clone();
    for i in 0..t {
        base[(i, i)] += noise_variance;
    }
    let trace = (0..t).fold(T::zero(), |acc, i| acc + k[(i, i)].abs());
    let mut jitter = T::lit(1e-10) * trace / T::from_usize_lossy(t.max(1));
    if jitter <= T::zero() {
        jitter = T::lit(1e-12);
    }
    for _ in 0..JITTER_ATTEMPTS {
        let mut m = base.clone();
        for i in 0..t {
            m[(i, i)] += jitter;
        }
        if let Some(ch) = Cholesky::new(m) {
            if ch.l_dirty().diagonal().iter().all(|d| d.is_finite() && *d > T::zero()) {
                return Ok((ch, jitter));
            }
        }
        jitter *= T::lit(10.0);
    }
    let condition = SymmetricEigen::try_new(base, T::default_epsilon(), 1000)
        .map(|e| {
            let max = e.eigenvalues.iter().map(|v| v.abs()).fold(T::zero(), |a, b| a.max(b));
            let min = e.eigenvalues.iter().map(|v| v.abs()).fold(T::max_value().unwrap(), |a, b| a.min(b));
            (max / min).as_f64()
        })
        .unwrap_or(f64::INFINITY);
    Err(Error::SingularSystem {
        attempts: JITTER_ATTEMPTS,
        jitter: (jitter / T::lit(10.0)).as_f64(),
        condition,
    })
}

/// `−½ yᵀ(K+σ₀²I)⁻¹y − ½ log det(K+σ₀²I) − (t/2) log 2π` for a given Gram.
pub fn log_marginal_likelihood_from_gram<T: Real>(k: &DMatrix<T>, y: &[T], noise_variance: T) -> Result<T> {
    if k.nrows() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: k.nrows(),
            got: y.len(),
        });
    }
    let (ch, _) = factorize(k, noise_variance)?;
    let yv = DVector::from_column_slice(y);
    let alpha = ch.solve(&yv);
    let half = T::lit(0.5);
    let log_det_half = ch.l_dirty().diagonal().iter().fold(T::zero(), |acc, d| acc + d.ln());
    let t = T::from_usize_lossy(y.len());
    Ok(-half * yv.dot(&alpha) - log_det_half - half * t * T::two_pi().ln())
}

/// Log marginal likelihood of `data` under `kernel`.
pub fn log_marginal_likelihood<T: Real>(kernel: &GpKernel<T>, data: &Dataset<T>) -> Result<T> {
    let k = kernel.gram(&data.x)?;
    log_marginal_likelihood_from_gram(&k, &data.y, data.noise_variance)
}

/// GP posterior conditioned on a dataset.
#[derive(Clone, Debug)]
pub struct Posterior<T: Real> {
    kernel: GpKernel<T>,
    x: Vec<Vec<T>>,
    chol: Cholesky<T, Dyn>,
    alpha: DVector<T>,
    jitter: T,
}

/// Conditions the GP: mean `k(x,D)(K+σ₀²I)⁻¹y`, covariance
/// `k(x,x') − k(x,D)(K+σ₀²I)⁻¹k(D,x')`.
pub fn fit_posterior<T: Real>(kernel: GpKernel<T>, data: &Dataset<T>) -> Result<Posterior<T>> {
    if data.is_empty() {
        return Err(Error::InvalidParameter("posterior needs at least one observation".into()));
    }
    if let GpKernel::Projected(p) = &kernel {
        if p.design() != data.x.as_slice() {
            return Err(Error::InvalidParameter(
                "projected kernel must be built on exactly the observed inputs".into(),
            ));
        }
    }
    let k = kernel.gram(&data.x)?;
    let (chol, jitter) = factorize(&k, data.noise_variance)?;
    let alpha = chol.solve(&DVector::from_column_slice(&data.y));
    Ok(Posterior {
        kernel,
        x: data.x.clone(),
        chol,
        alpha,
        jitter,
    })
}

impl<T: Real> Posterior<T> {
    pub fn kernel(&self) -> &GpKernel<T> {
        &self.kernel
    }

    pub fn jitter(&self) -> T {
        self.jitter
    }

    pub fn inputs(&self) -> &[Vec<T>] {
        &self.x
    }

    /// `k(D, q)` and `k(q, q)`.
    fn column(&self, q: &[T]) -> Result<(DVector<T>, T)> {
        match &self.kernel {
            GpKernel::Direct(spec) => {
                let mut col = DVector::zeros(self.x.len());
                for (i, xi) in self.x.iter().enumerate() {
                    col[i] = spec.eval(xi, q)?;
                }
                Ok((col, spec.eval(q, q)?))
            }
            GpKernel::Projected(p) => {
                let phi = p.features(q)?;
                let col = p.design_features().tr_mul(&phi);
                Ok((col, phi.norm_squared()))
            }
        }
    }

    /// Posterior mean and variance at one point. The variance may be
    /// marginally negative from roundoff; clamp before taking roots.
    pub fn predict(&self, q: &[T]) -> Result<(T, T)> {
        let (col, prior) = self.column(q)?;
        let mean = col.dot(&self.alpha);
        let v = self
            .chol
            .l_dirty()
            .solve_lower_triangular(&col)
            .expect("nonsingular factor");
        Ok((mean, prior - v.norm_squared()))
    }

    pub fn mean(&self, q: &[T]) -> Result<T> {
        let (col, _) = self.column(q)?;
        Ok(col.dot(&self.alpha))
    }

    /// Mean vector and full covariance matrix for a batch of queries.
    pub fn predict_batch(&self, queries: &[Vec<T>]) -> Result<(DVector<T>, DMatrix<T>)> {
        let m = queries.len();
        let n = self.x.len();
        let mut cross = DMatrix::zeros(n, m);
        for (j, q) in queries.iter().enumerate() {
            let (col, _) = self.column(q)?;
            cross.set_column(j, &col);
        }
        let prior = self.kernel.gram(queries)?;
        let means = cross.tr_mul(&self.alpha);
        let v = self
            .chol
            .l_dirty()
            .solve_lower_triangular(&cross)
            .expect("nonsingular factor");
        let cov = prior - v.tr_mul(&v);
        Ok((means, cov))
    }
}

/// Signal variance, lengthscale and observation noise variance.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Hyperparams<T> {
    pub signal_variance: T,
    pub lengthscale: T,
    pub noise_variance: T,
}

impl<T: Real> Hyperparams<T> {
    fn to_log(self) -> [f64; 3] {
        [
            self.signal_variance.as_f64().ln(),
            self.lengthscale.as_f64().ln(),
            self.noise_variance.as_f64().ln(),
        ]
    }

    fn from_log(theta: &[f64; 3]) -> Self {
        Self {
            signal_variance: T::lit(theta[0].exp()),
            lengthscale: T::lit(theta[1].exp()),
            noise_variance: T::lit(theta[2].exp()),
        }
    }
}

#[derive(Clone, Debug)]
pub struct FitOptions<T> {
    /// Number of ascent restarts (the first starts from `init` when given).
    pub restarts: usize,
    /// Maximum ascent iterations per restart.
    pub max_iters: usize,
    /// Diagonal length of the search box; scales the lengthscale bounds.
    pub domain_diagonal: T,
    pub init: Option<Hyperparams<T>>,
    pub seed: u64,
}

impl<T: Real> FitOptions<T> {
    pub fn new(domain_diagonal: T) -> Self {
        Self {
            restarts: 4,
            max_iters: 100,
            domain_diagonal,
            init: None,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct HyperFit<T> {
    pub hyperparams: Hyperparams<T>,
    pub log_likelihood: T,
    /// Set when no restart produced a finite likelihood.
    pub warning: Option<String>,
}

/// Log-space box for `(λ, l, σ₀²)`.
#[derive(Clone, Copy, Debug)]
pub struct HyperBounds {
    pub lower: [f64; 3],
    pub upper: [f64; 3],
}

impl HyperBounds {
    pub fn new(y_variance: f64, domain_diagonal: f64) -> Self {
        let v = if y_variance > 0.0 && y_variance.is_finite() { y_variance } else { 1.0 };
        Self {
            lower: [(1e-4 * v).ln(), (1e-3 * domain_diagonal).ln(), (1e-8 * v).ln()],
            upper: [(1e4 * v).ln(), (10.0 * domain_diagonal).ln(), v.ln()],
        }
    }

    fn clamp(&self, theta: &mut [f64; 3]) {
        for i in 0..3 {
            theta[i] = theta[i].clamp(self.lower[i], self.upper[i]);
        }
    }
}

/// Log marginal likelihood as a function of log-hyperparameters on a fixed
/// dataset. Gram matrices are rebuilt from cached pair geometry; for the
/// `Plus` mode the max-kernel Gram is re-projected at every distinct
/// lengthscale (the projection scales linearly in `λ`).
pub struct LikelihoodSurface<'a, T: Real> {
    spec: KernelSpec<T>,
    geometry: GramGeometry<T>,
    y: &'a [T],
    cached: Option<(f64, DMatrix<T>)>,
}

impl<'a, T: Real> LikelihoodSurface<'a, T> {
    pub fn new(family: Family, invariance: Invariance, data: &'a Dataset<T>) -> Result<Self> {
        let spec = KernelSpec::new(family, T::one(), T::one(), invariance)?;
        let geometry = GramGeometry::new(&spec, &data.x)?;
        Ok(Self {
            spec,
            geometry,
            y: &data.y,
            cached: None,
        })
    }

    /// Unit-variance Gram at lengthscale `exp(log_l)`; on-sample surrogate
    /// Gram for the `Plus` mode.
    fn unit_gram(&mut self, log_l: f64) -> Result<&DMatrix<T>> {
        let hit = matches!(&self.cached, Some((l, _)) if *l == log_l);
        if !hit {
            let spec = self.spec.with_hyperparams(T::lit(log_l.exp()), T::one())?;
            let mut k = self.geometry.gram(&spec);
            if spec.mode() == Mode::Plus {
                k = truncated_projection(&k)?;
            }
            self.cached = Some((log_l, k));
        }
        Ok(&self.cached.as_ref().unwrap().1)
    }

    pub fn value(&mut self, theta: &[f64; 3]) -> Result<f64> {
        let lambda = T::lit(theta[0].exp());
        let noise = T::lit(theta[2].exp());
        let y = self.y;
        let k = self.unit_gram(theta[1])? * lambda;
        Ok(log_marginal_likelihood_from_gram(&k, y, noise)?.as_f64())
    }

    fn value_or_neg_inf(&mut self, theta: &[f64; 3]) -> f64 {
        match self.value(theta) {
            Ok(v) if v.is_finite() => v,
            _ => f64::NEG_INFINITY,
        }
    }

    /// Central finite-difference gradient in log-parameters.
    pub fn gradient(&mut self, theta: &[f64; 3], step: f64) -> [f64; 3] {
        let mut g = [0.0; 3];
        // Order evaluations so the lengthscale cache is hit for λ and σ₀².
        for i in [0usize, 2, 1] {
            let mut plus = *theta;
            let mut minus = *theta;
            plus[i] += step;
            minus[i] -= step;
            g[i] = (self.value_or_neg_inf(&plus) - self.value_or_neg_inf(&minus)) / (2.0 * step);
        }
        g
    }
}

/// On-sample Gram of the Nyström surrogate: `K₊` with eigenvalues below the
/// rank tolerance removed.
fn truncated_projection<T: Real>(k: &DMatrix<T>) -> Result<DMatrix<T>> {
    let p = psd_project(k)?;
    let threshold = p.max_clipped_eigval() * T::lit(RANK_TOL);
    let mut vals = p.clipped_eigvals.clone();
    for v in vals.iter_mut() {
        if !(*v > threshold) {
            *v = T::zero();
        }
    }
    let mut out = &p.eigvecs * DMatrix::from_diagonal(&vals) * p.eigvecs.transpose();
    let n = out.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = (out[(i, j)] + out[(j, i)]) * T::lit(0.5);
            out[(i, j)] = v;
            out[(j, i)] = v;
        }
    }
    Ok(out)
}

fn sample_variance<T: Real>(y: &[T]) -> f64 {
    let n = y.len() as f64;
    if y.len() < 2 {
        return 0.0;
    }
    let mean = y.iter().map(|v| v.as_f64()).sum::<f64>() / n;
    y.iter().map(|v| (v.as_f64() - mean).powi(2)).sum::<f64>() / (n - 1.0)
}

/// Maximizes the log marginal likelihood over log-parameterized
/// `(λ, l, σ₀²)` by multi-start backtracking ascent with finite-difference
/// gradients. Restarts run sequentially; ties go to the lowest restart index.
pub fn fit_hyperparams<T: Real>(
    data: &Dataset<T>,
    family: Family,
    invariance: Invariance,
    options: &FitOptions<T>,
) -> Result<HyperFit<T>> {
    if data.len() < 2 {
        return Err(Error::InvalidParameter("hyperparameter fitting needs t ≥ 2".into()));
    }
    let bounds = HyperBounds::new(sample_variance(&data.y), options.domain_diagonal.as_f64());
    let mut surface = LikelihoodSurface::new(family, invariance, data)?;
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);

    let mut best: Option<([f64; 3], f64)> = None;
    for restart in 0..options.restarts.max(1) {
        let mut start = [0.0; 3];
        match (restart, options.init) {
            (0, Some(init)) => start = init.to_log(),
            (0, None) => {
                for (i, s) in start.iter_mut().enumerate() {
                    *s = 0.5 * (bounds.lower[i] + bounds.upper[i]);
                }
                // Favour low noise and a moderate lengthscale for the default start.
                start[1] = bounds.lower[1] + 0.6 * (bounds.upper[1] - bounds.lower[1]);
                start[2] = bounds.lower[2] + 0.5 * (bounds.upper[2] - bounds.lower[2]);
            }
            _ => {
                for (i, s) in start.iter_mut().enumerate() {
                    *s = rng.random_range(bounds.lower[i]..=bounds.upper[i]);
                }
            }
        }
        bounds.clamp(&mut start);
        let (theta, value) = ascend(&mut surface, start, &bounds, options.max_iters);
        if value.is_finite() && best.is_none_or(|(_, b)| value > b) {
            best = Some((theta, value));
        }
    }

    Ok(match best {
        Some((theta, value)) => HyperFit {
            hyperparams: Hyperparams::from_log(&theta),
            log_likelihood: T::lit(value),
            warning: None,
        },
        None => {
            let mut theta = [0.0; 3];
            for (i, t) in theta.iter_mut().enumerate() {
                *t = bounds.upper[i].min(0.5 * (bounds.lower[i] + bounds.upper[i]));
            }
            theta[2] = bounds.upper[2];
            HyperFit {
                hyperparams: Hyperparams::from_log(&theta),
                log_likelihood: T::lit(f64::NEG_INFINITY),
                warning: Some("all hyperparameter restarts failed; using fallback".into()),
            }
        }
    })
}

/// Backtracking line-search ascent along a BFGS-preconditioned direction.
/// Coordinates pinned at a bound with the gradient pointing outward are
/// frozen for the step; the curvature estimate resets when a step fails.
fn ascend<T: Real>(
    surface: &mut LikelihoodSurface<'_, T>,
    start: [f64; 3],
    bounds: &HyperBounds,
    max_iters: usize,
) -> ([f64; 3], f64) {
    const MAX_STEP: f64 = 2.0;
    let mut theta = start;
    let mut value = surface.value_or_neg_inf(&theta);
    if !value.is_finite() {
        return (theta, value);
    }
    let identity = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
    // Inverse Hessian estimate of the negated objective.
    let mut h = identity;
    let mut g = surface.gradient(&theta, 1e-4);
    for _ in 0..max_iters {
        if g.iter().any(|v| !v.is_finite()) {
            break;
        }
        let mut free = [true; 3];
        for i in 0..3 {
            if (theta[i] <= bounds.lower[i] && g[i] < 0.0) || (theta[i] >= bounds.upper[i] && g[i] > 0.0) {
                free[i] = false;
            }
        }
        let gf: Vec<f64> = (0..3).map(|i| if free[i] { g[i] } else { 0.0 }).collect();
        if gf.iter().fold(0.0f64, |m, v| m.max(v.abs())) < 1e-6 {
            break;
        }
        let mut accepted = None;
        for attempt in 0..2 {
            let mut dir = [0.0; 3];
            for i in 0..3 {
                if free[i] {
                    dir[i] = (0..3).map(|j| h[i][j] * gf[j]).sum();
                }
            }
            let slope: f64 = (0..3).map(|i| dir[i] * gf[i]).sum();
            if !(slope > 0.0) {
                h = identity;
                continue;
            }
            let len = dir.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let mut s = if len > MAX_STEP { MAX_STEP / len } else { 1.0 };
            while s * len > 1e-7 {
                let mut cand = [theta[0] + s * dir[0], theta[1] + s * dir[1], theta[2] + s * dir[2]];
                bounds.clamp(&mut cand);
                let v = surface.value_or_neg_inf(&cand);
                if v > value + 1e-4 * s * slope {
                    accepted = Some((cand, v));
                    break;
                }
                s *= 0.5;
            }
            if accepted.is_some() || attempt == 1 {
                break;
            }
            h = identity;
        }
        let Some((cand, v)) = accepted else { break };
        let gain = v - value;
        let g_new = surface.gradient(&cand, 1e-4);
        let step = [cand[0] - theta[0], cand[1] - theta[1], cand[2] - theta[2]];
        let yk = [g[0] - g_new[0], g[1] - g_new[1], g[2] - g_new[2]];
        let sy: f64 = (0..3).map(|i| step[i] * yk[i]).sum();
        if sy > 1e-12 && g_new.iter().all(|v| v.is_finite()) {
            h = bfgs_update(&h, &step, &yk, sy);
        }
        theta = cand;
        value = v;
        g = g_new;
        if gain < 1e-9 * (1.0 + value.abs()) {
            break;
        }
    }
    (theta, value)
}

/// `H ← (I − ρsyᵀ) H (I − ρysᵀ) + ρssᵀ` with `ρ = 1/sᵀy`.
fn bfgs_update(h: &[[f64; 3]; 3], s: &[f64; 3], y: &[f64; 3], sy: f64) -> [[f64; 3]; 3] {
    let rho = 1.0 / sy;
    let mut left = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            left[i][j] = if i == j { 1.0 } else { 0.0 } - rho * s[i] * y[j];
        }
    }
    let mut tmp = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            tmp[i][j] = (0..3).map(|k| left[i][k] * h[k][j]).sum();
        }
    }
    let mut out = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = (0..3).map(|k| tmp[i][k] * left[j][k]).sum::<f64>() + rho * s[i] * s[j];
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groups::GroupAction;
    use rand_distr::{Distribution, StandardNormal};

    fn rbf(l: f64, lambda: f64) -> KernelSpec<f64> {
        KernelSpec::base(Family::Rbf, l, lambda).unwrap()
    }

    #[test]
    fn interpolates_single_point_without_noise() {
        let data = Dataset::new(vec![vec![0.3]], vec![1.7], 0.0).unwrap();
        let post = fit_posterior(GpKernel::Direct(rbf(0.5, 1.0)), &data).unwrap();
        let (m, v) = post.predict(&[0.3]).unwrap();
        assert!((m - 1.7).abs() < 1e-8);
        assert!(v.abs() < 1e-8);
    }

    #[test]
    fn huge_noise_reverts_to_prior_mean() {
        let data = Dataset::new(vec![vec![0.0], vec![1.0]], vec![3.0, -2.0], 1e12).unwrap();
        let post = fit_posterior(GpKernel::Direct(rbf(0.5, 1.0)), &data).unwrap();
        assert!(post.mean(&[0.5]).unwrap().abs() < 1e-9);
    }

    #[test]
    fn scalar_likelihood() {
        let (lambda, noise) = (1.3, 0.2);
        let data = Dataset::new(vec![vec![0.0]], vec![0.0], noise).unwrap();
        let got = log_marginal_likelihood(&GpKernel::Direct(rbf(1.0, lambda)), &data).unwrap();
        let want = -0.5 * (lambda + noise).ln() - 0.5 * (2.0 * std::f64::consts::PI).ln();
        assert!((got - want).abs() < 1e-9);
    }

    #[test]
    fn quadratic_term_scales_with_y() {
        let x = vec![vec![0.0], vec![0.4], vec![1.1]];
        let y = vec![0.5, -1.0, 2.0];
        let k = GpKernel::Direct(rbf(0.6, 1.0));
        let lml = |c: f64| {
            let d = Dataset::new(x.clone(), y.iter().map(|v| v * c).collect(), 0.1).unwrap();
            log_marginal_likelihood(&k, &d).unwrap()
        };
        let (l0, l1, l2) = (lml(0.0), lml(1.0), lml(2.0));
        assert!(((l2 - l0) - 4.0 * (l1 - l0)).abs() < 1e-9);
    }

    #[test]
    fn projected_kernel_must_match_inputs() {
        let g = GroupAction::sign_flips(1).unwrap();
        let spec = KernelSpec::new(Family::Rbf, 0.5, 1.0, Invariance::Plus(g)).unwrap();
        let kernel = GpKernel::build(&spec, &[vec![0.1], vec![0.7]]).unwrap();
        let data = Dataset::new(vec![vec![0.1], vec![0.9]], vec![0.0, 1.0], 0.01).unwrap();
        assert!(fit_posterior(kernel, &data).is_err());
    }

    #[test]
    fn singular_system_is_reported() {
        let k = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        match factorize(&k, 0.0) {
            Err(Error::SingularSystem { attempts, condition, .. }) => {
                assert_eq!(attempts, JITTER_ATTEMPTS);
                assert!((condition - 3.0).abs() < 1e-9);
            }
            other => panic!("expected singular system, got {other:?}"),
        }
    }

    #[test]
    fn finite_difference_gradient_is_step_consistent() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x: Vec<Vec<f64>> = (0..8).map(|_| vec![rng.random_range(-1.0..1.0)]).collect();
        let y: Vec<f64> = x.iter().map(|p| (3.0 * p[0]).sin()).collect();
        let data = Dataset::new(x, y, 0.0).unwrap();
        let g = GroupAction::sign_flips(1).unwrap();
        for inv in [Invariance::Base, Invariance::Avg(g.clone()), Invariance::Plus(g)] {
            let mut s = LikelihoodSurface::new(Family::Matern52, inv, &data).unwrap();
            let theta = [0.2f64.ln(), 0.5f64.ln(), 0.01f64.ln()];
            let g1 = s.gradient(&theta, 1e-3);
            let g2 = s.gradient(&theta, 5e-4);
            for i in 0..3 {
                let rel = (g1[i] - g2[i]).abs() / g2[i].abs().max(1e-3);
                assert!(rel < 1e-4, "component {i}: {} vs {}", g1[i], g2[i]);
            }
        }
    }

    #[test]
    fn zero_observations_shrink_signal_variance() {
        let x: Vec<Vec<f64>> = (0..6).map(|i| vec![i as f64 / 5.0]).collect();
        let data = Dataset::new(x, vec![0.0; 6], 0.0).unwrap();
        let fit = fit_hyperparams(&data, Family::Rbf, Invariance::Base, &FitOptions::new(1.0)).unwrap();
        assert!(fit.hyperparams.signal_variance < 1e-3, "{:?}", fit.hyperparams);
    }

    #[test]
    fn recovers_lengthscale_of_a_prior_draw() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let x: Vec<Vec<f64>> = (0..30).map(|_| vec![rng.random_range(0.0..1.0)]).collect();
        let truth = rbf(0.3, 1.0);
        let k = truth.gram(&x).unwrap() + DMatrix::identity(30, 30) * 1e-8;
        let l = k.cholesky().unwrap().unpack();
        let z = DVector::from_fn(30, |_, _| StandardNormal.sample(&mut rng));
        let y: Vec<f64> = (l * z).iter().copied().collect();
        let data = Dataset::new(x, y, 0.0).unwrap();
        let fit = fit_hyperparams(&data, Family::Rbf, Invariance::Base, &FitOptions::new(1.0)).unwrap();
        let l = fit.hyperparams.lengthscale;
        assert!((0.15..=0.6).contains(&l), "lengthscale {l}");
    }

    #[test]
    fn noiseless_linear_data_fits_small_noise() {
        let x: Vec<Vec<f64>> = (0..12).map(|i| vec![i as f64 / 11.0]).collect();
        let y: Vec<f64> = x.iter().map(|p| 2.0 * p[0] - 1.0).collect();
        let data = Dataset::new(x, y, 0.0).unwrap();
        let fit = fit_hyperparams(&data, Family::Matern52, Invariance::Base, &FitOptions::new(1.0)).unwrap();
        let h = fit.hyperparams;
        assert!(h.noise_variance <= 1e-2 * h.signal_variance, "{h:?}");
    }
}
