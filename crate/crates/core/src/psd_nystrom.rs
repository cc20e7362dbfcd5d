//! PSD projection of the max-kernel Gram matrix and its Nyström extension.
//!
//! One symmetric eigendecomposition of `K = k_max(D, D)` gives both the
//! clipped matrix `K₊ = Q·max(0, Λ)·Qᵀ` and the pseudo-inverse factor used by
//! the feature map `φ(x) = Λ_r^{−1/2} Q_rᵀ k_max(D, x)`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::kernels::{Invariance, KernelSpec};
use crate::scalar::Real;

/// Eigenvalues below `RANK_TOL · λ_max` are dropped from the pseudo-inverse.
pub const RANK_TOL: f64 = 1e-10;

/// Eigensystem of a symmetric matrix with negative eigenvalues clipped to zero.
///
/// Eigenpairs are sorted by decreasing raw eigenvalue.
#[derive(Clone, Debug)]
pub struct PsdProjection<T: Real> {
    pub eigvecs: DMatrix<T>,
    pub raw_eigvals: DVector<T>,
    pub clipped_eigvals: DVector<T>,
}

impl<T: Real> PsdProjection<T> {
    pub fn dim(&self) -> usize {
        self.raw_eigvals.len()
    }

    /// `Q·diag(clipped)·Qᵀ`.
    pub fn reconstruct(&self) -> DMatrix<T> {
        let scaled = &self.eigvecs * DMatrix::from_diagonal(&self.clipped_eigvals);
        let mut k = scaled * self.eigvecs.transpose();
        symmetrize(&mut k);
        k
    }

    pub fn min_raw_eigval(&self) -> T {
        self.raw_eigvals.iter().copied().fold(T::max_value().unwrap(), |a, b| if b < a { b } else { a })
    }

    pub fn max_clipped_eigval(&self) -> T {
        self.clipped_eigvals.iter().copied().fold(T::zero(), |a, b| if b > a { b } else { a })
    }

    /// True when no eigenvalue was below `−tol·max(1, λ_max)`, i.e. the
    /// input was already PSD and the projection returns it unchanged.
    pub fn is_identity(&self, tol: T) -> bool {
        let scale = self.max_clipped_eigval().max(T::one());
        self.min_raw_eigval() >= -tol * scale
    }
}

fn symmetrize<T: Real>(k: &mut DMatrix<T>) {
    let n = k.nrows();
    let half = T::lit(0.5);
    for i in 0..n {
        for j in (i + 1)..n {
            let v = (k[(i, j)] + k[(j, i)]) * half;
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
}

/// Frobenius-nearest PSD matrix to the symmetric part of `k`, as an eigensystem.
pub fn psd_project<T: Real>(k: &DMatrix<T>) -> Result<PsdProjection<T>> {
    if k.nrows() != k.ncols() {
        return Err(Error::DimensionMismatch {
            expected: k.nrows(),
            got: k.ncols(),
        });
    }
    let n = k.nrows();
    let mut sym = k.clone();
    symmetrize(&mut sym);
    let stats_err = |m: &DMatrix<T>| Error::Eigen {
        n,
        max_abs: m.iter().map(|v| v.abs().as_f64()).fold(0.0, f64::max),
        non_finite: m.iter().filter(|v| !v.is_finite()).count(),
    };
    if sym.iter().any(|v| !v.is_finite()) {
        return Err(stats_err(&sym));
    }
    let eig = SymmetricEigen::try_new(sym.clone(), T::default_epsilon(), 10_000)
        .ok_or_else(|| stats_err(&sym))?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let mut eigvecs = DMatrix::zeros(n, n);
    let mut raw = DVector::zeros(n);
    for (dst, &src) in order.iter().enumerate() {
        eigvecs.set_column(dst, &eig.eigenvectors.column(src));
        raw[dst] = eig.eigenvalues[src];
    }
    let clipped = raw.map(|v: T| if v > T::zero() { v } else { T::zero() });
    Ok(PsdProjection {
        eigvecs,
        raw_eigvals: raw,
        clipped_eigvals: clipped,
    })
}

/// Nyström surrogate `k₊(x, x') = k_max(x, D)·K₊^†·k_max(D, x')` on a frozen design.
#[derive(Clone, Debug)]
pub struct ProjectedKernel<T: Real> {
    spec: KernelSpec<T>,
    design: Vec<Vec<T>>,
    projection: PsdProjection<T>,
    rank: usize,
    /// `Λ_r^{−1/2} Q_rᵀ`, shape `r × n`.
    pinv_sqrt_factor: DMatrix<T>,
    /// Features of the design points, shape `r × n`.
    design_features: DMatrix<T>,
}

impl<T: Real> ProjectedKernel<T> {
    /// Builds the surrogate from a spec in `Max` or `Plus` mode.
    pub fn build(spec: &KernelSpec<T>, design: &[Vec<T>]) -> Result<Self> {
        let spec = max_spec(spec)?;
        let gram = spec.gram(design)?;
        Self::from_gram(&spec, design, &gram)
    }

    /// Builds the surrogate from an already assembled `k_max(D, D)`.
    pub fn from_gram(spec: &KernelSpec<T>, design: &[Vec<T>], gram: &DMatrix<T>) -> Result<Self> {
        let spec = max_spec(spec)?;
        if design.is_empty() {
            return Err(Error::InvalidParameter("design set must be nonempty".into()));
        }
        if gram.nrows() != design.len() {
            return Err(Error::DimensionMismatch {
                expected: design.len(),
                got: gram.nrows(),
            });
        }
        let projection = psd_project(gram)?;
        let (rank, pinv_sqrt_factor) = pinv_sqrt(&projection);
        let design_features = &pinv_sqrt_factor * gram;
        Ok(Self {
            spec,
            design: design.to_vec(),
            projection,
            rank,
            pinv_sqrt_factor,
            design_features,
        })
    }

    pub fn spec(&self) -> &KernelSpec<T> {
        &self.spec
    }

    pub fn design(&self) -> &[Vec<T>] {
        &self.design
    }

    pub fn projection(&self) -> &PsdProjection<T> {
        &self.projection
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn pinv_sqrt_factor(&self) -> &DMatrix<T> {
        &self.pinv_sqrt_factor
    }

    /// `K₊` reconstructed from the clipped eigensystem.
    pub fn k_plus_matrix(&self) -> DMatrix<T> {
        self.projection.reconstruct()
    }

    /// `k_max(D, x)`.
    pub fn max_column(&self, x: &[T]) -> Result<DVector<T>> {
        let mut col = DVector::zeros(self.design.len());
        for (i, d) in self.design.iter().enumerate() {
            col[i] = self.spec.eval(d, x)?;
        }
        Ok(col)
    }

    /// `φ(x) = K₊^{†/2} k_max(D, x)`, length `rank`.
    pub fn features(&self, x: &[T]) -> Result<DVector<T>> {
        Ok(&self.pinv_sqrt_factor * self.max_column(x)?)
    }

    /// Design-point features as columns, shape `rank × n`.
    pub fn design_features(&self) -> &DMatrix<T> {
        &self.design_features
    }

    /// `k₊(x, x') = φ(x)·φ(x')`.
    pub fn eval(&self, x: &[T], y: &[T]) -> Result<T> {
        Ok(self.features(x)?.dot(&self.features(y)?))
    }

    /// Gram matrix of the design under the surrogate, `Φ_Dᵀ Φ_D`.
    pub fn design_gram(&self) -> DMatrix<T> {
        let mut k = self.design_features.transpose() * &self.design_features;
        symmetrize(&mut k);
        k
    }

    /// Batched evaluation for a query set.
    pub fn cross_gram(&self, queries: &[Vec<T>]) -> Result<CrossGram<T>> {
        let r = self.rank;
        let mut features = DMatrix::zeros(r, queries.len());
        for (j, q) in queries.iter().enumerate() {
            features.set_column(j, &self.features(q)?);
        }
        let cross = features.transpose() * &self.design_features;
        let mut query_gram = features.transpose() * &features;
        symmetrize(&mut query_gram);
        Ok(CrossGram {
            features,
            cross,
            query_gram,
        })
    }
}

/// Query-side blocks of the surrogate Gram matrix.
#[derive(Clone, Debug)]
pub struct CrossGram<T: Real> {
    /// Query features as columns, `rank × m`.
    pub features: DMatrix<T>,
    /// `k₊(query_i, design_j)`, `m × n`.
    pub cross: DMatrix<T>,
    /// `k₊(query_i, query_j)`, `m × m`, PSD by construction.
    pub query_gram: DMatrix<T>,
}

fn max_spec<T: Real>(spec: &KernelSpec<T>) -> Result<KernelSpec<T>> {
    match &spec.invariance {
        Invariance::Max(g) | Invariance::Plus(g) => Ok(spec.with_invariance(Invariance::Max(g.clone()))),
        other => Err(Error::InvalidParameter(format!(
            "projection needs a max or plus kernel, got {}",
            other.mode()
        ))),
    }
}

fn pinv_sqrt<T: Real>(p: &PsdProjection<T>) -> (usize, DMatrix<T>) {
    let n = p.dim();
    let threshold = p.max_clipped_eigval() * T::lit(RANK_TOL);
    let keep: Vec<usize> = (0..n)
        .filter(|&i| p.clipped_eigvals[i] > threshold && p.clipped_eigvals[i] > T::zero())
        .collect();
    let mut factor = DMatrix::zeros(keep.len(), n);
    for (row, &i) in keep.iter().enumerate() {
        let s = T::one() / p.clipped_eigvals[i].sqrt();
        for c in 0..n {
            factor[(row, c)] = p.eigvecs[(c, i)] * s;
        }
    }
    (keep.len(), factor)
}
