//! Symmetry groups acting on the search box.
//!
//! Every finite group used here is a subgroup of the signed permutations of
//! coordinates, so all finite elements share one representation
//! ([`SignedPerm`]) and one application path. Continuous groups (planar
//! rotations and scalings) are handled through canonical invariant features.

use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, OnceLock};

use rand::Rng;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// A signed coordinate permutation: `(g·x)_i = s_i · x_{perm[i]}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SignedPerm {
    perm: Vec<usize>,
    flips: Vec<bool>,
}

impl SignedPerm {
    pub fn new(perm: Vec<usize>, flips: Vec<bool>) -> Result<Self> {
        if perm.len() != flips.len() {
            return Err(Error::DimensionMismatch {
                expected: perm.len(),
                got: flips.len(),
            });
        }
        let mut seen = vec![false; perm.len()];
        for &p in &perm {
            if p >= perm.len() || seen[p] {
                return Err(Error::InvalidParameter(format!(
                    "{perm:?} is not a permutation"
                )));
            }
            seen[p] = true;
        }
        Ok(Self { perm, flips })
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            perm: (0..dim).collect(),
            flips: vec![false; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.perm.len()
    }

    pub fn perm(&self) -> &[usize] {
        &self.perm
    }

    pub fn flips(&self) -> &[bool] {
        &self.flips
    }

    pub fn is_identity(&self) -> bool {
        self.perm.iter().enumerate().all(|(i, &p)| i == p) && self.flips.iter().all(|f| !f)
    }

    /// Writes `g·x` into `out` without allocating. Lengths are not checked.
    #[inline]
    pub fn apply_into<T: Real>(&self, x: &[T], out: &mut [T]) {
        for ((o, &p), &f) in out.iter_mut().zip(&self.perm).zip(&self.flips) {
            *o = if f { -x[p] } else { x[p] };
        }
    }

    /// `‖x − g·y‖²` without materializing `g·y`.
    #[inline]
    pub fn sq_distance_to_image<T: Real>(&self, x: &[T], y: &[T]) -> T {
        let mut acc = T::zero();
        for ((&xi, &p), &f) in x.iter().zip(&self.perm).zip(&self.flips) {
            let gy = if f { -y[p] } else { y[p] };
            let d = xi - gy;
            acc += d * d;
        }
        acc
    }

    pub fn inverse(&self) -> Self {
        let n = self.dim();
        let mut perm = vec![0; n];
        let mut flips = vec![false; n];
        // (g·x)_i = s_i x_{p(i)}  =>  (g⁻¹·y)_{p(i)} = s_i y_i
        for i in 0..n {
            perm[self.perm[i]] = i;
            flips[self.perm[i]] = self.flips[i];
        }
        Self { perm, flips }
    }

    /// Composition `self ∘ other`, i.e. `(self·(other·x))`.
    pub fn compose(&self, other: &Self) -> Self {
        let n = self.dim();
        let mut perm = vec![0; n];
        let mut flips = vec![false; n];
        for i in 0..n {
            let j = self.perm[i];
            perm[i] = other.perm[j];
            flips[i] = self.flips[i] ^ other.flips[j];
        }
        Self { perm, flips }
    }
}

/// A single group element.
#[derive(Clone, Debug, PartialEq)]
pub enum GroupElement<T> {
    /// Signed permutation of all `d` coordinates.
    PermSignFlip(SignedPerm),
    /// Permutation of `perm.len()` contiguous coordinate blocks of size `block`.
    Permutation { perm: Vec<usize>, block: usize },
    /// Sign flips; `true` negates the coordinate.
    SignFlip(Vec<bool>),
    /// Planar rotation by an angle in `[0, 2π)`.
    Rotation2D(T),
    /// Planar scaling by a positive factor.
    Scale2D(T),
}

impl<T: Real> GroupElement<T> {
    pub fn rotation(angle: T) -> Self {
        let two_pi = T::two_pi();
        let mut a = angle % two_pi;
        if a < T::zero() {
            a += two_pi;
        }
        GroupElement::Rotation2D(a)
    }

    pub fn scale(factor: T) -> Result<Self> {
        if factor > T::zero() {
            Ok(GroupElement::Scale2D(factor))
        } else {
            Err(Error::InvalidParameter(format!(
                "scale factor must be positive, got {factor:?}"
            )))
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            GroupElement::PermSignFlip(g) => g.dim(),
            GroupElement::Permutation { perm, block } => perm.len() * block,
            GroupElement::SignFlip(f) => f.len(),
            GroupElement::Rotation2D(_) | GroupElement::Scale2D(_) => 2,
        }
    }

    /// The element as a signed coordinate permutation, when it is one.
    pub fn as_signed_perm(&self) -> Option<SignedPerm> {
        match self {
            GroupElement::PermSignFlip(g) => Some(g.clone()),
            GroupElement::SignFlip(flips) => Some(SignedPerm {
                perm: (0..flips.len()).collect(),
                flips: flips.clone(),
            }),
            GroupElement::Permutation { perm, block } => {
                let mut coords = Vec::with_capacity(perm.len() * block);
                for &p in perm {
                    coords.extend((0..*block).map(|k| p * block + k));
                }
                let n = coords.len();
                Some(SignedPerm {
                    perm: coords,
                    flips: vec![false; n],
                })
            }
            GroupElement::Rotation2D(_) | GroupElement::Scale2D(_) => None,
        }
    }

    /// Applies the element to `x`.
    pub fn apply(&self, x: &[T]) -> Result<Vec<T>> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        Ok(match self {
            GroupElement::Rotation2D(a) => {
                let (s, c) = (a.sin(), a.cos());
                vec![c * x[0] - s * x[1], s * x[0] + c * x[1]]
            }
            GroupElement::Scale2D(f) => vec![*f * x[0], *f * x[1]],
            other => {
                let g = other.as_signed_perm().expect("finite element");
                let mut out = vec![T::zero(); x.len()];
                g.apply_into(x, &mut out);
                out
            }
        })
    }
}

/// Applies `g` to `x`.
pub fn apply<T: Real>(g: &GroupElement<T>, x: &[T]) -> Result<Vec<T>> {
    g.apply(x)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Cardinality {
    Finite(usize),
    Infinite,
}

impl fmt::Display for Cardinality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cardinality::Finite(n) => write!(f, "{n}"),
            Cardinality::Infinite => write!(f, "inf"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum GroupKind {
    /// Signed permutations of `dim` coordinates, order `2^d·d!`.
    Hyperoctahedral { dim: usize },
    /// Independent sign flips of `dim` coordinates, order `2^d`.
    SignFlips { dim: usize },
    /// Permutations of `blocks` coordinate blocks of size `block_size`, order `blocks!`.
    Permutations { blocks: usize, block_size: usize },
    /// Rotations of the plane about the origin.
    PlanarRotations,
    /// Positive rescalings of the plane.
    Scalings,
}

/// Config-level key of a group family.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum GroupKey {
    Hyperoctahedral,
    SignFlips,
    Permutations,
    Rotations2d,
    Scalings2d,
}

impl GroupKey {
    pub fn as_str(self) -> &'static str {
        match self {
            GroupKey::Hyperoctahedral => "hyperoctahedral",
            GroupKey::SignFlips => "signflips",
            GroupKey::Permutations => "permutations",
            GroupKey::Rotations2d => "rotations2d",
            GroupKey::Scalings2d => "scalings2d",
        }
    }
}

impl FromStr for GroupKey {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "hyperoctahedral" => GroupKey::Hyperoctahedral,
            "signflips" => GroupKey::SignFlips,
            "permutations" => GroupKey::Permutations,
            "rotations2d" => GroupKey::Rotations2d,
            "scalings2d" => GroupKey::Scalings2d,
            other => {
                return Err(Error::Unknown {
                    kind: "group",
                    name: other.to_string(),
                })
            }
        })
    }
}

impl fmt::Display for GroupKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A group acting on `ℝ^d`. Immutable after construction; finite element
/// lists are materialized on first use and shared between clones.
#[derive(Clone, Debug)]
pub struct GroupAction {
    kind: GroupKind,
    elements: Arc<OnceLock<Arc<[SignedPerm]>>>,
}

impl PartialEq for GroupAction {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
    }
}

impl GroupAction {
    pub fn new(kind: GroupKind) -> Result<Self> {
        match kind {
            GroupKind::Hyperoctahedral { dim } | GroupKind::SignFlips { dim } if dim == 0 => {
                return Err(Error::InvalidParameter("group dimension must be ≥ 1".into()))
            }
            GroupKind::Permutations { blocks, block_size } if blocks == 0 || block_size == 0 => {
                return Err(Error::InvalidParameter(
                    "permutation group needs ≥ 1 block of size ≥ 1".into(),
                ))
            }
            _ => {}
        }
        Ok(Self {
            kind,
            elements: Arc::new(OnceLock::new()),
        })
    }

    pub fn hyperoctahedral(dim: usize) -> Result<Self> {
        Self::new(GroupKind::Hyperoctahedral { dim })
    }

    pub fn sign_flips(dim: usize) -> Result<Self> {
        Self::new(GroupKind::SignFlips { dim })
    }

    pub fn permutations(blocks: usize, block_size: usize) -> Result<Self> {
        Self::new(GroupKind::Permutations { blocks, block_size })
    }

    pub fn planar_rotations() -> Self {
        Self::new(GroupKind::PlanarRotations).expect("valid")
    }

    pub fn scalings() -> Self {
        Self::new(GroupKind::Scalings).expect("valid")
    }

    /// Builds a group from its config key. `dim` is the ambient dimension;
    /// `block_size` is only read for `permutations`.
    pub fn from_key(key: GroupKey, dim: usize, block_size: usize) -> Result<Self> {
        match key {
            GroupKey::Hyperoctahedral => Self::hyperoctahedral(dim),
            GroupKey::SignFlips => Self::sign_flips(dim),
            GroupKey::Permutations => {
                if block_size == 0 || !dim.is_multiple_of(block_size) {
                    return Err(Error::InvalidParameter(format!(
                        "dimension {dim} is not a multiple of block size {block_size}"
                    )));
                }
                Self::permutations(dim / block_size, block_size)
            }
            GroupKey::Rotations2d | GroupKey::Scalings2d => {
                if dim != 2 {
                    return Err(Error::DimensionMismatch {
                        expected: 2,
                        got: dim,
                    });
                }
                Ok(if key == GroupKey::Rotations2d {
                    Self::planar_rotations()
                } else {
                    Self::scalings()
                })
            }
        }
    }

    pub fn kind(&self) -> GroupKind {
        self.kind
    }

    pub fn key(&self) -> GroupKey {
        match self.kind {
            GroupKind::Hyperoctahedral { .. } => GroupKey::Hyperoctahedral,
            GroupKind::SignFlips { .. } => GroupKey::SignFlips,
            GroupKind::Permutations { .. } => GroupKey::Permutations,
            GroupKind::PlanarRotations => GroupKey::Rotations2d,
            GroupKind::Scalings => GroupKey::Scalings2d,
        }
    }

    pub fn dim(&self) -> usize {
        match self.kind {
            GroupKind::Hyperoctahedral { dim } | GroupKind::SignFlips { dim } => dim,
            GroupKind::Permutations { blocks, block_size } => blocks * block_size,
            GroupKind::PlanarRotations | GroupKind::Scalings => 2,
        }
    }

    pub fn cardinality(&self) -> Cardinality {
        match self.kind {
            GroupKind::Hyperoctahedral { dim } => {
                Cardinality::Finite((1usize << dim) * factorial(dim))
            }
            GroupKind::SignFlips { dim } => Cardinality::Finite(1usize << dim),
            GroupKind::Permutations { blocks, .. } => Cardinality::Finite(factorial(blocks)),
            GroupKind::PlanarRotations | GroupKind::Scalings => Cardinality::Infinite,
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self.cardinality(), Cardinality::Finite(_))
    }

    /// True iff every element preserves Euclidean distances.
    pub fn is_isometric(&self) -> bool {
        !matches!(self.kind, GroupKind::Scalings)
    }

    fn check_dim(&self, x: &[impl Sized]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        Ok(())
    }

    /// All elements of a finite group as signed permutations, identity first,
    /// lexicographic over (permutation, sign mask).
    pub fn signed_perms(&self) -> Result<Arc<[SignedPerm]>> {
        if !self.is_finite() {
            return Err(Error::UnsupportedForContinuousGroup(self.to_string()));
        }
        Ok(self
            .elements
            .get_or_init(|| enumerate_signed_perms(self.kind).into())
            .clone())
    }

    /// All elements of a finite group, identity first.
    pub fn elements<T: Real>(&self) -> Result<Vec<GroupElement<T>>> {
        let perms = self.signed_perms()?;
        Ok(match self.kind {
            GroupKind::Hyperoctahedral { .. } => perms
                .iter()
                .cloned()
                .map(GroupElement::PermSignFlip)
                .collect(),
            GroupKind::SignFlips { .. } => perms
                .iter()
                .map(|g| GroupElement::SignFlip(g.flips.clone()))
                .collect(),
            GroupKind::Permutations { block_size, .. } => perms
                .iter()
                .map(|g| GroupElement::Permutation {
                    perm: g.perm.iter().step_by(block_size).map(|&c| c / block_size).collect(),
                    block: block_size,
                })
                .collect(),
            GroupKind::PlanarRotations | GroupKind::Scalings => unreachable!(),
        })
    }

    /// Draws a group element. Rotation angles are uniform on `[0, 2π)`,
    /// scale factors log-uniform on `[0.1, 10]`.
    pub fn sample_element<T: Real, R: Rng + ?Sized>(&self, rng: &mut R) -> GroupElement<T> {
        match self.kind {
            GroupKind::PlanarRotations => {
                GroupElement::rotation(T::lit(rng.random::<f64>() * std::f64::consts::TAU))
            }
            GroupKind::Scalings => {
                let f = (10f64.ln() * (2.0 * rng.random::<f64>() - 1.0)).exp();
                GroupElement::Scale2D(T::lit(f))
            }
            _ => {
                let elems = self.elements::<T>().expect("finite");
                elems[rng.random_range(0..elems.len())].clone()
            }
        }
    }

    /// Orbit-constant feature for continuous groups: the norm for rotations,
    /// the unit ray direction for scalings.
    pub fn canonical_feature<T: Real>(&self, x: &[T]) -> Result<Vec<T>> {
        self.check_dim(x)?;
        match self.kind {
            GroupKind::PlanarRotations => Ok(vec![norm(x)]),
            GroupKind::Scalings => {
                let n = norm(x);
                if n == T::zero() {
                    Ok(vec![T::zero(); x.len()])
                } else {
                    Ok(x.iter().map(|&v| v / n).collect())
                }
            }
            _ => Err(Error::UnsupportedForFiniteGroup(self.to_string())),
        }
    }

    /// `min_{g,g'} ‖g·x − g'·y‖²`.
    ///
    /// Finite groups use `‖g·x − g'·y‖ = ‖x − g⁻¹g'·y‖` so one pass over the
    /// group suffices; sign flips and signed permutations are solved directly
    /// by matching absolute values (sorted, for the hyperoctahedral group).
    /// Rotations reduce to `(‖x‖ − ‖y‖)²`; scalings compare unit rays.
    pub fn orbit_min_sq_distance<T: Real>(&self, x: &[T], y: &[T]) -> Result<T> {
        self.check_dim(x)?;
        self.check_dim(y)?;
        Ok(match self.kind {
            GroupKind::SignFlips { .. } => x
                .iter()
                .zip(y)
                .map(|(&a, &b)| {
                    let d = a.abs() - b.abs();
                    d * d
                })
                .fold(T::zero(), |acc, v| acc + v),
            GroupKind::Hyperoctahedral { .. } => {
                let mut a: Vec<T> = x.iter().map(|v| v.abs()).collect();
                let mut b: Vec<T> = y.iter().map(|v| v.abs()).collect();
                a.sort_by(|p, q| p.partial_cmp(q).unwrap_or(std::cmp::Ordering::Equal));
                b.sort_by(|p, q| p.partial_cmp(q).unwrap_or(std::cmp::Ordering::Equal));
                a.iter()
                    .zip(&b)
                    .map(|(&p, &q)| (p - q) * (p - q))
                    .fold(T::zero(), |acc, v| acc + v)
            }
            GroupKind::Permutations { blocks, block_size } => {
                block_assignment_min(x, y, blocks, block_size, &self.signed_perms()?)
            }
            GroupKind::PlanarRotations => {
                let d = norm(x) - norm(y);
                d * d
            }
            GroupKind::Scalings => {
                let a = self.canonical_feature(x)?;
                let b = self.canonical_feature(y)?;
                sq_dist(&a, &b)
            }
        })
    }

    /// Single pass `min_g ‖x − g·y‖²` over the enumerated elements.
    pub fn orbit_min_sq_distance_single_loop<T: Real>(&self, x: &[T], y: &[T]) -> Result<T> {
        self.check_dim(x)?;
        self.check_dim(y)?;
        let perms = self.signed_perms()?;
        Ok(perms
            .iter()
            .map(|g| g.sq_distance_to_image(x, y))
            .fold(T::max_value().unwrap(), |m, v| if v < m { v } else { m }))
    }

    /// Reference double loop `min_{g,g'} ‖g·x − g'·y‖²`.
    pub fn orbit_min_sq_distance_double_loop<T: Real>(&self, x: &[T], y: &[T]) -> Result<T> {
        self.check_dim(x)?;
        self.check_dim(y)?;
        let perms = self.signed_perms()?;
        let mut gx = vec![T::zero(); x.len()];
        let mut best = T::max_value().unwrap();
        for g in perms.iter() {
            g.apply_into(x, &mut gx);
            for h in perms.iter() {
                let v = h.sq_distance_to_image(&gx, y);
                if v < best {
                    best = v;
                }
            }
        }
        Ok(best)
    }

    /// Fills `out` with `‖x − g·y‖²` for every element, in enumeration order.
    pub fn orbit_sq_distances<T: Real>(&self, x: &[T], y: &[T], out: &mut Vec<T>) -> Result<()> {
        self.check_dim(x)?;
        self.check_dim(y)?;
        let perms = self.signed_perms()?;
        out.clear();
        out.extend(perms.iter().map(|g| g.sq_distance_to_image(x, y)));
        Ok(())
    }
}

impl fmt::Display for GroupAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            GroupKind::Hyperoctahedral { dim } => write!(f, "hyperoctahedral({dim})"),
            GroupKind::SignFlips { dim } => write!(f, "signflips({dim})"),
            GroupKind::Permutations { blocks, block_size } => {
                write!(f, "permutations({blocks}x{block_size})")
            }
            GroupKind::PlanarRotations => f.write_str("rotations2d"),
            GroupKind::Scalings => f.write_str("scalings2d"),
        }
    }
}

pub(crate) fn norm<T: Real>(x: &[T]) -> T {
    x.iter().fold(T::zero(), |acc, &v| acc + v * v).sqrt()
}

pub(crate) fn sq_dist<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter()
        .zip(b)
        .fold(T::zero(), |acc, (&p, &q)| acc + (p - q) * (p - q))
}

fn factorial(n: usize) -> usize {
    (1..=n).product()
}

fn block_assignment_min<T: Real>(
    x: &[T],
    y: &[T],
    blocks: usize,
    block_size: usize,
    perms: &[SignedPerm],
) -> T {
    // cost[i][j] = ‖x_block_i − y_block_j‖²
    let mut cost = vec![T::zero(); blocks * blocks];
    for i in 0..blocks {
        let xi = &x[i * block_size..(i + 1) * block_size];
        for j in 0..blocks {
            cost[i * blocks + j] = sq_dist(xi, &y[j * block_size..(j + 1) * block_size]);
        }
    }
    let mut best = T::max_value().unwrap();
    for g in perms {
        let mut acc = T::zero();
        for i in 0..blocks {
            acc += cost[i * blocks + g.perm[i * block_size] / block_size];
        }
        if acc < best {
            best = acc;
        }
    }
    best
}

/// Next permutation in lexicographic order; false when `p` was the last one.
fn next_permutation(p: &mut [usize]) -> bool {
    let n = p.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && p[i - 1] >= p[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while p[j] <= p[i - 1] {
        j -= 1;
    }
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

fn all_permutations(n: usize) -> Vec<Vec<usize>> {
    let mut p: Vec<usize> = (0..n).collect();
    let mut out = vec![p.clone()];
    while next_permutation(&mut p) {
        out.push(p.clone());
    }
    out
}

fn sign_masks(d: usize) -> impl Iterator<Item = Vec<bool>> {
    (0..(1usize << d)).map(move |m| (0..d).map(|i| (m >> i) & 1 == 1).collect())
}

fn enumerate_signed_perms(kind: GroupKind) -> Vec<SignedPerm> {
    match kind {
        GroupKind::Hyperoctahedral { dim } => {
            let mut out = Vec::with_capacity((1 << dim) * factorial(dim));
            for perm in all_permutations(dim) {
                for flips in sign_masks(dim) {
                    out.push(SignedPerm {
                        perm: perm.clone(),
                        flips,
                    });
                }
            }
            out
        }
        GroupKind::SignFlips { dim } => sign_masks(dim)
            .map(|flips| SignedPerm {
                perm: (0..dim).collect(),
                flips,
            })
            .collect(),
        GroupKind::Permutations { blocks, block_size } => all_permutations(blocks)
            .into_iter()
            .map(|bp| {
                GroupElement::<f64>::Permutation {
                    perm: bp,
                    block: block_size,
                }
                .as_signed_perm()
                .expect("finite")
            })
            .collect(),
        GroupKind::PlanarRotations | GroupKind::Scalings => Vec::new(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::FRAC_PI_2;

    fn random_point(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
        (0..d).map(|_| rng.random_range(-3.0..3.0)).collect()
    }

    #[test]
    fn apply_examples() {
        let id = GroupElement::<f64>::SignFlip(vec![false, false]);
        assert_eq!(id.apply(&[1.0, 2.0]).unwrap(), vec![1.0, 2.0]);
        let flip = GroupElement::<f64>::SignFlip(vec![true, false]);
        assert_eq!(flip.apply(&[1.0, 2.0]).unwrap(), vec![-1.0, 2.0]);
        let rot = GroupElement::rotation(FRAC_PI_2);
        let r = rot.apply(&[1.0, 0.0]).unwrap();
        assert!(r[0].abs() < 1e-15 && (r[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn apply_rejects_wrong_dimension() {
        let flip = GroupElement::<f64>::SignFlip(vec![true, false]);
        assert_eq!(
            flip.apply(&[1.0]),
            Err(Error::DimensionMismatch {
                expected: 2,
                got: 1
            })
        );
    }

    #[test]
    fn block_permutation_moves_pairs_together() {
        let g = GroupElement::<f64>::Permutation {
            perm: vec![1, 0],
            block: 2,
        };
        assert_eq!(g.apply(&[1.0, 2.0, 3.0, 4.0]).unwrap(), vec![3.0, 4.0, 1.0, 2.0]);
    }

    #[test]
    fn cardinalities() {
        for d in 1..=5 {
            let g = GroupAction::hyperoctahedral(d).unwrap();
            let expected = (1 << d) * factorial(d);
            assert_eq!(g.cardinality(), Cardinality::Finite(expected));
            let elems = g.elements::<f64>().unwrap();
            assert_eq!(elems.len(), expected);
            let distinct: std::collections::HashSet<_> =
                g.signed_perms().unwrap().iter().cloned().collect();
            assert_eq!(distinct.len(), expected);
        }
        assert_eq!(
            GroupAction::sign_flips(1).unwrap().elements::<f64>().unwrap(),
            vec![
                GroupElement::SignFlip(vec![false]),
                GroupElement::SignFlip(vec![true])
            ]
        );
        assert_eq!(
            GroupAction::hyperoctahedral(2).unwrap().elements::<f64>().unwrap().len(),
            8
        );
        assert_eq!(
            GroupAction::hyperoctahedral(5).unwrap().cardinality(),
            Cardinality::Finite(3840)
        );
        assert_eq!(
            GroupAction::permutations(4, 2).unwrap().cardinality(),
            Cardinality::Finite(24)
        );
        assert_eq!(GroupAction::planar_rotations().cardinality(), Cardinality::Infinite);
        assert!(!GroupAction::scalings().is_isometric());
        assert!(GroupAction::planar_rotations().is_isometric());
    }

    #[test]
    fn identity_first_and_lexicographic() {
        let g = GroupAction::hyperoctahedral(3).unwrap();
        let perms = g.signed_perms().unwrap();
        assert!(perms[0].is_identity());
        assert_eq!(perms[1].perm(), &[0, 1, 2]);
        assert_eq!(perms[1].flips(), &[true, false, false]);
        assert_eq!(perms[8].perm(), &[0, 2, 1]);
    }

    #[test]
    fn continuous_groups_refuse_enumeration() {
        assert!(matches!(
            GroupAction::planar_rotations().elements::<f64>(),
            Err(Error::UnsupportedForContinuousGroup(_))
        ));
        assert!(matches!(
            GroupAction::sign_flips(2).unwrap().canonical_feature(&[1.0, 2.0]),
            Err(Error::UnsupportedForFiniteGroup(_))
        ));
    }

    #[test]
    fn canonical_features() {
        let rot = GroupAction::planar_rotations();
        assert_eq!(rot.canonical_feature(&[3.0, 4.0]).unwrap(), vec![5.0]);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let g = rot.sample_element::<f64, _>(&mut rng);
            let gx = g.apply(&[3.0, 4.0]).unwrap();
            assert!((rot.canonical_feature(&gx).unwrap()[0] - 5.0).abs() < 1e-12);
        }
        let sc = GroupAction::scalings();
        let f = sc.canonical_feature(&[2.0, 2.0]).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((f[0] - h).abs() < 1e-15 && (f[1] - h).abs() < 1e-15);
    }

    #[test]
    fn min_distance_examples() {
        let s1 = GroupAction::sign_flips(1).unwrap();
        assert_eq!(s1.orbit_min_sq_distance(&[2.0], &[-2.0]).unwrap(), 0.0);
        let rot = GroupAction::planar_rotations();
        assert_eq!(rot.orbit_min_sq_distance(&[3.0, 4.0], &[0.0, 5.0]).unwrap(), 0.0);
        let h2 = GroupAction::hyperoctahedral(2).unwrap();
        assert_eq!(
            h2.orbit_min_sq_distance_double_loop(&[1.0, 2.0], &[2.0, -1.0]).unwrap(),
            0.0
        );
        assert_eq!(h2.orbit_min_sq_distance(&[1.0, 2.0], &[2.0, -1.0]).unwrap(), 0.0);
    }

    #[test]
    fn reductions_match_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let groups = [
            GroupAction::hyperoctahedral(1).unwrap(),
            GroupAction::hyperoctahedral(2).unwrap(),
            GroupAction::hyperoctahedral(3).unwrap(),
            GroupAction::sign_flips(3).unwrap(),
            GroupAction::permutations(3, 2).unwrap(),
        ];
        for g in &groups {
            for _ in 0..100 {
                let x = random_point(&mut rng, g.dim());
                let y = random_point(&mut rng, g.dim());
                let brute = g.orbit_min_sq_distance_double_loop(&x, &y).unwrap();
                let single = g.orbit_min_sq_distance_single_loop(&x, &y).unwrap();
                let fast = g.orbit_min_sq_distance(&x, &y).unwrap();
                assert!((single - brute).abs() <= 1e-14 * (1.0 + brute), "{g}");
                assert!((fast - brute).abs() <= 1e-12 * (1.0 + brute), "{g}: {fast} vs {brute}");
            }
        }
    }

    #[test]
    fn inverse_and_compose() {
        let g = GroupAction::hyperoctahedral(3).unwrap();
        let perms = g.signed_perms().unwrap();
        let x = [0.3, -1.2, 2.5];
        for a in perms.iter().step_by(5) {
            let mut ax = [0.0; 3];
            a.apply_into(&x, &mut ax);
            let mut back = [0.0; 3];
            a.inverse().apply_into(&ax, &mut back);
            assert_eq!(back, x);
            for b in perms.iter().step_by(7) {
                let mut bx = [0.0; 3];
                b.apply_into(&x, &mut bx);
                let mut abx = [0.0; 3];
                a.apply_into(&bx, &mut abx);
                let mut cx = [0.0; 3];
                a.compose(b).apply_into(&x, &mut cx);
                assert_eq!(abx, cx);
            }
        }
    }

    #[test]
    fn keys_round_trip() {
        for key in ["hyperoctahedral", "signflips", "permutations", "rotations2d", "scalings2d"] {
            assert_eq!(key.parse::<GroupKey>().unwrap().as_str(), key);
        }
        assert!("dihedral".parse::<GroupKey>().is_err());
        let g = GroupAction::from_key(GroupKey::Permutations, 8, 2).unwrap();
        assert_eq!(g.cardinality(), Cardinality::Finite(24));
        assert!(GroupAction::from_key(GroupKey::Rotations2d, 3, 1).is_err());
    }

    #[test]
    fn scale_requires_positive_factor() {
        assert!(GroupElement::scale(0.0f64).is_err());
        assert!(GroupElement::scale(2.0f64).is_ok());
    }
}
