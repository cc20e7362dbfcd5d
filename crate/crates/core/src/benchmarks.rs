//! Benchmark objectives with their boxes, symmetry groups and optima.
//!
//! Functions that are naturally minimized are negated at the [`Benchmark`]
//! boundary so the optimizer always maximizes.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;
use std::sync::{Mutex, OnceLock};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::groups::{Cardinality, GroupAction};
use crate::scalar::Real;

/// Ackley with the customary `a = 20`, `b = 0.2`, `c = 2π`.
pub fn ackley<T: Real>(x: &[T]) -> T {
    ackley_with(x, T::lit(20.0), T::lit(0.2), T::two_pi())
}

pub fn ackley_with<T: Real>(x: &[T], a: T, b: T, c: T) -> T {
    let d = T::from_usize_lossy(x.len());
    let sq = x.iter().fold(T::zero(), |acc, &v| acc + v * v);
    let cs = x.iter().fold(T::zero(), |acc, &v| acc + (c * v).cos());
    -a * (-b * (sq / d).sqrt()).exp() - (cs / d).exp() + a + T::one().exp()
}

pub fn griewank<T: Real>(x: &[T]) -> T {
    let mut sum = T::zero();
    let mut prod = T::one();
    for (i, &v) in x.iter().enumerate() {
        sum += v * v / T::lit(4000.0);
        prod *= (v / T::from_usize_lossy(i + 1).sqrt()).cos();
    }
    sum - prod + T::one()
}

pub fn rastrigin<T: Real>(x: &[T]) -> T {
    let ten = T::lit(10.0);
    x.iter().fold(ten * T::from_usize_lossy(x.len()), |acc, &v| {
        acc + v * v - ten * (T::two_pi() * v).cos()
    })
}

pub const RADIAL_A: f64 = 14.142_135_623_730_951; // 10·√2
pub const RADIAL_B: f64 = 0.8;

/// One-dimensional Rastrigin of the rescaled norm, `‖x‖/a − b`.
pub fn radial<T: Real>(x: &[T]) -> T {
    let r = x.iter().fold(T::zero(), |acc, &v| acc + v * v).sqrt();
    rastrigin(&[r / T::lit(RADIAL_A) - T::lit(RADIAL_B)])
}

pub fn scaling<T: Real>(x: &[T]) -> T {
    let q = x[0] / x[1] - T::one();
    q * q
}

/// Radio constants and user layout of the access-point placement problem.
#[derive(Clone, Debug, PartialEq)]
pub struct WlanScenario {
    pub users: Vec<[f64; 2]>,
    pub n_aps: usize,
    /// Bandwidth in MHz.
    pub bandwidth: f64,
    /// Path-loss constant in dB.
    pub path_loss: f64,
    pub path_loss_exponent: f64,
    /// Background noise in mW.
    pub noise: f64,
}

/// Side of the square area `[−50, 50]²`.
pub const WLAN_HALF_WIDTH: f64 = 50.0;
pub const WLAN_FIXTURE_SEED: u64 = 1604;
const WLAN_FIXTURE: &str = include_str!("../fixtures/wlan_users.csv");

/// One user's association and link capacity.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UserLink {
    pub user: usize,
    pub ap: usize,
    pub sinr: f64,
    /// Shannon capacity in Mbps.
    pub capacity: f64,
}

impl WlanScenario {
    pub fn new(users: Vec<[f64; 2]>, n_aps: usize) -> Result<Self> {
        if users.is_empty() || n_aps == 0 {
            return Err(Error::InvalidParameter("WLAN needs ≥ 1 user and ≥ 1 AP".into()));
        }
        Ok(Self {
            users,
            n_aps,
            bandwidth: 1.0,
            path_loss: 46.67,
            path_loss_exponent: 3.0,
            noise: 10f64.powf(-85.0 / 10.0),
        })
    }

    /// Received power in mW at distance `d`.
    pub fn received_power(&self, d: f64) -> f64 {
        10f64.powf(-self.path_loss / 10.0) * d.powf(-self.path_loss_exponent).min(1.0)
    }

    /// Per-user association (nearest AP, lowest index on ties) and capacity.
    /// `xs` and `ys` hold the AP coordinates.
    pub fn links(&self, xs: &[f64], ys: &[f64]) -> Result<Vec<UserLink>> {
        if xs.len() != self.n_aps || ys.len() != self.n_aps {
            return Err(Error::DimensionMismatch {
                expected: self.n_aps,
                got: xs.len().min(ys.len()),
            });
        }
        let mut out = Vec::with_capacity(self.users.len());
        let mut power = vec![0.0; self.n_aps];
        for (j, u) in self.users.iter().enumerate() {
            let mut nearest = 0;
            let mut best = f64::INFINITY;
            for i in 0..self.n_aps {
                let d = ((xs[i] - u[0]).powi(2) + (ys[i] - u[1]).powi(2)).sqrt();
                if d < best {
                    best = d;
                    nearest = i;
                }
                power[i] = self.received_power(d);
            }
            let interference: f64 = (0..self.n_aps).filter(|&k| k != nearest).map(|k| power[k]).sum();
            let sinr = power[nearest] / (self.noise + interference);
            out.push(UserLink {
                user: j,
                ap: nearest,
                sinr,
                capacity: self.bandwidth * (1.0 + sinr).log2(),
            });
        }
        Ok(out)
    }

    /// Total throughput in Mbps for AP coordinates `xs`, `ys`.
    pub fn throughput(&self, xs: &[f64], ys: &[f64]) -> Result<f64> {
        Ok(self.links(xs, ys)?.iter().map(|l| l.capacity).sum())
    }

    /// Throughput for a search-space point laid out as `(x₁, y₁, …, x_m, y_m)`.
    pub fn throughput_interleaved(&self, placement: &[f64]) -> Result<f64> {
        let (xs, ys) = self.split(placement)?;
        self.throughput(&xs, &ys)
    }

    pub fn split(&self, placement: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        if placement.len() != 2 * self.n_aps {
            return Err(Error::DimensionMismatch {
                expected: 2 * self.n_aps,
                got: placement.len(),
            });
        }
        Ok((
            placement.iter().step_by(2).copied().collect(),
            placement.iter().skip(1).step_by(2).copied().collect(),
        ))
    }

    pub fn to_fixture_string(&self) -> String {
        let mut s = String::from("x,y\n");
        for u in &self.users {
            writeln!(s, "{},{}", u[0], u[1]).expect("string write");
        }
        s
    }

    pub fn parse_fixture(text: &str, n_aps: usize) -> Result<Self> {
        let mut users = Vec::new();
        for (lineno, line) in text.lines().enumerate().skip(1) {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let bad = || Error::InvalidParameter(format!("malformed fixture line {}: {line}", lineno + 1));
            let (a, b) = line.split_once(',').ok_or_else(bad)?;
            let x: f64 = a.trim().parse().map_err(|_| bad())?;
            let y: f64 = b.trim().parse().map_err(|_| bad())?;
            users.push([x, y]);
        }
        Self::new(users, n_aps)
    }

    pub fn write_fixture(&self, path: &Path) -> std::io::Result<()> {
        std::fs::write(path, self.to_fixture_string())
    }
}

/// 16 users uniform in `[−50, 50]²` drawn from `seed`, with 4 APs.
pub fn scenario_fixture(seed: u64) -> WlanScenario {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let users = (0..16)
        .map(|_| {
            [
                rng.random_range(-WLAN_HALF_WIDTH..=WLAN_HALF_WIDTH),
                rng.random_range(-WLAN_HALF_WIDTH..=WLAN_HALF_WIDTH),
            ]
        })
        .collect();
    WlanScenario::new(users, 4).expect("valid fixture")
}

/// The committed layout shared by every WLAN run.
pub fn default_scenario(n_aps: usize) -> WlanScenario {
    WlanScenario::parse_fixture(WLAN_FIXTURE, n_aps).expect("committed fixture parses")
}

#[derive(Clone, Debug)]
pub enum Objective {
    Ackley,
    Griewank,
    Rastrigin,
    Radial,
    Scaling,
    Wlan(WlanScenario),
}

/// A maximization problem over a box.
#[derive(Clone, Debug)]
pub struct Benchmark {
    pub name: String,
    pub dim: usize,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub group: GroupAction,
    /// Maximum of the (negated) objective when known.
    pub known_max: Option<f64>,
    pub objective: Objective,
}

impl Benchmark {
    /// Parses names such as `Ackley2d`, `Griewank6d`, `Rastrigin5d`,
    /// `Radial2d`, `Scaling2d`, `WLAN8d`.
    pub fn by_name(name: &str) -> Result<Self> {
        let unknown = || Error::Unknown {
            kind: "benchmark",
            name: name.to_string(),
        };
        let stem = name.strip_suffix('d').ok_or_else(unknown)?;
        let split = stem.find(|c: char| c.is_ascii_digit()).ok_or_else(unknown)?;
        let (family, digits) = stem.split_at(split);
        let dim: usize = digits.parse().map_err(|_| unknown())?;
        if dim == 0 {
            return Err(unknown());
        }
        let cube = |h: f64| (vec![-h; dim], vec![h; dim]);
        let (objective, (lower, upper), group, known_max) = match family.to_ascii_lowercase().as_str() {
            "ackley" => (Objective::Ackley, cube(16.0), GroupAction::hyperoctahedral(dim)?, Some(0.0)),
            "griewank" => (Objective::Griewank, cube(600.0), GroupAction::sign_flips(dim)?, Some(0.0)),
            "rastrigin" => (Objective::Rastrigin, cube(5.12), GroupAction::hyperoctahedral(dim)?, Some(0.0)),
            "radial" if dim == 2 => (Objective::Radial, cube(10.0), GroupAction::planar_rotations(), Some(0.0)),
            "scaling" if dim == 2 => (
                Objective::Scaling,
                (vec![0.1; 2], vec![10.0; 2]),
                GroupAction::scalings(),
                Some(0.0),
            ),
            "wlan" if dim.is_multiple_of(2) => (
                Objective::Wlan(default_scenario(dim / 2)),
                cube(WLAN_HALF_WIDTH),
                GroupAction::permutations(dim / 2, 2)?,
                None,
            ),
            _ => return Err(unknown()),
        };
        Ok(Self {
            name: name.to_string(),
            dim,
            lower,
            upper,
            group,
            known_max,
            objective,
        })
    }

    /// One benchmark per symmetry type, as compared across kernel modes.
    pub fn standard_suite() -> Vec<Self> {
        ["Ackley2d", "Griewank6d", "Rastrigin5d", "Radial2d", "Scaling2d", "WLAN8d"]
            .iter()
            .map(|n| Self::by_name(n).expect("known benchmark"))
            .collect()
    }

    /// Objective value before negation (the function as usually stated).
    pub fn raw(&self, x: &[f64]) -> f64 {
        match &self.objective {
            Objective::Ackley => ackley(x),
            Objective::Griewank => griewank(x),
            Objective::Rastrigin => rastrigin(x),
            Objective::Radial => radial(x),
            Objective::Scaling => scaling(x),
            Objective::Wlan(s) => s.throughput_interleaved(x).expect("dimension checked"),
        }
    }

    /// Value to maximize.
    pub fn evaluate(&self, x: &[f64]) -> f64 {
        match &self.objective {
            Objective::Wlan(_) => self.raw(x),
            _ => -self.raw(x),
        }
    }

    pub fn group_order(&self) -> Cardinality {
        self.group.cardinality()
    }

    pub fn diagonal(&self) -> f64 {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(l, u)| (u - l) * (u - l))
            .sum::<f64>()
            .sqrt()
    }

    pub fn sample_uniform<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(&l, &u)| rng.random_range(l..=u))
            .collect()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim && x.iter().zip(self.lower.iter().zip(&self.upper)).all(|(&v, (&l, &u))| v >= l && v <= u)
    }

    /// A maximizer of the negated objective, when one is known in closed form.
    pub fn known_maximizer(&self) -> Option<Vec<f64>> {
        match self.objective {
            Objective::Ackley | Objective::Griewank | Objective::Rastrigin => Some(vec![0.0; self.dim]),
            Objective::Radial => Some(vec![8.0, 8.0]),
            Objective::Scaling => Some(vec![1.0, 1.0]),
            Objective::Wlan(_) => None,
        }
    }

    /// Variance of the objective under uniform sampling of the box, from
    /// `10⁴` draws with a dedicated seed. Cached per benchmark name.
    pub fn signal_variance(&self) -> f64 {
        static CACHE: OnceLock<Mutex<HashMap<String, f64>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        if let Some(&v) = cache.lock().expect("cache lock").get(&self.name) {
            return v;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(VARIANCE_SEED);
        let n = 10_000;
        let vals: Vec<f64> = (0..n).map(|_| self.evaluate(&self.sample_uniform(&mut rng))).collect();
        let mean = vals.iter().sum::<f64>() / n as f64;
        let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
        cache.lock().expect("cache lock").insert(self.name.clone(), var);
        var
    }
}

const VARIANCE_SEED: u64 = 0x0051_61A1;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minima_are_zero() {
        assert!(ackley(&[0.0f64, 0.0]).abs() < 1e-15);
        assert_eq!(griewank(&[0.0f64; 6]), 0.0);
        assert_eq!(rastrigin(&[0.0f64; 5]), 0.0);
        let r = RADIAL_A * RADIAL_B;
        assert!(radial(&[r, 0.0]).abs() < 1e-12);
        assert!(radial(&[r / 2f64.sqrt(), r / 2f64.sqrt()]).abs() < 1e-12);
        assert_eq!(scaling(&[3.3f64, 3.3]), 0.0);
        assert_eq!(scaling(&[2.0f64, 1.0]), 1.0);
    }

    #[test]
    fn hand_values() {
        // 20 + e − 20·exp(−0.2) − exp(cos 2π) at (1, 1)
        let want: f64 = 20.0 + 1f64.exp() - 20.0 * (-0.2f64).exp() - (1.0f64).exp();
        assert!((ackley(&[1.0f64, 1.0]) - want).abs() < 1e-12);
        assert!((ackley(&[1.0f64, 1.0]) - 3.6254).abs() < 1e-4);
        assert!((rastrigin(&[1.0f64, 0.0]) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ackley_depends_on_sorted_magnitudes() {
        let x = [3.1, -0.4, 1.7];
        let mut s: Vec<f64> = x.iter().map(|v: &f64| v.abs()).collect();
        s.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((ackley(&x) - ackley(&s)).abs() < 1e-12);
    }

    #[test]
    fn single_ap_on_top_of_user() {
        let s = WlanScenario::new(vec![[3.0, -2.0]], 1).unwrap();
        let links = s.links(&[3.0], &[-2.0]).unwrap();
        let p = 10f64.powf(-4.667);
        assert!((links[0].sinr - p / s.noise).abs() / links[0].sinr < 1e-12);
        assert!((links[0].capacity - 12.73).abs() < 1e-2, "{}", links[0].capacity);
    }

    #[test]
    fn association_ties_go_to_lowest_index() {
        let s = WlanScenario::new(vec![[0.0, 0.0]], 2).unwrap();
        let links = s.links(&[-5.0, 5.0], &[0.0, 0.0]).unwrap();
        assert_eq!(links[0].ap, 0);
    }

    #[test]
    fn fixture_file_matches_seed() {
        let generated = scenario_fixture(WLAN_FIXTURE_SEED).to_fixture_string();
        assert_eq!(generated, WLAN_FIXTURE);
        assert_eq!(scenario_fixture(7).to_fixture_string(), scenario_fixture(7).to_fixture_string());
        let s = default_scenario(4);
        assert_eq!(s.users.len(), 16);
        assert!(s.users.iter().all(|u| u.iter().all(|c| c.abs() <= WLAN_HALF_WIDTH)));
    }

    #[test]
    fn registry() {
        let b = Benchmark::by_name("Rastrigin5d").unwrap();
        assert_eq!(b.group_order(), Cardinality::Finite(3840));
        let w = Benchmark::by_name("WLAN8d").unwrap();
        assert_eq!(w.dim, 8);
        assert_eq!(w.group_order(), Cardinality::Finite(24));
        assert!(w.known_max.is_none());
        assert_eq!(Benchmark::by_name("Ackley2d").unwrap().group_order(), Cardinality::Finite(8));
        assert_eq!(Benchmark::by_name("Griewank6d").unwrap().group_order(), Cardinality::Finite(64));
        assert_eq!(Benchmark::by_name("Scaling2d").unwrap().group_order(), Cardinality::Infinite);
        for bad in ["Ackley", "Foo2d", "Radial3d", "WLAN7d", "Ackley0d"] {
            assert!(Benchmark::by_name(bad).is_err(), "{bad}");
        }
        assert_eq!(Benchmark::standard_suite().len(), 6);
    }

    #[test]
    fn known_maximizers_attain_known_max() {
        for b in Benchmark::standard_suite() {
            if let (Some(x), Some(m)) = (b.known_maximizer(), b.known_max) {
                assert!(b.contains(&x));
                assert!((b.evaluate(&x) - m).abs() < 1e-12, "{}", b.name);
            }
        }
    }

    #[test]
    fn signal_variance_is_cached_and_positive() {
        let b = Benchmark::by_name("Ackley2d").unwrap();
        let v1 = b.signal_variance();
        let v2 = b.signal_variance();
        assert_eq!(v1, v2);
        assert!(v1 > 0.0);
    }

    #[test]
    fn declared_groups_leave_objectives_unchanged() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for b in Benchmark::standard_suite() {
            let mut worst = 0.0f64;
            for _ in 0..100 {
                let x = b.sample_uniform(&mut rng);
                let g = b.group.sample_element::<f64, _>(&mut rng);
                let gx = g.apply(&x).unwrap();
                // Scalings leave the box; the objective is still defined there.
                let f = b.evaluate(&x);
                worst = worst.max((b.evaluate(&gx) - f).abs() / (1.0 + f.abs()));
            }
            assert!(worst <= 1e-9, "{} {worst}", b.name);
        }
    }
}
