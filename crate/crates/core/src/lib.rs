//! Invariant kernels for Bayesian optimization: group actions, orbit-averaged
//! and max-alignment kernels, PSD projection with Nyström extension, exact GP
//! inference, a GP-UCB loop, benchmark objectives and spectral diagnostics.
//!
//! The numerical core is generic over [`Real`]; the aliases below fix the
//! scalar to `f64`.

pub mod benchmarks;
pub mod bo;
pub mod error;
pub mod gp;
pub mod groups;
pub mod kernels;
pub mod psd_nystrom;
pub mod scalar;
pub mod spectra;

pub use error::{Error, Result};
pub use scalar::Real;

pub type KernelSpecF64 = kernels::KernelSpec<f64>;
pub type GroupElementF64 = groups::GroupElement<f64>;
pub type PsdProjectionF64 = psd_nystrom::PsdProjection<f64>;
pub type ProjectedKernelF64 = psd_nystrom::ProjectedKernel<f64>;
pub type DatasetF64 = gp::Dataset<f64>;
pub type GpKernelF64 = gp::GpKernel<f64>;
pub type PosteriorF64 = gp::Posterior<f64>;
pub type HyperparamsF64 = gp::Hyperparams<f64>;
