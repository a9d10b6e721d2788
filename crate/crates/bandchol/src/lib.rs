//! Estimation of large precision matrices with a bandable Cholesky factor.
//!
//! The crate is organised in layers:
//!
//! * [`matcore`] dense primitives: crop/expand/band operators, spectral
//!   projection, norms, the modified Cholesky decomposition and matrix I/O.
//! * [`cropping`] the local cropping estimator (operator norm).
//! * [`cholreg`] the block-thresholded regression estimator (Frobenius norm)
//!   and the banding baseline.
//! * [`adaptive`] Lepski bandwidth selection for the cropping estimator.
//! * [`rankcov`] Kendall and Spearman correlation matrices and the
//!   nonparanormal cropping estimator.
//! * [`simlab`] model generators, samplers, losses and the Monte Carlo engine.
//!
//! All index arguments are 0-based.

pub mod adaptive;
pub mod cholreg;
pub mod cropping;
pub mod error;
pub mod matcore;
pub mod rankcov;
pub mod simlab;

pub use error::{Error, Result};
pub use matcore::{CholeskyModel, DataMatrix, SpectralBand, SymMatrix};

/// Pins the dense kernels to a single thread.
///
/// Parallelism is applied at the level of windows, rows and replicates with
/// ordered reductions, so results do not depend on the worker count.
pub fn sequential_kernels() {
    static ONCE: std::sync::Once = std::sync::Once::new();
    ONCE.call_once(|| faer::set_global_parallelism(faer::Par::Seq));
}
