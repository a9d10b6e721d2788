//! Random test matrices.

use bandchol::{CholeskyModel, SymMatrix};
use faer::{Mat, Side};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Entries uniform on `[−1, 1)`.
pub fn random_mat(p: usize, q: usize, seed: u64) -> Mat<f64> {
    let mut r = rng(seed);
    Mat::from_fn(p, q, |_, _| r.random_range(-1.0..1.0))
}

pub fn random_symmetric(p: usize, scale: f64, seed: u64) -> SymMatrix {
    let m = random_mat(p, p, seed);
    SymMatrix::from_fn(p, true, |i, j| scale * (m[(i, j)] + m[(j, i)]) / 2.0).expect("symmetric")
}

/// `U diag(λ) Uᵀ` with `U` orthogonal and `λ` uniform on `[lo, hi]`.
pub fn random_with_spectrum(p: usize, lo: f64, hi: f64, seed: u64) -> SymMatrix {
    let s = random_symmetric(p, 1.0, seed);
    let u = s.as_mat().self_adjoint_eigen(Side::Lower).expect("eigen").U().to_owned();
    let mut r = rng(seed ^ 0x5eed);
    let lam: Vec<f64> = (0..p).map(|_| r.random_range(lo..=hi)).collect();
    let scaled = Mat::from_fn(p, p, |i, j| u[(i, j)] * lam[j]);
    SymMatrix::symmetrize(&scaled * u.transpose()).expect("square")
}

/// Bandwidth-`k` Cholesky factor with entries in `(−0.6, 0.6)` and `d ∈ (0.3, 3)`.
pub fn banded_model(p: usize, k: usize, seed: u64) -> CholeskyModel {
    let mut r = rng(seed);
    let a = Mat::from_fn(p, p, |i, j| if i > j && i - j <= k { r.random_range(-0.6..0.6) } else { 0.0 });
    let d = (0..p).map(|_| r.random_range(0.3..3.0)).collect();
    CholeskyModel::new(a, d).expect("valid factor")
}

pub fn max_abs_diff(a: MatRefF, b: MatRefF) -> f64 {
    let mut m = 0.0f64;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            m = m.max((a[(i, j)] - b[(i, j)]).abs());
        }
    }
    m
}

type MatRefF<'a> = faer::MatRef<'a, f64>;
