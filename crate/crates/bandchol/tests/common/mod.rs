#![allow(dead_code)]

use bandchol::{DataMatrix, SymMatrix};
use faer::{Mat, Side};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_mat(p: usize, q: usize, seed: u64) -> Mat<f64> {
    let mut r = rng(seed);
    Mat::from_fn(p, q, |_, _| r.random_range(-1.0..1.0))
}

pub fn random_symmetric(p: usize, scale: f64, seed: u64) -> SymMatrix {
    let m = random_mat(p, p, seed);
    SymMatrix::from_fn(p, true, |i, j| scale * (m[(i, j)] + m[(j, i)]) / 2.0).unwrap()
}

/// Random orthogonal matrix from the eigenvectors of a random symmetric one.
pub fn random_orthogonal(p: usize, seed: u64) -> Mat<f64> {
    let s = random_symmetric(p, 1.0, seed);
    s.as_mat().self_adjoint_eigen(Side::Lower).unwrap().U().to_owned()
}

/// `U diag(λ) Uᵀ` with eigenvalues drawn uniformly from `[lo, hi]`.
pub fn random_with_spectrum(p: usize, lo: f64, hi: f64, seed: u64) -> SymMatrix {
    let u = random_orthogonal(p, seed);
    let mut r = rng(seed ^ 0x5eed);
    let lam: Vec<f64> = (0..p).map(|_| r.random_range(lo..=hi)).collect();
    let scaled = Mat::from_fn(p, p, |i, j| u[(i, j)] * lam[j]);
    SymMatrix::symmetrize(&scaled * u.transpose()).unwrap()
}

pub fn gaussian_data(n: usize, p: usize, seed: u64) -> DataMatrix {
    let mut r = rng(seed);
    DataMatrix::new(Mat::from_fn(n, p, |_, _| r.sample(StandardNormal))).unwrap()
}

pub fn max_abs_diff(a: &SymMatrix, b: &SymMatrix) -> f64 {
    let (a, b) = (a.as_mat(), b.as_mat());
    let mut m = 0.0f64;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            m = m.max((a[(i, j)] - b[(i, j)]).abs());
        }
    }
    m
}
