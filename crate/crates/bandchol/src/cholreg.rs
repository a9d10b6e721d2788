//! Regression-based estimators built on the modified Cholesky decomposition.
//!
//! [`frob_estimate`] regresses each variable on a long window of its
//! predecessors, hard-thresholds the far coefficients in doubling blocks and
//! projects both factors onto the spectral band. [`banding_estimate`] is the
//! plain banded regression baseline.

use faer::{Mat, MatRef, Side};
use rayon::prelude::*;

use crate::cropping::Rounding;
use crate::matcore::{self, symmetrize_in_place, CholeskyModel, DataMatrix, SpectralBand, SymMatrix};
use crate::{Error, Result};

/// Tuning for [`frob_estimate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdConfig {
    pub alpha: f64,
    /// Window divisor: `k₁ = ⌈n/c⌉`.
    pub c: f64,
    pub band: SpectralBand,
}

impl ThresholdConfig {
    pub const DEFAULT_C: f64 = 4.0;

    pub fn new(alpha: f64, band: SpectralBand) -> Self {
        Self { alpha, c: Self::DEFAULT_C, band }
    }

    /// `k₀ = ⌈n^{1/(2α+2)}⌉`.
    pub fn k0(&self, n: usize) -> usize {
        Rounding::Ceil.apply((n as f64).powf(1.0 / (2.0 * self.alpha + 2.0)))
    }

    /// `k₁ = ⌈n/c⌉`.
    pub fn k1(&self, n: usize) -> usize {
        Rounding::Ceil.apply(n as f64 / self.c)
    }

    pub fn validate(&self, n: usize) -> Result<(usize, usize)> {
        if !(self.alpha > 0.0) || !self.alpha.is_finite() {
            return Err(Error::InvalidParameter(format!("alpha must be positive, got {}", self.alpha)));
        }
        if !(self.c > 1.0) || !self.c.is_finite() {
            return Err(Error::InvalidParameter(format!("c must exceed 1, got {}", self.c)));
        }
        let (k0, k1) = (self.k0(n), self.k1(n));
        if k0 > k1 || k1 >= n {
            return Err(Error::InvalidParameter(format!("need k0 <= k1 < n, got k0 = {k0}, k1 = {k1}, n = {n}")));
        }
        Ok((k0, k1))
    }
}

/// Least-squares fit of one column on its preceding window.
#[derive(Debug, Clone, PartialEq)]
pub struct OlsRow {
    /// Length `i`, zero outside the window.
    pub coefficients: Vec<f64>,
    /// `‖(Z_winᵀ Z_win)⁻¹‖₂`; zero when the window is empty.
    pub gram_inverse_norm: f64,
    pub window: usize,
    pub rss: f64,
}

/// Rowwise regressions sharing one raw Gram matrix `ZᵀZ`.
struct RowSolver<'a> {
    z: MatRef<'a, f64>,
    gram: Mat<f64>,
}

impl<'a> RowSolver<'a> {
    fn new(z: &'a DataMatrix) -> Self {
        crate::sequential_kernels();
        let zm = z.as_mat();
        let mut gram = zm.transpose() * zm;
        symmetrize_in_place(&mut gram);
        Self { z: zm, gram }
    }

    fn solve(&self, i: usize, max_window: usize, want_norm: bool) -> Result<OlsRow> {
        let n = self.z.nrows();
        let w = max_window.min(i);
        let mut coefficients = vec![0.0; i];
        let zi = self.z.col(i);
        if w == 0 {
            let rss = zi.squared_norm_l2();
            return Ok(OlsRow { coefficients, gram_inverse_norm: 0.0, window: 0, rss });
        }
        if w >= n {
            return Err(Error::SingularGram { row: i, window: w, n });
        }
        let lo = i - w;
        let gw = self.gram.as_ref().submatrix(lo, lo, w, w);
        let llt = gw.llt(Side::Lower).map_err(|_| Error::SingularGram { row: i, window: w, n })?;
        let rhs = Mat::from_fn(w, 1, |r, _| self.gram[(lo + r, i)]);
        let beta = faer::linalg::solvers::Solve::solve(&llt, rhs);
        let gram_inverse_norm = if want_norm {
            let ev = matcore::eigenvalues(gw)?;
            if !(ev[0] > 0.0) {
                return Err(Error::SingularGram { row: i, window: w, n });
            }
            1.0 / ev[0]
        } else {
            0.0
        };
        for r in 0..w {
            coefficients[lo + r] = beta[(r, 0)];
        }
        let xw = self.z.submatrix(0, lo, n, w);
        let fitted = xw * &beta;
        let mut rss = 0.0;
        for t in 0..n {
            let e = zi[t] - fitted[(t, 0)];
            rss += e * e;
        }
        if !beta.as_ref().is_all_finite() {
            return Err(Error::SingularGram { row: i, window: w, n });
        }
        Ok(OlsRow { coefficients, gram_inverse_norm, window: w, rss })
    }
}

/// OLS of column `i` on columns `i−w..i` with `w = min(k1, i)`.
pub fn ols_row(z: &DataMatrix, i: usize, k1: usize) -> Result<OlsRow> {
    check_row(z, i)?;
    RowSolver::new(z).solve(i, k1, true)
}

/// `d̂_i = RSS/(n − w)`, or the plain second moment when `i = 0`.
pub fn residual_var(z: &DataMatrix, i: usize, k1: usize) -> Result<f64> {
    check_row(z, i)?;
    let row = RowSolver::new(z).solve(i, k1, false)?;
    residual_variance(&row, z.n())
}

fn residual_variance(row: &OlsRow, n: usize) -> Result<f64> {
    if row.window == 0 {
        return Ok(row.rss / n as f64);
    }
    if n <= row.window {
        return Err(Error::InvalidParameter(format!("n = {n} must exceed the window {}", row.window)));
    }
    Ok(row.rss / (n - row.window) as f64)
}

fn check_row(z: &DataMatrix, i: usize) -> Result<()> {
    if i >= z.p() {
        return Err(Error::OutOfRange(format!("row {i} outside dimension {}", z.p())));
    }
    Ok(())
}

/// Smallest `q ≥ 0` with `k₀·2^q ≥ lag`.
pub fn threshold_block(lag: usize, k0: usize) -> u32 {
    let mut q = 0;
    let mut reach = k0;
    while reach < lag {
        reach *= 2;
        q += 1;
    }
    q
}

/// `λ = sqrt(q·R)` for the doubling block containing `lag`.
pub fn threshold_level(lag: usize, k0: usize, r: f64) -> f64 {
    (threshold_block(lag, k0) as f64 * r).sqrt()
}

/// Applies the three-range rule to the coefficients of row `i`:
/// lags below `k₀` are kept, lags in `[k₀, k₁)` are hard-thresholded at
/// [`threshold_level`], lags from `k₁` on are zeroed.
pub fn threshold_row(coefficients: &[f64], i: usize, k0: usize, k1: usize, r: f64) -> Vec<f64> {
    coefficients
        .iter()
        .enumerate()
        .take(i)
        .map(|(j, &a)| {
            let lag = i - j;
            if lag < k0 {
                a
            } else if lag < k1 {
                if a.abs() > threshold_level(lag, k0, r) {
                    a
                } else {
                    0.0
                }
            } else {
                0.0
            }
        })
        .collect()
}

/// Everything computed by [`frob_fit`].
#[derive(Debug, Clone)]
pub struct FrobFit {
    pub k0: usize,
    pub k1: usize,
    /// Raw OLS coefficients, row `i` in columns `0..i`.
    pub raw: Mat<f64>,
    /// Thresholded coefficients `Â*`.
    pub thresholded: Mat<f64>,
    /// Threshold scale `R_i = 8η‖(Z_winᵀZ_win)⁻¹‖₂` per row.
    pub scale: Vec<f64>,
    pub d_hat: Vec<f64>,
    pub estimate: SymMatrix,
}

/// Thresholded regression estimator with all intermediate quantities.
pub fn frob_fit(z: &DataMatrix, cfg: &ThresholdConfig) -> Result<FrobFit> {
    let (n, p) = (z.n(), z.p());
    let (k0, k1) = cfg.validate(n)?;
    let solver = RowSolver::new(z);
    let eta = cfg.band.eta();
    let rows: Vec<(OlsRow, Vec<f64>, f64, f64)> = (0..p)
        .into_par_iter()
        .map(|i| {
            let row = solver.solve(i, k1, true)?;
            let r = 8.0 * eta * row.gram_inverse_norm;
            let kept = threshold_row(&row.coefficients, i, k0, k1, r);
            let d = residual_variance(&row, n)?;
            Ok((row, kept, r, d))
        })
        .collect::<Result<_>>()?;
    let mut raw = Mat::zeros(p, p);
    let mut thresholded = Mat::zeros(p, p);
    let mut scale = Vec::with_capacity(p);
    let mut d_hat = Vec::with_capacity(p);
    for (i, (row, kept, r, d)) in rows.into_iter().enumerate() {
        for j in 0..i {
            raw[(i, j)] = row.coefficients[j];
            thresholded[(i, j)] = kept[j];
        }
        scale.push(r);
        d_hat.push(d);
    }
    let unit = Mat::from_fn(p, p, |i, j| if i == j { 1.0 } else { -thresholded[(i, j)] });
    let factor = matcore::project_general(unit.as_ref(), cfg.band)?;
    let d_tilde: Vec<f64> = d_hat.iter().map(|&d| cfg.band.clamp(d)).collect();
    let w = Mat::from_fn(p, p, |i, j| factor[(i, j)] / d_tilde[i].sqrt());
    let mut est = w.transpose() * &w;
    symmetrize_in_place(&mut est);
    Ok(FrobFit { k0, k1, raw, thresholded, scale, d_hat, estimate: SymMatrix::from_symmetric(est)? })
}

/// `(Ĩ−A)ᵀ D̃⁻¹ (Ĩ−A)` from thresholded rowwise regressions.
pub fn frob_estimate(z: &DataMatrix, cfg: &ThresholdConfig) -> Result<SymMatrix> {
    Ok(frob_fit(z, cfg)?.estimate)
}

/// Banded regression baseline: each column regressed on its previous `k`
/// columns, residual variances `RSS/n`, recomposed without projection.
pub fn banding_estimate(z: &DataMatrix, k: usize) -> Result<SymMatrix> {
    let (n, p) = (z.n(), z.p());
    if k == 0 || k >= n {
        return Err(Error::InvalidParameter(format!("banding width k = {k} must satisfy 1 <= k < n = {n}")));
    }
    let solver = RowSolver::new(z);
    let rows: Vec<OlsRow> = (0..p).into_par_iter().map(|i| solver.solve(i, k, false)).collect::<Result<_>>()?;
    let mut a = Mat::zeros(p, p);
    let mut d = Vec::with_capacity(p);
    for (i, row) in rows.into_iter().enumerate() {
        for j in 0..i {
            a[(i, j)] = row.coefficients[j];
        }
        let v = row.rss / n as f64;
        if !(v > 0.0) {
            return Err(Error::Decomposition(format!("zero residual variance in row {i}")));
        }
        d.push(v);
    }
    Ok(matcore::recompose(&CholeskyModel::new(a, d)?))
}

/// `⌊(n / log p)^{1/(2α+2)}⌋`, the bandwidth used for the banding baseline.
pub fn banding_bandwidth(alpha: f64, n: usize, p: usize, rounding: Rounding) -> Result<usize> {
    if !(alpha > 0.0) || p < 2 || n == 0 {
        return Err(Error::InvalidParameter(format!("need alpha > 0, p >= 2, n >= 1 (alpha = {alpha}, p = {p}, n = {n})")));
    }
    Ok(rounding.apply((n as f64 / (p as f64).ln()).powf(1.0 / (2.0 * alpha + 2.0))))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn normals(n: usize, p: usize, seed: u64) -> Mat<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v: Vec<f64> = (0..n * p).map(|_| StandardNormal.sample(&mut rng)).collect();
        Mat::from_fn(n, p, |i, j| v[i * p + j])
    }

    #[test]
    fn first_row_has_no_coefficients() {
        let z = DataMatrix::new(normals(30, 4, 1)).unwrap();
        let r = ols_row(&z, 0, 3).unwrap();
        assert!(r.coefficients.is_empty());
        assert_eq!(r.window, 0);
    }

    #[test]
    fn duplicated_column_has_unit_coefficient() {
        let mut m = normals(40, 3, 2);
        for t in 0..40 {
            m[(t, 2)] = m[(t, 1)];
        }
        let z = DataMatrix::new(m).unwrap();
        let r = ols_row(&z, 2, 1).unwrap();
        assert!((r.coefficients[1] - 1.0).abs() < 1e-12);
        assert_eq!(r.coefficients[0], 0.0);
        assert!(residual_var(&z, 2, 1).unwrap() < 1e-20);
    }

    #[test]
    fn noiseless_linear_system_recovered() {
        let mut m = normals(50, 5, 3);
        let a = [0.5, -0.25, 0.0, 1.5];
        for t in 0..50 {
            m[(t, 4)] = (0..4).map(|j| a[j] * m[(t, j)]).sum();
        }
        let z = DataMatrix::new(m).unwrap();
        let r = ols_row(&z, 4, 10).unwrap();
        for j in 0..4 {
            assert!((r.coefficients[j] - a[j]).abs() < 1e-8);
        }
    }

    #[test]
    fn singular_window_is_reported() {
        let mut m = normals(20, 4, 4);
        for t in 0..20 {
            m[(t, 1)] = 2.0 * m[(t, 0)];
        }
        let z = DataMatrix::new(m).unwrap();
        assert!(matches!(ols_row(&z, 2, 2), Err(Error::SingularGram { row: 2, .. })));
        let z = DataMatrix::new(normals(3, 6, 5)).unwrap();
        assert!(matches!(ols_row(&z, 5, 5), Err(Error::SingularGram { .. })));
    }

    #[test]
    fn first_column_variance_near_one() {
        let z = DataMatrix::new(normals(4000, 2, 6)).unwrap();
        assert!((residual_var(&z, 0, 1).unwrap() - 1.0).abs() < 0.1);
    }

    #[test]
    fn threshold_blocks() {
        let k0 = 3;
        assert_eq!(threshold_level(3, k0, 2.0), 0.0);
        assert_eq!(threshold_level(6, k0, 2.0), 2f64.sqrt());
        assert_eq!(threshold_level(9, k0, 2.0), 4f64.sqrt());
        assert_eq!(threshold_block(1, k0), 0);
        assert_eq!(threshold_block(4, 4), 0);
        assert_eq!(threshold_block(5, 4), 1);
        assert_eq!(threshold_block(8, 4), 1);
        assert_eq!(threshold_block(9, 4), 2);
        assert_eq!(threshold_block(16, 4), 2);
        assert_eq!(threshold_block(17, 4), 3);
    }

    #[test]
    fn threshold_row_casework() {
        let i = 10;
        let (k0, k1, r) = (2, 7, 0.04);
        // lags 10..1 for j = 0..9
        let c = vec![9.0, 9.0, 9.0, 9.0, 0.1, 0.3, 0.15, 0.25, 0.01, -0.02];
        let out = threshold_row(&c, i, k0, k1, r);
        assert_eq!(&out[..4], &[0.0; 4]);
        // lag 6: block 2, λ = sqrt(0.08) ≈ 0.283
        assert_eq!(out[4], 0.0);
        // lag 5: block 2
        assert_eq!(out[5], 0.3);
        // lag 4: block 1, λ = 0.2
        assert_eq!(out[6], 0.0);
        // lag 3: block 1
        assert_eq!(out[7], 0.25);
        // lag 2: block 0, λ = 0, kept whenever nonzero
        assert_eq!(out[8], 0.01);
        assert_eq!(out[9], -0.02);
        assert!(threshold_row(&[0.0; 10], i, k0, k1, r).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn full_window_banding_is_inverse_sample_covariance() {
        let z = DataMatrix::new(normals(400, 6, 7)).unwrap();
        let est = banding_estimate(&z, 5).unwrap();
        let inv = z.gram().inverse_spd().unwrap();
        for i in 0..6 {
            for j in 0..6 {
                assert!((est.get(i, j) - inv.get(i, j)).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn frob_fit_structure() {
        let band = SpectralBand::new(3.0).unwrap();
        let z = DataMatrix::new(normals(64, 20, 8)).unwrap();
        let cfg = ThresholdConfig::new(1.0, band);
        let fit = frob_fit(&z, &cfg).unwrap();
        assert_eq!(fit.k0, 3);
        assert_eq!(fit.k1, 16);
        for i in 0..20 {
            for j in 0..i {
                let lag = i - j;
                if lag >= fit.k1 {
                    assert_eq!(fit.thresholded[(i, j)], 0.0);
                } else if lag < fit.k0 {
                    assert_eq!(fit.thresholded[(i, j)].to_bits(), fit.raw[(i, j)].to_bits());
                }
            }
        }
        let ev = matcore::eigenvalues(fit.estimate.as_mat()).unwrap();
        assert!(ev[0] > 0.0);
    }

    #[test]
    fn config_validation() {
        let band = SpectralBand::new(2.0).unwrap();
        assert!(ThresholdConfig { alpha: 1.0, c: 1.0, band }.validate(100).is_err());
        assert!(ThresholdConfig::new(1.0, band).validate(100).is_ok());
        assert!(ThresholdConfig::new(-1.0, band).validate(100).is_err());
    }

    #[test]
    fn banding_rule_example() {
        assert_eq!(banding_bandwidth(1.0, 500, 500, Rounding::Floor).unwrap(), 2);
    }
}
