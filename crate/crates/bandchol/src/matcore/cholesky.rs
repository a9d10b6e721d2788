use faer::linalg::solvers::Solve;
use faer::{Mat, MatRef, Side};

use super::{check_square, symmetrize_in_place, CholeskyModel, SymMatrix};
use crate::{Error, Result};

/// Modified Cholesky decomposition `Ω = (I−A)ᵀ D⁻¹ (I−A)`.
///
/// Factorises the index-reversed matrix `JΩJ = M Mᵀ`; then `U = JMJ` is
/// upper triangular with `Ω = U Uᵀ`, giving `d_i = 1/u_ii²` and
/// `a_ij = −u_ji / u_ii`.
pub fn modified_cholesky(omega: &SymMatrix) -> Result<CholeskyModel> {
    let o = omega.as_mat();
    check_square(o)?;
    if !o.is_all_finite() {
        return Err(Error::NonFinite);
    }
    crate::sequential_kernels();
    let p = o.nrows();
    let rev = Mat::from_fn(p, p, |i, j| o[(p - 1 - i, p - 1 - j)]);
    let llt = rev.llt(Side::Lower).map_err(|_| Error::NotPositiveDefinite)?;
    let m = llt.L();
    let u = |i: usize, j: usize| m[(p - 1 - i, p - 1 - j)];
    let d: Vec<f64> = (0..p).map(|i| 1.0 / (u(i, i) * u(i, i))).collect();
    let a = Mat::from_fn(p, p, |i, j| if j < i { -u(j, i) / u(i, i) } else { 0.0 });
    CholeskyModel::new(a, d)
}

/// `(I−A)ᵀ diag(D)⁻¹ (I−A)`.
pub fn recompose(model: &CholeskyModel) -> SymMatrix {
    crate::sequential_kernels();
    let p = model.dim();
    let d = model.d();
    let a = model.a();
    let w = Mat::from_fn(p, p, |i, j| {
        let v = if i == j { 1.0 } else { -a[(i, j)] };
        v / d[i].sqrt()
    });
    let mut out = w.transpose() * &w;
    symmetrize_in_place(&mut out);
    SymMatrix::from_symmetric(out).expect("symmetrized")
}

/// Inverse of a symmetric positive definite matrix via Cholesky.
pub fn inverse_spd(s: MatRef<'_, f64>) -> Result<SymMatrix> {
    check_square(s)?;
    if !s.is_all_finite() {
        return Err(Error::NonFinite);
    }
    crate::sequential_kernels();
    let p = s.nrows();
    let llt = s.llt(Side::Lower).map_err(|_| Error::NotPositiveDefinite)?;
    let mut inv = llt.solve(Mat::<f64>::identity(p, p));
    symmetrize_in_place(&mut inv);
    SymMatrix::from_symmetric(inv)
}

/// Linear projection of `X_i` onto `X_{i−k..i}` under covariance `Σ`.
#[derive(Debug, Clone, PartialEq)]
pub struct Regression {
    /// Length `i`; zero outside the window.
    pub coefficients: Vec<f64>,
    pub residual_variance: f64,
}

/// Population regression by direct solution of the normal equations.
///
/// Uses an LU solve on the conditioning block so that it is independent of
/// the Cholesky path in [`modified_cholesky`].
pub fn population_regression(sigma: &SymMatrix, i: usize, k: usize) -> Result<Regression> {
    let s = sigma.as_mat();
    let p = sigma.dim();
    if i >= p {
        return Err(Error::OutOfRange(format!("row {i} outside dimension {p}")));
    }
    if k > i {
        return Err(Error::OutOfRange(format!("window {k} exceeds the {i} predecessors of row {i}")));
    }
    let mut coefficients = vec![0.0; i];
    if k == 0 {
        return Ok(Regression { coefficients, residual_variance: s[(i, i)] });
    }
    crate::sequential_kernels();
    let lo = i - k;
    let block = s.submatrix(lo, lo, k, k).to_owned();
    if block.llt(Side::Lower).is_err() {
        return Err(Error::NotPositiveDefinite);
    }
    let rhs = Mat::from_fn(k, 1, |r, _| s[(lo + r, i)]);
    let beta = block.partial_piv_lu().solve(rhs);
    let mut explained = 0.0;
    for r in 0..k {
        coefficients[lo + r] = beta[(r, 0)];
        explained += beta[(r, 0)] * s[(lo + r, i)];
    }
    Ok(Regression { coefficients, residual_variance: s[(i, i)] - explained })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ar1(p: usize, rho: f64) -> SymMatrix {
        SymMatrix::from_fn(p, true, |i, j| rho.powi(i.abs_diff(j) as i32)).unwrap()
    }

    #[test]
    fn identity_decomposes_trivially() {
        let m = modified_cholesky(&SymMatrix::identity(4)).unwrap();
        assert_eq!(m.a(), Mat::<f64>::zeros(4, 4).as_ref());
        assert_eq!(m.d(), &[1.0; 4]);
    }

    #[test]
    fn two_by_two_recompose() {
        let a_val = 0.7;
        let mut a = Mat::zeros(2, 2);
        a[(1, 0)] = a_val;
        let o = recompose(&CholeskyModel::new(a, vec![1.0, 1.0]).unwrap());
        let want = [[1.0 + a_val * a_val, -a_val], [-a_val, 1.0]];
        for i in 0..2 {
            for j in 0..2 {
                assert!((o.get(i, j) - want[i][j]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn ar1_regression() {
        let r = population_regression(&ar1(5, 0.5), 2, 1).unwrap();
        assert_eq!(r.coefficients.len(), 2);
        assert!(r.coefficients[0].abs() < 1e-15);
        assert!((r.coefficients[1] - 0.5).abs() < 1e-14);
        assert!((r.residual_variance - 0.75).abs() < 1e-14);
    }

    #[test]
    fn identity_regression_is_zero() {
        let r = population_regression(&SymMatrix::identity(6), 5, 3).unwrap();
        assert!(r.coefficients.iter().all(|&c| c == 0.0));
        assert_eq!(r.residual_variance, 1.0);
    }

    #[test]
    fn full_window_matches_decomposition_of_inverse() {
        let sigma = ar1(6, 0.6);
        let omega = sigma.inverse_spd().unwrap();
        let m = modified_cholesky(&omega).unwrap();
        for i in 1..6 {
            let r = population_regression(&sigma, i, i).unwrap();
            for j in 0..i {
                assert!((r.coefficients[j] - m.a()[(i, j)]).abs() < 1e-10);
            }
            assert!((r.residual_variance - m.d()[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn rejects_non_pd() {
        let s = SymMatrix::from_fn(2, true, |i, j| if i == j { 1.0 } else { 2.0 }).unwrap();
        assert!(matches!(modified_cholesky(&s), Err(Error::NotPositiveDefinite)));
        assert!(population_regression(&s, 2, 1).is_err());
    }
}
