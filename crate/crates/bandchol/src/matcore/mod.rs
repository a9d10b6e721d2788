//! Dense matrix primitives shared by every estimator.

mod cholesky;
pub mod io;
mod ops;
mod spectral;
mod taper;

pub use io::{load_data, load_square, read_data, read_square, save_data, save_square, write_data, write_square, MatrixFormat};
pub use cholesky::{inverse_spd, modified_cholesky, population_regression, recompose, Regression};
pub(crate) use ops::clip_range as ops_clip;
pub use ops::{add_expanded, band, crop, crop_clipped, expand, expand_clipped, ClippedBlock};
pub use spectral::{
    eigenvalues, frob_norm, in_band, l1_matrix_norm, op_norm, op_norm_symmetric, project_general,
    project_spectrum, project_symmetric, spectral_bound, EDGE_TOL,
};
pub use taper::{taper_decomposition, taper_target, taper_weight};

use faer::{Mat, MatRef};

use crate::{Error, Result};

/// Dense square matrix with a symmetry tag.
///
/// When `symmetric` is set the entries are exactly symmetric; every
/// constructor enforces this.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    mat: Mat<f64>,
    symmetric: bool,
}

impl SymMatrix {
    /// Wraps an exactly symmetric matrix, rejecting anything else.
    pub fn from_symmetric(mat: Mat<f64>) -> Result<Self> {
        check_square(mat.as_ref())?;
        let p = mat.nrows();
        for j in 0..p {
            for i in j + 1..p {
                if mat[(i, j)] != mat[(j, i)] {
                    return Err(Error::NotSymmetric);
                }
            }
        }
        Ok(Self { mat, symmetric: true })
    }

    /// Replaces `M` by `(M + Mᵀ)/2`, which is exactly symmetric in floating point.
    pub fn symmetrize(mut mat: Mat<f64>) -> Result<Self> {
        check_square(mat.as_ref())?;
        symmetrize_in_place(&mut mat);
        Ok(Self { mat, symmetric: true })
    }

    /// Wraps a square matrix without a symmetry claim.
    pub fn general(mat: Mat<f64>) -> Result<Self> {
        check_square(mat.as_ref())?;
        Ok(Self { mat, symmetric: false })
    }

    pub fn identity(p: usize) -> Self {
        Self { mat: Mat::identity(p, p), symmetric: true }
    }

    pub fn from_diagonal(d: &[f64]) -> Self {
        let p = d.len();
        Self { mat: Mat::from_fn(p, p, |i, j| if i == j { d[i] } else { 0.0 }), symmetric: true }
    }

    /// Builds a matrix from a row-major closure.
    pub fn from_fn(p: usize, symmetric: bool, f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mat = Mat::from_fn(p, p, f);
        if symmetric {
            Self::from_symmetric(mat)
        } else {
            Self::general(mat)
        }
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.mat[(i, j)]
    }

    pub fn as_mat(&self) -> MatRef<'_, f64> {
        self.mat.as_ref()
    }

    pub fn into_mat(self) -> Mat<f64> {
        self.mat
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.mat[(i, i)]).collect()
    }

    /// Rows as nested vectors, for serialisation and tests.
    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        let p = self.dim();
        (0..p).map(|i| (0..p).map(|j| self.mat[(i, j)]).collect()).collect()
    }

    /// Inverse of a symmetric positive definite matrix.
    pub fn inverse_spd(&self) -> Result<SymMatrix> {
        inverse_spd(self.as_mat())
    }
}

/// Strictly lower triangular `A` and positive diagonal `D` with
/// `Ω = (I−A)ᵀ D⁻¹ (I−A)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CholeskyModel {
    a: Mat<f64>,
    d: Vec<f64>,
}

impl CholeskyModel {
    pub fn new(a: Mat<f64>, d: Vec<f64>) -> Result<Self> {
        check_square(a.as_ref())?;
        let p = a.nrows();
        if d.len() != p {
            return Err(Error::Dimension(format!("A is {p}x{p} but D has {} entries", d.len())));
        }
        for i in 0..p {
            for j in i..p {
                if a[(i, j)] != 0.0 {
                    return Err(Error::InvalidParameter(format!(
                        "A must be strictly lower triangular, found A[{i}][{j}] = {}",
                        a[(i, j)]
                    )));
                }
            }
        }
        if a.as_ref().has_nan() || !a.as_ref().is_all_finite() {
            return Err(Error::NonFinite);
        }
        if let Some(i) = d.iter().position(|&v| !(v > 0.0) || !v.is_finite()) {
            return Err(Error::InvalidParameter(format!("D[{i}] = {} must be positive", d[i])));
        }
        Ok(Self { a, d })
    }

    pub fn identity(p: usize) -> Self {
        Self { a: Mat::zeros(p, p), d: vec![1.0; p] }
    }

    pub fn dim(&self) -> usize {
        self.d.len()
    }

    pub fn a(&self) -> MatRef<'_, f64> {
        self.a.as_ref()
    }

    pub fn d(&self) -> &[f64] {
        &self.d
    }

    /// `I − A`.
    pub fn unit_lower(&self) -> Mat<f64> {
        let p = self.dim();
        Mat::from_fn(p, p, |i, j| if i == j { 1.0 } else { -self.a[(i, j)] })
    }
}

/// `n × p` observation matrix, one sample per row.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    z: Mat<f64>,
}

impl DataMatrix {
    pub fn new(z: Mat<f64>) -> Result<Self> {
        if z.nrows() == 0 || z.ncols() == 0 {
            return Err(Error::Dimension("data matrix must be non-empty".into()));
        }
        if !z.as_ref().is_all_finite() {
            return Err(Error::NonFinite);
        }
        Ok(Self { z })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let p = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != p) {
            return Err(Error::Dimension("ragged rows".into()));
        }
        Self::new(Mat::from_fn(n, p, |i, j| rows[i][j]))
    }

    pub fn n(&self) -> usize {
        self.z.nrows()
    }

    pub fn p(&self) -> usize {
        self.z.ncols()
    }

    pub fn as_mat(&self) -> MatRef<'_, f64> {
        self.z.as_ref()
    }

    pub fn into_mat(self) -> Mat<f64> {
        self.z
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.z[(i, j)]
    }

    /// Applies `f` to every entry.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> DataMatrix {
        DataMatrix { z: Mat::from_fn(self.n(), self.p(), |i, j| f(self.z[(i, j)])) }
    }

    /// Sample second-moment matrix `ZᵀZ/n`.
    pub fn gram(&self) -> SymMatrix {
        crate::sequential_kernels();
        let mut g = self.z.transpose() * &self.z;
        g *= faer::Scale(1.0 / self.n() as f64);
        symmetrize_in_place(&mut g);
        SymMatrix { mat: g, symmetric: true }
    }
}

/// Spectral band `[η⁻¹, η]` with `η > 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralBand {
    eta: f64,
}

impl SpectralBand {
    pub fn new(eta: f64) -> Result<Self> {
        if !(eta > 1.0) || !eta.is_finite() {
            return Err(Error::InvalidParameter(format!("eta must be a finite number > 1, got {eta}")));
        }
        Ok(Self { eta })
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn lower(&self) -> f64 {
        1.0 / self.eta
    }

    pub fn upper(&self) -> f64 {
        self.eta
    }

    /// Scalar clip `min(max(x, η⁻¹), η)`.
    pub fn clamp(&self, x: f64) -> f64 {
        x.max(self.lower()).min(self.upper())
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lower() - EDGE_TOL && x <= self.upper() + EDGE_TOL
    }
}

pub(crate) fn check_square(m: MatRef<'_, f64>) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::Dimension(format!("expected a square matrix, got {}x{}", m.nrows(), m.ncols())));
    }
    if m.nrows() == 0 {
        return Err(Error::Dimension("matrix dimension must be at least 1".into()));
    }
    Ok(())
}

pub(crate) fn symmetrize_in_place(m: &mut Mat<f64>) {
    let p = m.nrows();
    for j in 0..p {
        for i in j + 1..p {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

impl From<SymMatrix> for Mat<f64> {
    fn from(s: SymMatrix) -> Self {
        s.mat
    }
}
