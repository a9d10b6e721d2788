use faer::{Mat, MatRef, Side};

use super::{check_square, symmetrize_in_place, SpectralBand, SymMatrix};
use crate::{Error, Result};

/// Eigenvalues (or singular values) this close to a band edge count as inside.
pub const EDGE_TOL: f64 = 1e-12;

fn finite(m: MatRef<'_, f64>) -> Result<()> {
    if m.is_all_finite() {
        Ok(())
    } else {
        Err(Error::NonFinite)
    }
}

/// Eigenvalues of a symmetric matrix in ascending order.
pub fn eigenvalues(s: MatRef<'_, f64>) -> Result<Vec<f64>> {
    check_square(s)?;
    finite(s)?;
    crate::sequential_kernels();
    let mut ev = s
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::Decomposition(format!("{e:?}")))?;
    ev.sort_by(f64::total_cmp);
    Ok(ev)
}

fn singular_values(s: MatRef<'_, f64>) -> Result<Vec<f64>> {
    finite(s)?;
    crate::sequential_kernels();
    s.singular_values().map_err(|e| Error::Decomposition(format!("{e:?}")))
}

fn shifted_llt_ok(s: MatRef<'_, f64>, shift: f64, sign: f64) -> bool {
    let p = s.nrows();
    let m = Mat::from_fn(p, p, |i, j| sign * s[(i, j)] + if i == j { shift } else { 0.0 });
    m.llt(Side::Lower).is_ok()
}

/// True when every eigenvalue of the symmetric `s` lies in the band (up to [`EDGE_TOL`]).
///
/// Gershgorin discs and two shifted Cholesky factorisations settle most
/// cases; the eigenvalues are computed only when those are inconclusive.
pub fn in_band(s: MatRef<'_, f64>, band: SpectralBand) -> Result<bool> {
    check_square(s)?;
    finite(s)?;
    crate::sequential_kernels();
    let lo = band.lower() - EDGE_TOL;
    let hi = band.upper() + EDGE_TOL;
    let p = s.nrows();
    let mut gersh = true;
    for i in 0..p {
        let r: f64 = (0..p).filter(|&j| j != i).map(|j| s[(i, j)].abs()).sum();
        if s[(i, i)] - r < lo || s[(i, i)] + r > hi {
            gersh = false;
            break;
        }
    }
    if gersh {
        return Ok(true);
    }
    if (0..p).any(|i| s[(i, i)] < lo || s[(i, i)] > hi) {
        return Ok(false);
    }
    if shifted_llt_ok(s, -lo, 1.0) && shifted_llt_ok(s, hi, -1.0) {
        return Ok(true);
    }
    let ev = eigenvalues(s)?;
    Ok(ev[0] >= lo && ev[p - 1] <= hi)
}

/// `P_η` for a symmetric matrix: eigenvalues clipped to `[η⁻¹, η]`.
///
/// Input already inside the band is returned unchanged, bit for bit.
pub fn project_symmetric(s: MatRef<'_, f64>, band: SpectralBand) -> Result<Mat<f64>> {
    if in_band(s, band)? {
        return Ok(s.to_owned());
    }
    let evd = s
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Decomposition(format!("{e:?}")))?;
    let u = evd.U();
    let lam = evd.S().column_vector();
    let p = s.nrows();
    let mut scaled = u.to_owned();
    for j in 0..p {
        let l = lam[j];
        let c = if band.contains(l) { l } else { band.clamp(l) };
        for i in 0..p {
            scaled[(i, j)] *= c;
        }
    }
    let mut out = &scaled * u.transpose();
    symmetrize_in_place(&mut out);
    Ok(out)
}

/// `P_η` for a general square matrix: singular values clipped to `[η⁻¹, η]`.
pub fn project_general(s: MatRef<'_, f64>, band: SpectralBand) -> Result<Mat<f64>> {
    check_square(s)?;
    let sv = singular_values(s)?;
    if sv.iter().all(|&v| band.contains(v)) {
        return Ok(s.to_owned());
    }
    let svd = s.svd().map_err(|e| Error::Decomposition(format!("{e:?}")))?;
    let u = svd.U();
    let v = svd.V();
    let sig = svd.S().column_vector();
    let p = s.nrows();
    let mut scaled = u.to_owned();
    for j in 0..p {
        let l = sig[j];
        let c = if band.contains(l) { l } else { band.clamp(l) };
        for i in 0..p {
            scaled[(i, j)] *= c;
        }
    }
    Ok(&scaled * v.transpose())
}

/// `P_η` dispatching on the symmetry tag.
pub fn project_spectrum(s: &SymMatrix, band: SpectralBand) -> Result<SymMatrix> {
    if s.is_symmetric() {
        SymMatrix::from_symmetric(project_symmetric(s.as_mat(), band)?)
    } else {
        SymMatrix::general(project_general(s.as_mat(), band)?)
    }
}

/// Largest singular value.
pub fn op_norm(s: MatRef<'_, f64>) -> Result<f64> {
    if s.nrows() == 0 || s.ncols() == 0 {
        return Ok(0.0);
    }
    Ok(singular_values(s)?.into_iter().fold(0.0, f64::max))
}

/// Largest absolute eigenvalue of a symmetric matrix.
pub fn op_norm_symmetric(s: MatRef<'_, f64>) -> Result<f64> {
    let ev = eigenvalues(s)?;
    Ok(ev[0].abs().max(ev[ev.len() - 1].abs()))
}

pub fn frob_norm(s: MatRef<'_, f64>) -> f64 {
    let mut acc = 0.0;
    for j in 0..s.ncols() {
        for i in 0..s.nrows() {
            acc += s[(i, j)] * s[(i, j)];
        }
    }
    acc.sqrt()
}

/// Maximum absolute column sum.
pub fn l1_matrix_norm(s: MatRef<'_, f64>) -> f64 {
    (0..s.ncols())
        .map(|j| (0..s.nrows()).map(|i| s[(i, j)].abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// `max(λ_max, 1/λ_min)` of a positive definite matrix: the smallest `η`
/// whose band contains its spectrum.
pub fn spectral_bound(omega: MatRef<'_, f64>) -> Result<f64> {
    let ev = eigenvalues(omega)?;
    if !(ev[0] > 0.0) {
        return Err(Error::NotPositiveDefinite);
    }
    Ok(ev[ev.len() - 1].max(1.0 / ev[0]))
}

impl SymMatrix {
    /// Operator norm, using the eigenvalues when the matrix is symmetric.
    pub fn op_norm(&self) -> Result<f64> {
        if self.is_symmetric() {
            op_norm_symmetric(self.as_mat())
        } else {
            op_norm(self.as_mat())
        }
    }

    pub fn frob_norm(&self) -> f64 {
        frob_norm(self.as_mat())
    }
}
