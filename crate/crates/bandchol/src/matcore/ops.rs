use faer::{Mat, MatMut, MatRef};

use crate::{Error, Result};

/// A clipped crop: the block of `E` on `[start, start + len)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClippedBlock {
    pub block: Mat<f64>,
    pub start: usize,
}

impl ClippedBlock {
    pub fn len(&self) -> usize {
        self.block.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.block.nrows() == 0
    }

    /// Absolute indices covered by the block.
    pub fn indices(&self) -> std::ops::Range<usize> {
        self.start..self.start + self.len()
    }
}

/// Clips the integer range `[m, m + k)` to `[0, p)`.
pub(crate) fn clip_range(m: isize, k: usize, p: usize) -> std::ops::Range<usize> {
    let lo = m.max(0) as usize;
    let hi = (m + k as isize).clamp(0, p as isize) as usize;
    if lo >= hi {
        lo.min(p)..lo.min(p)
    } else {
        lo..hi
    }
}

/// Strict crop `C_m^k(E)`: the `k × k` principal block starting at `m`.
pub fn crop(e: MatRef<'_, f64>, m: usize, k: usize) -> Result<Mat<f64>> {
    super::check_square(e)?;
    let p = e.nrows();
    if k == 0 || m + k > p {
        return Err(Error::OutOfRange(format!("crop of size {k} at {m} does not fit in dimension {p}")));
    }
    Ok(e.submatrix(m, m, k, k).to_owned())
}

/// Crop on `[m, m + k) ∩ [0, p)`; `m` may be negative.
pub fn crop_clipped(e: MatRef<'_, f64>, m: isize, k: usize) -> ClippedBlock {
    let r = clip_range(m, k, e.nrows());
    ClippedBlock { block: e.submatrix(r.start, r.start, r.len(), r.len()).to_owned(), start: r.start }
}

/// Strict expand `E_m^p(C)`: a `p × p` zero matrix with `C` placed at `m`.
pub fn expand(c: MatRef<'_, f64>, p: usize, m: usize) -> Result<Mat<f64>> {
    super::check_square(c)?;
    let k = c.nrows();
    if m + k > p {
        return Err(Error::OutOfRange(format!("expand of size {k} at {m} does not fit in dimension {p}")));
    }
    let mut out = Mat::zeros(p, p);
    out.as_mut().submatrix_mut(m, m, k, k).copy_from(c);
    Ok(out)
}

/// Expand with entries that fall outside `[0, p)` discarded; `m` may be negative.
pub fn expand_clipped(c: MatRef<'_, f64>, p: usize, m: isize) -> Mat<f64> {
    let mut out = Mat::zeros(p, p);
    add_expanded(out.as_mut(), c, m, 1.0);
    out
}

/// `dst += scale · E_m(C)` with clipping.
pub fn add_expanded(mut dst: MatMut<'_, f64>, c: MatRef<'_, f64>, m: isize, scale: f64) {
    let p = dst.nrows();
    let k = c.nrows();
    let r = clip_range(m, k, p);
    let off = (r.start as isize - m) as usize;
    for j in 0..r.len() {
        for i in 0..r.len() {
            dst[(r.start + i, r.start + j)] += scale * c[(off + i, off + j)];
        }
    }
}

/// `bd_k(S)`: keeps entries with `|i − j| ≤ k`.
pub fn band(s: MatRef<'_, f64>, k: usize) -> Mat<f64> {
    Mat::from_fn(s.nrows(), s.ncols(), |i, j| if i.abs_diff(j) <= k { s[(i, j)] } else { 0.0 })
}
