use faer::{Mat, MatRef};

use super::ops::{add_expanded, crop_clipped};
use super::SymMatrix;
use crate::{Error, Result};

/// Taper weight `max(0, 2 − d/k) − max(0, 1 − d/k)` at lag `d`.
pub fn taper_weight(d: usize, k: usize) -> f64 {
    let r = d as f64 / k as f64;
    (2.0 - r).max(0.0) - (1.0 - r).max(0.0)
}

fn check_k(k: usize) -> Result<()> {
    if k == 0 {
        return Err(Error::InvalidParameter("bandwidth k must be at least 1".into()));
    }
    Ok(())
}

/// Entrywise tapered matrix `ω*_ij = m_ij ω_ij`.
pub fn taper_target(omega: &SymMatrix, k: usize) -> Result<SymMatrix> {
    check_k(k)?;
    let o = omega.as_mat();
    let p = omega.dim();
    let w: Vec<f64> = (0..p).map(|d| taper_weight(d, k)).collect();
    SymMatrix::from_fn(p, omega.is_symmetric(), |i, j| w[i.abs_diff(j)] * o[(i, j)])
}

/// Sum of expanded clipped crops of size `s` at 1-based positions
/// `m + s·j` for `m = 2..=s+1`, `j = −1..=⌊p/s⌋`.
fn block_sum(o: MatRef<'_, f64>, s: usize) -> Mat<f64> {
    let p = o.nrows();
    let mut acc = Mat::zeros(p, p);
    for m in 2..=(s + 1) as isize {
        for j in -1..=(p / s) as isize {
            let start = m + s as isize * j - 1;
            let c = crop_clipped(o, start, s);
            if !c.is_empty() {
                add_expanded(acc.as_mut(), c.block.as_ref(), c.start as isize, 1.0);
            }
        }
    }
    acc
}

/// The tapered matrix written as a difference of block sums of crops of
/// sizes `2k` and `k`; an independent check on [`taper_target`].
pub fn taper_decomposition(omega: &SymMatrix, k: usize) -> Result<SymMatrix> {
    check_k(k)?;
    let o = omega.as_mat();
    let p = omega.dim();
    let big = block_sum(o, 2 * k);
    let small = block_sum(o, k);
    let inv_k = 1.0 / k as f64;
    SymMatrix::from_fn(p, omega.is_symmetric(), |i, j| inv_k * (big[(i, j)] - small[(i, j)]))
}
