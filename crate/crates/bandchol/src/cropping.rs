//! Local cropping estimator of the precision matrix under the operator norm.
//!
//! For each position `m` a window of the Gram matrix around `m` is projected
//! onto the spectral band, inverted, and its center block is kept. Two
//! families of such blocks (sizes `2k` and `k`) are expanded back to `p × p`
//! and combined as `P_η((1/k)(Σ size-2k − Σ size-k))`.

use std::ops::Range;

use faer::linalg::triangular_solve::solve_lower_triangular_in_place;
use faer::{Mat, MatRef, Par, Side};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::matcore::{self, add_expanded, in_band, symmetrize_in_place, DataMatrix, SpectralBand, SymMatrix};
use crate::{Error, Result};

/// How each local inverse is scaled before assembly.
///
/// `Wishart` multiplies the inverse of a `w × w` sample window by
/// `(n − w − 1)/n`, which makes it unbiased for the population inverse under
/// Gaussian data. `Plain` uses the inverse as is. Without a sample size
/// (oracle Gram input, rank matrices) no scaling is applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum LocalScaling {
    Plain,
    #[default]
    Wishart,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CropConfig {
    pub k: usize,
    pub band: SpectralBand,
    pub scaling: LocalScaling,
}

impl CropConfig {
    pub fn new(k: usize, band: SpectralBand) -> Self {
        Self { k, band, scaling: LocalScaling::default() }
    }

    pub fn with_scaling(mut self, scaling: LocalScaling) -> Self {
        self.scaling = scaling;
        self
    }

    fn validate(&self, p: usize) -> Result<()> {
        if self.k == 0 || self.k >= p {
            return Err(Error::InvalidParameter(format!("bandwidth k = {} must satisfy 1 <= k < p = {p}", self.k)));
        }
        Ok(())
    }
}

/// A local block together with the absolute indices it covers.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalBlock {
    pub matrix: Mat<f64>,
    pub indices: Range<usize>,
}

fn window(m: isize, k: usize, p: usize) -> Range<usize> {
    matcore::ops_clip(m - k as isize, 3 * k, p)
}

fn target(m: isize, k: usize, p: usize) -> Range<usize> {
    matcore::ops_clip(m, k, p)
}

/// Projected local sample covariance on the window `[m−k, m+2k) ∩ [0, p)`.
pub fn local_cov(z: &DataMatrix, m: isize, k: usize, band: SpectralBand) -> Result<LocalBlock> {
    local_cov_from_gram(&z.gram(), m, k, band)
}

/// [`local_cov`] with a precomputed Gram (or any symmetric surrogate).
pub fn local_cov_from_gram(g: &SymMatrix, m: isize, k: usize, band: SpectralBand) -> Result<LocalBlock> {
    if k == 0 {
        return Err(Error::InvalidParameter("bandwidth k must be at least 1".into()));
    }
    let w = window(m, k, g.dim());
    if w.is_empty() {
        return Err(Error::EmptyWindow);
    }
    let block = g.as_mat().submatrix(w.start, w.start, w.len(), w.len());
    Ok(LocalBlock { matrix: matcore::project_symmetric(block, band)?, indices: w })
}

/// Block of the inverse of [`local_cov`] on the target `[m, m+k) ∩ [0, p)`.
pub fn local_prec(z: &DataMatrix, m: isize, k: usize, band: SpectralBand) -> Result<LocalBlock> {
    local_prec_from_gram(&z.gram(), m, k, band)
}

/// [`local_prec`] with a precomputed Gram.
pub fn local_prec_from_gram(g: &SymMatrix, m: isize, k: usize, band: SpectralBand) -> Result<LocalBlock> {
    let cov = local_cov_from_gram(g, m, k, band)?;
    let t = target(m, k, g.dim());
    if t.is_empty() {
        return Err(Error::EmptyWindow);
    }
    let inv = matcore::inverse_spd(cov.matrix.as_ref())?;
    let off = t.start - cov.indices.start;
    let matrix = inv.as_mat().submatrix(off, off, t.len(), t.len()).to_owned();
    Ok(LocalBlock { matrix, indices: t })
}

/// Target block of the inverse of `P_η(G_W)`, scaled by `factor`.
///
/// When the window is already inside the band the target block is read off
/// a Cholesky factor of the window with the target indices ordered last:
/// `(W⁻¹)_TT = L_TT⁻ᵀ L_TT⁻¹`. Otherwise the clipped eigendecomposition is used.
fn target_inverse(g: MatRef<'_, f64>, w: &Range<usize>, t: &Range<usize>, band: SpectralBand, factor: f64) -> Result<Mat<f64>> {
    let win = g.submatrix(w.start, w.start, w.len(), w.len());
    let tl = t.len();
    let off = t.start - w.start;
    let mut out = if in_band(win, band)? {
        let order: Vec<usize> = (0..w.len()).filter(|&i| i < off || i >= off + tl).chain(off..off + tl).collect();
        let wp = Mat::from_fn(w.len(), w.len(), |i, j| win[(order[i], order[j])]);
        let llt = wp.llt(Side::Lower).map_err(|_| Error::NotPositiveDefinite)?;
        let r = w.len() - tl;
        let ltt = llt.L().submatrix(r, r, tl, tl);
        let mut x = Mat::<f64>::identity(tl, tl);
        solve_lower_triangular_in_place(ltt, x.as_mut(), Par::Seq);
        x.transpose() * &x
    } else {
        let evd = win
            .self_adjoint_eigen(Side::Lower)
            .map_err(|e| Error::Decomposition(format!("{e:?}")))?;
        let u = evd.U();
        let lam = evd.S().column_vector();
        let ut = u.submatrix(off, 0, tl, w.len());
        let mut scaled = ut.to_owned();
        for j in 0..w.len() {
            let l = lam[j];
            let c = if band.contains(l) { l } else { band.clamp(l) };
            for i in 0..tl {
                scaled[(i, j)] /= c;
            }
        }
        &scaled * ut.transpose()
    };
    symmetrize_in_place(&mut out);
    if factor != 1.0 {
        out *= faer::Scale(factor);
    }
    Ok(out)
}

fn scale_factor(scaling: LocalScaling, n: Option<usize>, w: usize) -> Result<f64> {
    match (scaling, n) {
        (LocalScaling::Wishart, Some(n)) => {
            if n <= w + 1 {
                return Err(Error::InvalidParameter(format!(
                    "window of size {w} needs more than {} samples for the Wishart scaling, got n = {n}",
                    w + 1
                )));
            }
            Ok((n - w - 1) as f64 / n as f64)
        }
        _ => Ok(1.0),
    }
}

const CHUNK: usize = 32;

/// `Σ_m E_m(local block of size s at m)` over `m = 1−s .. p−1`, summed in
/// ascending `m`. Blocks within a chunk are computed in parallel.
fn local_sum(g: MatRef<'_, f64>, s: usize, band: SpectralBand, scaling: LocalScaling, n: Option<usize>) -> Result<Mat<f64>> {
    let p = g.nrows();
    let positions: Vec<isize> = (1 - s as isize..p as isize).collect();
    let mut acc = Mat::zeros(p, p);
    for chunk in positions.chunks(CHUNK) {
        let blocks: Vec<(usize, Mat<f64>)> = chunk
            .par_iter()
            .map(|&m| {
                let w = window(m, s, p);
                let t = target(m, s, p);
                let f = scale_factor(scaling, n, w.len())?;
                Ok((t.start, target_inverse(g, &w, &t, band, f)?))
            })
            .collect::<Result<_>>()?;
        for (start, b) in &blocks {
            add_expanded(acc.as_mut(), b.as_ref(), *start as isize, 1.0);
        }
    }
    Ok(acc)
}

/// Local cropping estimator from data.
pub fn crop_estimate(z: &DataMatrix, cfg: &CropConfig) -> Result<SymMatrix> {
    crop_estimate_from_gram(&z.gram(), Some(z.n()), cfg)
}

/// Local cropping estimator from a Gram matrix; `n` is the sample size behind
/// it, or `None` for population or rank-based input.
pub fn crop_estimate_from_gram(g: &SymMatrix, n: Option<usize>, cfg: &CropConfig) -> Result<SymMatrix> {
    crate::sequential_kernels();
    let p = g.dim();
    cfg.validate(p)?;
    if !g.is_symmetric() {
        return Err(Error::NotSymmetric);
    }
    let k = cfg.k;
    let gm = g.as_mat();
    let big = local_sum(gm, 2 * k, cfg.band, cfg.scaling, n)?;
    let small = local_sum(gm, k, cfg.band, cfg.scaling, n)?;
    let inv_k = 1.0 / k as f64;
    let raw = Mat::from_fn(p, p, |i, j| inv_k * (big[(i, j)] - small[(i, j)]));
    SymMatrix::from_symmetric(matcore::project_symmetric(raw.as_ref(), cfg.band)?)
}

/// Parameter space a bandwidth rule is tuned for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Space {
    /// Column tail-sum decay.
    P,
    /// Entrywise decay.
    Q,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Rounding {
    #[default]
    Floor,
    Ceil,
}

impl Rounding {
    /// Rounds `x`, absorbing representation error in `x` (so that
    /// `1000^(1/3)` floors to 10).
    pub fn apply(self, x: f64) -> usize {
        let v = match self {
            Rounding::Floor => (x + 1e-9).floor(),
            Rounding::Ceil => (x - 1e-9).ceil(),
        };
        v.max(1.0) as usize
    }
}

/// `⌊n^{1/(2α)}⌋` for `P`, `⌊n^{1/(2α+1)}⌋` for `Q`.
pub fn bandwidth_rule(space: Space, alpha: f64, n: usize) -> Result<usize> {
    bandwidth_rule_rounded(space, alpha, n, Rounding::Floor)
}

pub fn bandwidth_rule_rounded(space: Space, alpha: f64, n: usize, rounding: Rounding) -> Result<usize> {
    if n == 0 {
        return Err(Error::InvalidParameter("sample size must be positive".into()));
    }
    let exponent = match space {
        Space::P if alpha > 0.5 && alpha.is_finite() => 1.0 / (2.0 * alpha),
        Space::P => return Err(Error::InvalidParameter(format!("alpha must exceed 1/2 for P, got {alpha}"))),
        Space::Q if alpha > 0.0 && alpha.is_finite() => 1.0 / (2.0 * alpha + 1.0),
        Space::Q => return Err(Error::InvalidParameter(format!("alpha must be positive for Q, got {alpha}"))),
    };
    Ok(rounding.apply((n as f64).powf(exponent)))
}

/// Clamps a bandwidth to `[1, p−1]`.
pub fn clamp_bandwidth(k: usize, p: usize) -> usize {
    k.clamp(1, p.saturating_sub(1).max(1))
}

/// Smallest and largest eigenvalue over all windows of size `3k` of the Gram
/// matrix; a guide for choosing `η`.
pub fn window_spectrum(g: &SymMatrix, k: usize) -> Result<(f64, f64)> {
    if k == 0 {
        return Err(Error::InvalidParameter("bandwidth k must be at least 1".into()));
    }
    let p = g.dim();
    let starts: Vec<isize> = (1 - k as isize..p as isize).collect();
    let ranges: Vec<(f64, f64)> = starts
        .par_iter()
        .map(|&m| {
            let w = window(m, k, p);
            let ev = matcore::eigenvalues(g.as_mat().submatrix(w.start, w.start, w.len(), w.len()))?;
            Ok((ev[0], ev[ev.len() - 1]))
        })
        .collect::<Result<_>>()?;
    Ok(ranges.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &(a, b)| (lo.min(a), hi.max(b))))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcore::expand_clipped;

    fn band(eta: f64) -> SpectralBand {
        SpectralBand::new(eta).unwrap()
    }

    fn tridiag_sigma(p: usize) -> SymMatrix {
        SymMatrix::from_fn(p, true, |i, j| match i.abs_diff(j) {
            0 => 1.0,
            1 => 0.3,
            2 => 0.05,
            _ => 0.0,
        })
        .unwrap()
    }

    #[test]
    fn windows_shrink_at_boundaries() {
        assert_eq!(window(5, 3, 20), 2..11);
        assert_eq!(window(1 - 3, 3, 20), 0..4);
        assert_eq!(target(1 - 3, 3, 20), 0..1);
        assert_eq!(window(19, 3, 20), 16..20);
        assert_eq!(target(19, 3, 20), 19..20);
    }

    #[test]
    fn identity_gram_gives_identity_blocks() {
        let g = SymMatrix::identity(10);
        let c = local_cov_from_gram(&g, 4, 2, band(2.0)).unwrap();
        assert_eq!(c.indices.len(), 6);
        assert_eq!(c.matrix, Mat::<f64>::identity(6, 6));
        let p = local_prec_from_gram(&g, 4, 2, band(2.0)).unwrap();
        assert_eq!(p.indices, 4..6);
        assert_eq!(p.matrix, Mat::<f64>::identity(2, 2));
    }

    #[test]
    fn diagonal_oracle_recovers_crop() {
        let d: Vec<f64> = (0..12).map(|i| 0.6 + 0.1 * (i % 5) as f64).collect();
        let omega = SymMatrix::from_diagonal(&d);
        let sigma = SymMatrix::from_diagonal(&d.iter().map(|v| 1.0 / v).collect::<Vec<_>>());
        let lp = local_prec_from_gram(&sigma, 3, 4, band(2.0)).unwrap();
        let want = matcore::crop(omega.as_mat(), 3, 4).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                assert!((lp.matrix[(i, j)] - want[(i, j)]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn fast_path_matches_literal_local_prec() {
        let g = tridiag_sigma(15);
        for eta in [1.5, 3.0] {
            for m in -2..15isize {
                let lit = local_prec_from_gram(&g, m, 3, band(eta)).unwrap();
                let fast = target_inverse(g.as_mat(), &window(m, 3, 15), &target(m, 3, 15), band(eta), 1.0).unwrap();
                for i in 0..lit.indices.len() {
                    for j in 0..lit.indices.len() {
                        assert!((lit.matrix[(i, j)] - fast[(i, j)]).abs() < 1e-10, "m={m} eta={eta}");
                    }
                }
            }
        }
    }

    #[test]
    fn estimate_equals_literal_assembly() {
        let p = 14;
        let g = tridiag_sigma(p);
        let k = 2;
        let bd = band(4.0);
        let mut acc = Mat::<f64>::zeros(p, p);
        for (s, sign) in [(2 * k, 1.0), (k, -1.0)] {
            for m in 1 - s as isize..p as isize {
                let lp = local_prec_from_gram(&g, m, s, bd).unwrap();
                acc += expand_clipped(lp.matrix.as_ref(), p, lp.indices.start as isize) * faer::Scale(sign);
            }
        }
        acc *= faer::Scale(1.0 / k as f64);
        let lit = matcore::project_symmetric(acc.as_ref(), bd).unwrap();
        let est = crop_estimate_from_gram(&g, None, &CropConfig::new(k, bd)).unwrap();
        for i in 0..p {
            for j in 0..p {
                assert!((est.get(i, j) - lit[(i, j)]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn identity_oracle_is_exact() {
        let est = crop_estimate_from_gram(&SymMatrix::identity(9), None, &CropConfig::new(2, band(2.0))).unwrap();
        assert_eq!(est, SymMatrix::identity(9));
    }

    #[test]
    fn rejects_bad_k() {
        let g = SymMatrix::identity(5);
        assert!(crop_estimate_from_gram(&g, None, &CropConfig::new(5, band(2.0))).is_err());
        assert!(crop_estimate_from_gram(&g, None, &CropConfig::new(0, band(2.0))).is_err());
    }

    #[test]
    fn wishart_needs_enough_samples() {
        let g = SymMatrix::identity(8);
        let r = crop_estimate_from_gram(&g, Some(5), &CropConfig::new(2, band(2.0)));
        assert!(r.is_err());
        let r = crop_estimate_from_gram(&g, Some(5), &CropConfig::new(2, band(2.0)).with_scaling(LocalScaling::Plain));
        assert!(r.is_ok());
    }

    #[test]
    fn bandwidth_rules() {
        assert_eq!(bandwidth_rule(Space::Q, 1.0, 500).unwrap(), 7);
        assert_eq!(bandwidth_rule(Space::P, 1.0, 4000).unwrap(), 63);
        assert_eq!(bandwidth_rule(Space::Q, 2.0, 1000).unwrap(), 3);
        assert_eq!(bandwidth_rule(Space::Q, 1.0, 1000).unwrap(), 10);
        assert_eq!(bandwidth_rule_rounded(Space::Q, 1.0, 500, Rounding::Ceil).unwrap(), 8);
        assert!(bandwidth_rule(Space::P, 0.5, 100).is_err());
        assert!(bandwidth_rule(Space::Q, 0.0, 100).is_err());
        assert_eq!(clamp_bandwidth(700, 500), 499);
    }

    #[test]
    fn window_spectrum_of_identity() {
        assert_eq!(window_spectrum(&SymMatrix::identity(6), 2).unwrap(), (1.0, 1.0));
    }
}
