//! Rank-based correlation matrices and the nonparanormal cropping estimator.
//!
//! Kendall's tau and Spearman's rho depend on the data only through
//! within-column ranks, so both matrices (and everything built on them) are
//! unchanged by strictly increasing transforms of the columns.

use std::f64::consts::PI;

use faer::Mat;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cropping::{crop_estimate_from_gram, CropConfig};
use crate::matcore::{DataMatrix, SymMatrix};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RankMethod {
    Kendall,
    Spearman,
}

impl std::str::FromStr for RankMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "kendall" => Ok(RankMethod::Kendall),
            "spearman" => Ok(RankMethod::Spearman),
            _ => Err(Error::InvalidParameter(format!("unknown rank method {s:?}"))),
        }
    }
}

fn column(z: &DataMatrix, j: usize) -> Vec<f64> {
    (0..z.n()).map(|t| z.get(t, j)).collect()
}

/// Kendall's tau by enumerating all pairs, with `sgn(0) = 0`.
pub fn kendall_tau_brute(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len();
    let mut s = 0i64;
    for a in 0..n {
        for b in a + 1..n {
            let sx = sign(x[a] - x[b]);
            let sy = sign(y[a] - y[b]);
            s += sx * sy;
        }
    }
    2.0 * s as f64 / (n as f64 * (n as f64 - 1.0))
}

fn sign(v: f64) -> i64 {
    if v > 0.0 {
        1
    } else if v < 0.0 {
        -1
    } else {
        0
    }
}

fn tie_pairs<T: PartialEq>(sorted: &[T]) -> u64 {
    let mut total = 0u64;
    let mut run = 1u64;
    for w in sorted.windows(2) {
        if w[0] == w[1] {
            run += 1;
        } else {
            total += run * (run - 1) / 2;
            run = 1;
        }
    }
    total + run * (run - 1) / 2
}

/// Sorts `v` ascending and returns the number of strict inversions.
fn merge_count(v: &mut [f64], buf: &mut [f64]) -> u64 {
    let n = v.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut swaps = merge_count(&mut v[..mid], &mut buf[..mid]) + merge_count(&mut v[mid..], &mut buf[mid..]);
    let (mut a, mut b, mut k) = (0, mid, 0);
    while a < mid && b < n {
        if v[b] < v[a] {
            buf[k] = v[b];
            swaps += (mid - a) as u64;
            b += 1;
        } else {
            buf[k] = v[a];
            a += 1;
        }
        k += 1;
    }
    buf[k..k + mid - a].copy_from_slice(&v[a..mid]);
    k += mid - a;
    buf[k..k + n - b].copy_from_slice(&v[b..n]);
    v.copy_from_slice(&buf[..n]);
    swaps
}

/// Per-column data reused across all pairs.
struct RankedColumn {
    values: Vec<f64>,
    order: Vec<usize>,
    sorted: Vec<f64>,
    ties: u64,
}

impl RankedColumn {
    fn new(values: Vec<f64>) -> Self {
        let mut order: Vec<usize> = (0..values.len()).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        let sorted: Vec<f64> = order.iter().map(|&t| values[t]).collect();
        let ties = tie_pairs(&sorted);
        Self { values, order, sorted, ties }
    }
}

/// Kendall's tau in `O(n log n)`: sort by `x` (then `y`), count the
/// inversions left in `y` and correct for ties.
fn kendall_sorted(x: &RankedColumn, y: &RankedColumn) -> f64 {
    let n = x.values.len();
    let mut ys: Vec<f64> = x.order.iter().map(|&t| y.values[t]).collect();
    let mut joint_ties = 0u64;
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && x.sorted[end] == x.sorted[start] {
            end += 1;
        }
        if end - start > 1 {
            ys[start..end].sort_by(f64::total_cmp);
            joint_ties += tie_pairs(&ys[start..end]);
        }
        start = end;
    }
    let mut buf = vec![0.0; n];
    let swaps = merge_count(&mut ys, &mut buf);
    let n0 = (n as u64) * (n as u64 - 1) / 2;
    let diff = n0 as i64 - x.ties as i64 - y.ties as i64 + joint_ties as i64 - 2 * swaps as i64;
    diff as f64 / n0 as f64
}

/// Kendall's tau with the fast algorithm.
pub fn kendall_tau(x: &[f64], y: &[f64]) -> f64 {
    kendall_sorted(&RankedColumn::new(x.to_vec()), &RankedColumn::new(y.to_vec()))
}

fn assemble(p: usize, f: impl Fn(usize, usize) -> f64 + Sync) -> Result<SymMatrix> {
    let rows: Vec<Vec<f64>> = (0..p).into_par_iter().map(|i| (i + 1..p).map(|j| f(i, j)).collect()).collect();
    let mut m = Mat::<f64>::identity(p, p);
    for (i, row) in rows.iter().enumerate() {
        for (off, &v) in row.iter().enumerate() {
            m[(i, i + 1 + off)] = v;
            m[(i + 1 + off, i)] = v;
        }
    }
    SymMatrix::from_symmetric(m)
}

/// `[sin(π τ̂_ij / 2)]` with unit diagonal.
pub fn kendall_matrix(z: &DataMatrix) -> Result<SymMatrix> {
    if z.n() < 2 {
        return Err(Error::InvalidParameter("Kendall's tau needs at least two samples".into()));
    }
    let cols: Vec<RankedColumn> = (0..z.p()).into_par_iter().map(|j| RankedColumn::new(column(z, j))).collect();
    assemble(z.p(), |i, j| (PI / 2.0 * kendall_sorted(&cols[i], &cols[j])).sin())
}

/// Average ranks (1-based), ties sharing the mean of their positions.
pub fn average_ranks(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut ranks = vec![0.0; n];
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && x[order[end]] == x[order[start]] {
            end += 1;
        }
        let r = (start + end + 1) as f64 / 2.0;
        for &t in &order[start..end] {
            ranks[t] = r;
        }
        start = end;
    }
    ranks
}

/// Pearson correlation of average ranks, centered at `(n+1)/2`.
pub fn spearman_rho(x: &[f64], y: &[f64]) -> Result<f64> {
    let c = centered_ranks(x, 0)?;
    let d = centered_ranks(y, 1)?;
    Ok(rho_centered(&c, &d))
}

fn centered_ranks(x: &[f64], col: usize) -> Result<(Vec<f64>, f64)> {
    let n = x.len();
    let c = (n as f64 + 1.0) / 2.0;
    let r: Vec<f64> = average_ranks(x).into_iter().map(|v| v - c).collect();
    let ss: f64 = r.iter().map(|v| v * v).sum();
    if !(ss > 0.0) {
        return Err(Error::ConstantColumn(col));
    }
    Ok((r, ss))
}

fn rho_centered(a: &(Vec<f64>, f64), b: &(Vec<f64>, f64)) -> f64 {
    let num: f64 = a.0.iter().zip(&b.0).map(|(u, v)| u * v).sum();
    (num / (a.1 * b.1).sqrt()).clamp(-1.0, 1.0)
}

/// `[2 sin(π ρ̂_ij / 6)]` with unit diagonal.
pub fn spearman_matrix(z: &DataMatrix) -> Result<SymMatrix> {
    if z.n() < 2 {
        return Err(Error::InvalidParameter("Spearman's rho needs at least two samples".into()));
    }
    let cols: Vec<(Vec<f64>, f64)> =
        (0..z.p()).into_par_iter().map(|j| centered_ranks(&column(z, j), j)).collect::<Result<_>>()?;
    assemble(z.p(), |i, j| 2.0 * (PI / 6.0 * rho_centered(&cols[i], &cols[j])).sin())
}

pub fn rank_matrix(z: &DataMatrix, method: RankMethod) -> Result<SymMatrix> {
    match method {
        RankMethod::Kendall => kendall_matrix(z),
        RankMethod::Spearman => spearman_matrix(z),
    }
}

/// Cropping estimator with the rank-based correlation matrix in place of the
/// sample Gram; estimates the latent inverse correlation matrix.
///
/// No finite-sample scaling is applied to the local inverses.
pub fn rank_crop_estimate(z: &DataMatrix, cfg: &CropConfig, method: RankMethod) -> Result<SymMatrix> {
    let g = rank_matrix(z, method)?;
    crop_estimate_from_gram(&g, None, cfg)
}

/// `S est S` with `S = diag(sqrt(target_i / est_ii))`.
pub fn rescale_to_diagonal(est: &SymMatrix, target: &[f64]) -> Result<SymMatrix> {
    let p = est.dim();
    if target.len() != p {
        return Err(Error::Dimension(format!("target has {} entries for a {p}x{p} matrix", target.len())));
    }
    let mut s = Vec::with_capacity(p);
    for i in 0..p {
        let e = est.get(i, i);
        if !(e > 0.0) || !(target[i] > 0.0) {
            return Err(Error::InvalidParameter(format!("diagonal entry {i} must be positive")));
        }
        s.push((target[i] / e).sqrt());
    }
    let m = est.as_mat();
    SymMatrix::from_fn(p, est.is_symmetric(), |i, j| if i == j { target[i] } else { m[(i, j)] * (s[i] * s[j]) })
}
