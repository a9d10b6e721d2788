use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::matcore::{frob_norm, op_norm, op_norm_symmetric, SymMatrix};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    /// `‖est − truth‖₂`
    Op,
    /// `‖est − truth‖₂²`
    OpSq,
    /// `‖est − truth‖²_F / p`
    FrobSqAvg,
}

impl LossKind {
    pub fn name(self) -> &'static str {
        match self {
            LossKind::Op => "op",
            LossKind::OpSq => "op_sq",
            LossKind::FrobSqAvg => "frob_sq_avg",
        }
    }
}

fn difference(est: &SymMatrix, truth: &SymMatrix) -> Result<Mat<f64>> {
    if est.dim() != truth.dim() {
        return Err(Error::Dimension(format!("estimate is {0}x{0}, truth is {1}x{1}", est.dim(), truth.dim())));
    }
    let (a, b) = (est.as_mat(), truth.as_mat());
    Ok(Mat::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)] - b[(i, j)]))
}

fn op_of(diff: &Mat<f64>, symmetric: bool) -> Result<f64> {
    if symmetric {
        op_norm_symmetric(diff.as_ref())
    } else {
        op_norm(diff.as_ref())
    }
}

pub fn loss(est: &SymMatrix, truth: &SymMatrix, kind: LossKind) -> Result<f64> {
    Ok(losses(est, truth, &[kind])?[0])
}

/// Several losses sharing one spectral computation.
pub fn losses(est: &SymMatrix, truth: &SymMatrix, kinds: &[LossKind]) -> Result<Vec<f64>> {
    let diff = difference(est, truth)?;
    let symmetric = est.is_symmetric() && truth.is_symmetric();
    let mut op = None;
    let mut out = Vec::with_capacity(kinds.len());
    for &kind in kinds {
        let v = match kind {
            LossKind::Op | LossKind::OpSq => {
                let o = match op {
                    Some(o) => o,
                    None => *op.insert(op_of(&diff, symmetric)?),
                };
                if kind == LossKind::Op {
                    o
                } else {
                    o * o
                }
            }
            LossKind::FrobSqAvg => frob_norm(diff.as_ref()).powi(2) / est.dim() as f64,
        };
        out.push(v);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_loss_for_truth() {
        let t = SymMatrix::from_diagonal(&[1.0, 2.0, 3.0]);
        for k in [LossKind::Op, LossKind::OpSq, LossKind::FrobSqAvg] {
            assert_eq!(loss(&t, &t, k).unwrap(), 0.0);
        }
    }

    #[test]
    fn diagonal_shift() {
        let est = SymMatrix::from_diagonal(&[2.0, 1.0, 1.0]);
        assert!((loss(&est, &SymMatrix::identity(3), LossKind::Op).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn general_difference() {
        let est = SymMatrix::general(Mat::from_fn(2, 2, |i, j| if (i, j) == (0, 1) { 3.0 } else { 0.0 })).unwrap();
        let zero = SymMatrix::from_diagonal(&[0.0, 0.0]);
        let v = losses(&est, &zero, &[LossKind::Op, LossKind::OpSq, LossKind::FrobSqAvg]).unwrap();
        assert!((v[0] - 3.0).abs() < 1e-14);
        assert!((v[1] - 9.0).abs() < 1e-12);
        assert!((v[2] - 4.5).abs() < 1e-14);
    }

    #[test]
    fn dimension_mismatch() {
        assert!(loss(&SymMatrix::identity(2), &SymMatrix::identity(3), LossKind::Op).is_err());
    }
}
