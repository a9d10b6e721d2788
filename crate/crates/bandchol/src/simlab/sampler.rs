use faer::linalg::triangular_solve::solve_unit_lower_triangular_in_place;
use faer::{Mat, Par};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::matcore::{CholeskyModel, DataMatrix};
use crate::Result;

/// Name of the generator recorded in report provenance.
pub const RNG_NAME: &str = "ChaCha8Rng (rand_chacha 0.9), seed_from_u64(master), stream = (cell << 32) | replicate";

/// Independent stream for replicate `rep` of cell `cell`.
pub fn replicate_rng(master: u64, cell: u32, rep: u32) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(stream_id(cell, rep));
    rng
}

pub fn stream_id(cell: u32, rep: u32) -> u64 {
    (u64::from(cell) << 32) | u64::from(rep)
}

/// `n` draws from `N(0, (I−A)⁻¹ D (I−A)⁻ᵀ)`.
///
/// Standard normals are drawn row by row and pushed through the
/// autoregressive recursion `X_i = Σ_{j<i} a_ij X_j + √d_i ε_i`, done as one
/// unit-lower-triangular solve.
pub fn sample_gaussian<R: Rng + ?Sized>(model: &CholeskyModel, n: usize, rng: &mut R) -> Result<DataMatrix> {
    crate::sequential_kernels();
    let p = model.dim();
    let mut eps = vec![0.0f64; n * p];
    for v in eps.iter_mut() {
        *v = StandardNormal.sample(rng);
    }
    let sd: Vec<f64> = model.d().iter().map(|d| d.sqrt()).collect();
    let mut x = Mat::from_fn(p, n, |i, t| sd[i] * eps[t * p + i]);
    let unit = model.unit_lower();
    solve_unit_lower_triangular_in_place(unit.as_ref(), x.as_mut(), Par::Seq);
    DataMatrix::new(x.transpose().to_owned())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum TransformSpec {
    #[default]
    Identity,
    Cubic,
    /// `x³ + 1` for `x ≥ 0`, `x³ − 1` for `x < 0`.
    Step,
}

impl TransformSpec {
    pub fn apply_scalar(self, x: f64) -> f64 {
        match self {
            TransformSpec::Identity => x,
            TransformSpec::Cubic => x * x * x,
            TransformSpec::Step => {
                if x >= 0.0 {
                    x * x * x + 1.0
                } else {
                    x * x * x - 1.0
                }
            }
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            TransformSpec::Identity => "identity",
            TransformSpec::Cubic => "cubic",
            TransformSpec::Step => "step",
        }
    }
}

/// Entrywise monotone transform.
pub fn apply_transform(z: &DataMatrix, t: TransformSpec) -> DataMatrix {
    match t {
        TransformSpec::Identity => z.clone(),
        _ => z.map(|x| t.apply_scalar(x)),
    }
}
