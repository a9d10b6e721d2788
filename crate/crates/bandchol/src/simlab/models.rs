use faer::Mat;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::matcore::{recompose, spectral_bound, CholeskyModel, SymMatrix};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelFamily {
    /// `a_ij = −(i−j)^{−α−1}` for `i > j`.
    QDecay,
    /// `a_{i1} = −2(i−1)^{−α}` for `i ≥ 2` (1-based), zero elsewhere.
    PFirstcol,
    /// `QDecay` with the prefixes of `2^level − 1` rows randomly permuted.
    QMisspec,
    Identity,
}

impl ModelFamily {
    pub fn name(self) -> &'static str {
        match self {
            ModelFamily::QDecay => "q_decay",
            ModelFamily::PFirstcol => "p_firstcol",
            ModelFamily::QMisspec => "q_misspec",
            ModelFamily::Identity => "identity",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub family: ModelFamily,
    pub p: usize,
    #[serde(default = "one")]
    pub alpha: f64,
    /// Misspecification level in `{1, 2, 3}`; only for `q_misspec`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub level: Option<u32>,
}

fn one() -> f64 {
    1.0
}

impl ModelSpec {
    pub fn new(family: ModelFamily, p: usize, alpha: f64) -> Self {
        Self { family, p, alpha, level: None }
    }

    pub fn misspec(p: usize, alpha: f64, level: u32) -> Self {
        Self { family: ModelFamily::QMisspec, p, alpha, level: Some(level) }
    }

    pub fn validate(&self) -> Result<()> {
        if self.p < 2 {
            return Err(Error::InvalidParameter(format!("p must be at least 2, got {}", self.p)));
        }
        if !(self.alpha > 0.0) || !self.alpha.is_finite() {
            return Err(Error::InvalidParameter(format!("alpha must be positive, got {}", self.alpha)));
        }
        match (self.family, self.level) {
            (ModelFamily::QMisspec, Some(1..=3)) => Ok(()),
            (ModelFamily::QMisspec, l) => {
                Err(Error::InvalidParameter(format!("q_misspec needs level in 1..=3, got {l:?}")))
            }
            (_, Some(_)) => Err(Error::InvalidParameter("level applies only to q_misspec".into())),
            _ => Ok(()),
        }
    }

    /// True when the model depends on the replicate's random stream.
    pub fn is_random(&self) -> bool {
        self.family == ModelFamily::QMisspec
    }
}

fn q_decay(p: usize, alpha: f64) -> Mat<f64> {
    Mat::from_fn(p, p, |i, j| if i > j { -((i - j) as f64).powf(-alpha - 1.0) } else { 0.0 })
}

/// 0-based indices of the rows whose prefixes are permuted at `level`:
/// `⌊j·2^{−level}·p⌋` (1-based) for `j = 1..2^level − 1`.
pub fn misspecified_rows(p: usize, level: u32) -> Vec<usize> {
    let parts = 1usize << level;
    (1..parts).map(|j| j * p / parts).filter(|&r| r >= 1).map(|r| r - 1).collect()
}

/// Cholesky factor of the generating model. `rng` is consumed only by the
/// misspecified family.
pub fn gen_model<R: Rng + ?Sized>(spec: &ModelSpec, rng: &mut R) -> Result<CholeskyModel> {
    spec.validate()?;
    let p = spec.p;
    let a = match spec.family {
        ModelFamily::Identity => Mat::zeros(p, p),
        ModelFamily::QDecay => q_decay(p, spec.alpha),
        ModelFamily::PFirstcol => {
            Mat::from_fn(p, p, |i, j| if j == 0 && i >= 1 { -2.0 * (i as f64).powf(-spec.alpha) } else { 0.0 })
        }
        ModelFamily::QMisspec => {
            let mut a = q_decay(p, spec.alpha);
            for r in misspecified_rows(p, spec.level.unwrap_or(1)) {
                let mut prefix: Vec<f64> = (0..r).map(|j| a[(r, j)]).collect();
                prefix.shuffle(rng);
                for (j, v) in prefix.into_iter().enumerate() {
                    a[(r, j)] = v;
                }
            }
            a
        }
    };
    CholeskyModel::new(a, vec![1.0; p])
}

/// Generating precision matrix together with its spectral bound.
#[derive(Debug, Clone)]
pub struct Truth {
    pub model: CholeskyModel,
    pub omega: SymMatrix,
    /// `max(λ_max(Ω), 1/λ_min(Ω))`.
    pub bound: f64,
}

impl Truth {
    pub fn new(model: CholeskyModel) -> Result<Self> {
        let omega = recompose(&model);
        let bound = spectral_bound(omega.as_mat())?;
        Ok(Self { model, omega, bound })
    }

    /// Band parameter fed to the estimators: `inflation × bound`, kept
    /// strictly above 1.
    pub fn eta(&self, inflation: f64) -> f64 {
        (inflation * self.bound).max(1.0 + 1e-9)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(0)
    }

    #[test]
    fn q_decay_entries() {
        let m = gen_model(&ModelSpec::new(ModelFamily::QDecay, 3, 1.0), &mut rng()).unwrap();
        assert_eq!(m.a()[(1, 0)], -1.0);
        assert_eq!(m.a()[(2, 0)], -0.25);
        assert_eq!(m.a()[(2, 1)], -1.0);
        assert_eq!(m.d(), &[1.0; 3]);
    }

    #[test]
    fn p_firstcol_entries() {
        let m = gen_model(&ModelSpec::new(ModelFamily::PFirstcol, 3, 1.0), &mut rng()).unwrap();
        assert_eq!(m.a()[(1, 0)], -2.0);
        assert_eq!(m.a()[(2, 0)], -1.0);
        assert_eq!(m.a()[(2, 1)], 0.0);
    }

    #[test]
    fn identity_family() {
        let t = Truth::new(gen_model(&ModelSpec::new(ModelFamily::Identity, 4, 1.0), &mut rng()).unwrap()).unwrap();
        assert_eq!(t.omega, SymMatrix::identity(4));
        assert_eq!(t.bound, 1.0);
    }

    #[test]
    fn misspec_rows() {
        assert_eq!(misspecified_rows(500, 1), vec![249]);
        assert_eq!(misspecified_rows(500, 2), vec![124, 249, 374]);
        assert_eq!(misspecified_rows(500, 3).len(), 7);
    }

    #[test]
    fn misspec_permutes_only_selected_rows() {
        let spec = ModelSpec::misspec(40, 1.0, 2);
        let base = q_decay(40, 1.0);
        let m = gen_model(&spec, &mut rng()).unwrap();
        let rows = misspecified_rows(40, 2);
        for i in 0..40 {
            let mut got: Vec<f64> = (0..i).map(|j| m.a()[(i, j)]).collect();
            let mut want: Vec<f64> = (0..i).map(|j| base[(i, j)]).collect();
            if rows.contains(&i) {
                got.sort_by(f64::total_cmp);
                want.sort_by(f64::total_cmp);
            }
            assert_eq!(got, want);
        }
    }

    #[test]
    fn validation() {
        assert!(ModelSpec::new(ModelFamily::QMisspec, 10, 1.0).validate().is_err());
        assert!(ModelSpec::misspec(10, 1.0, 4).validate().is_err());
        assert!(ModelSpec { level: Some(1), ..ModelSpec::new(ModelFamily::QDecay, 10, 1.0) }.validate().is_err());
        assert!(ModelSpec::new(ModelFamily::QDecay, 1, 1.0).validate().is_err());
    }
}
