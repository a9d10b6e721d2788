mod common;

use bandchol::matcore::{modified_cholesky, population_regression, project_spectrum, recompose, spectral_bound};
use bandchol::{CholeskyModel, SpectralBand};
use common::*;
use faer::Mat;
use proptest::prelude::*;
use rand::Rng;

fn banded_model(p: usize, k: usize, seed: u64) -> CholeskyModel {
    let mut r = rng(seed);
    let a = Mat::from_fn(p, p, |i, j| if i > j && i - j <= k { r.random_range(-0.6..0.6) } else { 0.0 });
    let d = (0..p).map(|_| r.random_range(0.3..3.0)).collect();
    CholeskyModel::new(a, d).unwrap()
}

fn assert_lemma_bounds(model: &CholeskyModel, eta: f64) -> Result<(), TestCaseError> {
    let tol = 1e-9 * eta;
    for &d in model.d() {
        prop_assert!(d >= 1.0 / eta - tol && d <= eta + tol, "d = {d}, eta = {eta}");
    }
    let sv = model.unit_lower().singular_values().unwrap();
    for s in sv {
        prop_assert!(s >= 1.0 / eta - tol && s <= eta + tol, "singular value {s}, eta = {eta}");
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn round_trip(p in 1usize..50, seed in any::<u64>()) {
        let omega = random_with_spectrum(p, 0.2, 5.0, seed);
        let back = recompose(&modified_cholesky(&omega).unwrap());
        prop_assert!(max_abs_diff(&omega, &back) <= 1e-8);
    }

    #[test]
    fn rows_match_population_regression(p in 2usize..25, seed in any::<u64>()) {
        let omega = random_with_spectrum(p, 0.2, 5.0, seed);
        let model = modified_cholesky(&omega).unwrap();
        let sigma = omega.inverse_spd().unwrap();
        for i in 0..p {
            let reg = population_regression(&sigma, i, i).unwrap();
            for j in 0..i {
                prop_assert!((model.a()[(i, j)] - reg.coefficients[j]).abs() <= 1e-8);
            }
            prop_assert!((model.d()[i] - reg.residual_variance).abs() <= 1e-8 * reg.residual_variance.max(1.0));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn spectral_bounds_of_banded_models(p in 2usize..40, k in 1usize..6, seed in any::<u64>()) {
        let model = banded_model(p, k, seed);
        let omega = recompose(&model);
        let eta = spectral_bound(omega.as_mat()).unwrap();
        let again = modified_cholesky(&omega).unwrap();
        assert_lemma_bounds(&again, eta)?;
    }

    #[test]
    fn spectral_bounds_after_clipping(p in 2usize..30, eta in 1.2f64..6.0, seed in any::<u64>()) {
        let band = SpectralBand::new(eta).unwrap();
        let omega = project_spectrum(&random_symmetric(p, 4.0, seed), band).unwrap();
        assert_lemma_bounds(&modified_cholesky(&omega).unwrap(), eta)?;
    }
}

#[test]
fn recovers_generating_factor() {
    let model = banded_model(30, 3, 9);
    let back = modified_cholesky(&recompose(&model)).unwrap();
    for i in 0..30 {
        assert!((back.d()[i] - model.d()[i]).abs() < 1e-10);
        for j in 0..i {
            assert!((back.a()[(i, j)] - model.a()[(i, j)]).abs() < 1e-10);
        }
    }
}
