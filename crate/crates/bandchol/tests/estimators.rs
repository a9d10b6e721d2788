mod common;

use bandchol::adaptive::{Lepski, LepskiConfig};
use bandchol::cholreg::{banding_estimate, frob_fit, ols_row, threshold_level, ThresholdConfig};
use bandchol::cropping::{crop_estimate, crop_estimate_from_gram, CropConfig, LocalScaling};
use bandchol::matcore::{eigenvalues, population_regression, recompose};
use bandchol::rankcov::{kendall_matrix, kendall_tau, kendall_tau_brute, rank_crop_estimate, spearman_matrix, RankMethod};
use bandchol::simlab::{apply_transform, gen_model, replicate_rng, sample_gaussian, ModelFamily, ModelSpec, TransformSpec};
use bandchol::{DataMatrix, SpectralBand, SymMatrix};
use common::*;
use faer::linalg::solvers::Solve;
use faer::{Mat, Side};
use proptest::prelude::*;

fn q_data(p: usize, n: usize, seed: u64) -> (SymMatrix, DataMatrix) {
    let model = gen_model(&ModelSpec::new(ModelFamily::QDecay, p, 1.0), &mut replicate_rng(seed, 0, 0)).unwrap();
    let z = sample_gaussian(&model, n, &mut replicate_rng(seed, 1, 0)).unwrap();
    (recompose(&model), z)
}

fn assert_in_band(est: &SymMatrix, eta: f64) {
    assert!(est.is_symmetric());
    for i in 0..est.dim() {
        for j in 0..i {
            assert_eq!(est.get(i, j), est.get(j, i));
        }
    }
    let ev = eigenvalues(est.as_mat()).unwrap();
    assert!(ev[0] >= 1.0 / eta - 1e-10, "{}", ev[0]);
    assert!(ev[ev.len() - 1] <= eta + 1e-10, "{}", ev[ev.len() - 1]);
}

#[test]
fn crop_estimate_is_symmetric_and_in_band() {
    let (_, z) = q_data(40, 120, 1);
    for k in [1, 3, 7] {
        for scaling in [LocalScaling::Plain, LocalScaling::Wishart] {
            let cfg = CropConfig::new(k, SpectralBand::new(4.0).unwrap()).with_scaling(scaling);
            assert_in_band(&crop_estimate(&z, &cfg).unwrap(), 4.0);
        }
    }
}

#[test]
fn diagonal_oracle_input_is_recovered() {
    let d: Vec<f64> = (0..25).map(|i| 0.5 + 0.1 * i as f64).collect();
    let omega = SymMatrix::from_diagonal(&d);
    let sigma = SymMatrix::from_diagonal(&d.iter().map(|x| 1.0 / x).collect::<Vec<_>>());
    for k in [1, 2, 4, 6] {
        let cfg = CropConfig::new(k, SpectralBand::new(5.0).unwrap());
        let est = crop_estimate_from_gram(&sigma, None, &cfg).unwrap();
        assert!(max_abs_diff(&est, &omega) <= 1e-12, "k = {k}");
    }
}

fn block_model(p: usize, at: usize, block: &SymMatrix) -> SymMatrix {
    let b = block.dim();
    SymMatrix::from_fn(p, true, |i, j| {
        if (at..at + b).contains(&i) && (at..at + b).contains(&j) {
            block.get(i - at, j - at)
        } else if i == j {
            1.0
        } else {
            0.0
        }
    })
    .unwrap()
}

#[test]
fn interior_translation_covariance() {
    let block = random_with_spectrum(4, 0.5, 3.0, 17);
    let (p, at, shift, k) = (60, 24, 5, 3);
    let band = SpectralBand::new(10.0).unwrap();
    let cfg = CropConfig::new(k, band);
    let est = |o: &SymMatrix| crop_estimate_from_gram(&o.inverse_spd().unwrap(), None, &cfg).unwrap();
    let e1 = est(&block_model(p, at, &block));
    let e2 = est(&block_model(p, at + shift, &block));
    let margin = 3 * k;
    for i in margin..p - margin - shift {
        for j in margin..p - margin - shift {
            assert!((e1.get(i, j) - e2.get(i + shift, j + shift)).abs() <= 1e-12, "({i}, {j})");
        }
    }
}

#[test]
fn frobenius_estimate_structure() {
    let (_, z) = q_data(30, 200, 2);
    let cfg = ThresholdConfig::new(1.0, SpectralBand::new(20.0).unwrap());
    let fit = frob_fit(&z, &cfg).unwrap();
    let (k0, k1) = (fit.k0, fit.k1);
    assert_eq!((k0, k1), (4, 50));
    for i in 0..30 {
        for j in 0..i {
            let lag = i - j;
            if lag >= k1 {
                assert_eq!(fit.thresholded[(i, j)], 0.0);
            }
            if lag < k0 {
                assert_eq!(fit.thresholded[(i, j)].to_bits(), fit.raw[(i, j)].to_bits());
            }
        }
    }
    let est = &fit.estimate;
    assert!(est.is_symmetric());
    assert!(eigenvalues(est.as_mat()).unwrap()[0] > 0.0);
    assert!(banding_estimate(&z, 3).unwrap().is_symmetric());
}

#[test]
fn frobenius_zero_pattern_beyond_k1() {
    let (_, z) = q_data(60, 40, 3);
    let mut cfg = ThresholdConfig::new(1.0, SpectralBand::new(20.0).unwrap());
    cfg.c = 4.0;
    let fit = frob_fit(&z, &cfg).unwrap();
    assert_eq!(fit.k1, 10);
    for i in 0..60 {
        for j in 0..i {
            if i - j >= fit.k1 {
                assert_eq!(fit.thresholded[(i, j)], 0.0);
            }
            if i - j > fit.k1 {
                assert_eq!(fit.raw[(i, j)], 0.0);
            }
        }
    }
}

proptest! {
    #[test]
    fn threshold_is_monotone_in_lag(k0 in 1usize..8, r in 0.0f64..5.0, lag in 1usize..200) {
        prop_assert!(threshold_level(lag, k0, r) <= threshold_level(lag + 1, k0, r));
    }
}

#[test]
fn ols_tracks_population_regression() {
    let (p, n) = (20, 200);
    let (omega, z) = q_data(p, n, 4);
    let sigma = omega.inverse_spd().unwrap();
    let (mut inside, mut total) = (0, 0);
    for i in 1..p {
        let fit = ols_row(&z, i, i).unwrap();
        let pop = population_regression(&sigma, i, i).unwrap();
        let x = z.as_mat().submatrix(0, 0, n, i);
        let xtx_inv = (x.transpose() * x).llt(Side::Lower).unwrap().solve(Mat::<f64>::identity(i, i));
        let d = fit.rss / (n - i) as f64;
        for j in 0..i {
            let se = (d * xtx_inv[(j, j)]).sqrt();
            total += 1;
            if (fit.coefficients[j] - pop.coefficients[j]).abs() <= 3.0 * se {
                inside += 1;
            }
        }
    }
    assert!(inside as f64 >= 0.95 * total as f64, "{inside}/{total}");
}

#[test]
fn lepski_selects_minimal_admissible_bandwidth() {
    let (_, z) = q_data(16, 60, 5);
    let cfg = LepskiConfig::new(SpectralBand::new(30.0).unwrap());
    let mut lep = Lepski::new(&z, cfg).unwrap();
    let report = lep.search(None).unwrap();
    let k_hat = report.k_hat().unwrap();

    let mut full = Lepski::new(&z, cfg).unwrap();
    let cands = full.candidates();
    let mut first = *cands.last().unwrap();
    for &k in &cands {
        let mut ok = true;
        for &l in cands.iter().filter(|&&l| l > k) {
            if full.distance_sq(k, l).unwrap() > full.threshold(l) {
                ok = false;
            }
        }
        if ok {
            first = k;
            break;
        }
    }
    assert_eq!(k_hat, first);
    assert_eq!(Lepski::new(&z, cfg).unwrap().search(None).unwrap(), report);
    for &(a, b) in full.distance_table().clone().keys() {
        assert_eq!(full.distance_sq(a, b).unwrap(), full.distance_sq(b, a).unwrap());
    }
}

#[test]
fn bounded_search_certifies_larger_bandwidth() {
    let (_, z) = q_data(16, 60, 5);
    let cfg = LepskiConfig::new(SpectralBand::new(30.0).unwrap());
    let k_hat = Lepski::new(&z, cfg).unwrap().search(None).unwrap().k_hat().unwrap();
    if k_hat > 1 {
        let r = Lepski::new(&z, cfg).unwrap().search(Some(k_hat - 1)).unwrap();
        assert_eq!(r.k_hat(), None);
    }
    let r = Lepski::new(&z, cfg).unwrap().search(Some(k_hat)).unwrap();
    assert_eq!(r.k_hat(), Some(k_hat));
}

fn ties(v: Vec<u8>) -> Vec<f64> {
    v.into_iter().map(f64::from).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn fast_kendall_matches_brute_force(x in prop::collection::vec(-100.0f64..100.0, 2..60), seed in any::<u64>()) {
        let y: Vec<f64> = random_mat(x.len(), 1, seed).col(0).iter().copied().collect();
        prop_assert!((kendall_tau(&x, &y) - kendall_tau_brute(&x, &y)).abs() <= 1e-14);
    }

    #[test]
    fn fast_kendall_matches_brute_force_with_ties(pairs in prop::collection::vec((0u8..4, 0u8..4), 2..60)) {
        let (x, y): (Vec<u8>, Vec<u8>) = pairs.into_iter().unzip();
        let (x, y) = (ties(x), ties(y));
        prop_assert!((kendall_tau(&x, &y) - kendall_tau_brute(&x, &y)).abs() <= 1e-14);
    }
}

#[test]
fn rank_matrices_are_monotone_invariant() {
    let (_, z) = q_data(12, 80, 6);
    let k = kendall_matrix(&z).unwrap();
    let s = spearman_matrix(&z).unwrap();
    for t in [TransformSpec::Cubic, TransformSpec::Step] {
        let zt = apply_transform(&z, t);
        assert_eq!(kendall_matrix(&zt).unwrap(), k);
        assert_eq!(spearman_matrix(&zt).unwrap(), s);
    }
    for m in [&k, &s] {
        for i in 0..12 {
            assert_eq!(m.get(i, i), 1.0);
            for j in 0..12 {
                assert!(m.get(i, j).abs() <= 1.0);
                assert_eq!(m.get(i, j), m.get(j, i));
            }
        }
    }
}

#[test]
fn rank_crop_is_in_band() {
    let (_, z) = q_data(30, 100, 7);
    let cfg = CropConfig::new(3, SpectralBand::new(6.0).unwrap()).with_scaling(LocalScaling::Plain);
    for m in [RankMethod::Kendall, RankMethod::Spearman] {
        assert_in_band(&rank_crop_estimate(&z, &cfg, m).unwrap(), 6.0);
    }
}
