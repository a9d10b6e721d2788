//! Operator-algebra, Cholesky and thresholding oracle suites.

use bandchol::cholreg::{frob_fit, threshold_level, ThresholdConfig};
use bandchol::matcore::{
    crop, expand, frob_norm, modified_cholesky, op_norm_symmetric, population_regression, project_spectrum,
    recompose, spectral_bound, taper_decomposition, taper_target,
};
use bandchol::simlab::{
    gen_model, replicate_rng, run_experiment, sample_gaussian, EstimatorSpec, ExperimentConfig, LossKind, Method,
    ModelFamily, ModelSpec, Truth,
};
use bandchol::{Result, SpectralBand, SymMatrix};
use faer::Mat;
use rand::Rng;

use crate::random::{banded_model, max_abs_diff, random_mat, random_symmetric, random_with_spectrum, rng};
use crate::{Check, SEED};

fn diff(a: &SymMatrix, b: &SymMatrix) -> Mat<f64> {
    Mat::from_fn(a.dim(), a.dim(), |i, j| a.get(i, j) - b.get(i, j))
}

/// Taper identity, crop of expand, projection idempotence and contraction.
pub fn operator_algebra() -> Result<Check> {
    let mut check = Check::new("7", "operator-algebra oracle suite");
    let mut r = rng(SEED ^ 7);

    let (mut worst, mut bad) = (0.0f64, 0);
    for s in 0..50 {
        let p = r.random_range(6..=64);
        let omega = random_symmetric(p, 1.0, s);
        for k in [1, 2, 3, 5] {
            let e = max_abs_diff(taper_target(&omega, k)?.as_mat(), taper_decomposition(&omega, k)?.as_mat());
            worst = worst.max(e);
            bad += usize::from(e > 1e-12);
        }
    }
    check.part(bad == 0, format!("taper: 200 cases, max diff {worst:.1e}, {bad} over 1e-12"));

    let mut bad = 0;
    for s in 0..1000 {
        let k = r.random_range(1..=8);
        let p = k + r.random_range(0..=20);
        let m = r.random_range(0..=p - k);
        let c = random_mat(k, k, 10_000 + s);
        bad += usize::from(crop(expand(c.as_ref(), p, m)?.as_ref(), m, k)? != c);
    }
    check.part(bad == 0, format!("crop of expand: 1000 cases, {bad} inexact"));

    let (mut idem, mut contr) = (0, 0);
    for s in 0..1000u64 {
        let p = r.random_range(1..=12);
        let eta = r.random_range(1.05..6.0);
        let scale = r.random_range(0.1..8.0);
        let band = SpectralBand::new(eta)?;
        let a = random_with_spectrum(p, 1.0 / eta, eta, 20_000 + s);
        let x = random_symmetric(p, scale, 40_000 + s);
        let once = project_spectrum(&x, band)?;
        let twice = project_spectrum(&once, band)?;
        idem += usize::from(max_abs_diff(once.as_mat(), twice.as_mat()) > 1e-12);
        let (lhs, rhs) = (diff(&a, &once), diff(&a, &x));
        let slack = 1e-10;
        let op_ok = op_norm_symmetric(lhs.as_ref())? <= 2.0 * op_norm_symmetric(rhs.as_ref())? + slack;
        let f_ok = frob_norm(lhs.as_ref()) <= 2.0 * frob_norm(rhs.as_ref()) + slack;
        contr += usize::from(!(op_ok && f_ok));
    }
    check.part(idem == 0, format!("projection idempotence: 1000 pairs, {idem} failures"));
    check.part(contr == 0, format!("projection contraction: 1000 pairs, {contr} failures"));
    Ok(check)
}

/// Round trip, regression rows and spectral bounds of the factors.
pub fn cholesky() -> Result<Check> {
    let mut check = Check::new("8", "Cholesky oracle suite");
    let mut r = rng(SEED ^ 8);

    let (mut worst, mut rt_bad, mut reg_bad) = (0.0f64, 0, 0);
    for s in 0..200u64 {
        let p = r.random_range(1..=50);
        let omega = random_with_spectrum(p, 0.2, 5.0, s);
        let model = modified_cholesky(&omega)?;
        let e = max_abs_diff(omega.as_mat(), recompose(&model).as_mat());
        worst = worst.max(e);
        rt_bad += usize::from(e > 1e-8);
        let sigma = omega.inverse_spd()?;
        for i in 0..p {
            let reg = population_regression(&sigma, i, i)?;
            let coef_ok = (0..i).all(|j| (model.a()[(i, j)] - reg.coefficients[j]).abs() <= 1e-8);
            let d_ok = (model.d()[i] - reg.residual_variance).abs() <= 1e-8 * reg.residual_variance.max(1.0);
            reg_bad += usize::from(!(coef_ok && d_ok));
        }
    }
    check.part(rt_bad == 0, format!("round trip: 200 matrices p <= 50, max diff {worst:.1e}"));
    check.part(reg_bad == 0, format!("regression rows: {reg_bad} mismatches"));

    let mut bad = 0;
    for s in 0..200u64 {
        let p = r.random_range(2..=60);
        let k = r.random_range(1..=6);
        let omega = recompose(&banded_model(p, k, 60_000 + s));
        let eta = spectral_bound(omega.as_mat())?;
        let model = modified_cholesky(&omega)?;
        let tol = 1e-9 * eta;
        let inside = |v: f64| v >= 1.0 / eta - tol && v <= eta + tol;
        let sv = model.unit_lower().singular_values().map_err(|e| bandchol::Error::Decomposition(format!("{e:?}")))?;
        bad += usize::from(!(model.d().iter().all(|&d| inside(d)) && sv.iter().all(|&v| inside(v))));
    }
    check.part(bad == 0, format!("factor spectral bounds: 200 banded models, {bad} violations"));
    Ok(check)
}

/// Zero and keep patterns, threshold levels, and Frobenius risk in `n`.
pub fn frobenius() -> Result<Check> {
    let mut check = Check::new("9", "thresholded regression estimator properties");
    let (p, alpha) = (200, 1.5);
    let spec = ModelSpec::new(ModelFamily::PFirstcol, p, alpha);
    let truth = Truth::new(gen_model(&spec, &mut replicate_rng(SEED, 0, 0))?)?;
    let (mut zero_bad, mut keep_bad, mut rule_bad) = (0, 0, 0);
    let mut shapes = Vec::new();
    for (rep, n) in [500usize, 2000].into_iter().enumerate() {
        let z = sample_gaussian(&truth.model, n, &mut replicate_rng(SEED ^ 9, 0, rep as u32))?;
        let fit = frob_fit(&z, &ThresholdConfig::new(alpha, SpectralBand::new(truth.eta(1.05))?))?;
        shapes.push(format!("n={n}: k0={} k1={}", fit.k0, fit.k1));
        for i in 0..p {
            for j in 0..i {
                let (lag, raw, thr) = (i - j, fit.raw[(i, j)], fit.thresholded[(i, j)]);
                if lag >= fit.k1 {
                    zero_bad += usize::from(thr != 0.0);
                } else if lag < fit.k0 {
                    keep_bad += usize::from(thr.to_bits() != raw.to_bits());
                } else {
                    let kept = raw.abs() > threshold_level(lag, fit.k0, fit.scale[i]);
                    let expect = if kept { raw } else { 0.0 };
                    rule_bad += usize::from(thr.to_bits() != expect.to_bits());
                }
            }
        }
    }
    check.part(zero_bad == 0, format!("{}; zero beyond k1: {zero_bad} violations", shapes.join(", ")));
    check.part(keep_bad == 0, format!("keep below k0: {keep_bad} violations"));
    check.part(rule_bad == 0, format!("threshold rule: {rule_bad} violations"));

    let r = 0.37f64;
    let k0 = 5;
    let cases = [(5, 0.0), (6, r.sqrt()), (10, r.sqrt()), (11, (2.0 * r).sqrt()), (20, (2.0 * r).sqrt())];
    let lam_ok = cases.iter().all(|&(lag, want)| threshold_level(lag, k0, r) == want);
    check.part(lam_ok, "levels at lags 5, 6, 10, 11, 20 with k0 = 5: {0, sqrt R, sqrt R, sqrt 2R, sqrt 2R}");

    let mut cfg = ExperimentConfig::new(spec, vec![EstimatorSpec::new(Method::Frob)], vec![500, 2000], 100, SEED);
    cfg.losses = vec![LossKind::FrobSqAvg];
    let report = run_experiment(&cfg)?;
    let risk: Vec<f64> = report.cells.iter().map(|c| c.mean(LossKind::FrobSqAvg).unwrap_or(f64::NAN)).collect();
    check.part(
        risk[1] < risk[0],
        format!("P-model p=200 alpha=1.5 Frobenius risk n=500 {:.4}, n=2000 {:.4}", risk[0], risk[1]),
    );
    Ok(check)
}
