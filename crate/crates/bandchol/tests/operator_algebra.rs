mod common;

use bandchol::matcore::{
    band, crop, eigenvalues, expand, frob_norm, op_norm_symmetric, project_general, project_spectrum, taper_decomposition,
    taper_target,
};
use bandchol::{SpectralBand, SymMatrix};
use common::*;
use faer::Mat;
use proptest::prelude::*;

fn diff(a: &SymMatrix, b: &SymMatrix) -> Mat<f64> {
    Mat::from_fn(a.dim(), a.dim(), |i, j| a.get(i, j) - b.get(i, j))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn crop_of_expand_is_identity(k in 1usize..8, extra in 0usize..10, m_off in 0usize..10, seed in any::<u64>()) {
        let p = k + extra;
        let m = m_off % (p - k + 1);
        let c = random_mat(k, k, seed);
        let back = crop(expand(c.as_ref(), p, m).unwrap().as_ref(), m, k).unwrap();
        prop_assert_eq!(back, c);
    }

    #[test]
    fn expand_is_zero_outside_block(k in 1usize..5, extra in 0usize..6, seed in any::<u64>()) {
        let p = k + extra;
        let m = (seed as usize) % (p - k + 1);
        let e = expand(random_mat(k, k, seed).as_ref(), p, m).unwrap();
        for i in 0..p {
            for j in 0..p {
                if !(m..m + k).contains(&i) || !(m..m + k).contains(&j) {
                    prop_assert_eq!(e[(i, j)], 0.0);
                }
            }
        }
    }

    #[test]
    fn projection_is_idempotent(p in 1usize..12, eta in 1.1f64..5.0, scale in 0.1f64..10.0, seed in any::<u64>()) {
        let band = SpectralBand::new(eta).unwrap();
        let s = random_symmetric(p, scale, seed);
        let once = project_spectrum(&s, band).unwrap();
        let twice = project_spectrum(&once, band).unwrap();
        prop_assert!(max_abs_diff(&once, &twice) <= 1e-12);
        let ev = eigenvalues(once.as_mat()).unwrap();
        prop_assert!(ev[0] >= 1.0 / eta - 1e-10 && ev[p - 1] <= eta + 1e-10);
    }

    #[test]
    fn asymmetric_projection_is_idempotent(p in 1usize..10, eta in 1.1f64..5.0, seed in any::<u64>()) {
        let band = SpectralBand::new(eta).unwrap();
        let once = project_general(random_mat(p, p, seed).as_ref(), band).unwrap();
        let twice = project_general(once.as_ref(), band).unwrap();
        let d = Mat::from_fn(p, p, |i, j| once[(i, j)] - twice[(i, j)]);
        prop_assert!(frob_norm(d.as_ref()) <= 1e-11);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn projection_contraction(p in 1usize..10, eta in 1.05f64..6.0, scale in 0.1f64..8.0, seed in any::<u64>()) {
        let band = SpectralBand::new(eta).unwrap();
        let a = random_with_spectrum(p, 1.0 / eta, eta, seed);
        let s = random_symmetric(p, scale, seed.wrapping_add(1));
        let ps = project_spectrum(&s, band).unwrap();
        let (lhs, rhs) = (diff(&a, &ps), diff(&a, &s));
        let slack = 1e-10;
        prop_assert!(op_norm_symmetric(lhs.as_ref()).unwrap() <= 2.0 * op_norm_symmetric(rhs.as_ref()).unwrap() + slack);
        prop_assert!(frob_norm(lhs.as_ref()) <= 2.0 * frob_norm(rhs.as_ref()) + slack);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn taper_target_matches_decomposition(p in 2usize..40, ki in 0usize..4, seed in any::<u64>()) {
        let k = [1, 2, 3, 5][ki];
        let omega = random_symmetric(p, 1.0, seed);
        let t = taper_target(&omega, k).unwrap();
        let d = taper_decomposition(&omega, k).unwrap();
        prop_assert!(max_abs_diff(&t, &d) <= 1e-12);
    }
}

#[test]
fn taper_with_unit_bandwidth_is_band_one() {
    let omega = random_symmetric(9, 1.0, 3);
    let d = taper_decomposition(&omega, 1).unwrap();
    let b = band(omega.as_mat(), 1);
    let b = SymMatrix::from_fn(9, true, |i, j| b[(i, j)]).unwrap();
    assert!(max_abs_diff(&d, &b) <= 1e-15);
}

#[test]
fn taper_of_diagonal_is_identity_map() {
    let omega = SymMatrix::from_diagonal(&[1.0, 2.0, 3.0, 4.0, 5.0]);
    for k in [1, 2, 3, 5] {
        assert!(max_abs_diff(&taper_decomposition(&omega, k).unwrap(), &omega) <= 1e-15);
        assert_eq!(taper_target(&omega, k).unwrap(), omega);
    }
}
