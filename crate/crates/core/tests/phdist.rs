mod common;

use nalgebra::{dmatrix, dvector, DMatrix, RowDVector};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use aoi_mfq::{fit_mean_scov, me_from_form, MatrixExpDistribution, PhDistribution};
use common::{ks_distance, ph, ph_parts, simpson};

#[test]
fn fit_reproduces_mean_and_scov_on_grid() {
    for mean in [0.1, 1.0, 2.5, 40.0] {
        for scov in [0.01, 0.1, 0.25, 1.0 / 3.0, 0.5, 0.9, 1.0, 1.5, 4.0, 25.0] {
            let d = fit_mean_scov(mean, scov).unwrap();
            assert!((d.mean() - mean).abs() <= 1e-10 * mean, "mean {mean} scov {scov}");
            assert!((d.scov() - scov).abs() <= 1e-9 * scov.max(1.0), "mean {mean} scov {scov}: {}", d.scov());
        }
    }
}

#[test]
fn fit_rejects_nonpositive_inputs() {
    assert!(fit_mean_scov(0.0, 1.0).is_err());
    assert!(fit_mean_scov(1.0, 0.0).is_err());
    assert!(fit_mean_scov(-1.0, 0.5).is_err());
    assert!(fit_mean_scov(f64::NAN, 0.5).is_err());
    assert!(fit_mean_scov(1.0, 1e-300).is_err());
    assert_eq!(fit_mean_scov(1.0, 1e-3).unwrap().order(), 1000);
}

#[test]
fn moments_agree_with_quadrature() {
    let cases = [
        fit_mean_scov(1.0, 0.25).unwrap(),
        fit_mean_scov(2.0, 4.0).unwrap(),
        PhDistribution::erlang(3, 2.0).unwrap(),
    ];
    for d in &cases {
        let upper = 40.0 * d.mean() * (1.0 + d.scov());
        for k in 1..=3 {
            let numeric = simpson(|x| x.powi(k as i32) * d.pdf(x).unwrap(), 0.0, upper, 40_000);
            let exact = d.moment(k);
            assert!((numeric - exact).abs() <= 1e-6 * exact, "k={k}: {numeric} vs {exact}");
        }
        let mass = simpson(|x| d.pdf(x).unwrap(), 0.0, upper, 40_000);
        assert!((mass - 1.0).abs() < 1e-8);
    }
}

#[test]
fn samples_follow_the_cdf() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for d in [
        fit_mean_scov(1.0, 0.25).unwrap(),
        fit_mean_scov(1.0, 4.0).unwrap(),
        fit_mean_scov(3.0, 0.7).unwrap(),
    ] {
        let sampler = d.sampler();
        let xs: Vec<f64> = (0..50_000).map(|_| sampler.sample(&mut rng)).collect();
        let ks = ks_distance(xs, |x| d.cdf(x).unwrap());
        assert!(ks <= 0.01, "KS distance {ks} for scov {}", d.scov());
    }
}

#[test]
fn me_from_form_handles_zero_component() {
    // v = -A^{-1}·h = (1, 0): the second coordinate needs the compensated column
    let a = dmatrix![-1.0, 0.0; 0.0, -2.0];
    let h = dvector![1.0, 0.0];
    let g = RowDVector::from_row_slice(&[1.0, 0.3]);
    let me = me_from_form(&g, &a, &h, 0.0).unwrap();
    for x in [0.0, 0.2, 1.0, 5.0] {
        assert!((me.pdf(x).unwrap() - (-x).exp()).abs() < 1e-13);
    }
    assert!((me.mean() - 1.0).abs() < 1e-13);
}

#[test]
fn me_from_form_rejects_bad_mass() {
    let a = dmatrix![-1.0];
    let h = dvector![2.0];
    let g = RowDVector::from_row_slice(&[1.0]);
    assert!(me_from_form(&g, &a, &h, 0.0).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn cdf_is_monotone_and_bounded(d in ph(4)) {
        let mut last = 0.0;
        for i in 0..=60 {
            let x = i as f64 * 0.25 * d.mean();
            let f = d.cdf(x).unwrap();
            prop_assert!(f >= last - 1e-12 && f <= 1.0 + 1e-12);
            prop_assert!((f + d.tail(x).unwrap() - 1.0).abs() < 1e-12);
            last = f;
        }
    }

    #[test]
    fn scaling_scales_moments(d in ph(4), factor in 0.1f64..10.0) {
        let s = d.scaled(factor).unwrap();
        prop_assert!((s.mean() - factor * d.mean()).abs() <= 1e-10 * s.mean());
        prop_assert!((s.scov() - d.scov()).abs() <= 1e-8 * d.scov().max(1.0));
    }

    #[test]
    fn me_from_form_preserves_density(
        (alpha, s) in ph_parts(4),
        shift in prop::collection::vec(-0.4f64..0.4, 16),
    ) {
        // an arbitrary change of basis T turns (alpha, S, s0) into a form with signed entries
        let n = s.nrows();
        let t = DMatrix::from_fn(n, n, |i, j| if i == j { 1.0 } else { shift[i * 4 + j] });
        let tinv = t.clone().try_inverse();
        prop_assume!(tinv.is_some());
        let tinv = tinv.unwrap();
        let exit = -&s * nalgebra::DVector::from_element(n, 1.0);
        let g = &alpha * &t;
        let a = &tinv * &s * &t;
        let h = &tinv * exit;
        let me = me_from_form(&g, &a, &h, 0.0).unwrap();
        let reference = PhDistribution::new(alpha, s, 0.0).unwrap();
        for x in [0.0, 0.1, 0.5, 1.0, 3.0] {
            let (p, q) = (me.pdf(x).unwrap(), reference.pdf(x).unwrap());
            prop_assert!((p - q).abs() <= 1e-9 * q.max(1.0), "x={} {} vs {}", x, p, q);
        }
        prop_assert!((me.mean() - reference.mean()).abs() <= 1e-9 * reference.mean());
    }
}
