#![allow(dead_code)]

use nalgebra::{DMatrix, DVector, RowDVector};
use proptest::prelude::*;

use aoi_mfq::PhDistribution;

/// Composite Simpson rule on `[a, b]` with `n` (even) panels.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    assert!(n.is_multiple_of(2));
    let h = (b - a) / n as f64;
    let mut sum = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        sum += w * f(a + i as f64 * h);
    }
    sum * h / 3.0
}

/// Kolmogorov-Smirnov distance between a sample and a continuous cdf.
pub fn ks_distance(mut samples: Vec<f64>, cdf: impl Fn(f64) -> f64) -> f64 {
    samples.sort_by(f64::total_cmp);
    let n = samples.len() as f64;
    samples
        .iter()
        .enumerate()
        .map(|(i, x)| {
            let f = cdf(*x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

pub fn exponential(rate: f64) -> PhDistribution {
    PhDistribution::exponential(rate).unwrap()
}

/// `(alpha, S)` of a random PH distribution of order `n` with every phase reachable.
pub fn ph_parts(max_order: usize) -> impl Strategy<Value = (RowDVector<f64>, DMatrix<f64>)> {
    (1..=max_order).prop_flat_map(|n| {
        (
            prop::collection::vec(0.05f64..1.0, n),
            prop::collection::vec(0.0f64..2.0, n * n),
            prop::collection::vec(0.2f64..3.0, n),
        )
            .prop_map(move |(a, off, exit)| {
                let total: f64 = a.iter().sum();
                let alpha = RowDVector::from_iterator(n, a.iter().map(|x| x / total));
                let mut s = DMatrix::from_row_slice(n, n, &off);
                for i in 0..n {
                    s[(i, i)] = 0.0;
                    let row: f64 = s.row(i).sum();
                    s[(i, i)] = -(row + exit[i]);
                }
                (alpha, s)
            })
    })
}

pub fn ph(max_order: usize) -> impl Strategy<Value = PhDistribution> {
    ph_parts(max_order).prop_map(|(a, s)| PhDistribution::new(a, s, 0.0).unwrap())
}

/// Random generator matrix with off-diagonal rates in `[lo, hi)`.
pub fn generator(n: usize, lo: f64, hi: f64) -> impl Strategy<Value = DMatrix<f64>> {
    prop::collection::vec(lo..hi, n * n).prop_map(move |v| {
        let mut q = DMatrix::from_row_slice(n, n, &v);
        for i in 0..n {
            q[(i, i)] = 0.0;
            let row: f64 = q.row(i).sum();
            q[(i, i)] = -row;
        }
        q
    })
}

/// Stationary vector of an irreducible generator.
pub fn stationary(q: &DMatrix<f64>) -> RowDVector<f64> {
    let n = q.nrows();
    let mut sys = q.transpose();
    sys.row_mut(0).fill(1.0);
    let mut rhs = DVector::zeros(n);
    rhs[0] = 1.0;
    sys.lu().solve(&rhs).unwrap().transpose()
}
