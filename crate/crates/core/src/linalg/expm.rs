//! Matrix exponential by scaling and squaring with a degree-13 Padé approximant.

use nalgebra::{DMatrix, RowDVector};

use super::norm1;

const THETA_13: f64 = 5.371_920_351_148_152;

const PADE_13: [f64; 14] = [
    64_764_752_532_480_000.0,
    32_382_376_266_240_000.0,
    7_771_770_303_897_600.0,
    1_187_353_796_428_800.0,
    129_060_195_264_000.0,
    10_559_470_521_600.0,
    670_442_572_800.0,
    33_522_128_640.0,
    1_323_241_920.0,
    40_840_800.0,
    960_960.0,
    16_380.0,
    182.0,
    1.0,
];

/// `e^A` for a square matrix.
pub fn expm(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "expm needs a square matrix");
    match n {
        0 => return DMatrix::zeros(0, 0),
        1 => return DMatrix::from_element(1, 1, a[(0, 0)].exp()),
        _ => {}
    }

    let norm = norm1(a);
    let squarings = if norm > THETA_13 {
        (norm / THETA_13).log2().ceil() as i32
    } else {
        0
    };
    let scaled = a * 2f64.powi(-squarings);

    let b = &PADE_13;
    let eye = DMatrix::<f64>::identity(n, n);
    let a2 = &scaled * &scaled;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;

    let inner_u = &a6 * (&a6 * b[13] + &a4 * b[11] + &a2 * b[9]);
    let u = &scaled * (inner_u + &a6 * b[7] + &a4 * b[5] + &a2 * b[3] + &eye * b[1]);
    let inner_v = &a6 * (&a6 * b[12] + &a4 * b[10] + &a2 * b[8]);
    let v = inner_v + &a6 * b[6] + &a4 * b[4] + &a2 * b[2] + &eye * b[0];

    let denom = &v - &u;
    let numer = &v + &u;
    let mut result = denom
        .lu()
        .solve(&numer)
        .expect("Padé denominator is nonsingular for scaled arguments");

    for _ in 0..squarings {
        result = &result * &result;
    }
    result
}

/// Propagates a row vector `v·e^{A·x}` along an increasing sequence of points.
///
/// Evaluation points that are spaced evenly share one exponential, so a
/// uniform grid of any length costs a single `expm`.
#[derive(Debug)]
pub struct ExpStepper<'a> {
    a: &'a DMatrix<f64>,
    cached_step: Option<(f64, DMatrix<f64>)>,
    position: f64,
    state: RowDVector<f64>,
}

impl<'a> ExpStepper<'a> {
    pub fn new(a: &'a DMatrix<f64>, start: RowDVector<f64>) -> Self {
        Self {
            a,
            cached_step: None,
            position: 0.0,
            state: start,
        }
    }

    /// Returns `start·e^{A·x}`. Points must be visited in nondecreasing order.
    pub fn advance_to(&mut self, x: f64) -> &RowDVector<f64> {
        assert!(
            x >= self.position,
            "ExpStepper points must be nondecreasing"
        );
        let step = x - self.position;
        if step > 0.0 {
            let reuse = matches!(&self.cached_step,
                Some((h, _)) if (h - step).abs() <= 1e-12 * h.max(step));
            if !reuse {
                self.cached_step = Some((step, expm(&(self.a * step))));
            }
            let (_, e) = self.cached_step.as_ref().unwrap();
            self.state = &self.state * e;
            // snap to the requested point so uniform grids keep hitting the cache
            self.position = x;
        }
        &self.state
    }
}
