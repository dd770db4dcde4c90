//! Level-discretized CTMC approximation of a fluid queue.
//!
//! The fluid level is cut into cells of width `step`; a state with drift `r`
//! moves one cell up (or down) at rate `|r| / step`. Cell 0 holds the level
//! zero boundary, where negative-drift states follow `Q̃`. The stationary
//! vector of the resulting level-dependent QBD is found by linear level
//! reduction, independently of the spectral solver.

use nalgebra::{DMatrix, DVector, RowDVector};

use crate::error::{Error, Result};
use crate::mfq::GmfqSpec;

/// Stationary level distribution on the grid `0, step, 2·step, …`.
#[derive(Debug, Clone)]
pub struct DiscretizedLevel {
    pub step: f64,
    /// Probability of each cell.
    pub cells: Vec<f64>,
}

impl DiscretizedLevel {
    /// `P(level ≤ x)`; cell `L` covers levels up to `L·step`.
    pub fn cdf(&self, x: f64) -> f64 {
        let last = (x / self.step + 1e-9).floor();
        if last < 0.0 {
            return 0.0;
        }
        let upto = (last as usize + 1).min(self.cells.len());
        self.cells[..upto].iter().sum()
    }
}

pub fn discretized_level(spec: &GmfqSpec, step: f64, max_level: f64) -> Result<DiscretizedLevel> {
    let n = spec.order();
    let levels = (max_level / step).ceil() as usize;
    if levels < 2 {
        return Err(Error::Domain {
            what: "max_level",
            value: max_level,
            domain: "at least two cells",
        });
    }
    let r = spec.drifts();
    let up = DMatrix::from_diagonal(&DVector::from_fn(n, |i, _| (r[i].max(0.0)) / step));
    let down = DMatrix::from_diagonal(&DVector::from_fn(n, |i, _| (-r[i]).max(0.0) / step));

    let interior = spec.q() - &up - &down;
    let top = spec.q() - &down;
    let mut boundary = spec.q() - &up;
    for i in 0..n {
        if r[i] < 0.0 {
            boundary.set_row(i, &spec.q_tilde().row(i));
        }
    }

    // π_L = π_{L-1}·R_L with R_L = U·(−(D_L + R_{L+1}·Dn))⁻¹
    let mut rates: Vec<DMatrix<f64>> = Vec::with_capacity(levels);
    let mut next: Option<DMatrix<f64>> = None;
    for level in (1..=levels).rev() {
        let local = if level == levels { top.clone() } else { interior.clone() };
        let m = match &next {
            Some(rn) => local + rn * &down,
            None => local,
        };
        let inv = (-m)
            .try_inverse()
            .ok_or_else(|| Error::numerical("singular level block", f64::INFINITY))?;
        let rl = &up * inv;
        rates.push(rl.clone());
        next = Some(rl);
    }
    rates.reverse();

    let b0 = boundary + &rates[0] * &down;
    // left null vector of b0: solve b0ᵀ xᵀ = 0 with one equation replaced by normalization
    let mut sys = b0.transpose();
    sys.row_mut(0).fill(1.0);
    let mut rhs = DVector::zeros(n);
    rhs[0] = 1.0;
    let pi0 = sys
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::numerical("singular boundary block", f64::INFINITY))?
        .transpose();

    let mut vectors: Vec<RowDVector<f64>> = Vec::with_capacity(levels + 1);
    vectors.push(pi0);
    for rl in &rates {
        let v = vectors.last().unwrap() * rl;
        vectors.push(v);
    }
    let total: f64 = vectors.iter().map(|v| v.sum()).sum();
    let cells = vectors.iter().map(|v| v.sum() / total).collect();
    Ok(DiscretizedLevel { step, cells })
}
