//! Phase-type and matrix-exponential distributions.
//!
//! Both families share the representation `(alpha, S, mass0)` with density
//! `f(x) = -alpha·e^{Sx}·S·1` for `x > 0` plus an atom `mass0` at the origin.
//! A [`PhDistribution`] additionally carries the stochastic interpretation
//! (absorption time of a Markov chain), which is what makes it samplable.

use nalgebra::{DMatrix, DVector, RowDVector};
use rand::Rng;
use rand_distr::{Distribution as _, Exp1};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{expm, ones, rightmost_eigenvalue, ExpStepper};
use crate::policy::NumericPolicy;

/// Common evaluation surface of the `(alpha, S, mass0)` family.
pub trait MatrixExpDistribution {
    fn alpha(&self) -> &RowDVector<f64>;
    fn subgenerator(&self) -> &DMatrix<f64>;
    fn mass0(&self) -> f64;

    fn order(&self) -> usize {
        self.alpha().len()
    }

    /// Absorption-rate vector `-S·1`.
    fn exit_vector(&self) -> DVector<f64> {
        -(self.subgenerator() * ones(self.order()))
    }

    /// Density at `x`, excluding the atom at zero (`pdf(0)` is the right limit).
    fn pdf(&self, x: f64) -> Result<f64> {
        check_point(x)?;
        let e = expm(&(self.subgenerator() * x));
        Ok((self.alpha() * e * self.exit_vector())[0])
    }

    fn cdf(&self, x: f64) -> Result<f64> {
        check_point(x)?;
        let e = expm(&(self.subgenerator() * x));
        Ok(1.0 - (self.alpha() * e * ones(self.order()))[0])
    }

    /// `1 - cdf(x)`, computed without cancellation.
    fn tail(&self, x: f64) -> Result<f64> {
        check_point(x)?;
        let e = expm(&(self.subgenerator() * x));
        Ok((self.alpha() * e * ones(self.order()))[0])
    }

    /// `E[X^i] = i!·alpha·(-S)^{-i}·1`.
    fn moment(&self, i: u32) -> f64 {
        assert!(i >= 1, "moments start at 1");
        let lu = (-self.subgenerator()).lu();
        let mut w = ones(self.order());
        let mut factorial = 1.0;
        for k in 1..=i {
            w = lu.solve(&w).expect("subgenerator is nonsingular");
            factorial *= k as f64;
        }
        factorial * (self.alpha() * w)[0]
    }

    fn mean(&self) -> f64 {
        self.moment(1)
    }

    /// Squared coefficient of variation.
    fn scov(&self) -> f64 {
        let m1 = self.moment(1);
        self.moment(2) / (m1 * m1) - 1.0
    }

    /// `(pdf, cdf)` at every point of `xs`, in input order.
    ///
    /// Points are visited in sorted order and evenly spaced runs reuse one
    /// matrix exponential, so dense uniform grids stay cheap for large orders.
    fn eval_grid(&self, xs: &[f64]) -> Result<Vec<(f64, f64)>> {
        for &x in xs {
            check_point(x)?;
        }
        let mut order: Vec<usize> = (0..xs.len()).collect();
        order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
        let s = self.subgenerator();
        let nu = self.exit_vector();
        let one = ones(self.order());
        let mut stepper = ExpStepper::new(s, self.alpha().clone());
        let mut out = vec![(0.0, 0.0); xs.len()];
        for idx in order {
            let v = stepper.advance_to(xs[idx]);
            out[idx] = ((v * &nu)[0], 1.0 - (v * &one)[0]);
        }
        Ok(out)
    }
}

fn check_point(x: f64) -> Result<()> {
    if x >= 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain {
            what: "x",
            value: x,
            domain: "x >= 0",
        })
    }
}

fn check_dims(alpha: &RowDVector<f64>, s: &DMatrix<f64>) -> Result<()> {
    if s.nrows() != s.ncols() {
        return Err(Error::Dimension(format!(
            "subgenerator must be square, got {}x{}",
            s.nrows(),
            s.ncols()
        )));
    }
    if alpha.len() != s.nrows() {
        return Err(Error::Dimension(format!(
            "initial vector has length {} but subgenerator has order {}",
            alpha.len(),
            s.nrows()
        )));
    }
    if alpha.is_empty() {
        return Err(Error::Dimension("order must be at least 1".into()));
    }
    Ok(())
}

fn spectral_violation(s: &DMatrix<f64>) -> Option<String> {
    match rightmost_eigenvalue(s) {
        None => Some("eigenvalues of S could not be computed".into()),
        Some(z) if z.re >= 0.0 => Some(format!(
            "S is not stable: eigenvalue {:.6e}{:+.6e}i has nonnegative real part",
            z.re, z.im
        )),
        Some(_) => None,
    }
}

/// Invariant violations of a phase-type representation (empty when valid).
pub fn validate_ph(
    alpha: &RowDVector<f64>,
    s: &DMatrix<f64>,
    mass0: f64,
    policy: &NumericPolicy,
) -> Result<Vec<String>> {
    check_dims(alpha, s)?;
    let m = alpha.len();
    let mut out = Vec::new();
    if let Some((i, a)) = alpha.iter().enumerate().find(|(_, a)| **a < 0.0) {
        out.push(format!("alpha[{i}] = {a:e} is negative"));
    }
    if !(0.0..=1.0).contains(&mass0) {
        out.push(format!("mass0 = {mass0} is not a probability"));
    }
    let total = alpha.sum() + mass0;
    if (total - 1.0).abs() > policy.ph_mass {
        out.push(format!(
            "alpha·1+mass0 ≠ 1 (got {total:.15}, residual {:.3e})",
            total - 1.0
        ));
    }
    for i in 0..m {
        if s[(i, i)] >= 0.0 {
            out.push(format!("S[{i},{i}] = {} is not strictly negative", s[(i, i)]));
        }
        for j in 0..m {
            if i != j && s[(i, j)] < 0.0 {
                out.push(format!("S[{i},{j}] = {} is a negative off-diagonal", s[(i, j)]));
            }
        }
        let row: f64 = s.row(i).sum();
        let scale = s.row(i).amax().max(1.0);
        if row > policy.generator_rows * scale {
            out.push(format!("row {i} of S sums to {row:e} > 0"));
        }
    }
    if let Some(v) = spectral_violation(s) {
        out.push(v);
    }
    Ok(out)
}

/// Invariant violations of a matrix-exponential representation (empty when valid).
///
/// Besides stability and normalization this runs a nonnegativity screen of
/// the density on a grid that is uniform within each of four decades below
/// `40/|Re λ_max|` (201 points in total).
pub fn validate_me(
    alpha: &RowDVector<f64>,
    s: &DMatrix<f64>,
    mass0: f64,
    policy: &NumericPolicy,
) -> Result<Vec<String>> {
    check_dims(alpha, s)?;
    let mut out = Vec::new();
    if !(0.0..=1.0).contains(&mass0) {
        out.push(format!("mass0 = {mass0} is not in [0, 1]"));
    }
    let total = alpha.sum() + mass0;
    if (total - 1.0).abs() > policy.me_mass {
        out.push(format!(
            "alpha·1+mass0 ≠ 1 (got {total:.15}, residual {:.3e})",
            total - 1.0
        ));
    }
    let Some(rightmost) = rightmost_eigenvalue(s) else {
        out.push("eigenvalues of S could not be computed".into());
        return Ok(out);
    };
    if rightmost.re >= 0.0 {
        out.push(format!(
            "S is not stable: eigenvalue {:.6e}{:+.6e}i has nonnegative real part",
            rightmost.re, rightmost.im
        ));
        return Ok(out);
    }

    let horizon = 40.0 / rightmost.re.abs();
    let nu = -(s * ones(alpha.len()));
    let mut worst = (0.0_f64, 0.0_f64);
    let mut peak = (alpha * &nu)[0].abs();
    for decade in 0..4 {
        let h = horizon * 10f64.powi(-decade) / 50.0;
        let mut stepper = ExpStepper::new(s, alpha.clone());
        for j in 1..=50 {
            let x = h * j as f64;
            let f = (stepper.advance_to(x) * &nu)[0];
            peak = peak.max(f.abs());
            if f < worst.1 {
                worst = (x, f);
            }
        }
    }
    if worst.1 < -policy.negativity * peak.max(1.0) {
        out.push(format!(
            "density is negative: f({:.6e}) = {:.3e}",
            worst.0, worst.1
        ));
    }
    Ok(out)
}

macro_rules! impl_family {
    ($ty:ident) => {
        impl MatrixExpDistribution for $ty {
            fn alpha(&self) -> &RowDVector<f64> {
                &self.alpha
            }
            fn subgenerator(&self) -> &DMatrix<f64> {
                &self.s
            }
            fn mass0(&self) -> f64 {
                self.mass0
            }
        }

        impl From<$ty> for RawDistribution {
            fn from(d: $ty) -> Self {
                RawDistribution::from_parts(&d.alpha, &d.s, d.mass0)
            }
        }

        impl TryFrom<RawDistribution> for $ty {
            type Error = Error;
            fn try_from(raw: RawDistribution) -> Result<Self> {
                let (alpha, s, mass0) = raw.into_parts()?;
                $ty::new(alpha, s, mass0)
            }
        }
    };
}

/// Phase-type distribution `PH(alpha, S)` with optional atom at zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDistribution", into = "RawDistribution")]
pub struct PhDistribution {
    alpha: RowDVector<f64>,
    s: DMatrix<f64>,
    mass0: f64,
}

/// Matrix-exponential distribution: same density form, no sign constraints
/// on `alpha` or `S`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDistribution", into = "RawDistribution")]
pub struct MeDistribution {
    alpha: RowDVector<f64>,
    s: DMatrix<f64>,
    mass0: f64,
}

impl_family!(PhDistribution);
impl_family!(MeDistribution);

impl PhDistribution {
    pub fn new(alpha: RowDVector<f64>, s: DMatrix<f64>, mass0: f64) -> Result<Self> {
        let violations = validate_ph(&alpha, &s, mass0, &NumericPolicy::DEFAULT)?;
        if !violations.is_empty() {
            return Err(Error::InvalidDistribution(violations));
        }
        Ok(Self { alpha, s, mass0 })
    }

    pub fn exponential(rate: f64) -> Result<Self> {
        Self::erlang(1, rate)
    }

    /// Erlang distribution with `order` stages of rate `rate` each.
    pub fn erlang(order: usize, rate: f64) -> Result<Self> {
        if !(rate > 0.0 && rate.is_finite()) {
            return Err(Error::Domain {
                what: "rate",
                value: rate,
                domain: "rate > 0",
            });
        }
        if order == 0 {
            return Err(Error::Dimension("Erlang order must be at least 1".into()));
        }
        let mut alpha = RowDVector::zeros(order);
        alpha[0] = 1.0;
        Ok(Self {
            alpha,
            s: erlang_chain(order, rate),
            mass0: 0.0,
        })
    }

    /// Erlang distribution with the given mean and order, written `E(mean, order)`.
    pub fn erlang_mean(mean: f64, order: usize) -> Result<Self> {
        Self::erlang(order, order as f64 / mean)
    }

    /// Invariant violations under `policy`.
    pub fn violations(&self, policy: &NumericPolicy) -> Vec<String> {
        validate_ph(&self.alpha, &self.s, self.mass0, policy).expect("dimensions checked")
    }

    /// Draws one absorption time.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.sampler().sample(rng)
    }

    /// Precomputed jump tables for repeated sampling.
    pub fn sampler(&self) -> PhSampler {
        PhSampler::new(self)
    }

    /// Same distribution scaled in time by `factor` (`X ↦ factor·X`).
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(self.alpha.clone(), &self.s / factor, self.mass0)
    }
}

impl MeDistribution {
    pub fn new(alpha: RowDVector<f64>, s: DMatrix<f64>, mass0: f64) -> Result<Self> {
        let violations = validate_me(&alpha, &s, mass0, &NumericPolicy::DEFAULT)?;
        if !violations.is_empty() {
            return Err(Error::InvalidDistribution(violations));
        }
        Ok(Self { alpha, s, mass0 })
    }

    /// Builds the representation without running the invariant checks.
    ///
    /// Used for solver output, which is validated separately (the density
    /// screen is expensive for large orders).
    pub fn from_parts_unchecked(alpha: RowDVector<f64>, s: DMatrix<f64>, mass0: f64) -> Self {
        Self { alpha, s, mass0 }
    }

    pub fn violations(&self, policy: &NumericPolicy) -> Vec<String> {
        validate_me(&self.alpha, &self.s, self.mass0, policy).expect("dimensions checked")
    }

    /// Reinterprets the representation as phase type, if it qualifies.
    pub fn to_ph(&self) -> Result<PhDistribution> {
        PhDistribution::new(self.alpha.clone(), self.s.clone(), self.mass0)
            .map_err(|_| Error::Unsupported("sampling requires a phase-type representation"))
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<f64> {
        Ok(self.to_ph()?.sample(rng))
    }
}

impl From<PhDistribution> for MeDistribution {
    fn from(d: PhDistribution) -> Self {
        Self {
            alpha: d.alpha,
            s: d.s,
            mass0: d.mass0,
        }
    }
}

fn erlang_chain(order: usize, rate: f64) -> DMatrix<f64> {
    let mut s = DMatrix::zeros(order, order);
    for i in 0..order {
        s[(i, i)] = -rate;
        if i + 1 < order {
            s[(i, i + 1)] = rate;
        }
    }
    s
}

/// Largest number of phases [`fit_mean_scov`] will build; bounds `scov` below by `1/MAX_FIT_ORDER`.
pub const MAX_FIT_ORDER: usize = 1000;

/// Two-moment phase-type fit.
///
/// * `scov = 1/j` for an integer `j`: Erlang of order `j`.
/// * `1/k < scov < 1/(k-1)`: mixture of Erlang(k-1) and Erlang(k) with a common rate.
/// * `scov = 1`: exponential.
/// * `scov > 1`: two-phase hyper-exponential with balanced means.
pub fn fit_mean_scov(mean: f64, scov: f64) -> Result<PhDistribution> {
    if !(mean > 0.0 && mean.is_finite()) {
        return Err(Error::Domain {
            what: "mean",
            value: mean,
            domain: "mean > 0",
        });
    }
    if !(scov > 0.0 && scov.is_finite()) {
        return Err(Error::Domain {
            what: "scov",
            value: scov,
            domain: "scov > 0",
        });
    }

    if scov > 1.0 + 1e-12 {
        let root = ((scov - 1.0) / (scov + 1.0)).sqrt();
        let q1 = 0.5 * (1.0 + root);
        let q2 = 0.5 * (1.0 - root);
        let alpha = RowDVector::from_row_slice(&[q1, q2]);
        let s = DMatrix::from_diagonal(&DVector::from_row_slice(&[
            -2.0 * q1 / mean,
            -2.0 * q2 / mean,
        ]));
        return PhDistribution::new(alpha, s, 0.0);
    }

    let inv = 1.0 / scov;
    if inv.ceil() > MAX_FIT_ORDER as f64 + 1e-9 * inv {
        return Err(Error::Domain {
            what: "scov",
            value: scov,
            domain: "scov >= 1/1000 (at most 1000 phases)",
        });
    }
    let nearest = inv.round();
    if (inv - nearest).abs() <= 1e-9 * inv {
        return PhDistribution::erlang_mean(mean, nearest as usize);
    }

    let k = inv.ceil();
    let q = (k * scov - (k * (1.0 + scov) - k * k * scov).sqrt()) / (1.0 + scov);
    let rate = (k - q) / mean;
    let order = k as usize;
    // start at stage 2 (Erlang(k-1)) with probability q, else stage 1
    let mut alpha = RowDVector::zeros(order);
    alpha[0] = 1.0 - q;
    alpha[1] = q;
    PhDistribution::new(alpha, erlang_chain(order, rate), 0.0)
}

/// Converts a density `g·e^{Ax}·h` (plus `mass0` at zero) into an equivalent
/// `(alpha, S)` representation of the same order.
///
/// With `v = -A^{-1}·h` a nonsingular `M` with `M·1 = v` is built from the
/// diagonal of `v` (and, for negligible `v_i`, a compensating entry in the
/// column of the first significant index); then `alpha = g·M`,
/// `S = M^{-1}·A·M` reproduces the density exactly.
pub fn me_from_form(
    g: &RowDVector<f64>,
    a: &DMatrix<f64>,
    h: &DVector<f64>,
    mass0: f64,
) -> Result<MeDistribution> {
    let n = a.nrows();
    if a.ncols() != n || g.len() != n || h.len() != n {
        return Err(Error::Dimension(format!(
            "form dimensions disagree: g {}, A {}x{}, h {}",
            g.len(),
            n,
            a.ncols(),
            h.len()
        )));
    }
    let lu = a.clone().lu();
    let v = -lu
        .solve(h)
        .ok_or_else(|| Error::Contract("A is singular".into()))?;
    let total = (g * &v)[0] + mass0;
    if (total - 1.0).abs() > NumericPolicy::DEFAULT.form_mass {
        return Err(Error::Contract(format!(
            "form does not integrate to one: -g·A^-1·h + mass0 = {total:.12}"
        )));
    }

    let vmax = v.amax();
    if h.amax() == 0.0 || vmax == 0.0 {
        if (mass0 - 1.0).abs() > NumericPolicy::DEFAULT.form_mass {
            return Err(Error::Contract("h = 0 but mass0 ≠ 1".into()));
        }
        return Ok(MeDistribution::from_parts_unchecked(
            RowDVector::zeros(n),
            a.clone(),
            1.0,
        ));
    }

    let negligible = 1e-8 * vmax;
    let pivot = v.iter().position(|x| x.abs() > negligible).unwrap();
    let mut m = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        if i == pivot || v[i].abs() > negligible {
            m[(i, i)] = v[i];
        } else {
            m[(i, i)] = 1.0;
            m[(i, pivot)] = v[i] - 1.0;
        }
    }
    let alpha = g * &m;
    let s = m
        .clone()
        .lu()
        .solve(&(a * &m))
        .ok_or_else(|| Error::numerical("basis change is singular", f64::INFINITY))?;
    Ok(MeDistribution::from_parts_unchecked(alpha, s, mass0))
}

/// Jump tables of a phase-type distribution for simulation by absorption.
#[derive(Debug, Clone)]
pub struct PhSampler {
    /// Cumulative initial probabilities; index `m` (past the phases) is the atom at zero.
    initial: Vec<(usize, f64)>,
    phases: Vec<PhaseExit>,
}

#[derive(Debug, Clone)]
struct PhaseExit {
    rate: f64,
    /// Cumulative jump probabilities over nonzero targets; target `m` is absorption.
    jumps: Vec<(usize, f64)>,
}

impl PhSampler {
    pub fn new(d: &PhDistribution) -> Self {
        let m = d.order();
        let mut initial = Vec::new();
        let mut acc = 0.0;
        for (i, &a) in d.alpha.iter().enumerate() {
            if a > 0.0 {
                acc += a;
                initial.push((i, acc));
            }
        }
        initial.push((m, 1.0));

        let nu = d.exit_vector();
        let phases = (0..m)
            .map(|i| {
                let rate = -d.s[(i, i)];
                let mut jumps = Vec::new();
                let mut acc = 0.0;
                for j in 0..m {
                    if j != i && d.s[(i, j)] > 0.0 {
                        acc += d.s[(i, j)] / rate;
                        jumps.push((j, acc));
                    }
                }
                if nu[i] > 0.0 || jumps.is_empty() {
                    jumps.push((m, f64::INFINITY));
                } else if let Some(last) = jumps.last_mut() {
                    last.1 = f64::INFINITY;
                }
                PhaseExit { rate, jumps }
            })
            .collect();
        Self { initial, phases }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let absorbing = self.phases.len();
        let mut phase = pick(&self.initial, rng.gen::<f64>());
        let mut t = 0.0;
        while phase != absorbing {
            let exit = &self.phases[phase];
            let hold: f64 = Exp1.sample(rng);
            t += hold / exit.rate;
            phase = if exit.jumps.len() == 1 {
                exit.jumps[0].0
            } else {
                pick(&exit.jumps, rng.gen::<f64>())
            };
        }
        t
    }
}

fn pick(cumulative: &[(usize, f64)], u: f64) -> usize {
    cumulative
        .iter()
        .find(|(_, c)| u < *c)
        .map(|(i, _)| *i)
        .unwrap_or(cumulative[cumulative.len() - 1].0)
}

/// JSON shape `{alpha: [...], S: [[...]], mass0: x}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RawDistribution {
    pub alpha: Vec<f64>,
    #[serde(rename = "S")]
    pub s: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mass0: Option<f64>,
}

impl RawDistribution {
    fn from_parts(alpha: &RowDVector<f64>, s: &DMatrix<f64>, mass0: f64) -> Self {
        Self {
            alpha: alpha.iter().copied().collect(),
            s: s.row_iter().map(|r| r.iter().copied().collect()).collect(),
            mass0: Some(mass0),
        }
    }

    fn into_parts(self) -> Result<(RowDVector<f64>, DMatrix<f64>, f64)> {
        let m = self.s.len();
        if let Some(bad) = self.s.iter().find(|r| r.len() != m) {
            return Err(Error::Dimension(format!(
                "S must be square: row of length {} in a {m}-row matrix",
                bad.len()
            )));
        }
        let flat: Vec<f64> = self.s.into_iter().flatten().collect();
        let s = DMatrix::from_row_slice(m, m, &flat);
        let mass0 = self
            .mass0
            .unwrap_or_else(|| (1.0 - self.alpha.iter().sum::<f64>()).max(0.0));
        Ok((RowDVector::from_vec(self.alpha), s, mass0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn row(v: &[f64]) -> RowDVector<f64> {
        RowDVector::from_row_slice(v)
    }

    #[test]
    fn validate_examples() {
        let p = NumericPolicy::DEFAULT;
        let s = DMatrix::from_element(1, 1, -1.0);
        assert!(validate_ph(&row(&[1.0]), &s, 0.0, &p).unwrap().is_empty());

        let s = DMatrix::from_row_slice(2, 2, &[-1.0, 0.0, 0.0, -1.0]);
        let v = validate_ph(&row(&[0.5, 0.6]), &s, 0.0, &p).unwrap();
        assert_eq!(v.len(), 1);
        assert!(v[0].contains("alpha·1+mass0 ≠ 1"), "{v:?}");

        let s = DMatrix::from_row_slice(2, 2, &[-2.0, 2.0, 0.0, -2.0]);
        assert!(validate_ph(&row(&[1.0, 0.0]), &s, 0.0, &p).unwrap().is_empty());
    }

    #[test]
    fn validate_dimension_mismatch_is_structural() {
        let s = DMatrix::from_element(2, 2, -1.0);
        let err = validate_ph(&row(&[1.0]), &s, 0.0, &NumericPolicy::DEFAULT).unwrap_err();
        assert!(matches!(err, Error::Dimension(_)));
    }

    #[test]
    fn validate_flags_sign_and_stability() {
        let s = DMatrix::from_row_slice(2, 2, &[-1.0, -0.5, 1.0, 0.5]);
        let v = validate_ph(&row(&[1.0, 0.0]), &s, 0.0, &NumericPolicy::DEFAULT).unwrap();
        assert!(v.iter().any(|m| m.contains("negative off-diagonal")));
        assert!(v.iter().any(|m| m.contains("not strictly negative")));
        assert!(v.iter().any(|m| m.contains("sums to")));
    }

    #[test]
    fn exponential_pdf_and_cdf() {
        let d = PhDistribution::exponential(2.0).unwrap();
        assert!((d.pdf(0.0).unwrap() - 2.0).abs() < 1e-15);
        assert!((d.cdf(2f64.ln() / 2.0).unwrap() - 0.5).abs() < 1e-15);
        assert!(matches!(d.pdf(-1.0), Err(Error::Domain { .. })));
        assert!(matches!(d.cdf(-0.1), Err(Error::Domain { .. })));
    }

    #[test]
    fn erlang_cdf_closed_form() {
        let d = PhDistribution::erlang_mean(1.0, 2).unwrap();
        for x in [0.1, 0.5, 1.0, 3.0, 8.0] {
            let exact = 1.0 - (-2.0_f64 * x).exp() * (1.0 + 2.0 * x);
            assert!((d.cdf(x).unwrap() - exact).abs() < 1e-14);
        }
        assert!((d.cdf(1.0).unwrap() - 0.593_994_150_290_161_9).abs() < 1e-14);
        assert!((d.moment(2) - 1.5).abs() < 1e-14);
    }

    #[test]
    fn exponential_moments() {
        let d = PhDistribution::exponential(4.0).unwrap();
        assert!((d.moment(1) - 0.25).abs() < 1e-15);
        assert!((d.moment(2) - 2.0 / 16.0).abs() < 1e-15);
        assert!((d.moment(3) - 6.0 / 64.0).abs() < 1e-15);
    }

    #[test]
    fn fit_structures() {
        let d = fit_mean_scov(1.0, 0.5).unwrap();
        assert_eq!(d.order(), 2);
        assert_eq!(d.alpha().as_slice(), &[1.0, 0.0]);
        assert!((d.subgenerator()[(0, 0)] + 2.0).abs() < 1e-15);

        let d = fit_mean_scov(1.0, 1.0).unwrap();
        assert_eq!(d.order(), 1);
        assert!((d.subgenerator()[(0, 0)] + 1.0).abs() < 1e-15);

        let d = fit_mean_scov(1.0, 0.4).unwrap();
        assert_eq!(d.order(), 3);
        assert!(d.alpha()[1] > 0.0 && d.alpha()[2] == 0.0);

        let d = fit_mean_scov(1.0, 4.0).unwrap();
        assert_eq!(d.order(), 2);
        let rates = d.exit_vector();
        // balanced means: q_i / mu_i equal
        assert!((d.alpha()[0] / rates[0] - d.alpha()[1] / rates[1]).abs() < 1e-15);
        assert!((d.moment(1) - 1.0).abs() < 1e-14);
        assert!((d.moment(2) - 5.0).abs() < 1e-13);
    }

    #[test]
    fn fit_rejects_nonpositive() {
        assert!(fit_mean_scov(0.0, 1.0).is_err());
        assert!(fit_mean_scov(1.0, -2.0).is_err());
    }

    #[test]
    fn me_conversion_of_canonical_forms() {
        let a = DMatrix::from_element(1, 1, -1.0);
        let d = me_from_form(&row(&[1.0]), &a, &DVector::from_element(1, 1.0), 0.0).unwrap();
        assert!((d.alpha()[0] - 1.0).abs() < 1e-15);
        assert!((d.subgenerator()[(0, 0)] + 1.0).abs() < 1e-15);

        let a = DMatrix::from_row_slice(2, 2, &[-2.0, 2.0, 0.0, -2.0]);
        let h = DVector::from_row_slice(&[0.0, 2.0]);
        let d = me_from_form(&row(&[1.0, 0.0]), &a, &h, 0.0).unwrap();
        let erlang = PhDistribution::erlang_mean(1.0, 2).unwrap();
        for i in 0..200 {
            let x = 0.05 * i as f64;
            assert!((d.pdf(x).unwrap() - erlang.pdf(x).unwrap()).abs() < 1e-10);
        }
    }

    #[test]
    fn me_conversion_rejects_unnormalized() {
        let a = DMatrix::from_element(1, 1, -1.0);
        let err = me_from_form(&row(&[2.0]), &a, &DVector::from_element(1, 1.0), 0.0);
        assert!(matches!(err, Err(Error::Contract(_))));
        let err = me_from_form(&row(&[1.0]), &a, &DVector::zeros(1), 0.5);
        assert!(matches!(err, Err(Error::Contract(_))));
    }

    #[test]
    fn degenerate_atom_samples_zero() {
        let d = PhDistribution::new(row(&[0.0]), DMatrix::from_element(1, 1, -3.0), 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!((0..1000).all(|_| d.sample(&mut rng) == 0.0));
        assert_eq!(d.cdf(0.0).unwrap(), 1.0);
    }

    #[test]
    fn sampling_is_reproducible_and_unbiased() {
        let d = PhDistribution::exponential(1.0).unwrap();
        let sampler = d.sampler();
        let draw = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..1_000_000).map(|_| sampler.sample(&mut rng)).collect::<Vec<_>>()
        };
        let a = draw(11);
        assert_eq!(a, draw(11));
        let mean = a.iter().sum::<f64>() / a.len() as f64;
        assert!((0.997..=1.003).contains(&mean), "{mean}");
    }

    #[test]
    fn erlang_sample_scov() {
        let d = PhDistribution::erlang_mean(1.0, 4).unwrap();
        let sampler = d.sampler();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 1_000_000;
        let xs: Vec<f64> = (0..n).map(|_| sampler.sample(&mut rng)).collect();
        let m1 = xs.iter().sum::<f64>() / n as f64;
        let m2 = xs.iter().map(|x| x * x).sum::<f64>() / n as f64;
        let scov = m2 / (m1 * m1) - 1.0;
        // delta method on (m1, m2) with the exact Erlang(4, rate 4) raw moments
        let mu: Vec<f64> = (1..=4)
            .map(|k| (0..k).map(|j| (4 + j) as f64).product::<f64>() / 4f64.powi(k))
            .collect();
        let grad = [-2.0 * mu[1] / mu[0].powi(3), 1.0 / mu[0].powi(2)];
        let var_x = mu[1] - mu[0] * mu[0];
        let cov = mu[2] - mu[0] * mu[1];
        let var_x2 = mu[3] - mu[1] * mu[1];
        let var = grad[0] * grad[0] * var_x + 2.0 * grad[0] * grad[1] * cov + grad[1] * grad[1] * var_x2;
        let se = (var / n as f64).sqrt();
        assert!((scov - 0.25).abs() < 3.0 * se, "scov {scov} se {se}");
    }

    #[test]
    fn me_with_negative_entries_cannot_sample() {
        // density (2e^{-x} - 2e^{-2x})... as ME with a negative initial entry
        let a = DMatrix::from_row_slice(2, 2, &[-1.0, 0.0, 0.0, -2.0]);
        let d = me_from_form(
            &row(&[1.0, -1.0]),
            &a,
            &DVector::from_row_slice(&[2.0, 2.0]),
            0.0,
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        assert!(matches!(d.sample(&mut rng), Err(Error::Unsupported(_))));
    }

    #[test]
    fn json_round_trip_shape() {
        let d = fit_mean_scov(2.0, 0.4).unwrap();
        let text = serde_json::to_string(&d).unwrap();
        assert!(text.contains("\"alpha\"") && text.contains("\"S\"") && text.contains("\"mass0\""));
        let back: PhDistribution = serde_json::from_str(&text).unwrap();
        assert_eq!(back, d);
        let bad = r#"{"alpha":[0.5,0.6],"S":[[-1,0],[0,-1]],"mass0":0}"#;
        assert!(serde_json::from_str::<PhDistribution>(bad).is_err());
    }

    #[test]
    fn grid_evaluation_matches_pointwise() {
        let d = fit_mean_scov(1.5, 0.3).unwrap();
        let xs: Vec<f64> = vec![3.0, 0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 7.25];
        let grid = d.eval_grid(&xs).unwrap();
        for (x, (f, c)) in xs.iter().zip(grid) {
            assert!((f - d.pdf(*x).unwrap()).abs() < 1e-13);
            assert!((c - d.cdf(*x).unwrap()).abs() < 1e-13);
        }
    }
}
