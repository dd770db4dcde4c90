//! Steady state of generalized Markov fluid queues.
//!
//! A generalized fluid queue `(Q, Q̃, R)` has a modulating chain that follows
//! `Q` while the fluid level is positive and `Q̃` while it sits at zero; the
//! level moves with drift `R_i` in state `i`. Its stationary joint law is
//!
//! ```text
//! f_i(x) = g·e^{Ax}·h_i  (x > 0),     P(level = 0, state i) = c_i
//! ```
//!
//! obtained from an orthogonal block triangularization of `Q·R^-1` followed by
//! a small boundary linear system.

use nalgebra::{DMatrix, DVector, RowDVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{eigenvalues, expm, max_abs, norm1, ones, ordered_real_schur};
use crate::phdist::{me_from_form, MeDistribution};
use crate::policy::NumericPolicy;

/// Input of the solver: generators `Q` (level > 0) and `Q̃` (level = 0) and
/// the drift vector `R`.
///
/// States may be given in any order; the solver permutes positive drifts
/// first internally and reports results in the caller's order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGmfq", into = "RawGmfq")]
pub struct GmfqSpec {
    q: DMatrix<f64>,
    q_tilde: DMatrix<f64>,
    drifts: DVector<f64>,
    signed: bool,
}

impl GmfqSpec {
    /// Validated constructor; generators must have nonnegative off-diagonals.
    pub fn new(q: DMatrix<f64>, q_tilde: DMatrix<f64>, drifts: DVector<f64>) -> Result<Self> {
        Self::build(q, q_tilde, drifts, false)
    }

    /// Like [`GmfqSpec::new`] but accepts negative off-diagonal entries.
    ///
    /// Needed when a matrix-exponential (not phase-type) block is substituted
    /// into a generator; row sums and drift signs are still enforced.
    pub fn with_signed_entries(
        q: DMatrix<f64>,
        q_tilde: DMatrix<f64>,
        drifts: DVector<f64>,
    ) -> Result<Self> {
        Self::build(q, q_tilde, drifts, true)
    }

    fn build(q: DMatrix<f64>, q_tilde: DMatrix<f64>, drifts: DVector<f64>, signed: bool) -> Result<Self> {
        let n = drifts.len();
        for (name, m) in [("Q", &q), ("Qtilde", &q_tilde)] {
            if m.nrows() != n || m.ncols() != n {
                return Err(Error::Dimension(format!(
                    "{name} is {}x{} but there are {n} drifts",
                    m.nrows(),
                    m.ncols()
                )));
            }
        }
        let spec = Self {
            q,
            q_tilde,
            drifts,
            signed,
        };
        let violations = spec.violations(&NumericPolicy::DEFAULT);
        if !violations.is_empty() {
            return Err(Error::InvalidSpec(violations));
        }
        Ok(spec)
    }

    pub fn violations(&self, policy: &NumericPolicy) -> Vec<String> {
        let mut out = Vec::new();
        for (name, m) in [("Q", &self.q), ("Qtilde", &self.q_tilde)] {
            for (i, row) in m.row_iter().enumerate() {
                let sum: f64 = row.sum();
                let scale = row.amax().max(1.0);
                if sum.abs() > policy.generator_rows * scale {
                    out.push(format!("row {i} of {name} sums to {sum:e}"));
                }
                if !self.signed {
                    if let Some((j, v)) = row.iter().enumerate().find(|(j, v)| *j != i && **v < 0.0) {
                        out.push(format!("{name}[{i},{j}] = {v:e} is a negative off-diagonal"));
                    }
                }
            }
        }
        for (i, r) in self.drifts.iter().enumerate() {
            if *r == 0.0 || !r.is_finite() {
                out.push(format!("drift of state {i} is {r}; drifts must be nonzero"));
            }
        }
        if self.negative_count() == 0 {
            out.push("at least one state needs a negative drift".into());
        }
        if self.positive_count() == 0 {
            out.push("at least one state needs a positive drift".into());
        }
        out
    }

    pub fn q(&self) -> &DMatrix<f64> {
        &self.q
    }

    pub fn q_tilde(&self) -> &DMatrix<f64> {
        &self.q_tilde
    }

    pub fn drifts(&self) -> &DVector<f64> {
        &self.drifts
    }

    pub fn order(&self) -> usize {
        self.drifts.len()
    }

    /// Number of positive-drift states (`b`).
    pub fn positive_count(&self) -> usize {
        self.drifts.iter().filter(|r| **r > 0.0).count()
    }

    /// Number of negative-drift states (`a`).
    pub fn negative_count(&self) -> usize {
        self.drifts.iter().filter(|r| **r < 0.0).count()
    }

    /// True when the Householder reducer applies: unit drifts with a single
    /// trailing `-1` and a zero last row of `Q`.
    pub fn householder_applicable(&self) -> bool {
        let n = self.order();
        n >= 2
            && self.drifts.iter().take(n - 1).all(|r| *r == 1.0)
            && self.drifts[n - 1] == -1.0
            && self.q.row(n - 1).iter().all(|v| *v == 0.0)
    }
}

#[derive(Serialize, Deserialize)]
struct RawGmfq {
    #[serde(rename = "Q")]
    q: Vec<Vec<f64>>,
    #[serde(rename = "Qtilde")]
    q_tilde: Vec<Vec<f64>>,
    #[serde(rename = "R")]
    r: Vec<f64>,
}

fn rows_to_matrix(name: &str, rows: Vec<Vec<f64>>) -> Result<DMatrix<f64>> {
    let n = rows.len();
    if rows.iter().any(|r| r.len() != n) {
        return Err(Error::Dimension(format!("{name} must be square")));
    }
    Ok(DMatrix::from_row_slice(n, n, &rows.concat()))
}

fn matrix_to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

impl TryFrom<RawGmfq> for GmfqSpec {
    type Error = Error;
    fn try_from(raw: RawGmfq) -> Result<Self> {
        let q = rows_to_matrix("Q", raw.q)?;
        let qt = rows_to_matrix("Qtilde", raw.q_tilde)?;
        GmfqSpec::with_signed_entries(q, qt, DVector::from_vec(raw.r))
    }
}

impl From<GmfqSpec> for RawGmfq {
    fn from(s: GmfqSpec) -> Self {
        RawGmfq {
            q: matrix_to_rows(&s.q),
            q_tilde: matrix_to_rows(&s.q_tilde),
            r: s.drifts.iter().copied().collect(),
        }
    }
}

/// Which orthogonal reduction to use for the block triangularization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Reducer {
    /// Householder when applicable, ordered Schur otherwise.
    Auto,
    OrderedSchur,
    Householder,
}

/// Numbers reported by the solver about its own accuracy.
#[derive(Debug, Clone, Serialize)]
pub struct SolveDiagnostics {
    pub reducer: Reducer,
    /// `‖PᵀP − I‖_max`.
    pub orthogonality: f64,
    /// `‖(PᵀQR⁻¹P)_{21}‖_max / ‖QR⁻¹‖₁`.
    pub block_residual: f64,
    /// Max-norm residual of the boundary system.
    pub boundary_residual: f64,
    /// 2-norm condition number of the boundary system.
    pub condition: f64,
    /// Largest real part among eigenvalues of `A`.
    pub decay_rate: f64,
    /// Sum of all densities' integrals and point masses.
    pub total_probability: f64,
}

/// Stationary joint law `f_i(x) = g·e^{Ax}·h_i + c_i·δ(x)`.
#[derive(Debug, Clone)]
pub struct SteadyState {
    pub g: RowDVector<f64>,
    pub a: DMatrix<f64>,
    /// `b × n`; column `i` is `h_i`, in the caller's state order.
    pub h: DMatrix<f64>,
    /// Point masses at level zero, in the caller's state order.
    pub c: DVector<f64>,
    pub diagnostics: SolveDiagnostics,
}

impl SteadyState {
    pub fn order(&self) -> usize {
        self.c.len()
    }

    /// Joint density vector `g·e^{Ax}·H` at `x > 0`.
    pub fn densities(&self, x: f64) -> RowDVector<f64> {
        &self.g * expm(&(&self.a * x)) * &self.h
    }

    pub fn density(&self, state: usize, x: f64) -> f64 {
        (&self.g * expm(&(&self.a * x)) * self.h.column(state))[0]
    }

    /// `∫₀^∞ f_i(x) dx` for every state (excluding the point masses).
    pub fn state_integrals(&self) -> RowDVector<f64> {
        // g·A⁻¹ = (A⁻ᵀ·gᵀ)ᵀ
        let gai = self
            .a
            .transpose()
            .lu()
            .solve(&self.g.transpose())
            .expect("A is nonsingular")
            .transpose();
        -(gai * &self.h)
    }

    /// Marginal probability of each modulating state.
    pub fn state_probabilities(&self) -> RowDVector<f64> {
        self.state_integrals() + self.c.transpose()
    }

    pub fn total_probability(&self) -> f64 {
        self.state_probabilities().sum()
    }

    /// `P(level ≤ x)`.
    pub fn level_cdf(&self, x: f64) -> f64 {
        let n = self.order();
        let one = ones(n);
        let b = self.g.len();
        // ∫₀ˣ e^{As} ds = A⁻¹(e^{Ax} − I)
        let e = expm(&(&self.a * x)) - DMatrix::<f64>::identity(b, b);
        let integral = self.a.clone().lu().solve(&e).expect("A is nonsingular");
        self.c.sum() + (&self.g * integral * &self.h * one)[0]
    }

    /// Unnormalized form `g·e^{Ax}·(H·w)` with atom `c·w`.
    pub fn weighted_form(&self, weights: &DVector<f64>) -> MatrixExpForm {
        MatrixExpForm {
            g: self.g.clone(),
            a: self.a.clone(),
            h: &self.h * weights,
            mass0: self.c.dot(weights),
        }
    }
}

/// Density `g·e^{Ax}·h` for `x > 0` plus an atom `mass0` at zero.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixExpForm {
    pub g: RowDVector<f64>,
    pub a: DMatrix<f64>,
    pub h: DVector<f64>,
    pub mass0: f64,
}

impl MatrixExpForm {
    /// `-g·A⁻¹·h + mass0`.
    pub fn total_mass(&self) -> f64 {
        let v = self.a.clone().lu().solve(&self.h).expect("A is nonsingular");
        -(&self.g * v)[0] + self.mass0
    }

    /// Scales the form to unit total mass.
    pub fn normalized(&self) -> Result<MatrixExpForm> {
        let total = self.total_mass();
        if !(total > 0.0 && total.is_finite()) {
            return Err(Error::Degenerate(format!(
                "form has total mass {total:e} and cannot be normalized"
            )));
        }
        Ok(MatrixExpForm {
            g: &self.g / total,
            a: self.a.clone(),
            h: self.h.clone(),
            mass0: self.mass0 / total,
        })
    }

    pub fn pdf(&self, x: f64) -> f64 {
        (&self.g * expm(&(&self.a * x)) * &self.h)[0]
    }

    pub fn cdf(&self, x: f64) -> f64 {
        let n = self.a.nrows();
        let e = expm(&(&self.a * x)) - DMatrix::<f64>::identity(n, n);
        let w = self.a.clone().lu().solve(&(e * &self.h)).expect("A is nonsingular");
        self.mass0 + (&self.g * w)[0]
    }

    pub fn moment(&self, i: u32) -> f64 {
        form_moment(self, i)
    }

    /// Equivalent `(alpha, S)` representation of the same order.
    pub fn to_me(&self) -> Result<MeDistribution> {
        me_from_form(&self.g, &self.a, &self.h, self.mass0)
    }
}

/// `E[Xⁱ] = (-1)^{i+1}·i!·g·A^{-(i+1)}·h`; the atom at zero contributes nothing.
pub fn form_moment(f: &MatrixExpForm, i: u32) -> f64 {
    assert!(i >= 1, "moments start at 1");
    let lu = f.a.clone().lu();
    let mut w = f.h.clone();
    for _ in 0..=i {
        w = lu.solve(&w).expect("A is nonsingular");
    }
    let factorial: f64 = (1..=i).map(|k| k as f64).product();
    let sign = if i.is_multiple_of(2) { -1.0 } else { 1.0 };
    sign * factorial * (&f.g * w)[0]
}

/// Symmetric orthogonal reflector `I − 2uuᵀ/(uᵀu)` with
/// `u = (1,…,1,−1)ᵀ − √n·e₁`.
///
/// Its first column is `(1,…,1,−1)ᵀ/√n`, which `Q·R⁻¹` annihilates whenever
/// the rows of `Q` sum to zero and `R = diag(1,…,1,−1)`.
pub fn householder_reducer(n: usize) -> Result<DMatrix<f64>> {
    if n < 2 {
        return Err(Error::Domain {
            what: "n",
            value: n as f64,
            domain: "n >= 2",
        });
    }
    let mut u = ones(n);
    u[n - 1] = -1.0;
    u[0] -= (n as f64).sqrt();
    let scale = 2.0 / u.dot(&u);
    Ok(DMatrix::<f64>::identity(n, n) - (&u * u.transpose()) * scale)
}

pub fn solve(spec: &GmfqSpec) -> Result<SteadyState> {
    solve_with(spec, Reducer::Auto, &NumericPolicy::DEFAULT)
}

pub fn solve_with(spec: &GmfqSpec, reducer: Reducer, policy: &NumericPolicy) -> Result<SteadyState> {
    let n = spec.order();
    let b = spec.positive_count();
    let a_count = n - b;

    // positive drifts first, relative order preserved
    let perm: Vec<usize> = (0..n)
        .filter(|&i| spec.drifts[i] > 0.0)
        .chain((0..n).filter(|&i| spec.drifts[i] < 0.0))
        .collect();
    let q = DMatrix::from_fn(n, n, |i, j| spec.q[(perm[i], perm[j])]);
    let q_tilde = DMatrix::from_fn(n, n, |i, j| spec.q_tilde[(perm[i], perm[j])]);
    let r = DVector::from_fn(n, |i, _| spec.drifts[perm[i]]);

    let m = DMatrix::from_fn(n, n, |i, j| q[(i, j)] / r[j]);
    let scale = norm1(&m).max(f64::MIN_POSITIVE);
    let eps0 = policy.zero_eigenvalue * scale;

    let reducer = match reducer {
        Reducer::Auto if spec.householder_applicable() => Reducer::Householder,
        Reducer::Auto => Reducer::OrderedSchur,
        Reducer::Householder if !spec.householder_applicable() => {
            return Err(Error::Precondition(
                "Householder reduction needs R = diag(1,…,1,−1) and a zero last row of Q".into(),
            ))
        }
        other => other,
    };

    let p = match reducer {
        Reducer::Householder => householder_reducer(n)?,
        _ => {
            let schur = ordered_real_schur(&m, |z| z.re > -eps0)?;
            if schur.selected != a_count {
                return Err(Error::Instability {
                    expected: a_count,
                    found: schur.selected,
                });
            }
            schur.q
        }
    };

    let orthogonality = max_abs(&(p.transpose() * &p - DMatrix::<f64>::identity(n, n)));
    if orthogonality > policy.orthogonality {
        return Err(Error::numerical(
            format!("reducer is not orthogonal: ‖PᵀP − I‖ = {orthogonality:.3e}"),
            f64::NAN,
        ));
    }
    let t = p.transpose() * &m * &p;
    let block_residual = max_abs(&t.view((a_count, 0), (b, a_count)).clone_owned()) / scale;
    if block_residual > policy.block_structure {
        return Err(Error::numerical(
            format!("reduction is not block triangular: residual {block_residual:.3e}"),
            f64::NAN,
        ));
    }

    let a = t.view((a_count, a_count), (b, b)).clone_owned();
    let spectrum =
        eigenvalues(&a).ok_or_else(|| Error::numerical("eigenvalues of A did not converge", f64::NAN))?;
    let decay_rate = spectrum.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
    let unstable = spectrum.iter().filter(|z| z.re > -eps0).count();
    if unstable > 0 {
        return Err(Error::Instability {
            expected: a_count,
            found: a_count + unstable,
        });
    }
    let leading = t.view((0, 0), (a_count, a_count)).clone_owned();
    if let Some(lead) = eigenvalues(&leading) {
        let stable = lead.iter().filter(|z| z.re <= -eps0).count();
        if stable > 0 {
            return Err(Error::Instability {
                expected: a_count,
                found: a_count - stable,
            });
        }
    }

    let h = p.columns(a_count, b).transpose();

    // [g d]·[[H·R, −A⁻¹·H·1], [−Q̃*, 1]] = [0, 1], solved in transposed form
    let a_lu = a.clone().lu();
    let w = -a_lu
        .solve(&(&h * ones(n)))
        .ok_or_else(|| Error::numerical("A is singular", f64::INFINITY))?;
    let mut system = DMatrix::<f64>::zeros(n + 1, n);
    for j in 0..n {
        for k in 0..b {
            system[(j, k)] = h[(k, j)] * r[j];
        }
        for l in 0..a_count {
            system[(j, b + l)] = -q_tilde[(b + l, j)];
        }
    }
    for k in 0..b {
        system[(n, k)] = w[k];
    }
    for l in 0..a_count {
        system[(n, b + l)] = 1.0;
    }
    let mut rhs = DVector::<f64>::zeros(n + 1);
    rhs[n] = 1.0;

    let svd = system.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    let condition = smax / smin.max(f64::MIN_POSITIVE);
    if smin < policy.min_rcond * smax {
        return Err(Error::numerical(
            "boundary system is rank deficient beyond its redundant equation",
            condition,
        ));
    }
    let x = svd
        .solve(&rhs, 0.0)
        .map_err(|e| Error::numerical(e.to_string(), condition))?;
    let boundary_residual = (&system * &x - &rhs).amax();
    if boundary_residual > policy.boundary_residual {
        return Err(Error::numerical(
            format!("boundary system residual {boundary_residual:.3e}"),
            condition,
        ));
    }

    let g = x.rows(0, b).transpose();
    let mut c = DVector::<f64>::zeros(n);
    let mut h_out = DMatrix::<f64>::zeros(b, n);
    for (pos, &orig) in perm.iter().enumerate() {
        if pos >= b {
            c[orig] = x[pos];
        }
        h_out.set_column(orig, &h.column(pos));
    }

    let mut ss = SteadyState {
        g,
        a,
        h: h_out,
        c,
        diagnostics: SolveDiagnostics {
            reducer,
            orthogonality,
            block_residual,
            boundary_residual,
            condition,
            decay_rate,
            total_probability: f64::NAN,
        },
    };
    ss.diagnostics.total_probability = ss.total_probability();
    Ok(ss)
}

/// Density of the fluid level just before a transition from a state in
/// `from` into state `to`, normalized to a probability density.
pub fn conditional_entry_density(
    ss: &SteadyState,
    q: &DMatrix<f64>,
    from: &[usize],
    to: usize,
) -> Result<MatrixExpForm> {
    let n = ss.order();
    if q.nrows() != n || q.ncols() != n {
        return Err(Error::Dimension(format!(
            "generator is {}x{} but the steady state has {n} states",
            q.nrows(),
            q.ncols()
        )));
    }
    if to >= n || from.iter().any(|&i| i >= n) {
        return Err(Error::Dimension("state index out of range".into()));
    }
    if from.contains(&to) {
        return Err(Error::Precondition(format!(
            "target state {to} belongs to the source set"
        )));
    }
    if let Some(&i) = from.iter().find(|&&i| ss.c[i].abs() > 1e-12) {
        return Err(Error::Precondition(format!(
            "state {i} carries probability mass {:e} at level zero",
            ss.c[i]
        )));
    }
    let mut eta = DVector::<f64>::zeros(n);
    for &i in from {
        eta[i] = q[(i, to)];
    }
    if eta.iter().all(|v| *v == 0.0) {
        return Err(Error::Degenerate(format!(
            "no transition rate from the source set into state {to}"
        )));
    }
    let form = MatrixExpForm {
        g: ss.g.clone(),
        a: ss.a.clone(),
        h: &ss.h * eta,
        mass0: 0.0,
    };
    let total = form.total_mass();
    if !(total > 0.0) {
        return Err(Error::Degenerate(format!(
            "entry flow into state {to} is {total:e}"
        )));
    }
    form.normalized()
}
