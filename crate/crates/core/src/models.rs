//! Fluid-queue constructions for the bufferless PH/PH/1/1/P(p) queue and the
//! single-buffer M/PH/1/2/R(r) queue, and extraction of the AoI, PAoI and
//! wait-time distributions from their steady states.

use std::ops::Range;

use nalgebra::{DMatrix, DVector, RowDVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{kron, ones};
use crate::mfq::{
    conditional_entry_density, form_moment, solve_with, GmfqSpec, MatrixExpForm, Reducer,
    SolveDiagnostics, SteadyState,
};
use crate::phdist::{MatrixExpDistribution, MeDistribution, PhDistribution};
use crate::policy::NumericPolicy;

/// PH/PH/1/1 queue where an arrival finding the server busy preempts the
/// packet in service with probability `p` and is discarded otherwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BufferlessSpec {
    pub arrival: PhDistribution,
    pub service: PhDistribution,
    pub p: f64,
}

/// M/PH/1/2 queue where an arrival finding the waiting room occupied replaces
/// the waiting packet with probability `r` and is discarded otherwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingleBufferSpec {
    pub lambda: f64,
    pub service: PhDistribution,
    pub r: f64,
}

fn check_probability(what: &'static str, value: f64) -> Result<()> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::Domain {
            what,
            value,
            domain: "[0, 1]",
        })
    }
}

fn check_no_atom(name: &str, d: &PhDistribution, out: &mut Vec<String>) {
    if d.mass0() > NumericPolicy::DEFAULT.ph_mass {
        out.push(format!("{name} has mass {} at zero; it must be 0", d.mass0()));
    }
}

impl BufferlessSpec {
    pub fn new(arrival: PhDistribution, service: PhDistribution, p: f64) -> Result<Self> {
        let spec = Self {
            arrival,
            service,
            p,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        check_probability("p", self.p)?;
        let mut out = Vec::new();
        check_no_atom("arrival", &self.arrival, &mut out);
        check_no_atom("service", &self.service, &mut out);
        if out.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidSpec(out))
        }
    }

    /// `ρ = E[service] / E[interarrival]`.
    pub fn load(&self) -> f64 {
        self.service.mean() / self.arrival.mean()
    }
}

impl SingleBufferSpec {
    pub fn new(lambda: f64, service: PhDistribution, r: f64) -> Result<Self> {
        let spec = Self { lambda, service, r };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::Domain {
                what: "lambda",
                value: self.lambda,
                domain: "lambda > 0",
            });
        }
        check_probability("r", self.r)?;
        let mut out = Vec::new();
        check_no_atom("service", &self.service, &mut out);
        if out.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidSpec(out))
        }
    }

    pub fn load(&self) -> f64 {
        self.lambda * self.service.mean()
    }
}

/// Either queue model, tagged by `"model"` in JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum ModelSpec {
    Bufferless(BufferlessSpec),
    SingleBuffer(SingleBufferSpec),
}

impl ModelSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            ModelSpec::Bufferless(s) => s.validate(),
            ModelSpec::SingleBuffer(s) => s.validate(),
        }
    }

    pub fn load(&self) -> f64 {
        match self {
            ModelSpec::Bufferless(s) => s.load(),
            ModelSpec::SingleBuffer(s) => s.load(),
        }
    }

    pub fn analyze(&self) -> Result<AgeResult> {
        self.analyze_with(&AnalysisOptions::default())
    }

    pub fn analyze_with(&self, opts: &AnalysisOptions) -> Result<AgeResult> {
        match self {
            ModelSpec::Bufferless(s) => analyze_bufferless_with(s, opts),
            ModelSpec::SingleBuffer(s) => analyze_single_buffer_with(s, opts),
        }
    }
}

/// A named block of consecutive modulating states.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Phase {
    pub name: String,
    pub range: Range<usize>,
    /// `(arrival phases, service phases)` for product blocks, enumerated
    /// arrival-major.
    pub layout: Option<(usize, usize)>,
}

impl Phase {
    pub fn len(&self) -> usize {
        self.range.len()
    }

    pub fn is_empty(&self) -> bool {
        self.range.is_empty()
    }

    /// Global index of arrival phase `i`, service phase `j` in a product block.
    pub fn product_index(&self, i: usize, j: usize) -> usize {
        let (k, l) = self.layout.expect("not a product block");
        assert!(i < k && j < l, "phase ({i}, {j}) outside {k}x{l}");
        self.range.start + i * l + j
    }
}

/// Index layout of a fluid-queue state space.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StatePartition {
    pub phases: Vec<Phase>,
}

impl StatePartition {
    fn from_sizes(blocks: &[(&str, usize, Option<(usize, usize)>)]) -> Self {
        let mut start = 0;
        let phases = blocks
            .iter()
            .map(|(name, len, layout)| {
                let phase = Phase {
                    name: name.to_string(),
                    range: start..start + len,
                    layout: *layout,
                };
                start += len;
                phase
            })
            .collect();
        Self { phases }
    }

    pub fn order(&self) -> usize {
        self.phases.last().map_or(0, |p| p.range.end)
    }

    pub fn phase(&self, name: &str) -> &Phase {
        self.phases
            .iter()
            .find(|p| p.name == name)
            .unwrap_or_else(|| panic!("no phase named {name}"))
    }

    pub fn range(&self, name: &str) -> Range<usize> {
        self.phase(name).range.clone()
    }

    /// Indicator vector of the union of the named phases.
    pub fn indicator(&self, names: &[&str]) -> DVector<f64> {
        let mut w = DVector::zeros(self.order());
        for name in names {
            for i in self.range(name) {
                w[i] = 1.0;
            }
        }
        w
    }
}

/// Knobs of the analysis that do not change its results.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalysisOptions {
    /// Exit rate of the reset state at level zero.
    pub reset_rate: f64,
    pub reducer: Reducer,
    pub policy: NumericPolicy,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        Self {
            reset_rate: 1.0,
            reducer: Reducer::Auto,
            policy: NumericPolicy::DEFAULT,
        }
    }
}

/// AoI and PAoI distributions of a queue model, with their first two moments.
#[derive(Debug, Clone, Serialize)]
pub struct AgeResult {
    pub model: ModelSpec,
    pub load: f64,
    pub aoi: MeDistribution,
    pub paoi: MeDistribution,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wait: Option<MeDistribution>,
    pub mean_aoi: f64,
    pub second_moment_aoi: f64,
    pub mean_paoi: f64,
    pub second_moment_paoi: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_wait: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub second_moment_wait: Option<f64>,
    pub diagnostics: SolveDiagnostics,
    /// Diagnostics of the residual-service solve behind the wait law.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wait_diagnostics: Option<SolveDiagnostics>,
    #[serde(skip)]
    pub aoi_form: MatrixExpForm,
    #[serde(skip)]
    pub paoi_form: MatrixExpForm,
}

fn place(m: &mut DMatrix<f64>, rows: Range<usize>, cols: Range<usize>, block: &DMatrix<f64>) {
    assert_eq!((rows.len(), cols.len()), block.shape());
    m.view_mut((rows.start, cols.start), block.shape()).copy_from(block);
}

fn col_matrix(v: &DVector<f64>) -> DMatrix<f64> {
    DMatrix::from_column_slice(v.len(), 1, v.as_slice())
}

fn row_matrix(v: &RowDVector<f64>) -> DMatrix<f64> {
    DMatrix::from_row_slice(1, v.len(), v.as_slice())
}

fn reset_drifts(n: usize) -> DVector<f64> {
    let mut r = ones(n);
    r[n - 1] = -1.0;
    r
}

pub fn build_bufferless(spec: &BufferlessSpec) -> Result<(GmfqSpec, StatePartition)> {
    build_bufferless_with_reset_rate(spec, 1.0)
}

/// [`build_bufferless`] with a configurable exit rate from the reset state.
pub fn build_bufferless_with_reset_rate(
    spec: &BufferlessSpec,
    reset_rate: f64,
) -> Result<(GmfqSpec, StatePartition)> {
    spec.validate()?;
    let k = spec.arrival.order();
    let l = spec.service.order();
    let p = spec.p;
    let partition = StatePartition::from_sizes(&[
        ("S1", k * l, Some((k, l))),
        ("S2", k, None),
        ("S3", k * l, Some((k, l))),
        ("S4", 1, None),
    ]);
    let n = partition.order();
    let (s1, s2, s3, s4) = (
        partition.range("S1"),
        partition.range("S2"),
        partition.range("S3"),
        partition.range("S4"),
    );

    let t = spec.arrival.subgenerator();
    let s = spec.service.subgenerator();
    let tau = row_matrix(spec.arrival.alpha());
    let sigma = row_matrix(spec.service.alpha());
    let kappa = col_matrix(&spec.arrival.exit_vector());
    let nu = col_matrix(&spec.service.exit_vector());
    let ik = DMatrix::<f64>::identity(k, k);
    let il = DMatrix::<f64>::identity(l, l);
    let one_k = col_matrix(&ones(k));
    let one_l = col_matrix(&ones(l));
    let tau_sigma = kron(&tau, &sigma);

    let q11 = kron(&ik, s) + kron(t, &il) + kron(&(&kappa * &tau), &il) * (1.0 - p);
    let q33 = &q11 + (kron(&kappa, &one_l) * &tau_sigma) * p;

    let mut q = DMatrix::<f64>::zeros(n, n);
    place(&mut q, s1.clone(), s1.clone(), &q11);
    place(&mut q, s1.clone(), s2.clone(), &kron(&ik, &nu));
    place(&mut q, s1.clone(), s4.clone(), &(kron(&kappa, &one_l) * p));
    place(&mut q, s2.clone(), s2.clone(), t);
    place(&mut q, s2, s3.clone(), &(&kappa * &tau_sigma));
    place(&mut q, s3.clone(), s3.clone(), &q33);
    place(&mut q, s3, s4.clone(), &kron(&one_k, &nu));

    let mut q_tilde = DMatrix::<f64>::zeros(n, n);
    place(&mut q_tilde, s4.clone(), s1, &(&tau_sigma * reset_rate));
    q_tilde[(s4.start, s4.start)] = -reset_rate;

    let gmfq = GmfqSpec::new(q, q_tilde, reset_drifts(n))?;
    Ok((gmfq, partition))
}

pub fn analyze_bufferless(spec: &BufferlessSpec) -> Result<AgeResult> {
    analyze_bufferless_with(spec, &AnalysisOptions::default())
}

pub fn analyze_bufferless_with(spec: &BufferlessSpec, opts: &AnalysisOptions) -> Result<AgeResult> {
    let run = || -> Result<AgeResult> {
        let (gmfq, partition) = build_bufferless_with_reset_rate(spec, opts.reset_rate)?;
        let ss = solve_with(&gmfq, opts.reducer, &opts.policy)?;
        let (aoi_form, paoi_form) = age_forms(&ss, &gmfq, &partition, &["S2", "S3"], "S3", "S4")?;
        assemble(ModelSpec::Bufferless(spec.clone()), spec.load(), ss, aoi_form, paoi_form, None)
    };
    run().map_err(|e| e.context(format!("bufferless model (p = {})", spec.p)))
}

fn age_forms(
    ss: &SteadyState,
    gmfq: &GmfqSpec,
    partition: &StatePartition,
    aoi_phases: &[&str],
    peak_from: &str,
    reset: &str,
) -> Result<(MatrixExpForm, MatrixExpForm)> {
    let aoi = ss.weighted_form(&partition.indicator(aoi_phases)).normalized()?;
    let from: Vec<usize> = partition.range(peak_from).collect();
    let paoi = conditional_entry_density(ss, gmfq.q(), &from, partition.range(reset).start)?;
    Ok((aoi, paoi))
}

fn assemble(
    model: ModelSpec,
    load: f64,
    ss: SteadyState,
    aoi_form: MatrixExpForm,
    paoi_form: MatrixExpForm,
    wait: Option<(MeDistribution, f64, f64, SolveDiagnostics)>,
) -> Result<AgeResult> {
    let aoi = aoi_form.to_me()?;
    let paoi = paoi_form.to_me()?;
    let (wait, mean_wait, second_moment_wait, wait_diagnostics) = match wait {
        Some((d, m1, m2, diag)) => (Some(d), Some(m1), Some(m2), Some(diag)),
        None => (None, None, None, None),
    };
    Ok(AgeResult {
        model,
        load,
        mean_aoi: form_moment(&aoi_form, 1),
        second_moment_aoi: form_moment(&aoi_form, 2),
        mean_paoi: form_moment(&paoi_form, 1),
        second_moment_paoi: form_moment(&paoi_form, 2),
        aoi,
        paoi,
        wait,
        mean_wait,
        second_moment_wait,
        diagnostics: ss.diagnostics,
        wait_diagnostics,
        aoi_form,
        paoi_form,
    })
}

/// Fluid queue tracking the residual service time seen by arrivals to an
/// M/PH/1/2 queue.
///
/// States: service phases (rising), then `"0"` (server busy, no packet
/// waiting) and `"1"` (a packet waiting), both draining.
pub fn build_residual_process(
    lambda: f64,
    service: &PhDistribution,
) -> Result<(GmfqSpec, StatePartition)> {
    build_residual_process_with_reset_rate(lambda, service, 1.0)
}

pub fn build_residual_process_with_reset_rate(
    lambda: f64,
    service: &PhDistribution,
    reset_rate: f64,
) -> Result<(GmfqSpec, StatePartition)> {
    SingleBufferSpec::new(lambda, service.clone(), 0.0)?;
    let l = service.order();
    let partition =
        StatePartition::from_sizes(&[("S1", l, None), ("0", 1, None), ("1", 1, None)]);
    let n = l + 2;
    let (empty, waiting) = (l, l + 1);

    let mut q = DMatrix::<f64>::zeros(n, n);
    place(&mut q, 0..l, 0..l, service.subgenerator());
    place(&mut q, 0..l, empty..empty + 1, &col_matrix(&service.exit_vector()));
    q[(empty, empty)] = -lambda;
    q[(empty, waiting)] = lambda;

    let sigma = row_matrix(service.alpha());
    let mut q_tilde = DMatrix::<f64>::zeros(n, n);
    place(&mut q_tilde, empty..empty + 1, 0..l, &(&sigma * lambda));
    q_tilde[(empty, empty)] = -lambda;
    place(&mut q_tilde, waiting..waiting + 1, 0..l, &(&sigma * reset_rate));
    q_tilde[(waiting, waiting)] = -reset_rate;

    let mut r = ones(n);
    r[empty] = -1.0;
    r[waiting] = -1.0;
    let gmfq = GmfqSpec::new(q, q_tilde, r)?;
    Ok((gmfq, partition))
}

/// Density of the queue wait of successful packets, as an unsolved form.
pub fn wait_time_form(lambda: f64, service: &PhDistribution, r: f64) -> Result<MatrixExpForm> {
    Ok(wait_time_form_with(lambda, service, r, &AnalysisOptions::default())?.0)
}

fn wait_time_form_with(
    lambda: f64,
    service: &PhDistribution,
    r: f64,
    opts: &AnalysisOptions,
) -> Result<(MatrixExpForm, SolveDiagnostics)> {
    check_probability("r", r)?;
    let (gmfq, partition) = build_residual_process_with_reset_rate(lambda, service, opts.reset_rate)?;
    let ss = solve_with(&gmfq, opts.reducer, &opts.policy)?;
    let empty = partition.range("0").start;
    let waiting = partition.range("1").start;
    let b = ss.g.len();
    let a = &ss.a - DMatrix::<f64>::identity(b, b) * (r * lambda);
    let h = ss.h.column(empty) + ss.h.column(waiting) * r;
    let c0 = ss.c[empty];
    let unscaled = MatrixExpForm {
        g: ss.g.clone(),
        a,
        h,
        mass0: c0,
    };
    let total = unscaled.total_mass();
    if !(total > 0.0 && total.is_finite()) {
        return Err(Error::Degenerate(format!(
            "success probability evaluates to {total:e}"
        )));
    }
    Ok((unscaled.normalized()?, ss.diagnostics))
}

pub fn wait_time_distribution(lambda: f64, service: &PhDistribution, r: f64) -> Result<MeDistribution> {
    wait_time_form(lambda, service, r)?.to_me()
}

pub fn build_single_buffer(
    spec: &SingleBufferSpec,
    wait: &MeDistribution,
) -> Result<(GmfqSpec, StatePartition)> {
    build_single_buffer_with_reset_rate(spec, wait, 1.0)
}

pub fn build_single_buffer_with_reset_rate(
    spec: &SingleBufferSpec,
    wait: &MeDistribution,
    reset_rate: f64,
) -> Result<(GmfqSpec, StatePartition)> {
    spec.validate()?;
    let l = spec.service.order();
    if wait.order() != l {
        return Err(Error::Dimension(format!(
            "wait distribution has order {} but the service has order {l}",
            wait.order()
        )));
    }
    let partition = StatePartition::from_sizes(&[
        ("S1", l, None),
        ("S2", l, None),
        ("S3", l, None),
        ("S4", 1, None),
        ("S5", l, None),
        ("S6", 1, None),
    ]);
    let n = partition.order();
    let lambda = spec.lambda;
    let s = spec.service.subgenerator();
    let sigma = row_matrix(spec.service.alpha());
    let nu = col_matrix(&spec.service.exit_vector());
    let il = DMatrix::<f64>::identity(l, l);
    let psi = col_matrix(&wait.exit_vector());
    let (s1, s2, s3, s4, s5, s6) = (
        partition.range("S1"),
        partition.range("S2"),
        partition.range("S3"),
        partition.range("S4"),
        partition.range("S5"),
        partition.range("S6"),
    );

    let mut q = DMatrix::<f64>::zeros(n, n);
    place(&mut q, s1.clone(), s1.clone(), wait.subgenerator());
    place(&mut q, s1.clone(), s2.clone(), &(&psi * &sigma));
    place(&mut q, s2.clone(), s2.clone(), &(s - &il * lambda));
    place(&mut q, s2.clone(), s3.clone(), &(&il * lambda));
    place(&mut q, s2.clone(), s4.clone(), &nu);
    place(&mut q, s3.clone(), s3.clone(), s);
    place(&mut q, s3, s5.clone(), &(&nu * &sigma));
    q[(s4.start, s4.start)] = -lambda;
    place(&mut q, s4, s5.clone(), &(&sigma * lambda));
    place(&mut q, s5.clone(), s5.clone(), s);
    place(&mut q, s5, s6.clone(), &nu);

    let mut q_tilde = DMatrix::<f64>::zeros(n, n);
    let last = s6.start;
    place(&mut q_tilde, last..last + 1, s1, &(row_matrix(wait.alpha()) * reset_rate));
    place(&mut q_tilde, last..last + 1, s2, &(&sigma * (wait.mass0() * reset_rate)));
    q_tilde[(last, last)] = -reset_rate;

    // the wait law is matrix-exponential, so B and ψ may carry negative entries
    let gmfq = GmfqSpec::with_signed_entries(q, q_tilde, reset_drifts(n))?;
    Ok((gmfq, partition))
}

pub fn analyze_single_buffer(spec: &SingleBufferSpec) -> Result<AgeResult> {
    analyze_single_buffer_with(spec, &AnalysisOptions::default())
}

pub fn analyze_single_buffer_with(
    spec: &SingleBufferSpec,
    opts: &AnalysisOptions,
) -> Result<AgeResult> {
    let run = || -> Result<AgeResult> {
        spec.validate()?;
        let (wait_form, wait_diag) = wait_time_form_with(spec.lambda, &spec.service, spec.r, opts)
            .map_err(|e| e.context("wait time"))?;
        let wait = wait_form.to_me()?;
        let (gmfq, partition) = build_single_buffer_with_reset_rate(spec, &wait, opts.reset_rate)?;
        let ss = solve_with(&gmfq, opts.reducer, &opts.policy)?;
        let (aoi_form, paoi_form) = age_forms(&ss, &gmfq, &partition, &["S4", "S5"], "S5", "S6")?;
        let wait_moments = (
            wait,
            form_moment(&wait_form, 1),
            form_moment(&wait_form, 2),
            wait_diag,
        );
        assemble(
            ModelSpec::SingleBuffer(spec.clone()),
            spec.load(),
            ss,
            aoi_form,
            paoi_form,
            Some(wait_moments),
        )
    };
    run().map_err(|e| e.context(format!("single-buffer model (r = {})", spec.r)))
}

/// `G(x) = P(X > x)`, the probability that the age exceeds `x`.
pub fn age_violation(d: &impl MatrixExpDistribution, x: f64) -> Result<f64> {
    d.tail(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_abs;

    fn poisson(rate: f64) -> PhDistribution {
        PhDistribution::exponential(rate).unwrap()
    }

    fn row_sums_zero(m: &DMatrix<f64>) -> bool {
        m.row_iter().all(|r| r.sum().abs() < 1e-12)
    }

    #[test]
    fn bufferless_structure() {
        let spec = BufferlessSpec::new(poisson(1.0), PhDistribution::erlang_mean(1.0, 2).unwrap(), 0.3)
            .unwrap();
        let (g, part) = build_bufferless(&spec).unwrap();
        assert_eq!(g.order(), 6);
        assert_eq!(part.order(), 6);
        assert!(row_sums_zero(g.q()) && row_sums_zero(g.q_tilde()));
        assert!(g.q().row(5).iter().all(|v| *v == 0.0));
        assert!(g.householder_applicable());
    }

    #[test]
    fn bufferless_without_preemption_has_no_reset_jumps() {
        let arrival = PhDistribution::erlang_mean(1.0, 2).unwrap();
        let spec = BufferlessSpec::new(arrival, PhDistribution::erlang_mean(1.0, 2).unwrap(), 0.0).unwrap();
        let (g, part) = build_bufferless(&spec).unwrap();
        assert_eq!(g.order(), 11);
        let s1 = part.range("S1");
        let s3 = part.range("S3");
        let reset = part.range("S4").start;
        assert!(s1.clone().all(|i| g.q()[(i, reset)] == 0.0));
        let q11 = g.q().view((s1.start, s1.start), (s1.len(), s1.len())).clone_owned();
        let q33 = g.q().view((s3.start, s3.start), (s3.len(), s3.len())).clone_owned();
        assert_eq!(max_abs(&(q11 - q33)), 0.0);
    }

    #[test]
    fn product_index_is_arrival_major() {
        let spec = BufferlessSpec::new(
            PhDistribution::erlang_mean(1.0, 2).unwrap(),
            PhDistribution::erlang_mean(1.0, 3).unwrap(),
            0.5,
        )
        .unwrap();
        let (_, part) = build_bufferless(&spec).unwrap();
        let s3 = part.phase("S3");
        assert_eq!(s3.product_index(0, 0), s3.range.start);
        assert_eq!(s3.product_index(1, 0), s3.range.start + 3);
        assert_eq!(s3.product_index(1, 2), s3.range.end - 1);
    }

    #[test]
    fn residual_process_structure() {
        let (g, part) = build_residual_process(0.5, &PhDistribution::erlang_mean(1.0, 2).unwrap()).unwrap();
        assert_eq!(g.order(), 4);
        assert_eq!((g.positive_count(), g.negative_count()), (2, 2));
        assert!(!g.householder_applicable());
        assert!(row_sums_zero(g.q()) && row_sums_zero(g.q_tilde()));
        assert_eq!(part.range("1"), 3..4);
    }

    #[test]
    fn single_buffer_structure() {
        let spec = SingleBufferSpec::new(0.5, PhDistribution::erlang_mean(1.0, 2).unwrap(), 1.0).unwrap();
        let wait = wait_time_distribution(0.5, &spec.service, 1.0).unwrap();
        let (g, _) = build_single_buffer(&spec, &wait).unwrap();
        assert_eq!(g.order(), 10);
        assert!(g.q().row_iter().all(|r| r.sum().abs() < 1e-9));
        assert!(g.q_tilde().row(9).sum().abs() < 1e-9);
        assert!(g.householder_applicable());

        let wrong = wait_time_distribution(0.5, &PhDistribution::erlang_mean(1.0, 3).unwrap(), 1.0).unwrap();
        assert!(matches!(build_single_buffer(&spec, &wrong), Err(Error::Dimension(_))));
    }

    #[test]
    fn table_row_smoke() {
        let spec = BufferlessSpec::new(poisson(0.5), PhDistribution::erlang_mean(1.0, 2).unwrap(), 1.0)
            .unwrap();
        let res = analyze_bufferless(&spec).unwrap();
        assert!((res.mean_aoi - 3.125).abs() < 5e-5, "{}", res.mean_aoi);
    }

    #[test]
    fn invalid_specs_are_rejected() {
        let e = poisson(1.0);
        assert!(matches!(
            BufferlessSpec::new(e.clone(), e.clone(), 1.5),
            Err(Error::Domain { what: "p", .. })
        ));
        assert!(SingleBufferSpec::new(0.0, e.clone(), 0.5).is_err());
        assert!(SingleBufferSpec::new(1.0, e.clone(), -0.1).is_err());
        let atom = PhDistribution::new(RowDVector::from_element(1, 0.5), DMatrix::from_element(1, 1, -1.0), 0.5)
            .unwrap();
        assert!(matches!(
            BufferlessSpec::new(e, atom, 0.5),
            Err(Error::InvalidSpec(_))
        ));
    }

    #[test]
    fn age_violation_starts_at_one() {
        let spec = BufferlessSpec::new(poisson(1.0), poisson(1.0), 1.0).unwrap();
        let res = analyze_bufferless(&spec).unwrap();
        assert!((age_violation(&res.aoi, 0.0).unwrap() - 1.0).abs() < 1e-12);
        assert!(age_violation(&res.aoi, -1.0).is_err());
    }

    #[test]
    fn model_spec_json_tag() {
        let spec = ModelSpec::SingleBuffer(SingleBufferSpec::new(0.5, poisson(1.0), 1.0).unwrap());
        let text = serde_json::to_string(&spec).unwrap();
        assert!(text.contains("\"model\":\"single_buffer\""));
        let back: ModelSpec = serde_json::from_str(&text).unwrap();
        assert_eq!(back, spec);
    }
}
