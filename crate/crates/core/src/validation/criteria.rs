use std::time::Instant;

use nalgebra::{dmatrix, dvector, DMatrix, DVector};

use super::discretize::discretized_level;
use super::{timed, title, CheckOutcome, CriterionReport, ValidationOptions};
use crate::error::Result;
use crate::mfq::{solve, solve_with, GmfqSpec, Reducer, SolveDiagnostics};
use crate::models::{
    build_bufferless, build_residual_process, AgeResult, AnalysisOptions, BufferlessSpec, ModelSpec,
    SingleBufferSpec,
};
use crate::phdist::{fit_mean_scov, MatrixExpDistribution, PhDistribution};
use crate::policy::NumericPolicy;
use crate::simulator::{empirical_aoi_cdf, empirical_paoi_cdf, simulate, SimConfig};

const TABLE_TOLERANCE: f64 = 5e-5;
const SIM_TOLERANCE: f64 = 0.005;
const SCENARIO_SECONDS: f64 = 60.0;
const GRID_POINTS: usize = 50;

pub fn run_criterion(id: u32, opts: &ValidationOptions) -> CriterionReport {
    let start = Instant::now();
    let outcome = match id {
        1 => table_moments(opts),
        2 => poisson_simulation(opts),
        3 => ph_arrival_simulation(opts),
        4 => insensitivity(opts),
        5 => optimum(opts),
        6 => structure(opts),
        7 => oracles(opts),
        8 => violation_curve(opts),
        9 => sweep_spot_checks(),
        _ => Ok(Vec::new()),
    };
    let (checks, error) = match outcome {
        Ok(c) => (c, None),
        Err(e) => (Vec::new(), Some(e.to_string())),
    };
    CriterionReport {
        id,
        title: title(id).unwrap_or("unknown criterion").to_string(),
        checks,
        error,
        seconds: start.elapsed().as_secs_f64(),
    }
}

fn poisson(rate: f64) -> PhDistribution {
    PhDistribution::exponential(rate).expect("positive rate")
}

fn erlang(mean: f64, order: usize) -> PhDistribution {
    PhDistribution::erlang_mean(mean, order).expect("positive mean")
}

fn bufferless(arrival: PhDistribution, service: PhDistribution, p: f64) -> Result<ModelSpec> {
    Ok(ModelSpec::Bufferless(BufferlessSpec::new(arrival, service, p)?))
}

fn single_buffer(lambda: f64, service: PhDistribution, r: f64) -> Result<ModelSpec> {
    Ok(ModelSpec::SingleBuffer(SingleBufferSpec::new(lambda, service, r)?))
}

fn model_name(model: &ModelSpec) -> String {
    match model {
        ModelSpec::Bufferless(s) => format!("bufferless p={}", s.p),
        ModelSpec::SingleBuffer(s) => format!("single-buffer r={}", s.r),
    }
}

struct TableRow {
    label: &'static str,
    model: fn() -> Result<ModelSpec>,
    mean: f64,
    second: Option<f64>,
}

fn table_rows() -> Vec<TableRow> {
    vec![
        TableRow {
            label: "M/PH/1/1* lambda=0.5 E(1,2)",
            model: || bufferless(poisson(0.5), erlang(1.0, 2), 1.0),
            mean: 3.1250,
            second: Some(14.5312),
        },
        TableRow {
            label: "M/PH/1/1* lambda=0.5 E(1,4)",
            model: || bufferless(poisson(0.5), erlang(1.0, 4), 1.0),
            mean: 3.2036,
            second: Some(14.8310),
        },
        TableRow {
            label: "M/PH/1/1* lambda=1.5 E(1,2)",
            model: || bufferless(poisson(1.5), erlang(1.0, 2), 1.0),
            mean: 2.0417,
            second: Some(6.0035),
        },
        TableRow {
            label: "M/PH/1/1* lambda=1.5 E(1,4)",
            model: || bufferless(poisson(1.5), erlang(1.0, 4), 1.0),
            mean: 2.3830,
            second: Some(7.8910),
        },
        TableRow {
            label: "PH/M/1/1* mu=0.5 E(1,2)",
            model: || bufferless(erlang(1.0, 2), poisson(0.5), 1.0),
            mean: 2.7500,
            second: Some(12.0000),
        },
        TableRow {
            label: "PH/M/1/1* mu=1.5 E(1,2)",
            model: || bufferless(erlang(1.0, 2), poisson(1.5), 1.0),
            mean: 1.4167,
            second: Some(2.8889),
        },
        TableRow {
            label: "PH/M/1/1* mu=0.5 E(1,4)",
            model: || bufferless(erlang(1.0, 4), poisson(0.5), 1.0),
            mean: 2.6250,
            second: Some(11.1250),
        },
        TableRow {
            label: "PH/M/1/1* mu=1.5 E(1,4)",
            model: || bufferless(erlang(1.0, 4), poisson(1.5), 1.0),
            mean: 1.2917,
            second: Some(2.3472),
        },
        TableRow {
            label: "M/PH/1/2* lambda=0.5 E(1,2)",
            model: || single_buffer(0.5, erlang(1.0, 2), 1.0),
            mean: 3.1089,
            second: None,
        },
        TableRow {
            label: "M/PH/1/2* lambda=0.5 E(1,4)",
            model: || single_buffer(0.5, erlang(1.0, 4), 1.0),
            mean: 3.0786,
            second: None,
        },
        TableRow {
            label: "M/PH/1/2* lambda=1.5 E(1,2)",
            model: || single_buffer(1.5, erlang(1.0, 2), 1.0),
            mean: 2.0996,
            second: None,
        },
        TableRow {
            label: "M/PH/1/2* lambda=1.5 E(1,4)",
            model: || single_buffer(1.5, erlang(1.0, 4), 1.0),
            mean: 2.0226,
            second: None,
        },
    ]
}

/// Tabulated values are rounded to four decimals.
fn rounds_to(label: String, expected: f64, actual: f64, scale: f64) -> CheckOutcome {
    CheckOutcome::within(label, expected, actual, TABLE_TOLERANCE * scale)
}

fn table_moments(opts: &ValidationOptions) -> Result<Vec<CheckOutcome>> {
    let mut out = Vec::new();
    for row in table_rows() {
        let model = (row.model)()?;
        let (result, elapsed) = timed(|| model.analyze());
        let result = result?;
        out.push(
            rounds_to(format!("{} E[age]", row.label), row.mean, result.mean_aoi, opts.tolerance_scale)
                .timed(elapsed),
        );
        if let Some(second) = row.second {
            out.push(
                rounds_to(
                    format!("{} E[age^2]", row.label),
                    second,
                    result.second_moment_aoi,
                    opts.tolerance_scale,
                )
                .timed(elapsed),
            );
        }
        out.push(CheckOutcome::at_most(format!("{} runtime (s)", row.label), elapsed.as_secs_f64(), 1.0));
    }
    Ok(out)
}

/// Smallest point of a doubling search where the cdf reaches `level`.
fn upper_quantile(d: &impl MatrixExpDistribution, level: f64) -> Result<f64> {
    let mut x = d.mean().max(1e-3);
    while d.cdf(x)? < level {
        x *= 1.25;
    }
    Ok(x)
}

fn sup_distance(analytic: &[f64], empirical: &[f64]) -> f64 {
    analytic
        .iter()
        .zip(empirical)
        .map(|(a, e)| (a - e).abs())
        .fold(0.0, f64::max)
}

/// Sup-norm distances `(AoI, PAoI)` between analytic and simulated cdfs on a
/// 50-point grid reaching the 0.999 PAoI quantile.
pub(crate) fn simulation_distances(
    model: &ModelSpec,
    analytic: &AgeResult,
    opts: &ValidationOptions,
    seed: u64,
) -> Result<(f64, f64)> {
    let sim = simulate(&SimConfig::from_model(model, opts.cycles, opts.warmup, seed)?)?;
    let xmax = upper_quantile(&analytic.paoi, 0.999)?;
    let xs: Vec<f64> = (1..=GRID_POINTS).map(|i| xmax * i as f64 / GRID_POINTS as f64).collect();
    let aoi: Vec<f64> = analytic.aoi.eval_grid(&xs)?.into_iter().map(|(_, c)| c).collect();
    let paoi: Vec<f64> = analytic.paoi.eval_grid(&xs)?.into_iter().map(|(_, c)| c).collect();
    let aoi_emp: Vec<f64> = xs.iter().map(|x| empirical_aoi_cdf(&sim, *x)).collect();
    let paoi_emp: Vec<f64> = xs.iter().map(|x| empirical_paoi_cdf(&sim, *x)).collect();
    Ok((sup_distance(&aoi, &aoi_emp), sup_distance(&paoi, &paoi_emp)))
}

fn compare_scenarios(
    scenarios: Vec<(String, ModelSpec)>,
    opts: &ValidationOptions,
) -> Result<Vec<CheckOutcome>> {
    let mut out = Vec::new();
    for (i, (label, model)) in scenarios.into_iter().enumerate() {
        let (distances, elapsed) = timed(|| -> Result<(f64, f64)> {
            let analytic = model.analyze()?;
            simulation_distances(&model, &analytic, opts, opts.seed.wrapping_add(i as u64))
        });
        let (aoi, paoi) = distances?;
        let tol = SIM_TOLERANCE * opts.tolerance_scale;
        out.push(CheckOutcome::bounded(format!("{label} AoI cdf sup distance"), aoi, tol).timed(elapsed));
        out.push(CheckOutcome::bounded(format!("{label} PAoI cdf sup distance"), paoi, tol).timed(elapsed));
        out.push(CheckOutcome::at_most(
            format!("{label} runtime (s)"),
            elapsed.as_secs_f64(),
            SCENARIO_SECONDS,
        ));
    }
    Ok(out)
}

fn poisson_scenarios() -> Result<Vec<(String, ModelSpec)>> {
    let lambda = 1.0;
    let mut out = Vec::new();
    for rho in [0.75, 1.25] {
        for scov in [0.25, 4.0] {
            let service = fit_mean_scov(rho / lambda, scov)?;
            let tag = format!("rho={rho} scov_service={scov}");
            for p in [0.0, 1.0] {
                let m = bufferless(poisson(lambda), service.clone(), p)?;
                out.push((format!("{} {tag}", model_name(&m)), m));
            }
            for r in [0.0, 1.0] {
                let m = single_buffer(lambda, service.clone(), r)?;
                out.push((format!("{} {tag}", model_name(&m)), m));
            }
        }
    }
    Ok(out)
}

fn ph_arrival_scenarios() -> Result<Vec<(String, ModelSpec)>> {
    let lambda = 1.0;
    let mut out = Vec::new();
    for rho in [0.75, 1.25] {
        let service = fit_mean_scov(rho / lambda, 0.2)?;
        for scov_arrival in [0.25, 4.0] {
            let arrival = fit_mean_scov(1.0 / lambda, scov_arrival)?;
            for p in [0.0, 1.0] {
                let m = bufferless(arrival.clone(), service.clone(), p)?;
                out.push((format!("{} rho={rho} scov_arrival={scov_arrival}", model_name(&m)), m));
            }
        }
    }
    Ok(out)
}

fn poisson_simulation(opts: &ValidationOptions) -> Result<Vec<CheckOutcome>> {
    compare_scenarios(poisson_scenarios()?, opts)
}

fn ph_arrival_simulation(opts: &ValidationOptions) -> Result<Vec<CheckOutcome>> {
    compare_scenarios(ph_arrival_scenarios()?, opts)
}

fn insensitivity(opts: &ValidationOptions) -> Result<Vec<CheckOutcome>> {
    let (lambda, mu) = (1.0, 1.0);
    let expected = 1.0 / lambda + 2.0 / mu;
    let mut out = Vec::new();
    for scov in [0.25, 0.5, 1.0, 2.0, 4.0] {
        let model = bufferless(poisson(lambda), fit_mean_scov(1.0 / mu, scov)?, 0.0)?;
        let (res, elapsed) = timed(|| model.analyze());
        out.push(
            CheckOutcome::within(
                format!("E[peak] scov_service={scov}"),
                expected,
                res?.mean_paoi,
                1e-8 * opts.tolerance_scale,
            )
            .timed(elapsed),
        );
    }
    Ok(out)
}

fn grid(from: f64, to: f64, points: usize) -> Vec<f64> {
    (0..points)
        .map(|i| from + (to - from) * i as f64 / (points - 1) as f64)
        .collect()
}

fn mean_aoi_sweep(models: Vec<ModelSpec>) -> Result<Vec<f64>> {
    models.iter().map(|m| Ok(m.analyze()?.mean_aoi)).collect()
}

fn bufferless_sweep(lambda: f64, service: &PhDistribution, ps: &[f64]) -> Result<Vec<f64>> {
    mean_aoi_sweep(
        ps.iter()
            .map(|p| bufferless(poisson(lambda), service.clone(), *p))
            .collect::<Result<_>>()?,
    )
}

/// `(argmin, interior minimum, smaller endpoint)` of a sweep.
fn interior_minimum(values: &[f64]) -> (usize, f64, f64) {
    let n = values.len();
    let endpoints = values[0].min(values[n - 1]);
    let (arg, min) = values[1..n - 1]
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, v)| if *v < acc.1 { (i + 1, *v) } else { acc });
    (arg, min, endpoints)
}

const MONOTONE_SWEEP_NOTE: &str = "at rho=2, scov=0.25 the mean AoI increases monotonically in p; \
the simulation checks below confirm the analytic curve, and the interior optimum is asserted \
at rho=2, scov=0.5 instead";

fn optimum(opts: &ValidationOptions) -> Result<Vec<CheckOutcome>> {
    let lambda = 1.0;
    let ps = grid(0.0, 1.0, 21);
    let mut out = Vec::new();

    let stated = fit_mean_scov(2.0 / lambda, 0.25)?;
    let (means, elapsed) = timed(|| bufferless_sweep(lambda, &stated, &ps));
    let (arg, interior, endpoints) = interior_minimum(&means?);
    out.push(
        CheckOutcome::below(
            format!("rho=2 scov=0.25 interior min E[age] (p={}) below both endpoints", ps[arg]),
            interior,
            endpoints,
        )
        .timed(elapsed)
        .with_deviation(MONOTONE_SWEEP_NOTE),
    );
    for (i, p) in [0.0, 0.3, 0.7].into_iter().enumerate() {
        let model = bufferless(poisson(lambda), stated.clone(), p)?;
        let (res, elapsed) = timed(|| -> Result<_> {
            let analytic = model.analyze()?;
            let cfg = SimConfig::from_model(&model, opts.cycles, opts.warmup, opts.seed.wrapping_add(100 + i as u64))?;
            Ok((analytic, simulate(&cfg)?))
        });
        let (analytic, sim) = res?;
        out.push(
            CheckOutcome::within(
                format!("rho=2 scov=0.25 p={p} E[age] analytic vs simulation (4 SE)"),
                sim.mean_aoi.value,
                analytic.mean_aoi,
                4.0 * sim.mean_aoi.std_error * opts.tolerance_scale,
            )
            .timed(elapsed),
        );
    }

    let alternative = fit_mean_scov(2.0 / lambda, 0.5)?;
    let (means, elapsed) = timed(|| bufferless_sweep(lambda, &alternative, &ps));
    let (arg, interior, endpoints) = interior_minimum(&means?);
    out.push(
        CheckOutcome::below(
            format!("rho=2 scov=0.5 interior min E[age] (p={}) below both endpoints", ps[arg]),
            interior,
            endpoints,
        )
        .timed(elapsed),
    );

    for (label, lambda, svc, rs) in [
        ("rho=2 scov=0.25", lambda, stated.clone(), grid(0.0, 1.0, 21)),
        ("lambda=0.5 E(1,2)", 0.5, erlang(1.0, 2), vec![0.0, 0.5, 1.0]),
    ] {
        let (means, elapsed) = timed(|| {
            mean_aoi_sweep(
                rs.iter()
                    .map(|r| single_buffer(lambda, svc.clone(), *r))
                    .collect::<Result<_>>()?,
            )
        });
        let means = means?;
        let last = *means.last().unwrap();
        let others = means[..means.len() - 1].iter().copied().fold(f64::INFINITY, f64::min);
        out.push(
            CheckOutcome::at_most(format!("{label} E[age] at r=1 minimal over r sweep"), last, others)
                .timed(elapsed),
        );
    }
    Ok(out)
}

/// Models solved in criteria 1-5.
fn solved_models() -> Result<Vec<(String, ModelSpec)>> {
    let mut out: Vec<(String, ModelSpec)> = Vec::new();
    for row in table_rows() {
        out.push((row.label.to_string(), (row.model)()?));
    }
    out.extend(poisson_scenarios()?);
    out.extend(ph_arrival_scenarios()?);
    for scov in [0.25, 0.5, 1.0, 2.0, 4.0] {
        let m = bufferless(poisson(1.0), fit_mean_scov(1.0, scov)?, 0.0)?;
        out.push((format!("insensitivity scov={scov}"), m));
    }
    let service = fit_mean_scov(2.0, 0.25)?;
    for x in grid(0.0, 1.0, 21) {
        out.push((format!("sweep p={x}"), bufferless(poisson(1.0), service.clone(), x)?));
        out.push((format!("sweep r={x}"), single_buffer(1.0, service.clone(), x)?));
    }
    for r in [0.0, 0.5, 1.0] {
        out.push((format!("sweep lambda=0.5 r={r}"), single_buffer(0.5, erlang(1.0, 2), r)?));
    }
    Ok(out)
}

fn diagnostics_checks(label: &str, d: &SolveDiagnostics, scale: f64, out: &mut Vec<CheckOutcome>) {
    let policy = NumericPolicy::DEFAULT;
    out.push(CheckOutcome::bounded(
        format!("{label} orthogonality"),
        d.orthogonality,
        policy.orthogonality * scale,
    ));
    out.push(CheckOutcome::bounded(
        format!("{label} lower-left block (relative)"),
        d.block_residual,
        policy.block_structure * scale,
    ));
    out.push(CheckOutcome::within(
        format!("{label} total probability"),
        1.0,
        d.total_probability,
        1e-9 * scale,
    ));
}

fn structure(opts: &ValidationOptions) -> Result<Vec<CheckOutcome>> {
    let scale = opts.tolerance_scale;
    let mut out = Vec::new();
    for (label, model) in solved_models()? {
        let (res, elapsed) = timed(|| model.analyze());
        let res = res?;
        let before = out.len();
        diagnostics_checks(&label, &res.diagnostics, scale, &mut out);
        if let Some(d) = &res.wait_diagnostics {
            diagnostics_checks(&format!("{label} wait solve"), d, scale, &mut out);
        }
        for c in &mut out[before..] {
            c.seconds = elapsed.as_secs_f64();
        }
    }

    // both reducers on the same bufferless generators
    let householder = AnalysisOptions {
        reducer: Reducer::Householder,
        ..AnalysisOptions::default()
    };
    let schur = AnalysisOptions {
        reducer: Reducer::OrderedSchur,
        ..AnalysisOptions::default()
    };
    let cases = [
        ("M/PH/1/1* lambda=0.5 E(1,2)", bufferless(poisson(0.5), erlang(1.0, 2), 1.0)?),
        ("PH/PH/1/1 p=0.4", bufferless(fit_mean_scov(1.0, 0.5)?, fit_mean_scov(1.25, 4.0)?, 0.4)?),
        ("PH/M/1/1 p=0", bufferless(erlang(1.0, 4), poisson(1.5), 0.0)?),
    ];
    for (label, model) in cases {
        let ModelSpec::Bufferless(spec) = &model else { unreachable!() };
        let (diff, elapsed) = timed(|| -> Result<f64> {
            let (gmfq, _) = build_bufferless(spec)?;
            let a = solve_with(&gmfq, Reducer::Householder, &NumericPolicy::DEFAULT)?;
            let b = solve_with(&gmfq, Reducer::OrderedSchur, &NumericPolicy::DEFAULT)?;
            let ra = model.analyze_with(&householder)?;
            let rb = model.analyze_with(&schur)?;
            let mut worst = (a.c.clone() - b.c.clone()).amax();
            for x in grid(0.0, 3.0 * ra.mean_paoi, 25) {
                worst = worst.max((a.densities(x) - b.densities(x)).amax());
                worst = worst.max((ra.aoi_form.pdf(x) - rb.aoi_form.pdf(x)).abs());
                worst = worst.max((ra.paoi_form.pdf(x) - rb.paoi_form.pdf(x)).abs());
            }
            Ok(worst)
        });
        out.push(
            CheckOutcome::bounded(
                format!("{label} Householder vs ordered Schur densities"),
                diff?,
                1e-9 * scale,
            )
            .timed(elapsed),
        );
    }
    Ok(out)
}

fn on_off_check(scale: f64) -> Result<Vec<CheckOutcome>> {
    // on at rate β, off at rate α: stable when β < α
    let (alpha, beta) = (2.0, 1.0);
    let q = dmatrix![-alpha, alpha; beta, -beta];
    let spec = GmfqSpec::new(q.clone(), q, dvector![1.0, -1.0])?;
    let ss = solve(&spec)?;
    let c2 = (alpha - beta) / (alpha + beta);
    let k = beta * c2;
    let mut worst = (ss.c[0]).abs().max((ss.c[1] - c2).abs());
    for x in grid(0.0, 8.0, 33) {
        let exact = k * (-(alpha - beta) * x).exp();
        let f = ss.densities(x);
        worst = worst.max((f[0] - exact).abs()).max((f[1] - exact).abs());
    }
    Ok(vec![CheckOutcome::bounded("on-off closed form", worst, 1e-8 * scale)])
}

fn mm12_check(scale: f64) -> Result<Vec<CheckOutcome>> {
    let (lambda, mu) = (0.7, 1.3);
    let (gmfq, part) = build_residual_process(lambda, &poisson(mu))?;
    let ss = solve(&gmfq)?;
    let (empty, waiting) = (part.range("0").start, part.range("1").start);
    let integrals = ss.state_integrals();
    let (i0, i1, c0) = (integrals[empty], integrals[waiting], ss.c[empty]);
    let censored = c0 + i0 + i1;
    let rho = lambda / mu;
    let norm = 1.0 + rho + rho * rho;
    let mut worst = (c0 / censored - 1.0 / norm)
        .abs()
        .max((i0 / censored - rho / norm).abs())
        .max((i1 / censored - rho * rho / norm).abs());
    for x in grid(0.0, 6.0, 25) {
        let exact = mu * (-mu * x).exp();
        worst = worst
            .max((ss.density(empty, x) / i0 - exact).abs())
            .max((ss.density(waiting, x) / i1 - exact).abs());
    }
    Ok(vec![CheckOutcome::bounded("M/M/1/2 occupancy and residual service", worst, 1e-8 * scale)])
}

fn discretization_cases() -> Result<Vec<(String, GmfqSpec)>> {
    let mut out = Vec::new();
    let q = dmatrix![-2.0, 2.0; 1.0, -1.0];
    out.push(("on-off n=2".to_string(), GmfqSpec::new(q.clone(), q, dvector![1.0, -1.0])?));
    out.push(("residual M/M/1/2 n=3".into(), build_residual_process(0.7, &poisson(1.3))?.0));
    out.push(("residual M/E2/1/2 n=4".into(), build_residual_process(0.5, &erlang(1.0, 2))?.0));
    let (m11, _) = build_bufferless(&BufferlessSpec::new(poisson(1.0), poisson(0.8), 0.5)?)?;
    out.push(("bufferless M/M/1/1 p=0.5 n=4".into(), m11));
    let (m12, _) = build_bufferless(&BufferlessSpec::new(poisson(1.0), erlang(0.8, 2), 0.3)?)?;
    out.push(("bufferless M/E2/1/1 p=0.3 n=6".into(), m12));
    let q = DMatrix::from_row_slice(
        5,
        5,
        &[
            -3.0, 1.0, 1.0, 0.5, 0.5, //
            0.5, -2.0, 0.5, 0.5, 0.5, //
            1.0, 1.0, -2.5, 0.0, 0.5, //
            0.5, 0.5, 0.5, -2.0, 0.5, //
            1.0, 0.0, 1.0, 1.0, -3.0,
        ],
    );
    let mut qt = q.clone();
    qt.set_row(4, &nalgebra::RowDVector::from_row_slice(&[2.0, 0.0, 0.0, 0.0, -2.0]));
    let drifts = DVector::from_row_slice(&[1.0, 0.5, -2.0, -1.0, -0.5]);
    out.push(("mixed drifts n=5".into(), GmfqSpec::new(q, qt, drifts)?));
    Ok(out)
}

fn discretization_check(scale: f64) -> Result<Vec<CheckOutcome>> {
    let step = 1e-3;
    let mut out = Vec::new();
    for (label, spec) in discretization_cases()? {
        let (worst, elapsed) = timed(|| -> Result<f64> {
            let ss = solve(&spec)?;
            let mut xmax = 1.0;
            while ss.level_cdf(xmax) < 1.0 - 1e-6 {
                xmax *= 1.5;
            }
            let approx = discretized_level(&spec, step, xmax * 1.5)?;
            Ok(grid(0.0, xmax, 200)
                .into_iter()
                .map(|x| (ss.level_cdf(x) - approx.cdf(x)).abs())
                .fold(0.0, f64::max))
        });
        out.push(
            CheckOutcome::bounded(format!("{label} discretized level cdf"), worst?, 5e-3 * scale).timed(elapsed),
        );
    }
    Ok(out)
}

fn oracles(opts: &ValidationOptions) -> Result<Vec<CheckOutcome>> {
    let scale = opts.tolerance_scale;
    let mut out = Vec::new();
    for f in [on_off_check, mm12_check, discretization_check] {
        let (checks, elapsed) = timed(|| f(scale));
        out.extend(checks?.into_iter().map(|c| {
            let secs = c.seconds;
            if secs == 0.0 {
                c.timed(elapsed)
            } else {
                c
            }
        }));
    }
    Ok(out)
}

fn violation_curve(opts: &ValidationOptions) -> Result<Vec<CheckOutcome>> {
    let lambda = 0.45;
    let model = bufferless(erlang(1.0 / lambda, 2), erlang(1.0, 100), 0.0)?;
    let analytic = model.analyze()?;
    let sim = simulate(&SimConfig::from_model(&model, opts.cycles, opts.warmup, opts.seed)?)?;
    let mut out = Vec::new();
    for x in [2.0, 4.0, 6.0, 8.0, 10.0] {
        let (g, t) = timed(|| analytic.aoi.tail(x));
        out.push(
            CheckOutcome::within(
                format!("G(x) at x={x}"),
                1.0 - empirical_aoi_cdf(&sim, x),
                g?,
                0.01 * opts.tolerance_scale,
            )
            .timed(t),
        );
    }
    Ok(out)
}

fn sweep_spot_checks() -> Result<Vec<CheckOutcome>> {
    let mut out = Vec::new();
    let lambda = 1.0;
    for rho in [0.5, 1.0, 1.5] {
        for scov in [0.25, 0.5, 1.0, 2.0, 4.0] {
            let service = fit_mean_scov(rho / lambda, scov)?;
            let (means, elapsed) = timed(|| {
                mean_aoi_sweep(vec![
                    single_buffer(lambda, service.clone(), 0.0)?,
                    single_buffer(lambda, service.clone(), 1.0)?,
                ])
            });
            let means = means?;
            out.push(
                CheckOutcome::at_most(
                    format!("rho={rho} scov_service={scov} E[age] r=1 <= r=0"),
                    means[1],
                    means[0],
                )
                .timed(elapsed),
            );
        }
    }
    for scov_service in [0.25, 0.5, 1.0, 2.0] {
        let service = fit_mean_scov(1.0, scov_service)?;
        let scovs = [0.25, 0.5, 1.0, 2.0, 4.0];
        let (means, elapsed) = timed(|| {
            mean_aoi_sweep(
                scovs
                    .iter()
                    .map(|s| bufferless(fit_mean_scov(1.0, *s)?, service.clone(), 0.0))
                    .collect::<Result<_>>()?,
            )
        });
        let means = means?;
        for w in 0..scovs.len() - 1 {
            out.push(
                CheckOutcome::at_most(
                    format!(
                        "rho=1 scov_service={scov_service} PH/PH/1/1 E[age] scov_arrival {} -> {}",
                        scovs[w],
                        scovs[w + 1]
                    ),
                    means[w],
                    means[w + 1],
                )
                .timed(elapsed),
            );
        }
    }
    Ok(out)
}
