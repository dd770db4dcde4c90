mod common;

use aoi_mfq::models::{
    analyze_bufferless, analyze_bufferless_with, analyze_single_buffer_with, wait_time_distribution, AgeResult, AnalysisOptions,
    BufferlessSpec, ModelSpec, SingleBufferSpec,
};
use aoi_mfq::simulator::{simulate, SimConfig};
use aoi_mfq::{fit_mean_scov, MatrixExpDistribution, PhDistribution};
use common::{exponential, simpson};

fn bufferless(arrival: PhDistribution, service: PhDistribution, p: f64) -> BufferlessSpec {
    BufferlessSpec::new(arrival, service, p).unwrap()
}

fn single_buffer(lambda: f64, service: PhDistribution, r: f64) -> SingleBufferSpec {
    SingleBufferSpec::new(lambda, service, r).unwrap()
}

fn sample_models() -> Vec<ModelSpec> {
    vec![
        ModelSpec::Bufferless(bufferless(exponential(1.0), exponential(0.8), 0.0)),
        ModelSpec::Bufferless(bufferless(
            fit_mean_scov(1.0, 0.25).unwrap(),
            fit_mean_scov(1.3, 4.0).unwrap(),
            0.4,
        )),
        ModelSpec::SingleBuffer(single_buffer(0.5, PhDistribution::erlang_mean(1.0, 2).unwrap(), 0.0)),
        ModelSpec::SingleBuffer(single_buffer(1.25, fit_mean_scov(1.0, 2.0).unwrap(), 0.6)),
    ]
}

fn with_reset(rate: f64) -> AnalysisOptions {
    AnalysisOptions {
        reset_rate: rate,
        ..AnalysisOptions::default()
    }
}

fn max_pdf_gap(a: &AgeResult, b: &AgeResult) -> f64 {
    (0..=40)
        .map(|i| 0.25 * i as f64)
        .map(|x| {
            let aoi = (a.aoi.pdf(x).unwrap() - b.aoi.pdf(x).unwrap()).abs();
            let paoi = (a.paoi.pdf(x).unwrap() - b.paoi.pdf(x).unwrap()).abs();
            aoi.max(paoi)
        })
        .fold(0.0, f64::max)
}

#[test]
fn mm11_closed_forms() {
    for (lambda, mu) in [(1.0, 1.0), (0.5, 2.0), (2.0, 0.7)] {
        let blocking = bufferless(exponential(lambda), exponential(mu), 0.0);
        let res = analyze_bufferless(&blocking).unwrap();
        let aoi = 1.0 / lambda + 2.0 / mu - 1.0 / (lambda + mu);
        assert!((res.mean_aoi - aoi).abs() < 1e-9, "{} vs {aoi}", res.mean_aoi);
        assert!((res.mean_paoi - (1.0 / lambda + 2.0 / mu)).abs() < 1e-9);

        let preemptive = bufferless(exponential(lambda), exponential(mu), 1.0);
        let res = analyze_bufferless(&preemptive).unwrap();
        assert!((res.mean_aoi - (1.0 / lambda + 1.0 / mu)).abs() < 1e-9);
    }
}

#[test]
fn reset_dwell_rate_does_not_change_results() {
    for model in sample_models() {
        let a = model.analyze_with(&with_reset(1.0)).unwrap();
        let b = model.analyze_with(&with_reset(10.0)).unwrap();
        assert!(max_pdf_gap(&a, &b) <= 1e-9, "{model:?}");
        assert!((a.mean_aoi - b.mean_aoi).abs() <= 1e-9);
        assert!((a.mean_paoi - b.mean_paoi).abs() <= 1e-9);
    }
}

#[test]
fn probabilities_are_continuous_at_zero() {
    let opts = AnalysisOptions::default();
    let arrival = fit_mean_scov(1.0, 0.5).unwrap();
    let service = fit_mean_scov(0.9, 2.0).unwrap();
    let a = analyze_bufferless_with(&bufferless(arrival.clone(), service.clone(), 0.0), &opts).unwrap();
    let b = analyze_bufferless_with(&bufferless(arrival, service.clone(), 1e-9), &opts).unwrap();
    assert!(max_pdf_gap(&a, &b) <= 1e-6);
    assert!((a.mean_aoi - b.mean_aoi).abs() <= 1e-6);

    let a = analyze_single_buffer_with(&single_buffer(0.8, service.clone(), 0.0), &opts).unwrap();
    let b = analyze_single_buffer_with(&single_buffer(0.8, service, 1e-9), &opts).unwrap();
    assert!(max_pdf_gap(&a, &b) <= 1e-6);
    assert!((a.mean_aoi - b.mean_aoi).abs() <= 1e-6);
}

#[test]
fn densities_integrate_to_one() {
    for model in sample_models() {
        let res = model.analyze().unwrap();
        for (name, d) in [("aoi", &res.aoi), ("paoi", &res.paoi)] {
            let upper = 60.0 * d.mean();
            let mass = simpson(|x| d.pdf(x).unwrap(), 0.0, upper, 20_000) + d.mass0();
            assert!((mass - 1.0).abs() < 1e-7, "{name} of {model:?}: {mass}");
            let mean = simpson(|x| x * d.pdf(x).unwrap(), 0.0, upper, 20_000);
            assert!((mean - d.mean()).abs() < 1e-6 * d.mean());
        }
    }
}

#[test]
fn cdfs_are_monotone() {
    for model in sample_models() {
        let res = model.analyze().unwrap();
        for d in [&res.aoi, &res.paoi] {
            let mut last = d.cdf(0.0).unwrap();
            for i in 1..=200 {
                let f = d.cdf(0.1 * i as f64).unwrap();
                assert!(f >= last - 1e-12 && f <= 1.0 + 1e-9);
                last = f;
            }
        }
    }
}

#[test]
fn second_moments_dominate_squared_means() {
    for model in sample_models() {
        let res = model.analyze().unwrap();
        assert!(res.second_moment_aoi >= res.mean_aoi * res.mean_aoi, "{model:?}");
        assert!(res.second_moment_paoi >= res.mean_paoi * res.mean_paoi, "{model:?}");
    }
}

#[test]
fn wait_time_agrees_with_simulation() {
    for (lambda, service, r) in [
        (0.5, PhDistribution::erlang_mean(1.0, 2).unwrap(), 1.0),
        (1.25, fit_mean_scov(1.0, 2.0).unwrap(), 0.0),
        (0.8, fit_mean_scov(1.0, 0.25).unwrap(), 0.5),
    ] {
        let wait = wait_time_distribution(lambda, &service, r).unwrap();
        let model = ModelSpec::SingleBuffer(single_buffer(lambda, service, r));
        let sim = simulate(&SimConfig::from_model(&model, 400_000, 1_000, 11).unwrap()).unwrap();
        let gap = (wait.mean() - sim.mean_wait.value).abs();
        assert!(
            gap <= 3.0 * sim.mean_wait.std_error,
            "lambda={lambda} r={r}: {} vs {} ± {}",
            wait.mean(),
            sim.mean_wait.value,
            sim.mean_wait.std_error
        );
    }
}

#[test]
fn invalid_models_are_rejected() {
    assert!(BufferlessSpec::new(exponential(1.0), exponential(1.0), 1.5).is_err());
    assert!(SingleBufferSpec::new(-1.0, exponential(1.0), 0.5).is_err());
    assert!(SingleBufferSpec::new(1.0, exponential(1.0), f64::NAN).is_err());
}

#[test]
fn model_json_round_trip() {
    for model in sample_models() {
        let text = serde_json::to_string(&model).unwrap();
        let back: ModelSpec = serde_json::from_str(&text).unwrap();
        assert_eq!(back, model);
    }
    let text = r#"{"model":"single_buffer","lambda":0.5,"service":{"alpha":[1.0],"S":[[-1.0]]},"r":1.0}"#;
    let model: ModelSpec = serde_json::from_str(text).unwrap();
    assert!((model.load() - 0.5).abs() < 1e-15);
}
