mod common;

use aoi_mfq::models::{BufferlessSpec, ModelSpec, SingleBufferSpec};
use aoi_mfq::simulator::{simulate, simulate_replications, Estimate, SimConfig};
use aoi_mfq::{fit_mean_scov, PhDistribution};
use common::exponential;

fn within(est: &Estimate, exact: f64, ses: f64) -> bool {
    (est.value - exact).abs() <= ses * est.std_error
}

fn preemptive_mm11(lambda: f64, mu: f64, cycles: usize, warmup: usize, seed: u64) -> SimConfig {
    let model = ModelSpec::Bufferless(BufferlessSpec::new(exponential(lambda), exponential(mu), 1.0).unwrap());
    SimConfig::from_model(&model, cycles, warmup, seed).unwrap()
}

#[test]
fn preemptive_mm11_mean_age() {
    for (lambda, mu) in [(1.0, 1.0), (0.5, 2.0)] {
        let sim = simulate(&preemptive_mm11(lambda, mu, 500_000, 1_000, 3)).unwrap();
        let exact = 1.0 / lambda + 1.0 / mu;
        assert!(within(&sim.mean_aoi, exact, 3.0), "{:?} vs {exact}", sim.mean_aoi);
    }
}

#[test]
fn single_buffer_replacement_mean_age() {
    let service = PhDistribution::erlang_mean(1.0, 2).unwrap();
    let model = ModelSpec::SingleBuffer(SingleBufferSpec::new(0.5, service, 1.0).unwrap());
    let sim = simulate(&SimConfig::from_model(&model, 1_000_000, 1_000, 5).unwrap()).unwrap();
    assert!(within(&sim.mean_aoi, 3.108877, 3.0), "{:?}", sim.mean_aoi);
}

#[test]
fn doubling_warmup_stays_within_two_standard_errors() {
    for seed in [21, 22, 23] {
        let a = simulate(&preemptive_mm11(1.0, 1.5, 200_000, 1_000, seed)).unwrap();
        let b = simulate(&preemptive_mm11(1.0, 1.5, 200_000, 2_000, seed)).unwrap();
        assert!((a.mean_aoi.value - b.mean_aoi.value).abs() < 2.0 * a.mean_aoi.std_error);
    }
}

#[test]
fn runs_are_reproducible() {
    let model = ModelSpec::Bufferless(
        BufferlessSpec::new(fit_mean_scov(1.0, 4.0).unwrap(), fit_mean_scov(0.8, 0.25).unwrap(), 0.3).unwrap(),
    );
    let cfg = SimConfig::from_model(&model, 20_000, 100, 99).unwrap();
    let a = simulate(&cfg).unwrap();
    let b = simulate(&cfg).unwrap();
    assert_eq!(a, b);
    let other = simulate(&SimConfig { seed: 100, ..cfg.clone() }).unwrap();
    assert_ne!(a.mean_aoi, other.mean_aoi);

    let pooled = simulate_replications(&cfg, 3).unwrap();
    assert_eq!(pooled, simulate_replications(&cfg, 3).unwrap());
    // replications split the requested receptions
    assert_eq!(pooled.cycles(), cfg.cycles);
}

#[test]
fn short_runs_are_rejected() {
    let cfg = preemptive_mm11(1.0, 1.0, 10_000, 0, 1);
    assert!(simulate(&SimConfig { cycles: 9_999, ..cfg }).is_err());
}
