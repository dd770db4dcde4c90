//! Discrete-event simulation of the bufferless and single-buffer queues,
//! producing empirical AoI and PAoI statistics.
//!
//! Only two events can be pending at any time (the next arrival and the next
//! service completion), so no event calendar is kept.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::ModelSpec;
use crate::phdist::{PhDistribution, PhSampler};

pub const MIN_CYCLES: usize = 10_000;
pub const DEFAULT_CYCLES: usize = 1_000_000;
pub const DEFAULT_WARMUP: usize = 1_000;
const BATCHES: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Discipline {
    /// Busy-server arrivals preempt with probability `p`, else are dropped.
    Bufferless { p: f64 },
    /// Busy-server arrivals wait in a single slot; an occupied slot is taken
    /// over with probability `r`, else the arrival is dropped.
    SingleBuffer { r: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub discipline: Discipline,
    pub arrival: PhDistribution,
    pub service: PhDistribution,
    /// Receptions kept after the warmup.
    pub cycles: usize,
    /// Receptions discarded at the start.
    pub warmup: usize,
    pub seed: u64,
}

impl SimConfig {
    pub fn from_model(model: &ModelSpec, cycles: usize, warmup: usize, seed: u64) -> Result<Self> {
        model.validate()?;
        let (discipline, arrival, service) = match model {
            ModelSpec::Bufferless(s) => (
                Discipline::Bufferless { p: s.p },
                s.arrival.clone(),
                s.service.clone(),
            ),
            ModelSpec::SingleBuffer(s) => (
                Discipline::SingleBuffer { r: s.r },
                PhDistribution::exponential(s.lambda)?,
                s.service.clone(),
            ),
        };
        let cfg = Self {
            discipline,
            arrival,
            service,
            cycles,
            warmup,
            seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.cycles < MIN_CYCLES {
            return Err(Error::Domain {
                what: "cycles",
                value: self.cycles as f64,
                domain: "cycles >= 10000",
            });
        }
        let (what, prob) = match self.discipline {
            Discipline::Bufferless { p } => ("p", p),
            Discipline::SingleBuffer { r } => ("r", r),
        };
        if !(0.0..=1.0).contains(&prob) {
            return Err(Error::Domain {
                what,
                value: prob,
                domain: "[0, 1]",
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct PacketCounts {
    pub arrivals: u64,
    pub successful: u64,
    pub preempted: u64,
    pub replaced: u64,
    pub dropped: u64,
    /// Packets still in service or waiting when the run stopped.
    pub in_system: u64,
}

impl PacketCounts {
    fn add(&mut self, o: &PacketCounts) {
        self.arrivals += o.arrivals;
        self.successful += o.successful;
        self.preempted += o.preempted;
        self.replaced += o.replaced;
        self.dropped += o.dropped;
        self.in_system += o.in_system;
    }
}

/// Point estimate with a batch-means standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
}

/// Time-average cdf of a sawtooth path made of unit-slope segments
/// `[D_j, Φ_{j+1}]`.
#[derive(Debug, Clone, PartialEq)]
struct SawtoothCdf {
    starts: Vec<f64>,
    start_prefix: Vec<f64>,
    peaks: Vec<f64>,
    peak_prefix: Vec<f64>,
    total: f64,
}

fn sorted_with_prefix(values: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut prefix = Vec::with_capacity(sorted.len() + 1);
    let mut acc = 0.0;
    prefix.push(acc);
    for v in &sorted {
        acc += v;
        prefix.push(acc);
    }
    (sorted, prefix)
}

/// `Σ max(x − v, 0)` over a sorted sample.
fn excess_below(sorted: &[f64], prefix: &[f64], x: f64) -> f64 {
    let m = sorted.partition_point(|v| *v < x);
    m as f64 * x - prefix[m]
}

impl SawtoothCdf {
    fn new(starts: &[f64], peaks: &[f64]) -> Self {
        let total = starts.iter().zip(peaks).map(|(d, f)| f - d).sum();
        let (starts, start_prefix) = sorted_with_prefix(starts);
        let (peaks, peak_prefix) = sorted_with_prefix(peaks);
        Self {
            starts,
            start_prefix,
            peaks,
            peak_prefix,
            total,
        }
    }

    fn eval(&self, x: f64) -> f64 {
        if x <= 0.0 || self.total <= 0.0 {
            return 0.0;
        }
        let covered = excess_below(&self.starts, &self.start_prefix, x)
            - excess_below(&self.peaks, &self.peak_prefix, x);
        (covered / self.total).clamp(0.0, 1.0)
    }
}

/// Outcome of a simulation run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimResult {
    pub counts: PacketCounts,
    pub mean_aoi: Estimate,
    pub second_moment_aoi: Estimate,
    pub mean_paoi: Estimate,
    pub second_moment_paoi: Estimate,
    pub mean_wait: Estimate,
    pub mean_system_time: Estimate,
    /// System time `D_j` at the start of each retained cycle.
    #[serde(skip)]
    pub system_times: Vec<f64>,
    /// Peak `Φ_{j+1}` ending each retained cycle.
    #[serde(skip)]
    pub peaks: Vec<f64>,
    /// Queue waits of the successful packets delivered in retained cycles.
    #[serde(skip)]
    pub waits: Vec<f64>,
    #[serde(skip)]
    sorted_peaks: Vec<f64>,
    #[serde(skip)]
    aoi: SawtoothCdf,
}

/// Batch-means estimate of `Σ num / Σ den`.
fn ratio_estimate(num: &[f64], den: &[f64]) -> Estimate {
    let n = num.len();
    let value = num.iter().sum::<f64>() / den.iter().sum::<f64>();
    let batches = BATCHES.min(n / 2);
    if batches < 2 {
        return Estimate {
            value,
            std_error: f64::NAN,
        };
    }
    let size = n / batches;
    let ratios: Vec<f64> = (0..batches)
        .map(|b| {
            let r = b * size..(b + 1) * size;
            num[r.clone()].iter().sum::<f64>() / den[r].iter().sum::<f64>()
        })
        .collect();
    let mean = ratios.iter().sum::<f64>() / batches as f64;
    let var = ratios.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (batches - 1) as f64;
    Estimate {
        value,
        std_error: (var / batches as f64).sqrt(),
    }
}

fn mean_estimate(values: &[f64]) -> Estimate {
    ratio_estimate(values, &vec![1.0; values.len()])
}

impl SimResult {
    fn from_samples(counts: PacketCounts, system_times: Vec<f64>, peaks: Vec<f64>, waits: Vec<f64>) -> Self {
        let lengths: Vec<f64> = system_times.iter().zip(&peaks).map(|(d, f)| f - d).collect();
        let area1: Vec<f64> = system_times
            .iter()
            .zip(&peaks)
            .map(|(d, f)| (f * f - d * d) / 2.0)
            .collect();
        let area2: Vec<f64> = system_times
            .iter()
            .zip(&peaks)
            .map(|(d, f)| (f.powi(3) - d.powi(3)) / 3.0)
            .collect();
        let squares: Vec<f64> = peaks.iter().map(|f| f * f).collect();
        let mut sorted_peaks = peaks.clone();
        sorted_peaks.sort_by(f64::total_cmp);
        Self {
            counts,
            mean_aoi: ratio_estimate(&area1, &lengths),
            second_moment_aoi: ratio_estimate(&area2, &lengths),
            mean_paoi: mean_estimate(&peaks),
            second_moment_paoi: mean_estimate(&squares),
            mean_wait: mean_estimate(&waits),
            mean_system_time: mean_estimate(&system_times),
            aoi: SawtoothCdf::new(&system_times, &peaks),
            sorted_peaks,
            system_times,
            peaks,
            waits,
        }
    }

    pub fn cycles(&self) -> usize {
        self.peaks.len()
    }
}

/// Exact time-average fraction of the retained sample path with age ≤ `x`.
pub fn empirical_aoi_cdf(result: &SimResult, x: f64) -> f64 {
    result.aoi.eval(x)
}

/// Fraction of retained peaks that are ≤ `x`.
pub fn empirical_paoi_cdf(result: &SimResult, x: f64) -> f64 {
    let n = result.sorted_peaks.len();
    if n == 0 {
        return 0.0;
    }
    result.sorted_peaks.partition_point(|v| *v <= x) as f64 / n as f64
}

struct Packet {
    arrived: f64,
    started: f64,
}

pub fn simulate(cfg: &SimConfig) -> Result<SimResult> {
    cfg.validate()?;
    Ok(run(cfg))
}

fn run(cfg: &SimConfig) -> SimResult {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let arrival = cfg.arrival.sampler();
    let service = cfg.service.sampler();
    let sample = |s: &PhSampler, rng: &mut ChaCha8Rng| s.sample(rng);

    let mut counts = PacketCounts::default();
    let mut system_times = Vec::with_capacity(cfg.cycles);
    let mut peaks = Vec::with_capacity(cfg.cycles);
    let mut waits = Vec::with_capacity(cfg.cycles);

    let mut next_arrival = sample(&arrival, &mut rng);
    let mut in_service: Option<(Packet, f64)> = None;
    let mut waiting: Option<f64> = None;
    // (generation time, system time) of the latest delivered packet
    let mut last: Option<(f64, f64)> = None;
    let mut receptions = 0usize;

    while peaks.len() < cfg.cycles {
        let completes_first = matches!(&in_service, Some((_, done)) if *done <= next_arrival);
        if completes_first {
            let (packet, now) = in_service.take().unwrap();
            counts.successful += 1;
            let system_time = now - packet.arrived;
            if let Some((prev_gen, prev_system)) = last {
                receptions += 1;
                if receptions > cfg.warmup {
                    system_times.push(prev_system);
                    peaks.push(now - prev_gen);
                    waits.push(packet.started - packet.arrived);
                }
            }
            last = Some((packet.arrived, system_time));
            if let Some(arrived) = waiting.take() {
                let done = now + sample(&service, &mut rng);
                in_service = Some((Packet { arrived, started: now }, done));
            }
            continue;
        }

        let now = next_arrival;
        next_arrival = now + sample(&arrival, &mut rng);
        counts.arrivals += 1;
        if in_service.is_none() {
            let done = now + sample(&service, &mut rng);
            in_service = Some((Packet { arrived: now, started: now }, done));
            continue;
        }
        match cfg.discipline {
            Discipline::Bufferless { p } => {
                if rng.gen::<f64>() < p {
                    counts.preempted += 1;
                    let done = now + sample(&service, &mut rng);
                    in_service = Some((Packet { arrived: now, started: now }, done));
                } else {
                    counts.dropped += 1;
                }
            }
            Discipline::SingleBuffer { r } => {
                if waiting.is_none() {
                    waiting = Some(now);
                } else if rng.gen::<f64>() < r {
                    counts.replaced += 1;
                    waiting = Some(now);
                } else {
                    counts.dropped += 1;
                }
            }
        }
    }
    counts.in_system = in_service.is_some() as u64 + waiting.is_some() as u64;
    SimResult::from_samples(counts, system_times, peaks, waits)
}

/// Runs `replications` independent streams in parallel and pools them in
/// replication order; the total number of retained cycles is `cfg.cycles`.
///
/// Stream `i` is seeded with `cfg.seed + i`, so the result does not depend on
/// the number of worker threads.
pub fn simulate_replications(cfg: &SimConfig, replications: usize) -> Result<SimResult> {
    cfg.validate()?;
    let replications = replications.clamp(1, cfg.cycles / MIN_CYCLES);
    let base = cfg.cycles / replications;
    let parts: Vec<SimResult> = (0..replications)
        .into_par_iter()
        .map(|i| {
            let mut c = cfg.clone();
            c.seed = cfg.seed.wrapping_add(i as u64);
            c.cycles = if i + 1 == replications {
                cfg.cycles - base * (replications - 1)
            } else {
                base
            };
            run(&c)
        })
        .collect();
    Ok(pool(parts))
}

fn pool(parts: Vec<SimResult>) -> SimResult {
    let mut counts = PacketCounts::default();
    let mut system_times = Vec::new();
    let mut peaks = Vec::new();
    let mut waits = Vec::new();
    for p in parts {
        counts.add(&p.counts);
        system_times.extend(p.system_times);
        peaks.extend(p.peaks);
        waits.extend(p.waits);
    }
    SimResult::from_samples(counts, system_times, peaks, waits)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mm11(p: f64, seed: u64) -> SimConfig {
        let e = PhDistribution::exponential(1.0).unwrap();
        SimConfig {
            discipline: Discipline::Bufferless { p },
            arrival: e.clone(),
            service: e,
            cycles: 20_000,
            warmup: 100,
            seed,
        }
    }

    #[test]
    fn sawtooth_single_cycle() {
        let res = SimResult::from_samples(PacketCounts::default(), vec![1.0], vec![3.0], vec![0.0]);
        assert_eq!(empirical_aoi_cdf(&res, 0.0), 0.0);
        assert_eq!(empirical_aoi_cdf(&res, 1.0), 0.0);
        assert_eq!(empirical_aoi_cdf(&res, 2.0), 0.5);
        assert_eq!(empirical_aoi_cdf(&res, 3.0), 1.0);
        assert_eq!(empirical_aoi_cdf(&res, 7.0), 1.0);
        assert_eq!(res.mean_aoi.value, 2.0);
    }

    #[test]
    fn sawtooth_matches_direct_sum() {
        let starts = [0.5, 1.0, 0.2, 2.0];
        let peaks = [1.5, 4.0, 0.9, 2.5];
        let res = SimResult::from_samples(PacketCounts::default(), starts.to_vec(), peaks.to_vec(), vec![0.0; 4]);
        let total: f64 = starts.iter().zip(&peaks).map(|(d, f)| f - d).sum();
        for x in [0.1, 0.6, 1.2, 2.2, 3.0, 5.0] {
            let direct: f64 = starts
                .iter()
                .zip(&peaks)
                .map(|(d, f)| (x - d).max(0.0).min(f - d))
                .sum::<f64>()
                / total;
            assert!((empirical_aoi_cdf(&res, x) - direct).abs() < 1e-15);
        }
    }

    #[test]
    fn paoi_cdf_edges() {
        let res = SimResult::from_samples(PacketCounts::default(), vec![0.0; 3], vec![1.0, 2.0, 3.0], vec![0.0; 3]);
        assert_eq!(empirical_paoi_cdf(&res, 0.5), 0.0);
        assert_eq!(empirical_paoi_cdf(&res, 2.0), 2.0 / 3.0);
        assert_eq!(empirical_paoi_cdf(&res, 9.0), 1.0);
    }

    #[test]
    fn same_seed_same_result() {
        let a = simulate(&mm11(0.0, 7)).unwrap();
        let b = simulate(&mm11(0.0, 7)).unwrap();
        assert_eq!(a, b);
        let c = simulate(&mm11(0.0, 8)).unwrap();
        assert_ne!(a.mean_aoi.value, c.mean_aoi.value);
    }

    #[test]
    fn counts_balance() {
        for cfg in [mm11(0.3, 1), {
            let mut c = mm11(0.0, 2);
            c.discipline = Discipline::SingleBuffer { r: 0.5 };
            c
        }] {
            let res = simulate(&cfg).unwrap();
            let c = res.counts;
            assert_eq!(c.arrivals, c.successful + c.preempted + c.replaced + c.dropped + c.in_system);
            assert_eq!(res.cycles(), 20_000);
        }
    }

    #[test]
    fn too_few_cycles_rejected() {
        let mut cfg = mm11(0.0, 1);
        cfg.cycles = 10;
        assert!(simulate(&cfg).is_err());
    }

    #[test]
    fn replications_pool_to_requested_cycles() {
        let mut cfg = mm11(1.0, 3);
        cfg.cycles = 35_000;
        let res = simulate_replications(&cfg, 3).unwrap();
        assert_eq!(res.cycles(), 35_000);
        assert_eq!(res, simulate_replications(&cfg, 3).unwrap());
    }
}
