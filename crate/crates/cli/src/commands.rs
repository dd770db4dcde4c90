use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use aoi_mfq::models::{AgeResult, ModelSpec};
use aoi_mfq::simulator::{
    empirical_aoi_cdf, empirical_paoi_cdf, simulate_replications, SimConfig, SimResult, DEFAULT_CYCLES,
    DEFAULT_WARMUP,
};
use aoi_mfq::validation::{run_criterion, CriterionReport, Status, ValidationOptions, CRITERIA};
use aoi_mfq::MatrixExpDistribution;

use crate::config::{GridScale, GridSpec, RunConfig};
use crate::error::CliError;
use crate::output::{ensure_dir, file, format_value, round6, write_json, Table};

pub const DEFAULT_SEED: u64 = 1;
const DEFAULT_POINTS: usize = 201;

fn default_grid(max: f64) -> GridSpec {
    GridSpec {
        min: 0.0,
        max,
        points: DEFAULT_POINTS,
        scale: GridScale::Linear,
    }
}

/// Point beyond which both the AoI and PAoI tails are below 1e-3.
fn analytic_range(res: &AgeResult) -> Result<f64, CliError> {
    let mut x = res.mean_paoi.max(res.mean_aoi);
    while res.aoi.tail(x)? > 1e-3 || res.paoi.tail(x)? > 1e-3 {
        x *= 1.5;
    }
    Ok(x.ceil())
}

fn density_table(d: &impl MatrixExpDistribution, xs: &[f64]) -> Result<Table, CliError> {
    let mut t = Table::new(&["x", "pdf", "cdf"]);
    for (x, (pdf, cdf)) in xs.iter().zip(d.eval_grid(xs)?) {
        t.push(&[*x, pdf, cdf]);
    }
    Ok(t)
}

pub fn solve(cfg: &RunConfig) -> Result<(), CliError> {
    let model = cfg.require_model()?;
    let res = model.analyze()?;
    let grid = match &cfg.grid {
        Some(g) => g.clone(),
        None => default_grid(analytic_range(&res)?),
    };
    let xs = grid.values();
    ensure_dir(&cfg.out)?;
    write_json(&file(&cfg.out, "result.json"), &res)?;
    density_table(&res.aoi, &xs)?.write(&file(&cfg.out, "aoi.csv"))?;
    density_table(&res.paoi, &xs)?.write(&file(&cfg.out, "paoi.csv"))?;
    println!(
        "load {:.6}  E[age] {:.6}  E[age^2] {:.6}  E[peak] {:.6}  E[peak^2] {:.6}",
        res.load, res.mean_aoi, res.second_moment_aoi, res.mean_paoi, res.second_moment_paoi
    );
    Ok(())
}

#[derive(Serialize)]
struct SimulationOutput<'a> {
    model: &'a ModelSpec,
    seed: u64,
    cycles: usize,
    warmup: usize,
    replications: usize,
    #[serde(flatten)]
    result: &'a SimResult,
}

fn quantile(values: &[f64], q: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    v[((v.len() - 1) as f64 * q) as usize]
}

pub fn simulate(cfg: &RunConfig, replications: usize, thin: Option<usize>) -> Result<(), CliError> {
    let model = cfg.require_model()?;
    let seed = cfg.seed.unwrap_or(DEFAULT_SEED);
    let sim_cfg = SimConfig::from_model(
        model,
        cfg.cycles.unwrap_or(DEFAULT_CYCLES),
        cfg.warmup.unwrap_or(DEFAULT_WARMUP),
        seed,
    )?;
    let result = simulate_replications(&sim_cfg, replications)?;
    let grid = match &cfg.grid {
        Some(g) => g.clone(),
        None => default_grid(quantile(&result.peaks, 0.999).ceil().max(1.0)),
    };
    ensure_dir(&cfg.out)?;
    write_json(
        &file(&cfg.out, "sim.json"),
        &SimulationOutput {
            model,
            seed,
            cycles: sim_cfg.cycles,
            warmup: sim_cfg.warmup,
            replications,
            result: &result,
        },
    )?;
    let xs = grid.values();
    for (name, cdf) in [
        ("aoi.csv", empirical_aoi_cdf as fn(&SimResult, f64) -> f64),
        ("paoi.csv", empirical_paoi_cdf),
    ] {
        let mut t = Table::new(&["x", "cdf"]);
        for x in &xs {
            t.push(&[*x, cdf(&result, *x)]);
        }
        t.write(&file(&cfg.out, name))?;
    }
    if let Some(k) = thin {
        let mut t = Table::new(&["paoi"]);
        for v in result.peaks.iter().step_by(k.max(1)) {
            t.push(&[*v]);
        }
        t.write(&file(&cfg.out, "paoi_samples.csv"))?;
    }
    println!(
        "E[age] {:.6} ± {:.2e}  E[peak] {:.6} ± {:.2e}  receptions {}",
        result.mean_aoi.value,
        result.mean_aoi.std_error,
        result.mean_paoi.value,
        result.mean_paoi.std_error,
        result.cycles()
    );
    Ok(())
}

pub fn sweep(cfg: &RunConfig) -> Result<(), CliError> {
    let base = cfg.require_model()?;
    let spec = cfg
        .sweep
        .as_ref()
        .ok_or_else(|| CliError::Usage("no sweep given (use --sweep name=values)".into()))?;
    if !spec.parameter.applies_to(base) {
        return Err(CliError::Usage(format!(
            "sweep parameter {} does not apply to this model",
            spec.parameter.name()
        )));
    }
    let rows: Vec<Result<(f64, f64), String>> = spec
        .values
        .par_iter()
        .map(|v| {
            let res = spec.parameter.apply(base, *v).and_then(|m| m.analyze());
            res.map(|r| (r.mean_aoi, r.mean_paoi)).map_err(|e| e.to_string())
        })
        .collect();

    ensure_dir(&cfg.out)?;
    let path = file(&cfg.out, "sweep.csv");
    write_sweep(&path, spec.parameter.name(), &spec.values, &rows)?;
    let mut failed = 0;
    for (v, row) in spec.values.iter().zip(&rows) {
        match row {
            Ok((aoi, paoi)) => println!("{}={v:?}  E[age] {aoi:.6}  E[peak] {paoi:.6}", spec.parameter.name()),
            Err(e) => {
                failed += 1;
                eprintln!("{}={v:?}: {e}", spec.parameter.name());
            }
        }
    }
    if failed > 0 {
        return Err(CliError::Failure(format!("{failed} of {} sweep points failed", rows.len())));
    }
    Ok(())
}

/// Failed points keep their row with `error` in place of the numbers.
fn write_sweep(path: &Path, name: &str, values: &[f64], rows: &[Result<(f64, f64), String>]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| CliError::io(path, e))?;
    w.write_record([name, "mean_aoi", "mean_paoi"]).map_err(|e| CliError::io(path, e))?;
    for (v, row) in values.iter().zip(rows) {
        let record = match row {
            Ok((aoi, paoi)) => [*v, *aoi, *paoi].map(|x| format_value(round6(x))),
            Err(_) => [format_value(round6(*v)), "error".into(), "error".into()],
        };
        w.write_record(&record).map_err(|e| CliError::io(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

pub fn parse_criteria(list: &str) -> Result<Vec<u32>, CliError> {
    list.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| {
            let id: u32 = s
                .trim()
                .parse()
                .map_err(|_| CliError::Usage(format!("criterion `{s}` is not a number")))?;
            if CRITERIA.iter().any(|(i, _)| *i == id) {
                Ok(id)
            } else {
                Err(CliError::Usage(format!("unknown criterion {id}")))
            }
        })
        .collect()
}

pub fn validate(cfg: &RunConfig, criteria: Option<Vec<u32>>, tolerance_scale: f64) -> Result<(), CliError> {
    if !(tolerance_scale > 0.0 && tolerance_scale.is_finite()) {
        return Err(CliError::Usage(format!("tolerance scale must be positive, got {tolerance_scale}")));
    }
    let defaults = ValidationOptions::default();
    let opts = ValidationOptions {
        cycles: cfg.cycles.unwrap_or(defaults.cycles),
        warmup: cfg.warmup.unwrap_or(defaults.warmup),
        seed: cfg.seed.unwrap_or(defaults.seed),
        tolerance_scale,
    };
    let ids = criteria.unwrap_or_else(|| CRITERIA.iter().map(|(i, _)| *i).collect());
    let mut reports: Vec<CriterionReport> = Vec::new();
    for id in ids {
        let report = run_criterion(id, &opts);
        println!("{}", report.summary());
        for check in &report.checks {
            println!("    {}", check.describe());
        }
        reports.push(report);
    }
    ensure_dir(&cfg.out)?;
    write_json(&file(&cfg.out, "validation.json"), &reports)?;
    let not_passed: Vec<String> = reports
        .iter()
        .filter(|r| r.status() != Status::Pass)
        .map(|r| format!("criterion {} ({:?})", r.id, r.status()).to_lowercase())
        .collect();
    if not_passed.is_empty() {
        println!("all {} criteria passed", reports.len());
        Ok(())
    } else {
        Err(CliError::Validation(not_passed.join(", ")))
    }
}
