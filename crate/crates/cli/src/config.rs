//! JSON configuration and the textual `--grid` / `--sweep` forms.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Deserialize;

use aoi_mfq::models::{BufferlessSpec, ModelSpec, SingleBufferSpec};
use aoi_mfq::{fit_mean_scov, MatrixExpDistribution, PhDistribution};

use crate::error::CliError;

/// A distribution as written in a model file.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum DistConfig {
    /// Exponential with this rate.
    Rate(f64),
    Moments {
        mean: f64,
        scov: f64,
    },
    Matrix {
        alpha: Vec<f64>,
        #[serde(rename = "S")]
        s: Vec<Vec<f64>>,
        mass0: Option<f64>,
    },
}

impl DistConfig {
    fn resolve(&self, field: &str) -> Result<PhDistribution, CliError> {
        let built = match self {
            DistConfig::Rate(rate) => PhDistribution::exponential(*rate),
            DistConfig::Moments { mean, scov } => fit_mean_scov(*mean, *scov),
            DistConfig::Matrix { alpha, s, mass0 } => {
                let raw = serde_json::json!({ "alpha": alpha, "S": s, "mass0": mass0 });
                return serde_json::from_value(raw).map_err(|e| CliError::Usage(format!("{field}: {e}")));
            }
        };
        built.map_err(|e| CliError::Usage(format!("{field}: {e}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Bufferless,
    SingleBuffer,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub model: ModelKind,
    #[serde(alias = "lambda")]
    pub arrival: DistConfig,
    pub service: DistConfig,
    pub p: Option<f64>,
    pub r: Option<f64>,
}

impl ModelConfig {
    pub fn resolve(&self) -> Result<ModelSpec, CliError> {
        let service = self.service.resolve("service")?;
        let spec = match self.model {
            ModelKind::Bufferless => {
                if self.r.is_some() {
                    return Err(CliError::Usage("bufferless model takes `p`, not `r`".into()));
                }
                let p = self
                    .p
                    .ok_or_else(|| CliError::Usage("bufferless model needs `p`".into()))?;
                let arrival = self.arrival.resolve("arrival")?;
                BufferlessSpec::new(arrival, service, p).map(ModelSpec::Bufferless)
            }
            ModelKind::SingleBuffer => {
                if self.p.is_some() {
                    return Err(CliError::Usage("single_buffer model takes `r`, not `p`".into()));
                }
                let r = self
                    .r
                    .ok_or_else(|| CliError::Usage("single_buffer model needs `r`".into()))?;
                let DistConfig::Rate(lambda) = self.arrival else {
                    return Err(CliError::Usage(
                        "single_buffer arrivals are Poisson: give `arrival` as a rate".into(),
                    ));
                };
                SingleBufferSpec::new(lambda, service, r).map(ModelSpec::SingleBuffer)
            }
        };
        spec.map_err(|e| CliError::Usage(format!("model: {e}")))
    }
}

/// Model given inline or as a path to a JSON file.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum ModelSource {
    Path(PathBuf),
    Inline(ModelConfig),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridScale {
    Linear,
    Log,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub min: f64,
    pub max: f64,
    pub points: usize,
    #[serde(default = "linear")]
    pub scale: GridScale,
}

fn linear() -> GridScale {
    GridScale::Linear
}

impl GridSpec {
    pub fn validate(&self) -> Result<(), CliError> {
        if self.points < 2 {
            return Err(CliError::Usage(format!("grid needs at least 2 points, got {}", self.points)));
        }
        if !(self.min.is_finite() && self.max.is_finite() && self.min < self.max && self.min >= 0.0) {
            return Err(CliError::Usage(format!(
                "grid range must satisfy 0 <= min < max, got {}..{}",
                self.min, self.max
            )));
        }
        if self.scale == GridScale::Log && self.min <= 0.0 {
            return Err(CliError::Usage("log grid needs min > 0".into()));
        }
        Ok(())
    }

    pub fn values(&self) -> Vec<f64> {
        let last = (self.points - 1) as f64;
        (0..self.points)
            .map(|i| {
                let t = i as f64 / last;
                match self.scale {
                    GridScale::Linear => self.min + t * (self.max - self.min),
                    GridScale::Log => self.min * (self.max / self.min).powf(t),
                }
            })
            .collect()
    }
}

/// `min:max:points` with an optional `:log` or `:linear` suffix.
impl FromStr for GridSpec {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        let bad = || CliError::Usage(format!("grid `{s}` is not min:max:points[:log]"));
        let parts: Vec<&str> = s.split(':').collect();
        if !(3..=4).contains(&parts.len()) {
            return Err(bad());
        }
        let scale = match parts.get(3) {
            None | Some(&"linear") => GridScale::Linear,
            Some(&"log") => GridScale::Log,
            _ => return Err(bad()),
        };
        let grid = GridSpec {
            min: parts[0].parse().map_err(|_| bad())?,
            max: parts[1].parse().map_err(|_| bad())?,
            points: parts[2].parse().map_err(|_| bad())?,
            scale,
        };
        grid.validate()?;
        Ok(grid)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    P,
    R,
    Rho,
    ScovTheta,
    ScovLambda,
}

impl SweepParameter {
    pub fn name(self) -> &'static str {
        match self {
            SweepParameter::P => "p",
            SweepParameter::R => "r",
            SweepParameter::Rho => "rho",
            SweepParameter::ScovTheta => "scov_theta",
            SweepParameter::ScovLambda => "scov_lambda",
        }
    }

    fn check(self, v: f64) -> Result<(), CliError> {
        let ok = match self {
            SweepParameter::P | SweepParameter::R => (0.0..=1.0).contains(&v),
            _ => v > 0.0 && v.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            let domain = match self {
                SweepParameter::P | SweepParameter::R => "[0, 1]",
                _ => "(0, inf)",
            };
            Err(CliError::Usage(format!("{} = {v:?} is outside {domain}", self.name())))
        }
    }

    /// The base model with this parameter set to `v`.
    pub fn apply(self, base: &ModelSpec, v: f64) -> aoi_mfq::Result<ModelSpec> {
        let mut model = base.clone();
        match (&mut model, self) {
            (ModelSpec::Bufferless(m), SweepParameter::P) => m.p = v,
            (ModelSpec::SingleBuffer(m), SweepParameter::R) => m.r = v,
            (_, SweepParameter::Rho) => {
                let factor = v / base.load();
                match &mut model {
                    ModelSpec::Bufferless(m) => m.service = m.service.scaled(factor)?,
                    ModelSpec::SingleBuffer(m) => m.service = m.service.scaled(factor)?,
                }
            }
            (ModelSpec::Bufferless(m), SweepParameter::ScovTheta) => {
                m.service = fit_mean_scov(m.service.mean(), v)?
            }
            (ModelSpec::SingleBuffer(m), SweepParameter::ScovTheta) => {
                m.service = fit_mean_scov(m.service.mean(), v)?
            }
            (ModelSpec::Bufferless(m), SweepParameter::ScovLambda) => {
                m.arrival = fit_mean_scov(m.arrival.mean(), v)?
            }
            _ => {
                return Err(aoi_mfq::Error::Unsupported(
                    "sweep parameter does not apply to this model",
                ))
            }
        }
        model.validate()?;
        Ok(model)
    }

    pub fn applies_to(self, model: &ModelSpec) -> bool {
        !matches!(
            (model, self),
            (ModelSpec::Bufferless(_), SweepParameter::R)
                | (ModelSpec::SingleBuffer(_), SweepParameter::P)
                | (ModelSpec::SingleBuffer(_), SweepParameter::ScovLambda)
        )
    }
}

impl FromStr for SweepParameter {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        serde_json::from_value(serde_json::Value::String(s.to_string())).map_err(|_| {
            CliError::Usage(format!(
                "unknown sweep parameter `{s}` (expected p, r, rho, scov_theta or scov_lambda)"
            ))
        })
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub parameter: SweepParameter,
    pub values: Vec<f64>,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<(), CliError> {
        if self.values.is_empty() {
            return Err(CliError::Usage(format!("sweep over {} has no values", self.parameter.name())));
        }
        self.values.iter().try_for_each(|v| self.parameter.check(*v))
    }
}

/// `name=v1,v2,...` or `name=start:stop:count`.
impl FromStr for SweepSpec {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        let (name, list) = s
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("sweep `{s}` is not name=values")))?;
        let parameter: SweepParameter = name.trim().parse()?;
        let bad = || CliError::Usage(format!("sweep values `{list}` are not v1,v2,... or start:stop:count"));
        let values = if list.contains(':') {
            let parts: Vec<&str> = list.split(':').collect();
            if parts.len() != 3 {
                return Err(bad());
            }
            let start: f64 = parts[0].trim().parse().map_err(|_| bad())?;
            let stop: f64 = parts[1].trim().parse().map_err(|_| bad())?;
            let count: usize = parts[2].trim().parse().map_err(|_| bad())?;
            match count {
                0 => Vec::new(),
                1 => vec![start],
                _ => (0..count)
                    .map(|i| start + (stop - start) * i as f64 / (count - 1) as f64)
                    .collect(),
            }
        } else {
            list.split(',')
                .filter(|v| !v.trim().is_empty())
                .map(|v| v.trim().parse().map_err(|_| bad()))
                .collect::<Result<_, _>>()?
        };
        let spec = SweepSpec { parameter, values };
        spec.validate()?;
        Ok(spec)
    }
}

/// Grid or sweep given either as an object or in the flag's string form.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum Textual<T> {
    Text(String),
    Value(T),
}

impl<T: FromStr<Err = CliError>> Textual<T> {
    fn into_value(self) -> Result<T, CliError> {
        match self {
            Textual::Text(s) => s.parse(),
            Textual::Value(v) => Ok(v),
        }
    }
}

/// Contents of a `--config` file; every field can be overridden by a flag.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub model: Option<ModelSource>,
    pub out: Option<PathBuf>,
    pub grid: Option<Textual<GridSpec>>,
    pub sweep: Option<Textual<SweepSpec>>,
    pub seed: Option<u64>,
    pub cycles: Option<usize>,
    pub warmup: Option<usize>,
    pub jobs: Option<usize>,
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))
}

pub fn load_file_config(path: &Path) -> Result<FileConfig, CliError> {
    serde_json::from_str(&read(path)?)
        .map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))
}

pub fn load_model(path: &Path) -> Result<ModelSpec, CliError> {
    let config: ModelConfig = serde_json::from_str(&read(path)?)
        .map_err(|e| CliError::Usage(format!("model {}: {e}", path.display())))?;
    config.resolve()
}

/// Settings after merging the config file with command-line flags.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub model: Option<ModelSpec>,
    pub out: PathBuf,
    pub grid: Option<GridSpec>,
    pub sweep: Option<SweepSpec>,
    pub seed: Option<u64>,
    pub cycles: Option<usize>,
    pub warmup: Option<usize>,
}

#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub model: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub grid: Option<GridSpec>,
    pub sweep: Option<SweepSpec>,
    pub seed: Option<u64>,
    pub cycles: Option<usize>,
    pub warmup: Option<usize>,
    pub jobs: Option<usize>,
}

impl RunConfig {
    /// Merges `file` (relative model paths resolve against `base_dir`) with `flags`.
    pub fn merge(file: FileConfig, base_dir: &Path, flags: Overrides) -> Result<(Self, Option<usize>), CliError> {
        let model = match (flags.model, file.model) {
            (Some(path), _) => Some(load_model(&path)?),
            (None, Some(ModelSource::Path(p))) => Some(load_model(&base_dir.join(p))?),
            (None, Some(ModelSource::Inline(m))) => Some(m.resolve()?),
            (None, None) => None,
        };
        let grid = match flags.grid {
            Some(g) => Some(g),
            None => file.grid.map(Textual::into_value).transpose()?,
        };
        if let Some(g) = &grid {
            g.validate()?;
        }
        let sweep = match flags.sweep {
            Some(s) => Some(s),
            None => file.sweep.map(Textual::into_value).transpose()?,
        };
        if let Some(s) = &sweep {
            s.validate()?;
        }
        let run = RunConfig {
            model,
            out: flags.out.or(file.out).unwrap_or_else(|| PathBuf::from(".")),
            grid,
            sweep,
            seed: flags.seed.or(file.seed),
            cycles: flags.cycles.or(file.cycles),
            warmup: flags.warmup.or(file.warmup),
        };
        Ok((run, flags.jobs.or(file.jobs)))
    }

    pub fn require_model(&self) -> Result<&ModelSpec, CliError> {
        self.model
            .as_ref()
            .ok_or_else(|| CliError::Usage("no model given (use --model or a config with `model`)".into()))
    }
}
