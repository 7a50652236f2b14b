//! Run configuration.
//!
//! Three layers, highest precedence first: command-line flags, a config file
//! (`--config`), built-in defaults. The file is either a JSON object or
//! `key = value` lines (`#` starts a comment). Keys use the flag names with
//! `-` or `_` as separator, e.g. `grid-points = 50` or `{"grid_points": 50}`.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use bayesrisk_core::simulator::{AmpConfig, Sizes};
use bayesrisk_core::{ModelParams, ScalarChannels, SweepAxis, SweepSpec};

use crate::error::{HarnessError, Result};

/// Every configurable value, unset ones left as `None`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Settings {
    pub alpha: Option<f64>,
    pub sigma2: Option<f64>,
    pub eta: Option<f64>,
    pub axis: Option<SweepAxis>,
    pub grid_start: Option<f64>,
    pub grid_stop: Option<f64>,
    pub grid_points: Option<usize>,
    pub axis2: Option<SweepAxis>,
    pub grid2_start: Option<f64>,
    pub grid2_stop: Option<f64>,
    pub grid2_points: Option<usize>,
    pub n: Option<usize>,
    pub d: Option<usize>,
    pub m: Option<usize>,
    pub seeds: Option<Vec<u64>>,
    pub out: Option<PathBuf>,
    pub summary: Option<PathBuf>,
    pub threads: Option<usize>,
    pub quadrature_order: Option<usize>,
    pub quick: Option<bool>,
    pub max_iter: Option<usize>,
    pub tol: Option<f64>,
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| HarnessError::usage(format!("invalid value {value:?} for {key}")))
}

fn parse_axis(key: &str, value: &str) -> Result<SweepAxis> {
    value
        .trim()
        .parse()
        .map_err(|e: bayesrisk_core::Error| HarnessError::usage(format!("{key}: {e}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.trim() {
        "true" | "1" | "yes" | "on" => Ok(true),
        "false" | "0" | "no" | "off" => Ok(false),
        other => Err(HarnessError::usage(format!("invalid value {other:?} for {key}"))),
    }
}

/// Comma-separated seeds; each item is `k`, `a..b` (half-open) or `a..=b`.
pub fn parse_seeds(text: &str) -> Result<Vec<u64>> {
    let mut seeds = Vec::new();
    for item in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        if let Some((lo, hi)) = item.split_once("..=") {
            let (lo, hi): (u64, u64) = (parse("seeds", lo)?, parse("seeds", hi)?);
            seeds.extend(lo..=hi);
        } else if let Some((lo, hi)) = item.split_once("..") {
            let (lo, hi): (u64, u64) = (parse("seeds", lo)?, parse("seeds", hi)?);
            seeds.extend(lo..hi);
        } else {
            seeds.push(parse("seeds", item)?);
        }
    }
    if seeds.is_empty() {
        return Err(HarnessError::usage("seed list is empty"));
    }
    Ok(seeds)
}

impl Settings {
    /// Sets one key from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.trim().replace('-', "_");
        match key.as_str() {
            "alpha" => self.alpha = Some(parse(&key, value)?),
            "sigma2" => self.sigma2 = Some(parse(&key, value)?),
            "eta" => self.eta = Some(parse(&key, value)?),
            "axis" => self.axis = Some(parse_axis(&key, value)?),
            "grid_start" => self.grid_start = Some(parse(&key, value)?),
            "grid_stop" => self.grid_stop = Some(parse(&key, value)?),
            "grid_points" => self.grid_points = Some(parse(&key, value)?),
            "axis2" => self.axis2 = Some(parse_axis(&key, value)?),
            "grid2_start" => self.grid2_start = Some(parse(&key, value)?),
            "grid2_stop" => self.grid2_stop = Some(parse(&key, value)?),
            "grid2_points" => self.grid2_points = Some(parse(&key, value)?),
            "n" => self.n = Some(parse(&key, value)?),
            "d" => self.d = Some(parse(&key, value)?),
            "m" => self.m = Some(parse(&key, value)?),
            "seeds" => self.seeds = Some(parse_seeds(value)?),
            "out" => self.out = Some(PathBuf::from(value.trim())),
            "summary" => self.summary = Some(PathBuf::from(value.trim())),
            "threads" => self.threads = Some(parse(&key, value)?),
            "quadrature_order" => self.quadrature_order = Some(parse(&key, value)?),
            "quick" => self.quick = Some(parse_bool(&key, value)?),
            "max_iter" => self.max_iter = Some(parse(&key, value)?),
            "tol" => self.tol = Some(parse(&key, value)?),
            other => return Err(HarnessError::usage(format!("unknown configuration key {other:?}"))),
        }
        Ok(())
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        Self::from_text(&text).map_err(|e| HarnessError::Config {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }

    /// Parses JSON when the text starts with `{`, `key = value` lines otherwise.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut settings = Settings::default();
        if text.trim_start().starts_with('{') {
            let object: serde_json::Map<String, serde_json::Value> = serde_json::from_str(text)
                .map_err(|e| HarnessError::usage(format!("malformed JSON: {e}")))?;
            for (key, value) in object {
                let text = match value {
                    serde_json::Value::String(s) => s,
                    serde_json::Value::Array(items) => items
                        .iter()
                        .map(|v| v.as_str().map(str::to_owned).unwrap_or_else(|| v.to_string()))
                        .collect::<Vec<_>>()
                        .join(","),
                    other => other.to_string(),
                };
                settings.set(&key, &text)?;
            }
        } else {
            for (lineno, raw) in text.lines().enumerate() {
                let line = raw.split('#').next().unwrap_or("").trim();
                if line.is_empty() {
                    continue;
                }
                let (key, value) = line.split_once('=').ok_or_else(|| {
                    HarnessError::usage(format!("line {}: expected key = value", lineno + 1))
                })?;
                settings.set(key, value)?;
            }
        }
        Ok(settings)
    }

    /// `self` with every value that `over` sets replaced.
    pub fn overlay(self, over: Settings) -> Settings {
        Settings {
            alpha: over.alpha.or(self.alpha),
            sigma2: over.sigma2.or(self.sigma2),
            eta: over.eta.or(self.eta),
            axis: over.axis.or(self.axis),
            grid_start: over.grid_start.or(self.grid_start),
            grid_stop: over.grid_stop.or(self.grid_stop),
            grid_points: over.grid_points.or(self.grid_points),
            axis2: over.axis2.or(self.axis2),
            grid2_start: over.grid2_start.or(self.grid2_start),
            grid2_stop: over.grid2_stop.or(self.grid2_stop),
            grid2_points: over.grid2_points.or(self.grid2_points),
            n: over.n.or(self.n),
            d: over.d.or(self.d),
            m: over.m.or(self.m),
            seeds: over.seeds.or(self.seeds),
            out: over.out.or(self.out),
            summary: over.summary.or(self.summary),
            threads: over.threads.or(self.threads),
            quadrature_order: over.quadrature_order.or(self.quadrature_order),
            quick: over.quick.or(self.quick),
            max_iter: over.max_iter.or(self.max_iter),
            tol: over.tol.or(self.tol),
        }
    }

    pub fn resolve(self) -> Result<RunConfig> {
        let default_amp = AmpConfig::default();
        let threads = match self.threads {
            Some(0) => return Err(HarnessError::usage("--threads must be at least 1")),
            Some(t) => t,
            None => std::thread::available_parallelism().map_or(1, |n| n.get()),
        };
        let cfg = RunConfig {
            alpha: self.alpha.unwrap_or(defaults::ALPHA),
            sigma2: self.sigma2.unwrap_or(defaults::SIGMA2),
            eta: self.eta.unwrap_or(defaults::ETA),
            axis: self.axis.unwrap_or(SweepAxis::Eta),
            grid: GridSpec {
                start: self.grid_start.unwrap_or(defaults::ETA_GRID.0),
                stop: self.grid_stop.unwrap_or(defaults::ETA_GRID.1),
                points: self.grid_points.unwrap_or(defaults::ETA_GRID.2),
            },
            axis2: self.axis2.unwrap_or(SweepAxis::InvSigma2),
            grid2: GridSpec {
                start: self.grid2_start.unwrap_or(defaults::INV_SIGMA2_GRID.0),
                stop: self.grid2_stop.unwrap_or(defaults::INV_SIGMA2_GRID.1),
                points: self.grid2_points.unwrap_or(defaults::INV_SIGMA2_GRID.2),
            },
            sizes: Sizes {
                n: self.n.unwrap_or(Sizes::DEFAULT.n),
                d: self.d.unwrap_or(Sizes::DEFAULT.d),
                m: self.m.unwrap_or(Sizes::DEFAULT.m),
            },
            seeds: self.seeds.unwrap_or_else(|| defaults::SEEDS.collect()),
            out: self.out,
            summary: self.summary,
            threads,
            quadrature_order: self.quadrature_order,
            quick: self.quick.unwrap_or(false),
            amp: AmpConfig {
                max_iter: self.max_iter.unwrap_or(default_amp.max_iter),
                tol: self.tol.unwrap_or(default_amp.tol),
                ..default_amp
            },
        };
        if cfg.seeds.is_empty() {
            return Err(HarnessError::usage("seed list is empty"));
        }
        Ok(cfg)
    }
}

pub mod defaults {
    pub const ALPHA: f64 = 1.0;
    pub const SIGMA2: f64 = 0.9;
    pub const ETA: f64 = 0.2;
    /// `(start, stop, points)` of the label-fraction sweep.
    pub const ETA_GRID: (f64, f64, usize) = (0.005, 1.0, 200);
    /// `(start, stop, points)` of the inverse-noise sweep.
    pub const INV_SIGMA2_GRID: (f64, f64, usize) = (0.1, 5.0, 50);
    pub const SEEDS: std::ops::RangeInclusive<u64> = 1..=8;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
}

/// Fully resolved configuration shared by every subcommand.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub alpha: f64,
    pub sigma2: f64,
    pub eta: f64,
    pub axis: SweepAxis,
    pub grid: GridSpec,
    pub axis2: SweepAxis,
    pub grid2: GridSpec,
    pub sizes: Sizes,
    pub seeds: Vec<u64>,
    pub out: Option<PathBuf>,
    pub summary: Option<PathBuf>,
    pub threads: usize,
    /// Gauss-Hermite order for the channel integrals; `None` keeps the
    /// default trapezoidal rule.
    pub quadrature_order: Option<usize>,
    pub quick: bool,
    pub amp: AmpConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Settings::default().resolve().expect("defaults are valid")
    }
}

impl RunConfig {
    pub fn params(&self) -> Result<ModelParams> {
        Ok(ModelParams::new(self.alpha, self.sigma2, self.eta)?)
    }

    pub fn channels(&self) -> Result<ScalarChannels> {
        Ok(match self.quadrature_order {
            Some(order) => ScalarChannels::with_order(order)?,
            None => ScalarChannels::default(),
        })
    }

    pub fn sweep(&self) -> Result<SweepSpec> {
        let g = self.grid;
        Ok(SweepSpec::linspace(self.axis, g.start, g.stop, g.points, self.params()?)?)
    }

    pub fn pool(&self) -> Result<rayon::ThreadPool> {
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.threads)
            .build()
            .map_err(|e| HarnessError::usage(format!("cannot start {} worker threads: {e}", self.threads)))
    }
}
