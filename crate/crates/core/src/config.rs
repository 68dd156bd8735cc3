//! Run configuration: defaults, flat `key = value` files and overrides.

use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::kpp::KppNonlinearity;
use crate::model::ModelParams;
use crate::spectrum::WeightPair;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EigMethodChoice {
    Auto,
    Dense,
    Arnoldi,
}

/// Every tunable of a run. Serialized as the config echo of each report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub alpha: f64,
    pub k: f64,
    pub c: f64,
    pub l: f64,
    #[serde(rename = "L")]
    pub half_length: f64,
    pub n: usize,
    pub sigma1: f64,
    pub sigma2: f64,
    pub tol: f64,
    pub max_iter: usize,
    /// Tolerance of the bound inequalities in `bounds-check`.
    pub verify_tol: f64,
    pub dt: f64,
    /// Final time; when unset each experiment uses its own.
    pub t_end: Option<f64>,
    pub record_every: usize,
    pub amplitude: f64,
    pub eig_count: usize,
    pub eig_method: EigMethodChoice,
    pub krylov: usize,
    #[serde(rename = "spread_L")]
    pub spread_half_length: f64,
    pub spread_n: usize,
    /// Outputs carry no timestamps or run-dependent data; kept for the echo.
    pub deterministic: bool,
    pub output_dir: String,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            alpha: 0.25,
            k: 0.5,
            c: 1.25,
            l: 0.3,
            half_length: 40.0,
            n: 3999,
            sigma1: 0.05,
            sigma2: 0.5,
            tol: 1e-10,
            max_iter: 200_000,
            verify_tol: 1e-7,
            dt: 0.01,
            t_end: None,
            record_every: 10,
            amplitude: 1e-3,
            eig_count: 6,
            eig_method: EigMethodChoice::Auto,
            krylov: 120,
            spread_half_length: 150.0,
            spread_n: 2999,
            deterministic: true,
            output_dir: "pgwave-out".into(),
        }
    }
}

pub const KEYS: &[&str] = &[
    "alpha",
    "k",
    "c",
    "l",
    "L",
    "n",
    "sigma1",
    "sigma2",
    "tol",
    "max_iter",
    "verify_tol",
    "dt",
    "t_end",
    "record_every",
    "amplitude",
    "eig_count",
    "eig_method",
    "krylov",
    "spread_L",
    "spread_n",
    "deterministic",
    "output_dir",
];

fn bad(key: &str, value: &str) -> Error {
    Error::Config(format!("invalid value '{value}' for key '{key}'"))
}

fn real(key: &str, value: &str) -> Result<f64> {
    value.parse::<f64>().map_err(|_| bad(key, value))
}

fn count(key: &str, value: &str) -> Result<usize> {
    value.parse::<usize>().map_err(|_| bad(key, value))
}

impl RunConfig {
    /// Sets one key. Keys are the names accepted in config files.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        match key.trim() {
            "alpha" => self.alpha = real(key, value)?,
            "k" => self.k = real(key, value)?,
            "c" => self.c = real(key, value)?,
            "l" => self.l = real(key, value)?,
            "L" => self.half_length = real(key, value)?,
            "n" => self.n = count(key, value)?,
            "sigma1" => self.sigma1 = real(key, value)?,
            "sigma2" => self.sigma2 = real(key, value)?,
            "tol" => self.tol = real(key, value)?,
            "max_iter" => self.max_iter = count(key, value)?,
            "verify_tol" => self.verify_tol = real(key, value)?,
            "dt" => self.dt = real(key, value)?,
            "t_end" => self.t_end = Some(real(key, value)?),
            "record_every" => self.record_every = count(key, value)?,
            "amplitude" => self.amplitude = real(key, value)?,
            "eig_count" => self.eig_count = count(key, value)?,
            "eig_method" => {
                self.eig_method = match value {
                    "auto" => EigMethodChoice::Auto,
                    "dense" => EigMethodChoice::Dense,
                    "arnoldi" => EigMethodChoice::Arnoldi,
                    _ => return Err(bad(key, value)),
                }
            }
            "krylov" => self.krylov = count(key, value)?,
            "spread_L" => self.spread_half_length = real(key, value)?,
            "spread_n" => self.spread_n = count(key, value)?,
            "deterministic" => self.deterministic = value.parse().map_err(|_| bad(key, value))?,
            "output_dir" => self.output_dir = value.to_string(),
            other => return Err(Error::Config(format!("unknown key '{other}'"))),
        }
        Ok(())
    }

    /// Applies `key = value` lines; `#` starts a comment.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (no, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", no + 1)))?;
            self.set(k, v)?;
        }
        Ok(())
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let mut cfg = Self::default();
        cfg.apply_text(&std::fs::read_to_string(path)?)?;
        Ok(cfg)
    }

    pub fn params(&self) -> Result<ModelParams> {
        ModelParams::new(self.alpha, self.k)
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.half_length, self.n)
    }

    pub fn weights(&self) -> Result<WeightPair> {
        WeightPair::new(self.sigma1, self.sigma2)
    }

    /// Checks everything that does not depend on the subcommand.
    pub fn validate(&self) -> Result<ModelParams> {
        let p = self.params()?;
        self.grid()?;
        Grid::new(self.spread_half_length, self.spread_n)?;
        self.weights()?;
        KppNonlinearity::lower(p, self.l)?;
        if !(self.c.is_finite() && self.c > 0.0) {
            return Err(Error::ParameterOutOfRange {
                name: "c",
                value: self.c,
                reason: "need a positive speed".into(),
            });
        }
        if !(self.tol >= 0.0) || !(self.verify_tol >= 0.0) {
            return Err(Error::Config("tolerances must be nonnegative".into()));
        }
        if self.eig_count == 0 || self.krylov < 2 * self.eig_count {
            return Err(Error::Config("need eig_count >= 1 and krylov >= 2·eig_count".into()));
        }
        if !(self.dt > 0.0 && self.dt <= crate::dynamics::MAX_DT) {
            return Err(Error::ParameterOutOfRange {
                name: "dt",
                value: self.dt,
                reason: format!("need 0 < dt <= {}", crate::dynamics::MAX_DT),
            });
        }
        if self.record_every == 0 {
            return Err(Error::Config("record_every must be at least 1".into()));
        }
        Ok(p)
    }

    /// `key=value` path segment as used in sweep output directories.
    pub fn segment(&self, key: &str) -> Result<String> {
        let json = serde_json::to_value(self)?;
        let v = json
            .get(key)
            .ok_or_else(|| Error::Config(format!("unknown key '{key}'")))?;
        let text = match v {
            serde_json::Value::String(s) => s.clone(),
            other => other.to_string(),
        };
        Ok(format!("{key}={text}"))
    }
}

/// Cartesian product of the listed values, first key varying slowest.
pub fn sweep_points(base: &RunConfig, axes: &[(String, Vec<String>)]) -> Result<Vec<RunConfig>> {
    let mut points = vec![base.clone()];
    for (key, values) in axes {
        if values.is_empty() {
            return Err(Error::Config(format!("sweep axis '{key}' has no values")));
        }
        let mut next = Vec::with_capacity(points.len() * values.len());
        for pt in &points {
            for v in values {
                let mut q = pt.clone();
                q.set(key, v)?;
                next.push(q);
            }
        }
        points = next;
    }
    Ok(points)
}

/// Parses `key=v1,v2,...`.
pub fn parse_axis(spec: &str) -> Result<(String, Vec<String>)> {
    let (k, vs) = spec
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("sweep axis '{spec}' must look like key=v1,v2")))?;
    let key = k.trim().to_string();
    if !KEYS.contains(&key.as_str()) {
        return Err(Error::Config(format!("unknown key '{key}'")));
    }
    let values: Vec<String> = vs.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect();
    Ok((key, values))
}
