//! Experiment configuration: built-in defaults, overlaid by a TOML file,
//! overlaid by command-line flags.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fredholm::{
    DetOptions, FugacityVector, ProcessSpec, ThinningVector, MAX_NODES_DEFAULT, TOL_DEFAULT,
};

/// How the per-window vector is interpreted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VectorMode {
    /// Thinning parameters `s_j ∈ [0, ∞)`.
    Thinning,
    /// Log-fugacities `u_j`.
    Fugacity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Spacing {
    Geometric,
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            _ => Err(Error::config(format!(
                "unknown output format '{s}' (csv, json)"
            ))),
        }
    }
}

/// Sweep over r, written `start:stop:count[:geometric|linear]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct RGrid {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
    pub spacing: Spacing,
}

impl RGrid {
    pub fn single(r: f64) -> Result<Self> {
        let g = Self {
            start: r,
            stop: r,
            count: 1,
            spacing: Spacing::Geometric,
        };
        g.validate()?;
        Ok(g)
    }

    fn validate(&self) -> Result<()> {
        let ok = self.start.is_finite()
            && self.stop.is_finite()
            && self.start > 0.0
            && self.count >= 1
            && if self.count == 1 {
                self.stop == self.start
            } else {
                self.stop > self.start
            };
        if ok {
            Ok(())
        } else {
            Err(Error::config(format!(
                "r-grid must be positive and increasing with at least one point, got {self}"
            )))
        }
    }

    /// Grid points in increasing order, rounded to 12 significant digits
    /// so that e.g. `100:6400:4` yields exactly 400 and 1600.
    pub fn points(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.start];
        }
        let last = (self.count - 1) as f64;
        (0..self.count)
            .map(|i| {
                if i + 1 == self.count {
                    return self.stop;
                }
                let t = i as f64 / last;
                let v = match self.spacing {
                    Spacing::Geometric => self.start * (self.stop / self.start).powf(t),
                    Spacing::Linear => self.start + (self.stop - self.start) * t,
                };
                round_significant(v, 12)
            })
            .collect()
    }
}

fn round_significant(v: f64, digits: i32) -> f64 {
    let scale = 10f64.powi(digits - 1 - v.abs().log10().floor() as i32);
    (v * scale).round() / scale
}

impl FromStr for RGrid {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').map(str::trim).collect();
        if !(3..=4).contains(&parts.len()) {
            return Err(Error::config(format!(
                "r-grid '{s}' must look like start:stop:count[:geometric|linear]"
            )));
        }
        let num = |p: &str| {
            p.parse::<f64>()
                .map_err(|_| Error::config(format!("bad number '{p}' in r-grid '{s}'")))
        };
        let count = parts[2]
            .parse::<usize>()
            .map_err(|_| Error::config(format!("bad count '{}' in r-grid '{s}'", parts[2])))?;
        let spacing = match parts.get(3).copied() {
            None | Some("geometric") => Spacing::Geometric,
            Some("linear") => Spacing::Linear,
            Some(other) => {
                return Err(Error::config(format!(
                    "unknown spacing '{other}' (geometric, linear)"
                )))
            }
        };
        let g = Self {
            start: num(parts[0])?,
            stop: num(parts[1])?,
            count,
            spacing,
        };
        g.validate()?;
        Ok(g)
    }
}

impl TryFrom<String> for RGrid {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<RGrid> for String {
    fn from(g: RGrid) -> String {
        g.to_string()
    }
}

impl fmt::Display for RGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sp = match self.spacing {
            Spacing::Geometric => "geometric",
            Spacing::Linear => "linear",
        };
        write!(f, "{}:{}:{}:{}", self.start, self.stop, self.count, sp)
    }
}

/// One layer of settings; unset keys fall through to the layer below.
///
/// This is both the TOML file schema and the shape the CLI builds from its
/// flags. `s` and `u` are mutually exclusive, as are `r` and `r_grid`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigLayer {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub s: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub u: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r_grid: Option<RGrid>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_nodes: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub format: Option<OutputFormat>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub jobs: Option<usize>,
}

impl ConfigLayer {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::config(format!("config file: {e}")))
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    fn check(&self) -> Result<()> {
        if self.s.is_some() && self.u.is_some() {
            return Err(Error::config("give either s or u, not both"));
        }
        if self.r.is_some() && self.r_grid.is_some() {
            return Err(Error::config("give either r or r_grid, not both"));
        }
        Ok(())
    }

    /// `top` wins wherever it sets a key.
    pub fn overlay(self, top: ConfigLayer) -> Result<ConfigLayer> {
        self.check()?;
        top.check()?;
        let (s, u) = if top.s.is_some() || top.u.is_some() {
            (top.s, top.u)
        } else {
            (self.s, self.u)
        };
        let (r, r_grid) = if top.r.is_some() || top.r_grid.is_some() {
            (top.r, top.r_grid)
        } else {
            (self.r, self.r_grid)
        };
        Ok(ConfigLayer {
            alpha: top.alpha.or(self.alpha),
            x: top.x.or(self.x),
            s,
            u,
            r,
            r_grid,
            tol: top.tol.or(self.tol),
            max_nodes: top.max_nodes.or(self.max_nodes),
            out: top.out.or(self.out),
            format: top.format.or(self.format),
            jobs: top.jobs.or(self.jobs),
        })
    }
}

/// A fully resolved and validated experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub alpha: f64,
    pub thresholds: Vec<f64>,
    pub mode: VectorMode,
    pub values: Vec<f64>,
    pub r_grid: RGrid,
    pub tol: f64,
    /// Node-doubling cap per window.
    pub max_nodes: usize,
    pub out: Option<PathBuf>,
    pub format: OutputFormat,
    pub jobs: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            alpha: 0.0,
            thresholds: vec![1.0],
            mode: VectorMode::Fugacity,
            values: vec![1.0],
            r_grid: RGrid {
                start: 100.0,
                stop: 1600.0,
                count: 5,
                spacing: Spacing::Geometric,
            },
            tol: TOL_DEFAULT,
            max_nodes: MAX_NODES_DEFAULT,
            out: None,
            format: OutputFormat::Csv,
            jobs: std::thread::available_parallelism().map_or(1, |n| n.get()),
        }
    }
}

impl ExperimentConfig {
    /// Defaults overlaid by each layer in turn, then validated.
    pub fn resolve(layers: impl IntoIterator<Item = ConfigLayer>) -> Result<Self> {
        let mut merged = ConfigLayer::default();
        for layer in layers {
            merged = merged.overlay(layer)?;
        }
        Self::from_layer(merged)
    }

    fn from_layer(l: ConfigLayer) -> Result<Self> {
        let d = Self::default();
        let thresholds = l.x.unwrap_or(d.thresholds);
        let (mode, values) = match (l.s, l.u) {
            (Some(s), None) => (VectorMode::Thinning, s),
            (None, Some(u)) => (VectorMode::Fugacity, u),
            _ => (d.mode, vec![d.values[0]; thresholds.len()]),
        };
        let r_grid = match (l.r, l.r_grid) {
            (Some(r), None) => RGrid::single(r)?,
            (None, Some(g)) => g,
            _ => d.r_grid,
        };
        let cfg = Self {
            alpha: l.alpha.unwrap_or(d.alpha),
            thresholds,
            mode,
            values,
            r_grid,
            tol: l.tol.unwrap_or(d.tol),
            max_nodes: l.max_nodes.unwrap_or(d.max_nodes),
            out: l.out,
            format: l.format.unwrap_or(d.format),
            jobs: l.jobs.unwrap_or(d.jobs),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Every key set, in the file schema; what `--show-config` prints.
    pub fn to_layer(&self) -> ConfigLayer {
        let (s, u) = match self.mode {
            VectorMode::Thinning => (Some(self.values.clone()), None),
            VectorMode::Fugacity => (None, Some(self.values.clone())),
        };
        ConfigLayer {
            alpha: Some(self.alpha),
            x: Some(self.thresholds.clone()),
            s,
            u,
            r: None,
            r_grid: Some(self.r_grid),
            tol: Some(self.tol),
            max_nodes: Some(self.max_nodes),
            out: self.out.clone(),
            format: Some(self.format),
            jobs: Some(self.jobs),
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(&self.to_layer()).expect("config layer serialises")
    }

    pub fn validate(&self) -> Result<()> {
        let spec = self.spec()?;
        self.r_grid.validate()?;
        if self.values.len() != spec.m() {
            return Err(Error::config(format!(
                "{} vector entries for {} thresholds",
                self.values.len(),
                spec.m()
            )));
        }
        match self.mode {
            VectorMode::Thinning => {
                ThinningVector::new(self.values.clone())?;
            }
            VectorMode::Fugacity => {
                FugacityVector::new(self.values.clone())?;
            }
        }
        if !self.tol.is_finite() || self.tol <= 0.0 {
            return Err(Error::config(format!(
                "tol must be positive, got {}",
                self.tol
            )));
        }
        if self.max_nodes < 8 {
            return Err(Error::config(format!(
                "max_nodes must be at least 8, got {}",
                self.max_nodes
            )));
        }
        if self.jobs == 0 {
            return Err(Error::config("jobs must be at least 1"));
        }
        Ok(())
    }

    pub fn det_options(&self) -> DetOptions {
        DetOptions {
            tol: self.tol,
            max_nodes: self.max_nodes,
            ..DetOptions::default()
        }
    }

    pub fn spec(&self) -> Result<ProcessSpec> {
        ProcessSpec::new(self.alpha, self.thresholds.clone())
    }

    /// The thinning vector, whichever mode the values were given in.
    pub fn thinning(&self) -> Result<ThinningVector> {
        match self.mode {
            VectorMode::Thinning => ThinningVector::new(self.values.clone()),
            VectorMode::Fugacity => Ok(FugacityVector::new(self.values.clone())?.to_thinning()),
        }
    }
}
