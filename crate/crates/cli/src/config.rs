//! Layered run configuration: built-in defaults, then a flat `key = value`
//! file, then command-line overrides.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use abprop_core::ab_model::PhysParams;

/// Configuration problem; always names the offending field.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub field: String,
    pub msg: String,
}

impl ConfigError {
    pub fn new(field: impl Into<String>, msg: impl Into<String>) -> Self {
        Self {
            field: field.into(),
            msg: msg.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config error in `{}`: {}", self.field, self.msg)
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => Err(format!("expected csv or json, got `{s}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepVar {
    Phi,
    T,
    P0,
    P1,
    Eps,
    Alpha,
}

impl SweepVar {
    pub fn name(self) -> &'static str {
        match self {
            SweepVar::Phi => "phi",
            SweepVar::T => "t",
            SweepVar::P0 => "p0",
            SweepVar::P1 => "p1",
            SweepVar::Eps => "eps",
            SweepVar::Alpha => "alpha",
        }
    }
}

impl FromStr for SweepVar {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Ok(match s {
            "phi" => SweepVar::Phi,
            "t" => SweepVar::T,
            "p0" => SweepVar::P0,
            "p1" => SweepVar::P1,
            "eps" => SweepVar::Eps,
            "alpha" => SweepVar::Alpha,
            _ => return Err(format!("unknown sweep variable `{s}` (phi, t, p0, p1, eps, alpha)")),
        })
    }
}

/// `VAR:MIN:MAX:STEPS[:log]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepSpec {
    pub var: SweepVar,
    pub min: f64,
    pub max: f64,
    pub steps: usize,
    pub log: bool,
}

impl SweepSpec {
    pub fn values(&self) -> Vec<f64> {
        if self.steps == 1 {
            return vec![self.min];
        }
        let last = self.steps - 1;
        (0..self.steps)
            .map(|i| {
                let u = i as f64 / last as f64;
                if i == last {
                    self.max
                } else if self.log {
                    self.min * (self.max / self.min).powf(u)
                } else {
                    self.min + u * (self.max - self.min)
                }
            })
            .collect()
    }
}

impl FromStr for SweepSpec {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        if !(4..=5).contains(&parts.len()) {
            return Err(format!("expected VAR:MIN:MAX:STEPS[:log], got `{s}`"));
        }
        let var: SweepVar = parts[0].parse()?;
        let num = |x: &str| x.parse::<f64>().map_err(|_| format!("bad number `{x}`"));
        let (min, max) = (num(parts[1])?, num(parts[2])?);
        let steps: usize = parts[3].parse().map_err(|_| format!("bad step count `{}`", parts[3]))?;
        let log = match parts.get(4) {
            None => false,
            Some(&"log") => true,
            Some(other) => return Err(format!("unknown spacing `{other}`")),
        };
        if steps == 0 {
            return Err("steps must be at least 1".into());
        }
        if !min.is_finite() || !max.is_finite() {
            return Err("bounds must be finite".into());
        }
        if log && !(min > 0.0 && max > 0.0) {
            return Err("log spacing needs positive bounds".into());
        }
        Ok(Self { var, min, max, steps, log })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Observable {
    /// Phase of the no-winding propagator.
    Limit,
    /// Winding phase times the truncated comb.
    Winding,
}

impl FromStr for Observable {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "limit" => Ok(Observable::Limit),
            "winding" => Ok(Observable::Winding),
            _ => Err(format!("expected limit or winding, got `{s}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub params: PhysParams,
    pub n_cells: usize,
    pub eps: Vec<f64>,
    pub sigma: Vec<f64>,
    pub sweep: Option<SweepSpec>,
    pub observable: Observable,
    pub l_max: u32,
    pub measure: Option<PathBuf>,
    pub format: Format,
    pub seed: u64,
    pub n_max: usize,
    pub comb_period: f64,
    pub comb_sigma: f64,
    pub comb_points: usize,
    pub comb_terms: u32,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            params: PhysParams::default(),
            n_cells: 32,
            eps: vec![1e-2, 1e-3],
            sigma: vec![1e-3],
            sweep: None,
            observable: Observable::Limit,
            l_max: 10,
            measure: None,
            format: Format::Csv,
            seed: 0,
            n_max: 25,
            comb_period: 1.0,
            comb_sigma: 0.1,
            comb_points: 1000,
            comb_terms: 12,
        }
    }
}

fn parse_field<T: FromStr>(key: &str, value: &str) -> Result<T, ConfigError>
where
    T::Err: fmt::Display,
{
    value
        .parse::<T>()
        .map_err(|e| ConfigError::new(key, format!("cannot parse `{value}`: {e}")))
}

fn parse_list(key: &str, value: &str) -> Result<Vec<f64>, ConfigError> {
    value.split(',').map(|v| parse_field::<f64>(key, v.trim())).collect()
}

impl RunConfig {
    /// Applies one `key = value` setting. `alpha` is stored as flux, so it
    /// uses whatever `e`, `hbar` and `c` are set at that point.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let value = value.trim();
        let p = &mut self.params;
        match key {
            "m0" => p.m0 = parse_field(key, value)?,
            "R" | "radius" => p.radius = parse_field(key, value)?,
            "hbar" => p.hbar = parse_field(key, value)?,
            "c" => p.c = parse_field(key, value)?,
            "e" => p.e = parse_field(key, value)?,
            "phi" => p.phi = parse_field(key, value)?,
            "alpha" => *p = p.with_alpha(parse_field(key, value)?),
            "a" => p.a = parse_field(key, value)?,
            "p0" => p.p0 = parse_field(key, value)?,
            "p1" => p.p1 = parse_field(key, value)?,
            "t0" => p.t0 = parse_field(key, value)?,
            "t" => p.t = parse_field(key, value)?,
            "n_cells" => self.n_cells = parse_field(key, value)?,
            "eps" => self.eps = parse_list(key, value)?,
            "sigma" => self.sigma = parse_list(key, value)?,
            "sweep" => self.sweep = Some(parse_field(key, value)?),
            "observable" => self.observable = parse_field(key, value)?,
            "l_max" => self.l_max = parse_field(key, value)?,
            "measure" => self.measure = Some(PathBuf::from(value)),
            "format" => self.format = parse_field(key, value)?,
            "seed" => self.seed = parse_field(key, value)?,
            "n_max" => self.n_max = parse_field(key, value)?,
            "comb_period" => self.comb_period = parse_field(key, value)?,
            "comb_sigma" => self.comb_sigma = parse_field(key, value)?,
            "comb_points" => self.comb_points = parse_field(key, value)?,
            "comb_terms" => self.comb_terms = parse_field(key, value)?,
            _ => return Err(ConfigError::new(key, "unknown key")),
        }
        Ok(())
    }

    /// Reads `key = value` lines; `#` starts a comment line.
    pub fn apply_text(&mut self, text: &str) -> Result<(), ConfigError> {
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| ConfigError::new(format!("line {}", idx + 1), "expected `key = value`"))?;
            self.set(key.trim(), value)?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<(), ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::new("config", format!("cannot read {}: {e}", path.display())))?;
        self.apply_text(&text)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let p = &self.params;
        for (name, v) in [("m0", p.m0), ("R", p.radius), ("hbar", p.hbar), ("c", p.c)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(ConfigError::new(name, format!("must be positive, got {v}")));
            }
        }
        if p.e == 0.0 || !p.e.is_finite() {
            return Err(ConfigError::new("e", "must be nonzero and finite"));
        }
        if !(p.t0 >= 0.0) {
            return Err(ConfigError::new("t0", format!("must be nonnegative, got {}", p.t0)));
        }
        if !(p.t > p.t0) {
            return Err(ConfigError::new("t", format!("must exceed t0 = {}, got {}", p.t0, p.t)));
        }
        if p.a == 0.0 || !(p.a.abs() <= p.t) {
            return Err(ConfigError::new("a", format!("must satisfy a != 0 and |a| <= t, got {}", p.a)));
        }
        for (name, v) in [("phi", p.phi), ("p0", p.p0), ("p1", p.p1)] {
            if !v.is_finite() {
                return Err(ConfigError::new(name, "must be finite"));
            }
        }
        if self.n_cells == 0 {
            return Err(ConfigError::new("n_cells", "must be positive"));
        }
        if self.eps.is_empty() {
            return Err(ConfigError::new("eps", "list is empty"));
        }
        if let Some(e) = self.eps.iter().find(|e| !(**e > 0.0)) {
            return Err(ConfigError::new("eps", format!("must be positive, got {e}")));
        }
        if self.sigma.is_empty() {
            return Err(ConfigError::new("sigma", "list is empty"));
        }
        if let Some(s) = self.sigma.iter().find(|s| !(**s > 0.0)) {
            return Err(ConfigError::new("sigma", format!("must be positive, got {s}")));
        }
        if !(self.comb_period > 0.0) {
            return Err(ConfigError::new("comb_period", "must be positive"));
        }
        if !(self.comb_sigma > 0.0) {
            return Err(ConfigError::new("comb_sigma", "must be positive"));
        }
        if self.comb_points == 0 {
            return Err(ConfigError::new("comb_points", "must be positive"));
        }
        Ok(())
    }
}
