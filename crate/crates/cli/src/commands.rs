use std::io::Write;

use abprop_core::ab_model::{t_transform_eps, PhysParams};
use abprop_core::lattice::{GridFunction, TimeGrid};
use abprop_core::perturbation::{closed_form_propagator, series_global_bound, series_propagator, AtomicMeasure};
use abprop_core::propagators::{poisson_comb_lhs, poisson_comb_rhs, propagator_no_winding, propagator_winding};
use abprop_core::verify::{run_suite, SuiteResult, VerifyConfig, SUITES};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::config::{ConfigError, Observable, RunConfig, SweepVar};
use crate::output::{Cell, Table};

#[derive(Debug)]
pub enum CliError {
    Config(ConfigError),
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(e) => e.fmt(f),
            CliError::Runtime(msg) => write!(f, "error: {msg}"),
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e)
    }
}

impl From<abprop_core::Error> for CliError {
    fn from(e: abprop_core::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

/// Runs the selected suites; returns whether all passed.
pub fn cmd_verify(cfg: &RunConfig, suite: Option<&str>, out: &mut dyn Write) -> Result<(Table, bool), CliError> {
    let names: Vec<&str> = match suite {
        Some(s) if SUITES.contains(&s) => vec![s],
        Some(s) => {
            return Err(ConfigError::new("suite", format!("unknown suite `{s}`; expected one of {}", SUITES.join(", "))).into())
        }
        None => SUITES.to_vec(),
    };
    let vcfg = VerifyConfig {
        params: cfg.params,
        n_cells: cfg.n_cells,
        eps: cfg.eps.clone(),
        sigma: cfg.sigma[0],
        seed: cfg.seed,
    };
    let results: Vec<SuiteResult> = names
        .par_iter()
        .map(|s| run_suite(s, &vcfg))
        .collect::<Result<_, _>>()?;
    let mut table = Table::new(vec!["suite", "passed", "detail"]);
    let width = names.iter().map(|s| s.len()).max().unwrap_or(0);
    for r in &results {
        let tag = if r.passed { "PASS" } else { "FAIL" };
        writeln!(out, "[{tag}] {:<width$}  {}", r.name, r.detail)?;
        table.push(vec![Cell::Text(r.name.clone()), Cell::Flag(Some(r.passed)), Cell::Text(r.detail.clone())]);
    }
    let all = results.iter().all(|r| r.passed);
    writeln!(out, "{} of {} suites passed", results.iter().filter(|r| r.passed).count(), results.len())?;
    Ok((table, all))
}

fn point_params(cfg: &RunConfig, var: SweepVar, v: f64) -> (PhysParams, f64) {
    let mut p = cfg.params;
    let mut eps = cfg.eps[0];
    match var {
        SweepVar::Phi => p.phi = v,
        SweepVar::Alpha => p = p.with_alpha(v),
        SweepVar::T => p.t = v,
        SweepVar::P0 => {
            // p1 follows p0 when the base configuration conserves momentum
            if p.p1 == p.p0 {
                p.p1 = v;
            }
            p.p0 = v;
        }
        SweepVar::P1 => p.p1 = v,
        SweepVar::Eps => eps = v,
    }
    (p, eps)
}

fn sweep_value(cfg: &RunConfig, var: SweepVar, v: f64) -> Result<(Complex64, Option<bool>), CliError> {
    let (p, eps) = point_params(cfg, var, v);
    match var {
        SweepVar::P1 | SweepVar::Eps => {
            let grid = TimeGrid::new(p.t0, p.t, cfg.n_cells)?;
            Ok((t_transform_eps(&p, &grid, eps, &GridFunction::zeros(grid, 2))?, None))
        }
        _ => {
            let value = match cfg.observable {
                Observable::Limit => propagator_no_winding(&p)?.phase,
                Observable::Winding => propagator_winding(&p, cfg.l_max)?.weighted_phase(),
            };
            let detectable = matches!(var, SweepVar::Phi | SweepVar::Alpha).then(|| {
                let a = p.alpha();
                (a - a.round()).abs() > 1e-9
            });
            Ok((value, detectable))
        }
    }
}

pub fn cmd_sweep(cfg: &RunConfig) -> Result<Table, CliError> {
    let spec = cfg
        .sweep
        .ok_or_else(|| ConfigError::new("sweep", "no sweep given (use --sweep VAR:MIN:MAX:STEPS)"))?;
    let values = spec.values();
    for &v in &values {
        let (p, eps) = point_params(cfg, spec.var, v);
        let probe = RunConfig { params: p, eps: vec![eps], ..cfg.clone() };
        probe
            .validate()
            .map_err(|e| ConfigError::new("sweep", format!("at {} = {v}: {e}", spec.var.name())))?;
    }
    let rows: Vec<(Complex64, Option<bool>)> = values
        .par_iter()
        .map(|&v| sweep_value(cfg, spec.var, v))
        .collect::<Result<_, _>>()?;
    let mut table = Table::new(vec![
        "index",
        "variable",
        "value",
        "phase_re",
        "phase_im",
        "phase_arg",
        "magnitude",
        "detectable",
    ]);
    for (i, (v, (z, det))) in values.iter().zip(rows).enumerate() {
        table.push(vec![
            Cell::Int(i as i64),
            Cell::Text(spec.var.name().to_string()),
            Cell::Float(*v),
            Cell::Float(z.re),
            Cell::Float(z.im),
            Cell::Float(z.arg()),
            Cell::Float(z.norm()),
            Cell::Flag(det),
        ]);
    }
    Ok(table)
}

pub fn load_measure(cfg: &RunConfig) -> Result<AtomicMeasure, CliError> {
    match &cfg.measure {
        None => Ok(AtomicMeasure::point(0.0, Complex64::new(1.0, 0.0))),
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| ConfigError::new("measure", format!("cannot read {}: {e}", path.display())))?;
            AtomicMeasure::parse(&text).map_err(|e| ConfigError::new("measure", format!("{}: {e}", path.display())).into())
        }
    }
}

pub fn cmd_series(cfg: &RunConfig) -> Result<Table, CliError> {
    let m = load_measure(cfg)?;
    let p = &cfg.params;
    let n_max = if m.is_empty() { 0 } else { cfg.n_max };
    let exact = closed_form_propagator(p, &m)?.phase;
    let global = series_global_bound(p, &m, p.p1.abs() / (p.m0 * p.radius))?;
    let mut table = Table::new(vec!["N", "partial_re", "partial_im", "error", "remainder_bound", "global_bound"]);
    for n in 0..=n_max {
        let s = series_propagator(p, &m, n)?;
        let z = s.value.phase;
        table.push(vec![
            Cell::Int(n as i64),
            Cell::Float(z.re),
            Cell::Float(z.im),
            Cell::Float((z - exact).norm()),
            Cell::Float(s.report.remainder_bound),
            Cell::Float(global),
        ]);
    }
    Ok(table)
}

pub fn cmd_poisson(cfg: &RunConfig) -> Result<Table, CliError> {
    let (t, s, n) = (cfg.comb_period, cfg.comb_sigma, cfg.comb_points);
    let mut table = Table::new(vec!["index", "x", "lhs", "rhs", "abs_diff"]);
    for i in 0..n {
        let x = if n == 1 { 0.0 } else { -t + 2.0 * t * i as f64 / (n - 1) as f64 };
        let lhs = poisson_comb_lhs(x, t, s, cfg.comb_terms)?;
        let rhs = poisson_comb_rhs(x, t, s, cfg.comb_terms)?;
        table.push(vec![
            Cell::Int(i as i64),
            Cell::Float(x),
            Cell::Float(lhs),
            Cell::Float(rhs),
            Cell::Float((lhs - rhs).abs()),
        ]);
    }
    Ok(table)
}
