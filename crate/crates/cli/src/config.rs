//! JSON run configuration.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use solwave_core::coupling::{build_coupling, WindowShape};
use solwave_core::systems::{CsParams, CsSystem, GldpcParams, GldpcSystem};
use solwave_core::SystemModel;

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SystemTag {
    Gldpc,
    Cs,
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(untagged)]
enum ParamSpec {
    Value(f64),
    Range(Range),
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
struct Range {
    min: f64,
    max: f64,
    count: usize,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
enum Widths {
    One(usize),
    Many(Vec<usize>),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct Raw {
    system: SystemTag,
    n: Option<u32>,
    e: Option<u32>,
    snr: Option<f64>,
    rho: Option<f64>,
    normalize_signal_power: Option<bool>,
    delta_min: Option<f64>,
    #[serde(rename = "L")]
    l: Option<usize>,
    #[serde(rename = "W")]
    w: Option<Widths>,
    #[serde(rename = "L_per_W")]
    l_per_w: Option<usize>,
    window: Option<WindowShape>,
    eps: Option<ParamSpec>,
    delta: Option<ParamSpec>,
    max_iter: Option<usize>,
    stride: Option<usize>,
    tol: Option<f64>,
    threshold_tol: Option<f64>,
    iterations: Option<usize>,
    points: Option<usize>,
    step_site: Option<i64>,
    right_pin: Option<f64>,
    pool: Option<usize>,
    resolution: Option<usize>,
    workers: Option<usize>,
    out: Option<PathBuf>,
    seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum SystemConfig {
    Gldpc(GldpcParams),
    Cs(CsParams),
}

impl SystemConfig {
    pub fn tag(&self) -> SystemTag {
        match self {
            SystemConfig::Gldpc(_) => SystemTag::Gldpc,
            SystemConfig::Cs(_) => SystemTag::Cs,
        }
    }

    /// Name of the user-facing parameter: `eps` for codes, `delta` for
    /// compressive sensing.
    pub fn param_name(&self) -> &'static str {
        match self {
            SystemConfig::Gldpc(_) => "eps",
            SystemConfig::Cs(_) => "delta",
        }
    }

    /// Generic parameter for a user-facing value.
    pub fn to_eps(&self, p: f64) -> f64 {
        match self {
            SystemConfig::Gldpc(_) => p,
            SystemConfig::Cs(_) => 1.0 / p,
        }
    }

    pub fn from_eps(&self, eps: f64) -> f64 {
        self.to_eps(eps)
    }

    pub fn build(&self) -> Result<Box<dyn SystemModel>> {
        Ok(match self {
            SystemConfig::Gldpc(p) => Box::new(GldpcSystem::new(*p)?),
            SystemConfig::Cs(p) => Box::new(CsSystem::new(*p)?),
        })
    }
}

/// Validated configuration with defaults applied.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub system: SystemConfig,
    /// Chain half-length per window width.
    pub chains: Vec<(usize, usize)>,
    pub window: WindowShape,
    /// User-facing parameter values, ascending.
    pub params: Vec<f64>,
    pub sweep: bool,
    pub max_iter: usize,
    pub stride: usize,
    pub tol: f64,
    pub threshold_tol: f64,
    pub iterations: usize,
    pub points: usize,
    pub step_site: Option<i64>,
    pub right_pin: Option<f64>,
    pub pool: usize,
    pub resolution: usize,
    pub workers: Option<usize>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
}

impl RunConfig {
    pub fn param_name(&self) -> &'static str {
        self.system.param_name()
    }

    /// The single `(W, L)` pair; an error for width sweeps.
    pub fn chain(&self) -> Result<(usize, usize)> {
        match self.chains.as_slice() {
            [one] => Ok(*one),
            _ => Err(CliError::Config("W: a single width is required for this command".into())),
        }
    }

    /// The single parameter value; an error for parameter sweeps.
    pub fn scalar_param(&self) -> Result<f64> {
        match (self.sweep, self.params.as_slice()) {
            (false, [p]) => Ok(*p),
            (_, []) => Err(CliError::Config(format!("{}: missing", self.param_name()))),
            _ => Err(CliError::Config(format!(
                "{}: a scalar value is required for this command",
                self.param_name()
            ))),
        }
    }
}

fn bad(field: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("{field}: {msg}"))
}

fn grid(field: &str, spec: ParamSpec) -> Result<(Vec<f64>, bool)> {
    match spec {
        ParamSpec::Value(v) => Ok((vec![v], false)),
        ParamSpec::Range(r) => {
            if r.count == 0 {
                return Err(bad(field, "empty grid (count = 0)"));
            }
            if !(r.min <= r.max) {
                return Err(bad(field, format!("min {} exceeds max {}", r.min, r.max)));
            }
            if r.count == 1 {
                return Ok((vec![r.min], true));
            }
            let n = (r.count - 1) as f64;
            Ok(((0..r.count).map(|k| r.min + (r.max - r.min) * k as f64 / n).collect(), true))
        }
    }
}

pub fn parse_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_config_str(&text)
}

pub fn parse_config_str(text: &str) -> Result<RunConfig> {
    let raw: Raw = serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
    let system = match raw.system {
        SystemTag::Gldpc => {
            for (name, set) in [
                ("snr", raw.snr.is_some()),
                ("rho", raw.rho.is_some()),
                ("normalize_signal_power", raw.normalize_signal_power.is_some()),
                ("delta_min", raw.delta_min.is_some()),
                ("delta", raw.delta.is_some()),
            ] {
                if set {
                    return Err(bad(name, "not a gldpc field"));
                }
            }
            let p = GldpcParams::new(raw.n.unwrap_or(15), raw.e.unwrap_or(3)).map_err(|e| bad("n/e", e))?;
            SystemConfig::Gldpc(p)
        }
        SystemTag::Cs => {
            for (name, set) in [("n", raw.n.is_some()), ("e", raw.e.is_some()), ("eps", raw.eps.is_some())] {
                if set {
                    return Err(bad(name, "not a cs field (use delta)"));
                }
            }
            let d = CsParams::default();
            let p = CsParams {
                snr: raw.snr.unwrap_or(d.snr),
                rho: raw.rho.unwrap_or(d.rho),
                normalize_signal_power: raw.normalize_signal_power.unwrap_or(false),
                delta_min: raw.delta_min.unwrap_or(d.delta_min),
            };
            p.validate().map_err(|e| bad("snr/rho/delta_min", e))?;
            SystemConfig::Cs(p)
        }
    };

    let name = system.param_name();
    let (params, sweep) = match raw.eps.or(raw.delta) {
        Some(spec) => grid(name, spec)?,
        None => (Vec::new(), false),
    };
    for &p in &params {
        let ok = match system {
            SystemConfig::Gldpc(_) => p > 0.0 && p <= 1.0,
            SystemConfig::Cs(c) => p >= c.delta_min && p <= 1.0,
        };
        if !ok || !p.is_finite() {
            return Err(bad(name, format!("{p} outside the parameter domain")));
        }
    }

    let widths = match raw.w {
        None => vec![4],
        Some(Widths::One(w)) => vec![w],
        Some(Widths::Many(ws)) if ws.is_empty() => return Err(bad("W", "empty list")),
        Some(Widths::Many(ws)) => ws,
    };
    if raw.l.is_some() && raw.l_per_w.is_some() {
        return Err(bad("L_per_W", "give either L or L_per_W"));
    }
    let mut chains = Vec::with_capacity(widths.len());
    for &w in &widths {
        if w < 1 {
            return Err(bad("W", "must be at least 1"));
        }
        let l = match raw.l_per_w {
            Some(k) => k * w,
            None => raw.l.unwrap_or(50),
        };
        if l < w {
            return Err(bad("L", format!("L={l} is smaller than W={w}")));
        }
        chains.push((w, l));
    }
    chains.sort_unstable();
    chains.dedup();
    let window = raw.window.unwrap_or_default();
    for &(w, l) in &chains {
        build_coupling(window.clone(), w, l).map_err(|e| bad("window", e))?;
    }

    let tol = raw.tol.unwrap_or(1e-12);
    if !(tol > 0.0) {
        return Err(bad("tol", "must be positive"));
    }
    let threshold_tol = raw.threshold_tol.unwrap_or(1e-7);
    if !(threshold_tol > 0.0) {
        return Err(bad("threshold_tol", "must be positive"));
    }
    let stride = raw.stride.unwrap_or(20);
    if stride == 0 {
        return Err(bad("stride", "must be at least 1"));
    }
    let points = raw.points.unwrap_or(1001);
    if points < 2 {
        return Err(bad("points", "need at least 2"));
    }
    let iterations = raw.iterations.unwrap_or(180);
    if iterations == 0 {
        return Err(bad("iterations", "must be at least 1"));
    }
    if raw.workers == Some(0) {
        return Err(bad("workers", "must be at least 1"));
    }
    let resolution = raw.resolution.unwrap_or(32);
    if resolution == 0 {
        return Err(bad("resolution", "must be at least 1"));
    }
    let pool = raw.pool.unwrap_or(160);
    if pool < 3 {
        return Err(bad("pool", "need at least 3 profiles"));
    }
    Ok(RunConfig {
        system,
        chains,
        window,
        params,
        sweep,
        max_iter: raw.max_iter.unwrap_or(1_000_000),
        stride,
        tol,
        threshold_tol,
        iterations,
        points,
        step_site: raw.step_site,
        right_pin: raw.right_pin,
        pool,
        resolution,
        workers: raw.workers,
        out: raw.out,
        seed: raw.seed,
    })
}
