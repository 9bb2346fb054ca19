//! wasm-bindgen entry points for the static demo page in `www/`.
//!
//! Every export takes and returns JSON text so the page needs no glue beyond
//! `JSON.parse`. The `*_json` functions are the plain Rust versions.

use serde::{Deserialize, Serialize};
use solwave_core::coupling::{build_coupling, run_coupled, CoupledProfile};
use solwave_core::systems::{CsParams, CsSystem, GldpcParams, GldpcSystem};
use solwave_core::{find_fixed_points, kink_position, single_potential, thresholds, QuadratureConfig, SystemModel};
use wasm_bindgen::prelude::*;

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "system", rename_all = "snake_case", deny_unknown_fields)]
enum SystemInput {
    Gldpc {
        #[serde(default = "default_n")]
        n: u32,
        #[serde(default = "default_e")]
        e: u32,
    },
    Cs {
        #[serde(default = "default_snr")]
        snr: f64,
        #[serde(default = "default_rho")]
        rho: f64,
        #[serde(default)]
        normalize_signal_power: bool,
    },
}

fn default_n() -> u32 {
    15
}
fn default_e() -> u32 {
    3
}
fn default_snr() -> f64 {
    1e5
}
fn default_rho() -> f64 {
    0.1
}

impl SystemInput {
    fn build(&self) -> Result<Box<dyn SystemModel>, String> {
        let sys: Box<dyn SystemModel> = match *self {
            SystemInput::Gldpc { n, e } => {
                Box::new(GldpcSystem::new(GldpcParams::new(n, e).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?)
            }
            SystemInput::Cs {
                snr,
                rho,
                normalize_signal_power,
            } => Box::new(
                CsSystem::new(CsParams {
                    snr,
                    rho,
                    normalize_signal_power,
                    ..CsParams::default()
                })
                .map_err(|e| e.to_string())?,
            ),
        };
        Ok(sys)
    }

    /// Generic parameter for the user-facing one (`eps` or `delta`).
    fn to_eps(&self, p: f64) -> f64 {
        match self {
            SystemInput::Gldpc { .. } => p,
            SystemInput::Cs { .. } => 1.0 / p,
        }
    }
}

#[derive(Deserialize)]
struct Request {
    #[serde(flatten)]
    system: SystemInput,
    #[serde(default)]
    param: Option<f64>,
    #[serde(default = "default_points")]
    points: usize,
    #[serde(default = "default_w", rename = "W")]
    w: usize,
    #[serde(default = "default_l", rename = "L")]
    l: usize,
    #[serde(default = "default_iterations")]
    iterations: usize,
    #[serde(default = "default_stride")]
    stride: usize,
}

fn default_points() -> usize {
    401
}
fn default_w() -> usize {
    4
}
fn default_l() -> usize {
    50
}
fn default_iterations() -> usize {
    180
}
fn default_stride() -> usize {
    20
}

fn parse(req: &str) -> Result<Request, String> {
    serde_json::from_str(req).map_err(|e| format!("request: {e}"))
}

fn param(r: &Request) -> Result<f64, String> {
    r.param.ok_or_else(|| "request: missing `param`".to_string())
}

#[derive(Serialize)]
struct PotentialOut {
    x: Vec<f64>,
    u: Vec<f64>,
    x_good: f64,
    x_unst: Option<f64>,
    x_bad: Option<f64>,
}

/// Single potential on `[0, x_max]` with the fixed points marked.
pub fn potential_json(req: &str) -> Result<String, String> {
    let r = parse(req)?;
    let eps = r.system.to_eps(param(&r)?);
    let sys = r.system.build()?;
    let sys = sys.as_ref();
    let n = r.points.max(2);
    let xm = sys.x_max(eps);
    let q = QuadratureConfig::default();
    let x: Vec<f64> = (0..n).map(|k| xm * k as f64 / (n - 1) as f64).collect();
    let u = x
        .iter()
        .map(|&v| single_potential(sys, v, eps, &q))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| e.to_string())?;
    let fp = find_fixed_points(sys, eps, 1e-12).map_err(|e| e.to_string())?;
    let out = PotentialOut {
        x,
        u,
        x_good: fp.x_good,
        x_unst: fp.x_unst,
        x_bad: fp.x_bad,
    };
    serde_json::to_string(&out).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct ThresholdsOut {
    param_name: &'static str,
    s: f64,
    c: f64,
}

/// Algorithmic and potential thresholds in the user-facing parameter.
pub fn thresholds_json(req: &str) -> Result<String, String> {
    let r = parse(req)?;
    let sys = r.system.build()?;
    let t = thresholds(sys.as_ref(), 1e-7).map_err(|e| e.to_string())?;
    let out = match r.system {
        SystemInput::Gldpc { .. } => ThresholdsOut {
            param_name: "eps",
            s: t.eps_s,
            c: t.eps_c,
        },
        SystemInput::Cs { .. } => ThresholdsOut {
            param_name: "delta",
            s: 1.0 / t.eps_s,
            c: 1.0 / t.eps_c,
        },
    };
    serde_json::to_string(&out).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct Snapshot {
    t: usize,
    kink: Option<f64>,
    x: Vec<f64>,
}

#[derive(Serialize)]
struct SimulateOut {
    sites: Vec<i64>,
    snapshots: Vec<Snapshot>,
}

/// Coupled chain from a step at site 0, snapshots every `stride` iterations.
pub fn simulate_json(req: &str) -> Result<String, String> {
    let r = parse(req)?;
    let eps = r.system.to_eps(param(&r)?);
    let sys = r.system.build()?;
    let sys = sys.as_ref();
    let spec = build_coupling(Default::default(), r.w, r.l).map_err(|e| e.to_string())?;
    let fp = find_fixed_points(sys, eps, 1e-12).map_err(|e| e.to_string())?;
    let right = fp.x_bad.unwrap_or_else(|| sys.x_max(eps));
    let init = CoupledProfile::step(&spec, eps, fp.x_good, right, 0);
    let runs = run_coupled(sys, &spec, &init, r.iterations, r.stride.max(1)).map_err(|e| e.to_string())?;
    let out = SimulateOut {
        sites: (0..spec.len()).map(|k| spec.site(k)).collect(),
        snapshots: runs
            .iter()
            .map(|p| Snapshot {
                t: p.t,
                kink: kink_position(p, &spec).ok(),
                x: p.values.clone(),
            })
            .collect(),
    };
    serde_json::to_string(&out).map_err(|e| e.to_string())
}

#[wasm_bindgen]
pub fn potential(req: &str) -> Result<String, JsError> {
    potential_json(req).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = thresholds)]
pub fn thresholds_js(req: &str) -> Result<String, JsError> {
    thresholds_json(req).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn simulate(req: &str) -> Result<String, JsError> {
    simulate_json(req).map_err(|e| JsError::new(&e))
}
