//! The five subcommands. Each returns its report and writes its files under
//! the output directory.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;
use solwave_core::coupling::{build_coupling, run_coupled, CoupledProfile};
use solwave_core::scalar::{energy_gap_at, FIXED_POINT_TOL};
use solwave_core::wave::{kink_position, measure_velocity, SteadyConfig, VelocityConfig};
use solwave_core::{
    find_fixed_points, potential_shape, single_potential, thresholds, Error as CoreError, PotentialShape,
    QuadratureConfig, ShapeConfig, SystemModel, ThresholdPair,
};

use crate::config::{RunConfig, SystemConfig, SystemTag};
use crate::error::{CliError, Result};
use crate::output::{ensure_dir, field, num, ser_nums, ser_num, ser_opt, tag, to_json, write};

/// Where files go and whether to report progress.
#[derive(Debug, Clone)]
pub struct Context {
    pub out: PathBuf,
    pub quiet: bool,
}

impl Context {
    pub fn new(out: impl Into<PathBuf>, quiet: bool) -> Self {
        Self { out: out.into(), quiet }
    }

    fn progress(&self, msg: impl std::fmt::Display) {
        if !self.quiet {
            eprintln!("{msg}");
        }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ThresholdReport {
    pub system: SystemTag,
    #[serde(serialize_with = "ser_num")]
    pub eps_s: f64,
    #[serde(serialize_with = "ser_num")]
    pub eps_c: f64,
    #[serde(serialize_with = "ser_opt", skip_serializing_if = "Option::is_none")]
    pub delta_s: Option<f64>,
    #[serde(serialize_with = "ser_opt", skip_serializing_if = "Option::is_none")]
    pub delta_c: Option<f64>,
    #[serde(serialize_with = "ser_num")]
    pub eps_s_bracket: f64,
    #[serde(serialize_with = "ser_num")]
    pub eps_c_bracket: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub prior: Option<&'static str>,
}

impl ThresholdReport {
    fn new(system: &SystemConfig, t: &ThresholdPair) -> Self {
        let (delta_s, delta_c, prior) = match system {
            SystemConfig::Gldpc(_) => (None, None, None),
            SystemConfig::Cs(p) => (
                Some(1.0 / t.eps_s),
                Some(1.0 / t.eps_c),
                Some(if p.normalize_signal_power { "unit_power" } else { "unit_slab" }),
            ),
        };
        Self {
            system: system.tag(),
            eps_s: t.eps_s,
            eps_c: t.eps_c,
            delta_s,
            delta_c,
            eps_s_bracket: t.eps_s_bracket,
            eps_c_bracket: t.eps_c_bracket,
            prior,
        }
    }

    /// Whether the generic parameter lies strictly between the thresholds.
    pub fn inside(&self, eps: f64) -> bool {
        eps > self.eps_s + self.eps_s_bracket && eps < self.eps_c - self.eps_c_bracket
    }

    fn at_eps_c(&self, eps: f64) -> bool {
        (eps - self.eps_c).abs() <= self.eps_c_bracket.max(1e-12)
    }
}

fn solve_thresholds(sys: &dyn SystemModel, cfg: &RunConfig) -> Result<ThresholdReport> {
    let t = thresholds(sys, cfg.threshold_tol)?;
    Ok(ThresholdReport::new(&cfg.system, &t))
}

pub fn cmd_thresholds(cfg: &RunConfig, ctx: &Context) -> Result<ThresholdReport> {
    let sys = cfg.system.build()?;
    let started = Instant::now();
    let report = solve_thresholds(sys.as_ref(), cfg)?;
    ctx.progress(format_args!("thresholds for {} in {:.1?}", sys.name(), started.elapsed()));
    ensure_dir(&ctx.out)?;
    write(&ctx.path("thresholds.json"), &to_json(&report))?;
    Ok(report)
}

#[derive(Debug, Clone, Serialize)]
pub struct PotentialCurve {
    #[serde(serialize_with = "ser_num")]
    pub param: f64,
    #[serde(serialize_with = "ser_num")]
    pub x_good: f64,
    #[serde(serialize_with = "ser_opt")]
    pub x_unst: Option<f64>,
    #[serde(serialize_with = "ser_opt")]
    pub x_bad: Option<f64>,
    #[serde(serialize_with = "ser_opt")]
    pub gap: Option<f64>,
    pub shape: PotentialShape,
    pub file: String,
    #[serde(skip)]
    pub x: Vec<f64>,
    #[serde(skip)]
    pub u: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct PotentialReport {
    pub system: SystemTag,
    pub param_name: &'static str,
    pub curves: Vec<PotentialCurve>,
}

pub fn cmd_potential(cfg: &RunConfig, ctx: &Context) -> Result<PotentialReport> {
    if cfg.params.is_empty() {
        return Err(CliError::Config(format!("{}: missing", cfg.param_name())));
    }
    let sys = cfg.system.build()?;
    let sys = sys.as_ref();
    let q = QuadratureConfig::default();
    ensure_dir(&ctx.out)?;
    let mut curves = Vec::new();
    for &p in &cfg.params {
        let eps = cfg.system.to_eps(p);
        let xm = sys.x_max(eps);
        let n = cfg.points;
        let x: Vec<f64> = (0..n).map(|k| xm * k as f64 / (n - 1) as f64).collect();
        let u = x
            .iter()
            .map(|&v| single_potential(sys, v, eps, &q))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        let fp = find_fixed_points(sys, eps, cfg.tol)?;
        let gap = match fp.stable_pair() {
            Some(_) => Some(energy_gap_at(sys, &fp, &q)?),
            None => None,
        };
        let shape = potential_shape(sys, eps, &ShapeConfig::default())?;
        let file = format!("potential_{}_{}.csv", cfg.param_name(), tag(p));
        let mut csv = String::from("x,U\n");
        for (a, b) in x.iter().zip(&u) {
            let _ = writeln!(csv, "{},{}", num(*a), num(*b));
        }
        write(&ctx.path(&file), &csv)?;
        ctx.progress(format_args!("{}={p}: {shape:?}", cfg.param_name()));
        curves.push(PotentialCurve {
            param: p,
            x_good: fp.x_good,
            x_unst: fp.x_unst,
            x_bad: fp.x_bad,
            gap,
            shape,
            file,
            x,
            u,
        });
    }
    let report = PotentialReport {
        system: cfg.system.tag(),
        param_name: cfg.param_name(),
        curves,
    };
    write(&ctx.path("potential.json"), &to_json(&report))?;
    Ok(report)
}

#[derive(Debug, Clone, Serialize)]
pub struct SnapshotSummary {
    pub t: usize,
    #[serde(serialize_with = "ser_opt")]
    pub kink: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SimulateReport {
    #[serde(serialize_with = "ser_num")]
    pub param: f64,
    #[serde(rename = "W")]
    pub w: usize,
    #[serde(rename = "L")]
    pub l: usize,
    #[serde(serialize_with = "ser_num")]
    pub left: f64,
    #[serde(serialize_with = "ser_num")]
    pub right: f64,
    pub snapshots: Vec<SnapshotSummary>,
    #[serde(skip)]
    pub profiles: Vec<CoupledProfile>,
}

pub fn cmd_simulate(cfg: &RunConfig, ctx: &Context) -> Result<SimulateReport> {
    let p = cfg.scalar_param()?;
    let (w, l) = cfg.chain()?;
    let eps = cfg.system.to_eps(p);
    let sys = cfg.system.build()?;
    let sys = sys.as_ref();
    let spec = build_coupling(cfg.window.clone(), w, l)?;
    let fp = find_fixed_points(sys, eps, cfg.tol)?;
    let right = cfg.right_pin.or(fp.x_bad).unwrap_or_else(|| sys.x_max(eps));
    let init = CoupledProfile::step(&spec, eps, fp.x_good, right, cfg.step_site.unwrap_or(0));
    let profiles = run_coupled(sys, &spec, &init, cfg.iterations, cfg.stride)?;
    ensure_dir(&ctx.out)?;
    let mut csv = String::from("t,i,x\n");
    for prof in &profiles {
        for (k, v) in prof.values.iter().enumerate() {
            let _ = writeln!(csv, "{},{},{}", prof.t, spec.site(k), num(*v));
        }
    }
    write(&ctx.path("profiles.csv"), &csv)?;
    let snapshots = profiles
        .iter()
        .map(|prof| SnapshotSummary {
            t: prof.t,
            kink: kink_position(prof, &spec).ok(),
        })
        .collect();
    let report = SimulateReport {
        param: p,
        w,
        l,
        left: fp.x_good,
        right,
        snapshots,
        profiles,
    };
    write(&ctx.path("simulate.json"), &to_json(&report))?;
    ctx.progress(format_args!("{} snapshots written", report.snapshots.len()));
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RowFlag {
    Ok,
    TransientIncomplete,
    AtThreshold,
    OutOfWindow,
    NotSolitonic,
    Failed,
}

impl RowFlag {
    fn as_str(self) -> &'static str {
        match self {
            RowFlag::Ok => "ok",
            RowFlag::TransientIncomplete => "transient_incomplete",
            RowFlag::AtThreshold => "at_threshold",
            RowFlag::OutOfWindow => "out_of_window",
            RowFlag::NotSolitonic => "not_solitonic",
            RowFlag::Failed => "failed",
        }
    }

    /// Whether the row carries measured velocities.
    pub fn has_velocity(self) -> bool {
        matches!(self, RowFlag::Ok | RowFlag::TransientIncomplete)
    }
}

/// One velocity measurement. Velocities are in continuum units per
/// iteration (`z = i/W`); the `_sites` columns are in sites per iteration.
#[derive(Debug, Clone, Serialize)]
pub struct VelocityRow {
    #[serde(serialize_with = "ser_num")]
    pub param: f64,
    #[serde(rename = "W")]
    pub w: usize,
    #[serde(rename = "L")]
    pub l: usize,
    #[serde(serialize_with = "ser_opt")]
    pub v_formula: Option<f64>,
    #[serde(serialize_with = "ser_opt")]
    pub v_empirical: Option<f64>,
    #[serde(serialize_with = "ser_opt")]
    pub v_formula_per_site_iter: Option<f64>,
    #[serde(serialize_with = "ser_opt")]
    pub v_empirical_per_site_iter: Option<f64>,
    #[serde(serialize_with = "ser_opt")]
    pub rel_dev: Option<f64>,
    #[serde(serialize_with = "ser_opt")]
    pub gap: Option<f64>,
    #[serde(serialize_with = "ser_opt")]
    pub denom: Option<f64>,
    #[serde(serialize_with = "ser_opt")]
    pub interaction_residual: Option<f64>,
    #[serde(serialize_with = "ser_opt")]
    pub alignment_residual: Option<f64>,
    pub transient: Option<usize>,
    pub iterations: Option<usize>,
    pub flag: RowFlag,
    pub reason: Option<String>,
    /// Steady profile as `[z, X]` columns, kept for plotting.
    #[serde(skip)]
    pub profile: Option<(Vec<f64>, Vec<f64>)>,
}

impl VelocityRow {
    fn empty(param: f64, w: usize, l: usize, flag: RowFlag, reason: Option<String>) -> Self {
        Self {
            param,
            w,
            l,
            v_formula: None,
            v_empirical: None,
            v_formula_per_site_iter: None,
            v_empirical_per_site_iter: None,
            rel_dev: None,
            gap: None,
            denom: None,
            interaction_residual: None,
            alignment_residual: None,
            transient: None,
            iterations: None,
            flag,
            reason,
            profile: None,
        }
    }
}

pub const VELOCITY_HEADER: &str = "param,W,L,v_formula,v_empirical,v_formula_per_site_iter,v_empirical_per_site_iter,rel_dev,gap,denom,interaction_residual,alignment_residual,transient,iterations,flag";

fn csv_row(r: &VelocityRow) -> String {
    let int = |v: Option<usize>| v.map(|x| x.to_string()).unwrap_or_default();
    format!(
        "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
        num(r.param),
        r.w,
        r.l,
        field(r.v_formula),
        field(r.v_empirical),
        field(r.v_formula_per_site_iter),
        field(r.v_empirical_per_site_iter),
        field(r.rel_dev),
        field(r.gap),
        field(r.denom),
        field(r.interaction_residual),
        field(r.alignment_residual),
        int(r.transient),
        int(r.iterations),
        r.flag.as_str()
    )
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepResult {
    pub param_name: &'static str,
    pub thresholds: ThresholdReport,
    pub rows: Vec<VelocityRow>,
}

impl SweepResult {
    pub fn csv(&self) -> String {
        let mut s = String::from(VELOCITY_HEADER);
        s.push('\n');
        for r in &self.rows {
            s.push_str(&csv_row(r));
            s.push('\n');
        }
        s
    }

    pub fn successes(&self) -> usize {
        self.rows.iter().filter(|r| r.flag.has_velocity()).count()
    }
}

fn velocity_config(cfg: &RunConfig) -> VelocityConfig {
    VelocityConfig {
        max_iter: cfg.max_iter,
        pool: cfg.pool,
        steady: SteadyConfig {
            resolution: cfg.resolution,
            ..SteadyConfig::default()
        },
        step_site: cfg.step_site,
        ..VelocityConfig::default()
    }
}

/// Runs one grid point.
pub fn velocity_row(
    sys: &dyn SystemModel,
    cfg: &RunConfig,
    th: &ThresholdReport,
    param: f64,
    w: usize,
    l: usize,
) -> VelocityRow {
    let eps = cfg.system.to_eps(param);
    if th.at_eps_c(eps) {
        // zero gap by definition of the threshold
        let mut row = VelocityRow::empty(param, w, l, RowFlag::AtThreshold, Some("at the potential threshold".into()));
        row.gap = find_fixed_points(sys, eps, FIXED_POINT_TOL)
            .ok()
            .filter(|fp| fp.x_bad.is_some())
            .and_then(|fp| energy_gap_at(sys, &fp, &QuadratureConfig::default()).ok());
        row.v_formula = Some(0.0);
        row.v_formula_per_site_iter = Some(0.0);
        return row;
    }
    if !th.inside(eps) {
        return VelocityRow::empty(
            param,
            w,
            l,
            RowFlag::OutOfWindow,
            Some("outside the open interval between the thresholds".into()),
        );
    }
    let spec = match build_coupling(cfg.window.clone(), w, l) {
        Ok(s) => s,
        Err(e) => return VelocityRow::empty(param, w, l, RowFlag::Failed, Some(e.to_string())),
    };
    let vc = velocity_config(cfg);
    match measure_velocity(sys, &spec, eps, &vc) {
        Ok(m) => {
            let r = m.report;
            let incomplete = r.transient.is_none() || r.iterations >= cfg.max_iter;
            let wf = w as f64;
            VelocityRow {
                param,
                w,
                l,
                v_formula: Some(r.v_formula),
                v_empirical: r.v_empirical,
                v_formula_per_site_iter: Some(r.v_formula * wf),
                v_empirical_per_site_iter: r.v_empirical.map(|v| v * wf),
                rel_dev: r.rel_dev,
                gap: Some(r.gap),
                denom: Some(r.denom),
                interaction_residual: r.interaction_residual,
                alignment_residual: Some(r.alignment_residual),
                transient: r.transient,
                iterations: Some(r.iterations),
                flag: if incomplete { RowFlag::TransientIncomplete } else { RowFlag::Ok },
                reason: incomplete.then(|| "shape did not settle within max_iter".to_string()),
                profile: Some((m.steady.grid, m.steady.x)),
            }
        }
        Err(e @ CoreError::NotSolitonic { .. }) => {
            VelocityRow::empty(param, w, l, RowFlag::NotSolitonic, Some(e.to_string()))
        }
        Err(e) => VelocityRow::empty(param, w, l, RowFlag::Failed, Some(e.to_string())),
    }
}

fn grid_points(cfg: &RunConfig) -> Result<Vec<(f64, usize, usize)>> {
    if cfg.params.is_empty() {
        return Err(CliError::Config(format!("{}: missing", cfg.param_name())));
    }
    let mut pts: Vec<(f64, usize, usize)> = cfg
        .chains
        .iter()
        .flat_map(|&(w, l)| cfg.params.iter().map(move |&p| (p, w, l)))
        .collect();
    pts.sort_by(|a, b| a.1.cmp(&b.1).then(a.0.total_cmp(&b.0)));
    Ok(pts)
}

fn write_sweep(result: &SweepResult, ctx: &Context, stem: &str) -> Result<()> {
    ensure_dir(&ctx.out)?;
    write(&ctx.path(&format!("{stem}.csv")), &result.csv())?;
    write(&ctx.path(&format!("{stem}.json")), &to_json(result))?;
    Ok(())
}

/// Measures every grid point in order on the calling thread.
pub fn cmd_velocity(cfg: &RunConfig, ctx: &Context) -> Result<SweepResult> {
    let pts = grid_points(cfg)?;
    let sys = cfg.system.build()?;
    let sys = sys.as_ref();
    let th = solve_thresholds(sys, cfg)?;
    let mut rows = Vec::with_capacity(pts.len());
    for &(p, w, l) in &pts {
        let started = Instant::now();
        let row = velocity_row(sys, cfg, &th, p, w, l);
        ctx.progress(format_args!(
            "{}={p} W={w}: {} in {:.1?}",
            cfg.param_name(),
            row.flag.as_str(),
            started.elapsed()
        ));
        rows.push(row);
    }
    let result = SweepResult {
        param_name: cfg.param_name(),
        thresholds: th,
        rows,
    };
    write_sweep(&result, ctx, "velocity")?;
    if result.successes() == 0 && result.rows.iter().all(|r| r.flag == RowFlag::Failed) {
        return Err(CliError::Solver(CoreError::Measurement(
            result.rows[0].reason.clone().unwrap_or_default(),
        )));
    }
    Ok(result)
}

/// Measures every grid point on a worker pool and merges in grid order.
pub fn cmd_sweep(cfg: &RunConfig, ctx: &Context, workers: Option<usize>) -> Result<SweepResult> {
    let pts = grid_points(cfg)?;
    let sys = cfg.system.build()?;
    let sys = sys.as_ref();
    let th = solve_thresholds(sys, cfg)?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = workers.or(cfg.workers) {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| CliError::Config(format!("workers: {e}")))?;
    let rows: Vec<VelocityRow> = pool.install(|| {
        pts.par_iter()
            .map(|&(p, w, l)| {
                let row = velocity_row(sys, cfg, &th, p, w, l);
                ctx.progress(format_args!("{}={p} W={w}: {}", cfg.param_name(), row.flag.as_str()));
                row
            })
            .collect()
    });
    let result = SweepResult {
        param_name: cfg.param_name(),
        thresholds: th,
        rows,
    };
    write_sweep(&result, ctx, "sweep")?;
    let mut log = String::new();
    for r in &result.rows {
        let _ = writeln!(
            log,
            "{}={} W={} L={} flag={}{}",
            result.param_name,
            tag(r.param),
            r.w,
            r.l,
            r.flag.as_str(),
            r.reason.as_deref().map(|s| format!(" reason={s}")).unwrap_or_default()
        );
    }
    write(&ctx.path("sweep.log"), &log)?;
    if result.successes() == 0 {
        return Err(CliError::AllFailed(format!("{} rows, none measured", result.rows.len())));
    }
    Ok(result)
}

/// Steady profiles of the measured rows as `(param, W, z, X)` CSV.
pub fn profiles_csv(result: &SweepResult) -> String {
    let mut s = String::from("param,W,z,X\n");
    for r in &result.rows {
        if let Some((z, x)) = &r.profile {
            for (a, b) in z.iter().zip(x) {
                let _ = writeln!(s, "{},{},{},{}", num(r.param), r.w, num(*a), num(*b));
            }
        }
    }
    s
}

#[derive(Debug, Clone, Serialize)]
struct Grid {
    #[serde(serialize_with = "ser_nums")]
    values: Vec<f64>,
}

/// Writes the resolved configuration next to the outputs.
pub fn write_resolved(cfg: &RunConfig, dir: &Path) -> Result<()> {
    ensure_dir(dir)?;
    let g = Grid { values: cfg.params.clone() };
    write(&dir.join("grid.json"), &to_json(&g))
}
