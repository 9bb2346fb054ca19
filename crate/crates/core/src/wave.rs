//! Traveling-wave measurements on coupled runs: kink tracking, the steady
//! profile, and the closed-form velocity
//! `v = [U_s(x_bad) - U_s(x_good)] / int g'(X) X'^2 dz`.
//!
//! Positions are in continuum units `z = i / W` and velocities in `z` per
//! iteration.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::coupling::{coupled_step_into, CoupledProfile, CouplingSpec, StepScratch};
use crate::error::{Error, Result};
use crate::quadrature::QuadratureConfig;
use crate::scalar::{energy_gap_at, find_fixed_points, FIXED_POINT_TOL};
use crate::system::SystemModel;

/// Kink position `z = i*/W`, where `i*` is the first linearly interpolated
/// crossing of the level `(left + right)/2` scanning from the left.
pub fn kink_position(profile: &CoupledProfile, spec: &CouplingSpec) -> Result<f64> {
    let (a, b) = (profile.left, profile.right);
    if a == b {
        return Err(Error::NoKink);
    }
    let m = 0.5 * (a + b);
    let s = (b - a).signum();
    let v = &profile.values;
    let k = v.iter().position(|&x| s * (x - m) >= 0.0).ok_or(Error::NoKink)?;
    if k == 0 {
        return Err(Error::NoKink);
    }
    let frac = (m - v[k - 1]) / (v[k] - v[k - 1]);
    Ok((spec.site(k - 1) as f64 + frac) / spec.w as f64)
}

/// Kink positions `(t, z)` with strictly increasing `t`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct KinkTrack {
    pub points: Vec<(usize, f64)>,
}

impl KinkTrack {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, t: usize, z: f64) -> Result<()> {
        if let Some(&(last, _)) = self.points.last() {
            if t <= last {
                return Err(Error::Measurement(format!("time {t} not after {last}")));
            }
        }
        self.points.push((t, z));
        Ok(())
    }

    pub fn from_profiles(profiles: &[CoupledProfile], spec: &CouplingSpec) -> Result<Self> {
        let mut track = Self::new();
        for p in profiles {
            track.push(p.t, kink_position(p, spec)?)?;
        }
        Ok(track)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VelocityEstimate {
    /// Least-squares slope of `z` against `t`.
    pub slope: f64,
    /// Mean of the per-segment slopes `dz/dt`.
    pub segment_mean: f64,
    pub segment_min: f64,
    pub segment_max: f64,
    pub points_used: usize,
}

/// Kink velocity from the points of `track` after the first `burn_in`.
pub fn empirical_velocity(track: &KinkTrack, burn_in: usize) -> Result<VelocityEstimate> {
    let pts = track.points.get(burn_in..).unwrap_or(&[]);
    if pts.len() < 2 {
        return Err(Error::Measurement(format!(
            "{} points after burn-in, need at least 2",
            pts.len()
        )));
    }
    let n = pts.len() as f64;
    let t0 = pts[0].0 as f64;
    let tm = pts.iter().map(|p| p.0 as f64 - t0).sum::<f64>() / n;
    let zm = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for &(t, z) in pts {
        let dt = t as f64 - t0 - tm;
        sxy += dt * (z - zm);
        sxx += dt * dt;
    }
    let seg: Vec<f64> = pts
        .windows(2)
        .map(|w| (w[1].1 - w[0].1) / (w[1].0 - w[0].0) as f64)
        .collect();
    Ok(VelocityEstimate {
        slope: sxy / sxx,
        segment_mean: seg.iter().sum::<f64>() / seg.len() as f64,
        segment_min: seg.iter().copied().fold(f64::INFINITY, f64::min),
        segment_max: seg.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        points_used: pts.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SteadyConfig {
    /// Grid points per site; the grid spacing is `1/(W * resolution)`.
    pub resolution: usize,
    /// Largest alignment residual accepted as a steady shape.
    pub solitonic_tol: f64,
}

impl Default for SteadyConfig {
    fn default() -> Self {
        Self {
            resolution: 32,
            solitonic_tol: 1e-3,
        }
    }
}

/// Shape of the traveling profile in the co-moving frame, kink at `z = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SteadyProfile {
    pub grid: Vec<f64>,
    pub x: Vec<f64>,
    pub x_prime: Vec<f64>,
    pub spacing: f64,
    pub resolution: usize,
    /// Largest deviation of one half of the aligned snapshots from the
    /// interpolant through the other half.
    pub alignment_residual: f64,
    pub snapshots: usize,
    pub left: f64,
    pub right: f64,
}

/// Aligned samples `(z - kink, x)` of one snapshot.
fn aligned(p: &CoupledProfile, spec: &CouplingSpec) -> Result<Vec<(f64, f64)>> {
    let k = kink_position(p, spec)?;
    let w = spec.w as f64;
    Ok(p.values
        .iter()
        .enumerate()
        .map(|(idx, &x)| (spec.site(idx) as f64 / w - k, x))
        .collect())
}

fn pool<'a, I: IntoIterator<Item = &'a Vec<(f64, f64)>>>(sets: I) -> Vec<(f64, f64)> {
    let mut all: Vec<(f64, f64)> = sets.into_iter().flatten().copied().collect();
    all.sort_by(|a, b| a.0.total_cmp(&b.0));
    all
}

/// Linear interpolation through sorted points; `None` outside their span.
fn interp(pts: &[(f64, f64)], z: f64) -> Option<f64> {
    let k = pts.partition_point(|p| p.0 < z);
    if k < pts.len() && pts[k].0 == z {
        return Some(pts[k].1);
    }
    if k == 0 || k == pts.len() {
        return None;
    }
    let (a, b) = (pts[k - 1], pts[k]);
    Some(a.1 + (b.1 - a.1) * (z - a.0) / (b.0 - a.0))
}

fn cross_deviation(reference: &[(f64, f64)], query: &[(f64, f64)], lo: f64, hi: f64) -> f64 {
    query
        .iter()
        .filter(|p| p.0 >= lo && p.0 <= hi)
        .filter_map(|&(z, x)| interp(reference, z).map(|r| (r - x).abs()))
        .fold(0.0, f64::max)
}

/// Aligns the snapshots on their kinks, pools the samples and resamples
/// them by linear interpolation on a grid of spacing `1/(W * resolution)`
/// covering the span shared by all snapshots.
pub fn steady_profile(
    trajectory: &[CoupledProfile],
    spec: &CouplingSpec,
    cfg: &SteadyConfig,
) -> Result<SteadyProfile> {
    if trajectory.len() < 3 {
        return Err(Error::Measurement(format!(
            "{} snapshots, need at least 3",
            trajectory.len()
        )));
    }
    if cfg.resolution < 1 {
        return Err(Error::domain("resolution must be at least 1"));
    }
    let w = spec.w as f64;
    let right_block = (spec.l - spec.w + 1) as f64 / w;
    let mut sets = Vec::with_capacity(trajectory.len());
    for p in trajectory {
        let pts = aligned(p, spec)?;
        let k = kink_position(p, spec)?;
        if k + 5.0 > right_block + 1e-12 {
            return Err(Error::Measurement(format!(
                "kink at z={k} within 5 windows of the right block at t={}",
                p.t
            )));
        }
        sets.push(pts);
    }
    let lo = sets.iter().map(|s| s[0].0).fold(f64::NEG_INFINITY, f64::max);
    let hi = sets.iter().map(|s| s[s.len() - 1].0).fold(f64::INFINITY, f64::min);

    let even = pool(sets.iter().step_by(2));
    let odd = pool(sets.iter().skip(1).step_by(2));
    let residual = cross_deviation(&even, &odd, lo, hi).max(cross_deviation(&odd, &even, lo, hi));
    if residual > cfg.solitonic_tol {
        return Err(Error::NotSolitonic { residual });
    }

    let all = pool(sets.iter());
    let h = 1.0 / (w * cfg.resolution as f64);
    let m_lo = (lo / h).ceil() as i64;
    let m_hi = (hi / h).floor() as i64;
    let grid: Vec<f64> = (m_lo..=m_hi).map(|m| m as f64 * h).collect();
    let x: Vec<f64> = grid
        .iter()
        .map(|&z| interp(&all, z).unwrap_or(if z < 0.0 { all[0].1 } else { all[all.len() - 1].1 }))
        .collect();
    let x_prime = derivative(&x, h);
    let first = &trajectory[0];
    Ok(SteadyProfile {
        grid,
        x,
        x_prime,
        spacing: h,
        resolution: cfg.resolution,
        alignment_residual: residual,
        snapshots: trajectory.len(),
        left: first.left,
        right: first.right,
    })
}

/// Central differences with one-sided ends.
fn derivative(x: &[f64], h: f64) -> Vec<f64> {
    let n = x.len();
    if n < 2 {
        return vec![0.0; n];
    }
    (0..n)
        .map(|i| match i {
            0 => (x[1] - x[0]) / h,
            _ if i == n - 1 => (x[n - 1] - x[n - 2]) / h,
            _ => (x[i + 1] - x[i - 1]) / (2.0 * h),
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VelocityReport {
    pub eps: f64,
    pub x_good: f64,
    pub x_bad: f64,
    /// `U_s(x_bad) - U_s(x_good)`.
    pub gap: f64,
    /// `int g'(X) X'^2 dz` on the steady profile grid.
    pub denom: f64,
    pub v_formula: f64,
    pub v_empirical: Option<f64>,
    /// `(v_formula - v_empirical) / v_empirical`.
    pub rel_dev: Option<f64>,
    /// Iteration at which the aligned shape stopped changing.
    pub transient: Option<usize>,
    pub iterations: usize,
    pub interaction_residual: Option<f64>,
    pub alignment_residual: f64,
    /// Spread of the per-iteration kink displacement after burn-in.
    pub segment_min: Option<f64>,
    pub segment_max: Option<f64>,
}

/// Evaluates the velocity formula on a steady profile.
pub fn formula_velocity<S: SystemModel + ?Sized>(sys: &S, eps: f64, profile: &SteadyProfile) -> Result<VelocityReport> {
    let fp = find_fixed_points(sys, eps, FIXED_POINT_TOL)?;
    let (x_good, x_bad) = fp
        .stable_pair()
        .ok_or_else(|| Error::Structure(format!("single stable fixed point at eps={eps}")))?;
    let gap = energy_gap_at(sys, &fp, &QuadratureConfig::default())?;
    let denom = profile
        .x
        .iter()
        .zip(&profile.x_prime)
        .map(|(&x, &d)| sys.g_prime(x, eps) * d * d)
        .sum::<f64>()
        * profile.spacing;
    if !(denom >= 1e-14) {
        return Err(Error::DegenerateProfile { denom });
    }
    Ok(VelocityReport {
        eps,
        x_good,
        x_bad,
        gap,
        denom,
        v_formula: gap / denom,
        v_empirical: None,
        rel_dev: None,
        transient: None,
        iterations: 0,
        interaction_residual: None,
        alignment_residual: profile.alignment_residual,
        segment_min: None,
        segment_max: None,
    })
}

/// Relative size of the interaction term
/// `sum X' g'(X) [f(g(X)) - T(X)] dz` against the single term
/// `sum X' g'(X) [X - f(g(X))] dz`, where `T` is the coupled update applied
/// on the profile grid with the window offsets `d/W`.
pub fn interaction_residual<S: SystemModel + ?Sized>(
    profile: &SteadyProfile,
    sys: &S,
    spec: &CouplingSpec,
    eps: f64,
) -> f64 {
    let n = profile.x.len();
    let r = profile.resolution;
    let w = spec.w;
    let pad = w * r;
    let ext: Vec<f64> = std::iter::repeat(profile.left)
        .take(pad)
        .chain(profile.x.iter().copied())
        .chain(std::iter::repeat(profile.right).take(pad))
        .collect();
    let ge: Vec<f64> = ext.iter().map(|&x| sys.g(x, eps)).collect();
    // inner average at offset j covers ext[j + b r], b < W
    let len = ext.len() - (w - 1) * r;
    let fc: Vec<f64> = (0..len)
        .map(|j| {
            let mut acc = 0.0;
            for (b, &a) in spec.weights.iter().enumerate() {
                acc += a * ge[j + b * r];
            }
            sys.f(acc, eps)
        })
        .collect();
    let (mut num, mut single) = (0.0, 0.0);
    for m in 0..n {
        let e = m + pad;
        let mut t = 0.0;
        for (a, &wa) in spec.weights.iter().enumerate() {
            t += wa * fc[e - a * r];
        }
        let x = profile.x[m];
        let fg = sys.f(sys.g(x, eps), eps);
        let c = profile.x_prime[m] * sys.g_prime(x, eps);
        num += c * (fg - t);
        single += c * (x - fg);
    }
    if num == 0.0 {
        return 0.0;
    }
    (num / single).abs()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VelocityConfig {
    pub max_iter: usize,
    /// Number of most recent profiles pooled into the steady profile.
    pub pool: usize,
    pub steady: SteadyConfig,
    /// Initial step site; `None` puts it at `-L/2`.
    pub step_site: Option<i64>,
    /// Minimum fraction of the track discarded before fitting.
    pub burn_in_fraction: f64,
    /// Aligned-shape change below which the transient is over.
    pub transient_tol: f64,
    /// Iterations between transient checks.
    pub check_every: usize,
    /// Stop once the kink is this many windows from the right end.
    pub right_margin: usize,
}

impl Default for VelocityConfig {
    fn default() -> Self {
        Self {
            max_iter: 1_000_000,
            pool: 160,
            steady: SteadyConfig::default(),
            step_site: None,
            burn_in_fraction: 0.25,
            transient_tol: 1e-4,
            check_every: 10,
            right_margin: 6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VelocityMeasurement {
    pub report: VelocityReport,
    pub steady: SteadyProfile,
    pub track: KinkTrack,
}

/// Runs the chain from a step between the two stable fixed points until the
/// kink nears the right block, then compares the measured kink velocity with
/// the formula evaluated on the steady profile.
pub fn measure_velocity<S: SystemModel + ?Sized>(
    sys: &S,
    spec: &CouplingSpec,
    eps: f64,
    cfg: &VelocityConfig,
) -> Result<VelocityMeasurement> {
    let fp = find_fixed_points(sys, eps, FIXED_POINT_TOL)?;
    let (x_good, x_bad) = fp
        .stable_pair()
        .ok_or_else(|| Error::Structure(format!("single stable fixed point at eps={eps}")))?;
    let step = cfg.step_site.unwrap_or(-(spec.l as i64) / 2);
    let mut cur = CoupledProfile::step(spec, eps, x_good, x_bad, step);
    let mut next = cur.clone();
    let mut scratch = StepScratch::default();
    let stop = (spec.l - cfg.right_margin.min(spec.l / spec.w) * spec.w) as f64 / spec.w as f64;
    let pool_size = cfg.pool.max(3);

    let mut track = KinkTrack::new();
    let mut recent: VecDeque<CoupledProfile> = VecDeque::with_capacity(pool_size + 1);
    let mut transient = None;
    loop {
        coupled_step_into(&cur, &mut next, sys, spec, &mut scratch)?;
        std::mem::swap(&mut cur, &mut next);
        let z = kink_position(&cur, spec)?;
        track.push(cur.t, z)?;
        recent.push_back(cur.clone());
        if recent.len() > pool_size {
            recent.pop_front();
        }
        if transient.is_none() && recent.len() == pool_size && cur.t % cfg.check_every.max(1) == 0 {
            let newest = aligned(&cur, spec)?;
            let rest: Vec<Vec<(f64, f64)>> = recent
                .iter()
                .take(pool_size - 1)
                .map(|p| aligned(p, spec))
                .collect::<Result<_>>()?;
            let lo = rest.iter().map(|s| s[0].0).fold(newest[0].0, f64::max);
            let hi = rest.iter().map(|s| s[s.len() - 1].0).fold(newest[newest.len() - 1].0, f64::min);
            if cross_deviation(&pool(rest.iter()), &newest, lo, hi) < cfg.transient_tol {
                transient = Some(cur.t);
            }
        }
        if z > stop || cur.t >= cfg.max_iter {
            break;
        }
    }

    let snapshots: Vec<CoupledProfile> = recent.into_iter().collect();
    let steady = steady_profile(&snapshots, spec, &cfg.steady)?;
    let mut report = formula_velocity(sys, eps, &steady)?;
    let fraction_burn = (cfg.burn_in_fraction * track.len() as f64).ceil() as usize;
    let burn_in = transient.map_or(fraction_burn, |t| t.max(fraction_burn));
    let est = empirical_velocity(&track, burn_in)?;
    report.v_empirical = Some(est.slope);
    report.rel_dev = Some((report.v_formula - est.slope) / est.slope);
    report.transient = transient;
    report.iterations = cur.t;
    report.interaction_residual = Some(interaction_residual(&steady, sys, spec, eps));
    report.segment_min = Some(est.segment_min);
    report.segment_max = Some(est.segment_max);
    Ok(VelocityMeasurement { report, steady, track })
}
