//! The spatially coupled chain: `2L + 1` copies of a scalar system joined by
//! a width-`W` averaging window, with the first and last `W` sites pinned.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::QuadratureConfig;
use crate::system::{f_antiderivative, g_antiderivative, SystemModel};

/// Shape `w(z)` of the coupling window on `[0, 1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum WindowShape {
    #[default]
    Uniform,
    /// `w(z) = 1 - z`.
    Triangular,
    /// Samples `w(j/W)` for `j = 0..W`.
    Samples(Vec<f64>),
}

impl WindowShape {
    fn samples(&self, w: usize) -> Result<Vec<f64>> {
        let v = match self {
            WindowShape::Uniform => vec![1.0; w],
            WindowShape::Triangular => (0..w).map(|j| 1.0 - j as f64 / w as f64).collect(),
            WindowShape::Samples(s) => {
                if s.len() != w {
                    return Err(Error::InvalidWindow(format!("{} samples for a window of width {w}", s.len())));
                }
                s.clone()
            }
        };
        if v.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
            return Err(Error::InvalidWindow("samples must be finite and nonnegative".into()));
        }
        if v.iter().all(|&x| x == 0.0) {
            return Err(Error::InvalidWindow("all samples are zero".into()));
        }
        Ok(v)
    }
}

/// Coupling window of width `W` on a chain with sites `-L..=L`.
///
/// The coupling matrix is `A[j][k] = weights[k - j]` for `0 <= k - j < W`
/// and zero otherwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingSpec {
    pub shape: WindowShape,
    pub w: usize,
    pub l: usize,
    pub weights: Vec<f64>,
}

/// Normalizes the window so that its weights sum to one:
/// `a[d] = w(d/W) / sum_j w(j/W)`.
pub fn build_coupling(shape: WindowShape, w: usize, l: usize) -> Result<CouplingSpec> {
    if w < 1 {
        return Err(Error::domain("window width must be at least 1"));
    }
    if l < w {
        return Err(Error::domain(format!("chain half-length L={l} must be at least W={w}")));
    }
    let weights = if shape == WindowShape::Uniform {
        vec![1.0 / w as f64; w]
    } else {
        let s = shape.samples(w)?;
        let mean = s.iter().sum::<f64>() / w as f64;
        s.iter().map(|&x| x / mean / w as f64).collect()
    };
    Ok(CouplingSpec { shape, w, l, weights })
}

impl CouplingSpec {
    /// Number of sites, `2L + 1`.
    pub fn len(&self) -> usize {
        2 * self.l + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Storage index of site `i`.
    pub fn index(&self, site: i64) -> usize {
        (site + self.l as i64) as usize
    }

    pub fn site(&self, index: usize) -> i64 {
        index as i64 - self.l as i64
    }

    /// Storage range of the sites updated by the recursion,
    /// `-L+W ..= L-W`.
    pub fn interior(&self) -> std::ops::Range<usize> {
        self.w..self.len() - self.w
    }

    /// Coupling matrix entry `A[j][k]`; sites, not storage indices.
    pub fn a(&self, j: i64, k: i64) -> f64 {
        let d = k - j;
        if d >= 0 && (d as usize) < self.w {
            self.weights[d as usize]
        } else {
            0.0
        }
    }
}

/// Chain state `x^(t)` with pinned ends.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoupledProfile {
    pub values: Vec<f64>,
    pub t: usize,
    pub eps: f64,
    /// Value held on sites `-L ..= -L+W-1`.
    pub left: f64,
    /// Value held on sites `L-W+1 ..= L`.
    pub right: f64,
}

impl CoupledProfile {
    /// `left` on sites below `step_site`, `right` from `step_site` on.
    pub fn step(spec: &CouplingSpec, eps: f64, left: f64, right: f64, step_site: i64) -> Self {
        let values = (0..spec.len())
            .map(|k| if spec.site(k) < step_site { left } else { right })
            .collect();
        let mut p = Self {
            values,
            t: 0,
            eps,
            left,
            right,
        };
        p.pin(spec);
        p
    }

    /// Builds a profile from explicit values and re-pins the ends.
    pub fn from_values(spec: &CouplingSpec, eps: f64, left: f64, right: f64, values: Vec<f64>) -> Result<Self> {
        if values.len() != spec.len() {
            return Err(Error::Dimension(format!("{} values for {} sites", values.len(), spec.len())));
        }
        let mut p = Self {
            values,
            t: 0,
            eps,
            left,
            right,
        };
        p.pin(spec);
        Ok(p)
    }

    pub fn pin(&mut self, spec: &CouplingSpec) {
        let n = self.values.len();
        for v in &mut self.values[..spec.w] {
            *v = self.left;
        }
        for v in &mut self.values[n - spec.w..] {
            *v = self.right;
        }
    }

    pub fn at(&self, spec: &CouplingSpec, site: i64) -> f64 {
        if site < -(spec.l as i64) {
            self.left
        } else if site > spec.l as i64 {
            self.right
        } else {
            self.values[spec.index(site)]
        }
    }

    /// Translates the profile by `shift` sites, filling with the pinned values.
    pub fn shifted(&self, spec: &CouplingSpec, shift: i64) -> Self {
        let values = (0..spec.len()).map(|k| self.at(spec, spec.site(k) - shift)).collect();
        let mut p = Self { values, ..self.clone() };
        p.pin(spec);
        p
    }

    fn check(&self, spec: &CouplingSpec) -> Result<()> {
        if self.values.len() != spec.len() {
            return Err(Error::Dimension(format!(
                "profile has {} sites, coupling expects {}",
                self.values.len(),
                spec.len()
            )));
        }
        Ok(())
    }
}

/// Reusable buffers for [`coupled_step_into`].
#[derive(Debug, Default, Clone)]
pub struct StepScratch {
    g: Vec<f64>,
    f: Vec<f64>,
}

/// One coupled iteration
/// `x_i <- sum_j A[j][i] f(sum_k A[j][k] g(x_k))` on the interior sites.
pub fn coupled_step<S: SystemModel + ?Sized>(
    profile: &CoupledProfile,
    sys: &S,
    spec: &CouplingSpec,
) -> Result<CoupledProfile> {
    let mut out = profile.clone();
    let mut scratch = StepScratch::default();
    coupled_step_into(profile, &mut out, sys, spec, &mut scratch)?;
    Ok(out)
}

/// [`coupled_step`] writing into `out`.
///
/// Both sums run in ascending site order, so the result is bit-identical to
/// a direct evaluation of the double sum over the coupling matrix.
pub fn coupled_step_into<S: SystemModel + ?Sized>(
    profile: &CoupledProfile,
    out: &mut CoupledProfile,
    sys: &S,
    spec: &CouplingSpec,
    scratch: &mut StepScratch,
) -> Result<()> {
    profile.check(spec)?;
    let n = spec.len();
    let w = spec.w;
    let eps = profile.eps;
    let l = spec.l as i64;
    // g on sites -L-W+1 ..= L+W-1, constant beyond the chain
    let pad = w - 1;
    scratch.g.clear();
    scratch.g.extend((0..n + 2 * pad).map(|k| {
        let site = k as i64 - pad as i64 - l;
        sys.g(profile.at(spec, site), eps)
    }));
    // f of the inner average for j = -L+1 ..= L-W (all j feeding an interior site)
    let j_lo = -l + 1;
    let j_hi = l - w as i64;
    scratch.f.clear();
    for j in j_lo..=j_hi {
        let base = (j + l) as usize + pad;
        let mut acc = 0.0;
        for (b, &a) in spec.weights.iter().enumerate() {
            acc += a * scratch.g[base + b];
        }
        scratch.f.push(sys.f(acc, eps));
    }
    out.values.resize(n, 0.0);
    for idx in spec.interior() {
        let i = spec.site(idx);
        let mut acc = 0.0;
        for j in (i - w as i64 + 1)..=i {
            acc += spec.weights[(i - j) as usize] * scratch.f[(j - j_lo) as usize];
        }
        out.values[idx] = acc;
    }
    out.t = profile.t + 1;
    out.eps = eps;
    out.left = profile.left;
    out.right = profile.right;
    out.pin(spec);
    Ok(())
}

/// Runs `iterations` coupled steps from `init`, keeping every
/// `snapshot_stride`-th profile (including `t = 0`) and the final one.
pub fn run_coupled<S: SystemModel + ?Sized>(
    sys: &S,
    spec: &CouplingSpec,
    init: &CoupledProfile,
    iterations: usize,
    snapshot_stride: usize,
) -> Result<Vec<CoupledProfile>> {
    init.check(spec)?;
    let stride = snapshot_stride.max(1);
    let mut snaps = vec![init.clone()];
    let mut cur = init.clone();
    let mut next = init.clone();
    let mut scratch = StepScratch::default();
    for _ in 0..iterations {
        coupled_step_into(&cur, &mut next, sys, spec, &mut scratch)?;
        std::mem::swap(&mut cur, &mut next);
        if cur.t % stride == 0 {
            snaps.push(cur.clone());
        }
    }
    if snaps.last().map(|p| p.t) != Some(cur.t) {
        snaps.push(cur);
    }
    Ok(snaps)
}

/// `U_c(x) = sum_i [x_i g(x_i) - G(x_i)] - sum_i F(sum_j A[i][j] g(x_j))`
/// over the interior sites.
pub fn coupled_potential<S: SystemModel + ?Sized>(
    profile: &CoupledProfile,
    sys: &S,
    spec: &CouplingSpec,
    cfg: &QuadratureConfig,
) -> Result<f64> {
    profile.check(spec)?;
    let eps = profile.eps;
    let mut total = 0.0;
    for idx in spec.interior() {
        let i = spec.site(idx);
        let x = profile.values[idx];
        let gx = sys.g(x, eps);
        let mut inner = 0.0;
        for (b, &a) in spec.weights.iter().enumerate() {
            inner += a * sys.g(profile.at(spec, i + b as i64), eps);
        }
        total += x * gx - g_antiderivative(sys, x, eps, cfg)? - f_antiderivative(sys, inner, eps, cfg)?;
    }
    Ok(total)
}
