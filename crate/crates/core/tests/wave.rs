use approx::assert_relative_eq;
use solwave_core::coupling::{build_coupling, run_coupled, CoupledProfile, CouplingSpec, WindowShape};
use solwave_core::systems::{GldpcParams, GldpcSystem};
use solwave_core::*;

fn gldpc() -> GldpcSystem {
    GldpcSystem::new(GldpcParams::default()).unwrap()
}

fn x_bad(eps: f64) -> f64 {
    find_fixed_points(&gldpc(), eps, 1e-12).unwrap().x_bad.unwrap()
}

/// Stride-1 snapshots `t0..=t1` from a step at `-L/2`.
fn window_run(eps: f64, c: &CouplingSpec, t0: usize, t1: usize) -> Vec<CoupledProfile> {
    let p = CoupledProfile::step(c, eps, 0.0, x_bad(eps), -(c.l as i64) / 2);
    run_coupled(&gldpc(), c, &p, t1, 1).unwrap().split_off(t0)
}

#[test]
fn velocity_at_037() {
    let c = build_coupling(WindowShape::Uniform, 3, 250).unwrap();
    let m = measure_velocity(&gldpc(), &c, 0.37, &VelocityConfig::default()).unwrap();
    let r = &m.report;
    assert_relative_eq!(r.v_empirical.unwrap(), 0.05924091143959901, max_relative = 1e-6);
    assert!(r.rel_dev.unwrap().abs() <= 0.10);
    assert_relative_eq!(r.v_formula, r.gap / r.denom, max_relative = 1e-15);
    assert!(r.interaction_residual.unwrap() < 1e-2);
    assert!(r.transient.is_some());
    assert!(r.segment_min.unwrap() <= r.v_empirical.unwrap() && r.v_empirical.unwrap() <= r.segment_max.unwrap());
    let sp = &m.steady;
    assert!((sp.x[0] - r.x_good).abs() < 1e-6);
    assert!((sp.x[sp.x.len() - 1] - r.x_bad).abs() < 1e-6);
    // pooling jitter only, far below the peak slope
    let peak = sp.x_prime.iter().copied().fold(0.0, f64::max);
    assert!(sp.x_prime.iter().all(|&d| d >= -1e-5 * peak));
}

#[test]
fn fig1_shape_is_steady_after_iteration_100() {
    let c = build_coupling(WindowShape::Uniform, 4, 50).unwrap();
    let snaps = window_run(0.37, &c, 100, 180);
    assert_eq!((snaps[0].t, snaps[snaps.len() - 1].t), (100, 180));
    let sp = steady_profile(&snaps, &c, &SteadyConfig::default()).unwrap();
    assert!(sp.alignment_residual < 1e-3, "{}", sp.alignment_residual);
    let z100 = kink_position(&snaps[0], &c).unwrap();
    let z180 = kink_position(&snaps[80], &c).unwrap();
    assert!(z180 > z100);
}

#[test]
fn translation_invariance() {
    let g = gldpc();
    let c = build_coupling(WindowShape::Uniform, 3, 120).unwrap();
    let snaps = window_run(0.37, &c, 400, 560);
    let cfg = SteadyConfig::default();
    let base = steady_profile(&snaps, &c, &cfg).unwrap();
    let v0 = formula_velocity(&g, 0.37, &base).unwrap();
    let track0 = KinkTrack::from_profiles(&snaps, &c).unwrap();
    let e0 = empirical_velocity(&track0, 10).unwrap();
    for s in [1i64, 2, 7] {
        let moved: Vec<CoupledProfile> = snaps.iter().map(|p| p.shifted(&c, s)).collect();
        for (a, b) in snaps.iter().zip(&moved) {
            let dz = kink_position(b, &c).unwrap() - kink_position(a, &c).unwrap();
            assert_relative_eq!(dz, s as f64 / 3.0, epsilon = 1e-12);
        }
        let sp = steady_profile(&moved, &c, &cfg).unwrap();
        // compare on the grid points both profiles share
        let k = ((sp.grid[0] - base.grid[0]) / base.spacing).round() as i64;
        for (m, &x) in sp.x.iter().enumerate() {
            let j = m as i64 + k;
            if j >= 0 && (j as usize) < base.x.len() {
                assert!((x - base.x[j as usize]).abs() <= 1e-12);
            }
        }
        let v = formula_velocity(&g, 0.37, &sp).unwrap();
        assert_relative_eq!(v.v_formula, v0.v_formula, max_relative = 1e-12);
        let e = empirical_velocity(&KinkTrack::from_profiles(&moved, &c).unwrap(), 10).unwrap();
        assert_relative_eq!(e.slope, e0.slope, max_relative = 1e-12);
    }
}

#[test]
fn velocity_is_positive_and_vanishes_towards_eps_c() {
    let g = gldpc();
    let c = build_coupling(WindowShape::Uniform, 3, 150).unwrap();
    let mut last = f64::INFINITY;
    for eps in [0.355, 0.365, 0.375, 0.385, 0.392] {
        let snaps = window_run(eps, &c, 300, 460);
        let r = formula_velocity(&g, eps, &steady_profile(&snaps, &c, &SteadyConfig::default()).unwrap()).unwrap();
        assert!(r.gap > 0.0 && r.denom > 0.0 && r.v_formula > 0.0);
        assert!(kink_position(&snaps[160], &c).unwrap() > kink_position(&snaps[0], &c).unwrap());
        assert!(r.v_formula < last);
        last = r.v_formula;
    }
}

#[test]
fn formula_vanishes_at_eps_c() {
    let g = gldpc();
    let t = thresholds(&g, 1e-9).unwrap();
    let c = build_coupling(WindowShape::Uniform, 3, 100).unwrap();
    let snaps = window_run(t.eps_c, &c, 400, 560);
    let sp = steady_profile(&snaps, &c, &SteadyConfig::default()).unwrap();
    let r = formula_velocity(&g, t.eps_c, &sp).unwrap();
    assert!(r.gap.abs() < 1e-8, "gap {}", r.gap);
    assert!(r.v_formula.abs() < 1e-6, "v {}", r.v_formula);
}

#[test]
fn denominator_converges_under_refinement() {
    let g = gldpc();
    let c = build_coupling(WindowShape::Uniform, 3, 120).unwrap();
    let snaps = window_run(0.37, &c, 400, 560);
    let coarse = steady_profile(&snaps, &c, &SteadyConfig { resolution: 32, ..Default::default() }).unwrap();
    let fine = steady_profile(&snaps, &c, &SteadyConfig { resolution: 64, ..Default::default() }).unwrap();
    let a = formula_velocity(&g, 0.37, &coarse).unwrap().denom;
    let b = formula_velocity(&g, 0.37, &fine).unwrap().denom;
    assert!((a - b).abs() < 0.01 * b, "{a} vs {b}");
}

#[test]
fn no_wave_below_eps_s() {
    let g = gldpc();
    let c = build_coupling(WindowShape::Uniform, 4, 50).unwrap();
    let p = CoupledProfile::step(&c, 0.30, 0.0, 0.328, 0);
    let snaps = run_coupled(&g, &c, &p, 400, 1).unwrap().split_off(300);
    let err = steady_profile(&snaps, &c, &SteadyConfig::default()).unwrap_err();
    assert!(matches!(err, Error::NotSolitonic { .. } | Error::NoKink | Error::Measurement(_)), "{err:?}");
    assert!(matches!(measure_velocity(&g, &c, 0.30, &VelocityConfig::default()), Err(Error::Structure(_))));
}

#[test]
fn interaction_residual_shrinks_with_w() {
    let g = gldpc();
    let mut prev = f64::INFINITY;
    for w in [4, 8, 16] {
        let c = build_coupling(WindowShape::Uniform, w, 60 * w).unwrap();
        let r = measure_velocity(&g, &c, 0.37, &VelocityConfig::default()).unwrap().report;
        let ir = r.interaction_residual.unwrap();
        assert!(ir < 1e-2 && ir < prev, "W={w}: {ir}");
        prev = ir;
    }
}
