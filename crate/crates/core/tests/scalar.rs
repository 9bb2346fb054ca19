use approx::assert_relative_eq;
use solwave_core::scalar::{energy_gap_at, reaches_good, single_potential_slope};
use solwave_core::systems::{delta_from_eps, CsParams, CsSystem, GldpcParams, GldpcSystem};
use solwave_core::*;

fn gldpc() -> GldpcSystem {
    GldpcSystem::new(GldpcParams::default()).unwrap()
}

#[test]
fn de_step_endpoints() {
    let s = gldpc();
    assert_eq!(de_step(&s, 0.0, 0.37).unwrap(), 0.0);
    assert_relative_eq!(de_step(&s, 1.0, 0.37).unwrap(), 0.37, epsilon = 1e-15);
    for eps in [0.1, 0.5, 0.9] {
        assert_relative_eq!(de_step(&s, 1.0, eps).unwrap(), eps, epsilon = 1e-15);
    }
    assert!(de_step(&s, 1.5, 0.37).is_err());
    assert!(de_step(&s, 0.5, 1.5).is_err());
}

#[test]
fn uncoupled_limits() {
    let s = gldpc();
    let below = run_uncoupled(&s, 0.30, 1.0, 1e-12, 1_000_000).unwrap();
    assert!(below.x_limit < 1e-12);
    let above = run_uncoupled(&s, 0.37, 1.0, 1e-12, 1_000_000).unwrap();
    assert_relative_eq!(above.x_limit, 0.328397884892716, max_relative = 1e-10);
}

#[test]
fn trajectories_are_monotone() {
    let s = gldpc();
    for eps in [0.3, 0.35, 0.37, 0.42] {
        let down = run_uncoupled(&s, eps, 1.0, 1e-12, 1_000_000).unwrap();
        assert!(down.trajectory.windows(2).all(|w| w[1] <= w[0]));
        let up = run_uncoupled(&s, eps, 0.0, 1e-12, 1_000_000).unwrap();
        assert!(up.trajectory.windows(2).all(|w| w[1] >= w[0]));
    }
}

#[test]
fn non_convergence_reports_last_iterate() {
    let s = gldpc();
    match run_uncoupled(&s, 0.37, 1.0, 1e-12, 3) {
        Err(Error::Convergence { iterations, residual, .. }) => {
            assert_eq!(iterations, 3);
            assert!(residual > 0.0);
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn gldpc_fixed_points() {
    let s = gldpc();
    let fp = find_fixed_points(&s, 0.37, 1e-12).unwrap();
    assert_eq!(fp.x_good, 0.0);
    let (u, b) = (fp.x_unst.unwrap(), fp.x_bad.unwrap());
    assert!(0.0 < u && u < b);
    assert_relative_eq!(u, 0.1897914625766336, max_relative = 1e-9);
    assert_relative_eq!(b, 0.328397884892716, max_relative = 1e-10);
    let below = find_fixed_points(&s, 0.30, 1e-12).unwrap();
    assert!(below.x_bad.is_none() && below.x_unst.is_none());
}

#[test]
fn fixed_points_are_critical_points_of_the_potential() {
    let s = gldpc();
    let cfg = QuadratureConfig::default();
    let fp = find_fixed_points(&s, 0.37, 1e-12).unwrap();
    let h = 1e-4;
    let u = |x: f64| single_potential(&s, x, 0.37, &cfg).unwrap();
    for x in [fp.x_unst.unwrap(), fp.x_bad.unwrap()] {
        assert!(single_potential_slope(&s, x, 0.37).abs() < 1e-10);
    }
    let b = fp.x_bad.unwrap();
    assert!(u(b - h) > u(b) && u(b + h) > u(b));
    let m = fp.x_unst.unwrap();
    assert!(u(m - h) < u(m) && u(m + h) < u(m));
    assert!(u(h) > u(0.0));
}

#[test]
fn potential_slope_identity_gldpc() {
    let s = gldpc();
    let cfg = QuadratureConfig { abs_tol: 1e-14, ..Default::default() };
    for eps in [0.3, 0.37, 0.45] {
        // relative to the slope's magnitude over the grid, since it crosses zero
        let scale = (1..50)
            .map(|k| single_potential_slope(&s, k as f64 / 50.0, eps).abs())
            .fold(0.0, f64::max);
        for k in 1..50 {
            let x = k as f64 / 50.0;
            let h = 1e-5;
            let fd = (single_potential(&s, x + h, eps, &cfg).unwrap() - single_potential(&s, x - h, eps, &cfg).unwrap())
                / (2.0 * h);
            let exact = single_potential_slope(&s, x, eps);
            assert!(
                (fd - exact).abs() <= 1e-6 * exact.abs().max(scale),
                "x={x} eps={eps} fd={fd} exact={exact}"
            );
        }
    }
}

#[test]
fn gldpc_thresholds() {
    let s = gldpc();
    let t = thresholds(&s, 1e-7).unwrap();
    assert!((t.eps_s - 0.348).abs() <= 1e-3);
    assert!((t.eps_c - 0.394).abs() <= 1e-3);
    assert_relative_eq!(t.eps_s, 0.347766, epsilon = 2e-6);
    assert_relative_eq!(t.eps_c, 0.394059, epsilon = 2e-6);
    assert!(t.eps_s <= t.eps_c);
    assert!(reaches_good(&s, t.eps_s - 0.01, 1e-12).unwrap());
    assert!(!reaches_good(&s, t.eps_s + 0.01, 1e-12).unwrap());
    assert!(energy_gap(&s, t.eps_c).unwrap().abs() < 1e-6);
    assert_relative_eq!(algorithmic_threshold(&s, 1e-7).unwrap(), t.eps_s, epsilon = 1e-12);
    assert_relative_eq!(potential_threshold(&s, 1e-7).unwrap(), t.eps_c, epsilon = 1e-12);
}

#[test]
fn energy_gap_decreases_past_eps_s() {
    let s = gldpc();
    let gaps: Vec<f64> = (0..9).map(|k| energy_gap(&s, 0.349 + 0.005 * k as f64).unwrap()).collect();
    assert!(gaps[0] > 0.0);
    assert!(gaps.windows(2).all(|w| w[1] < w[0]));
    assert!(matches!(energy_gap(&s, 0.3), Err(Error::Structure(_))));
}

#[test]
fn cs_thresholds_and_orientation() {
    let s = CsSystem::new(CsParams::default()).unwrap();
    let t = thresholds(&s, 1e-6).unwrap();
    let (ds, dc) = (delta_from_eps(t.eps_s), delta_from_eps(t.eps_c));
    assert!(dc < ds);
    assert!((ds - 0.208).abs() <= 3e-3, "delta_s = {ds}");
    // harder side: x_bad exists for delta below delta_s only
    assert!(find_fixed_points(&s, 1.0 / (ds - 0.005), 1e-12).unwrap().x_bad.is_some());
    assert!(find_fixed_points(&s, 1.0 / (ds + 0.005), 1e-12).unwrap().x_bad.is_none());
    let fp = find_fixed_points(&s, 1.0 / 0.18, 1e-12).unwrap();
    assert!(energy_gap_at(&s, &fp, &QuadratureConfig::default()).unwrap() > 0.0);
}

#[test]
fn cs_fixed_points_at_delta_016() {
    let s = CsSystem::new(CsParams::default()).unwrap();
    let fp = find_fixed_points(&s, 1.0 / 0.16, 1e-12).unwrap();
    assert_relative_eq!(fp.x_good, 3.382021085904426e-6, max_relative = 1e-6);
    assert_relative_eq!(fp.x_bad.unwrap(), 0.056783047485249295, max_relative = 1e-6);
    assert!(fp.x_good < fp.x_unst.unwrap() && fp.x_unst.unwrap() < fp.x_bad.unwrap());
}
