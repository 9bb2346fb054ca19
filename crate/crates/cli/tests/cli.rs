use std::fs;
use std::path::Path;
use std::process::Command;

use solwave_cli::commands::{cmd_simulate, cmd_sweep, cmd_thresholds, cmd_velocity, Context, RowFlag};
use solwave_cli::config::parse_config_str;
use tempfile::TempDir;

fn solwave(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_solwave"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn config(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn potential_first_row_is_zero() {
    let tmp = TempDir::new().unwrap();
    for body in [
        r#"{"system":"gldpc","n":15,"e":3,"L":50,"W":4,"eps":0.37}"#,
        r#"{"system":"cs","snr":1e5,"rho":0.1,"L":50,"W":4,"delta":0.25}"#,
    ] {
        let cfg = config(tmp.path(), "c.json", body);
        let out = tmp.path().join("o");
        let o = solwave(&["potential", &cfg, "--out", out.to_str().unwrap(), "--quiet"]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        let csv = fs::read_dir(&out)
            .unwrap()
            .map(|e| e.unwrap().path())
            .filter(|p| p.extension().is_some_and(|e| e == "csv"))
            .map(|p| fs::read_to_string(p).unwrap())
            .next()
            .unwrap();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("x,U"));
        let first: Vec<f64> = lines.next().unwrap().split(',').map(|s| s.parse().unwrap()).collect();
        assert_eq!(first, vec![0.0, 0.0]);
        assert_eq!(csv.lines().count(), 1002);
        fs::remove_dir_all(&out).unwrap();
    }
}

#[test]
fn potential_minima_match_fixed_points() {
    let tmp = TempDir::new().unwrap();
    let cfg = parse_config_str(r#"{"system":"gldpc","n":15,"e":3,"eps":0.37}"#).unwrap();
    let r = solwave_cli::commands::cmd_potential(&cfg, &Context::new(tmp.path(), true)).unwrap();
    let c = &r.curves[0];
    let xb = c.x_bad.unwrap();
    // local minima of the sampled curve sit at the grid points nearest 0 and x_bad
    let h = c.x[1] - c.x[0];
    // the curve is flat to rounding near x = 1
    let minima: Vec<f64> = (1..c.u.len() - 1)
        .filter(|&k| c.x[k] < 0.9 && c.u[k] < c.u[k - 1] && c.u[k] <= c.u[k + 1])
        .map(|k| c.x[k])
        .collect();
    assert_eq!(c.u[0], 0.0);
    assert!(c.u[1] > 0.0);
    assert_eq!(minima.len(), 1);
    assert!((minima[0] - xb).abs() <= h);
}

#[test]
fn thresholds_ignore_width() {
    let tmp = TempDir::new().unwrap();
    let mut seen = Vec::new();
    for w in [1, 4, 9] {
        let cfg = config(
            tmp.path(),
            "c.json",
            &format!(r#"{{"system":"gldpc","n":15,"e":3,"L":50,"W":{w},"eps":0.37}}"#),
        );
        let out = tmp.path().join(format!("o{w}"));
        let o = solwave(&["thresholds", &cfg, "--out", out.to_str().unwrap(), "-q"]);
        assert!(o.status.success());
        seen.push(fs::read(out.join("thresholds.json")).unwrap());
    }
    assert!(seen.windows(2).all(|p| p[0] == p[1]));
    let v: serde_json::Value = serde_json::from_slice(&seen[0]).unwrap();
    assert!((v["eps_s"].as_f64().unwrap() - 0.348).abs() < 1e-3);
    assert!((v["eps_c"].as_f64().unwrap() - 0.394).abs() < 1e-3);
}

#[test]
fn simulate_is_byte_stable() {
    let tmp = TempDir::new().unwrap();
    let cfg = config(
        tmp.path(),
        "c.json",
        r#"{"system":"gldpc","n":15,"e":3,"L":50,"W":4,"eps":0.37,"iterations":180,"stride":20}"#,
    );
    let mut outs = Vec::new();
    for k in 0..2 {
        let out = tmp.path().join(format!("o{k}"));
        let o = solwave(&["simulate", &cfg, "--out", out.to_str().unwrap(), "-q"]);
        assert!(o.status.success());
        outs.push((
            fs::read(out.join("profiles.csv")).unwrap(),
            fs::read(out.join("simulate.json")).unwrap(),
        ));
    }
    assert_eq!(outs[0], outs[1]);
    let text = String::from_utf8(outs[0].0.clone()).unwrap();
    assert!(text.starts_with("t,i,x\n"));
    assert!(!text.contains('\r'));
    let ts: std::collections::BTreeSet<&str> = text.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(ts.len(), 10);
}

#[test]
fn simulate_below_threshold_settles_to_good() {
    let tmp = TempDir::new().unwrap();
    let cfg = parse_config_str(
        r#"{"system":"gldpc","n":15,"e":3,"L":50,"W":4,"eps":0.30,"iterations":2000,"stride":2000}"#,
    )
    .unwrap();
    let r = cmd_simulate(&cfg, &Context::new(tmp.path(), true)).unwrap();
    let last = r.profiles.last().unwrap();
    // pinned block plus a boundary layer of a few widths
    let interior = last.values.len() - 4 * 4;
    let settled = last.values[..interior].iter().all(|&x| (x - r.left).abs() < 1e-9);
    assert!(settled);
}

#[test]
fn velocity_at_threshold_is_flagged() {
    let tmp = TempDir::new().unwrap();
    let base = parse_config_str(r#"{"system":"gldpc","n":15,"e":3,"L":250,"W":3,"eps":0.37}"#).unwrap();
    let th = cmd_thresholds(&base, &Context::new(tmp.path(), true)).unwrap();
    let cfg = parse_config_str(&format!(
        r#"{{"system":"gldpc","n":15,"e":3,"L":250,"W":3,"eps":{}}}"#,
        th.eps_c
    ))
    .unwrap();
    let r = cmd_velocity(&cfg, &Context::new(tmp.path(), true)).unwrap();
    assert_eq!(r.rows[0].flag, RowFlag::AtThreshold);
    assert_eq!(r.rows[0].v_formula, Some(0.0));
    assert!(r.rows[0].v_empirical.is_none());
}

#[test]
fn sweep_parallel_matches_serial() {
    let tmp = TempDir::new().unwrap();
    let cfg = parse_config_str(
        r#"{"system":"gldpc","n":15,"e":3,"L":150,"W":3,"eps":{"min":0.35,"max":0.39,"count":9}}"#,
    )
    .unwrap();
    let a = tmp.path().join("serial");
    let b = tmp.path().join("parallel");
    let ra = cmd_sweep(&cfg, &Context::new(&a, true), Some(1)).unwrap();
    cmd_sweep(&cfg, &Context::new(&b, true), Some(4)).unwrap();
    for f in ["sweep.csv", "sweep.json", "sweep.log"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    assert_eq!(ra.rows.len(), 9);
    let params: Vec<f64> = ra.rows.iter().map(|r| r.param).collect();
    assert!(params.windows(2).all(|p| p[0] < p[1]));
    for r in ra.rows.iter().filter(|r| r.flag.has_velocity()) {
        let eps = r.param;
        assert!(eps > ra.thresholds.eps_s && eps < ra.thresholds.eps_c);
    }
    let json: serde_json::Value = serde_json::from_slice(&fs::read(a.join("sweep.json")).unwrap()).unwrap();
    assert!(json["rows"][0]["v_formula"].is_null() || json["rows"][0]["v_formula"].is_f64());
}

#[test]
fn sweep_outside_window_exits_five() {
    let tmp = TempDir::new().unwrap();
    let cfg = config(
        tmp.path(),
        "c.json",
        r#"{"system":"gldpc","n":15,"e":3,"L":50,"W":4,"eps":{"min":0.41,"max":0.45,"count":3}}"#,
    );
    let o = solwave(&["sweep", &cfg, "--out", tmp.path().join("o").to_str().unwrap(), "-q"]);
    assert_eq!(o.status.code(), Some(5));
    let log = fs::read_to_string(tmp.path().join("o/sweep.log")).unwrap();
    assert_eq!(log.lines().count(), 3);
}

#[test]
fn exit_codes() {
    let tmp = TempDir::new().unwrap();
    let empty = config(
        tmp.path(),
        "empty.json",
        r#"{"system":"gldpc","n":15,"e":3,"L":50,"W":4,"eps":{"min":0.35,"max":0.39,"count":0}}"#,
    );
    assert_eq!(solwave(&["sweep", &empty, "-q"]).status.code(), Some(2));
    let wide = config(tmp.path(), "wide.json", r#"{"system":"gldpc","n":15,"e":3,"L":3,"W":4,"eps":0.37}"#);
    let o = solwave(&["simulate", &wide, "-q"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains('W') || String::from_utf8_lossy(&o.stderr).contains('L'));
    let missing = tmp.path().join("nope.json");
    assert_eq!(solwave(&["thresholds", missing.to_str().unwrap()]).status.code(), Some(3));
    let ok = config(tmp.path(), "ok.json", r#"{"system":"gldpc","n":15,"e":3,"L":50,"W":4,"eps":0.37}"#);
    let blocker = tmp.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let o = solwave(&["thresholds", &ok, "--out", blocker.join("sub").to_str().unwrap(), "-q"]);
    assert_eq!(o.status.code(), Some(3));
    let sweep = config(
        tmp.path(),
        "scalar_sweep.json",
        r#"{"system":"gldpc","n":15,"e":3,"L":50,"W":4,"eps":{"min":0.35,"max":0.39,"count":3}}"#,
    );
    assert_eq!(solwave(&["simulate", &sweep, "-q"]).status.code(), Some(2));
}
