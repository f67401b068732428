use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn cmlab(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cmlab"))
        .args(args)
        .arg("--out-dir")
        .arg(out)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    for entry in walk(dir) {
        let name = entry.strip_prefix(dir).unwrap().display().to_string();
        let mut body = fs::read(&entry).unwrap();
        if name == "config.resolved.toml" {
            // The output directory itself differs between the two runs.
            let text = String::from_utf8(body).unwrap();
            body = text.lines().filter(|l| !l.starts_with("out_dir")).collect::<Vec<_>>().join("\n").into_bytes();
        }
        out.push((name, body));
    }
    out.sort();
    out
}

fn walk(dir: &Path) -> Vec<std::path::PathBuf> {
    let mut out = Vec::new();
    for e in fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        if p.is_dir() {
            out.extend(walk(&p));
        } else {
            out.push(p);
        }
    }
    out
}

const SMALL: &[&str] = &["--set", "geometry.side=64", "--set", "run.horizon=100", "--set", "run.snapshot_stride=25"];

#[test]
fn simulate_is_deterministic() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let mut args = vec!["simulate", "--seed", "7"];
    args.extend_from_slice(SMALL);
    assert!(cmlab(&args, a.path()).status.success());
    assert!(cmlab(&args, b.path()).status.success());
    let (fa, fb) = (files(a.path()), files(b.path()));
    assert!(fa.iter().any(|f| f.0.starts_with("snapshots")));
    assert!(fa.iter().any(|f| f.0 == "config.resolved.toml"));
    assert_eq!(fa, fb);
}

#[test]
fn rg_kernel_is_deterministic() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    assert!(cmlab(&["rg-kernel"], a.path()).status.success());
    assert!(cmlab(&["rg-kernel"], b.path()).status.success());
    assert_eq!(files(a.path()), files(b.path()));
}

#[test]
fn closed_system_conserves_mass() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = vec!["simulate", "--set", "chaos.eps=0", "--set", "model.eps_c=0", "--set", "model.delta=0"];
    args.extend_from_slice(SMALL);
    let out = cmlab(&args, dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let log = fs::read_to_string(dir.path().join("conservation.csv")).unwrap();
    let rows: Vec<&str> = log.lines().skip(1).collect();
    assert_eq!(rows.len(), 101);
    let worst = rows.iter().map(|r| r.split(',').nth(2).unwrap().parse::<f64>().unwrap()).fold(0.0, f64::max);
    assert!(worst < 1e-13, "max deviation {worst}");
}

#[test]
fn kernel_flow_rows_decrease() {
    let dir = tempfile::tempdir().unwrap();
    let out = cmlab(&["rg-kernel", "--set", "rg.n_max=3", "--set", "rg.L=4", "--set", "geometry.d=1"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("flow.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("n,c_n,fixed_point_distance,var_delta_p,var_ratio,K_fit"));
    let d: Vec<f64> = lines.map(|l| l.split(',').nth(2).unwrap().parse().unwrap()).collect();
    assert_eq!(d.len(), 3);
    assert!(d.windows(2).all(|w| w[1] < w[0]), "{d:?}");
    let summary = fs::read_to_string(dir.path().join("summary.txt")).unwrap();
    assert!(summary.starts_with("cmlab summary v1\n"));
}

#[test]
fn config_file_and_resolved_copy() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, "[model]\nkappa0 = 0.15\n\n[rg]\nL = 2\nn_max = 2\n").unwrap();
    let out_dir = dir.path().join("out");
    let out = cmlab(&["rg-kernel", "--config", cfg.to_str().unwrap()], &out_dir);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let resolved = fs::read_to_string(out_dir.join("config.resolved.toml")).unwrap();
    assert!(resolved.contains("kappa0 = 0.15"));
    assert!(resolved.contains("L = 2"));
    assert_eq!(fs::read_to_string(out_dir.join("flow.csv")).unwrap().lines().count(), 3);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = cmlab(&["rg-kernel", "--set", "model.kappa0=0.9"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("model"));
    let out = cmlab(&["rg-kernel", "--set", "geometry.side=100"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let out = cmlab(&["simulate", "--set", "bogus.key=1"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let out = cmlab(&["rg-kernel", "--config", "/nonexistent/run.toml"], dir.path());
    assert_eq!(out.status.code(), Some(4));
    // One snapshot inside the fit window leaves the diffusion fit underdetermined.
    let args = [
        "simulate", "--set", "geometry.side=64", "--set", "run.horizon=100", "--set", "run.snapshot_stride=100",
        "--set", "run.initial=delta", "--set", "analysis.t_window=[1, 100]",
    ];
    let out = cmlab(&args, &dir.path().join("fit"));
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    let blocker = dir.path().join("file");
    fs::write(&blocker, "").unwrap();
    let out = cmlab(&["rg-kernel"], &blocker.join("sub"));
    assert_eq!(out.status.code(), Some(4));
}
