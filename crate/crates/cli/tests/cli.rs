use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn spsim(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spsim"))
        .arg("--out-dir")
        .arg(out)
        .args(args)
        .env_remove("SPSIM_WORKERS")
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

const RESET: &str = r#"{
  "model": {"kind": "levy", "dim": 1},
  "switching": {"rate": {"name": "constant", "params": [2.0]}, "rate_bound": 2.0,
                "kernel": {"name": "dirac", "params": [0.0]}},
  "run": {"x0": [0.0], "horizon": 1.0, "n_paths": 300, "max_step": 0.1, "seed": 5}
}"#;

#[test]
fn listing_is_stable_and_complete() {
    let dir = tempfile::tempdir().unwrap();
    let a = spsim(dir.path(), &["list-builtins"]);
    let b = spsim(dir.path(), &["list-builtins"]);
    assert!(a.status.success());
    let text = String::from_utf8(a.stdout.clone()).unwrap();
    assert!(text.contains("rate: constant(c)"));
    assert!(text.contains("kernel: gaussian(mean_shift, sd)"));
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn zero_rate_has_no_renewal_rows() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("heat_no_switching.json");
    let o = spsim(dir.path(), &["simulate", cfg.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let renewals = fs::read_to_string(dir.path().join("renewals.csv")).unwrap();
    assert_eq!(renewals.lines().count(), 1);
    assert!(renewals.starts_with("path_id,n,t,y_0,pre_0"));
    let traj = fs::read_to_string(dir.path().join("trajectories.csv")).unwrap();
    assert!(traj.starts_with("path_id,t,event,x_0\n"));
    // 2000 paths on a 101-point grid
    assert_eq!(traj.lines().count(), 1 + 2000 * 101);
}

#[test]
fn floats_use_seventeen_digits() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "reset.json", RESET);
    assert!(spsim(dir.path(), &["simulate", &cfg]).status.success());
    let renewals = fs::read_to_string(dir.path().join("renewals.csv")).unwrap();
    let row = renewals.lines().nth(1).expect("some renewal");
    let t = row.split(',').nth(2).unwrap();
    let v: f64 = t.parse().unwrap();
    assert_eq!(format!("{v:.16e}"), t);
    let traj = fs::read_to_string(dir.path().join("trajectories.csv")).unwrap();
    assert!(traj.lines().any(|l| l.contains(",jump,")));
    assert!(traj.lines().any(|l| l.contains(",pre,")));
}

#[test]
fn poisson_summary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("poisson_degenerate.json");
    let o = spsim(dir.path(), &["simulate", cfg.to_str().unwrap()]);
    assert!(o.status.success());
    let out = String::from_utf8(o.stdout).unwrap();
    let mean: f64 = out
        .split_whitespace()
        .find_map(|w| w.strip_prefix("mean_N_horizon="))
        .unwrap()
        .parse()
        .unwrap();
    assert!((mean - 2.0).abs() <= 3.0 * (2.0f64 / 1e4).sqrt(), "{out}");
}

#[test]
fn outputs_independent_of_workers_and_repeat_runs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("brownian_switching.json");
    let mut seen = Vec::new();
    for workers in ["1", "3", "3"] {
        let out = dir.path().join(format!("w{workers}-{}", seen.len()));
        let o = spsim(&out, &["--workers", workers, "simulate", cfg.to_str().unwrap()]);
        assert!(o.status.success());
        seen.push((
            fs::read(out.join("trajectories.csv")).unwrap(),
            fs::read(out.join("renewals.csv")).unwrap(),
            o.stdout,
        ));
    }
    assert!(seen.windows(2).all(|w| w[0] == w[1]));
}

#[test]
fn seed_flag_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "reset.json", RESET);
    let read = |sub: &str, extra: &[&str]| {
        let out = dir.path().join(sub);
        let mut args: Vec<&str> = extra.to_vec();
        args.extend(["simulate", cfg.as_str()]);
        assert!(spsim(&out, &args).status.success());
        fs::read(out.join("renewals.csv")).unwrap()
    };
    assert_eq!(read("a", &[]), read("b", &["--seed", "5"]));
    assert_ne!(read("c", &[]), read("d", &["--seed", "6"]));
}

#[test]
fn workers_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "reset.json", RESET);
    let o = Command::new(env!("CARGO_BIN_EXE_spsim"))
        .args(["--out-dir", dir.path().to_str().unwrap(), "simulate", &cfg])
        .env("SPSIM_WORKERS", "0")
        .output()
        .unwrap();
    // zero workers is a configuration error, so the variable was read
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn corrupted_bound_stops_before_simulating() {
    let dir = tempfile::tempdir().unwrap();
    let text = RESET.replace("\"rate_bound\": 2.0", "\"rate_bound\": 1.0");
    let cfg = write_config(dir.path(), "bad.json", &text);
    let out = dir.path().join("out");
    let o = spsim(&out, &["simulate", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.exists());
}

#[test]
fn unknown_key_reports_line() {
    let dir = tempfile::tempdir().unwrap();
    let text = RESET.replace("\"horizon\"", "\"horizn\": 1.0, \"horizon\"");
    let cfg = write_config(dir.path(), "bad.json", &text);
    let o = spsim(dir.path(), &["simulate", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8(o.stderr).unwrap();
    assert!(err.contains("unknown field `horizn`") && err.contains("line 5"), "{err}");
}

#[test]
fn missing_section_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "reset.json", RESET);
    assert_eq!(spsim(dir.path(), &["verify", "kolmogorov", &cfg]).status.code(), Some(2));
    assert_eq!(spsim(dir.path(), &["verify", "nonsense", &cfg]).status.code(), Some(2));
}

#[test]
fn runaway_is_a_runtime_error_with_replay_info() {
    let dir = tempfile::tempdir().unwrap();
    let text = RESET.replace("\"seed\": 5", "\"seed\": 5, \"max_jumps\": 1");
    let cfg = write_config(dir.path(), "runaway.json", &text);
    let o = spsim(dir.path(), &["simulate", &cfg]);
    assert_eq!(o.status.code(), Some(3));
    let err = String::from_utf8(o.stderr).unwrap();
    assert!(err.contains("path ") && err.contains("seed 5"), "{err}");
}

#[test]
fn heat_checks_pass() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("heat_no_switching.json");
    for which in ["kolmogorov", "chapman-kolmogorov", "feynman-kac"] {
        let o = spsim(dir.path(), &["verify", which, cfg.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{which}: {}", String::from_utf8_lossy(&o.stdout));
        let csv = fs::read_to_string(dir.path().join(format!("verify_{which}.csv"))).unwrap();
        assert!(csv.starts_with("identity,label,"));
        assert!(csv.lines().skip(1).all(|l| l.contains(",true,")));
    }
    let pide = fs::read_to_string(dir.path().join("pide_solution.csv")).unwrap();
    assert!(pide.starts_with("t,x,u\n"));
}

#[test]
fn failing_check_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let text = fs::read_to_string(configs().join("heat_no_switching.json"))
        .unwrap()
        .replace("\"verify\": {", "\"verify\": {\"z\": 0.0,");
    let cfg = write_config(dir.path(), "strict.json", &text);
    let o = spsim(dir.path(), &["verify", "kolmogorov", &cfg]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8(o.stdout).unwrap().contains("FAIL"));
}
