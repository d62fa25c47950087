use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use junction_flow::field::parse_dump;

fn config(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(format!("{name}.toml"))
}

fn junction(args: &[&str]) -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_junction"));
    c.args(args);
    for v in
        ["JUNCTION_CONFIG", "JUNCTION_SEED", "JUNCTION_OUT", "JUNCTION_DELTA", "JUNCTION_MODE", "JUNCTION_SCHEDULE"]
    {
        c.env_remove(v);
    }
    c
}

fn run(args: &[&str]) -> Output {
    junction(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap()
}

/// A copy of a shipped config with some text replaced.
fn edited(dir: &Path, name: &str, edits: &[(&str, &str)]) -> PathBuf {
    let mut text = std::fs::read_to_string(config(name)).unwrap();
    for (a, b) in edits {
        assert!(text.contains(a), "{a}");
        text = text.replace(a, b);
    }
    let path = dir.join(format!("{name}-edited.toml"));
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(code(&run(&["bogus"])), 2);
    assert_eq!(code(&run(&[])), 2);
    assert_eq!(code(&run(&["exact"])), 2);
    let ch = config("channel");
    let ch = ch.to_str().unwrap();
    assert_eq!(code(&run(&["exact", "--config", ch, "--delta", "0.3"])), 2);
    assert_eq!(code(&run(&["exact", "--config", ch, "--mode", "spline"])), 2);
    assert_eq!(code(&run(&["exact", "--config", "/nonexistent.toml"])), 2);
    assert_eq!(code(&run(&["--help"])), 0);
}

#[test]
fn csv_outputs_are_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    let bridge = config("bridge");
    for d in [&a, &b] {
        let o = run(&["exact", "--config", bridge.to_str().unwrap(), "--out", d.to_str().unwrap()]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    }
    let (x, y) = (read(&a, "exact.csv"), read(&b, "exact.csv"));
    assert_eq!(x, y);
    let lines: Vec<&str> = x.lines().collect();
    assert!(
        lines[0].starts_with("# config_sha256=") && lines[0].contains(" version=") && lines[0].ends_with(" seed=7")
    );
    assert!(lines[1].starts_with("outlet,h,b0,b1,flux"));
    assert_eq!(lines.len(), 4);

    // A different seed is a different run.
    let c = tmp.path().join("c");
    run(&["exact", "--config", bridge.to_str().unwrap(), "--out", c.to_str().unwrap(), "--seed", "8"]);
    let z = read(&c, "exact.csv");
    assert!(z.lines().next().unwrap().ends_with(" seed=8"));
    assert_eq!(z.lines().skip(1).collect::<Vec<_>>(), lines[1..].to_vec());
}

#[test]
fn environment_mirrors_flags() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("flag"), tmp.path().join("env"));
    let ch = config("channel");
    let o = run(&["invade", "--config", ch.to_str().unwrap(), "--out", a.to_str().unwrap(), "--schedule", "1,2"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let o = junction(&["invade"])
        .env("JUNCTION_CONFIG", &ch)
        .env("JUNCTION_OUT", &b)
        .env("JUNCTION_SCHEDULE", "1,2")
        .output()
        .unwrap();
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["invade_steps.csv", "growth.csv", "growth_fit.csv"] {
        assert_eq!(read(&a, f), read(&b, f), "{f}");
    }
    assert_eq!(read(&a, "invade_steps.csv").lines().count(), 4);
}

#[test]
fn solve_writes_field_dumps_and_history() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path();
    let o = run(&["solve", "--config", config("bridge").to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let (nx, ny, delta, u) = parse_dump(&read(out, "solution_u.txt")).unwrap();
    assert_eq!(delta, 0.0625);
    assert_eq!(u.u.len(), (nx + 1) * ny);
    assert_eq!(u.v.len(), nx * (ny + 1));
    assert!(u.max_velocity() > 0.0);
    let hist = read(out, "residual_history.csv");
    let mut lines = hist.lines();
    assert!(lines.next().unwrap().starts_with("# config_sha256="));
    assert_eq!(lines.next().unwrap(), "stage,iteration,momentum,continuity");
    let last: f64 = lines.last().unwrap().split(',').nth(2).unwrap().parse().unwrap();
    assert!(last <= 1e-10);
    let summary = read(out, "solve_summary.csv");
    assert_eq!(summary.lines().count(), 3);
}

#[test]
fn non_convergence_exits_three() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = edited(
        tmp.path(),
        "bridge",
        &[
            ("flux = 0.05\n", "flux = 30.0\n"),
            ("flux = -0.05\n", "flux = -30.0\n"),
            ("max_newton = 20", "max_newton = 1\nmax_picard = 1\ncontinuation_steps = 1"),
            ("uniqueness = true", "uniqueness = false"),
        ],
    );
    let o = run(&[
        "solve",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        tmp.path().join("o").to_str().unwrap(),
        "--mode",
        "cp",
    ]);
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stderr).contains("no convergence"));
}

#[test]
fn failed_check_exits_one_and_keeps_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = edited(tmp.path(), "channel", &[("asymptotics = true", "asymptotics = false\nenergy_tolerance = 0.0")]);
    let out = tmp.path().join("o");
    let o = run(&["diagnose", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    let text = String::from_utf8_lossy(&o.stdout);
    // The energy balance closes to rounding, not to zero.
    assert_eq!(code(&o), 1, "{text}");
    assert!(text.contains("FAIL diagnose.energy"));
    assert!(out.join("energy.csv").exists());
}

#[test]
fn verify_passes_on_shipped_configs() {
    let tmp = tempfile::tempdir().unwrap();
    let names = ["channel", "fountain", "bridge"];
    let runs: Vec<_> = names
        .iter()
        .map(|name| {
            let out = tmp.path().join(name);
            let cfg = config(name);
            std::thread::spawn(move || {
                run(&["verify", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()])
            })
        })
        .collect();
    for (name, h) in names.iter().zip(runs) {
        let o = h.join().unwrap();
        let out = tmp.path().join(name);
        assert_eq!(code(&o), 0, "{name}: {}{}", String::from_utf8_lossy(&o.stdout), String::from_utf8_lossy(&o.stderr));
        let csv = read(&out, "verify.csv");
        let rows: Vec<&str> = csv.lines().skip(2).collect();
        assert!(rows.len() >= 10, "{name}");
        assert!(rows.iter().all(|r| r.split(',').nth(1) == Some("true")), "{csv}");
    }
}
