use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn noe(args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_noe"));
    cmd.args(args).env_remove("NOE_SEED").env_remove("NOE_OUT");
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

const SMALL: &[&str] = &["--agents", "80", "--queue-size", "10", "--steps", "150", "--iterations", "2"];

fn with(extra: &[&str]) -> Vec<String> {
    SMALL.iter().chain(extra).map(|s| s.to_string()).collect()
}

fn run_files(dir: &Path) -> Vec<String> {
    let mut names: Vec<String> = fs::read_dir(dir.join("runs"))
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    names
}

#[test]
fn writes_summary_and_runs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let args = with(&["--out", out, "--society", "noe,anarchy"]);
    let args: Vec<&str> = args.iter().map(String::as_str).collect();
    let res = noe(&args, &[]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let stdout = String::from_utf8(res.stdout).unwrap();
    assert!(stdout.contains("noe against each baseline"));
    assert_eq!(
        run_files(dir.path()),
        ["anarchy_seed0.csv", "anarchy_seed1.csv", "noe_seed0.csv", "noe_seed1.csv"]
    );
    let summary = fs::read_to_string(dir.path().join("summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 3);
    assert!(dir.path().join("timeseries_cohesion.csv").exists());
}

#[test]
fn environment_sits_beneath_flags() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let args = with(&["--society", "obedient"]);
    let args: Vec<&str> = args.iter().map(String::as_str).collect();
    let res = noe(&args, &[("NOE_SEED", "30"), ("NOE_OUT", out)]);
    assert!(res.status.success());
    assert_eq!(run_files(dir.path()), ["obedient_seed30.csv", "obedient_seed31.csv"]);

    let flagged = tempfile::tempdir().unwrap();
    let mut args = args.clone();
    args.extend(["--seed", "5", "--out", flagged.path().to_str().unwrap()]);
    let res = noe(&args, &[("NOE_SEED", "30"), ("NOE_OUT", out)]);
    assert!(res.status.success());
    assert_eq!(run_files(flagged.path()), ["obedient_seed5.csv", "obedient_seed6.csv"]);
}

#[test]
fn config_file_overrides_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "# smaller run\nseed = 9\niterations = 1\nsociety = sanctioning\nevents = true\n").unwrap();
    let args = with(&["--seed", "2", "--out", dir.path().to_str().unwrap(), "--config", cfg.to_str().unwrap()]);
    let args: Vec<&str> = args.iter().map(String::as_str).collect();
    let res = noe(&args, &[]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    assert_eq!(
        run_files(dir.path()),
        ["sanctioning_seed9.csv", "sanctioning_seed9_events.csv"]
    );
}

#[test]
fn bad_input_fails_with_a_diagnostic() {
    let res = noe(&["--society", "hermits"], &[]);
    assert!(!res.status.success());
    assert!(String::from_utf8_lossy(&res.stderr).contains("unknown society"));

    let res = noe(&["--queue-size", "0"], &[]);
    assert_eq!(res.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&res.stderr).contains("queue_size"));

    let res = noe(&["--config", "/nonexistent/noe.cfg"], &[]);
    assert_eq!(res.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&res.stderr).contains("cannot read config"));

    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    fs::write(&cfg, "steps = 10\nspeed = 3\n").unwrap();
    let res = noe(&["--config", cfg.to_str().unwrap()], &[]);
    assert_eq!(res.status.code(), Some(1));
    let err = String::from_utf8_lossy(&res.stderr);
    assert!(err.contains("line 2") && err.contains("speed"), "{err}");
}
