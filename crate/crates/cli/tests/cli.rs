//! The `lockctl` binary end to end.

use std::path::Path;
use std::process::{Command, Output};

fn lockctl(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lockctl"))
        .args(args)
        .current_dir(dir)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn verdicts(text: &str) -> (usize, usize) {
    let ok = text.lines().filter(|l| l.split(' ').nth(1) == Some("ok")).count();
    let bad = text.lines().filter(|l| l.split(' ').nth(1) == Some("violated")).count();
    (ok, bad)
}

#[test]
fn check_reduced_safety() {
    let dir = tempfile::tempdir().unwrap();
    let o = lockctl(&["check", "--config", "reduced1", "--req", "all-safety"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(verdicts(&stdout(&o)), (21, 0));
    assert!(!dir.path().join("counterexamples").exists());
}

#[test]
fn counterexamples_are_controller_runs_that_trip_the_monitor() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    let o = lockctl(
        &["check", "--mutation", "drop_water_guard", "--req", "safreq5,safreq6"],
        p,
    );
    assert_eq!(o.status.code(), Some(1));
    let text = stdout(&o);
    assert_eq!(verdicts(&text), (1, 1), "{text}");
    let cex = p.join("counterexamples/safreq5.trace");
    assert!(cex.exists());
    let cex = cex.to_str().unwrap();

    let o = lockctl(
        &[
            "trace",
            cex,
            "--config",
            "reduced",
            "--mutation",
            "drop_water_guard",
            "--conform",
        ],
        p,
    );
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    // The correct controller cannot produce it.
    let o = lockctl(&["trace", cex, "--config", "reduced", "--conform", "--quiet"], p);
    assert_eq!(o.status.code(), Some(1));

    let o = lockctl(
        &["monitor", "--trace", cex, "--config", "reduced", "--req", "safreq5"],
        p,
    );
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).starts_with("safreq5 violated "));
}

#[test]
fn empty_trace_is_all_ok() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("empty.trace"), "").unwrap();
    let o = lockctl(&["monitor", "--trace", "empty.trace"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    // Everything but the three graph-only liveness requirements.
    assert_eq!(verdicts(&text), (50, 0));
}

#[test]
fn seeded_simulation() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "simulate",
        "--steps",
        "1000000",
        "--seed",
        "7",
        "--req",
        "all-safety,all-causality",
    ];
    let a = lockctl(&args, dir.path());
    assert_eq!(a.status.code(), Some(0));
    let text = stdout(&a);
    assert_eq!(verdicts(&text), (33, 0));
    let stats = text.lines().last().unwrap();
    assert!(stats.starts_with("stats ticks=1000000 "), "{stats}");
    assert!(stats.ends_with(" interlock_breaches=0"), "{stats}");
    // Regression pin for this seed.
    assert_eq!(
        stats,
        "stats ticks=1000000 events=2171949 inputs=1062099 reads=22504 outputs=1087346 commands=199668 \
         fault_toggles=0 interlock_breaches=0"
    );
    assert_eq!(lockctl(&args, dir.path()).stdout, a.stdout);
}

#[test]
fn recorded_simulation_replays() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    std::fs::write(
        p.join("faulty.toml"),
        "locks = [\"north\"]\norientations = [\"east\", \"west\"]\ninclude_barrier = true\n\n\
         [faults]\nsensor_fail = 0.01\nstuck_aspect = 0.01\nmotor_stall = 0.01\nrepair = 0.05\n",
    )
    .unwrap();
    let o = lockctl(
        &[
            "simulate",
            "--config",
            "faulty.toml",
            "--steps",
            "3000",
            "--seed",
            "3",
            "--operator",
            "0.3",
            "--trace-out",
            "a.trace",
            "--scenario-out",
            "a.scenario",
        ],
        p,
    );
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let scenario = std::fs::read_to_string(p.join("a.scenario")).unwrap();
    assert!(scenario.starts_with("seed 3\nprofile "));
    assert!(scenario.trim_end().ends_with("3000 end"));
    let o = lockctl(
        &[
            "simulate",
            "--config",
            "faulty.toml",
            "--scenario",
            "a.scenario",
            "--trace-out",
            "b.trace",
        ],
        p,
    );
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let a = std::fs::read(p.join("a.trace")).unwrap();
    assert!(!a.is_empty());
    assert_eq!(a, std::fs::read(p.join("b.trace")).unwrap());

    let o = lockctl(
        &["trace", "a.trace", "--config", "faulty.toml", "--conform", "--quiet"],
        p,
    );
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).ends_with("a run of the controller, ends stable\n"));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    std::fs::write(
        p.join("bad.toml"),
        "locks = [\"east\"]\norientations = []\ninclude_barrier = true\n",
    )
    .unwrap();
    std::fs::write(p.join("bad.trace"), "0 input Teleport(north)\n").unwrap();
    let code = |args: &[&str]| lockctl(args, p).status.code();
    assert_eq!(code(&["check", "--unknown-flag"]), Some(2));
    assert_eq!(code(&["check", "--req", "safreq99"]), Some(2));
    assert_eq!(code(&["frobnicate"]), Some(2));
    assert_eq!(code(&["monitor", "--trace", "missing.trace"]), Some(3));
    assert_eq!(code(&["explore", "--config", "missing.toml"]), Some(3));
    assert_eq!(code(&["explore", "--config", "bad.toml"]), Some(4));
    assert_eq!(code(&["trace", "bad.trace"]), Some(4));
    assert_eq!(code(&["explore", "--config", "full"]), Some(5));
    assert_eq!(code(&["explore", "--config", "full", "--depth", "3"]), Some(0));
}

#[test]
fn trace_pretty_prints() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("t.trace"),
        "# two events\n0 input EmergencyLockCommand(north,activate)\n4 output GateActuator(north,upstream,east,do_emergencyStop)\n",
    )
    .unwrap();
    let o = lockctl(&["trace", "t.trace"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(
        stdout(&o),
        "       0  input   EmergencyLockCommand(north,activate)\n       \
         4  output  GateActuator(north,upstream,east,do_emergencyStop)\n\
         note: sequence jumps from 0 to 4\n2 events, well formed\n"
    );
}

#[test]
fn explore_reports_statistics() {
    let dir = tempfile::tempdir().unwrap();
    let o = lockctl(&["explore", "--depth", "4"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.starts_with("config reduced: locks=north"), "{text}");
    assert!(text.contains("exhaustive=false"));
}
