use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn rta(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rta")).args(args).output().expect("rta runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn scenario(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn digest_line(text: &str) -> &str {
    text.lines().find(|l| l.starts_with("digest ")).expect("digest printed")
}

#[test]
fn empty_scenario_runs_clean_with_an_empty_trace() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = rta(&["run", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stdout(&o));
    assert_eq!(fs::read_to_string(out.join("trace.jsonl")).unwrap(), "");
    assert!(out.join("report.txt").exists());
}

#[test]
fn dropped_decision_module_yields_a_witness_that_replays() {
    let dir = tempfile::tempdir().unwrap();
    let sc = scenario(dir.path(), "drop.scn", "plant = mountain_car\nhorizon = 300\nfault = dm-drop mc_dm 5\n");
    let out = dir.path().join("out");
    let o = rta(&["run", "--scenario", &sc, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let text = stdout(&o);
    assert!(text.contains("violation at event"), "{text}");
    let trace = out.join("trace.jsonl");
    let r = rta(&["report", "--scenario", &sc, "--trace", trace.to_str().unwrap()]);
    assert_eq!(r.status.code(), Some(1));
    assert_eq!(digest_line(&stdout(&r)), digest_line(&text));
    let csv = fs::read_to_string(out.join("states.csv")).unwrap();
    assert!(csv.lines().any(|l| l.contains(",mc_plant,mc_state,")));
}

#[test]
fn check_reports_every_condition() {
    let dir = tempfile::tempdir().unwrap();
    let sc = scenario(dir.path(), "mc.scn", "plant = mountain_car\nhorizon = 200\n");
    let o = rta(&["check", "--scenario", &sc]);
    let text = stdout(&o);
    assert!(o.status.success(), "{text}");
    for c in ["P1", "P2a", "P2b", "P3", "overall"] {
        assert!(text.lines().any(|l| l.trim_start().starts_with(c) && l.ends_with("pass")), "{c}: {text}");
    }
}

#[test]
fn malformed_program_is_an_error_with_a_position() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("bad.rta"), "topic x : scalar;\nnode n period 1 subscribes y publishes x;\n").unwrap();
    let sc = scenario(dir.path(), "bad.scn", "program = bad.rta\n");
    let o = rta(&["check", "--scenario", &sc]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("2:"), "{err}");
}

#[test]
fn precompute_writes_both_masks() {
    let dir = tempfile::tempdir().unwrap();
    let sc = scenario(dir.path(), "mc.scn", "plant = mountain_car\ngrid = 120x120\nhorizon = 50\nallow_unverified = true\n");
    let out = dir.path().join("masks");
    let o = rta(&["precompute", "--scenario", &sc, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stdout(&o));
    for kind in ["safe", "safer"] {
        let text = fs::read_to_string(out.join(format!("mountain_car_{kind}.mask"))).unwrap();
        assert!(text.starts_with("region-mask v1\n"));
    }
}

#[test]
fn explore_under_random_schedules_stays_clean() {
    let dir = tempfile::tempdir().unwrap();
    let sc = scenario(dir.path(), "mc.scn", "plant = mountain_car\nhorizon = 300\n");
    let out = dir.path().join("x");
    let o = rta(&["explore", "--scenario", &sc, "--schedule", "random", "--runs", "6", "--seed", "3", "--out", out.to_str().unwrap()]);
    let text = stdout(&o);
    assert!(o.status.success(), "{text}");
    assert!(text.contains("runs             6"), "{text}");
    assert!(out.join("explore.txt").exists());
}

#[test]
fn command_line_overrides_reach_the_scenario() {
    let dir = tempfile::tempdir().unwrap();
    let sc = scenario(dir.path(), "mc.scn", "plant = mountain_car\nhorizon = 300\n");
    let out = dir.path().join("o");
    let o = rta(&["run", "--scenario", &sc, "--horizon", "20", "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    let trace = fs::read_to_string(out.join("trace.jsonl")).unwrap();
    assert!(trace.lines().all(|l| !l.contains("\"time\":21")));
    let bad = rta(&["run", "--scenario", &sc, "--schedule", "sometimes"]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn shipped_scenarios_are_well_formed() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios");
    let mut n = 0;
    for entry in fs::read_dir(dir).unwrap() {
        let p = entry.unwrap().path();
        if p.extension().is_some_and(|e| e == "scn") {
            let o = rta(&["check", "--scenario", p.to_str().unwrap()]);
            assert!(o.status.success(), "{}: {}", p.display(), stdout(&o));
            n += 1;
        }
    }
    assert!(n >= 5);
}
