use super::*;
use crate::engine::tests::toy_system;
use crate::engine::NoHooks;

#[test]
fn exhaustive_toy_exploration_is_clean() {
    let spec = toy_system(30);
    let exp = Experiment::new(&spec, SchedulePolicy::exhaustive(1));
    // dm, ac, sc permute at 31 instants
    assert_eq!(exp.len().unwrap(), 1 + 31 * 5);
    let report = exp.explore().unwrap();
    assert_eq!(report.runs.len(), 156);
    assert_eq!(report.inv_violations(), 0);
    assert_eq!(report.unsafe_entries(), 0);
    assert!(report.runs.iter().all(|r| r.report.disengagement_count() > 0));
}

#[test]
fn dm_drop_is_detected_and_replayable() {
    let spec = toy_system(30);
    let faults = FaultProfile::none().with("dm", FaultKind::DmDrop { from: 3, until: None });
    let exp = Experiment::new(&spec, SchedulePolicy::exhaustive(1)).with_faults(faults);
    let report = exp.explore().unwrap();
    let witness = report.failing().next().expect("a violating schedule");
    assert!(witness.report.inv_violations > 0 && witness.report.unsafe_entries > 0);
    let trace = exp.replay_verified(witness.id, &witness.digest).unwrap();
    assert_eq!(trace.first_violation(), witness.report.first_violation);
}

#[test]
fn faults_cannot_target_safe_controllers() {
    let spec = toy_system(5);
    let bad = FaultProfile::none().with("sc", FaultKind::OutputPerturbation { amplitude: 1.0 });
    let exp = Experiment::new(&spec, SchedulePolicy::deterministic()).with_faults(bad);
    assert!(matches!(exp.explore(), Err(HarnessError::InvalidFault(_))));
    let bad = FaultProfile::none().with("ac", FaultKind::DmDrop { from: 0, until: None });
    assert!(FaultProfile::validate(&bad, &spec).is_err());
}

#[test]
fn replay_digest_and_negative_control() {
    let spec = toy_system(40);
    let exp = Experiment::new(&spec, SchedulePolicy::random(7, 4));
    let a = exp.replay(0).unwrap();
    let b = exp.replay(0).unwrap();
    assert_eq!(a.to_jsonl(), b.to_jsonl());
    let other = Experiment::new(&spec, SchedulePolicy::random(8, 4));
    assert!(matches!(
        other.replay_verified(0, &a.digest()),
        Err(HarnessError::DigestMismatch { .. })
    ));
    assert!(matches!(exp.replay(4), Err(HarnessError::UnknownSchedule(4))));
    // schedule 0 of the deterministic policy is the default run
    let det = Experiment::new(&spec, SchedulePolicy::deterministic()).replay(0).unwrap();
    assert_eq!(det, run(&spec, &EnvScript::default(), &mut NoHooks).unwrap());
}

#[test]
fn audit_counts_switches() {
    let spec = toy_system(6);
    // x: 0 -> AC pushes to 8 -> ttf -> SC
    let trace = run(&spec, &EnvScript::default(), &mut NoHooks).unwrap();
    let r = audit(&trace, &spec).unwrap();
    assert!(r.is_clean());
    assert_eq!(r.disengagements.len(), 0);
    // AC held control at every plant firing
    assert_eq!(r.ac_fraction, 1.0);

    let spec = toy_system(20);
    let trace = run(&spec, &EnvScript::default(), &mut NoHooks).unwrap();
    let r = audit(&trace, &spec).unwrap();
    let first = r.disengagements[0];
    assert_eq!(first.at, 8);
    assert_eq!(first.back_at, Some(12));
    assert!(r.ac_fraction > 0.0 && r.ac_fraction < 1.0);
}

#[test]
fn audit_rejects_tampered_traces() {
    let spec = toy_system(10);
    let mut trace = run(&spec, &EnvScript::default(), &mut NoHooks).unwrap();
    trace.events[3].inv_holds = false;
    assert!(matches!(audit(&trace, &spec), Err(HarnessError::TraceSpecMismatch(_))));
    let mut trace = run(&spec, &EnvScript::default(), &mut NoHooks).unwrap();
    trace.events[2].node = Some("ghost".into());
    assert!(matches!(audit(&trace, &spec), Err(HarnessError::TraceSpecMismatch(_))));
}
