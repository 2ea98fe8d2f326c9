use super::*;
use crate::error::DslError;
use crate::rta::tests::{toy_module, ToyOracle};
use std::sync::Arc;

const FIG: &str = "
topic localPosition : coord;
topic targetWaypoint : coord;
topic controlAction : vector(3);

node MotionPrimitive {
    period 10;
    subscribes localPosition, targetWaypoint;
    publishes controlAction;
    fun mp_ac;
}
";

#[test]
fn topic_declaration() {
    let p = parse("topic targetWaypoint : coord;").unwrap();
    let t: Vec<_> = p.topics().collect();
    assert_eq!(t.len(), 1);
    assert_eq!(t[0].name.name, "targetWaypoint");
    assert_eq!(t[0].ty, TypeExpr::Coord);
}

#[test]
fn node_declaration() {
    let p = parse(FIG).unwrap();
    let n = p.nodes().next().unwrap();
    assert_eq!((n.name.name.as_str(), n.period, n.plant), ("MotionPrimitive", 10, false));
    assert_eq!(n.subscribes, vec![Ident::new("localPosition"), Ident::new("targetWaypoint")]);
    assert_eq!(n.body.pos, Pos { line: 10, col: 9 });
}

#[test]
fn round_trip() {
    let src = format!(
        "{FIG}\nnode MotionPrimitiveSC {{ period 10; subscribes localPosition, targetWaypoint; publishes controlAction; fun mp_sc; }}\n\
         topic mode : enum {{ fast, careful }} = careful;\ntopic w : vector(2) = [-1.5, 2e-3];\n\
         rta SafeMotionPrimitive {{ sc MotionPrimitiveSC; ac MotionPrimitive; period 10; state localPosition;\n\
         safe fun PhiSafe_MPr; safer fun PhiSafer_MPr; ttf fun TTF2D_MPr; }}"
    );
    let p = parse(&src).unwrap();
    let printed = pretty(&p);
    let q = parse(&printed).unwrap();
    assert_eq!(p, q);
    assert_eq!(pretty(&q), printed);
}

#[test]
fn dangling_sc_is_unresolved() {
    let src = format!("{FIG}\nrta R {{ ac MotionPrimitive; sc Nowhere; period 10; state localPosition; safe fun a; safer fun b; ttf fun c; }}");
    let d = parse(&src).unwrap_err();
    assert_eq!(d.kind, DiagnosticKind::UnresolvedReference);
    assert_eq!(d.pos, Pos { line: 13, col: 32 });
}

#[test]
fn duplicates_and_missing_fields() {
    let d = parse("topic a : bool;\ntopic a : scalar;").unwrap_err();
    assert_eq!((d.kind, d.pos), (DiagnosticKind::DuplicateName, Pos { line: 2, col: 7 }));
    let d = parse("topic a : bool;\nnode n { period 1; period 2; fun f; }").unwrap_err();
    assert_eq!(d.kind, DiagnosticKind::DuplicateName);
    let d = parse("node n { publishes; fun f; }").unwrap_err();
    assert_eq!(d.pos, Pos { line: 1, col: 19 });
    let d = parse("node n { fun f; }").unwrap_err();
    assert!(d.message.contains("missing `period`"), "{d}");
    let d = parse("topic period : bool;").unwrap_err();
    assert_eq!(d.pos, Pos { line: 1, col: 7 });
}

fn toy_program(extra: &str) -> String {
    format!(
        "topic x : scalar;\ntopic u : scalar;\n\
         node ac {{ period 1; subscribes x; publishes u; fun ac; }}\n\
         node sc {{ period 1; subscribes x; publishes u; fun sc; }}\n\
         rta toy {{ ac ac; sc sc; period 1; state x; safe fun toy_safe; safer fun toy_safer; ttf fun toy_ttf; {extra} }}\n"
    )
}

fn toy_registry() -> Registry {
    let mut reg = Registry::default();
    let mut m = toy_module();
    m.ac.name = "ac".into();
    m.sc.name = "sc".into();
    reg.module("toy", &m);
    reg.reach.insert("toy_reach".into(), ReachBinding { oracle: Arc::new(ToyOracle), grid: None });
    reg
}

#[test]
fn elaborates_with_one_dm() {
    let p = parse(&toy_program("reach fun toy_reach;")).unwrap();
    let spec = elaborate(&p, &toy_registry(), &ElaborateOptions::default()).unwrap();
    assert_eq!(spec.modules.len(), 1);
    assert!(spec.node("toy_dm").is_some());
    assert_eq!(spec.acnodes.get("toy_dm").map(String::as_str), Some("ac"));
    assert!(spec.reports.contains_key("toy"));
}

#[test]
fn missing_binding_is_unbound() {
    let p = parse(&toy_program("reach fun nothing;")).unwrap();
    let Err(DslError::Diagnostic(d)) = elaborate(&p, &toy_registry(), &ElaborateOptions::default()) else {
        panic!("expected a diagnostic")
    };
    assert_eq!(d.kind, DiagnosticKind::UnboundFunction);
}

#[test]
fn shared_output_topic_is_rejected() {
    let src = format!(
        "{}node ac2 {{ period 1; subscribes x; publishes u; fun ac; }}\n\
         node sc2 {{ period 1; subscribes x; publishes u; fun sc; }}\n\
         rta toy2 {{ ac ac2; sc sc2; period 1; state x; safe fun toy_safe; safer fun toy_safer; ttf fun toy_ttf; }}\n",
        toy_program("")
    );
    let p = parse(&src).unwrap();
    let r = elaborate(&p, &toy_registry(), &ElaborateOptions::default());
    assert!(matches!(r, Err(DslError::Wellformedness { .. })), "{:?}", r.err());
}

#[test]
fn builtin_programs_parse_and_round_trip() {
    use scenario::PlantKind::*;
    for k in [MountainCar, Drone, Battery, Exploration, DroneBattery] {
        let p = parse(k.builtin_program()).unwrap_or_else(|d| panic!("{k:?}: {d}"));
        assert_eq!(parse(&pretty(&p)).unwrap(), p);
    }
}
