//! Acceptance gate: one PASS/FAIL line per criterion, nonzero exit if any fails.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rta_core::dsl::{parse, pretty};
use rta_core::engine::{SystemBuilder, SystemSpec};
use rta_core::harness::{audit, Experiment, FaultKind, FaultProfile, SchedulePolicy};
use rta_core::plants::battery::{Battery, BatteryConfig};
use rta_core::plants::drone::{Drone, DroneConfig};
use rta_core::plants::mountain_car::{MountainCar, MountainCarConfig};
use rta_core::plants::tube_and_battery;
use rta_core::reach::{
    distance_to_complement, ttf_lipschitz, AbstractionConfig, DynamicsModel, GridOracle, GridSpec, RegionMask,
};
use rta_core::wellformed::Condition;
use rta_core::{check_composable, check_module, EngineError, RtaModuleSpec};

type Outcome = Result<String, String>;

const HORIZON: u64 = 1000;
const P2B_HORIZON: u64 = 1000;
const DRONE_HORIZON: u64 = 600;

fn verdict(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn exhaustive(spec: &SystemSpec) -> rta_core::harness::ExploreReport {
    Experiment::new(spec, SchedulePolicy::exhaustive(1)).explore().expect("exploration runs")
}

fn exhaustive_safety(mc: &MountainCar) -> Outcome {
    let shrink_ok = mc.config.delta == 1 && mc.safer == mc.oracle.region_shrink(&mc.safe, 2);
    let spec = mc.system(HORIZON).map_err(|e| e.to_string())?;
    let t0 = Instant::now();
    let r = exhaustive(&spec);
    let took = t0.elapsed();
    verdict(
        shrink_ok
            && r.runs.len() >= 1000
            && spec.horizon >= 1000
            && r.inv_violations() == 0
            && r.unsafe_entries() == 0
            && took < Duration::from_secs(300),
        format!(
            "{} schedules x {} ticks, {} inv violations, {} unsafe entries, {:.1?}",
            r.runs.len(),
            spec.horizon,
            r.inv_violations(),
            r.unsafe_entries(),
            took
        ),
    )
}

fn mutants(mc: &MountainCar) -> Outcome {
    let grid = mc.oracle.grid.clone();
    let strip = RegionMask::from_predicate(&grid, |p| p[0] > -0.3 && p[0] < -0.25);
    let holed = mc.safe.intersect(&strip.complement());
    let holed_safer = mc.oracle.region_shrink(&holed, 2);
    let unreachable = RegionMask::from_predicate(&grid, |p| p[0] > 0.0 && p[1] < -0.05);
    let cases = [
        (Condition::P2a, mc.module_with(holed, holed_safer, mc.sc_policy())),
        (Condition::P2b, mc.module_with(mc.safe.clone(), mc.safer.intersect(&unreachable), mc.sc_policy())),
        (Condition::P3, mc.module_with(mc.safe.clone(), mc.safe.clone(), mc.sc_policy())),
    ];
    let mut ok = true;
    let mut parts = Vec::new();
    for (cond, module) in cases {
        let failed = check_module(&module, P2B_HORIZON).failed();
        let spec = mc.system_with(module, HORIZON).map_err(|e| e.to_string())?;
        let r = exhaustive(&spec);
        let bad = r.failing().count();
        ok &= failed == vec![cond] && bad > 0;
        parts.push(format!("{cond}: checker fails {failed:?}, {bad}/{} schedules unsafe", r.runs.len()));
    }
    verdict(ok, parts.join("; "))
}

fn oracle_equivalence(mc: &MountainCar) -> Outcome {
    let o = &mc.oracle;
    let shape = o.grid.shape().to_vec();
    let safer = o.region_shrink(&mc.safe, 2);
    let mut mismatches = 0;
    for c in 0..o.grid.len() {
        let by_grid = o.ttf_grid(&o.grid.center(c), &mc.safe, 2).map_err(|e| e.to_string())?;
        if by_grid == safer.contains(c) || by_grid != o.ttf_cell(c, &mc.safe, 2) {
            mismatches += 1;
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut monotone_fail = 0;
    for _ in 0..20 {
        let (x0, v0) = (rng.gen_range(-1.1..0.0), rng.gen_range(-0.07..0.0));
        let (x1, v1) = (rng.gen_range(x0 + 0.2..0.6), rng.gen_range(v0 + 0.02..0.07));
        let phi = RegionMask::from_predicate(&o.grid, |p| p[0] >= x0 && p[0] < x1 && p[1] >= v0 && p[1] < v1)
            .union(&mc.safe);
        let sub = phi.intersect(&RegionMask::from_predicate(&o.grid, |p| p[1] < (v0 + v1) / 2.0));
        let t = rng.gen_range(1..5);
        let r = o.region_shrink(&phi, t);
        let ok = r.is_subset(&phi)
            && o.region_shrink(&phi, t + 1).is_subset(&r)
            && o.region_shrink(&sub, t).is_subset(&r);
        monotone_fail += usize::from(!ok);
    }
    verdict(
        shape.iter().all(|&n| n >= 100) && mismatches == 0 && monotone_fail == 0,
        format!(
            "{}x{} grid, {mismatches} cell mismatches; monotonicity failed on {monotone_fail}/20 pairs",
            shape[0], shape[1]
        ),
    )
}

fn switch_back(drone: &Drone) -> Outcome {
    let spec = drone.rta_system(DRONE_HORIZON).map_err(|e| e.to_string())?;
    let trace = Experiment::new(&spec, SchedulePolicy::deterministic()).replay(0).map_err(|e| e.to_string())?;
    let r = audit(&trace, &spec).map_err(|e| e.to_string())?;
    let live = r.disengagements.iter().all(|d| d.back_at.is_some_and(|b| b - d.at <= P2B_HORIZON));
    verdict(
        r.ac_fraction >= 0.90 && live && r.is_clean(),
        format!("ac_fraction {:.3}, {} disengagements, all returned: {live}", r.ac_fraction, r.disengagements.len()),
    )
}

fn completion(drone: &Drone, spec: &SystemSpec, faults: FaultProfile) -> Option<u64> {
    let trace = Experiment::new(spec, SchedulePolicy::deterministic()).with_faults(faults).replay(0).ok()?;
    drone.completion_time(&trace)
}

fn ordering(drone: &Drone) -> Outcome {
    let build = |s: Result<SystemSpec, EngineError>| s.map_err(|e| e.to_string());
    let (ac, rta, sc) = (
        build(drone.ac_only_system(DRONE_HORIZON))?,
        build(drone.rta_system(DRONE_HORIZON))?,
        build(drone.sc_only_system(DRONE_HORIZON))?,
    );
    let (mut ordered, mut strict) = (0, 0);
    let mut worst = String::new();
    for seed in 0..20 {
        let t_ac = completion(drone, &ac, Drone::gust_faults(seed));
        let t_rta = completion(drone, &rta, Drone::gust_faults(seed));
        let t_sc = completion(drone, &sc, FaultProfile::none());
        match (t_ac, t_rta, t_sc) {
            (Some(a), Some(r), Some(s)) if a <= r && r <= s => {
                ordered += 1;
                strict += usize::from(r < s);
            }
            other => worst = format!(", seed {seed} out of order: {other:?}"),
        }
    }
    verdict(
        ordered == 20 && strict * 10 >= 20 * 8,
        format!("ordered on {ordered}/20 seeds, RTA faster than SC on {strict}/20{worst}"),
    )
}

fn tube_faults(drone: &Drone) -> Outcome {
    let ac = drone.ac_only_system(DRONE_HORIZON).map_err(|e| e.to_string())?;
    let rta = drone.rta_system(DRONE_HORIZON).map_err(|e| e.to_string())?;
    let (mut ac_exiting, mut rta_exits, mut rta_unsafe) = (0, 0, 0);
    for seed in 0..50 {
        let run = |spec| Experiment::new(spec, SchedulePolicy::deterministic()).with_faults(Drone::overshoot_faults(seed)).replay(0);
        let t = run(&ac).map_err(|e| e.to_string())?;
        ac_exiting += usize::from(drone.tube_exits(&t) >= 1);
        let t = run(&rta).map_err(|e| e.to_string())?;
        rta_exits += drone.tube_exits(&t);
        rta_unsafe += audit(&t, &rta).map_err(|e| e.to_string())?.unsafe_entries;
    }
    verdict(
        ac_exiting == 50 && rta_exits == 0 && rta_unsafe == 0,
        format!("AC-only left the tube in {ac_exiting}/50 runs; RTA: {rta_exits} exits, {rta_unsafe} unsafe entries"),
    )
}

fn battery() -> Outcome {
    let b = Battery::new(BatteryConfig::default());
    let threshold = b.config.preset.threshold();
    let (mut min_charge, mut depleted, mut low_switch) = (f64::INFINITY, 0, 0);
    for seed in 0..50 {
        let spec = b.rta_system(seed, 3000).map_err(|e| e.to_string())?;
        let t = Experiment::new(&spec, SchedulePolicy::deterministic()).replay(0).map_err(|e| e.to_string())?;
        min_charge = min_charge.min(Battery::min_charge(&t).unwrap_or(f64::NEG_INFINITY));
        low_switch += b.switch_back_levels(&t).iter().filter(|&&l| l <= threshold).count();
        let bare = b.unprotected_system(seed, 3000).map_err(|e| e.to_string())?;
        let t = Experiment::new(&bare, SchedulePolicy::deterministic()).replay(0).map_err(|e| e.to_string())?;
        depleted += usize::from(Battery::depletions(&t) > 0);
    }
    verdict(
        min_charge > 0.0 && depleted >= 1 && low_switch == 0,
        format!(
            "min charge {min_charge:.2} over 50 missions; {low_switch} switch-backs at or below {threshold}; \
             {depleted}/50 missions deplete without the module"
        ),
    )
}

fn renamed(m: &RtaModuleSpec, suffix: &str) -> RtaModuleSpec {
    let mut m = m.clone();
    m.name = format!("{}{suffix}", m.name);
    m.dm_name = format!("{}{suffix}", m.dm_name);
    m.ac.name = format!("{}{suffix}", m.ac.name);
    m.sc.name = format!("{}{suffix}", m.sc.name);
    m
}

fn composition(drone: &Drone) -> Outcome {
    let b = Battery::new(BatteryConfig::default());
    let plants = [drone.plant_node(), b.plant_node(true)];
    let (mut runs, mut inv, mut unsafe_) = (0, 0, 0);
    let mut composable = true;
    for seed in 0..5 {
        let spec = tube_and_battery(drone, &b, seed, 1500).map_err(|e| e.to_string())?;
        composable &= check_composable(&spec.modules, &plants).is_pass();
        let r = Experiment::new(&spec, SchedulePolicy::random(seed, 10))
            .with_faults(Drone::gust_faults(seed))
            .explore()
            .map_err(|e| e.to_string())?;
        runs += r.runs.len();
        inv += r.inv_violations();
        unsafe_ += r.unsafe_entries();
    }
    let twin = renamed(&drone.module(), "_twin");
    let shared = check_composable(&[drone.module(), twin.clone()], &plants).is_fail()
        && matches!(
            SystemBuilder::default().topics(drone.topics()).module(drone.module()).module(twin).plant(drone.plant_node()).build(100),
            Err(EngineError::NotComposable(_))
        );
    verdict(
        composable && inv == 0 && unsafe_ == 0 && shared,
        format!("composable {composable}; {runs} runs, {inv} inv violations, {unsafe_} unsafe; shared output rejected {shared}"),
    )
}

fn crash_replay(mc: &MountainCar) -> Outcome {
    let spec = mc.system(400).map_err(|e| e.to_string())?;
    let faults = FaultProfile::none().with("mc_dm", FaultKind::DmDrop { from: 5, until: None });
    let exp = Experiment::new(&spec, SchedulePolicy::random(0, 4)).with_faults(faults);
    let r = exp.explore().map_err(|e| e.to_string())?;
    let Some(w) = r.failing().next() else {
        return Err(format!("no violation in {} runs", r.runs.len()));
    };
    let trace = exp.replay_verified(w.id, &w.digest).map_err(|e| e.to_string())?;
    let again = audit(&trace, &spec).map_err(|e| e.to_string())?;
    let same = again.first_violation == w.report.first_violation && trace.digest() == w.digest;
    verdict(
        w.report.inv_violations >= 1 && same,
        format!(
            "run {} violates at event {:?}; replay at {:?}, digest {}",
            w.id,
            w.report.first_violation,
            again.first_violation,
            if trace.digest() == w.digest { "identical" } else { "differs" }
        ),
    )
}

fn lipschitz() -> Outcome {
    const RATE: f64 = 0.05;
    let dynamics = DynamicsModel {
        dims: 1,
        bounds: vec![(0.0, 10.0)],
        controls: vec![vec![-RATE], vec![0.0], vec![RATE]],
        step: Arc::new(|s: &[f64], u: &[f64]| vec![(s[0] + u[0]).clamp(0.0, 10.0)]),
        dt: 1,
    };
    let grid = GridSpec::new(vec![0.0], vec![10.0], vec![400]);
    let o = GridOracle::new(grid.clone(), dynamics, AbstractionConfig { samples_per_axis: 3 });
    let safe = RegionMask::from_predicate(&grid, |p| (2.0..8.0).contains(&p[0]));
    let dist = distance_to_complement(&grid, &safe);
    let (mut counter, mut conservative) = (0, 0);
    for c in 0..grid.len() {
        let by_grid = o.ttf_cell(c, &safe, 2);
        let by_lipschitz = ttf_lipschitz(dist[c], RATE, 2.0).map_err(|e| e.to_string())?;
        counter += usize::from(by_grid && !by_lipschitz);
        conservative += usize::from(by_lipschitz && !by_grid);
    }
    verdict(
        counter == 0,
        format!(
            "{counter} counterexamples over {} cells; Lipschitz-only firings {:.2}%",
            grid.len(),
            100.0 * conservative as f64 / grid.len() as f64
        ),
    )
}

fn golden_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

fn sorted_rta(dir: &PathBuf) -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = fs::read_dir(dir)
        .map(|d| d.filter_map(|e| e.ok().map(|e| e.path())).collect())
        .unwrap_or_default();
    v.retain(|p| p.extension().is_some_and(|e| e == "rta"));
    v.sort();
    v
}

fn parser() -> Outcome {
    let mut bad = Vec::new();
    let valid = sorted_rta(&golden_dir().join("valid"));
    for p in &valid {
        let name = p.file_name().unwrap().to_string_lossy().into_owned();
        let src = fs::read_to_string(p).map_err(|e| e.to_string())?;
        let golden = fs::read_to_string(p.with_extension("golden")).unwrap_or_default();
        match parse(&src) {
            Ok(prog) => {
                let text = pretty(&prog);
                let again = parse(&text).map(|q| q == prog && pretty(&q) == text).unwrap_or(false);
                if text != golden || !again {
                    bad.push(name);
                }
            }
            Err(d) => bad.push(format!("{name}: {d}")),
        }
    }

    let dir = golden_dir().join("malformed");
    let expected = fs::read_to_string(dir.join("expected.txt")).map_err(|e| e.to_string())?;
    let mut diagnosed = 0;
    for line in expected.lines() {
        let mut it = line.split_whitespace();
        let (Some(file), Some(pos), Some(kind)) = (it.next(), it.next(), it.next()) else { continue };
        let src = fs::read_to_string(dir.join(file)).map_err(|e| e.to_string())?;
        match parse(&src) {
            Err(d) if format!("{}:{}", d.pos.line, d.pos.col) == pos && d.kind.to_string() == kind => diagnosed += 1,
            Err(d) => bad.push(format!("{file}: got {d}")),
            Ok(_) => bad.push(format!("{file}: accepted")),
        }
    }
    let shapes = ["01_topics_and_nodes.rta", "02_rta_module.rta"]
        .iter()
        .all(|f| valid.iter().any(|p| p.ends_with(f)));
    verdict(
        valid.len() >= 10 && diagnosed >= 10 && bad.is_empty() && shapes,
        format!("{} golden programs, {diagnosed} positioned diagnostics, problems {bad:?}", valid.len()),
    )
}

fn main() -> ExitCode {
    let mc = MountainCar::new(MountainCarConfig::default());
    let drone = Drone::new(DroneConfig::default());
    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome + '_>)> = vec![
        ("1 exhaustive safety", Box::new(|| exhaustive_safety(&mc))),
        ("2 single-condition mutants", Box::new(|| mutants(&mc))),
        ("3 oracle equivalence", Box::new(|| oracle_equivalence(&mc))),
        ("4 switch-back", Box::new(|| switch_back(&drone))),
        ("5 completion ordering", Box::new(|| ordering(&drone))),
        ("6 tube under faults", Box::new(|| tube_faults(&drone))),
        ("7 battery", Box::new(battery)),
        ("8 composition", Box::new(|| composition(&drone))),
        ("9 crash replay", Box::new(|| crash_replay(&mc))),
        ("10 lipschitz soundness", Box::new(lipschitz)),
        ("11 parser goldens", Box::new(parser)),
    ];
    let mut failed = 0;
    for (name, check) in &criteria {
        let t0 = Instant::now();
        let (tag, detail) = match check() {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("{tag} criterion {name}: {detail} [{:.1?}]", t0.elapsed());
    }
    println!("{} of {} criteria pass", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
