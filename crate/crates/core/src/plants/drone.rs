//! Planar drone following a waypoint track inside ε-tubes.
//!
//! The drone is a 2-D double integrator. A mission, folded into the plant,
//! advances to the next segment once the drone is near the current
//! waypoint and slow. Safety only concerns the lateral offset from the
//! current segment, so the grid abstraction lives in lateral coordinates
//! `(e, ė)`. Tracks must be axis-aligned so that the per-axis actuator
//! limits act directly on the lateral channel.

use std::sync::Arc;

use crate::engine::{Rule, SystemBuilder, SystemSpec, Trace};
use crate::error::EngineError;
use crate::harness::{FaultKind, FaultProfile};
use crate::model::{NodeSpec, Time, TopicDecl, Value, ValueDomain, Valuation};
use crate::reach::{AbstractionConfig, DynamicsModel, GridOracle, GridSpec, Policy, RegionMask};
use crate::rta::{GridModel, Projection, RtaModuleSpec, SafetyPredicate};

use super::{controller_node, read_control};

pub const STATE_TOPIC: &str = "drone_state";
pub const CONTROL_TOPIC: &str = "drone_accel";

/// Seconds per tick.
pub const DT: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DroneState2D {
    pub p: [f64; 2],
    pub v: [f64; 2],
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TubeSpec {
    pub a: [f64; 2],
    pub b: [f64; 2],
    pub epsilon: f64,
}

impl TubeSpec {
    pub fn new(a: [f64; 2], b: [f64; 2], epsilon: f64) -> Self {
        assert!(epsilon > 0.0 && a != b, "degenerate tube");
        Self { a, b, epsilon }
    }

    fn axis(&self) -> [f64; 2] {
        let (dx, dy) = (self.b[0] - self.a[0], self.b[1] - self.a[1]);
        let n = dx.hypot(dy);
        [dx / n, dy / n]
    }

    /// Left-hand unit normal.
    fn normal(&self) -> [f64; 2] {
        let u = self.axis();
        [-u[1], u[0]]
    }

    /// Signed lateral offset and lateral velocity.
    pub fn lateral(&self, s: &DroneState2D) -> [f64; 2] {
        let n = self.normal();
        [dot(sub(s.p, self.a), n), dot(s.v, n)]
    }

    pub fn contains(&self, x: [f64; 2]) -> bool {
        tube_distance(x, self) < self.epsilon
    }
}

fn dot(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

fn sub(a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
    [a[0] - b[0], a[1] - b[1]]
}

/// Distance from `x` to the line through the tube's endpoints.
pub fn tube_distance(x: [f64; 2], tube: &TubeSpec) -> f64 {
    dot(sub(x, tube.a), tube.normal()).abs()
}

fn saturate(a: [f64; 2], max: f64) -> [f64; 2] {
    let n = a[0].hypot(a[1]);
    if n > max {
        [a[0] * max / n, a[1] * max / n]
    } else {
        a
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DroneConfig {
    /// Closed square track; the mission ends back at the first waypoint.
    pub waypoints: Vec<[f64; 2]>,
    pub epsilon: f64,
    pub a_max: f64,
    pub v_max: f64,
    /// A waypoint counts as reached within this radius...
    pub arrive_radius: f64,
    /// ...and below this speed.
    pub arrive_speed: f64,
    pub ac_gain: f64,
    pub ac_damping: f64,
    /// Cruise speed of the safe controller along the tube.
    pub sc_speed: f64,
    pub delta: Time,
    pub lateral_cells: [usize; 2],
    pub samples_per_axis: usize,
}

impl Default for DroneConfig {
    fn default() -> Self {
        Self {
            waypoints: vec![[0.0, 0.0], [4.0, 0.0], [4.0, 4.0], [0.0, 4.0], [0.0, 0.0]],
            epsilon: 0.5,
            a_max: 2.0,
            v_max: 2.0,
            arrive_radius: 0.12,
            arrive_speed: 0.3,
            ac_gain: 3.0,
            ac_damping: 2.5,
            sc_speed: 0.6,
            delta: 1,
            lateral_cells: [120, 84],
            samples_per_axis: 3,
        }
    }
}

/// One tick of the double integrator with per-axis limits.
pub fn drone_step(s: DroneState2D, u: [f64; 2], a_max: f64, v_max: f64) -> DroneState2D {
    let mut n = s;
    for i in 0..2 {
        let a = u[i].clamp(-a_max, a_max);
        n.v[i] = (s.v[i] + a * DT).clamp(-v_max, v_max);
        n.p[i] = s.p[i] + n.v[i] * DT;
    }
    n
}

/// Aggressive proportional-derivative controller toward `target`.
pub fn goto_ac(s: &DroneState2D, target: [f64; 2], gain: f64, damping: f64, a_max: f64) -> [f64; 2] {
    let e = sub(target, s.p);
    saturate([gain * e[0] - damping * s.v[0], gain * e[1] - damping * s.v[1]], a_max)
}

const SC_K_POS: f64 = 6.0;
const SC_K_VEL: f64 = 5.0;

/// Lateral channel of the safe controller, on `(e, ė)`.
pub fn goto_sc_lateral(e: f64, de: f64, a_max: f64) -> f64 {
    (-SC_K_POS * e - SC_K_VEL * de).clamp(-a_max, a_max)
}

/// Damped pull toward the tube axis first, then a slow approach to the
/// segment's end with whatever acceleration budget remains.
pub fn goto_sc(s: &DroneState2D, tube: &TubeSpec, cfg: &DroneConfig) -> [f64; 2] {
    let (u, n) = (tube.axis(), tube.normal());
    let [e, de] = tube.lateral(s);
    let lat = goto_sc_lateral(e, de, cfg.a_max);
    let along_err = dot(sub(tube.b, s.p), u);
    let v_ref = (1.5 * along_err).clamp(-cfg.sc_speed, cfg.sc_speed);
    let budget = (cfg.a_max * cfg.a_max - lat * lat).max(0.0).sqrt();
    let along = (4.0 * (v_ref - dot(s.v, u))).clamp(-budget, budget);
    [lat * n[0] + along * u[0], lat * n[1] + along * u[1]]
}

/// Decoded `drone_state` topic: position, velocity and segment index.
pub fn decode(s: &[f64]) -> Option<(DroneState2D, usize)> {
    (s.len() >= 5).then(|| (DroneState2D { p: [s[0], s[1]], v: [s[2], s[3]] }, s[4].max(0.0) as usize))
}

fn encode(s: &DroneState2D, seg: usize) -> Value {
    Value::Vector(vec![s.p[0], s.p[1], s.v[0], s.v[1], seg as f64])
}

/// The track, its lateral grid abstraction and the derived regions.
#[derive(Clone)]
pub struct Drone {
    pub config: DroneConfig,
    pub tubes: Arc<Vec<TubeSpec>>,
    pub oracle: Arc<GridOracle>,
    /// Cells of the lateral grid lying inside the ε-tube.
    pub tube_cells: RegionMask,
    /// Largest tube subset the safe controller never leaves.
    pub safe: RegionMask,
    /// R(φ_safe, 2Δ).
    pub safer: RegionMask,
}

impl Drone {
    pub fn new(config: DroneConfig) -> Self {
        let tubes: Vec<TubeSpec> =
            config.waypoints.windows(2).map(|w| TubeSpec::new(w[0], w[1], config.epsilon)).collect();
        for t in &tubes {
            let u = t.axis();
            assert!(u[0] == 0.0 || u[1] == 0.0, "track segments must be axis-aligned");
        }
        let (a_max, v_max) = (config.a_max, config.v_max);
        let dynamics = DynamicsModel {
            dims: 2,
            bounds: vec![(-config.epsilon, config.epsilon), (-v_max, v_max)],
            controls: [-1.0, -0.5, 0.0, 0.5, 1.0].iter().map(|k| vec![k * a_max]).collect(),
            step: Arc::new(move |s: &[f64], u: &[f64]| {
                let de = (s[1] + u[0].clamp(-a_max, a_max) * DT).clamp(-v_max, v_max);
                vec![s[0] + de * DT, de]
            }),
            dt: 1,
        };
        let pad = [0.1 * config.epsilon, 0.05 * v_max];
        let grid = GridSpec::new(
            vec![-config.epsilon - pad[0], -v_max - pad[1]],
            vec![config.epsilon + pad[0], v_max + pad[1]],
            config.lateral_cells.to_vec(),
        );
        let oracle = GridOracle::new(grid, dynamics, AbstractionConfig { samples_per_axis: config.samples_per_axis });
        let eps = config.epsilon;
        let w = oracle.grid.width(0);
        let tube_cells = RegionMask::from_fn(&oracle.grid, |c| {
            let lo = oracle.grid.cell_lo(c)[0];
            lo > -eps && lo + w < eps
        });
        let sc = Self::lateral_policy(a_max);
        let safe = oracle.invariant_kernel(&tube_cells, &oracle.closed_loop_successors(&sc));
        let safer = oracle.region_shrink(&safe, 2 * config.delta);
        Self { config, tubes: Arc::new(tubes), oracle: Arc::new(oracle), tube_cells, safe, safer }
    }

    fn lateral_policy(a_max: f64) -> Policy {
        Arc::new(move |s: &[f64]| vec![goto_sc_lateral(s[0], s[1], a_max)])
    }

    pub fn segments(&self) -> usize {
        self.tubes.len()
    }

    /// Tube in force for segment `seg`; after the last segment the final
    /// one stays active.
    pub fn tube(&self, seg: usize) -> &TubeSpec {
        &self.tubes[seg.min(self.tubes.len() - 1)]
    }

    /// `(e, ė)` of a `drone_state` value.
    pub fn projection(&self) -> Projection {
        let tubes = self.tubes.clone();
        Arc::new(move |v: &Value| {
            let (s, seg) = decode(v.as_slice()?)?;
            Some(tubes[seg.min(tubes.len() - 1)].lateral(&s).to_vec())
        })
    }

    pub fn topics(&self) -> Vec<TopicDecl> {
        let start = DroneState2D { p: self.config.waypoints[0], v: [0.0, 0.0] };
        vec![
            TopicDecl::new(STATE_TOPIC, ValueDomain::Vector(5)).with_default(encode(&start, 0)),
            TopicDecl::new(CONTROL_TOPIC, ValueDomain::Vector(2)),
        ]
    }

    /// Integrates the drone and advances the mission.
    pub fn plant_node(&self) -> NodeSpec {
        let tubes = self.tubes.clone();
        let cfg = self.config.clone();
        let start = encode(&DroneState2D { p: cfg.waypoints[0], v: [0.0, 0.0] }, 0);
        NodeSpec::new("drone_plant", 1, move |l, inputs| {
            let (s, mut seg) = l.as_slice().and_then(decode).expect("drone plant state");
            let u = read_control(inputs, CONTROL_TOPIC, 2);
            let n = drone_step(s, [u[0], u.get(1).copied().unwrap_or(0.0)], cfg.a_max, cfg.v_max);
            if seg < tubes.len() {
                let d = sub(tubes[seg].b, n.p);
                if d[0].hypot(d[1]) < cfg.arrive_radius && n.v[0].hypot(n.v[1]) < cfg.arrive_speed {
                    seg += 1;
                }
            }
            let out = encode(&n, seg);
            (out.clone(), Valuation::new().with(STATE_TOPIC, out))
        })
        .subscribes([CONTROL_TOPIC])
        .publishes([STATE_TOPIC])
        .with_local_state(start)
    }

    pub fn ac_policy(&self) -> Policy {
        let tubes = self.tubes.clone();
        let cfg = self.config.clone();
        Arc::new(move |v: &[f64]| {
            let Some((s, seg)) = decode(v) else { return vec![0.0, 0.0] };
            let target = tubes[seg.min(tubes.len() - 1)].b;
            goto_ac(&s, target, cfg.ac_gain, cfg.ac_damping, cfg.a_max).to_vec()
        })
    }

    pub fn sc_policy(&self) -> Policy {
        let tubes = self.tubes.clone();
        let cfg = self.config.clone();
        Arc::new(move |v: &[f64]| {
            let Some((s, seg)) = decode(v) else { return vec![0.0, 0.0] };
            goto_sc(&s, &tubes[seg.min(tubes.len() - 1)], &cfg).to_vec()
        })
    }

    pub fn module(&self) -> RtaModuleSpec {
        let d = self.config.delta;
        let model = GridModel::new(
            self.oracle.clone(),
            self.projection(),
            Self::lateral_policy(self.config.a_max),
            self.safe.clone(),
            &[d, 2 * d],
        );
        let safer = model.region(self.safer.clone());
        let in_safer = safer.clone();
        RtaModuleSpec {
            name: "drone_tube".into(),
            ac: controller_node("drone_ac", d, STATE_TOPIC, CONTROL_TOPIC, self.ac_policy(), false),
            sc: controller_node("drone_sc", d, STATE_TOPIC, CONTROL_TOPIC, self.sc_policy(), false),
            dm_name: "drone_dm".into(),
            delta: d,
            state_topic: STATE_TOPIC.into(),
            safe: SafetyPredicate::from_region(model.region(self.safe.clone())),
            safer: SafetyPredicate::from_region(safer),
            ttf2d: Arc::new(move |s| !in_safer.contains(s)),
            oracle: Some(Arc::new(model.clone())),
            grid_model: Some(model),
        }
    }

    pub fn builder(&self) -> SystemBuilder {
        SystemBuilder::default().topics(self.topics()).plant(self.plant_node())
    }

    pub fn rta_system(&self, horizon: Time) -> Result<SystemSpec, EngineError> {
        self.builder().module(self.module()).build(horizon)
    }

    fn single(&self, name: &str, policy: Policy, horizon: Time) -> Result<SystemSpec, EngineError> {
        let ctl = controller_node(name, self.config.delta, STATE_TOPIC, CONTROL_TOPIC, policy, false);
        self.builder().node(ctl).build(horizon)
    }

    /// The advanced controller alone, as node `drone_ac`.
    pub fn ac_only_system(&self, horizon: Time) -> Result<SystemSpec, EngineError> {
        self.single("drone_ac", self.ac_policy(), horizon)
    }

    pub fn sc_only_system(&self, horizon: Time) -> Result<SystemSpec, EngineError> {
        self.single("drone_sc", self.sc_policy(), horizon)
    }

    /// Random kicks plus a constant push on the advanced controller; enough
    /// to carry it out of the tube.
    pub fn overshoot_faults(seed: u64) -> FaultProfile {
        FaultProfile { faults: Vec::new(), seed }
            .with("drone_ac", FaultKind::OutputBias { offset: vec![2.0, 2.0] })
            .with("drone_ac", FaultKind::OutputPerturbation { amplitude: 1.0 })
    }

    /// Mild random kicks on the advanced controller.
    pub fn gust_faults(seed: u64) -> FaultProfile {
        FaultProfile { faults: Vec::new(), seed }.with("drone_ac", FaultKind::OutputPerturbation { amplitude: 0.3 })
    }
    fn states<'t>(&self, trace: &'t Trace) -> impl Iterator<Item = (Time, DroneState2D, usize)> + 't {
        trace.events.iter().filter(|e| e.rule == Rule::NodeStep).filter_map(|e| {
            let (s, seg) = e.writes.get(STATE_TOPIC)?.as_slice().and_then(decode)?;
            Some((e.time, s, seg))
        })
    }

    /// Time at which the last waypoint was reached.
    pub fn completion_time(&self, trace: &Trace) -> Option<Time> {
        self.states(trace).find(|(_, _, seg)| *seg >= self.segments()).map(|(t, _, _)| t)
    }

    /// Published states lying outside the ε-tube of their segment.
    pub fn tube_exits(&self, trace: &Trace) -> usize {
        self.states(trace).filter(|(_, s, seg)| !self.tube(*seg).contains(s.p)).count()
    }
}
