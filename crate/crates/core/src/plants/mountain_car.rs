//! Mountain car with a cliff at the left end of the track.

use std::sync::Arc;

use crate::engine::{SystemBuilder, SystemSpec};
use crate::error::EngineError;
use crate::model::{NodeSpec, Time, TopicDecl, Value, ValueDomain, Valuation};
use crate::reach::{AbstractionConfig, DynamicsModel, GridOracle, GridSpec, Policy, RegionMask};
use crate::rta::{GridModel, Projection, RtaModuleSpec, SafetyPredicate};

use super::{controller_node, read_control};

pub const FORCE: f64 = 0.001;
pub const GRAVITY: f64 = 0.0025;
pub const X_MIN: f64 = -1.2;
pub const X_MAX: f64 = 0.6;
pub const V_CAP: f64 = 0.07;
pub const GOAL: f64 = 0.5;
pub const X_CLIFF: f64 = -1.1;

pub const STATE_TOPIC: &str = "mc_state";
pub const CONTROL_TOPIC: &str = "mc_accel";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MountainCarState {
    pub x: f64,
    pub v: f64,
    pub fell: bool,
}

/// One tick of the car. Past the cliff the state is absorbed.
pub fn mountain_car_step(s: MountainCarState, a: f64) -> MountainCarState {
    step_with_cliff(s, a, X_CLIFF)
}

pub fn step_with_cliff(s: MountainCarState, a: f64, cliff: f64) -> MountainCarState {
    if s.fell {
        return s;
    }
    let a = a.clamp(-1.0, 1.0);
    let mut v = (s.v + a * FORCE - (3.0 * s.x).cos() * GRAVITY).clamp(-V_CAP, V_CAP);
    let x = (s.x + v).clamp(X_MIN, X_MAX);
    if (x == X_MIN && v < 0.0) || (x == X_MAX && v > 0.0) {
        v = 0.0;
    }
    MountainCarState { x, v, fell: x <= cliff }
}


#[derive(Debug, Clone, PartialEq)]
pub struct MountainCarConfig {
    pub cells: [usize; 2],
    pub delta: Time,
    pub samples_per_axis: usize,
    pub start: [f64; 2],
    pub cliff: f64,
}

impl Default for MountainCarConfig {
    fn default() -> Self {
        Self { cells: [240, 240], delta: 1, samples_per_axis: 5, start: [-0.5, 0.0], cliff: X_CLIFF }
    }
}

/// The car's grid abstraction and its safe and safer regions.
///
/// φ_safe is the viability kernel of "not past the cliff" and
/// φ_safer = R(φ_safe, 2Δ).
#[derive(Clone)]
pub struct MountainCar {
    pub config: MountainCarConfig,
    pub oracle: Arc<GridOracle>,
    pub safe: RegionMask,
    pub safer: RegionMask,
    /// Per cell, indices into the control set that keep the car in φ_safe.
    pub viable: Arc<Vec<Vec<usize>>>,
}

pub fn projection() -> Projection {
    Arc::new(|s: &Value| s.as_slice().filter(|v| v.len() >= 2).map(|v| v[..2].to_vec()))
}

impl MountainCar {
    pub fn new(config: MountainCarConfig) -> Self {
        let cliff = config.cliff;
        let dynamics = DynamicsModel {
            dims: 2,
            bounds: vec![(X_MIN, X_MAX), (-V_CAP, V_CAP)],
            controls: vec![vec![-1.0], vec![0.0], vec![1.0]],
            step: Arc::new(move |s: &[f64], u: &[f64]| {
                if s[0] <= cliff {
                    return s.to_vec();
                }
                let n = step_with_cliff(MountainCarState { x: s[0], v: s[1], fell: false }, u[0], cliff);
                vec![n.x, n.v]
            }),
            dt: 1,
        };
        let grid = GridSpec::new(vec![X_MIN, -V_CAP], vec![X_MAX, V_CAP], config.cells.to_vec());
        let oracle = GridOracle::new(grid, dynamics, AbstractionConfig { samples_per_axis: config.samples_per_axis });
        let no_cliff = RegionMask::from_fn(&oracle.grid, |c| oracle.grid.cell_lo(c)[0] > cliff);
        let (safe, viable) = oracle.viability_kernel(&no_cliff);
        let safer = oracle.region_shrink(&safe, 2 * config.delta);
        Self { config, oracle: Arc::new(oracle), safe, safer, viable: Arc::new(viable) }
    }

    /// Energy pumping restricted to controls that keep the car viable:
    /// prefers pushing along the velocity, then coasting, then braking.
    pub fn sc_policy(&self) -> Policy {
        let oracle = self.oracle.clone();
        let viable = self.viable.clone();
        Arc::new(move |s: &[f64]| {
            let pump = if s[1] >= 0.0 { 1.0 } else { -1.0 };
            let prefs = [pump, 0.0, -pump];
            let choice = oracle.grid.cell_of(s).and_then(|c| {
                let ok = &viable[c];
                prefs.iter().copied().find(|&a| ok.iter().any(|&k| oracle.dynamics.controls[k][0] == a))
            });
            // outside the kernel nothing is viable: push away from the cliff
            vec![choice.unwrap_or(1.0)]
        })
    }

    /// Unrestricted energy pumping; swings past the cliff.
    pub fn ac_policy() -> Policy {
        Arc::new(|s: &[f64]| vec![if s[1] > 0.0 { 1.0 } else { -1.0 }])
    }

    pub fn topics(&self) -> Vec<TopicDecl> {
        vec![
            TopicDecl::new(STATE_TOPIC, ValueDomain::Vector(2)).with_default(Value::Vector(self.config.start.to_vec())),
            TopicDecl::new(CONTROL_TOPIC, ValueDomain::Scalar),
        ]
    }

    pub fn plant_node(&self) -> NodeSpec {
        let [x, v] = self.config.start;
        let cliff = self.config.cliff;
        NodeSpec::new("mc_plant", 1, move |l, inputs| {
            let s = l.as_slice().unwrap_or(&[0.0, 0.0, 0.0]);
            let a = read_control(inputs, CONTROL_TOPIC, 1)[0];
            let n = step_with_cliff(MountainCarState { x: s[0], v: s[1], fell: s[2] != 0.0 }, a, cliff);
            (
                Value::Vector(vec![n.x, n.v, if n.fell { 1.0 } else { 0.0 }]),
                Valuation::new().with(STATE_TOPIC, Value::Vector(vec![n.x, n.v])),
            )
        })
        .subscribes([CONTROL_TOPIC])
        .publishes([STATE_TOPIC])
        .with_local_state(Value::Vector(vec![x, v, 0.0]))
    }

    pub fn grid_model(&self, safe: RegionMask, sc: Policy) -> GridModel {
        let d = self.config.delta;
        GridModel::new(self.oracle.clone(), projection(), sc, safe, &[d, 2 * d])
    }

    /// The module with the given regions and safe controller; switching
    /// uses `ttf = s ∉ safer`.
    pub fn module_with(&self, safe: RegionMask, safer: RegionMask, sc: Policy) -> RtaModuleSpec {
        let d = self.config.delta;
        let model = self.grid_model(safe.clone(), sc.clone());
        let safer_region = model.region(safer);
        let in_safer = safer_region.clone();
        RtaModuleSpec {
            name: "mountain_car".into(),
            ac: controller_node("mc_ac", d, STATE_TOPIC, CONTROL_TOPIC, Self::ac_policy(), true),
            sc: controller_node("mc_sc", d, STATE_TOPIC, CONTROL_TOPIC, sc, true),
            dm_name: "mc_dm".into(),
            delta: d,
            state_topic: STATE_TOPIC.into(),
            safe: SafetyPredicate::from_region(model.region(safe)),
            safer: SafetyPredicate::from_region(safer_region),
            ttf2d: Arc::new(move |s| !in_safer.contains(s)),
            oracle: Some(Arc::new(model.clone())),
            grid_model: Some(model),
        }
    }

    pub fn module(&self) -> RtaModuleSpec {
        self.module_with(self.safe.clone(), self.safer.clone(), self.sc_policy())
    }

    pub fn system_with(&self, module: RtaModuleSpec, horizon: Time) -> Result<SystemSpec, EngineError> {
        SystemBuilder::default().topics(self.topics()).module(module).plant(self.plant_node()).build(horizon)
    }

    pub fn system(&self, horizon: Time) -> Result<SystemSpec, EngineError> {
        self.system_with(self.module(), horizon)
    }

    /// A single unprotected controller driving the car.
    pub fn unprotected_system(&self, policy: Policy, horizon: Time) -> Result<SystemSpec, EngineError> {
        let ctl = controller_node("mc_ctl", self.config.delta, STATE_TOPIC, CONTROL_TOPIC, policy, true);
        SystemBuilder::default().topics(self.topics()).node(ctl).plant(self.plant_node()).build(horizon)
    }
}
