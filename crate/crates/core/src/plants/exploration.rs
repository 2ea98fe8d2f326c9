//! Exploring an unknown area with hidden walls.
//!
//! The drone is a single integrator with a per-axis speed limit. The
//! advanced controller visits waypoints regardless of obstacles; walls are
//! only discovered at runtime, through the decision module's speed-ball
//! check. The safe controller flies back to the known area.

use std::sync::Arc;

use crate::engine::{SystemBuilder, SystemSpec};
use crate::error::{EngineError, RtaError};
use crate::model::{NodeSpec, Time, TopicDecl, Value, ValueDomain, Valuation};
use crate::reach::{ttf_vmax, GridSpec, RegionMask};
use crate::rta::{ReachOracle, RtaModuleSpec, SafetyPredicate};

use super::{controller_node, read_control};

pub const STATE_TOPIC: &str = "ex_state";
pub const CONTROL_TOPIC: &str = "ex_vel";

/// Probes per axis of the speed ball.
const BALL_RESOLUTION: usize = 9;

#[derive(Debug, Clone, PartialEq)]
pub struct ExplorationMap {
    pub grid: GridSpec,
    pub known: RegionMask,
    pub walls: RegionMask,
    /// Largest speed per axis, per tick.
    pub v_max: f64,
}

impl ExplorationMap {
    /// Builds the masks from axis-aligned boxes `[x0, y0, x1, y1]`.
    pub fn from_boxes(grid: GridSpec, known: [f64; 4], walls: &[[f64; 4]], v_max: f64) -> Self {
        let inside = |b: &[f64; 4], p: &[f64]| p[0] >= b[0] && p[0] < b[2] && p[1] >= b[1] && p[1] < b[3];
        let known_mask = RegionMask::from_fn(&grid, |c| inside(&known, &grid.center(c)));
        let wall_mask = RegionMask::from_fn(&grid, |c| walls.iter().any(|w| inside(w, &grid.center(c))));
        assert!(known_mask.count() > 0, "known area is empty");
        assert!(known_mask.intersect(&wall_mask).count() == 0, "known area overlaps a wall");
        Self { grid, known: known_mask, walls: wall_mask, v_max }
    }

    pub fn is_free(&self, p: &[f64]) -> bool {
        self.grid.cell_of(p).is_some_and(|c| !self.walls.contains(c))
    }

    pub fn is_known(&self, p: &[f64]) -> bool {
        self.known.contains_state(&self.grid, p)
    }

    /// Centroid of the known cells.
    pub fn known_center(&self) -> Vec<f64> {
        let n = self.known.count() as f64;
        let mut c = vec![0.0; self.grid.dims()];
        for i in self.known.iter_set() {
            for (a, x) in c.iter_mut().zip(self.grid.center(i)) {
                *a += x / n;
            }
        }
        c
    }
}

impl Default for ExplorationMap {
    fn default() -> Self {
        let grid = GridSpec::new(vec![0.0, 0.0], vec![10.0, 10.0], vec![50, 50]);
        Self::from_boxes(grid, [1.0, 1.0, 4.0, 4.0], &[[6.0, 0.6, 6.4, 5.0], [1.0, 7.4, 5.0, 7.8]], 0.2)
    }
}

/// `Reach(p, *, t) ⊆ free space`: the speed box of radius `v_max·t` is clear.
pub struct BallOracle {
    pub map: Arc<ExplorationMap>,
}

impl ReachOracle for BallOracle {
    fn reach_within_safe(&self, s: &Value, t: Time) -> Result<bool, RtaError> {
        let Some(p) = position(s) else { return Ok(false) };
        let m = &self.map;
        Ok(!ttf_vmax(p, |q| m.is_free(q), m.v_max, t as f64, BALL_RESOLUTION))
    }
}

fn position(s: &Value) -> Option<&[f64]> {
    s.as_slice().filter(|v| v.len() >= 2).map(|v| &v[..2])
}

fn toward(p: &[f64], q: &[f64], v_max: f64) -> Vec<f64> {
    vec![(q[0] - p[0]).clamp(-v_max, v_max), (q[1] - p[1]).clamp(-v_max, v_max)]
}

#[derive(Debug, Clone)]
pub struct Exploration {
    pub map: Arc<ExplorationMap>,
    pub waypoints: Vec<[f64; 2]>,
    pub delta: Time,
    /// Firings spent on one waypoint before giving up on it.
    pub patience: u64,
}

impl Default for Exploration {
    fn default() -> Self {
        let map = ExplorationMap::default();
        Self {
            map: Arc::new(map),
            waypoints: vec![[8.0, 2.5], [2.5, 2.5], [2.5, 9.0], [2.5, 2.5], [8.5, 8.5], [2.5, 2.5]],
            delta: 1,
            patience: 120,
        }
    }
}

impl Exploration {
    pub fn start(&self) -> Vec<f64> {
        self.map.known_center()
    }

    pub fn topics(&self) -> Vec<TopicDecl> {
        vec![
            TopicDecl::new(STATE_TOPIC, ValueDomain::Vector(2)).with_default(Value::Vector(self.start())),
            TopicDecl::new(CONTROL_TOPIC, ValueDomain::Vector(2)),
        ]
    }

    pub fn plant_node(&self) -> NodeSpec {
        let v_max = self.map.v_max;
        NodeSpec::new("ex_plant", 1, move |l, inputs| {
            let p = l.as_slice().unwrap_or(&[0.0, 0.0]);
            let u = read_control(inputs, CONTROL_TOPIC, 2);
            let n = Value::Vector(vec![
                p[0] + u[0].clamp(-v_max, v_max),
                p[1] + u.get(1).copied().unwrap_or(0.0).clamp(-v_max, v_max),
            ]);
            (n.clone(), Valuation::new().with(STATE_TOPIC, n))
        })
        .subscribes([CONTROL_TOPIC])
        .publishes([STATE_TOPIC])
        .with_local_state(Value::Vector(self.start()))
    }

    /// Cycles through the waypoints, moving on when one is reached or after
    /// `patience` firings. Local state: `[waypoint index, firings on it]`.
    pub fn explorer_node(&self) -> NodeSpec {
        let (wps, v_max, patience) = (self.waypoints.clone(), self.map.v_max, self.patience);
        NodeSpec::new("ex_ac", self.delta, move |l, inputs| {
            let st = l.as_slice().unwrap_or(&[0.0, 0.0]);
            let (mut i, mut n) = (st[0] as usize % wps.len(), st[1] as u64 + 1);
            let Some(p) = inputs.get(STATE_TOPIC).and_then(position) else {
                return (l.clone(), Valuation::new());
            };
            let w = wps[i];
            if (p[0] - w[0]).hypot(p[1] - w[1]) < 0.5 * v_max || n > patience {
                i = (i + 1) % wps.len();
                n = 0;
            }
            let u = toward(p, &wps[i], v_max);
            (Value::Vector(vec![i as f64, n as f64]), Valuation::new().with(CONTROL_TOPIC, Value::Vector(u)))
        })
        .subscribes([STATE_TOPIC])
        .publishes([CONTROL_TOPIC])
        .with_local_state(Value::Vector(vec![0.0, 0.0]))
    }

    pub fn returner_node(&self) -> NodeSpec {
        let (home, v_max) = (self.start(), self.map.v_max);
        let policy = Arc::new(move |p: &[f64]| toward(p, &home, v_max));
        controller_node("ex_sc", self.delta, STATE_TOPIC, CONTROL_TOPIC, policy, false)
    }

    /// `ttf = ttf_vmax` against the true walls; φ_safer is the part of the
    /// known area whose `v_max·Δ` box stays known.
    pub fn module(&self) -> RtaModuleSpec {
        let d = self.delta;
        let (m1, m2, m3) = (self.map.clone(), self.map.clone(), self.map.clone());
        RtaModuleSpec {
            name: "exploration".into(),
            ac: self.explorer_node(),
            sc: self.returner_node(),
            dm_name: "ex_dm".into(),
            delta: d,
            state_topic: STATE_TOPIC.into(),
            safe: SafetyPredicate::from_fn(move |s| position(s).is_some_and(|p| m1.is_free(p))),
            safer: SafetyPredicate::from_fn(move |s| {
                position(s).is_some_and(|p| !ttf_vmax(p, |q| m2.is_known(q), m2.v_max, d as f64, BALL_RESOLUTION))
            }),
            ttf2d: Arc::new(move |s| {
                position(s).is_none_or(|p| ttf_vmax(p, |q| m3.is_free(q), m3.v_max, 2.0 * d as f64, BALL_RESOLUTION))
            }),
            oracle: Some(Arc::new(BallOracle { map: self.map.clone() })),
            grid_model: None,
        }
    }

    pub fn rta_system(&self, horizon: Time) -> Result<SystemSpec, EngineError> {
        SystemBuilder::default().topics(self.topics()).module(self.module()).plant(self.plant_node()).build(horizon)
    }

    pub fn unprotected_system(&self, horizon: Time) -> Result<SystemSpec, EngineError> {
        SystemBuilder::default().topics(self.topics()).node(self.explorer_node()).plant(self.plant_node()).build(horizon)
    }
}
