//! Battery safety for a mission planner that ignores the charge.
//!
//! The planner commands a throttle level on `battery_cmd`; zero means land
//! and recharge. The plant tracks charge and altitude (in ticks of climb):
//! flying climbs to `max_altitude`, landing descends one level per tick and
//! charging only starts on the ground.

use std::sync::Arc;

use crate::engine::{Rule, SystemBuilder, SystemSpec, Trace};
use crate::error::{EngineError, RtaError};
use crate::model::{NodeSpec, Time, TopicDecl, Value, ValueDomain, Valuation};
use crate::reach::{cost_star, ttf_battery, DynamicsModel};
use crate::rta::{Mode, ReachOracle, RtaModuleSpec, SafetyPredicate};

use super::{controller_node, drone, read_control};

pub const STATE_TOPIC: &str = "battery_state";
pub const CONTROL_TOPIC: &str = "battery_cmd";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BatteryState {
    /// Charge in percent.
    pub b: f64,
    pub altitude: f64,
}

/// One tick: discharge by `cost` when flying or descending, otherwise
/// charge on the ground.
pub fn battery_step(s: BatteryState, cost: f64, charging: bool, charge_rate: f64) -> BatteryState {
    let b = if charging { (s.b + charge_rate).min(100.0) } else { (s.b - cost).max(0.0) };
    BatteryState { b, ..s }
}

/// Switch-back threshold presets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BatteryPreset {
    #[default]
    Standard,
    Strict,
    Experiment,
}

impl BatteryPreset {
    pub fn threshold(self) -> f64 {
        match self {
            BatteryPreset::Standard => 85.0,
            BatteryPreset::Strict => 95.0,
            BatteryPreset::Experiment => 90.0,
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "standard" | "85" => Some(Self::Standard),
            "strict" | "95" => Some(Self::Strict),
            "experiment" | "90" => Some(Self::Experiment),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatteryConfig {
    pub preset: BatteryPreset,
    /// Discharge per tick for throttle levels 1, 2, 3.
    pub throttle_cost: [f64; 3],
    /// Extra discharge per tick per unit of commanded drone acceleration.
    pub accel_cost: f64,
    pub land_cost: f64,
    pub charge_rate: f64,
    pub max_altitude: f64,
    pub delta: Time,
    pub start: f64,
}

impl Default for BatteryConfig {
    fn default() -> Self {
        Self {
            preset: BatteryPreset::Standard,
            throttle_cost: [0.05, 0.1, 0.2],
            accel_cost: 0.02,
            land_cost: 0.1,
            charge_rate: 0.5,
            max_altitude: 50.0,
            delta: 2,
            start: 100.0,
        }
    }
}

impl BatteryConfig {
    /// Charge needed to land from the highest altitude.
    pub fn t_max(&self) -> f64 {
        self.max_altitude * (self.land_cost + self.accel_cost * self.accel_bound())
    }

    /// Largest possible acceleration norm under the drone's per-axis limit.
    fn accel_bound(&self) -> f64 {
        drone::DroneConfig::default().a_max * std::f64::consts::SQRT_2
    }

    /// Discharge model over the charge alone, one control per throttle
    /// level and landing, each at the worst acceleration.
    pub fn dynamics(&self) -> DynamicsModel {
        let extra = self.accel_cost * self.accel_bound();
        let mut controls: Vec<Vec<f64>> = self.throttle_cost.iter().map(|c| vec![c + extra]).collect();
        controls.push(vec![self.land_cost + extra]);
        DynamicsModel {
            dims: 1,
            bounds: vec![(0.0, 100.0)],
            controls,
            step: Arc::new(|s: &[f64], u: &[f64]| vec![(s[0] - u[0]).max(0.0)]),
            dt: 1,
        }
    }

    pub fn cost_star(&self) -> f64 {
        cost_star(&self.dynamics(), 2 * self.delta)
    }

    fn max_rate(&self) -> f64 {
        self.dynamics().controls.iter().map(|u| u[0]).fold(0.0, f64::max)
    }
}

/// `Reach(b, *, t) ⊆ {b > 0}` by worst-case discharge.
#[derive(Debug, Clone)]
pub struct BatteryOracle {
    pub max_rate: f64,
}

impl ReachOracle for BatteryOracle {
    fn reach_within_safe(&self, s: &Value, t: Time) -> Result<bool, RtaError> {
        Ok(charge(s).is_some_and(|b| b - self.max_rate * t as f64 > 0.0))
    }
}

fn charge(s: &Value) -> Option<f64> {
    s.as_slice().and_then(|v| v.first().copied())
}

#[derive(Debug, Clone)]
pub struct Battery {
    pub config: BatteryConfig,
}

impl Battery {
    pub fn new(config: BatteryConfig) -> Self {
        Self { config }
    }

    pub fn topics(&self) -> Vec<TopicDecl> {
        vec![
            TopicDecl::new(STATE_TOPIC, ValueDomain::Vector(2)).with_default(Value::Vector(vec![self.config.start, 0.0])),
            TopicDecl::new(CONTROL_TOPIC, ValueDomain::Scalar),
        ]
    }

    /// With `with_drone`, acceleration commands on the drone's control topic
    /// add to the discharge.
    pub fn plant_node(&self, with_drone: bool) -> NodeSpec {
        let cfg = self.config.clone();
        let mut inputs = vec![CONTROL_TOPIC];
        if with_drone {
            inputs.push(drone::CONTROL_TOPIC);
        }
        NodeSpec::new("battery_plant", 1, move |l, inputs| {
            let v = l.as_slice().unwrap_or(&[0.0, 0.0]);
            let s = BatteryState { b: v[0], altitude: v[1] };
            let level = read_control(inputs, CONTROL_TOPIC, 1)[0].round().clamp(0.0, 3.0) as usize;
            let accel = match inputs.get(drone::CONTROL_TOPIC) {
                Some(Value::Vector(a)) => a.iter().map(|x| x * x).sum::<f64>().sqrt(),
                _ => 0.0,
            };
            let extra = cfg.accel_cost * accel.min(cfg.accel_bound());
            let n = if level > 0 {
                let n = battery_step(s, cfg.throttle_cost[level - 1] + extra, false, cfg.charge_rate);
                BatteryState { altitude: (s.altitude + 1.0).min(cfg.max_altitude), ..n }
            } else if s.altitude > 0.0 {
                let n = battery_step(s, cfg.land_cost + extra, false, cfg.charge_rate);
                BatteryState { altitude: s.altitude - 1.0, ..n }
            } else {
                battery_step(s, 0.0, true, cfg.charge_rate)
            };
            let out = Value::Vector(vec![n.b, n.altitude]);
            (out.clone(), Valuation::new().with(STATE_TOPIC, out))
        })
        .subscribes(inputs)
        .publishes([STATE_TOPIC])
        .with_local_state(Value::Vector(vec![self.config.start, 0.0]))
    }

    /// Random throttle levels, blind to the charge. The mission is a pure
    /// function of `seed` and the firing count.
    pub fn planner_node(&self, name: &str, seed: u64) -> NodeSpec {
        NodeSpec::new(name, self.config.delta, move |l, _| {
            let n = l.as_scalar().unwrap_or(0.0) as u64;
            // a new leg every 25 firings
            let leg = splitmix(seed ^ splitmix(n / 25));
            let level = 1 + leg % 3;
            (Value::Scalar((n + 1) as f64), Valuation::new().with(CONTROL_TOPIC, Value::Scalar(level as f64)))
        })
        .subscribes([STATE_TOPIC])
        .publishes([CONTROL_TOPIC])
        .with_local_state(Value::Scalar(0.0))
    }

    pub fn lander_node(&self) -> NodeSpec {
        controller_node("battery_sc", self.config.delta, STATE_TOPIC, CONTROL_TOPIC, Arc::new(|_: &[f64]| vec![0.0]), true)
    }

    pub fn module(&self, seed: u64) -> RtaModuleSpec {
        let cfg = &self.config;
        let threshold = cfg.preset.threshold();
        let (cost, t_max) = (cfg.cost_star(), cfg.t_max());
        RtaModuleSpec {
            name: "battery".into(),
            ac: self.planner_node("battery_ac", seed),
            sc: self.lander_node(),
            dm_name: "battery_dm".into(),
            delta: cfg.delta,
            state_topic: STATE_TOPIC.into(),
            safe: SafetyPredicate::from_fn(|s| charge(s).is_some_and(|b| b > 0.0)),
            safer: SafetyPredicate::from_fn(move |s| charge(s).is_some_and(|b| b > threshold)),
            ttf2d: Arc::new(move |s| charge(s).is_none_or(|b| ttf_battery(b, cost, t_max))),
            oracle: Some(Arc::new(BatteryOracle { max_rate: cfg.max_rate() })),
            grid_model: None,
        }
    }

    pub fn builder(&self, with_drone: bool) -> SystemBuilder {
        SystemBuilder::default().topics(self.topics()).plant(self.plant_node(with_drone))
    }

    pub fn rta_system(&self, seed: u64, horizon: Time) -> Result<SystemSpec, EngineError> {
        self.builder(false).module(self.module(seed)).build(horizon)
    }

    pub fn unprotected_system(&self, seed: u64, horizon: Time) -> Result<SystemSpec, EngineError> {
        self.builder(false).node(self.planner_node("battery_ac", seed)).build(horizon)
    }

    fn charges<'t>(trace: &'t Trace) -> impl Iterator<Item = (usize, f64)> + 't {
        trace.events.iter().enumerate().filter_map(|(i, e)| Some((i, charge(e.writes.get(STATE_TOPIC)?)?)))
    }

    /// Published charges at or below zero.
    pub fn depletions(trace: &Trace) -> usize {
        Self::charges(trace).filter(|(_, b)| *b <= 0.0).count()
    }

    pub fn min_charge(trace: &Trace) -> Option<f64> {
        Self::charges(trace).map(|(_, b)| b).reduce(f64::min)
    }

    /// Charge seen by the decision module at each SC→AC switch.
    pub fn switch_back_levels(&self, trace: &Trace) -> Vec<f64> {
        let mut b = self.config.start;
        let mut out = Vec::new();
        for e in &trace.events {
            if let Some(c) = e.writes.get(STATE_TOPIC).and_then(charge) {
                b = c;
            }
            if e.rule == Rule::DmStep && e.mode_before == Some(Mode::Sc) && e.mode_after == Some(Mode::Ac) {
                out.push(b);
            }
        }
        out
    }
}

fn splitmix(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{run, EnvScript, NoHooks};

    #[test]
    fn step_arithmetic() {
        let mut s = BatteryState { b: 50.0, altitude: 10.0 };
        for _ in 0..10 {
            s = battery_step(s, 1.0, false, 2.0);
        }
        assert_eq!(s.b, 40.0);
        assert_eq!(battery_step(BatteryState { b: 99.0, altitude: 0.0 }, 0.0, true, 2.0).b, 100.0);
        assert_eq!(battery_step(BatteryState { b: 0.0, altitude: 0.0 }, 3.0, false, 2.0).b, 0.0);
    }

    #[test]
    fn presets() {
        assert_eq!(BatteryConfig::default().preset.threshold(), 85.0);
        assert_eq!(BatteryPreset::parse("strict").unwrap().threshold(), 95.0);
        assert_eq!(BatteryPreset::parse("90"), Some(BatteryPreset::Experiment));
    }

    #[test]
    fn cost_star_is_worst_control() {
        let cfg = BatteryConfig::default();
        let extra = cfg.accel_cost * 2.0 * std::f64::consts::SQRT_2;
        assert!((cfg.cost_star() - 4.0 * (0.2 + extra)).abs() < 1e-12);
    }

    #[test]
    fn module_keeps_charge_and_planner_alone_depletes() {
        let bat = Battery::new(BatteryConfig::default());
        let trace = run(&bat.rta_system(7, 3000).unwrap(), &EnvScript::default(), &mut NoHooks).unwrap();
        assert!(Battery::min_charge(&trace).unwrap() > 0.0);
        let levels = bat.switch_back_levels(&trace);
        assert!(!levels.is_empty() && levels.iter().all(|&b| b > 85.0));
        let bare = run(&bat.unprotected_system(7, 3000).unwrap(), &EnvScript::default(), &mut NoHooks).unwrap();
        assert!(Battery::depletions(&bare) > 0);
    }
}
