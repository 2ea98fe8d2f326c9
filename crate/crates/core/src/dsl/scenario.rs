//! Scenario files: one `key = value` per line, `#` starts a comment.
//!
//! ```text
//! plant = mountain_car        # mountain_car | drone | battery | exploration | drone_battery | none
//! program = my_program.rta    # optional; defaults to the plant's built-in program
//! horizon = 1000
//! schedule = exhaustive       # det | random | exhaustive
//! bound = 1
//! runs = 20                   # random schedules
//! seed = 0
//! grid = 240x240
//! samples = 5
//! x_cliff = -1.1
//! epsilon = 0.5
//! battery_preset = standard   # standard (85) | strict (95) | experiment (90)
//! mission_seed = 0
//! fault = dm-drop mc_dm 200   # dm-drop NODE FROM [UNTIL] | delay NODE FROM UNTIL
//!                             # perturb NODE AMP | bias NODE X[,Y..] | replace NODE TOPIC VALUE
//! env = 5 some_topic 1.5      # system-input write: TIME TOPIC VALUE
//! p2b_horizon = 1000
//! allow_unverified = false
//! out = out
//! ```

use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::engine::{EnvScript, SystemSpec};
use crate::error::DslError;
use crate::harness::{FaultKind, FaultProfile, ScheduleKind, SchedulePolicy};
use crate::model::{Time, Value};
use crate::plants::battery::{Battery, BatteryConfig, BatteryPreset};
use crate::plants::drone::{Drone, DroneConfig};
use crate::plants::exploration::Exploration;
use crate::plants::mountain_car::{MountainCar, MountainCarConfig};

use super::{elaborate, parse, ElaborateOptions, Program, Registry};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PlantKind {
    #[default]
    None,
    MountainCar,
    Drone,
    Battery,
    Exploration,
    DroneBattery,
}

impl FromStr for PlantKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Ok(match s {
            "none" => Self::None,
            "mountain_car" => Self::MountainCar,
            "drone" => Self::Drone,
            "battery" => Self::Battery,
            "exploration" => Self::Exploration,
            "drone_battery" => Self::DroneBattery,
            _ => return Err(format!("unknown plant `{s}`")),
        })
    }
}

impl PlantKind {
    pub fn builtin_program(self) -> &'static str {
        match self {
            Self::None => "",
            Self::MountainCar => include_str!("../../programs/mountain_car.rta"),
            Self::Drone => include_str!("../../programs/drone.rta"),
            Self::Battery => include_str!("../../programs/battery.rta"),
            Self::Exploration => include_str!("../../programs/exploration.rta"),
            Self::DroneBattery => include_str!("../../programs/drone_battery.rta"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub plant: PlantKind,
    pub program: Option<PathBuf>,
    pub horizon: Time,
    pub schedule: ScheduleKind,
    pub bound: usize,
    pub runs: u64,
    pub seed: u64,
    pub grid: Option<Vec<usize>>,
    pub samples: Option<usize>,
    pub x_cliff: Option<f64>,
    pub epsilon: Option<f64>,
    pub battery_preset: BatteryPreset,
    pub mission_seed: u64,
    pub faults: FaultProfile,
    pub env: Vec<(Time, String, Value)>,
    pub p2b_horizon: Time,
    pub allow_unverified: bool,
    pub out: Option<PathBuf>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            plant: PlantKind::None,
            program: None,
            horizon: 1000,
            schedule: ScheduleKind::Deterministic,
            bound: 1,
            runs: 10,
            seed: 0,
            grid: None,
            samples: None,
            x_cliff: None,
            epsilon: None,
            battery_preset: BatteryPreset::Standard,
            mission_seed: 0,
            faults: FaultProfile::none(),
            env: Vec::new(),
            p2b_horizon: 1000,
            allow_unverified: false,
            out: None,
        }
    }
}

fn value(s: &str) -> Option<Value> {
    let s = s.trim();
    if let Some(inner) = s.strip_prefix('[').and_then(|r| r.strip_suffix(']')) {
        return inner.split(',').map(|x| x.trim().parse().ok()).collect::<Option<Vec<f64>>>().map(Value::Vector);
    }
    match s {
        "true" => Some(Value::Bool(true)),
        "false" => Some(Value::Bool(false)),
        _ => Some(s.parse().map(Value::Scalar).unwrap_or_else(|_| Value::Symbol(s.to_string()))),
    }
}

fn fault(spec: &str) -> Result<(String, FaultKind), String> {
    let words: Vec<&str> = spec.split_whitespace().collect();
    let num = |i: usize| -> Result<f64, String> {
        words.get(i).ok_or("missing argument")?.parse::<f64>().map_err(|e| e.to_string())
    };
    let time = |i: usize| -> Result<Time, String> {
        words.get(i).ok_or("missing argument")?.parse::<Time>().map_err(|e| e.to_string())
    };
    let (&kind, &target) = (words.first().ok_or("empty fault")?, words.get(1).ok_or("fault needs a target node")?);
    let k = match kind {
        "dm-drop" => FaultKind::DmDrop { from: time(2)?, until: words.get(3).map(|_| time(3)).transpose()? },
        "delay" => FaultKind::Delay { from: time(2)?, until: time(3)? },
        "perturb" => FaultKind::OutputPerturbation { amplitude: num(2)? },
        "bias" => FaultKind::OutputBias {
            offset: words
                .get(2)
                .ok_or("missing offset")?
                .split(',')
                .map(|x| x.parse::<f64>().map_err(|e| e.to_string()))
                .collect::<Result<_, _>>()?,
        },
        "replace" => FaultKind::OutputReplacement {
            topic: words.get(2).ok_or("missing topic")?.to_string(),
            value: value(&words[3..].join(" ")).ok_or("bad value")?,
        },
        _ => return Err(format!("unknown fault kind `{kind}`")),
    };
    Ok((target.to_string(), k))
}

impl ScenarioConfig {
    pub fn parse(text: &str) -> Result<Self, DslError> {
        let mut c = Self::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| DslError::Scenario { line: n + 1, message };
            let (key, val) = line.split_once('=').ok_or_else(|| err(format!("expected `key = value`, got `{line}`")))?;
            c.set(key.trim(), val.trim()).map_err(err)?;
        }
        Ok(c)
    }

    /// Applies one setting; also used for command-line overrides.
    pub fn set(&mut self, key: &str, val: &str) -> Result<(), String> {
        fn num<T: FromStr>(v: &str) -> Result<T, String>
        where
            T::Err: std::fmt::Display,
        {
            v.parse::<T>().map_err(|e| format!("`{v}`: {e}"))
        }
        match key {
            "plant" => self.plant = val.parse()?,
            "program" => self.program = Some(PathBuf::from(val)),
            "horizon" => self.horizon = num(val)?,
            "schedule" => {
                self.schedule = match val {
                    "det" | "deterministic" => ScheduleKind::Deterministic,
                    "random" => ScheduleKind::Random { runs: self.runs },
                    "exhaustive" => ScheduleKind::Exhaustive,
                    _ => return Err(format!("unknown schedule `{val}`")),
                }
            }
            "bound" => self.bound = num(val)?,
            "runs" => {
                self.runs = num(val)?;
                if let ScheduleKind::Random { runs } = &mut self.schedule {
                    *runs = self.runs;
                }
            }
            "seed" => {
                self.seed = num(val)?;
                self.faults.seed = self.seed;
            }
            "grid" => {
                self.grid = Some(val.split('x').map(|d| num(d.trim())).collect::<Result<_, _>>()?);
            }
            "samples" => self.samples = Some(num(val)?),
            "x_cliff" => self.x_cliff = Some(num(val)?),
            "epsilon" => self.epsilon = Some(num(val)?),
            "battery_preset" => {
                self.battery_preset = BatteryPreset::parse(val).ok_or_else(|| format!("unknown battery preset `{val}`"))?
            }
            "mission_seed" => self.mission_seed = num(val)?,
            "fault" => {
                let (target, kind) = fault(val)?;
                self.faults.faults.push(crate::harness::Fault { target, kind });
            }
            "env" => {
                let mut it = val.splitn(3, char::is_whitespace);
                let (t, topic, v) = (it.next(), it.next(), it.next());
                let (Some(t), Some(topic), Some(v)) = (t, topic, v) else {
                    return Err("env needs `TIME TOPIC VALUE`".into());
                };
                self.env.push((num(t)?, topic.to_string(), value(v).ok_or("bad value")?));
            }
            "p2b_horizon" => self.p2b_horizon = num(val)?,
            "allow_unverified" => self.allow_unverified = num(val)?,
            "out" => self.out = Some(PathBuf::from(val)),
            _ => return Err(format!("unknown key `{key}`")),
        }
        Ok(())
    }

    pub fn policy(&self) -> SchedulePolicy {
        SchedulePolicy { kind: self.schedule, bound: self.bound, seed: self.seed, ..SchedulePolicy::deterministic() }
    }

    pub fn env_script(&self) -> EnvScript {
        EnvScript::new(self.env.clone())
    }

    /// Program source: the `program` file (relative to `base`) or the
    /// plant's built-in one.
    pub fn program_source(&self, base: &Path) -> Result<String, DslError> {
        match &self.program {
            Some(p) => std::fs::read_to_string(base.join(p))
                .map_err(|e| DslError::Scenario { line: 0, message: format!("{}: {e}", p.display()) }),
            None => Ok(self.plant.builtin_program().to_string()),
        }
    }

    /// Δ declared for module `name`, if the program has one.
    fn delta(program: &Program, name: &str) -> Option<Time> {
        program.modules().find(|r| r.name.name == name).map(|r| r.period)
    }

    pub fn mountain_car(&self, program: &Program) -> MountainCar {
        let mut cfg = MountainCarConfig::default();
        if let Some([x, v]) = self.grid.as_deref().and_then(|g| <[usize; 2]>::try_from(g).ok()) {
            cfg.cells = [x, v];
        }
        cfg.samples_per_axis = self.samples.unwrap_or(cfg.samples_per_axis);
        cfg.cliff = self.x_cliff.unwrap_or(cfg.cliff);
        cfg.delta = Self::delta(program, "mountain_car").unwrap_or(cfg.delta);
        MountainCar::new(cfg)
    }

    pub fn drone(&self, program: &Program) -> Drone {
        let mut cfg = DroneConfig::default();
        if let Some([e, v]) = self.grid.as_deref().and_then(|g| <[usize; 2]>::try_from(g).ok()) {
            cfg.lateral_cells = [e, v];
        }
        cfg.samples_per_axis = self.samples.unwrap_or(cfg.samples_per_axis);
        cfg.epsilon = self.epsilon.unwrap_or(cfg.epsilon);
        cfg.delta = Self::delta(program, "drone_tube").unwrap_or(cfg.delta);
        Drone::new(cfg)
    }

    pub fn battery(&self, program: &Program) -> Battery {
        let mut cfg = BatteryConfig { preset: self.battery_preset, ..BatteryConfig::default() };
        cfg.delta = Self::delta(program, "battery").unwrap_or(cfg.delta);
        Battery::new(cfg)
    }

    /// Functions for the selected plant.
    pub fn registry(&self, program: &Program) -> Registry {
        let mut reg = Registry::default();
        let drone = |reg: &mut Registry| {
            let d = self.drone(program);
            reg.module("drone_tube", &d.module()).body("drone_plant", &d.plant_node());
        };
        let battery = |reg: &mut Registry| {
            let b = self.battery(program);
            reg.module("battery", &b.module(self.mission_seed))
                .body("battery_plant", &b.plant_node(false))
                .body("battery_plant_loaded", &b.plant_node(true));
        };
        match self.plant {
            PlantKind::None => {}
            PlantKind::MountainCar => {
                let mc = self.mountain_car(program);
                reg.module("mountain_car", &mc.module()).body("mc_plant", &mc.plant_node());
            }
            PlantKind::Drone => drone(&mut reg),
            PlantKind::Battery => battery(&mut reg),
            PlantKind::DroneBattery => {
                drone(&mut reg);
                battery(&mut reg);
            }
            PlantKind::Exploration => {
                let ex = Exploration::default();
                reg.module("exploration", &ex.module()).body("ex_plant", &ex.plant_node());
            }
        }
        reg
    }

    pub fn options(&self) -> ElaborateOptions {
        ElaborateOptions { horizon: self.horizon, p2b_horizon: self.p2b_horizon, allow_unverified: self.allow_unverified }
    }

    /// Parses the program, binds the plant's functions and elaborates.
    pub fn load(&self, base: &Path) -> Result<(Program, SystemSpec), DslError> {
        let program = parse(&self.program_source(base)?)?;
        let spec = elaborate(&program, &self.registry(&program), &self.options())?;
        Ok((program, spec))
    }
}
