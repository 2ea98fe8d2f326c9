//! Case-study plants with their controllers and safety predicates.

pub mod battery;
pub mod drone;
pub mod exploration;
pub mod mountain_car;

use crate::engine::{SystemBuilder, SystemSpec};
use crate::error::EngineError;
use crate::model::{NodeSpec, Time, Value, Valuation};
use crate::reach::Policy;

use battery::Battery;
use drone::Drone;

/// A node applying `policy` to the vector on `state_topic` and publishing
/// the control on `control_topic` (a scalar when the control has one
/// component and `scalar` is set). Counts its firings in its local state.
pub fn controller_node(
    name: &str,
    period: Time,
    state_topic: &str,
    control_topic: &str,
    policy: Policy,
    scalar: bool,
) -> NodeSpec {
    let (st, ct) = (state_topic.to_string(), control_topic.to_string());
    NodeSpec::new(name, period, move |l, inputs| {
        let n = l.as_scalar().unwrap_or(0.0) + 1.0;
        let Some(s) = inputs.get(&st).and_then(Value::as_slice) else {
            return (Value::Scalar(n), Valuation::new());
        };
        let u = policy(s);
        let v = if scalar { Value::Scalar(u[0]) } else { Value::Vector(u) };
        (Value::Scalar(n), Valuation::new().with(ct.clone(), v))
    })
    .subscribes([state_topic])
    .publishes([control_topic])
    .with_local_state(Value::Scalar(0.0))
}

/// The tube-following drone and its battery, each under its own module.
/// Commanded accelerations drain the battery.
pub fn tube_and_battery(drone: &Drone, battery: &Battery, seed: u64, horizon: Time) -> Result<SystemSpec, EngineError> {
    SystemBuilder::default()
        .topics(drone.topics())
        .topics(battery.topics())
        .module(drone.module())
        .module(battery.module(seed))
        .plant(drone.plant_node())
        .plant(battery.plant_node(true))
        .build(horizon)
}

/// Reads a control topic as a vector of `dims` components, zero if absent.
pub(crate) fn read_control(inputs: &Valuation, topic: &str, dims: usize) -> Vec<f64> {
    match inputs.get(topic) {
        Some(Value::Scalar(x)) => vec![*x],
        Some(Value::Vector(v)) => v.clone(),
        _ => vec![0.0; dims],
    }
}
