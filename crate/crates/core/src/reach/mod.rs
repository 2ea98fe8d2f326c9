//! Reachability on a uniform grid and closed-form time-to-failure bounds.

mod grid;
mod oracle;
mod ttf;

pub use grid::{GridSpec, RegionMask};
pub use oracle::{
    distance_to_complement, AbstractionConfig, CellSuccessors, DynamicsModel, GridOracle, Policy, Reach, StepFn,
};
pub use ttf::{cost_star, ttf_battery, ttf_lipschitz, ttf_vmax};
