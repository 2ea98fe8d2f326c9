//! RTA modules: an advanced controller, a safe controller and a generated
//! decision module that hands output authority between them.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{RtaError, ReachError};
use crate::model::{NodeSpec, Time, Value, Valuation};
use crate::reach::{GridOracle, GridSpec, Policy, RegionMask};
use crate::wellformed::{check_p1, Verdict};

/// Which controller owns the module outputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Mode {
    #[serde(rename = "AC")]
    Ac,
    #[serde(rename = "SC")]
    Sc,
}

impl Mode {
    pub fn to_value(self) -> Value {
        Value::Symbol(self.to_string())
    }

    pub fn from_value(v: &Value) -> Option<Mode> {
        match v.as_symbol()? {
            "AC" => Some(Mode::Ac),
            "SC" => Some(Mode::Sc),
            _ => None,
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Ac => "AC",
            Mode::Sc => "SC",
        })
    }
}

pub type StatePredicate = Arc<dyn Fn(&Value) -> bool + Send + Sync>;
/// Maps a STATE topic value onto grid coordinates.
pub type Projection = Arc<dyn Fn(&Value) -> Option<Vec<f64>> + Send + Sync>;

/// Explicit region backing a predicate.
#[derive(Clone)]
pub struct Region {
    pub grid: GridSpec,
    pub mask: RegionMask,
    pub project: Projection,
}

impl Region {
    pub fn contains(&self, s: &Value) -> bool {
        (self.project)(s).map(|p| self.mask.contains_state(&self.grid, &p)).unwrap_or(false)
    }
}

/// A set of plant states given by membership, optionally with a grid region.
#[derive(Clone)]
pub struct SafetyPredicate {
    pub membership: StatePredicate,
    pub region: Option<Region>,
}

impl fmt::Debug for SafetyPredicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SafetyPredicate")
            .field("region_cells", &self.region.as_ref().map(|r| r.mask.count()))
            .finish_non_exhaustive()
    }
}

impl SafetyPredicate {
    pub fn from_fn(f: impl Fn(&Value) -> bool + Send + Sync + 'static) -> Self {
        Self { membership: Arc::new(f), region: None }
    }

    pub fn from_region(region: Region) -> Self {
        let r = region.clone();
        Self { membership: Arc::new(move |s| r.contains(s)), region: Some(region) }
    }

    pub fn contains(&self, s: &Value) -> bool {
        (self.membership)(s)
    }
}

/// Answers `Reach(s, *, t) ⊆ φ_safe` for a module.
pub trait ReachOracle: Send + Sync {
    fn reach_within_safe(&self, s: &Value, t: Time) -> Result<bool, RtaError>;
}

/// Grid abstraction of the plant behind a module, used both for the
/// invariant and for the static well-formedness checks.
#[derive(Clone)]
pub struct GridModel {
    pub oracle: Arc<GridOracle>,
    pub project: Projection,
    /// Safe controller as a feedback law on the projected state.
    pub sc_policy: Policy,
    /// The safe set on the grid.
    pub safe: RegionMask,
    shrunk: BTreeMap<Time, RegionMask>,
}

impl GridModel {
    /// Builds the model and caches `R(safe, t)` for each `t` in `cache`.
    pub fn new(
        oracle: Arc<GridOracle>,
        project: Projection,
        sc_policy: Policy,
        safe: RegionMask,
        cache: &[Time],
    ) -> Self {
        let shrunk = cache.iter().map(|&t| (t, oracle.region_shrink(&safe, t))).collect();
        Self { oracle, project, sc_policy, safe, shrunk }
    }

    pub fn region(&self, mask: RegionMask) -> Region {
        Region { grid: self.oracle.grid.clone(), mask, project: self.project.clone() }
    }

    pub fn shrunk(&self, t: Time) -> Option<&RegionMask> {
        self.shrunk.get(&t)
    }
}

impl ReachOracle for GridModel {
    fn reach_within_safe(&self, s: &Value, t: Time) -> Result<bool, RtaError> {
        let p = (self.project)(s).ok_or(RtaError::OutsideOracleDomain)?;
        // leaving the grid counts as leaving the safe set
        let Some(cell) = self.oracle.grid.cell_of(&p) else { return Ok(false) };
        if let Some(mask) = self.shrunk.get(&t) {
            return Ok(mask.contains(cell));
        }
        Ok(self.safe.contains(cell) && !self.oracle.ttf_cell(cell, &self.safe, t))
    }
}

impl From<ReachError> for RtaError {
    fn from(_: ReachError) -> Self {
        RtaError::OutsideOracleDomain
    }
}

/// `(N_ac, N_sc, N_dm, Δ, φ_safe, φ_safer)` plus the switching predicate.
#[derive(Clone)]
pub struct RtaModuleSpec {
    pub name: String,
    pub ac: NodeSpec,
    pub sc: NodeSpec,
    pub dm_name: String,
    pub delta: Time,
    /// Topic carrying the plant state read by the decision module.
    pub state_topic: String,
    pub safe: SafetyPredicate,
    pub safer: SafetyPredicate,
    /// `ttf_{2Δ}(s, φ_safe)`.
    pub ttf2d: StatePredicate,
    pub oracle: Option<Arc<dyn ReachOracle>>,
    pub grid_model: Option<GridModel>,
}

impl fmt::Debug for RtaModuleSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RtaModuleSpec")
            .field("name", &self.name)
            .field("ac", &self.ac.name)
            .field("sc", &self.sc.name)
            .field("dm", &self.dm_name)
            .field("delta", &self.delta)
            .field("state_topic", &self.state_topic)
            .finish_non_exhaustive()
    }
}

impl RtaModuleSpec {
    pub fn outputs(&self) -> impl Iterator<Item = &String> {
        self.ac.outputs.iter().chain(&self.sc.outputs)
    }

    pub fn node_names(&self) -> [&str; 3] {
        [&self.ac.name, &self.sc.name, &self.dm_name]
    }
}

/// Decision-module switching logic.
pub fn dm_transition(mode: Mode, s: &Value, spec: &RtaModuleSpec) -> Mode {
    match mode {
        Mode::Ac if (spec.ttf2d)(s) => Mode::Sc,
        Mode::Sc if spec.safer.contains(s) => Mode::Ac,
        m => m,
    }
}

/// Generates the decision-module node of a module.
///
/// The node subscribes to the controllers' inputs and the state topic,
/// publishes nothing, and keeps the mode as its local state. The engine
/// reads that mode after each firing to update output enables.
pub fn generate_dm(spec: &RtaModuleSpec) -> Result<NodeSpec, RtaError> {
    let malformed = |reason: String| RtaError::MalformedSpec { module: spec.name.clone(), reason };
    if spec.delta == 0 {
        return Err(malformed("delta must be positive".into()));
    }
    if let Verdict::Fail { witness, .. } = check_p1(spec) {
        return Err(malformed(witness));
    }
    if let (Some(safe), Some(safer)) = (&spec.safe.region, &spec.safer.region) {
        if !safer.mask.is_subset(&safe.mask) {
            return Err(malformed("safer region is not contained in the safe region".into()));
        }
    }
    let module = spec.clone();
    let state_topic = spec.state_topic.clone();
    let node = NodeSpec::new(spec.dm_name.clone(), spec.delta, move |l: &Value, inputs: &Valuation| {
        let mode = Mode::from_value(l).unwrap_or(Mode::Sc);
        let next = match inputs.get(&state_topic) {
            Some(s) => dm_transition(mode, s, &module),
            None => mode,
        };
        (next.to_value(), Valuation::new())
    })
    .subscribes(spec.ac.inputs.iter().chain(&spec.sc.inputs).cloned())
    .subscribes([spec.state_topic.clone()])
    .with_local_state(Mode::Sc.to_value());
    Ok(node)
}

/// Evaluates the runtime-assurance invariant
/// `(mode = SC ∧ s ∈ φ_safe) ∨ (mode = AC ∧ Reach(s, *, Δ) ⊆ φ_safe)`.
pub fn invariant_holds(mode: Mode, s: &Value, spec: &RtaModuleSpec, oracle: &dyn ReachOracle) -> Result<bool, RtaError> {
    match mode {
        Mode::Sc => Ok(spec.safe.contains(s)),
        Mode::Ac => oracle.reach_within_safe(s, spec.delta),
    }
}
