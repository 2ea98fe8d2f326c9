use thiserror::Error;

/// Violations of the static programming-model invariants.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("node `{node}`: topics {topics:?} are both inputs and outputs")]
    OverlappingIo { node: String, topics: Vec<String> },
    #[error("node `{node}`: period must be positive")]
    NonpositivePeriod { node: String },
    #[error("node `{node}` references undeclared topic `{topic}`")]
    UnknownTopic { node: String, topic: String },
    #[error("duplicate name `{0}`")]
    Duplicate(String),
    #[error("default value of topic `{0}` is outside its domain")]
    DefaultOutsideDomain(String),
    #[error("calendar horizon must be positive")]
    ZeroHorizon,
}

/// Errors raised by the transition rules and the run driver.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum EngineError {
    #[error("topic `{0}` is not a system input")]
    NotAnInput(String),
    #[error("value for topic `{0}` is outside its domain")]
    ValueOutsideDomain(String),
    #[error("time cannot progress: nodes {0:?} still scheduled at the current instant")]
    NotQuiescent(Vec<String>),
    #[error("calendar has no entry after t={0}")]
    HorizonExhausted(u64),
    #[error("node `{0}` is not scheduled at the current instant")]
    NotScheduled(String),
    #[error("node `{0}` is not a decision module")]
    NotADm(String),
    #[error("node `{0}` is a decision module; use the DM rule")]
    IsADm(String),
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("node `{node}` published on `{topic}`, which is not one of its outputs")]
    UndeclaredOutput { node: String, topic: String },
    #[error("modules are not composable: {0}")]
    NotComposable(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Rta(#[from] RtaError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ReachError {
    #[error("state {0:?} lies outside the grid bounds")]
    OutOfBounds(Vec<f64>),
    #[error("Lipschitz constant must be positive, got {0}")]
    NonpositiveLipschitz(f64),
    #[error("malformed region mask file: {0}")]
    MaskFormat(String),
    #[error("grid dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RtaError {
    #[error("malformed RTA module `{module}`: {reason}")]
    MalformedSpec { module: String, reason: String },
    #[error("state is outside the reachability oracle's domain")]
    OutsideOracleDomain,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HarnessError {
    #[error("exhaustive exploration would need {count} runs, above the cap of {cap}")]
    ExplosionGuard { count: u128, cap: u64 },
    #[error("invalid fault: {0}")]
    InvalidFault(String),
    #[error("unknown schedule id {0}")]
    UnknownSchedule(u64),
    #[error("trace does not belong to this system: {0}")]
    TraceSpecMismatch(String),
    #[error("replayed trace digest {got} differs from expected {expected}")]
    DigestMismatch { expected: String, got: String },
    #[error(transparent)]
    Engine(#[from] EngineError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DslError {
    #[error("{0}")]
    Diagnostic(#[from] crate::dsl::Diagnostic),
    #[error("module `{module}` is not well-formed:\n{report}")]
    Wellformedness { module: String, report: String },
    #[error("scenario line {line}: {message}")]
    Scenario { line: usize, message: String },
    #[error(transparent)]
    Engine(#[from] EngineError),
}
