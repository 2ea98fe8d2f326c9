//! Runtime assurance for reactive robotics software: a programming model of
//! periodic nodes over topics, RTA modules with generated decision modules,
//! an executable semantics, grid reachability, well-formedness checking,
//! benchmark plants and a systematic testing harness.

pub mod dsl;
pub mod engine;
pub mod error;
pub mod harness;
pub mod model;
pub mod plants;
pub mod reach;
pub mod rta;
pub mod wellformed;

pub use error::{DslError, EngineError, HarnessError, ModelError, ReachError, RtaError};
pub use model::{make_calendar, validate_node, Calendar, NodeSpec, Time, TopicDecl, Valuation, Value, ValueDomain};
pub use rta::{dm_transition, generate_dm, invariant_holds, Mode, ReachOracle, RtaModuleSpec, SafetyPredicate};
pub use wellformed::{check_composable, check_module, check_p1, check_p2a, check_p2b, check_p3, Verdict, WellformednessReport};
pub use engine::{run, EnvScript, RunHooks, SystemSpec, Trace};
