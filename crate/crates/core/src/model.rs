//! Topics, periodic nodes and calendars.
//!
//! A program is a set of periodic nodes that communicate through globally
//! visible topics. Each node reads its input topics, advances its local
//! state and publishes on its output topics at the instants listed in its
//! calendar.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::ModelError;

/// Logical time, in ticks.
pub type Time = u64;

/// A value carried by a topic or held as a node's local state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Unit,
    Bool(bool),
    Scalar(f64),
    Vector(Vec<f64>),
    Symbol(String),
}

impl Value {
    pub fn as_scalar(&self) -> Option<f64> {
        match self {
            Value::Scalar(x) => Some(*x),
            _ => None,
        }
    }

    pub fn as_slice(&self) -> Option<&[f64]> {
        match self {
            Value::Vector(v) => Some(v),
            Value::Scalar(x) => Some(std::slice::from_ref(x)),
            _ => None,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Value::Bool(b) => Some(*b),
            _ => None,
        }
    }

    pub fn as_symbol(&self) -> Option<&str> {
        match self {
            Value::Symbol(s) => Some(s),
            _ => None,
        }
    }
}

/// Admissible values of a topic.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ValueDomain {
    Bool,
    Scalar,
    Vector(usize),
    Enum(Vec<String>),
}

impl ValueDomain {
    pub fn contains(&self, v: &Value) -> bool {
        match (self, v) {
            (ValueDomain::Bool, Value::Bool(_)) => true,
            (ValueDomain::Scalar, Value::Scalar(x)) => x.is_finite(),
            (ValueDomain::Vector(n), Value::Vector(xs)) => {
                xs.len() == *n && xs.iter().all(|x| x.is_finite())
            }
            (ValueDomain::Enum(names), Value::Symbol(s)) => names.iter().any(|n| n == s),
            _ => false,
        }
    }

    /// The canonical default of the domain.
    pub fn zero(&self) -> Value {
        match self {
            ValueDomain::Bool => Value::Bool(false),
            ValueDomain::Scalar => Value::Scalar(0.0),
            ValueDomain::Vector(n) => Value::Vector(vec![0.0; *n]),
            ValueDomain::Enum(names) => Value::Symbol(names.first().cloned().unwrap_or_default()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TopicDecl {
    pub name: String,
    pub domain: ValueDomain,
    pub default: Value,
}

impl TopicDecl {
    pub fn new(name: impl Into<String>, domain: ValueDomain) -> Self {
        let default = domain.zero();
        Self { name: name.into(), domain, default }
    }

    pub fn with_default(mut self, default: Value) -> Self {
        self.default = default;
        self
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.domain.contains(&self.default) {
            Ok(())
        } else {
            Err(ModelError::DefaultOutsideDomain(self.name.clone()))
        }
    }
}

/// A map from topic names to values.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Valuation(pub BTreeMap<String, Value>);

impl Valuation {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, topic: &str) -> Option<&Value> {
        self.0.get(topic)
    }

    pub fn insert(&mut self, topic: impl Into<String>, v: Value) {
        self.0.insert(topic.into(), v);
    }

    pub fn with(mut self, topic: impl Into<String>, v: Value) -> Self {
        self.insert(topic, v);
        self
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &Value)> {
        self.0.iter()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Restriction to the given topic names.
    pub fn restrict<'a>(&self, topics: impl IntoIterator<Item = &'a String>) -> Valuation {
        let mut out = BTreeMap::new();
        for t in topics {
            if let Some(v) = self.0.get(t) {
                out.insert(t.clone(), v.clone());
            }
        }
        Valuation(out)
    }
}

/// Deterministic node body: `(local state, inputs) -> (local state', outputs)`.
pub type Transition = Arc<dyn Fn(&Value, &Valuation) -> (Value, Valuation) + Send + Sync>;

/// A periodic input/output transition system.
#[derive(Clone)]
pub struct NodeSpec {
    pub name: String,
    pub inputs: BTreeSet<String>,
    pub outputs: BTreeSet<String>,
    pub period: Time,
    pub phase: Time,
    pub transition: Transition,
    pub initial_local_state: Value,
}

impl fmt::Debug for NodeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("NodeSpec")
            .field("name", &self.name)
            .field("inputs", &self.inputs)
            .field("outputs", &self.outputs)
            .field("period", &self.period)
            .field("phase", &self.phase)
            .finish_non_exhaustive()
    }
}

impl NodeSpec {
    pub fn new<F>(name: impl Into<String>, period: Time, transition: F) -> Self
    where
        F: Fn(&Value, &Valuation) -> (Value, Valuation) + Send + Sync + 'static,
    {
        Self {
            name: name.into(),
            inputs: BTreeSet::new(),
            outputs: BTreeSet::new(),
            period,
            phase: 0,
            transition: Arc::new(transition),
            initial_local_state: Value::Unit,
        }
    }

    pub fn subscribes<I, S>(mut self, topics: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.inputs.extend(topics.into_iter().map(Into::into));
        self
    }

    pub fn publishes<I, S>(mut self, topics: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.outputs.extend(topics.into_iter().map(Into::into));
        self
    }

    pub fn with_phase(mut self, phase: Time) -> Self {
        self.phase = phase;
        self
    }

    pub fn with_local_state(mut self, l0: Value) -> Self {
        self.initial_local_state = l0;
        self
    }

    /// Runs the node body once.
    pub fn fire(&self, local: &Value, inputs: &Valuation) -> (Value, Valuation) {
        (self.transition)(local, inputs)
    }
}

/// Checks the node invariants against a set of declared topics.
pub fn validate_node(spec: &NodeSpec, topics: &BTreeSet<String>) -> Result<(), ModelError> {
    let overlap: Vec<String> = spec.inputs.intersection(&spec.outputs).cloned().collect();
    if !overlap.is_empty() {
        return Err(ModelError::OverlappingIo { node: spec.name.clone(), topics: overlap });
    }
    if spec.period == 0 {
        return Err(ModelError::NonpositivePeriod { node: spec.name.clone() });
    }
    if let Some(t) = spec.inputs.iter().chain(&spec.outputs).find(|t| !topics.contains(*t)) {
        return Err(ModelError::UnknownTopic { node: spec.name.clone(), topic: t.clone() });
    }
    Ok(())
}

/// The system time-table: `(node, firing time)` pairs.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Calendar {
    pub entries: Vec<(String, Time)>,
}

impl Calendar {
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    /// Least calendar time strictly greater than `t`.
    pub fn next_after(&self, t: Option<Time>) -> Option<Time> {
        let idx = match t {
            None => 0,
            Some(t) => self.entries.partition_point(|(_, et)| *et <= t),
        };
        self.entries.get(idx).map(|(_, et)| *et)
    }

    /// Nodes with an entry at exactly `t`, in calendar order.
    pub fn firing_at(&self, t: Time) -> impl Iterator<Item = &str> {
        let lo = self.entries.partition_point(|(_, et)| *et < t);
        self.entries[lo..].iter().take_while(move |(_, et)| *et == t).map(|(n, _)| n.as_str())
    }

    /// Distinct firing instants, ascending.
    pub fn instants(&self) -> Vec<Time> {
        let mut out: Vec<Time> = self.entries.iter().map(|(_, t)| *t).collect();
        out.dedup();
        out
    }
}

/// Builds the merged calendar of all nodes up to and including `horizon`.
///
/// Same-time entries are ordered by node name.
pub fn make_calendar<'a>(
    nodes: impl IntoIterator<Item = &'a NodeSpec>,
    horizon: Time,
) -> Result<Calendar, ModelError> {
    if horizon == 0 {
        return Err(ModelError::ZeroHorizon);
    }
    let mut entries = Vec::new();
    for n in nodes {
        if n.period == 0 {
            return Err(ModelError::NonpositivePeriod { node: n.name.clone() });
        }
        let mut t = n.phase;
        while t <= horizon {
            entries.push((n.name.clone(), t));
            t += n.period;
        }
    }
    entries.sort_by(|(na, ta), (nb, tb)| ta.cmp(tb).then_with(|| na.cmp(nb)));
    Ok(Calendar { entries })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn idle(name: &str, period: Time) -> NodeSpec {
        NodeSpec::new(name, period, |l, _| (l.clone(), Valuation::new()))
    }

    fn topics(names: &[&str]) -> BTreeSet<String> {
        names.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn accepts_disjoint_io() {
        let n = idle("n", 10).subscribes(["a"]).publishes(["b"]);
        assert_eq!(validate_node(&n, &topics(&["a", "b"])), Ok(()));
    }

    #[test]
    fn rejects_overlapping_io() {
        let n = idle("n", 10).subscribes(["a", "b"]).publishes(["b"]);
        assert_eq!(
            validate_node(&n, &topics(&["a", "b"])),
            Err(ModelError::OverlappingIo { node: "n".into(), topics: vec!["b".into()] })
        );
    }

    #[test]
    fn rejects_zero_period_and_unknown_topic() {
        let n = idle("n", 0);
        assert!(matches!(validate_node(&n, &topics(&[])), Err(ModelError::NonpositivePeriod { .. })));
        let n = idle("n", 1).subscribes(["ghost"]);
        assert!(matches!(validate_node(&n, &topics(&[])), Err(ModelError::UnknownTopic { .. })));
    }

    #[test]
    fn calendar_single_node() {
        let cal = make_calendar([&idle("n", 5)], 12).unwrap();
        let times: Vec<Time> = cal.entries.iter().map(|(_, t)| *t).collect();
        assert_eq!(times, vec![0, 5, 10]);
    }

    #[test]
    fn calendar_two_nodes_matches_enumeration() {
        let n1 = idle("n1", 5);
        let n2 = idle("n2", 10);
        let cal = make_calendar([&n1, &n2], 10).unwrap();
        // independent generator: every (node, k*period) with k*period <= horizon
        let mut expected: Vec<(String, Time)> = Vec::new();
        for t in 0..=10u64 {
            for (name, p) in [("n1", 5u64), ("n2", 10u64)] {
                if t % p == 0 {
                    expected.push((name.to_string(), t));
                }
            }
        }
        assert_eq!(cal.entries, expected);
        assert_eq!(
            cal.entries,
            vec![
                ("n1".into(), 0),
                ("n2".into(), 0),
                ("n1".into(), 5),
                ("n1".into(), 10),
                ("n2".into(), 10)
            ]
        );
    }

    #[test]
    fn empty_calendar_and_zero_horizon() {
        assert!(make_calendar(std::iter::empty::<&NodeSpec>(), 10).unwrap().is_empty());
        assert_eq!(make_calendar([&idle("n", 1)], 0), Err(ModelError::ZeroHorizon));
    }

    #[test]
    fn next_after_and_firing_at() {
        let cal = make_calendar([&idle("a", 5), &idle("b", 5).with_phase(5)], 10).unwrap();
        assert_eq!(cal.next_after(None), Some(0));
        assert_eq!(cal.next_after(Some(0)), Some(5));
        assert_eq!(cal.next_after(Some(10)), None);
        assert_eq!(cal.firing_at(5).collect::<Vec<_>>(), vec!["a", "b"]);
    }

    #[test]
    fn domains() {
        assert!(ValueDomain::Vector(2).contains(&Value::Vector(vec![1.0, 2.0])));
        assert!(!ValueDomain::Vector(2).contains(&Value::Vector(vec![1.0])));
        assert!(!ValueDomain::Scalar.contains(&Value::Scalar(f64::NAN)));
        let e = ValueDomain::Enum(vec!["fly".into(), "land".into()]);
        assert!(e.contains(&Value::Symbol("land".into())));
        assert!(TopicDecl::new("t", ValueDomain::Scalar).with_default(Value::Bool(true)).validate().is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn calendar_is_periodic(periods in proptest::collection::vec(1u64..7, 1..4),
                                    phases in proptest::collection::vec(0u64..5, 4),
                                    horizon in 1u64..60) {
                let nodes: Vec<NodeSpec> = periods.iter().enumerate()
                    .map(|(i, p)| idle(&format!("n{i}"), *p).with_phase(phases[i]))
                    .collect();
                let cal = make_calendar(&nodes, horizon).unwrap();
                prop_assert!(cal.entries.windows(2).all(|w| w[0].1 <= w[1].1));
                for n in &nodes {
                    let ts: Vec<Time> = cal.entries.iter().filter(|(m, _)| *m == n.name).map(|(_, t)| *t).collect();
                    prop_assert!(ts.windows(2).all(|w| w[1] - w[0] == n.period));
                    prop_assert!(ts.iter().all(|t| *t <= horizon));
                }
                prop_assert_eq!(cal.clone(), make_calendar(&nodes, horizon).unwrap());
            }
        }
    }
}
