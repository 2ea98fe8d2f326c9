//! Executable semantics: configurations stepped by the environment-input,
//! time-progress, decision-module and node rules.

mod system;
mod trace;

use std::collections::BTreeMap;

pub use system::{NodeEntry, NodeKind, SystemBuilder, SystemSpec};
pub use trace::{Event, Rule, Trace};

use crate::error::EngineError;
use crate::model::{Time, Value, Valuation};
use crate::rta::{invariant_holds, Mode};

/// `(L, OE, ct, FN, Topics)`, with nodes addressed by their index in
/// [`SystemSpec::nodes`].
#[derive(Debug, Clone, PartialEq)]
pub struct Configuration {
    pub local_states: Vec<Value>,
    /// Meaningful for AC and SC nodes only.
    pub output_enabled: Vec<bool>,
    pub current_time: Time,
    /// Set once the first time-progress step has happened; before that the
    /// next instant may be time 0 itself.
    pub started: bool,
    pub fire_now: Vec<usize>,
    pub topics: Valuation,
}

impl Configuration {
    pub fn mode(&self, spec: &SystemSpec, module: usize) -> Mode {
        let (dm, _, _) = spec.module_nodes(module);
        Mode::from_value(&self.local_states[dm]).unwrap_or(Mode::Sc)
    }

    pub fn fire_now_names<'a>(&self, spec: &'a SystemSpec) -> Vec<&'a str> {
        self.fire_now.iter().map(|&i| spec.nodes[i].spec.name.as_str()).collect()
    }

    pub fn local_state(&self, spec: &SystemSpec, node: &str) -> Option<&Value> {
        spec.index.get(node).map(|&i| &self.local_states[i])
    }

    pub fn enabled(&self, spec: &SystemSpec, node: &str) -> Option<bool> {
        spec.index.get(node).map(|&i| self.output_enabled[i])
    }

    fn take_scheduled(&mut self, n: usize, spec: &SystemSpec) -> Result<(), EngineError> {
        match self.fire_now.iter().position(|&x| x == n) {
            Some(p) => {
                self.fire_now.remove(p);
                Ok(())
            }
            None => Err(EngineError::NotScheduled(spec.nodes[n].spec.name.clone())),
        }
    }
}

/// Initial configuration: every module in SC mode with its SC enabled.
pub fn init_configuration(spec: &SystemSpec) -> Configuration {
    let local_states = spec.nodes.iter().map(|n| n.spec.initial_local_state.clone()).collect();
    let output_enabled = spec
        .nodes
        .iter()
        .map(|n| !matches!(n.kind, NodeKind::Ac { .. }))
        .collect();
    Configuration {
        local_states,
        output_enabled,
        current_time: 0,
        started: false,
        fire_now: Vec::new(),
        topics: spec.default_valuation(),
    }
}

/// Environment-Input: writes a system input topic.
pub fn apply_env_input(c: &mut Configuration, spec: &SystemSpec, topic: &str, v: Value) -> Result<(), EngineError> {
    if !spec.system_inputs.contains(topic) {
        return Err(EngineError::NotAnInput(topic.to_string()));
    }
    if !spec.topics[topic].domain.contains(&v) {
        return Err(EngineError::ValueOutsideDomain(topic.to_string()));
    }
    c.topics.insert(topic, v);
    Ok(())
}

/// Discrete-Time-Progress: moves to the next calendar instant.
pub fn apply_time_progress(c: &mut Configuration, spec: &SystemSpec) -> Result<(), EngineError> {
    if !c.fire_now.is_empty() {
        let names = c.fire_now_names(spec).into_iter().map(String::from).collect();
        return Err(EngineError::NotQuiescent(names));
    }
    let after = c.started.then_some(c.current_time);
    let t = spec.calendar.next_after(after).ok_or(EngineError::HorizonExhausted(c.current_time))?;
    c.current_time = t;
    c.started = true;
    c.fire_now = spec.calendar.firing_at(t).map(|n| spec.index[n]).collect();
    c.fire_now.sort_unstable();
    Ok(())
}

/// DM-Step: the decision module updates its mode and the enables of its
/// module's AC and SC. Returns `(mode before, mode after)`.
pub fn apply_dm(c: &mut Configuration, spec: &SystemSpec, dm: usize) -> Result<(Mode, Mode), EngineError> {
    let NodeKind::Dm { module } = spec.nodes[dm].kind else {
        return Err(EngineError::NotADm(spec.nodes[dm].spec.name.clone()));
    };
    c.take_scheduled(dm, spec)?;
    let node = &spec.nodes[dm].spec;
    let before = Mode::from_value(&c.local_states[dm]).unwrap_or(Mode::Sc);
    let (l, _) = node.fire(&c.local_states[dm], &c.topics.restrict(&node.inputs));
    let after = Mode::from_value(&l).unwrap_or(Mode::Sc);
    c.local_states[dm] = l;
    let (_, ac, sc) = spec.module_nodes(module);
    c.output_enabled[ac] = after == Mode::Ac;
    c.output_enabled[sc] = after != Mode::Ac;
    Ok((before, after))
}

/// AC-or-SC-Step (also used for free nodes): advances the local state and
/// writes the outputs when the node is output-enabled. `filter` may rewrite
/// the outputs before they are checked and published. Returns the writes.
pub fn apply_node(
    c: &mut Configuration,
    spec: &SystemSpec,
    n: usize,
    filter: impl FnOnce(&mut Valuation),
) -> Result<Valuation, EngineError> {
    let entry = &spec.nodes[n];
    if matches!(entry.kind, NodeKind::Dm { .. }) {
        return Err(EngineError::IsADm(entry.spec.name.clone()));
    }
    c.take_scheduled(n, spec)?;
    let (l, mut out) = entry.spec.fire(&c.local_states[n], &c.topics.restrict(&entry.spec.inputs));
    c.local_states[n] = l;
    if !c.output_enabled[n] {
        return Ok(Valuation::new());
    }
    filter(&mut out);
    for (topic, v) in out.iter() {
        if !entry.spec.outputs.contains(topic) {
            return Err(EngineError::UndeclaredOutput { node: entry.spec.name.clone(), topic: topic.clone() });
        }
        if !spec.topics[topic].domain.contains(v) {
            return Err(EngineError::ValueOutsideDomain(topic.clone()));
        }
    }
    for (topic, v) in out.iter() {
        c.topics.insert(topic.clone(), v.clone());
    }
    Ok(out)
}

/// Functional form of [`apply_env_input`].
pub fn step_env_input(c: &Configuration, spec: &SystemSpec, topic: &str, v: Value) -> Result<Configuration, EngineError> {
    let mut c = c.clone();
    apply_env_input(&mut c, spec, topic, v)?;
    Ok(c)
}

/// Functional form of [`apply_time_progress`].
pub fn step_time_progress(c: &Configuration, spec: &SystemSpec) -> Result<Configuration, EngineError> {
    let mut c = c.clone();
    apply_time_progress(&mut c, spec)?;
    Ok(c)
}

/// Functional form of [`apply_dm`].
pub fn step_dm(c: &Configuration, spec: &SystemSpec, dm: &str) -> Result<Configuration, EngineError> {
    let mut c = c.clone();
    let i = spec.node_index(dm)?;
    apply_dm(&mut c, spec, i)?;
    Ok(c)
}

/// Functional form of [`apply_node`].
pub fn step_node(c: &Configuration, spec: &SystemSpec, n: &str) -> Result<Configuration, EngineError> {
    let mut c = c.clone();
    let i = spec.node_index(n)?;
    apply_node(&mut c, spec, i, |_| {})?;
    Ok(c)
}

/// Per-module safety flags on a valuation: `(safe, safer, Φ_Inv)`.
/// Without a reach oracle the invariant degrades to `s ∈ φ_safe`.
pub fn module_flags(spec: &SystemSpec, module: usize, mode: Mode, topics: &Valuation) -> (bool, bool, bool) {
    let m = &spec.modules[module];
    let Some(s) = topics.get(&m.state_topic) else { return (false, false, false) };
    let safe = m.safe.contains(s);
    let safer = m.safer.contains(s);
    let inv = match &m.oracle {
        Some(o) => invariant_holds(mode, s, m, o.as_ref()).unwrap_or(false),
        None => safe,
    };
    (safe, safer, inv)
}

/// Conjunction of [`module_flags`] over all modules.
pub fn system_flags(spec: &SystemSpec, c: &Configuration) -> (bool, bool, bool) {
    (0..spec.modules.len()).fold((true, true, true), |(a, b, i), m| {
        let (x, y, z) = module_flags(spec, m, c.mode(spec, m), &c.topics);
        (a && x, b && y, i && z)
    })
}

/// Time-stamped environment writes. A write stamped `t` is applied at the
/// first calendar instant `≥ t`, before any node fires there.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EnvScript {
    pub writes: Vec<(Time, String, Value)>,
}

impl EnvScript {
    pub fn new(mut writes: Vec<(Time, String, Value)>) -> Self {
        writes.sort_by_key(|w| w.0);
        Self { writes }
    }
}

/// Scheduling and fault-injection hooks for [`run`].
pub trait RunHooks {
    /// Reorders the nodes firing at `t`, given in default order.
    fn order(&mut self, _t: Time, _fire: &mut Vec<usize>, _spec: &SystemSpec) {}
    /// Drops a firing without applying its rule.
    fn skip(&mut self, _t: Time, _node: usize, _spec: &SystemSpec) -> bool {
        false
    }
    /// Rewrites an enabled node's outputs.
    fn outputs(&mut self, _t: Time, _node: usize, _spec: &SystemSpec, _out: &mut Valuation) {}
}

/// Default order, no faults.
#[derive(Debug, Default, Clone, Copy)]
pub struct NoHooks;

impl RunHooks for NoHooks {}

/// Drives the rules to quiescence at each calendar instant up to the
/// horizon, recording every applied rule.
pub fn run(spec: &SystemSpec, env: &EnvScript, hooks: &mut dyn RunHooks) -> Result<Trace, EngineError> {
    let mut c = init_configuration(spec);
    let mut trace = Trace::default();
    let mut pending = env.writes.iter().peekable();
    let record = |c: &Configuration, rule, node: Option<usize>, modes: Option<(Mode, Mode)>, writes| {
        let (safe, safer, inv_holds) = system_flags(spec, c);
        Event {
            time: c.current_time,
            rule,
            node: node.map(|i| spec.nodes[i].spec.name.clone()),
            mode_before: modes.map(|m| m.0),
            mode_after: modes.map(|m| m.1),
            writes,
            safe,
            safer,
            inv_holds,
        }
    };
    loop {
        let after = c.started.then_some(c.current_time);
        match spec.calendar.next_after(after) {
            Some(t) if t <= spec.horizon => {}
            _ => break,
        }
        apply_time_progress(&mut c, spec)?;
        trace.events.push(record(&c, Rule::TimeProgress, None, None, Valuation::new()));
        let t = c.current_time;
        while let Some((_, topic, v)) = pending.next_if(|w| w.0 <= t) {
            apply_env_input(&mut c, spec, topic, v.clone())?;
            let writes = Valuation::new().with(topic.clone(), v.clone());
            trace.events.push(record(&c, Rule::EnvInput, None, None, writes));
        }
        let mut order = c.fire_now.clone();
        hooks.order(t, &mut order, spec);
        for n in order {
            if hooks.skip(t, n, spec) {
                c.take_scheduled(n, spec)?;
                continue;
            }
            if matches!(spec.nodes[n].kind, NodeKind::Dm { .. }) {
                let modes = apply_dm(&mut c, spec, n)?;
                trace.events.push(record(&c, Rule::DmStep, Some(n), Some(modes), Valuation::new()));
            } else {
                let writes = apply_node(&mut c, spec, n, |out| hooks.outputs(t, n, spec, out))?;
                trace.events.push(record(&c, Rule::NodeStep, Some(n), None, writes));
            }
        }
    }
    Ok(trace)
}

/// Final topic valuation reconstructed from a trace's writes.
pub fn final_topics(spec: &SystemSpec, trace: &Trace) -> Valuation {
    let mut v = spec.default_valuation();
    for e in &trace.events {
        for (k, x) in e.writes.iter() {
            v.insert(k.clone(), x.clone());
        }
    }
    v
}

/// Node-step counts per node name.
pub fn firing_counts(trace: &Trace) -> BTreeMap<String, usize> {
    let mut out = BTreeMap::new();
    for e in &trace.events {
        if let (Rule::NodeStep | Rule::DmStep, Some(n)) = (e.rule, &e.node) {
            *out.entry(n.clone()).or_default() += 1;
        }
    }
    out
}
