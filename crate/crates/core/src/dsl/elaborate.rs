use std::collections::BTreeMap;
use std::sync::Arc;

use crate::engine::{SystemBuilder, SystemSpec};
use crate::error::{DslError, EngineError};
use crate::model::{NodeSpec, Time, TopicDecl, Transition, Value, ValueDomain};
use crate::rta::{GridModel, ReachOracle, RtaModuleSpec, SafetyPredicate, StatePredicate};
use crate::wellformed::{check_module, Condition, Verdict};

use super::ast::*;
use super::{Diagnostic, DiagnosticKind};

/// A node body: its transition and initial local state.
#[derive(Clone)]
pub struct NodeBody {
    pub transition: Transition,
    pub initial: Value,
}

impl NodeBody {
    /// Takes the body of an already built node.
    pub fn of(spec: &NodeSpec) -> Self {
        Self { transition: spec.transition.clone(), initial: spec.initial_local_state.clone() }
    }
}

#[derive(Clone)]
pub struct ReachBinding {
    pub oracle: Arc<dyn ReachOracle>,
    pub grid: Option<GridModel>,
}

/// Functions a program may name.
#[derive(Clone, Default)]
pub struct Registry {
    pub bodies: BTreeMap<String, NodeBody>,
    pub sets: BTreeMap<String, SafetyPredicate>,
    pub ttfs: BTreeMap<String, StatePredicate>,
    pub reach: BTreeMap<String, ReachBinding>,
}

impl Registry {
    pub fn body(&mut self, name: &str, spec: &NodeSpec) -> &mut Self {
        self.bodies.insert(name.into(), NodeBody::of(spec));
        self
    }

    /// Binds `<prefix>_ac`-style names for every part of a built module:
    /// the AC and SC bodies under their node names, and
    /// `<prefix>_safe`, `<prefix>_safer`, `<prefix>_ttf`, `<prefix>_reach`.
    pub fn module(&mut self, prefix: &str, m: &RtaModuleSpec) -> &mut Self {
        self.body(&m.ac.name, &m.ac);
        self.body(&m.sc.name, &m.sc);
        self.sets.insert(format!("{prefix}_safe"), m.safe.clone());
        self.sets.insert(format!("{prefix}_safer"), m.safer.clone());
        self.ttfs.insert(format!("{prefix}_ttf"), m.ttf2d.clone());
        if let Some(oracle) = &m.oracle {
            self.reach.insert(format!("{prefix}_reach"), ReachBinding { oracle: oracle.clone(), grid: m.grid_model.clone() });
        }
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ElaborateOptions {
    pub horizon: Time,
    /// Simulation bound for the P2b check.
    pub p2b_horizon: Time,
    /// Keep modules whose P2a, P2b or P3 check fails.
    pub allow_unverified: bool,
}

impl Default for ElaborateOptions {
    fn default() -> Self {
        Self { horizon: 1000, p2b_horizon: 1000, allow_unverified: false }
    }
}

fn unbound(i: &Ident) -> Diagnostic {
    Diagnostic::new(DiagnosticKind::UnboundFunction, i.pos, format!("no function `{i}` in the registry"))
}

fn lookup<'a, T>(map: &'a BTreeMap<String, T>, i: &Ident) -> Result<&'a T, Diagnostic> {
    map.get(&i.name).ok_or_else(|| unbound(i))
}

fn topic_decl(t: &TopicItem) -> Result<TopicDecl, Diagnostic> {
    let domain = match &t.ty {
        TypeExpr::Bool => ValueDomain::Bool,
        TypeExpr::Scalar => ValueDomain::Scalar,
        TypeExpr::Coord => ValueDomain::Vector(3),
        TypeExpr::Vector(n) => ValueDomain::Vector(*n),
        TypeExpr::Enum(names) => ValueDomain::Enum(names.iter().map(|n| n.name.clone()).collect()),
    };
    let decl = TopicDecl::new(t.name.name.clone(), domain);
    let Some(lit) = &t.default else { return Ok(decl) };
    let v = match lit {
        Literal::Bool(b) => Value::Bool(*b),
        Literal::Number(x) => Value::Scalar(*x),
        Literal::Vector(xs) => Value::Vector(xs.clone()),
        Literal::Symbol(s) => Value::Symbol(s.name.clone()),
    };
    if !decl.domain.contains(&v) {
        return Err(Diagnostic::new(
            DiagnosticKind::TypeMismatch,
            t.name.pos,
            format!("default of `{}` does not fit its type", t.name),
        ));
    }
    Ok(decl.with_default(v))
}

fn node_spec(n: &NodeItem, reg: &Registry) -> Result<NodeSpec, Diagnostic> {
    let body = lookup(&reg.bodies, &n.body)?;
    if n.period == 0 {
        return Err(Diagnostic::syntax(n.name.pos, format!("node `{}` needs a positive period", n.name)));
    }
    let t = body.transition.clone();
    Ok(NodeSpec::new(n.name.name.clone(), n.period, move |l, i| t(l, i))
        .subscribes(n.subscribes.iter().map(|i| i.name.clone()))
        .publishes(n.publishes.iter().map(|i| i.name.clone()))
        .with_phase(n.phase.unwrap_or(0))
        .with_local_state(body.initial.clone()))
}

/// Builds the system: binds every function, checks each module and
/// generates its decision module. P1 and composability failures always
/// abort; P2a, P2b and P3 failures abort unless `allow_unverified`. The
/// well-formedness reports are kept on the resulting spec.
pub fn elaborate(p: &Program, reg: &Registry, opts: &ElaborateOptions) -> Result<SystemSpec, DslError> {
    let mut b = SystemBuilder::default();
    for t in p.topics() {
        b = b.topic(topic_decl(t)?);
    }
    let mut nodes = BTreeMap::new();
    for n in p.nodes() {
        nodes.insert(n.name.name.clone(), (n, node_spec(n, reg)?));
    }
    let mut modules = Vec::new();
    for r in p.modules() {
        let reach = r.reach.as_ref().map(|i| lookup(&reg.reach, i)).transpose()?;
        let m = RtaModuleSpec {
            name: r.name.name.clone(),
            ac: nodes[&r.ac.name].1.clone(),
            sc: nodes[&r.sc.name].1.clone(),
            dm_name: r.dm.as_ref().map_or_else(|| format!("{}_dm", r.name), |d| d.name.clone()),
            delta: r.period,
            state_topic: r.state.name.clone(),
            safe: lookup(&reg.sets, &r.safe)?.clone(),
            safer: lookup(&reg.sets, &r.safer)?.clone(),
            ttf2d: lookup(&reg.ttfs, &r.ttf)?.clone(),
            oracle: reach.map(|x| x.oracle.clone()),
            grid_model: reach.and_then(|x| x.grid.clone()),
        };
        modules.push(m);
    }
    let members: Vec<&str> = p.modules().flat_map(|r| [r.ac.name.as_str(), r.sc.name.as_str()]).collect();
    for m in modules {
        let report = check_module(&m, opts.p2b_horizon);
        let p1_failed = matches!(report.verdict(Condition::P1), Some(Verdict::Fail { .. }));
        if p1_failed || (!report.overall() && !opts.allow_unverified) {
            return Err(DslError::Wellformedness { module: m.name.clone(), report: report.render() });
        }
        b = b.module(m).report(report);
    }
    for (name, (item, spec)) in nodes {
        if members.contains(&name.as_str()) {
            continue;
        }
        b = if item.plant { b.plant(spec) } else { b.node(spec) };
    }
    b.build(opts.horizon).map_err(|e| match e {
        EngineError::NotComposable(why) => DslError::Wellformedness { module: "<system>".into(), report: why },
        e => DslError::Engine(e),
    })
}
