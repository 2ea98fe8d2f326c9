//! Static well-formedness checks for RTA modules and their composition.

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;

use crate::model::{NodeSpec, Time};
use crate::reach::RegionMask;
use crate::rta::{GridModel, RtaModuleSpec};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict", rename_all = "kebab-case")]
pub enum Verdict {
    Pass,
    Fail { witness: String },
    NotCheckable { reason: String },
}

impl Verdict {
    pub fn is_pass(&self) -> bool {
        matches!(self, Verdict::Pass)
    }

    pub fn is_fail(&self) -> bool {
        matches!(self, Verdict::Fail { .. })
    }

    fn fail(witness: impl Into<String>) -> Self {
        Verdict::Fail { witness: witness.into() }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Pass => f.write_str("pass"),
            Verdict::Fail { witness } => write!(f, "fail ({witness})"),
            Verdict::NotCheckable { reason } => write!(f, "not-checkable ({reason})"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Condition {
    P1,
    P2a,
    P2b,
    P3,
    Composable,
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(match self {
            Condition::P1 => "P1",
            Condition::P2a => "P2a",
            Condition::P2b => "P2b",
            Condition::P3 => "P3",
            Condition::Composable => "composable",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WellformednessReport {
    pub subject: String,
    /// Grid shape the region checks ran at, if any.
    pub resolution: Option<Vec<usize>>,
    pub verdicts: BTreeMap<Condition, Verdict>,
}

impl WellformednessReport {
    /// No checkable condition failed.
    pub fn overall(&self) -> bool {
        !self.verdicts.values().any(Verdict::is_fail)
    }

    pub fn verdict(&self, c: Condition) -> Option<&Verdict> {
        self.verdicts.get(&c)
    }

    pub fn failed(&self) -> Vec<Condition> {
        self.verdicts.iter().filter(|(_, v)| v.is_fail()).map(|(c, _)| *c).collect()
    }

    pub fn render(&self) -> String {
        let mut out = format!("module {}\n", self.subject);
        if let Some(r) = &self.resolution {
            let dims: Vec<String> = r.iter().map(|n| n.to_string()).collect();
            out.push_str(&format!("  grid {}\n", dims.join("x")));
        }
        for (c, v) in &self.verdicts {
            out.push_str(&format!("  {c:<10} {v}\n"));
        }
        out.push_str(&format!("  overall    {}\n", if self.overall() { "pass" } else { "fail" }));
        out
    }
}

/// Period and output compatibility of the module's nodes.
pub fn check_p1(spec: &RtaModuleSpec) -> Verdict {
    for n in [&spec.ac, &spec.sc] {
        if n.period > spec.delta {
            return Verdict::fail(format!(
                "P1a: node `{}` has period {} > delta {}",
                n.name, n.period, spec.delta
            ));
        }
    }
    if spec.ac.outputs != spec.sc.outputs {
        let diff: Vec<&String> = spec.ac.outputs.symmetric_difference(&spec.sc.outputs).collect();
        return Verdict::fail(format!("P1b: outputs of `{}` and `{}` differ on {diff:?}", spec.ac.name, spec.sc.name));
    }
    Verdict::Pass
}

fn regions(spec: &RtaModuleSpec) -> Result<(&GridModel, &RegionMask, &RegionMask), Verdict> {
    let model = spec.grid_model.as_ref().ok_or_else(|| Verdict::NotCheckable {
        reason: "no grid model for the plant".into(),
    })?;
    let (Some(safe), Some(safer)) = (&spec.safe.region, &spec.safer.region) else {
        return Err(Verdict::NotCheckable { reason: "predicates have no region representation".into() });
    };
    Ok((model, &safe.mask, &safer.mask))
}

fn cell_witness(model: &GridModel, cell: usize) -> String {
    let c: Vec<String> = model.oracle.grid.center(cell).iter().map(|x| format!("{x:.4}")).collect();
    format!("cell {cell} at [{}]", c.join(", "))
}

/// `Reach(φ_safe, N_sc, ∞) ⊆ φ_safe`, checked as closure of φ_safe under
/// the closed-loop successor relation (equivalent to the fixpoint).
pub fn check_p2a(spec: &RtaModuleSpec) -> Verdict {
    let (model, safe, _) = match regions(spec) {
        Ok(r) => r,
        Err(v) => return v,
    };
    let succ = model.oracle.closed_loop_successors(&model.sc_policy);
    match safe.iter_set().find(|&c| !succ[c].all_in(safe)) {
        Some(c) => Verdict::fail(format!("P2a: SC leaves safe from {}", cell_witness(model, c))),
        None => Verdict::Pass,
    }
}

/// From every safe cell the SC trajectory reaches, within `horizon`, a state
/// whose closed-loop Δ-reach lies in φ_safer.
pub fn check_p2b(spec: &RtaModuleSpec, horizon: Time) -> Verdict {
    let (model, safe, safer) = match regions(spec) {
        Ok(r) => r,
        Err(v) => return v,
    };
    let oracle = &model.oracle;
    let grid = &oracle.grid;
    let succ = oracle.closed_loop_successors(&model.sc_policy);
    let delta_steps = oracle.dynamics.steps_for(spec.delta);
    let settled = RegionMask::from_fn(grid, |c| {
        safer.contains(c) && {
            let (cells, escaped) = oracle.reach_cells(c, delta_steps, &succ);
            !escaped && cells.iter().all(|&n| safer.contains(n))
        }
    });
    let steps = oracle.dynamics.steps_for(horizon);
    for start in safe.iter_set() {
        let mut x = grid.center(start);
        let mut ok = false;
        for _ in 0..=steps {
            match grid.cell_of(&x) {
                Some(c) if settled.contains(c) => {
                    ok = true;
                    break;
                }
                Some(_) => x = oracle.dynamics.apply(&x, &(model.sc_policy)(&x)),
                None => break,
            }
        }
        if !ok {
            return Verdict::fail(format!(
                "P2b: SC from {} does not settle in safer within {horizon} ticks",
                cell_witness(model, start)
            ));
        }
    }
    Verdict::Pass
}

/// `Reach(φ_safer, *, 2Δ) ⊆ φ_safe`.
pub fn check_p3(spec: &RtaModuleSpec) -> Verdict {
    let (model, safe, safer) = match regions(spec) {
        Ok(r) => r,
        Err(v) => return v,
    };
    match safer.iter_set().find(|&c| model.oracle.ttf_cell(c, safe, 2 * spec.delta)) {
        Some(c) => Verdict::fail(format!("P3: 2*delta reach leaves safe from {}", cell_witness(model, c))),
        None => Verdict::Pass,
    }
}

/// Node names and output topics are pairwise disjoint across modules.
/// Each free node counts as a module of its own.
pub fn check_composable(modules: &[RtaModuleSpec], free_nodes: &[NodeSpec]) -> Verdict {
    let mut owner_of_node: BTreeMap<&str, &str> = BTreeMap::new();
    let mut owner_of_topic: BTreeMap<&str, &str> = BTreeMap::new();
    let units = modules
        .iter()
        .map(|m| {
            let names = vec![m.ac.name.as_str(), m.sc.name.as_str(), m.dm_name.as_str()];
            let outs: Vec<&str> = m.outputs().map(String::as_str).collect();
            (m.name.as_str(), names, outs)
        })
        .chain(free_nodes.iter().map(|n| {
            (n.name.as_str(), vec![n.name.as_str()], n.outputs.iter().map(String::as_str).collect())
        }));
    for (unit, names, outs) in units {
        let mut outs = outs;
        outs.sort_unstable();
        outs.dedup();
        for n in names {
            if let Some(prev) = owner_of_node.insert(n, unit) {
                if prev != unit {
                    return Verdict::fail(format!("node `{n}` belongs to both `{prev}` and `{unit}`"));
                }
            }
        }
        for t in outs {
            if let Some(prev) = owner_of_topic.insert(t, unit) {
                return Verdict::fail(format!("topic `{t}` is published by both `{prev}` and `{unit}`"));
            }
        }
    }
    Verdict::Pass
}

/// Runs P1 through P3 on one module.
pub fn check_module(spec: &RtaModuleSpec, p2b_horizon: Time) -> WellformednessReport {
    let mut verdicts = BTreeMap::new();
    verdicts.insert(Condition::P1, check_p1(spec));
    verdicts.insert(Condition::P2a, check_p2a(spec));
    verdicts.insert(Condition::P2b, check_p2b(spec, p2b_horizon));
    verdicts.insert(Condition::P3, check_p3(spec));
    WellformednessReport {
        subject: spec.name.clone(),
        resolution: spec.grid_model.as_ref().map(|m| m.oracle.grid.shape().to_vec()),
        verdicts,
    }
}
