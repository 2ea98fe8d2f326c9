use std::fmt::Write as _;

use serde::Serialize;

use crate::engine::{module_flags, NodeKind, Rule, SystemSpec, Trace};
use crate::error::HarnessError;
use crate::model::Time;
use crate::rta::Mode;

/// An AC→SC switch and the time control went back to the AC, if it did.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Disengagement {
    pub module: usize,
    pub at: Time,
    pub back_at: Option<Time>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct AuditReport {
    pub events: usize,
    /// Events after which the invariant fails for some module.
    pub inv_violations: usize,
    pub first_violation: Option<usize>,
    /// Writes of a module's state topic with a value outside φ_safe.
    pub unsafe_entries: usize,
    pub first_unsafe: Option<usize>,
    pub disengagements: Vec<Disengagement>,
    /// Fraction of (plant firing, module) pairs with the AC enabled.
    pub ac_fraction: f64,
}

impl AuditReport {
    pub fn disengagement_count(&self) -> usize {
        self.disengagements.len()
    }

    pub fn is_clean(&self) -> bool {
        self.inv_violations == 0 && self.unsafe_entries == 0
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "events           {}", self.events);
        let _ = writeln!(s, "inv_violations   {}", self.inv_violations);
        if let Some(i) = self.first_violation {
            let _ = writeln!(s, "first_violation  event {i}");
        }
        let _ = writeln!(s, "unsafe_entries   {}", self.unsafe_entries);
        if let Some(i) = self.first_unsafe {
            let _ = writeln!(s, "first_unsafe     event {i}");
        }
        let _ = writeln!(s, "disengagements   {}", self.disengagements.len());
        let _ = writeln!(s, "ac_fraction      {:.4}", self.ac_fraction);
        s
    }
}

/// Replays a trace's writes and mode changes on a fresh valuation and
/// evaluates φ_safe and the invariant after every event. The recorded
/// flags must agree with the recomputed ones.
pub fn audit(trace: &Trace, spec: &SystemSpec) -> Result<AuditReport, HarnessError> {
    let mismatch = |i: usize, what: String| HarnessError::TraceSpecMismatch(format!("event {i}: {what}"));
    let nm = spec.modules.len();
    let mut topics = spec.default_valuation();
    let mut modes = vec![Mode::Sc; nm];
    let mut report = AuditReport { events: trace.len(), ..AuditReport::default() };
    let mut open: Vec<Option<usize>> = vec![None; nm];
    let (mut plant_steps, mut ac_steps) = (0usize, 0usize);
    let mut last_time = 0;

    for (i, e) in trace.events.iter().enumerate() {
        if e.time < last_time {
            return Err(mismatch(i, "time decreases".into()));
        }
        last_time = e.time;
        let node = match &e.node {
            Some(n) => Some(spec.node(n).ok_or_else(|| mismatch(i, format!("unknown node `{n}`")))?),
            None => None,
        };
        match e.rule {
            Rule::TimeProgress => {}
            Rule::EnvInput => {
                for (k, v) in e.writes.iter() {
                    if !spec.system_inputs.contains(k) {
                        return Err(mismatch(i, format!("`{k}` is not an input")));
                    }
                    topics.insert(k.clone(), v.clone());
                }
            }
            Rule::DmStep => {
                let Some(NodeKind::Dm { module }) = node.map(|n| n.kind) else {
                    return Err(mismatch(i, "dm-step on a non-DM node".into()));
                };
                let (Some(before), Some(after)) = (e.mode_before, e.mode_after) else {
                    return Err(mismatch(i, "dm-step without modes".into()));
                };
                if before != modes[module] {
                    return Err(mismatch(i, format!("mode before is {before}, expected {}", modes[module])));
                }
                modes[module] = after;
                match (before, after) {
                    (Mode::Ac, Mode::Sc) => {
                        open[module] = Some(report.disengagements.len());
                        report.disengagements.push(Disengagement { module, at: e.time, back_at: None });
                    }
                    (Mode::Sc, Mode::Ac) => {
                        if let Some(d) = open[module].take() {
                            report.disengagements[d].back_at = Some(e.time);
                        }
                    }
                    _ => {}
                }
            }
            Rule::NodeStep => {
                let entry = node.ok_or_else(|| mismatch(i, "node-step without node".into()))?;
                for (k, v) in e.writes.iter() {
                    if !entry.spec.outputs.contains(k) {
                        return Err(mismatch(i, format!("`{}` wrote `{k}`", entry.spec.name)));
                    }
                    topics.insert(k.clone(), v.clone());
                }
                if entry.kind == NodeKind::Plant {
                    plant_steps += nm;
                    ac_steps += modes.iter().filter(|m| **m == Mode::Ac).count();
                }
            }
        }

        let (mut safe, mut safer, mut inv) = (true, true, true);
        for (m, module) in spec.modules.iter().enumerate() {
            let (a, b, c) = module_flags(spec, m, modes[m], &topics);
            safe &= a;
            safer &= b;
            inv &= c;
            if !a && e.writes.get(&module.state_topic).is_some() {
                report.unsafe_entries += 1;
                report.first_unsafe.get_or_insert(i);
            }
        }
        if (safe, safer, inv) != (e.safe, e.safer, e.inv_holds) {
            return Err(mismatch(i, "recorded safety flags differ from recomputed ones".into()));
        }
        if !inv {
            report.inv_violations += 1;
            report.first_violation.get_or_insert(i);
        }
    }
    report.ac_fraction = if plant_steps == 0 { 0.0 } else { ac_steps as f64 / plant_steps as f64 };
    Ok(report)
}
