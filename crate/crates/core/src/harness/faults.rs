use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::engine::{NodeKind, SystemSpec};
use crate::error::HarnessError;
use crate::model::{Time, Value, Valuation};

#[derive(Debug, Clone, PartialEq)]
pub enum FaultKind {
    /// Adds uniform noise in `[-amplitude, amplitude]` to every numeric
    /// output component.
    OutputPerturbation { amplitude: f64 },
    /// Adds a fixed offset to every numeric output component.
    OutputBias { offset: Vec<f64> },
    /// Replaces one output topic's value.
    OutputReplacement { topic: String, value: Value },
    /// Drops decision-module firings in `[from, until)`.
    DmDrop { from: Time, until: Option<Time> },
    /// Drops a node's firings in `[from, until)`.
    Delay { from: Time, until: Time },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fault {
    pub target: String,
    pub kind: FaultKind,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct FaultProfile {
    pub faults: Vec<Fault>,
    pub seed: u64,
}

impl FaultProfile {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn with(mut self, target: impl Into<String>, kind: FaultKind) -> Self {
        self.faults.push(Fault { target: target.into(), kind });
        self
    }

    pub fn is_empty(&self) -> bool {
        self.faults.is_empty()
    }

    /// Faults may target advanced controllers and free (planner) nodes;
    /// only `dm-drop` may target a decision module.
    pub fn validate(&self, spec: &SystemSpec) -> Result<(), HarnessError> {
        for f in &self.faults {
            let entry = spec
                .node(&f.target)
                .ok_or_else(|| HarnessError::InvalidFault(format!("unknown node `{}`", f.target)))?;
            let ok = match (&f.kind, entry.kind) {
                (FaultKind::DmDrop { .. }, NodeKind::Dm { .. }) => true,
                (FaultKind::DmDrop { .. }, _) => false,
                (_, NodeKind::Ac { .. } | NodeKind::Free) => true,
                _ => false,
            };
            if !ok {
                return Err(HarnessError::InvalidFault(format!(
                    "{:?} cannot target `{}` ({:?})",
                    f.kind, f.target, entry.kind
                )));
            }
            if let FaultKind::OutputReplacement { topic, .. } = &f.kind {
                if !entry.spec.outputs.contains(topic) {
                    return Err(HarnessError::InvalidFault(format!("`{}` does not publish `{topic}`", f.target)));
                }
            }
        }
        Ok(())
    }
}

/// Per-run fault state resolved against node indices.
pub(crate) struct ActiveFaults {
    faults: Vec<(usize, FaultKind)>,
    rng: ChaCha8Rng,
}

impl ActiveFaults {
    pub(crate) fn new(profile: &FaultProfile, spec: &SystemSpec) -> Self {
        let faults = profile
            .faults
            .iter()
            .filter_map(|f| spec.index.get(&f.target).map(|&i| (i, f.kind.clone())))
            .collect();
        Self { faults, rng: ChaCha8Rng::seed_from_u64(profile.seed) }
    }

    pub(crate) fn skip(&self, t: Time, node: usize) -> bool {
        self.faults.iter().any(|(n, k)| {
            *n == node
                && match k {
                    FaultKind::DmDrop { from, until } => t >= *from && until.is_none_or(|u| t < u),
                    FaultKind::Delay { from, until } => t >= *from && t < *until,
                    _ => false,
                }
        })
    }

    pub(crate) fn outputs(&mut self, node: usize, out: &mut Valuation) {
        for (n, k) in &self.faults {
            if *n != node {
                continue;
            }
            match k {
                FaultKind::OutputPerturbation { amplitude } => {
                    let a = *amplitude;
                    for v in out.0.values_mut() {
                        perturb(v, |_| a * (2.0 * self.rng.gen::<f64>() - 1.0));
                    }
                }
                FaultKind::OutputBias { offset } => {
                    for v in out.0.values_mut() {
                        perturb(v, |i| offset.get(i).copied().unwrap_or(0.0));
                    }
                }
                FaultKind::OutputReplacement { topic, value } => {
                    if out.get(topic).is_some() {
                        out.insert(topic.clone(), value.clone());
                    }
                }
                FaultKind::DmDrop { .. } | FaultKind::Delay { .. } => {}
            }
        }
    }
}

fn perturb(v: &mut Value, mut noise: impl FnMut(usize) -> f64) {
    match v {
        Value::Scalar(x) => *x += noise(0),
        Value::Vector(xs) => {
            for (i, x) in xs.iter_mut().enumerate() {
                *x += noise(i);
            }
        }
        _ => {}
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn windows_and_noise() {
        let mut a = ActiveFaults {
            faults: vec![
                (0, FaultKind::DmDrop { from: 5, until: None }),
                (1, FaultKind::Delay { from: 2, until: 4 }),
                (2, FaultKind::OutputBias { offset: vec![1.0, -1.0] }),
            ],
            rng: ChaCha8Rng::seed_from_u64(0),
        };
        assert!(!a.skip(4, 0) && a.skip(5, 0) && a.skip(500, 0));
        assert!(!a.skip(1, 1) && a.skip(2, 1) && a.skip(3, 1) && !a.skip(4, 1));
        let mut out = Valuation::new().with("u", Value::Vector(vec![0.0, 0.0]));
        a.outputs(2, &mut out);
        assert_eq!(out.get("u"), Some(&Value::Vector(vec![1.0, -1.0])));
        a.outputs(1, &mut out);
        assert_eq!(out.get("u"), Some(&Value::Vector(vec![1.0, -1.0])));
    }
}
