//! Systematic testing: schedule exploration under bounded asynchrony,
//! fault injection, trace auditing and deterministic replay.

mod audit;
mod faults;
mod schedule;

use std::thread;

use rand_chacha::ChaCha8Rng;

pub use audit::{audit, AuditReport, Disengagement};
pub use faults::{Fault, FaultKind, FaultProfile};
pub use schedule::{choice_points, permute, schedule_count, Plan, ScheduleKind, SchedulePolicy, ScheduleSpace};

use crate::engine::{run, EnvScript, RunHooks, SystemSpec, Trace};
use crate::error::HarnessError;
use crate::model::{Time, Valuation};

use faults::ActiveFaults;

struct HarnessHooks {
    plan: Plan,
    rng: Option<ChaCha8Rng>,
    faults: ActiveFaults,
}

impl RunHooks for HarnessHooks {
    fn order(&mut self, t: Time, fire: &mut Vec<usize>, spec: &SystemSpec) {
        self.plan.apply(&mut self.rng, t, fire, spec);
    }

    fn skip(&mut self, t: Time, node: usize, _spec: &SystemSpec) -> bool {
        self.faults.skip(t, node)
    }

    fn outputs(&mut self, _t: Time, node: usize, _spec: &SystemSpec, out: &mut Valuation) {
        self.faults.outputs(node, out);
    }
}

/// Everything that determines a family of runs.
#[derive(Debug, Clone)]
pub struct Experiment<'a> {
    pub spec: &'a SystemSpec,
    pub policy: SchedulePolicy,
    /// Environment choices; an empty list means one empty script.
    pub envs: Vec<EnvScript>,
    pub faults: FaultProfile,
}

impl<'a> Experiment<'a> {
    pub fn new(spec: &'a SystemSpec, policy: SchedulePolicy) -> Self {
        Self { spec, policy, envs: Vec::new(), faults: FaultProfile::none() }
    }

    pub fn with_envs(mut self, envs: Vec<EnvScript>) -> Self {
        self.envs = envs;
        self
    }

    pub fn with_faults(mut self, faults: FaultProfile) -> Self {
        self.faults = faults;
        self
    }

    fn env_count(&self) -> u64 {
        self.envs.len().max(1) as u64
    }

    fn env(&self, i: u64) -> EnvScript {
        self.envs.get(i as usize).cloned().unwrap_or_default()
    }

    /// Total number of runs: environment choices times schedules.
    pub fn len(&self) -> Result<u64, HarnessError> {
        let space = ScheduleSpace::new(self.spec, self.policy)?;
        Ok(space.len() * self.env_count())
    }

    pub fn is_empty(&self) -> Result<bool, HarnessError> {
        Ok(self.len()? == 0)
    }

    /// Runs one id: `id = env_index * schedules + schedule_index`.
    pub fn replay(&self, id: u64) -> Result<Trace, HarnessError> {
        self.faults.validate(self.spec)?;
        let space = ScheduleSpace::new(self.spec, self.policy)?;
        self.run_id(&space, id)
    }

    /// Replays `id` and checks the trace digest.
    pub fn replay_verified(&self, id: u64, digest: &str) -> Result<Trace, HarnessError> {
        let trace = self.replay(id)?;
        let got = trace.digest();
        if got != digest {
            return Err(HarnessError::DigestMismatch { expected: digest.to_string(), got });
        }
        Ok(trace)
    }

    fn run_id(&self, space: &ScheduleSpace, id: u64) -> Result<Trace, HarnessError> {
        let n = space.len();
        if n == 0 || id >= n * self.env_count() {
            return Err(HarnessError::UnknownSchedule(id));
        }
        let mut hooks = HarnessHooks {
            plan: space.plan(id % n)?,
            rng: None,
            faults: ActiveFaults::new(&self.faults, self.spec),
        };
        Ok(run(self.spec, &self.env(id / n), &mut hooks)?)
    }

    /// Runs and audits every id, in parallel, returning results by id.
    pub fn explore(&self) -> Result<ExploreReport, HarnessError> {
        self.faults.validate(self.spec)?;
        let space = ScheduleSpace::new(self.spec, self.policy)?;
        let total = space.len() * self.env_count();
        let workers = thread::available_parallelism().map(|n| n.get()).unwrap_or(1).min(total.max(1) as usize);
        let chunks: Vec<Result<Vec<RunSummary>, HarnessError>> = thread::scope(|s| {
            let handles: Vec<_> = (0..workers as u64)
                .map(|w| {
                    let space = &space;
                    s.spawn(move || {
                        (w..total)
                            .step_by(workers)
                            .map(|id| {
                                let trace = self.run_id(space, id)?;
                                let report = audit(&trace, self.spec)?;
                                Ok(RunSummary { id, digest: trace.digest(), report })
                            })
                            .collect()
                    })
                })
                .collect();
            handles.into_iter().map(|h| h.join().expect("explore worker panicked")).collect()
        });
        let mut runs = Vec::with_capacity(total as usize);
        for c in chunks {
            runs.extend(c?);
        }
        runs.sort_by_key(|r| r.id);
        Ok(ExploreReport { runs })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub id: u64,
    pub digest: String,
    pub report: AuditReport,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExploreReport {
    pub runs: Vec<RunSummary>,
}

impl ExploreReport {
    pub fn inv_violations(&self) -> usize {
        self.runs.iter().map(|r| r.report.inv_violations).sum()
    }

    pub fn unsafe_entries(&self) -> usize {
        self.runs.iter().map(|r| r.report.unsafe_entries).sum()
    }

    /// Runs with an invariant violation or unsafe entry.
    pub fn failing(&self) -> impl Iterator<Item = &RunSummary> {
        self.runs.iter().filter(|r| !r.report.is_clean())
    }

    pub fn render(&self) -> String {
        let failing: Vec<u64> = self.failing().map(|r| r.id).take(10).collect();
        format!(
            "runs             {}\ninv_violations   {}\nunsafe_entries   {}\nfailing_ids      {:?}\n",
            self.runs.len(),
            self.inv_violations(),
            self.unsafe_entries(),
            failing
        )
    }
}

#[cfg(test)]
mod tests;
