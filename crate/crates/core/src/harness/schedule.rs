//! Bounded-asynchrony schedule enumeration.
//!
//! A choice point is a calendar instant at which two or more non-plant
//! nodes fire. A schedule picks, at each choice point, one permutation of
//! those nodes; plants always fire last. The bound limits how many choice
//! points may deviate from the default order.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::engine::{NodeKind, SystemSpec};
use crate::error::HarnessError;
use crate::model::Time;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScheduleKind {
    Deterministic,
    /// `runs` schedules, each shuffling every choice point.
    Random { runs: u64 },
    Exhaustive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SchedulePolicy {
    pub kind: ScheduleKind,
    /// Maximum number of choice points with a non-default order.
    pub bound: usize,
    pub seed: u64,
    /// Largest exhaustive schedule count accepted.
    pub cap: u64,
}

impl Default for SchedulePolicy {
    fn default() -> Self {
        Self { kind: ScheduleKind::Deterministic, bound: 0, seed: 0, cap: 100_000 }
    }
}

impl SchedulePolicy {
    pub fn deterministic() -> Self {
        Self::default()
    }

    pub fn random(seed: u64, runs: u64) -> Self {
        Self { kind: ScheduleKind::Random { runs }, seed, ..Self::default() }
    }

    pub fn exhaustive(bound: usize) -> Self {
        Self { kind: ScheduleKind::Exhaustive, bound, ..Self::default() }
    }
}

/// Choice points of a system: `(time, number of permutable nodes)`.
pub fn choice_points(spec: &SystemSpec) -> Vec<(Time, usize)> {
    spec.calendar
        .instants()
        .into_iter()
        .filter(|&t| t <= spec.horizon)
        .map(|t| {
            let k = spec
                .calendar
                .firing_at(t)
                .filter(|n| spec.node(n).is_some_and(|e| e.kind != NodeKind::Plant))
                .count();
            (t, k)
        })
        .filter(|&(_, k)| k >= 2)
        .collect()
}

fn factorial(k: usize) -> u128 {
    (1..=k as u128).fold(1u128, |a, b| a.saturating_mul(b))
}

/// `table[i][b]`: schedules over choice points `i..` with at most `b`
/// deviations. Saturates at `u128::MAX`.
fn count_table(points: &[(Time, usize)], bound: usize) -> Vec<Vec<u128>> {
    let m = points.len();
    let mut table = vec![vec![1u128; bound + 1]; m + 1];
    for i in (0..m).rev() {
        let w = factorial(points[i].1) - 1;
        for b in 0..=bound {
            let mut c = table[i + 1][b];
            if b > 0 {
                c = c.saturating_add(w.saturating_mul(table[i + 1][b - 1]));
            }
            table[i][b] = c;
        }
    }
    table
}

/// Number of exhaustive schedules.
pub fn schedule_count(spec: &SystemSpec, bound: usize) -> u128 {
    count_table(&choice_points(spec), bound)[0][bound]
}

/// A concrete intra-instant ordering plan.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Plan {
    /// `(time, permutation rank)` for the deviating choice points.
    Fixed(Vec<(Time, usize)>),
    Shuffled { seed: u64 },
}

impl Plan {
    /// Reorders the non-plant prefix of `fire` (given in default order).
    pub(crate) fn apply(&self, rng: &mut Option<ChaCha8Rng>, t: Time, fire: &mut [usize], spec: &SystemSpec) {
        let k = fire.iter().take_while(|&&i| spec.nodes[i].kind != NodeKind::Plant).count();
        match self {
            Plan::Fixed(devs) => {
                if let Ok(p) = devs.binary_search_by_key(&t, |d| d.0) {
                    permute(&mut fire[..k], devs[p].1);
                }
            }
            Plan::Shuffled { seed } => {
                if k >= 2 {
                    let rng = rng.get_or_insert_with(|| ChaCha8Rng::seed_from_u64(*seed));
                    fire[..k].shuffle(rng);
                }
            }
        }
    }
}

/// Rearranges `xs` into its `rank`-th permutation in lexicographic order of
/// positions (rank 0 leaves it unchanged).
pub fn permute<T: Copy>(xs: &mut [T], mut rank: usize) {
    let mut pool: Vec<T> = xs.to_vec();
    let n = xs.len();
    for i in 0..n {
        let f = factorial(n - 1 - i) as usize;
        let j = rank / f;
        rank %= f;
        xs[i] = pool.remove(j);
    }
}

/// The schedule space of a system under a policy.
#[derive(Debug, Clone)]
pub struct ScheduleSpace {
    policy: SchedulePolicy,
    points: Vec<(Time, usize)>,
    table: Vec<Vec<u128>>,
    count: u64,
}

impl ScheduleSpace {
    pub fn new(spec: &SystemSpec, policy: SchedulePolicy) -> Result<Self, HarnessError> {
        let points = choice_points(spec);
        let (table, count) = match policy.kind {
            ScheduleKind::Deterministic => (Vec::new(), 1),
            ScheduleKind::Random { runs } => (Vec::new(), runs),
            ScheduleKind::Exhaustive => {
                let table = count_table(&points, policy.bound);
                let total = table[0][policy.bound];
                if total > policy.cap as u128 {
                    return Err(HarnessError::ExplosionGuard { count: total, cap: policy.cap });
                }
                (table, total as u64)
            }
        };
        Ok(Self { policy, points, table, count })
    }

    pub fn len(&self) -> u64 {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    pub fn plan(&self, id: u64) -> Result<Plan, HarnessError> {
        if id >= self.count {
            return Err(HarnessError::UnknownSchedule(id));
        }
        match self.policy.kind {
            ScheduleKind::Deterministic => Ok(Plan::Fixed(Vec::new())),
            ScheduleKind::Random { .. } => {
                let seed = self.policy.seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ id;
                Ok(Plan::Shuffled { seed })
            }
            ScheduleKind::Exhaustive => Ok(Plan::Fixed(self.decode(id))),
        }
    }

    fn decode(&self, id: u64) -> Vec<(Time, usize)> {
        let mut rest = id as u128;
        let mut b = self.policy.bound;
        let mut out = Vec::new();
        for (i, &(t, k)) in self.points.iter().enumerate() {
            if b == 0 {
                break;
            }
            let stay = self.table[i + 1][b];
            if rest < stay {
                continue;
            }
            rest -= stay;
            let block = self.table[i + 1][b - 1];
            let rank = 1 + (rest / block) as usize;
            rest %= block;
            debug_assert!((rank as u128) < factorial(k));
            out.push((t, rank));
            b -= 1;
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeSet;

    use super::*;
    use crate::model::{NodeSpec, Valuation};

    fn idle(name: &str, period: Time) -> NodeSpec {
        NodeSpec::new(name, period, |l, _| (l.clone(), Valuation::new()))
    }

    #[test]
    fn permutation_ranks_cover_all_orders() {
        let mut seen = BTreeSet::new();
        for r in 0..6 {
            let mut xs = [1, 2, 3];
            permute(&mut xs, r);
            seen.insert(xs);
        }
        assert_eq!(seen.len(), 6);
        let mut xs = [1, 2, 3];
        permute(&mut xs, 0);
        assert_eq!(xs, [1, 2, 3]);
    }

    #[test]
    fn single_node_has_one_schedule() {
        let spec = SystemSpec::builder().node(idle("n", 1)).build(2).unwrap();
        let space = ScheduleSpace::new(&spec, SchedulePolicy::exhaustive(usize::MAX >> 60)).unwrap();
        assert_eq!(space.len(), 1);
    }

    #[test]
    fn two_same_instant_nodes_have_two_schedules() {
        let spec = SystemSpec::builder().node(idle("a", 10)).node(idle("b", 10)).build(1).unwrap();
        let space = ScheduleSpace::new(&spec, SchedulePolicy::exhaustive(8)).unwrap();
        assert_eq!(space.len(), 2);
        assert_eq!(space.plan(1).unwrap(), Plan::Fixed(vec![(0, 1)]));
        assert!(matches!(space.plan(2), Err(HarnessError::UnknownSchedule(2))));
    }

    #[test]
    fn decoding_is_a_bijection_onto_bounded_schedules() {
        // three nodes firing at 4 instants: 5 deviations per instant
        let spec = SystemSpec::builder()
            .node(idle("a", 1))
            .node(idle("b", 1))
            .node(idle("c", 1))
            .build(3)
            .unwrap();
        for bound in 0..=4 {
            let space = ScheduleSpace::new(&spec, SchedulePolicy::exhaustive(bound)).unwrap();
            // independent count: sum_j C(4, j) 5^j
            let binom = [1u64, 4, 6, 4, 1];
            let expected: u64 = (0..=bound).map(|j| binom[j] * 5u64.pow(j as u32)).sum();
            assert_eq!(space.len(), expected);
            let plans: BTreeSet<Vec<(Time, usize)>> = (0..space.len())
                .map(|id| match space.plan(id).unwrap() {
                    Plan::Fixed(d) => d,
                    _ => unreachable!(),
                })
                .collect();
            assert_eq!(plans.len() as u64, expected);
            assert!(plans.iter().all(|d| d.len() <= bound && d.iter().all(|&(_, r)| (1..6).contains(&r))));
        }
    }

    #[test]
    fn explosion_guard_reports_the_count() {
        let spec = SystemSpec::builder()
            .node(idle("a", 1))
            .node(idle("b", 1))
            .node(idle("c", 1))
            .build(1000)
            .unwrap();
        let policy = SchedulePolicy { cap: 10, ..SchedulePolicy::exhaustive(2) };
        match ScheduleSpace::new(&spec, policy) {
            Err(HarnessError::ExplosionGuard { count, cap }) => {
                assert_eq!(cap, 10);
                assert_eq!(count, 1 + 1001 * 5 + (1001 * 1000 / 2) * 25);
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
