//! Closed-form time-to-failure predicates.

use crate::error::ReachError;
use crate::model::Time;

use super::oracle::DynamicsModel;

/// Lipschitz bound: with `boundary_distance` the distance to the safe-set
/// boundary and `l_u` the largest rate at which any control moves the state,
/// failure may occur within `boundary_distance / l_u`.
pub fn ttf_lipschitz(boundary_distance: f64, l_u: f64, two_delta: f64) -> Result<bool, ReachError> {
    if l_u <= 0.0 || l_u.is_nan() {
        return Err(ReachError::NonpositiveLipschitz(l_u));
    }
    Ok(boundary_distance / l_u <= two_delta)
}

/// Battery switching condition `b - cost* < T_max`.
pub fn ttf_battery(b: f64, cost_star: f64, t_max: f64) -> bool {
    b - cost_star < t_max
}

/// True iff some point of the axis-aligned box of half-width `v_max * two_delta`
/// around `s` lies outside the safe set. The box is probed on a lattice of
/// `resolution` points per axis, corners included.
pub fn ttf_vmax(s: &[f64], phi_safe: impl Fn(&[f64]) -> bool, v_max: f64, two_delta: f64, resolution: usize) -> bool {
    let r = v_max * two_delta;
    let k = resolution.max(2);
    let dims = s.len();
    let mut counter = vec![0usize; dims];
    let mut p = vec![0.0; dims];
    loop {
        for d in 0..dims {
            p[d] = s[d] - r + 2.0 * r * counter[d] as f64 / (k - 1) as f64;
        }
        if !phi_safe(&p) {
            return true;
        }
        let mut d = dims;
        loop {
            if d == 0 {
                return false;
            }
            d -= 1;
            counter[d] += 1;
            if counter[d] < k {
                break;
            }
            counter[d] = 0;
        }
    }
}

/// Largest discharge over `two_delta` across all controls, starting from the
/// upper bound of the first state coordinate (the charge).
pub fn cost_star(dynamics: &DynamicsModel, two_delta: Time) -> f64 {
    let steps = dynamics.steps_for(two_delta);
    let full: Vec<f64> = dynamics.bounds.iter().map(|(_, hi)| *hi).collect();
    dynamics
        .controls
        .iter()
        .map(|u| {
            let mut s = full.clone();
            for _ in 0..steps {
                s = dynamics.apply(&s, u);
            }
            full[0] - s[0]
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;

    #[test]
    fn lipschitz_arithmetic() {
        assert_eq!(ttf_lipschitz(2.0, 1.0, 1.0), Ok(false));
        assert_eq!(ttf_lipschitz(0.5, 1.0, 1.0), Ok(true));
        assert_eq!(ttf_lipschitz(0.0, 3.0, 0.0), Ok(true));
        assert!(ttf_lipschitz(1.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn battery_arithmetic() {
        assert!(ttf_battery(50.0, 5.0, 48.0));
        assert!(!ttf_battery(100.0, 5.0, 48.0));
        assert!(!ttf_battery(53.0, 5.0, 48.0));
    }

    #[test]
    fn vmax_box() {
        let inside = |p: &[f64]| p.iter().all(|x| x.abs() < 10.0);
        assert!(!ttf_vmax(&[0.0, 0.0], inside, 1.0, 2.0, 5));
        assert!(ttf_vmax(&[8.5, 0.0], inside, 1.0, 2.0, 5));
    }

    fn battery(rates: Vec<f64>) -> DynamicsModel {
        DynamicsModel {
            dims: 1,
            bounds: vec![(0.0, 100.0)],
            controls: rates.iter().map(|r| vec![*r]).collect(),
            step: Arc::new(|s, u| vec![(s[0] - u[0]).max(0.0)]),
            dt: 1,
        }
    }

    #[test]
    fn cost_star_is_max_rate_times_ticks() {
        assert_eq!(cost_star(&battery(vec![2.0, 2.0]), 6), 12.0);
        assert_eq!(cost_star(&battery(vec![1.0, 3.0]), 4), 12.0);
    }

    #[test]
    fn cost_star_nonlinear_table_matches_enumeration() {
        // discharge depends on charge level: rate * (1 + b/200)
        let table = [0.5, 1.7, 1.2];
        let dyn_ = DynamicsModel {
            dims: 1,
            bounds: vec![(0.0, 100.0)],
            controls: (0..table.len()).map(|k| vec![k as f64]).collect(),
            step: Arc::new(move |s, u| {
                let r = table[u[0] as usize];
                vec![(s[0] - r * (1.0 + s[0] / 200.0)).max(0.0)]
            }),
            dt: 1,
        };
        let mut best: f64 = 0.0;
        for r in table {
            let mut b: f64 = 100.0;
            for _ in 0..5 {
                b -= r * (1.0 + b / 200.0);
            }
            best = best.max(100.0 - b);
        }
        assert!((cost_star(&dyn_, 5) - best).abs() < 1e-12);
    }
}
