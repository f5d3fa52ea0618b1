//! Household best response: maximize quadratic satisfaction minus payment
//! over a per-slot load box with a fixed daily energy total.
//!
//! The KKT conditions give `l_t = clamp((omega_t - price_t - mu) / theta, lo_t, hi_t)`,
//! where `mu` is the multiplier of the daily-total constraint. The total is
//! non-increasing in `mu`, so `mu` is found by bisection and then solved
//! exactly on the resulting set of free slots.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::pricing::PriceProfile;

/// Relative tolerance on the daily-total equality.
pub const TOTAL_TOLERANCE: f64 = 1e-7;
/// Absolute tolerance on the KKT residual.
pub const KKT_TOLERANCE: f64 = 1e-9;

const MAX_BISECTIONS: usize = 200;

#[derive(Debug, Clone, PartialEq)]
pub struct HouseholdProblem {
    pub omega: Vec<f64>,
    pub theta: f64,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    /// Required sum of per-slot loads (daily energy divided by slot length).
    pub daily_total: f64,
    pub price: PriceProfile,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HouseholdSolution {
    pub load: Vec<f64>,
    /// Multiplier of the daily-total constraint.
    pub mu: f64,
    pub objective: f64,
}

/// Quadratic satisfaction `omega x - theta/2 x^2`.
#[inline]
pub fn satisfaction(omega: f64, theta: f64, x: f64) -> f64 {
    omega * x - 0.5 * theta * x * x
}

/// Household part of the user utility: satisfaction minus payment.
pub fn household_objective(p: &HouseholdProblem, load: &[f64]) -> f64 {
    load.iter()
        .enumerate()
        .map(|(t, &l)| satisfaction(p.omega[t], p.theta, l) - p.price[t] * l)
        .sum()
}

impl HouseholdProblem {
    fn check(&self) -> Result<()> {
        let min_total: f64 = self.lo.iter().sum();
        let max_total: f64 = self.hi.iter().sum();
        let slack = TOTAL_TOLERANCE * self.daily_total.abs().max(1.0);
        if self.daily_total < min_total - slack || self.daily_total > max_total + slack {
            return Err(Error::Infeasible {
                daily_total: self.daily_total,
                min_total,
                max_total,
            });
        }
        Ok(())
    }

    #[inline]
    fn load_at(&self, t: usize, mu: f64) -> f64 {
        ((self.omega[t] - self.price[t] - mu) / self.theta).clamp(self.lo[t], self.hi[t])
    }

    fn total_at(&self, mu: f64) -> f64 {
        (0..self.omega.len()).map(|t| self.load_at(t, mu)).sum()
    }

    /// Largest violation of the KKT conditions for `load` with multiplier `mu`,
    /// including the daily-total residual.
    pub fn kkt_residual(&self, load: &[f64], mu: f64) -> f64 {
        let mut worst = (load.iter().sum::<f64>() - self.daily_total).abs();
        for (t, &l) in load.iter().enumerate() {
            let grad = self.omega[t] - self.price[t] - self.theta * l - mu;
            let bound_tol = 1e-12 * self.hi[t].abs().max(1.0);
            let r = if l <= self.lo[t] + bound_tol && l >= self.hi[t] - bound_tol {
                0.0
            } else if l <= self.lo[t] + bound_tol {
                grad.max(0.0)
            } else if l >= self.hi[t] - bound_tol {
                (-grad).max(0.0)
            } else {
                grad.abs()
            };
            let box_violation = (self.lo[t] - l).max(l - self.hi[t]).max(0.0);
            worst = worst.max(r).max(box_violation);
        }
        worst
    }
}

/// Unique maximizer of the household objective on the load box intersected
/// with the daily-total hyperplane.
pub fn best_response(p: &HouseholdProblem) -> Result<HouseholdSolution> {
    p.check()?;
    let n = p.omega.len();

    let mut margin_min = f64::INFINITY;
    let mut margin_max = f64::NEG_INFINITY;
    for t in 0..n {
        let m = p.omega[t] - p.price[t];
        margin_min = margin_min.min(m);
        margin_max = margin_max.max(m);
    }
    let hi_max = p.hi.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo_min = p.lo.iter().copied().fold(f64::INFINITY, f64::min);
    // At `low` every slot sits at its upper bound, at `high` at its lower bound.
    let mut low = margin_min - p.theta * hi_max;
    let mut high = margin_max - p.theta * lo_min;

    for _ in 0..MAX_BISECTIONS {
        let mid = 0.5 * (low + high);
        if mid <= low || mid >= high || high - low <= 1e-12 * mid.abs().max(1.0) {
            break;
        }
        if p.total_at(mid) > p.daily_total {
            low = mid;
        } else {
            high = mid;
        }
    }
    let mut mu = 0.5 * (low + high);

    // Solve mu exactly on the free set implied by the bisected multiplier.
    let (mut free, mut free_margin, mut fixed_load) = (0usize, 0.0, 0.0);
    for t in 0..n {
        let raw = (p.omega[t] - p.price[t] - mu) / p.theta;
        if raw <= p.lo[t] {
            fixed_load += p.lo[t];
        } else if raw >= p.hi[t] {
            fixed_load += p.hi[t];
        } else {
            free += 1;
            free_margin += p.omega[t] - p.price[t];
        }
    }
    if free > 0 {
        let exact = (free_margin - p.theta * (p.daily_total - fixed_load)) / free as f64;
        if (p.total_at(exact) - p.daily_total).abs() <= (p.total_at(mu) - p.daily_total).abs() {
            mu = exact;
        }
    }

    let load: Vec<f64> = (0..n).map(|t| p.load_at(t, mu)).collect();
    let objective = household_objective(p, &load);
    Ok(HouseholdSolution {
        load,
        mu,
        objective,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn problem(price: &[f64], hi: f64, total: f64) -> HouseholdProblem {
        let n = price.len();
        HouseholdProblem {
            omega: vec![5.0; n],
            theta: 0.1,
            lo: vec![0.0; n],
            hi: vec![hi; n],
            daily_total: total,
            price: PriceProfile::new(price.to_vec()),
        }
    }

    /// Dense grid over the first slot; the second is fixed by the total.
    fn grid_best_two_slots(p: &HouseholdProblem, step: f64) -> (f64, Vec<f64>) {
        let mut best = (f64::NEG_INFINITY, vec![]);
        let steps = ((p.hi[0] - p.lo[0]) / step).round() as usize;
        for i in 0..=steps {
            let l0 = p.lo[0] + i as f64 * step;
            let l1 = p.daily_total - l0;
            if l1 < p.lo[1] - 1e-12 || l1 > p.hi[1] + 1e-12 {
                continue;
            }
            let v = household_objective(p, &[l0, l1]);
            if v > best.0 {
                best = (v, vec![l0, l1]);
            }
        }
        best
    }

    #[test]
    fn satisfaction_values() {
        assert_eq!(satisfaction(5.0, 0.1, 0.0), 0.0);
        assert!((satisfaction(5.0, 0.1, 10.0) - 45.0).abs() < 1e-12);
        assert!((satisfaction(5.0, 0.1, 50.0) - 125.0).abs() < 1e-12);
        for i in 0..=1000 {
            let x = i as f64 * 0.1;
            assert!(satisfaction(5.0, 0.1, x) <= 125.0);
        }
    }

    #[test]
    fn equal_prices_split_evenly() {
        let sol = best_response(&problem(&[1.0, 1.0], 50.0, 60.0)).unwrap();
        assert!((sol.load[0] - 30.0).abs() < 1e-9);
        assert!((sol.load[1] - 30.0).abs() < 1e-9);
    }

    #[test]
    fn price_gap_shifts_load() {
        let p = problem(&[1.0, 2.0], 100.0, 40.0);
        let (grid_val, grid_load) = grid_best_two_slots(&p, 0.01);
        assert!((grid_load[0] - 25.0).abs() < 0.011 && (grid_load[1] - 15.0).abs() < 0.011);

        let sol = best_response(&p).unwrap();
        assert!((sol.load[0] - 25.0).abs() < 1e-9);
        assert!((sol.load[1] - 15.0).abs() < 1e-9);
        assert!((sol.mu - 1.5).abs() < 1e-9);
        assert!(sol.objective >= grid_val - 1e-9);
        assert!(p.kkt_residual(&sol.load, sol.mu) <= KKT_TOLERANCE);
    }

    #[test]
    fn upper_bound_binds() {
        let p = problem(&[1.0, 2.0], 20.0, 40.0);
        let (_, grid_load) = grid_best_two_slots(&p, 0.01);
        assert_eq!(grid_load, vec![20.0, 20.0]);
        let sol = best_response(&p).unwrap();
        assert!((sol.load[0] - 20.0).abs() < 1e-9);
        assert!((sol.load[1] - 20.0).abs() < 1e-9);
        assert!(p.kkt_residual(&sol.load, sol.mu) <= KKT_TOLERANCE);
    }

    #[test]
    fn infeasible_totals() {
        assert!(matches!(
            best_response(&problem(&[1.0, 2.0], 10.0, 40.0)),
            Err(Error::Infeasible { .. })
        ));
        let mut p = problem(&[1.0, 2.0], 10.0, 1.0);
        p.lo = vec![1.0, 1.0];
        assert!(matches!(best_response(&p), Err(Error::Infeasible { .. })));
    }

    #[test]
    fn objective_cases() {
        let mut p = problem(&[0.0, 0.0, 0.0], 100.0, 150.0);
        assert_eq!(household_objective(&p, &[0.0; 3]), 0.0);
        let vertex = 5.0 / 0.1;
        let expected = 3.0 * 25.0 / (2.0 * 0.1);
        assert!((household_objective(&p, &[vertex; 3]) - expected).abs() < 1e-9);
        p.price = PriceProfile::new(vec![0.3, 0.1, 0.2]);
        let sol = best_response(&p).unwrap();
        assert!((sol.load.iter().sum::<f64>() - 150.0).abs() < 1e-9);
    }

    #[test]
    fn tied_margins_with_loose_bounds() {
        let sol = best_response(&problem(&[2.0, 2.0, 2.0, 2.0], 1e3, 10.0)).unwrap();
        for l in &sol.load {
            assert!((l - 2.5).abs() < 1e-12);
        }
    }
}
