//! Retailer side: generation cost, marginal cost, price broadcast and the
//! variance-minimizing generation plan.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::scenario::GenModel;

/// Per-slot retail price (money/kWh).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PriceProfile {
    pub price: Vec<f64>,
}

impl PriceProfile {
    pub fn new(price: Vec<f64>) -> Self {
        Self { price }
    }

    pub fn len(&self) -> usize {
        self.price.len()
    }

    pub fn is_empty(&self) -> bool {
        self.price.is_empty()
    }
}

impl std::ops::Index<usize> for PriceProfile {
    type Output = f64;
    fn index(&self, t: usize) -> &f64 {
        &self.price[t]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GenerationPlan {
    /// Generation per slot (kW).
    pub g: Vec<f64>,
    /// Mean generation (kW).
    pub g_bar: f64,
    /// Sum of squared deviations from the mean.
    pub u_rc: f64,
}

/// Generation cost `a/2 g^2 + b g + c` at slot `t`.
pub fn cost(gen: &GenModel, t: usize, g: f64) -> f64 {
    0.5 * gen.a[t] * g * g + gen.b[t] * g + gen.c[t]
}

/// Marginal cost `a g + b` at slot `t`.
pub fn marginal_cost(gen: &GenModel, t: usize, g: f64) -> f64 {
    gen.a[t] * g + gen.b[t]
}

/// Retail price: marginal cost scaled by the profit coefficient.
pub fn price(gen: &GenModel, g: &[f64]) -> PriceProfile {
    PriceProfile::new(
        g.iter()
            .enumerate()
            .map(|(t, &gt)| gen.lambda[t] * marginal_cost(gen, t, gt))
            .collect(),
    )
}

/// Flat tariff obtained by pricing every slot at the same generation level.
pub fn flat_price(gen: &GenModel, level: f64) -> PriceProfile {
    price(gen, &vec![level; gen.slot_count()])
}

/// Total generation cost of a plan.
pub fn total_cost(gen: &GenModel, g: &[f64]) -> f64 {
    g.iter().enumerate().map(|(t, &gt)| cost(gen, t, gt)).sum()
}

/// Sum of squared deviations of `g` from its mean.
pub fn flatness_objective(g: &[f64]) -> f64 {
    let mean = g.iter().sum::<f64>() / g.len() as f64;
    g.iter().map(|x| (x - mean).powi(2)).sum()
}

/// Generation plan with `g = demand` (no flattening).
pub fn demand_following_plan(gen: &GenModel, demand: &[f64]) -> Result<GenerationPlan> {
    check_capacity(gen, demand)?;
    Ok(plan_from(demand.to_vec()))
}

fn plan_from(g: Vec<f64>) -> GenerationPlan {
    let g_bar = g.iter().sum::<f64>() / g.len() as f64;
    let u_rc = flatness_objective(&g);
    GenerationPlan { g, g_bar, u_rc }
}

fn check_capacity(gen: &GenModel, demand: &[f64]) -> Result<()> {
    for (t, &l) in demand.iter().enumerate() {
        let bound = gen.upper_bound(t);
        if l > bound {
            return Err(Error::CurtailmentRequired {
                slot: t,
                demand: l,
                bound,
            });
        }
    }
    Ok(())
}

/// Minimizes `sum (g_t - mean g)^2` over the box `demand_t <= g_t <= min(g_cap_t, l_cap_t)`.
///
/// The minimizer is `g_t = clamp(c, lo_t, hi_t)` where `c` is a fixed point of
/// `c = mean(clamp(c, lo, hi))`. The gap `mean(clamp(c)) - c` is
/// non-increasing in `c`, so the smallest fixed point is bracketed by
/// `[min lo, max hi]` and found by bisection, then refined exactly from the
/// resulting clamp pattern. Taking the smallest fixed point picks the cheapest
/// plan when several flat plans tie.
pub fn generation_plan(gen: &GenModel, demand: &[f64]) -> Result<GenerationPlan> {
    check_capacity(gen, demand)?;
    let n = demand.len();
    let hi: Vec<f64> = (0..n).map(|t| gen.upper_bound(t)).collect();
    let lo = demand;

    // Summing the per-slot offsets keeps the gap exactly zero wherever no
    // bound binds, so rounding cannot push the bisection past the smallest root.
    let gap = |c: f64| -> f64 {
        let s: f64 = lo.iter().zip(&hi).map(|(&l, &h)| c.clamp(l, h) - c).sum();
        s / n as f64
    };

    let mut left = lo.iter().copied().fold(f64::INFINITY, f64::min);
    let mut right = hi.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    for _ in 0..200 {
        let mid = 0.5 * (left + right);
        if mid <= left || mid >= right {
            break;
        }
        if gap(mid) > 0.0 {
            left = mid;
        } else {
            right = mid;
        }
    }
    let mut level = right;

    // With the clamp pattern known, c * (n - free) = sum of clamped entries,
    // so c is the mean of the clamped entries.
    let tol = 1e-9 * level.abs().max(1.0);
    let (mut fixed_sum, mut fixed) = (0.0, 0usize);
    for (&l, &h) in lo.iter().zip(&hi) {
        if l >= level - tol {
            fixed_sum += l;
            fixed += 1;
        } else if h <= level + tol {
            fixed_sum += h;
            fixed += 1;
        }
    }
    if fixed > 0 {
        let exact = fixed_sum / fixed as f64;
        if gap(exact).abs() <= gap(level).abs() + tol {
            level = exact;
        }
    }

    let g: Vec<f64> = lo
        .iter()
        .zip(&hi)
        .map(|(&l, &h)| level.clamp(l, h))
        .collect();
    Ok(plan_from(g))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gen(n: usize, cap: f64) -> GenModel {
        GenModel {
            a: vec![0.01; n],
            b: vec![0.2; n],
            c: vec![0.0; n],
            lambda: vec![1.2; n],
            g_cap: vec![cap; n],
            l_cap: vec![cap; n],
        }
    }

    #[test]
    fn cost_values() {
        let g = gen(1, 1e4);
        assert_eq!(cost(&g, 0, 0.0), 0.0);
        assert!((cost(&g, 0, 100.0) - 70.0).abs() < 1e-12);
        assert!((cost(&g, 0, 2412.0) - 29571.12).abs() < 1e-8);
    }

    #[test]
    fn marginal_cost_values() {
        let g = gen(1, 1e4);
        assert!((marginal_cost(&g, 0, 0.0) - 0.2).abs() < 1e-15);
        assert!((marginal_cost(&g, 0, 2412.0) - 24.32).abs() < 1e-12);
        for x in [1.0, 50.0, 2412.0, 5000.0] {
            let h = 1e-3;
            let fd = (cost(&g, 0, x + h) - cost(&g, 0, x - h)) / (2.0 * h);
            let mc = marginal_cost(&g, 0, x);
            assert!((fd - mc).abs() <= 1e-6 * mc.abs(), "{fd} vs {mc}");
        }
    }

    #[test]
    fn price_values() {
        let g = gen(3, 1e4);
        let p = price(&g, &[2412.0, 0.0, 0.0]);
        assert!((p[0] - 29.184).abs() < 1e-12);
        assert!((p[1] - 0.24).abs() < 1e-15);

        let mut unit = gen(2, 1e4);
        unit.lambda = vec![1.0; 2];
        let p = price(&unit, &[37.0, 913.5]);
        assert_eq!(p[0], marginal_cost(&unit, 0, 37.0));
        assert_eq!(p[1], marginal_cost(&unit, 1, 913.5));
    }

    #[test]
    fn flat_demand_is_kept() {
        let plan = generation_plan(&gen(3, 10.0), &[2.0, 2.0, 2.0]).unwrap();
        assert_eq!(plan.g, vec![2.0, 2.0, 2.0]);
        assert_eq!(plan.u_rc, 0.0);
    }

    #[test]
    fn valleys_are_raised_to_peak() {
        // Oracle: grid search over {0, 0.1, ..., 10}^3 within the box.
        let demand = [1.0, 5.0, 3.0];
        let mut best = f64::INFINITY;
        for i in 0..=100 {
            for j in 0..=100 {
                for k in 0..=100 {
                    let g = [i as f64 / 10.0, j as f64 / 10.0, k as f64 / 10.0];
                    if g.iter().zip(&demand).all(|(x, l)| x >= l) {
                        best = best.min(flatness_objective(&g));
                    }
                }
            }
        }
        assert_eq!(best, 0.0);
        let plan = generation_plan(&gen(3, 10.0), &demand).unwrap();
        assert_eq!(plan.g, vec![5.0, 5.0, 5.0]);
        assert_eq!(plan.u_rc, 0.0);
        assert_eq!(plan.g_bar, 5.0);
    }

    #[test]
    fn capacity_binds() {
        let mut g = gen(3, 10.0);
        g.g_cap[0] = 4.0;
        let plan = generation_plan(&g, &[1.0, 9.0, 2.0]).unwrap();
        // c = mean(4, 9, c) = 6.5 with slot 0 at capacity and slot 1 at demand.
        assert_eq!(plan.g, vec![4.0, 9.0, 6.5]);
    }

    #[test]
    fn over_capacity_requires_curtailment() {
        let err = generation_plan(&gen(3, 10.0), &[12.0, 1.0, 1.0]).unwrap_err();
        assert!(matches!(err, Error::CurtailmentRequired { slot: 0, .. }));
    }
}
