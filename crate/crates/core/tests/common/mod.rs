//! Brute-force oracles shared by the property and acceptance suites. They
//! re-derive each model from its definition and never call the solvers
//! they are used to check.

#![allow(dead_code)]

use stackelberg_dr::bev::BevProblem;
use stackelberg_dr::household::HouseholdProblem;

pub fn psi(omega: f64, theta: f64, x: f64) -> f64 {
    omega * x - 0.5 * theta * x * x
}

pub fn household_value(p: &HouseholdProblem, load: &[f64]) -> f64 {
    load.iter()
        .enumerate()
        .map(|(t, &l)| psi(p.omega[t], p.theta, l) - p.price.price[t] * l)
        .sum()
}

/// Dense grid search over the first T-1 slots with the last slot absorbing
/// the remaining energy. Returns (best value, best load).
pub fn household_grid(p: &HouseholdProblem, step: f64) -> Option<(f64, Vec<f64>)> {
    let n = p.omega.len();
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut load = vec![0.0; n];
    fn rec(
        p: &HouseholdProblem,
        step: f64,
        t: usize,
        used: f64,
        load: &mut Vec<f64>,
        best: &mut Option<(f64, Vec<f64>)>,
    ) {
        let n = load.len();
        if t == n - 1 {
            let last = p.daily_total - used;
            if last < p.lo[t] - 1e-12 || last > p.hi[t] + 1e-12 {
                return;
            }
            load[t] = last;
            let v = household_value(p, load);
            if best.as_ref().is_none_or(|(b, _)| v > *b) {
                *best = Some((v, load.clone()));
            }
            return;
        }
        // Grid points from the lower bound, plus the upper bound itself so
        // totals near the maximum still have a feasible completion.
        let steps = ((p.hi[t] - p.lo[t]) / step + 1e-9).floor() as usize;
        let points = (0..=steps)
            .map(|i| p.lo[t] + i as f64 * step)
            .filter(|x| *x < p.hi[t])
            .chain(std::iter::once(p.hi[t]));
        for x in points {
            load[t] = x;
            rec(p, step, t + 1, used + x, load, best);
        }
    }
    rec(p, step, 0, 0.0, &mut load, &mut best);
    best
}

/// Independent reading of the vehicle contract: idle while away, one rated
/// step of energy per active slot, no charging into a full battery, no
/// discharge below empty, full on departure, and at most `t_max` active
/// slots.
pub fn bev_feasible(p: &BevProblem, s: &[i8]) -> bool {
    let bc = p.spec.battery_kwh;
    let e = p.spec.rated_kw * p.slot_hours;
    let tol = 1e-9 * bc.max(1.0);
    for (t, &a) in s.iter().enumerate() {
        if a != 0 && !p.home_slots.contains(&t) {
            return false;
        }
    }
    let mut soc = p.soc_arrival;
    let mut active = 0;
    for &t in &p.home_slots {
        match s[t] {
            0 => {}
            1 => {
                if soc >= bc - tol {
                    return false;
                }
                soc = (soc + e).min(bc);
                active += 1;
            }
            -1 => {
                if soc - e < -tol {
                    return false;
                }
                soc -= e;
                active += 1;
            }
            _ => return false,
        }
    }
    active <= p.t_max && (soc - bc).abs() <= tol
}

pub fn bev_value(p: &BevProblem, s: &[i8]) -> f64 {
    s.iter()
        .enumerate()
        .filter(|(_, &a)| a != 0)
        .map(|(t, &a)| {
            let x = f64::from(a) * p.spec.rated_kw;
            psi(p.omega[t], p.theta, x) - p.price.price[t] * x
        })
        .sum()
}

/// Exhaustive 3^window enumeration. Returns the best feasible value, if
/// any schedule is feasible.
pub fn bev_enumerate(p: &BevProblem) -> Option<f64> {
    let w = p.home_slots.len();
    let mut best: Option<f64> = None;
    let mut s = vec![0i8; p.price.price.len()];
    for code in 0..3usize.pow(w as u32) {
        let mut c = code;
        for &t in &p.home_slots {
            s[t] = (c % 3) as i8 - 1;
            c /= 3;
        }
        if bev_feasible(p, &s) {
            let v = bev_value(p, &s);
            if best.is_none_or(|b| v > b) {
                best = Some(v);
            }
        }
    }
    best
}

/// Sum of squared deviations from the mean.
pub fn spread(g: &[f64]) -> f64 {
    let m = g.iter().sum::<f64>() / g.len() as f64;
    g.iter().map(|x| (x - m) * (x - m)).sum()
}
