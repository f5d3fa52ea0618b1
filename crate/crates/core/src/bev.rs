//! BEV charge/discharge scheduling over whole-slot actions in {-1, 0, 1}.
//!
//! A vehicle must end its home window fully charged, may be active (charging
//! or discharging) in at most `t_max` slots, and can only discharge a full
//! slot's worth of energy. The optimal schedule is found by dynamic
//! programming over (window position, net charge count, active count).

use serde::Serialize;

use crate::error::{Error, Result};
use crate::household::satisfaction;
use crate::pricing::PriceProfile;
use crate::scenario::BevSpec;

const SOC_EPS: f64 = 1e-9;

/// Energy need of a vehicle returning home.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChargeNeed {
    /// Whole charging hours needed to refill the battery.
    pub hours: usize,
    /// State of charge on arrival (kWh).
    pub soc_arrival: f64,
}

/// Hours of full-power charging needed after driving `distance` miles.
pub fn required_hours(spec: &BevSpec, distance: f64) -> Result<ChargeNeed> {
    required_slots(spec, distance, 1.0)
}

/// Like [`required_hours`], counted in slots of `slot_hours` length.
#[allow(clippy::neg_cmp_op_on_partial_ord)] // rejects NaN as well
pub fn required_slots(spec: &BevSpec, distance: f64, slot_hours: f64) -> Result<ChargeNeed> {
    if distance > spec.range_miles || !(distance >= 0.0) {
        return Err(Error::DistanceExceedsRange {
            distance,
            range: spec.range_miles,
        });
    }
    let deficit = distance * spec.kwh_per_mile();
    let slots = deficit / (spec.rated_kw * slot_hours);
    // Guard against 2.0000000001-style round-off pushing the ceiling up.
    let hours = (slots - 1e-9).ceil().max(0.0) as usize;
    Ok(ChargeNeed {
        hours,
        soc_arrival: spec.battery_kwh - deficit,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BevProblem {
    pub spec: BevSpec,
    /// Grid slots the vehicle is plugged in, in chronological order.
    pub home_slots: Vec<usize>,
    pub soc_arrival: f64,
    pub t_req: usize,
    pub t_max: usize,
    pub omega: Vec<f64>,
    pub theta: f64,
    pub price: PriceProfile,
    pub slot_hours: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BevSchedule {
    /// Action per grid slot: 1 charge, -1 discharge, 0 idle.
    pub s: Vec<i8>,
    /// State of charge (kWh) after each action, aligned with `home_slots`.
    pub soc_path: Vec<f64>,
    pub objective: f64,
}

impl BevSchedule {
    /// Grid power (kW) drawn at slot `t`; negative when discharging.
    pub fn power(&self, t: usize, rated_kw: f64) -> f64 {
        f64::from(self.s[t]) * rated_kw
    }
}

impl BevProblem {
    /// Energy moved by one active slot (kWh).
    pub fn step_energy(&self) -> f64 {
        self.spec.rated_kw * self.slot_hours
    }

    /// State of charge after a net of `k` charging slots.
    pub fn soc_after(&self, k: i64) -> f64 {
        (self.soc_arrival + k as f64 * self.step_energy()).clamp(0.0, self.spec.battery_kwh)
    }

    /// Whether a discharge is admissible at net count `k`.
    fn can_discharge(&self, k: i64) -> bool {
        self.soc_after(k) >= self.step_energy() - SOC_EPS
    }

    fn slot_reward(&self, t: usize, action: i8) -> f64 {
        if action == 0 {
            return 0.0;
        }
        let x = f64::from(action) * self.spec.rated_kw;
        satisfaction(self.omega[t], self.theta, x) - self.price[t] * x
    }

    fn check(&self) -> Result<()> {
        let window = self.home_slots.len();
        if self.t_req > window || self.t_req > self.t_max {
            return Err(Error::InfeasibleWindow {
                required: self.t_req,
                window: window.min(self.t_max),
            });
        }
        Ok(())
    }

    /// Lowest reachable net charge count (deepest discharge).
    fn k_min(&self) -> i64 {
        -((self.soc_arrival + SOC_EPS) / self.step_energy()).floor() as i64
    }

    /// SOC path along the home window for a grid-indexed action vector.
    pub fn soc_path(&self, s: &[i8]) -> Vec<f64> {
        let mut k = 0i64;
        self.home_slots
            .iter()
            .map(|&t| {
                k += i64::from(s[t]);
                self.soc_after(k)
            })
            .collect()
    }

    /// Checks the schedule contract: idle outside the window, net charge
    /// equal to `t_req`, at most `t_max` active slots, discharges only with a
    /// full slot of energy stored, never beyond full, and full on departure.
    pub fn is_feasible(&self, s: &[i8]) -> bool {
        let mut at_home = vec![false; s.len()];
        for &t in &self.home_slots {
            at_home[t] = true;
        }
        if s.iter().zip(&at_home).any(|(&a, &home)| a != 0 && !home) {
            return false;
        }
        let (mut k, mut active) = (0i64, 0usize);
        for &t in &self.home_slots {
            match s[t] {
                1 => {
                    if k >= self.t_req as i64 {
                        return false;
                    }
                    k += 1;
                }
                -1 => {
                    if !self.can_discharge(k) {
                        return false;
                    }
                    k -= 1;
                }
                0 => {}
                _ => return false,
            }
            if s[t] != 0 {
                active += 1;
            }
        }
        k == self.t_req as i64
            && active <= self.t_max
            && (self.soc_after(k) - self.spec.battery_kwh).abs() <= SOC_EPS
    }
}

/// Sum of satisfaction minus payment over the schedule's active slots.
pub fn bev_objective(p: &BevProblem, s: &[i8]) -> f64 {
    s.iter()
        .enumerate()
        .map(|(t, &a)| p.slot_reward(t, a))
        .sum()
}

fn schedule_from(p: &BevProblem, s: Vec<i8>) -> BevSchedule {
    BevSchedule {
        soc_path: p.soc_path(&s),
        objective: bev_objective(p, &s),
        s,
    }
}

/// Exact optimum over all feasible schedules. Among optimal schedules the one
/// charging earliest (lexicographically largest action vector) is returned.
pub fn optimize_schedule(p: &BevProblem) -> Result<BevSchedule> {
    p.check()?;
    let n_slots = p.price.len();
    let window = p.home_slots.len();
    let t_req = p.t_req as i64;
    let k_min = p.k_min().min(0);
    let k_span = (t_req - k_min + 1) as usize;
    let m_span = p.t_max.min(window) + 1;
    let idx = |i: usize, k: i64, m: usize| (i * k_span + (k - k_min) as usize) * m_span + m;

    // value[i][k][m]: best reward from window position i onwards.
    let mut value = vec![f64::NEG_INFINITY; (window + 1) * k_span * m_span];
    for m in 0..m_span {
        value[idx(window, t_req, m)] = 0.0;
    }

    let transitions = |k: i64, action: i8| -> Option<i64> {
        match action {
            1 if k < t_req => Some(k + 1),
            -1 if k > k_min && p.can_discharge(k) => Some(k - 1),
            0 => Some(k),
            _ => None,
        }
    };

    for i in (0..window).rev() {
        let t = p.home_slots[i];
        let rewards = [p.slot_reward(t, 1), 0.0, p.slot_reward(t, -1)];
        for k in k_min..=t_req {
            // Remaining slots cannot close the gap to t_req.
            if t_req - k > (window - i) as i64 {
                continue;
            }
            for m in 0..m_span {
                let mut best = f64::NEG_INFINITY;
                for (a, &action) in [1i8, 0, -1].iter().enumerate() {
                    let Some(next_k) = transitions(k, action) else {
                        continue;
                    };
                    let next_m = m + usize::from(action != 0);
                    if next_m >= m_span {
                        continue;
                    }
                    let v = value[idx(i + 1, next_k, next_m)];
                    if v > f64::NEG_INFINITY {
                        best = best.max(rewards[a] + v);
                    }
                }
                value[idx(i, k, m)] = best;
            }
        }
    }

    if value[idx(0, 0, 0)] == f64::NEG_INFINITY {
        return Err(Error::InfeasibleWindow {
            required: p.t_req,
            window,
        });
    }

    let mut s = vec![0i8; n_slots];
    let (mut k, mut m) = (0i64, 0usize);
    for i in 0..window {
        let t = p.home_slots[i];
        let target = value[idx(i, k, m)];
        let tol = 1e-12 * target.abs().max(1.0);
        let mut chosen = None;
        for action in [1i8, 0, -1] {
            let Some(next_k) = transitions(k, action) else {
                continue;
            };
            let next_m = m + usize::from(action != 0);
            if next_m >= m_span {
                continue;
            }
            let v = value[idx(i + 1, next_k, next_m)];
            if v > f64::NEG_INFINITY && p.slot_reward(t, action) + v >= target - tol {
                chosen = Some((action, next_k, next_m));
                break;
            }
        }
        let (action, next_k, next_m) = chosen.expect("optimal path exists");
        s[t] = action;
        k = next_k;
        m = next_m;
    }
    Ok(schedule_from(p, s))
}

/// Charges at full power from arrival until `t_req` slots are done.
pub fn uncontrolled_schedule(p: &BevProblem) -> Result<BevSchedule> {
    if p.t_req > p.home_slots.len() {
        return Err(Error::InfeasibleWindow {
            required: p.t_req,
            window: p.home_slots.len(),
        });
    }
    let mut s = vec![0i8; p.price.len()];
    for &t in p.home_slots.iter().take(p.t_req) {
        s[t] = 1;
    }
    Ok(schedule_from(p, s))
}
