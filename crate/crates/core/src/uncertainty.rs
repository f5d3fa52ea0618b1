//! Monte Carlo sampling of driver behavior and construction of BEV agents.
//!
//! Every draw comes from a [`RngStream`] keyed by (seed, trial, vehicle,
//! purpose), so an agent depends only on those four values and never on the
//! order in which trials or vehicles are processed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, Normal};

use crate::bev::{required_slots, BevProblem};
use crate::error::{Error, Result};
use crate::pricing::PriceProfile;
use crate::scenario::{BehaviorDistributions, BevSpec, DistributionSpec, Scenario, TimeGrid};

/// Resamples allowed before a behavior draw is declared misconfigured.
pub const REJECTION_BUDGET: usize = 1000;

/// Draws allowed per truncated quantity.
const TRUNCATION_BUDGET: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Purpose {
    VehicleType = 1,
    Behavior = 2,
}

/// A deterministic random stream.
#[derive(Debug, Clone)]
pub struct RngStream {
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, trial: u64, vehicle: u64, purpose: Purpose) -> Self {
        let mut key = [0u8; 32];
        for (chunk, word) in key
            .chunks_exact_mut(8)
            .zip([seed, trial, vehicle, purpose as u64])
        {
            chunk.copy_from_slice(&word.to_le_bytes());
        }
        Self {
            rng: ChaCha8Rng::from_seed(key),
        }
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }
}

/// Draws a vehicle type with probability proportional to market share.
pub fn sample_type<'a>(fleet: &'a [BevSpec], rng: &mut RngStream) -> &'a BevSpec {
    let total: f64 = fleet.iter().map(|f| f.market_share).sum();
    let u = rng.rng().random::<f64>() * total;
    let mut acc = 0.0;
    for spec in fleet {
        acc += spec.market_share;
        if u < acc {
            return spec;
        }
    }
    // Round-off at the top end: last entry with a nonzero share.
    fleet
        .iter()
        .rev()
        .find(|f| f.market_share > 0.0)
        .unwrap_or(&fleet[fleet.len() - 1])
}

/// One truncated draw from `spec`, also capped above by `cap`.
pub fn sample_value(spec: &DistributionSpec, cap: f64, rng: &mut RngStream) -> Result<f64> {
    let (lo, hi) = spec.bounds();
    let hi = hi.min(cap);
    if let DistributionSpec::Point { value } = *spec {
        return Ok(value);
    }
    if lo > hi {
        return Err(Error::RejectionBudgetExceeded(0));
    }
    let rng = rng.rng();
    for _ in 0..TRUNCATION_BUDGET {
        let x = match spec {
            DistributionSpec::Point { .. } => unreachable!(),
            DistributionSpec::TruncatedNormal { mean, sd, .. } => Normal::new(*mean, *sd)
                .map_err(|e| Error::invalid(e.to_string()))?
                .sample(rng),
            DistributionSpec::TruncatedLognormal { median, sigma, .. } => {
                LogNormal::new(median.ln(), *sigma)
                    .map_err(|e| Error::invalid(e.to_string()))?
                    .sample(rng)
            }
            DistributionSpec::Histogram { points, width, .. } => {
                let total: f64 = points.iter().map(|p| p.1).sum();
                let u = rng.random::<f64>() * total;
                let mut acc = 0.0;
                let mut bin = points[points.len() - 1].0;
                for &(x, w) in points {
                    acc += w;
                    if u < acc {
                        bin = x;
                        break;
                    }
                }
                bin + rng.random::<f64>() * width
            }
        };
        if (lo..=hi).contains(&x) {
            return Ok(x);
        }
    }
    Err(Error::RejectionBudgetExceeded(TRUNCATION_BUDGET))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Behavior {
    pub arrival_hour: f64,
    pub departure_hour: f64,
    pub distance_miles: f64,
}

/// Slot containing time of day `hour`.
pub fn slot_of(hour: f64, grid: &TimeGrid) -> usize {
    let slot = (hour / grid.slot_hours).floor() as i64;
    slot.rem_euclid(grid.slot_count as i64) as usize
}

/// Plugged-in slots from arrival up to (not including) departure, wrapping
/// past midnight.
pub fn home_window(arrival_slot: usize, departure_slot: usize, slot_count: usize) -> Vec<usize> {
    let len = (departure_slot + slot_count - arrival_slot) % slot_count;
    (0..len).map(|i| (arrival_slot + i) % slot_count).collect()
}

/// Draws arrival, departure and distance, resampling until the vehicle can
/// recharge fully within its home window.
pub fn sample_behavior(
    dists: &BehaviorDistributions,
    spec: &BevSpec,
    grid: &TimeGrid,
    rng: &mut RngStream,
) -> Result<Behavior> {
    for _ in 0..REJECTION_BUDGET {
        let arrival_hour = sample_value(&dists.arrival, f64::INFINITY, rng)?;
        let departure_hour = sample_value(&dists.departure, f64::INFINITY, rng)?;
        let distance_miles = sample_value(&dists.distance, spec.range_miles, rng)?;
        if distance_miles > spec.range_miles {
            continue;
        }
        let window = home_window(
            slot_of(arrival_hour, grid),
            slot_of(departure_hour, grid),
            grid.slot_count,
        );
        let need = required_slots(spec, distance_miles, grid.slot_hours)?;
        if !window.is_empty() && need.hours <= window.len() {
            return Ok(Behavior {
                arrival_hour,
                departure_hour,
                distance_miles,
            });
        }
    }
    Err(Error::RejectionBudgetExceeded(REJECTION_BUDGET))
}

/// A sampled vehicle and its charging requirement.
#[derive(Debug, Clone, PartialEq)]
pub struct BevAgent {
    pub index: usize,
    pub spec: BevSpec,
    pub arrival_slot: usize,
    pub departure_slot: usize,
    pub distance_miles: f64,
    pub soc_arrival: f64,
    pub t_req: usize,
    pub t_max: usize,
    pub home_slots: Vec<usize>,
}

impl BevAgent {
    /// Scheduling problem for this vehicle under `price`.
    pub fn problem(
        &self,
        omega: &[f64],
        theta: f64,
        price: PriceProfile,
        slot_hours: f64,
    ) -> BevProblem {
        BevProblem {
            spec: self.spec.clone(),
            home_slots: self.home_slots.clone(),
            soc_arrival: self.soc_arrival,
            t_req: self.t_req,
            t_max: self.t_max,
            omega: omega.to_vec(),
            theta,
            price,
            slot_hours,
        }
    }
}

/// Samples vehicle `index` of trial `trial`.
pub fn build_agent(index: usize, s: &Scenario, trial: usize) -> Result<BevAgent> {
    let mut type_rng = RngStream::new(s.seed, trial as u64, index as u64, Purpose::VehicleType);
    let mut behavior_rng = RngStream::new(s.seed, trial as u64, index as u64, Purpose::Behavior);
    build_agent_with(index, s, &mut type_rng, &mut behavior_rng)
}

/// Builds an agent from explicit random streams.
pub fn build_agent_with(
    index: usize,
    s: &Scenario,
    type_rng: &mut RngStream,
    behavior_rng: &mut RngStream,
) -> Result<BevAgent> {
    let spec = sample_type(&s.fleet, type_rng).clone();
    let b = sample_behavior(&s.behavior, &spec, &s.grid, behavior_rng)?;
    let need = required_slots(&spec, b.distance_miles, s.grid.slot_hours)?;
    let arrival_slot = slot_of(b.arrival_hour, &s.grid);
    let departure_slot = slot_of(b.departure_hour, &s.grid);
    let home_slots = home_window(arrival_slot, departure_slot, s.grid.slot_count);
    let t_max = match s.t_max_active {
        Some(cap) => cap.clamp(need.hours, home_slots.len()),
        None => home_slots.len(),
    };
    Ok(BevAgent {
        index,
        spec,
        arrival_slot,
        departure_slot,
        distance_miles: b.distance_miles,
        soc_arrival: need.soc_arrival,
        t_req: need.hours,
        t_max,
        home_slots,
    })
}
