//! Retailer/household demand-response game with real-time pricing,
//! schedulable household load and V2G-capable electric vehicles under
//! Monte Carlo driver behavior.
//!
//! The retailer (leader) prices each slot at a markup over marginal
//! generation cost; households (followers) shift load within bounds while
//! keeping their daily energy, and vehicle owners schedule whole-hour
//! charge/discharge actions. Followers update one at a time until the
//! aggregate load settles.

pub mod bev;
pub mod engine;
pub mod error;
pub mod household;
pub mod pricing;
pub mod report;
pub mod scenario;
pub mod uncertainty;

pub use engine::{run_trial, run_trials, Mode, TrialResult};
pub use error::{Error, Result};
pub use report::{aggregate_stats, emit_outputs, RunSummary};
pub use scenario::{default_scenario, load_scenario, save_scenario, Scenario};
