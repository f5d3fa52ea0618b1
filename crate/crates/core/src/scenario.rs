//! Scenario configuration: domain types, the JSON config schema, validation
//! and the built-in default scenario.
//!
//! A config file may omit any field; omitted fields take the value of the
//! default scenario. Per-slot quantities accept either a scalar (broadcast to
//! every slot) or an explicit vector of `slot_count` values. Once loaded, a
//! [`Scenario`] holds only fully materialized vectors and is immutable.

// Validation writes `!(x > 0.0)` on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Shipped per-household nominal load profile (kW, 24 hourly slots).
const NOMINAL_PROFILE_JSON: &str = include_str!("../data/nominal_profile_v1.json");

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeGrid {
    pub slot_count: usize,
    /// Slot length in hours.
    pub slot_hours: f64,
}

impl Default for TimeGrid {
    fn default() -> Self {
        Self {
            slot_count: 24,
            slot_hours: 1.0,
        }
    }
}

/// Retailer generation model, one entry per slot.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GenModel {
    /// Cost curvature (money/kW^2).
    pub a: Vec<f64>,
    /// Linear cost coefficient (money/kW).
    pub b: Vec<f64>,
    /// Fixed cost (money).
    pub c: Vec<f64>,
    /// Profit coefficient applied to marginal cost, >= 1.
    pub lambda: Vec<f64>,
    /// Generation capacity (kW).
    pub g_cap: Vec<f64>,
    /// Upper bound on total demand (kW).
    pub l_cap: Vec<f64>,
}

impl GenModel {
    pub fn slot_count(&self) -> usize {
        self.a.len()
    }

    /// Upper generation bound `min(g_cap, l_cap)` at slot `t`.
    pub fn upper_bound(&self, t: usize) -> f64 {
        self.g_cap[t].min(self.l_cap[t])
    }
}

/// A class of identical households.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UserGroup {
    pub name: String,
    pub count: usize,
    /// Preference parameter per slot.
    pub omega: Vec<f64>,
    /// Satisfaction curvature.
    pub theta: f64,
    /// Lower load bound as a fraction of nominal.
    pub min_frac: f64,
    /// Upper load bound as a fraction of nominal.
    pub max_frac: f64,
    /// Per-household nominal load (kW) per slot.
    pub nominal: Vec<f64>,
    pub has_bev: bool,
}

impl UserGroup {
    /// Daily energy of one household (kWh).
    pub fn daily_energy(&self, slot_hours: f64) -> f64 {
        self.nominal.iter().sum::<f64>() * slot_hours
    }

    pub fn lower_bounds(&self) -> Vec<f64> {
        self.nominal.iter().map(|n| n * self.min_frac).collect()
    }

    pub fn upper_bounds(&self) -> Vec<f64> {
        self.nominal.iter().map(|n| n * self.max_frac).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BevSpec {
    pub label: String,
    pub market_share: f64,
    pub battery_kwh: f64,
    pub rated_kw: f64,
    pub range_miles: f64,
}

impl BevSpec {
    /// Battery energy drawn per driven mile.
    pub fn kwh_per_mile(&self) -> f64 {
        self.battery_kwh / self.range_miles
    }
}

/// One behavior distribution. Every family is truncated to `[lo, hi]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum DistributionSpec {
    Point {
        value: f64,
    },
    TruncatedNormal {
        mean: f64,
        sd: f64,
        lo: f64,
        hi: f64,
    },
    /// Log-normal parameterized by its median and log-space sigma.
    TruncatedLognormal {
        median: f64,
        sigma: f64,
        lo: f64,
        hi: f64,
    },
    /// Empirical histogram: a bin is drawn by weight, then a value uniformly
    /// within `[x, x + width)`.
    Histogram {
        #[serde(default)]
        points: Vec<(f64, f64)>,
        #[serde(default = "default_bin_width")]
        width: f64,
        lo: f64,
        hi: f64,
        /// CSV of `value,weight` rows; resolved into `points` on load.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        file: Option<PathBuf>,
    },
}

fn default_bin_width() -> f64 {
    1.0
}

impl DistributionSpec {
    /// Truncation bounds.
    pub fn bounds(&self) -> (f64, f64) {
        match *self {
            DistributionSpec::Point { value } => (value, value),
            DistributionSpec::TruncatedNormal { lo, hi, .. }
            | DistributionSpec::TruncatedLognormal { lo, hi, .. }
            | DistributionSpec::Histogram { lo, hi, .. } => (lo, hi),
        }
    }

    fn validate(&self, what: &str) -> Result<()> {
        let (lo, hi) = self.bounds();
        if !lo.is_finite() || !hi.is_finite() || lo > hi {
            return Err(Error::invalid(format!(
                "{what}: truncation bounds must be finite with lo <= hi"
            )));
        }
        match self {
            DistributionSpec::Point { .. } => {}
            DistributionSpec::TruncatedNormal { sd, .. } => {
                if !(*sd > 0.0) {
                    return Err(Error::invalid(format!("{what}: sd must be > 0")));
                }
            }
            DistributionSpec::TruncatedLognormal { median, sigma, .. } => {
                if !(*median > 0.0) || !(*sigma > 0.0) {
                    return Err(Error::invalid(format!(
                        "{what}: median and sigma must be > 0"
                    )));
                }
            }
            DistributionSpec::Histogram { points, width, .. } => {
                if points.is_empty() {
                    return Err(Error::invalid(format!("{what}: histogram has no bins")));
                }
                if !(*width > 0.0) {
                    return Err(Error::invalid(format!("{what}: bin width must be > 0")));
                }
                if points.iter().any(|&(x, w)| !x.is_finite() || !(w >= 0.0)) {
                    return Err(Error::invalid(format!(
                        "{what}: histogram weights must be >= 0"
                    )));
                }
                let total: f64 = points.iter().map(|p| p.1).sum();
                if !(total > 0.0) {
                    return Err(Error::invalid(format!(
                        "{what}: histogram weights sum to zero"
                    )));
                }
            }
        }
        Ok(())
    }

    fn resolve_file(&mut self, base: &Path) -> Result<()> {
        if let DistributionSpec::Histogram { points, file, .. } = self {
            if let Some(rel) = file.take() {
                let path = base.join(rel);
                let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
                *points = parse_histogram(&text)
                    .map_err(|msg| Error::invalid(format!("{}: {msg}", path.display())))?;
            }
        }
        Ok(())
    }
}

/// Parses `value,weight` rows; blank lines, `#` comments and a non-numeric
/// header row are skipped.
fn parse_histogram(text: &str) -> std::result::Result<Vec<(f64, f64)>, String> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut cols = line.split(',').map(str::trim);
        let (Some(x), Some(w)) = (cols.next(), cols.next()) else {
            return Err(format!("line {}: expected value,weight", i + 1));
        };
        match (x.parse::<f64>(), w.parse::<f64>()) {
            (Ok(x), Ok(w)) => out.push((x, w)),
            _ if out.is_empty() && i == 0 => continue,
            _ => return Err(format!("line {}: not a number", i + 1)),
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BehaviorDistributions {
    /// Home arrival time of day (hours).
    pub arrival: DistributionSpec,
    /// Departure time of day (hours, next morning).
    pub departure: DistributionSpec,
    /// Daily driven distance (miles).
    pub distance: DistributionSpec,
}

impl Default for BehaviorDistributions {
    fn default() -> Self {
        Self {
            arrival: DistributionSpec::TruncatedNormal {
                mean: 17.5,
                sd: 2.5,
                lo: 12.0,
                hi: 23.9,
            },
            departure: DistributionSpec::TruncatedNormal {
                mean: 7.5,
                sd: 1.5,
                lo: 4.0,
                hi: 12.0,
            },
            distance: DistributionSpec::TruncatedLognormal {
                median: 25.0,
                sigma: 0.6,
                lo: 1.0,
                hi: 1000.0,
            },
        }
    }
}

/// Which generation value the broadcast price is computed from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PriceBasis {
    /// Variance-minimizing generation plan over the demand box. With
    /// non-binding capacity this plan is flat, so every slot gets one price.
    Plan,
    /// Generation equal to demand.
    #[default]
    Demand,
}

/// A fully resolved, validated simulation configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Scenario {
    pub grid: TimeGrid,
    pub gen: GenModel,
    pub groups: Vec<UserGroup>,
    pub fleet: Vec<BevSpec>,
    pub behavior: BehaviorDistributions,
    /// Number of BEVs; owners are the first households of BEV groups.
    pub bev_count: usize,
    /// Cap on active (charging or discharging) slots per vehicle; `None`
    /// means the vehicle's home-window length.
    pub t_max_active: Option<usize>,
    pub trials: usize,
    pub seed: u64,
    pub max_rounds: usize,
    pub epsilon: f64,
    pub price_basis: PriceBasis,
    /// Group indices in update order; `None` means index order.
    pub update_order: Option<Vec<usize>>,
}

// ---------------------------------------------------------------------------
// Config schema
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PerSlot {
    Scalar(f64),
    Vector(Vec<f64>),
}

impl PerSlot {
    fn resolve(&self, n: usize, what: &str) -> Result<Vec<f64>> {
        match self {
            PerSlot::Scalar(v) => Ok(vec![*v; n]),
            PerSlot::Vector(v) if v.len() == n => Ok(v.clone()),
            PerSlot::Vector(v) => Err(Error::invalid(format!(
                "{what}: expected {n} values, got {}",
                v.len()
            ))),
        }
    }
}

/// Overrides generation coefficients on slots whose start time falls in
/// `[start_hour, end_hour)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenWindow {
    pub start_hour: f64,
    pub end_hour: f64,
    #[serde(default)]
    pub a: Option<f64>,
    #[serde(default)]
    pub b: Option<f64>,
    #[serde(default)]
    pub c: Option<f64>,
    #[serde(default)]
    pub lambda: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct GenConfig {
    a: PerSlot,
    b: PerSlot,
    c: PerSlot,
    lambda: PerSlot,
    g_cap: PerSlot,
    l_cap: PerSlot,
    windows: Vec<GenWindow>,
}

impl Default for GenConfig {
    fn default() -> Self {
        Self {
            a: PerSlot::Scalar(0.01),
            b: PerSlot::Scalar(0.2),
            c: PerSlot::Scalar(0.0),
            lambda: PerSlot::Scalar(1.2),
            g_cap: PerSlot::Scalar(DEFAULT_CAPACITY_KW),
            l_cap: PerSlot::Scalar(DEFAULT_CAPACITY_KW),
            windows: Vec::new(),
        }
    }
}

const DEFAULT_CAPACITY_KW: f64 = 8000.0;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct GroupConfig {
    name: String,
    count: usize,
    omega: PerSlot,
    theta: f64,
    min_frac: f64,
    max_frac: f64,
    /// Falls back to the shipped nominal profile.
    #[serde(default)]
    nominal: Option<PerSlot>,
    #[serde(default)]
    has_bev: bool,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct ScenarioConfig {
    grid: TimeGrid,
    gen: GenConfig,
    groups: Vec<GroupConfig>,
    fleet: Vec<BevSpec>,
    behavior: BehaviorDistributions,
    bev_count: usize,
    t_max_active: Option<usize>,
    trials: usize,
    seed: u64,
    max_rounds: usize,
    epsilon: f64,
    price_basis: PriceBasis,
    update_order: Option<Vec<usize>>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            grid: TimeGrid::default(),
            gen: GenConfig::default(),
            groups: default_groups(),
            fleet: default_fleet(),
            behavior: BehaviorDistributions::default(),
            bev_count: 50,
            t_max_active: None,
            trials: 200,
            seed: 42,
            max_rounds: 50,
            epsilon: 1e-3,
            price_basis: PriceBasis::Demand,
            update_order: None,
        }
    }
}

fn default_groups() -> Vec<GroupConfig> {
    let group = |name: &str, count, omega, min_frac, max_frac, has_bev| GroupConfig {
        name: name.to_string(),
        count,
        omega: PerSlot::Scalar(omega),
        theta: 0.1,
        min_frac,
        max_frac,
        nominal: None,
        has_bev,
    };
    vec![
        group("group1", 600, 5.0, 0.70, 1.50, true),
        group("group2", 700, 5.5, 0.75, 1.40, false),
        group("group3", 700, 6.0, 0.80, 1.20, false),
    ]
}

fn default_fleet() -> Vec<BevSpec> {
    let spec = |label: &str, share, kwh, kw, miles| BevSpec {
        label: label.to_string(),
        market_share: share,
        battery_kwh: kwh,
        rated_kw: kw,
        range_miles: miles,
    };
    vec![
        spec("compact_sedan", 0.5148, 33.0, 7.0, 114.0),
        spec("midsize_sedan", 0.1035, 75.0, 11.5, 259.0),
        spec("midsize_suv", 0.3817, 100.0, 17.2, 295.0),
    ]
}

#[derive(Deserialize)]
struct NominalProfileFile {
    #[allow(dead_code)]
    version: u32,
    slot_hours: f64,
    profile: Vec<f64>,
}

/// The shipped per-household nominal profile (kW) and its slot length.
pub fn default_nominal_profile() -> (Vec<f64>, f64) {
    let file: NominalProfileFile =
        serde_json::from_str(NOMINAL_PROFILE_JSON).expect("shipped profile is valid JSON");
    (file.profile, file.slot_hours)
}

impl ScenarioConfig {
    fn resolve(mut self, base: &Path) -> Result<Scenario> {
        let grid = self.grid;
        if grid.slot_count < 2 {
            return Err(Error::invalid("grid.slot_count must be >= 2"));
        }
        if !(grid.slot_hours > 0.0) {
            return Err(Error::invalid("grid.slot_hours must be > 0"));
        }
        let n = grid.slot_count;

        let g = &self.gen;
        let mut gen = GenModel {
            a: g.a.resolve(n, "gen.a")?,
            b: g.b.resolve(n, "gen.b")?,
            c: g.c.resolve(n, "gen.c")?,
            lambda: g.lambda.resolve(n, "gen.lambda")?,
            g_cap: g.g_cap.resolve(n, "gen.g_cap")?,
            l_cap: g.l_cap.resolve(n, "gen.l_cap")?,
        };
        for w in &g.windows {
            for t in 0..n {
                let start = t as f64 * grid.slot_hours;
                if start >= w.start_hour && start < w.end_hour {
                    if let Some(v) = w.a {
                        gen.a[t] = v;
                    }
                    if let Some(v) = w.b {
                        gen.b[t] = v;
                    }
                    if let Some(v) = w.c {
                        gen.c[t] = v;
                    }
                    if let Some(v) = w.lambda {
                        gen.lambda[t] = v;
                    }
                }
            }
        }

        let mut groups = Vec::with_capacity(self.groups.len());
        for gc in self.groups {
            let nominal = match &gc.nominal {
                Some(p) => p.resolve(n, &format!("group '{}': nominal", gc.name))?,
                None => {
                    let (profile, hours) = default_nominal_profile();
                    if profile.len() != n || hours != grid.slot_hours {
                        return Err(Error::invalid(format!(
                            "group '{}': shipped nominal profile is {} x {} h; \
                             give an explicit nominal vector for this grid",
                            gc.name,
                            profile.len(),
                            hours
                        )));
                    }
                    profile
                }
            };
            groups.push(UserGroup {
                omega: gc
                    .omega
                    .resolve(n, &format!("group '{}': omega", gc.name))?,
                name: gc.name,
                count: gc.count,
                theta: gc.theta,
                min_frac: gc.min_frac,
                max_frac: gc.max_frac,
                nominal,
                has_bev: gc.has_bev,
            });
        }

        for spec in [
            &mut self.behavior.arrival,
            &mut self.behavior.departure,
            &mut self.behavior.distance,
        ] {
            spec.resolve_file(base)?;
        }

        let scenario = Scenario {
            grid,
            gen,
            groups,
            fleet: self.fleet,
            behavior: self.behavior,
            bev_count: self.bev_count,
            t_max_active: self.t_max_active,
            trials: self.trials,
            seed: self.seed,
            max_rounds: self.max_rounds,
            epsilon: self.epsilon,
            price_basis: self.price_basis,
            update_order: self.update_order,
        };
        scenario.validate()?;
        Ok(scenario)
    }
}

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

/// Loads and validates a scenario from a JSON config file. Histogram files
/// are resolved relative to the config file's directory.
pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    parse_scenario(&text, base)
}

/// Parses a scenario from JSON text.
pub fn parse_scenario(text: &str, base: &Path) -> Result<Scenario> {
    let config: ScenarioConfig = serde_json::from_str(text)?;
    config.resolve(base)
}

/// Writes the fully resolved scenario as a config file that loads back to an
/// identical value.
pub fn save_scenario(scenario: &Scenario, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let text = serde_json::to_string_pretty(scenario)?;
    fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

/// The built-in scenario: three household groups, 50 BEVs on group 1, and
/// the three-vehicle fleet mix.
pub fn default_scenario() -> Scenario {
    ScenarioConfig::default()
        .resolve(Path::new("."))
        .expect("default scenario is valid")
}

/// Per-slot sum of nominal household load over all users (kW), excluding
/// BEV load.
pub fn nominal_aggregate(s: &Scenario) -> Vec<f64> {
    let mut total = vec![0.0; s.grid.slot_count];
    for g in &s.groups {
        for (acc, nominal) in total.iter_mut().zip(&g.nominal) {
            *acc += g.count as f64 * nominal;
        }
    }
    total
}

impl Scenario {
    pub fn slot_count(&self) -> usize {
        self.grid.slot_count
    }

    /// Total number of households.
    pub fn user_count(&self) -> usize {
        self.groups.iter().map(|g| g.count).sum()
    }

    /// Order in which groups are visited during a round.
    pub fn group_order(&self) -> Vec<usize> {
        self.update_order
            .clone()
            .unwrap_or_else(|| (0..self.groups.len()).collect())
    }

    /// Checks every type invariant; the error names the violated one.
    pub fn validate(&self) -> Result<()> {
        let n = self.grid.slot_count;
        if n < 2 {
            return Err(Error::invalid("grid.slot_count must be >= 2"));
        }
        if !(self.grid.slot_hours > 0.0) {
            return Err(Error::invalid("grid.slot_hours must be > 0"));
        }

        let gen = &self.gen;
        for (name, v) in [
            ("a", &gen.a),
            ("b", &gen.b),
            ("c", &gen.c),
            ("lambda", &gen.lambda),
            ("g_cap", &gen.g_cap),
            ("l_cap", &gen.l_cap),
        ] {
            if v.len() != n {
                return Err(Error::invalid(format!(
                    "gen.{name}: expected {n} values, got {}",
                    v.len()
                )));
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::invalid(format!("gen.{name}: values must be finite")));
            }
        }
        for t in 0..n {
            if !(gen.a[t] > 0.0) {
                return Err(Error::invalid(format!(
                    "gen.a[{t}] must be > 0 (strictly convex generation cost)"
                )));
            }
            if gen.b[t] < 0.0 {
                return Err(Error::invalid(format!("gen.b[{t}] must be >= 0")));
            }
            if gen.lambda[t] < 1.0 {
                return Err(Error::invalid(format!(
                    "gen.lambda[{t}] must be >= 1 (price may not undercut marginal cost)"
                )));
            }
            if !(gen.g_cap[t] > 0.0) || !(gen.l_cap[t] > 0.0) {
                return Err(Error::invalid(format!(
                    "gen.g_cap[{t}] and gen.l_cap[{t}] must be > 0"
                )));
            }
        }

        for g in &self.groups {
            let who = format!("group '{}'", g.name);
            if !(g.theta > 0.0) || !g.theta.is_finite() {
                return Err(Error::invalid(format!(
                    "{who}: theta must be > 0 (satisfaction curvature)"
                )));
            }
            if g.omega.len() != n || g.nominal.len() != n {
                return Err(Error::invalid(format!(
                    "{who}: omega and nominal need {n} values"
                )));
            }
            if g.omega.iter().any(|w| !(*w > 0.0) || !w.is_finite()) {
                return Err(Error::invalid(format!(
                    "{who}: omega must be > 0 in every slot (satisfaction preference)"
                )));
            }
            if !(0.0..=1.0).contains(&g.min_frac) || !(g.max_frac >= 1.0) || !g.max_frac.is_finite()
            {
                return Err(Error::invalid(format!(
                    "{who}: need 0 <= min_frac <= 1 <= max_frac"
                )));
            }
            if g.nominal.iter().any(|x| !(*x >= 0.0) || !x.is_finite()) {
                return Err(Error::invalid(format!("{who}: nominal load must be >= 0")));
            }
        }

        if self.fleet.is_empty() && self.bev_count > 0 {
            return Err(Error::invalid("fleet is empty but bev_count > 0"));
        }
        for f in &self.fleet {
            // A zero share keeps a vehicle type configured but never drawn.
            if !(f.market_share >= 0.0) {
                return Err(Error::invalid(format!(
                    "fleet '{}': market share must be >= 0",
                    f.label
                )));
            }
            let positive = [f.battery_kwh, f.rated_kw, f.range_miles]
                .iter()
                .all(|v| *v > 0.0 && v.is_finite());
            if !positive {
                return Err(Error::invalid(format!(
                    "fleet '{}': capacity, rated power and range must be positive",
                    f.label
                )));
            }
        }
        if !self.fleet.is_empty() {
            let share: f64 = self.fleet.iter().map(|f| f.market_share).sum();
            if (share - 1.0).abs() > 1e-9 {
                return Err(Error::invalid(format!(
                    "fleet market shares sum to {share}, expected 1"
                )));
            }
        }

        self.behavior.arrival.validate("behavior.arrival")?;
        self.behavior.departure.validate("behavior.departure")?;
        self.behavior.distance.validate("behavior.distance")?;
        if self.behavior.distance.bounds().0 < 0.0 {
            return Err(Error::invalid(
                "behavior.distance: lower bound must be >= 0",
            ));
        }

        let owners: usize = self
            .groups
            .iter()
            .filter(|g| g.has_bev)
            .map(|g| g.count)
            .sum();
        if self.bev_count > owners {
            return Err(Error::invalid(format!(
                "bev_count {} exceeds the {owners} households in BEV groups",
                self.bev_count
            )));
        }
        if self.trials < 1 {
            return Err(Error::invalid("trials must be >= 1"));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::invalid("epsilon must be > 0"));
        }
        if self.max_rounds < 1 {
            return Err(Error::invalid("max_rounds must be >= 1"));
        }
        if let Some(order) = &self.update_order {
            let mut seen = vec![false; self.groups.len()];
            for &i in order {
                if i >= seen.len() || seen[i] {
                    return Err(Error::invalid(
                        "update_order must be a permutation of group indices",
                    ));
                }
                seen[i] = true;
            }
            if seen.iter().any(|s| !s) {
                return Err(Error::invalid(
                    "update_order must be a permutation of group indices",
                ));
            }
        }
        Ok(())
    }
}
