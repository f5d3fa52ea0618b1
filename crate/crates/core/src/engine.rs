//! Iterative leader/follower game.
//!
//! The retailer prices every slot from its generation plan for the current
//! aggregate demand; households then update one at a time, each
//! best-responding to the prices in force at its turn. A round visits every
//! household once. The loop stops when a full round moves the aggregate by
//! less than `epsilon` (relative sup-norm) or after `max_rounds` rounds.
//!
//! Each trial also produces a baseline in which households keep their nominal
//! profile and vehicles charge as soon as they arrive.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bev::{bev_objective, optimize_schedule, uncontrolled_schedule, BevSchedule};
use crate::error::{Error, Result};
use crate::household::{best_response, household_objective, HouseholdProblem};
use crate::pricing::{
    demand_following_plan, generation_plan, price, total_cost, GenerationPlan, PriceProfile,
};
use crate::scenario::{PriceBasis, Scenario};
use crate::uncertainty::{build_agent, BevAgent};

/// Which scenarios a run evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// Baseline and price-responsive with V2G.
    #[default]
    Both,
    /// Nominal loads, charging on arrival, no price response.
    Baseline,
    /// Price-responsive households and V2G-capable vehicles.
    RtpV2g,
    /// Price-responsive, vehicles may charge but never discharge.
    RtpOnly,
}

impl Mode {
    pub fn runs_baseline(self) -> bool {
        matches!(self, Mode::Both | Mode::Baseline)
    }

    pub fn runs_game(self) -> bool {
        !matches!(self, Mode::Baseline)
    }

    pub fn allows_discharge(self) -> bool {
        matches!(self, Mode::Both | Mode::RtpV2g)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Both => "both",
            Mode::Baseline => "baseline",
            Mode::RtpV2g => "rtp-v2g",
            Mode::RtpOnly => "rtp-only",
        }
    }
}

/// A household's position in the population.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct UserRef {
    pub group: usize,
    /// Index into the trial's agents when the household owns a BEV.
    pub agent: Option<usize>,
}

/// Households in index order: groups in scenario order, BEV owners are the
/// first households of BEV groups.
pub fn users(s: &Scenario) -> Vec<UserRef> {
    let mut out = Vec::with_capacity(s.user_count());
    let mut next_agent = 0;
    for (g, group) in s.groups.iter().enumerate() {
        for _ in 0..group.count {
            let agent = if group.has_bev && next_agent < s.bev_count {
                next_agent += 1;
                Some(next_agent - 1)
            } else {
                None
            };
            out.push(UserRef { group: g, agent });
        }
    }
    out
}

/// Household indices in update order.
pub fn update_order(s: &Scenario, users: &[UserRef]) -> Vec<usize> {
    let order = s.group_order();
    let mut out = Vec::with_capacity(users.len());
    for g in order {
        out.extend(
            users
                .iter()
                .enumerate()
                .filter(|(_, u)| u.group == g)
                .map(|(i, _)| i),
        );
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GameState {
    /// Per-household load (kW) per slot. Emptied by [`TrialResult::compact`].
    pub household_loads: Vec<Vec<f64>>,
    /// One schedule per agent.
    pub bev_schedules: Vec<BevSchedule>,
    /// Total demand (kW) per slot.
    pub aggregate: Vec<f64>,
    pub plan: GenerationPlan,
    pub prices: PriceProfile,
    pub round: usize,
}

/// Read-only context shared by every update in a trial.
pub struct Game<'a> {
    pub scenario: &'a Scenario,
    pub users: Vec<UserRef>,
    pub agents: Vec<BevAgent>,
    lo: Vec<Vec<f64>>,
    hi: Vec<Vec<f64>>,
    daily_totals: Vec<f64>,
}

impl<'a> Game<'a> {
    pub fn new(scenario: &'a Scenario, agents: Vec<BevAgent>) -> Self {
        let groups = &scenario.groups;
        Self {
            scenario,
            users: users(scenario),
            agents,
            lo: groups.iter().map(|g| g.lower_bounds()).collect(),
            hi: groups.iter().map(|g| g.upper_bounds()).collect(),
            daily_totals: groups.iter().map(|g| g.nominal.iter().sum()).collect(),
        }
    }

    /// Generation plan for a demand vector under the scenario's price basis.
    pub fn plan_for(&self, demand: &[f64]) -> Result<GenerationPlan> {
        match self.scenario.price_basis {
            PriceBasis::Plan => generation_plan(&self.scenario.gen, demand),
            PriceBasis::Demand => demand_following_plan(&self.scenario.gen, demand),
        }
    }

    fn household_problem(&self, user: usize, prices: &PriceProfile) -> HouseholdProblem {
        let g = self.users[user].group;
        let group = &self.scenario.groups[g];
        HouseholdProblem {
            omega: group.omega.clone(),
            theta: group.theta,
            lo: self.lo[g].clone(),
            hi: self.hi[g].clone(),
            daily_total: self.daily_totals[g],
            price: prices.clone(),
        }
    }

    /// Daily per-slot load sum required of `user`.
    pub fn daily_total(&self, user: usize) -> f64 {
        self.daily_totals[self.users[user].group]
    }

    fn aggregate_of(&self, loads: &[Vec<f64>], schedules: &[BevSchedule]) -> Vec<f64> {
        let n = self.scenario.slot_count();
        let mut agg = vec![0.0; n];
        for l in loads {
            for (a, x) in agg.iter_mut().zip(l) {
                *a += x;
            }
        }
        for (agent, sched) in self.agents.iter().zip(schedules) {
            for (t, a) in agg.iter_mut().enumerate() {
                *a += sched.power(t, agent.spec.rated_kw);
            }
        }
        agg
    }

    /// State with nominal household loads and charging on arrival, priced
    /// from the given plan function.
    fn nominal_state(&self, plan: impl Fn(&[f64]) -> Result<GenerationPlan>) -> Result<GameState> {
        let loads: Vec<Vec<f64>> = self
            .users
            .iter()
            .map(|u| self.scenario.groups[u.group].nominal.clone())
            .collect();
        let flat = PriceProfile::new(vec![0.0; self.scenario.slot_count()]);
        let schedules = self
            .agents
            .iter()
            .map(|a| {
                let group = &self.scenario.groups[self.owner_group(a.index)];
                uncontrolled_schedule(&a.problem(
                    &group.omega,
                    group.theta,
                    flat.clone(),
                    self.scenario.grid.slot_hours,
                ))
            })
            .collect::<Result<Vec<_>>>()?;
        let aggregate = self.aggregate_of(&loads, &schedules);
        let plan = plan(&aggregate)?;
        let prices = price(&self.scenario.gen, &plan.g);
        Ok(GameState {
            household_loads: loads,
            bev_schedules: schedules,
            aggregate,
            plan,
            prices,
            round: 0,
        })
    }

    fn owner_group(&self, agent: usize) -> usize {
        self.users
            .iter()
            .find(|u| u.agent == Some(agent))
            .map(|u| u.group)
            .expect("every agent has an owner")
    }

    /// Unmanaged reference: the retailer generates exactly the demand and
    /// settles at the resulting marginal-cost price.
    pub fn baseline_state(&self) -> Result<GameState> {
        let mut state = self.nominal_state(|d| demand_following_plan(&self.scenario.gen, d))?;
        // The uncontrolled schedules were scored at zero prices; rescore.
        for (agent, sched) in self.agents.iter().zip(state.bev_schedules.iter_mut()) {
            let group = &self.scenario.groups[self.owner_group(agent.index)];
            let p = agent.problem(
                &group.omega,
                group.theta,
                state.prices.clone(),
                self.scenario.grid.slot_hours,
            );
            sched.objective = bev_objective(&p, &sched.s);
        }
        Ok(state)
    }

    /// Starting point of the game: the nominal state priced by the plan.
    pub fn initial_state(&self) -> Result<GameState> {
        self.nominal_state(|d| self.plan_for(d))
    }

    /// Full utility of `user` under `prices`.
    pub fn utility_of_user(&self, state: &GameState, user: usize, prices: &PriceProfile) -> f64 {
        let p = self.household_problem(user, prices);
        let mut u = household_objective(&p, &state.household_loads[user]);
        if let Some(a) = self.users[user].agent {
            let bp = self.agents[a].problem(
                &p.omega,
                p.theta,
                prices.clone(),
                self.scenario.grid.slot_hours,
            );
            u += bev_objective(&bp, &state.bev_schedules[a].s);
        }
        u
    }

    /// Plan and prices for the current aggregate.
    pub fn prices_now(&self, state: &GameState) -> Result<(GenerationPlan, PriceProfile)> {
        let plan = self.plan_for(&state.aggregate)?;
        let prices = price(&self.scenario.gen, &plan.g);
        Ok((plan, prices))
    }

    /// Prices `user` faces at its turn: computed from the demand of everyone
    /// else. Pricing a vehicle against its own committed charging makes the
    /// slots it occupies look dearer, so it hops away and back every round.
    pub fn prices_for_user(
        &self,
        state: &GameState,
        user: usize,
    ) -> Result<(GenerationPlan, PriceProfile)> {
        let mut others: Vec<f64> = state
            .aggregate
            .iter()
            .zip(&state.household_loads[user])
            .map(|(l, own)| l - own)
            .collect();
        if let Some(a) = self.users[user].agent {
            let kw = self.agents[a].spec.rated_kw;
            for (o, &s) in others.iter_mut().zip(&state.bev_schedules[a].s) {
                *o -= f64::from(s) * kw;
            }
        }
        let plan = self.plan_for(&others)?;
        let prices = price(&self.scenario.gen, &plan.g);
        Ok((plan, prices))
    }

    /// Re-optimizes one household (and its vehicle) at the prices it faces and
    /// commits the result. No other household's decisions change.
    pub fn user_update(&self, state: &mut GameState, user: usize) -> Result<()> {
        let (plan, prices) = self.prices_for_user(state, user)?;
        let problem = self.household_problem(user, &prices);
        let sol = best_response(&problem)?;
        for (t, (agg, new)) in state.aggregate.iter_mut().zip(&sol.load).enumerate() {
            *agg += new - state.household_loads[user][t];
        }
        state.household_loads[user] = sol.load;

        if let Some(a) = self.users[user].agent {
            let agent = &self.agents[a];
            let bp = agent.problem(
                &problem.omega,
                problem.theta,
                prices.clone(),
                self.scenario.grid.slot_hours,
            );
            let sched = optimize_schedule(&bp)?;
            let old = &state.bev_schedules[a];
            for (t, agg) in state.aggregate.iter_mut().enumerate() {
                *agg += f64::from(sched.s[t] - old.s[t]) * agent.spec.rated_kw;
            }
            state.bev_schedules[a] = sched;
        }
        state.plan = plan;
        state.prices = prices;
        Ok(())
    }

    /// Runs rounds until convergence or `max_rounds`.
    pub fn play(&self, mut state: GameState) -> Result<GameOutcome> {
        let order = update_order(self.scenario, &self.users);
        let mut u_rc_history = vec![state.plan.u_rc];
        let mut max_energy_drift: f64 = 0.0;
        let mut converged = false;
        let mut last_change = f64::INFINITY;
        while state.round < self.scenario.max_rounds {
            let previous = state.aggregate.clone();
            for &user in &order {
                self.user_update(&mut state, user)?;
            }
            state.round += 1;
            // Rebuild from scratch so incremental updates cannot drift.
            state.aggregate = self.aggregate_of(&state.household_loads, &state.bev_schedules);
            let (plan, prices) = self.prices_now(&state)?;
            state.plan = plan;
            state.prices = prices;
            u_rc_history.push(state.plan.u_rc);

            for (user, loads) in state.household_loads.iter().enumerate() {
                let target = self.daily_total(user);
                let drift = (loads.iter().sum::<f64>() - target).abs() / target.max(1e-300);
                max_energy_drift = max_energy_drift.max(drift);
            }

            last_change = previous
                .iter()
                .zip(&state.aggregate)
                .map(|(p, c)| (c - p).abs() / p.max(1.0))
                .fold(0.0, f64::max);
            if last_change < self.scenario.epsilon {
                converged = true;
                break;
            }
        }
        Ok(GameOutcome {
            state,
            converged,
            last_change,
            u_rc_history,
            max_energy_drift,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GameOutcome {
    pub state: GameState,
    pub converged: bool,
    /// Relative sup-norm change of the aggregate over the last round.
    pub last_change: f64,
    /// Retailer flatness objective before the first round and after each round.
    pub u_rc_history: Vec<f64>,
    /// Largest relative deviation of any household's daily energy from its
    /// nominal total, over all rounds.
    pub max_energy_drift: f64,
}

/// Headline quantities for one scenario of one trial.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScenarioMetrics {
    /// kW
    pub peak_demand: f64,
    /// kWh
    pub total_energy: f64,
    pub total_payments: f64,
    pub generation_cost: f64,
}

/// Per-scenario outcome of a trial.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioRun {
    pub state: GameState,
    /// Total household load per group (kW) per slot.
    pub group_loads: Vec<Vec<f64>>,
    /// Fleet charging power (kW) per slot; negative when discharging.
    pub bev_load: Vec<f64>,
    pub metrics: ScenarioMetrics,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialResult {
    pub trial: usize,
    pub agents_t_req: Vec<usize>,
    #[serde(skip)]
    pub agents: Vec<BevAgent>,
    pub baseline: Option<ScenarioRun>,
    pub game: Option<ScenarioRun>,
    pub converged: bool,
    pub rounds: usize,
    pub u_rc_history: Vec<f64>,
    pub max_energy_drift: f64,
}

impl TrialResult {
    /// Drops per-household detail, keeping group totals.
    pub fn compact(mut self) -> Self {
        for run in [self.baseline.as_mut(), self.game.as_mut()]
            .into_iter()
            .flatten()
        {
            run.state.household_loads = Vec::new();
        }
        self
    }
}

/// Peak, energy, payments and generation cost of a state.
pub fn metrics(state: &GameState, s: &Scenario) -> ScenarioMetrics {
    let h = s.grid.slot_hours;
    let peak_demand = state
        .aggregate
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    let total_energy = state.aggregate.iter().sum::<f64>() * h;
    let total_payments = state
        .aggregate
        .iter()
        .zip(&state.prices.price)
        .map(|(l, p)| l * p * h)
        .sum();
    let generation_cost = total_cost(&s.gen, &state.plan.g);
    ScenarioMetrics {
        peak_demand,
        total_energy,
        total_payments,
        generation_cost,
    }
}

fn scenario_run(game: &Game, state: GameState) -> ScenarioRun {
    let s = game.scenario;
    let n = s.slot_count();
    let mut group_loads = vec![vec![0.0; n]; s.groups.len()];
    for (user, loads) in game.users.iter().zip(&state.household_loads) {
        for (acc, x) in group_loads[user.group].iter_mut().zip(loads) {
            *acc += x;
        }
    }
    let mut bev_load = vec![0.0; n];
    for (agent, sched) in game.agents.iter().zip(&state.bev_schedules) {
        for (t, acc) in bev_load.iter_mut().enumerate() {
            *acc += sched.power(t, agent.spec.rated_kw);
        }
    }
    let metrics = metrics(&state, s);
    ScenarioRun {
        state,
        group_loads,
        bev_load,
        metrics,
    }
}

/// Samples the trial's vehicles.
pub fn trial_agents(s: &Scenario, trial: usize, mode: Mode) -> Result<Vec<BevAgent>> {
    (0..s.bev_count)
        .map(|i| {
            let mut agent = build_agent(i, s, trial)?;
            if !mode.allows_discharge() {
                agent.t_max = agent.t_req;
            }
            Ok(agent)
        })
        .collect()
}

/// Runs one Monte Carlo trial: samples vehicles, evaluates the baseline and
/// plays the game, as selected by `mode`.
pub fn run_trial(s: &Scenario, trial: usize, mode: Mode) -> Result<TrialResult> {
    let wrap = |e: Error| Error::Trial {
        trial,
        source: Box::new(e),
    };
    let agents = trial_agents(s, trial, mode).map_err(wrap)?;
    let game = Game::new(s, agents);

    let baseline = if mode.runs_baseline() {
        Some(scenario_run(&game, game.baseline_state().map_err(wrap)?))
    } else {
        None
    };

    let (run, converged, rounds, history, drift) = if mode.runs_game() {
        let outcome = game
            .initial_state()
            .and_then(|init| game.play(init))
            .map_err(wrap)?;
        let rounds = outcome.state.round;
        (
            Some(scenario_run(&game, outcome.state)),
            outcome.converged,
            rounds,
            outcome.u_rc_history,
            outcome.max_energy_drift,
        )
    } else {
        (None, true, 0, Vec::new(), 0.0)
    };

    Ok(TrialResult {
        trial,
        agents_t_req: game.agents.iter().map(|a| a.t_req).collect(),
        agents: game.agents,
        baseline,
        game: run,
        converged,
        rounds,
        u_rc_history: history,
        max_energy_drift: drift,
    })
}

/// Runs trials `0..s.trials` on `workers` threads (0 = rayon default) and
/// returns compacted results in trial order.
pub fn run_trials(s: &Scenario, mode: Mode, workers: usize) -> Result<Vec<TrialResult>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::invalid(format!("thread pool: {e}")))?;
    let results: Vec<Result<TrialResult>> = pool.install(|| {
        (0..s.trials)
            .into_par_iter()
            .map(|trial| run_trial(s, trial, mode).map(TrialResult::compact))
            .collect()
    });
    results.into_iter().collect()
}
