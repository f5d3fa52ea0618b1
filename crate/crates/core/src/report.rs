//! Cross-trial statistics and output files.
//!
//! Output files are written with deterministic formatting (shortest
//! round-trip float representation, fixed column and key order), so
//! identical inputs give byte-identical files.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::engine::{Mode, ScenarioMetrics, ScenarioRun, TrialResult};
use crate::error::{Error, Result};
use crate::pricing::flat_price;
use crate::scenario::{nominal_aggregate, Scenario};

/// Mean metrics over trials for one scenario.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioSummary {
    pub peak_demand: f64,
    pub total_energy: f64,
    pub total_payments: f64,
    pub generation_cost: f64,
    /// Trials in which payments did not exceed generation cost.
    pub margin_violations: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HourStats {
    /// 1-based hour label; hour `h` is slot `h - 1`.
    pub hour: usize,
    pub mean_g: f64,
    pub std_g: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceSummary {
    pub converged_trials: usize,
    pub rate: f64,
    pub mean_rounds: f64,
    pub max_rounds_used: usize,
    pub non_converged: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    pub peak_reduction_pct: f64,
    pub payment_reduction_pct: f64,
    pub generation_cost_reduction_pct: f64,
    pub energy_difference_rel: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub trials: usize,
    pub baseline: Option<ScenarioSummary>,
    pub optimized: Option<ScenarioSummary>,
    pub comparison: Option<Comparison>,
    /// Generation statistics of the price-responsive scenario (or the
    /// baseline when only the baseline ran).
    pub hourly: Vec<HourStats>,
    pub convergence: ConvergenceSummary,
    /// Flat tariff at the mean nominal household load, per slot.
    pub price_conventional: Vec<f64>,
    pub price_baseline_mean: Option<Vec<f64>>,
    pub price_rtp_mean: Option<Vec<f64>>,
    /// Nominal household energy plus net BEV energy, averaged over trials.
    pub expected_energy: f64,
}

/// Sample mean and standard deviation (n - 1 denominator; 0 when n = 1).
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn mean_of(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    sum / n as f64
}

fn summarize(runs: &[(usize, &ScenarioRun)]) -> ScenarioSummary {
    let m = |f: fn(&ScenarioMetrics) -> f64| mean_of(runs.iter().map(|(_, r)| f(&r.metrics)));
    ScenarioSummary {
        peak_demand: m(|x| x.peak_demand),
        total_energy: m(|x| x.total_energy),
        total_payments: m(|x| x.total_payments),
        generation_cost: m(|x| x.generation_cost),
        margin_violations: runs
            .iter()
            .filter(|(_, r)| r.metrics.total_payments <= r.metrics.generation_cost)
            .map(|(t, _)| *t)
            .collect(),
    }
}

fn mean_vector<'a>(vs: impl Iterator<Item = &'a [f64]>, n: usize) -> Vec<f64> {
    let mut acc = vec![0.0; n];
    let mut count = 0usize;
    for v in vs {
        for (a, x) in acc.iter_mut().zip(v) {
            *a += x;
        }
        count += 1;
    }
    acc.iter().map(|a| a / count as f64).collect()
}

fn pct_drop(before: f64, after: f64) -> f64 {
    100.0 * (before - after) / before
}

/// Reduces trial results into cross-trial statistics.
pub fn aggregate_stats(results: &[TrialResult], s: &Scenario) -> Result<RunSummary> {
    if results.is_empty() {
        return Err(Error::NoResults);
    }
    let n = s.slot_count();
    let baseline_runs: Vec<_> = results
        .iter()
        .filter_map(|r| r.baseline.as_ref().map(|b| (r.trial, b)))
        .collect();
    let game_runs: Vec<_> = results
        .iter()
        .filter_map(|r| r.game.as_ref().map(|g| (r.trial, g)))
        .collect();

    let baseline = (!baseline_runs.is_empty()).then(|| summarize(&baseline_runs));
    let optimized = (!game_runs.is_empty()).then(|| summarize(&game_runs));
    let comparison = match (&baseline, &optimized) {
        (Some(b), Some(o)) => Some(Comparison {
            peak_reduction_pct: pct_drop(b.peak_demand, o.peak_demand),
            payment_reduction_pct: pct_drop(b.total_payments, o.total_payments),
            generation_cost_reduction_pct: pct_drop(b.generation_cost, o.generation_cost),
            energy_difference_rel: (o.total_energy - b.total_energy).abs() / b.total_energy,
        }),
        _ => None,
    };

    let primary = if game_runs.is_empty() {
        &baseline_runs
    } else {
        &game_runs
    };
    let hourly = (0..n)
        .map(|t| {
            let g: Vec<f64> = primary.iter().map(|(_, r)| r.state.plan.g[t]).collect();
            let (mean_g, std_g) = mean_std(&g);
            HourStats {
                hour: t + 1,
                mean_g,
                std_g,
            }
        })
        .collect();

    let converged: Vec<_> = results.iter().filter(|r| r.converged).collect();
    let convergence = ConvergenceSummary {
        converged_trials: converged.len(),
        rate: converged.len() as f64 / results.len() as f64,
        mean_rounds: mean_of(results.iter().map(|r| r.rounds as f64)),
        max_rounds_used: results.iter().map(|r| r.rounds).max().unwrap_or(0),
        non_converged: results
            .iter()
            .filter(|r| !r.converged)
            .map(|r| r.trial)
            .collect(),
    };

    let nominal = nominal_aggregate(s);
    let nominal_mean = nominal.iter().sum::<f64>() / n as f64;
    let price_conventional = flat_price(&s.gen, nominal_mean).price;

    let household_energy: f64 = nominal.iter().sum::<f64>() * s.grid.slot_hours;
    let expected_energy = household_energy
        + mean_of(results.iter().map(|r| {
            r.agents
                .iter()
                .map(|a| a.t_req as f64 * a.spec.rated_kw * s.grid.slot_hours)
                .sum()
        }));

    Ok(RunSummary {
        trials: results.len(),
        price_baseline_mean: (!baseline_runs.is_empty()).then(|| {
            mean_vector(
                baseline_runs.iter().map(|(_, r)| &r.state.prices.price[..]),
                n,
            )
        }),
        price_rtp_mean: (!game_runs.is_empty())
            .then(|| mean_vector(game_runs.iter().map(|(_, r)| &r.state.prices.price[..]), n)),
        baseline,
        optimized,
        comparison,
        hourly,
        convergence,
        price_conventional,
        expected_energy,
    })
}

#[derive(Serialize)]
struct SummaryFile<'a> {
    mode: &'a str,
    seed: u64,
    trials: usize,
    summary: &'a RunSummary,
    config: &'a Scenario,
}

fn fmt_row(out: &mut String, cells: &[f64]) {
    for (i, c) in cells.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        write!(out, "{c}").expect("write to string");
    }
    out.push('\n');
}

/// `loads.csv`: trial-mean profiles per hour for both scenarios.
pub fn loads_csv(summary: &RunSummary, results: &[TrialResult], s: &Scenario) -> String {
    let n = s.slot_count();
    let mut header = vec!["hour".to_string()];
    let mut columns: Vec<Vec<f64>> = Vec::new();

    let sides: [(&str, Vec<&ScenarioRun>); 2] = [
        (
            "before",
            results.iter().filter_map(|r| r.baseline.as_ref()).collect(),
        ),
        (
            "after",
            results.iter().filter_map(|r| r.game.as_ref()).collect(),
        ),
    ];
    for (gi, group) in s.groups.iter().enumerate() {
        for (side, runs) in &sides {
            if runs.is_empty() {
                continue;
            }
            header.push(format!("{}_{side}", group.name));
            columns.push(mean_vector(runs.iter().map(|r| &r.group_loads[gi][..]), n));
        }
    }
    for (label, pick) in [
        (
            "bev",
            (|r: &ScenarioRun| r.bev_load.clone()) as fn(&ScenarioRun) -> Vec<f64>,
        ),
        ("aggregate", |r| r.state.aggregate.clone()),
        ("generation", |r| r.state.plan.g.clone()),
        ("price", |r| r.state.prices.price.clone()),
    ] {
        for (side, runs) in &sides {
            if runs.is_empty() {
                continue;
            }
            header.push(format!("{label}_{side}"));
            let vs: Vec<Vec<f64>> = runs.iter().map(|r| pick(r)).collect();
            columns.push(mean_vector(vs.iter().map(|v| &v[..]), n));
        }
    }
    header.push("price_conventional".into());
    columns.push(summary.price_conventional.clone());

    let mut out = header.join(",");
    out.push('\n');
    for t in 0..n {
        let mut row = vec![(t + 1) as f64];
        row.extend(columns.iter().map(|c| c[t]));
        fmt_row(&mut out, &row);
    }
    out
}

/// `stats.csv`: per-hour mean and standard deviation of generation.
pub fn stats_csv(summary: &RunSummary) -> String {
    let mut out = String::from("hour,mean_g,std_g\n");
    for h in &summary.hourly {
        fmt_row(&mut out, &[h.hour as f64, h.mean_g, h.std_g]);
    }
    out
}

/// `summary.json`: headline comparison, convergence and the resolved config.
pub fn summary_json(summary: &RunSummary, s: &Scenario, mode: Mode) -> Result<String> {
    let file = SummaryFile {
        mode: mode.as_str(),
        seed: s.seed,
        trials: summary.trials,
        summary,
        config: s,
    };
    Ok(serde_json::to_string_pretty(&file)? + "\n")
}

/// Writes `loads.csv`, `stats.csv` and `summary.json` into `out_dir`.
pub fn emit_outputs(
    summary: &RunSummary,
    results: &[TrialResult],
    s: &Scenario,
    mode: Mode,
    out_dir: &Path,
) -> Result<()> {
    if results.is_empty() {
        return Err(Error::NoResults);
    }
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let write = |name: &str, body: String| {
        let path = out_dir.join(name);
        fs::write(&path, body).map_err(|e| Error::io(&path, e))
    };
    write("loads.csv", loads_csv(summary, results, s))?;
    write("stats.csv", stats_csv(summary))?;
    write("summary.json", summary_json(summary, s, mode)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{run_trials, GameState};
    use crate::pricing::{GenerationPlan, PriceProfile};
    use crate::scenario::default_scenario;

    fn small() -> Scenario {
        let mut s = default_scenario();
        for (g, count) in s.groups.iter_mut().zip([10, 10, 10]) {
            g.count = count;
        }
        s.bev_count = 3;
        s.trials = 3;
        s
    }

    #[test]
    fn flat_load_metrics() {
        let mut s = default_scenario();
        s.gen.c = vec![0.0; 24];
        let state = GameState {
            household_loads: vec![],
            bev_schedules: vec![],
            aggregate: vec![1.0; 24],
            plan: GenerationPlan {
                g: vec![1.0; 24],
                g_bar: 1.0,
                u_rc: 0.0,
            },
            prices: PriceProfile::new(vec![2.0; 24]),
            round: 0,
        };
        let m = crate::engine::metrics(&state, &s);
        assert_eq!(m.total_energy, 24.0);
        assert_eq!(m.total_payments, 48.0);
        assert_eq!(m.peak_demand, 1.0);
        assert!((m.generation_cost - 24.0 * (0.005 + 0.2)).abs() < 1e-12);
    }

    #[test]
    fn sample_std_conventions() {
        assert_eq!(mean_std(&[3.0]), (3.0, 0.0));
        assert_eq!(mean_std(&[2.0, 2.0, 2.0]).1, 0.0);
        let (m, sd) = mean_std(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((sd - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn empty_results_are_an_error() {
        let s = small();
        assert!(matches!(aggregate_stats(&[], &s), Err(Error::NoResults)));
        let dir = tempfile::tempdir().unwrap();
        let summary = aggregate_stats(&run_trials(&s, Mode::Both, 1).unwrap(), &s).unwrap();
        let err = emit_outputs(&summary, &[], &s, Mode::Both, dir.path()).unwrap_err();
        assert!(matches!(err, Error::NoResults));
        assert!(!dir.path().join("loads.csv").exists());
    }

    #[test]
    fn identical_trials_have_zero_spread() {
        let s = small();
        let r = crate::engine::run_trial(&s, 0, Mode::Both)
            .unwrap()
            .compact();
        let summary = aggregate_stats(&[r.clone(), r.clone(), r], &s).unwrap();
        assert!(summary.hourly.iter().all(|h| h.std_g == 0.0));
    }

    #[test]
    fn energy_is_conserved_and_files_have_expected_shape() {
        let s = small();
        let results = run_trials(&s, Mode::Both, 1).unwrap();
        let summary = aggregate_stats(&results, &s).unwrap();
        let b = summary.baseline.as_ref().unwrap();
        let o = summary.optimized.as_ref().unwrap();
        assert!((b.total_energy - o.total_energy).abs() <= 1e-6 * b.total_energy);
        assert!((summary.expected_energy - b.total_energy).abs() <= 1e-6 * b.total_energy);

        let stats = stats_csv(&summary);
        assert_eq!(stats.lines().count(), 1 + 24);
        let loads = loads_csv(&summary, &results, &s);
        let header = loads.lines().next().unwrap();
        assert!(header.starts_with("hour,group1_before,group1_after"));
        assert!(header.ends_with("price_before,price_after,price_conventional"));
        assert_eq!(loads.lines().count(), 25);
        let json: serde_json::Value =
            serde_json::from_str(&summary_json(&summary, &s, Mode::Both).unwrap()).unwrap();
        assert_eq!(json["mode"], "both");
        assert_eq!(json["config"]["seed"], 42);
    }

    #[test]
    fn baseline_only_run_reports_baseline_generation() {
        let s = small();
        let results = run_trials(&s, Mode::Baseline, 1).unwrap();
        let summary = aggregate_stats(&results, &s).unwrap();
        assert!(summary.optimized.is_none() && summary.comparison.is_none());
        assert_eq!(summary.hourly.len(), 24);
        let header = loads_csv(&summary, &results, &s);
        assert!(!header.lines().next().unwrap().contains("_after"));
    }
}
