//! Scenario runs, method comparison and timing.

use std::path::{Path, PathBuf};
use std::time::Instant;

use log::{info, warn};
use serde::Serialize;

use crate::control::{
    delta_h_gap, forward_backward_solve, neighbor_weighted_diagnostic, verify_minimizer,
    ControlSchedule, ControlSolution, SweepOptions, SweepStatus,
};
use crate::error::Result;
use crate::exact_chain::{monte_carlo_marginals, DEFAULT_STATE_CAP};
use crate::export::{self, TimingRow};
use crate::mdp::{
    evaluate_policy, simulate_policy, solve_bellman_with, MdpOptions, MdpSolution, Policy,
    SimulationReport, DEFAULT_MDP_CAP,
};
use crate::network::{ContactNetwork, RandomNetwork};
use crate::rng::stream;
use crate::scenario::Scenario;
use crate::transnn::{
    bound_report, linear_upper_bound, prob_trajectory, to_info, InfoState, ProbState,
};
use crate::CostParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Monte Carlo marginals of the exact chain plus the bound check.
    ExactChain,
    /// Uncontrolled TransNN trajectories and the linear bound.
    Transnn,
    Mdp,
    TransnnControl,
}

impl Method {
    pub const ALL: [Method; 4] = [
        Method::ExactChain,
        Method::Transnn,
        Method::Mdp,
        Method::TransnnControl,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::ExactChain => "exact_chain",
            Method::Transnn => "transnn",
            Method::Mdp => "mdp",
            Method::TransnnControl => "transnn_control",
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub methods: Vec<Method>,
    pub trials: u64,
    /// Replaces the scenario's seed.
    pub seed: Option<u64>,
    pub max_iters: usize,
    pub skip_mdp: bool,
    pub mdp_cap: usize,
    /// Closed-loop MDP traces kept in full.
    pub keep_traces: usize,
    /// Each method runs this many times; the median wall time is reported.
    pub repeats: usize,
    pub out_dir: Option<PathBuf>,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            methods: Method::ALL.to_vec(),
            trials: 100_000,
            seed: None,
            max_iters: SweepOptions::default().max_iters,
            skip_mdp: false,
            mdp_cap: DEFAULT_MDP_CAP,
            keep_traces: 1,
            repeats: 1,
            out_dir: None,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ExactChainSection {
    pub trials: u64,
    pub marginals: Vec<Vec<f64>>,
    /// Largest amount by which a Monte Carlo marginal exceeds the TransNN value.
    pub max_violation: f64,
    /// Cells more than 3 sigma above the TransNN value.
    pub violations: usize,
    /// Cells where the linear bound falls below the TransNN value.
    pub linear_violations: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct TransnnSection {
    pub p: Vec<ProbState>,
    /// `null` entries stand for `+inf`.
    pub s: Vec<InfoState>,
    pub linear_bound: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum MdpSection {
    Solved {
        /// Optimal expected cost from the initial condition.
        value: f64,
        trials: u64,
        simulated_mean_cost: f64,
        simulated_std_error: f64,
        /// Actions and states of the first simulated rollout.
        realized_actions: Vec<Vec<bool>>,
        realized_states: Vec<Vec<bool>>,
    },
    Skipped {
        reason: String,
    },
}

#[derive(Debug, Clone, Serialize)]
pub struct ControlSection {
    pub schedule: Vec<Vec<bool>>,
    pub j2: f64,
    pub status: SweepStatus,
    pub iterations: usize,
    pub p: Vec<ProbState>,
    pub s: Vec<InfoState>,
    pub adjoint: Vec<Vec<f64>>,
    pub delta_h: Vec<Vec<f64>>,
    pub sign_agreements: usize,
    pub boundary_mismatches: usize,
    pub rule_mismatches: usize,
    pub convexity_violations: usize,
    pub neighbor_weighted_gap: f64,
    pub neighbor_weighted_flips: usize,
    pub corner_hits: usize,
    /// Debug builds only: relative gap between `Delta H` and the difference
    /// of two full Hamiltonian evaluations.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta_h_check: Option<f64>,
    /// Exact expected cost of the open-loop schedule on the `2^n` chain.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exact_chain_cost: Option<f64>,
}

/// How the realized MDP actions relate to the TransNN schedule.
#[derive(Debug, Clone, Serialize)]
pub struct ActionComparison {
    pub mdp_actions: usize,
    pub transnn_actions: usize,
    /// MDP actions the TransNN schedule also takes.
    pub included: usize,
    /// `included / mdp_actions`, 1 when the MDP takes no action.
    pub inclusion_fraction: f64,
    pub first_step_agreement: bool,
    /// `[k][i]`: MDP vaccinated and TransNN did too (or MDP did not).
    pub covered: Vec<Vec<bool>>,
}

/// Optimal closed-loop cost against the exact cost of the open-loop TransNN
/// schedule. The first can never exceed the second; this is reported, not
/// enforced.
#[derive(Debug, Clone, Serialize)]
pub struct Dominance {
    pub mdp_value: f64,
    pub transnn_schedule_cost: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScenarioResult {
    pub scenario: String,
    pub n: usize,
    #[serde(rename = "T")]
    pub horizon: usize,
    pub beta: f64,
    pub c: f64,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exact_chain: Option<ExactChainSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub transnn: Option<TransnnSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mdp: Option<MdpSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub transnn_control: Option<ControlSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub comparison: Option<ActionComparison>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dominance: Option<Dominance>,
    pub warnings: Vec<String>,
    pub timing: Vec<TimingRow>,
}

impl ScenarioResult {
    pub fn seconds(&self, method: Method) -> Option<f64> {
        self.timing
            .iter()
            .find(|t| t.method == method.name())
            .map(|t| t.seconds)
    }

    /// The result without wall-clock fields.
    pub fn without_timing(&self) -> serde_json::Value {
        let mut v = serde_json::to_value(self).expect("result serializes");
        if let Some(obj) = v.as_object_mut() {
            obj.remove("timing");
        }
        v
    }
}

pub fn compare_actions(mdp_actions: &[Vec<bool>], schedule: &ControlSchedule) -> ActionComparison {
    let mut included = 0;
    let mut mdp_count = 0;
    let covered: Vec<Vec<bool>> = mdp_actions
        .iter()
        .zip(&schedule.u)
        .map(|(m, t)| {
            m.iter()
                .zip(t)
                .map(|(&a, &b)| {
                    if a {
                        mdp_count += 1;
                        included += usize::from(b);
                    }
                    !a || b
                })
                .collect()
        })
        .collect();
    ActionComparison {
        mdp_actions: mdp_count,
        transnn_actions: schedule.total_vaccinations(),
        included,
        inclusion_fraction: if mdp_count == 0 {
            1.0
        } else {
            included as f64 / mdp_count as f64
        },
        first_step_agreement: mdp_actions.first().map(|r| r.as_slice())
            == schedule.u.first().map(|r| r.as_slice()),
        covered,
    }
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, f64) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed().as_secs_f64().max(1e-9))
}

/// Runs `f` `repeats` times and returns the last output with the median time.
fn timed_median<T>(repeats: usize, mut f: impl FnMut() -> T) -> (T, f64) {
    let mut times = Vec::with_capacity(repeats.max(1));
    let mut out = None;
    for _ in 0..repeats.max(1) {
        let (o, secs) = timed(&mut f);
        times.push(secs);
        out = Some(o);
    }
    (out.expect("at least one run"), median(times))
}

/// Policy that applies the same action at step `k` in every state.
pub fn open_loop_policy(schedule: &ControlSchedule, n: usize) -> Policy {
    Policy {
        n,
        actions: (0..schedule.horizon())
            .map(|k| vec![schedule.action_index(k); 1 << n])
            .collect(),
    }
}

/// Full solver output for `solve-transnn`.
#[derive(Debug, Serialize)]
pub struct ControlReport<'a> {
    pub solution: &'a ControlSolution,
    pub verification: crate::control::VerificationReport,
    pub seconds: f64,
}

pub fn run_scenario(path: &Path, options: &RunOptions) -> Result<ScenarioResult> {
    let scenario = Scenario::load(path)?;
    let id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "scenario".into());
    run_loaded(&id, &scenario, options)
}

pub fn run_loaded(id: &str, scenario: &Scenario, options: &RunOptions) -> Result<ScenarioResult> {
    let net = &scenario.network;
    let params = &scenario.params;
    let seed = options.seed.unwrap_or(scenario.seed);
    let n = net.node_count();
    let horizon = net.horizon();
    let wants = |m: Method| options.methods.contains(&m);
    let mut result = ScenarioResult {
        scenario: id.to_string(),
        n,
        horizon,
        beta: params.beta,
        c: params.c,
        seed,
        exact_chain: None,
        transnn: None,
        mdp: None,
        transnn_control: None,
        comparison: None,
        dominance: None,
        warnings: Vec::new(),
        timing: Vec::new(),
    };
    let record = |result: &mut ScenarioResult, m: Method, seconds: f64| {
        info!("{} finished in {seconds:.6} s", m.name());
        result.timing.push(TimingRow {
            method: m.name().into(),
            n,
            horizon,
            seconds,
        });
    };

    if wants(Method::ExactChain) {
        let (marginals, secs) = timed_median(options.repeats, || {
            monte_carlo_marginals(net, &scenario.initial, options.trials, seed)
        });
        let marginals = marginals?;
        record(&mut result, Method::ExactChain, secs);
        let report = bound_report(net, &scenario.initial, &marginals)?;
        if !report.holds() {
            result.warnings.push(format!(
                "upper bound crossed beyond 3 sigma in {} cells (linear: {})",
                report.violations, report.linear_violations
            ));
        }
        result.exact_chain = Some(ExactChainSection {
            trials: marginals.trials,
            marginals: marginals.freq,
            max_violation: report.max_violation,
            violations: report.violations,
            linear_violations: report.linear_violations,
        });
    }

    if wants(Method::Transnn) {
        let (p, secs) = timed_median(options.repeats, || prob_trajectory(net, &scenario.initial));
        let p = p?;
        record(&mut result, Method::Transnn, secs);
        let linear_bound = (0..=horizon)
            .map(|k| linear_upper_bound(net, &scenario.initial, k))
            .collect::<Result<Vec<_>>>()?;
        result.transnn = Some(TransnnSection {
            s: p.iter().map(to_info).collect(),
            p,
            linear_bound,
        });
    }

    let mut mdp_solution: Option<MdpSolution> = None;
    let mut mdp_sim: Option<SimulationReport> = None;
    if wants(Method::Mdp) {
        if options.skip_mdp {
            result.mdp = Some(MdpSection::Skipped {
                reason: "skipped on request".into(),
            });
        } else if n > options.mdp_cap {
            result.mdp = Some(MdpSection::Skipped {
                reason: format!("n = {n} exceeds the MDP cap of {}", options.mdp_cap),
            });
        } else {
            let mdp_options = MdpOptions {
                cap: options.mdp_cap,
                parallel: false,
            };
            let (sol, secs) = timed_median(options.repeats, || {
                solve_bellman_with(net, params, &mdp_options)
            });
            let sol = sol?;
            record(&mut result, Method::Mdp, secs);
            let sim = simulate_policy(
                net,
                params,
                &sol.policy,
                &scenario.initial,
                options.trials,
                options.keep_traces.max(1),
                seed,
            )?;
            let first = &sim.traces[0];
            result.mdp = Some(MdpSection::Solved {
                value: sol.values.expected_initial(&scenario.initial),
                trials: sim.trials,
                simulated_mean_cost: sim.mean_cost,
                simulated_std_error: sim.std_error,
                realized_actions: first.actions.iter().map(|u| u.bits().to_vec()).collect(),
                realized_states: first.states.iter().map(|x| x.bits().to_vec()).collect(),
            });
            mdp_solution = Some(sol);
            mdp_sim = Some(sim);
        }
    }

    let mut control: Option<ControlSolution> = None;
    if wants(Method::TransnnControl) {
        let sweep = SweepOptions {
            max_iters: options.max_iters,
        };
        let (sol, secs) = timed_median(options.repeats, || {
            forward_backward_solve(net, params, &scenario.initial, &sweep)
        });
        let sol = sol?;
        record(&mut result, Method::TransnnControl, secs);
        if sol.status != SweepStatus::Converged {
            result.warnings.push(format!(
                "forward-backward sweep did not converge ({:?} after {} iterations)",
                sol.status, sol.iterations
            ));
        }
        if sol.corner_hits > 0 {
            result.warnings.push(format!(
                "{} adjoint terms evaluated at w = 1, s = +inf (derivative taken as 0)",
                sol.corner_hits
            ));
        }
        let (neighbor_weighted_gap, neighbor_weighted_flips) =
            neighbor_weighted_diagnostic(&sol, net, params);
        let verification = verify_minimizer(&sol.s, &sol.adjoint, &sol.schedule, net, params);
        let delta_h_check = cfg!(debug_assertions).then(|| delta_h_gap(&sol, net, params));
        if let Some(gap) = delta_h_check {
            debug_assert!(
                gap <= 1e-9,
                "Delta H departs from the Hamiltonian difference by {gap:e}"
            );
        }
        let exact_chain_cost = (n <= options.mdp_cap.min(DEFAULT_STATE_CAP))
            .then(|| {
                evaluate_policy(net, params, &open_loop_policy(&sol.schedule, n))
                    .map(|v| v.expected_initial(&scenario.initial))
            })
            .transpose()?;
        result.transnn_control = Some(ControlSection {
            schedule: sol.schedule.u.clone(),
            j2: sol.j2,
            status: sol.status,
            iterations: sol.iterations,
            p: sol.p.clone(),
            s: sol.s.clone(),
            adjoint: sol.adjoint.lambda.clone(),
            delta_h: sol.delta_h.clone(),
            sign_agreements: verification.agreeing,
            boundary_mismatches: verification.boundary_mismatches,
            rule_mismatches: verification.rule_mismatches,
            convexity_violations: verification.convexity_violations,
            neighbor_weighted_gap,
            neighbor_weighted_flips,
            corner_hits: sol.corner_hits,
            delta_h_check,
            exact_chain_cost,
        });
        if let Some(dir) = &options.out_dir {
            std::fs::create_dir_all(dir).map_err(|source| crate::Error::Io {
                path: dir.clone(),
                source,
            })?;
            export::write_json_file(
                &dir.join("control.json"),
                &ControlReport {
                    solution: &sol,
                    verification,
                    seconds: secs,
                },
            )?;
        }
        control = Some(sol);
    }

    if let (
        Some(MdpSection::Solved {
            realized_actions, ..
        }),
        Some(sol),
    ) = (&result.mdp, &control)
    {
        result.comparison = Some(compare_actions(realized_actions, &sol.schedule));
    }
    if let (Some(MdpSection::Solved { value, .. }), Some(cost)) = (
        &result.mdp,
        result
            .transnn_control
            .as_ref()
            .and_then(|c| c.exact_chain_cost),
    ) {
        let dominance = Dominance {
            mdp_value: *value,
            transnn_schedule_cost: cost,
            holds: *value <= cost + 1e-9 * cost.abs().max(1.0),
        };
        if !dominance.holds {
            result.warnings.push(format!(
                "optimal MDP cost {value:.6} exceeds the TransNN schedule cost {cost:.6}"
            ));
        }
        result.dominance = Some(dominance);
    }

    for w in &result.warnings {
        warn!("{w}");
    }

    if let Some(dir) = &options.out_dir {
        write_artifacts(dir, &result, mdp_solution.as_ref(), mdp_sim.as_ref())?;
    }
    Ok(result)
}

fn write_artifacts(
    dir: &Path,
    result: &ScenarioResult,
    mdp: Option<&MdpSolution>,
    sim: Option<&SimulationReport>,
) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|source| crate::Error::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    export::write_json_file(&dir.join("result.json"), result)?;
    export::write_timing_file(&dir.join("timing.csv"), &result.timing)?;
    if let Some(ec) = &result.exact_chain {
        export::write_series_file(&dir.join("marginals.csv"), &ec.marginals)?;
    }
    if let Some(t) = &result.transnn {
        let p: Vec<Vec<f64>> = t.p.iter().map(|p| p.as_slice().to_vec()).collect();
        let s: Vec<Vec<f64>> = t.s.iter().map(|s| s.as_slice().to_vec()).collect();
        export::write_series_file(&dir.join("transnn_p.csv"), &p)?;
        export::write_series_file(&dir.join("transnn_s.csv"), &s)?;
        export::write_series_file(&dir.join("linear_bound.csv"), &t.linear_bound)?;
    }
    if let (Some(sol), Some(sim)) = (mdp, sim) {
        export::write_json_file(
            &dir.join("mdp_tables.json"),
            &export::mdp_tables(&sol.values, &sol.policy),
        )?;
        export::write_traces_file(&dir.join("traces.csv"), &sim.traces)?;
    }
    if let Some(MdpSection::Solved {
        realized_actions, ..
    }) = &result.mdp
    {
        export::write_actions_file(&dir.join("actions_mdp.csv"), realized_actions)?;
    }
    if let Some(c) = &result.transnn_control {
        export::write_actions_file(&dir.join("actions_transnn_control.csv"), &c.schedule)?;
        let p: Vec<Vec<f64>> = c.p.iter().map(|p| p.as_slice().to_vec()).collect();
        let s: Vec<Vec<f64>> = c.s.iter().map(|s| s.as_slice().to_vec()).collect();
        export::write_series_file(&dir.join("control_p.csv"), &p)?;
        export::write_series_file(&dir.join("control_s.csv"), &s)?;
        export::write_series_file(&dir.join("adjoint.csv"), &c.adjoint)?;
        export::write_series_file(&dir.join("delta_h.csv"), &c.delta_h)?;
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub sizes: Vec<usize>,
    pub horizons: Vec<usize>,
    pub repeats: usize,
    pub seed: u64,
    pub beta: f64,
    pub c: f64,
    pub mdp_cap: usize,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            sizes: vec![2, 3, 4, 5, 6],
            horizons: vec![10],
            repeats: 3,
            seed: 0,
            beta: 0.3,
            c: 100.0,
            mdp_cap: 8,
        }
    }
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let m = xs.len() / 2;
    if xs.len() % 2 == 1 {
        xs[m]
    } else {
        0.5 * (xs[m - 1] + xs[m])
    }
}

/// Workload used by [`benchmark`]: a seeded random network with the first and
/// last node infected.
pub fn bench_instance(n: usize, horizon: usize, seed: u64) -> Result<(ContactNetwork, ProbState)> {
    let net = RandomNetwork {
        nodes: n,
        horizon,
        ..Default::default()
    }
    .generate(&mut stream(seed, n as u64))?;
    let mut p0 = vec![0.0; n];
    p0[0] = 1.0;
    p0[n - 1] = 1.0;
    Ok((net, ProbState::new(p0)?))
}

/// Median wall-clock seconds per `(method, n, T)`.
pub fn benchmark(config: &BenchConfig) -> Result<Vec<TimingRow>> {
    let mut rows = Vec::new();
    let repeats = config.repeats.max(1);
    for &n in &config.sizes {
        for &horizon in &config.horizons {
            let (net, p0) = bench_instance(n, horizon, config.seed)?;
            let params = CostParams::new(config.c, config.beta, horizon)?;
            if n <= config.mdp_cap {
                let opts = MdpOptions {
                    cap: config.mdp_cap,
                    parallel: false,
                };
                let mut times = Vec::with_capacity(repeats);
                for _ in 0..repeats {
                    let (r, secs) = timed(|| solve_bellman_with(&net, &params, &opts));
                    r?;
                    times.push(secs);
                }
                rows.push(TimingRow {
                    method: Method::Mdp.name().into(),
                    n,
                    horizon,
                    seconds: median(times),
                });
            }
            let mut times = Vec::with_capacity(repeats);
            for _ in 0..repeats {
                let (r, secs) =
                    timed(|| forward_backward_solve(&net, &params, &p0, &SweepOptions::default()));
                r?;
                times.push(secs);
            }
            rows.push(TimingRow {
                method: Method::TransnnControl.name().into(),
                n,
                horizon,
                seconds: median(times),
            });
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn comparison_of_empty_tables_is_vacuous() {
        let c = compare_actions(&vec![vec![false; 3]; 2], &ControlSchedule::zeros(3, 2));
        assert_eq!(c.inclusion_fraction, 1.0);
        assert!(c.first_step_agreement);
        assert_eq!(c.mdp_actions, 0);
    }

    #[test]
    fn comparison_counts_inclusion() {
        let mdp = vec![vec![true, false], vec![true, true]];
        let sched = ControlSchedule {
            u: vec![vec![true, true], vec![false, true]],
        };
        let c = compare_actions(&mdp, &sched);
        assert_eq!(c.mdp_actions, 3);
        assert_eq!(c.included, 2);
        assert!((c.inclusion_fraction - 2.0 / 3.0).abs() < 1e-15);
        assert!(!c.first_step_agreement);
        assert_eq!(c.covered, vec![vec![true, true], vec![false, true]]);
    }

    #[test]
    fn median_of_even_and_odd() {
        assert_eq!(median(vec![3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(vec![4.0, 1.0, 2.0, 3.0]), 2.5);
    }

    #[test]
    fn bench_smoke() {
        let rows = benchmark(&BenchConfig {
            sizes: vec![2, 3],
            horizons: vec![2, 4],
            repeats: 1,
            ..Default::default()
        })
        .unwrap();
        assert_eq!(rows.len(), 8);
        assert!(rows.iter().all(|r| r.seconds > 0.0));
    }
}
