//! Finite-horizon vaccination MDP on the exact `2^n`-state chain.
//!
//! Vaccinating node `i` at step `k` multiplies every transmission probability
//! into `i` by `beta`. The stage cost is `c * (infected count) + (vaccinated
//! count)` and the terminal value is zero. Actions use the same bit encoding
//! as configurations.

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact_chain::{
    config_probability, infection_probs_index, sample_initial, sample_next_state_scaled,
    BinaryState, ConditionalDistribution,
};
use crate::network::{check_probability, ContactNetwork};
use crate::rng::{par_batches, SimRng};
use crate::transnn::ProbState;

/// Default node cap for the Bellman solver (`4^n` actions-by-states per stage,
/// `2^n` successors each).
pub const DEFAULT_MDP_CAP: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CostParams {
    /// Cost per infected node per step.
    pub c: f64,
    /// Factor applied to a vaccinated node's incoming transmission probabilities.
    pub beta: f64,
    pub horizon: usize,
}

impl CostParams {
    pub fn new(c: f64, beta: f64, horizon: usize) -> Result<Self> {
        if !c.is_finite() || c < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "c = {c} must be finite and nonnegative"
            )));
        }
        check_probability(beta, || "beta".to_string())?;
        if horizon == 0 {
            return Err(Error::InvalidParameter("T must be at least 1".into()));
        }
        Ok(CostParams { c, beta, horizon })
    }

    /// Multiplier on node `i`'s incoming weights under its action bit.
    pub fn row_factor(&self, vaccinated: bool) -> f64 {
        if vaccinated {
            self.beta
        } else {
            1.0
        }
    }
}

/// Vaccination decision per node, encoded like [`BinaryState`].
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ControlAction(BinaryState);

impl ControlAction {
    pub fn new(bits: Vec<bool>) -> Self {
        ControlAction(BinaryState::new(bits))
    }

    pub fn none(n: usize) -> Self {
        ControlAction(BinaryState::healthy(n))
    }

    pub fn from_index(index: usize, n: usize) -> Self {
        ControlAction(BinaryState::from_index(index, n))
    }

    pub fn index(&self) -> usize {
        self.0.index()
    }

    pub fn is_vaccinated(&self, i: usize) -> bool {
        self.0.is_infected(i)
    }

    pub fn bits(&self) -> &[bool] {
        self.0.bits()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn vaccinated_count(&self) -> usize {
        self.0.infected_count()
    }
}

/// Controlled transmission probability `u w beta + (1 - u) w`.
pub fn controlled_prob(w: f64, vaccinated: bool, beta: f64) -> f64 {
    if vaccinated {
        w * beta
    } else {
        w
    }
}

pub fn stage_cost(x: &BinaryState, u: &ControlAction, c: f64) -> f64 {
    c * x.infected_count() as f64 + u.vaccinated_count() as f64
}

fn stage_cost_index(x: usize, u: usize, c: f64) -> f64 {
    c * f64::from(x.count_ones()) + f64::from(u.count_ones())
}

fn check_dims(net: &ContactNetwork, k: usize, lens: &[usize]) -> Result<()> {
    if k >= net.horizon() {
        return Err(Error::IndexOutOfRange {
            what: "time",
            index: k,
            size: net.horizon(),
        });
    }
    if let Some(len) = lens.iter().find(|&&l| l != net.node_count()) {
        return Err(Error::Dimension(format!(
            "vector has {len} entries, network has {} nodes",
            net.node_count()
        )));
    }
    Ok(())
}

/// Conditional infection probabilities under action `u`.
pub fn controlled_infection_probs(
    x: &BinaryState,
    u: &ControlAction,
    net: &ContactNetwork,
    k: usize,
    params: &CostParams,
) -> Result<ConditionalDistribution> {
    check_dims(net, k, &[x.len(), u.len()])?;
    let rho = (0..net.node_count())
        .map(|i| {
            let healthy: f64 = net
                .in_links(k, i)
                .iter()
                .filter(|l| x.is_infected(l.node))
                .map(|l| 1.0 - controlled_prob(l.weight, u.is_vaccinated(i), params.beta))
                .product();
            1.0 - healthy
        })
        .collect();
    Ok(ConditionalDistribution { rho })
}

/// `Pr(X(k+1) = q | X(k) = x, u(k) = u)`.
pub fn controlled_transition_probability(
    x: &BinaryState,
    q: &BinaryState,
    u: &ControlAction,
    net: &ContactNetwork,
    k: usize,
    params: &CostParams,
) -> Result<f64> {
    check_dims(net, k, &[q.len()])?;
    Ok(controlled_infection_probs(x, u, net, k, params)?.probability_of(q))
}

/// `V_k(x)` for `k = 0..=T`, indexed `[k][x]`. `V_T = 0`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValueTable {
    pub n: usize,
    pub values: Vec<Vec<f64>>,
}

impl ValueTable {
    pub fn get(&self, k: usize, x: usize) -> f64 {
        self.values[k][x]
    }

    pub fn horizon(&self) -> usize {
        self.values.len() - 1
    }

    /// `E V_0(X(0))` for independent Bernoulli initial infections.
    pub fn expected_initial(&self, initial: &ProbState) -> f64 {
        self.values[0]
            .iter()
            .enumerate()
            .map(|(x, &v)| config_probability(initial.as_slice(), x) * v)
            .sum()
    }
}

/// Feedback policy: action index per `(k, state index)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Policy {
    pub n: usize,
    pub actions: Vec<Vec<usize>>,
}

impl Policy {
    pub fn action(&self, k: usize, x: usize) -> usize {
        self.actions[k][x]
    }

    pub fn horizon(&self) -> usize {
        self.actions.len()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct MdpOptions {
    pub cap: usize,
    /// Spread Bellman backups of one stage across the rayon pool.
    pub parallel: bool,
}

impl Default for MdpOptions {
    fn default() -> Self {
        MdpOptions {
            cap: DEFAULT_MDP_CAP,
            parallel: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MdpSolution {
    pub values: ValueTable,
    pub policy: Policy,
}

fn check_mdp(net: &ContactNetwork, params: &CostParams, cap: usize) -> Result<()> {
    let n = net.node_count();
    if n > cap || n >= 31 {
        return Err(Error::CapExceeded {
            what: "MDP solver",
            n,
            cap,
        });
    }
    if params.horizon != net.horizon() {
        return Err(Error::Dimension(format!(
            "cost horizon {} differs from network horizon {}",
            params.horizon,
            net.horizon()
        )));
    }
    Ok(())
}

/// `sum_q Pr(q | x, u) next[q]` with successor probabilities from the
/// product formula.
fn expected_next(
    net: &ContactNetwork,
    k: usize,
    params: &CostParams,
    x: usize,
    u: usize,
    next: &[f64],
    rho: &mut [f64],
) -> f64 {
    infection_probs_index(net, k, x, |i| params.row_factor(u >> i & 1 == 1), rho);
    next.iter()
        .enumerate()
        .map(|(q, &v)| config_probability(rho, q) * v)
        .sum()
}

/// Minimizing action and value at one state; ties go to the lowest action index.
fn backup(
    net: &ContactNetwork,
    k: usize,
    params: &CostParams,
    x: usize,
    next: &[f64],
) -> (usize, f64) {
    let n = net.node_count();
    let mut rho = vec![0.0; n];
    let mut best = (0, f64::INFINITY);
    for u in 0..1usize << n {
        let q =
            stage_cost_index(x, u, params.c) + expected_next(net, k, params, x, u, next, &mut rho);
        if q < best.1 {
            best = (u, q);
        }
    }
    best
}

/// Backward dynamic programming over all configurations and actions.
pub fn solve_bellman(net: &ContactNetwork, params: &CostParams) -> Result<MdpSolution> {
    solve_bellman_with(net, params, &MdpOptions::default())
}

pub fn solve_bellman_with(
    net: &ContactNetwork,
    params: &CostParams,
    options: &MdpOptions,
) -> Result<MdpSolution> {
    use rayon::prelude::*;
    check_mdp(net, params, options.cap)?;
    let n = net.node_count();
    let size = 1usize << n;
    let horizon = net.horizon();
    let mut values = vec![vec![0.0; size]; horizon + 1];
    let mut actions = vec![vec![0usize; size]; horizon];
    for k in (0..horizon).rev() {
        let next = &values[k + 1];
        let stage: Vec<(usize, f64)> = if options.parallel {
            (0..size)
                .into_par_iter()
                .map(|x| backup(net, k, params, x, next))
                .collect()
        } else {
            (0..size).map(|x| backup(net, k, params, x, next)).collect()
        };
        for (x, (u, v)) in stage.into_iter().enumerate() {
            actions[k][x] = u;
            values[k][x] = v;
        }
    }
    Ok(MdpSolution {
        values: ValueTable { n, values },
        policy: Policy { n, actions },
    })
}

/// Exact expected cost-to-go of a fixed feedback policy.
pub fn evaluate_policy(
    net: &ContactNetwork,
    params: &CostParams,
    policy: &Policy,
) -> Result<ValueTable> {
    check_mdp(net, params, usize::MAX)?;
    if policy.n != net.node_count() || policy.horizon() != net.horizon() {
        return Err(Error::Dimension("policy does not match the network".into()));
    }
    let n = net.node_count();
    let size = 1usize << n;
    let horizon = net.horizon();
    let mut values = vec![vec![0.0; size]; horizon + 1];
    let mut rho = vec![0.0; n];
    for k in (0..horizon).rev() {
        for x in 0..size {
            let u = policy.action(k, x);
            values[k][x] = stage_cost_index(x, u, params.c)
                + expected_next(net, k, params, x, u, &values[k + 1], &mut rho);
        }
    }
    Ok(ValueTable { n, values })
}

/// One closed-loop rollout: `states[0..=T]`, `actions[0..T]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PolicyTrace {
    pub trial: u64,
    pub states: Vec<BinaryState>,
    pub actions: Vec<ControlAction>,
    pub cost: f64,
}

impl Serialize for ControlAction {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.0.serialize(s)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SimulationReport {
    pub trials: u64,
    pub mean_cost: f64,
    pub std_error: f64,
    /// Total cost of every trial, in trial order.
    #[serde(skip)]
    pub costs: Vec<f64>,
    /// Full traces of the first few trials.
    pub traces: Vec<PolicyTrace>,
}

fn rollout<R: Rng + ?Sized>(
    net: &ContactNetwork,
    params: &CostParams,
    policy: &Policy,
    initial: &ProbState,
    trial: u64,
    rng: &mut R,
) -> PolicyTrace {
    let n = net.node_count();
    let mut x = sample_initial(initial, rng);
    let mut states = Vec::with_capacity(net.horizon() + 1);
    let mut actions = Vec::with_capacity(net.horizon());
    let mut cost = 0.0;
    for k in 0..net.horizon() {
        let u = ControlAction::from_index(policy.action(k, x.index()), n);
        cost += stage_cost(&x, &u, params.c);
        let next =
            sample_next_state_scaled(&x, net, k, |i| params.row_factor(u.is_vaccinated(i)), rng);
        states.push(std::mem::replace(&mut x, next));
        actions.push(u);
    }
    states.push(x);
    PolicyTrace {
        trial,
        states,
        actions,
        cost,
    }
}

/// Monte Carlo rollouts of `policy` on the exact chain. Traces of the first
/// `keep_traces` trials are returned in full.
pub fn simulate_policy(
    net: &ContactNetwork,
    params: &CostParams,
    policy: &Policy,
    initial: &ProbState,
    trials: u64,
    keep_traces: usize,
    seed: u64,
) -> Result<SimulationReport> {
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be at least 1".into()));
    }
    if initial.len() != net.node_count()
        || policy.n != net.node_count()
        || policy.horizon() != net.horizon()
    {
        return Err(Error::Dimension(
            "policy or initial state does not match the network".into(),
        ));
    }
    let batches = par_batches(seed, trials, |rng: &mut SimRng, range| {
        range
            .map(|t| {
                let trace = rollout(net, params, policy, initial, t, rng);
                let keep = (t as usize) < keep_traces;
                (trace.cost, keep.then_some(trace))
            })
            .collect::<Vec<_>>()
    });
    let mut costs = Vec::with_capacity(trials as usize);
    let mut traces = Vec::new();
    for (cost, trace) in batches.into_iter().flatten() {
        costs.push(cost);
        traces.extend(trace);
    }
    let mean = costs.iter().sum::<f64>() / trials as f64;
    let var = if trials > 1 {
        costs.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (trials - 1) as f64
    } else {
        0.0
    };
    Ok(SimulationReport {
        trials,
        mean_cost: mean,
        std_error: (var / trials as f64).sqrt(),
        costs,
        traces,
    })
}
