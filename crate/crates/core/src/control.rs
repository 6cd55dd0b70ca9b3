//! Vaccination control on the TransNN dynamics.
//!
//! The binary problem is relaxed to `u in [0, 1]^n` to form the Hamiltonian
//!
//! ```text
//! H(k) = sum_i [c (1 - e^{-s_i}) + u_i] + sum_i lambda_i(k+1) sum_{j in N_i} Psi(m_ij(u_i), s_j)
//! ```
//!
//! with `m_ij(u_i) = w_ij (u_i beta + 1 - u_i)`. The adjoint recursion runs
//! backwards from `lambda(T) = 0` and each node is switched on exactly when
//! doing so lowers the Hamiltonian (`Delta H_i(k) < 0`). A forward-backward
//! sweep iterates state, adjoint and switching passes to a fixed point.
//!
//! Only node `i`'s incoming row depends on `u_i`, so
//! `Delta H_i(k) = 1 - lambda_i(k+1) sum_{j in N_i} ln(healthy(beta w_ij, s_j) / healthy(w_ij, s_j))`
//! where `healthy(w, s) = 1 - w + w e^{-s}`.

use std::collections::HashMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::mdp::CostParams;
use crate::network::{ContactNetwork, Link};
use crate::transnn::{dpsi_dw, tlog_sigmoid, to_info, InfoState, ProbState, LOG_FLOOR};

/// Largest value a guarded TlogSigmoid term can take, `-ln(LOG_FLOOR)`.
fn psi_max() -> f64 {
    -LOG_FLOOR.ln()
}

fn psi_guarded(m: f64, s: f64) -> f64 {
    tlog_sigmoid(m, s).min(psi_max())
}

/// `ln(healthy(beta w, s) / healthy(w, s))` given `p = 1 - e^{-s}`, with
/// both healthy probabilities floored at `LOG_FLOOR`.
fn log_ratio(w: f64, p: f64, beta: f64) -> f64 {
    let a = w * p;
    let healthy = 1.0 - a;
    if healthy < LOG_FLOOR {
        (1.0 - beta * a).max(LOG_FLOOR).ln() - LOG_FLOOR.ln()
    } else {
        ((1.0 - beta) * a / healthy).ln_1p()
    }
}

/// `sum_{j in N_i} ln(healthy(beta w_ij, s_j) / healthy(w_ij, s_j))`, taking a
/// single logarithm of the product unless a floor is active.
fn summed_log_ratio(links: &[Link], p: impl Fn(usize) -> f64, beta: f64) -> f64 {
    let mut prod = 1.0;
    for l in links {
        let a = l.weight * p(l.node);
        let healthy = 1.0 - a;
        if healthy < LOG_FLOOR {
            return links
                .iter()
                .map(|l| log_ratio(l.weight, p(l.node), beta))
                .sum();
        }
        prod *= (1.0 - beta * a) / healthy;
    }
    prod.ln()
}

fn prob_of(s: f64) -> f64 {
    -(-s).exp_m1()
}

/// Open-loop vaccination schedule, `u[k][i]` for `k < T`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct ControlSchedule {
    pub u: Vec<Vec<bool>>,
}

impl ControlSchedule {
    pub fn zeros(n: usize, horizon: usize) -> Self {
        ControlSchedule {
            u: vec![vec![false; n]; horizon],
        }
    }

    pub fn horizon(&self) -> usize {
        self.u.len()
    }

    pub fn get(&self, k: usize, i: usize) -> bool {
        self.u[k][i]
    }

    /// Action index of step `k` (node `i` in bit `i`).
    pub fn action_index(&self, k: usize) -> usize {
        self.u[k]
            .iter()
            .enumerate()
            .fold(0, |acc, (i, &b)| acc | (usize::from(b) << i))
    }

    pub fn total_vaccinations(&self) -> usize {
        self.u.iter().flatten().filter(|&&b| b).count()
    }
}

/// Adjoint states `lambda[k][i]` for `k = 0..=T`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdjointState {
    pub lambda: Vec<Vec<f64>>,
}

fn check_inputs(net: &ContactNetwork, params: &CostParams, n: usize) -> Result<()> {
    if n != net.node_count() {
        return Err(Error::Dimension(format!(
            "state has {n} nodes, network has {}",
            net.node_count()
        )));
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

fn flatten(schedule: &ControlSchedule) -> Vec<bool> {
    schedule.u.concat()
}

/// Controlled forward pass on `p[k * n + i]`, `k = 0..=T`; row 0 must hold
/// the initial probabilities.
fn forward_into(net: &ContactNetwork, params: &CostParams, u: &[bool], p: &mut [f64]) {
    let n = net.node_count();
    for k in 0..net.horizon() {
        let (done, rest) = p.split_at_mut((k + 1) * n);
        let cur = &done[k * n..];
        for (i, out) in rest[..n].iter_mut().enumerate() {
            let f = params.row_factor(u[k * n + i]);
            let healthy: f64 = net
                .in_links(k, i)
                .iter()
                .map(|l| 1.0 - f * l.weight * cur[l.node])
                .product();
            *out = (1.0 - healthy).clamp(0.0, 1.0);
        }
    }
}

/// `dPsi/ds (m, s)` in terms of `p = 1 - e^{-s}`: `m (1 - p) / (1 - m p)`.
fn dpsi_ds_prob(m: f64, p: f64) -> f64 {
    if p == 1.0 || m == 0.0 {
        return 0.0;
    }
    if m == 1.0 {
        return 1.0;
    }
    m * (1.0 - p) / (1.0 - m * p)
}

/// Adjoint recursion on flat `[k * n + i]` buffers. Returns the number of
/// terms at the `(m = 1, p = 1)` corner.
fn adjoint_into(
    net: &ContactNetwork,
    params: &CostParams,
    p: &[f64],
    u: &[bool],
    lambda: &mut [f64],
) -> usize {
    let n = net.node_count();
    let horizon = net.horizon();
    lambda[horizon * n..].fill(0.0);
    let mut corner_hits = 0;
    for k in (0..horizon).rev() {
        let (head, tail) = lambda.split_at_mut((k + 1) * n);
        let next = &tail[..n];
        for i in 0..n {
            let pi = p[k * n + i];
            let mut acc = params.c * (1.0 - pi);
            for l in net.out_links(k, i) {
                let lam = next[l.node];
                if lam == 0.0 {
                    continue;
                }
                let m = params.row_factor(u[k * n + l.node]) * l.weight;
                if m == 1.0 && pi == 1.0 {
                    corner_hits += 1;
                }
                acc += lam * dpsi_ds_prob(m, pi);
            }
            head[k * n + i] = acc;
        }
    }
    corner_hits
}

fn delta_row_into(
    k: usize,
    p: &[f64],
    lambda_next: &[f64],
    net: &ContactNetwork,
    params: &CostParams,
    out: &mut [f64],
) {
    for (i, d) in out.iter_mut().enumerate() {
        let lam = lambda_next[i];
        *d = if lam == 0.0 {
            1.0
        } else {
            1.0 - lam * summed_log_ratio(net.in_links(k, i), |j| p[j], params.beta)
        };
    }
}

/// Forward pass in probability coordinates under a fixed schedule:
/// `p(0), ..., p(T)`.
pub fn controlled_prob_trajectory(
    net: &ContactNetwork,
    params: &CostParams,
    initial: &ProbState,
    schedule: &ControlSchedule,
) -> Result<Vec<ProbState>> {
    check_inputs(net, params, initial.len())?;
    if schedule.horizon() != net.horizon() {
        return Err(Error::Dimension(
            "schedule length differs from the horizon".into(),
        ));
    }
    let n = net.node_count();
    let mut p = vec![0.0; (net.horizon() + 1) * n];
    p[..n].copy_from_slice(initial.as_slice());
    forward_into(net, params, &flatten(schedule), &mut p);
    Ok(p.chunks(n.max(1))
        .take(net.horizon() + 1)
        .map(|row| ProbState::from_vec_unchecked(row.to_vec()))
        .collect())
}

/// Relaxed Hamiltonian at step `k` with `u` in `[0, 1]^n`.
pub fn hamiltonian_relaxed(
    k: usize,
    s: &[f64],
    u: &[f64],
    lambda_next: &[f64],
    net: &ContactNetwork,
    params: &CostParams,
) -> f64 {
    let mut h = 0.0;
    for i in 0..s.len() {
        h += params.c * -(-s[i]).exp_m1() + u[i];
    }
    for (i, &lam) in lambda_next.iter().enumerate() {
        if lam == 0.0 {
            continue;
        }
        let factor = u[i] * params.beta + 1.0 - u[i];
        let activation: f64 = net
            .in_links(k, i)
            .iter()
            .map(|l| psi_guarded(factor * l.weight, s[l.node]))
            .sum();
        h += lam * activation;
    }
    h
}

pub fn hamiltonian(
    k: usize,
    s: &InfoState,
    u: &[bool],
    lambda_next: &[f64],
    net: &ContactNetwork,
    params: &CostParams,
) -> f64 {
    let relaxed: Vec<f64> = u.iter().map(|&b| f64::from(u8::from(b))).collect();
    hamiltonian_relaxed(k, s.as_slice(), &relaxed, lambda_next, net, params)
}

/// `dPsi/ds` at the guarded corner `(w = 1, s = +inf)` is reported as 0;
/// the returned count says how many adjoint terms hit it.
pub fn adjoint_backward(
    s_traj: &[InfoState],
    schedule: &ControlSchedule,
    net: &ContactNetwork,
    params: &CostParams,
) -> Result<(AdjointState, usize)> {
    let horizon = net.horizon();
    if s_traj.len() != horizon + 1 || schedule.horizon() != horizon {
        return Err(Error::Dimension(
            "trajectory must have T + 1 states and the schedule T steps".into(),
        ));
    }
    let n = net.node_count();
    check_inputs(net, params, s_traj[0].len())?;
    let p: Vec<f64> = s_traj
        .iter()
        .flat_map(|s| s.as_slice().iter().map(|&v| prob_of(v)))
        .collect();
    let mut lambda = vec![0.0; (horizon + 1) * n];
    let corner_hits = adjoint_into(net, params, &p, &flatten(schedule), &mut lambda);
    let lambda = (0..=horizon)
        .map(|k| lambda[k * n..(k + 1) * n].to_vec())
        .collect();
    Ok((AdjointState { lambda }, corner_hits))
}

/// Hamiltonian change from switching node `i` on at step `k`.
pub fn delta_h(
    i: usize,
    k: usize,
    s: &InfoState,
    lambda_next: &[f64],
    net: &ContactNetwork,
    params: &CostParams,
) -> f64 {
    let lam = lambda_next[i];
    if lam == 0.0 {
        return 1.0;
    }
    let s = s.as_slice();
    1.0 - lam * summed_log_ratio(net.in_links(k, i), |j| prob_of(s[j]), params.beta)
}

/// [`delta_h`] for every node at step `k`.
pub fn delta_h_row(
    k: usize,
    s: &InfoState,
    lambda_next: &[f64],
    net: &ContactNetwork,
    params: &CostParams,
) -> Vec<f64> {
    let p: Vec<f64> = s.as_slice().iter().map(|&v| prob_of(v)).collect();
    let mut out = vec![0.0; p.len()];
    delta_row_into(k, &p, lambda_next, net, params, &mut out);
    out
}

/// The same expression with `lambda_j(k+1)` inside the sum over in-neighbours
/// `j`, kept only to measure how far it departs from [`delta_h`].
pub fn delta_h_neighbor_weighted(
    i: usize,
    k: usize,
    s: &InfoState,
    lambda_next: &[f64],
    net: &ContactNetwork,
    params: &CostParams,
) -> f64 {
    let s = s.as_slice();
    1.0 - net
        .in_links(k, i)
        .iter()
        .filter(|l| lambda_next[l.node] != 0.0)
        .map(|l| lambda_next[l.node] * log_ratio(l.weight, prob_of(s[l.node]), params.beta))
        .sum::<f64>()
}

/// Switching rule: vaccinate iff `Delta H_i(k) < 0`.
pub fn control_rule(
    s: &InfoState,
    lambda_next: &[f64],
    net: &ContactNetwork,
    params: &CostParams,
    k: usize,
) -> Vec<bool> {
    delta_h_row(k, s, lambda_next, net, params)
        .into_iter()
        .map(|d| d < 0.0)
        .collect()
}

/// `J2 = sum_{k<T} sum_i (c p_i(k) + u_i(k))`.
pub fn evaluate_j2(p_traj: &[ProbState], schedule: &ControlSchedule, params: &CostParams) -> f64 {
    (0..schedule.horizon())
        .map(|k| {
            p_traj[k]
                .as_slice()
                .iter()
                .map(|&p| params.c * p)
                .sum::<f64>()
                + schedule.u[k].iter().filter(|&&b| b).count() as f64
        })
        .sum()
}

/// `J2` from information states, `sum_k 1'(c (1 - e^{-s(k)}) + u(k))`.
pub fn evaluate_j2_info(
    s_traj: &[InfoState],
    schedule: &ControlSchedule,
    params: &CostParams,
) -> f64 {
    (0..schedule.horizon())
        .map(|k| {
            s_traj[k]
                .as_slice()
                .iter()
                .map(|&s| params.c * -(-s).exp_m1())
                .sum::<f64>()
                + schedule.u[k].iter().filter(|&&b| b).count() as f64
        })
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepStatus {
    /// The switching pass reproduced its input schedule.
    Converged,
    /// The sweep revisited an earlier schedule; the cheapest one on the
    /// cycle is returned.
    Oscillating,
    /// The iteration budget ran out; the last switching output is returned.
    MaxIterations,
}

#[derive(Debug, Clone, Copy)]
pub struct SweepOptions {
    pub max_iters: usize,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions { max_iters: 50 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ControlSolution {
    pub schedule: ControlSchedule,
    pub p: Vec<ProbState>,
    pub s: Vec<InfoState>,
    pub adjoint: AdjointState,
    /// `Delta H_i(k)` along the returned trajectory, `[k][i]`.
    pub delta_h: Vec<Vec<f64>>,
    pub j2: f64,
    pub status: SweepStatus,
    pub iterations: usize,
    /// Adjoint terms evaluated at the `(w = 1, s = +inf)` corner.
    pub corner_hits: usize,
}

/// Buffers for one forward-backward pass, all laid out `[k * n + i]`.
struct Sweep<'a> {
    net: &'a ContactNetwork,
    params: &'a CostParams,
    p: Vec<f64>,
    lambda: Vec<f64>,
    delta: Vec<f64>,
    corner_hits: usize,
}

impl<'a> Sweep<'a> {
    fn new(net: &'a ContactNetwork, params: &'a CostParams, initial: &ProbState) -> Self {
        let n = net.node_count();
        let horizon = net.horizon();
        let mut p = vec![0.0; (horizon + 1) * n];
        p[..n].copy_from_slice(initial.as_slice());
        Sweep {
            net,
            params,
            p,
            lambda: vec![0.0; (horizon + 1) * n],
            delta: vec![0.0; horizon * n],
            corner_hits: 0,
        }
    }

    /// Forward, adjoint and switching passes under `u`; the switched
    /// schedule goes to `next`. Returns `J2(u)`.
    fn pass(&mut self, u: &[bool], next: &mut [bool]) -> f64 {
        let (net, params) = (self.net, self.params);
        let n = net.node_count();
        forward_into(net, params, u, &mut self.p);
        self.corner_hits = adjoint_into(net, params, &self.p, u, &mut self.lambda);
        let mut j2 = 0.0;
        for k in 0..net.horizon() {
            let row = &mut self.delta[k * n..(k + 1) * n];
            let p = &self.p[k * n..(k + 1) * n];
            delta_row_into(
                k,
                p,
                &self.lambda[(k + 1) * n..(k + 2) * n],
                net,
                params,
                row,
            );
            for (b, &d) in next[k * n..(k + 1) * n].iter_mut().zip(row.iter()) {
                *b = d < 0.0;
            }
            let u_k = &u[k * n..(k + 1) * n];
            j2 += p.iter().map(|&v| params.c * v).sum::<f64>()
                + u_k.iter().filter(|&&b| b).count() as f64;
        }
        j2
    }

    fn solution(
        &self,
        u: &[bool],
        j2: f64,
        status: SweepStatus,
        iterations: usize,
    ) -> ControlSolution {
        let n = self.net.node_count();
        let horizon = self.net.horizon();
        let rows = |v: &[f64], count: usize| -> Vec<Vec<f64>> {
            (0..count).map(|k| v[k * n..(k + 1) * n].to_vec()).collect()
        };
        let p: Vec<ProbState> = rows(&self.p, horizon + 1)
            .into_iter()
            .map(ProbState::from_vec_unchecked)
            .collect();
        let s: Vec<InfoState> = p.iter().map(to_info).collect();
        ControlSolution {
            schedule: ControlSchedule {
                u: (0..horizon)
                    .map(|k| u[k * n..(k + 1) * n].to_vec())
                    .collect(),
            },
            s,
            p,
            adjoint: AdjointState {
                lambda: rows(&self.lambda, horizon + 1),
            },
            delta_h: rows(&self.delta, horizon),
            j2,
            status,
            iterations,
            corner_hits: self.corner_hits,
        }
    }
}

/// `H(u_i = 1) - H(u_i = 0)` with the other actions at `u`.
pub fn hamiltonian_difference(
    i: usize,
    k: usize,
    s: &InfoState,
    u: &[bool],
    lambda_next: &[f64],
    net: &ContactNetwork,
    params: &CostParams,
) -> f64 {
    let mut on = u.to_vec();
    on[i] = true;
    let mut off = u.to_vec();
    off[i] = false;
    hamiltonian(k, s, &on, lambda_next, net, params)
        - hamiltonian(k, s, &off, lambda_next, net, params)
}

/// Forward-backward sweep from `u = 0` with synchronous schedule updates.
pub fn forward_backward_solve(
    net: &ContactNetwork,
    params: &CostParams,
    initial: &ProbState,
    options: &SweepOptions,
) -> Result<ControlSolution> {
    check_inputs(net, params, initial.len())?;
    if options.max_iters == 0 {
        return Err(Error::InvalidParameter(
            "max_iters must be at least 1".into(),
        ));
    }
    let mut sweep = Sweep::new(net, params, initial);
    let cells = net.node_count() * net.horizon();
    let mut u = vec![false; cells];
    let mut next = vec![false; cells];
    let mut seen: HashMap<Vec<bool>, usize> = HashMap::new();
    let mut visited: Vec<(Vec<bool>, f64)> = Vec::new();
    for iter in 1..=options.max_iters {
        let j2 = sweep.pass(&u, &mut next);
        if next == u {
            return Ok(sweep.solution(&u, j2, SweepStatus::Converged, iter));
        }
        seen.insert(u.clone(), visited.len());
        visited.push((u.clone(), j2));
        if let Some(&start) = seen.get(&next) {
            let best = (start..visited.len())
                .min_by(|&a, &b| visited[a].1.total_cmp(&visited[b].1).then(a.cmp(&b)))
                .expect("cycle is nonempty");
            let chosen = visited.swap_remove(best).0;
            let j2 = sweep.pass(&chosen, &mut next);
            return Ok(sweep.solution(&chosen, j2, SweepStatus::Oscillating, iter));
        }
        std::mem::swap(&mut u, &mut next);
    }
    let j2 = sweep.pass(&u, &mut next);
    Ok(sweep.solution(&u, j2, SweepStatus::MaxIterations, options.max_iters))
}

/// Largest `|Delta H - (H(u_i = 1) - H(u_i = 0))|` over the returned table,
/// relative to `max(1, |H|)`, with both Hamiltonians evaluated in full.
pub fn delta_h_gap(sol: &ControlSolution, net: &ContactNetwork, params: &CostParams) -> f64 {
    let mut gap: f64 = 0.0;
    for (k, row) in sol.delta_h.iter().enumerate() {
        let (s, u, lam) = (&sol.s[k], &sol.schedule.u[k], &sol.adjoint.lambda[k + 1]);
        let scale = hamiltonian(k, s, u, lam, net, params).abs().max(1.0);
        for (i, &d) in row.iter().enumerate() {
            let diff = hamiltonian_difference(i, k, s, u, lam, net, params);
            gap = gap.max((d - diff).abs() / scale);
        }
    }
    gap
}

/// How far the neighbour-weighted variant of `Delta H` departs from the
/// returned table: largest absolute gap, and how many switching decisions it
/// would flip.
pub fn neighbor_weighted_diagnostic(
    sol: &ControlSolution,
    net: &ContactNetwork,
    params: &CostParams,
) -> (f64, usize) {
    let mut gap: f64 = 0.0;
    let mut flips = 0;
    for (k, row) in sol.delta_h.iter().enumerate() {
        let lam = &sol.adjoint.lambda[k + 1];
        for (i, &d) in row.iter().enumerate() {
            let alt = delta_h_neighbor_weighted(i, k, &sol.s[k], lam, net, params);
            gap = gap.max((alt - d).abs());
            if (alt < 0.0) != (d < 0.0) {
                flips += 1;
            }
        }
    }
    (gap, flips)
}

/// Relaxed gradient check for one `(i, k)` cell.
#[derive(Debug, Clone, Serialize)]
pub struct VerificationEntry {
    pub k: usize,
    pub node: usize,
    pub grad_at_0: f64,
    pub grad_at_1: f64,
    pub signs_agree: bool,
    /// Boundary action implied by agreeing signs matches the schedule.
    pub boundary_matches: bool,
    /// Scheduled bit equals `Delta H < 0`.
    pub rule_consistent: bool,
    /// `H(0) - 2 H(1/2) + H(1)`.
    pub second_difference: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerificationReport {
    pub entries: Vec<VerificationEntry>,
    pub agreeing: usize,
    pub boundary_mismatches: usize,
    pub rule_mismatches: usize,
    pub convexity_violations: usize,
}

impl VerificationReport {
    pub fn all_confirmed(&self) -> bool {
        self.boundary_mismatches == 0 && self.rule_mismatches == 0 && self.convexity_violations == 0
    }
}

/// `dH/du_i` with the other actions fixed, via `dm/du = w (beta - 1)` and
/// `dPsi/dm`.
pub fn hamiltonian_gradient(
    i: usize,
    k: usize,
    s: &[f64],
    u_i: f64,
    lambda_next: &[f64],
    net: &ContactNetwork,
    params: &CostParams,
) -> f64 {
    let lam = lambda_next[i];
    if lam == 0.0 {
        return 1.0;
    }
    let factor = u_i * params.beta + 1.0 - u_i;
    let dyn_term: f64 = net
        .in_links(k, i)
        .iter()
        .map(|l| dpsi_dw(factor * l.weight, s[l.node]) * l.weight * (params.beta - 1.0))
        .sum();
    1.0 + lam * dyn_term
}

/// Checks that each scheduled bit minimizes the relaxed Hamiltonian in its
/// own coordinate.
pub fn verify_minimizer(
    s_traj: &[InfoState],
    adjoint: &AdjointState,
    schedule: &ControlSchedule,
    net: &ContactNetwork,
    params: &CostParams,
) -> VerificationReport {
    let n = net.node_count();
    let mut entries = Vec::new();
    for (k, s_k) in s_traj.iter().take(schedule.horizon()).enumerate() {
        let s = s_k.as_slice();
        let lam = &adjoint.lambda[k + 1];
        let mut relaxed: Vec<f64> = schedule.u[k]
            .iter()
            .map(|&b| f64::from(u8::from(b)))
            .collect();
        for i in 0..n {
            let g0 = hamiltonian_gradient(i, k, s, 0.0, lam, net, params);
            let g1 = hamiltonian_gradient(i, k, s, 1.0, lam, net, params);
            let signs_agree = (g0 > 0.0 && g1 > 0.0) || (g0 < 0.0 && g1 < 0.0);
            let chosen = schedule.get(k, i);
            let boundary_matches = !signs_agree || chosen == (g0 < 0.0);
            let d = delta_h(i, k, s_k, lam, net, params);
            let rule_consistent = chosen == (d < 0.0);
            let saved = relaxed[i];
            let mut h = [0.0; 3];
            for (slot, v) in h.iter_mut().zip([0.0, 0.5, 1.0]) {
                relaxed[i] = v;
                *slot = hamiltonian_relaxed(k, s, &relaxed, lam, net, params);
            }
            relaxed[i] = saved;
            let second_difference = h[0] - 2.0 * h[1] + h[2];
            entries.push(VerificationEntry {
                k,
                node: i,
                grad_at_0: g0,
                grad_at_1: g1,
                signs_agree,
                boundary_matches,
                rule_consistent,
                second_difference,
            });
        }
    }
    let scale = |e: &VerificationEntry| 1e-12 * e.grad_at_0.abs().max(e.grad_at_1.abs()).max(1.0);
    VerificationReport {
        agreeing: entries.iter().filter(|e| e.signs_agree).count(),
        boundary_mismatches: entries.iter().filter(|e| !e.boundary_matches).count(),
        rule_mismatches: entries.iter().filter(|e| !e.rule_consistent).count(),
        convexity_violations: entries
            .iter()
            .filter(|e| e.second_difference < -scale(e))
            .count(),
        entries,
    }
}
