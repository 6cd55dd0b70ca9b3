//! TransNN mean-field dynamics.
//!
//! In probability coordinates each node keeps `p_i = Pr(X_i = 1)` and updates
//! by `1 - p_i' = prod_j (1 - w_ij p_j)`. The information transform
//! `s = -ln(1 - p)` turns the product into a sum of TlogSigmoid link
//! activations, `s_i' = sum_j Psi(w_ij, s_j)`. Information coordinates use the
//! extended reals: `p = 1` maps to `s = +inf`.
//!
//! Probability coordinates are the primary numerical path; information
//! states are derived from them.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact_chain::{monte_carlo_marginals, Marginals};
use crate::network::ContactNetwork;

/// Floor applied to arguments of `ln` where a zero would overflow.
pub const LOG_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct ProbState(Vec<f64>);

impl ProbState {
    pub fn new(p: Vec<f64>) -> Result<Self> {
        for (i, &v) in p.iter().enumerate() {
            crate::network::check_probability(v, || format!("p[{i}]"))?;
        }
        Ok(ProbState(p))
    }

    pub(crate) fn from_vec_unchecked(p: Vec<f64>) -> Self {
        ProbState(p)
    }

    pub fn zeros(n: usize) -> Self {
        ProbState(vec![0.0; n])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn to_info(&self) -> InfoState {
        to_info(self)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct InfoState(Vec<f64>);

impl InfoState {
    pub fn new(s: Vec<f64>) -> Result<Self> {
        if let Some((i, v)) = s.iter().enumerate().find(|(_, v)| v.is_nan() || **v < 0.0) {
            return Err(Error::InvalidParameter(format!(
                "information state s[{i}] = {v} must be nonnegative"
            )));
        }
        Ok(InfoState(s))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn to_prob(&self) -> ProbState {
        from_info(self)
    }
}

/// `ln(e^a + e^b)` with `-inf` handled.
fn log_add_exp(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if hi == f64::NEG_INFINITY {
        return hi;
    }
    hi + (lo - hi).exp().ln_1p()
}

/// TlogSigmoid `Psi(w, x) = -ln(1 - w + w e^{-x})` for `w` in `[0, 1]` and
/// `x` in `[0, +inf]`.
pub fn tlog_sigmoid(w: f64, x: f64) -> f64 {
    // w * (e^{-x} - 1) lies in [-1, 0]
    let t = w * (-x).exp_m1();
    if t > -0.5 {
        -t.ln_1p()
    } else {
        // 1 - w + w e^{-x} in log space keeps Psi(1, x) = x for large x
        -log_add_exp((-w).ln_1p(), w.ln() - x)
    }
}

/// `d Psi / dx = w e^{-x} / (1 - w + w e^{-x})`. Returns 0 at `(1, +inf)`,
/// where the expression is undefined.
pub fn dpsi_ds(w: f64, x: f64) -> f64 {
    if x == f64::INFINITY || w == 0.0 {
        return 0.0;
    }
    if w == 1.0 {
        return 1.0;
    }
    let decay = (-x).exp();
    w * decay / (1.0 - w + w * decay)
}

/// `d Psi / dw = (1 - e^{-x}) / (1 - w + w e^{-x})`.
pub fn dpsi_dw(w: f64, x: f64) -> f64 {
    let a = -(-x).exp_m1();
    let denom = (1.0 - w * a).max(LOG_FLOOR);
    a / denom
}

/// `s = -ln(1 - p)` elementwise.
pub fn to_info(p: &ProbState) -> InfoState {
    InfoState(p.0.iter().map(|&v| -(-v).ln_1p()).collect())
}

/// `p = 1 - e^{-s}` elementwise.
pub fn from_info(s: &InfoState) -> ProbState {
    ProbState(s.0.iter().map(|&v| -(-v).exp_m1()).collect())
}

fn check_len(net: &ContactNetwork, len: usize) -> Result<()> {
    if len != net.node_count() {
        return Err(Error::Dimension(format!(
            "state has {len} nodes, network has {}",
            net.node_count()
        )));
    }
    Ok(())
}

fn check_time(net: &ContactNetwork, k: usize) -> Result<()> {
    if k >= net.horizon() {
        return Err(Error::IndexOutOfRange {
            what: "time",
            index: k,
            size: net.horizon(),
        });
    }
    Ok(())
}

pub fn step_prob(p: &ProbState, net: &ContactNetwork, k: usize) -> Result<ProbState> {
    check_len(net, p.len())?;
    check_time(net, k)?;
    Ok(ProbState(
        (0..p.len())
            .map(|i| {
                let healthy: f64 = net
                    .in_links(k, i)
                    .iter()
                    .map(|l| 1.0 - l.weight * p.0[l.node])
                    .product();
                1.0 - healthy
            })
            .collect(),
    ))
}

pub fn step_info(s: &InfoState, net: &ContactNetwork, k: usize) -> Result<InfoState> {
    check_len(net, s.len())?;
    check_time(net, k)?;
    Ok(InfoState(
        (0..s.len())
            .map(|i| {
                net.in_links(k, i)
                    .iter()
                    .map(|l| tlog_sigmoid(l.weight, s.0[l.node]))
                    .sum()
            })
            .collect(),
    ))
}

/// `p(0), ..., p(T)` under the uncontrolled dynamics.
pub fn prob_trajectory(net: &ContactNetwork, p0: &ProbState) -> Result<Vec<ProbState>> {
    check_len(net, p0.len())?;
    let mut out = vec![p0.clone()];
    for k in 0..net.horizon() {
        let next = step_prob(out.last().unwrap(), net, k)?;
        out.push(next);
    }
    Ok(out)
}

/// `s(0), ..., s(T)` iterated directly in information coordinates.
pub fn info_trajectory(net: &ContactNetwork, s0: &InfoState) -> Result<Vec<InfoState>> {
    check_len(net, s0.len())?;
    let mut out = vec![s0.clone()];
    for k in 0..net.horizon() {
        let next = step_info(out.last().unwrap(), net, k)?;
        out.push(next);
    }
    Ok(out)
}

/// Linear bound `Omega_{k-1} ... Omega_0 mu(0)` on `Pr(X_i(k) = 1)`.
/// Each factor already carries its self-loop diagonal, so masking with the
/// adjacency pattern changes nothing. Values may exceed 1.
pub fn linear_upper_bound(net: &ContactNetwork, mu0: &ProbState, k: usize) -> Result<Vec<f64>> {
    check_len(net, mu0.len())?;
    if k > net.horizon() {
        return Err(Error::IndexOutOfRange {
            what: "time",
            index: k,
            size: net.horizon() + 1,
        });
    }
    let mut mu = mu0.0.clone();
    for t in 0..k {
        mu = (0..mu.len())
            .map(|i| {
                net.in_links(t, i)
                    .iter()
                    .map(|l| l.weight * mu[l.node])
                    .sum()
            })
            .collect();
    }
    Ok(mu)
}

/// One cell of a bound check.
#[derive(Debug, Clone, Serialize)]
pub struct BoundEntry {
    pub k: usize,
    pub node: usize,
    pub transnn: f64,
    pub linear: f64,
    pub monte_carlo: f64,
    /// `transnn - monte_carlo`.
    pub slack: f64,
    pub sigma: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundReport {
    pub trials: u64,
    pub entries: Vec<BoundEntry>,
    /// Largest `monte_carlo - transnn` (0 when the bound is never crossed).
    pub max_violation: f64,
    /// Cells where the TransNN value sits more than 3 sigma below the estimate.
    pub violations: usize,
    /// Cells where the linear bound sits below the TransNN value.
    pub linear_violations: usize,
}

impl BoundReport {
    pub fn holds(&self) -> bool {
        self.violations == 0 && self.linear_violations == 0
    }
}

/// Compares TransNN iterates and the linear bound with Monte Carlo marginals
/// of the exact chain started from the same independent initial marginals.
pub fn check_upper_bound(
    net: &ContactNetwork,
    initial: &ProbState,
    trials: u64,
    seed: u64,
) -> Result<BoundReport> {
    let marginals = monte_carlo_marginals(net, initial, trials, seed)?;
    bound_report(net, initial, &marginals)
}

pub fn bound_report(
    net: &ContactNetwork,
    initial: &ProbState,
    marginals: &Marginals,
) -> Result<BoundReport> {
    let traj = prob_trajectory(net, initial)?;
    let mut entries = Vec::new();
    let mut max_violation: f64 = 0.0;
    let mut violations = 0;
    let mut linear_violations = 0;
    for (k, (p, freq)) in traj.iter().zip(&marginals.freq).enumerate() {
        let linear = linear_upper_bound(net, initial, k)?;
        for node in 0..p.len() {
            let transnn = p.0[node];
            let mc = freq[node];
            let sigma = marginals.sigma(transnn);
            let slack = transnn - mc;
            max_violation = max_violation.max(-slack);
            if slack < -3.0 * sigma {
                violations += 1;
            }
            if linear[node] < transnn - 1e-12 {
                linear_violations += 1;
            }
            entries.push(BoundEntry {
                k,
                node,
                transnn,
                linear: linear[node],
                monte_carlo: mc,
                slack,
                sigma,
            });
        }
    }
    Ok(BoundReport {
        trials: marginals.trials,
        entries,
        max_violation,
        violations,
        linear_violations,
    })
}
