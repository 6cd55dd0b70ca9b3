//! The exact Markovian SIS model on `2^n` configurations.
//!
//! Configurations are encoded as integers with node `i` in bit `i`. The same
//! encoding indexes transition matrices, value tables and policies.

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::network::ContactNetwork;
use crate::rng::{par_batches, SimRng};
use crate::transnn::ProbState;

/// Largest `n` for which full transition matrices are assembled by default.
pub const DEFAULT_STATE_CAP: usize = 14;

/// Infection status of every node (`true` = infected).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BinaryState {
    bits: Vec<bool>,
}

impl BinaryState {
    pub fn new(bits: Vec<bool>) -> Self {
        BinaryState { bits }
    }

    pub fn healthy(n: usize) -> Self {
        BinaryState {
            bits: vec![false; n],
        }
    }

    pub fn from_index(index: usize, n: usize) -> Self {
        assert!(
            n >= usize::BITS as usize || index >> n == 0,
            "index {index} needs more than {n} bits"
        );
        BinaryState {
            bits: (0..n).map(|i| index >> i & 1 == 1).collect(),
        }
    }

    /// `Some` when every probability is exactly 0 or 1.
    pub fn from_probabilities(p: &[f64]) -> Option<Self> {
        p.iter()
            .map(|&v| match v {
                0.0 => Some(false),
                1.0 => Some(true),
                _ => None,
            })
            .collect::<Option<Vec<_>>>()
            .map(BinaryState::new)
    }

    /// Integer encoding; only meaningful for fewer than 64 nodes.
    pub fn index(&self) -> usize {
        assert!(self.bits.len() < usize::BITS as usize);
        self.bits
            .iter()
            .enumerate()
            .fold(0, |acc, (i, &b)| acc | (usize::from(b) << i))
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn is_infected(&self, i: usize) -> bool {
        self.bits[i]
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn infected_count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn is_all_healthy(&self) -> bool {
        !self.bits.iter().any(|&b| b)
    }

    pub fn as_probabilities(&self) -> ProbState {
        ProbState::from_vec_unchecked(self.bits.iter().map(|&b| f64::from(u8::from(b))).collect())
    }
}

impl Serialize for BinaryState {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_seq(self.bits().iter().map(|&b| u8::from(b)))
    }
}

/// Realized transmissions `W_ij` at one step, stored alongside the network's
/// in-link lists: `hits[i][m]` belongs to `net.in_links(k, i)[m]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransmissionDraw {
    time: usize,
    hits: Vec<Vec<bool>>,
}

impl TransmissionDraw {
    pub fn time(&self) -> usize {
        self.time
    }

    /// `W_ij`; zero off the network's support.
    pub fn get(&self, net: &ContactNetwork, i: usize, j: usize) -> bool {
        net.in_links(self.time, i)
            .binary_search_by_key(&j, |l| l.node)
            .map(|m| self.hits[i][m])
            .unwrap_or(false)
    }

    pub fn to_dense(&self, net: &ContactNetwork) -> Vec<Vec<bool>> {
        let n = net.node_count();
        let mut w = vec![vec![false; n]; n];
        for (i, row) in self.hits.iter().enumerate() {
            for (link, &hit) in net.in_links(self.time, i).iter().zip(row) {
                w[i][link.node] = hit;
            }
        }
        w
    }
}

/// Per-node conditional infection probabilities for the next step.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalDistribution {
    pub rho: Vec<f64>,
}

impl ConditionalDistribution {
    /// Probability of landing in configuration `q`.
    pub fn probability_of(&self, q: &BinaryState) -> f64 {
        self.rho
            .iter()
            .zip(q.bits())
            .map(|(&r, &qi)| if qi { r } else { 1.0 - r })
            .product()
    }

    /// Probability of landing in the configuration with index `q`.
    pub fn probability_of_index(&self, q: usize) -> f64 {
        config_probability(&self.rho, q)
    }
}

pub(crate) fn config_probability(rho: &[f64], q: usize) -> f64 {
    rho.iter()
        .enumerate()
        .map(|(i, &r)| if q >> i & 1 == 1 { r } else { 1.0 - r })
        .product()
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

fn check_state(net: &ContactNetwork, x: &BinaryState) -> Result<()> {
    if x.len() != net.node_count() {
        return Err(Error::Dimension(format!(
            "state has {} nodes, network has {}",
            x.len(),
            net.node_count()
        )));
    }
    Ok(())
}

fn check_cap(net: &ContactNetwork, cap: usize, what: &'static str) -> Result<()> {
    let n = net.node_count();
    if n > cap || n >= usize::BITS as usize {
        return Err(Error::CapExceeded { what, n, cap });
    }
    Ok(())
}

/// Draws every `W_ij ~ Bernoulli(w_ij)` independently on the support of step `k`.
pub fn sample_transmissions<R: Rng + ?Sized>(
    net: &ContactNetwork,
    k: usize,
    rng: &mut R,
) -> Result<TransmissionDraw> {
    check_time(net, k)?;
    let hits = (0..net.node_count())
        .map(|i| {
            net.in_links(k, i)
                .iter()
                .map(|l| rng.random::<f64>() < l.weight)
                .collect()
        })
        .collect();
    Ok(TransmissionDraw { time: k, hits })
}

/// Applies one realized step: node `i` is infected next iff some in-neighbour
/// `j` (possibly `i`) is infected now and its transmission succeeded.
pub fn step_state(x: &BinaryState, draw: &TransmissionDraw, net: &ContactNetwork) -> BinaryState {
    let bits = (0..x.len())
        .map(|i| {
            net.in_links(draw.time, i)
                .iter()
                .zip(&draw.hits[i])
                .any(|(l, &hit)| hit && x.is_infected(l.node))
        })
        .collect();
    BinaryState::new(bits)
}

/// Fills `rho` with `1 - prod_j (1 - scale(i) * w_ij * x_j)` for configuration
/// index `x`. `scale` multiplies node `i`'s whole incoming row.
pub(crate) fn infection_probs_index(
    net: &ContactNetwork,
    k: usize,
    x: usize,
    scale: impl Fn(usize) -> f64,
    rho: &mut [f64],
) {
    for (i, r) in rho.iter_mut().enumerate() {
        let f = scale(i);
        let healthy: f64 = net
            .in_links(k, i)
            .iter()
            .filter(|l| x >> l.node & 1 == 1)
            .map(|l| 1.0 - f * l.weight)
            .product();
        *r = 1.0 - healthy;
    }
}

/// Conditional infection probabilities given the current configuration.
pub fn conditional_infection_probs(
    x: &BinaryState,
    net: &ContactNetwork,
    k: usize,
) -> Result<ConditionalDistribution> {
    check_time(net, k)?;
    check_state(net, x)?;
    let rho = (0..net.node_count())
        .map(|i| {
            let healthy: f64 = net
                .in_links(k, i)
                .iter()
                .filter(|l| x.is_infected(l.node))
                .map(|l| 1.0 - l.weight)
                .product();
            1.0 - healthy
        })
        .collect();
    Ok(ConditionalDistribution { rho })
}

/// `Pr(X(k+1) = q | X(k) = x)`.
pub fn transition_probability(
    x: &BinaryState,
    q: &BinaryState,
    net: &ContactNetwork,
    k: usize,
) -> Result<f64> {
    check_state(net, q)?;
    Ok(conditional_infection_probs(x, net, k)?.probability_of(q))
}

/// Row-stochastic `2^n x 2^n` matrix, row-major, rows and columns indexed
/// by configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix {
    n: usize,
    data: Vec<f64>,
}

impl TransitionMatrix {
    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn size(&self) -> usize {
        1 << self.n
    }

    pub fn get(&self, x: usize, q: usize) -> f64 {
        self.data[x * self.size() + q]
    }

    pub fn row(&self, x: usize) -> &[f64] {
        let s = self.size();
        &self.data[x * s..(x + 1) * s]
    }

    /// Pushes a distribution over configurations one step forward.
    pub fn propagate(&self, dist: &[f64]) -> Vec<f64> {
        let s = self.size();
        let mut out = vec![0.0; s];
        for (x, &px) in dist.iter().enumerate() {
            if px == 0.0 {
                continue;
            }
            for (o, &t) in out.iter_mut().zip(self.row(x)) {
                *o += px * t;
            }
        }
        out
    }
}

pub fn transition_matrix(net: &ContactNetwork, k: usize) -> Result<TransitionMatrix> {
    transition_matrix_capped(net, k, DEFAULT_STATE_CAP)
}

pub fn transition_matrix_capped(
    net: &ContactNetwork,
    k: usize,
    cap: usize,
) -> Result<TransitionMatrix> {
    use rayon::prelude::*;
    check_cap(net, cap, "transition matrix")?;
    check_time(net, k)?;
    let n = net.node_count();
    let size = 1usize << n;
    let mut data = vec![0.0; size * size];
    data.par_chunks_mut(size).enumerate().for_each(|(x, row)| {
        let mut rho = vec![0.0; n];
        infection_probs_index(net, k, x, |_| 1.0, &mut rho);
        for (q, entry) in row.iter_mut().enumerate() {
            *entry = config_probability(&rho, q);
        }
    });
    Ok(TransitionMatrix { n, data })
}

/// Independent Bernoulli draw of an initial configuration.
pub fn sample_initial<R: Rng + ?Sized>(initial: &ProbState, rng: &mut R) -> BinaryState {
    BinaryState::new(
        initial
            .as_slice()
            .iter()
            .map(|&p| rng.random::<f64>() < p)
            .collect(),
    )
}

/// One transition of the chain. Transmissions are drawn only from infected
/// sources, which has the same law as `sample_transmissions` + `step_state`.
pub fn sample_next_state<R: Rng + ?Sized>(
    x: &BinaryState,
    net: &ContactNetwork,
    k: usize,
    rng: &mut R,
) -> BinaryState {
    sample_next_state_scaled(x, net, k, |_| 1.0, rng)
}

/// As [`sample_next_state`] with node `i`'s incoming weights multiplied by `scale(i)`.
pub(crate) fn sample_next_state_scaled<R: Rng + ?Sized>(
    x: &BinaryState,
    net: &ContactNetwork,
    k: usize,
    scale: impl Fn(usize) -> f64,
    rng: &mut R,
) -> BinaryState {
    let bits = (0..x.len())
        .map(|i| {
            let f = scale(i);
            let mut infected = false;
            for l in net.in_links(k, i) {
                if x.is_infected(l.node) && rng.random::<f64>() < f * l.weight {
                    infected = true;
                }
            }
            infected
        })
        .collect();
    BinaryState::new(bits)
}

/// A sampled path `X(0), ..., X(T)`.
pub fn sample_trajectory<R: Rng + ?Sized>(
    net: &ContactNetwork,
    initial: &ProbState,
    rng: &mut R,
) -> Vec<BinaryState> {
    let mut x = sample_initial(initial, rng);
    let mut path = Vec::with_capacity(net.horizon() + 1);
    for k in 0..net.horizon() {
        let next = sample_next_state(&x, net, k, rng);
        path.push(std::mem::replace(&mut x, next));
    }
    path.push(x);
    path
}

/// Monte Carlo estimate of `Pr(X_i(k) = 1)` for `k = 0..=T`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Marginals {
    pub trials: u64,
    /// `(T + 1) x n` infection frequencies.
    pub freq: Vec<Vec<f64>>,
}

impl Marginals {
    /// Binomial standard error of an estimate whose true value is `p`.
    pub fn sigma(&self, p: f64) -> f64 {
        let p = p.clamp(0.0, 1.0);
        (p * (1.0 - p) / self.trials as f64).sqrt()
    }
}

pub fn monte_carlo_marginals(
    net: &ContactNetwork,
    initial: &ProbState,
    trials: u64,
    seed: u64,
) -> Result<Marginals> {
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be at least 1".into()));
    }
    if initial.len() != net.node_count() {
        return Err(Error::Dimension(format!(
            "initial state has {} nodes, network has {}",
            initial.len(),
            net.node_count()
        )));
    }
    let n = net.node_count();
    let horizon = net.horizon();
    let counts = par_batches(seed, trials, |rng: &mut SimRng, range| {
        let mut counts = vec![vec![0u64; n]; horizon + 1];
        for _ in range {
            for (k, x) in sample_trajectory(net, initial, rng).iter().enumerate() {
                for (c, &b) in counts[k].iter_mut().zip(x.bits()) {
                    *c += u64::from(b);
                }
            }
        }
        counts
    });
    let mut total = vec![vec![0u64; n]; horizon + 1];
    for batch in counts {
        for (t, b) in total.iter_mut().zip(batch) {
            for (a, c) in t.iter_mut().zip(b) {
                *a += c;
            }
        }
    }
    let freq = total
        .into_iter()
        .map(|row| row.into_iter().map(|c| c as f64 / trials as f64).collect())
        .collect();
    Ok(Marginals { trials, freq })
}

/// Monte Carlo estimate of the distribution over configurations at every step.
pub fn monte_carlo_state_frequencies(
    net: &ContactNetwork,
    initial: &ProbState,
    trials: u64,
    seed: u64,
) -> Result<Vec<Vec<f64>>> {
    check_cap(net, DEFAULT_STATE_CAP, "state frequencies")?;
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be at least 1".into()));
    }
    let size = 1usize << net.node_count();
    let horizon = net.horizon();
    let counts = par_batches(seed, trials, |rng: &mut SimRng, range| {
        let mut counts = vec![vec![0u64; size]; horizon + 1];
        for _ in range {
            for (k, x) in sample_trajectory(net, initial, rng).iter().enumerate() {
                counts[k][x.index()] += 1;
            }
        }
        counts
    });
    let mut total = vec![vec![0u64; size]; horizon + 1];
    for batch in counts {
        for (t, b) in total.iter_mut().zip(batch) {
            for (a, c) in t.iter_mut().zip(b) {
                *a += c;
            }
        }
    }
    Ok(total
        .into_iter()
        .map(|row| row.into_iter().map(|c| c as f64 / trials as f64).collect())
        .collect())
}

/// Exact distribution over configurations at `k = 0..=T` for an independent
/// Bernoulli initial condition.
pub fn exact_state_distributions(
    net: &ContactNetwork,
    initial: &ProbState,
) -> Result<Vec<Vec<f64>>> {
    check_cap(net, DEFAULT_STATE_CAP, "state distribution")?;
    let size = 1usize << net.node_count();
    let mut dist: Vec<f64> = (0..size)
        .map(|x| config_probability(initial.as_slice(), x))
        .collect();
    let mut out = vec![dist.clone()];
    for k in 0..net.horizon() {
        dist = transition_matrix(net, k)?.propagate(&dist);
        out.push(dist.clone());
    }
    Ok(out)
}
