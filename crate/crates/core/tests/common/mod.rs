//! Brute-force oracles shared by the integration tests. They read weights
//! through the dense accessor and never call the closed-form products under
//! test.
#![allow(dead_code, clippy::needless_range_loop)]

use transnn::rng::stream;
use transnn::transnn::tlog_sigmoid;
use transnn::{ContactNetwork, CostParams, Policy, RandomNetwork};

pub fn bundled_scenario() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios/five_node.json")
}

pub fn random_net(n: usize, horizon: usize, seed: u64, time_varying: bool) -> ContactNetwork {
    RandomNetwork {
        nodes: n,
        horizon,
        time_varying,
        ..Default::default()
    }
    .generate(&mut stream(seed, 0))
    .unwrap()
}

fn popcount(x: usize) -> f64 {
    x.count_ones() as f64
}

/// Row scale `beta` for vaccinated nodes of action `u`.
pub fn scales(u: usize, n: usize, beta: f64) -> Vec<f64> {
    (0..n)
        .map(|i| if u >> i & 1 == 1 { beta } else { 1.0 })
        .collect()
}

/// Next-configuration distribution from `x`, summing over every joint outcome
/// of the transmission draws `W_ij` whose source is infected.
pub fn draw_enumeration(net: &ContactNetwork, k: usize, x: usize, scale: &[f64]) -> Vec<f64> {
    let n = net.node_count();
    let mut active = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let w = net.weight(k, i, j);
            if w > 0.0 && x >> j & 1 == 1 {
                active.push((i, scale[i] * w));
            }
        }
    }
    let mut dist = vec![0.0; 1 << n];
    for outcome in 0..1u64 << active.len() {
        let mut prob = 1.0;
        let mut q = 0;
        for (b, &(i, m)) in active.iter().enumerate() {
            if outcome >> b & 1 == 1 {
                prob *= m;
                q |= 1 << i;
            } else {
                prob *= 1.0 - m;
            }
        }
        dist[q] += prob;
    }
    dist
}

/// `trans[k][x][u]` is the next-configuration distribution.
pub fn controlled_transitions(
    net: &ContactNetwork,
    params: &CostParams,
) -> Vec<Vec<Vec<Vec<f64>>>> {
    let n = net.node_count();
    (0..net.horizon())
        .map(|k| {
            (0..1 << n)
                .map(|x| {
                    (0..1 << n)
                        .map(|u| draw_enumeration(net, k, x, &scales(u, n, params.beta)))
                        .collect()
                })
                .collect()
        })
        .collect()
}

/// Exact expected cost-to-go of a feedback policy `action(k, x)`.
pub fn policy_value(
    trans: &[Vec<Vec<Vec<f64>>>],
    c: f64,
    action: impl Fn(usize, usize) -> usize,
) -> Vec<Vec<f64>> {
    let horizon = trans.len();
    let size = trans[0].len();
    let mut v = vec![vec![0.0; size]; horizon + 1];
    for k in (0..horizon).rev() {
        for x in 0..size {
            let u = action(k, x);
            let future: f64 = trans[k][x][u]
                .iter()
                .zip(&v[k + 1])
                .map(|(p, v)| p * v)
                .sum();
            v[k][x] = c * popcount(x) + popcount(u) + future;
        }
    }
    v
}

pub fn transnn_policy_value(
    net: &ContactNetwork,
    params: &CostParams,
    policy: &Policy,
) -> Vec<Vec<f64>> {
    let trans = controlled_transitions(net, params);
    policy_value(&trans, params.c, |k, x| policy.action(k, x))
}

/// Minimum expected cost per initial configuration over every deterministic
/// feedback policy, found by enumeration.
pub fn enumerate_feedback_policies(net: &ContactNetwork, params: &CostParams) -> (Vec<f64>, u64) {
    let trans = controlled_transitions(net, params);
    let n = net.node_count();
    let size = 1usize << n;
    let horizon = net.horizon();
    let digits = horizon * size;
    let base = size as u64;
    let total = base.pow(digits as u32);
    let mut best = vec![f64::INFINITY; size];
    for code in 0..total {
        let table: Vec<usize> = (0..digits)
            .map(|d| (code / base.pow(d as u32) % base) as usize)
            .collect();
        let v = policy_value(&trans, params.c, |k, x| table[k * size + x]);
        for (b, &val) in best.iter_mut().zip(&v[0]) {
            *b = b.min(val);
        }
    }
    (best, total)
}

/// Probability forward pass with node `i`'s row scaled when `u_i(k) = 1`.
pub fn prob_forward(
    net: &ContactNetwork,
    params: &CostParams,
    p0: &[f64],
    u: &[Vec<bool>],
) -> Vec<Vec<f64>> {
    let n = net.node_count();
    let mut traj = vec![p0.to_vec()];
    for (k, row) in u.iter().enumerate() {
        let p = traj.last().unwrap();
        let next = (0..n)
            .map(|i| {
                let f = if row[i] { params.beta } else { 1.0 };
                let mut healthy = 1.0;
                for j in 0..n {
                    healthy *= 1.0 - f * net.weight(k, i, j) * p[j];
                }
                1.0 - healthy
            })
            .collect();
        traj.push(next);
    }
    traj
}

pub fn j2(params: &CostParams, traj: &[Vec<f64>], u: &[Vec<bool>]) -> f64 {
    u.iter()
        .enumerate()
        .map(|(k, row)| {
            traj[k].iter().map(|p| params.c * p).sum::<f64>()
                + row.iter().filter(|&&b| b).count() as f64
        })
        .sum()
}

pub fn schedule_from_bits(bits: u64, n: usize, horizon: usize) -> Vec<Vec<bool>> {
    (0..horizon)
        .map(|k| (0..n).map(|i| bits >> (k * n + i) & 1 == 1).collect())
        .collect()
}

/// Cheapest open-loop schedule on the TransNN dynamics among all `2^{nT}`.
pub fn exhaustive_open_loop(
    net: &ContactNetwork,
    params: &CostParams,
    p0: &[f64],
) -> (f64, Vec<Vec<bool>>) {
    let n = net.node_count();
    let horizon = net.horizon();
    let mut best = (f64::INFINITY, Vec::new());
    for bits in 0..1u64 << (n * horizon) {
        let u = schedule_from_bits(bits, n, horizon);
        let cost = j2(params, &prob_forward(net, params, p0, &u), &u);
        if cost < best.0 {
            best = (cost, u);
        }
    }
    best
}

/// Information-coordinate cost-to-go from step `k`, propagated with `Psi`.
pub fn info_cost_to_go(
    net: &ContactNetwork,
    params: &CostParams,
    u: &[Vec<bool>],
    k: usize,
    s: &[f64],
) -> f64 {
    let n = net.node_count();
    let mut s = s.to_vec();
    let mut total = 0.0;
    for t in k..net.horizon() {
        total += s.iter().map(|&v| params.c * -(-v).exp_m1()).sum::<f64>()
            + u[t].iter().filter(|&&b| b).count() as f64;
        s = (0..n)
            .map(|i| {
                let f = if u[t][i] { params.beta } else { 1.0 };
                (0..n)
                    .filter(|&j| net.weight(t, i, j) > 0.0)
                    .map(|j| tlog_sigmoid(f * net.weight(t, i, j), s[j]))
                    .sum()
            })
            .collect();
    }
    total
}

pub fn info_forward(
    net: &ContactNetwork,
    params: &CostParams,
    s0: &[f64],
    u: &[Vec<bool>],
) -> Vec<Vec<f64>> {
    let n = net.node_count();
    let mut traj = vec![s0.to_vec()];
    for (t, row) in u.iter().enumerate() {
        let s = traj.last().unwrap();
        let next = (0..n)
            .map(|i| {
                let f = if row[i] { params.beta } else { 1.0 };
                (0..n)
                    .filter(|&j| net.weight(t, i, j) > 0.0)
                    .map(|j| tlog_sigmoid(f * net.weight(t, i, j), s[j]))
                    .sum()
            })
            .collect();
        traj.push(next);
    }
    traj
}
