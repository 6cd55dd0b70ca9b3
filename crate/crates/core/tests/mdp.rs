#![allow(clippy::needless_range_loop)]
mod common;

use common::{controlled_transitions, enumerate_feedback_policies, policy_value, random_net};
use transnn::mdp::{evaluate_policy, simulate_policy, stage_cost};
use transnn::{solve_bellman, BinaryState, ContactNetwork, ControlAction, CostParams, ProbState};

fn popcount(x: usize) -> f64 {
    x.count_ones() as f64
}

#[test]
fn values_satisfy_bellman_equation_against_enumerated_transitions() {
    let net = random_net(3, 4, 17, true);
    let params = CostParams::new(50.0, 0.3, 4).unwrap();
    let sol = solve_bellman(&net, &params).unwrap();
    let trans = controlled_transitions(&net, &params);
    for k in 0..4 {
        for x in 0..8 {
            let q = |u: usize| -> f64 {
                params.c * popcount(x)
                    + popcount(u)
                    + trans[k][x][u]
                        .iter()
                        .zip(&sol.values.values[k + 1])
                        .map(|(p, v)| p * v)
                        .sum::<f64>()
            };
            let best = (0..8).map(q).fold(f64::INFINITY, f64::min);
            let v = sol.values.get(k, x);
            assert!((v - best).abs() <= 1e-10 * v.max(1.0), "k={k} x={x}");
            let chosen = sol.policy.action(k, x);
            assert!((q(chosen) - v).abs() <= 1e-10 * v.max(1.0));
        }
    }
    for x in 0..8 {
        assert_eq!(sol.values.get(4, x), 0.0);
    }
}

#[test]
fn evaluating_the_optimal_policy_reproduces_its_values() {
    let net = random_net(4, 5, 3, false);
    let params = CostParams::new(100.0, 0.3, 5).unwrap();
    let sol = solve_bellman(&net, &params).unwrap();
    let eval = evaluate_policy(&net, &params, &sol.policy).unwrap();
    for (a, b) in sol.values.values.iter().zip(&eval.values) {
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() <= 1e-10 * x.abs().max(1.0));
        }
    }
    let oracle = policy_value(&controlled_transitions(&net, &params), params.c, |k, x| {
        sol.policy.action(k, x)
    });
    for (a, b) in sol.values.values.iter().zip(&oracle) {
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() <= 1e-10 * x.abs().max(1.0));
        }
    }
}

#[test]
fn single_node_matches_policy_enumeration() {
    for seed in 0..3 {
        let net = random_net(1, 4, seed, true);
        let params = CostParams::new(5.0, 0.3, 4).unwrap();
        let (best, count) = enumerate_feedback_policies(&net, &params);
        assert_eq!(count, 256);
        let sol = solve_bellman(&net, &params).unwrap();
        for (x, b) in best.iter().enumerate() {
            assert!((sol.values.get(0, x) - b).abs() < 1e-12);
        }
    }
}

#[test]
fn optimal_cost_is_monotone_in_c_on_time_varying_networks() {
    let net = random_net(3, 5, 9, true);
    let mut prev: Option<Vec<Vec<f64>>> = None;
    for c in [0.0, 0.5, 2.0, 10.0, 100.0, 1000.0] {
        let v = solve_bellman(&net, &CostParams::new(c, 0.3, 5).unwrap())
            .unwrap()
            .values
            .values;
        if let Some(p) = &prev {
            for (a, b) in p.iter().zip(&v) {
                for (x, y) in a.iter().zip(b) {
                    assert!(y + 1e-12 >= *x);
                }
            }
        }
        prev = Some(v);
    }
}

fn uncontrolled_cost(net: &ContactNetwork, params: &CostParams) -> Vec<f64> {
    policy_value(&controlled_transitions(net, params), params.c, |_, _| 0)[0].clone()
}

#[test]
fn useless_vaccine_and_free_infection_reduce_to_no_action() {
    let net = random_net(3, 4, 4, true);
    let useless = CostParams::new(100.0, 1.0, 4).unwrap();
    let sol = solve_bellman(&net, &useless).unwrap();
    assert!(sol.policy.actions.iter().flatten().all(|&u| u == 0));
    for (v, o) in sol.values.values[0]
        .iter()
        .zip(uncontrolled_cost(&net, &useless))
    {
        assert!((v - o).abs() <= 1e-10 * o.max(1.0));
    }

    let free = CostParams::new(0.0, 0.3, 4).unwrap();
    let sol = solve_bellman(&net, &free).unwrap();
    assert!(sol.policy.actions.iter().flatten().all(|&u| u == 0));
    assert!(sol.values.values.iter().flatten().all(|&v| v == 0.0));
}

#[test]
fn all_healthy_state_is_free_at_every_step() {
    let net = random_net(4, 6, 12, true);
    let sol = solve_bellman(&net, &CostParams::new(100.0, 0.3, 6).unwrap()).unwrap();
    for k in 0..6 {
        assert_eq!(sol.values.get(k, 0), 0.0);
        assert_eq!(sol.policy.action(k, 0), 0);
    }
}

#[test]
fn perfect_vaccine_protects_each_vaccinated_node() {
    let net = random_net(3, 3, 6, false);
    let params = CostParams::new(1000.0, 0.0, 3).unwrap();
    let sol = solve_bellman(&net, &params).unwrap();
    let trans = controlled_transitions(&net, &params);
    for x in 1..8 {
        let u = sol.policy.action(0, x);
        for (q, &p) in trans[0][x][u].iter().enumerate() {
            if q & u != 0 {
                assert_eq!(p, 0.0);
            }
        }
    }
}

#[test]
fn rollouts_of_random_initial_condition_match_expected_value() {
    let net = random_net(3, 5, 30, false);
    let params = CostParams::new(100.0, 0.3, 5).unwrap();
    let sol = solve_bellman(&net, &params).unwrap();
    let initial = ProbState::new(vec![0.5, 0.2, 0.9]).unwrap();
    let sim = simulate_policy(&net, &params, &sol.policy, &initial, 100_000, 4, 77).unwrap();
    let want = sol.values.expected_initial(&initial);
    assert!(
        (sim.mean_cost - want).abs() < 3.0 * sim.std_error,
        "mean {} expected {want} se {}",
        sim.mean_cost,
        sim.std_error
    );
    for t in &sim.traces {
        let realized: f64 = t
            .states
            .iter()
            .zip(&t.actions)
            .map(|(x, u)| stage_cost(x, u, params.c))
            .sum();
        assert!((realized - t.cost).abs() < 1e-9);
        for (k, (x, u)) in t.states.iter().zip(&t.actions).enumerate() {
            assert_eq!(u.index(), sol.policy.action(k, x.index()));
        }
    }
}

#[test]
fn stage_cost_example() {
    let x = BinaryState::new(vec![true, false, true]);
    let u = ControlAction::new(vec![false, true, false]);
    assert_eq!(stage_cost(&x, &u, 100.0), 201.0);
}
