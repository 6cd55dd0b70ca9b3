mod common;

use common::{exhaustive_open_loop, info_cost_to_go, info_forward, prob_forward, random_net};
use transnn::control::{
    adjoint_backward, control_rule, controlled_prob_trajectory, delta_h, evaluate_j2,
    evaluate_j2_info, hamiltonian, hamiltonian_difference, verify_minimizer,
};
use transnn::transnn::to_info;
use transnn::{
    forward_backward_solve, ContactNetwork, ControlSchedule, CostParams, InfoState, ProbState,
    SweepOptions, SweepStatus,
};

fn solve(net: &ContactNetwork, params: &CostParams, p0: &[f64]) -> transnn::ControlSolution {
    forward_backward_solve(
        net,
        params,
        &ProbState::new(p0.to_vec()).unwrap(),
        &SweepOptions::default(),
    )
    .unwrap()
}

#[test]
fn adjoint_of_solver_output_matches_finite_differences() {
    let params = CostParams::new(100.0, 0.3, 4).unwrap();
    let mut checked = 0;
    for seed in 0..5 {
        let net = random_net(3, 4, seed, seed % 2 == 1);
        let sol = solve(&net, &params, &[0.9, 0.1, 0.5]);
        for k in 0..4 {
            for i in 0..3 {
                let base = sol.s[k].as_slice();
                let h = 1e-6;
                let mut up = base.to_vec();
                let mut down = base.to_vec();
                up[i] += h;
                down[i] -= h;
                let fd = (info_cost_to_go(&net, &params, &sol.schedule.u, k, &up)
                    - info_cost_to_go(&net, &params, &sol.schedule.u, k, &down))
                    / (2.0 * h);
                let lam = sol.adjoint.lambda[k][i];
                assert!(lam >= 0.0);
                assert!(
                    (fd - lam).abs() <= 1e-5 * lam.abs().max(1.0),
                    "seed {seed} k {k} i {i}: fd {fd} adjoint {lam}"
                );
                checked += 1;
            }
        }
        assert!(sol.adjoint.lambda[4].iter().all(|&l| l == 0.0));
    }
    assert_eq!(checked, 60);
}

#[test]
fn solver_trajectory_matches_independent_forward_passes() {
    let net = random_net(4, 6, 8, true);
    let params = CostParams::new(100.0, 0.3, 6).unwrap();
    let p0 = [1.0, 0.0, 0.3, 0.0];
    let sol = solve(&net, &params, &p0);
    let p = prob_forward(&net, &params, &p0, &sol.schedule.u);
    let s0: Vec<f64> = to_info(&ProbState::new(p0.to_vec()).unwrap())
        .as_slice()
        .to_vec();
    let s = info_forward(&net, &params, &s0, &sol.schedule.u);
    for k in 0..=6 {
        for i in 0..4 {
            assert!((sol.p[k].as_slice()[i] - p[k][i]).abs() < 1e-14);
            let (a, b) = (sol.s[k].as_slice()[i], s[k][i]);
            assert!(a == b || (a - b).abs() <= 1e-10 * a.max(1.0), "{a} vs {b}");
        }
    }
    let j2 = common::j2(&params, &p, &sol.schedule.u);
    assert!((sol.j2 - j2).abs() <= 1e-12 * j2);
    assert!((evaluate_j2_info(&sol.s, &sol.schedule, &params) - j2).abs() <= 1e-10 * j2);
}

#[test]
fn converged_schedules_pass_minimizer_verification() {
    let params = CostParams::new(100.0, 0.3, 10).unwrap();
    let mut converged = 0;
    for seed in 0..40 {
        let net = random_net(5, 10, seed, false);
        let sol = solve(&net, &params, &[1.0, 0.0, 0.0, 1.0, 0.0]);
        let report = verify_minimizer(&sol.s, &sol.adjoint, &sol.schedule, &net, &params);
        // convexity in each coordinate holds whether or not the sweep settled
        assert_eq!(report.convexity_violations, 0);
        if sol.status != SweepStatus::Converged {
            continue;
        }
        converged += 1;
        assert_eq!(report.rule_mismatches, 0, "seed {seed}");
        assert_eq!(report.boundary_mismatches, 0, "seed {seed}");
        for k in 0..10 {
            let rule = control_rule(&sol.s[k], &sol.adjoint.lambda[k + 1], &net, &params, k);
            assert_eq!(rule, sol.schedule.u[k]);
        }
    }
    assert!(converged >= 2, "only {converged} of 40 sweeps converged");
}

#[test]
fn delta_h_matches_hamiltonian_difference_on_time_varying_runs() {
    for seed in 0..10 {
        let net = random_net(4, 5, seed, true);
        let params = CostParams::new(30.0, 0.2, 5).unwrap();
        let sol = solve(&net, &params, &[0.8, 0.0, 0.6, 0.1]);
        for k in 0..5 {
            let lam = &sol.adjoint.lambda[k + 1];
            for i in 0..4 {
                let d = delta_h(i, k, &sol.s[k], lam, &net, &params);
                let h =
                    hamiltonian_difference(i, k, &sol.s[k], &sol.schedule.u[k], lam, &net, &params);
                let scale = hamiltonian(k, &sol.s[k], &sol.schedule.u[k], lam, &net, &params)
                    .abs()
                    .max(1.0);
                assert!((d - h).abs() <= 1e-12 * scale, "seed {seed}: {d} vs {h}");
                assert!(d <= 1.0);
                assert_eq!(sol.delta_h[k][i], d);
            }
        }
    }
}

#[test]
fn small_instances_are_near_exhaustive_optimum() {
    let mut compared = 0;
    for seed in 0..30u64 {
        let (n, horizon) = if seed % 2 == 0 { (3, 3) } else { (2, 4) };
        let net = random_net(n, horizon, seed, seed % 3 == 0);
        let params = CostParams::new(100.0, 0.3, horizon).unwrap();
        let mut p0 = vec![0.0; n];
        p0[0] = 1.0;
        let sol = solve(&net, &params, &p0);
        if sol.status != SweepStatus::Converged {
            continue;
        }
        let (best, _) = exhaustive_open_loop(&net, &params, &p0);
        assert!(sol.j2 >= best - 1e-9);
        assert!(
            sol.j2 <= 1.05 * best,
            "seed {seed}: sweep {} exhaustive {best}",
            sol.j2
        );
        compared += 1;
    }
    assert!(compared >= 5, "only {compared} instances converged");
}

#[test]
fn returned_j2_never_beats_the_exhaustive_optimum_even_when_oscillating() {
    for seed in 0..10 {
        let net = random_net(3, 3, 100 + seed, false);
        let params = CostParams::new(100.0, 0.3, 3).unwrap();
        let p0 = [1.0, 0.0, 1.0];
        let sol = solve(&net, &params, &p0);
        let (best, _) = exhaustive_open_loop(&net, &params, &p0);
        assert!(sol.j2 >= best - 1e-9);
        let traj = controlled_prob_trajectory(
            &net,
            &params,
            &ProbState::new(p0.to_vec()).unwrap(),
            &sol.schedule,
        )
        .unwrap();
        assert!((evaluate_j2(&traj, &sol.schedule, &params) - sol.j2).abs() < 1e-9);
    }
}

#[test]
fn trivial_inputs_never_vaccinate() {
    let net = random_net(4, 5, 1, true);
    let healthy = solve(&net, &CostParams::new(100.0, 0.3, 5).unwrap(), &[0.0; 4]);
    assert_eq!(healthy.status, SweepStatus::Converged);
    assert_eq!(healthy.iterations, 1);
    assert_eq!(healthy.schedule, ControlSchedule::zeros(4, 5));

    let free = solve(&net, &CostParams::new(0.0, 0.3, 5).unwrap(), &[1.0; 4]);
    assert_eq!(free.schedule.total_vaccinations(), 0);
    assert!(free.adjoint.lambda.iter().flatten().all(|&l| l == 0.0));

    let useless = solve(&net, &CostParams::new(100.0, 1.0, 5).unwrap(), &[1.0; 4]);
    assert_eq!(useless.schedule.total_vaccinations(), 0);
    assert!(useless.delta_h.iter().flatten().all(|&d| d == 1.0));
}

#[test]
fn documented_hand_values() {
    let net = ContactNetwork::from_static(&[vec![0.4]], 2).unwrap();
    let params = CostParams::new(100.0, 0.3, 2).unwrap();
    let s = InfoState::new(vec![2f64.ln()]).unwrap();
    let h = hamiltonian(0, &s, &[false], &[1.0], &net, &params);
    assert!((h - (50.0 - 0.8f64.ln())).abs() < 1e-12);
    assert!((h - 50.22314).abs() < 1e-5);

    let traj = prob_forward(&net, &params, &[1.0], &[vec![false], vec![false]]);
    assert!((traj[1][0] - 0.4).abs() < 1e-15);
    let p: Vec<ProbState> = traj
        .into_iter()
        .map(|p| ProbState::new(p).unwrap())
        .collect();
    assert!((evaluate_j2(&p, &ControlSchedule::zeros(1, 2), &params) - 140.0).abs() < 1e-12);

    let s_traj: Vec<InfoState> = p.iter().map(to_info).collect();
    let (adj, _) = adjoint_backward(&s_traj, &ControlSchedule::zeros(1, 2), &net, &params).unwrap();
    assert!((adj.lambda[1][0] - 100.0 * 0.6).abs() < 1e-12);
    assert_eq!(adj.lambda[2][0], 0.0);
}

#[test]
fn strong_cheap_vaccine_is_taken_for_an_exposed_node() {
    // node 1 is exposed to infected node 0 only through the link w_10
    let net = ContactNetwork::from_static(&[vec![0.5, 0.0], vec![0.9, 0.2]], 3).unwrap();
    let params = CostParams::new(1e6, 0.01, 3).unwrap();
    let sol = solve(&net, &params, &[1.0, 0.0]);
    assert!(sol.schedule.u[0][1]);
    assert!(sol.delta_h[0][1] < 0.0);
}
