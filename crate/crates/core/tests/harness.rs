mod common;

use std::path::Path;

use common::{bundled_scenario, random_net};
use transnn::harness::{run_loaded, run_scenario, MdpSection, Method, RunOptions};
use transnn::{CostParams, ProbState, Scenario};

fn quick(methods: &[Method]) -> RunOptions {
    RunOptions {
        methods: methods.to_vec(),
        trials: 5_000,
        ..Default::default()
    }
}

fn single_node() -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios/single_node.json")
}

#[test]
fn healthy_single_node_takes_no_action_anywhere() {
    let r = run_scenario(&single_node(), &quick(&Method::ALL)).unwrap();
    assert!(r.warnings.is_empty(), "{:?}", r.warnings);
    let Some(MdpSection::Solved {
        value,
        realized_actions,
        simulated_mean_cost,
        ..
    }) = &r.mdp
    else {
        panic!("mdp section missing");
    };
    assert_eq!(*value, 0.0);
    assert_eq!(*simulated_mean_cost, 0.0);
    assert!(realized_actions.iter().flatten().all(|&u| !u));
    let c = r.transnn_control.as_ref().unwrap();
    assert!(c.schedule.iter().flatten().all(|&u| !u));
    assert_eq!(c.j2, 0.0);
    let ec = r.exact_chain.as_ref().unwrap();
    assert!(ec.marginals.iter().flatten().all(|&m| m == 0.0));
    let cmp = r.comparison.as_ref().unwrap();
    assert_eq!(cmp.mdp_actions, 0);
    assert_eq!(cmp.transnn_actions, 0);
    assert!(cmp.first_step_agreement);
}

#[test]
fn useless_vaccine_gives_full_agreement_without_actions() {
    let mut sc = Scenario::load(bundled_scenario()).unwrap();
    sc.params = CostParams::new(100.0, 1.0, sc.params.horizon).unwrap();
    let r = run_loaded(
        "useless",
        &sc,
        &quick(&[Method::Mdp, Method::TransnnControl]),
    )
    .unwrap();
    let cmp = r.comparison.unwrap();
    assert_eq!(cmp.mdp_actions, 0);
    assert_eq!(cmp.transnn_actions, 0);
    assert_eq!(cmp.inclusion_fraction, 1.0);
    assert!(cmp.first_step_agreement);
    let d = r.dominance.unwrap();
    assert!(d.holds);
    // with no action either way both costs are the uncontrolled expectation
    assert!((d.mdp_value - d.transnn_schedule_cost).abs() < 1e-9 * d.mdp_value);
}

#[test]
fn mdp_is_skipped_with_a_reason_above_the_cap() {
    let sc = Scenario {
        network: random_net(6, 4, 2, false),
        params: CostParams::new(100.0, 0.3, 4).unwrap(),
        initial: ProbState::new(vec![1.0, 0.0, 0.0, 0.0, 0.0, 0.0]).unwrap(),
        seed: 1,
    };
    let opts = RunOptions {
        mdp_cap: 5,
        ..quick(&Method::ALL)
    };
    let r = run_loaded("big", &sc, &opts).unwrap();
    match &r.mdp {
        Some(MdpSection::Skipped { reason }) => assert!(reason.contains("exceeds"), "{reason}"),
        other => panic!("expected a skip, got {other:?}"),
    }
    assert!(r.comparison.is_none());
    assert!(r.dominance.is_none());
    assert!(r
        .transnn_control
        .as_ref()
        .unwrap()
        .exact_chain_cost
        .is_none());
    assert!(r.seconds(Method::Mdp).is_none());
    assert!(r.seconds(Method::TransnnControl).is_some());

    let skipped = run_scenario(
        &bundled_scenario(),
        &RunOptions {
            skip_mdp: true,
            ..quick(&[Method::Mdp])
        },
    )
    .unwrap();
    assert!(matches!(skipped.mdp, Some(MdpSection::Skipped { .. })));
}

#[test]
fn every_artifact_is_written() {
    let dir = tempfile::tempdir().unwrap();
    let opts = RunOptions {
        out_dir: Some(dir.path().to_path_buf()),
        ..quick(&Method::ALL)
    };
    run_scenario(&bundled_scenario(), &opts).unwrap();
    for name in [
        "result.json",
        "timing.csv",
        "marginals.csv",
        "transnn_p.csv",
        "transnn_s.csv",
        "linear_bound.csv",
        "mdp_tables.json",
        "traces.csv",
        "actions_mdp.csv",
        "actions_transnn_control.csv",
        "control_p.csv",
        "control_s.csv",
        "adjoint.csv",
        "delta_h.csv",
        "control.json",
    ] {
        let path = dir.path().join(name);
        assert!(path.is_file(), "{name} missing");
        assert!(std::fs::metadata(&path).unwrap().len() > 0, "{name} empty");
    }
    let mut rdr = csv::Reader::from_path(dir.path().join("actions_mdp.csv")).unwrap();
    assert_eq!(rdr.headers().unwrap(), vec!["k", "node", "action"]);
    assert_eq!(rdr.records().count(), 5 * 10);
    let tables: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("mdp_tables.json")).unwrap())
            .unwrap();
    assert_eq!(tables["entries"].as_array().unwrap().len(), 11 * 32);
}

#[test]
fn repeated_runs_are_identical_apart_from_timing() {
    let opts = quick(&Method::ALL);
    let a = run_scenario(&bundled_scenario(), &opts).unwrap();
    let b = run_scenario(&bundled_scenario(), &opts).unwrap();
    assert_eq!(a.without_timing(), b.without_timing());
    let other = run_scenario(
        &bundled_scenario(),
        &RunOptions {
            seed: Some(1),
            ..quick(&[Method::ExactChain])
        },
    )
    .unwrap();
    assert_ne!(
        other.exact_chain.unwrap().marginals,
        a.exact_chain.unwrap().marginals
    );
}

#[test]
fn optimal_cost_never_exceeds_the_open_loop_schedule() {
    let params = CostParams::new(100.0, 0.3, 6).unwrap();
    for seed in 0..8 {
        let sc = Scenario {
            network: random_net(4, 6, seed, seed % 2 == 0),
            params,
            initial: ProbState::new(vec![1.0, 0.0, 0.5, 0.0]).unwrap(),
            seed,
        };
        let r = run_loaded("dom", &sc, &quick(&[Method::Mdp, Method::TransnnControl])).unwrap();
        let d = r.dominance.unwrap();
        assert!(d.holds, "seed {seed}: {d:?}");
    }
}

#[test]
fn debug_runs_cross_check_delta_h_against_the_hamiltonian() {
    let r = run_scenario(&bundled_scenario(), &quick(&[Method::TransnnControl])).unwrap();
    let check = r.transnn_control.unwrap().delta_h_check;
    if cfg!(debug_assertions) {
        assert!(check.unwrap() <= 1e-9);
    } else {
        assert!(check.is_none());
    }
}
