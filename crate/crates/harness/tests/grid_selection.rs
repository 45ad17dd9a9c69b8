use viopt_harness::{grid_search, parse_config_str, run_experiment, DEFAULT_STEP_GRID};

#[test]
fn slower_divergence_wins_for_simultaneous_steps() {
    // ‖ω‖² grows by 1 + η² per simultaneous step, so the smallest step is best;
    // extragradient contracts by 1 − η² + η⁴ and prefers a large one.
    let config = parse_config_str(
        r#"{"problem": {"kind": "bilinear_1d"}, "methods": [{"id": "sim_sgd"}, {"id": "extragradient"}],
            "iters": 200, "eval_stride": 50, "seeds": [1, 2], "start": [1.0, 1.0]}"#,
    )
    .unwrap();
    let out = run_experiment(&config, Some(2)).unwrap();
    let best = grid_search(&out.records).unwrap();
    assert_eq!(best[0].method, "sim_sgd");
    assert_eq!(best[0].step_size, DEFAULT_STEP_GRID[0]);
    assert_eq!(best[1].method, "extragradient");
    assert_eq!(best[1].step_size, *DEFAULT_STEP_GRID.last().unwrap());
    assert!(best[0].step_size < best[1].step_size);
    assert!(best.iter().all(|s| s.convergent));
}

#[test]
fn methods_that_always_diverge_are_flagged() {
    let config = parse_config_str(
        r#"{"problem": {"kind": "bilinear_1d"}, "methods": [{"id": "sim_sgd", "step_sizes": [2.0, 3.0]}],
            "iters": 3000, "eval_stride": 100, "seeds": [1], "start": [1.0, 1.0]}"#,
    )
    .unwrap();
    let best = grid_search(&run_experiment(&config, Some(1)).unwrap().records).unwrap();
    assert!(!best[0].convergent);
    assert_eq!(best[0].step_size, 2.0);
}
