use apig_web::{apig_path, apig_path_impl, beamforming_trace, beamforming_trace_impl, thompson_contraction_impl};

#[test]
fn quartic_path_descends_to_a_stationary_point() {
    let path = apig_path_impl("quartic", [1.8, -0.3], 1e-2, "B1", 4).unwrap();
    assert_eq!(path.status, "converged");
    assert_eq!(path.points.len(), path.lambdas.len());
    assert_eq!(path.grid.values.len(), path.grid.n * path.grid.n);
    // Starting at x = 1.8 the path settles in the right-hand well.
    assert!(path.points.last().unwrap()[0] > 0.5);
}

#[test]
fn nnls_path_reaches_the_reference() {
    let path = apig_path_impl("nnls", [1.0, 1.0], 0.0, "B2", 2).unwrap();
    let last = path.points.last().unwrap();
    let star = path.x_star.unwrap();
    assert!((last[0] - star[0]).hypot(last[1] - star[1]) < 1e-5);
}

#[test]
fn bad_inputs_come_back_as_error_json() {
    let v: serde_json::Value = serde_json::from_str(&apig_path("cubic", 0.0, 0.0, 0.0, "B1", 0)).unwrap();
    assert!(v["error"].as_str().unwrap().contains("cubic"));
    let v: serde_json::Value = serde_json::from_str(&beamforming_trace(3, 3, 3.0, 12.0, 0, "Z")).unwrap();
    assert!(v.get("error").is_some());
}

#[test]
fn beamforming_trace_is_consistent() {
    let t = beamforming_trace_impl(4, 3, 1.0, 12.0, 1, "A").unwrap();
    assert_eq!(t.status, "converged");
    assert_eq!(t.deltas.len(), t.dual_values.len());
    assert_eq!(t.fp_iters.iter().sum::<u64>(), t.total_fp_iters);
    assert!(t.multipliers.iter().all(|&x| x >= 0.0));
}

#[test]
fn contraction_shrinks_the_gap() {
    let t = thompson_contraction_impl(4, 3, 1.0, 2.0, 40, 9).unwrap();
    assert!(t.worst_ratio < 1.0);
    assert!(t.gap.windows(2).all(|w| w[1] <= w[0]));
    assert!(t.to_fixed_point[0].last().unwrap() < &1e-6);
}
