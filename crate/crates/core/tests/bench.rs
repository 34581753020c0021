use logcontrast::bench::{
    aee_curve, cv_loss, generate_synthetic, run_replications, BenchConfig, CurveMethod, QNorm,
    SyntheticSpec,
};
use logcontrast::penalty::PenaltyKind;
use logcontrast::{partition, PenaltySpec, SolverConfig, SolverRegistry};

fn small(methods: &[&str]) -> BenchConfig {
    BenchConfig {
        n: 2000,
        machines: vec![2, 4],
        methods: methods.iter().map(|m| m.to_string()).collect(),
        penalties: vec![PenaltyKind::Lasso, PenaltyKind::AdaptiveLasso],
        reps: 1,
        grid_size: 10,
        solver: SolverConfig { rho: 1.0, ..Default::default() },
        ..Default::default()
    }
}

#[test]
fn one_replication_fills_every_cell() {
    let report = run_replications(&small(&["dsgcdmm", "acdmm"]), &SolverRegistry::builtin()).unwrap();
    assert_eq!(report.cells.len(), 2 * 2 * 2);
    assert_eq!(report.rows.len(), 8);
    for cell in &report.cells {
        assert_eq!(cell.reps, 1);
        assert!(cell.failures.is_empty());
        assert_eq!(cell.aee.stderr, 0.0);
    }
    let cell = report.cell("acdmm", PenaltyKind::AdaptiveLasso, 4, 0.2).unwrap();
    assert_eq!(cell.label, "AC-AL");
}

#[test]
fn method_order_does_not_change_results() {
    let registry = SolverRegistry::builtin();
    let a = run_replications(&small(&["gcdmm", "dscdmm"]), &registry).unwrap();
    let b = run_replications(&small(&["dscdmm", "gcdmm"]), &registry).unwrap();
    assert_eq!(a.cells.len(), b.cells.len());
    for (x, y) in a.cells.iter().zip(&b.cells) {
        assert_eq!(x.method, y.method);
        assert_eq!(x.aee, y.aee);
        assert_eq!(x.fp, y.fp);
    }
}

#[test]
fn zero_reps_and_unknown_methods_are_rejected() {
    let registry = SolverRegistry::builtin();
    let config = BenchConfig { reps: 0, ..small(&["gcdmm"]) };
    assert!(run_replications(&config, &registry).is_err());
    assert!(run_replications(&small(&["lars"]), &registry).is_err());
}

#[test]
fn chain_topology_failures_are_recorded_per_cell() {
    let config = BenchConfig { machines: vec![3], ..small(&["dsgcdmm", "gcdmm"]) };
    let report = run_replications(&config, &SolverRegistry::builtin()).unwrap();
    let chain = report.cell("dsgcdmm", PenaltyKind::Lasso, 3, 0.2).unwrap();
    assert_eq!(chain.reps, 0);
    assert_eq!(chain.failures.len(), 1);
    assert!(report.cell("gcdmm", PenaltyKind::Lasso, 3, 0.2).unwrap().failures.is_empty());
}

#[test]
fn cv_loss_uses_every_fold() {
    let data = generate_synthetic(&SyntheticSpec { n: 1000, seed: 4, ..Default::default() }).unwrap();
    let solver = SolverRegistry::builtin().get("dscdmm").unwrap();
    let penalty = PenaltySpec::lasso(0.01, data.design.d());
    let config = SolverConfig { rho: 1.0, ..Default::default() };
    let two = cv_loss(&data.design, solver.as_ref(), 4, &penalty, &config, QNorm::Two, 5).unwrap();
    assert_eq!(two.fold_losses.len(), 5);
    assert!(two.residuals.iter().all(|r| r.len() == 200));
    assert!(two.warnings.is_empty());
    let mean = two.fold_losses.iter().sum::<f64>() / 5.0;
    assert!((two.loss - mean).abs() <= 1e-15);
    // Norm ordering on the same residuals.
    let one = cv_loss(&data.design, solver.as_ref(), 4, &penalty, &config, QNorm::One, 5).unwrap();
    let inf = cv_loss(&data.design, solver.as_ref(), 4, &penalty, &config, QNorm::Inf, 5).unwrap();
    assert!(inf.loss <= two.loss && two.loss <= one.loss);
    // Held-out error is near the noise level 0.2.
    let rmse = (one.residuals.iter().map(|r| r.dot(r)).sum::<f64>() / 1000.0).sqrt();
    assert!(rmse < 0.3, "{rmse}");
    assert!(cv_loss(&data.design, solver.as_ref(), 4, &penalty, &config, QNorm::Two, 1).is_err());
}

#[test]
fn aee_curve_samples_requested_rounds() {
    let data = generate_synthetic(&SyntheticSpec { n: 1000, seed: 5, ..Default::default() }).unwrap();
    let sharded = partition(&data.design, 4).unwrap();
    let penalty = PenaltySpec::lasso(0.01, data.design.d());
    let config = SolverConfig { rho: 1.0, ..Default::default() };
    for method in [CurveMethod::Chain, CurveMethod::Central] {
        let points = aee_curve(&sharded, &data.truth, &penalty, &config, method, &[5, 1, 20], &[2, 10], None).unwrap();
        let rounds: Vec<_> = points.iter().map(|p| (p.sweeps, p.rounds)).collect();
        assert_eq!(rounds, vec![(2, 1), (2, 5), (2, 20), (10, 1), (10, 5), (10, 20)]);
        assert!(points.iter().all(|p| p.distance.is_none()));
        assert!(points[2].aee < points[0].aee);
    }
}
