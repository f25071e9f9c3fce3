use std::f64::consts::PI;

use fgps_core::frac_diff::FracDiffMatrix;
use fgps_core::gegenbauer::QuadratureRule;
use fgps_core::pipeline::{cache_file_name, run, SolverParams};
use fgps_core::problems::catalog;
use fgps_core::{FgpsError, PeriodicGrid};

fn params() -> SolverParams {
    SolverParams {
        n1: 4,
        n2: 4,
        n_g: 200,
        lambda: 0.0,
    }
}

#[test]
fn residual_is_small_for_every_problem() {
    for (id, orders) in [(1, None), (2, None), (3, None), (4, Some((0.8, 0.9))), (4, Some((0.99, 0.99)))] {
        let spec = catalog(id, orders).unwrap();
        let out = run(&spec, &params(), None).unwrap();
        let f_norm = out.system.f_vector().amax();
        assert!(
            out.solution.residual_inf <= 1e-10 * (1.0 + f_norm),
            "problem {id}: residual {}",
            out.solution.residual_inf
        );
    }
}

#[test]
fn initial_data_is_assigned_exactly() {
    let spec = catalog(2, None).unwrap();
    let out = run(&spec, &SolverParams { n1: 6, n2: 8, ..params() }, None).unwrap();
    let u = &out.solution.grid;
    for l in 0..6 {
        assert_eq!(u.get(l, 0), spec.init_g(u.grid_x().node(l)));
    }
    for j in 0..8 {
        assert_eq!(u.get(0, j), spec.init_h(u.grid_t().node(j)));
    }
}

#[test]
fn unit_orders_give_singular_system() {
    // The Fourier first-derivative matrix annihilates the Nyquist mode, so with
    // integer order in both variables the collocation matrix has a null vector.
    let spec = catalog(4, Some((1.0, 1.0))).unwrap();
    for n in [4, 8] {
        let err = run(&spec, &SolverParams { n1: n, n2: n, ..params() }, None).unwrap_err();
        assert!(matches!(err, FgpsError::SingularSystem { .. }), "{err:?}");
    }
}

#[test]
fn repeated_runs_are_deterministic() {
    let spec = catalog(3, None).unwrap();
    let a = run(&spec, &params(), None).unwrap();
    let b = run(&spec, &params(), None).unwrap();
    assert_eq!(a.solution.unknowns, b.solution.unknowns);
    assert_eq!(a.kappa, b.kappa);
}

#[test]
fn cached_matrix_is_reused_bit_for_bit() {
    let dir = tempfile::tempdir().unwrap();
    let grid = PeriodicGrid::new(2.0 * PI, 8).unwrap();
    let rule = QuadratureRule::new(64, 0.5).unwrap();
    let built = FracDiffMatrix::build(&grid, &rule, 0.7, 30.0).unwrap();
    let path = dir.path().join(cache_file_name(&grid, 0.7, 30.0, 0.5, 64));
    built.save(&path).unwrap();
    let loaded = FracDiffMatrix::load(&path).unwrap();
    assert_eq!(built, loaded);
    assert!(loaded.matches(&grid, 0.7, 30.0, 0.5, 64));
}

#[test]
fn corrupted_cache_is_rebuilt() {
    let dir = tempfile::tempdir().unwrap();
    let spec = catalog(1, None).unwrap();
    let clean = run(&spec, &params(), None).unwrap();
    run(&spec, &params(), Some(dir.path())).unwrap();
    for entry in std::fs::read_dir(dir.path()).unwrap() {
        std::fs::write(entry.unwrap().path(), "not,a,cache\n").unwrap();
    }
    let again = run(&spec, &params(), Some(dir.path())).unwrap();
    assert_eq!(clean.solution.unknowns, again.solution.unknowns);
}

#[test]
fn inconsistent_corner_is_rejected() {
    use std::sync::Arc;
    use fgps_core::problems::{ProblemSpec, SourceTerm};
    let spec = ProblemSpec::new(
        "bad corner",
        (2.0 * PI, 2.0 * PI),
        (0.5, 0.5),
        30.0,
        Arc::new(|_, _| 1.0),
        Arc::new(|_, _| 1.0),
        SourceTerm::ClosedForm(Arc::new(|_, _| 0.0)),
        Arc::new(|_| 1.0),
        Arc::new(|_| 0.0),
        None,
    )
    .unwrap();
    assert!(matches!(
        run(&spec, &params(), None),
        Err(FgpsError::InconsistentInitialData { .. })
    ));
}

#[test]
fn quadrature_rule_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("rule.csv");
    let rule = QuadratureRule::new(30, 1.5).unwrap();
    rule.save(&path).unwrap();
    let loaded = QuadratureRule::load(&path).unwrap();
    assert_eq!(rule.nodes(), loaded.nodes());
    assert_eq!(rule.weights(), loaded.weights());
}

