use approx::{assert_abs_diff_eq, assert_relative_eq};
use datko_core::expr::parse_generator;
use datko_core::family::{BackendKind, EvolutionFamily, NormMethod};
use datko_core::linalg::{Matrix, NormKind, StateVector};
use datko_core::CoreError;
use std::f64::consts::{FRAC_PI_2, PI};

// Oracle: classic fixed-step RK4 for x' = A x, written here so the
// adaptive integrator is checked against an independent scheme.
fn rk4(a: [[f64; 2]; 2], s: f64, t: f64, x: [f64; 2], steps: usize) -> [f64; 2] {
    let h = (t - s) / steps as f64;
    let f = |y: [f64; 2]| {
        [
            a[0][0] * y[0] + a[0][1] * y[1],
            a[1][0] * y[0] + a[1][1] * y[1],
        ]
    };
    let mut y = x;
    for _ in 0..steps {
        let k1 = f(y);
        let k2 = f([y[0] + 0.5 * h * k1[0], y[1] + 0.5 * h * k1[1]]);
        let k3 = f([y[0] + 0.5 * h * k2[0], y[1] + 0.5 * h * k2[1]]);
        let k4 = f([y[0] + h * k3[0], y[1] + h * k3[1]]);
        y = [
            y[0] + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
            y[1] + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
        ];
    }
    y
}

// Oracle: largest singular value of a 2x2 matrix from the closed-form
// eigenvalues of M^T M.
fn opnorm2(m: [[f64; 2]; 2]) -> f64 {
    let [[a, b], [c, d]] = m;
    let g11 = a * a + c * c;
    let g12 = a * b + c * d;
    let g22 = b * b + d * d;
    let tr = g11 + g22;
    let det = g11 * g22 - g12 * g12;
    let disc = (tr * tr - 4.0 * det).max(0.0).sqrt();
    ((tr + disc) / 2.0).sqrt()
}

fn decay_osc() -> EvolutionFamily {
    let f = parse_generator("-2*t + t*sin(t)^2").unwrap();
    EvolutionFamily::scalar_exp(f, 1, NormKind::Euclidean).unwrap()
}

fn two_by_two(a: [[f64; 2]; 2], tol: f64) -> EvolutionFamily {
    let m = Matrix::from_rows(&[a[0].to_vec(), a[1].to_vec()]).unwrap();
    EvolutionFamily::matrix_ode(m, tol, 0.1, NormKind::Euclidean).unwrap()
}

// e^{-(t - s)} sampled on a uniform grid, every ordered pair present.
fn tabulated_decay(n: usize, h: f64) -> EvolutionFamily {
    let mut rows = Vec::new();
    for i in 0..=n {
        for j in 0..=i {
            let (t, s) = (h * i as f64, h * j as f64);
            rows.push((t, s, vec![(-(t - s)).exp()]));
        }
    }
    EvolutionFamily::tabulated(&rows, NormKind::Euclidean).unwrap()
}

#[test]
fn scalar_closed_form_values() {
    let fam = decay_osc();
    assert_eq!(fam.kind(), BackendKind::ScalarExp);
    assert!(fam.reversible());
    // f(pi) - f(pi/2) = -2 pi - (-pi/2) = -3 pi / 2.
    let y = fam.apply_raw(PI, FRAC_PI_2, &[1.0]).unwrap();
    assert_relative_eq!(y[0], (-1.5 * PI).exp(), max_relative = 1e-13);
    let est = fam.operator_norm(PI, FRAC_PI_2).unwrap();
    assert_eq!(est.method, NormMethod::ClosedFormScalar);
    assert_relative_eq!(est.value, (-1.5 * PI).exp(), max_relative = 1e-13);
    assert_abs_diff_eq!(est.value, 0.0089833, epsilon = 1e-6);
    assert_abs_diff_eq!(fam.log_operator_norm(PI, FRAC_PI_2).unwrap(), -1.5 * PI, epsilon = 1e-12);
}

#[test]
fn scalar_identity_is_exact_and_reversal_inverts() {
    let fam = decay_osc();
    let x = [1.75];
    assert_eq!(fam.apply_raw(2.3, 2.3, &x).unwrap(), vec![1.75]);
    let fwd = fam.apply_raw(5.0, 1.0, &x).unwrap();
    let back = fam.apply_raw(1.0, 5.0, &fwd).unwrap();
    assert_relative_eq!(back[0], x[0], max_relative = 1e-12);
}

#[test]
fn scalar_family_scales_every_component() {
    let f = parse_generator("-t").unwrap();
    let fam = EvolutionFamily::scalar_exp(f, 3, NormKind::Euclidean).unwrap();
    let y = fam.apply_raw(2.0, 0.0, &[1.0, -2.0, 4.0]).unwrap();
    let c = (-2.0f64).exp();
    assert_relative_eq!(y[0], c, max_relative = 1e-14);
    assert_relative_eq!(y[1], -2.0 * c, max_relative = 1e-14);
    assert_relative_eq!(y[2], 4.0 * c, max_relative = 1e-14);
}

#[test]
fn scalar_overflow_is_an_error_but_log_norm_is_not() {
    let fam =
        EvolutionFamily::scalar_exp(parse_generator("t").unwrap(), 1, NormKind::Euclidean).unwrap();
    assert!(matches!(fam.apply_raw(800.0, 0.0, &[1.0]), Err(CoreError::Overflow { .. })));
    assert_abs_diff_eq!(fam.log_operator_norm(800.0, 0.0).unwrap(), 800.0, epsilon = 1e-9);
}

#[test]
fn diagonal_ode_matches_exponentials() {
    let fam = two_by_two([[-1.0, 0.0], [0.0, -3.0]], 1e-10);
    assert_eq!(fam.kind(), BackendKind::MatrixOde);
    for (t, s) in [(1.0, 0.0), (4.5, 2.0), (10.0, 3.0)] {
        let d = t - s;
        let y = fam.apply_raw(t, s, &[2.0, -1.0]).unwrap();
        // Error control is on the vector norm, so components that decay
        // far below it are only accurate in absolute terms.
        assert_relative_eq!(y[0], 2.0 * (-d).exp(), max_relative = 1e-9, epsilon = 1e-11);
        assert_relative_eq!(y[1], -(-3.0 * d).exp(), max_relative = 1e-9, epsilon = 1e-11);
        // Largest singular value of diag(e^{-d}, e^{-3d}) is e^{-d}.
        let est = fam.operator_norm(t, s).unwrap();
        assert_eq!(est.method, NormMethod::PowerIteration);
        assert_relative_eq!(est.value, (-d).exp(), max_relative = 1e-9, epsilon = 1e-11);
    }
}

#[test]
fn max_norm_uses_row_sums() {
    let m = Matrix::from_rows(&[vec![-1.0, 0.0], vec![0.0, -3.0]]).unwrap();
    let fam = EvolutionFamily::matrix_ode(m, 1e-10, 0.1, NormKind::Max).unwrap();
    let est = fam.operator_norm(2.0, 0.0).unwrap();
    assert_eq!(est.method, NormMethod::MaxRowSum);
    assert_relative_eq!(est.value, (-2.0f64).exp(), max_relative = 1e-9);
}

#[test]
fn nonnormal_ode_matches_rk4_oracle() {
    let a = [[-1.0, 2.0], [0.5, -2.0]];
    let fam = two_by_two(a, 1e-10);
    let x = [0.7, -0.4];
    let y = fam.apply_raw(2.7, 0.3, &x).unwrap();
    let z = rk4(a, 0.3, 2.7, x, 200_000);
    assert_relative_eq!(y[0], z[0], max_relative = 1e-8);
    assert_relative_eq!(y[1], z[1], max_relative = 1e-8);
}

#[test]
fn power_iteration_matches_closed_form_singular_value() {
    let a = [[-1.0, 2.0], [0.5, -2.0]];
    let fam = two_by_two(a, 1e-10);
    for (t, s) in [(1.0, 0.0), (2.5, 0.5), (6.0, 1.0)] {
        // Propagator columns from the RK4 oracle.
        let c0 = rk4(a, s, t, [1.0, 0.0], 100_000);
        let c1 = rk4(a, s, t, [0.0, 1.0], 100_000);
        let oracle = opnorm2([[c0[0], c1[0]], [c0[1], c1[1]]]);
        assert_relative_eq!(fam.operator_norm(t, s).unwrap().value, oracle, max_relative = 1e-8);
    }
}

#[test]
fn jordan_block_matches_closed_form() {
    // e^{At} = e^{-t} [[1, t], [0, 1]] for A = [[-1, 1], [0, -1]].
    let fam = two_by_two([[-1.0, 1.0], [0.0, -1.0]], 1e-10);
    let (t, s) = (3.0, 0.5);
    let d: f64 = t - s;
    let y = fam.apply_raw(t, s, &[1.0, 2.0]).unwrap();
    assert_relative_eq!(y[0], (-d).exp() * (1.0 + 2.0 * d), max_relative = 1e-9);
    assert_relative_eq!(y[1], (-d).exp() * 2.0, max_relative = 1e-9);
    let oracle = (-d).exp() * opnorm2([[1.0, d], [0.0, 1.0]]);
    assert_relative_eq!(fam.operator_norm(t, s).unwrap().value, oracle, max_relative = 1e-9);
}

#[test]
fn rotation_preserves_norms() {
    let fam = two_by_two([[0.0, 1.0], [-1.0, 0.0]], 1e-10);
    let y = fam.apply_raw(2.0, 0.0, &[1.0, 0.0]).unwrap();
    assert_relative_eq!(y[0], 2.0f64.cos(), max_relative = 1e-9);
    assert_relative_eq!(y[1], -(2.0f64.sin()), max_relative = 1e-9);
    assert_relative_eq!(fam.operator_norm(7.0, 1.5).unwrap().value, 1.0, max_relative = 1e-9);
}

#[test]
fn trajectory_agrees_with_pointwise_apply() {
    let fam = two_by_two([[-1.0, 2.0], [0.5, -2.0]], 1e-10);
    let x = [1.0, 1.0];
    let outputs = [0.5, 1.0, 2.0, 3.5, 5.0];
    let traj = fam.trajectory(0.5, &x, &outputs).unwrap();
    for (k, &t) in outputs.iter().enumerate() {
        let y = fam.apply_raw(t, 0.5, &x).unwrap();
        assert_relative_eq!(traj[k][0], y[0], max_relative = 1e-8);
        assert_relative_eq!(traj[k][1], y[1], max_relative = 1e-8);
    }
}

#[test]
fn propagator_columns_are_basis_images() {
    let fam = two_by_two([[-1.0, 2.0], [0.5, -2.0]], 1e-10);
    let p = fam.propagator(2.0, 0.0).unwrap();
    let e0 = fam.apply_raw(2.0, 0.0, &[1.0, 0.0]).unwrap();
    let e1 = fam.apply_raw(2.0, 0.0, &[0.0, 1.0]).unwrap();
    assert_relative_eq!(p.get(0, 0), e0[0], max_relative = 1e-8);
    assert_relative_eq!(p.get(1, 0), e0[1], max_relative = 1e-8);
    assert_relative_eq!(p.get(0, 1), e1[0], max_relative = 1e-8);
    assert_relative_eq!(p.get(1, 1), e1[1], max_relative = 1e-8);
    // The diagonal pair is the identity, exactly.
    let id = fam.propagator(2.0, 2.0).unwrap();
    assert_eq!((id.get(0, 0), id.get(0, 1)), (1.0, 0.0));
    assert_eq!((id.get(1, 0), id.get(1, 1)), (0.0, 1.0));
}

#[test]
fn norm_trajectory_matches_pointwise_norms() {
    let fam = two_by_two([[-1.0, 2.0], [0.5, -2.0]], 1e-10);
    let outputs = [1.0, 2.0, 4.0, 7.0];
    let along = fam.operator_norm_trajectory(0.0, &outputs).unwrap();
    for (k, &t) in outputs.iter().enumerate() {
        let single = fam.operator_norm(t, 0.0).unwrap();
        assert_relative_eq!(along[k].value, single.value, max_relative = 1e-9);
    }
}

#[test]
fn cocycle_deviations_are_small() {
    let scalar = decay_osc();
    let rep = scalar.check_cocycle(0.0, 12.0, 40, 7).unwrap();
    assert_eq!(rep.samples, 40);
    assert!(rep.max_identity_dev <= 1e-12, "identity dev {}", rep.max_identity_dev);
    assert!(rep.max_composition_dev <= 1e-12, "composition dev {}", rep.max_composition_dev);
    assert!(rep.max_reversal_dev.unwrap() <= 1e-11);

    let ode = two_by_two([[-1.0, 2.0], [0.5, -2.0]], 1e-10);
    let rep = ode.check_cocycle(0.0, 8.0, 25, 7).unwrap();
    assert!(rep.max_composition_dev <= 1e-8, "composition dev {}", rep.max_composition_dev);
    // Backward integration amplifies error like e^{|lambda_min| span};
    // the reversal claim only means something on a short span.
    let rep = ode.check_cocycle(0.0, 2.5, 25, 7).unwrap();
    assert!(rep.max_reversal_dev.unwrap() <= 1e-6, "reversal dev {:?}", rep.max_reversal_dev);
}

#[test]
fn tabulated_interpolates_between_grid_pairs() {
    let fam = tabulated_decay(16, 0.25);
    assert_eq!(fam.kind(), BackendKind::Tabulated);
    assert!(!fam.reversible());
    assert_eq!(fam.domain_start(), Some(0.0));
    assert_eq!(fam.domain_end(), Some(4.0));
    for (t, s) in [(1.37, 0.4), (3.9, 0.1), (2.0, 1.9), (0.3, 0.05)] {
        let y = fam.apply_raw(t, s, &[1.0]).unwrap();
        assert_relative_eq!(y[0], (-(t - s)).exp(), max_relative = 0.02);
    }
    // On-grid pairs are exact table entries.
    let y = fam.apply_raw(2.0, 0.75, &[1.0]).unwrap();
    assert_relative_eq!(y[0], (-1.25f64).exp(), max_relative = 1e-15);
}

#[test]
fn tabulated_identity_is_exact_off_grid() {
    let fam = tabulated_decay(16, 0.25);
    assert_eq!(fam.apply_raw(1.3, 1.3, &[2.5]).unwrap(), vec![2.5]);
}

#[test]
fn tabulated_rejects_reversal_and_out_of_domain() {
    let fam = tabulated_decay(16, 0.25);
    assert!(matches!(fam.apply_raw(0.5, 1.5, &[1.0]), Err(CoreError::TimeOrder { .. })));
    assert!(matches!(fam.apply_raw(5.0, 0.0, &[1.0]), Err(CoreError::OutOfDomain { .. })));
    assert!(matches!(fam.apply_raw(2.0, -1.0, &[1.0]), Err(CoreError::OutOfDomain { .. })));
}

#[test]
fn tabulated_cocycle_holds_within_interpolation_error() {
    let fam = tabulated_decay(16, 0.25);
    let rep = fam.check_cocycle(0.0, 4.0, 30, 11).unwrap();
    assert!(rep.max_reversal_dev.is_none());
    assert!(rep.max_composition_dev <= 0.05, "composition dev {}", rep.max_composition_dev);
}

#[test]
fn tabulated_diagonal_defaults_to_identity() {
    // Off-diagonal rows only; U(t, t) = Id is implied.
    let mut rows = Vec::new();
    for i in 0..=8usize {
        for j in 0..i {
            let (t, s) = (0.5 * i as f64, 0.5 * j as f64);
            rows.push((t, s, vec![(-(t - s)).exp()]));
        }
    }
    let fam = EvolutionFamily::tabulated(&rows, NormKind::Euclidean).unwrap();
    // Interpolates between the implied U(0, 0) = 1 and U(0.5, 0); the
    // step-0.5 chord of e^{-x} sits about 3% above the curve.
    let y = fam.apply_raw(0.25, 0.0, &[1.0]).unwrap();
    assert_relative_eq!(y[0], (-0.25f64).exp(), max_relative = 0.04);
}

#[test]
fn tabulated_construction_rejects_bad_grids() {
    let id = vec![1.0];
    // A pair with t < s.
    let rows = vec![(0.0, 1.0, id.clone()), (1.0, 0.0, id.clone())];
    assert!(matches!(
        EvolutionFamily::tabulated(&rows, NormKind::Euclidean),
        Err(CoreError::TabulatedGrid { .. })
    ));
    // Duplicate pair.
    let rows = vec![
        (1.0, 0.0, id.clone()),
        (1.0, 0.0, id.clone()),
        (2.0, 0.0, id.clone()),
        (2.0, 1.0, id.clone()),
    ];
    assert!(matches!(
        EvolutionFamily::tabulated(&rows, NormKind::Euclidean),
        Err(CoreError::TabulatedGrid { .. })
    ));
    // Missing sub-diagonal pair (2, 1).
    let rows = vec![(1.0, 0.0, id.clone()), (2.0, 0.0, id.clone())];
    assert!(matches!(
        EvolutionFamily::tabulated(&rows, NormKind::Euclidean),
        Err(CoreError::TabulatedGrid { .. })
    ));
    // Times off the uniform grid.
    let rows = vec![(1.0, 0.0, id.clone()), (2.7, 0.0, id.clone()), (2.7, 1.0, id.clone())];
    assert!(matches!(
        EvolutionFamily::tabulated(&rows, NormKind::Euclidean),
        Err(CoreError::TabulatedGrid { .. })
    ));
    // Entry count that is not a square.
    let rows = vec![(1.0, 0.0, vec![1.0, 0.0, 0.0])];
    assert!(matches!(
        EvolutionFamily::tabulated(&rows, NormKind::Euclidean),
        Err(CoreError::TabulatedGrid { .. })
    ));
    // Ragged blocks.
    let rows = vec![
        (1.0, 0.0, vec![1.0, 0.0, 0.0, 1.0]),
        (2.0, 0.0, vec![1.0]),
        (2.0, 1.0, vec![1.0, 0.0, 0.0, 1.0]),
    ];
    assert!(matches!(
        EvolutionFamily::tabulated(&rows, NormKind::Euclidean),
        Err(CoreError::TabulatedGrid { .. })
    ));
}

#[test]
fn dimension_mismatch_and_eval_errors_propagate() {
    let fam = decay_osc();
    assert!(matches!(
        fam.apply_raw(1.0, 0.0, &[1.0, 2.0]),
        Err(CoreError::DimensionMismatch { expected: 1, got: 2 })
    ));
    let fam = EvolutionFamily::scalar_exp(
        parse_generator("1/(t - 1)").unwrap(),
        1,
        NormKind::Euclidean,
    )
    .unwrap();
    assert!(matches!(fam.apply_raw(1.0, 0.0, &[1.0]), Err(CoreError::DivisionByZero { .. })));
}

#[test]
fn state_vector_and_matrix_validation() {
    assert!(matches!(
        StateVector::new(vec![], NormKind::Euclidean),
        Err(CoreError::EmptyInput { .. })
    ));
    assert!(matches!(
        StateVector::new(vec![1.0, f64::NAN], NormKind::Euclidean),
        Err(CoreError::NonFiniteComponent { index: 1 })
    ));
    assert!(matches!(
        Matrix::from_rows(&[vec![1.0, 2.0]]),
        Err(CoreError::DimensionMismatch { .. })
    ));
    let v = StateVector::new(vec![3.0, 4.0], NormKind::Euclidean).unwrap();
    assert_relative_eq!(v.norm(), 5.0);
    let w = StateVector::new(vec![3.0, -4.0], NormKind::Max).unwrap();
    assert_relative_eq!(w.norm(), 4.0);
}

#[test]
fn constructor_parameter_validation() {
    let f = parse_generator("-t").unwrap();
    assert!(EvolutionFamily::scalar_exp(f, 0, NormKind::Euclidean).is_err());
    let m = Matrix::identity(2);
    assert!(EvolutionFamily::matrix_ode(m.clone(), 0.0, 0.1, NormKind::Euclidean).is_err());
    assert!(EvolutionFamily::matrix_ode(m, 1e-10, 0.0, NormKind::Euclidean).is_err());
}
