use approx::{assert_abs_diff_eq, assert_relative_eq};
use datko_core::cut::{
    check_cut_invariance, check_cut_norm_bound, check_decay_bound, check_projection_algebra,
    cut_and_propagate, envelope_sup_norm, CutOperator,
};
use datko_core::envelope::EnvelopeConfig;
use datko_core::expr::parse_generator;
use datko_core::family::EvolutionFamily;
use datko_core::linalg::{Matrix, NormKind};
use datko_core::timefn::TimeFunction;
use datko_core::CoreError;
use std::f64::consts::PI;
use std::rc::Rc;

fn f_osc(t: f64) -> f64 {
    -2.0 * t + t * t.sin().powi(2)
}

fn decay_osc() -> Rc<EvolutionFamily> {
    let f = parse_generator("-2*t + t*sin(t)^2").unwrap();
    Rc::new(EvolutionFamily::scalar_exp(f, 1, NormKind::Euclidean).unwrap())
}

fn diag_ode() -> Rc<EvolutionFamily> {
    let a = Matrix::from_rows(&[vec![-1.0, 0.0], vec![0.0, -3.0]]).unwrap();
    Rc::new(EvolutionFamily::matrix_ode(a, 1e-10, 0.1, NormKind::Euclidean).unwrap())
}

fn tabulated_decay() -> Rc<EvolutionFamily> {
    let mut rows = Vec::new();
    for i in 0..=16usize {
        for j in 0..=i {
            let (t, s) = (0.25 * i as f64, 0.25 * j as f64);
            rows.push((t, s, vec![(-(t - s)).exp()]));
        }
    }
    Rc::new(EvolutionFamily::tabulated(&rows, NormKind::Euclidean).unwrap())
}

#[test]
fn cut_freezes_the_anchor_and_propagates_it() {
    let fam = decay_osc();
    let u = TimeFunction::closed_form(vec![parse_generator("cos(t)").unwrap()]).unwrap();
    let cut = cut_and_propagate(&fam, 2.0, &u).unwrap();
    // At the cut time the signal is untouched, bit for bit.
    assert_eq!(cut.eval(2.0).unwrap(), u.eval(2.0).unwrap());
    // Past it, the anchor value rides the family.
    let got = cut.eval(3.0).unwrap();
    assert_relative_eq!(got[0], (f_osc(3.0) - f_osc(2.0)).exp() * 2.0f64.cos(), max_relative = 1e-13);
    // Below the cut the original signal is untouched.
    assert_eq!(cut.eval(1.0).unwrap(), u.eval(1.0).unwrap());
}

#[test]
fn cut_of_a_matrix_family_matches_the_propagator() {
    let fam = diag_ode();
    let u = TimeFunction::constant(vec![1.0, -2.0]).unwrap();
    let cut = cut_and_propagate(&fam, 2.0, &u).unwrap();
    let got = cut.eval(3.0).unwrap();
    assert_relative_eq!(got[0], (-1.0f64).exp(), max_relative = 1e-9);
    assert_relative_eq!(got[1], -2.0 * (-3.0f64).exp(), max_relative = 1e-9);
}

#[test]
fn cut_of_a_sampled_signal_uses_the_interpolated_anchor() {
    let fam = decay_osc();
    let times: Vec<f64> = (0..=10).map(|i| i as f64).collect();
    let values: Vec<Vec<f64>> = times.iter().map(|&t| vec![1.0 + 0.1 * t]).collect();
    let u = TimeFunction::from_samples(times, values).unwrap();
    let cut = cut_and_propagate(&fam, 2.5, &u).unwrap();
    // Anchor is the linear interpolation 1.25.
    let got = cut.eval(6.0).unwrap();
    assert_relative_eq!(got[0], (f_osc(6.0) - f_osc(2.5)).exp() * 1.25, max_relative = 1e-12);
}

#[test]
fn cut_respects_the_family_domain() {
    let fam = tabulated_decay();
    assert!(matches!(
        CutOperator::new(Rc::clone(&fam), 5.0),
        Err(CoreError::OutOfDomain { .. })
    ));
    assert!(CutOperator::new(Rc::clone(&fam), f64::NAN).is_err());

    let u = TimeFunction::constant(vec![1.0]).unwrap();
    let cut = cut_and_propagate(&fam, 1.0, &u).unwrap();
    // Below the cut the signal is served as-is, with no family call,
    // even though a one-way family cannot propagate backwards.
    assert_eq!(cut.domain_start(), None);
    assert_eq!(cut.eval(0.5).unwrap(), vec![1.0]);
    let got = cut.eval(3.0).unwrap();
    assert_relative_eq!(got[0], (-2.0f64).exp(), max_relative = 0.02);
}

#[test]
fn later_cuts_change_nothing_scalar() {
    let fam = decay_osc();
    let u = TimeFunction::closed_form(vec![parse_generator("cos(t)").unwrap()]).unwrap();
    let pairs = [(0.0, 0.0), (0.0, 1.0), (1.0, 3.0), (2.0, 2.0), (0.5, 4.0)];
    let rep = check_projection_algebra(&fam, &u, &pairs, 10.0, 6, 1e-12, 42).unwrap();
    assert!(rep.pass, "max rel dev {}", rep.max_rel_dev);
    assert_eq!(rep.samples, 30);
}

#[test]
fn later_cuts_change_nothing_matrix_ode() {
    let fam = diag_ode();
    let u = TimeFunction::constant(vec![0.3, 0.7]).unwrap();
    let pairs = [(0.0, 0.5), (0.5, 2.0), (1.0, 1.0), (2.0, 5.0)];
    let rep = check_projection_algebra(&fam, &u, &pairs, 6.0, 5, 1e-8, 42).unwrap();
    assert!(rep.pass, "max rel dev {}", rep.max_rel_dev);
}

#[test]
fn later_cuts_change_nothing_tabulated() {
    let fam = tabulated_decay();
    let u = TimeFunction::constant(vec![1.0]).unwrap();
    let pairs = [(0.0, 0.5), (0.5, 1.5), (1.0, 1.0), (1.5, 2.5)];
    // Interpolated blocks only compose approximately; the slack is the
    // cell-size-squared scale of the bilinear error.
    let rep = check_projection_algebra(&fam, &u, &pairs, 1.5, 5, 0.05, 42).unwrap();
    assert!(rep.pass, "max rel dev {}", rep.max_rel_dev);
}

#[test]
fn out_of_order_pairs_are_rejected() {
    let fam = decay_osc();
    let u = TimeFunction::constant(vec![1.0]).unwrap();
    let err = check_projection_algebra(&fam, &u, &[(3.0, 1.0)], 5.0, 3, 1e-12, 1);
    assert!(matches!(err, Err(CoreError::TimeOrder { .. })));
}

#[test]
fn cutting_at_the_anchor_leaves_the_envelope_unchanged() {
    let cfg = EnvelopeConfig::new(-1.0);
    let fam = decay_osc();
    let u = TimeFunction::closed_form(vec![parse_generator("cos(t)").unwrap()]).unwrap();
    let rep = check_cut_invariance(&fam, &u, 1.0, &cfg, 0.0).unwrap();
    // Identical profile under the hood: zero deviation, not just small.
    assert_eq!(rep.rel_dev, 0.0);
    assert!(rep.pass);
    assert!(rep.value_of_u > 0.0);

    let fam = diag_ode();
    let u = TimeFunction::constant(vec![0.6, -0.8]).unwrap();
    let rep = check_cut_invariance(&fam, &u, 2.0, &EnvelopeConfig::new(-0.5), 0.0).unwrap();
    assert_eq!(rep.rel_dev, 0.0);

    let fam = tabulated_decay();
    let u = TimeFunction::constant(vec![1.0]).unwrap();
    let rep = check_cut_invariance(&fam, &u, 1.0, &EnvelopeConfig::new(-0.5), 0.0).unwrap();
    assert_eq!(rep.rel_dev, 0.0);
}

#[test]
fn envelope_decays_at_the_weight_rate_past_a_cut() {
    let cfg = EnvelopeConfig::new(-1.0);
    let fam = decay_osc();
    let u = TimeFunction::constant(vec![1.0]).unwrap();
    let rep = check_decay_bound(&fam, &u, 0.0, 15.0, 40, &cfg, 1e-9).unwrap();
    assert!(rep.pass, "worst {:?} violation {}", rep.worst, rep.max_log_violation);
    assert!(rep.max_log_violation.abs() <= 1e-9);
    assert!(rep.pairs > 400);

    let fam = diag_ode();
    let u = TimeFunction::constant(vec![0.3, -0.9]).unwrap();
    let rep = check_decay_bound(&fam, &u, 0.0, 10.0, 25, &EnvelopeConfig::new(-0.5), 1e-9).unwrap();
    assert!(rep.pass, "violation {}", rep.max_log_violation);
}

#[test]
fn decay_check_is_trivial_for_the_zero_signal() {
    let fam = decay_osc();
    let u = TimeFunction::constant(vec![0.0]).unwrap();
    let rep = check_decay_bound(&fam, &u, 0.0, 10.0, 10, &EnvelopeConfig::new(-1.0), 1e-9).unwrap();
    assert!(rep.pass);
    assert_eq!(rep.pairs, 0);
}

#[test]
fn sup_norm_scans_anchor_times() {
    let fam = decay_osc();
    let u = TimeFunction::constant(vec![1.0]).unwrap();
    let cfg = EnvelopeConfig::new(-1.0);
    let sup = envelope_sup_norm(&fam, &u, (0.0, 10.0), 0.5, &cfg).unwrap();
    // Oracle: the envelope closed form e^{t cos^2 t} maximized over the
    // same anchor grid.
    let mut best = (f64::NEG_INFINITY, 0.0);
    for k in 0..=20 {
        let t = 0.5 * k as f64;
        let v = (t * t.cos().powi(2)).exp();
        if v > best.0 {
            best = (v, t);
        }
    }
    assert_relative_eq!(sup.value, best.0, max_relative = 1e-4);
    assert_abs_diff_eq!(sup.arg_t, best.1, epsilon = 1e-9);
}

#[test]
fn cut_norm_is_bounded_by_the_weighted_plain_norm() {
    let fam = decay_osc();
    let u = TimeFunction::constant(vec![1.0]).unwrap();
    let cfg = EnvelopeConfig::new(-1.0);
    let rep = check_cut_norm_bound(&fam, &u, PI, (0.0, 10.0), 0.5, &cfg, 1e-6).unwrap();
    assert!(rep.pass, "cut norm {} bound {}", rep.norm_cut, rep.bound);
    assert!(rep.norm_cut <= rep.bound);
    assert!(rep.log_margin.is_some());
}
