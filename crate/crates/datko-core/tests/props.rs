use std::rc::Rc;

use datko_core::admissibility::bounding_function;
use datko_core::datko::certificate_constants;
use datko_core::envelope::{envelope, EnvelopeConfig};
use datko_core::expr::{parse_generator, Expr};
use datko_core::family::EvolutionFamily;
use datko_core::linalg::{Matrix, NormKind};
use datko_core::timefn::TimeFunction;
use proptest::prelude::*;

fn decay_osc() -> EvolutionFamily {
    let f = parse_generator("-2*t + t*sin(t)^2").unwrap();
    EvolutionFamily::scalar_exp(f, 1, NormKind::Euclidean).unwrap()
}

// Only trees the parser itself can produce: constants are nonnegative,
// a leading minus always parses as Neg.
fn arb_expr() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![(0.0f64..1e6).prop_map(Expr::Const), Just(Expr::Time)];
    leaf.prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(|e| Expr::Neg(Box::new(e))),
            inner.clone().prop_map(|e| Expr::Sin(Box::new(e))),
            inner.clone().prop_map(|e| Expr::Cos(Box::new(e))),
            inner.clone().prop_map(|e| Expr::Exp(Box::new(e))),
            inner.clone().prop_map(|e| Expr::Abs(Box::new(e))),
            (inner.clone(), inner.clone())
                .prop_map(|(a, b)| Expr::Add(Box::new(a), Box::new(b))),
            (inner.clone(), inner.clone())
                .prop_map(|(a, b)| Expr::Sub(Box::new(a), Box::new(b))),
            (inner.clone(), inner.clone())
                .prop_map(|(a, b)| Expr::Mul(Box::new(a), Box::new(b))),
            (inner.clone(), inner.clone())
                .prop_map(|(a, b)| Expr::Div(Box::new(a), Box::new(b))),
            (inner.clone(), inner.clone())
                .prop_map(|(a, b)| Expr::Pow(Box::new(a), Box::new(b))),
        ]
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn printed_trees_reparse_to_themselves(e in arb_expr()) {
        let printed = format!("{}", e);
        let back = parse_generator(&printed);
        prop_assert_eq!(back, Ok(e), "printed as {:?}", printed);
    }

    #[test]
    fn scalar_reversal_inverts(
        a in 0.0f64..10.0,
        b in 0.0f64..10.0,
        x in -5.0f64..5.0,
    ) {
        prop_assume!(x.abs() > 1e-3);
        let fam = decay_osc();
        let (s, t) = if a <= b { (a, b) } else { (b, a) };
        let fwd = fam.apply_raw(t, s, &[x]).unwrap();
        let back = fam.apply_raw(s, t, &fwd).unwrap();
        prop_assert!((back[0] - x).abs() <= 1e-12 * x.abs());
    }

    #[test]
    fn certificate_identities_hold(
        pk in 0usize..4,
        k in 1e-3f64..50.0,
        alpha in 0.0f64..2.0,
        d1 in 0.05f64..0.95,
        d2 in 0.05f64..0.95,
    ) {
        let p = [1.0, 1.5, 2.0, 3.0][pk];
        let (lo, hi) = if d1 <= d2 { (d1, d2) } else { (d2, d1) };
        prop_assume!(hi - lo > 1e-6);
        let c = certificate_constants(p, k, alpha, lo).unwrap();
        // N dominates both e^{p alpha} K and the floor e^{p alpha}.
        prop_assert!(c.n >= (p * alpha).exp() * (1.0 - 1e-12));
        prop_assert!(c.n >= (p * alpha).exp() * k * (1.0 - 1e-12));
        // Defining identities, up to roundoff.
        let lhs = c.n_tilde.powf(p) * (1.0 - lo);
        prop_assert!((lhs - c.n).abs() <= 1e-12 * c.n);
        prop_assert!((c.rate * p * c.n - lo).abs() <= 1e-12 * lo);
        // A larger delta buys a faster rate at a larger prefactor.
        let ch = certificate_constants(p, k, alpha, hi).unwrap();
        prop_assert!(ch.n_tilde >= c.n_tilde);
        prop_assert!(ch.rate > c.rate);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn envelope_is_homogeneous(
        half_t in 0u32..12,
        scale in 0.05f64..20.0,
    ) {
        let fam = decay_osc();
        let t = 0.5 * half_t as f64;
        let cfg = EnvelopeConfig::new(-1.0);
        let u = TimeFunction::constant(vec![1.0]).unwrap();
        let su = TimeFunction::constant(vec![1.0]).unwrap().scaled(scale).unwrap();
        let one = envelope(&fam, &u, t, &cfg).unwrap().value;
        let sc = envelope(&fam, &su, t, &cfg).unwrap().value;
        prop_assert!((sc - scale * one).abs() <= 1e-12 * scale * one);
    }

    #[test]
    fn envelope_shrinks_as_the_weight_grows(
        half_t in 0u32..12,
        a1 in -1.2f64..0.5,
        a2 in -1.2f64..0.5,
    ) {
        let fam = decay_osc();
        let t = 0.5 * half_t as f64;
        let (lo, hi) = if a1 <= a2 { (a1, a2) } else { (a2, a1) };
        let u = TimeFunction::constant(vec![1.0]).unwrap();
        // Same horizon and step: both sups scan the same base grid.
        let v_lo = envelope(&fam, &u, t, &EnvelopeConfig::new(lo)).unwrap().value;
        let v_hi = envelope(&fam, &u, t, &EnvelopeConfig::new(hi)).unwrap().value;
        prop_assert!(v_hi <= v_lo * (1.0 + 1e-6), "lo {} hi {}", v_lo, v_hi);
    }

    #[test]
    fn envelope_grows_with_the_horizon(
        half_t in 0u32..11,
        alpha in -1.0f64..0.2,
    ) {
        let fam = decay_osc();
        // Multiples of 0.5 keep t + horizon exact, so the two base
        // grids nest node for node.
        let t = 0.5 * half_t as f64;
        let u = TimeFunction::constant(vec![1.0]).unwrap();
        let short = EnvelopeConfig::new(alpha);
        let mut long = EnvelopeConfig::new(alpha);
        long.horizon = 2.0 * short.horizon;
        let v_s = envelope(&fam, &u, t, &short).unwrap().value;
        let v_l = envelope(&fam, &u, t, &long).unwrap().value;
        prop_assert!(v_s <= v_l * (1.0 + 1e-6), "short {} long {}", v_s, v_l);
    }

    #[test]
    fn random_matrix_families_satisfy_the_cocycle(
        e00 in -1.0f64..1.0,
        e01 in -1.0f64..1.0,
        e10 in -1.0f64..1.0,
        e11 in -1.0f64..1.0,
        seed in any::<u64>(),
    ) {
        let m = Matrix::from_rows(&[vec![e00, e01], vec![e10, e11]]).unwrap();
        let fam = EvolutionFamily::matrix_ode(m, 1e-10, 0.5, NormKind::Euclidean).unwrap();
        let rep = fam.check_cocycle(0.0, 2.0, 10, seed).unwrap();
        prop_assert!(rep.max_identity_dev <= 1e-12);
        prop_assert!(rep.max_composition_dev <= 1e-5, "dev {}", rep.max_composition_dev);
        prop_assert!(rep.max_reversal_dev.unwrap() <= 1e-4);
    }

    #[test]
    fn bounding_function_never_undercuts_the_identity(
        alpha in -2.0f64..1.0,
        window in 5.0f64..15.0,
    ) {
        let fam = Rc::new(decay_osc());
        let s_grid: Vec<f64> = (0..=8).map(|i| i as f64).collect();
        let m = bounding_function(&fam, alpha, &s_grid, window, 0.05).unwrap();
        // t = s is always in the sup, and U(s, s) has norm one.
        for (s, v) in m.samples() {
            prop_assert!(v >= 1.0 - 1e-12, "M({}) = {}", s, v);
        }
    }
}
