use approx::assert_relative_eq;
use datko_core::expr::{parse_generator, Expr, ParseError};
use datko_core::CoreError;

// Oracle: the same coefficient functions written directly in Rust.
// Parser output must agree with these on a grid, not with itself.
fn oracle_decay_osc(t: f64) -> f64 {
    -2.0 * t + t * t.sin().powi(2)
}

fn oracle_rational(t: f64) -> f64 {
    (t.powf(3.0) - 2.0 * t) / (t * t + 1.0)
}

fn grid() -> Vec<f64> {
    (0..=80).map(|i| -4.0 + 0.1 * i as f64).collect()
}

#[test]
fn parses_decay_oscillation_generator() {
    let e = parse_generator("-2*t + t*sin(t)^2").unwrap();
    for t in grid() {
        assert_relative_eq!(e.eval(t).unwrap(), oracle_decay_osc(t), max_relative = 1e-15);
    }
    // Spot value: at t = pi/2 the sine factor is exactly 1.
    let half_pi = core::f64::consts::FRAC_PI_2;
    assert_relative_eq!(e.eval(half_pi).unwrap(), -half_pi, max_relative = 1e-15);
}

#[test]
fn parses_rational_expression() {
    let e = parse_generator("(t^3 - 2*t) / (t*t + 1)").unwrap();
    for t in grid() {
        assert_relative_eq!(e.eval(t).unwrap(), oracle_rational(t), max_relative = 1e-14);
    }
}

#[test]
fn precedence_and_associativity() {
    // Product binds tighter than sum.
    assert_eq!(parse_generator("1 + 2*3").unwrap().eval(0.0).unwrap(), 7.0);
    // Power is right-associative: 2^(3^2).
    assert_eq!(parse_generator("2^3^2").unwrap().eval(0.0).unwrap(), 512.0);
    // Division is left-associative: (6/3)/2.
    assert_eq!(parse_generator("6/3/2").unwrap().eval(0.0).unwrap(), 1.0);
    // Unary minus binds looser than power: -(t^2).
    assert_eq!(parse_generator("-t^2").unwrap().eval(3.0).unwrap(), -9.0);
    // But a parenthesized base keeps its sign: (-t)^2.
    assert_eq!(parse_generator("(-t)^2").unwrap().eval(3.0).unwrap(), 9.0);
    // Double negation.
    assert_eq!(parse_generator("--t").unwrap().eval(5.0).unwrap(), 5.0);
}

#[test]
fn functions_evaluate() {
    let e = parse_generator("exp(-t) * abs(cos(t))").unwrap();
    for t in grid() {
        assert_relative_eq!(e.eval(t).unwrap(), (-t).exp() * t.cos().abs(), max_relative = 1e-15);
    }
}

#[test]
fn display_reparses_to_the_same_tree() {
    for src in [
        "-2*t + t*sin(t)^2",
        "(t^3 - 2*t) / (t*t + 1)",
        "exp(-t) * abs(cos(t))",
        "-t^2",
        "(-t)^2",
        "2^3^2",
        "6/3/2",
        "t - (1 - t)",
        "1.5e-3 * t + 0.25",
    ] {
        let e = parse_generator(src).unwrap();
        let printed = e.to_string();
        let reparsed = parse_generator(&printed)
            .unwrap_or_else(|err| panic!("`{printed}` failed to reparse: {err}"));
        assert_eq!(reparsed, e, "round-trip changed `{src}` -> `{printed}`");
    }
}

#[test]
fn syntax_errors_carry_byte_offsets() {
    match parse_generator("1 + ") {
        Err(ParseError::Syntax { offset, .. }) => assert_eq!(offset, 4),
        other => panic!("expected syntax error, got {other:?}"),
    }
    match parse_generator("(1 + 2") {
        Err(ParseError::Syntax { offset, .. }) => assert_eq!(offset, 6),
        other => panic!("expected syntax error, got {other:?}"),
    }
    // Trailing garbage is rejected, not silently dropped.
    match parse_generator("1 + 2 junk") {
        Err(ParseError::Syntax { offset, .. }) => assert_eq!(offset, 6),
        other => panic!("expected syntax error, got {other:?}"),
    }
}

#[test]
fn unknown_identifier_is_reported_with_its_name() {
    match parse_generator("2 * tan(t)") {
        Err(ParseError::UnknownIdentifier { offset, name }) => {
            assert_eq!(offset, 4);
            assert_eq!(name, "tan");
        }
        other => panic!("expected unknown identifier, got {other:?}"),
    }
}

#[test]
fn arity_is_checked() {
    match parse_generator("sin(t, t)") {
        Err(ParseError::ArityMismatch { name, got, .. }) => {
            assert_eq!(name, "sin");
            assert_eq!(got, 2);
        }
        other => panic!("expected arity mismatch, got {other:?}"),
    }
}

#[test]
fn eval_guards_division_by_zero_and_overflow() {
    let e = parse_generator("1 / (t - 1)").unwrap();
    assert!(matches!(e.eval(1.0), Err(CoreError::DivisionByZero { .. })));
    assert_relative_eq!(e.eval(3.0).unwrap(), 0.5);

    let e = parse_generator("exp(t)").unwrap();
    assert!(matches!(e.eval(1000.0), Err(CoreError::NonFiniteValue { .. })));
}

#[test]
fn negative_literals_build_through_negation() {
    assert_eq!(parse_generator("-2").unwrap(), Expr::Neg(Box::new(Expr::Const(2.0))));
}
