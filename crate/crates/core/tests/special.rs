use fracdiff_core::fractime::FracOrder;
use fracdiff_core::special::{eigenmode_reference, gamma, mittag_leffler};
use fracdiff_core::Error;
use statrs::function::erf::erfc;
use statrs::function::gamma::gamma as st_gamma;

fn order(a: f64) -> FracOrder {
    FracOrder::new(a).unwrap()
}

#[test]
fn gamma_agrees_with_statrs() {
    let xs = [
        0.1, 0.25, 0.5, 0.75, 0.9, 1.0, 1.5, 2.0, 3.0, 4.5, 7.25, 12.0, 20.5, -0.5, -1.3, -2.75,
    ];
    for &x in &xs {
        let mine = gamma(x);
        let theirs = st_gamma(x);
        assert!(
            (mine - theirs).abs() < 1e-12 * theirs.abs(),
            "gamma({x}) = {mine} vs {theirs}"
        );
    }
    assert!((gamma(1.0) - 1.0).abs() < 1e-14);
    assert!((gamma(2.0) - 1.0).abs() < 1e-14);
    assert!((gamma(0.5) - std::f64::consts::PI.sqrt()).abs() < 1e-14);
    assert!((gamma(5.0) - 24.0).abs() < 1e-12);
}

#[test]
fn mittag_leffler_at_zero_is_one() {
    for &al in &[0.1, 0.5, 0.9] {
        let r = mittag_leffler(order(al), 0.0).unwrap();
        assert_eq!(r.value, 1.0);
        assert!(r.error_bound < 1e-12);
    }
}

#[test]
fn half_order_value_matches_erfc_identity() {
    // E_{1/2}(-x) = exp(x^2) erfc(x). The reference values are that
    // identity evaluated in 40-digit arithmetic; statrs's erfc is only
    // good to about 1e-11 here so it serves as a coarse cross-check only.
    let r = mittag_leffler(order(0.5), -1.0).unwrap();
    let expected = 0.42758357615580700;
    assert!(
        (r.value - expected).abs() <= r.error_bound + 1e-15,
        "{} vs {expected}, claimed bound {}",
        r.value,
        r.error_bound
    );
    assert!(r.error_bound < 1e-10);
    assert!((r.value - std::f64::consts::E * erfc(1.0)).abs() < 1e-9);

    let r4 = mittag_leffler(order(0.5), -2.0).unwrap();
    let expected4 = 0.25539567631050574;
    assert!((r4.value - expected4).abs() <= r4.error_bound + 1e-15);
}

#[test]
fn near_classical_order_tracks_the_exponential() {
    let al = order(0.999);
    for &z in &[-0.5, -1.5, -3.0] {
        let r = mittag_leffler(al, z).unwrap();
        // E_1(z) = e^z; at alpha = 0.999 the curve sits within a percent
        assert!(
            (r.value - z.exp()).abs() < 1e-2,
            "z={z}: {} vs {}",
            r.value,
            z.exp()
        );
    }
}

#[test]
fn relaxation_curve_is_decreasing_and_positive() {
    let al = order(0.5);
    let mut prev = 1.0;
    let mut z = 0.0;
    while z > -2.0 {
        z -= 0.125;
        let r = mittag_leffler(al, z).unwrap();
        assert!(r.value > 0.0, "E(z) <= 0 at z = {z}: {}", r.value);
        assert!(
            r.value < prev + r.error_bound,
            "not decreasing at z = {z}: {} after {prev}",
            r.value
        );
        prev = r.value;
    }
}

#[test]
fn series_regime_is_enforced() {
    assert!(matches!(
        mittag_leffler(order(0.5), 0.5),
        Err(Error::InvalidParameter { .. })
    ));
    assert!(matches!(
        mittag_leffler(order(0.5), -31.0),
        Err(Error::OutOfRegime { .. })
    ));
    // inside the series limit but past what the rounding bound can certify:
    // the evaluator must refuse with its attained bound, not hand back a
    // cancelled sum
    match mittag_leffler(order(0.5), -25.0) {
        Err(Error::PrecisionExhausted { bound, .. }) => assert!(bound > 1e-10),
        other => panic!("expected PrecisionExhausted, got {other:?}"),
    }
}

#[test]
fn eigenmode_reference_pins_degenerate_cases() {
    let al = order(0.4);
    let times = [0.0, 0.5, 1.0, 2.0];
    let flat = eigenmode_reference(al, 0.0, 0.0, &times).unwrap();
    assert_eq!(flat, vec![1.0; 4]);

    let curve = eigenmode_reference(al, 2.0, 0.0, &times).unwrap();
    assert_eq!(curve[0], 1.0);
    for w in curve.windows(2) {
        assert!(w[1] < w[0], "relaxation curve must decay: {curve:?}");
    }
    assert!(curve.iter().all(|v| *v > 0.0));

    assert!(eigenmode_reference(al, -1.0, 0.0, &times).is_err());
    assert!(eigenmode_reference(al, 1.0, 0.0, &[-1.0]).is_err());
}

#[test]
fn eigenmode_reference_uses_the_rescaled_rate() {
    // u(t) = E_alpha(-(mu / Gamma(1-alpha)) t^alpha): check one point by
    // composing the pieces independently.
    let al = 0.5;
    let mu = 1.5;
    let t: f64 = 2.0;
    let z = -(mu / st_gamma(1.0 - al)) * t.powf(al);
    let direct = mittag_leffler(order(al), z).unwrap().value;
    let via = eigenmode_reference(order(al), mu, 0.0, &[t]).unwrap()[0];
    assert!((via - direct).abs() < 1e-14);
}
