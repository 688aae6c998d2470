use fracdiff_core::diagnostics::{
    backward_extension_problem, barrier_eval, de_giorgi_constants, difference_quotient_scan,
    energy_decompose_gap, holder_closed_form, holder_fit, interpolation_exponent,
    level_set_measure, oscillation_scan, truncation_energy, weak_residual, BarrierFamily,
    DiagnosticFrame, Direction, OscillationReport, Region, ReportDocument, Table, TestFunction,
};
use fracdiff_core::fractime::{FracOrder, HistoryExtension, TimeGrid, TimeSeries};
use fracdiff_core::march::{run, scheme_residuals, Forcing, Problem, Trajectory, RESIDUAL_TOL};
use fracdiff_core::spaceop::{assemble, cosine_mode_eigenvalue, KernelSpec, SpaceGrid};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

fn order(a: f64) -> FracOrder {
    FracOrder::new(a).unwrap()
}

/// Constant-in-time trajectories are exact: the operator kills constants
/// and the derivative of a constant history is zero.
fn constant_trajectory(value: f64, a: f64, t_end: f64, k: usize, nx: usize) -> Trajectory {
    let p = Problem {
        time: TimeGrid::new(a, t_end, k).unwrap(),
        space: SpaceGrid::new(8.0, nx).unwrap(),
        alpha: order(0.5),
        kernel: KernelSpec::full(1.0, 4.0, 8.0),
        initial: vec![value; nx],
        forcing: Forcing::zero(),
        profile_clamp_below: None,
    };
    run(&p).unwrap()
}

fn cosine_problem(a: f64, t_end: f64, k: usize, nx: usize) -> Problem {
    let space = SpaceGrid::new(8.0, nx).unwrap();
    let initial = (0..nx)
        .map(|m| (2.0 * PI * space.node(m) / 8.0).cos())
        .collect();
    Problem {
        time: TimeGrid::new(a, t_end, k).unwrap(),
        space,
        alpha: order(0.5),
        kernel: KernelSpec::full(1.0, 4.0, 8.0),
        initial,
        forcing: Forcing::zero(),
        profile_clamp_below: None,
    }
}

// ---- barrier families ----------------------------------------------------

#[test]
fn barrier_values_by_hand() {
    let psi = BarrierFamily::psi(1.0, 0.5);
    // flat core: both growths are capped off below radius 1
    assert_eq!(barrier_eval(&psi, -0.5, 0.5).unwrap(), 0.0);
    assert_eq!(barrier_eval(&psi, 0.0, 1.0).unwrap(), 0.0);
    // sqrt(4) - 1 = 1 at distance 4
    assert!((barrier_eval(&psi, 0.0, 4.0).unwrap() - 1.0).abs() < 1e-15);
    // time growth at t = -16, alpha/2 = 1/4: 16^(1/4) - 1 = 1
    assert!((barrier_eval(&psi, -16.0, 0.0).unwrap() - 1.0).abs() < 1e-15);

    let lifted = BarrierFamily::psi_l(3.0, 1.0, 0.5);
    let a = barrier_eval(&lifted, -2.0, 5.0).unwrap();
    let b = barrier_eval(&psi, -2.0, 5.0).unwrap();
    assert!((a - b - 3.0).abs() < 1e-15);
}

#[test]
fn comparison_barrier_is_flat_at_two_minus_two_lambda_fourth() {
    // deep inside [-2, 0] x B_2 both wells sit at -1 and the shifted
    // growth is off, so phi_4 = 2 - 2 lambda^4
    let phi4 = BarrierFamily::phi(4, 0.1, 1.0, 0.5);
    let v = barrier_eval(&phi4, -1.0, 0.0).unwrap();
    assert!((v - (2.0 - 2e-4)).abs() < 1e-15, "{v}");
}

#[test]
fn comparison_ladder_is_monotone_where_the_wells_bite() {
    for i in 0..4usize {
        let lo = BarrierFamily::phi(i, 0.2, 1.0, 0.5);
        let hi = BarrierFamily::phi(i + 1, 0.2, 1.0, 0.5);
        for &(t, x) in &[(-0.5, 0.0), (-1.5, 1.0), (-2.0, 2.0), (-3.5, 2.5)] {
            let a = barrier_eval(&lo, t, x).unwrap();
            let b = barrier_eval(&hi, t, x).unwrap();
            assert!(b >= a - 1e-15, "rung {i} at ({t}, {x}): {b} < {a}");
        }
    }
}

#[test]
fn quarter_exponent_barrier_sits_below_the_half_exponent_one() {
    let psi = BarrierFamily::psi(1.2, 0.6);
    let bar = BarrierFamily::psi_bar(1.2, 0.6);
    let lam = BarrierFamily::psi_lambda(0.2, 1.2, 0.6);
    for it in 0..30 {
        let t = -0.5 * it as f64;
        for ix in 0..30 {
            let x = 0.7 * ix as f64;
            let p = barrier_eval(&psi, t, x).unwrap();
            let b = barrier_eval(&bar, t, x).unwrap();
            let l = barrier_eval(&lam, t, x).unwrap();
            assert!(b <= p + 1e-15, "psibar > psi at ({t}, {x})");
            assert!(l <= b + 1e-15, "shifted cutoff above psibar at ({t}, {x})");
        }
    }
    // far enough out to engage the shifted gates (lambda^(-4/s) ~ 2e2 in
    // space, 5e4 in time)
    for &(t, x) in &[(0.0, 250.0), (-5e4, 0.0), (-6e4, 300.0)] {
        let b = barrier_eval(&bar, t, x).unwrap();
        let l = barrier_eval(&lam, t, x).unwrap();
        assert!(l > 0.0, "gate never engaged at ({t}, {x})");
        assert!(l <= b + 1e-12);
    }
}

#[test]
fn uniform_exponent_cutoff_matches_when_the_exponents_coincide() {
    // with sigma = alpha the quarter exponents agree, so the tau-variant
    // at tau = sigma/4 is the same function
    let a = BarrierFamily::psi_lambda(0.25, 0.5, 0.5);
    let b = BarrierFamily::psi_tau_lambda(0.125, 0.25, 0.5, 0.5);
    for &(t, x) in &[(-0.5, 0.3), (-40.0, 0.0), (-300.0, 90.0), (0.0, 2000.0), (-1e5, 7e4)] {
        let va = barrier_eval(&a, t, x).unwrap();
        let vb = barrier_eval(&b, t, x).unwrap();
        assert!((va - vb).abs() < 1e-12, "({t}, {x}): {va} vs {vb}");
    }
}

#[test]
fn wells_and_switch_have_their_stated_ranges() {
    let f1 = BarrierFamily::f1();
    assert_eq!(barrier_eval(&f1, 0.3, 0.0).unwrap(), -1.0);
    assert_eq!(barrier_eval(&f1, 0.0, 3.0).unwrap(), 0.0);
    assert_eq!(barrier_eval(&f1, 0.0, 10.0).unwrap(), 0.0);
    let v = barrier_eval(&f1, 0.0, 2.9).unwrap();
    assert!(v > -1.0 && v < 0.0);

    let f2 = BarrierFamily::f2();
    assert_eq!(barrier_eval(&f2, 0.0, 5.0).unwrap(), -1.0);
    assert_eq!(barrier_eval(&f2, 4.0, 0.0).unwrap(), 0.0);
    assert_eq!(barrier_eval(&f2, -4.5, 0.0).unwrap(), 0.0);

    let eta = BarrierFamily::eta();
    assert_eq!(barrier_eval(&eta, 0.2, 0.0).unwrap(), 0.0);
    assert_eq!(barrier_eval(&eta, 0.5, 0.0).unwrap(), 0.0);
    assert!((barrier_eval(&eta, 0.75, 0.0).unwrap() - 0.5).abs() < 1e-15);
    assert_eq!(barrier_eval(&eta, 1.0, 0.0).unwrap(), 1.0);
    assert_eq!(barrier_eval(&eta, 7.0, 0.0).unwrap(), 1.0);
    let mut prev = -1.0;
    for i in 0..=40 {
        let v = barrier_eval(&eta, 0.4 + 0.02 * i as f64, 0.0).unwrap();
        assert!(v >= prev);
        prev = v;
    }
}

#[test]
fn barrier_domain_rules() {
    let psi = BarrierFamily::psi(1.0, 0.5);
    // growth cutoffs live backward in time
    assert!(barrier_eval(&psi, 0.5, 0.0).is_err());
    assert!(barrier_eval(&psi, f64::NAN, 0.0).is_err());
    // the wells and the switch are defined on both sides
    assert!(barrier_eval(&BarrierFamily::f1(), 0.5, 0.0).is_ok());

    assert!(BarrierFamily::psi(2.5, 0.5).validate().is_err());
    assert!(BarrierFamily::psi(1.0, 1.5).validate().is_err());
    assert!(BarrierFamily::psi_lambda(0.34, 1.0, 0.5).validate().is_err());
    assert!(BarrierFamily::phi(5, 0.1, 1.0, 0.5).validate().is_err());
    assert!(BarrierFamily::psi_tau_lambda(-0.1, 0.2, 1.0, 0.5).validate().is_err());
    assert!(BarrierFamily::psi_l(f64::INFINITY, 1.0, 0.5).validate().is_err());
}

// ---- energy decomposition ------------------------------------------------

#[test]
fn energy_terms_of_a_single_step_by_hand() {
    let grid = TimeGrid::new(0.0, 1.0, 1).unwrap();
    let u = TimeSeries::new(grid, vec![0.0, 1.0], HistoryExtension::ConstantBeforeA).unwrap();
    let d = energy_decompose_gap(&u, order(0.5)).unwrap();

    // tau_1 = zeta(3/2) - 1; the derivative is (1 + tau_1)/2 and the
    // tested pairing carries another alpha eps u_1 = 1/2
    let tau1 = 1.6123753486854883;
    assert!((d.lhs - 0.25 * (1.0 + tau1)).abs() < 1e-12);
    // G has the single pair (0, 1): c2 G = (alpha^2/2) * 1
    assert!((d.gagliardo - 0.125).abs() < 1e-15);
    // one initial increment with the floor weight 2^-(3/2)
    assert!((d.initial_increments - 0.25 * 0.5f64.powf(1.5)).abs() < 1e-15);
    assert_eq!(d.horizon_squares, 0.0);
    assert_eq!(d.initial_coupling, 0.0);
    assert!(d.slack() > 0.0);
}

#[test]
fn energy_gap_vanishes_term_by_term_on_zero_data() {
    let grid = TimeGrid::new(0.0, 2.0, 24).unwrap();
    let u = TimeSeries::new(grid, vec![0.0; 25], HistoryExtension::ConstantBeforeA).unwrap();
    let d = energy_decompose_gap(&u, order(0.3)).unwrap();
    assert_eq!(d.lhs, 0.0);
    assert_eq!(d.rhs(), 0.0);
    assert_eq!(d.slack(), 0.0);
}

#[test]
fn energy_gap_of_constants_is_still_one_sided() {
    // constants have zero derivative but nonzero square terms; the floor
    // bounds must keep the right side below the (zero) left side
    let grid = TimeGrid::new(0.0, 1.0, 16).unwrap();
    let u = TimeSeries::new(grid, vec![2.0; 17], HistoryExtension::ConstantBeforeA).unwrap();
    let d = energy_decompose_gap(&u, order(0.5)).unwrap();
    assert_eq!(d.lhs, 0.0);
    assert!(d.horizon_squares > 0.0);
    assert!(d.initial_coupling < 0.0);
    assert!(d.slack() >= -1e-10 * d.scale(), "slack {}", d.slack());
}

#[test]
fn energy_gap_is_nonnegative_on_random_series() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for &al in &[0.25, 0.5, 0.75] {
        for &k in &[16usize, 64] {
            for _ in 0..8 {
                let grid = TimeGrid::new(-1.0, 1.5, k).unwrap();
                let vals: Vec<f64> = (0..=k).map(|_| rng.random_range(-3.0..3.0)).collect();
                let u = TimeSeries::new(grid, vals, HistoryExtension::ConstantBeforeA).unwrap();
                let d = energy_decompose_gap(&u, order(al)).unwrap();
                assert!(
                    d.slack() >= -1e-10 * d.scale(),
                    "alpha={al} k={k}: slack {} scale {}",
                    d.slack(),
                    d.scale()
                );
            }
        }
    }
}

#[test]
fn energy_gap_requires_the_frozen_history() {
    let grid = TimeGrid::new(0.0, 1.0, 4).unwrap();
    let u = TimeSeries::new(grid, vec![0.0; 5], HistoryExtension::ZeroBeforeA).unwrap();
    assert!(energy_decompose_gap(&u, order(0.5)).is_err());
}

// ---- truncation ladder and level sets ------------------------------------

#[test]
fn truncation_ladder_matches_a_direct_recount() {
    let traj = constant_trajectory(1.0, 0.0, 2.0, 20, 16);
    let frame = DiagnosticFrame::for_trajectory(&traj);
    let psi = BarrierFamily::psi(1.0, 0.5);
    let ladder = truncation_energy(&traj, &psi, &frame, 5).unwrap();

    assert_eq!(ladder.levels.len(), 6);
    for (i, l) in ladder.levels.iter().enumerate() {
        assert!((l - 0.5 * (1.0 - 0.5f64.powi(i as i32))).abs() < 1e-15);
    }
    let p = interpolation_exponent(1, order(0.5), 1.0).unwrap().p;
    assert_eq!(ladder.exponent, p);

    // recount from the public pieces
    let tg = &traj.problem().time;
    let sg = &traj.problem().space;
    for (i, &level) in ladder.levels.iter().enumerate() {
        let mut total = 0.0;
        for j in 1..=tg.k() {
            for m in 0..sg.nx() {
                let base = barrier_eval(
                    &psi,
                    frame.map_t(tg.node(j)),
                    frame.map_x(sg.node(m)),
                )
                .unwrap();
                let d = traj.field(j)[m] - base - level;
                if d > 0.0 {
                    total += d + d * d + 1.0;
                }
            }
        }
        let expected = total * tg.eps() * sg.h();
        assert!(
            (ladder.values[i] - expected).abs() < 1e-12 * (1.0 + expected),
            "level {i}: {} vs {expected}",
            ladder.values[i]
        );
    }
}

#[test]
fn truncation_ladder_is_nonincreasing() {
    let traj = run(&cosine_problem(0.0, 2.0, 32, 32)).unwrap();
    let frame = DiagnosticFrame::for_trajectory(&traj);
    let psi = BarrierFamily::psi(1.0, 0.5);
    let ladder = truncation_energy(&traj, &psi, &frame, 6).unwrap();
    for w in ladder.values.windows(2) {
        assert!(w[1] <= w[0] + 1e-12, "ladder increased: {:?}", ladder.values);
    }
    // zero data gives a ladder of exact zeros
    let z = constant_trajectory(0.0, 0.0, 2.0, 10, 16);
    let zf = DiagnosticFrame::for_trajectory(&z);
    let zl = truncation_energy(&z, &psi, &zf, 4).unwrap();
    assert!(zl.values.iter().all(|v| *v == 0.0));
}

#[test]
fn level_set_measure_counts_planted_cells() {
    // constant 3 against the comparison barrier (flat 2 - 2e-4 in the
    // core): every cell in the region counts. eps = 0.1, h = 0.5.
    let traj = constant_trajectory(3.0, 0.0, 2.0, 20, 16);
    let frame = DiagnosticFrame::for_trajectory(&traj);
    let phi4 = BarrierFamily::phi(4, 0.1, 1.0, 0.5);

    // times (-1, 0] catch nodes j = 11..20, the open ball of radius 0.8
    // catches mapped nodes {-0.5, 0, 0.5}
    let region = Region {
        t_lo: -1.0,
        t_hi: 0.0,
        x_center: 0.0,
        x_radius: 0.8,
    };
    let above = level_set_measure(&traj, &phi4, &frame, &region, Direction::Above).unwrap();
    assert!((above - 30.0 * 0.1 * 0.5).abs() < 1e-12, "{above}");
    let below = level_set_measure(&traj, &phi4, &frame, &region, Direction::Below).unwrap();
    assert_eq!(below, 0.0);

    // a ball so small only the center node is inside, seven time cells
    let seven = Region {
        t_lo: -0.7,
        t_hi: 0.0,
        x_center: 0.0,
        x_radius: 0.2,
    };
    let v = level_set_measure(&traj, &phi4, &frame, &seven, Direction::Above).unwrap();
    assert!((v - 7.0 * 0.05).abs() < 1e-12, "{v}");

    // flipping the data flips the direction
    let zero = constant_trajectory(0.0, 0.0, 2.0, 20, 16);
    let zf = DiagnosticFrame::for_trajectory(&zero);
    let v = level_set_measure(&zero, &phi4, &zf, &region, Direction::Below).unwrap();
    assert!((v - 1.5).abs() < 1e-12);
    let v = level_set_measure(&zero, &phi4, &zf, &region, Direction::Above).unwrap();
    assert_eq!(v, 0.0);
}

#[test]
fn level_set_rejects_degenerate_regions() {
    let traj = constant_trajectory(0.0, 0.0, 2.0, 10, 16);
    let frame = DiagnosticFrame::for_trajectory(&traj);
    let cut = BarrierFamily::phi(0, 0.1, 1.0, 0.5);
    let bad_interval = Region { t_lo: 0.0, t_hi: 0.0, x_center: 0.0, x_radius: 1.0 };
    assert!(level_set_measure(&traj, &cut, &frame, &bad_interval, Direction::Above).is_err());
    let bad_radius = Region { t_lo: -1.0, t_hi: 0.0, x_center: 0.0, x_radius: 5.0 };
    assert!(level_set_measure(&traj, &cut, &frame, &bad_radius, Direction::Above).is_err());
    let outside = Region { t_lo: -3.0, t_hi: 0.0, x_center: 0.0, x_radius: 1.0 };
    assert!(level_set_measure(&traj, &cut, &frame, &outside, Direction::Above).is_err());
}

// ---- oscillation scans and Hölder fits -----------------------------------

#[test]
fn oscillation_of_constant_data_is_zero_at_every_scale() {
    let traj = constant_trajectory(1.5, 0.0, 2.0, 64, 64);
    let frame = DiagnosticFrame::for_trajectory(&traj);
    let rep = oscillation_scan(&traj, &frame, 0.0, 0.0, 0.5, 3).unwrap();
    assert!(!rep.oscillations.is_empty());
    // the solves preserve constants to roundoff, not bitwise
    assert!(rep.oscillations.iter().all(|o| *o < 1e-13), "{:?}", rep.oscillations);
}

#[test]
fn holder_fit_drops_exact_zeros() {
    let rep = OscillationReport {
        center_t: 0.0,
        center_x: 0.0,
        gamma: 0.5,
        exponent_ratio: 2.0,
        oscillations: vec![0.0; 5],
        truncated: false,
    };
    let fit = holder_fit(&rep).unwrap();
    assert!(fit.beta.is_infinite());
    assert_eq!(fit.scales_used, 0);
    assert!(fit.dropped_zeros);
}

#[test]
fn oscillations_shrink_with_the_cylinders() {
    let traj = run(&cosine_problem(0.0, 2.0, 128, 64)).unwrap();
    let frame = DiagnosticFrame::for_trajectory(&traj);
    let rep = oscillation_scan(&traj, &frame, 0.0, 0.0, 0.5, 8).unwrap();
    assert!(rep.oscillations.len() >= 2);
    for w in rep.oscillations.windows(2) {
        assert!(w[1] <= w[0] + 1e-15, "nesting violated: {:?}", rep.oscillations);
    }
    // depth 8 wants radius 0.5^8 < 2h = 0.25: the scan must truncate
    assert!(rep.truncated);
    assert!((rep.exponent_ratio - 2.0).abs() < 1e-15);
}

#[test]
fn oscillation_scan_rejects_misplaced_cylinders() {
    let traj = constant_trajectory(0.0, 0.0, 2.0, 16, 16);
    let frame = DiagnosticFrame::for_trajectory(&traj);
    assert!(oscillation_scan(&traj, &frame, 0.5, 0.0, 0.5, 2).is_err());
    assert!(oscillation_scan(&traj, &frame, -1.5, 0.0, 0.5, 2).is_err());
    assert!(oscillation_scan(&traj, &frame, 0.0, 0.0, 1.0, 2).is_err());
}

#[test]
fn holder_fit_recovers_exact_power_laws() {
    // osc_k = (gamma^(k rho))^beta for beta = 1: a perfect line in logs
    let rho = 2.0;
    let gamma: f64 = 0.5;
    let rep = OscillationReport {
        center_t: 0.0,
        center_x: 0.0,
        gamma,
        exponent_ratio: rho,
        oscillations: (0..6).map(|k| gamma.powf(k as f64 * rho)).collect(),
        truncated: false,
    };
    let fit = holder_fit(&rep).unwrap();
    assert!((fit.beta - 1.0).abs() < 1e-10, "beta {}", fit.beta);
    assert!(fit.fit_residual < 1e-10);
    assert!(!fit.dropped_zeros);
    assert_eq!(fit.scales_used, 6);

    // a fixed per-rung shrink factor: beta from the closed form
    let shrink = 0.95f64;
    let rep = OscillationReport {
        center_t: 0.0,
        center_x: 0.0,
        gamma: 0.25,
        exponent_ratio: 1.0,
        oscillations: (0..8).map(|k| shrink.powi(k)).collect(),
        truncated: false,
    };
    let fit = holder_fit(&rep).unwrap();
    let closed = holder_closed_form(0.2, 0.25, 1.0).unwrap();
    assert!((closed - 0.95f64.ln() / 0.25f64.ln()).abs() < 1e-15);
    assert!((fit.beta - closed).abs() < 1e-12, "{} vs {closed}", fit.beta);
}

#[test]
fn holder_fit_needs_three_usable_scales() {
    let rep = OscillationReport {
        center_t: 0.0,
        center_x: 0.0,
        gamma: 0.5,
        exponent_ratio: 2.0,
        oscillations: vec![1.0, 0.5, 0.0],
        truncated: false,
    };
    assert!(holder_fit(&rep).is_err());
    let empty = OscillationReport {
        oscillations: vec![],
        ..rep
    };
    assert!(holder_fit(&empty).is_err());
}

#[test]
fn interpolation_exponents_at_reference_points() {
    let r = interpolation_exponent(1, order(0.5), 1.0).unwrap();
    assert!((r.p - 3.0).abs() < 1e-15);
    assert!((r.beta - 2.0 / 3.0).abs() < 1e-15);
    assert!(r.p2.is_infinite());

    // the gain collapses toward plain L^2 as the memory order vanishes
    let flat = interpolation_exponent(1, order(0.01), 1.0).unwrap();
    assert!(flat.p > 2.0 && flat.p - 2.0 < 0.05);

    for n in 1u32..=3 {
        for &al in &[0.25, 0.5, 0.75] {
            for &sg in &[0.5, 1.0, 1.5] {
                let r = interpolation_exponent(n, order(al), sg).unwrap();
                assert!(r.p > 2.0);
                assert!(r.beta > 0.0 && r.beta < 1.0);
                assert!(r.space_conjugacy_defect().abs() < 1e-12, "n={n} al={al} sg={sg}");
                assert!(r.time_conjugacy_defect().abs() < 1e-12);
            }
        }
    }

    assert!(interpolation_exponent(0, order(0.5), 1.0).is_err());
    assert!(interpolation_exponent(1, order(0.5), 2.0).is_err());
}

// ---- difference quotients ------------------------------------------------

#[test]
fn quotients_vanish_for_settled_constant_data() {
    // window [1, 3]: the switch is already fully on, so eta w is constant
    let traj = constant_trajectory(2.0, 1.0, 3.0, 24, 16);
    let rep = difference_quotient_scan(&traj, 6, 0.0).unwrap();
    assert!(rep.sup_quotient < 1e-13);
    assert!(rep.seminorm < 1e-13);
    assert_eq!(rep.lags_used, 5);
}

#[test]
fn zero_target_is_the_plain_modulus_of_continuity() {
    let nx = 16;
    let p = Problem {
        time: TimeGrid::new(1.0, 3.0, 20).unwrap(),
        space: SpaceGrid::new(8.0, nx).unwrap(),
        alpha: order(0.5),
        kernel: KernelSpec::full(1.0, 4.0, 8.0),
        initial: vec![0.0; nx],
        forcing: Forcing::constant(1.0),
        profile_clamp_below: None,
    };
    let traj = run(&p).unwrap();
    let h_steps = 5;
    let rep = difference_quotient_scan(&traj, h_steps, 0.0).unwrap();

    // recompute: eta = 1 on [1, 3], so the quotient is the raw lag difference
    let mut expect_semi = 0.0f64;
    let mut expect_sup = 0.0f64;
    for lag in 2..=h_steps {
        let mut worst = 0.0f64;
        for j in 0..=20 - lag {
            for m in 0..nx {
                worst = worst.max((traj.field(j + lag)[m] - traj.field(j)[m]).abs());
            }
        }
        expect_semi = expect_semi.max(worst);
        if lag == h_steps {
            expect_sup = worst;
        }
    }
    assert!((rep.seminorm - expect_semi).abs() < 1e-15);
    assert!((rep.sup_quotient - expect_sup).abs() < 1e-15);
    assert!(rep.sup_quotient > 0.0);
}

#[test]
fn quotient_scan_sees_the_switch_ramp() {
    // constant data on [0, 2]: w is constant but eta w follows the ramp,
    // which is exactly what the switch is for
    let traj = constant_trajectory(1.0, 0.0, 2.0, 16, 16);
    let rep = difference_quotient_scan(&traj, 4, 0.0).unwrap();
    assert!(rep.seminorm > 0.0);
}

#[test]
fn quotient_scan_validates_the_lag() {
    let traj = constant_trajectory(0.0, 1.0, 3.0, 12, 16);
    assert!(difference_quotient_scan(&traj, 1, 0.0).is_err());
    assert!(difference_quotient_scan(&traj, 12, 0.0).is_err());
    assert!(difference_quotient_scan(&traj, 4, -0.5).is_err());
}

// ---- weak form -----------------------------------------------------------

#[test]
fn weak_residual_is_zero_for_the_zero_test_function() {
    let traj = run(&cosine_problem(0.0, 1.0, 16, 16)).unwrap();
    let phi = TestFunction::new(|_| 0.0, 4.0, 2.0);
    assert_eq!(weak_residual(&traj, &phi, 16).unwrap(), 0.0);
}

#[test]
fn weak_residual_of_constants_shrinks_under_refinement() {
    // constant solutions make every genuine term cancel analytically;
    // what is left is quadrature and sampling error, which refinement
    // must shrink
    let phi = TestFunction::new(
        |t: f64| (PI * t / 2.0).sin().powi(2),
        4.0,
        2.5,
    );
    let mut errs = Vec::new();
    for &(k, nx, panels) in &[(24usize, 16usize, 48usize), (48, 32, 96)] {
        let traj = constant_trajectory(1.0, 0.0, 2.0, k, nx);
        errs.push(weak_residual(&traj, &phi, panels).unwrap());
    }
    assert!(
        errs[1] < 0.8 * errs[0],
        "no refinement gain: {errs:?}"
    );
}

#[test]
fn weak_residual_validates_inputs() {
    let traj = run(&cosine_problem(0.0, 1.0, 8, 16)).unwrap();
    let too_wide = TestFunction::new(|_| 1.0, 4.0, 4.0);
    assert!(weak_residual(&traj, &too_wide, 8).is_err());
    let fine = TestFunction::new(|_| 1.0, 4.0, 2.0);
    assert!(weak_residual(&traj, &fine, 1).is_err());
}

// ---- backward extension --------------------------------------------------

#[test]
fn backward_extension_reproduces_the_original_run() {
    let p = cosine_problem(0.0, 1.0, 20, 16);
    let traj = run(&p).unwrap();
    let ext = backward_extension_problem(&p).unwrap();
    assert_eq!(ext.time.a(), -5.0);
    assert_eq!(ext.time.t_end(), 1.0);
    assert_eq!(ext.profile_clamp_below, Some(0.0));
    assert!(ext.forcing.label().starts_with("backward extension of"));

    let m0 = ext.time.k() - p.time.k();
    assert_eq!(m0, 100);
    let ext_traj = run(&ext).unwrap();
    // the pre-phase holds the initial field exactly
    for j in 0..=m0 {
        for m in 0..16 {
            assert!(
                (ext_traj.field(j)[m] - p.initial[m]).abs() < 1e-10,
                "pre-phase drift at ({j}, {m})"
            );
        }
    }
    // and the forward phase matches the direct run
    for j in 0..=p.time.k() {
        for m in 0..16 {
            assert!(
                (ext_traj.field(m0 + j)[m] - traj.field(j)[m]).abs() < 1e-8,
                "round trip defect at ({j}, {m})"
            );
        }
    }
    let res = scheme_residuals(&ext_traj).unwrap();
    assert!(res.iter().all(|r| *r < RESIDUAL_TOL * 10.0));
}

#[test]
fn backward_extension_forcing_is_the_operator_of_the_data() {
    // on an eigenmode the pre-phase forcing is +mu times the mode: minus
    // the operator value, and A cos = -mu cos
    let p = cosine_problem(0.0, 1.0, 20, 64);
    let shape = assemble(&p.kernel, &p.space, 0.0).unwrap();
    let (mu, _) = cosine_mode_eigenvalue(&shape, &p.space).unwrap();
    let ext = backward_extension_problem(&p).unwrap();
    for m in 0..64 {
        let x = p.space.node(m);
        let expected = mu * (2.0 * PI * x / 8.0).cos();
        let got = ext.forcing.sample(-2.0, x);
        assert!(
            (got - expected).abs() < 1e-10 * (1.0 + expected.abs()),
            "node {m}: {got} vs {expected}"
        );
    }
    // zero data extends by zero forcing
    let zp = Problem {
        initial: vec![0.0; 16],
        ..cosine_problem(0.0, 1.0, 10, 16)
    };
    let zext = backward_extension_problem(&zp).unwrap();
    assert_eq!(zext.forcing.sample(-3.0, 1.0), 0.0);
}

#[test]
fn backward_extension_needs_aligned_steps() {
    let p = cosine_problem(0.0, 0.7, 10, 16);
    assert!(backward_extension_problem(&p).is_err());
    let shifted = cosine_problem(-1.0, 1.0, 10, 16);
    assert!(backward_extension_problem(&shifted).is_err());
}

// ---- comparison constants ------------------------------------------------

#[test]
fn comparison_radius_guarantees_the_two_barrier_inequality() {
    for &(al, sg) in &[(0.5, 1.0), (0.3, 0.5), (0.7, 1.5)] {
        let c = de_giorgi_constants(1, order(al), sg, 1e-3).unwrap();
        assert!(c.r >= 2f64.powf(1.0 / sg) - 1e-12);
        assert_eq!(c.r, c.r.round(), "radius must be an integer");
        assert!(c.delta > 0.0 && c.delta < 1.0);

        let psi = BarrierFamily::psi(sg, al);
        let bar = BarrierFamily::psi_bar(sg, al);
        let t_reach = c.r.powf(sg / al);
        // sample outside [-R^(sigma/alpha), 0] x B_R: beyond in space at
        // controlled times, and beyond in time at controlled radii
        let mut points = Vec::new();
        for &x in &[c.r, c.r + 1.0, c.r + 5.0, 2.0 * c.r] {
            for &t in &[0.0, 0.5 * t_reach, t_reach] {
                points.push((t, x));
            }
        }
        for &t in &[t_reach, t_reach + 2.0, 2.0 * t_reach] {
            for &x in &[0.0, 0.5 * c.r, c.r] {
                points.push((t, x));
            }
        }
        for (t, x) in points {
            let lhs = 2.0 + barrier_eval(&bar, -(t + 1.0), x + 1.0).unwrap();
            let rhs = barrier_eval(&psi, -t, x).unwrap();
            assert!(
                lhs <= rhs + 1e-9,
                "alpha={al} sigma={sg} R={}: 2+psibar={lhs} > psi={rhs} at ({t}, {x})",
                c.r
            );
        }

        // the threshold formula, recomputed
        let lift = 1.0 + barrier_eval(&bar, -2.0, 2.0).unwrap();
        let delta = c.r.powf(-(1.0 + sg / al)) * lift.powi(-2) * 1e-3;
        assert!((c.delta - delta).abs() < 1e-15 * delta);
    }
    assert!(de_giorgi_constants(0, order(0.5), 1.0, 1e-3).is_err());
    assert!(de_giorgi_constants(1, order(0.5), 1.0, 0.0).is_err());
}

// ---- frame and report ----------------------------------------------------

#[test]
fn frame_wraps_into_the_half_open_interval() {
    let traj = constant_trajectory(0.0, 0.0, 1.0, 8, 16);
    let f = DiagnosticFrame::for_trajectory(&traj);
    assert_eq!(f.t_origin, 1.0);
    assert_eq!(f.x_center, 4.0);
    assert_eq!(f.map_t(1.0), 0.0);
    assert_eq!(f.map_t(0.25), -0.75);
    assert_eq!(f.map_x(4.0), 0.0);
    assert_eq!(f.map_x(0.0), 4.0);
    assert_eq!(f.wrap(-4.0), 4.0);
    assert_eq!(f.wrap(12.0), 4.0);
    assert_eq!(f.wrap(-9.0), -1.0);
    assert_eq!(f.wrap(3.0), 3.0);

    let g = DiagnosticFrame::with_center(&traj, 0.5, 1.0);
    assert_eq!(g.map_t(0.5), 0.0);
    assert_eq!(g.map_x(1.0), 0.0);
}

#[test]
fn report_renders_deterministically() {
    let mut doc = ReportDocument::new("demo");
    doc.push("alpha", 0.5);
    doc.push("steps", 4usize);
    let mut t = Table::new("errors", &["k", "err"]);
    t.push_row(vec!["1".into(), "0.25".into()]);
    t.push_row(vec!["2".into(), "0.125".into()]);
    doc.push_table(t);
    doc.push_table(Table::from_series("slack", "value", &[1.0, 0.5]));

    let text = doc.render();
    let expected = "# demo\n\
                    alpha = 0.5\n\
                    steps = 4\n\
                    \n\
                    ## errors\n\
                    k,err\n\
                    1,0.25\n\
                    2,0.125\n\
                    \n\
                    ## slack\n\
                    k,value\n\
                    0,1\n\
                    1,0.5\n";
    assert_eq!(text, expected);
}
