//! Release gate: one test per shipped guarantee, one printed verdict line
//! each. Tolerances here are contractual; loosening one is a release
//! decision, not a test fix.

use fracdiff_core::diagnostics::{
    backward_extension_problem, energy_decompose_gap, holder_fit, interpolation_exponent,
    oscillation_scan, weak_residual, DiagnosticFrame, TestFunction,
};
use fracdiff_core::fractime::{
    barrier_bound_check, discrete_caputo, FracOrder, HistoryExtension, TimeGrid, TimeSeries,
};
use fracdiff_core::march::{run, scheme_residuals, Forcing, Problem};
use fracdiff_core::spaceop::{assemble, cosine_mode_eigenvalue, KernelSpec, SpaceGrid};
use fracdiff_core::special::eigenmode_reference;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::function::gamma::gamma as st_gamma;
use std::f64::consts::PI;
use std::time::Instant;

fn order(a: f64) -> FracOrder {
    FracOrder::new(a).unwrap()
}

fn verdict(n: u32, name: &str, pass: bool, detail: &str) {
    println!(
        "acceptance {n:02} {name}: {} ({detail})",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "acceptance {n:02} {name}: {detail}");
}

/// First-mode initial data on the standard circle, sigma = 1, alpha = 1/2.
fn eigenmode_problem(nx: usize, k: usize, t_end: f64) -> Problem {
    let space = SpaceGrid::new(8.0, nx).unwrap();
    let initial = (0..nx)
        .map(|m| (2.0 * PI * space.node(m) / 8.0).cos())
        .collect();
    Problem {
        time: TimeGrid::new(0.0, t_end, k).unwrap(),
        space,
        alpha: order(0.5),
        kernel: KernelSpec::full(1.0, 4.0, 8.0),
        initial,
        forcing: Forcing::zero(),
        profile_clamp_below: None,
    }
}

fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |a, x| a.max(x.abs()))
}

#[test]
fn c01_eigenmode_relaxation_oracle() {
    // The 5% amplitude bound is taken over each run's own settled window
    // [10 eps, T]. The halving gain is measured on the coarse run's window
    // for both runs: the extra fine-run nodes inside [10 eps_fine,
    // 10 eps_coarse) sit against the t^alpha kink where the error is a
    // function of the node index alone, and comparing there would cancel
    // the refinement.
    let start = Instant::now();
    let coarse_eps = 2.0 / 512.0;
    let mut own = Vec::new();
    let mut common = Vec::new();
    let mut mu_seen = 0.0;
    for &k in &[512usize, 1024] {
        let p = eigenmode_problem(128, k, 2.0);
        let shape = assemble(&p.kernel, &p.space, 0.0).unwrap();
        let (mu, _) = cosine_mode_eigenvalue(&shape, &p.space).unwrap();
        mu_seen = mu;
        let traj = run(&p).unwrap();
        let times: Vec<f64> = (0..=k).map(|j| p.time.node(j)).collect();
        let reference = eigenmode_reference(p.alpha, mu, 0.0, &times).unwrap();
        let eps = p.time.eps();
        let mut worst_own = 0.0f64;
        let mut worst_common = 0.0f64;
        for j in 0..=k {
            let rel = (traj.field(j)[0] - reference[j]).abs() / reference[j].abs();
            if times[j] >= 10.0 * eps {
                worst_own = worst_own.max(rel);
            }
            if times[j] >= 10.0 * coarse_eps {
                worst_common = worst_common.max(rel);
            }
        }
        own.push(worst_own);
        common.push(worst_common);
    }
    let elapsed = start.elapsed().as_secs_f64();
    let gain = common[0] / common[1];
    let pass = own[0] <= 0.05 && own[1] <= 0.05 && gain >= 1.3 && elapsed < 120.0;
    verdict(
        1,
        "eigenmode relaxation oracle",
        pass,
        &format!(
            "mu={mu_seen:.3}, rel err {:.2e} -> {:.2e}, halving gain {gain:.2}, {elapsed:.1}s",
            own[0], own[1]
        ),
    );
}

#[test]
fn c02_maximum_principle_ensemble() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let sizes_nx = [16usize, 32, 48, 64, 96, 128];
    let sizes_k = [16usize, 32, 64, 128, 256];
    let mut worst = 0.0f64;
    for trial in 0..20 {
        let nx = sizes_nx[rng.random_range(0..sizes_nx.len())];
        let k = sizes_k[rng.random_range(0..sizes_k.len())];
        let al = rng.random_range(0.15..0.9);
        let sg = rng.random_range(0.3..1.7);
        let t_end = rng.random_range(0.5..3.0);
        let initial: Vec<f64> = (0..nx).map(|_| rng.random_range(-2.0..2.0)).collect();
        let lo = initial.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = initial.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let p = Problem {
            time: TimeGrid::new(0.0, t_end, k).unwrap(),
            space: SpaceGrid::new(8.0, nx).unwrap(),
            alpha: order(al),
            kernel: KernelSpec::full(sg, 8.0, 8.0),
            initial,
            forcing: Forcing::zero(),
            profile_clamp_below: None,
        };
        let traj = run(&p).unwrap();
        for j in 0..=k {
            for w in traj.field(j) {
                worst = worst.max(lo - w).max(w - hi);
            }
        }
        let _ = trial;
    }
    let pass = worst <= 1e-10;
    verdict(
        2,
        "discrete maximum principle",
        pass,
        &format!("20 runs, worst range excursion {worst:.2e}"),
    );
}

#[test]
fn c03_scheme_residual_independent_path() {
    let bump = Forcing::from_fn("bump", 1.3, |t: f64, x: f64| {
        (1.0 + 0.2 * t).min(1.3) * (2.0 * PI * x / 8.0).sin()
    });
    let configs: Vec<(f64, f64, usize, usize, Forcing)> = vec![
        (0.5, 1.0, 48, 24, Forcing::zero()),
        (0.25, 0.6, 64, 32, Forcing::constant(0.7)),
        (0.75, 1.4, 96, 16, bump),
    ];
    let mut worst_ratio = 0.0f64;
    for (al, sg, k, nx, forcing) in configs {
        let mut rng = ChaCha8Rng::seed_from_u64(k as u64);
        let initial: Vec<f64> = (0..nx).map(|_| rng.random_range(-1.5..1.5)).collect();
        let p = Problem {
            time: TimeGrid::new(0.0, 1.5, k).unwrap(),
            space: SpaceGrid::new(8.0, nx).unwrap(),
            alpha: order(al),
            kernel: KernelSpec::full(sg, 8.0, 8.0),
            initial,
            forcing,
            profile_clamp_below: None,
        };
        let traj = run(&p).unwrap();
        let res = scheme_residuals(&traj).unwrap();
        for j in 1..=k {
            let allowed = 1e-10 * (1.0 + sup_norm(traj.field(j)));
            worst_ratio = worst_ratio.max(res[j - 1] / allowed);
        }
    }
    let pass = worst_ratio <= 1.0;
    verdict(
        3,
        "scheme residual via independent path",
        pass,
        &format!("worst residual at {:.3} of budget", worst_ratio),
    );
}

#[test]
fn c04_energy_inequality_ensemble() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut count = 0usize;
    let mut worst = f64::INFINITY;
    'outer: for &al in &[0.25, 0.5, 0.75] {
        for &k in &[16usize, 64, 256] {
            for _ in 0..23 {
                let grid = TimeGrid::new(-0.5, 1.5, k).unwrap();
                let vals: Vec<f64> = (0..=k).map(|_| rng.random_range(-4.0..4.0)).collect();
                let u = TimeSeries::new(grid, vals, HistoryExtension::ConstantBeforeA).unwrap();
                let d = energy_decompose_gap(&u, order(al)).unwrap();
                worst = worst.min(d.slack() / d.scale());
                count += 1;
                if count == 200 {
                    break 'outer;
                }
            }
        }
    }
    let pass = count == 200 && worst >= -1e-10;
    verdict(
        4,
        "energy inequality slack",
        pass,
        &format!("{count} series, min slack/scale {worst:.2e}"),
    );
}

#[test]
fn c05_barrier_bound_uniformity() {
    // Per (nu, alpha): every run must respect the analytic constant, the
    // observed bound must not depend on the base point, and the binding
    // (finest) observed constant must land within 10% of the analytic one.
    // The coarse-eps runs sit further below c; that slack is one-sided and
    // harmless, so the band is measured at the worst observed demand.
    let mut detail = String::new();
    let mut pass = true;
    for &(nu, al) in &[(0.1, 0.3), (0.2, 0.5), (0.3, 0.7)] {
        let mut reference = 0.0;
        let mut cmax = 0.0f64;
        for &eps in &[0.1, 0.01] {
            let mut across_a = Vec::new();
            for &a in &[-2.0f64, -10.0, -100.0] {
                let k = (-a / eps).round() as usize;
                let grid = TimeGrid::new(a, 0.0, k).unwrap();
                let b = barrier_bound_check(nu, order(al), &grid).unwrap();
                pass &= b.holds();
                reference = b.reference;
                across_a.push((-b.min_derivative).max(0.0));
                cmax = cmax.max(-b.min_derivative);
            }
            let hi = across_a.iter().cloned().fold(0.0f64, f64::max);
            let lo = across_a.iter().cloned().fold(f64::INFINITY, f64::min);
            pass &= (hi - lo) <= 1e-6 * hi;
        }
        let gap = (reference - cmax) / reference;
        pass &= gap.abs() < 0.10;
        detail.push_str(&format!("nu={nu} gap to c {:.1}%; ", 100.0 * gap));
    }
    verdict(5, "barrier bound uniformity", pass, detail.trim_end_matches("; "));
}

#[test]
fn c06_caputo_calculus() {
    // constants are annihilated
    let mut const_worst = 0.0f64;
    for &al in &[0.25, 0.5, 0.75] {
        let grid = TimeGrid::new(0.0, 1.0, 40).unwrap();
        let u = TimeSeries::new(grid, vec![2.5; 41], HistoryExtension::ConstantBeforeA).unwrap();
        for j in 1..=40 {
            const_worst = const_worst.max(discrete_caputo(&u, order(al), j).unwrap().abs());
        }
    }

    // powers against the Gamma closed form at t = 1, refining the lattice;
    // the observed order must clear the memory order itself
    let mut min_margin = f64::INFINITY;
    let mut orders = Vec::new();
    for &al in &[0.25, 0.35] {
        for q in [1.0, 2.0] {
            let closed = st_gamma(1.0 - al) * st_gamma(q + 1.0) / st_gamma(q + 1.0 - al);
            let ks = [64usize, 128, 256, 512];
            let mut errs = Vec::new();
            for &k in &ks {
                let grid = TimeGrid::new(0.0, 1.0, k).unwrap();
                let u = TimeSeries::from_fn(grid, HistoryExtension::ConstantBeforeA, |t| {
                    t.powf(q)
                })
                .unwrap();
                errs.push((discrete_caputo(&u, order(al), k).unwrap() - closed).abs());
            }
            let observed = (errs[0] / errs[3]).log2() / 3.0;
            orders.push(observed);
            min_margin = min_margin.min(observed - al);
        }
    }

    // integration by parts defect under joint lattice and quadrature
    // refinement
    let mut defects = Vec::new();
    for &(k, panels) in &[(64usize, 64usize), (128, 128), (256, 256)] {
        let grid = TimeGrid::new(0.0, 1.0, k).unwrap();
        let g = TimeSeries::from_fn(grid, HistoryExtension::ConstantBeforeA, |t| (PI * t).sin())
            .unwrap();
        let h = TimeSeries::from_fn(grid, HistoryExtension::ConstantBeforeA, |t| {
            (0.5 * PI * t).cos()
        })
        .unwrap();
        defects.push(ibp(&g, &h, 0.45, panels));
    }
    let ibp_order = (defects[0] / defects[2]).log2() / 2.0;

    let pass = const_worst <= 1e-12 && min_margin >= 0.0 && ibp_order >= 1.0;
    verdict(
        6,
        "fractional calculus identities",
        pass,
        &format!(
            "const {const_worst:.1e}, power orders {orders:.2?}, ibp order {ibp_order:.2}"
        ),
    );
}

fn ibp(g: &TimeSeries, h: &TimeSeries, al: f64, panels: usize) -> f64 {
    fracdiff_core::fractime::ibp_defect(g, h, order(al), panels).unwrap()
}

#[test]
fn c07_weak_form_ladder() {
    let start = Instant::now();
    let phi = TestFunction::new(|t: f64| (PI * t).sin().powi(2), 4.0, 2.5);
    let mut ladders = Vec::new();
    for forced in [false, true] {
        let mut rungs = Vec::new();
        for &(k, nx) in &[(32usize, 24usize), (64, 48), (128, 96)] {
            let mut p = eigenmode_problem(nx, k, 1.0);
            if forced {
                p.forcing = Forcing::from_fn("smooth pulse", 1.0, |t: f64, x: f64| {
                    (-t).exp() * (2.0 * PI * x / 8.0).sin()
                });
            }
            let traj = run(&p).unwrap();
            rungs.push(weak_residual(&traj, &phi, 2 * k).unwrap());
        }
        ladders.push(rungs);
    }
    let elapsed = start.elapsed().as_secs_f64();
    let mut pass = elapsed < 300.0;
    let mut detail = String::new();
    for rungs in &ladders {
        let r1 = rungs[0] / rungs[1];
        let r2 = rungs[1] / rungs[2];
        pass &= r1 >= 1.4 && r2 >= 1.4;
        detail.push_str(&format!(
            "[{:.2e} /{r1:.2} /{r2:.2}] ",
            rungs[0]
        ));
    }
    detail.push_str(&format!("{elapsed:.1}s"));
    verdict(7, "weak form refinement ladder", pass, &detail);
}

#[test]
fn c08_oscillation_decay_and_holder_exponent() {
    let mut betas = Vec::new();
    let mut decreasing = true;
    let mut rungs_seen = Vec::new();
    for &(nx, k) in &[(128usize, 512usize), (256, 1024)] {
        let traj = run(&eigenmode_problem(nx, k, 2.0)).unwrap();
        let frame = DiagnosticFrame::for_trajectory(&traj);
        let rep = oscillation_scan(&traj, &frame, 0.0, 0.0, 0.5, 4).unwrap();
        for w in rep.oscillations.windows(2) {
            decreasing &= w[1] < w[0];
        }
        rungs_seen.push(rep.oscillations.len());
        betas.push(holder_fit(&rep).unwrap().beta);
    }
    let agree = (betas[0] - betas[1]).abs() / betas[0].max(betas[1]);
    let pass = decreasing && betas.iter().all(|b| *b > 0.0) && agree <= 0.25;
    verdict(
        8,
        "oscillation decay and exponent stability",
        pass,
        &format!(
            "scales {:?}, beta {:.3} vs {:.3}, drift {:.0}%",
            rungs_seen,
            betas[0],
            betas[1],
            100.0 * agree
        ),
    );
}

#[test]
fn c09_determinism_and_uniqueness() {
    let p = eigenmode_problem(64, 64, 1.0);
    let t1 = run(&p).unwrap();
    let t2 = run(&p).unwrap();
    let mut bitwise = true;
    for j in 0..=64 {
        for m in 0..64 {
            bitwise &= t1.field(j)[m].to_bits() == t2.field(j)[m].to_bits();
        }
    }

    let zero = Problem {
        initial: vec![0.0; 64],
        ..eigenmode_problem(64, 64, 1.0)
    };
    let tz = run(&zero).unwrap();
    let mut sup = 0.0f64;
    for j in 0..=64 {
        sup = sup.max(sup_norm(tz.field(j)));
    }
    let pass = bitwise && sup <= 1e-12;
    verdict(
        9,
        "determinism and uniqueness",
        pass,
        &format!("bitwise match {bitwise}, difference sup {sup:.1e}"),
    );
}

#[test]
fn c10_interpolation_exponent_identities() {
    let mut worst = 0.0f64;
    let mut p_min = f64::INFINITY;
    for n in 1u32..=3 {
        for &al in &[0.25, 0.5, 0.75] {
            for &sg in &[0.5, 1.0, 1.5] {
                let r = interpolation_exponent(n, order(al), sg).unwrap();
                worst = worst
                    .max(r.space_conjugacy_defect().abs())
                    .max(r.time_conjugacy_defect().abs());
                p_min = p_min.min(r.p);
            }
        }
    }
    let pass = worst <= 1e-12 && p_min > 2.0;
    verdict(
        10,
        "interpolation exponent identities",
        pass,
        &format!("27 points, worst defect {worst:.1e}, min p {p_min:.3}"),
    );
}

#[test]
fn c11_backward_extension_round_trip() {
    let p = eigenmode_problem(128, 512, 2.0);
    let direct = run(&p).unwrap();
    let ext = backward_extension_problem(&p).unwrap();
    let ext_traj = run(&ext).unwrap();
    let m0 = ext.time.k() - p.time.k();
    let mut worst = 0.0f64;
    for j in 0..=p.time.k() {
        for m in 0..128 {
            worst = worst.max((ext_traj.field(m0 + j)[m] - direct.field(j)[m]).abs());
        }
    }
    let pass = worst <= 1e-8;
    verdict(
        11,
        "backward extension round trip",
        pass,
        &format!("{} pre-steps, restriction defect {worst:.1e}", m0),
    );
}
