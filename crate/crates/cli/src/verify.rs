//! `verify`: load a stored trajectory and re-check one inequality suite
//! against it. Exit 3 when a check fails, 2 when the suite does not apply
//! to the run or the file cannot be parsed.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use fracdiff_core::diagnostics::{
    energy_decompose_gap, weak_residual, ReportDocument, Table, TestFunction,
};
use fracdiff_core::fractime::{
    barrier_bound_check, FracOrder, HistoryExtension, TimeGrid, TimeSeries,
};
use fracdiff_core::march::{self, Forcing, Problem, Trajectory};
use fracdiff_core::spaceop::SpaceGrid;

use crate::artifacts::{check_row, draw, emit_report, resolve_out};
use crate::config::{load_config, Tolerances};
use crate::outcome::{CmdError, CmdResult, EXIT_CHECK, EXIT_OK};
use crate::threads;

pub fn cmd_verify(
    file: &Path,
    suite: &str,
    config: Option<&Path>,
    out: Option<PathBuf>,
    threads_flag: Option<usize>,
) -> CmdResult<i32> {
    let cfg = match config {
        Some(p) => Some(load_config(p)?),
        None => None,
    };
    let tol = cfg.as_ref().map(|c| c.tolerances).unwrap_or_default();
    let seed = cfg.as_ref().map(|c| c.seed).unwrap_or(0);
    let threads = threads::apply(threads_flag, cfg.as_ref().and_then(|c| c.threads))?;
    let dir = resolve_out(out, cfg.as_ref().and_then(|c| c.out_dir.as_deref()))?;
    let traj = march::load(file)?;

    let mut doc = ReportDocument::new("fracdiff verify report, format 1");
    doc.push("command", "verify");
    doc.push("suite", suite);
    doc.push("trajectory", file.display());
    doc.push("threads", threads);

    let ok = match suite {
        "maxprinciple" => maxprinciple(&mut doc, &traj, &tol)?,
        "energy" => energy(&mut doc, &traj, &tol, seed)?,
        "barriers" => barriers(&mut doc, &traj)?,
        "weakform" => weakform(&mut doc, &traj, &tol)?,
        "uniqueness" => uniqueness(&mut doc, &traj, &tol)?,
        other => {
            return Err(CmdError::config(format!(
                "unknown suite `{other}`: expected maxprinciple, energy, barriers, weakform, or uniqueness"
            )))
        }
    };
    emit_report(&doc, &dir.join(format!("report-verify-{suite}.txt")))?;
    Ok(if ok { EXIT_OK } else { EXIT_CHECK })
}

/// Unforced runs stay inside the initial data's range.
fn maxprinciple(doc: &mut ReportDocument, traj: &Trajectory, tol: &Tolerances) -> CmdResult<bool> {
    let p = traj.problem();
    if p.forcing.sup_bound() != 0.0 {
        return Err(CmdError::config(format!(
            "suite maxprinciple needs an unforced run; forcing `{}` has sup bound {}",
            p.forcing.label(),
            p.forcing.sup_bound()
        )));
    }
    let lo0 = p.initial.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi0 = p.initial.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut worst = f64::NEG_INFINITY;
    for j in 1..=p.time.k() {
        for &w in traj.field(j) {
            worst = worst.max(w - hi0).max(lo0 - w);
        }
    }
    doc.push("initial_min", lo0);
    doc.push("initial_max", hi0);
    let budget = tol.max_excursion * (1.0 + lo0.abs().max(hi0.abs()));
    Ok(check_row(doc, "bounds", worst <= budget, worst.max(0.0), "<=", budget))
}

/// Nonnegative decomposition slack, on the run's own nodal series and on
/// a seeded batch of rough ones.
fn energy(doc: &mut ReportDocument, traj: &Trajectory, tol: &Tolerances, seed: u64) -> CmdResult<bool> {
    let p = traj.problem();
    let k = p.time.k();
    let nx = p.space.nx();
    let mut worst = f64::INFINITY;
    let mut own = 0usize;
    // The gap costs k^2 per series; past a few thousand steps the batch
    // below carries the check alone.
    if k <= 2048 {
        for m in (0..nx).step_by((nx / 8).max(1)) {
            let vals: Vec<f64> = (0..=k).map(|j| traj.field(j)[m]).collect();
            let u = TimeSeries::new(p.time, vals, HistoryExtension::ConstantBeforeA)?;
            let d = energy_decompose_gap(&u, p.alpha)?;
            worst = worst.min(d.slack() / d.scale().max(f64::MIN_POSITIVE));
            own += 1;
        }
    }
    let grid = if k > 256 {
        TimeGrid::new(p.time.a(), p.time.a() + 256.0 * p.time.eps(), 256)?
    } else {
        p.time
    };
    let mut state = seed;
    for _ in 0..50 {
        let vals: Vec<f64> = (0..=grid.k()).map(|_| draw(&mut state)).collect();
        let u = TimeSeries::new(grid, vals, HistoryExtension::ConstantBeforeA)?;
        let d = energy_decompose_gap(&u, p.alpha)?;
        worst = worst.min(d.slack() / d.scale().max(f64::MIN_POSITIVE));
    }
    doc.push("own_series", own);
    doc.push("random_series", 50);
    doc.push("seed", seed);
    Ok(check_row(doc, "energy_slack", worst >= -tol.energy_slack, worst, ">=", -tol.energy_slack))
}

/// The discrete growth-barrier bound over a parameter battery, with the
/// run's own order appended as a fourth exponent pair.
fn barriers(doc: &mut ReportDocument, traj: &Trajectory) -> CmdResult<bool> {
    let al_run = traj.problem().alpha.get();
    let mut combos = vec![(0.1, 0.3), (0.2, 0.5), (0.3, 0.7)];
    combos.push((0.5 * al_run, al_run));
    let mut table = Table::new(
        "barrier_bounds",
        &["nu", "alpha", "a", "eps", "min_derivative", "reference"],
    );
    let mut all = true;
    let mut margin = f64::INFINITY;
    for &(nu, al) in &combos {
        for &a in &[-2.0f64, -10.0] {
            for &eps in &[0.1f64, 0.05] {
                let k = (-a / eps).round() as usize;
                let b = barrier_bound_check(nu, FracOrder::new(al)?, &TimeGrid::new(a, 0.0, k)?)?;
                all &= b.holds();
                margin = margin.min(b.reference + b.min_derivative);
                table.push_row(vec![
                    nu.to_string(),
                    al.to_string(),
                    a.to_string(),
                    eps.to_string(),
                    b.min_derivative.to_string(),
                    b.reference.to_string(),
                ]);
            }
        }
    }
    doc.push("combinations", 4 * combos.len());
    let ok = check_row(doc, "lower_bound", all && margin >= 0.0, margin, ">=", 0.0);
    doc.push_table(table);
    Ok(ok)
}

/// The weak residual must fall by the contracted factor when the stored
/// resolution is compared against its halving.
fn weakform(doc: &mut ReportDocument, traj: &Trajectory, tol: &Tolerances) -> CmdResult<bool> {
    let p = traj.problem();
    let (k, nx) = (p.time.k(), p.space.nx());
    if k % 2 != 0 || nx % 2 != 0 || k < 4 || nx < 16 {
        return Err(CmdError::config(
            "suite weakform needs even k and nx with k >= 4 and nx >= 16 so the run can be halved",
        ));
    }
    // Coarse nodes are a subset of the fine ones, so sampling the stored
    // forcing at them is exact.
    let coarse = Problem {
        time: TimeGrid::new(p.time.a(), p.time.t_end(), k / 2)?,
        space: SpaceGrid::new(p.space.length(), nx / 2)?,
        alpha: p.alpha,
        kernel: p.kernel.clone(),
        initial: p.initial.iter().step_by(2).cloned().collect(),
        forcing: p.forcing.clone(),
        profile_clamp_below: p.profile_clamp_below,
    };
    let coarse_traj = march::run(&coarse)?;
    let (a, span, l) = (p.time.a(), p.time.t_end() - p.time.a(), p.space.length());
    let phi = TestFunction::new(
        move |t: f64| ((PI * (t - a) / span).sin()).powi(2),
        0.5 * l,
        0.3 * l,
    );
    let fine_r = weak_residual(traj, &phi, 2 * k)?;
    let coarse_r = weak_residual(&coarse_traj, &phi, k)?;
    doc.push("residual_fine", format!("{fine_r:.6e}"));
    doc.push("residual_coarse", format!("{coarse_r:.6e}"));
    let floor = 1e-13;
    let (pass, ratio) = if fine_r < floor && coarse_r < floor {
        doc.push("note", "both residuals at the floor");
        (true, f64::INFINITY)
    } else {
        (coarse_r >= tol.weak_ratio * fine_r, coarse_r / fine_r)
    };
    Ok(check_row(doc, "refinement_gain", pass, ratio, ">=", tol.weak_ratio))
}

/// Replaying the stored problem must reproduce the bytes; zero data must
/// stay at zero.
fn uniqueness(doc: &mut ReportDocument, traj: &Trajectory, tol: &Tolerances) -> CmdResult<bool> {
    let p = traj.problem();
    let replay = march::run(p)?;
    let mut sup = 0.0f64;
    for j in 0..=p.time.k() {
        for (x, y) in replay.field(j).iter().zip(traj.field(j)) {
            sup = sup.max((x - y).abs());
        }
    }
    let exact = check_row(doc, "replay_bitwise", sup == 0.0, sup, "<=", 0.0);
    let zero = Problem {
        time: p.time,
        space: p.space,
        alpha: p.alpha,
        kernel: p.kernel.clone(),
        initial: vec![0.0; p.space.nx()],
        forcing: Forcing::zero(),
        profile_clamp_below: p.profile_clamp_below,
    };
    let zt = march::run(&zero)?;
    let mut zsup = 0.0f64;
    for j in 0..=p.time.k() {
        for &w in zt.field(j) {
            zsup = zsup.max(w.abs());
        }
    }
    let z_ok = check_row(doc, "zero_data", zsup <= tol.uniqueness, zsup, "<=", tol.uniqueness);
    Ok(exact && z_ok)
}
