//! `degiorgi`: oscillation ladder, Hölder fit, truncation energies, and
//! level-set measures for a stored trajectory. Exit 4 when the run's
//! resolution or window cannot support the requested scales.

use std::path::{Path, PathBuf};

use fracdiff_core::diagnostics::{
    de_giorgi_constants, difference_quotient_scan, holder_closed_form, holder_fit,
    interpolation_exponent, level_set_measure, oscillation_scan, truncation_energy, BarrierFamily,
    DiagnosticFrame, Direction, Region, ReportDocument, Table, DEFAULT_LAMBDA_STAR,
};
use fracdiff_core::march;
use fracdiff_core::Error as CoreError;

use crate::artifacts::{emit_report, resolve_out, write_text};
use crate::config::{load_config, DiagnosticsConfig};
use crate::outcome::{CmdError, CmdResult, EXIT_OK};
use crate::threads;

pub fn cmd_degiorgi(
    file: &Path,
    config: Option<&Path>,
    out: Option<PathBuf>,
    threads_flag: Option<usize>,
) -> CmdResult<i32> {
    let cfg = match config {
        Some(p) => Some(load_config(p)?),
        None => None,
    };
    let d: DiagnosticsConfig = cfg.as_ref().map(|c| c.diagnostics).unwrap_or_default();
    let threads = threads::apply(threads_flag, cfg.as_ref().and_then(|c| c.threads))?;
    let dir = resolve_out(out, cfg.as_ref().and_then(|c| c.out_dir.as_deref()))?;
    let traj = march::load(file)?;
    let p = traj.problem();
    let (alpha, sigma) = (p.alpha, p.kernel.sigma);
    let frame = DiagnosticFrame::for_trajectory(&traj);

    let rep = oscillation_scan(&traj, &frame, 0.0, 0.0, d.gamma, d.depth).map_err(|e| match &e {
        CoreError::InvalidParameter { name, .. } if *name == "t0" || *name == "x0" => {
            CmdError::resolution(e.to_string())
        }
        _ => e.into(),
    })?;
    // The ladder stops at the resolvable floor; under three scales no
    // exponent can be fit and the request cannot be answered at this
    // resolution.
    let fit = holder_fit(&rep).map_err(|e| match e {
        CoreError::InsufficientScales { detail } => CmdError::resolution(format!(
            "{detail}; this run resolves time depths down to {:.3e} and radii down to {:.3e}",
            2.0 * p.time.eps(),
            2.0 * p.space.h()
        )),
        other => other.into(),
    })?;

    let beta_target = match d.beta_target {
        Some(b) => b,
        None => holder_closed_form(DEFAULT_LAMBDA_STAR, d.gamma, sigma / alpha.get())?,
    };
    if p.time.k() < 3 {
        return Err(CmdError::resolution(
            "trajectory too short for the difference-quotient scan",
        ));
    }
    let lag = d.lag.unwrap_or((p.time.k() / 8).max(2)).min(p.time.k() - 1);
    let quot = difference_quotient_scan(&traj, lag, beta_target)?;

    let en = truncation_energy(&traj, &BarrierFamily::psi(sigma, alpha.get()), &frame, d.depth)?;

    // Level sets over the base cylinder, clipped to the run's window.
    let t_lo = frame.map_t(p.time.a()).max(-4.0);
    let radius = (0.5 * p.space.length() * (1.0 - 1e-12)).min(3.0);
    let region = Region {
        t_lo,
        t_hi: 0.0,
        x_center: 0.0,
        x_radius: radius,
    };
    let mut level_table = Table::new("level_sets", &["level", "measure"]);
    let mut top_measure = 0.0;
    for &lv in &en.levels {
        let m = level_set_measure(
            &traj,
            &BarrierFamily::psi_l(lv, sigma, alpha.get()),
            &frame,
            &region,
            Direction::Above,
        )?;
        top_measure = m;
        level_table.push_row(vec![lv.to_string(), m.to_string()]);
    }
    let grown = level_set_measure(
        &traj,
        &BarrierFamily::psi_lambda(d.lambda, sigma, alpha.get()),
        &frame,
        &region,
        Direction::Above,
    )?;
    let consts = de_giorgi_constants(1, alpha, sigma, d.kappa0)?;
    let expo = interpolation_exponent(1, alpha, sigma)?;

    let mut doc = ReportDocument::new("fracdiff degiorgi report, format 1");
    doc.push("command", "degiorgi");
    doc.push("trajectory", file.display());
    doc.push("threads", threads);
    match &cfg {
        Some(c) => doc.push("config", serde_json::to_string(c).expect("config serializes")),
        None => doc.push("config", "defaults"),
    }
    doc.push("gamma", d.gamma);
    doc.push("depth_requested", d.depth);
    doc.push("scales_resolved", rep.oscillations.len());
    doc.push("truncated", rep.truncated);
    doc.push("beta", fit.beta);
    doc.push("fit_residual", format!("{:.6e}", fit.fit_residual));
    doc.push("scales_used", fit.scales_used);
    doc.push("dropped_zeros", fit.dropped_zeros);
    doc.push("beta_target", beta_target);
    doc.push("quotient_lag", lag);
    doc.push("quotient_sup", format!("{:.6e}", quot.sup_quotient));
    doc.push("quotient_seminorm", format!("{:.6e}", quot.seminorm));
    doc.push("lags_used", quot.lags_used);
    doc.push("truncation_exponent", en.exponent);
    doc.push("interpolation_p", expo.p);
    doc.push("interpolation_beta", expo.beta);
    doc.push("comparison_radius", consts.r);
    doc.push("smallness_delta", consts.delta);
    doc.push("measure_top_level", top_measure);
    doc.push("measure_above_growth_cutoff", grown);
    doc.push(
        "hypothesis_measure",
        d.mu * (region.t_hi - region.t_lo) * 2.0 * radius,
    );
    doc.push(
        "smallness",
        if top_measure <= consts.delta {
            "below delta"
        } else {
            "above delta"
        },
    );

    let mut osc = Table::new("oscillation", &["scale", "time_depth", "radius", "osc"]);
    for (k, &o) in rep.oscillations.iter().enumerate() {
        osc.push_row(vec![
            k.to_string(),
            d.gamma.powf(k as f64 * rep.exponent_ratio).to_string(),
            d.gamma.powi(k as i32).to_string(),
            o.to_string(),
        ]);
    }
    let mut trunc = Table::new("truncation_energy", &["k", "level", "u"]);
    for (i, (&lv, &u)) in en.levels.iter().zip(&en.values).enumerate() {
        trunc.push_row(vec![i.to_string(), lv.to_string(), u.to_string()]);
    }
    write_text(&dir.join("oscillation.csv"), &osc.to_csv())?;
    write_text(&dir.join("truncation.csv"), &trunc.to_csv())?;
    write_text(&dir.join("levelsets.csv"), &level_table.to_csv())?;
    doc.push("artifact oscillation", "oscillation.csv");
    doc.push("artifact truncation", "truncation.csv");
    doc.push("artifact levelsets", "levelsets.csv");
    doc.push_table(osc);
    doc.push_table(trunc);
    doc.push_table(level_table);
    emit_report(&doc, &dir.join("report-degiorgi.txt"))?;
    Ok(EXIT_OK)
}
