//! `converge`: run the configured refinement ladder, compare consecutive
//! rungs at their shared nodes, and require the weak residual to fall by
//! the contracted factor per refinement.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use fracdiff_core::diagnostics::{weak_residual, ReportDocument, Table, TestFunction};
use fracdiff_core::march::{self, Trajectory};

use crate::artifacts::{check_row, emit_report, resolve_out, write_text};
use crate::config::load_config;
use crate::outcome::{CmdError, CmdResult, EXIT_CHECK, EXIT_OK};
use crate::threads;

pub fn cmd_converge(
    config_path: &Path,
    out: Option<PathBuf>,
    threads_flag: Option<usize>,
) -> CmdResult<i32> {
    let cfg = load_config(config_path)?;
    let threads = threads::apply(threads_flag, cfg.threads)?;
    let dir = resolve_out(out, cfg.out_dir.as_deref())?;
    if cfg.ladder.len() < 2 {
        return Err(CmdError::config("converge needs a ladder of at least two rungs"));
    }
    for (i, w) in cfg.ladder.windows(2).enumerate() {
        let (c, f) = (w[0], w[1]);
        if f.k < c.k || f.nx < c.nx || f.k % c.k != 0 || f.nx % c.nx != 0 {
            return Err(CmdError::config(format!(
                "ladder rung {} (k={}, nx={}) must refine rung {} (k={}, nx={}) by integer factors",
                i + 2,
                f.k,
                f.nx,
                i + 1,
                c.k,
                c.nx
            )));
        }
    }
    // Build everything up front so a bad rung is a config error, not a
    // partial run.
    let mut problems = Vec::new();
    for r in &cfg.ladder {
        problems.push(cfg.problem.with_resolution(r.k, r.nx).build()?);
    }

    let (a, span, l) = (
        cfg.problem.a,
        cfg.problem.t_end - cfg.problem.a,
        cfg.problem.domain_length,
    );
    let phi = TestFunction::new(
        move |t: f64| ((PI * (t - a) / span).sin()).powi(2),
        0.5 * l,
        0.3 * l,
    );

    let mut doc = ReportDocument::new("fracdiff converge report, format 1");
    doc.push("command", "converge");
    doc.push(
        "config",
        serde_json::to_string(&cfg).expect("config serializes"),
    );
    doc.push("threads", threads);
    doc.push("rungs", cfg.ladder.len());

    // The first nodes carry an error that depends on the node index, not
    // the node time, so diffs there never settle under refinement; rungs
    // are compared past ten coarsest steps, the same settling convention
    // the oracle uses. Weak residuals integrate the whole window.
    let settle = a + 10.0 * span / cfg.ladder[0].k as f64;
    doc.push("settled_from", settle);

    let mut table = Table::new("ladder", &["rung", "k", "nx", "weak_residual", "sup_diff", "order"]);
    let mut trajs: Vec<Trajectory> = Vec::new();
    let mut weaks: Vec<f64> = Vec::new();
    let mut diffs: Vec<f64> = Vec::new();
    let mut failed = None;
    for (i, (rung, problem)) in cfg.ladder.iter().zip(&problems).enumerate() {
        let traj = match march::run(problem) {
            Ok(t) => t,
            Err(e) => {
                failed = Some((i, e));
                break;
            }
        };
        let wr = weak_residual(&traj, &phi, 2 * rung.k)?;
        let (diff_cell, order_cell) = if i == 0 {
            (String::new(), String::new())
        } else {
            let prev = cfg.ladder[i - 1];
            let (sk, sx) = (rung.k / prev.k, rung.nx / prev.nx);
            let coarse = &trajs[i - 1];
            let j_start = (0..=prev.k)
                .find(|&j| a + j as f64 * span / prev.k as f64 >= settle - 1e-12 * span)
                .unwrap_or(0);
            let mut sup = 0.0f64;
            for j in j_start..=prev.k {
                for m in 0..prev.nx {
                    sup = sup.max((traj.field(j * sk)[m * sx] - coarse.field(j)[m]).abs());
                }
            }
            diffs.push(sup);
            let order = if diffs.len() >= 2 && sk > 1 && sup > 0.0 && diffs[diffs.len() - 2] > 0.0 {
                Some((diffs[diffs.len() - 2] / sup).ln() / (sk as f64).ln())
            } else {
                None
            };
            (
                sup.to_string(),
                order.map(|o| format!("{o:.3}")).unwrap_or_default(),
            )
        };
        table.push_row(vec![
            (i + 1).to_string(),
            rung.k.to_string(),
            rung.nx.to_string(),
            format!("{wr:.6e}"),
            diff_cell,
            order_cell,
        ]);
        weaks.push(wr);
        trajs.push(traj);
    }

    let mut ok = true;
    if let Some((i, e)) = failed {
        doc.push("failed_rung", i + 1);
        doc.push("failure", e.to_string());
        ok = false;
    } else {
        for (i, w) in weaks.windows(2).enumerate() {
            let refines = cfg.ladder[i + 1].k > cfg.ladder[i].k;
            let required = if refines { cfg.tolerances.weak_ratio } else { 1.0 };
            let gain = if w[1] > 0.0 { w[0] / w[1] } else { f64::INFINITY };
            let pass = if refines {
                w[1] * required <= w[0]
            } else {
                w[1] <= w[0] * (1.0 + 1e-12)
            };
            ok &= check_row(
                &mut doc,
                &format!("weak_gain_rung_{}", i + 2),
                pass,
                gain,
                ">=",
                required,
            );
        }
        if let Some(&last) = diffs.last() {
            doc.push("sup_diff_final", format!("{last:.6e}"));
        }
        if diffs.len() >= 2 {
            let n = cfg.ladder.len();
            let fac = cfg.ladder[n - 1].k / cfg.ladder[n - 2].k;
            let (d0, d1) = (diffs[diffs.len() - 2], diffs[diffs.len() - 1]);
            if fac > 1 && d0 > 0.0 && d1 > 0.0 {
                doc.push("observed_order", format!("{:.3}", (d0 / d1).ln() / (fac as f64).ln()));
            }
        }
    }
    write_text(&dir.join("ladder.csv"), &table.to_csv())?;
    doc.push("artifact ladder", "ladder.csv");
    doc.push_table(table);
    emit_report(&doc, &dir.join("report-converge.txt"))?;
    Ok(if ok { EXIT_OK } else { EXIT_CHECK })
}
