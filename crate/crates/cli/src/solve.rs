//! `solve`: march the configured problem and write the trajectory
//! container, its CSV flattening, the assembled operator matrix, and the
//! residual report.

use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::Context;
use fracdiff_core::diagnostics::ReportDocument;
use fracdiff_core::march;
use fracdiff_core::spaceop::assemble;

use crate::artifacts::{check_row, emit_report, resolve_out, sup_norm, write_text};
use crate::config::load_config;
use crate::outcome::{CmdResult, EXIT_CHECK, EXIT_OK};
use crate::threads;

pub fn cmd_solve(
    config_path: &Path,
    out: Option<PathBuf>,
    threads_flag: Option<usize>,
) -> CmdResult<i32> {
    let cfg = load_config(config_path)?;
    let threads = threads::apply(threads_flag, cfg.threads)?;
    let dir = resolve_out(out, cfg.out_dir.as_deref())?;
    let problem = cfg.problem.build()?;

    let start = Instant::now();
    let traj = march::run(&problem)?;
    log::info!(
        "marched {} steps x {} cells in {:.2}s",
        cfg.problem.k,
        cfg.problem.nx,
        start.elapsed().as_secs_f64()
    );

    // Per-step contract: residual within budget relative to the slice size.
    let budget = cfg.tolerances.residual;
    let mut worst = 0.0f64;
    let mut worst_step = 0usize;
    let mut iterations = 0usize;
    for (i, s) in traj.meta().steps.iter().enumerate() {
        iterations += s.iterations;
        let ratio = s.residual / (budget * (1.0 + sup_norm(traj.field(i + 1))));
        if ratio > worst {
            worst = ratio;
            worst_step = i + 1;
        }
    }

    march::save(&traj, &dir.join("trajectory.frac"))?;
    let mut csv = Vec::new();
    march::export_csv(&traj, &mut csv)?;
    std::fs::write(dir.join("trajectory.csv"), &csv)
        .with_context(|| format!("writing {}", dir.join("trajectory.csv").display()))?;

    let t0 = problem.time.a();
    let shape = assemble(&problem.kernel, &problem.space, t0)?;
    let mut mat = format!(
        "# fracdiff matrix csv, format 1, rows={}, cols={}, t={}\n",
        shape.nrows(),
        shape.ncols(),
        t0
    );
    for i in 0..shape.nrows() {
        let row: Vec<String> = (0..shape.ncols()).map(|j| shape[(i, j)].to_string()).collect();
        mat.push_str(&row.join(","));
        mat.push('\n');
    }
    write_text(&dir.join("operator.csv"), &mat)?;

    let mut doc = ReportDocument::new("fracdiff solve report, format 1");
    doc.push("command", "solve");
    doc.push(
        "config",
        serde_json::to_string(&cfg).expect("config serializes"),
    );
    doc.push("threads", threads);
    doc.push("steps", cfg.problem.k);
    doc.push("cells", cfg.problem.nx);
    doc.push("picard_iterations", iterations);
    doc.push("binding_step", worst_step);
    let pass = check_row(&mut doc, "residual_contract", worst <= 1.0, worst, "<=", 1.0);
    doc.push("artifact trajectory", "trajectory.frac");
    doc.push("artifact csv", "trajectory.csv");
    doc.push("artifact operator", "operator.csv");
    emit_report(&doc, &dir.join("report-solve.txt"))?;
    Ok(if pass { EXIT_OK } else { EXIT_CHECK })
}
