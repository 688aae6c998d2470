//! `oracle`: march a problem with a closed-form answer and compare the
//! tracked amplitude against the relaxation profile. Only the full
//! kernel qualifies; the reference rate is the untruncated one.

use std::path::{Path, PathBuf};

use fracdiff_core::diagnostics::{ReportDocument, Table};
use fracdiff_core::march;
use fracdiff_core::spaceop::{assemble, cosine_mode_eigenvalue, TimeProfile};
use fracdiff_core::special::eigenmode_reference;

use crate::artifacts::{check_row, emit_report, resolve_out, write_text};
use crate::config::{load_config, FieldSpec, ForcingSpec, KernelChoice};
use crate::outcome::{CmdError, CmdResult, EXIT_CHECK, EXIT_OK};
use crate::threads;

pub fn cmd_oracle(
    config_path: &Path,
    out: Option<PathBuf>,
    threads_flag: Option<usize>,
) -> CmdResult<i32> {
    let cfg = load_config(config_path)?;
    let threads = threads::apply(threads_flag, cfg.threads)?;
    let dir = resolve_out(out, cfg.out_dir.as_deref())?;
    let pc = &cfg.problem;
    if pc.kernel != KernelChoice::Full {
        return Err(CmdError::config(
            "oracle needs kernel \"full\"; the closed-form rate is for the untruncated operator",
        ));
    }
    if !matches!(pc.profile, TimeProfile::None) {
        return Err(CmdError::config("oracle needs a time-independent kernel (no profile)"));
    }
    if !matches!(pc.forcing, ForcingSpec::Zero) {
        return Err(CmdError::config("oracle needs zero forcing"));
    }
    let amplitude = match pc.initial {
        FieldSpec::Constant { value } if value != 0.0 => value,
        FieldSpec::Cosine { amplitude, mode: 1 } if amplitude != 0.0 => amplitude,
        FieldSpec::Cosine { .. } => {
            return Err(CmdError::config("oracle tracks the first cosine mode only"))
        }
        _ => {
            return Err(CmdError::config(
                "oracle needs a nonzero constant or first-mode cosine initial profile",
            ))
        }
    };
    let constant = matches!(pc.initial, FieldSpec::Constant { .. });

    let problem = pc.build()?;
    let traj = march::run(&problem)?;
    let mu = if constant {
        0.0
    } else {
        let shape = assemble(&problem.kernel, &problem.space, problem.time.a())?;
        cosine_mode_eigenvalue(&shape, &problem.space)?.0
    };
    let times: Vec<f64> = (0..=pc.k).map(|j| problem.time.node(j)).collect();
    let reference = eigenmode_reference(problem.alpha, mu, problem.time.a(), &times)?;

    // The first few nodes sit against the kink of the profile; error is
    // judged once the scheme has settled.
    let settle = problem.time.a() + 10.0 * problem.time.eps();
    let mut worst = 0.0f64;
    let mut worst_node = problem.time.a();
    let mut table = Table::new("profile", &["j", "t", "observed", "expected"]);
    for j in 0..=pc.k {
        let observed = traj.field(j)[0];
        let expected = amplitude * reference[j];
        table.push_row(vec![
            j.to_string(),
            times[j].to_string(),
            observed.to_string(),
            expected.to_string(),
        ]);
        if times[j] >= settle {
            let rel = (observed - expected).abs() / expected.abs();
            if rel > worst {
                worst = rel;
                worst_node = times[j];
            }
        }
    }
    write_text(&dir.join("reference.csv"), &table.to_csv())?;

    let mut doc = ReportDocument::new("fracdiff oracle report, format 1");
    doc.push("command", "oracle");
    doc.push(
        "config",
        serde_json::to_string(&cfg).expect("config serializes"),
    );
    doc.push("threads", threads);
    doc.push("mu", mu);
    doc.push("settled_from", settle);
    doc.push("max_rel_err", format!("{worst:.6e}"));
    doc.push("worst_node", worst_node);
    let pass = check_row(
        &mut doc,
        "relaxation_profile",
        worst <= cfg.tolerances.oracle_rel,
        worst,
        "<=",
        cfg.tolerances.oracle_rel,
    );
    doc.push("artifact reference", "reference.csv");
    emit_report(&doc, &dir.join("report-oracle.txt"))?;
    Ok(if pass { EXIT_OK } else { EXIT_CHECK })
}
