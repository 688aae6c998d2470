//! Report and file emission.
//!
//! Every byte written here must be reproducible: no timestamps, no
//! absolute paths, floats through either the shortest round-trip
//! formatter (tables) or a fixed-width scientific format (check rows).

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use fracdiff_core::diagnostics::ReportDocument;

use crate::outcome::CmdResult;

/// The `--out` flag wins over the config's `out_dir`; the working
/// directory is the fallback. Created if missing.
pub fn resolve_out(flag: Option<PathBuf>, from_config: Option<&str>) -> CmdResult<PathBuf> {
    let dir = flag.unwrap_or_else(|| PathBuf::from(from_config.unwrap_or(".")));
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    Ok(dir)
}

pub fn write_text(path: &Path, text: &str) -> CmdResult<()> {
    fs::write(path, text)
        .with_context(|| format!("writing {}", path.display()))
        .map_err(Into::into)
}

/// Writes the rendered report and mirrors it to stdout.
pub fn emit_report(doc: &ReportDocument, path: &Path) -> CmdResult<()> {
    let text = doc.render();
    write_text(path, &text)?;
    print!("{text}");
    Ok(())
}

/// A `check <name> = <status> measured=... threshold=...` row; returns
/// whether the check passed so callers can fold the verdicts.
pub fn check_row(
    doc: &mut ReportDocument,
    name: &str,
    pass: bool,
    measured: f64,
    relation: &str,
    threshold: f64,
) -> bool {
    doc.push(
        format!("check {name}"),
        format!(
            "{} measured={measured:.6e} threshold{relation}{threshold:.6e}",
            if pass { "pass" } else { "fail" }
        ),
    );
    pass
}

pub fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |acc, x| acc.max(x.abs()))
}

/// splitmix64; enough randomness for stress series, no crate needed.
pub fn splitmix(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Uniform draw from [-4, 4].
pub fn draw(state: &mut u64) -> f64 {
    let u = (splitmix(state) >> 11) as f64 / (1u64 << 53) as f64;
    8.0 * u - 4.0
}
