//! Regularity diagnostics for solved trajectories.
//!
//! Everything here is a read-only consumer of a [`crate::march::Trajectory`].
//! The diagnostics work in a common chart, the [`DiagnosticFrame`]: time is
//! measured backward from a chosen origin (by default the final slice, so
//! the solved window becomes [a - T, 0]) and space as the signed minimal
//! displacement from a chosen center on the circle. The cutoffs in
//! [`barriers`] are defined in that chart.

pub mod barriers;
pub mod energy;
pub mod extend;
pub mod report;
pub mod scan;
pub mod weakform;

pub use barriers::{barrier_eval, BarrierFamily, BarrierKind};
pub use energy::{
    energy_decompose_gap, level_set_measure, truncation_energy, Direction, EnergyDecomposition,
    LevelEnergy, Region,
};
pub use extend::backward_extension_problem;
pub use report::{ReportDocument, Table};
pub use scan::{
    difference_quotient_scan, holder_closed_form, holder_fit, interpolation_exponent,
    oscillation_scan, ExponentReport, HolderFit, OscillationReport, QuotientReport,
};
pub use weakform::{weak_residual, TestFunction};

use crate::error::Error;
use crate::fractime::FracOrder;
use crate::march::Trajectory;
use crate::spaceop::{KernelSpec, TimeProfile};
use crate::Result;

/// Default cutoff ladder parameter.
pub const DEFAULT_LAMBDA: f64 = 0.1;
/// Default hypothesis measure for the shrinking-lemma check.
pub const DEFAULT_MU: f64 = 0.1;
/// Default cylinder shrink factor for oscillation scans.
pub const DEFAULT_GAMMA: f64 = 0.5;
/// Default seed for the smallness threshold in [`de_giorgi_constants`].
pub const DEFAULT_KAPPA0: f64 = 1e-3;
/// Default per-scale improvement factor for [`holder_closed_form`].
pub const DEFAULT_LAMBDA_STAR: f64 = 0.2;

/// Chart mapping solver coordinates to diagnostic coordinates.
#[derive(Clone, Copy, Debug)]
pub struct DiagnosticFrame {
    pub t_origin: f64,
    pub x_center: f64,
    length: f64,
}

impl DiagnosticFrame {
    /// Chart centered on the trajectory's final slice and the midpoint of
    /// the circle.
    pub fn for_trajectory(traj: &Trajectory) -> Self {
        let prob = traj.problem();
        DiagnosticFrame {
            t_origin: prob.time.t_end(),
            x_center: 0.5 * prob.space.length(),
            length: prob.space.length(),
        }
    }

    pub fn with_center(traj: &Trajectory, t_origin: f64, x_center: f64) -> Self {
        DiagnosticFrame {
            t_origin,
            x_center,
            length: traj.problem().space.length(),
        }
    }

    pub fn map_t(&self, t: f64) -> f64 {
        t - self.t_origin
    }

    /// Signed displacement from the center, wrapped into (-L/2, L/2].
    pub fn map_x(&self, x: f64) -> f64 {
        self.wrap(x - self.x_center)
    }

    /// Wraps a displacement into the minimal-image interval (-L/2, L/2].
    pub fn wrap(&self, d: f64) -> f64 {
        let mut r = d % self.length;
        if r > 0.5 * self.length {
            r -= self.length;
        }
        if r <= -0.5 * self.length {
            r += self.length;
        }
        r
    }
}

/// Strips the time multiplier off a kernel; the shape factor alone.
pub(crate) fn unit_kernel(spec: &KernelSpec) -> KernelSpec {
    let mut unit = spec.clone();
    unit.time_profile = TimeProfile::None;
    unit.time_shift = 0.0;
    unit.time_scale = 1.0;
    unit
}

/// The measure-shrinking constants: a comparison radius R and the
/// smallness threshold delta seeded by kappa0.
#[derive(Clone, Copy, Debug)]
pub struct DeGiorgiConstants {
    pub r: f64,
    pub delta: f64,
}

/// Smallest integer radius R >= 2^(1/sigma) for which the raised
/// quarter-exponent cutoff stays below the half-exponent one outside
/// [-R^(sigma/alpha), 0] x B_R, together with
/// delta = R^(-n - sigma/alpha) (1 + psibar(-2, 2))^(-2) kappa0.
///
/// The comparison 2 + psibar(|t|+1, |x|+1) <= psi(t, x) is reduced to its
/// two boundary rays: on each axis the shifted quarter growth exceeds the
/// half growth by at most 2^(s/4) - 1 (attained where the half growth
/// first engages), and both one-ray margins are monotone in R, so a
/// bisection on the worse margin is exact.
pub fn de_giorgi_constants(
    n: u32,
    alpha: FracOrder,
    sigma: f64,
    kappa0: f64,
) -> Result<DeGiorgiConstants> {
    if n == 0 {
        return Err(Error::invalid("n", 0.0, "dimension must be at least 1"));
    }
    if !(sigma > 0.0 && sigma < 2.0) {
        return Err(Error::invalid("sigma", sigma, "order must lie in (0, 2)"));
    }
    if !(kappa0 > 0.0 && kappa0.is_finite()) {
        return Err(Error::invalid("kappa0", kappa0, "seed must be positive"));
    }
    let al = alpha.get();
    let surplus_t = 2.0f64.powf(0.25 * al) - 1.0;
    let surplus_x = 2.0f64.powf(0.25 * sigma) - 1.0;
    let margin = |r: f64| -> f64 {
        let half = r.powf(0.5 * sigma) - 1.0;
        let g_space = half - 2.0 - ((r + 1.0).powf(0.25 * sigma) - 1.0).max(0.0) - surplus_t;
        let g_time =
            half - 2.0 - ((r.powf(sigma / al) + 1.0).powf(0.25 * al) - 1.0).max(0.0) - surplus_x;
        g_space.min(g_time)
    };
    let floor = 1e-6;
    let base = 2.0f64.powf(1.0 / sigma).max(2.0);
    let mut hi = base;
    let mut doublings = 0;
    while margin(hi) < floor {
        hi *= 2.0;
        doublings += 1;
        if doublings > 200 {
            return Err(Error::OutOfRegime {
                value: hi,
                detail: "comparison radius search diverged",
            });
        }
    }
    let mut lo = base;
    while hi - lo > 0.5 {
        let mid = 0.5 * (lo + hi);
        if margin(mid) < floor {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let r = hi.ceil();

    let psibar = barrier_eval(&BarrierFamily::psi_bar(sigma, al), -2.0, 2.0)?;
    let delta = r.powf(-(n as f64 + sigma / al)) * (1.0 + psibar).powi(-2) * kappa0;
    Ok(DeGiorgiConstants { r, delta })
}
