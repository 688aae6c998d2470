//! Oscillation decay over shrinking cylinders, Hölder exponent fitting,
//! difference-quotient seminorms, and the interpolation exponents.

use super::barriers::{barrier_eval, BarrierFamily};
use super::DiagnosticFrame;
use crate::error::Error;
use crate::fractime::FracOrder;
use crate::march::Trajectory;
use crate::Result;

/// Oscillations of a trajectory over nested parabolic cylinders
/// [t0 - gamma^(k rho), t0] x B(x0, gamma^k), rho = sigma/alpha.
#[derive(Clone, Debug)]
pub struct OscillationReport {
    pub center_t: f64,
    pub center_x: f64,
    pub gamma: f64,
    /// sigma/alpha: converts a spatial scale into the matching time depth.
    pub exponent_ratio: f64,
    /// osc_k = sup - inf over the k-th cylinder, nonincreasing by nesting.
    pub oscillations: Vec<f64>,
    /// True when the scan stopped before `depth` because a cylinder fell
    /// below the resolvable scale (2 eps in time or 2 h in space).
    pub truncated: bool,
}

/// Grid sup - inf over the cylinder ladder centered at (t0, x0) in
/// diagnostic coordinates. Cylinders are closed; nodes on the rim count.
pub fn oscillation_scan(
    traj: &Trajectory,
    frame: &DiagnosticFrame,
    t0: f64,
    x0: f64,
    gamma: f64,
    depth: usize,
) -> Result<OscillationReport> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::invalid("gamma", gamma, "shrink factor must lie in (0, 1)"));
    }
    let prob = traj.problem();
    let tg = &prob.time;
    let sg = &prob.space;
    let ratio = prob.kernel.sigma / prob.alpha.get();
    let (t_first, t_last) = (frame.map_t(tg.a()), frame.map_t(tg.t_end()));
    if t0 > t_last || t0 - 1.0 < t_first {
        return Err(Error::invalid(
            "t0",
            t0,
            "the base cylinder [t0-1, t0] must fit inside the time window",
        ));
    }

    let eps = tg.eps();
    let h = sg.h();
    let mut oscillations = Vec::with_capacity(depth + 1);
    for k in 0..=depth {
        let t_depth = gamma.powf(k as f64 * ratio);
        let radius = gamma.powi(k as i32);
        if t_depth < 2.0 * eps || radius < 2.0 * h {
            break;
        }
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for j in 0..=tg.k() {
            let t = frame.map_t(tg.node(j));
            if t < t0 - t_depth || t > t0 {
                continue;
            }
            let w = traj.field(j);
            for m in 0..sg.nx() {
                if frame.wrap(frame.map_x(sg.node(m)) - x0).abs() <= radius {
                    lo = lo.min(w[m]);
                    hi = hi.max(w[m]);
                }
            }
        }
        if hi < lo {
            break;
        }
        oscillations.push(hi - lo);
    }
    let truncated = oscillations.len() < depth + 1;
    Ok(OscillationReport {
        center_t: t0,
        center_x: x0,
        gamma,
        exponent_ratio: ratio,
        oscillations,
        truncated,
    })
}

/// Least-squares Hölder exponent from an oscillation ladder.
#[derive(Clone, Copy, Debug)]
pub struct HolderFit {
    /// Slope of ln osc_k against ln of the cylinder time depth; +infinity
    /// when every oscillation vanished.
    pub beta: f64,
    /// Root-mean-square residual of the log-log fit.
    pub fit_residual: f64,
    /// True when zero oscillations had to be excluded from the fit.
    pub dropped_zeros: bool,
    pub scales_used: usize,
}

pub fn holder_fit(report: &OscillationReport) -> Result<HolderFit> {
    if report.oscillations.is_empty() {
        return Err(Error::InsufficientScales {
            detail: "oscillation ladder is empty".into(),
        });
    }
    let lg = report.gamma.ln() * report.exponent_ratio;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut dropped = false;
    for (k, &osc) in report.oscillations.iter().enumerate() {
        if osc > 0.0 {
            xs.push(k as f64 * lg);
            ys.push(osc.ln());
        } else {
            dropped = true;
        }
    }
    if xs.is_empty() {
        // identically-constant data: every scale is already flat
        return Ok(HolderFit {
            beta: f64::INFINITY,
            fit_residual: 0.0,
            dropped_zeros: true,
            scales_used: 0,
        });
    }
    if xs.len() < 3 {
        return Err(Error::InsufficientScales {
            detail: format!("need 3 usable scales, have {}", xs.len()),
        });
    }
    let n = xs.len() as f64;
    let xbar = xs.iter().sum::<f64>() / n;
    let ybar = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (x, y) in xs.iter().zip(&ys) {
        sxx += (x - xbar) * (x - xbar);
        sxy += (x - xbar) * (y - ybar);
    }
    let beta = sxy / sxx;
    let mut rss = 0.0;
    for (x, y) in xs.iter().zip(&ys) {
        let e = y - (ybar + beta * (x - xbar));
        rss += e * e;
    }
    Ok(HolderFit {
        beta,
        fit_residual: (rss / n).sqrt(),
        dropped_zeros: dropped,
        scales_used: xs.len(),
    })
}

/// Exponent implied by a fixed per-scale oscillation decay: the beta
/// solving (gamma^ratio)^beta = 1 - lambda_star/4, i.e. the rate at which
/// an osc ladder shrinking by that factor per rung reads off as Hölder
/// continuity in the cylinder depth.
pub fn holder_closed_form(lambda_star: f64, gamma: f64, exponent_ratio: f64) -> Result<f64> {
    if !(lambda_star > 0.0 && lambda_star < 1.0) {
        return Err(Error::invalid("lambda_star", lambda_star, "must lie in (0, 1)"));
    }
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::invalid("gamma", gamma, "must lie in (0, 1)"));
    }
    if !(exponent_ratio > 0.0 && exponent_ratio.is_finite()) {
        return Err(Error::invalid("exponent_ratio", exponent_ratio, "must be positive"));
    }
    Ok((1.0 - 0.25 * lambda_star).ln() / (exponent_ratio * gamma.ln()))
}

/// The exponent pair of the space-time interpolation inequality, with the
/// two Hölder pairings it is conjugate to.
#[derive(Clone, Copy, Debug)]
pub struct ExponentReport {
    pub p: f64,
    pub beta: f64,
    pub p1: f64,
    /// 2n/(n - sigma); infinite at sigma = n, negative beyond. Only its
    /// reciprocal enters the conjugacy identity, so both are harmless.
    pub p2: f64,
    pub p3: f64,
    pub p4: f64,
}

impl ExponentReport {
    /// beta/p1 + (1-beta)/p2 - 1/p; zero when the spatial pairing is
    /// conjugate.
    pub fn space_conjugacy_defect(&self) -> f64 {
        self.beta / self.p1 + (1.0 - self.beta) / self.p2 - 1.0 / self.p
    }

    /// beta/p3 + (1-beta)/p4 - 1/p for the temporal pairing.
    pub fn time_conjugacy_defect(&self) -> f64 {
        self.beta / self.p3 + (1.0 - self.beta) / self.p4 - 1.0 / self.p
    }
}

/// p = 2(alpha n + sigma)/(alpha n + (1-alpha) sigma) and
/// beta = sigma/(alpha n + sigma). Always p > 2: the gain over flat L^2
/// interpolation is what drives the truncation recurrence.
pub fn interpolation_exponent(n: u32, alpha: FracOrder, sigma: f64) -> Result<ExponentReport> {
    if n == 0 {
        return Err(Error::invalid("n", 0.0, "dimension must be at least 1"));
    }
    if !(sigma > 0.0 && sigma < 2.0) {
        return Err(Error::invalid("sigma", sigma, "order must lie in (0, 2)"));
    }
    let al = alpha.get();
    let nf = n as f64;
    let an = al * nf;
    Ok(ExponentReport {
        p: 2.0 * (an + sigma) / (an + (1.0 - al) * sigma),
        beta: sigma / (an + sigma),
        p1: 2.0,
        p2: 2.0 * nf / (nf - sigma),
        p3: 2.0 / (1.0 - al),
        p4: 2.0,
    })
}

/// Sup and per-lag maxima of scaled time differences of the switched
/// trajectory eta*w.
#[derive(Clone, Debug)]
pub struct QuotientReport {
    /// Largest |delta_H (eta w)| / (H eps)^beta at the requested lag H.
    pub sup_quotient: f64,
    /// Maximum of the per-lag sups over all lags from 2 to h_steps.
    pub seminorm: f64,
    pub beta_target: f64,
    pub lags_used: usize,
}

/// Discrete Hölder seminorm in time of eta*w, where eta is the forward
/// smoothstep switch. With beta_target = 0 this is the plain modulus of
/// continuity. Lags below two steps are not resolvable and are skipped.
pub fn difference_quotient_scan(
    traj: &Trajectory,
    h_steps: usize,
    beta_target: f64,
) -> Result<QuotientReport> {
    if !(beta_target >= 0.0 && beta_target.is_finite()) {
        return Err(Error::invalid("beta_target", beta_target, "must be nonnegative"));
    }
    let prob = traj.problem();
    let tg = &prob.time;
    if h_steps < 2 || h_steps >= tg.k() {
        return Err(Error::invalid(
            "h_steps",
            h_steps as f64,
            "lag must span at least 2 steps and fit inside the window",
        ));
    }
    let eta = BarrierFamily::eta();
    let mut switched = Vec::with_capacity(tg.k() + 1);
    for j in 0..=tg.k() {
        let e = barrier_eval(&eta, tg.node(j), 0.0)?;
        switched.push(traj.field(j).iter().map(|w| e * w).collect::<Vec<f64>>());
    }
    let eps = tg.eps();
    let nx = prob.space.nx();
    let mut seminorm = 0.0f64;
    let mut sup_quotient = 0.0f64;
    let mut lags = 0usize;
    for lag in 2..=h_steps {
        let scale = (lag as f64 * eps).powf(beta_target);
        let mut worst = 0.0f64;
        for j in 0..=tg.k() - lag {
            let (lo, hi) = (&switched[j], &switched[j + lag]);
            for m in 0..nx {
                worst = worst.max((hi[m] - lo[m]).abs());
            }
        }
        let s = worst / scale;
        seminorm = seminorm.max(s);
        if lag == h_steps {
            sup_quotient = s;
        }
        lags += 1;
    }
    Ok(QuotientReport {
        sup_quotient,
        seminorm,
        beta_target,
        lags_used: lags,
    })
}
