//! Cutoff functions used by the regularity diagnostics.
//!
//! Every member of the family is built from positive parts that vanish on
//! a core cylinder around the space-time origin and grow with a power law
//! outside it. Time arguments are diagnostic coordinates: the window of
//! interest ends at t = 0, and the growth cutoffs look backward from
//! there. Only `Eta` faces forward; it is the smooth switch that turns
//! diagnostics on once a positive amount of time has elapsed.

use crate::error::Error;
use crate::Result;

/// Which cutoff to evaluate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BarrierKind {
    /// (|x|^(sigma/2) - 1)_+ + (|t|^(alpha/2) - 1)_+, zero on [-1,0] x B_1.
    Psi,
    /// Psi raised by a constant level.
    PsiL { level: f64 },
    /// Psi with both exponents quartered instead of halved; lies below Psi.
    PsiBar,
    /// Quarter-exponent growth engaging only beyond |x| = lambda^(-4/sigma)
    /// and |t| = lambda^(-4/alpha), so it is identically zero on a cylinder
    /// that widens as lambda shrinks.
    PsiLambda { lambda: f64 },
    /// PsiLambda with both growth exponents replaced by tau.
    PsiTauLambda { tau: f64, lambda: f64 },
    /// Rung i of the comparison ladder:
    /// 2 + PsiLambda(lambda^3) + lambda^i (F1 + F2).
    Phi { i: usize, lambda: f64 },
    /// Spatial well: clamp(|x|^2 - 9) to [-1, 0]; -1 on B_2, 0 outside B_3.
    F1,
    /// Temporal well: clamp(t^2 - 16) to [-1, 0]; -1 on [-3,3], 0 outside
    /// [-4,4].
    F2,
    /// Forward-time switch: 0 for t < 1/2, 1 for t > 1, cubic smoothstep
    /// between.
    Eta,
}

/// A cutoff together with the exponents of the underlying equation.
/// `sigma` and `alpha` shape the growth rates; the well and switch kinds
/// (`F1`, `F2`, `Eta`) ignore them.
#[derive(Clone, Copy, Debug)]
pub struct BarrierFamily {
    pub kind: BarrierKind,
    pub sigma: f64,
    pub alpha: f64,
}

impl BarrierFamily {
    pub fn psi(sigma: f64, alpha: f64) -> Self {
        Self { kind: BarrierKind::Psi, sigma, alpha }
    }

    pub fn psi_l(level: f64, sigma: f64, alpha: f64) -> Self {
        Self { kind: BarrierKind::PsiL { level }, sigma, alpha }
    }

    pub fn psi_bar(sigma: f64, alpha: f64) -> Self {
        Self { kind: BarrierKind::PsiBar, sigma, alpha }
    }

    pub fn psi_lambda(lambda: f64, sigma: f64, alpha: f64) -> Self {
        Self { kind: BarrierKind::PsiLambda { lambda }, sigma, alpha }
    }

    pub fn psi_tau_lambda(tau: f64, lambda: f64, sigma: f64, alpha: f64) -> Self {
        Self { kind: BarrierKind::PsiTauLambda { tau, lambda }, sigma, alpha }
    }

    pub fn phi(i: usize, lambda: f64, sigma: f64, alpha: f64) -> Self {
        Self { kind: BarrierKind::Phi { i, lambda }, sigma, alpha }
    }

    pub fn f1() -> Self {
        Self { kind: BarrierKind::F1, sigma: 1.0, alpha: 0.5 }
    }

    pub fn f2() -> Self {
        Self { kind: BarrierKind::F2, sigma: 1.0, alpha: 0.5 }
    }

    pub fn eta() -> Self {
        Self { kind: BarrierKind::Eta, sigma: 1.0, alpha: 0.5 }
    }

    /// True for the kinds that are only defined backward from t = 0.
    pub fn backward_only(&self) -> bool {
        !matches!(self.kind, BarrierKind::F1 | BarrierKind::F2 | BarrierKind::Eta)
    }

    pub fn validate(&self) -> Result<()> {
        match self.kind {
            BarrierKind::F1 | BarrierKind::F2 | BarrierKind::Eta => return Ok(()),
            _ => {}
        }
        if !(self.sigma > 0.0 && self.sigma < 2.0) {
            return Err(Error::invalid("sigma", self.sigma, "order must lie in (0, 2)"));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::invalid("alpha", self.alpha, "order must lie in (0, 1)"));
        }
        match self.kind {
            BarrierKind::PsiL { level } => {
                if !level.is_finite() {
                    return Err(Error::invalid("level", level, "level must be finite"));
                }
            }
            BarrierKind::PsiLambda { lambda } | BarrierKind::PsiTauLambda { lambda, .. } => {
                check_lambda(lambda)?;
            }
            BarrierKind::Phi { i, lambda } => {
                check_lambda(lambda)?;
                if i > 4 {
                    return Err(Error::invalid(
                        "i",
                        i as f64,
                        "the comparison ladder has rungs 0 through 4",
                    ));
                }
            }
            _ => {}
        }
        if let BarrierKind::PsiTauLambda { tau, .. } = self.kind {
            if !(tau > 0.0 && tau.is_finite()) {
                return Err(Error::invalid("tau", tau, "growth exponent must be positive"));
            }
        }
        Ok(())
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    // the threshold shift lambda^(-4/s) must exceed the unit core, and the
    // ladder uses lambda^3 in the same role; both need lambda < 1/3
    if !(lambda > 0.0 && lambda < 1.0 / 3.0) {
        return Err(Error::invalid("lambda", lambda, "must lie in (0, 1/3)"));
    }
    Ok(())
}

/// Pointwise evaluation of a cutoff at diagnostic coordinates (t, x).
pub fn barrier_eval(family: &BarrierFamily, t: f64, x: f64) -> Result<f64> {
    family.validate()?;
    if !t.is_finite() || !x.is_finite() {
        let bad = if t.is_finite() { x } else { t };
        return Err(Error::invalid("point", bad, "evaluation point must be finite"));
    }
    if family.backward_only() && t > 0.0 {
        return Err(Error::invalid(
            "t",
            t,
            "growth cutoffs are only defined backward from t = 0",
        ));
    }
    let (sg, al) = (family.sigma, family.alpha);
    Ok(match family.kind {
        BarrierKind::Psi => core(t, x, 0.5 * sg, 0.5 * al),
        BarrierKind::PsiL { level } => level + core(t, x, 0.5 * sg, 0.5 * al),
        BarrierKind::PsiBar => core(t, x, 0.25 * sg, 0.25 * al),
        BarrierKind::PsiLambda { lambda } => shifted(t, x, sg, al, lambda, 0.25 * sg, 0.25 * al),
        BarrierKind::PsiTauLambda { tau, lambda } => shifted(t, x, sg, al, lambda, tau, tau),
        BarrierKind::Phi { i, lambda } => {
            let li = lambda.powi(i as i32);
            2.0 + shifted(t, x, sg, al, lambda.powi(3), 0.25 * sg, 0.25 * al)
                + li * (space_well(x) + time_well(t))
        }
        BarrierKind::F1 => space_well(x),
        BarrierKind::F2 => time_well(t),
        BarrierKind::Eta => smoothstep(t),
    })
}

fn pp(v: f64) -> f64 {
    v.max(0.0)
}

fn core(t: f64, x: f64, ex: f64, et: f64) -> f64 {
    pp(x.abs().powf(ex) - 1.0) + pp(t.abs().powf(et) - 1.0)
}

fn shifted(t: f64, x: f64, sigma: f64, alpha: f64, lambda: f64, ex: f64, et: f64) -> f64 {
    let x_gate = lambda.powf(-4.0 / sigma);
    let t_gate = lambda.powf(-4.0 / alpha);
    let mut v = 0.0;
    if x.abs() >= x_gate {
        v += pp((x.abs() - x_gate).powf(ex) - 1.0);
    }
    if t.abs() >= t_gate {
        v += pp((t.abs() - t_gate).powf(et) - 1.0);
    }
    v
}

fn space_well(x: f64) -> f64 {
    (x * x - 9.0).clamp(-1.0, 0.0)
}

fn time_well(t: f64) -> f64 {
    (t * t - 16.0).clamp(-1.0, 0.0)
}

fn smoothstep(t: f64) -> f64 {
    let s = (2.0 * (t - 0.5)).clamp(0.0, 1.0);
    s * s * (3.0 - 2.0 * s)
}
