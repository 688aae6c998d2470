//! Gamma and Mittag-Leffler evaluation for the reference curves.
//!
//! This is the one corner of the crate where the classical and rescaled
//! derivative conventions meet: the solver's memory derivative carries a
//! Gamma(1-alpha) rescaling, so relaxation against an operator eigenvalue mu
//! follows E_alpha(-(mu / Gamma(1-alpha)) (t-a)^alpha) rather than the bare
//! Mittag-Leffler curve. [`eigenmode_reference`] performs that conversion;
//! nothing else in the crate touches gamma.

use crate::error::{Error, Result};
use crate::fractime::FracOrder;
use crate::par::Kahan;

/// Lanczos approximation, g = 7, 9 terms. Coefficients are the classic
/// double-precision set (see the GSL or the Numerical Recipes derivation);
/// relative error is a few ulps times 1e-15 over the right half plane.
const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEF: [f64; 9] = [
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
];

/// Gamma(x) for real x off the nonpositive integers. Arguments below 1/2
/// go through the reflection formula.
pub fn gamma(x: f64) -> f64 {
    if x < 0.5 {
        // Gamma(x) Gamma(1-x) = pi / sin(pi x)
        std::f64::consts::PI / ((std::f64::consts::PI * x).sin() * gamma(1.0 - x))
    } else {
        let x = x - 1.0;
        let mut acc = LANCZOS_COEF[0];
        for (i, c) in LANCZOS_COEF.iter().enumerate().skip(1) {
            acc += c / (x + i as f64);
        }
        let t = x + LANCZOS_G + 0.5;
        (2.0 * std::f64::consts::PI).sqrt() * t.powf(x + 0.5) * (-t).exp() * acc
    }
}

/// A certified series evaluation: the value together with how many terms
/// were summed and an upper bound on the absolute error actually incurred.
#[derive(Clone, Copy, Debug)]
pub struct MlResult {
    pub value: f64,
    pub terms_used: usize,
    pub error_bound: f64,
}

/// Relative accuracy assumed per summed term (gamma evaluation plus the
/// power and the division). Feeds the rounding part of the error bound.
const TERM_REL_ERR: f64 = 5e-13;

/// Largest |z| accepted by the power series. Beyond this the terms grow
/// past what cancellation can recover in doubles, and an asymptotic
/// expansion would be needed instead; we refuse rather than extrapolate.
const ML_SERIES_LIMIT: f64 = 30.0;

/// Mittag-Leffler function E_alpha(z) for z <= 0, by the defining series
/// sum_m z^m / Gamma(alpha m + 1) with compensated accumulation.
///
/// The reported `error_bound` adds the first omitted term (the series is
/// alternating with eventually decreasing terms, so that term brackets the
/// truncation error) to a rounding allowance of [`TERM_REL_ERR`] per unit
/// of summed term magnitude. Arguments with |z| > 30 return `OutOfRegime`;
/// arguments where the bound cannot reach 1e-10 return
/// `PrecisionExhausted` rather than a value with silent error.
pub fn mittag_leffler(alpha: FracOrder, z: f64) -> Result<MlResult> {
    if !(z <= 0.0) {
        return Err(Error::invalid("z", z, "series evaluation requires z <= 0"));
    }
    if z < -ML_SERIES_LIMIT {
        return Err(Error::OutOfRegime {
            value: z,
            detail: "power series cancellation exceeds double precision; \
                     not silently extrapolating",
        });
    }
    let al = alpha.get();
    let mut sum = Kahan::default();
    let mut magnitude = 0.0;
    let mut term = 1.0;
    let mut m = 0usize;
    let mut prev_abs = f64::INFINITY;
    let (terms_used, omitted) = loop {
        sum.add(term);
        magnitude += term.abs();
        m += 1;
        // once the summed magnitude alone pushes the rounding allowance past
        // the certification threshold there is no point continuing (and the
        // raw powers would eventually overflow)
        if magnitude > 1e3 {
            break (m, f64::INFINITY);
        }
        let next = z.powi(m as i32) / gamma(al * m as f64 + 1.0);
        if !next.is_finite() {
            break (m, f64::INFINITY);
        }
        // stop once terms have started shrinking and the next one is below
        // the rounding floor of what has been summed
        let shrinking = next.abs() < prev_abs;
        if shrinking && next.abs() <= 1e-16 * (1.0 + magnitude) {
            break (m, next.abs());
        }
        if m > 400 {
            break (m, next.abs());
        }
        prev_abs = term.abs();
        term = next;
    };
    let error_bound = omitted + TERM_REL_ERR * magnitude;
    // NaN-proof gate: anything not certifiably below threshold is refused
    if !(error_bound <= 1e-10) {
        return Err(Error::PrecisionExhausted {
            value: z,
            bound: error_bound,
        });
    }
    Ok(MlResult {
        value: sum.value(),
        terms_used,
        error_bound,
    })
}

/// Exact relaxation curve of an operator eigenmode with eigenvalue mu >= 0:
/// u(t) = E_alpha( -(mu / Gamma(1-alpha)) (t-a)^alpha ), evaluated at the
/// given times. The Gamma(1-alpha) divisor converts the solver's rescaled
/// derivative to the classical one the Mittag-Leffler curve solves.
/// Degenerate cases pin the curve: mu = 0 gives identically 1, and t = a
/// gives 1.
pub fn eigenmode_reference(
    alpha: FracOrder,
    mu: f64,
    a: f64,
    times: &[f64],
) -> Result<Vec<f64>> {
    if !(mu >= 0.0) {
        return Err(Error::invalid("mu", mu, "eigenvalue must be nonnegative"));
    }
    let rate = mu / gamma(1.0 - alpha.get());
    let mut out = Vec::with_capacity(times.len());
    for &t in times {
        if !(t >= a) {
            return Err(Error::invalid("t", t, "reference times must satisfy t >= a"));
        }
        if mu == 0.0 || t == a {
            out.push(1.0);
            continue;
        }
        let z = -rate * (t - a).powf(alpha.get());
        out.push(mittag_leffler(alpha, z)?.value);
    }
    Ok(out)
}
