//! Discrete memory derivatives on uniform time grids.
//!
//! The fractional derivative used throughout the crate is the rescaled form
//! `Gamma(1-alpha)` times the classical Caputo derivative. With that
//! normalisation the backward weights are the bare powers `m^-(1+alpha)`,
//! the constant in front of the discrete sum is `alpha eps^-alpha`, and no
//! gamma function appears anywhere in the scheme. Conversion to the
//! classical object happens in one place only: the Mittag-Leffler reference
//! curves in [`crate::special`].
//!
//! Two history conventions matter. `ConstantBeforeA` freezes the series at
//! its initial value on the infinite past, which makes the backward sum an
//! infinite series whose tail is a zeta-function remainder; `ZeroBeforeA`
//! means the derivative simply starts at `a` with no history term. The tail
//! coefficients are computed with a certified bracket, never approximated by
//! an unquantified truncation.

use crate::error::{Error, Result};
use crate::par::{self, Kahan};

/// Default absolute accuracy for zeta tails when an operation does not take
/// an explicit tolerance.
pub(crate) const DEFAULT_TAIL_TOL: f64 = 1e-12;

/// Fractional order, strictly inside (0, 1).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FracOrder(f64);

impl FracOrder {
    pub fn new(alpha: f64) -> Result<Self> {
        if alpha > 0.0 && alpha < 1.0 {
            Ok(FracOrder(alpha))
        } else {
            Err(Error::invalid(
                "alpha",
                alpha,
                "fractional order must lie strictly in (0, 1)",
            ))
        }
    }

    #[inline]
    pub fn get(self) -> f64 {
        self.0
    }
}

/// Uniform grid on [a, T] with k steps of width eps = (T - a)/k.
/// Node j sits at a + j*eps, so node(k) lands on T up to one rounding.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeGrid {
    a: f64,
    t_end: f64,
    k: usize,
}

impl TimeGrid {
    pub fn new(a: f64, t_end: f64, k: usize) -> Result<Self> {
        if !a.is_finite() || !t_end.is_finite() {
            return Err(Error::invalid("a", a, "grid endpoints must be finite"));
        }
        if !(t_end > a) {
            return Err(Error::invalid(
                "t_end",
                t_end,
                "final time must exceed the initial point",
            ));
        }
        if k == 0 {
            return Err(Error::invalid("k", 0.0, "need at least one step"));
        }
        Ok(TimeGrid { a, t_end, k })
    }

    #[inline]
    pub fn a(&self) -> f64 {
        self.a
    }

    #[inline]
    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    #[inline]
    pub fn k(&self) -> usize {
        self.k
    }

    #[inline]
    pub fn eps(&self) -> f64 {
        (self.t_end - self.a) / self.k as f64
    }

    #[inline]
    pub fn node(&self, j: usize) -> f64 {
        self.a + j as f64 * self.eps()
    }
}

/// How a series continues outside its grid. `ConstantBeforeA` freezes the
/// initial value on the infinite past (the scheme's convention);
/// `ZeroBeforeA` means no history at all, so backward sums start at `a`;
/// `EvenReflectAfterT` mirrors across the final time and is only felt by
/// the forward-looking energy in [`extension_energy_ratio`] -- for backward
/// sums it behaves like `ZeroBeforeA`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HistoryExtension {
    ConstantBeforeA,
    ZeroBeforeA,
    EvenReflectAfterT,
}

/// Node values on a [`TimeGrid`] plus the extension convention.
///
/// Off the nodes the series is read as the piecewise-constant extension
/// u(t) = u(node j) for node(j-1) < t <= node(j); that is the only
/// interpolation used when discrete and continuum quantities are compared.
/// [`TimeSeries::eval_linear`] exists for the quadrature verifiers, which
/// need a continuous representative of smooth sampled data.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeSeries {
    grid: TimeGrid,
    values: Vec<f64>,
    extension: HistoryExtension,
}

impl TimeSeries {
    pub fn new(grid: TimeGrid, values: Vec<f64>, extension: HistoryExtension) -> Result<Self> {
        if values.len() != grid.k() + 1 {
            return Err(Error::LengthMismatch {
                context: "time series values",
                expected: grid.k() + 1,
                actual: values.len(),
            });
        }
        if let Some(&bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::invalid("values", bad, "series values must be finite"));
        }
        Ok(TimeSeries {
            grid,
            values,
            extension,
        })
    }

    pub fn from_fn<F: Fn(f64) -> f64>(
        grid: TimeGrid,
        extension: HistoryExtension,
        f: F,
    ) -> Result<Self> {
        let values = (0..=grid.k()).map(|j| f(grid.node(j))).collect();
        TimeSeries::new(grid, values, extension)
    }

    #[inline]
    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    #[inline]
    pub fn extension(&self) -> HistoryExtension {
        self.extension
    }

    #[inline]
    pub fn value(&self, j: usize) -> f64 {
        self.values[j]
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Piecewise-constant extension: the value of the cell whose right node
    /// is the first node >= t. Left of `a` the extension convention decides;
    /// right of `T` the even reflection folds back when active.
    pub fn eval_pc(&self, t: f64) -> f64 {
        let grid = &self.grid;
        if t <= grid.a() {
            return match self.extension {
                HistoryExtension::ConstantBeforeA => self.values[0],
                HistoryExtension::ZeroBeforeA | HistoryExtension::EvenReflectAfterT => {
                    if t == grid.a() {
                        self.values[0]
                    } else {
                        0.0
                    }
                }
            };
        }
        if t > grid.t_end() {
            return match self.extension {
                HistoryExtension::EvenReflectAfterT => self.eval_pc(2.0 * grid.t_end() - t),
                _ => self.values[grid.k()],
            };
        }
        let j = ((t - grid.a()) / grid.eps()).ceil() as usize;
        self.values[j.clamp(1, grid.k())]
    }

    /// Linear interpolation between nodes, clamped to [a, T].
    pub fn eval_linear(&self, t: f64) -> f64 {
        let grid = &self.grid;
        let s = ((t - grid.a()) / grid.eps()).clamp(0.0, grid.k() as f64);
        let j = (s.floor() as usize).min(grid.k() - 1);
        let frac = s - j as f64;
        self.values[j] + frac * (self.values[j + 1] - self.values[j])
    }
}

/// zeta(1 + alpha) with absolute error at most `tol`.
///
/// Partial sum to M plus a midpoint-rule value of the integral remainder.
/// For the convex integrand x^-s each midpoint panel underestimates its
/// integral by at most f''/24, so the remainder is bracketed by
/// [I - B, I] with I = (M + 1/2)^(1-s)/(s-1) and
/// B = s(s+1)/24 * ((M+1/2)^(-s-2) + (M+1/2)^(-s-1)/(s+1)).
/// Taking I - B/2 certifies |error| <= B/2; M doubles until B/2 <= tol.
///
/// Memoized on (alpha, tol) bits: the derivative weight of every step and
/// every residual check wants this value, and the partial sum is six
/// figures of powf for small alpha. The cached value is what the formula
/// returns, so reads are order independent.
pub(crate) fn zeta_one_plus(alpha: f64, tol: f64) -> f64 {
    use std::collections::HashMap;
    use std::sync::{Mutex, OnceLock};
    static CACHE: OnceLock<Mutex<HashMap<(u64, u64), f64>>> = OnceLock::new();
    let key = (alpha.to_bits(), tol.to_bits());
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(&v) = cache.lock().unwrap().get(&key) {
        return v;
    }
    let v = zeta_one_plus_fresh(alpha, tol);
    cache.lock().unwrap().insert(key, v);
    v
}

fn zeta_one_plus_fresh(alpha: f64, tol: f64) -> f64 {
    let s = 1.0 + alpha;
    let mut m_cap: usize = 1 << 10;
    loop {
        let w = m_cap as f64 + 0.5;
        let integral = w.powf(1.0 - s) / (s - 1.0);
        let bracket = s * (s + 1.0) / 24.0 * (w.powf(-s - 2.0) + w.powf(-s - 1.0) / (s + 1.0));
        if bracket <= 2.0 * tol || m_cap >= 1 << 28 {
            let mut partial = Kahan::default();
            for m in 1..=m_cap {
                partial.add((m as f64).powf(-s));
            }
            return partial.value() + integral - 0.5 * bracket;
        }
        m_cap *= 2;
    }
}

/// Tail coefficients tau_j = zeta(1+alpha) - sum_{m<=j} m^-(1+alpha) for
/// j = 0..=k. tau_0 is the full zeta value. Each entry is formed as one
/// subtraction from a compensated partial sum, so the exact relation
/// S_j + tau_j = zeta(1+alpha) holds to rounding for every j.
pub(crate) fn tail_sequence(alpha: f64, k: usize, tol: f64) -> Vec<f64> {
    let zeta = zeta_one_plus(alpha, tol);
    let s = 1.0 + alpha;
    let mut out = Vec::with_capacity(k + 1);
    out.push(zeta);
    let mut partial = Kahan::default();
    for m in 1..=k {
        partial.add((m as f64).powf(-s));
        out.push(zeta - partial.value());
    }
    out
}

/// Backward weights of the discrete derivative at lag j.
#[derive(Clone, Debug)]
pub struct CaputoWeights {
    /// c_m = m^-(1+alpha) for m = 1..=j (index m-1).
    pub coeffs: Vec<f64>,
    /// tau_j, the mass of the infinite history; zero unless the extension
    /// is `ConstantBeforeA`.
    pub tail: f64,
}

/// Weights and tail such that
/// d^alpha u(a + eps j) = alpha eps^-alpha
///   [ (S_j + tau) u_j - sum_m c_m u_{j-m} - tau u_0 ]
/// with S_j the coefficient sum and tau active only for `ConstantBeforeA`.
/// The tail is accurate to `tail_tol` absolutely.
pub fn caputo_weights(
    alpha: FracOrder,
    j: usize,
    extension: HistoryExtension,
    tail_tol: f64,
) -> Result<CaputoWeights> {
    if j == 0 {
        return Err(Error::invalid("j", 0.0, "no past nodes at the initial time"));
    }
    if !(tail_tol > 0.0) {
        return Err(Error::invalid("tail_tol", tail_tol, "must be positive"));
    }
    let s = 1.0 + alpha.get();
    let coeffs: Vec<f64> = (1..=j).map(|m| (m as f64).powf(-s)).collect();
    let tail = match extension {
        HistoryExtension::ConstantBeforeA => {
            let zeta = zeta_one_plus(alpha.get(), 0.5 * tail_tol);
            let mut partial = Kahan::default();
            for c in &coeffs {
                partial.add(*c);
            }
            zeta - partial.value()
        }
        HistoryExtension::ZeroBeforeA | HistoryExtension::EvenReflectAfterT => 0.0,
    };
    Ok(CaputoWeights { coeffs, tail })
}

/// Discrete derivative at node j, assembled in the cancellation form
/// alpha eps^-alpha [ sum_m c_m (u_j - u_{j-m}) + tau (u_j - u_0) ],
/// which returns exactly zero on constant series.
pub fn discrete_caputo(u: &TimeSeries, alpha: FracOrder, j: usize) -> Result<f64> {
    let k = u.grid().k();
    if j == 0 || j > k {
        return Err(Error::invalid("j", j as f64, "node index must lie in 1..=k"));
    }
    let w = caputo_weights(alpha, j, u.extension(), DEFAULT_TAIL_TOL)?;
    let uj = u.value(j);
    let mut acc = Kahan::default();
    for (i, c) in w.coeffs.iter().enumerate() {
        acc.add(c * (uj - u.value(j - (i + 1))));
    }
    acc.add(w.tail * (uj - u.value(0)));
    let al = alpha.get();
    Ok(al * u.grid().eps().powf(-al) * acc.value())
}

/// Rescaled Caputo derivative of a continuous function by quadrature of the
/// regularized formula
/// d^alpha u(t) = (u(t) - u(a))/(t-a)^alpha
///              + alpha int_a^t (u(t) - u(s))/(t-s)^(1+alpha) ds.
///
/// The substitution t - s = z^q with q = 1/(1-alpha) flattens the endpoint
/// singularity (the transformed integrand is O(1) near s = t for Lipschitz
/// u), and composite midpoint never evaluates at s = t. `panels` is the
/// midpoint panel count.
pub fn caputo_quadrature<F>(u: F, alpha: FracOrder, a: f64, t: f64, panels: usize) -> Result<f64>
where
    F: Fn(f64) -> f64 + Sync,
{
    if !(t > a) {
        return Err(Error::invalid("t", t, "must exceed the initial point"));
    }
    if panels < 2 {
        return Err(Error::invalid("panels", panels as f64, "need at least 2 panels"));
    }
    Ok(caputo_quadrature_unchecked(&u, alpha.get(), a, t, panels))
}

fn caputo_quadrature_unchecked<F>(u: &F, al: f64, a: f64, t: f64, panels: usize) -> f64
where
    F: Fn(f64) -> f64 + Sync,
{
    let span = t - a;
    let ut = u(t);
    let boundary = (ut - u(a)) / span.powf(al);
    let q = (1.0 / (1.0 - al)).clamp(1.0, 64.0);
    let z_max = span.powf(1.0 / q);
    let dz = z_max / panels as f64;
    let mut acc = Kahan::default();
    for i in 0..panels {
        let z = (i as f64 + 0.5) * dz;
        let y = z.powf(q);
        // z^q can underflow for large q; the true contribution there is
        // u(t) - u(t) = 0, so the panel is dropped
        if y == 0.0 {
            continue;
        }
        let weight = q * z.powf(q - 1.0) * y.powf(-1.0 - al);
        if !weight.is_finite() {
            continue;
        }
        acc.add((ut - u(t - y)) * weight);
    }
    boundary + al * acc.value() * dz
}

/// Mass of the lower boundary weight over one grid cell:
/// int over ((j-1) eps, j eps) of y^-alpha dy, in closed form.
pub fn singular_cell_mass(alpha: f64, eps: f64, j: usize) -> f64 {
    let e = 1.0 - alpha;
    eps.powf(e) * ((j as f64).powf(e) - (j as f64 - 1.0).powf(e)) / e
}

/// Mass of the interaction kernel between two grid cells d apart:
/// the double integral of (t - s)^-(1+alpha) over cell_i x cell_j with
/// d = j - i >= 1, in closed form (a second difference of y^(1-alpha)).
pub fn singular_pair_mass(alpha: f64, eps: f64, d: usize) -> f64 {
    let e = 1.0 - alpha;
    let d = d as f64;
    eps.powf(e) * (2.0 * d.powf(e) - (d + 1.0).powf(e) - (d - 1.0).powf(e)) / (alpha * e)
}

/// Composite midpoint of `f` on [lo, hi]; rows are distributed but summed
/// in index order.
fn midpoint_sum<F>(f: F, lo: f64, hi: f64, n: usize) -> f64
where
    F: Fn(f64) -> f64 + Sync,
{
    let dx = (hi - lo) / n as f64;
    par::det_sum_over(n, |i| f(lo + (i as f64 + 0.5) * dx)) * dx
}

/// int_a^T phi(t) (t - a)^-alpha dt by midpoint after t = a + z^p,
/// p = 1/(1-alpha), which removes the endpoint singularity exactly.
fn singular_lower_integral<F>(phi: F, a: f64, t_end: f64, alpha: f64, panels: usize) -> f64
where
    F: Fn(f64) -> f64 + Sync,
{
    let p = (1.0 / (1.0 - alpha)).clamp(1.0, 64.0);
    let flat = p * (1.0 - alpha) - 1.0;
    let z_max = (t_end - a).powf(1.0 / p);
    midpoint_sum(|z| phi(a + z.powf(p)) * z.powf(flat), 0.0, z_max, panels) * p
}

/// The (T - t)^-alpha companion, evaluated by mirroring t to a + T - t so
/// that for symmetric inputs the two integrals agree to the last bit.
fn singular_upper_integral<F>(phi: F, a: f64, t_end: f64, alpha: f64, panels: usize) -> f64
where
    F: Fn(f64) -> f64 + Sync,
{
    singular_lower_integral(|t| phi(a + t_end - t), a, t_end, alpha, panels)
}

/// Defect of the integration by parts identity
///
/// int g d^a h + h d^a g  =  int g h [(T-t)^-a + (t-a)^-a]
///                         + a intint_{s<t} (g(t)-g(s))(h(t)-h(s))/(t-s)^(1+a)
///                         - int [g(t) h(a) + h(t) g(a)] (t-a)^-a
///
/// with all five integrals evaluated independently by composite quadrature
/// at resolution `panels`. The series are read through their linear
/// interpolants, so sampling and quadrature should be refined together.
pub fn ibp_defect(g: &TimeSeries, h: &TimeSeries, alpha: FracOrder, panels: usize) -> Result<f64> {
    if g.grid().a() != h.grid().a() || g.grid().t_end() != h.grid().t_end() {
        return Err(Error::invalid(
            "grid",
            h.grid().a(),
            "g and h must cover the same interval",
        ));
    }
    if panels < 2 {
        return Err(Error::invalid("panels", panels as f64, "need at least 2 panels"));
    }
    let al = alpha.get();
    let a = g.grid().a();
    let t_end = g.grid().t_end();
    let span = t_end - a;
    let dt = span / panels as f64;

    // left side: the two derivative integrals, inner Caputo quadrature at
    // the same resolution
    let lhs = par::det_sum_over(panels, |i| {
        let t = a + (i as f64 + 0.5) * dt;
        let dh = caputo_quadrature_unchecked(&|s| h.eval_linear(s), al, a, t, panels);
        let dg = caputo_quadrature_unchecked(&|s| g.eval_linear(s), al, a, t, panels);
        g.eval_linear(t) * dh + h.eval_linear(t) * dg
    }) * dt;

    // right side, three terms
    let product = |t: f64| g.eval_linear(t) * h.eval_linear(t);
    let boundary_weights = singular_lower_integral(product, a, t_end, al, panels)
        + singular_upper_integral(product, a, t_end, al, panels);

    let double = par::det_sum_over(panels, |i| {
        let t = a + (i as f64 + 0.5) * dt;
        let inner = ((panels as f64 * (t - a) / span).ceil() as usize).max(2);
        let ds = (t - a) / inner as f64;
        let gt = g.eval_linear(t);
        let ht = h.eval_linear(t);
        let mut row = Kahan::default();
        for l in 0..inner {
            let s = a + (l as f64 + 0.5) * ds;
            row.add((gt - g.eval_linear(s)) * (ht - h.eval_linear(s)) * (t - s).powf(-1.0 - al));
        }
        row.value() * ds
    }) * dt
        * al;

    let ga = g.value(0);
    let ha = h.value(0);
    let initial_coupling = singular_lower_integral(
        |t| g.eval_linear(t) * ha + h.eval_linear(t) * ga,
        a,
        t_end,
        al,
        panels,
    );

    Ok((lhs - (boundary_weights + double - initial_coupling)).abs())
}

/// Result of [`barrier_bound_check`]: the worst discrete derivative of the
/// barrier over the grid and the reference constant it must not undershoot.
#[derive(Clone, Copy, Debug)]
pub struct BarrierBound {
    /// min over nodes in (a, 0) of the discrete derivative of h.
    pub min_derivative: f64,
    /// Node time where the minimum is attained.
    pub min_node: f64,
    /// c depending only on (nu, alpha): the infinite-history derivative of
    /// h at t = -1, by flattened quadrature.
    pub reference: f64,
}

impl BarrierBound {
    /// The lemma's assertion: the discrete derivative never drops below -c.
    pub fn holds(&self) -> bool {
        self.min_derivative >= -self.reference
    }
}

/// Lower bound check for the barrier h(t) = max(|t|^nu - 1, 0), nu < alpha.
///
/// Evaluates the discrete derivative of h with its full history at every
/// grid node strictly between a and 0 and compares the minimum against
///
///   c = nu int_1^inf r^(nu-1) (r-1)^-alpha dr,
///
/// the magnitude of the full-line derivative at t = -1, where the discrete
/// derivative is most negative. The history is h's own values on the eps
/// lattice, not a restriction to the grid: cutting it at a would make the
/// minimum sag with the base point (the dropped mass is of order
/// |a|^(nu-alpha)), while with the full line the minimum depends on a only
/// through which nodes exist.
///
/// Samples within four time units are summed directly. Past the window
/// every sample sits on the |s|^nu - 1 branch, so the remainder splits into
/// a zeta tail and sum_{m>M} (m eps + |t|)^nu m^-(1+alpha). That sum decays
/// like m^(nu-alpha-1), far too slowly to take term by term, but the
/// summand decreases in m, so the integral from M + 1/2 matches it to
/// roughly g'(M)/24; substituting u = (y0/y)^(alpha-nu) makes the improper
/// integral a smooth one on [0, 1].
pub fn barrier_bound_check(nu: f64, alpha: FracOrder, grid: &TimeGrid) -> Result<BarrierBound> {
    let al = alpha.get();
    if !(nu > 0.0 && nu < al) {
        return Err(Error::invalid("nu", nu, "requires 0 < nu < alpha"));
    }
    if !(grid.a() < -1.0) {
        return Err(Error::invalid("a", grid.a(), "barrier grid must start left of -1"));
    }
    let eps = grid.eps();
    let s = 1.0 + al;
    let window = (4.0 / eps).ceil() as usize;
    let coeffs: Vec<f64> = (1..=window).map(|m| (m as f64).powf(-s)).collect();
    let tau = tail_sequence(al, window, DEFAULT_TAIL_TOL)[window];
    // Lattice samples a + i*eps for i in [-window, k], shifted so node j
    // lands at index j + window.
    let hv: Vec<f64> = (0..=grid.k() + window)
        .map(|i| {
            let t = grid.a() + (i as f64 - window as f64) * eps;
            (t.abs().powf(nu) - 1.0).max(0.0)
        })
        .collect();
    let quad = 1024;
    let p = 1.0 / (al - nu);
    let upow: Vec<f64> = (0..quad)
        .map(|i| ((i as f64 + 0.5) / quad as f64).powf(p))
        .collect();
    let y0 = (window as f64 + 0.5) * eps;
    let far_front = al * y0.powf(nu - al) / ((al - nu) * quad as f64);
    let scale = al * eps.powf(-al);
    let inside = (1..=grid.k())
        .take_while(|&j| grid.node(j) < 0.0)
        .count();
    if inside == 0 {
        return Err(Error::InsufficientScales {
            detail: format!("no grid nodes inside ({}, 0)", grid.a()),
        });
    }
    let derivs = par::map_indexed(inside, |i| {
        let j = i + 1;
        let ht = hv[j + window];
        let mut near = Kahan::default();
        for (m, c) in coeffs.iter().enumerate() {
            near.add((ht - hv[j + window - m - 1]) * c);
        }
        let q = -grid.node(j) / y0;
        let mut v = Kahan::default();
        for u in &upow {
            v.add((1.0 + q * u).powf(nu));
        }
        scale * (near.value() + (ht + 1.0) * tau) - far_front * v.value()
    });
    let mut min_derivative = f64::INFINITY;
    let mut min_node = f64::NAN;
    for (i, &d) in derivs.iter().enumerate() {
        if d < min_derivative {
            min_derivative = d;
            min_node = grid.node(i + 1);
        }
    }
    Ok(BarrierBound {
        min_derivative,
        min_node,
        reference: barrier_reference_constant(nu, al),
    })
}

/// nu int_1^inf r^(nu-1) (r-1)^-alpha dr, split at r = 2.
///
/// On [1, 2] the substitution r = 1 + z^p with p = 1/(1-alpha) absorbs the
/// (r-1)^-alpha singularity; on [2, inf) inverting r = 2/u and then
/// u = z^q with q = 1/(alpha-nu) absorbs the slowly decaying tail. Both
/// transformed integrands are smooth on [0, 1].
fn barrier_reference_constant(nu: f64, al: f64) -> f64 {
    let n = 1 << 16;
    let p = 1.0 / (1.0 - al);
    let near = p * midpoint_sum(|z| (1.0 + z.powf(p)).powf(nu - 1.0), 0.0, 1.0, n);
    let q = 1.0 / (al - nu);
    let far = q * 2f64.powf(nu) * midpoint_sum(|z| (2.0 - z.powf(q)).powf(-al), 0.0, 1.0, n);
    nu * (near + far)
}

/// Both sides of the even-reflection energy inequality, on the
/// piecewise-constant extension of `u` (zero before a, mirrored across T).
///
/// Left: the full-line Gagliardo energy of the extension. Right: 8 times
/// the one-sided (triangle) energy plus the (t-a)^-alpha endpoint term.
/// Every cell and cell-pair integral is exact, so the two sides differ by
/// the inequality's genuine slack, not by quadrature error. Returns
/// (left, right); left <= right for every series.
pub fn extension_energy_ratio(u: &TimeSeries, alpha: FracOrder) -> (f64, f64) {
    let al = alpha.get();
    let k = u.grid().k();
    let eps = u.grid().eps();

    // values on the 2k cells of the doubled window (a, 2T - a); the mirror
    // of cell k+m is cell k-m+1
    let mut v = Vec::with_capacity(2 * k);
    for j in 1..=k {
        v.push(u.value(j));
    }
    for m in 1..=k {
        v.push(u.value(k - m + 1));
    }

    let pair_energy = |vals: &[f64]| {
        par::det_sum_over(vals.len(), |jj| {
            let mut row = Kahan::default();
            for ii in 0..jj {
                let d = vals[jj] - vals[ii];
                row.add(d * d * singular_pair_mass(al, eps, jj - ii));
            }
            row.value()
        })
    };

    // zero outside (a, 2T - a): each cell sees the left gap through
    // (t - a)^-alpha and the right gap through its mirror image
    let n2 = 2 * k;
    let zero_coupling = par::det_sum_over(n2, |jj| {
        v[jj] * v[jj] * (singular_cell_mass(al, eps, jj + 1) + singular_cell_mass(al, eps, n2 - jj))
    });
    let left = 2.0 * al * pair_energy(&v) + 2.0 * zero_coupling;

    let one_sided = pair_energy(&v[..k]);
    let endpoint = par::det_sum_over(k, |jj| {
        v[jj] * v[jj] * singular_cell_mass(al, eps, jj + 1)
    });
    let right = 8.0 * (al * one_sided + endpoint);

    (left, right)
}
