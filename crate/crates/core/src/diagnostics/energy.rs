//! Summed-by-parts energy bound, truncation energies, and level-set
//! measures.

use super::barriers::{barrier_eval, BarrierFamily};
use super::scan::interpolation_exponent;
use super::DiagnosticFrame;
use crate::error::Error;
use crate::fractime::{
    discrete_caputo, tail_sequence, FracOrder, HistoryExtension, TimeSeries, DEFAULT_TAIL_TOL,
};
use crate::march::Trajectory;
use crate::par::{self, Kahan};
use crate::Result;

/// Both sides of the energy bound for one time series: the weighted product
/// sum on the left and the four terms bounding it from below.
///
/// The bound drops the tail weights to their power-law floor, so `slack`
/// carries a genuinely positive margin for non-trivial series; it can dip
/// below zero only by accumulated rounding.
#[derive(Clone, Copy, Debug)]
pub struct EnergyDecomposition {
    /// alpha sum_j eps u_j d^alpha u_j over the whole window.
    pub lhs: f64,
    /// Double sum of squared increments against the interaction weights.
    pub gagliardo: f64,
    /// Squared increments from the initial value, floor-weighted by step.
    pub initial_increments: f64,
    /// Interior squares floor-weighted by distance to the far end of the
    /// window. The final node is excluded; its exact weight has no
    /// power-law floor.
    pub horizon_squares: f64,
    /// Coupling of the initial value to the full tail mass, the one signed
    /// term.
    pub initial_coupling: f64,
}

impl EnergyDecomposition {
    pub fn rhs(&self) -> f64 {
        self.gagliardo + self.initial_increments + self.horizon_squares + self.initial_coupling
    }

    pub fn slack(&self) -> f64 {
        self.lhs - self.rhs()
    }

    /// Magnitude reference for rounding tolerances.
    pub fn scale(&self) -> f64 {
        1.0 + self.lhs.abs()
            + self.gagliardo.abs()
            + self.initial_increments.abs()
            + self.horizon_squares.abs()
            + self.initial_coupling.abs()
    }
}

/// Evaluates the energy bound on a series with the constant history
/// extension. The slack must stay above -1e-10 times [`EnergyDecomposition::scale`].
pub fn energy_decompose_gap(u: &TimeSeries, alpha: FracOrder) -> Result<EnergyDecomposition> {
    if u.extension() != HistoryExtension::ConstantBeforeA {
        return Err(Error::invalid(
            "extension",
            0.0,
            "the energy bound is stated for the constant history extension",
        ));
    }
    let al = alpha.get();
    let k = u.grid().k();
    let eps = u.grid().eps();
    let v = u.values();
    let u0 = v[0];

    let mut lhs_acc = Kahan::default();
    for j in 1..=k {
        lhs_acc.add(v[j] * discrete_caputo(u, alpha, j)?);
    }
    let lhs = al * eps * lhs_acc.value();

    // alpha * (alpha eps^(1-alpha) / 2), the prefactor shared by the exact
    // identity terms; the floor-weighted terms absorb one alpha into the
    // tail bound alpha tau_m >= 2^-(1+alpha) m^-alpha
    let c2 = 0.5 * al * al * eps.powf(1.0 - al);
    let c1 = 0.5 * al * eps.powf(1.0 - al);
    let floor = 0.5f64.powf(1.0 + al);

    let pair: Vec<f64> = (1..=k).map(|d| (d as f64).powf(-(1.0 + al))).collect();
    let g = par::det_sum_over(k + 1, |j| {
        if j == 0 {
            return 0.0;
        }
        let mut acc = Kahan::default();
        for i in 0..j {
            let d = v[j] - v[i];
            acc.add(d * d * pair[j - i - 1]);
        }
        acc.value()
    });
    let gagliardo = c2 * g;

    let mut inc = Kahan::default();
    for j in 1..=k {
        let d = v[j] - u0;
        inc.add(d * d * floor * (j as f64).powf(-al));
    }
    let initial_increments = c1 * inc.value();

    let mut hor = Kahan::default();
    for j in 1..k {
        hor.add(v[j] * v[j] * floor * ((k - j) as f64).powf(-al));
    }
    let horizon_squares = c1 * hor.value();

    let tails = tail_sequence(al, k, DEFAULT_TAIL_TOL);
    let mut tail_mass = Kahan::default();
    for &t in &tails[1..=k] {
        tail_mass.add(t);
    }
    let s_k = tails[0] - tails[k];
    let initial_coupling = -c2 * u0 * u0 * (s_k + tail_mass.value());

    Ok(EnergyDecomposition {
        lhs,
        gagliardo,
        initial_increments,
        horizon_squares,
        initial_coupling,
    })
}

/// A truncation ladder: levels, their energies, and the interpolation
/// exponent driving the recurrence.
#[derive(Clone, Debug)]
pub struct LevelEnergy {
    /// L_k = (1 - 2^-k)/2, increasing to 1/2.
    pub levels: Vec<f64>,
    /// U_k: cell-measure of the excess over the barrier raised by L_k,
    /// counting the excess, its square, and the indicator.
    pub values: Vec<f64>,
    /// p of the interpolation inequality in one space dimension; p/2 > 1
    /// is what makes the U_k recurrence contract.
    pub exponent: f64,
}

/// Energies of the trajectory above a rising ladder of barrier levels.
/// Cell measure is eps*h; time cell j carries the node value w_j, matching
/// the piecewise-constant extension.
pub fn truncation_energy(
    traj: &Trajectory,
    barrier: &BarrierFamily,
    frame: &DiagnosticFrame,
    k_max: usize,
) -> Result<LevelEnergy> {
    let prob = traj.problem();
    let tg = &prob.time;
    let sg = &prob.space;
    let (k, nx) = (tg.k(), sg.nx());
    let cell = tg.eps() * sg.h();

    let mut base = vec![0.0f64; k * nx];
    for j in 1..=k {
        let t = frame.map_t(tg.node(j));
        for m in 0..nx {
            base[(j - 1) * nx + m] = barrier_eval(barrier, t, frame.map_x(sg.node(m)))?;
        }
    }

    let mut levels = Vec::with_capacity(k_max + 1);
    let mut values = Vec::with_capacity(k_max + 1);
    for step in 0..=k_max {
        let level = 0.5 * (1.0 - 0.5f64.powi(step as i32));
        let total = par::det_sum_over(k, |jr| {
            let w = traj.field(jr + 1);
            let mut acc = Kahan::default();
            for m in 0..nx {
                let d = w[m] - base[jr * nx + m] - level;
                if d > 0.0 {
                    acc.add(d + d * d + 1.0);
                }
            }
            acc.value()
        });
        levels.push(level);
        values.push(cell * total);
    }

    let exponent = interpolation_exponent(1, prob.alpha, prob.kernel.sigma)?.p;
    Ok(LevelEnergy { levels, values, exponent })
}

/// Interval-times-ball region in diagnostic coordinates. The time interval
/// is taken half-open on the left, matching the cell convention; the ball
/// is open.
#[derive(Clone, Copy, Debug)]
pub struct Region {
    pub t_lo: f64,
    pub t_hi: f64,
    pub x_center: f64,
    pub x_radius: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Above,
    Below,
}

/// Cell-counting measure of the set where the trajectory exceeds (or
/// falls below) the cutoff, intersected with the region. Absolute units:
/// eps*h per cell.
pub fn level_set_measure(
    traj: &Trajectory,
    cutoff: &BarrierFamily,
    frame: &DiagnosticFrame,
    region: &Region,
    direction: Direction,
) -> Result<f64> {
    let prob = traj.problem();
    let tg = &prob.time;
    let sg = &prob.space;
    if !(region.t_lo.is_finite() && region.t_hi.is_finite() && region.t_lo < region.t_hi) {
        return Err(Error::invalid("t_lo", region.t_lo, "time interval must be nonempty"));
    }
    if !(region.x_radius > 0.0 && region.x_radius <= 0.5 * sg.length()) {
        return Err(Error::invalid(
            "x_radius",
            region.x_radius,
            "ball must be nonempty and fit in the half-circle",
        ));
    }
    let span = tg.t_end() - tg.a();
    let tol = 1e-9 * span;
    if region.t_lo < frame.map_t(tg.a()) - tol || region.t_hi > frame.map_t(tg.t_end()) + tol {
        return Err(Error::invalid(
            "t_hi",
            region.t_hi,
            "region exceeds the trajectory's time window",
        ));
    }

    let mut count = 0usize;
    for j in 1..=tg.k() {
        let t = frame.map_t(tg.node(j));
        if !(t > region.t_lo && t <= region.t_hi) {
            continue;
        }
        let w = traj.field(j);
        for m in 0..sg.nx() {
            let x = frame.map_x(sg.node(m));
            if frame.wrap(x - region.x_center).abs() >= region.x_radius {
                continue;
            }
            let cut = barrier_eval(cutoff, t, x)?;
            let inside = match direction {
                Direction::Above => w[m] > cut,
                Direction::Below => w[m] < cut,
            };
            if inside {
                count += 1;
            }
        }
    }
    Ok(count as f64 * tg.eps() * sg.h())
}
