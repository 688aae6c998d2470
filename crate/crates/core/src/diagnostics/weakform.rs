//! Direct evaluation of the integral identity that defines solutions.
//!
//! All five terms are computed by quadrature on the piecewise-constant
//! extension of the trajectory: the boundary-weight term, the triangle
//! interaction term, the initial-coupling term, the transposed-derivative
//! term, and the spatial energy pairing. The absolute defect against the
//! forcing side decreases under simultaneous refinement of both grids;
//! nothing here assumes the trajectory actually solves the scheme.

use super::unit_kernel;
use crate::error::Error;
use crate::fractime::{caputo_quadrature, singular_cell_mass, singular_pair_mass};
use crate::march::Trajectory;
use crate::par::{self, Kahan};
use crate::spaceop::{assemble, bilinear, SpaceGrid};
use crate::Result;
use std::sync::Arc;

/// Separable test function phi(t, x) = time(t) * bump(x), where bump is
/// the standard smooth compactly supported profile
/// exp(1 - 1/(1 - s^2)) on |s| < 1, s = (periodic distance to the
/// center)/radius. The time factor should be C^1 on the window.
#[derive(Clone)]
pub struct TestFunction {
    time: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    center: f64,
    radius: f64,
}

impl TestFunction {
    pub fn new<F>(time: F, center: f64, radius: f64) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        TestFunction {
            time: Arc::new(time),
            center,
            radius,
        }
    }

    pub fn time_value(&self, t: f64) -> f64 {
        (self.time)(t)
    }

    pub fn space_value(&self, grid: &SpaceGrid, x: f64) -> f64 {
        let s = grid.min_image(x - self.center) / self.radius;
        if s.abs() < 1.0 {
            (1.0 - 1.0 / (1.0 - s * s)).exp()
        } else {
            0.0
        }
    }
}

/// |LHS - RHS| of the five-term weak identity for the trajectory against
/// one test function. `quad_panels` controls the singular quadrature of
/// the transposed time derivative.
pub fn weak_residual(traj: &Trajectory, phi: &TestFunction, quad_panels: usize) -> Result<f64> {
    let prob = traj.problem();
    let tg = &prob.time;
    let sg = &prob.space;
    let (k, nx) = (tg.k(), sg.nx());
    let (eps, h) = (tg.eps(), sg.h());
    let al = prob.alpha.get();
    let a = tg.a();
    if !(phi.radius > 0.0 && phi.radius < 0.5 * sg.length()) {
        return Err(Error::invalid(
            "radius",
            phi.radius,
            "support must be nonempty and fit strictly inside the half-circle",
        ));
    }
    if quad_panels < 2 {
        return Err(Error::invalid("quad_panels", quad_panels as f64, "need at least 2"));
    }

    let tv: Vec<f64> = (0..=k).map(|j| phi.time_value(tg.node(j))).collect();
    let sv: Vec<f64> = (0..nx).map(|m| phi.space_value(sg, sg.node(m))).collect();
    if let Some(&bad) = tv.iter().chain(&sv).find(|v| !v.is_finite()) {
        return Err(Error::invalid("phi", bad, "test function must be finite on the grid"));
    }
    let cell_lo: Vec<f64> = (1..=k).map(|j| singular_cell_mass(al, eps, j)).collect();
    let pair: Vec<f64> = (1..k).map(|d| singular_pair_mass(al, eps, d)).collect();

    // boundary weights: cell j carries the lower mass of cell j and the
    // upper mass, which is the lower mass of the reflected cell k+1-j
    let t1 = h * par::det_sum_over(nx, |m| {
        let mut acc = Kahan::default();
        for j in 1..=k {
            acc.add(
                traj.field(j)[m] * tv[j] * sv[m] * (cell_lo[j - 1] + cell_lo[k - j]),
            );
        }
        acc.value()
    });

    // triangle interaction: ordered cell pairs i < j once each
    let t2 = al
        * h
        * par::det_sum_over(nx, |m| {
            if sv[m] == 0.0 {
                return 0.0;
            }
            let w = traj.time_slice(m);
            let mut acc = Kahan::default();
            for j in 2..=k {
                for i in 1..j {
                    acc.add((w[j] - w[i]) * (tv[j] - tv[i]) * pair[j - i - 1]);
                }
            }
            sv[m] * acc.value()
        });

    let t3 = -h * par::det_sum_over(nx, |m| {
        let w0 = traj.field(0)[m];
        let mut acc = Kahan::default();
        for j in 1..=k {
            acc.add((tv[j] * sv[m] * w0 + tv[0] * sv[m] * traj.field(j)[m]) * cell_lo[j - 1]);
        }
        acc.value()
    });

    // transposed derivative: the same fractional derivative applied to the
    // test function, integrated against w
    let dphi: Vec<f64> = (1..=k)
        .map(|j| caputo_quadrature(|t| phi.time_value(t), prob.alpha, a, tg.node(j), quad_panels))
        .collect::<Result<_>>()?;
    let t4 = -eps
        * par::det_sum_over(k, |jr| {
            let w = traj.field(jr + 1);
            let mut acc = Kahan::default();
            for m in 0..nx {
                acc.add(w[m] * sv[m]);
            }
            h * acc.value() * dphi[jr]
        });

    let shape = assemble(&unit_kernel(&prob.kernel), sg, 0.0)?;
    let mut t5_acc = Kahan::default();
    for j in 1..=k {
        let s = prob.profile_at(tg.node(j));
        t5_acc.add(s * tv[j] * bilinear(&shape, h, traj.field(j), &sv)?);
    }
    let t5 = eps * t5_acc.value();

    let rhs = eps
        * par::det_sum_over(k, |jr| {
            let j = jr + 1;
            let t = tg.node(j);
            let mut acc = Kahan::default();
            for m in 0..nx {
                acc.add(prob.forcing.sample(t, sg.node(m)) * tv[j] * sv[m]);
            }
            h * acc.value()
        });

    Ok((t1 + t2 + t3 + t4 + t5 - rhs).abs())
}
