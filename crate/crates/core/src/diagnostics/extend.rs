//! Backward-in-time extension of a marching problem.
//!
//! A problem posed on [0, T] is re-posed on [-5, T]: the initial field is
//! kept, the kernel's time multiplier is frozen at its t = 0 value on the
//! past, and the forcing on [-5, 0] is exactly minus the operator applied
//! to the initial field. With that forcing the constant-in-time history
//! solves the scheme on the whole pre-phase, so solving the extended
//! problem and restricting to [0, T] reproduces the original run.

use super::unit_kernel;
use crate::error::Error;
use crate::fractime::TimeGrid;
use crate::march::{Forcing, Problem};
use crate::spaceop::{apply, assemble};
use crate::Result;

pub fn backward_extension_problem(problem: &Problem) -> Result<Problem> {
    problem.validate()?;
    if problem.time.a() != 0.0 {
        return Err(Error::invalid(
            "time.a",
            problem.time.a(),
            "the backward extension is built for problems starting at t = 0",
        ));
    }
    let eps = problem.time.eps();
    let steps = 5.0 / eps;
    let rounded = steps.round();
    if rounded < 1.0 || (steps - rounded).abs() > 1e-9 * steps {
        return Err(Error::invalid(
            "time.k",
            problem.time.k() as f64,
            "the step must divide the 5-unit backward window so nodes align",
        ));
    }
    let m0 = rounded as usize;

    let weights = assemble(&unit_kernel(&problem.kernel), &problem.space, 0.0)?;
    let s0 = problem.kernel.profile_value(0.0);
    let pre: Vec<f64> = apply(&weights, &problem.initial)?
        .iter()
        .map(|v| -s0 * v)
        .collect();
    if let Some(&bad) = pre.iter().find(|v| !v.is_finite()) {
        return Err(Error::invalid(
            "initial",
            bad,
            "operator application on the initial field must be bounded",
        ));
    }
    let pre_sup = pre.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));

    let orig = problem.forcing.clone();
    let sup = orig.sup_bound().max(pre_sup);
    let label = format!("backward extension of {}", orig.label());
    let h = problem.space.h();
    let nx = problem.space.nx();
    let switch = 0.5 * eps;
    let forcing = Forcing::from_fn(label, sup, move |t, x| {
        if t > switch {
            orig.sample(t, x)
        } else {
            let m = ((x / h).round() as i64).rem_euclid(nx as i64) as usize;
            pre[m]
        }
    });

    Ok(Problem {
        time: TimeGrid::new(-5.0, problem.time.t_end(), problem.time.k() + m0)?,
        space: problem.space.clone(),
        alpha: problem.alpha,
        kernel: problem.kernel.clone(),
        initial: problem.initial.clone(),
        forcing,
        profile_clamp_below: Some(0.0),
    })
}
