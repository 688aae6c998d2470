//! Solver and diagnostics for a diffusion equation that is nonlocal in both
//! time and space: a memory derivative of fractional order `alpha` in (0,1)
//! balanced against a symmetric jump operator of order `sigma` in (0,2) on a
//! periodic one-dimensional domain.
//!
//! The crate is organised by role:
//!
//! * [`fractime`]: the discrete memory derivative, its weight/tail machinery,
//!   singular quadrature, and the time-energy inequalities used by tests.
//! * [`spaceop`]: jump kernels with ellipticity certificates, cell-integrated
//!   operator assembly, and the associated bilinear form.
//! * [`march`]: the implicit time stepper, trajectory container, and the
//!   independent per-step residual check.
//! * [`diagnostics`]: barrier families, level-set energies, oscillation scans
//!   and Holder fits, the weak-form residual, and related regularity probes.
//! * [`special`]: Mittag-Leffler evaluation and the eigenmode reference curve.
//!
//! All floating point work is `f64`. Every routine is deterministic: identical
//! inputs produce bitwise-identical outputs regardless of thread count (see
//! [`par`] for how reductions keep a fixed order).

pub mod diagnostics;
pub mod error;
pub mod fractime;
pub mod march;
pub mod par;
pub mod spaceop;
pub mod special;

pub use error::{Error, Result};
