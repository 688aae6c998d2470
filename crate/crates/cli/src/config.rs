//! The JSON run configuration.
//!
//! Unknown keys are rejected everywhere so a typo cannot silently fall
//! back to a default, and parse failures carry serde's line and column.
//! Semantic range checks are delegated to the core constructors, which
//! name the offending field in their error messages. The schema is
//! documented in `schema/runconfig.schema.json`.

use std::f64::consts::PI;
use std::fs;
use std::path::Path;

use fracdiff_core::diagnostics::{DEFAULT_GAMMA, DEFAULT_KAPPA0, DEFAULT_LAMBDA, DEFAULT_MU};
use fracdiff_core::fractime::{FracOrder, TimeGrid};
use fracdiff_core::march::{Forcing, Problem};
use fracdiff_core::spaceop::{KernelSpec, SpaceGrid, TimeProfile};
use serde::{Deserialize, Serialize};

use crate::outcome::{CmdError, CmdResult};

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem: ProblemConfig,
    #[serde(default)]
    pub diagnostics: DiagnosticsConfig,
    #[serde(default)]
    pub tolerances: Tolerances,
    /// Resolution ladder for `converge`, coarsest first.
    #[serde(default)]
    pub ladder: Vec<Rung>,
    /// Seed for the quasi-random series of the energy suite.
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub threads: Option<usize>,
    /// Output directory; `--out` wins when both are given.
    #[serde(default)]
    pub out_dir: Option<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub a: f64,
    pub t_end: f64,
    /// Time steps.
    pub k: usize,
    /// Spatial cells on the circle.
    pub nx: usize,
    pub domain_length: f64,
    pub alpha: f64,
    pub sigma: f64,
    /// Ellipticity ratio of the kernel band.
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    #[serde(default)]
    pub kernel: KernelChoice,
    #[serde(default = "default_trunc_radius")]
    pub trunc_radius: f64,
    #[serde(default = "default_profile")]
    pub profile: TimeProfile,
    pub initial: FieldSpec,
    #[serde(default)]
    pub forcing: ForcingSpec,
    #[serde(default)]
    pub clamp_below: Option<f64>,
}

fn default_lambda() -> f64 {
    4.0
}

fn default_trunc_radius() -> f64 {
    3.0
}

fn default_profile() -> TimeProfile {
    TimeProfile::None
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelChoice {
    #[default]
    Full,
    Truncated,
}

/// Named initial profiles, sampled at the cell nodes.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case", deny_unknown_fields)]
pub enum FieldSpec {
    Constant {
        value: f64,
    },
    /// amplitude * cos(2 pi mode x / L).
    Cosine {
        #[serde(default = "default_amplitude")]
        amplitude: f64,
        #[serde(default = "default_mode")]
        mode: u32,
    },
    /// Compactly supported smooth bump around `center`.
    Bump {
        center: f64,
        radius: f64,
        height: f64,
    },
}

fn default_amplitude() -> f64 {
    1.0
}

fn default_mode() -> u32 {
    1
}

#[derive(Clone, Copy, Debug, Default, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case", deny_unknown_fields)]
pub enum ForcingSpec {
    #[default]
    Zero,
    Constant {
        value: f64,
    },
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Rung {
    pub k: usize,
    pub nx: usize,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnosticsConfig {
    /// Cutoff ladder parameter for the growth barriers.
    #[serde(default = "d_lambda")]
    pub lambda: f64,
    /// Hypothesis density for the smallness comparison.
    #[serde(default = "d_mu")]
    pub mu: f64,
    /// Cylinder shrink factor per oscillation scale.
    #[serde(default = "d_gamma")]
    pub gamma: f64,
    /// Seed for the smallness threshold delta.
    #[serde(default = "d_kappa0")]
    pub kappa0: f64,
    /// Requested oscillation scales; the scan may stop earlier at the
    /// resolvable floor.
    #[serde(default = "d_depth")]
    pub depth: usize,
    /// Exponent for the difference-quotient scan; the closed-form value
    /// when absent.
    #[serde(default)]
    pub beta_target: Option<f64>,
    /// Lag of the quotient scan in steps; k/8 when absent.
    #[serde(default)]
    pub lag: Option<usize>,
}

fn d_lambda() -> f64 {
    DEFAULT_LAMBDA
}

fn d_mu() -> f64 {
    DEFAULT_MU
}

fn d_gamma() -> f64 {
    DEFAULT_GAMMA
}

fn d_kappa0() -> f64 {
    DEFAULT_KAPPA0
}

fn d_depth() -> usize {
    4
}

impl Default for DiagnosticsConfig {
    fn default() -> Self {
        DiagnosticsConfig {
            lambda: d_lambda(),
            mu: d_mu(),
            gamma: d_gamma(),
            kappa0: d_kappa0(),
            depth: d_depth(),
            beta_target: None,
            lag: None,
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    /// Per-step residual budget, scaled by 1 + the slice sup norm.
    #[serde(default = "t_residual")]
    pub residual: f64,
    /// Max-principle excursion budget, scaled by 1 + the data bound.
    #[serde(default = "t_excursion")]
    pub max_excursion: f64,
    /// Energy slack floor relative to the decomposition scale.
    #[serde(default = "t_energy")]
    pub energy_slack: f64,
    /// Sup-norm budget for the zero-data replay.
    #[serde(default = "t_uniqueness")]
    pub uniqueness: f64,
    /// Required weak-residual gain per halving.
    #[serde(default = "t_weak_ratio")]
    pub weak_ratio: f64,
    /// Relative amplitude error against the relaxation profile.
    #[serde(default = "t_oracle")]
    pub oracle_rel: f64,
}

fn t_residual() -> f64 {
    1e-10
}

fn t_excursion() -> f64 {
    1e-10
}

fn t_energy() -> f64 {
    1e-10
}

fn t_uniqueness() -> f64 {
    1e-12
}

fn t_weak_ratio() -> f64 {
    1.4
}

fn t_oracle() -> f64 {
    0.05
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            residual: t_residual(),
            max_excursion: t_excursion(),
            energy_slack: t_energy(),
            uniqueness: t_uniqueness(),
            weak_ratio: t_weak_ratio(),
            oracle_rel: t_oracle(),
        }
    }
}

pub fn load_config(path: &Path) -> CmdResult<RunConfig> {
    let text = fs::read_to_string(path)
        .map_err(|e| CmdError::config(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CmdError::config(format!("{}: {e}", path.display())))
}

impl ProblemConfig {
    pub fn build(&self) -> CmdResult<Problem> {
        let alpha = FracOrder::new(self.alpha)?;
        let time = TimeGrid::new(self.a, self.t_end, self.k)?;
        let space = SpaceGrid::new(self.domain_length, self.nx)?;
        let mut kernel = match self.kernel {
            KernelChoice::Full => KernelSpec::full(self.sigma, self.lambda, self.domain_length),
            KernelChoice::Truncated => {
                KernelSpec::truncated(self.sigma, self.lambda, self.domain_length)
            }
        };
        kernel.trunc_radius = self.trunc_radius;
        kernel.time_profile = self.profile;
        let initial = self.initial.sample(&space)?;
        Ok(Problem {
            time,
            space,
            alpha,
            kernel,
            initial,
            forcing: self.forcing.build()?,
            profile_clamp_below: self.clamp_below,
        })
    }

    pub fn with_resolution(&self, k: usize, nx: usize) -> ProblemConfig {
        let mut c = self.clone();
        c.k = k;
        c.nx = nx;
        c
    }
}

impl FieldSpec {
    pub fn sample(&self, grid: &SpaceGrid) -> CmdResult<Vec<f64>> {
        match *self {
            FieldSpec::Constant { value } => {
                if !value.is_finite() {
                    return Err(CmdError::config("initial.value must be finite"));
                }
                Ok(vec![value; grid.nx()])
            }
            FieldSpec::Cosine { amplitude, mode } => {
                if mode == 0 {
                    return Err(CmdError::config("initial.mode must be at least 1"));
                }
                if !amplitude.is_finite() {
                    return Err(CmdError::config("initial.amplitude must be finite"));
                }
                let w = 2.0 * PI * mode as f64 / grid.length();
                Ok((0..grid.nx())
                    .map(|m| amplitude * (w * grid.node(m)).cos())
                    .collect())
            }
            FieldSpec::Bump { center, radius, height } => {
                if !(radius > 0.0 && radius < 0.5 * grid.length()) {
                    return Err(CmdError::config(
                        "initial.radius must be positive and fit in the half-circle",
                    ));
                }
                if !(center.is_finite() && height.is_finite()) {
                    return Err(CmdError::config("initial.center and height must be finite"));
                }
                Ok((0..grid.nx())
                    .map(|m| {
                        let s = grid.min_image(grid.node(m) - center) / radius;
                        if s.abs() < 1.0 {
                            height * (1.0 - 1.0 / (1.0 - s * s)).exp()
                        } else {
                            0.0
                        }
                    })
                    .collect())
            }
        }
    }
}

impl ForcingSpec {
    pub fn build(&self) -> CmdResult<Forcing> {
        match *self {
            ForcingSpec::Zero => Ok(Forcing::zero()),
            ForcingSpec::Constant { value } => {
                if !value.is_finite() {
                    return Err(CmdError::config("forcing.value must be finite"));
                }
                Ok(Forcing::constant(value))
            }
        }
    }
}
