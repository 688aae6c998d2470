//! Implicit marching for the memory-diffusion equation.
//!
//! Each step solves (c0 I - A_j) w_j = g_j, where c0 is the diagonal
//! weight of the discrete memory derivative (with the frozen-history tail
//! folded in, c0 = alpha eps^-alpha zeta(1+alpha)), A_j the assembled
//! space operator at the step time, and g_j the forcing plus the full
//! backward history load. The matrix is SPD because -A is positive
//! semidefinite, so a Cholesky factorization (or conjugate gradients on
//! large grids) always applies.
//!
//! The closed-form rearrangement above is internal. The binding contract
//! is the per-step residual: the discrete derivative of the accepted
//! trajectory, recomputed independently through [`fractime::discrete_caputo`],
//! must match A_j w_j + f_j to [`RESIDUAL_TOL`] relative to the field
//! size. `run` enforces that at every step and refuses trajectories that
//! break it.

use std::fmt;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fractime::{self, discrete_caputo, FracOrder, HistoryExtension, TimeGrid, TimeSeries};
use crate::par::Kahan;
use crate::spaceop::{self, KernelMode, KernelSpec, SpaceGrid};

/// Residual acceptance coefficient: a step passes when the independent
/// scheme residual is at most RESIDUAL_TOL * (1 + max|w_j|).
pub const RESIDUAL_TOL: f64 = 1e-10;

/// Largest grid solved by direct factorization; above this the step uses
/// conjugate gradients.
const DIRECT_SOLVE_LIMIT: usize = 512;

/// Forcing term f(t, x) with a declared sup-norm bound and a short label
/// for file headers. The declared bound must dominate every sampled
/// value; `run` checks that while sampling the grid.
#[derive(Clone)]
pub struct Forcing {
    label: String,
    sup_bound: f64,
    sampler: Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>,
}

impl Forcing {
    pub fn zero() -> Self {
        Forcing {
            label: "zero".to_string(),
            sup_bound: 0.0,
            sampler: Arc::new(|_, _| 0.0),
        }
    }

    pub fn constant(c: f64) -> Self {
        Forcing {
            label: format!("constant {c}"),
            sup_bound: c.abs(),
            sampler: Arc::new(move |_, _| c),
        }
    }

    pub fn from_fn<F>(label: impl Into<String>, sup_bound: f64, f: F) -> Self
    where
        F: Fn(f64, f64) -> f64 + Send + Sync + 'static,
    {
        Forcing {
            label: label.into(),
            sup_bound,
            sampler: Arc::new(f),
        }
    }

    /// Forcing defined by its node samples (used when reloading stored
    /// trajectories): evaluation snaps to the nearest grid node.
    pub fn from_node_samples(
        label: impl Into<String>,
        sup_bound: f64,
        tgrid: TimeGrid,
        sgrid: SpaceGrid,
        samples: Vec<Vec<f64>>,
    ) -> Self {
        let label = label.into();
        Forcing {
            label,
            sup_bound,
            sampler: Arc::new(move |t, x| {
                let j = ((t - tgrid.a()) / tgrid.eps()).round() as i64;
                let j = j.clamp(0, tgrid.k() as i64) as usize;
                let m = (x / sgrid.h()).round() as i64;
                let m = m.rem_euclid(sgrid.nx() as i64) as usize;
                samples[j][m]
            }),
        }
    }

    #[inline]
    pub fn sample(&self, t: f64, x: f64) -> f64 {
        (self.sampler)(t, x)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn sup_bound(&self) -> f64 {
        self.sup_bound
    }
}

impl fmt::Debug for Forcing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Forcing")
            .field("label", &self.label)
            .field("sup_bound", &self.sup_bound)
            .finish()
    }
}

/// A complete marching problem.
#[derive(Clone, Debug)]
pub struct Problem {
    pub time: TimeGrid,
    pub space: SpaceGrid,
    pub alpha: FracOrder,
    pub kernel: KernelSpec,
    pub initial: Vec<f64>,
    pub forcing: Forcing,
    /// When set, the kernel's time multiplier is evaluated at
    /// max(t, this) -- the backward-extension construction freezes the
    /// kernel before the original initial time.
    pub profile_clamp_below: Option<f64>,
}

impl Problem {
    pub fn validate(&self) -> Result<()> {
        self.kernel.validate()?;
        if (self.kernel.domain_length - self.space.length()).abs() > 1e-9 * self.space.length() {
            return Err(Error::invalid(
                "kernel.domain_length",
                self.kernel.domain_length,
                "kernel and grid disagree on the domain circumference",
            ));
        }
        if self.initial.len() != self.space.nx() {
            return Err(Error::LengthMismatch {
                context: "initial field",
                expected: self.space.nx(),
                actual: self.initial.len(),
            });
        }
        if let Some(&bad) = self.initial.iter().find(|v| !v.is_finite()) {
            return Err(Error::invalid("initial", bad, "initial field must be finite"));
        }
        Ok(())
    }

    pub(crate) fn profile_at(&self, t: f64) -> f64 {
        let t_eff = match self.profile_clamp_below {
            Some(floor) if t < floor => floor,
            _ => t,
        };
        self.kernel.profile_value(t_eff)
    }
}

/// Per-step solver record.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepMeta {
    pub residual: f64,
    pub iterations: usize,
}

/// Whole-run metadata. Wall time is measured by `run` and deliberately
/// not persisted; reloaded trajectories have `None` here.
#[derive(Clone, Debug, Default)]
pub struct SolverMeta {
    pub steps: Vec<StepMeta>,
    pub wall_seconds: Option<f64>,
}

/// The solved history: k+1 spatial fields, field 0 being the initial
/// data, plus the problem that produced them and the solver records.
#[derive(Clone, Debug)]
pub struct Trajectory {
    problem: Problem,
    fields: Vec<Vec<f64>>,
    meta: SolverMeta,
}

impl Trajectory {
    pub fn problem(&self) -> &Problem {
        &self.problem
    }

    pub fn field(&self, j: usize) -> &[f64] {
        &self.fields[j]
    }

    pub fn fields(&self) -> &[Vec<f64>] {
        &self.fields
    }

    pub fn meta(&self) -> &SolverMeta {
        &self.meta
    }

    /// Node values of one spatial index across time.
    pub fn time_slice(&self, m: usize) -> Vec<f64> {
        self.fields.iter().map(|f| f[m]).collect()
    }
}

/// All per-step state that is worth computing once per run.
struct Engine<'p> {
    problem: &'p Problem,
    shape: DMatrix<f64>,
    amat: DMatrix<f64>,
    powers: Vec<f64>,
    tails: Vec<f64>,
    c0: f64,
    alpha_eps: f64,
    forcing_rows: Vec<Vec<f64>>,
    factor: Option<(u64, Cholesky<f64, Dyn>)>,
}

impl<'p> Engine<'p> {
    fn new(problem: &'p Problem) -> Result<Self> {
        problem.validate()?;
        let alpha = problem.alpha.get();
        let k = problem.time.k();
        let eps = problem.time.eps();
        // weights of the time-independent kernel shape; the profile scales
        // them per step
        let mut unit = problem.kernel.clone();
        unit.time_profile = spaceop::TimeProfile::None;
        let shape = spaceop::assemble(&unit, &problem.space, 0.0)?;
        let amat = spaceop::operator_matrix(&shape);
        let s = 1.0 + alpha;
        let powers: Vec<f64> = (1..=k).map(|m| (m as f64).powf(-s)).collect();
        let tails = fractime::tail_sequence(alpha, k, fractime::DEFAULT_TAIL_TOL);
        let alpha_eps = alpha * eps.powf(-alpha);
        let c0 = alpha_eps * tails[0];
        // sample the forcing on every node up front: validates finiteness
        // and the declared bound, and save() wants the same table
        let nx = problem.space.nx();
        let mut forcing_rows = Vec::with_capacity(k + 1);
        let mut sup = 0.0f64;
        for j in 0..=k {
            let t = problem.time.node(j);
            let row: Vec<f64> = (0..nx)
                .map(|m| problem.forcing.sample(t, problem.space.node(m)))
                .collect();
            if let Some(&bad) = row.iter().find(|v| !v.is_finite()) {
                return Err(Error::invalid("forcing", bad, "forcing must be finite at grid nodes"));
            }
            for v in &row {
                sup = sup.max(v.abs());
            }
            forcing_rows.push(row);
        }
        if sup > problem.forcing.sup_bound() * (1.0 + 1e-12) + 1e-300 {
            return Err(Error::invalid(
                "forcing.sup_bound",
                problem.forcing.sup_bound(),
                "declared bound is below a sampled value",
            ));
        }
        Ok(Engine {
            problem,
            shape,
            amat,
            powers,
            tails,
            c0,
            alpha_eps,
            forcing_rows,
            factor: None,
        })
    }

    /// One implicit step given fields 0..j-1.
    fn step(&mut self, history: &[Vec<f64>], j: usize) -> Result<(Vec<f64>, usize)> {
        let nx = self.problem.space.nx();
        let t_j = self.problem.time.node(j);
        let s_j = self.problem.profile_at(t_j);

        // history load: sum of m^-(1+alpha) w_{j-m} plus the frozen tail
        let mut hist = vec![0.0f64; nx];
        for (i, &c) in self.powers[..j].iter().enumerate() {
            let src = &history[j - (i + 1)];
            for m in 0..nx {
                hist[m] += c * src[m];
            }
        }
        let tau = self.tails[j];
        let w0 = &history[0];
        let f_row = &self.forcing_rows[j];
        let g: Vec<f64> = (0..nx)
            .map(|m| f_row[m] + self.alpha_eps * (hist[m] + tau * w0[m]))
            .collect();

        if nx <= DIRECT_SOLVE_LIMIT {
            let reuse = matches!(self.factor, Some((bits, _)) if bits == s_j.to_bits());
            if !reuse {
                let mut sys = self.amat.clone() * (-s_j);
                for m in 0..nx {
                    sys[(m, m)] += self.c0;
                }
                let chol = Cholesky::new(sys).ok_or_else(|| Error::SolveFailure {
                    step: j,
                    detail: "system matrix lost positive definiteness in factorization".to_string(),
                })?;
                self.factor = Some((s_j.to_bits(), chol));
            }
            let (_, chol) = self.factor.as_ref().unwrap();
            let w = chol.solve(&DVector::from_column_slice(&g));
            Ok((w.as_slice().to_vec(), 1))
        } else {
            self.cg(&g, s_j, j)
        }
    }

    /// Conjugate gradients on (c0 I - s A), relative tolerance 1e-12.
    fn cg(&self, g: &[f64], s_j: f64, j: usize) -> Result<(Vec<f64>, usize)> {
        let n = g.len();
        let b = DVector::from_column_slice(g);
        let target = 1e-12 * b.norm();
        let sysmul = |v: &DVector<f64>| -> DVector<f64> {
            let av = &self.amat * v;
            v * self.c0 - av * s_j
        };
        let mut x = DVector::zeros(n);
        let mut r = b.clone();
        let mut p = r.clone();
        let mut rs = r.dot(&r);
        if rs.sqrt() <= target {
            return Ok((x.as_slice().to_vec(), 0));
        }
        let max_iter = 20 * n;
        for it in 1..=max_iter {
            let ap = sysmul(&p);
            let step = rs / p.dot(&ap);
            x.axpy(step, &p, 1.0);
            r.axpy(-step, &ap, 1.0);
            let rs_next = r.dot(&r);
            if rs_next.sqrt() <= target {
                return Ok((x.as_slice().to_vec(), it));
            }
            p *= rs_next / rs;
            p += &r;
            rs = rs_next;
        }
        Err(Error::SolveFailure {
            step: j,
            detail: format!(
                "conjugate gradients stalled after {max_iter} iterations, residual {:e}",
                rs.sqrt()
            ),
        })
    }

    /// Independent residual of the fields at step j: discrete derivative
    /// via fractime versus operator plus forcing.
    fn residual(&self, fields: &[Vec<f64>], j: usize) -> Result<f64> {
        let nx = self.problem.space.nx();
        let t_j = self.problem.time.node(j);
        let s_j = self.problem.profile_at(t_j);
        let aw = spaceop::apply(&self.shape, &fields[j])?;
        let grid_j = TimeGrid::new(self.problem.time.a(), t_j, j)?;
        let f_row = &self.forcing_rows[j];
        let mut worst = 0.0f64;
        for m in 0..nx {
            let series = TimeSeries::new(
                grid_j,
                fields[..=j].iter().map(|f| f[m]).collect(),
                HistoryExtension::ConstantBeforeA,
            )?;
            let dt = discrete_caputo(&series, self.problem.alpha, j)?;
            worst = worst.max((dt - s_j * aw[m] - f_row[m]).abs());
        }
        Ok(worst)
    }
}

/// One step as a standalone call: builds the per-run state, solves step j
/// from the given history. `run` is the loop over this logic with the
/// state kept alive.
pub fn step(history: &[Vec<f64>], problem: &Problem, j: usize) -> Result<Vec<f64>> {
    if j == 0 || j > problem.time.k() {
        return Err(Error::invalid("j", j as f64, "step index must lie in 1..=k"));
    }
    if history.len() != j {
        return Err(Error::LengthMismatch {
            context: "step history",
            expected: j,
            actual: history.len(),
        });
    }
    let mut engine = Engine::new(problem)?;
    engine.step(history, j).map(|(w, _)| w)
}

/// March the problem from a to T, enforcing the residual contract at
/// every step.
pub fn run(problem: &Problem) -> Result<Trajectory> {
    let start = Instant::now();
    let mut engine = Engine::new(problem)?;
    let k = problem.time.k();
    let mut fields = Vec::with_capacity(k + 1);
    fields.push(problem.initial.clone());
    let mut steps = Vec::with_capacity(k);
    for j in 1..=k {
        let (w, iterations) = engine.step(&fields, j)?;
        fields.push(w);
        let residual = engine.residual(&fields, j)?;
        let scale = 1.0 + fields[j].iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        if residual > RESIDUAL_TOL * scale {
            return Err(Error::SolveFailure {
                step: j,
                detail: format!(
                    "scheme residual {residual:e} exceeds {:e}",
                    RESIDUAL_TOL * scale
                ),
            });
        }
        steps.push(StepMeta {
            residual,
            iterations,
        });
    }
    Ok(Trajectory {
        problem: problem.clone(),
        fields,
        meta: SolverMeta {
            steps,
            wall_seconds: Some(start.elapsed().as_secs_f64()),
        },
    })
}

/// Independent residual of a finished trajectory at step j (see
/// [`run`]; this is the same check, recomputed from scratch).
pub fn scheme_residual(traj: &Trajectory, j: usize) -> Result<f64> {
    if j == 0 || j > traj.problem.time.k() {
        return Err(Error::invalid("j", j as f64, "step index must lie in 1..=k"));
    }
    let engine = Engine::new(&traj.problem)?;
    engine.residual(&traj.fields, j)
}

/// Residuals at every step, with the operator assembled once.
pub fn scheme_residuals(traj: &Trajectory) -> Result<Vec<f64>> {
    let engine = Engine::new(&traj.problem)?;
    (1..=traj.problem.time.k())
        .map(|j| engine.residual(&traj.fields, j))
        .collect()
}

const MAGIC: &[u8; 8] = b"FRACDIF1";

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileHeader {
    format_version: u32,
    a: f64,
    t_end: f64,
    k: usize,
    nx: usize,
    domain_length: f64,
    alpha: f64,
    sigma: f64,
    lambda: f64,
    kernel_mode: String,
    kernel: KernelSpec,
    forcing_label: String,
    forcing_sup: f64,
    profile_clamp_below: Option<f64>,
}

fn kernel_mode_name(mode: &KernelMode) -> &'static str {
    match mode {
        KernelMode::TruncatedFractional => "truncated_fractional",
        KernelMode::FullFractional => "full_fractional",
        KernelMode::Tabulated(_) => "tabulated",
    }
}

/// Store a trajectory: magic, JSON header, then little-endian f64 blocks
/// (fields row-major, forcing node samples row-major, per-step residuals)
/// and the per-step iteration counts. Wall time is not stored, so a
/// stored file is a pure function of the problem and its solution.
pub fn save(traj: &Trajectory, path: &Path) -> Result<()> {
    let p = &traj.problem;
    let k = p.time.k();
    let nx = p.space.nx();
    let header = FileHeader {
        format_version: 1,
        a: p.time.a(),
        t_end: p.time.t_end(),
        k,
        nx,
        domain_length: p.space.length(),
        alpha: p.alpha.get(),
        sigma: p.kernel.sigma,
        lambda: p.kernel.lambda,
        kernel_mode: kernel_mode_name(&p.kernel.mode).to_string(),
        kernel: p.kernel.clone(),
        forcing_label: p.forcing.label().to_string(),
        forcing_sup: p.forcing.sup_bound(),
        profile_clamp_below: p.profile_clamp_below,
    };
    let header_bytes =
        serde_json::to_vec(&header).map_err(|e| Error::Format(format!("header encode: {e}")))?;
    let mut out = BufWriter::new(File::create(path)?);
    out.write_all(MAGIC)?;
    out.write_all(&(header_bytes.len() as u32).to_le_bytes())?;
    out.write_all(&header_bytes)?;
    for field in &traj.fields {
        for v in field {
            out.write_all(&v.to_le_bytes())?;
        }
    }
    for j in 0..=k {
        let t = p.time.node(j);
        for m in 0..nx {
            out.write_all(&p.forcing.sample(t, p.space.node(m)).to_le_bytes())?;
        }
    }
    for s in &traj.meta.steps {
        out.write_all(&s.residual.to_le_bytes())?;
    }
    for s in &traj.meta.steps {
        out.write_all(&(s.iterations as u64).to_le_bytes())?;
    }
    out.flush()?;
    Ok(())
}

fn read_f64s(src: &mut impl Read, n: usize) -> Result<Vec<f64>> {
    let mut buf = vec![0u8; 8 * n];
    src.read_exact(&mut buf)
        .map_err(|_| Error::Format("file truncated inside a float block".to_string()))?;
    Ok(buf
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect())
}

/// Reload a stored trajectory. The forcing comes back as its node-sample
/// table (labelled as stored), so residual checks and diagnostics work
/// on the reloaded object; save(load(f)) reproduces f byte for byte.
pub fn load(path: &Path) -> Result<Trajectory> {
    let mut src = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 8];
    src.read_exact(&mut magic)
        .map_err(|_| Error::Format("file shorter than its magic".to_string()))?;
    if &magic != MAGIC {
        return Err(Error::Format("not a trajectory file (bad magic)".to_string()));
    }
    let mut len_bytes = [0u8; 4];
    src.read_exact(&mut len_bytes)
        .map_err(|_| Error::Format("file truncated in header length".to_string()))?;
    let header_len = u32::from_le_bytes(len_bytes) as usize;
    if header_len > 1 << 24 {
        return Err(Error::Format(format!("implausible header length {header_len}")));
    }
    let mut header_bytes = vec![0u8; header_len];
    src.read_exact(&mut header_bytes)
        .map_err(|_| Error::Format("file truncated inside header".to_string()))?;
    let header: FileHeader = serde_json::from_slice(&header_bytes)
        .map_err(|e| Error::Format(format!("header decode: {e}")))?;
    if header.format_version != 1 {
        return Err(Error::Format(format!(
            "unsupported format version {}",
            header.format_version
        )));
    }
    let time = TimeGrid::new(header.a, header.t_end, header.k)?;
    let space = SpaceGrid::new(header.domain_length, header.nx)?;
    let alpha = FracOrder::new(header.alpha)?;
    let k = header.k;
    let nx = header.nx;
    let mut fields = Vec::with_capacity(k + 1);
    for _ in 0..=k {
        fields.push(read_f64s(&mut src, nx)?);
    }
    let mut forcing_rows = Vec::with_capacity(k + 1);
    for _ in 0..=k {
        forcing_rows.push(read_f64s(&mut src, nx)?);
    }
    let residuals = read_f64s(&mut src, k)?;
    let mut iter_bytes = vec![0u8; 8 * k];
    src.read_exact(&mut iter_bytes)
        .map_err(|_| Error::Format("file truncated in iteration counts".to_string()))?;
    let iterations: Vec<u64> = iter_bytes
        .chunks_exact(8)
        .map(|c| u64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let forcing = Forcing::from_node_samples(
        header.forcing_label,
        header.forcing_sup,
        time,
        space,
        forcing_rows,
    );
    let problem = Problem {
        time,
        space,
        alpha,
        kernel: header.kernel,
        initial: fields[0].clone(),
        forcing,
        profile_clamp_below: header.profile_clamp_below,
    };
    let steps = residuals
        .into_iter()
        .zip(iterations)
        .map(|(residual, it)| StepMeta {
            residual,
            iterations: it as usize,
        })
        .collect();
    Ok(Trajectory {
        problem,
        fields,
        meta: SolverMeta {
            steps,
            wall_seconds: None,
        },
    })
}

/// CSV export, one row per (step, cell): j, t, m, x, w.
pub fn export_csv(traj: &Trajectory, out: &mut impl Write) -> Result<()> {
    let p = &traj.problem;
    writeln!(out, "# fracdiff trajectory csv, format 1")?;
    writeln!(out, "j,t,m,x,w")?;
    for (j, field) in traj.fields.iter().enumerate() {
        let t = p.time.node(j);
        for (m, w) in field.iter().enumerate() {
            writeln!(out, "{j},{t},{m},{x},{w}", x = p.space.node(m))?;
        }
    }
    Ok(())
}

/// Scalar one-mode recursion with the same time weights: solves
/// d^alpha u = -mu u + f with u(a) = u0, one unknown per step. The
/// eigenmode oracle: a trajectory launched on an exact eigenvector of
/// the space operator must follow this curve coordinate by coordinate.
pub fn scalar_mode_recursion(
    alpha: FracOrder,
    time: TimeGrid,
    mu: f64,
    u0: f64,
    f: impl Fn(f64) -> f64,
) -> Result<Vec<f64>> {
    if !(mu >= 0.0) {
        return Err(Error::invalid("mu", mu, "modal eigenvalue must be nonnegative"));
    }
    let k = time.k();
    let al = alpha.get();
    let s = 1.0 + al;
    let powers: Vec<f64> = (1..=k).map(|m| (m as f64).powf(-s)).collect();
    let tails = fractime::tail_sequence(al, k, fractime::DEFAULT_TAIL_TOL);
    let alpha_eps = al * time.eps().powf(-al);
    let c0 = alpha_eps * tails[0];
    let mut u = Vec::with_capacity(k + 1);
    u.push(u0);
    for j in 1..=k {
        let mut hist = Kahan::default();
        for (i, &c) in powers[..j].iter().enumerate() {
            hist.add(c * u[j - (i + 1)]);
        }
        hist.add(tails[j] * u0);
        let g = f(time.node(j)) + alpha_eps * hist.value();
        u.push(g / (c0 + mu));
    }
    Ok(u)
}
