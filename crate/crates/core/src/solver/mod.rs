//! Global GMRES drivers.
//!
//! `gl_gmres` minimizes the true residual Frobenius norm over the
//! global Krylov subspace at every step; `rgl_gmres` minimizes the
//! sketched semi-norm instead, trading exact orthogonalization for
//! cheap sketched inner products. Both report per-step least-squares
//! residual histories and per-phase wall times.

mod bounds;
mod lstsq;

pub use bounds::{eigen_residual_bound, quasi_optimality_ratio, EigenData, QuasiOptimality};
pub use lstsq::{hessenberg_lstsq, ProgressiveLstsq};

use std::time::Instant;

use crate::arnoldi::{
    check_basis_budget, ArnoldiOptions, ArnoldiResult, GlProcess, HessenbergFactor, PhaseTimes,
    RglProcess, StepOutcome, DEFAULT_MEMORY_BUDGET,
};
use crate::blockla::{
    block_sub, diamond_combine, frob_norm, spmm_block, BasisSequence, BlockVector, SparseMatrix,
};
use crate::error::{Error, Result};
use crate::sketch::{SketchKind, SketchOperator};

/// Sketch parameters for the randomized solver; the input dimension is
/// taken from the system matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SketchConfig {
    pub kind: SketchKind,
    pub ell: usize,
    pub zeta: usize,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct SolverConfig {
    /// Maximum Arnoldi steps.
    pub maxit: usize,
    /// Relative residual tolerance (Frobenius for `gl_gmres`, sketched
    /// for `rgl_gmres`).
    pub tol: f64,
    /// Required by `rgl_gmres`, ignored by `gl_gmres`.
    pub sketch: Option<SketchConfig>,
    /// Compute the true residual every this many steps; 0 means only at
    /// termination.
    pub true_residual_cadence: usize,
    pub breakdown_tol: f64,
    /// Ceiling on retained basis storage in bytes.
    pub memory_budget: usize,
    pub reorthogonalize: bool,
    /// A converged sketched run whose true relative residual exceeds
    /// `divergence_factor * tol` is flagged in the report.
    pub divergence_factor: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            maxit: 100,
            tol: 1e-6,
            sketch: None,
            true_residual_cadence: 0,
            breakdown_tol: 1e-14,
            memory_budget: DEFAULT_MEMORY_BUDGET,
            reorthogonalize: false,
            divergence_factor: 10.0,
        }
    }
}

impl SolverConfig {
    fn validate(&self) -> Result<()> {
        if self.maxit < 1 {
            return Err(Error::InvalidParameter("maxit must be at least 1".into()));
        }
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "tol must lie in (0, 1), got {}",
                self.tol
            )));
        }
        if !(self.divergence_factor >= 1.0) {
            return Err(Error::InvalidParameter(
                "divergence_factor must be at least 1".into(),
            ));
        }
        Ok(())
    }

    fn arnoldi_options(&self) -> ArnoldiOptions {
        ArnoldiOptions {
            breakdown_tol: self.breakdown_tol,
            reorthogonalize: self.reorthogonalize,
            memory_budget: self.memory_budget,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Gl,
    Rgl,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Method::Gl => write!(f, "gl"),
            Method::Rgl => write!(f, "rgl"),
        }
    }
}

/// Everything a run reports besides the solution block itself.
#[derive(Debug, Clone)]
pub struct SolveReport {
    pub method: Method,
    /// Arnoldi steps taken.
    pub iterations: usize,
    pub converged: bool,
    /// 1-based step of a happy breakdown, if one occurred.
    pub breakdown: Option<usize>,
    /// Per-step least-squares residual: `|R_k|_F` for the deterministic
    /// solver, `|Theta(B - A X_k)|_F` for the sketched one. Nonincreasing.
    pub ls_residual_history: Vec<f64>,
    /// `(step, |B - A X_step|_F)` samples taken at the configured cadence.
    pub true_residuals: Vec<(usize, f64)>,
    /// `|B - A X|_F` at the returned iterate.
    pub true_residual_final: f64,
    pub b_norm: f64,
    pub r0_norm: f64,
    /// Initial block norm used to scale the basis: `|R0|_F` or
    /// `|Theta R0|_F`.
    pub beta: f64,
    /// Set when a converged sketched run fails the true-residual check.
    pub sketched_true_divergence: bool,
    pub wall_times: PhaseTimes,
    pub seed: Option<u64>,
    pub ell: Option<usize>,
}

impl SolveReport {
    /// Final true residual relative to the initial residual norm.
    pub fn relative_true_residual(&self) -> f64 {
        if self.r0_norm == 0.0 {
            0.0
        } else {
            self.true_residual_final / self.r0_norm
        }
    }
}

/// Deterministic global GMRES. Returns the iterate and its report.
pub fn gl_gmres(
    a: &SparseMatrix,
    b: &BlockVector,
    x0: &BlockVector,
    cfg: &SolverConfig,
) -> Result<(BlockVector, SolveReport)> {
    let (x, report, _) = solve_impl(a, b, x0, cfg, Method::Gl, false)?;
    Ok((x, report))
}

/// `gl_gmres` that also returns the Krylov data it built.
pub fn gl_gmres_with_basis(
    a: &SparseMatrix,
    b: &BlockVector,
    x0: &BlockVector,
    cfg: &SolverConfig,
) -> Result<(BlockVector, SolveReport, ArnoldiResult)> {
    let (x, report, basis) = solve_impl(a, b, x0, cfg, Method::Gl, true)?;
    Ok((x, report, basis.expect("basis requested")))
}

/// Sketched global GMRES; `cfg.sketch` must be set. Convergence is
/// declared on the sketched relative residual, after which the true
/// residual is computed and checked against the divergence factor.
pub fn rgl_gmres(
    a: &SparseMatrix,
    b: &BlockVector,
    x0: &BlockVector,
    cfg: &SolverConfig,
) -> Result<(BlockVector, SolveReport)> {
    let (x, report, _) = solve_impl(a, b, x0, cfg, Method::Rgl, false)?;
    Ok((x, report))
}

/// `rgl_gmres` that also returns the Krylov data it built, including
/// the sketched basis blocks.
pub fn rgl_gmres_with_basis(
    a: &SparseMatrix,
    b: &BlockVector,
    x0: &BlockVector,
    cfg: &SolverConfig,
) -> Result<(BlockVector, SolveReport, ArnoldiResult)> {
    let (x, report, basis) = solve_impl(a, b, x0, cfg, Method::Rgl, true)?;
    Ok((x, report, basis.expect("basis requested")))
}

trait Process {
    fn step(&mut self, times: &mut PhaseTimes) -> Result<StepOutcome>;
    fn blocks(&self) -> &[BlockVector];
    fn into_basis(self: Box<Self>) -> Result<BasisSequence>;
}

impl Process for GlProcess<'_> {
    fn step(&mut self, times: &mut PhaseTimes) -> Result<StepOutcome> {
        GlProcess::step(self, times)
    }
    fn blocks(&self) -> &[BlockVector] {
        &self.blocks
    }
    fn into_basis(self: Box<Self>) -> Result<BasisSequence> {
        BasisSequence::new(self.blocks)
    }
}

impl Process for RglProcess<'_> {
    fn step(&mut self, times: &mut PhaseTimes) -> Result<StepOutcome> {
        RglProcess::step(self, times)
    }
    fn blocks(&self) -> &[BlockVector] {
        &self.blocks
    }
    fn into_basis(self: Box<Self>) -> Result<BasisSequence> {
        BasisSequence::with_sketched(self.blocks, self.sketched)
    }
}

fn check_system(
    a: &SparseMatrix,
    b: &BlockVector,
    x0: &BlockVector,
) -> Result<()> {
    if a.n() != b.n() {
        return Err(Error::ShapeMismatch {
            op: "gmres",
            expected: format!("{} rows", a.n()),
            found: format!("B with {} rows", b.n()),
        });
    }
    if !b.same_shape(x0) {
        return Err(Error::ShapeMismatch {
            op: "gmres",
            expected: format!("{}x{}", b.n(), b.s()),
            found: format!("X0 of {}x{}", x0.n(), x0.s()),
        });
    }
    Ok(())
}

fn solve_impl(
    a: &SparseMatrix,
    b: &BlockVector,
    x0: &BlockVector,
    cfg: &SolverConfig,
    method: Method,
    keep_basis: bool,
) -> Result<(BlockVector, SolveReport, Option<ArnoldiResult>)> {
    cfg.validate()?;
    check_system(a, b, x0)?;

    let mut times = PhaseTimes::default();
    let t = Instant::now();
    let r0 = block_sub(b, &spmm_block(a, x0)?)?;
    times.matvec += t.elapsed().as_secs_f64();
    let b_norm = frob_norm(b);
    let r0_norm = frob_norm(&r0);

    let theta;
    let (seed, ell) = match method {
        Method::Gl => (None, None),
        Method::Rgl => {
            let sk = cfg.sketch.as_ref().ok_or_else(|| {
                Error::InvalidParameter("rgl_gmres requires a sketch configuration".into())
            })?;
            (Some(sk.seed), Some(sk.ell))
        }
    };

    if r0_norm == 0.0 {
        // X0 already solves the system.
        let report = SolveReport {
            method,
            iterations: 0,
            converged: true,
            breakdown: None,
            ls_residual_history: Vec::new(),
            true_residuals: Vec::new(),
            true_residual_final: 0.0,
            b_norm,
            r0_norm,
            beta: 0.0,
            sketched_true_divergence: false,
            wall_times: times,
            seed,
            ell,
        };
        let basis = keep_basis.then(|| ArnoldiResult {
            basis: BasisSequence::new(Vec::new()).expect("empty basis"),
            hess: HessenbergFactor::new(),
            beta: 0.0,
            breakdown: None,
        });
        return Ok((x0.clone(), report, basis));
    }

    check_basis_budget(
        cfg.maxit,
        a.n(),
        ell.unwrap_or(0),
        b.s(),
        cfg.memory_budget,
    )?;

    let (beta, mut proc): (f64, Box<dyn Process + '_>) = match method {
        Method::Gl => {
            let (beta, p) = GlProcess::new(a, &r0, cfg.arnoldi_options())?;
            (beta, Box::new(p))
        }
        Method::Rgl => {
            let sk = cfg.sketch.as_ref().unwrap();
            let t = Instant::now();
            let op = SketchOperator::new(sk.kind, sk.ell, a.n(), sk.seed, sk.zeta)?;
            theta = op;
            times.sketch += t.elapsed().as_secs_f64();
            let (beta, p) = RglProcess::new(a, &r0, &theta, cfg.arnoldi_options())?;
            (beta, Box::new(p))
        }
    };

    let mut ls = ProgressiveLstsq::new(beta);
    let mut hess = HessenbergFactor::new();
    let mut history = Vec::new();
    let mut true_residuals = Vec::new();
    let mut breakdown = None;
    let mut converged = false;

    for step in 1..=cfg.maxit {
        let outcome = proc.step(&mut times)?;
        let t = Instant::now();
        let (col, broke) = match outcome {
            StepOutcome::Advanced(col) => (col, false),
            StepOutcome::Breakdown(col) => (col, true),
        };
        let res = ls.append_column(&col)?;
        hess.push_column(col);
        times.least_squares += t.elapsed().as_secs_f64();
        if !res.is_finite() {
            return Err(Error::NumericalFailure { step });
        }
        history.push(res);
        converged = res <= cfg.tol * beta;
        if broke {
            breakdown = Some(step);
        }
        let done = converged || broke || step == cfg.maxit;
        if cfg.true_residual_cadence > 0 && step % cfg.true_residual_cadence == 0 && !done {
            let tr = true_residual_at(a, b, x0, proc.blocks(), &ls, &mut times)?;
            true_residuals.push((step, tr));
        }
        if done {
            break;
        }
    }

    let t = Instant::now();
    let z = ls.solve()?;
    let x = {
        let dx = diamond_combine(&proc.blocks()[..z.len()], &z)?;
        crate::blockla::block_add(x0, &dx)?
    };
    times.least_squares += t.elapsed().as_secs_f64();

    let t = Instant::now();
    let true_final = frob_norm(&block_sub(b, &spmm_block(a, &x)?)?);
    times.matvec += t.elapsed().as_secs_f64();
    let iterations = history.len();
    if !true_final.is_finite() {
        return Err(Error::NumericalFailure { step: iterations });
    }
    true_residuals.push((iterations, true_final));

    let sketched_true_divergence = method == Method::Rgl
        && converged
        && true_final > cfg.divergence_factor * cfg.tol * r0_norm;

    let report = SolveReport {
        method,
        iterations,
        converged,
        breakdown,
        ls_residual_history: history,
        true_residuals,
        true_residual_final: true_final,
        b_norm,
        r0_norm,
        beta,
        sketched_true_divergence,
        wall_times: times,
        seed,
        ell,
    };
    let basis = if keep_basis {
        Some(ArnoldiResult {
            basis: proc.into_basis()?,
            hess,
            beta,
            breakdown,
        })
    } else {
        None
    };
    Ok((x, report, basis))
}

fn true_residual_at(
    a: &SparseMatrix,
    b: &BlockVector,
    x0: &BlockVector,
    blocks: &[BlockVector],
    ls: &ProgressiveLstsq,
    times: &mut PhaseTimes,
) -> Result<f64> {
    let t = Instant::now();
    let z = ls.solve()?;
    let dx = diamond_combine(&blocks[..z.len()], &z)?;
    let x = crate::blockla::block_add(x0, &dx)?;
    times.least_squares += t.elapsed().as_secs_f64();
    let t = Instant::now();
    let r = block_sub(b, &spmm_block(a, &x)?)?;
    times.matvec += t.elapsed().as_secs_f64();
    Ok(frob_norm(&r))
}

/// Rebuilds the iterate after `k` steps of a completed run from its
/// retained Krylov data.
pub fn iterate_at(
    arnoldi: &ArnoldiResult,
    x0: &BlockVector,
    k: usize,
) -> Result<BlockVector> {
    if k == 0 {
        return Ok(x0.clone());
    }
    if k > arnoldi.hess.steps() {
        return Err(Error::InvalidParameter(format!(
            "k = {k} exceeds the {} completed steps",
            arnoldi.hess.steps()
        )));
    }
    let mut ls = ProgressiveLstsq::new(arnoldi.beta);
    for j in 0..k {
        ls.append_column(arnoldi.hess.column(j))?;
    }
    let z = ls.solve()?;
    let dx = diamond_combine(&arnoldi.basis.blocks()[..k], &z)?;
    crate::blockla::block_add(x0, &dx)
}
