//! Global Arnoldi processes.
//!
//! `gl_arnoldi` builds an F-orthonormal basis of the global Krylov
//! subspace spanned by `{R0, A R0, A^2 R0, ...}` via modified
//! Gram-Schmidt on whole blocks. `rgl_arnoldi` is the sketched variant:
//! coefficients come from inner products of maintained sketched blocks,
//! so the basis is orthonormal in the sketched (semi-)inner product.
//! Both return the `(k+1) x k` upper-Hessenberg coefficient factor and
//! satisfy `A [V_1..V_k] = [V_1..V_{k+1}] <> Hbar_k` column by column.

use std::time::Instant;

use crate::blockla::{frob_inner, frob_norm, spmm_block, BasisSequence, BlockVector, SparseMatrix};
use crate::error::{Error, Result};
use crate::sketch::SketchOperator;

/// Default ceiling on basis storage, in bytes.
pub const DEFAULT_MEMORY_BUDGET: usize = 2 << 30;

/// Wall-clock seconds spent in each phase of a run.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PhaseTimes {
    pub matvec: f64,
    pub orthogonalization: f64,
    pub sketch: f64,
    pub least_squares: f64,
}

impl PhaseTimes {
    pub fn total(&self) -> f64 {
        self.matvec + self.orthogonalization + self.sketch + self.least_squares
    }
}

#[derive(Debug, Clone)]
pub struct ArnoldiOptions {
    /// Happy-breakdown threshold, relative to the norm of the block
    /// being orthogonalized.
    pub breakdown_tol: f64,
    /// Run a second Gram-Schmidt pass per step.
    pub reorthogonalize: bool,
    /// Reject runs whose retained basis would exceed this many bytes.
    pub memory_budget: usize,
}

impl Default for ArnoldiOptions {
    fn default() -> Self {
        Self {
            breakdown_tol: 1e-14,
            reorthogonalize: false,
            memory_budget: DEFAULT_MEMORY_BUDGET,
        }
    }
}

/// The `(k+1) x k` upper-Hessenberg factor, stored by columns; column
/// `j` holds the `j+2` coefficients `h_{0..=j+1, j}`.
#[derive(Debug, Clone, PartialEq)]
pub struct HessenbergFactor {
    cols: Vec<Vec<f64>>,
}

impl HessenbergFactor {
    pub(crate) fn new() -> Self {
        Self { cols: Vec::new() }
    }

    pub(crate) fn push_column(&mut self, col: Vec<f64>) {
        debug_assert_eq!(col.len(), self.cols.len() + 2);
        debug_assert!(*col.last().unwrap() >= 0.0);
        self.cols.push(col);
    }

    /// Number of completed steps (columns).
    pub fn steps(&self) -> usize {
        self.cols.len()
    }

    /// Row count, `steps() + 1`.
    pub fn rows(&self) -> usize {
        self.cols.len() + 1
    }

    /// Entry `(i, j)`; exactly zero below the first subdiagonal.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i > j + 1 {
            0.0
        } else {
            self.cols[j][i]
        }
    }

    /// The stored coefficients of column `j` (rows `0..=j+1`).
    pub fn column(&self, j: usize) -> &[f64] {
        &self.cols[j]
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let mut m = nalgebra::DMatrix::zeros(self.rows(), self.steps());
        for (j, col) in self.cols.iter().enumerate() {
            for (i, &v) in col.iter().enumerate() {
                m[(i, j)] = v;
            }
        }
        m
    }
}

/// Output of an Arnoldi run.
#[derive(Debug, Clone)]
pub struct ArnoldiResult {
    /// `k+1` blocks, or `k` blocks when a breakdown truncated the run.
    pub basis: BasisSequence,
    pub hess: HessenbergFactor,
    /// Initial block norm: Frobenius for the deterministic process,
    /// sketched for the randomized one.
    pub beta: f64,
    /// 1-based step at which a happy breakdown occurred, if any.
    pub breakdown: Option<usize>,
}

pub(crate) enum StepOutcome {
    /// New Hessenberg column; the basis gained one block.
    Advanced(Vec<f64>),
    /// Happy breakdown: column stored without a new basis block.
    Breakdown(Vec<f64>),
}

/// Incremental deterministic process; drives one step at a time so the
/// solver can interleave least-squares updates and convergence checks.
pub(crate) struct GlProcess<'a> {
    a: &'a SparseMatrix,
    pub blocks: Vec<BlockVector>,
    opts: ArnoldiOptions,
}

impl<'a> GlProcess<'a> {
    pub fn new(a: &'a SparseMatrix, r0: &BlockVector, opts: ArnoldiOptions) -> Result<(f64, Self)> {
        check_dims(a, r0)?;
        let beta = frob_norm(r0);
        if beta == 0.0 {
            return Err(Error::DegenerateInput("initial block has zero norm".into()));
        }
        let v1 = r0.scaled(1.0 / beta);
        Ok((
            beta,
            Self {
                a,
                blocks: vec![v1],
                opts,
            },
        ))
    }

    pub fn step(&mut self, times: &mut PhaseTimes) -> Result<StepOutcome> {
        let j = self.blocks.len() - 1;
        let t = Instant::now();
        let mut w = spmm_block(self.a, &self.blocks[j])?;
        times.matvec += t.elapsed().as_secs_f64();

        let t = Instant::now();
        let w_norm = frob_norm(&w);
        let mut col = Vec::with_capacity(j + 2);
        for i in 0..=j {
            let h = frob_inner(&w, &self.blocks[i])?;
            w.axpy_in_place(-h, &self.blocks[i]);
            col.push(h);
        }
        if self.opts.reorthogonalize {
            for i in 0..=j {
                let dh = frob_inner(&w, &self.blocks[i])?;
                w.axpy_in_place(-dh, &self.blocks[i]);
                col[i] += dh;
            }
        }
        let h_next = frob_norm(&w);
        times.orthogonalization += t.elapsed().as_secs_f64();

        let step = j + 1;
        if !h_next.is_finite() || !col.iter().all(|v| v.is_finite()) {
            return Err(Error::NumericalFailure { step });
        }
        col.push(h_next);
        if h_next <= self.opts.breakdown_tol * w_norm {
            return Ok(StepOutcome::Breakdown(col));
        }
        self.blocks.push(w.scaled(1.0 / h_next));
        Ok(StepOutcome::Advanced(col))
    }
}

/// Incremental sketched process. Alongside each basis block `Q_i` it
/// maintains `S_i = Theta Q_i`; coefficients are Frobenius products of
/// the sketched blocks, and the subdiagonal entry is the sketched norm
/// of the orthogonalized block.
pub(crate) struct RglProcess<'a> {
    a: &'a SparseMatrix,
    theta: &'a SketchOperator,
    pub blocks: Vec<BlockVector>,
    pub sketched: Vec<BlockVector>,
    opts: ArnoldiOptions,
}

impl<'a> RglProcess<'a> {
    pub fn new(
        a: &'a SparseMatrix,
        r0: &BlockVector,
        theta: &'a SketchOperator,
        opts: ArnoldiOptions,
    ) -> Result<(f64, Self)> {
        check_dims(a, r0)?;
        if theta.n() != a.n() {
            return Err(Error::ShapeMismatch {
                op: "rgl_arnoldi",
                expected: format!("sketch over {} rows", a.n()),
                found: format!("sketch over {} rows", theta.n()),
            });
        }
        let s1 = theta.apply(r0)?;
        let beta = frob_norm(&s1);
        if beta == 0.0 {
            return if frob_norm(r0) == 0.0 {
                Err(Error::DegenerateInput("initial block has zero norm".into()))
            } else {
                Err(Error::SemiNormDegeneracy)
            };
        }
        Ok((
            beta,
            Self {
                a,
                theta,
                blocks: vec![r0.scaled(1.0 / beta)],
                sketched: vec![s1.scaled(1.0 / beta)],
                opts,
            },
        ))
    }

    pub fn step(&mut self, times: &mut PhaseTimes) -> Result<StepOutcome> {
        let j = self.blocks.len() - 1;
        let t = Instant::now();
        let mut w = spmm_block(self.a, &self.blocks[j])?;
        times.matvec += t.elapsed().as_secs_f64();

        let t = Instant::now();
        let mut z = self.theta.apply(&w)?;
        times.sketch += t.elapsed().as_secs_f64();

        let t = Instant::now();
        let z_norm = frob_norm(&z);
        let mut col = Vec::with_capacity(j + 2);
        for i in 0..=j {
            let e = frob_inner(&z, &self.sketched[i])?;
            w.axpy_in_place(-e, &self.blocks[i]);
            z.axpy_in_place(-e, &self.sketched[i]);
            col.push(e);
        }
        if self.opts.reorthogonalize {
            for i in 0..=j {
                let de = frob_inner(&z, &self.sketched[i])?;
                w.axpy_in_place(-de, &self.blocks[i]);
                z.axpy_in_place(-de, &self.sketched[i]);
                col[i] += de;
            }
        }
        let e_next = frob_norm(&z);
        times.orthogonalization += t.elapsed().as_secs_f64();

        let step = j + 1;
        if !e_next.is_finite() || !col.iter().all(|v| v.is_finite()) {
            return Err(Error::NumericalFailure { step });
        }
        col.push(e_next);
        if e_next <= self.opts.breakdown_tol * z_norm {
            return Ok(StepOutcome::Breakdown(col));
        }
        self.blocks.push(w.scaled(1.0 / e_next));
        self.sketched.push(z.scaled(1.0 / e_next));
        Ok(StepOutcome::Advanced(col))
    }
}

fn check_dims(a: &SparseMatrix, r0: &BlockVector) -> Result<()> {
    if a.n() != r0.n() {
        return Err(Error::ShapeMismatch {
            op: "arnoldi",
            expected: format!("{} rows", a.n()),
            found: format!("{} rows", r0.n()),
        });
    }
    Ok(())
}

pub(crate) fn check_basis_budget(
    steps: usize,
    n: usize,
    ell: usize,
    s: usize,
    budget: usize,
) -> Result<()> {
    let entries = (steps + 1) * (n + ell) * s;
    let required = entries.saturating_mul(8);
    if required > budget {
        return Err(Error::MemoryBudget { required, budget });
    }
    Ok(())
}

/// Runs `k` steps of the deterministic global Arnoldi process on
/// `K_k(A, R0)`.
///
/// A happy breakdown (vanishing subdiagonal relative to
/// `opts.breakdown_tol`) is not an error; the result is truncated and
/// flagged.
pub fn gl_arnoldi(
    a: &SparseMatrix,
    r0: &BlockVector,
    k: usize,
    opts: &ArnoldiOptions,
) -> Result<ArnoldiResult> {
    if k < 1 {
        return Err(Error::InvalidParameter("k must be at least 1".into()));
    }
    check_basis_budget(k, a.n(), 0, r0.s(), opts.memory_budget)?;
    let (beta, mut proc) = GlProcess::new(a, r0, opts.clone())?;
    let mut hess = HessenbergFactor::new();
    let mut breakdown = None;
    let mut times = PhaseTimes::default();
    for step in 1..=k {
        match proc.step(&mut times)? {
            StepOutcome::Advanced(col) => hess.push_column(col),
            StepOutcome::Breakdown(col) => {
                hess.push_column(col);
                breakdown = Some(step);
                break;
            }
        }
    }
    Ok(ArnoldiResult {
        basis: BasisSequence::new(proc.blocks)?,
        hess,
        beta,
        breakdown,
    })
}

/// Runs `k` steps of the sketched global Arnoldi process; the basis is
/// orthonormal in the sketched inner product and the sketched images of
/// the basis blocks are retained in the result.
pub fn rgl_arnoldi(
    a: &SparseMatrix,
    r0: &BlockVector,
    k: usize,
    theta: &SketchOperator,
    opts: &ArnoldiOptions,
) -> Result<ArnoldiResult> {
    if k < 1 {
        return Err(Error::InvalidParameter("k must be at least 1".into()));
    }
    check_basis_budget(k, a.n(), theta.ell(), r0.s(), opts.memory_budget)?;
    let (beta, mut proc) = RglProcess::new(a, r0, theta, opts.clone())?;
    let mut hess = HessenbergFactor::new();
    let mut breakdown = None;
    let mut times = PhaseTimes::default();
    for step in 1..=k {
        match proc.step(&mut times)? {
            StepOutcome::Advanced(col) => hess.push_column(col),
            StepOutcome::Breakdown(col) => {
                hess.push_column(col);
                breakdown = Some(step);
                break;
            }
        }
    }
    Ok(ArnoldiResult {
        basis: BasisSequence::with_sketched(proc.blocks, proc.sketched)?,
        hess,
        beta,
        breakdown,
    })
}
