//! Sketching operators and empirical measurement of their embedding
//! quality.
//!
//! An operator maps `n`-row blocks to `ell`-row blocks. Three kinds are
//! provided: the exact identity (for equivalence testing), dense
//! Gaussian with entries `N(0, 1/ell)`, and sparse-sign with `zeta`
//! scaled signs per column. Operators are seed-determined: the same
//! parameters always produce bit-identical output, column by column,
//! regardless of application order.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::blockla::{frob_inner, BlockVector};
use crate::error::{Error, Result};
use crate::rng::{keyed_rng, TAG_GAUSSIAN, TAG_SPARSE_SIGN};

/// Memory ceiling below which a Gaussian operator is materialized as a
/// dense `ell x n` matrix; larger operators regenerate their columns
/// from the keyed RNG at every application.
pub const DEFAULT_SKETCH_MEMORY_BUDGET: usize = 256 << 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SketchKind {
    Identity,
    Gaussian,
    SparseSign,
}

impl std::fmt::Display for SketchKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SketchKind::Identity => write!(f, "identity"),
            SketchKind::Gaussian => write!(f, "gaussian"),
            SketchKind::SparseSign => write!(f, "sparsesign"),
        }
    }
}

#[derive(Debug, Clone)]
enum Realization {
    Identity,
    /// Column-major `ell x n` Gaussian matrix.
    GaussianMaterialized(Vec<f64>),
    /// Columns regenerated from the keyed RNG on the fly.
    GaussianStreamed,
    /// Per input coordinate: `nnz_per_col` target rows and pre-scaled
    /// signs, rows sorted ascending.
    SparseSign {
        rows: Vec<u32>,
        signed_vals: Vec<f64>,
        nnz_per_col: usize,
    },
}

/// The sketching map, `n`-dimensional columns down (or up) to `ell`.
#[derive(Debug, Clone)]
pub struct SketchOperator {
    kind: SketchKind,
    ell: usize,
    n: usize,
    seed: u64,
    zeta: usize,
    realization: Realization,
}

impl SketchOperator {
    /// Builds an operator with the default materialization budget.
    ///
    /// `zeta` is the sparse-sign nonzero count per column and is ignored
    /// by the other kinds. The identity kind requires `ell == n`.
    pub fn new(kind: SketchKind, ell: usize, n: usize, seed: u64, zeta: usize) -> Result<Self> {
        Self::with_memory_budget(kind, ell, n, seed, zeta, DEFAULT_SKETCH_MEMORY_BUDGET)
    }

    pub fn with_memory_budget(
        kind: SketchKind,
        ell: usize,
        n: usize,
        seed: u64,
        zeta: usize,
        budget: usize,
    ) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("sketch input dimension is zero".into()));
        }
        if ell == 0 {
            return Err(Error::InvalidParameter("sketch dimension ell must be positive".into()));
        }
        let realization = match kind {
            SketchKind::Identity => {
                if ell != n {
                    return Err(Error::InvalidParameter(format!(
                        "identity sketch requires ell == n, got ell={ell}, n={n}"
                    )));
                }
                Realization::Identity
            }
            SketchKind::Gaussian => {
                if ell
                    .checked_mul(n)
                    .and_then(|e| e.checked_mul(8))
                    .is_some_and(|bytes| bytes <= budget)
                {
                    let mut data = Vec::with_capacity(ell * n);
                    for j in 0..n {
                        gaussian_column_into(seed, j as u64, ell, &mut data);
                    }
                    Realization::GaussianMaterialized(data)
                } else {
                    Realization::GaussianStreamed
                }
            }
            SketchKind::SparseSign => {
                if zeta == 0 {
                    return Err(Error::InvalidParameter(
                        "sparse-sign sketch requires zeta >= 1".into(),
                    ));
                }
                let nnz = zeta.min(ell);
                let scale = 1.0 / (zeta as f64).sqrt();
                let mut rows = Vec::with_capacity(nnz * n);
                let mut signed_vals = Vec::with_capacity(nnz * n);
                for j in 0..n {
                    let mut rng = keyed_rng(seed, TAG_SPARSE_SIGN, j as u64);
                    let mut picks = sample_distinct(&mut rng, ell, nnz);
                    picks.sort_unstable();
                    for r in picks {
                        let sign = if rng.random::<bool>() { scale } else { -scale };
                        rows.push(r as u32);
                        signed_vals.push(sign);
                    }
                }
                Realization::SparseSign {
                    rows,
                    signed_vals,
                    nnz_per_col: nnz,
                }
            }
        };
        Ok(Self {
            kind,
            ell,
            n,
            seed,
            zeta,
            realization,
        })
    }

    pub fn kind(&self) -> SketchKind {
        self.kind
    }

    pub fn ell(&self) -> usize {
        self.ell
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn zeta(&self) -> usize {
        self.zeta
    }

    /// Applies the operator: returns the `ell x s` block `Theta X`.
    pub fn apply(&self, x: &BlockVector) -> Result<BlockVector> {
        if x.n() != self.n {
            return Err(Error::ShapeMismatch {
                op: "apply_sketch",
                expected: format!("{} rows", self.n),
                found: format!("{} rows", x.n()),
            });
        }
        let s = x.s();
        match &self.realization {
            Realization::Identity => Ok(x.clone()),
            Realization::GaussianMaterialized(theta) => {
                let mut out = BlockVector::zeros(self.ell, s);
                for c in 0..s {
                    let xc = x.col(c);
                    let yc = &mut out.data_mut()[c * self.ell..(c + 1) * self.ell];
                    for (i, &xi) in xc.iter().enumerate() {
                        if xi != 0.0 {
                            let tc = &theta[i * self.ell..(i + 1) * self.ell];
                            crate::kernel::axpy(yc, xi, tc);
                        }
                    }
                }
                Ok(out)
            }
            Realization::GaussianStreamed => {
                let mut out = BlockVector::zeros(self.ell, s);
                let mut tc = Vec::with_capacity(self.ell);
                let ell = self.ell;
                for i in 0..self.n {
                    gaussian_column_into(self.seed, i as u64, ell, &mut tc);
                    let col = &tc[tc.len() - ell..];
                    for c in 0..s {
                        let xi = x.get(i, c);
                        if xi != 0.0 {
                            let yc = &mut out.data_mut()[c * ell..(c + 1) * ell];
                            crate::kernel::axpy(yc, xi, col);
                        }
                    }
                    tc.clear();
                }
                Ok(out)
            }
            Realization::SparseSign {
                rows,
                signed_vals,
                nnz_per_col,
            } => {
                let mut out = BlockVector::zeros(self.ell, s);
                let ell = self.ell;
                let z = *nnz_per_col;
                for c in 0..s {
                    let xc = x.col(c);
                    let yc = &mut out.data_mut()[c * ell..(c + 1) * ell];
                    for (i, &xi) in xc.iter().enumerate() {
                        if xi != 0.0 {
                            for k in i * z..(i + 1) * z {
                                yc[rows[k] as usize] += signed_vals[k] * xi;
                            }
                        }
                    }
                }
                Ok(out)
            }
        }
    }
}

fn gaussian_column_into(seed: u64, col: u64, ell: usize, out: &mut Vec<f64>) {
    let mut rng = keyed_rng(seed, TAG_GAUSSIAN, col);
    let scale = 1.0 / (ell as f64).sqrt();
    for _ in 0..ell {
        let g: f64 = StandardNormal.sample(&mut rng);
        out.push(g * scale);
    }
}

/// Floyd's algorithm: `count` distinct values from `0..bound`.
fn sample_distinct(rng: &mut impl Rng, bound: usize, count: usize) -> Vec<usize> {
    debug_assert!(count <= bound);
    let mut picked = Vec::with_capacity(count);
    for i in (bound - count)..bound {
        let r = rng.random_range(0..=i);
        if picked.contains(&r) {
            picked.push(i);
        } else {
            picked.push(r);
        }
    }
    picked
}

/// Sketched inner product `Trace(X^T Theta^T Theta Y)`, evaluated as the
/// Frobenius product of the two sketched blocks.
pub fn sketched_inner(theta: &SketchOperator, x: &BlockVector, y: &BlockVector) -> Result<f64> {
    let sx = theta.apply(x)?;
    let sy = theta.apply(y)?;
    frob_inner(&sx, &sy)
}

/// Measured distortion of a sketch on a given subspace.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingReport {
    /// Max deviation of sketched inner products from true ones over the
    /// tested subspace, relative to the product of norms.
    pub epsilon: f64,
    pub subspace_dim: usize,
    pub trials: usize,
}

/// Measures the embedding distortion of `theta` on `range(v)`, where the
/// columns of `v` must be linearly independent.
///
/// The estimate orthonormalizes `v`, sketches the orthonormal basis `Q`,
/// and reports `max(sigma_max(Theta Q)^2 - 1, 1 - sigma_min(Theta Q)^2)`.
/// Every pair `x, y` in the range then satisfies
/// `|<x,y> - <Theta x, Theta y>| <= epsilon * |x| * |y|` up to roundoff.
pub fn estimate_epsilon(theta: &SketchOperator, v: &BlockVector) -> Result<EmbeddingReport> {
    if v.n() != theta.n() {
        return Err(Error::ShapeMismatch {
            op: "estimate_epsilon",
            expected: format!("{} rows", theta.n()),
            found: format!("{} rows", v.n()),
        });
    }
    let d = v.s();
    let (q, rank) = orthonormal_range(&v.to_dmatrix(), RANK_TOL);
    if rank < d {
        return Err(Error::RankDeficient { rank, cols: d });
    }
    let epsilon = epsilon_of_orthonormal(theta, &q)?;
    Ok(EmbeddingReport {
        epsilon,
        subspace_dim: d,
        trials: 1,
    })
}

pub(crate) const RANK_TOL: f64 = 1e-10;

/// Orthonormal basis of the numerical column space of `m`, found by
/// column-pivoted QR with relative tolerance `tol` on the R diagonal.
pub(crate) fn orthonormal_range(m: &DMatrix<f64>, tol: f64) -> (DMatrix<f64>, usize) {
    let qr = m.clone().col_piv_qr();
    let q = qr.q();
    let r = qr.r();
    let kmax = r.nrows().min(r.ncols());
    let r00 = r[(0, 0)].abs();
    let mut rank = 0;
    for i in 0..kmax {
        if r[(i, i)].abs() > tol * r00 {
            rank += 1;
        } else {
            break;
        }
    }
    (q.columns(0, rank).into_owned(), rank)
}

/// Distortion of `theta` on the span of an orthonormal column set.
pub(crate) fn epsilon_of_orthonormal(theta: &SketchOperator, q: &DMatrix<f64>) -> Result<f64> {
    let d = q.ncols();
    let sq = theta.apply(&BlockVector::from_dmatrix(q))?;
    let sv = sq.to_dmatrix().svd(false, false).singular_values;
    let smax = sv.iter().cloned().fold(0.0f64, f64::max);
    let smin = if sv.len() < d {
        0.0
    } else {
        sv.iter().cloned().fold(f64::INFINITY, f64::min)
    };
    Ok((smax * smax - 1.0).max(1.0 - smin * smin).max(0.0))
}

/// Truncating variant used on spans that may be rank deficient: the
/// distortion is measured on the numerical column space of `m`.
pub(crate) fn epsilon_on_span(theta: &SketchOperator, m: &DMatrix<f64>) -> Result<(f64, usize)> {
    let (q, rank) = orthonormal_range(m, RANK_TOL);
    if rank == 0 {
        return Err(Error::RankDeficient { rank: 0, cols: m.ncols() });
    }
    let eps = epsilon_of_orthonormal(theta, &q)?;
    Ok((eps, rank))
}
