//! Convergence-bound diagnostics.
//!
//! For a diagonalizable system matrix, the residual norm after `k`
//! global GMRES steps is bounded through the eigendecomposition and a
//! Vandermonde Gram matrix in the eigenvalues. The sketched solver
//! satisfies the same bound inflated by `(1 + eps) / (1 - eps)`, where
//! `eps` is the measured embedding distortion on the subspace that
//! contains every reachable residual.

use nalgebra::DMatrix;

use crate::blockla::{block_sub, frob_norm, spmm_block, BlockVector, SparseMatrix};
use crate::error::{Error, Result};
use crate::sketch::{epsilon_on_span, SketchOperator};

/// Eigendecomposition data `A = Z diag(lambda) Z^{-1}` together with the
/// expansion `R0 = Z beta` of an initial residual, prepared by the
/// caller. Restricted to real eigenvalues.
#[derive(Debug, Clone)]
pub struct EigenData {
    eigenvalues: Vec<f64>,
    z_spectral_norm: f64,
    /// Row sums of squared expansion coefficients: `d_j = sum_i beta_{j,i}^2`.
    weights: Vec<f64>,
}

impl EigenData {
    /// Validates that `z` is numerically invertible and that the
    /// expansion coefficients reconstruct `r0` to 1e-10 relative.
    pub fn new(eigenvalues: Vec<f64>, z: DMatrix<f64>, r0: &BlockVector) -> Result<Self> {
        let n = r0.n();
        if z.nrows() != n || z.ncols() != n {
            return Err(Error::ShapeMismatch {
                op: "eigen_data",
                expected: format!("{n}x{n} eigenvector matrix"),
                found: format!("{}x{}", z.nrows(), z.ncols()),
            });
        }
        if eigenvalues.len() != n {
            return Err(Error::InvalidParameter(format!(
                "expected {n} eigenvalues, got {}",
                eigenvalues.len()
            )));
        }
        if !eigenvalues.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidParameter("non-finite eigenvalue".into()));
        }
        let r0m = r0.to_dmatrix();
        let lu = z.clone().lu();
        let coeffs = lu
            .solve(&r0m)
            .ok_or_else(|| Error::IllConditioned("eigenvector matrix is singular".into()))?;
        let recon = &z * &coeffs;
        let defect = (&recon - &r0m).norm();
        let scale = r0m.norm();
        if scale > 0.0 && defect > 1e-10 * scale {
            return Err(Error::IllConditioned(format!(
                "eigenvector matrix too ill-conditioned to expand the residual \
                 (reconstruction defect {defect:.2e})"
            )));
        }
        let z_spectral_norm = z
            .svd(false, false)
            .singular_values
            .iter()
            .cloned()
            .fold(0.0f64, f64::max);
        let weights = (0..n)
            .map(|j| (0..r0.s()).map(|i| coeffs[(j, i)].powi(2)).sum())
            .collect();
        Ok(Self {
            eigenvalues,
            z_spectral_norm,
            weights,
        })
    }

    pub fn n(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn spectral_norm(&self) -> f64 {
        self.z_spectral_norm
    }

    /// `sum_j d_j`, the squared Frobenius norm of the coefficients.
    pub fn weight_sum(&self) -> f64 {
        self.weights.iter().sum()
    }
}

const GRAM_COND_LIMIT: f64 = 1e14;

/// Upper bound on the squared residual Frobenius norm after `k` steps,
/// scaled by `gamma` (use 1 for the deterministic solver, the measured
/// `(1 + eps) / (1 - eps)` for the sketched one).
///
/// Fails with a conditioning error, naming the closest eigenvalue pair,
/// when the Vandermonde Gram matrix is numerically singular.
pub fn eigen_residual_bound(eig: &EigenData, k: usize, gamma: f64) -> Result<f64> {
    let n = eig.n();
    if k + 1 > n {
        return Err(Error::InvalidParameter(format!(
            "k + 1 = {} exceeds the dimension {n}",
            k + 1
        )));
    }
    if !(gamma > 0.0) {
        return Err(Error::InvalidParameter("gamma must be positive".into()));
    }
    // Vandermonde in the eigenvalues: column t holds lambda^t.
    let mut vand = DMatrix::zeros(n, k + 1);
    for j in 0..n {
        let mut p = 1.0;
        for t in 0..=k {
            vand[(j, t)] = p;
            p *= eig.eigenvalues[j];
        }
    }
    let mut gram = DMatrix::zeros(k + 1, k + 1);
    for p in 0..=k {
        for q in p..=k {
            let mut acc = 0.0;
            for j in 0..n {
                acc += eig.weights[j] * vand[(j, p)] * vand[(j, q)];
            }
            gram[(p, q)] = acc;
            gram[(q, p)] = acc;
        }
    }
    let svd = gram.clone().svd(false, false);
    let smax = svd.singular_values.iter().cloned().fold(0.0f64, f64::max);
    let smin = svd
        .singular_values
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    if !(smin > 0.0) || smax / smin >= GRAM_COND_LIMIT {
        let (i, j, gap) = closest_eigenvalue_pair(&eig.eigenvalues);
        return Err(Error::IllConditioned(format!(
            "Vandermonde Gram matrix is numerically singular (condition {:.2e}); \
             nearest eigenvalues lambda[{i}] = {} and lambda[{j}] = {} differ by {gap:.2e}",
            smax / smin,
            eig.eigenvalues[i],
            eig.eigenvalues[j],
        )));
    }
    let mut e1 = DMatrix::zeros(k + 1, 1);
    e1[(0, 0)] = 1.0;
    let sol = gram
        .lu()
        .solve(&e1)
        .ok_or_else(|| Error::IllConditioned("Vandermonde Gram matrix is singular".into()))?;
    let denom = sol[(0, 0)];
    if !(denom > 0.0) {
        return Err(Error::IllConditioned(
            "Vandermonde Gram matrix is not positive definite".into(),
        ));
    }
    Ok(gamma * eig.z_spectral_norm.powi(2) / denom)
}

fn closest_eigenvalue_pair(vals: &[f64]) -> (usize, usize, f64) {
    let mut order: Vec<usize> = (0..vals.len()).collect();
    order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
    let mut best = (order[0], order[1], f64::INFINITY);
    for w in order.windows(2) {
        let gap = (vals[w[1]] - vals[w[0]]).abs();
        if gap < best.2 {
            best = (w[0].min(w[1]), w[0].max(w[1]), gap);
        }
    }
    best
}

/// Measured quasi-optimality of a sketched iterate against the
/// deterministic one computed over identical Krylov data.
#[derive(Debug, Clone, PartialEq)]
pub struct QuasiOptimality {
    /// `|B - A X_rgl|_F^2 / |B - A X_gl|_F^2`.
    pub ratio: f64,
    /// `(1 + eps) / (1 - eps)`; infinite when the bound does not apply.
    pub bound: f64,
    /// Distortion measured on the span of the initial-residual columns
    /// and the images `A Q_i` of the basis blocks.
    pub epsilon_hat: f64,
    /// False in the semi-norm regime `eps >= 1`, where the sketched
    /// minimizer carries no residual guarantee.
    pub bound_applicable: bool,
}

/// Compares paired iterates and evaluates the sketched-residual bound
/// with the distortion measured on the realized residual subspace.
///
/// `krylov_blocks` are the sketched solver's basis blocks `Q_1..Q_k`;
/// the distortion is measured on `span{R0 columns, (A Q_i) columns}`,
/// which contains every residual reachable over that Krylov space.
pub fn quasi_optimality_ratio(
    a: &SparseMatrix,
    b: &BlockVector,
    x0: &BlockVector,
    x_gl: &BlockVector,
    x_rgl: &BlockVector,
    theta: &SketchOperator,
    krylov_blocks: &[BlockVector],
) -> Result<QuasiOptimality> {
    let r_gl = block_sub(b, &spmm_block(a, x_gl)?)?;
    let r_rgl = block_sub(b, &spmm_block(a, x_rgl)?)?;
    let n_gl = frob_norm(&r_gl);
    let n_rgl = frob_norm(&r_rgl);
    let ratio = if n_gl == 0.0 {
        if n_rgl == 0.0 {
            1.0
        } else {
            f64::INFINITY
        }
    } else {
        (n_rgl / n_gl).powi(2)
    };

    let r0 = block_sub(b, &spmm_block(a, x0)?)?;
    let n = a.n();
    let s = b.s();
    let mut span = DMatrix::zeros(n, s * (krylov_blocks.len() + 1));
    for c in 0..s {
        span.column_mut(c).copy_from_slice(r0.col(c));
    }
    for (i, q) in krylov_blocks.iter().enumerate() {
        let aq = spmm_block(a, q)?;
        for c in 0..s {
            span.column_mut((i + 1) * s + c).copy_from_slice(aq.col(c));
        }
    }
    let (epsilon_hat, _rank) = epsilon_on_span(theta, &span)?;
    let bound_applicable = epsilon_hat < 1.0;
    let bound = if bound_applicable {
        (1.0 + epsilon_hat) / (1.0 - epsilon_hat)
    } else {
        f64::INFINITY
    };
    Ok(QuasiOptimality {
        ratio,
        bound,
        epsilon_hat,
        bound_applicable,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blockla::BlockVector;
    use crate::sketch::SketchKind;

    fn diag_matrix(vals: &[f64]) -> SparseMatrix {
        let trips: Vec<_> = vals.iter().enumerate().map(|(i, &v)| (i, i, v)).collect();
        SparseMatrix::from_triplets(vals.len(), &trips).unwrap()
    }

    #[test]
    fn bound_at_step_zero_is_closed_form() {
        // k = 0: the Vandermonde reduces to the all-ones column, so the
        // bound is |Z|_2^2 * sum_j d_j.
        let n = 6;
        let r0 = BlockVector::from_fn(n, 2, |i, j| (i + j) as f64 - 2.5);
        let eig = EigenData::new(
            (1..=n).map(|i| i as f64).collect(),
            DMatrix::identity(n, n),
            &r0,
        )
        .unwrap();
        let bound = eigen_residual_bound(&eig, 0, 1.0).unwrap();
        let expect = eig.weight_sum(); // |Z|_2 = 1
        assert!((bound - expect).abs() <= 1e-10 * expect);
        // and with Z = I the weights are exactly the squared residual entries
        assert!((expect - frob_norm(&r0).powi(2)).abs() <= 1e-10 * expect);
    }

    #[test]
    fn gamma_scales_linearly() {
        let n = 5;
        let r0 = BlockVector::from_fn(n, 1, |i, _| 1.0 + i as f64);
        let eig = EigenData::new(
            vec![1.0, 2.0, 3.0, 4.0, 5.0],
            DMatrix::identity(n, n),
            &r0,
        )
        .unwrap();
        let b1 = eigen_residual_bound(&eig, 2, 1.0).unwrap();
        let b3 = eigen_residual_bound(&eig, 2, 3.0).unwrap();
        assert!((b3 - 3.0 * b1).abs() <= 1e-12 * b3);
    }

    #[test]
    fn coincident_eigenvalues_are_reported() {
        let n = 4;
        let r0 = BlockVector::from_fn(n, 1, |i, _| 1.0 + i as f64);
        let eig = EigenData::new(
            vec![1.0, 1.0 + 1e-16, 7.0, 9.0],
            DMatrix::identity(n, n),
            &r0,
        )
        .unwrap();
        let err = eigen_residual_bound(&eig, 3, 1.0).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("lambda[0]") && msg.contains("lambda[1]"), "{msg}");
    }

    #[test]
    fn k_too_large_rejected() {
        let n = 3;
        let r0 = BlockVector::from_fn(n, 1, |i, _| 1.0 + i as f64);
        let eig =
            EigenData::new(vec![1.0, 2.0, 3.0], DMatrix::identity(n, n), &r0).unwrap();
        assert!(eigen_residual_bound(&eig, 3, 1.0).is_err());
    }

    #[test]
    fn identity_sketch_gives_unit_bound() {
        let n = 10;
        let a = diag_matrix(&(1..=n).map(|i| i as f64).collect::<Vec<_>>());
        let b = BlockVector::from_fn(n, 2, |i, j| ((i * 5 + j) % 7) as f64 + 0.5);
        let x0 = BlockVector::zeros(n, 2);
        let theta = SketchOperator::new(SketchKind::Identity, n, n, 0, 0).unwrap();
        let cfg = crate::solver::SolverConfig {
            maxit: 4,
            tol: 1e-30,
            ..Default::default()
        };
        let (x, _, data) = crate::solver::gl_gmres_with_basis(&a, &b, &x0, &cfg).unwrap();
        let q = quasi_optimality_ratio(
            &a,
            &b,
            &x0,
            &x,
            &x,
            &theta,
            &data.basis.blocks()[..data.hess.steps()],
        )
        .unwrap();
        assert!(q.epsilon_hat <= 1e-10);
        assert!((q.ratio - 1.0).abs() <= 1e-12);
        assert!(q.bound >= 1.0 && q.bound <= 1.0 + 1e-9);
        assert!(q.bound_applicable);
    }
}
