//! Shared fixtures and independent oracles for the integration suites.
//!
//! Everything here recomputes expected values through plain dense
//! linear algebra (nalgebra factorizations, explicit Gram matrices,
//! textbook reference implementations) and never reuses the library's
//! own Krylov or sketching paths.

#![allow(dead_code)]

use glgmres::blockla::{BlockVector, SparseMatrix};
use glgmres::SketchOperator;
use nalgebra::{DMatrix, DVector};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rand_distr::{Distribution, StandardNormal};

pub fn rel_err(got: f64, want: f64) -> f64 {
    let scale = want.abs().max(got.abs()).max(f64::MIN_POSITIVE);
    (got - want).abs() / scale
}

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

pub fn random_block(n: usize, s: usize, rng: &mut StdRng) -> BlockVector {
    BlockVector::from_fn(n, s, |_, _| StandardNormal.sample(rng))
}

/// Random sparse matrix `shift * I + G / sqrt(n * density)` with `G`
/// standard normal at the given density. The random part has spectral
/// radius about one, so `shift` controls how hard GMRES has to work.
pub fn random_sparse(n: usize, density: f64, shift: f64, rng: &mut StdRng) -> SparseMatrix {
    let scale = 1.0 / (n as f64 * density).sqrt();
    let mut triplets = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let diag = i == j;
            if diag || rng.random::<f64>() < density {
                let g: f64 = StandardNormal.sample(rng);
                let v = g * scale + if diag { shift } else { 0.0 };
                triplets.push((i, j, v));
            }
        }
    }
    SparseMatrix::from_triplets(n, &triplets).expect("valid triplets")
}

/// `min_z |rhs - M z|_2` via QR of the column-normalized basis; the
/// residual is the orthogonal-complement component of `rhs`.
pub fn dense_lstsq_residual(m: &DMatrix<f64>, rhs: &DVector<f64>) -> f64 {
    let mut scaled = m.clone();
    for mut c in scaled.column_iter_mut() {
        let norm = c.norm();
        if norm > 0.0 {
            c /= norm;
        }
    }
    let q = scaled.qr().q();
    let coeffs = q.transpose() * rhs;
    (rhs - q * coeffs).norm()
}

/// Per-step residual norms of the global least-squares problem solved
/// over the vectorized monomial Krylov images `{vec(A^i R0)}`.
///
/// Entry `k-1` is `min_{Z in K_k} |R0 - A Z|_F`, the value the solver's
/// step-`k` least-squares residual must match.
pub fn monomial_residuals(a: &SparseMatrix, r0: &BlockVector, kmax: usize) -> Vec<f64> {
    let n = r0.n();
    let s = r0.s();
    let rhs = DVector::from_column_slice(r0.data());
    let mut cols: Vec<DVector<f64>> = Vec::with_capacity(kmax);
    let mut power = r0.clone();
    for _ in 0..kmax {
        power = glgmres::spmm_block(a, &power).expect("conforming shapes");
        cols.push(DVector::from_column_slice(power.data()));
    }
    (1..=kmax)
        .map(|k| {
            let mut m = DMatrix::zeros(n * s, k);
            for (j, c) in cols.iter().take(k).enumerate() {
                m.column_mut(j).copy_from(c);
            }
            dense_lstsq_residual(&m, &rhs)
        })
        .collect()
}

/// Textbook single-vector GMRES (dense matvec, modified Gram-Schmidt,
/// Givens rotations). Returns the per-step least-squares residual
/// norms, used as the `s = 1` reference.
pub fn reference_gmres_history(
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    x0: &DVector<f64>,
    maxit: usize,
    tol: f64,
) -> Vec<f64> {
    let n = b.len();
    let r0 = b - a * x0;
    let beta = r0.norm();
    assert!(beta > 0.0);
    let mut v: Vec<DVector<f64>> = vec![&r0 / beta];
    let mut h_cols: Vec<Vec<f64>> = Vec::new();
    let mut cs: Vec<f64> = Vec::new();
    let mut sn: Vec<f64> = Vec::new();
    let mut g = vec![beta];
    let mut history = Vec::new();
    for j in 0..maxit.min(n) {
        let mut w = a * &v[j];
        let mut col = Vec::with_capacity(j + 2);
        for vi in v.iter().take(j + 1) {
            let h = w.dot(vi);
            w -= vi * h;
            col.push(h);
        }
        let h_next = w.norm();
        col.push(h_next);
        // rotate the new column
        for i in 0..j {
            let t = cs[i] * col[i] + sn[i] * col[i + 1];
            col[i + 1] = -sn[i] * col[i] + cs[i] * col[i + 1];
            col[i] = t;
        }
        let r = col[j].hypot(col[j + 1]);
        let (c, s) = if r == 0.0 { (1.0, 0.0) } else { (col[j] / r, col[j + 1] / r) };
        col[j] = r;
        cs.push(c);
        sn.push(s);
        g.push(-s * g[j]);
        g[j] *= c;
        history.push(g[j + 1].abs());
        h_cols.push(col);
        if h_next == 0.0 || g[j + 1].abs() <= tol * beta {
            break;
        }
        v.push(&w / h_next);
    }
    history
}

/// Stacks the columns of `r0` and of `A Q_i` for every basis block into
/// one wide block; this span contains every residual reachable over the
/// Krylov space the blocks generate.
pub fn residual_span(
    a: &SparseMatrix,
    r0: &BlockVector,
    blocks: &[BlockVector],
) -> BlockVector {
    let n = r0.n();
    let s = r0.s();
    let mut data = Vec::with_capacity(n * s * (blocks.len() + 1));
    data.extend_from_slice(r0.data());
    for q in blocks {
        let aq = glgmres::spmm_block(a, q).expect("conforming shapes");
        data.extend_from_slice(aq.data());
    }
    BlockVector::new(n, s * (blocks.len() + 1), data).expect("finite data")
}

/// Max observed distortion of sketched inner products over random pairs
/// in `range(v)`, computed from the exact and sketched Gram matrices of
/// the spanning columns.
pub fn bruteforce_distortion(
    theta: &SketchOperator,
    v: &BlockVector,
    pairs: usize,
    seed: u64,
) -> f64 {
    let vm = v.to_dmatrix();
    let sv = theta.apply(v).expect("conforming shapes").to_dmatrix();
    let exact = vm.transpose() * &vm;
    let sketched = sv.transpose() * &sv;
    let d = v.s();
    let mut rng = rng(seed);
    let mut worst = 0.0f64;
    for _ in 0..pairs {
        let a = DVector::from_fn(d, |_, _| StandardNormal.sample(&mut rng));
        let b = DVector::from_fn(d, |_, _| StandardNormal.sample(&mut rng));
        let xy = (a.transpose() * &exact * &b)[(0, 0)];
        let sxsy = (a.transpose() * &sketched * &b)[(0, 0)];
        let nx = (a.transpose() * &exact * &a)[(0, 0)].max(0.0).sqrt();
        let ny = (b.transpose() * &exact * &b)[(0, 0)].max(0.0).sqrt();
        if nx > 0.0 && ny > 0.0 {
            worst = worst.max((xy - sxsy).abs() / (nx * ny));
        }
    }
    worst
}

/// Extreme singular values.
pub fn sv_bounds(m: &DMatrix<f64>) -> (f64, f64) {
    let sv = m.clone().svd(false, false).singular_values;
    let smax = sv.iter().cloned().fold(0.0f64, f64::max);
    let smin = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    (smin, smax)
}
