//! Block linear algebra: dense block vectors, sparse matrices in
//! compressed-row form, Frobenius inner products, and the diamond
//! product that combines basis blocks with scalar coefficients.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::kernel;

/// Dense `n x s` real block, column-major. Holds solutions, right-hand
/// sides, residuals, and Krylov basis blocks.
///
/// Blocks are immutable through the public API; every operation returns
/// a fresh block, so shared references are safe across threads.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockVector {
    n: usize,
    s: usize,
    data: Vec<f64>,
}

impl BlockVector {
    /// Builds a block from column-major data. Rejects empty shapes,
    /// length mismatches, and non-finite entries.
    pub fn new(n: usize, s: usize, data: Vec<f64>) -> Result<Self> {
        if n == 0 || s == 0 {
            return Err(Error::InvalidParameter(format!(
                "block dimensions must be positive, got {n}x{s}"
            )));
        }
        if data.len() != n * s {
            return Err(Error::InvalidParameter(format!(
                "block data length {} does not match {n}x{s}",
                data.len()
            )));
        }
        if !data.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidParameter(
                "block contains a non-finite entry".into(),
            ));
        }
        Ok(Self { n, s, data })
    }

    pub fn zeros(n: usize, s: usize) -> Self {
        Self {
            n,
            s,
            data: vec![0.0; n * s],
        }
    }

    pub fn from_fn(n: usize, s: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(n * s);
        for j in 0..s {
            for i in 0..n {
                data.push(f(i, j));
            }
        }
        Self { n, s, data }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn s(&self) -> usize {
        self.s
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn col(&self, j: usize) -> &[f64] {
        &self.data[j * self.n..(j + 1) * self.n]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[j * self.n + i]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.n == other.n && self.s == other.s
    }

    pub fn to_dmatrix(&self) -> DMatrix<f64> {
        DMatrix::from_column_slice(self.n, self.s, &self.data)
    }

    pub fn from_dmatrix(m: &DMatrix<f64>) -> Self {
        Self {
            n: m.nrows(),
            s: m.ncols(),
            data: m.as_slice().to_vec(),
        }
    }

    /// `self + alpha * other`, shapes already checked by the caller.
    pub(crate) fn axpy_in_place(&mut self, alpha: f64, other: &Self) {
        kernel::axpy(&mut self.data, alpha, &other.data);
    }

    pub(crate) fn scaled(&self, alpha: f64) -> Self {
        let mut out = self.clone();
        kernel::scale(&mut out.data, alpha);
        out
    }

    pub(crate) fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }
}

/// `x - y` as a new block.
pub fn block_sub(x: &BlockVector, y: &BlockVector) -> Result<BlockVector> {
    check_same_shape("block_sub", x, y)?;
    let mut out = x.clone();
    out.axpy_in_place(-1.0, y);
    Ok(out)
}

/// `x + y` as a new block.
pub fn block_add(x: &BlockVector, y: &BlockVector) -> Result<BlockVector> {
    check_same_shape("block_add", x, y)?;
    let mut out = x.clone();
    out.axpy_in_place(1.0, y);
    Ok(out)
}

fn check_same_shape(op: &'static str, x: &BlockVector, y: &BlockVector) -> Result<()> {
    if !x.same_shape(y) {
        return Err(Error::ShapeMismatch {
            op,
            expected: format!("{}x{}", x.n(), x.s()),
            found: format!("{}x{}", y.n(), y.s()),
        });
    }
    Ok(())
}

/// Frobenius inner product `Trace(X^T Y)`, the entry-wise dot product of
/// two equally shaped blocks. Symmetric in its arguments.
pub fn frob_inner(x: &BlockVector, y: &BlockVector) -> Result<f64> {
    check_same_shape("frob_inner", x, y)?;
    Ok(kernel::dot(x.data(), y.data()))
}

/// Frobenius norm `sqrt(Trace(X^T X))`.
pub fn frob_norm(x: &BlockVector) -> f64 {
    kernel::dot(x.data(), x.data()).sqrt()
}

/// Square sparse real matrix in compressed-row form. Column indices are
/// strictly increasing within each row and all values are finite.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    vals: Vec<f64>,
}

impl SparseMatrix {
    pub fn from_csr(
        n: usize,
        row_ptr: Vec<usize>,
        col_idx: Vec<usize>,
        vals: Vec<f64>,
    ) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("matrix dimension must be positive".into()));
        }
        if row_ptr.len() != n + 1 || row_ptr[0] != 0 || row_ptr[n] != col_idx.len() {
            return Err(Error::InvalidParameter("malformed row pointers".into()));
        }
        if col_idx.len() != vals.len() {
            return Err(Error::InvalidParameter(
                "column index and value arrays differ in length".into(),
            ));
        }
        for i in 0..n {
            if row_ptr[i] > row_ptr[i + 1] {
                return Err(Error::InvalidParameter(format!(
                    "row pointers decrease at row {i}"
                )));
            }
            let row = &col_idx[row_ptr[i]..row_ptr[i + 1]];
            for w in row.windows(2) {
                if w[0] >= w[1] {
                    return Err(Error::InvalidParameter(format!(
                        "column indices not strictly increasing in row {i}"
                    )));
                }
            }
            if let Some(&last) = row.last() {
                if last >= n {
                    return Err(Error::InvalidParameter(format!(
                        "column index {last} out of range in row {i}"
                    )));
                }
            }
        }
        if !vals.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidParameter(
                "matrix contains a non-finite value".into(),
            ));
        }
        Ok(Self {
            n,
            row_ptr,
            col_idx,
            vals,
        })
    }

    /// Builds from (row, col, value) triplets; duplicates are rejected.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        let mut sorted: Vec<_> = triplets.to_vec();
        sorted.sort_unstable_by_key(|&(r, c, _)| (r, c));
        for w in sorted.windows(2) {
            if w[0].0 == w[1].0 && w[0].1 == w[1].1 {
                return Err(Error::InvalidParameter(format!(
                    "duplicate entry at ({}, {})",
                    w[0].0, w[0].1
                )));
            }
        }
        let mut row_ptr = vec![0usize; n + 1];
        let mut col_idx = Vec::with_capacity(sorted.len());
        let mut vals = Vec::with_capacity(sorted.len());
        for &(r, c, v) in &sorted {
            if r >= n || c >= n {
                return Err(Error::InvalidParameter(format!(
                    "entry ({r}, {c}) out of range for dimension {n}"
                )));
            }
            row_ptr[r + 1] += 1;
            col_idx.push(c);
            vals.push(v);
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        Self::from_csr(n, row_ptr, col_idx, vals)
    }

    pub fn identity(n: usize) -> Self {
        Self {
            n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            vals: vec![1.0; n],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// Column indices and values of row `i`.
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let lo = self.row_ptr[i];
        let hi = self.row_ptr[i + 1];
        (&self.col_idx[lo..hi], &self.vals[lo..hi])
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n).flat_map(move |i| {
            let (cols, vals) = self.row(i);
            cols.iter().zip(vals).map(move |(&c, &v)| (i, c, v))
        })
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for (i, j, v) in self.triplets() {
            m[(i, j)] = v;
        }
        m
    }
}

/// Sparse matrix times block: `A X`, column by column.
pub fn spmm_block(a: &SparseMatrix, x: &BlockVector) -> Result<BlockVector> {
    if a.n() != x.n() {
        return Err(Error::ShapeMismatch {
            op: "spmm_block",
            expected: format!("{} rows", a.n()),
            found: format!("{} rows", x.n()),
        });
    }
    let n = a.n();
    let s = x.s();
    let mut out = BlockVector::zeros(n, s);
    for c in 0..s {
        let xc = x.col(c);
        let yc = &mut out.data_mut()[c * n..(c + 1) * n];
        for i in 0..n {
            let lo = a.row_ptr[i];
            let hi = a.row_ptr[i + 1];
            let mut acc = 0.0;
            for k in lo..hi {
                acc += a.vals[k] * xc[a.col_idx[k]];
            }
            yc[i] = acc;
        }
    }
    Ok(out)
}

/// Ordered Krylov basis blocks, optionally paired with their sketched
/// images (one `ell x s` block per full block, index for index).
#[derive(Debug, Clone)]
pub struct BasisSequence {
    blocks: Vec<BlockVector>,
    sketched: Option<Vec<BlockVector>>,
}

impl BasisSequence {
    pub fn new(blocks: Vec<BlockVector>) -> Result<Self> {
        check_uniform(&blocks)?;
        Ok(Self {
            blocks,
            sketched: None,
        })
    }

    pub fn with_sketched(blocks: Vec<BlockVector>, sketched: Vec<BlockVector>) -> Result<Self> {
        check_uniform(&blocks)?;
        check_uniform(&sketched)?;
        if sketched.len() != blocks.len() {
            return Err(Error::InvalidParameter(format!(
                "sketched block count {} does not match full block count {}",
                sketched.len(),
                blocks.len()
            )));
        }
        if let (Some(b), Some(s)) = (blocks.first(), sketched.first()) {
            if b.s() != s.s() {
                return Err(Error::InvalidParameter(
                    "sketched blocks have a different column count".into(),
                ));
            }
        }
        Ok(Self {
            blocks,
            sketched: Some(sketched),
        })
    }

    pub fn blocks(&self) -> &[BlockVector] {
        &self.blocks
    }

    pub fn sketched(&self) -> Option<&[BlockVector]> {
        self.sketched.as_deref()
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }
}

fn check_uniform(blocks: &[BlockVector]) -> Result<()> {
    if let Some(first) = blocks.first() {
        if !blocks.iter().all(|b| b.same_shape(first)) {
            return Err(Error::InvalidParameter(
                "basis blocks do not share a common shape".into(),
            ));
        }
    }
    Ok(())
}

/// Scalar-coefficient diamond product: `sum_i z_i * V_i` over a basis.
/// This is the form the solvers consume when assembling iterates.
pub fn diamond_combine(blocks: &[BlockVector], z: &[f64]) -> Result<BlockVector> {
    if blocks.is_empty() {
        return Err(Error::InvalidParameter(
            "diamond_combine needs at least one block".into(),
        ));
    }
    if blocks.len() != z.len() {
        return Err(Error::ShapeMismatch {
            op: "diamond_combine",
            expected: format!("{} coefficients", blocks.len()),
            found: format!("{}", z.len()),
        });
    }
    check_uniform(blocks)?;
    let mut out = BlockVector::zeros(blocks[0].n(), blocks[0].s());
    for (zi, vi) in z.iter().zip(blocks) {
        out.axpy_in_place(*zi, vi);
    }
    Ok(out)
}

/// General diamond product: the matrix of pairwise Frobenius inner
/// products between two block sequences. Exposed as a testing utility;
/// the solvers only ever use the scalar-coefficient form above.
pub fn diamond_gram(ys: &[BlockVector], zs: &[BlockVector]) -> Result<DMatrix<f64>> {
    check_uniform(ys)?;
    check_uniform(zs)?;
    if let (Some(y), Some(z)) = (ys.first(), zs.first()) {
        check_same_shape("diamond_gram", y, z)?;
    }
    let mut out = DMatrix::zeros(ys.len(), zs.len());
    for (i, y) in ys.iter().enumerate() {
        for (j, z) in zs.iter().enumerate() {
            out[(i, j)] = frob_inner(y, z)?;
        }
    }
    Ok(out)
}
