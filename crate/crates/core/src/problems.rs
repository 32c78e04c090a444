//! Test-problem generation and matrix/block I/O.
//!
//! `gen_convdiff2d` builds the five-point finite-difference
//! discretization of `-nu * lap(u) + w . grad(u)` on the unit square
//! with eliminated Dirichlet boundary; it is the desk-scale stand-in
//! for externally generated benchmark matrices. Matrices and dense
//! blocks round-trip through the Matrix Market exchange format.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use rand_distr::{Distribution, StandardNormal};

use crate::blockla::{BlockVector, SparseMatrix};
use crate::error::{Error, Result};
use crate::rng::{keyed_rng, TAG_RHS, TAG_XSTAR};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RhsMode {
    /// Seeded random right-hand side; no reference solution.
    RandomSeeded,
    /// Seeded random solution `X*` with `B = A X*`, so the exact error
    /// is measurable.
    Manufactured,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Generator {
    ConvDiff2d {
        grid: usize,
        nu: f64,
        wind: [f64; 2],
    },
    MatrixMarketFile(PathBuf),
}

/// A full problem description: matrix source plus right-hand-side
/// recipe. Building it yields `(A, B, X*)` with `X*` present in
/// manufactured mode.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    pub generator: Generator,
    pub rhs_mode: RhsMode,
    pub s: usize,
    pub seed: u64,
}

impl Default for ProblemSpec {
    fn default() -> Self {
        Self {
            generator: Generator::ConvDiff2d {
                grid: 32,
                nu: 0.01,
                wind: [1.0, 0.0],
            },
            rhs_mode: RhsMode::RandomSeeded,
            s: 1,
            seed: 0,
        }
    }
}

impl ProblemSpec {
    pub fn build(&self) -> Result<(SparseMatrix, BlockVector, Option<BlockVector>)> {
        let a = match &self.generator {
            Generator::ConvDiff2d { grid, nu, wind } => gen_convdiff2d(*grid, *nu, *wind)?,
            Generator::MatrixMarketFile(path) => mm_read(path)?,
        };
        let (b, xstar) = gen_rhs(&a, self)?;
        Ok((a, b, xstar))
    }
}

/// Five-point convection-diffusion operator on a `g x g` interior grid
/// of the unit square (`n = g^2`, `h = 1/(g+1)`); centered differences
/// for the convection term, nonsymmetric whenever `wind != 0`.
///
/// Emits a warning when the mesh Peclet number `|w| h / (2 nu)` exceeds
/// one, where centered differences lose stability.
pub fn gen_convdiff2d(g: usize, nu: f64, wind: [f64; 2]) -> Result<SparseMatrix> {
    if g < 3 {
        return Err(Error::InvalidParameter(format!(
            "grid side must be at least 3, got {g}"
        )));
    }
    if !(nu > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "viscosity must be positive, got {nu}"
        )));
    }
    if !wind.iter().all(|w| w.is_finite()) {
        return Err(Error::InvalidParameter("wind must be finite".into()));
    }
    let h = 1.0 / (g as f64 + 1.0);
    let peclet = wind[0].abs().max(wind[1].abs()) * h / (2.0 * nu);
    if peclet > 1.0 {
        log::warn!(
            "mesh Peclet number {peclet:.3} exceeds 1; centered differences may oscillate"
        );
    }
    let n = g * g;
    let diag = 4.0 * nu / (h * h);
    let off = -nu / (h * h);
    let cx = wind[0] / (2.0 * h);
    let cy = wind[1] / (2.0 * h);

    let mut row_ptr = Vec::with_capacity(n + 1);
    let mut col_idx = Vec::with_capacity(5 * n);
    let mut vals = Vec::with_capacity(5 * n);
    row_ptr.push(0);
    for iy in 0..g {
        for ix in 0..g {
            let i = ix + iy * g;
            if iy > 0 {
                col_idx.push(i - g);
                vals.push(off - cy);
            }
            if ix > 0 {
                col_idx.push(i - 1);
                vals.push(off - cx);
            }
            col_idx.push(i);
            vals.push(diag);
            if ix + 1 < g {
                col_idx.push(i + 1);
                vals.push(off + cx);
            }
            if iy + 1 < g {
                col_idx.push(i + g);
                vals.push(off + cy);
            }
            row_ptr.push(col_idx.len());
        }
    }
    SparseMatrix::from_csr(n, row_ptr, col_idx, vals)
}

/// Generates the right-hand side block (and the reference solution in
/// manufactured mode). Columns are keyed individually by
/// `(seed, column)`, so the first `s` columns are identical across runs
/// that only differ in `s`.
pub fn gen_rhs(
    a: &SparseMatrix,
    spec: &ProblemSpec,
) -> Result<(BlockVector, Option<BlockVector>)> {
    if spec.s < 1 {
        return Err(Error::InvalidParameter("s must be at least 1".into()));
    }
    let n = a.n();
    match spec.rhs_mode {
        RhsMode::RandomSeeded => {
            let b = random_block(n, spec.s, spec.seed, TAG_RHS);
            Ok((b, None))
        }
        RhsMode::Manufactured => {
            let xstar = random_block(n, spec.s, spec.seed, TAG_XSTAR);
            let b = crate::blockla::spmm_block(a, &xstar)?;
            Ok((b, Some(xstar)))
        }
    }
}

fn random_block(n: usize, s: usize, seed: u64, tag: u64) -> BlockVector {
    let mut data = Vec::with_capacity(n * s);
    for c in 0..s {
        let mut rng = keyed_rng(seed, tag, c as u64);
        for _ in 0..n {
            let v: f64 = StandardNormal.sample(&mut rng);
            data.push(v);
        }
    }
    BlockVector::new(n, s, data).expect("normal samples are finite")
}

// ---------------------------------------------------------------------
// Matrix Market I/O
// ---------------------------------------------------------------------

struct MmHeader {
    coordinate: bool,
    symmetric: bool,
}

fn parse_header(line: &str) -> std::result::Result<MmHeader, String> {
    let fields: Vec<&str> = line.split_whitespace().collect();
    if fields.len() != 5 || fields[0] != "%%MatrixMarket" {
        return Err("header must be '%%MatrixMarket matrix <format> real <symmetry>'".into());
    }
    if fields[1] != "matrix" {
        return Err(format!("unsupported object '{}'", fields[1]));
    }
    let coordinate = match fields[2] {
        "coordinate" => true,
        "array" => false,
        other => return Err(format!("unsupported format '{other}'")),
    };
    if fields[3] != "real" {
        return Err(format!("unsupported field '{}', only real is supported", fields[3]));
    }
    let symmetric = match fields[4] {
        "general" => false,
        "symmetric" => true,
        other => return Err(format!("unsupported symmetry '{other}'")),
    };
    Ok(MmHeader {
        coordinate,
        symmetric,
    })
}

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        line,
        msg: msg.into(),
    }
}

struct NumberedLines<R> {
    reader: R,
    line: usize,
}

impl<R: BufRead> NumberedLines<R> {
    /// The raw first line; the banner starts with `%%` and must not be
    /// skipped as a comment.
    fn header_line(&mut self, buf: &mut String) -> Result<Option<usize>> {
        buf.clear();
        if self.reader.read_line(buf)? == 0 {
            return Ok(None);
        }
        self.line += 1;
        Ok(Some(self.line))
    }

    fn next_content_line(&mut self, buf: &mut String) -> Result<Option<usize>> {
        loop {
            buf.clear();
            let read = self.reader.read_line(buf)?;
            if read == 0 {
                return Ok(None);
            }
            self.line += 1;
            let trimmed = buf.trim();
            if trimmed.is_empty() || trimmed.starts_with('%') {
                continue;
            }
            return Ok(Some(self.line));
        }
    }
}

/// Reads a square sparse matrix from a Matrix Market coordinate file
/// (`real`, `general` or `symmetric`). Symmetric storage is expanded to
/// general form; the diagonal is not duplicated.
pub fn mm_read(path: impl AsRef<Path>) -> Result<SparseMatrix> {
    let file = File::open(path.as_ref())?;
    let mut lines = NumberedLines {
        reader: BufReader::new(file),
        line: 0,
    };
    let mut buf = String::new();

    let header_line = lines
        .header_line(&mut buf)?
        .ok_or_else(|| parse_err(1, "empty file"))?;
    let header = parse_header(buf.trim()).map_err(|msg| parse_err(header_line, msg))?;
    if !header.coordinate {
        return Err(parse_err(
            header_line,
            "expected a coordinate file for a sparse matrix",
        ));
    }

    let size_line = lines
        .next_content_line(&mut buf)?
        .ok_or_else(|| parse_err(lines.line + 1, "missing size line"))?;
    let dims: Vec<&str> = buf.split_whitespace().collect();
    if dims.len() != 3 {
        return Err(parse_err(size_line, "size line must be 'rows cols nnz'"));
    }
    let m: usize = dims[0]
        .parse()
        .map_err(|_| parse_err(size_line, format!("bad row count '{}'", dims[0])))?;
    let ncols: usize = dims[1]
        .parse()
        .map_err(|_| parse_err(size_line, format!("bad column count '{}'", dims[1])))?;
    let nnz: usize = dims[2]
        .parse()
        .map_err(|_| parse_err(size_line, format!("bad nonzero count '{}'", dims[2])))?;
    if m != ncols {
        return Err(parse_err(
            size_line,
            format!("matrix must be square, got {m}x{ncols}"),
        ));
    }

    let mut triplets: Vec<(usize, usize, f64)> = Vec::with_capacity(nnz);
    let mut seen = std::collections::HashMap::new();
    for _ in 0..nnz {
        let entry_line = lines
            .next_content_line(&mut buf)?
            .ok_or_else(|| parse_err(lines.line + 1, "unexpected end of file"))?;
        let fields: Vec<&str> = buf.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(parse_err(entry_line, "entry must be 'row col value'"));
        }
        let i: usize = fields[0]
            .parse()
            .map_err(|_| parse_err(entry_line, format!("bad row index '{}'", fields[0])))?;
        let j: usize = fields[1]
            .parse()
            .map_err(|_| parse_err(entry_line, format!("bad column index '{}'", fields[1])))?;
        let v: f64 = fields[2]
            .parse()
            .map_err(|_| parse_err(entry_line, format!("non-real value '{}'", fields[2])))?;
        if i < 1 || i > m || j < 1 || j > m {
            return Err(parse_err(
                entry_line,
                format!("index ({i}, {j}) out of range for a {m}x{m} matrix"),
            ));
        }
        if !v.is_finite() {
            return Err(parse_err(entry_line, format!("non-finite value '{}'", fields[2])));
        }
        if header.symmetric && j > i {
            return Err(parse_err(
                entry_line,
                "symmetric files must store the lower triangle only",
            ));
        }
        if let Some(prev) = seen.insert((i, j), entry_line) {
            return Err(parse_err(
                entry_line,
                format!("duplicate entry ({i}, {j}), first seen at line {prev}"),
            ));
        }
        triplets.push((i - 1, j - 1, v));
        if header.symmetric && i != j {
            triplets.push((j - 1, i - 1, v));
        }
    }
    if lines.next_content_line(&mut buf)?.is_some() {
        return Err(parse_err(
            lines.line,
            format!("more than the declared {nnz} entries"),
        ));
    }
    SparseMatrix::from_triplets(m, &triplets)
}

/// Writes a sparse matrix as Matrix Market coordinate/real/general with
/// canonically sorted entries and 17 significant digits, so a read-back
/// reproduces the matrix exactly.
pub fn mm_write(path: impl AsRef<Path>, a: &SparseMatrix) -> Result<()> {
    let file = File::create(path.as_ref())?;
    let mut w = BufWriter::new(file);
    writeln!(w, "%%MatrixMarket matrix coordinate real general")?;
    writeln!(w, "{} {} {}", a.n(), a.n(), a.nnz())?;
    for (i, j, v) in a.triplets() {
        writeln!(w, "{} {} {:.16e}", i + 1, j + 1, v)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a dense block from a Matrix Market array file (column-major,
/// real, general).
pub fn mm_read_block(path: impl AsRef<Path>) -> Result<BlockVector> {
    let file = File::open(path.as_ref())?;
    let mut lines = NumberedLines {
        reader: BufReader::new(file),
        line: 0,
    };
    let mut buf = String::new();
    let header_line = lines
        .header_line(&mut buf)?
        .ok_or_else(|| parse_err(1, "empty file"))?;
    let header = parse_header(buf.trim()).map_err(|msg| parse_err(header_line, msg))?;
    if header.coordinate || header.symmetric {
        return Err(parse_err(
            header_line,
            "expected an array/general file for a dense block",
        ));
    }
    let size_line = lines
        .next_content_line(&mut buf)?
        .ok_or_else(|| parse_err(lines.line + 1, "missing size line"))?;
    let dims: Vec<&str> = buf.split_whitespace().collect();
    if dims.len() != 2 {
        return Err(parse_err(size_line, "size line must be 'rows cols'"));
    }
    let n: usize = dims[0]
        .parse()
        .map_err(|_| parse_err(size_line, format!("bad row count '{}'", dims[0])))?;
    let s: usize = dims[1]
        .parse()
        .map_err(|_| parse_err(size_line, format!("bad column count '{}'", dims[1])))?;
    let mut data = Vec::with_capacity(n * s);
    for _ in 0..n * s {
        let entry_line = lines
            .next_content_line(&mut buf)?
            .ok_or_else(|| parse_err(lines.line + 1, "unexpected end of file"))?;
        let v: f64 = buf
            .trim()
            .parse()
            .map_err(|_| parse_err(entry_line, format!("non-real value '{}'", buf.trim())))?;
        data.push(v);
    }
    if lines.next_content_line(&mut buf)?.is_some() {
        return Err(parse_err(lines.line, "more entries than declared"));
    }
    BlockVector::new(n, s, data)
}

/// Writes a dense block as a Matrix Market array file (column-major).
pub fn mm_write_block(path: impl AsRef<Path>, x: &BlockVector) -> Result<()> {
    let file = File::create(path.as_ref())?;
    let mut w = BufWriter::new(file);
    writeln!(w, "%%MatrixMarket matrix array real general")?;
    writeln!(w, "{} {}", x.n(), x.s())?;
    for v in x.data() {
        writeln!(w, "{v:.16e}")?;
    }
    w.flush()?;
    Ok(())
}
