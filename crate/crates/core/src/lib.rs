//! Global GMRES solvers for sparse linear systems `A X = B` with
//! multiple right-hand sides, plus a randomized variant that replaces
//! Frobenius inner products with sketched ones.
//!
//! The crate is organized around a handful of small modules:
//!
//! - [`blockla`]: block vectors, CSR matrices, Frobenius products and
//!   the diamond combination of basis blocks;
//! - [`sketch`]: identity / Gaussian / sparse-sign sketching operators
//!   and measurement of their embedding distortion;
//! - [`arnoldi`]: the deterministic and sketched global Arnoldi
//!   processes;
//! - [`solver`]: the `gl_gmres` and `rgl_gmres` drivers, progressive
//!   Hessenberg least squares, and convergence-bound diagnostics;
//! - [`problems`]: convection-diffusion test matrices, seeded
//!   right-hand sides, and Matrix Market I/O.
//!
//! All types are immutable once constructed and all operations are pure
//! functions, so shared inputs can be used from several threads at once.
//! Randomness is fully seed-determined: sketch operators and generated
//! right-hand sides derive every column from its own counter-based
//! stream, which makes runs reproducible bit for bit.
//!
//! ```
//! use glgmres::blockla::BlockVector;
//! use glgmres::problems::{gen_convdiff2d, gen_rhs, Generator, ProblemSpec, RhsMode};
//! use glgmres::solver::{gl_gmres, SolverConfig};
//!
//! let a = gen_convdiff2d(16, 0.01, [1.0, 0.0]).unwrap();
//! let spec = ProblemSpec {
//!     generator: Generator::ConvDiff2d { grid: 16, nu: 0.01, wind: [1.0, 0.0] },
//!     rhs_mode: RhsMode::Manufactured,
//!     s: 4,
//!     seed: 7,
//! };
//! let (b, _xstar) = gen_rhs(&a, &spec).unwrap();
//! let x0 = BlockVector::zeros(a.n(), 4);
//! let cfg = SolverConfig { maxit: 300, tol: 1e-8, ..Default::default() };
//! let (_x, report) = gl_gmres(&a, &b, &x0, &cfg).unwrap();
//! assert!(report.converged);
//! ```

pub mod arnoldi;
pub mod blockla;
pub mod error;
mod kernel;
pub mod problems;
mod rng;
pub mod sketch;
pub mod solver;

pub use arnoldi::{
    gl_arnoldi, rgl_arnoldi, ArnoldiOptions, ArnoldiResult, HessenbergFactor, PhaseTimes,
};
pub use blockla::{
    diamond_combine, diamond_gram, frob_inner, frob_norm, spmm_block, BasisSequence, BlockVector,
    SparseMatrix,
};
pub use error::{Error, Result};
pub use sketch::{estimate_epsilon, sketched_inner, EmbeddingReport, SketchKind, SketchOperator};
pub use solver::{
    eigen_residual_bound, gl_gmres, gl_gmres_with_basis, hessenberg_lstsq, iterate_at,
    quasi_optimality_ratio, rgl_gmres, rgl_gmres_with_basis, EigenData, Method, QuasiOptimality,
    SketchConfig, SolveReport, SolverConfig,
};
