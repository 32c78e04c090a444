//! Progressive Hessenberg least squares via Givens rotations.
//!
//! Appending column `k` of the Hessenberg factor costs `O(k)` and reuses
//! every previously computed rotation; the minimum-residual value is
//! available after each append without back substitution.

use crate::arnoldi::HessenbergFactor;
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct ProgressiveLstsq {
    /// Upper-triangular columns after rotation; column j has j+1 entries.
    r: Vec<Vec<f64>>,
    /// Rotated right-hand side `beta e1`; the last entry carries the
    /// (signed) least-squares residual.
    g: Vec<f64>,
    cs: Vec<f64>,
    sn: Vec<f64>,
}

impl ProgressiveLstsq {
    pub fn new(beta: f64) -> Self {
        Self {
            r: Vec::new(),
            g: vec![beta],
            cs: Vec::new(),
            sn: Vec::new(),
        }
    }

    pub fn steps(&self) -> usize {
        self.r.len()
    }

    /// Minimum value of `|beta e1 - Hbar z|` over the columns seen so far.
    pub fn residual(&self) -> f64 {
        self.g.last().unwrap().abs()
    }

    /// Appends Hessenberg column `j` (entries `h_{0..=j+1, j}`) and
    /// returns the updated minimum residual.
    pub fn append_column(&mut self, col: &[f64]) -> Result<f64> {
        let j = self.r.len();
        if col.len() != j + 2 {
            return Err(Error::ShapeMismatch {
                op: "append_column",
                expected: format!("{} entries", j + 2),
                found: format!("{}", col.len()),
            });
        }
        let mut v = col.to_vec();
        for i in 0..j {
            let t = self.cs[i] * v[i] + self.sn[i] * v[i + 1];
            v[i + 1] = -self.sn[i] * v[i] + self.cs[i] * v[i + 1];
            v[i] = t;
        }
        let (c, s) = givens(v[j], v[j + 1]);
        v[j] = c * v[j] + s * v[j + 1];
        v.truncate(j + 1);
        self.cs.push(c);
        self.sn.push(s);
        self.r.push(v);
        self.g.push(0.0);
        let gj = self.g[j];
        self.g[j] = c * gj;
        self.g[j + 1] = -s * gj;
        Ok(self.residual())
    }

    /// Solves the rotated triangular system by back substitution.
    pub fn solve(&self) -> Result<Vec<f64>> {
        let k = self.r.len();
        let mut z = vec![0.0; k];
        for i in (0..k).rev() {
            let mut acc = self.g[i];
            for j in (i + 1)..k {
                acc -= self.r[j][i] * z[j];
            }
            let d = self.r[i][i];
            if d == 0.0 {
                return Err(Error::RankDeficient { rank: i, cols: k });
            }
            z[i] = acc / d;
        }
        Ok(z)
    }
}

fn givens(a: f64, b: f64) -> (f64, f64) {
    let r = a.hypot(b);
    if r == 0.0 {
        (1.0, 0.0)
    } else {
        (a / r, b / r)
    }
}

/// Solves `min_z |beta e1 - Hbar z|` for a complete Hessenberg factor,
/// returning the minimizer and the minimum value.
pub fn hessenberg_lstsq(hess: &HessenbergFactor, beta: f64) -> Result<(Vec<f64>, f64)> {
    if !(beta >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "beta must be nonnegative, got {beta}"
        )));
    }
    let mut ls = ProgressiveLstsq::new(beta);
    for j in 0..hess.steps() {
        ls.append_column(hess.column(j))?;
    }
    let z = ls.solve()?;
    Ok((z, ls.residual()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hess_from_cols(cols: &[&[f64]]) -> HessenbergFactor {
        let mut h = HessenbergFactor::new();
        for c in cols {
            h.push_column(c.to_vec());
        }
        h
    }

    #[test]
    fn aligned_column_solves_exactly() {
        let h = hess_from_cols(&[&[1.0, 0.0]]);
        let (z, res) = hessenberg_lstsq(&h, 1.0).unwrap();
        assert_eq!(z, vec![1.0]);
        assert_eq!(res, 0.0);
    }

    #[test]
    fn orthogonal_column_leaves_full_residual() {
        let h = hess_from_cols(&[&[0.0, 1.0]]);
        let (z, res) = hessenberg_lstsq(&h, 1.0).unwrap();
        assert_eq!(z, vec![0.0]);
        assert!((res - 1.0).abs() <= 1e-15);
    }

    #[test]
    fn residual_is_monotone() {
        let mut ls = ProgressiveLstsq::new(2.0);
        let cols: Vec<Vec<f64>> = vec![
            vec![0.4, 1.1],
            vec![-0.3, 0.9, 0.8],
            vec![0.2, -0.5, 1.3, 0.6],
        ];
        let mut prev = f64::INFINITY;
        for c in &cols {
            let r = ls.append_column(c).unwrap();
            assert!(r <= prev + 1e-15);
            prev = r;
        }
    }

    #[test]
    fn zero_column_is_rank_error() {
        let mut ls = ProgressiveLstsq::new(1.0);
        ls.append_column(&[0.0, 0.0]).unwrap();
        assert!(matches!(ls.solve(), Err(Error::RankDeficient { .. })));
    }

    #[test]
    fn negative_beta_rejected() {
        let h = hess_from_cols(&[&[1.0, 0.0]]);
        assert!(hessenberg_lstsq(&h, -1.0).is_err());
    }
}
