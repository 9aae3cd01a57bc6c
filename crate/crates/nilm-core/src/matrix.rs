//! Dense square real matrices and the nilpotent-structure operations the
//! rest of the crate builds on.
//!
//! Everything is plain `f64`, row-major. Matrices reject NaN and infinity
//! on construction, and every operation that returns a [`Matrix`] rechecks
//! the result, so a held value is always finite.

use std::fmt;

use crate::error::{Error, Result};

/// Relative pivot threshold for Gaussian elimination.
const PIVOT_TOLERANCE: f64 = 1e-12;

/// Relative term threshold at which the exponential series stops.
const EXP_TERM_TOLERANCE: f64 = 1e-17;

/// Hard cap on exponential series terms; reaching it signals an argument
/// far outside the norm regime this crate produces.
const EXP_MAX_TERMS: usize = 200;

/// Relative tolerance used when testing powers for nilpotency.
const NILPOTENCY_TOLERANCE: f64 = 1e-9;

/// Dense n-by-n matrix of finite `f64` entries, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    n: usize,
    entries: Vec<f64>,
}

impl Matrix {
    /// Builds a matrix from row-major entries. `entries.len()` must be `n*n`
    /// and every entry must be finite.
    pub fn from_vec(n: usize, entries: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidDimension);
        }
        if entries.len() != n * n {
            return Err(Error::DimensionMismatch {
                left: n * n,
                right: entries.len(),
            });
        }
        if !entries.iter().all(|e| e.is_finite()) {
            return Err(Error::NonFiniteEntry);
        }
        Ok(Self { n, entries })
    }

    /// Builds a matrix entry by entry from `f(row, col)`.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidDimension);
        }
        let mut entries = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                entries.push(f(i, j));
            }
        }
        Self::from_vec(n, entries)
    }

    pub fn zeros(n: usize) -> Result<Self> {
        Self::from_fn(n, |_, _| 0.0)
    }

    pub fn identity(n: usize) -> Result<Self> {
        Self::from_fn(n, |i, j| if i == j { 1.0 } else { 0.0 })
    }

    /// The standard nilpotent shift block: ones on the first superdiagonal,
    /// zero everywhere else. For `n = 1` there is no superdiagonal and the
    /// result is the 1x1 zero matrix.
    pub fn jordan_block(n: usize) -> Result<Self> {
        Self::from_fn(n, |i, j| if j == i + 1 { 1.0 } else { 0.0 })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.entries[row * self.n + col]
    }

    /// Row-major view of the raw entries.
    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    fn check_same_dim(&self, other: &Matrix) -> Result<()> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch {
                left: self.n,
                right: other.n,
            });
        }
        Ok(())
    }

    /// Standard matrix product `self * rhs`.
    pub fn mul(&self, rhs: &Matrix) -> Result<Matrix> {
        self.check_same_dim(rhs)?;
        let n = self.n;
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            for k in 0..n {
                let a = self.entries[i * n + k];
                if a == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out[i * n + j] += a * rhs.entries[k * n + j];
                }
            }
        }
        Matrix::from_vec(n, out)
    }

    /// Matrix-vector product `self * v`.
    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.n);
        self.entries
            .chunks_exact(self.n)
            .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Scalar multiple `c * self`.
    pub fn scale(&self, c: f64) -> Result<Matrix> {
        Matrix::from_vec(self.n, self.entries.iter().map(|e| c * e).collect())
    }

    /// `self^k` by repeated multiplication, with `self^0 = I`. All internal
    /// callers keep `k <= n`, so no fast exponentiation is needed.
    pub fn pow(&self, k: usize) -> Result<Matrix> {
        let mut acc = Matrix::identity(self.n)?;
        for _ in 0..k {
            acc = acc.mul(self)?;
        }
        Ok(acc)
    }

    /// Inverse by Gaussian elimination with partial pivoting.
    ///
    /// A pivot smaller than `1e-12` times the largest initial absolute entry
    /// (or 1 for the zero matrix) is treated as singular.
    pub fn inverse(&self) -> Result<Matrix> {
        let n = self.n;
        let scale = self.max_abs();
        let threshold = PIVOT_TOLERANCE * if scale == 0.0 { 1.0 } else { scale };

        let mut work = self.entries.clone();
        let mut inv = Matrix::identity(n)?.entries;

        for col in 0..n {
            let mut pivot_row = col;
            let mut pivot_mag = work[col * n + col].abs();
            for row in (col + 1)..n {
                let mag = work[row * n + col].abs();
                if mag > pivot_mag {
                    pivot_row = row;
                    pivot_mag = mag;
                }
            }
            if pivot_mag < threshold {
                return Err(Error::SingularMatrix);
            }
            if pivot_row != col {
                for j in 0..n {
                    work.swap(col * n + j, pivot_row * n + j);
                    inv.swap(col * n + j, pivot_row * n + j);
                }
            }
            let pivot = work[col * n + col];
            for j in 0..n {
                work[col * n + j] /= pivot;
                inv[col * n + j] /= pivot;
            }
            for row in 0..n {
                if row == col {
                    continue;
                }
                let factor = work[row * n + col];
                if factor == 0.0 {
                    continue;
                }
                for j in 0..n {
                    work[row * n + j] -= factor * work[col * n + j];
                    inv[row * n + j] -= factor * inv[col * n + j];
                }
            }
        }
        Matrix::from_vec(n, inv)
    }

    /// Matrix exponential by plain Taylor summation.
    ///
    /// Terms accumulate until the next term's Frobenius norm drops below
    /// `1e-17` times the partial sum's norm (or 1 while the sum is zero).
    /// Arguments produced inside this crate have Frobenius norm below 1, so
    /// the series converges in a couple dozen terms; the 200-term cap only
    /// trips for arguments far outside that regime.
    pub fn exp(&self) -> Result<Matrix> {
        let n = self.n;
        let mut sum = Matrix::identity(n)?;
        let mut term = Matrix::identity(n)?;
        for k in 1..=EXP_MAX_TERMS {
            term = term.mul(self)?.scale(1.0 / k as f64)?;
            let sum_norm = sum.frobenius_norm();
            let gate = if sum_norm == 0.0 { 1.0 } else { sum_norm };
            if term.frobenius_norm() < EXP_TERM_TOLERANCE * gate {
                return Ok(sum);
            }
            sum = linear_combine(1.0, &sum, 1.0, &term)?;
        }
        Err(Error::ExpDidNotConverge(EXP_MAX_TERMS))
    }

    /// Smallest `k <= n` with `||self^k||_F <= 1e-9 * max(1, ||self||_F)^k`.
    ///
    /// The zero matrix has index 1 under this definition.
    pub fn nilpotency_index(&self) -> Result<usize> {
        let n = self.n;
        let gate_base = self.frobenius_norm().max(1.0);
        let mut power = Matrix::identity(n)?;
        for k in 1..=n {
            power = power.mul(self)?;
            if power.frobenius_norm() <= NILPOTENCY_TOLERANCE * gate_base.powi(k as i32) {
                return Ok(k);
            }
        }
        Err(Error::NotNilpotent)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.entries.iter().map(|e| e * e).sum::<f64>().sqrt()
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.entries.iter().fold(0.0, |m, e| m.max(e.abs()))
    }

    /// Largest absolute entrywise difference. Panics on dimension mismatch.
    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        assert_eq!(self.n, other.n);
        self.entries
            .iter()
            .zip(&other.entries)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    /// Frobenius norm of the difference. Panics on dimension mismatch.
    pub fn frobenius_diff(&self, other: &Matrix) -> f64 {
        assert_eq!(self.n, other.n);
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }
}

impl fmt::Display for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.n {
            for j in 0..self.n {
                if j > 0 {
                    write!(f, "  ")?;
                }
                write!(f, "{:>9.6}", self.get(i, j))?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// Elementwise `alpha * a + beta * b`.
pub fn linear_combine(alpha: f64, a: &Matrix, beta: f64, b: &Matrix) -> Result<Matrix> {
    if !alpha.is_finite() || !beta.is_finite() {
        return Err(Error::NonFiniteEntry);
    }
    a.check_same_dim(b)?;
    Matrix::from_vec(
        a.n,
        a.entries
            .iter()
            .zip(&b.entries)
            .map(|(x, y)| alpha * x + beta * y)
            .collect(),
    )
}

/// Jordan basis of a nilpotent matrix whose index equals its dimension.
///
/// Returns the invertible `Q` with columns `[X^(n-1) v, ..., X v, v]` where
/// `v` is the canonical basis vector maximizing `||X^(n-1) e_j||_2` (ties
/// break toward the smallest index). Then `Q^-1 X Q` is the standard shift
/// block. The choice of `v` is fixed so the operation is deterministic; any
/// other Jordan basis differs by an element of the block's centralizer and
/// decodes identically.
pub fn jordan_basis_nilpotent(x: &Matrix) -> Result<Matrix> {
    let n = x.dim();
    let index = x.nilpotency_index().map_err(|e| match e {
        Error::NotNilpotent => Error::NotSingleBlock,
        other => other,
    })?;
    if index != n {
        return Err(Error::NotSingleBlock);
    }

    let top_power = x.pow(n - 1)?;
    let mut best_col = 0;
    let mut best_norm = -1.0;
    for j in 0..n {
        let norm = (0..n)
            .map(|i| top_power.get(i, j).powi(2))
            .sum::<f64>()
            .sqrt();
        if norm > best_norm {
            best_norm = norm;
            best_col = j;
        }
    }

    let mut chain = vec![0.0; n];
    chain[best_col] = 1.0;
    let mut columns = vec![chain];
    for _ in 1..n {
        let next = x.matvec(columns.last().expect("non-empty"));
        columns.push(next);
    }
    // columns currently run [v, Xv, ..., X^(n-1) v]; the basis lists them
    // highest power first.
    let q = Matrix::from_fn(n, |i, j| columns[n - 1 - j][i])?;
    q.inverse()?;
    Ok(q)
}
