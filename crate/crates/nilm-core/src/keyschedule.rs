//! Expansion of the scalar shared secret into the matrix key material:
//! an integer coefficient matrix, the exponential conjugator that hides the
//! standard shift block, and the secret nilpotent matrix itself.

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::modular::{mod_pow, DHParams};

/// Everything both parties must agree on before exchanging ciphertext.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchemeParams {
    /// Block dimension; each ciphertext block is n x n and carries n-1 digits.
    pub n: usize,
    /// Key-exchange parameters; the same prime also scales the conjugator.
    pub dh: DHParams,
    /// Message radix.
    pub base_a: u64,
    /// Positive shift keeping the conjugator argument invertible.
    pub epsilon: f64,
    /// Digit shift applied before taking logarithms. Offset 0 reproduces the
    /// raw encoding and is only legal when every encoded digit is >= 1.
    pub offset: u32,
}

pub const MAX_DIMENSION: usize = 64;
pub const DEFAULT_BASE: u64 = 256;
pub const DEFAULT_EPSILON: f64 = 1.0;
pub const DEFAULT_OFFSET: u32 = 1;

impl SchemeParams {
    pub fn new(n: usize, dh: DHParams, base_a: u64, epsilon: f64, offset: u32) -> Result<Self> {
        if !(2..=MAX_DIMENSION).contains(&n) {
            return Err(Error::InvalidParams("dimension must lie in [2, 64]"));
        }
        if base_a < 2 {
            return Err(Error::InvalidBase);
        }
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::InvalidEpsilon);
        }
        Ok(Self {
            n,
            dh,
            base_a,
            epsilon,
            offset,
        })
    }

    /// Defaults: base 256, epsilon 1, offset 1.
    pub fn with_defaults(n: usize, dh: DHParams) -> Result<Self> {
        Self::new(n, dh, DEFAULT_BASE, DEFAULT_EPSILON, DEFAULT_OFFSET)
    }

    /// Digits carried by one block.
    pub fn block_capacity(&self) -> usize {
        self.n - 1
    }
}

/// n x n integer matrix with entries reduced modulo the scheme prime.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoeffMatrix {
    n: usize,
    entries: Vec<u64>,
}

impl CoeffMatrix {
    pub fn new(n: usize, entries: Vec<u64>, p: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidDimension);
        }
        if entries.len() != n * n {
            return Err(Error::DimensionMismatch {
                left: n * n,
                right: entries.len(),
            });
        }
        if entries.iter().any(|&e| e >= p) {
            return Err(Error::InvalidParams("coefficient outside [0, p)"));
        }
        Ok(Self { n, entries })
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            entries: vec![0; n * n],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, row: usize, col: usize) -> u64 {
        self.entries[row * self.n + col]
    }

    pub fn entries(&self) -> &[u64] {
        &self.entries
    }
}

/// The full key both parties derive from the scalar shared secret.
///
/// Invariants hold by construction: `conjugator * conjugator_inv = I`
/// within 1e-10, the nilpotent matrix has index n, and it equals the
/// conjugated standard shift block within 1e-10.
#[derive(Debug, Clone, PartialEq)]
pub struct SharedMatrixKey {
    pub coeffs: CoeffMatrix,
    pub conjugator: Matrix,
    pub conjugator_inv: Matrix,
    pub nilpotent: Matrix,
}

impl SharedMatrixKey {
    /// Key whose conjugator is the identity, so the carrier is the raw
    /// shift block. Useful for demos and tests; it hides nothing.
    pub fn unconcealed(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidParams("dimension must be at least 2"));
        }
        Ok(Self {
            coeffs: CoeffMatrix::zeros(n),
            conjugator: Matrix::identity(n)?,
            conjugator_inv: Matrix::identity(n)?,
            nilpotent: Matrix::jordan_block(n)?,
        })
    }

    pub fn dim(&self) -> usize {
        self.nilpotent.dim()
    }
}

/// Expands the scalar secret into the n^2 coefficients `K^(i*n + j + 1) mod p`
/// (row-major exponents 1..n^2). Deterministic, so both parties derive the
/// identical matrix from the same K.
pub fn derive_coefficients(k: u64, params: &SchemeParams) -> Result<CoeffMatrix> {
    let p = params.dh.modulus();
    if k <= 1 {
        return Err(Error::DegenerateKey);
    }
    if k >= p {
        return Err(Error::InvalidExponent);
    }
    let n = params.n;
    let mut entries = Vec::with_capacity(n * n);
    for idx in 0..n * n {
        entries.push(mod_pow(k, idx as u64 + 1, p)?);
    }
    CoeffMatrix::new(n, entries, p)
}

/// Conjugator pair from the coefficient matrix.
///
/// Builds `S = (n*p + epsilon) I - A` (the scalar shift is read as a multiple
/// of the identity), then `P = exp(S^-1)` and its exact analytic inverse
/// `P^-1 = exp(-S^-1)`. S is strictly diagonally dominant for every in-range
/// A, so the inverse always exists and has Frobenius norm below 1.
pub fn conjugator(coeffs: &CoeffMatrix, params: &SchemeParams) -> Result<(Matrix, Matrix)> {
    let n = coeffs.dim();
    let p = params.dh.modulus();
    if coeffs.entries().iter().any(|&e| e >= p) {
        return Err(Error::InvalidParams("coefficient outside [0, p)"));
    }
    let shift = n as f64 * p as f64 + params.epsilon;
    let s = Matrix::from_fn(n, |i, j| {
        let diag = if i == j { shift } else { 0.0 };
        diag - coeffs.get(i, j) as f64
    })?;
    let s_inv = s.inverse()?;
    let p_mat = s_inv.exp()?;
    let p_inv = s_inv.scale(-1.0)?.exp()?;
    Ok((p_mat, p_inv))
}

/// Conjugates the standard shift block: `X = P J P^-1`.
pub fn derive_nilpotent(p_mat: &Matrix, p_inv: &Matrix, n: usize) -> Result<Matrix> {
    let product = p_mat.mul(p_inv)?;
    if product.max_abs_diff(&Matrix::identity(n)?) > 1e-10 {
        return Err(Error::InvalidParams(
            "conjugator pair is not mutually inverse",
        ));
    }
    let x = p_mat.mul(&Matrix::jordan_block(n)?)?.mul(p_inv)?;
    // Index n certifies the structure survived the float pipeline.
    if !matches!(x.nilpotency_index(), Ok(index) if index == n) {
        return Err(Error::NotSingleBlock);
    }
    Ok(x)
}

/// Full pipeline from scalar shared secret to matrix key.
pub fn build_shared_key(k: u64, params: &SchemeParams) -> Result<SharedMatrixKey> {
    let coeffs = derive_coefficients(k, params)?;
    let (p_mat, p_inv) = conjugator(&coeffs, params)?;
    let nilpotent = derive_nilpotent(&p_mat, &p_inv, params.n)?;
    Ok(SharedMatrixKey {
        coeffs,
        conjugator: p_mat,
        conjugator_inv: p_inv,
        nilpotent,
    })
}

/// Checks strict diagonal dominance of `(n*p + epsilon) I - A`; exposed for
/// tests and the acceptance suite.
pub fn shifted_matrix_is_diagonally_dominant(coeffs: &CoeffMatrix, params: &SchemeParams) -> bool {
    let n = coeffs.dim();
    let shift = n as f64 * params.dh.modulus() as f64 + params.epsilon;
    (0..n).all(|i| {
        let diag = (shift - coeffs.get(i, i) as f64).abs();
        let off: f64 = (0..n)
            .filter(|&j| j != i)
            .map(|j| coeffs.get(i, j) as f64)
            .sum();
        diag > off
    })
}
