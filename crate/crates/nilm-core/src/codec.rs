//! Message digits in and out of ciphertext blocks.
//!
//! A block encodes up to n-1 digits: digit j contributes `ln(d_j + offset)`
//! riding the (j+1)-th power of the secret nilpotent matrix, so in Jordan
//! coordinates the coefficients sit constant along the superdiagonals.
//! Decoding conjugates the block into a Jordan basis, checks that shape, and
//! exponentiates the superdiagonal reads back into digits.

use num_bigint::BigUint;

use crate::error::{Error, Result};
use crate::keyschedule::{SchemeParams, SharedMatrixKey};
use crate::matrix::{jordan_basis_nilpotent, linear_combine, Matrix};

/// Absolute tolerance for the triangularity and superdiagonal-agreement
/// integrity checks. Honest-path rounding noise stays far below this.
const INTEGRITY_TOLERANCE: f64 = 1e-6;

/// Half-width of the rounding acceptance window on exp(coefficient).
const ROUNDING_HALF_WIDTH: f64 = 0.25;

/// A message as a little-endian digit string in some radix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DigitMessage {
    base_a: u64,
    digits: Vec<u64>,
}

impl DigitMessage {
    pub fn new(base_a: u64, digits: Vec<u64>) -> Result<Self> {
        if base_a < 2 {
            return Err(Error::InvalidBase);
        }
        if digits.iter().any(|&d| d >= base_a) {
            return Err(Error::DigitOutOfRange(format!(
                "digit exceeds radix {base_a}"
            )));
        }
        Ok(Self { base_a, digits })
    }

    /// Byte-stream convenience: in base 256 the bytes are the digits.
    pub fn from_bytes(bytes: &[u8]) -> Self {
        Self {
            base_a: 256,
            digits: bytes.iter().map(|&b| b as u64).collect(),
        }
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        if self.base_a != 256 {
            return Err(Error::InvalidParams("byte conversion requires base 256"));
        }
        Ok(self.digits.iter().map(|&d| d as u8).collect())
    }

    pub fn base(&self) -> u64 {
        self.base_a
    }

    pub fn digits(&self) -> &[u64] {
        &self.digits
    }

    pub fn digit_count(&self) -> usize {
        self.digits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.digits.is_empty()
    }
}

/// Little-endian digit expansion; zero expands to the single digit [0].
pub fn digits_of(value: u128, base_a: u64) -> Result<DigitMessage> {
    if base_a < 2 {
        return Err(Error::InvalidBase);
    }
    let mut digits = Vec::new();
    let mut rest = value;
    loop {
        digits.push((rest % base_a as u128) as u64);
        rest /= base_a as u128;
        if rest == 0 {
            break;
        }
    }
    DigitMessage::new(base_a, digits)
}

/// Digit expansion of an unbounded decimal integer, by repeated division.
pub fn digits_of_decimal(decimal: &str, base_a: u64) -> Result<DigitMessage> {
    if base_a < 2 {
        return Err(Error::InvalidBase);
    }
    let value = BigUint::parse_bytes(decimal.trim().as_bytes(), 10).ok_or(Error::InvalidParams(
        "message must be a non-negative decimal integer",
    ))?;
    let mut digits = Vec::new();
    let mut rest = value;
    loop {
        let digit = u64::try_from(&(&rest % base_a)).expect("remainder fits u64");
        digits.push(digit);
        rest /= base_a;
        if rest == BigUint::ZERO {
            break;
        }
    }
    DigitMessage::new(base_a, digits)
}

/// Reassembles the decimal string a digit message expands.
pub fn digits_to_decimal(msg: &DigitMessage) -> String {
    let mut acc = BigUint::ZERO;
    for &d in msg.digits().iter().rev() {
        acc = acc * msg.base() + d;
    }
    acc.to_str_radix(10)
}

/// Public parameters echoed inside every ciphertext so the receiver can
/// verify agreement before decoding. Carries no key material.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamsEcho {
    pub n: u32,
    pub p: u64,
    pub base_a: u64,
    pub offset: u32,
    pub epsilon: f64,
}

impl ParamsEcho {
    pub fn of(params: &SchemeParams) -> Self {
        Self {
            n: params.n as u32,
            p: params.dh.modulus(),
            base_a: params.base_a,
            offset: params.offset,
            epsilon: params.epsilon,
        }
    }

    /// Field-for-field agreement; epsilon compares bit-for-bit because both
    /// sides must run the identical float pipeline.
    pub fn matches(&self, params: &SchemeParams) -> Result<()> {
        let mismatch = |field: &str| Err(Error::ParamMismatch(field.to_string()));
        if self.n as usize != params.n {
            return mismatch("dimension n");
        }
        if self.p != params.dh.modulus() {
            return mismatch("prime modulus p");
        }
        if self.base_a != params.base_a {
            return mismatch("radix");
        }
        if self.offset != params.offset {
            return mismatch("digit offset");
        }
        if self.epsilon.to_bits() != params.epsilon.to_bits() {
            return mismatch("epsilon");
        }
        Ok(())
    }
}

/// An encrypted message: the parameter echo, the original digit count, and
/// one nilpotent block per n-1 digits.
#[derive(Debug, Clone, PartialEq)]
pub struct Ciphertext {
    pub echo: ParamsEcho,
    pub digit_count: u64,
    pub blocks: Vec<Matrix>,
}

impl Ciphertext {
    /// ceil(digit_count / (n-1)); 0 for the empty message.
    pub fn expected_block_count(n: usize, digit_count: u64) -> u64 {
        let capacity = (n - 1) as u64;
        digit_count.div_ceil(capacity)
    }
}

/// Logarithmic coefficient of one digit, or the error naming it.
pub(crate) fn digit_coefficient(digit: u64, offset: u32) -> Result<f64> {
    let shifted = digit as u128 + offset as u128;
    if shifted == 0 {
        return Err(Error::UnencodableDigit { digit, offset });
    }
    Ok((shifted as f64).ln())
}

/// Encodes up to n-1 digits onto the powers of a nilpotent carrier:
/// digit j rides `x^(j+1)`, so the x^0 (diagonal) term stays unused.
pub fn encode_block(digits: &[u64], x: &Matrix, offset: u32) -> Result<Matrix> {
    let n = x.dim();
    if digits.len() > n.saturating_sub(1) {
        return Err(Error::BlockOverflow {
            given: digits.len(),
            capacity: n - 1,
        });
    }
    let mut acc = Matrix::zeros(n)?;
    let mut power = Matrix::identity(n)?;
    for &digit in digits {
        let coeff = digit_coefficient(digit, offset)?;
        power = power.mul(x)?;
        acc = linear_combine(1.0, &acc, coeff, &power)?;
    }
    Ok(acc)
}

/// Keyed encoding path: assembles the coefficients directly on the
/// superdiagonals of the shift block, then conjugates once. Numerically
/// preferable to stacking powers of X.
fn encode_block_keyed(digits: &[u64], key: &SharedMatrixKey, offset: u32) -> Result<Matrix> {
    let n = key.dim();
    if digits.len() > n - 1 {
        return Err(Error::BlockOverflow {
            given: digits.len(),
            capacity: n - 1,
        });
    }
    let mut coeffs = vec![0.0; n];
    for (j, &digit) in digits.iter().enumerate() {
        coeffs[j + 1] = digit_coefficient(digit, offset)?;
    }
    let core = Matrix::from_fn(n, |i, j| if j > i { coeffs[j - i] } else { 0.0 })?;
    key.conjugator.mul(&core)?.mul(&key.conjugator_inv)
}

/// Decodes one block in the Jordan basis `q` of the secret matrix.
///
/// Conjugates the block by `q`, then enforces the honest-ciphertext shape:
/// everything on or below the diagonal must vanish, each superdiagonal must
/// carry a constant value, and each read coefficient must exponentiate to
/// within 0.25 of an integer digit inside the radix. The shape checks fail
/// as [`Error::CorruptCiphertext`], the digit checks as
/// [`Error::DigitOutOfRange`] — the latter is what a wrong key produces.
pub fn decode_block(
    block: &Matrix,
    q: &Matrix,
    offset: u32,
    base_a: u64,
    expected_len: usize,
) -> Result<Vec<u64>> {
    let n = block.dim();
    if q.dim() != n {
        return Err(Error::DimensionMismatch {
            left: q.dim(),
            right: n,
        });
    }
    if expected_len > n - 1 {
        return Err(Error::BlockOverflow {
            given: expected_len,
            capacity: n - 1,
        });
    }
    let q_inv = q.inverse()?;
    let y = q_inv.mul(block)?.mul(q)?;

    for i in 0..n {
        for j in 0..=i {
            if y.get(i, j).abs() >= INTEGRITY_TOLERANCE {
                return Err(Error::CorruptCiphertext(format!(
                    "entry ({i},{j}) on or below the diagonal is {:.3e}",
                    y.get(i, j)
                )));
            }
        }
    }
    for d in 1..n {
        let head = y.get(0, d);
        for k in 1..n - d {
            if (y.get(k, k + d) - head).abs() > INTEGRITY_TOLERANCE {
                return Err(Error::CorruptCiphertext(format!(
                    "superdiagonal {d} is not constant"
                )));
            }
        }
    }

    let mut digits = Vec::with_capacity(expected_len);
    for i in 1..=expected_len {
        let value = y.get(0, i).exp();
        let rounded = value.round();
        if (value - rounded).abs() > ROUNDING_HALF_WIDTH {
            return Err(Error::DigitOutOfRange(format!(
                "coefficient {i} exponentiates to {value}, not near an integer"
            )));
        }
        if rounded < offset as f64 || rounded - offset as f64 >= base_a as f64 {
            return Err(Error::DigitOutOfRange(format!(
                "recovered value {rounded} falls outside [offset, offset + radix)"
            )));
        }
        digits.push((rounded - offset as f64) as u64);
    }
    Ok(digits)
}

/// Splits the message into blocks of n-1 digits and encodes each one. The
/// last block is padded with digit 0 (digit 1 when offset is 0, since 0 is
/// unencodable there); the stored digit count disambiguates the padding.
pub fn encrypt_message(
    msg: &DigitMessage,
    key: &SharedMatrixKey,
    params: &SchemeParams,
) -> Result<Ciphertext> {
    if msg.base() != params.base_a {
        return Err(Error::ParamMismatch("message radix".to_string()));
    }
    if key.dim() != params.n {
        return Err(Error::ParamMismatch("key dimension".to_string()));
    }
    let capacity = params.block_capacity();
    let pad_digit = if params.offset == 0 { 1 } else { 0 };
    let mut blocks = Vec::with_capacity(msg.digit_count().div_ceil(capacity));
    for chunk in msg.digits().chunks(capacity) {
        let mut padded = chunk.to_vec();
        padded.resize(capacity, pad_digit);
        blocks.push(encode_block_keyed(&padded, key, params.offset)?);
    }
    Ok(Ciphertext {
        echo: ParamsEcho::of(params),
        digit_count: msg.digit_count() as u64,
        blocks,
    })
}

/// Shared decode loop: every block in the given Jordan basis, truncated to
/// the stored digit count.
pub(crate) fn decode_all_blocks(
    blocks: &[Matrix],
    q: &Matrix,
    offset: u32,
    base_a: u64,
    digit_count: u64,
    n: usize,
) -> Result<Vec<u64>> {
    let capacity = n - 1;
    let expected_blocks = if digit_count == 0 {
        0
    } else {
        Ciphertext::expected_block_count(n, digit_count)
    };
    if blocks.len() as u64 != expected_blocks {
        return Err(Error::CorruptCiphertext(format!(
            "{} blocks cannot carry {digit_count} digits",
            blocks.len()
        )));
    }
    let mut digits = Vec::with_capacity(digit_count as usize);
    for (b, block) in blocks.iter().enumerate() {
        let start = b * capacity;
        let span = (digit_count as usize - start).min(capacity);
        digits.extend(decode_block(block, q, offset, base_a, span)?);
    }
    Ok(digits)
}

/// Inverse of [`encrypt_message`] under the same key and parameters.
pub fn decrypt_message(
    ct: &Ciphertext,
    key: &SharedMatrixKey,
    params: &SchemeParams,
) -> Result<DigitMessage> {
    ct.echo.matches(params)?;
    if key.dim() != params.n {
        return Err(Error::ParamMismatch("key dimension".to_string()));
    }
    let q = jordan_basis_nilpotent(&key.nilpotent)?;
    let digits = decode_all_blocks(
        &ct.blocks,
        &q,
        params.offset,
        params.base_a,
        ct.digit_count,
        params.n,
    )?;
    DigitMessage::new(params.base_a, digits)
}
