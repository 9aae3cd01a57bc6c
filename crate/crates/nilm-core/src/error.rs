//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix dimension must be at least 1")]
    InvalidDimension,

    #[error("matrix dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("operation produced a non-finite matrix entry")]
    NonFiniteEntry,

    #[error("matrix is singular (pivot below threshold)")]
    SingularMatrix,

    #[error("matrix exponential did not converge within {0} terms")]
    ExpDidNotConverge(usize),

    #[error("matrix is not nilpotent")]
    NotNilpotent,

    #[error("matrix is not a single nilpotent block of full index")]
    NotSingleBlock,

    #[error("modulus must be at least 2")]
    InvalidModulus,

    #[error("exponent or group element out of range")]
    InvalidExponent,

    #[error("{0} is not prime")]
    NotPrime(u64),

    #[error("degenerate shared secret (K <= 1); both parties must pick new secrets")]
    DegenerateKey,

    #[error("radix must be at least 2")]
    InvalidBase,

    #[error("epsilon must be positive and finite")]
    InvalidEpsilon,

    #[error("invalid parameters: {0}")]
    InvalidParams(&'static str),

    #[error("digit {digit} with offset {offset} has no logarithmic coefficient")]
    UnencodableDigit { digit: u64, offset: u32 },

    #[error("block holds at most {capacity} digits, got {given}")]
    BlockOverflow { given: usize, capacity: usize },

    #[error("corrupt ciphertext: {0}")]
    CorruptCiphertext(String),

    #[error("decoded digit out of range: {0}")]
    DigitOutOfRange(String),

    #[error("ciphertext parameters do not match: {0}")]
    ParamMismatch(String),

    #[error("target is outside the subgroup generated by the base")]
    NoSolution,

    #[error("leading plaintext coefficient is zero; reversion attack inapplicable")]
    LeadingCoefficientZero,

    #[error("modulus too large for exhaustive search (cap {cap})")]
    ParameterTooLarge { cap: u64 },

    #[error("frame payload of {0} bytes exceeds the frame cap")]
    OversizedFrame(u64),

    #[error("truncated frame")]
    TruncatedFrame,

    #[error("trailing bytes after frame")]
    TrailingBytes,

    #[error("unknown frame kind 0x{0:02x}")]
    UnknownKind(u8),

    #[error("handshake rejected: {0}")]
    HandshakeRejected(String),

    #[error("connection error: {0}")]
    ConnectionError(#[from] std::io::Error),

    #[error("malformed key file: {0}")]
    MalformedKeyFile(String),
}
