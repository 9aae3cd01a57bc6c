//! Toy cryptosystem built on nilpotent matrices.
//!
//! Two parties agree on a shared scalar secret through a modular
//! exponential key exchange, expand it into a conjugator that hides the
//! standard shift block, and encode message digits as logarithmic
//! coefficients riding the powers of the hidden nilpotent matrix.
//! Decoding moves the ciphertext block into a Jordan basis of the secret
//! matrix and reads the coefficients off the superdiagonals.
//!
//! The [`cryptanalysis`] module measures how the scheme actually holds up:
//! a single known plaintext block recovers the secret matrix by power
//! series reversion, and the scalar secret falls to exhaustive search at
//! any desk-scale modulus.
//!
//! This is a study object, not a secure cipher. Do not protect real data
//! with it.

pub mod codec;
pub mod cryptanalysis;
pub mod error;
pub mod fileformat;
pub mod keyschedule;
pub mod matrix;
pub mod modular;
pub mod netpeer;

pub use codec::{Ciphertext, DigitMessage, ParamsEcho};
pub use error::{Error, Result};
pub use keyschedule::{CoeffMatrix, SchemeParams, SharedMatrixKey};
pub use matrix::Matrix;
pub use modular::{DHKeyPair, DHParams};
