//! Fan-Vercauteren somewhat homomorphic encryption.
//!
//! Single-modulus textbook FV over `Z_q[x]/(x^d + 1)` with `q` a product of
//! NTT-friendly word-sized primes. Ciphertext multiplication is computed
//! exactly in an extended RNS basis, so the scheme behaves like the
//! big-integer textbook description.

pub mod modular;
pub mod ntt;
pub mod params;
pub mod plaintext;
pub mod rns;
pub mod sampling;
pub mod scheme;
pub mod serialize;

pub use params::{FvContext, FvParams, DEFAULT_RELIN_BASE, DEFAULT_SIGMA};
pub use plaintext::Plaintext;
pub use scheme::{
    add, decrypt, dot, encrypt, hom_mul, keygen, multiply_no_relin, neg, noise_budget, plain_add,
    plain_mul, prepare, relinearize, sub, Ciphertext, KeyPair, PreparedCiphertext, PublicKey,
    RelinKey, SecretKey,
};

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum FheError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("ciphertext or key was produced under different parameters")]
    ParameterMismatch,
    #[error("plaintext has {got} coefficients but the ring degree is {d}")]
    PlaintextTooLong { got: usize, d: usize },
    #[error("empty dot product")]
    EmptyDot,
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("malformed encoding: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, FheError>;
