//! Least-squares regression by rescaled descent methods on encrypted data.
//!
//! Data is fixed-point encoded to integers, encrypted with the FV scheme
//! and fitted by gradient descent, coordinate descent, Nesterov
//! acceleration or the van Wijngaarden transform of gradient descent. The
//! circuit depth is fixed before any encryption happens, which determines
//! the encryption parameters. A cleartext oracle backend runs the same
//! integer circuits exactly.

pub mod backend;
pub mod data;
pub mod depth;
pub mod encoding;
pub mod engine;
pub mod error;
pub mod linalg;
pub mod reference;
pub mod scalar;

pub use backend::{Backend, BoundBackend, FvBackend, OracleBackend, OracleMode};
pub use depth::{select_params, Algorithm, BindingConstraint, FitPlan, Momentum, ParamSelection};
pub use encoding::EncodingConfig;
pub use engine::{encrypt_dataset, run_plan, EncryptedCoefficients, EncryptedDataset, FitOutput};
pub use error::{ElsError, Result};
pub use linalg::Matrix;
pub use scalar::Scalar;

pub type Rational = num_rational::BigRational;
pub type MatrixF64 = Matrix<f64>;
pub type MatrixF32 = Matrix<f32>;
pub type MatrixQ = Matrix<Rational>;
