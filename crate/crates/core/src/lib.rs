//! Matrix neural networks that multiply and invert matrices.
//!
//! A network here acts on whole matrices: each layer is a sparse linear map
//! between matrix spaces plus a bias, followed by an activation applied only
//! at selected entries. On top of that the crate builds
//!
//! - scalar product gadgets `(x, y) -> xy` for ReLU (approximate, sawtooth
//!   based) and ReLU^2 (exact),
//! - Strassen product networks for `2^k x 2^k` operands and zero-padded
//!   variants for arbitrary rectangular and square shapes,
//! - inversion networks that evaluate a truncated Neumann series through
//!   repeated squaring,
//!
//! together with closed-form size counts, independent reference routines
//! and verification suites.
//!
//! ```
//! use strassen_mnn::{build_str_square, pack_ab, Matrix, Relu2Product};
//!
//! let net = build_str_square(2, 1e-6, 1.0, &Relu2Product).unwrap();
//! let a = Matrix::from_rows(&[[1.0, 2.0], [3.0, 4.0]]);
//! let b = Matrix::identity(2);
//! let product = net.realize(&pack_ab(&a, &b).unwrap()).unwrap();
//! assert!(product.sub(&a).max_abs() < 1e-12);
//! ```

pub mod cli;
pub mod combinators;
pub mod error;
pub mod gadgets;
pub mod inversion;
pub mod io;
pub mod matrix;
pub mod mnn;
pub mod oracles;
pub mod report;
pub mod strassen;
pub mod verify;

pub use combinators::{chain, concat, parallelize, ParallelBlock};
pub use error::{MnnError, Result};
pub use gadgets::{factory, GadgetFactory, GadgetSpec, Relu2Product, ReluProduct};
pub use inversion::{build_inv, build_neu, build_sqr, InversionSpec};
pub use matrix::Matrix;
pub use mnn::{Activation, Counts, Layer, MatrixShape, Mnn, SparseLinearMap};
pub use strassen::{
    build_str_pow2, build_str_rect, build_str_square, pack_ab, pack_atb, RectShape,
};
