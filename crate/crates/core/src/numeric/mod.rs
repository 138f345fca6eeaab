//! Self-contained numeric kernel: dense linear algebra, normal distribution
//! functions and seeded random streams.

pub mod linalg;
pub mod normal;
pub mod rng;

pub use linalg::{ols_solve, solve_symmetric, DenseMatrix, OlsFit};
pub use normal::{normal_cdf, normal_cdf_inv, normal_pdf};
