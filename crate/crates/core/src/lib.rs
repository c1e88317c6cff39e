//! Optimal measurements for minimum-error discrimination of linearly
//! independent quantum state ensembles.
//!
//! Given an ensemble of density matrices with prior probabilities whose
//! supports are linearly independent and jointly span the space, the unique
//! optimal POVM is a projective measurement. This crate finds it by solving a
//! block-diagonal matrix fixed-point equation (Newton-Raphson or Taylor-series
//! analytic continuation along a Gram-matrix homotopy), certifies the result
//! against the necessary-and-sufficient optimality conditions, and exposes the
//! ensemble map that links the optimal measurement to a pretty good
//! measurement, together with its closed-form inverse.
//!
//! Independent reference solvers (two-state closed form, a log-det barrier
//! dual SDP, and exhaustive projective search for tiny instances) live in
//! [`oracles`] and back the verification suite.
//!
//! Everything is generic over the real scalar via [`scalar::Scalar`];
//! concrete `f64` aliases are exported at the crate root.

pub mod certificates;
pub mod ensemble;
pub mod error;
pub mod gram;
pub mod matrix;
pub mod oracles;
pub mod rotation;
pub mod scalar;
pub mod solver;

pub use error::{MedError, Result};
pub use matrix::{BlockIndex, ComplexMatrix, HermitianEig, RankProfile};
pub use num_complex::Complex;
pub use scalar::Scalar;

/// `f64` complex matrix.
pub type Matrix64 = matrix::ComplexMatrix<f64>;
/// `f64` ensemble.
pub type Ensemble64 = ensemble::Ensemble<f64>;
/// `f64` pure-state decomposition.
pub type PureDecomposition64 = ensemble::PureDecomposition<f64>;
/// `f64` POVM.
pub type Povm64 = ensemble::Povm<f64>;
/// `f64` Gram matrix.
pub type GramMatrix64 = gram::GramMatrix<f64>;
/// `f64` dual basis.
pub type DualBasis64 = gram::DualBasis<f64>;
/// `f64` solver configuration.
pub type SolverConfig64 = solver::SolverConfig<f64>;
/// `f64` solver solution.
pub type SolverSolution64 = solver::SolverSolution<f64>;
/// `f64` optimality certificate.
pub type Certificate64 = certificates::Certificate<f64>;
/// `f64` barrier configuration.
pub type BarrierConfig64 = oracles::BarrierConfig<f64>;
