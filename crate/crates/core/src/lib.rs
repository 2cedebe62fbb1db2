//! Exact and numerical machinery for anisotropic total-variation energies on
//! vector fields: matrix norm gauges and duals, piecewise-constant and grid
//! field representations, jump-formula energy evaluation, extremal atom
//! constructors, a midpoint-decomposition certifier, and a one-dimensional
//! conditional-gradient solver.

pub mod atoms;
pub mod energy;
pub mod error;
pub mod field;
pub mod gcg;
pub mod linalg;
pub mod norm;
pub mod witness;

pub use error::{CoreError, Result};
pub use linalg::Mat;
pub use norm::{MatrixNormSpec, NormKind, PExp, VectorBallKind, VectorBallSpec};
