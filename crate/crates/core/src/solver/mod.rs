//! Sparse direct and iterative solvers for the discrete saddle-point systems.

pub mod cholesky;
pub mod minres;
pub mod ordering;
pub mod saddle;
pub mod spectral;

pub use cholesky::{dense_cholesky, SparseCholesky};
pub use minres::{minres, MinresOutcome};
pub use ordering::{nested_dissection, Ordering, TreeNode};
pub use saddle::{solve, Backend, Method, SaddleSystem, Solution, SolveOptions};
pub use spectral::{
    discrete_poincare_constant, discrete_poincare_constant_dense, infsup_witness_check, InfSupReport, NitscheParts,
    PoincareReport,
};
