//! Nonconforming finite elements for the quad-curl problem.
//!
//! The crate provides cube meshes, polynomial and quadrature utilities,
//! the `H(grad curl)` element and its companions in a discrete complex,
//! global spaces and operators, sparse assembly, solvers and the
//! convergence experiments driven by the `quadcurl` binary.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod error;

pub mod assembly;
pub mod elements;
pub mod experiments;
pub mod mesh;
pub mod polyquad;
pub mod solver;
pub mod spaces;

pub use error::{Error, Result};

pub type Vec3 = nalgebra::Vector3<f64>;
