//! Polynomial bookkeeping and simplex quadrature.

pub mod poly;
pub mod quadrature;

pub use poly::{monomial_values, num_monomials, Poly, PolynomialField};
pub use quadrature::{simplex_quadrature, QuadratureRule, MAX_QUADRATURE_DEGREE};
