//! Local finite elements: shape spaces, degrees of freedom and nodal bases.
//!
//! Every element is built on one physical tetrahedron whose vertices are
//! given in ascending global order. Shape functions are polynomials in the
//! scaled coordinates `ξ = (x - c) / s` with `c` the centroid and `s` the
//! diameter; derivatives are returned in physical coordinates. Nodal bases
//! come from inverting the matrix `V[i][j] = DoF_i(span_j)`.

mod checks;
mod dofs;
mod spanning;

use std::fmt;

use nalgebra::DMatrix;

pub use checks::{
    kernel_check, local_complex_residual, random_tetrahedron, shape_ratio, tangential_trace_residual, KernelReport,
};
pub use dofs::{DofFunctional, DofKind, DofSample};
pub use spanning::SpanPart;

use crate::mesh::LocalEntity;
use crate::polyquad::poly::{monomial_values_into, num_monomials};
use crate::polyquad::PolynomialField;
use crate::{Error, Result, Vec3};

/// Normalized singular value below which an element is declared not unisolvent.
pub const UNISOLVENCE_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ElementKind {
    /// The `H(grad curl)` nonconforming element of order `k`.
    GradCurl(usize),
    /// `∇ℙ_{k+1} ⊕ x × ℙ₁`, the trace space of the above.
    Nedelec(usize),
    /// `ℙ₁(ℝ³) ⊕ curl(b_K ℙ₁(ℝ³))` with normal and tangential face moments.
    TaiWinther,
    /// Continuous Lagrange element of the given degree (2 or 3).
    Lagrange(usize),
    /// Piecewise constants.
    Dg0,
}

impl ElementKind {
    pub fn value_dim(self) -> usize {
        match self {
            ElementKind::Lagrange(_) | ElementKind::Dg0 => 1,
            _ => 3,
        }
    }

    pub fn dim(self) -> usize {
        match self {
            ElementKind::GradCurl(k) => 10 * k + 22,
            ElementKind::Nedelec(k) => 10 * k + 10,
            ElementKind::TaiWinther => 24,
            ElementKind::Lagrange(p) => (p + 1) * (p + 2) * (p + 3) / 6,
            ElementKind::Dg0 => 1,
        }
    }

    fn validate(self) -> Result<()> {
        let ok = match self {
            ElementKind::GradCurl(k) | ElementKind::Nedelec(k) => (1..=2).contains(&k),
            ElementKind::Lagrange(p) => (2..=3).contains(&p),
            _ => true,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("unsupported element {self}")))
        }
    }
}

impl fmt::Display for ElementKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ElementKind::GradCurl(k) => write!(f, "W{k}"),
            ElementKind::Nedelec(k) => write!(f, "ND{k}"),
            ElementKind::TaiWinther => write!(f, "TW"),
            ElementKind::Lagrange(p) => write!(f, "P{p}"),
            ElementKind::Dg0 => write!(f, "DG0"),
        }
    }
}

/// A dualized element on one tetrahedron.
#[derive(Clone, Debug)]
pub struct LocalElement {
    pub kind: ElementKind,
    pub vertices: [Vec3; 4],
    pub center: Vec3,
    pub scale: f64,
    pub dofs: Vec<DofFunctional>,
    /// Spanning set and the part of the direct sum each member belongs to.
    pub span: Vec<PolynomialField>,
    pub span_parts: Vec<SpanPart>,
    /// `basis_j = Σ_i coeffs[(i, j)] span_i`.
    pub coeffs: DMatrix<f64>,
    pub basis: Vec<PolynomialField>,
    /// Curl (vector kinds) or gradient (scalar kinds) of each basis function.
    pub basis_d1: Vec<PolynomialField>,
    /// Jacobian of the curl, vector kinds only.
    pub basis_grad_curl: Vec<PolynomialField>,
    /// Divergence, vector kinds only.
    pub basis_div: Vec<PolynomialField>,
    /// `σ_max / σ_min` of the DoF-span matrix.
    pub condition: f64,
}

/// Values of a basis and its derivatives at a set of points.
///
/// Layout is `[point][basis][component]`.
#[derive(Clone, Debug)]
pub struct Tabulation {
    pub n_points: usize,
    pub n_basis: usize,
    pub value_dim: usize,
    pub values: Vec<f64>,
    /// Curl (3 comps) for vector kinds, gradient (3 comps) for scalar kinds.
    pub d1: Vec<f64>,
    /// Jacobian of the curl (9 comps, row-major), vector kinds only.
    pub grad_curl: Vec<f64>,
    /// Divergence (1 comp), vector kinds only.
    pub div: Vec<f64>,
}

impl Tabulation {
    pub fn value(&self, q: usize, j: usize) -> &[f64] {
        let s = self.value_dim;
        &self.values[(q * self.n_basis + j) * s..][..s]
    }
    pub fn value3(&self, q: usize, j: usize) -> Vec3 {
        Vec3::from_column_slice(self.value(q, j))
    }
    pub fn d1(&self, q: usize, j: usize) -> Vec3 {
        Vec3::from_column_slice(&self.d1[(q * self.n_basis + j) * 3..][..3])
    }
    pub fn grad_curl(&self, q: usize, j: usize) -> &[f64] {
        &self.grad_curl[(q * self.n_basis + j) * 9..][..9]
    }
    pub fn div(&self, q: usize, j: usize) -> f64 {
        self.div[q * self.n_basis + j]
    }
}

impl LocalElement {
    /// Builds and dualizes an element on the tetrahedron `vertices`.
    pub fn new(kind: ElementKind, vertices: [Vec3; 4]) -> Result<LocalElement> {
        kind.validate()?;
        crate::mesh::AffineMap::new(&vertices).map_err(Error::Element)?;
        let center = vertices.iter().sum::<Vec3>() / 4.0;
        let scale = crate::mesh::LOCAL_EDGES
            .iter()
            .map(|e| (vertices[e[1]] - vertices[e[0]]).norm())
            .fold(0.0, f64::max);
        let (span, span_parts) = spanning::spanning_set(kind, &vertices, center, scale);
        let dofs = dofs::dof_set(kind, &vertices, center, scale)?;
        if span.len() != kind.dim() || dofs.len() != kind.dim() {
            return Err(Error::Element(format!(
                "{kind}: {} spanning fields and {} DoFs, expected {}",
                span.len(),
                dofs.len(),
                kind.dim()
            )));
        }
        let n = span.len();
        let vector = kind.value_dim() == 3;
        let span_curl: Vec<Option<PolynomialField>> = span.iter().map(|f| vector.then(|| f.curl())).collect();
        let mut v = DMatrix::zeros(n, n);
        for (i, dof) in dofs.iter().enumerate() {
            for j in 0..n {
                v[(i, j)] = dof.apply_poly(&span[j], span_curl[j].as_ref());
            }
        }
        let sv = v.clone().svd(false, false).singular_values;
        let smax = sv.max();
        let smin = sv.min();
        if !(smin > UNISOLVENCE_TOLERANCE * smax) {
            return Err(Error::Element(format!(
                "{kind}: DoFs not unisolvent (σ_min/σ_max = {:e})",
                smin / smax
            )));
        }
        let coeffs = v
            .try_inverse()
            .ok_or_else(|| Error::Element(format!("{kind}: singular DoF matrix")))?;
        let basis: Vec<PolynomialField> = (0..n)
            .map(|j| PolynomialField::combination(&span, coeffs.column(j).as_slice()))
            .collect();
        let (basis_d1, basis_grad_curl, basis_div) = if vector {
            let curls: Vec<_> = basis.iter().map(PolynomialField::curl).collect();
            let gc = curls.iter().map(PolynomialField::jacobian).collect();
            let div = basis.iter().map(PolynomialField::div).collect();
            (curls, gc, div)
        } else {
            (
                basis.iter().map(PolynomialField::grad).collect(),
                Vec::new(),
                Vec::new(),
            )
        };
        Ok(LocalElement {
            kind,
            vertices,
            center,
            scale,
            dofs,
            span,
            span_parts,
            coeffs,
            basis,
            basis_d1,
            basis_grad_curl,
            basis_div,
            condition: smax / smin,
        })
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn to_local(&self, x: &Vec3) -> Vec3 {
        (x - self.center) / self.scale
    }

    pub fn to_physical(&self, xi: &Vec3) -> Vec3 {
        self.center + xi * self.scale
    }

    /// Evaluates DoF `i` of a field given by a closure returning the value
    /// (first component only for scalars) and the curl at physical points
    /// `center + scale * ξ`.
    pub fn apply_dof<F>(&self, i: usize, center: &Vec3, field: F) -> f64
    where
        F: FnMut(&Vec3) -> (Vec3, Vec3),
    {
        self.dofs[i].apply(center, self.scale, field)
    }

    /// Number of DoFs attached to each kind of local entity.
    pub fn dofs_on(&self, entity: LocalEntity) -> usize {
        self.dofs.iter().filter(|d| d.entity == entity).count()
    }

    /// `max |DoF_i(φ_j) - δ_ij|`.
    pub fn delta_error(&self) -> f64 {
        let mut err: f64 = 0.0;
        for (i, dof) in self.dofs.iter().enumerate() {
            for j in 0..self.dim() {
                let d1 = (self.kind.value_dim() == 3).then(|| &self.basis_d1[j]);
                let val = dof.apply_poly(&self.basis[j], d1);
                let want = if i == j { 1.0 } else { 0.0 };
                err = err.max((val - want).abs());
            }
        }
        err
    }

    /// Tabulates the basis at local points `ξ`.
    pub fn tabulate(&self, xis: &[Vec3]) -> Tabulation {
        let n = self.dim();
        let vdim = self.kind.value_dim();
        let vector = vdim == 3;
        let degree = self.basis.iter().map(PolynomialField::degree).max().unwrap_or(0);
        let mut mono = vec![0.0; num_monomials(degree)];
        let mut t = Tabulation {
            n_points: xis.len(),
            n_basis: n,
            value_dim: vdim,
            values: Vec::with_capacity(xis.len() * n * vdim),
            d1: Vec::with_capacity(xis.len() * n * 3),
            grad_curl: Vec::new(),
            div: Vec::new(),
        };
        for xi in xis {
            monomial_values_into(xi, degree, &mut mono);
            for j in 0..n {
                for c in &self.basis[j].comps {
                    t.values.push(c.eval_with(&mono));
                }
                for c in &self.basis_d1[j].comps {
                    t.d1.push(c.eval_with(&mono));
                }
                if vector {
                    for c in &self.basis_grad_curl[j].comps {
                        t.grad_curl.push(c.eval_with(&mono));
                    }
                    t.div.push(self.basis_div[j].comps[0].eval_with(&mono));
                }
            }
        }
        t
    }

    /// Evaluates `Σ_j c_j φ_j` and its first derivative field at `ξ`.
    pub fn eval_combination(&self, coeffs: &[f64], xi: &Vec3) -> (Vec3, Vec3) {
        let tab = self.tabulate(std::slice::from_ref(xi));
        let mut v = Vec3::zeros();
        let mut d = Vec3::zeros();
        for (j, &c) in coeffs.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            let val = tab.value(0, j);
            for (a, x) in val.iter().enumerate() {
                v[a] += c * x;
            }
            d += c * tab.d1(0, j);
        }
        (v, d)
    }
}
