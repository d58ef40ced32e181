//! Exactness of the discrete complex `V_h^g → W_h → V_h^d → 𝒬_h` by rank counting.

use std::sync::Arc;

use serde::Serialize;

use super::{curl_operator, div_operator, gradient_operator, Boundary, GlobalSpace};
use crate::assembly::CsrMatrix;
use crate::elements::ElementKind;
use crate::mesh::Mesh;
use crate::Result;

/// Boundary conditions of the middle spaces.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ComplexVariant {
    /// `W_{h0}` and `V_{h0}^d`.
    Zero,
    /// `W_h` and `V_h^d`.
    Partial,
}

#[derive(Clone, Debug, Serialize)]
pub struct ComplexReport {
    pub n: usize,
    pub k: usize,
    pub variant: ComplexVariant,
    /// Dimensions of `V_h^g`, `W`, `V^d`, `𝒬_h`.
    pub dims: [usize; 4],
    pub rank_grad: usize,
    pub rank_curl: usize,
    pub rank_div: usize,
    /// Relative size of `curl ∘ ∇` and `div ∘ curl`.
    pub curl_grad: f64,
    pub div_curl: f64,
    /// `#𝒱^i - #ℰ^i + #ℱ^i - #T + 1`.
    pub euler_residual: i64,
    pub grad_injective: bool,
    pub grad_image_is_curl_kernel: bool,
    pub curl_image_is_div_kernel: bool,
    pub div_surjective: bool,
}

impl ComplexReport {
    pub fn passed(&self) -> bool {
        self.grad_injective
            && self.grad_image_is_curl_kernel
            && self.curl_image_is_div_kernel
            && self.div_surjective
            && self.curl_grad < 1e-10
            && self.div_curl < 1e-10
            && self.euler_residual == 0
    }
}

/// Numerical rank from the singular values, relative tolerance `1e-9`.
pub fn dense_rank(a: &CsrMatrix) -> usize {
    if a.nrows == 0 || a.ncols == 0 {
        return 0;
    }
    let sv = a.to_dense().svd(false, false).singular_values;
    let tol = 1e-9 * sv.max();
    sv.iter().filter(|&&s| s > tol).count()
}

fn composition(a: &CsrMatrix, b: &CsrMatrix) -> f64 {
    let ab = a.mul(b);
    ab.max_abs() / (a.max_abs() * b.max_abs()).max(f64::MIN_POSITIVE)
}

pub fn verify_complex(mesh: Arc<Mesh>, k: usize, variant: ComplexVariant) -> Result<ComplexReport> {
    let bc = match variant {
        ComplexVariant::Zero => Boundary::Zero,
        ComplexVariant::Partial => Boundary::Partial,
    };
    let vg = GlobalSpace::new(mesh.clone(), ElementKind::Lagrange(k + 1), Boundary::Zero)?;
    let w = GlobalSpace::new(mesh.clone(), ElementKind::GradCurl(k), bc)?;
    let vd = GlobalSpace::new(mesh.clone(), ElementKind::TaiWinther, bc)?;
    let q = GlobalSpace::new(mesh.clone(), ElementKind::Dg0, Boundary::Zero)?;
    let grad = gradient_operator(&vg, &w)?;
    let curl = curl_operator(&w, &vd)?;
    let div = div_operator(&vd, &q)?;
    let (rg, rc, rd) = (dense_rank(&grad), dense_rank(&curl), dense_rank(&div));
    let c = mesh.counts();
    let euler = c.interior_vertices as i64 - c.interior_edges as i64 + c.interior_faces as i64 - c.cells as i64 + 1;
    Ok(ComplexReport {
        n: mesh.subdivisions,
        k,
        variant,
        dims: [vg.dim(), w.dim(), vd.dim(), q.dim()],
        rank_grad: rg,
        rank_curl: rc,
        rank_div: rd,
        curl_grad: composition(&curl, &grad),
        div_curl: composition(&div, &curl),
        euler_residual: euler,
        grad_injective: rg == vg.dim(),
        grad_image_is_curl_kernel: rg == w.dim() - rc,
        curl_image_is_div_kernel: rc == vd.dim() - rd,
        div_surjective: rd == q.dim(),
    })
}
