//! Matrices of `∇`, `curl` and `div` between consecutive spaces.
//!
//! Each row is a target DoF applied to the image of the source basis on the
//! DoF's owner cell. Single-valuedness of the target DoFs on members of the
//! image makes the choice of owner irrelevant.

use std::collections::HashMap;

use nalgebra::DMatrix;

use super::{GlobalSpace, MASKED};
use crate::assembly::CsrMatrix;
use crate::elements::{ElementKind, LocalElement};
use crate::polyquad::PolynomialField;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Op {
    Grad,
    Curl,
    Div,
}

fn image(src: &LocalElement, j: usize, op: Op) -> PolynomialField {
    match op {
        Op::Grad | Op::Curl => src.basis_d1[j].clone(),
        Op::Div => src.basis_div[j].clone(),
    }
}

fn local_matrix(src: &LocalElement, tgt: &LocalElement, op: Op) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(tgt.dim(), src.dim());
    for j in 0..src.dim() {
        let f = image(src, j, op);
        let curl = (f.n_comps() == 3).then(|| f.curl());
        for (i, d) in tgt.dofs.iter().enumerate() {
            m[(i, j)] = d.apply_poly(&f, curl.as_ref());
        }
    }
    m
}

fn assemble(src: &GlobalSpace, tgt: &GlobalSpace, op: Op) -> Result<CsrMatrix> {
    if !std::sync::Arc::ptr_eq(&src.mesh, &tgt.mesh) {
        return Err(Error::Dimension("operator spaces live on different meshes".into()));
    }
    let mut cache: HashMap<(usize, usize), DMatrix<f64>> = HashMap::new();
    let mut triplets = Vec::new();
    for g in 0..tgt.dim() {
        let (c, i) = tgt.owner(g);
        let key = (src.template_index(c), tgt.template_index(c));
        let m = cache
            .entry(key)
            .or_insert_with(|| local_matrix(src.element(c), tgt.element(c), op));
        for (j, &gj) in src.cell_dofs(c).iter().enumerate() {
            if gj != MASKED && m[(i, j)] != 0.0 {
                triplets.push((g, gj, m[(i, j)]));
            }
        }
    }
    let a = CsrMatrix::from_triplets(tgt.dim(), src.dim(), triplets);
    // round-off in the moments of exact zeros
    Ok(a.pruned(1e-13 * a.max_abs()))
}

fn expect_kinds(src: &GlobalSpace, tgt: &GlobalSpace, ok: bool, what: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::Config(format!(
            "{what} operator from {} to {} is not defined",
            src.kind, tgt.kind
        )))
    }
}

/// `∇ : V_h^g → W_h`.
pub fn gradient_operator(vg: &GlobalSpace, w: &GlobalSpace) -> Result<CsrMatrix> {
    let ok = matches!(
        (vg.kind, w.kind),
        (ElementKind::Lagrange(p), ElementKind::GradCurl(k) | ElementKind::Nedelec(k)) if p == k + 1
    );
    expect_kinds(vg, w, ok, "gradient")?;
    assemble(vg, w, Op::Grad)
}

/// `curl : W_h → V_h^d`.
pub fn curl_operator(w: &GlobalSpace, vd: &GlobalSpace) -> Result<CsrMatrix> {
    let ok = matches!(w.kind, ElementKind::GradCurl(_)) && vd.kind == ElementKind::TaiWinther;
    expect_kinds(w, vd, ok, "curl")?;
    assemble(w, vd, Op::Curl)
}

/// `div : V_h^d → 𝒬_h`, rows are the cell averages of all cells but the last.
pub fn div_operator(vd: &GlobalSpace, q: &GlobalSpace) -> Result<CsrMatrix> {
    let ok = vd.kind == ElementKind::TaiWinther && q.kind == ElementKind::Dg0;
    expect_kinds(vd, q, ok, "div")?;
    assemble(vd, q, Op::Div)
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::mesh::build_uniform_cube_mesh;
    use crate::spaces::Boundary;
    use rand::{Rng, SeedableRng};

    #[test]
    fn gradient_of_lagrange_matches_interpolated_gradient() {
        let m = Arc::new(build_uniform_cube_mesh(2).unwrap());
        let mut rng = rand::rngs::StdRng::seed_from_u64(9);
        for k in 1..=2 {
            let vg = GlobalSpace::new(m.clone(), ElementKind::Lagrange(k + 1), Boundary::Zero).unwrap();
            let w = GlobalSpace::new(m.clone(), ElementKind::GradCurl(k), Boundary::Zero).unwrap();
            let g = gradient_operator(&vg, &w).unwrap();
            let q: Vec<f64> = (0..vg.dim()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let direct = g.mul_vec(&q);
            let interp = w.interpolate_piecewise(|c, x| {
                let (_, grad) = vg.evaluate(&q, c, x);
                (grad, crate::Vec3::zeros())
            });
            let err = direct
                .iter()
                .zip(&interp)
                .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            assert!(err < 1e-10, "k={k}: {err}");
        }
    }

    #[test]
    fn mismatched_kinds_rejected() {
        let m = Arc::new(build_uniform_cube_mesh(1).unwrap());
        let vg = GlobalSpace::new(m.clone(), ElementKind::Lagrange(3), Boundary::Zero).unwrap();
        let w = GlobalSpace::new(m, ElementKind::GradCurl(1), Boundary::Zero).unwrap();
        assert!(gradient_operator(&vg, &w).is_err());
    }
}
