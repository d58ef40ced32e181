//! Element integrals and their global assembly.
//!
//! Element matrices depend only on the cell shape, so they are computed once
//! per template and scattered to every translated copy.

use std::collections::HashMap;

use nalgebra::{DMatrix, Matrix3};

use super::{CsrMatrix, PatternAssembler};
use crate::elements::{LocalElement, Tabulation};
use crate::mesh::{Mesh, LOCAL_FACES};
use crate::polyquad::simplex_quadrature;
use crate::spaces::GlobalSpace;
use crate::{Error, Result, Vec3};

/// Quantities entering the forms.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FormConfig {
    pub eps: f64,
    pub sigma: f64,
    /// Degree of the cell quadrature.
    pub cell_degree: usize,
    /// Degree of the face quadrature.
    pub face_degree: usize,
}

impl Default for FormConfig {
    fn default() -> Self {
        FormConfig {
            eps: 0.0,
            sigma: 10.0,
            cell_degree: 10,
            face_degree: 8,
        }
    }
}

impl FormConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.eps >= 0.0) || !self.eps.is_finite() {
            return Err(Error::Config(format!("eps must be finite and >= 0, got {}", self.eps)));
        }
        if !(self.sigma > 0.0) || !self.sigma.is_finite() {
            return Err(Error::Config(format!(
                "sigma must be finite and > 0, got {}",
                self.sigma
            )));
        }
        Ok(())
    }
}

/// Which tabulated quantity enters an integrand.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Field {
    Value,
    /// Curl for vector spaces, gradient for scalar ones.
    D1,
    /// Jacobian of the curl (Frobenius product).
    GradCurl,
}

fn field_slice(t: &Tabulation, f: Field, q: usize, j: usize) -> &[f64] {
    match f {
        Field::Value => t.value(q, j),
        Field::D1 => &t.d1[(q * t.n_basis + j) * 3..][..3],
        Field::GradCurl => t.grad_curl(q, j),
    }
}

/// Cell quadrature in the local coordinates of an element, with physical weights.
pub fn local_cell_quadrature(e: &LocalElement, degree: usize) -> Result<(Vec<Vec3>, Vec<f64>)> {
    let rule = simplex_quadrature(3, degree)?;
    let v = &e.vertices;
    let det = crate::mesh::signed_volume(v).abs() * 6.0;
    let xis = rule
        .points
        .iter()
        .map(|r| {
            let x = v[0] + r.x * (v[1] - v[0]) + r.y * (v[2] - v[0]) + r.z * (v[3] - v[0]);
            e.to_local(&x)
        })
        .collect();
    let w = rule.weights.iter().map(|w| w * det).collect();
    Ok((xis, w))
}

/// Face quadrature on local face `lf` in local coordinates, physical weights.
pub fn local_face_quadrature(e: &LocalElement, lf: usize, degree: usize) -> Result<(Vec<Vec3>, Vec<f64>)> {
    let rule = simplex_quadrature(2, degree)?;
    let p = LOCAL_FACES[lf].map(|i| e.vertices[i]);
    let area2 = (p[1] - p[0]).cross(&(p[2] - p[0])).norm();
    let xis = rule
        .points
        .iter()
        .map(|r| e.to_local(&(p[0] + r.x * (p[1] - p[0]) + r.y * (p[2] - p[0]))))
        .collect();
    let w = rule.weights.iter().map(|w| w * area2).collect();
    Ok((xis, w))
}

fn local_matrix(row: &LocalElement, col: &LocalElement, fr: Field, fc: Field, degree: usize) -> Result<DMatrix<f64>> {
    let (xis, w) = local_cell_quadrature(row, degree)?;
    let tr = row.tabulate(&xis);
    let tc = col.tabulate(&xis);
    let (nr, nc) = (row.dim(), col.dim());
    let symmetric = std::ptr::eq(row, col) && fr == fc;
    let mut m = DMatrix::zeros(nr, nc);
    for (q, wq) in w.iter().enumerate() {
        for i in 0..nr {
            let a = field_slice(&tr, fr, q, i);
            let j0 = if symmetric { i } else { 0 };
            for j in j0..nc {
                let b = field_slice(&tc, fc, q, j);
                let s: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
                m[(i, j)] += wq * s;
            }
        }
    }
    if symmetric {
        for i in 0..nr {
            for j in 0..i {
                m[(i, j)] = m[(j, i)];
            }
        }
    }
    Ok(m)
}

fn check_same_mesh(a: &GlobalSpace, b: &GlobalSpace) -> Result<()> {
    if std::sync::Arc::ptr_eq(&a.mesh, &b.mesh) {
        Ok(())
    } else {
        Err(Error::Dimension("spaces live on different meshes".into()))
    }
}

fn assembler(row: &GlobalSpace, col: &GlobalSpace) -> PatternAssembler {
    let n = row.mesh.n_cells();
    PatternAssembler::new(
        row.dim(),
        col.dim(),
        (0..n).map(|c| (row.cell_dofs(c), col.cell_dofs(c))),
    )
}

/// `∫ F_row(φ_i) · F_col(ψ_j)` summed over cells.
pub fn assemble_cell_form(
    row: &GlobalSpace,
    col: &GlobalSpace,
    fr: Field,
    fc: Field,
    degree: usize,
) -> Result<CsrMatrix> {
    check_same_mesh(row, col)?;
    let mut cache: HashMap<(usize, usize), Vec<f64>> = HashMap::new();
    let mut asm = assembler(row, col);
    for c in 0..row.mesh.n_cells() {
        let key = (row.template_index(c), col.template_index(c));
        if !cache.contains_key(&key) {
            let m = local_matrix(row.element(c), col.element(c), fr, fc, degree)?;
            cache.insert(key, m.transpose().as_slice().to_vec());
        }
        asm.add_block(row.cell_dofs(c), col.cell_dofs(c), &cache[&key]);
    }
    Ok(asm.finish())
}

/// `(u, v)`.
pub fn assemble_mass(space: &GlobalSpace, degree: usize) -> Result<CsrMatrix> {
    assemble_cell_form(space, space, Field::Value, Field::Value, degree)
}

/// `b(u, v) = (curl u, curl v)`; for scalar spaces the stiffness `(∇u, ∇v)`.
pub fn assemble_curl_curl(space: &GlobalSpace, degree: usize) -> Result<CsrMatrix> {
    assemble_cell_form(space, space, Field::D1, Field::D1, degree)
}

/// `a_h(u, v) = Σ_K (∇ curl u, ∇ curl v)_K`.
pub fn assemble_grad_curl(space: &GlobalSpace, degree: usize) -> Result<CsrMatrix> {
    if space.kind.value_dim() != 3 {
        return Err(Error::Config("a_h needs a vector space".into()));
    }
    assemble_cell_form(space, space, Field::GradCurl, Field::GradCurl, degree)
}

/// `c(v, λ) = (v, ∇λ)` with rows in `w`, columns in `vg`.
pub fn assemble_coupling(w: &GlobalSpace, vg: &GlobalSpace, degree: usize) -> Result<CsrMatrix> {
    if w.kind.value_dim() != 3 || vg.kind.value_dim() != 1 {
        return Err(Error::Config("coupling needs a vector and a scalar space".into()));
    }
    assemble_cell_form(w, vg, Field::Value, Field::D1, degree)
}

/// Boundary faces with their cell and local face index.
pub fn boundary_faces(mesh: &Mesh) -> Vec<(usize, usize, usize)> {
    (0..mesh.n_faces())
        .filter(|&f| mesh.face_on_boundary[f])
        .map(|f| {
            let c = mesh.face_cells[f][0];
            let lf = mesh.cell_faces[c].iter().position(|&g| g == f).expect("incidence");
            (f, c, lf)
        })
        .collect()
}

/// Parts of the boundary terms of the Nitsche form on one face.
struct FaceBlocks {
    /// `-∫ (∂_n curl φ_j)·curl φ_i - ∫ curl φ_j·∂_n curl φ_i`.
    consistency: Vec<f64>,
    /// `h_F⁻¹ ∫ curl φ_j · curl φ_i`.
    penalty: Vec<f64>,
}

fn face_blocks(e: &LocalElement, lf: usize, normal: Vec3, degree: usize) -> Result<FaceBlocks> {
    let (xis, w) = local_face_quadrature(e, lf, degree)?;
    let t = e.tabulate(&xis);
    let n = e.dim();
    let p = LOCAL_FACES[lf].map(|i| e.vertices[i]);
    let h_f = (p[1] - p[0]).norm().max((p[2] - p[0]).norm()).max((p[2] - p[1]).norm());
    let mut consistency = vec![0.0; n * n];
    let mut penalty = vec![0.0; n * n];
    for (q, wq) in w.iter().enumerate() {
        let curls: Vec<Vec3> = (0..n).map(|j| t.d1(q, j)).collect();
        let dn: Vec<Vec3> = (0..n)
            .map(|j| Matrix3::from_row_slice(t.grad_curl(q, j)) * normal)
            .collect();
        for i in 0..n {
            for j in 0..n {
                consistency[i * n + j] -= wq * (dn[j].dot(&curls[i]) + curls[j].dot(&dn[i]));
                penalty[i * n + j] += wq * curls[j].dot(&curls[i]) / h_f;
            }
        }
    }
    Ok(FaceBlocks { consistency, penalty })
}

/// Boundary matrices of the Nitsche form: the consistency/symmetry part and
/// the unscaled penalty `Σ_F h_F⁻¹ (curl u, curl v)_F`.
pub fn assemble_nitsche_boundary(space: &GlobalSpace, degree: usize) -> Result<(CsrMatrix, CsrMatrix)> {
    if space.kind.value_dim() != 3 {
        return Err(Error::Config("Nitsche terms need a vector space".into()));
    }
    let mesh = &space.mesh;
    let mut cache: HashMap<(usize, usize), FaceBlocks> = HashMap::new();
    let mut cons = assembler(space, space);
    let mut pen = assembler(space, space);
    for (_, c, lf) in boundary_faces(mesh) {
        let key = (space.template_index(c), lf);
        if !cache.contains_key(&key) {
            let normal = mesh.outward_normal(c, lf);
            cache.insert(key, face_blocks(space.element(c), lf, normal, degree)?);
        }
        let b = &cache[&key];
        let dofs = space.cell_dofs(c);
        cons.add_block(dofs, dofs, &b.consistency);
        pen.add_block(dofs, dofs, &b.penalty);
    }
    Ok((cons.finish(), pen.finish()))
}

/// `ã_h = a_h + consistency + σ · penalty`.
pub fn assemble_nitsche(space: &GlobalSpace, cfg: &FormConfig) -> Result<CsrMatrix> {
    cfg.validate()?;
    let a = assemble_grad_curl(space, cfg.cell_degree)?;
    let (cons, pen) = assemble_nitsche_boundary(space, cfg.face_degree)?;
    Ok(a.add_scaled(1.0, &cons, 1.0).add_scaled(1.0, &pen, cfg.sigma))
}

/// `(f, φ_i)` by cell quadrature.
pub fn assemble_load<F>(space: &GlobalSpace, f: F, degree: usize) -> Result<Vec<f64>>
where
    F: Fn(&Vec3) -> Vec3,
{
    let mut cache: HashMap<usize, (Vec<Vec3>, Vec<f64>, Tabulation)> = HashMap::new();
    let mut out = vec![0.0; space.dim()];
    let vdim = space.kind.value_dim();
    for c in 0..space.mesh.n_cells() {
        let t = space.template_index(c);
        if !cache.contains_key(&t) {
            let (xis, w) = local_cell_quadrature(space.element(c), degree)?;
            let tab = space.element(c).tabulate(&xis);
            cache.insert(t, (xis, w, tab));
        }
        let (xis, w, tab) = &cache[&t];
        let dofs = space.cell_dofs(c);
        for (q, xi) in xis.iter().enumerate() {
            let fx = f(&space.to_physical(c, xi));
            for (j, &g) in dofs.iter().enumerate() {
                if g == crate::spaces::MASKED {
                    continue;
                }
                let v = tab.value(q, j);
                let s: f64 = (0..vdim).map(|a| v[a] * fx[a]).sum();
                out[g] += w[q] * s;
            }
        }
    }
    Ok(out)
}
