//! Global finite element spaces, the discrete complex operators and
//! canonical interpolation.
//!
//! Global DoFs are numbered entity by entity (vertices, edges, faces,
//! cells). Because cells store their vertices in ascending order, local and
//! global entity frames agree and no sign flips are needed when gathering.

mod complex;
mod conformity;
mod operators;

use std::collections::HashMap;
use std::sync::Arc;

pub use complex::{verify_complex, ComplexReport, ComplexVariant};
pub use conformity::{conformity_check, ConformityReport};
pub use operators::{curl_operator, div_operator, gradient_operator};

use crate::elements::{DofKind, ElementKind, LocalElement};
use crate::mesh::{Entity, EntityCounts, LocalEntity, Mesh};
use crate::{Error, Result, Vec3};

/// Marker for a local DoF that is constrained to zero.
pub const MASKED: usize = usize::MAX;

/// Which boundary DoFs are removed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Boundary {
    /// Every DoF on ∂Ω vanishes.
    Zero,
    /// Only the DoFs fixing the tangential (W, ND) or normal (TW) trace vanish.
    Partial,
    Free,
}

/// A global space over a mesh.
///
/// Piecewise constants always carry the zero-mean constraint, represented by
/// dropping the last cell's coefficient.
#[derive(Clone, Debug)]
pub struct GlobalSpace {
    pub kind: ElementKind,
    pub boundary: Boundary,
    pub mesh: Arc<Mesh>,
    templates: Vec<Arc<LocalElement>>,
    cell_template: Vec<usize>,
    local_dim: usize,
    cell_dofs: Vec<usize>,
    owners: Vec<(usize, usize)>,
}

/// Quantized vertex offsets, identical for translated copies of a cell.
pub(crate) fn shape_key(mesh: &Mesh, cell: usize) -> [i64; 9] {
    let p = mesh.cell_vertices(cell);
    let mut key = [0i64; 9];
    for i in 0..3 {
        let d = (p[i + 1] - p[0]) / mesh.h;
        for a in 0..3 {
            key[3 * i + a] = (d[a] * 1e9).round() as i64;
        }
    }
    key
}

fn is_masked(kind: ElementKind, boundary: Boundary, dof: DofKind, on_boundary: bool) -> bool {
    if !on_boundary {
        return false;
    }
    match (kind, boundary) {
        (ElementKind::Dg0, _) => false,
        (ElementKind::Lagrange(_), _) => true,
        (_, Boundary::Free) => false,
        (_, Boundary::Zero) => true,
        (_, Boundary::Partial) => !matches!(dof, DofKind::FaceCurlRt | DofKind::FaceTangentRt),
    }
}

impl GlobalSpace {
    pub fn new(mesh: Arc<Mesh>, kind: ElementKind, boundary: Boundary) -> Result<GlobalSpace> {
        let mut templates: Vec<Arc<LocalElement>> = Vec::new();
        let mut cache: HashMap<[i64; 9], usize> = HashMap::new();
        let mut cell_template = Vec::with_capacity(mesh.n_cells());
        for c in 0..mesh.n_cells() {
            let key = shape_key(&mesh, c);
            let idx = match cache.get(&key) {
                Some(&i) => i,
                None => {
                    let e = LocalElement::new(kind, mesh.cell_vertices(c))
                        .map_err(|e| Error::Element(format!("cell {c}: {e}")))?;
                    templates.push(Arc::new(e));
                    cache.insert(key, templates.len() - 1);
                    templates.len() - 1
                }
            };
            cell_template.push(idx);
        }
        let proto = &templates[0];
        let local_dim = proto.dim();
        // position of each local DoF among the DoFs of its entity
        let mut slot = vec![0usize; local_dim];
        let mut per_entity: HashMap<LocalEntity, usize> = HashMap::new();
        for (i, d) in proto.dofs.iter().enumerate() {
            let n = per_entity.entry(d.entity).or_insert(0);
            slot[i] = *n;
            *n += 1;
        }
        let count = |e: LocalEntity| per_entity.get(&e).copied().unwrap_or(0);
        let per_type = [
            count(LocalEntity::Vertex(0)),
            count(LocalEntity::Edge(0)),
            count(LocalEntity::Face(0)),
            count(LocalEntity::Cell),
        ];
        let dof_kinds: Vec<DofKind> = proto.dofs.iter().map(|d| d.kind).collect();

        // global numbering, entity by entity
        let n_entities = [mesh.n_vertices(), mesh.n_edges(), mesh.n_faces(), mesh.n_cells()];
        let boundary_of = |t: usize, e: usize| match t {
            0 => mesh.vertex_on_boundary[e],
            1 => mesh.edge_on_boundary[e],
            2 => mesh.face_on_boundary[e],
            _ => false,
        };
        // kinds of the DoFs on an entity type, in slot order
        let kinds_on = |t: usize| -> Vec<DofKind> {
            let ent = [
                LocalEntity::Vertex(0),
                LocalEntity::Edge(0),
                LocalEntity::Face(0),
                LocalEntity::Cell,
            ][t];
            proto.dofs.iter().filter(|d| d.entity == ent).map(|d| d.kind).collect()
        };
        let mut base: [Vec<usize>; 4] = Default::default();
        let mut next = 0usize;
        for t in 0..4 {
            let kinds = kinds_on(t);
            base[t] = vec![MASKED; n_entities[t] * per_type[t]];
            for e in 0..n_entities[t] {
                for (s, &dk) in kinds.iter().enumerate() {
                    let masked = is_masked(kind, boundary, dk, boundary_of(t, e))
                        || (kind == ElementKind::Dg0 && e + 1 == mesh.n_cells());
                    if !masked {
                        base[t][e * per_type[t] + s] = next;
                        next += 1;
                    }
                }
            }
        }
        let mut cell_dofs = Vec::with_capacity(mesh.n_cells() * local_dim);
        let mut owners = vec![(usize::MAX, 0); next];
        for c in 0..mesh.n_cells() {
            for (i, d) in templates[cell_template[c]].dofs.iter().enumerate() {
                let (t, e) = match d.entity {
                    LocalEntity::Vertex(l) => (0, mesh.cells[c][l]),
                    LocalEntity::Edge(l) => (1, mesh.cell_edges[c][l]),
                    LocalEntity::Face(l) => (2, mesh.cell_faces[c][l]),
                    LocalEntity::Cell => (3, c),
                };
                debug_assert_eq!(d.kind, dof_kinds[i]);
                let g = base[t][e * per_type[t] + slot[i]];
                if g != MASKED && owners[g].0 == usize::MAX {
                    owners[g] = (c, i);
                }
                cell_dofs.push(g);
            }
        }
        Ok(GlobalSpace {
            kind,
            boundary,
            mesh,
            templates,
            cell_template,
            local_dim,
            cell_dofs,
            owners,
        })
    }

    pub fn dim(&self) -> usize {
        self.owners.len()
    }

    pub fn local_dim(&self) -> usize {
        self.local_dim
    }

    /// Global indices of the local DoFs of a cell ([`MASKED`] if constrained).
    pub fn cell_dofs(&self, cell: usize) -> &[usize] {
        &self.cell_dofs[cell * self.local_dim..][..self.local_dim]
    }

    pub fn element(&self, cell: usize) -> &LocalElement {
        &self.templates[self.cell_template[cell]]
    }

    pub fn template_index(&self, cell: usize) -> usize {
        self.cell_template[cell]
    }

    pub fn n_templates(&self) -> usize {
        self.templates.len()
    }

    pub fn template(&self, t: usize) -> &LocalElement {
        &self.templates[t]
    }

    /// Cell and local index that define a global DoF.
    pub fn owner(&self, dof: usize) -> (usize, usize) {
        self.owners[dof]
    }

    pub fn dof_kind(&self, dof: usize) -> DofKind {
        let (c, i) = self.owners[dof];
        self.element(c).dofs[i].kind
    }

    pub fn dof_entity(&self, dof: usize) -> Entity {
        let (c, i) = self.owners[dof];
        match self.element(c).dofs[i].entity {
            LocalEntity::Vertex(l) => Entity::Vertex(self.mesh.cells[c][l]),
            LocalEntity::Edge(l) => Entity::Edge(self.mesh.cell_edges[c][l]),
            LocalEntity::Face(l) => Entity::Face(self.mesh.cell_faces[c][l]),
            LocalEntity::Cell => Entity::Cell(c),
        }
    }

    /// Location of every global DoF (center of its entity).
    pub fn dof_coordinates(&self) -> Vec<Vec3> {
        (0..self.dim())
            .map(|g| self.mesh.entity_center(self.dof_entity(g)))
            .collect()
    }

    /// Local coordinates of a physical point in a cell.
    pub fn to_local(&self, cell: usize, x: &Vec3) -> Vec3 {
        (x - self.mesh.cell_centroid(cell)) / self.element(cell).scale
    }

    pub fn to_physical(&self, cell: usize, xi: &Vec3) -> Vec3 {
        self.mesh.cell_centroid(cell) + xi * self.element(cell).scale
    }

    pub fn gather(&self, cell: usize, coeffs: &[f64]) -> Vec<f64> {
        self.cell_dofs(cell)
            .iter()
            .map(|&g| if g == MASKED { 0.0 } else { coeffs[g] })
            .collect()
    }

    /// Value and first derivative (curl or gradient) of a discrete function
    /// at a physical point of a cell.
    pub fn evaluate(&self, coeffs: &[f64], cell: usize, x: &Vec3) -> (Vec3, Vec3) {
        let local = self.gather(cell, coeffs);
        self.element(cell).eval_combination(&local, &self.to_local(cell, x))
    }

    /// Canonical interpolation of a field given cell by cell; the closure
    /// receives the cell and a physical point and returns the value (first
    /// component for scalars) and the curl.
    pub fn interpolate_piecewise<F>(&self, mut field: F) -> Vec<f64>
    where
        F: FnMut(usize, &Vec3) -> (Vec3, Vec3),
    {
        (0..self.dim())
            .map(|g| {
                let (c, i) = self.owners[g];
                let center = self.mesh.cell_centroid(c);
                self.element(c).apply_dof(i, &center, |x| field(c, x))
            })
            .collect()
    }

    /// Canonical interpolation of a globally defined field.
    pub fn interpolate<F>(&self, field: F) -> Vec<f64>
    where
        F: Fn(&Vec3) -> (Vec3, Vec3),
    {
        self.interpolate_piecewise(|_, x| field(x))
    }
}

/// Dimension predicted by the entity counts, for spaces with zero boundary
/// conditions (and the zero-mean constant space).
pub fn dimension_formula(kind: ElementKind, c: &EntityCounts) -> usize {
    match kind {
        ElementKind::GradCurl(k) => (k + 1) * c.interior_edges + (k + 4) * c.interior_faces,
        ElementKind::Nedelec(k) => (k + 1) * c.interior_edges + (k + 1) * c.interior_faces,
        ElementKind::TaiWinther => 6 * c.interior_faces,
        ElementKind::Lagrange(p) => {
            let k = p - 1;
            c.interior_vertices + k * c.interior_edges + (k - 1) * c.interior_faces
        }
        ElementKind::Dg0 => c.cells - 1,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_uniform_cube_mesh;

    fn mesh(n: usize) -> Arc<Mesh> {
        Arc::new(build_uniform_cube_mesh(n).unwrap())
    }

    #[test]
    fn single_cube_dimensions() {
        let m = mesh(1);
        let dim = |kind, bc| GlobalSpace::new(m.clone(), kind, bc).unwrap().dim();
        assert_eq!(dim(ElementKind::GradCurl(1), Boundary::Zero), 32);
        assert_eq!(dim(ElementKind::Lagrange(2), Boundary::Zero), 1);
        assert_eq!(dim(ElementKind::TaiWinther, Boundary::Zero), 36);
        assert_eq!(dim(ElementKind::Dg0, Boundary::Zero), 5);
    }

    #[test]
    fn dimension_formulas_hold() {
        for n in 1..=3 {
            let m = mesh(n);
            let c = m.counts();
            for kind in [
                ElementKind::GradCurl(1),
                ElementKind::GradCurl(2),
                ElementKind::Nedelec(1),
                ElementKind::TaiWinther,
                ElementKind::Lagrange(2),
                ElementKind::Lagrange(3),
                ElementKind::Dg0,
            ] {
                let s = GlobalSpace::new(m.clone(), kind, Boundary::Zero).unwrap();
                assert_eq!(s.dim(), dimension_formula(kind, &c), "n={n} {kind}");
            }
            let boundary_faces = c.faces - c.interior_faces;
            let wp = GlobalSpace::new(m.clone(), ElementKind::GradCurl(1), Boundary::Partial).unwrap();
            assert_eq!(
                wp.dim(),
                dimension_formula(ElementKind::GradCurl(1), &c) + 3 * boundary_faces
            );
            let vp = GlobalSpace::new(m.clone(), ElementKind::TaiWinther, Boundary::Partial).unwrap();
            assert_eq!(vp.dim(), 6 * c.interior_faces + 3 * boundary_faces);
        }
    }

    #[test]
    fn cube_mesh_needs_six_templates() {
        let s = GlobalSpace::new(mesh(3), ElementKind::GradCurl(1), Boundary::Zero).unwrap();
        assert_eq!(s.n_templates(), 6);
    }

    #[test]
    fn interpolation_reproduces_members() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand::rngs::StdRng::seed_from_u64(2);
        for (kind, bc) in [
            (ElementKind::GradCurl(1), Boundary::Zero),
            (ElementKind::GradCurl(2), Boundary::Partial),
            (ElementKind::TaiWinther, Boundary::Partial),
            (ElementKind::Lagrange(3), Boundary::Zero),
        ] {
            let s = GlobalSpace::new(mesh(2), kind, bc).unwrap();
            let u: Vec<f64> = (0..s.dim()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let back = s.interpolate_piecewise(|c, x| s.evaluate(&u, c, x));
            let err = u.iter().zip(&back).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            assert!(err < 1e-10, "{kind}: {err}");
        }
    }

    #[test]
    fn smooth_interpolation_converges() {
        // ‖v - Iv‖₀ for a trigonometric field on n = 2, 4
        let field = |x: &Vec3| {
            let v = Vec3::new((x.y * 3.0).sin(), (x.z * 2.0).cos(), (x.x + x.y).sin());
            let curl = Vec3::new(
                2.0 * (x.z * 2.0).sin() + (x.x + x.y).cos(),
                -(x.x + x.y).cos(),
                -3.0 * (x.y * 3.0).cos(),
            );
            (v, curl)
        };
        let mut errs = Vec::new();
        for n in [2, 4] {
            let s = GlobalSpace::new(mesh(n), ElementKind::GradCurl(1), Boundary::Free).unwrap();
            let u = s.interpolate(field);
            let rule = crate::polyquad::simplex_quadrature(3, 6).unwrap();
            let mut e2 = 0.0;
            for c in 0..s.mesh.n_cells() {
                let a = s.mesh.affine_map(c).unwrap();
                for (p, w) in rule.points.iter().zip(&rule.weights) {
                    let x = a.map(p);
                    let (vh, _) = s.evaluate(&u, c, &x);
                    e2 += w * a.det * (vh - field(&x).0).norm_squared();
                }
            }
            errs.push(e2.sqrt());
        }
        let rate = (errs[0] / errs[1]).log2();
        assert!(rate > 1.7, "rate {rate}, errors {errs:?}");
    }
}
