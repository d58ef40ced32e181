//! Tetrahedral meshes of the unit cube with globally oriented entities.
//!
//! Cells store their vertices in ascending global order, so the local
//! orientation of every edge and face coincides with the global one:
//! edge tangents run from the lower to the higher vertex index and face
//! normals are the right-handed normals of the ascending vertex triple.

mod affine;
mod vtk;

use std::io::Write;

pub use affine::AffineMap;

use crate::{Error, Result, Vec3};

/// Local vertex pairs of the six edges of a tetrahedron.
pub const LOCAL_EDGES: [[usize; 2]; 6] = [[0, 1], [0, 2], [0, 3], [1, 2], [1, 3], [2, 3]];

/// Local vertex triples of the four faces; face `i` is opposite vertex `i`.
pub const LOCAL_FACES: [[usize; 3]; 4] = [[1, 2, 3], [0, 2, 3], [0, 1, 3], [0, 1, 2]];

pub const NO_CELL: usize = usize::MAX;

/// A sub-entity of a cell, by local index.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum LocalEntity {
    Vertex(usize),
    Edge(usize),
    Face(usize),
    Cell,
}

/// A mesh entity, by global index.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Entity {
    Vertex(usize),
    Edge(usize),
    Face(usize),
    Cell(usize),
}

#[derive(Clone, Debug)]
pub struct Mesh {
    pub vertices: Vec<Vec3>,
    /// Vertex pairs, ascending, sorted lexicographically.
    pub edges: Vec<[usize; 2]>,
    /// Vertex triples, ascending, sorted lexicographically.
    pub faces: Vec<[usize; 3]>,
    /// Vertex quadruples, ascending.
    pub cells: Vec<[usize; 4]>,
    pub cell_edges: Vec<[usize; 6]>,
    pub cell_faces: Vec<[usize; 4]>,
    /// The one or two cells adjacent to a face; the second is [`NO_CELL`] on ∂Ω.
    pub face_cells: Vec<[usize; 2]>,
    /// First cell containing each vertex / edge, with the local index there.
    pub vertex_owner: Vec<(usize, usize)>,
    pub edge_owner: Vec<(usize, usize)>,
    pub vertex_on_boundary: Vec<bool>,
    pub edge_on_boundary: Vec<bool>,
    pub face_on_boundary: Vec<bool>,
    /// Largest cell diameter.
    pub h: f64,
    /// Subdivisions per axis for cube meshes, zero otherwise.
    pub subdivisions: usize,
}

/// Entity counts used by the dimension and Euler bookkeeping.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EntityCounts {
    pub vertices: usize,
    pub edges: usize,
    pub faces: usize,
    pub cells: usize,
    pub interior_vertices: usize,
    pub interior_edges: usize,
    pub interior_faces: usize,
}

/// Uniform mesh of `[0,1]^3` with `n` cubes per axis, each cube split into
/// six tetrahedra sharing its main diagonal.
pub fn build_uniform_cube_mesh(n: usize) -> Result<Mesh> {
    if n == 0 {
        return Err(Error::Config("cube mesh needs at least one subdivision".into()));
    }
    let np = n + 1;
    let vid = |i: usize, j: usize, k: usize| i + np * (j + np * k);
    let mut vertices = Vec::with_capacity(np * np * np);
    for k in 0..np {
        for j in 0..np {
            for i in 0..np {
                vertices.push(Vec3::new(i as f64, j as f64, k as f64) / n as f64);
            }
        }
    }
    const PERMS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    let mut cells = Vec::with_capacity(6 * n * n * n);
    for k in 0..n {
        for j in 0..n {
            for i in 0..n {
                for perm in PERMS {
                    let mut p = [i, j, k];
                    let mut cell = [vid(i, j, k), 0, 0, 0];
                    for (step, &axis) in perm.iter().enumerate() {
                        p[axis] += 1;
                        cell[step + 1] = vid(p[0], p[1], p[2]);
                    }
                    cells.push(cell);
                }
            }
        }
    }
    let mut mesh = Mesh::from_cells(vertices, cells)?;
    mesh.subdivisions = n;
    Ok(mesh)
}

fn sorted<const N: usize>(mut a: [usize; N]) -> [usize; N] {
    a.sort_unstable();
    a
}

impl Mesh {
    /// Builds the entity tables of an arbitrary tetrahedral complex.
    ///
    /// Degenerate cells are accepted here; they are reported by
    /// [`Mesh::affine_map`] and [`Mesh::validate`].
    pub fn from_cells(vertices: Vec<Vec3>, cells: Vec<[usize; 4]>) -> Result<Mesh> {
        let cells: Vec<[usize; 4]> = cells.into_iter().map(sorted).collect();
        for c in &cells {
            if c.iter().any(|&v| v >= vertices.len()) {
                return Err(Error::Mesh(format!("cell {c:?} references a missing vertex")));
            }
            if c.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::Mesh(format!("cell {c:?} repeats a vertex")));
            }
        }
        let mut edges: Vec<[usize; 2]> = cells
            .iter()
            .flat_map(|c| LOCAL_EDGES.iter().map(move |e| [c[e[0]], c[e[1]]]))
            .collect();
        edges.sort_unstable();
        edges.dedup();
        let mut faces: Vec<[usize; 3]> = cells
            .iter()
            .flat_map(|c| LOCAL_FACES.iter().map(move |f| [c[f[0]], c[f[1]], c[f[2]]]))
            .collect();
        faces.sort_unstable();
        faces.dedup();

        let mut cell_edges = Vec::with_capacity(cells.len());
        let mut cell_faces = Vec::with_capacity(cells.len());
        let mut face_cells = vec![[NO_CELL; 2]; faces.len()];
        let mut vertex_owner = vec![(NO_CELL, 0); vertices.len()];
        let mut edge_owner = vec![(NO_CELL, 0); edges.len()];
        for (ci, c) in cells.iter().enumerate() {
            let mut ce = [0; 6];
            for (le, e) in LOCAL_EDGES.iter().enumerate() {
                let g = edges.binary_search(&[c[e[0]], c[e[1]]]).expect("edge table");
                ce[le] = g;
                if edge_owner[g].0 == NO_CELL {
                    edge_owner[g] = (ci, le);
                }
            }
            let mut cf = [0; 4];
            for (lf, f) in LOCAL_FACES.iter().enumerate() {
                let g = faces.binary_search(&[c[f[0]], c[f[1]], c[f[2]]]).expect("face table");
                cf[lf] = g;
                let slot = &mut face_cells[g];
                if slot[0] == NO_CELL {
                    slot[0] = ci;
                } else if slot[1] == NO_CELL {
                    slot[1] = ci;
                } else {
                    return Err(Error::Mesh(format!(
                        "face {:?} shared by more than two cells",
                        faces[g]
                    )));
                }
            }
            for (lv, &v) in c.iter().enumerate() {
                if vertex_owner[v].0 == NO_CELL {
                    vertex_owner[v] = (ci, lv);
                }
            }
            cell_edges.push(ce);
            cell_faces.push(cf);
        }
        if vertex_owner.iter().any(|o| o.0 == NO_CELL) {
            return Err(Error::Mesh("mesh has vertices not used by any cell".into()));
        }
        let face_on_boundary: Vec<bool> = face_cells.iter().map(|fc| fc[1] == NO_CELL).collect();
        let mut vertex_on_boundary = vec![false; vertices.len()];
        let mut edge_on_boundary = vec![false; edges.len()];
        for (f, fv) in faces.iter().enumerate() {
            if !face_on_boundary[f] {
                continue;
            }
            for &v in fv {
                vertex_on_boundary[v] = true;
            }
            for pair in [[fv[0], fv[1]], [fv[0], fv[2]], [fv[1], fv[2]]] {
                let e = edges.binary_search(&pair).expect("face edge");
                edge_on_boundary[e] = true;
            }
        }
        let h = cells.iter().map(|c| cell_diameter(&vertices, c)).fold(0.0, f64::max);
        Ok(Mesh {
            vertices,
            edges,
            faces,
            cells,
            cell_edges,
            cell_faces,
            face_cells,
            vertex_owner,
            edge_owner,
            vertex_on_boundary,
            edge_on_boundary,
            face_on_boundary,
            h,
            subdivisions: 0,
        })
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }
    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }
    pub fn n_faces(&self) -> usize {
        self.faces.len()
    }
    pub fn n_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn counts(&self) -> EntityCounts {
        let interior = |flags: &[bool]| flags.iter().filter(|b| !**b).count();
        EntityCounts {
            vertices: self.n_vertices(),
            edges: self.n_edges(),
            faces: self.n_faces(),
            cells: self.n_cells(),
            interior_vertices: interior(&self.vertex_on_boundary),
            interior_edges: interior(&self.edge_on_boundary),
            interior_faces: interior(&self.face_on_boundary),
        }
    }

    /// `V - E + F - T`, which is 1 for a triangulated ball.
    pub fn euler_characteristic(&self) -> i64 {
        self.n_vertices() as i64 - self.n_edges() as i64 + self.n_faces() as i64 - self.n_cells() as i64
    }

    /// Cube spacing `1/n` for cube meshes, otherwise the largest diameter.
    pub fn spacing(&self) -> f64 {
        if self.subdivisions > 0 {
            1.0 / self.subdivisions as f64
        } else {
            self.h
        }
    }

    pub fn cell_vertices(&self, cell: usize) -> [Vec3; 4] {
        self.cells[cell].map(|v| self.vertices[v])
    }

    pub fn cell_centroid(&self, cell: usize) -> Vec3 {
        self.cell_vertices(cell).iter().sum::<Vec3>() / 4.0
    }

    pub fn cell_volume(&self, cell: usize) -> f64 {
        signed_volume(&self.cell_vertices(cell)).abs()
    }

    pub fn cell_diameter(&self, cell: usize) -> f64 {
        cell_diameter(&self.vertices, &self.cells[cell])
    }

    pub fn edge_tangent(&self, e: usize) -> Vec3 {
        let [a, b] = self.edges[e];
        (self.vertices[b] - self.vertices[a]).normalize()
    }

    pub fn edge_length(&self, e: usize) -> f64 {
        let [a, b] = self.edges[e];
        (self.vertices[b] - self.vertices[a]).norm()
    }

    pub fn edge_midpoint(&self, e: usize) -> Vec3 {
        let [a, b] = self.edges[e];
        0.5 * (self.vertices[a] + self.vertices[b])
    }

    pub fn face_frame(&self, f: usize) -> FaceFrame {
        FaceFrame::new(&self.face_points(f))
    }

    pub fn face_points(&self, f: usize) -> [Vec3; 3] {
        self.faces[f].map(|v| self.vertices[v])
    }

    /// Global unit normal of a face: right-handed w.r.t. its ascending vertices.
    pub fn face_normal(&self, f: usize) -> Vec3 {
        let [p0, p1, p2] = self.face_points(f);
        (p1 - p0).cross(&(p2 - p0)).normalize()
    }

    pub fn face_area(&self, f: usize) -> f64 {
        let [p0, p1, p2] = self.face_points(f);
        0.5 * (p1 - p0).cross(&(p2 - p0)).norm()
    }

    pub fn face_centroid(&self, f: usize) -> Vec3 {
        self.face_points(f).iter().sum::<Vec3>() / 3.0
    }

    pub fn face_diameter(&self, f: usize) -> f64 {
        let [p0, p1, p2] = self.face_points(f);
        (p1 - p0).norm().max((p2 - p0).norm()).max((p2 - p1).norm())
    }

    /// Sign relating a cell's local orientation of a sub-entity to the
    /// global one: for edges, local vertex order versus ascending global
    /// order; for faces, the cell-outward normal versus `n_F`.
    pub fn entity_orientation_sign(&self, cell: usize, entity: LocalEntity) -> i8 {
        let c = &self.cells[cell];
        match entity {
            LocalEntity::Edge(le) => {
                let [a, b] = LOCAL_EDGES[le];
                if c[a] < c[b] {
                    1
                } else {
                    -1
                }
            }
            LocalEntity::Face(lf) => {
                let f = self.cell_faces[cell][lf];
                let n = self.face_normal(f);
                let outward = self.face_centroid(f) - self.vertices[c[lf]];
                if n.dot(&outward) > 0.0 {
                    1
                } else {
                    -1
                }
            }
            LocalEntity::Vertex(_) | LocalEntity::Cell => 1,
        }
    }

    /// Unit outward normal of a cell on one of its faces.
    pub fn outward_normal(&self, cell: usize, local_face: usize) -> Vec3 {
        let f = self.cell_faces[cell][local_face];
        self.face_normal(f) * self.entity_orientation_sign(cell, LocalEntity::Face(local_face)) as f64
    }

    pub fn affine_map(&self, cell: usize) -> Result<AffineMap> {
        AffineMap::new(&self.cell_vertices(cell)).map_err(|e| Error::Mesh(format!("cell {cell}: {e}")))
    }

    /// Representative point of an entity (vertex, midpoint or barycenter).
    pub fn entity_center(&self, entity: Entity) -> Vec3 {
        match entity {
            Entity::Vertex(v) => self.vertices[v],
            Entity::Edge(e) => self.edge_midpoint(e),
            Entity::Face(f) => self.face_centroid(f),
            Entity::Cell(c) => self.cell_centroid(c),
        }
    }

    /// Checks the structural invariants: face multiplicity, Euler relation
    /// and non-degenerate cells.
    pub fn validate(&self) -> Result<()> {
        for (f, fc) in self.face_cells.iter().enumerate() {
            if fc[0] == NO_CELL {
                return Err(Error::Mesh(format!("face {f} has no cell")));
            }
        }
        if self.euler_characteristic() != 1 {
            return Err(Error::Mesh(format!(
                "Euler characteristic {} != 1",
                self.euler_characteristic()
            )));
        }
        for c in 0..self.n_cells() {
            self.affine_map(c)?;
        }
        Ok(())
    }

    /// Writes points and tetrahedra as legacy ASCII VTK.
    pub fn write_vtk<W: Write>(&self, out: W) -> Result<()> {
        vtk::write(self, out)
    }
}

/// In-plane frame of a triangle given in ascending global vertex order.
#[derive(Clone, Copy, Debug)]
pub struct FaceFrame {
    pub normal: Vec3,
    pub tau1: Vec3,
    pub tau2: Vec3,
    pub centroid: Vec3,
    pub diameter: f64,
    pub area: f64,
}

impl FaceFrame {
    pub fn new(p: &[Vec3; 3]) -> FaceFrame {
        let cross = (p[1] - p[0]).cross(&(p[2] - p[0]));
        let normal = cross.normalize();
        let tau1 = (p[1] - p[0]).normalize();
        FaceFrame {
            normal,
            tau1,
            tau2: normal.cross(&tau1),
            centroid: (p[0] + p[1] + p[2]) / 3.0,
            diameter: (p[1] - p[0]).norm().max((p[2] - p[0]).norm()).max((p[2] - p[1]).norm()),
            area: 0.5 * cross.norm(),
        }
    }
}

pub(crate) fn signed_volume(p: &[Vec3; 4]) -> f64 {
    (p[1] - p[0]).cross(&(p[2] - p[0])).dot(&(p[3] - p[0])) / 6.0
}

fn cell_diameter(vertices: &[Vec3], c: &[usize; 4]) -> f64 {
    LOCAL_EDGES
        .iter()
        .map(|e| (vertices[c[e[1]]] - vertices[c[e[0]]]).norm())
        .fold(0.0, f64::max)
}
