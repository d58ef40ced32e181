//! Legacy ASCII VTK output.

use std::io::Write;

use super::Mesh;
use crate::Result;

pub(super) fn write<W: Write>(mesh: &Mesh, mut out: W) -> Result<()> {
    writeln!(out, "# vtk DataFile Version 3.0")?;
    writeln!(out, "tetrahedral mesh")?;
    writeln!(out, "ASCII")?;
    writeln!(out, "DATASET UNSTRUCTURED_GRID")?;
    writeln!(out, "POINTS {} double", mesh.n_vertices())?;
    for p in &mesh.vertices {
        writeln!(out, "{} {} {}", p.x, p.y, p.z)?;
    }
    writeln!(out, "CELLS {} {}", mesh.n_cells(), 5 * mesh.n_cells())?;
    for c in &mesh.cells {
        writeln!(out, "4 {} {} {} {}", c[0], c[1], c[2], c[3])?;
    }
    writeln!(out, "CELL_TYPES {}", mesh.n_cells())?;
    for _ in &mesh.cells {
        writeln!(out, "10")?;
    }
    Ok(())
}
