//! Sparse assembly of bilinear forms and load vectors.

pub mod forms;
pub mod sparse;

pub use forms::{
    assemble_cell_form, assemble_coupling, assemble_curl_curl, assemble_grad_curl, assemble_load, assemble_mass,
    assemble_nitsche, assemble_nitsche_boundary, boundary_faces, local_cell_quadrature, local_face_quadrature, Field,
    FormConfig,
};
pub use sparse::{CsrMatrix, PatternAssembler};
