//! Error norms of a discrete solution against the manufactured `u₀`.

use std::collections::HashMap;

use nalgebra::Matrix3;
use serde::Serialize;

use super::manufactured::ManufacturedProblem;
use crate::assembly::{boundary_faces, local_cell_quadrature, local_face_quadrature};
use crate::elements::Tabulation;
use crate::solver::Solution;
use crate::spaces::GlobalSpace;
use crate::{Error, Result, Vec3};

#[derive(Clone, Copy, Debug, Default, Serialize)]
pub struct ErrorReport {
    pub h: f64,
    /// `‖u₀ - u_h‖₀`.
    pub l2: f64,
    /// `‖curl(u₀ - u_h)‖₀`.
    pub curl: f64,
    /// `‖u₀ - u_h‖_{ε,h}`.
    pub energy: f64,
    /// `⦀u₀ - u_h⦀_{ε,h}`, adding `ε² Σ_F h_F⁻¹ ‖curl(u₀ - u_h)‖²_F` over ∂Ω.
    pub triple: f64,
    /// `|λ_h|₁`.
    pub lambda_h1: f64,
    /// `‖f‖₀`.
    pub f_norm: f64,
}

/// Broken squared norms of `u₀ - u_h`: value, curl and gradient of the curl.
fn cell_errors(space: &GlobalSpace, u: &[f64], problem: &ManufacturedProblem, degree: usize) -> Result<[f64; 4]> {
    let mut cache: HashMap<usize, (Vec<Vec3>, Vec<f64>, Tabulation)> = HashMap::new();
    let mut acc = [0.0; 4];
    for c in 0..space.mesh.n_cells() {
        let t = space.template_index(c);
        if !cache.contains_key(&t) {
            let e = space.element(c);
            let (xis, w) = local_cell_quadrature(e, degree)?;
            let tab = e.tabulate(&xis);
            cache.insert(t, (xis, w, tab));
        }
        let (xis, w, tab) = &cache[&t];
        let local = space.gather(c, u);
        for (q, xi) in xis.iter().enumerate() {
            let x = space.to_physical(c, xi);
            let (mut v, mut cu, mut gc) = (Vec3::zeros(), Vec3::zeros(), Matrix3::zeros());
            for (j, &a) in local.iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                v += tab.value3(q, j) * a;
                cu += tab.d1(q, j) * a;
                gc += Matrix3::from_row_slice(tab.grad_curl(q, j)) * a;
            }
            acc[0] += w[q] * (problem.u0(&x) - v).norm_squared();
            acc[1] += w[q] * (problem.curl_u0(&x) - cu).norm_squared();
            acc[2] += w[q] * (problem.grad_curl_u0(&x) - gc).norm_squared();
            acc[3] += w[q] * problem.f(&x).norm_squared();
        }
    }
    Ok(acc)
}

/// `Σ_F h_F⁻¹ ‖curl(u₀ - u_h)‖²_F` over boundary faces.
fn boundary_curl_error(space: &GlobalSpace, u: &[f64], problem: &ManufacturedProblem, degree: usize) -> Result<f64> {
    let mesh = &space.mesh;
    let mut acc = 0.0;
    for (f, c, lf) in boundary_faces(mesh) {
        let e = space.element(c);
        let (xis, w) = local_face_quadrature(e, lf, degree)?;
        let h_f = mesh.face_diameter(f);
        let local = space.gather(c, u);
        let tab = e.tabulate(&xis);
        for (q, xi) in xis.iter().enumerate() {
            let x = space.to_physical(c, xi);
            let cu: Vec3 = local.iter().enumerate().map(|(j, a)| tab.d1(q, j) * *a).sum();
            acc += w[q] * (problem.curl_u0(&x) - cu).norm_squared() / h_f;
        }
    }
    Ok(acc)
}

/// Errors of `solution` on the spaces it was computed with.
pub fn compute_errors(
    w: &GlobalSpace,
    vg: &GlobalSpace,
    solution: &Solution,
    problem: &ManufacturedProblem,
    degree: usize,
) -> Result<ErrorReport> {
    if solution.u.len() != w.dim() || solution.lambda.len() != vg.dim() {
        return Err(Error::Dimension("solution does not match the spaces".into()));
    }
    let mut report = coefficient_errors(w, &solution.u, problem, degree)?;
    let stiffness = crate::assembly::assemble_curl_curl(vg, degree)?;
    report.lambda_h1 = stiffness.bilinear(&solution.lambda, &solution.lambda).max(0.0).sqrt();
    Ok(report)
}

/// Errors of a coefficient vector of `w` alone (interpolants, for instance).
pub fn coefficient_errors(
    w: &GlobalSpace,
    u: &[f64],
    problem: &ManufacturedProblem,
    degree: usize,
) -> Result<ErrorReport> {
    let [l2, curl, grad_curl, f2] = cell_errors(w, u, problem, degree)?;
    let eps2 = problem.eps * problem.eps;
    let energy2 = l2 + curl + eps2 * grad_curl;
    let boundary = if eps2 > 0.0 {
        boundary_curl_error(w, u, problem, degree.min(10))?
    } else {
        0.0
    };
    Ok(ErrorReport {
        h: w.mesh.spacing(),
        l2: l2.sqrt(),
        curl: curl.sqrt(),
        energy: energy2.sqrt(),
        triple: (energy2 + eps2 * boundary).sqrt(),
        lambda_h1: 0.0,
        f_norm: f2.sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::elements::ElementKind;
    use crate::mesh::build_uniform_cube_mesh;
    use crate::spaces::Boundary;

    fn interpolant_errors(n: usize, eps: f64) -> ErrorReport {
        let m = Arc::new(build_uniform_cube_mesh(n).unwrap());
        let w = GlobalSpace::new(m, ElementKind::GradCurl(1), Boundary::Free).unwrap();
        let p = ManufacturedProblem::new(eps);
        let u = w.interpolate(|x| (p.u0(x), p.curl_u0(x)));
        coefficient_errors(&w, &u, &p, 10).unwrap()
    }

    #[test]
    fn interpolation_errors_decrease() {
        let (a, b) = (interpolant_errors(2, 1e-3), interpolant_errors(4, 1e-3));
        assert!(a.l2 > 0.0 && b.l2 > 0.0);
        assert!(b.l2 < a.l2 && b.curl < a.curl && b.energy < a.energy);
        assert!(b.triple >= b.energy);
    }

    /// `‖f‖₀` from one-dimensional integrals (`a(1/2) = 1`); the trapezoid rule is exact
    /// for the trigonometric polynomials involved.
    fn exact_load_norm() -> f64 {
        let p = ManufacturedProblem::new(0.0);
        let m = 64;
        let integral = |i: usize, j: usize| {
            (0..m)
                .map(|q| {
                    let x = Vec3::new(q as f64 / m as f64, 0.5, 0.5);
                    p.psi([i, 0, 0], &x) * p.psi([j, 0, 0], &x)
                })
                .sum::<f64>()
                / m as f64
        };
        let terms = [[3, 0, 0], [1, 2, 0], [1, 0, 2]];
        let mut one = 0.0;
        for s in &terms {
            for t in &terms {
                one += (0..3).map(|d| integral(s[d], t[d])).product::<f64>();
            }
        }
        (2.0 * one).sqrt()
    }

    #[test]
    fn load_norm_matches_closed_form() {
        let exact = exact_load_norm();
        let r = interpolant_errors(4, 0.0);
        assert!((r.f_norm - exact).abs() < 1e-6 * exact, "{} vs {exact}", r.f_norm);
    }
}
