//! Inter-element continuity of discrete `W` functions.

use crate::mesh::NO_CELL;
use crate::polyquad::simplex_quadrature;
use crate::{Result, Vec3};

use super::GlobalSpace;

#[derive(Clone, Copy, Debug, Default)]
pub struct ConformityReport {
    /// Largest jump of `v × n` over interior faces, relative to `max |v|`.
    pub tangential_jump: f64,
    /// Largest `|v × n|` on ∂Ω, relative to `max |v|`.
    pub boundary_trace: f64,
    /// Largest jump of `∫_F (curl v·n) q / |F|` over `q ∈ ℙ₁(F)`, relative to `max |curl v|`.
    pub curl_normal_moment_jump: f64,
}

impl ConformityReport {
    pub fn tangentially_conforming(&self, tol: f64) -> bool {
        self.tangential_jump < tol
    }
}

/// Measures the tangential continuity of a discrete function of a vector space.
pub fn conformity_check(space: &GlobalSpace, coeffs: &[f64]) -> Result<ConformityReport> {
    let mesh = &space.mesh;
    let rule = simplex_quadrature(2, 8)?;
    let mut rep = ConformityReport::default();
    let (mut vmax, mut cmax): (f64, f64) = (0.0, 0.0);
    let mut samples = Vec::new();
    for f in 0..mesh.n_faces() {
        let fr = mesh.face_frame(f);
        let p = mesh.face_points(f);
        let cells = mesh.face_cells[f];
        let mut traces: Vec<Vec<(Vec3, Vec3)>> = Vec::new();
        for &c in cells.iter().filter(|&&c| c != NO_CELL) {
            let local = space.gather(c, coeffs);
            let e = space.element(c);
            let vals = rule
                .points
                .iter()
                .map(|r| {
                    let x = p[0] + r.x * (p[1] - p[0]) + r.y * (p[2] - p[0]);
                    e.eval_combination(&local, &space.to_local(c, &x))
                })
                .collect::<Vec<_>>();
            for (v, cu) in &vals {
                vmax = vmax.max(v.norm());
                cmax = cmax.max(cu.norm());
            }
            traces.push(vals);
        }
        samples.push((f, fr, traces));
    }
    for (f, fr, traces) in samples {
        let n = fr.normal;
        if traces.len() == 2 {
            let mut moments = [0.0f64; 3];
            for (q, ((va, ca), (vb, cb))) in traces[0].iter().zip(&traces[1]).enumerate() {
                rep.tangential_jump = rep.tangential_jump.max((va - vb).cross(&n).norm() / vmax);
                let r = rule.points[q];
                let x = p_of(&mesh.face_points(f), &r);
                let d = (x - fr.centroid) / fr.diameter;
                let test = [1.0, d.dot(&fr.tau1), d.dot(&fr.tau2)];
                let jump = (ca - cb).dot(&n);
                for (m, t) in moments.iter_mut().zip(test) {
                    *m += 2.0 * rule.weights[q] * jump * t;
                }
            }
            for m in moments {
                rep.curl_normal_moment_jump = rep.curl_normal_moment_jump.max(m.abs() / cmax.max(f64::MIN_POSITIVE));
            }
        } else {
            for (v, _) in &traces[0] {
                rep.boundary_trace = rep.boundary_trace.max(v.cross(&n).norm() / vmax);
            }
        }
    }
    Ok(rep)
}

fn p_of(p: &[Vec3; 3], r: &Vec3) -> Vec3 {
    p[0] + r.x * (p[1] - p[0]) + r.y * (p[2] - p[0])
}
