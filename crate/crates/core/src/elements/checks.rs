//! Structural checks on dualized elements.

use nalgebra::DMatrix;
use rand::Rng;

use super::{DofKind, ElementKind, LocalElement, SpanPart};
use crate::mesh::{FaceFrame, LOCAL_EDGES, LOCAL_FACES};
use crate::polyquad::{simplex_quadrature, PolynomialField};
use crate::{Error, Result, Vec3};

/// Outcome of the kernel check of the local curl on `W_k(K)`.
#[derive(Clone, Debug)]
pub struct KernelReport {
    pub nullity: usize,
    pub expected_nullity: usize,
    /// Largest relative non-gradient component of a null vector.
    pub gradient_residual: f64,
    /// `σ_min / σ_max` of the curl restricted to the non-gradient summands.
    pub complement_injectivity: f64,
}

impl KernelReport {
    pub fn passed(&self) -> bool {
        self.nullity == self.expected_nullity && self.gradient_residual < 1e-8 && self.complement_injectivity > 1e-10
    }
}

fn tw_dofs_of(tw: &LocalElement, field: &PolynomialField) -> Vec<f64> {
    tw.dofs.iter().map(|d| d.apply_poly(field, None)).collect()
}

/// Verifies that the null space of the curl on `W_k(K)` is `∇ℙ_{k+1}(K)`
/// and that the curl is injective on the remaining summands.
pub fn kernel_check(w: &LocalElement, tw: &LocalElement) -> Result<KernelReport> {
    let ElementKind::GradCurl(k) = w.kind else {
        return Err(Error::Config("kernel check needs a W element".into()));
    };
    if tw.kind != ElementKind::TaiWinther || tw.vertices != w.vertices {
        return Err(Error::Config(
            "kernel check needs the TW element on the same cell".into(),
        ));
    }
    let n = w.dim();
    // curl W ⊂ V^d, so TW DoFs of the curl vanish iff the curl does
    let mut cs = DMatrix::zeros(tw.dim(), n);
    for (j, f) in w.span.iter().enumerate() {
        let col = tw_dofs_of(tw, &f.curl());
        cs.set_column(j, &nalgebra::DVector::from_vec(col));
    }
    // pad to square so the SVD exposes the full right null space
    let mut c = DMatrix::zeros(n.max(tw.dim()), n);
    c.rows_mut(0, tw.dim()).copy_from(&(&cs * &w.coeffs));
    let svd = c.svd(false, true);
    let v_t = svd.v_t.expect("right singular vectors");
    let smax = svd.singular_values.max();
    let mut nullity = 0;
    let mut residual: f64 = 0.0;
    for i in 0..n {
        if svd.singular_values[i] > 1e-10 * smax {
            continue;
        }
        nullity += 1;
        let s = &w.coeffs * v_t.row(i).transpose();
        let total = s.norm();
        let off: f64 = s
            .iter()
            .zip(&w.span_parts)
            .filter(|(_, p)| **p != SpanPart::Gradient)
            .map(|(x, _)| x * x)
            .sum::<f64>()
            .sqrt();
        residual = residual.max(off / total);
    }
    let cols: Vec<usize> = (0..n).filter(|&j| w.span_parts[j] != SpanPart::Gradient).collect();
    let sub = cs.select_columns(&cols);
    let sv = sub.svd(false, false).singular_values;
    let expected = (k + 2) * (k + 3) * (k + 4) / 6 - 1;
    Ok(KernelReport {
        nullity,
        expected_nullity: expected,
        gradient_residual: residual,
        complement_injectivity: sv.min() / sv.max(),
    })
}

/// Largest relative coefficient of `curl φ_j - Π_TW curl φ_j` over the
/// basis of `W_k(K)`; zero when `curl W_k(K) ⊂ V^d(K)`.
pub fn local_complex_residual(w: &LocalElement, tw: &LocalElement) -> f64 {
    let mut worst: f64 = 0.0;
    for curl in &w.basis_d1 {
        let d = tw_dofs_of(tw, curl);
        let interp = PolynomialField::combination(&tw.basis, &d);
        let diff = curl.add(&interp.scaled(-1.0));
        worst = worst.max(diff.max_abs_coeff() / curl.max_abs_coeff().max(1.0));
    }
    worst
}

/// Tangential trace of a random member of `W_k(K)` whose edge and
/// tangential face moments vanish, relative to its size inside the cell.
pub fn tangential_trace_residual<R: Rng>(w: &LocalElement, rng: &mut R) -> Result<f64> {
    let coeffs: Vec<f64> = w
        .dofs
        .iter()
        .map(|d| {
            if d.kind == DofKind::FaceCurlRt {
                rng.gen_range(-1.0..1.0)
            } else {
                0.0
            }
        })
        .collect();
    let field = PolynomialField::combination(&w.basis, &coeffs);
    let rule = simplex_quadrature(2, 8)?;
    let mut trace: f64 = 0.0;
    let mut size: f64 = 0.0;
    for f in LOCAL_FACES {
        let p = f.map(|i| w.vertices[i]);
        let n = FaceFrame::new(&p).normal;
        for r in &rule.points {
            let x = p[0] + r.x * (p[1] - p[0]) + r.y * (p[2] - p[0]);
            trace = trace.max(field.eval_vec(&w.to_local(&x)).cross(&n).norm());
        }
    }
    let cell = simplex_quadrature(3, 4)?;
    for r in &cell.points {
        let v = &w.vertices;
        let x = v[0] + r.x * (v[1] - v[0]) + r.y * (v[2] - v[0]) + r.z * (v[3] - v[0]);
        size = size.max(field.eval_vec(&w.to_local(&x)).norm());
    }
    Ok(trace / size.max(f64::MIN_POSITIVE))
}

/// Diameter over inscribed-ball diameter.
pub fn shape_ratio(p: &[Vec3; 4]) -> f64 {
    let vol = crate::mesh::signed_volume(p).abs();
    let area: f64 = LOCAL_FACES.iter().map(|f| FaceFrame::new(&f.map(|i| p[i])).area).sum();
    let diam = LOCAL_EDGES
        .iter()
        .map(|e| (p[e[1]] - p[e[0]]).norm())
        .fold(0.0, f64::max);
    let inradius = 3.0 * vol / area;
    diam / (2.0 * inradius)
}

/// Random tetrahedron in `[0,1]^3` with shape ratio at most `max_ratio`.
pub fn random_tetrahedron<R: Rng>(rng: &mut R, max_ratio: f64) -> [Vec3; 4] {
    loop {
        let p: [Vec3; 4] = std::array::from_fn(|_| Vec3::new(rng.gen(), rng.gen(), rng.gen()));
        if crate::mesh::signed_volume(&p).abs() > 1e-6 && shape_ratio(&p) <= max_ratio {
            return p;
        }
    }
}
