//! Stability constants: discrete Poincaré constant, inf-sup witness and
//! positivity of the Nitsche form.

use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use serde::Serialize;

use super::cholesky::SparseCholesky;
use super::saddle::{Method, SaddleSystem};
use crate::assembly::{assemble_grad_curl, assemble_nitsche_boundary, CsrMatrix, FormConfig};
use crate::elements::ElementKind;
use crate::mesh::Mesh;
use crate::spaces::{Boundary, GlobalSpace};
use crate::{Error, Result};

#[derive(Clone, Debug, Serialize)]
pub struct PoincareReport {
    pub n: usize,
    pub k: usize,
    /// `min ‖curl v‖₀ / ‖v‖₀` over the discretely divergence-free subspace.
    pub beta: f64,
    pub iterations: usize,
    /// Relative change of the smallest Ritz value in the last iteration.
    pub change: f64,
}

fn spaces(mesh: Arc<Mesh>, k: usize, bc: Boundary) -> Result<(GlobalSpace, GlobalSpace)> {
    Ok((
        GlobalSpace::new(mesh.clone(), ElementKind::GradCurl(k), bc)?,
        GlobalSpace::new(mesh, ElementKind::Lagrange(k + 1), Boundary::Zero)?,
    ))
}

fn constrained_system(mesh: Arc<Mesh>, k: usize) -> Result<SaddleSystem> {
    let (w, vg) = spaces(mesh, k, Boundary::Zero)?;
    let zero = vec![0.0; w.dim()];
    SaddleSystem::assemble(Method::Mixed, &w, &vg, &FormConfig::default(), zero)
}

fn columns_times(a: &CsrMatrix, v: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(a.nrows, v.ncols());
    for j in 0..v.ncols() {
        let col = a.mul_vec(v.column(j).as_slice());
        out.column_mut(j).copy_from_slice(&col);
    }
    out
}

/// Rayleigh–Ritz for `(Vᵀ B V, Vᵀ M V)`; returns ascending values and the
/// `M`-orthonormal Ritz vectors.
fn rayleigh_ritz(b: &CsrMatrix, m: &CsrMatrix, v: &DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let bv = v.tr_mul(&columns_times(b, v));
    let mv = v.tr_mul(&columns_times(m, v));
    let bv = (&bv + bv.transpose()) * 0.5;
    let mv = (&mv + mv.transpose()) * 0.5;
    let chol = mv
        .cholesky()
        .ok_or_else(|| Error::Solver("Ritz basis lost linear independence".into()))?;
    let l = chol.l();
    let l_inv = l
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Solver("singular Ritz Gram matrix".into()))?;
    let reduced = &l_inv * bv * l_inv.transpose();
    let eig = SymmetricEigen::new((&reduced + reduced.transpose()) * 0.5);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let y = DMatrix::from_fn(v.ncols(), v.ncols(), |r, c| eig.eigenvectors[(r, order[c])]);
    Ok((values, v * l_inv.transpose() * y))
}

/// Discrete Poincaré constant on `W_{h0}` by block inverse iteration.
///
/// With `S = B + C D⁻¹ Cᵀ`, the iteration `v ← S⁻¹ M v` maps the
/// divergence-free subspace into itself and coincides there with the inverse
/// of the constrained pencil `(B, M)`.
pub fn discrete_poincare_constant(mesh: Arc<Mesh>, k: usize) -> Result<PoincareReport> {
    let n_sub = mesh.subdivisions;
    let sys = constrained_system(mesh, k)?;
    let s = SparseCholesky::factor(&sys.augmented_matrix(), &sys.coords_u)?;
    let l = SparseCholesky::factor(&sys.stiffness, &sys.coords_lambda)?;
    let project = |v: &mut DMatrix<f64>| {
        for j in 0..v.ncols() {
            let ctv = sys.c.mul_vec_transpose(v.column(j).as_slice());
            let corr = sys.gradient.mul_vec(&l.solve(&ctv));
            for (x, c) in v.column_mut(j).iter_mut().zip(&corr) {
                *x -= c;
            }
        }
    };
    let n = sys.n_u();
    let block = 8.min(n);
    let mut rng = rand::rngs::StdRng::seed_from_u64(7);
    let mut v = DMatrix::from_fn(n, block, |_, _| rng.gen_range(-1.0..1.0));
    project(&mut v);
    let mut prev = f64::INFINITY;
    let mut change = f64::INFINITY;
    for it in 1..=300 {
        let mv = columns_times(&sys.mass, &v);
        let mut w = DMatrix::zeros(n, block);
        for j in 0..block {
            w.column_mut(j).copy_from_slice(&s.solve(mv.column(j).as_slice()));
        }
        project(&mut w);
        let (values, ritz) = rayleigh_ritz(&sys.a, &sys.mass, &w)?;
        v = ritz;
        let mu = values[0];
        if !(mu > 0.0) {
            return Err(Error::Solver(format!("non-positive Ritz value {mu:e}")));
        }
        change = ((prev - mu) / mu).abs();
        prev = mu;
        if change < 1e-12 {
            return Ok(PoincareReport {
                n: n_sub,
                k,
                beta: mu.sqrt(),
                iterations: it,
                change,
            });
        }
    }
    Err(Error::Solver(format!(
        "Poincaré iteration stalled (relative change {change:.2e})"
    )))
}

/// Dense reference: generalized eigenvalues of `(B, M)` on an orthonormal
/// basis of `ker Cᵀ`.
pub fn discrete_poincare_constant_dense(mesh: Arc<Mesh>, k: usize) -> Result<f64> {
    let sys = constrained_system(mesh, k)?;
    let ct = sys.c.transpose().to_dense();
    let n = ct.ncols();
    // right singular vectors of a padded square matrix span the kernel
    let mut padded = DMatrix::zeros(n, n);
    padded.view_mut((0, 0), (ct.nrows(), n)).copy_from(&ct);
    let svd = padded.svd(false, true);
    let vt = svd.v_t.ok_or_else(|| Error::Solver("SVD failed".into()))?;
    let smax = svd.singular_values.max();
    let kernel: Vec<usize> = (0..n).filter(|&i| svd.singular_values[i] <= 1e-10 * smax).collect();
    let z = DMatrix::from_fn(n, kernel.len(), |r, c| vt[(kernel[c], r)]);
    let (values, _) = rayleigh_ritz(&sys.a, &sys.mass, &z)?;
    Ok(values[0].max(0.0).sqrt())
}

#[derive(Clone, Debug, Serialize)]
pub struct InfSupReport {
    /// `c(∇μ, μ) / ‖∇μ‖_{ε,h}`.
    pub ratio: f64,
    /// `|μ|₁`.
    pub seminorm: f64,
}

/// Evaluates the inf-sup quotient at the witness `v = ∇μ`.
pub fn infsup_witness_check(mesh: Arc<Mesh>, k: usize, eps: f64, mu: &[f64]) -> Result<InfSupReport> {
    let (w, vg) = spaces(mesh, k, Boundary::Zero)?;
    if mu.len() != vg.dim() {
        return Err(Error::Dimension(format!(
            "μ of length {} for dim V = {}",
            mu.len(),
            vg.dim()
        )));
    }
    let cfg = FormConfig {
        eps,
        ..FormConfig::default()
    };
    let sys = SaddleSystem::assemble(Method::Mixed, &w, &vg, &cfg, vec![0.0; w.dim()])?;
    let v = sys.gradient.mul_vec(mu);
    // ‖v‖²_{ε,h} = (v, v) + b(v, v) + ε² a_h(v, v)
    let norm2 = sys.mass.bilinear(&v, &v) + sys.a.bilinear(&v, &v);
    let cv = sys.c.mul_vec(mu);
    let num: f64 = v.iter().zip(&cv).map(|(a, b)| a * b).sum();
    Ok(InfSupReport {
        ratio: num / norm2.sqrt(),
        seminorm: sys.stiffness.bilinear(mu, mu).sqrt(),
    })
}

/// Consistency and penalty parts of the Nitsche form on `W_h`.
#[derive(Clone, Debug)]
pub struct NitscheParts {
    pub a: DMatrix<f64>,
    pub consistency: DMatrix<f64>,
    pub penalty: DMatrix<f64>,
}

impl NitscheParts {
    pub fn new(mesh: Arc<Mesh>, k: usize) -> Result<NitscheParts> {
        let (w, _) = spaces(mesh, k, Boundary::Partial)?;
        let cfg = FormConfig::default();
        let a = assemble_grad_curl(&w, cfg.cell_degree)?;
        let (cons, pen) = assemble_nitsche_boundary(&w, cfg.face_degree)?;
        Ok(NitscheParts {
            a: a.to_dense(),
            consistency: cons.to_dense(),
            penalty: pen.to_dense(),
        })
    }

    /// Smallest eigenvalue of `ã_h(σ)` relative to the largest.
    pub fn relative_min_eigenvalue(&self, sigma: f64) -> f64 {
        let m = &self.a + &self.consistency + &self.penalty * sigma;
        let eig = SymmetricEigen::new((&m + m.transpose()) * 0.5).eigenvalues;
        eig.min() / eig.max().abs().max(f64::MIN_POSITIVE)
    }

    pub fn is_psd(&self, sigma: f64, tol: f64) -> bool {
        self.relative_min_eigenvalue(sigma) >= -tol
    }

    /// Smallest penalty (up to `rel_tol`) for which `ã_h` is positive
    /// semidefinite, by bisection in `log σ` on `[lo, hi]`.
    pub fn threshold(&self, lo: f64, hi: f64, tol: f64, rel_tol: f64) -> Result<f64> {
        if !self.is_psd(hi, tol) {
            return Err(Error::Solver(format!("Nitsche form indefinite even at σ = {hi}")));
        }
        if self.is_psd(lo, tol) {
            return Ok(lo);
        }
        let (mut a, mut b) = (lo.ln(), hi.ln());
        while b - a > rel_tol {
            let mid = 0.5 * (a + b);
            if self.is_psd(mid.exp(), tol) {
                b = mid;
            } else {
                a = mid;
            }
        }
        Ok(b.exp())
    }
}
