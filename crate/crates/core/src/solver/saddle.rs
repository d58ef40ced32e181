//! The saddle-point systems of the mixed and Nitsche discretizations.
//!
//! The direct backend eliminates the multiplier first: testing the first
//! block row with gradients gives `λ = L⁻¹ Gᵀ F`, because the curl forms
//! vanish on gradients and `Gᵀ C = L`. The gradient part of `u` follows from
//! the constraint, and the rest lives in `ker Cᵀ`, where `A_ε` is definite.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::Serialize;

use super::cholesky::SparseCholesky;
use super::minres::minres;
use crate::assembly::{
    assemble_coupling, assemble_curl_curl, assemble_grad_curl, assemble_mass, assemble_nitsche, CsrMatrix, FormConfig,
};
use crate::spaces::{gradient_operator, Boundary, GlobalSpace};
use crate::{Error, Result, Vec3};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Homogeneous boundary conditions built into `W_{h0}`.
    Mixed,
    /// `curl u = 0` on ∂Ω imposed weakly on `W_h`.
    Nitsche,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    Direct,
    Minres,
}

impl FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mixed" => Ok(Method::Mixed),
            "nitsche" => Ok(Method::Nitsche),
            _ => Err(Error::Config(format!(
                "unknown method `{s}` (expected mixed or nitsche)"
            ))),
        }
    }
}

impl FromStr for Backend {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "direct" => Ok(Backend::Direct),
            "minres" => Ok(Backend::Minres),
            _ => Err(Error::Config(format!(
                "unknown solver `{s}` (expected direct or minres)"
            ))),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Mixed => "mixed",
            Method::Nitsche => "nitsche",
        })
    }
}

impl fmt::Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Backend::Direct => "direct",
            Backend::Minres => "minres",
        })
    }
}

/// `[[A_ε, C], [Cᵀ, 0]] (u, λ) = (F, g)` together with the auxiliary
/// operators the solvers need.
#[derive(Clone, Debug)]
pub struct SaddleSystem {
    pub method: Method,
    /// `ε² a_h + b` (or `ε² ã_h + b`).
    pub a: CsrMatrix,
    /// `(φ_i, ∇χ_j)`.
    pub c: CsrMatrix,
    pub rhs_u: Vec<f64>,
    pub rhs_lambda: Vec<f64>,
    /// Lagrange stiffness on `V_h^g`.
    pub stiffness: CsrMatrix,
    /// Coefficients of `∇χ_j` in the `W` basis.
    pub gradient: CsrMatrix,
    /// Mass matrix of the `W` space.
    pub mass: CsrMatrix,
    pub coords_u: Vec<Vec3>,
    pub coords_lambda: Vec<Vec3>,
}

impl SaddleSystem {
    /// Assembles the system for a load vector `(f, φ_i)` on `w`.
    pub fn assemble(
        method: Method,
        w: &GlobalSpace,
        vg: &GlobalSpace,
        cfg: &FormConfig,
        rhs_u: Vec<f64>,
    ) -> Result<SaddleSystem> {
        cfg.validate()?;
        let expected = match method {
            Method::Mixed => Boundary::Zero,
            Method::Nitsche => Boundary::Partial,
        };
        if w.boundary != expected {
            return Err(Error::Config(format!(
                "{method} method needs a W space with {expected:?} boundary conditions"
            )));
        }
        if rhs_u.len() != w.dim() {
            return Err(Error::Dimension(format!(
                "load of length {} for dim W = {}",
                rhs_u.len(),
                w.dim()
            )));
        }
        let deg = cfg.cell_degree;
        let mut a = assemble_curl_curl(w, deg)?;
        if cfg.eps > 0.0 {
            let ah = match method {
                Method::Mixed => assemble_grad_curl(w, deg)?,
                Method::Nitsche => assemble_nitsche(w, cfg)?,
            };
            a = a.add_scaled(1.0, &ah, cfg.eps * cfg.eps);
        }
        Ok(SaddleSystem {
            method,
            a,
            c: assemble_coupling(w, vg, deg)?,
            rhs_lambda: vec![0.0; vg.dim()],
            rhs_u,
            stiffness: assemble_curl_curl(vg, deg)?,
            gradient: gradient_operator(vg, w)?,
            mass: assemble_mass(w, deg)?,
            coords_u: w.dof_coordinates(),
            coords_lambda: vg.dof_coordinates(),
        })
    }

    pub fn n_u(&self) -> usize {
        self.a.nrows
    }

    pub fn n_lambda(&self) -> usize {
        self.c.ncols
    }

    /// `(F - A u - C λ, g - Cᵀ u)`.
    pub fn residual(&self, u: &[f64], lambda: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let au = self.a.mul_vec(u);
        let cl = self.c.mul_vec(lambda);
        let ru = (0..u.len()).map(|i| self.rhs_u[i] - au[i] - cl[i]).collect();
        let ctu = self.c.mul_vec_transpose(u);
        let rl = (0..lambda.len()).map(|i| self.rhs_lambda[i] - ctu[i]).collect();
        (ru, rl)
    }

    /// `A_ε + C D⁻¹ Cᵀ` with `D = diag(L)`; positive definite and equal to
    /// `A_ε` on the discretely divergence-free subspace.
    pub fn augmented_matrix(&self) -> CsrMatrix {
        let d_inv: Vec<f64> = self.stiffness.diagonal().iter().map(|d| 1.0 / d).collect();
        let cd = scale_columns(&self.c, &d_inv);
        self.a.add_scaled(1.0, &cd.mul(&self.c.transpose()), 1.0)
    }

    fn rhs_norm(&self) -> f64 {
        norm2(&self.rhs_u).hypot(norm2(&self.rhs_lambda))
    }
}

#[derive(Clone, Debug)]
pub struct SolveOptions {
    pub backend: Backend,
    /// Relative residual target of the block system.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            backend: Backend::Direct,
            tol: 1e-10,
            max_iter: 5000,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Solution {
    pub u: Vec<f64>,
    pub lambda: Vec<f64>,
    /// Euclidean norm of the block residual relative to the right-hand side.
    pub residual: f64,
    /// Largest entry of the first-row residual relative to the largest load entry.
    pub galerkin_residual: f64,
    /// Backend that produced the solution (after a possible fallback).
    pub backend: Backend,
    /// Conjugate gradient or MINRES iterations.
    pub iterations: usize,
    pub wall_ms: f64,
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Scales column `j` of `c` by `d[j]`.
fn scale_columns(c: &CsrMatrix, d: &[f64]) -> CsrMatrix {
    let mut out = c.clone();
    for (v, &j) in out.data.iter_mut().zip(&c.indices) {
        *v *= d[j];
    }
    out
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Block elimination with sparse Cholesky factors of `L` and `K = A_ε + M`.
///
/// The multiplier and the gradient part of `u` are eliminated exactly; the
/// part in `ker Cᵀ` solves `A v = r` by conjugate gradients preconditioned
/// with `Π K⁻¹ Πᵀ`, `Π = I - G L⁻¹ Cᵀ`.
struct DirectSolver<'a> {
    sys: &'a SaddleSystem,
    l: SparseCholesky,
    k: SparseCholesky,
    tol: f64,
    max_iter: usize,
}

impl<'a> DirectSolver<'a> {
    fn new(sys: &'a SaddleSystem, opts: &SolveOptions) -> Result<Self> {
        let l = SparseCholesky::factor(&sys.stiffness, &sys.coords_lambda)?;
        let k = SparseCholesky::factor(&sys.a.add_scaled(1.0, &sys.mass, 1.0), &sys.coords_u)?;
        Ok(DirectSolver {
            sys,
            l,
            k,
            tol: 0.01 * opts.tol,
            max_iter: opts.max_iter,
        })
    }

    /// `Π K⁻¹ Πᵀ r`.
    fn precondition(&self, r: &[f64]) -> Vec<f64> {
        let sys = self.sys;
        let mu = self.l.solve(&sys.gradient.mul_vec_transpose(r));
        let cm = sys.c.mul_vec(&mu);
        let t: Vec<f64> = r.iter().zip(&cm).map(|(a, b)| a - b).collect();
        let mut z = self.k.solve(&t);
        let nu = self.l.solve(&sys.c.mul_vec_transpose(&z));
        let gn = sys.gradient.mul_vec(&nu);
        z.iter_mut().zip(&gn).for_each(|(a, b)| *a -= b);
        z
    }

    /// Conjugate gradients for `A v = r` on `ker Cᵀ`, where `Gᵀ r = 0`.
    fn divergence_free_part(&self, r: &[f64]) -> Result<(Vec<f64>, usize)> {
        let mut v = vec![0.0; r.len()];
        let r0 = norm2(r);
        if r0 == 0.0 {
            return Ok((v, 0));
        }
        let mut res = r.to_vec();
        let mut z = self.precondition(&res);
        let mut p = z.clone();
        let mut rz = dot(&res, &z);
        for it in 1..=self.max_iter {
            let ap = self.sys.a.mul_vec(&p);
            let alpha = rz / dot(&p, &ap);
            v.iter_mut().zip(&p).for_each(|(a, b)| *a += alpha * b);
            res.iter_mut().zip(&ap).for_each(|(a, b)| *a -= alpha * b);
            if norm2(&res) <= self.tol * r0 {
                return Ok((v, it));
            }
            z = self.precondition(&res);
            let rz_new = dot(&res, &z);
            let beta = rz_new / rz;
            rz = rz_new;
            p.iter_mut().zip(&z).for_each(|(a, b)| *a = b + beta * *a);
        }
        Err(Error::Solver(format!(
            "projected CG did not converge in {} iterations",
            self.max_iter
        )))
    }

    fn apply(&self, ru: &[f64], rl: &[f64]) -> Result<(Vec<f64>, Vec<f64>, usize)> {
        let sys = self.sys;
        let lambda = self.l.solve(&sys.gradient.mul_vec_transpose(ru));
        let mut u = sys.gradient.mul_vec(&self.l.solve(rl));
        let cl = sys.c.mul_vec(&lambda);
        let au = sys.a.mul_vec(&u);
        let r: Vec<f64> = (0..ru.len()).map(|i| ru[i] - cl[i] - au[i]).collect();
        let (v, it) = self.divergence_free_part(&r)?;
        u.iter_mut().zip(&v).for_each(|(a, b)| *a += b);
        Ok((u, lambda, it))
    }
}

fn finish(
    sys: &SaddleSystem,
    u: Vec<f64>,
    lambda: Vec<f64>,
    backend: Backend,
    iterations: usize,
    t0: Instant,
) -> Solution {
    let (ru, rl) = sys.residual(&u, &lambda);
    let bn = sys.rhs_norm();
    let residual = if bn > 0.0 {
        norm2(&ru).hypot(norm2(&rl)) / bn
    } else {
        0.0
    };
    let fm = max_abs(&sys.rhs_u);
    let galerkin_residual = if fm > 0.0 { max_abs(&ru) / fm } else { 0.0 };
    Solution {
        u,
        lambda,
        residual,
        galerkin_residual,
        backend,
        iterations,
        wall_ms: t0.elapsed().as_secs_f64() * 1e3,
    }
}

fn solve_direct(sys: &SaddleSystem, opts: &SolveOptions, t0: Instant) -> Result<Solution> {
    let solver = DirectSolver::new(sys, opts)?;
    let (mut u, mut lambda, mut iterations) = solver.apply(&sys.rhs_u, &sys.rhs_lambda)?;
    let bn = sys.rhs_norm();
    for _ in 0..5 {
        let (ru, rl) = sys.residual(&u, &lambda);
        if norm2(&ru).hypot(norm2(&rl)) <= 0.01 * opts.tol * bn {
            break;
        }
        let (du, dl, it) = solver.apply(&ru, &rl)?;
        u.iter_mut().zip(&du).for_each(|(a, b)| *a += b);
        lambda.iter_mut().zip(&dl).for_each(|(a, b)| *a += b);
        iterations += it;
    }
    Ok(finish(sys, u, lambda, Backend::Direct, iterations, t0))
}

enum Preconditioner {
    Block { a: SparseCholesky, l: SparseCholesky },
    Jacobi { a: Vec<f64>, l: Vec<f64> },
}

impl Preconditioner {
    fn new(sys: &SaddleSystem) -> Preconditioner {
        let shifted = sys.a.add_scaled(1.0, &sys.mass, 1.0);
        let block = SparseCholesky::factor(&shifted, &sys.coords_u)
            .and_then(|a| Ok((a, SparseCholesky::factor(&sys.stiffness, &sys.coords_lambda)?)));
        match block {
            Ok((a, l)) => Preconditioner::Block { a, l },
            Err(_) => Preconditioner::Jacobi {
                a: shifted.diagonal().iter().map(|d| 1.0 / d).collect(),
                l: sys.stiffness.diagonal().iter().map(|d| 1.0 / d).collect(),
            },
        }
    }

    fn apply(&self, n: usize, r: &[f64], out: &mut [f64]) {
        match self {
            Preconditioner::Block { a, l } => {
                out[..n].copy_from_slice(&a.solve(&r[..n]));
                out[n..].copy_from_slice(&l.solve(&r[n..]));
            }
            Preconditioner::Jacobi { a, l } => {
                for (i, d) in a.iter().chain(l).enumerate() {
                    out[i] = d * r[i];
                }
            }
        }
    }
}

fn solve_minres(sys: &SaddleSystem, opts: &SolveOptions, t0: Instant) -> Result<Solution> {
    let n = sys.n_u();
    let m = sys.n_lambda();
    let prec = Preconditioner::new(sys);
    let ct = sys.c.transpose();
    let apply = |x: &[f64], y: &mut [f64]| {
        let (xu, xl) = x.split_at(n);
        let au = sys.a.mul_vec(xu);
        let cl = sys.c.mul_vec(xl);
        for i in 0..n {
            y[i] = au[i] + cl[i];
        }
        ct.mul_vec_into(xu, &mut y[n..]);
    };
    let mut x = vec![0.0; n + m];
    let bn = sys.rhs_norm();
    let mut iterations = 0;
    for _ in 0..4 {
        let (ru, rl) = sys.residual(&x[..n], &x[n..]);
        let rn = norm2(&ru).hypot(norm2(&rl));
        if rn <= opts.tol * bn {
            break;
        }
        let r: Vec<f64> = ru.into_iter().chain(rl).collect();
        let out = minres(
            apply,
            |v, o| prec.apply(n, v, o),
            &r,
            0.1 * opts.tol * bn / rn,
            opts.max_iter,
        )?;
        iterations += out.iterations;
        x.iter_mut().zip(&out.x).for_each(|(a, b)| *a += b);
    }
    let lambda = x.split_off(n);
    Ok(finish(sys, x, lambda, Backend::Minres, iterations, t0))
}

/// Solves the block system. A breakdown of the direct factorization falls
/// back to MINRES; a final residual above the tolerance is an error.
pub fn solve(sys: &SaddleSystem, opts: &SolveOptions) -> Result<Solution> {
    let t0 = Instant::now();
    if sys.rhs_norm() == 0.0 {
        return Ok(finish(
            sys,
            vec![0.0; sys.n_u()],
            vec![0.0; sys.n_lambda()],
            opts.backend,
            0,
            t0,
        ));
    }
    let sol = match opts.backend {
        Backend::Direct => match solve_direct(sys, opts, t0) {
            Ok(s) => s,
            Err(Error::Solver(_)) => solve_minres(sys, opts, t0)?,
            Err(e) => return Err(e),
        },
        Backend::Minres => solve_minres(sys, opts, t0)?,
    };
    if !(sol.residual <= opts.tol) {
        return Err(Error::Solver(format!(
            "{} solve reached relative residual {:.3e} > {:.1e}",
            sol.backend, sol.residual, opts.tol
        )));
    }
    Ok(sol)
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::assembly::assemble_load;
    use crate::elements::ElementKind;
    use crate::mesh::build_uniform_cube_mesh;

    fn system(method: Method, n: usize, eps: f64, load: impl Fn(&Vec3) -> Vec3) -> SaddleSystem {
        let m = Arc::new(build_uniform_cube_mesh(n).unwrap());
        let bc = if method == Method::Mixed {
            Boundary::Zero
        } else {
            Boundary::Partial
        };
        let w = GlobalSpace::new(m.clone(), ElementKind::GradCurl(1), bc).unwrap();
        let vg = GlobalSpace::new(m, ElementKind::Lagrange(2), Boundary::Zero).unwrap();
        let cfg = FormConfig {
            eps,
            ..FormConfig::default()
        };
        let f = assemble_load(&w, load, 8).unwrap();
        SaddleSystem::assemble(method, &w, &vg, &cfg, f).unwrap()
    }

    fn div_free(x: &Vec3) -> Vec3 {
        use std::f64::consts::PI;
        let (s, c) = (|t: f64| (PI * t).sin(), |t: f64| (PI * t).cos());
        Vec3::new(s(x.x) * c(x.y), -c(x.x) * s(x.y), 0.3 * s(x.z))
    }

    #[test]
    fn zero_rhs_gives_zero_solution() {
        let sys = system(Method::Mixed, 2, 0.0, |_| Vec3::zeros());
        let s = solve(&sys, &SolveOptions::default()).unwrap();
        assert!(s.u.iter().chain(&s.lambda).all(|v| *v == 0.0));
    }

    #[test]
    fn direct_and_minres_agree() {
        for method in [Method::Mixed, Method::Nitsche] {
            let sys = system(method, 2, 0.1, div_free);
            let d = solve(&sys, &SolveOptions::default()).unwrap();
            let opts = SolveOptions {
                backend: Backend::Minres,
                ..SolveOptions::default()
            };
            let m = solve(&sys, &opts).unwrap();
            assert!(d.residual < 1e-10, "{}", d.residual);
            assert!(d.galerkin_residual < 1e-9);
            assert_eq!(m.backend, Backend::Minres);
            let diff: Vec<f64> = d.u.iter().zip(&m.u).map(|(a, b)| a - b).collect();
            let e = sys.mass.bilinear(&diff, &diff) + sys.a.bilinear(&diff, &diff);
            assert!(e.sqrt() < 1e-7, "{method}: {e:e}");
        }
    }

    #[test]
    fn gradient_load_gives_nonzero_multiplier() {
        let sys = system(Method::Mixed, 2, 0.0, |x| {
            Vec3::new(x.y * x.z * (1.0 - 2.0 * x.x), x.x * x.z * (1.0 - 2.0 * x.y), 0.0)
        });
        let s = solve(&sys, &SolveOptions::default()).unwrap();
        assert!(s.residual < 1e-10);
        assert!(s.lambda.iter().any(|v| v.abs() > 1e-6));
    }

    #[test]
    fn wrong_boundary_conditions_are_rejected() {
        let m = Arc::new(build_uniform_cube_mesh(1).unwrap());
        let w = GlobalSpace::new(m.clone(), ElementKind::GradCurl(1), Boundary::Partial).unwrap();
        let vg = GlobalSpace::new(m, ElementKind::Lagrange(2), Boundary::Zero).unwrap();
        let f = vec![0.0; w.dim()];
        let r = SaddleSystem::assemble(Method::Mixed, &w, &vg, &FormConfig::default(), f);
        assert!(matches!(r, Err(Error::Config(_))));
    }

    #[test]
    fn parses_names() {
        assert_eq!("nitsche".parse::<Method>().unwrap(), Method::Nitsche);
        assert_eq!("minres".parse::<Backend>().unwrap(), Backend::Minres);
        assert!("lu".parse::<Backend>().is_err());
    }
}
