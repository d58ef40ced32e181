//! Convergence studies on uniformly refined cube meshes.

use std::fmt::Write as _;
use std::sync::Arc;
use std::time::Instant;

use serde::Serialize;

use super::errors::{compute_errors, ErrorReport};
use super::manufactured::ManufacturedProblem;
use crate::assembly::{assemble_load, FormConfig};
use crate::elements::ElementKind;
use crate::mesh::build_uniform_cube_mesh;
use crate::polyquad::MAX_QUADRATURE_DEGREE;
use crate::solver::{solve, Backend, Method, NitscheParts, SaddleSystem, SolveOptions};
use crate::spaces::{Boundary, GlobalSpace};
use crate::{Error, Result};

#[derive(Clone, Debug, Serialize)]
pub struct StudyConfig {
    pub method: Method,
    pub eps: f64,
    pub k: usize,
    pub sigma: f64,
    /// Subdivisions per axis, `h = 1/n`.
    pub levels: Vec<usize>,
    pub backend: Backend,
    pub tol: f64,
    pub quad_degree: usize,
}

impl Default for StudyConfig {
    fn default() -> Self {
        StudyConfig {
            method: Method::Mixed,
            eps: 0.0,
            k: 1,
            sigma: 10.0,
            levels: vec![2, 4, 8],
            backend: Backend::Direct,
            tol: 1e-10,
            quad_degree: 10,
        }
    }
}

impl StudyConfig {
    pub fn validate(&self) -> Result<()> {
        if !(1..=2).contains(&self.k) {
            return Err(Error::Config(format!("k must be 1 or 2, got {}", self.k)));
        }
        if self.levels.is_empty() || self.levels.contains(&0) {
            return Err(Error::Config(
                "levels must be a non-empty list of positive integers".into(),
            ));
        }
        if self.levels.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("levels must be strictly ascending".into()));
        }
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return Err(Error::Config(format!("tol must lie in (0, 1), got {}", self.tol)));
        }
        if !(1..=MAX_QUADRATURE_DEGREE).contains(&self.quad_degree) {
            return Err(Error::Config(format!(
                "quad-degree must lie in 1..={MAX_QUADRATURE_DEGREE}, got {}",
                self.quad_degree
            )));
        }
        self.forms().validate()
    }

    fn forms(&self) -> FormConfig {
        FormConfig {
            eps: self.eps,
            sigma: self.sigma,
            cell_degree: self.quad_degree,
            face_degree: self.quad_degree,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct LevelResult {
    pub n: usize,
    pub dim_u: usize,
    pub dim_lambda: usize,
    pub errors: ErrorReport,
    pub residual: f64,
    pub galerkin_residual: f64,
    pub backend: Backend,
    pub iterations: usize,
    pub solve_ms: f64,
    /// Assembly, solve and error evaluation.
    pub wall_ms: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConvergenceTable {
    pub config: StudyConfig,
    pub rows: Vec<LevelResult>,
    pub warnings: Vec<String>,
}

/// `log(e_prev / e) / log(h_prev / h)`.
pub fn order(e_prev: f64, e: f64, h_prev: f64, h: f64) -> f64 {
    (e_prev / e).ln() / (h_prev / h).ln()
}

fn with_level(e: Error, n: usize) -> Error {
    match e {
        Error::Config(s) => Error::Config(format!("level n={n}: {s}")),
        Error::Mesh(s) => Error::Mesh(format!("level n={n}: {s}")),
        Error::Element(s) => Error::Element(format!("level n={n}: {s}")),
        Error::Dimension(s) => Error::Dimension(format!("level n={n}: {s}")),
        Error::Solver(s) => Error::Solver(format!("level n={n}: {s}")),
        other => other,
    }
}

/// Assembles, solves and measures one refinement level.
pub fn run_level(cfg: &StudyConfig, n: usize) -> Result<LevelResult> {
    let t0 = Instant::now();
    let mesh = Arc::new(build_uniform_cube_mesh(n)?);
    let bc = match cfg.method {
        Method::Mixed => Boundary::Zero,
        Method::Nitsche => Boundary::Partial,
    };
    let w = GlobalSpace::new(mesh.clone(), ElementKind::GradCurl(cfg.k), bc)?;
    let vg = GlobalSpace::new(mesh, ElementKind::Lagrange(cfg.k + 1), Boundary::Zero)?;
    let problem = ManufacturedProblem::new(cfg.eps);
    // f is transcendental; its moments get the most accurate rule available
    let load = assemble_load(&w, |x| problem.f(x), MAX_QUADRATURE_DEGREE)?;
    let sys = SaddleSystem::assemble(cfg.method, &w, &vg, &cfg.forms(), load)?;
    let opts = SolveOptions {
        backend: cfg.backend,
        tol: cfg.tol,
        ..SolveOptions::default()
    };
    let sol = solve(&sys, &opts)?;
    let errors = compute_errors(&w, &vg, &sol, &problem, cfg.quad_degree)?;
    Ok(LevelResult {
        n,
        dim_u: w.dim(),
        dim_lambda: vg.dim(),
        errors,
        residual: sol.residual,
        galerkin_residual: sol.galerkin_residual,
        backend: sol.backend,
        iterations: sol.iterations,
        solve_ms: sol.wall_ms,
        wall_ms: t0.elapsed().as_secs_f64() * 1e3,
    })
}

/// Runs every level of `cfg` in turn.
pub fn convergence_study(cfg: &StudyConfig) -> Result<ConvergenceTable> {
    convergence_study_with(cfg, |_| {})
}

/// Like [`convergence_study`], reporting each finished level to `progress`.
pub fn convergence_study_with<F: FnMut(&LevelResult)>(cfg: &StudyConfig, mut progress: F) -> Result<ConvergenceTable> {
    cfg.validate()?;
    let mut warnings = Vec::new();
    if cfg.method == Method::Nitsche {
        // the threshold depends only on the cell shapes, all present for n = 1
        let mesh = Arc::new(build_uniform_cube_mesh(1)?);
        if !NitscheParts::new(mesh, cfg.k)?.is_psd(cfg.sigma, 1e-8) {
            warnings.push(format!("σ = {} below σ₀; increase --sigma", cfg.sigma));
        }
    }
    let mut rows = Vec::new();
    for &n in &cfg.levels {
        let row = run_level(cfg, n).map_err(|e| with_level(e, n))?;
        progress(&row);
        rows.push(row);
    }
    Ok(ConvergenceTable {
        config: cfg.clone(),
        rows,
        warnings,
    })
}

impl ConvergenceTable {
    /// Orders of (L², curl, energy) between row `i - 1` and row `i`.
    pub fn orders(&self, i: usize) -> Option<[f64; 3]> {
        if i == 0 || i >= self.rows.len() {
            return None;
        }
        let (a, b) = (&self.rows[i - 1].errors, &self.rows[i].errors);
        Some([
            order(a.l2, b.l2, a.h, b.h),
            order(a.curl, b.curl, a.h, b.h),
            order(a.energy, b.energy, a.h, b.h),
        ])
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("h,err_l2,order_l2,err_curl,order_curl,err_energy,order_energy,lambda_h1,wall_ms\n");
        for (i, r) in self.rows.iter().enumerate() {
            let e = &r.errors;
            let o = self
                .orders(i)
                .map(|o| o.map(|v| format!("{v:.4}")))
                .unwrap_or_else(|| [String::new(), String::new(), String::new()]);
            let _ = writeln!(
                s,
                "{:.6e},{:.6e},{},{:.6e},{},{:.6e},{},{:.6e},{:.1}",
                e.h, e.l2, o[0], e.curl, o[1], e.energy, o[2], e.lambda_h1, r.wall_ms
            );
        }
        s
    }

    pub fn to_markdown(&self) -> String {
        let c = &self.config;
        let mut s = format!(
            "{} method, k = {}, ε = {}{}\n\n",
            c.method,
            c.k,
            c.eps,
            if c.method == Method::Nitsche {
                format!(", σ = {}", c.sigma)
            } else {
                String::new()
            }
        );
        s.push_str("| h | ‖u₀−u_h‖₀ | order | ‖curl(u₀−u_h)‖₀ | order | ‖u₀−u_h‖_{ε,h} | order |\n");
        s.push_str("|---|---|---|---|---|---|---|\n");
        for (i, r) in self.rows.iter().enumerate() {
            let e = &r.errors;
            let o = self
                .orders(i)
                .map(|o| o.map(|v| format!("{v:.2}")))
                .unwrap_or_else(|| ["-".into(), "-".into(), "-".into()]);
            let h = if r.n.is_power_of_two() {
                format!("2^-{}", r.n.trailing_zeros())
            } else {
                format!("1/{}", r.n)
            };
            let _ = writeln!(
                s,
                "| {h} | {:.3E} | {} | {:.3E} | {} | {:.3E} | {} |",
                e.l2, o[0], e.curl, o[1], e.energy, o[2]
            );
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn invalid_configurations_are_rejected() {
        let bad = [
            StudyConfig {
                k: 3,
                ..StudyConfig::default()
            },
            StudyConfig {
                levels: vec![4, 2],
                ..StudyConfig::default()
            },
            StudyConfig {
                levels: vec![],
                ..StudyConfig::default()
            },
            StudyConfig {
                eps: -1.0,
                ..StudyConfig::default()
            },
            StudyConfig {
                sigma: 0.0,
                ..StudyConfig::default()
            },
            StudyConfig {
                quad_degree: 40,
                ..StudyConfig::default()
            },
            StudyConfig {
                tol: 0.0,
                ..StudyConfig::default()
            },
        ];
        for cfg in bad {
            assert!(matches!(cfg.validate(), Err(Error::Config(_))), "{cfg:?}");
        }
        assert!(StudyConfig::default().validate().is_ok());
    }

    #[test]
    fn orders_of_exact_powers() {
        assert!((order(4.0, 1.0, 0.5, 0.25) - 2.0).abs() < 1e-14);
        assert!((order(1.0, 0.5, 1.0 / 3.0, 1.0 / 6.0) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn small_study_emits_tables() {
        let cfg = StudyConfig {
            method: Method::Nitsche,
            eps: 1e-3,
            levels: vec![1, 2],
            quad_degree: 8,
            ..StudyConfig::default()
        };
        let t = convergence_study(&cfg).unwrap();
        let csv = t.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(
            lines[0],
            "h,err_l2,order_l2,err_curl,order_curl,err_energy,order_energy,lambda_h1,wall_ms"
        );
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[1].split(',').nth(2), Some(""));
        assert!(!lines[2].split(',').nth(2).unwrap().is_empty());
        let md = t.to_markdown();
        assert!(md.contains("| 2^-1 |"));
        assert!(t.rows.iter().all(|r| r.residual < 1e-10));
    }
}
