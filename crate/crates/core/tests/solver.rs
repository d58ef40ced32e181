//! End-to-end solver invariants on the manufactured problem.

use std::sync::Arc;

use quadcurl::assembly::{assemble_load, FormConfig};
use quadcurl::elements::ElementKind;
use quadcurl::experiments::{compute_errors, convergence_study, ManufacturedProblem, StudyConfig};
use quadcurl::mesh::{build_uniform_cube_mesh, Mesh};
use quadcurl::solver::{solve, Backend, Method, SaddleSystem, Solution, SolveOptions};
use quadcurl::spaces::{Boundary, GlobalSpace};
use quadcurl::{Error, Vec3};

struct Setup {
    w: GlobalSpace,
    vg: GlobalSpace,
}

fn setup(method: Method, n: usize, k: usize) -> Setup {
    let mesh = Arc::new(build_uniform_cube_mesh(n).unwrap());
    let bc = match method {
        Method::Mixed => Boundary::Zero,
        Method::Nitsche => Boundary::Partial,
    };
    Setup {
        w: GlobalSpace::new(mesh.clone(), ElementKind::GradCurl(k), bc).unwrap(),
        vg: GlobalSpace::new(mesh, ElementKind::Lagrange(k + 1), Boundary::Zero).unwrap(),
    }
}

fn run(s: &Setup, method: Method, eps: f64, backend: Backend) -> Solution {
    let p = ManufacturedProblem::new(eps);
    let load = assemble_load(&s.w, |x| p.f(x), 12).unwrap();
    let cfg = FormConfig {
        eps,
        ..FormConfig::default()
    };
    let sys = SaddleSystem::assemble(method, &s.w, &s.vg, &cfg, load).unwrap();
    solve(
        &sys,
        &SolveOptions {
            backend,
            ..SolveOptions::default()
        },
    )
    .unwrap()
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    let scale = b.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs())) / scale
}

#[test]
fn backends_agree() {
    for method in [Method::Mixed, Method::Nitsche] {
        for k in [1, 2] {
            let s = setup(method, 2, k);
            let d = run(&s, method, 1e-2, Backend::Direct);
            let m = run(&s, method, 1e-2, Backend::Minres);
            assert_eq!(d.backend, Backend::Direct);
            assert!(max_diff(&m.u, &d.u) < 1e-7, "{method} k={k}");
            assert!(d.galerkin_residual < 1e-9 && m.galerkin_residual < 1e-9);
        }
    }
}

#[test]
fn small_eps_limit_matches_eps_zero() {
    for method in [Method::Mixed, Method::Nitsche] {
        let s = setup(method, 2, 1);
        let p = ManufacturedProblem::new(0.0);
        let a = compute_errors(&s.w, &s.vg, &run(&s, method, 0.0, Backend::Direct), &p, 10).unwrap();
        let b = compute_errors(&s.w, &s.vg, &run(&s, method, 1e-8, Backend::Direct), &p, 10).unwrap();
        assert!((a.l2 - b.l2).abs() < 1e-5 * a.l2, "{method}: {} vs {}", a.l2, b.l2);
    }
}

#[test]
fn mixed_energy_error_contracts_by_a_bounded_factor() {
    let cfg = StudyConfig {
        levels: vec![4, 8],
        ..StudyConfig::default()
    };
    let t = convergence_study(&cfg).unwrap();
    let factor = t.rows[1].errors.energy / t.rows[0].errors.energy;
    assert!((2f64.powf(-1.3)..=2f64.powf(-0.4)).contains(&factor), "{factor}");
}

#[test]
fn degenerate_cell_is_reported() {
    let v = vec![Vec3::zeros(), Vec3::x(), Vec3::y(), Vec3::new(1.0, 1.0, 0.0)];
    let r = Mesh::from_cells(v, vec![[0, 1, 2, 3]])
        .and_then(|m| GlobalSpace::new(Arc::new(m), ElementKind::GradCurl(1), Boundary::Free));
    assert!(matches!(r, Err(Error::Mesh(_)) | Err(Error::Element(_))), "{r:?}");
}
