//! Acceptance criteria. Each test prints one PASS/FAIL line.
//!
//! Runs on `n = 16` are opt-in through `QUADCURL_EXTENDED=1`.

use std::sync::{Arc, OnceLock};
use std::time::Instant;

use quadcurl::elements::ElementKind;
use quadcurl::experiments::verify::{curl_curl_oracle, unisolvence_margin, UNISOLVENCE_THRESHOLD};
use quadcurl::experiments::{convergence_study, ConvergenceTable, StudyConfig};
use quadcurl::mesh::build_uniform_cube_mesh;
use quadcurl::solver::{discrete_poincare_constant, Method, NitscheParts};
use quadcurl::spaces::{conformity_check, verify_complex, Boundary, ComplexVariant, GlobalSpace};
use rand::{Rng, SeedableRng};

const ORDER_TOL: f64 = 0.15;

fn extended() -> bool {
    std::env::var("QUADCURL_EXTENDED").is_ok_and(|v| v == "1")
}

fn levels() -> Vec<usize> {
    if extended() {
        vec![2, 4, 8, 16]
    } else {
        vec![2, 4, 8]
    }
}

fn report(id: u32, name: &str, passed: bool, detail: String) -> bool {
    println!(
        "{} [criterion {id}] {name}: {detail}",
        if passed { "PASS" } else { "FAIL" }
    );
    passed
}

fn study(method: Method, eps: f64) -> ConvergenceTable {
    let cfg = StudyConfig {
        method,
        eps,
        levels: levels(),
        ..StudyConfig::default()
    };
    convergence_study(&cfg).expect("convergence study")
}

fn mixed_0() -> &'static ConvergenceTable {
    static T: OnceLock<ConvergenceTable> = OnceLock::new();
    T.get_or_init(|| study(Method::Mixed, 0.0))
}

fn mixed_eps() -> &'static ConvergenceTable {
    static T: OnceLock<ConvergenceTable> = OnceLock::new();
    T.get_or_init(|| study(Method::Mixed, 1e-3))
}

fn nitsche_0() -> &'static ConvergenceTable {
    static T: OnceLock<ConvergenceTable> = OnceLock::new();
    T.get_or_init(|| study(Method::Nitsche, 0.0))
}

fn nitsche_eps() -> &'static ConvergenceTable {
    static T: OnceLock<ConvergenceTable> = OnceLock::new();
    T.get_or_init(|| study(Method::Nitsche, 1e-3))
}

/// Largest deviation of the orders at row `i` from `expected`.
fn order_deviation(t: &ConvergenceTable, i: usize, expected: [f64; 3]) -> (f64, [f64; 3]) {
    let o = t.orders(i).expect("orders");
    let dev = (0..3).map(|j| (o[j] - expected[j]).abs()).fold(0.0, f64::max);
    (dev, o)
}

fn fmt3(o: [f64; 3]) -> String {
    format!("({:.2}, {:.2}, {:.2})", o[0], o[1], o[2])
}

/// Orders of rows 1.. against reference orders; returns pass and detail.
fn orders_match(t: &ConvergenceTable, expected: &[[f64; 3]]) -> (bool, String) {
    let mut ok = true;
    let mut detail = Vec::new();
    for (i, e) in expected.iter().enumerate().take(t.rows.len() - 1) {
        let (dev, o) = order_deviation(t, i + 1, *e);
        ok &= dev <= ORDER_TOL;
        detail.push(format!("n={}: {} vs {}", t.rows[i + 1].n, fmt3(o), fmt3(*e)));
    }
    (ok, detail.join("; "))
}

#[test]
fn criterion_01_unisolvence() {
    let t0 = Instant::now();
    let kinds = [
        (ElementKind::GradCurl(1), 32),
        (ElementKind::GradCurl(2), 42),
        (ElementKind::TaiWinther, 24),
        (ElementKind::Nedelec(1), 20),
        (ElementKind::Nedelec(2), 30),
    ];
    let mut ok = true;
    let mut detail = Vec::new();
    for (kind, dim) in kinds {
        let m = unisolvence_margin(kind, 100, 2024).expect("element construction");
        ok &= m > UNISOLVENCE_THRESHOLD && kind.dim() == dim;
        detail.push(format!("{kind}[{}] {m:.2e}", kind.dim()));
    }
    let secs = t0.elapsed().as_secs_f64();
    ok &= secs < 10.0;
    let passed = report(1, "unisolvence", ok, format!("{} in {secs:.1} s", detail.join(", ")));
    assert!(passed);
}

#[test]
fn criterion_02_complex_exactness() {
    let t0 = Instant::now();
    let mut ok = true;
    let mut special = String::new();
    for n in [1, 2] {
        let mesh = Arc::new(build_uniform_cube_mesh(n).unwrap());
        for k in [1, 2] {
            for v in [ComplexVariant::Zero, ComplexVariant::Partial] {
                let r = verify_complex(mesh.clone(), k, v).unwrap();
                ok &= r.passed();
                if n == 1 && k == 1 && v == ComplexVariant::Zero {
                    ok &= r.dims == [1, 32, 36, 5] && r.rank_curl == 31;
                    special = format!("n=1,k=1 dims {:?} rank(curl) {}", r.dims, r.rank_curl);
                }
            }
        }
    }
    let secs = t0.elapsed().as_secs_f64();
    ok &= secs < 30.0;
    let passed = report(2, "complex exactness", ok, format!("{special}; {secs:.1} s"));
    assert!(passed);
}

#[test]
fn criterion_03_conformity() {
    let mut rng = rand::rngs::StdRng::seed_from_u64(3);
    let mut worst = 0.0f64;
    for n in [1, 2] {
        let mesh = Arc::new(build_uniform_cube_mesh(n).unwrap());
        for k in [1, 2] {
            for bc in [Boundary::Free, Boundary::Zero] {
                let s = GlobalSpace::new(mesh.clone(), ElementKind::GradCurl(k), bc).unwrap();
                let u: Vec<f64> = (0..s.dim()).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let r = conformity_check(&s, &u).unwrap();
                worst = worst.max(r.tangential_jump);
                if bc == Boundary::Zero {
                    worst = worst.max(r.boundary_trace);
                }
            }
        }
    }
    let passed = report(
        3,
        "conformity",
        worst < 1e-8,
        format!("max tangential jump {worst:.2e} < 1e-8"),
    );
    assert!(passed);
}

#[test]
fn criterion_04_poincare() {
    let b2 = discrete_poincare_constant(Arc::new(build_uniform_cube_mesh(2).unwrap()), 1).unwrap();
    let b4 = discrete_poincare_constant(Arc::new(build_uniform_cube_mesh(4).unwrap()), 1).unwrap();
    let ratio = b4.beta / b2.beta;
    let ok = b2.beta > 0.0 && b4.beta > 0.0 && ratio >= 0.75;
    let passed = report(
        4,
        "discrete Poincaré uniformity",
        ok,
        format!("β(2) = {:.4}, β(4) = {:.4}, ratio {ratio:.4} >= 0.75", b2.beta, b4.beta),
    );
    assert!(passed);
}

#[test]
fn criterion_05_mixed_eps0() {
    let t = mixed_0();
    let (mut ok, mut detail) = orders_match(t, &[[1.75, 1.07, 1.07], [1.50, 0.78, 0.78], [1.27, 0.59, 0.59]]);
    let reference = [
        [5.142e-1, 5.386, 5.410],
        [1.526e-1, 2.573, 2.577],
        [5.390e-2, 1.495, 1.496],
    ];
    let mut worst = 1.0f64;
    for (row, r) in t.rows.iter().zip(&reference) {
        let e = [row.errors.l2, row.errors.curl, row.errors.energy];
        for j in 0..3 {
            worst = worst.max(e[j] / r[j]).max(r[j] / e[j]);
        }
    }
    ok &= worst <= 2.0;
    detail.push_str(&format!("; worst absolute factor {worst:.3}"));
    let secs: f64 = t.rows.iter().filter(|r| r.n <= 8).map(|r| r.wall_ms).sum::<f64>() / 1e3;
    detail.push_str(&format!("; {secs:.1} s"));
    if let Some(o) = t.orders(3) {
        ok &= o[2] <= 0.7;
        detail.push_str(&format!("; n=16 energy order {:.2} <= 0.7", o[2]));
    } else {
        detail.push_str("; n=16 skipped");
    }
    let passed = report(5, "mixed, ε = 0", ok, detail);
    assert!(passed);
}

#[test]
fn criterion_06_mixed_eps() {
    let t = mixed_eps();
    let (mut ok, mut detail) = orders_match(t, &[[1.75, 1.07, 1.07], [1.49, 0.78, 0.78], [1.21, 0.59, 0.56]]);
    let base = mixed_0();
    let ratio = t
        .rows
        .iter()
        .zip(&base.rows)
        .map(|(a, b)| a.errors.energy / b.errors.energy)
        .fold(0.0, f64::max);
    ok &= ratio <= 1.05;
    detail.push_str(&format!("; max energy ratio to ε = 0 {ratio:.4} <= 1.05"));
    let passed = report(6, "mixed, ε = 1e-3", ok, detail);
    assert!(passed);
}

#[test]
fn criterion_07_nitsche_eps0() {
    let t = nitsche_0();
    let (dev, o) = order_deviation(t, 2, [1.90, 1.79, 1.79]);
    let mut ok = dev <= ORDER_TOL;
    let mut detail = format!("n=8: {} vs (1.90, 1.79, 1.79)", fmt3(o));
    if t.rows.len() > 3 {
        let (dev, o) = order_deviation(t, 3, [1.95, 1.92, 1.92]);
        let l2 = t.rows[3].errors.l2;
        let factor = (l2 / 8.277e-3).max(8.277e-3 / l2);
        ok &= dev <= ORDER_TOL && factor <= 2.0;
        detail.push_str(&format!(
            "; n=16: {} vs (1.95, 1.92, 1.92), L² {l2:.3e} (factor {factor:.3})",
            fmt3(o)
        ));
    } else {
        detail.push_str("; n=16 skipped");
    }
    let passed = report(7, "Nitsche, ε = 0", ok, detail);
    assert!(passed);
}

#[test]
fn criterion_08_nitsche_eps() {
    let t = nitsche_eps();
    let last = t.rows.len() - 1;
    let (dev, o) = order_deviation(t, last, [1.95, 1.89, 1.87]);
    let passed = report(
        8,
        "Nitsche, ε = 1e-3",
        dev <= ORDER_TOL,
        format!("n={}: {} vs (1.95, 1.89, 1.87)", t.rows[last].n, fmt3(o)),
    );
    assert!(passed);
}

#[test]
fn criterion_09_multiplier_vanishes() {
    let mut worst = 0.0f64;
    for t in [mixed_0(), mixed_eps(), nitsche_0(), nitsche_eps()] {
        for r in &t.rows {
            worst = worst.max(r.errors.lambda_h1 / r.errors.f_norm);
        }
    }
    let passed = report(
        9,
        "multiplier vanishes",
        worst < 1e-7,
        format!("max |λ_h|₁/‖f‖₀ = {worst:.2e} < 1e-7"),
    );
    assert!(passed);
}

#[test]
fn criterion_10_oracles() {
    let mut worst = 0.0f64;
    for n in [1, 2] {
        let mesh = Arc::new(build_uniform_cube_mesh(n).unwrap());
        for k in [1, 2] {
            worst = worst.max(curl_curl_oracle(mesh.clone(), k).unwrap());
        }
    }
    let parts = NitscheParts::new(Arc::new(build_uniform_cube_mesh(2).unwrap()), 1).unwrap();
    let rel = parts.relative_min_eigenvalue(10.0);
    let ok = worst < 1e-10 && rel >= -1e-8;
    let passed = report(
        10,
        "oracle equivalence",
        ok,
        format!("‖B - curlᵀ M_d curl‖/‖B‖ = {worst:.2e} < 1e-10; relative λ_min(ã_h, σ=10) = {rel:.3e} >= -1e-8"),
    );
    assert!(passed);
}
