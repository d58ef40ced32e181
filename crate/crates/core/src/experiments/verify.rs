//! Machine-readable suite of structural and stability checks.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use serde::Serialize;

use crate::assembly::{assemble_curl_curl, assemble_mass};
use crate::elements::{kernel_check, random_tetrahedron, ElementKind, LocalElement};
use crate::mesh::{build_uniform_cube_mesh, Mesh};
use crate::solver::{discrete_poincare_constant, infsup_witness_check, NitscheParts};
use crate::spaces::{conformity_check, curl_operator, verify_complex, Boundary, ComplexVariant, GlobalSpace};
use crate::{Error, Result, Vec3};

/// Normalized `σ_min` below which a DoF matrix counts as singular.
pub const UNISOLVENCE_THRESHOLD: f64 = 1e-12;
/// Lower bound for `β(2n) / β(n)`.
pub const POINCARE_RATIO: f64 = 0.75;
/// Largest `n` for which dense checks run.
const DENSE_LIMIT: usize = 2;

#[derive(Clone, Debug)]
pub struct VerifyConfig {
    pub levels: Vec<usize>,
    pub ks: Vec<usize>,
    pub sigma: f64,
    pub random_tets: usize,
    pub seed: u64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            levels: vec![1, 2, 4],
            ks: vec![1, 2],
            sigma: 10.0,
            random_tets: 100,
            seed: 2024,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct VerificationReport {
    pub levels: Vec<usize>,
    pub ks: Vec<usize>,
    pub sigma: f64,
    pub passed: bool,
    pub checks: Vec<CheckResult>,
    pub warnings: Vec<String>,
}

impl VerificationReport {
    pub fn failures(&self) -> impl Iterator<Item = &CheckResult> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }
}

fn reference_tet() -> [Vec3; 4] {
    [Vec3::zeros(), Vec3::x(), Vec3::y(), Vec3::z()]
}

/// Smallest normalized singular value of the DoF matrix over the reference
/// tetrahedron and `count` random ones.
pub fn unisolvence_margin(kind: ElementKind, count: usize, seed: u64) -> Result<f64> {
    let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
    let mut worst = 1.0 / LocalElement::new(kind, reference_tet())?.condition;
    for _ in 0..count {
        let e = LocalElement::new(kind, random_tetrahedron(&mut rng, 10.0))?;
        worst = worst.min(1.0 / e.condition);
    }
    Ok(worst)
}

/// `‖B - curlᵀ M_d curl‖ / ‖B‖` with the operators of the spaces module.
pub fn curl_curl_oracle(mesh: Arc<Mesh>, k: usize) -> Result<f64> {
    let w = GlobalSpace::new(mesh.clone(), ElementKind::GradCurl(k), Boundary::Zero)?;
    let vd = GlobalSpace::new(mesh, ElementKind::TaiWinther, Boundary::Zero)?;
    let b = assemble_curl_curl(&w, 10)?;
    let curl = curl_operator(&w, &vd)?;
    let md = assemble_mass(&vd, 10)?;
    let composed = curl.transpose().mul(&md).mul(&curl);
    Ok(b.add_scaled(1.0, &composed, -1.0).max_abs() / b.max_abs())
}

struct Suite {
    checks: Vec<CheckResult>,
}

impl Suite {
    fn push(&mut self, name: String, passed: bool, value: f64, detail: String) {
        self.checks.push(CheckResult {
            name,
            passed,
            value,
            detail,
        });
    }

    /// Records a check whose evaluation itself failed.
    fn error(&mut self, name: String, e: Error) {
        self.push(name, false, f64::NAN, e.to_string());
    }
}

/// Runs every check for the configured levels and degrees.
pub fn run_verification_suite(cfg: &VerifyConfig) -> Result<VerificationReport> {
    if cfg.levels.is_empty() || cfg.levels.contains(&0) || cfg.ks.is_empty() {
        return Err(Error::Config(
            "verification needs positive levels and at least one k".into(),
        ));
    }
    if let Some(k) = cfg.ks.iter().find(|k| !(1..=2).contains(*k)) {
        return Err(Error::Config(format!("k must be 1 or 2, got {k}")));
    }
    if !(cfg.sigma > 0.0) {
        return Err(Error::Config(format!("sigma must be > 0, got {}", cfg.sigma)));
    }
    let mut levels = cfg.levels.clone();
    levels.sort_unstable();
    levels.dedup();
    let meshes: Vec<(usize, Arc<Mesh>)> = levels
        .iter()
        .map(|&n| Ok((n, Arc::new(build_uniform_cube_mesh(n)?))))
        .collect::<Result<_>>()?;
    let dense: Vec<&(usize, Arc<Mesh>)> = meshes.iter().filter(|(n, _)| *n <= DENSE_LIMIT).collect();
    let mut suite = Suite { checks: Vec::new() };
    let mut warnings = Vec::new();
    let mut rng = rand::rngs::StdRng::seed_from_u64(cfg.seed);

    let mut kinds = vec![ElementKind::TaiWinther];
    for &k in &cfg.ks {
        kinds.push(ElementKind::GradCurl(k));
        kinds.push(ElementKind::Nedelec(k));
    }
    for kind in kinds {
        let name = format!("unisolvence/{kind}");
        match unisolvence_margin(kind, cfg.random_tets, cfg.seed) {
            Ok(m) => suite.push(
                name,
                m > UNISOLVENCE_THRESHOLD,
                m,
                format!("min σ_min/σ_max over {} tetrahedra", cfg.random_tets + 1),
            ),
            Err(e) => suite.error(name, e),
        }
    }

    for &k in &cfg.ks {
        let name = format!("kernel/W{k}");
        let r = LocalElement::new(ElementKind::GradCurl(k), reference_tet())
            .and_then(|w| kernel_check(&w, &LocalElement::new(ElementKind::TaiWinther, reference_tet())?));
        match r {
            Ok(r) => suite.push(
                name,
                r.passed(),
                r.nullity as f64,
                format!("nullity {} (expected {})", r.nullity, r.expected_nullity),
            ),
            Err(e) => suite.error(name, e),
        }
    }

    for (n, mesh) in &dense {
        for &k in &cfg.ks {
            for variant in [ComplexVariant::Zero, ComplexVariant::Partial] {
                let name = format!("complex/{variant:?}/n={n}/k={k}");
                match verify_complex(mesh.clone(), k, variant) {
                    Ok(r) => suite.push(
                        name,
                        r.passed(),
                        r.rank_curl as f64,
                        format!(
                            "dims {:?}, ranks ({}, {}, {})",
                            r.dims, r.rank_grad, r.rank_curl, r.rank_div
                        ),
                    ),
                    Err(e) => suite.error(name, e),
                }
            }
            for bc in [Boundary::Zero, Boundary::Partial] {
                let name = format!("conformity/{bc:?}/n={n}/k={k}");
                let r = GlobalSpace::new(mesh.clone(), ElementKind::GradCurl(k), bc).and_then(|s| {
                    let u: Vec<f64> = (0..s.dim()).map(|_| rng.gen_range(-1.0..1.0)).collect();
                    conformity_check(&s, &u)
                });
                match r {
                    Ok(r) => suite.push(
                        name,
                        r.tangential_jump < 1e-8 && r.boundary_trace < 1e-8,
                        r.tangential_jump,
                        format!("boundary trace {:.2e}", r.boundary_trace),
                    ),
                    Err(e) => suite.error(name, e),
                }
            }
            let name = format!("infsup/n={n}/k={k}");
            let r = GlobalSpace::new(mesh.clone(), ElementKind::Lagrange(k + 1), Boundary::Zero).and_then(|vg| {
                let mu: Vec<f64> = (0..vg.dim()).map(|_| rng.gen_range(-1.0..1.0)).collect();
                infsup_witness_check(mesh.clone(), k, 0.0, &mu)
            });
            match r {
                Ok(r) => {
                    let dev = (r.ratio / r.seminorm - 1.0).abs();
                    suite.push(name, dev < 1e-10, dev, "|ratio/|μ|₁ - 1|".into());
                }
                Err(e) => suite.error(name, e),
            }
            let name = format!("curl-curl-oracle/n={n}/k={k}");
            match curl_curl_oracle(mesh.clone(), k) {
                Ok(d) => suite.push(name, d < 1e-10, d, "‖B - curlᵀ M_d curl‖ / ‖B‖".into()),
                Err(e) => suite.error(name, e),
            }
        }
    }

    for &k in &cfg.ks {
        let mut prev: Option<(usize, f64)> = None;
        for (n, mesh) in &meshes {
            let name = format!("poincare/n={n}/k={k}");
            match discrete_poincare_constant(mesh.clone(), k) {
                Ok(r) => {
                    suite.push(name, r.beta > 0.0, r.beta, format!("{} iterations", r.iterations));
                    if let Some((m, b)) = prev {
                        let ratio = r.beta / b;
                        suite.push(
                            format!("poincare-ratio/n={m}->{n}/k={k}"),
                            ratio >= POINCARE_RATIO,
                            ratio,
                            format!("β({n})/β({m}) >= {POINCARE_RATIO}"),
                        );
                    }
                    prev = Some((*n, r.beta));
                }
                Err(e) => suite.error(name, e),
            }
        }
    }

    if let Some((n, mesh)) = dense.last() {
        for &k in &cfg.ks {
            let name = format!("nitsche-psd/n={n}/k={k}/sigma={}", cfg.sigma);
            match NitscheParts::new(mesh.clone(), k) {
                Ok(parts) => {
                    let rel = parts.relative_min_eigenvalue(cfg.sigma);
                    let ok = rel >= -1e-8;
                    let sigma0 = parts.threshold(1e-3, 1e4, 1e-8, 1e-3).ok();
                    let detail = match sigma0 {
                        Some(s) => format!("relative λ_min; bisection σ₀ ≈ {s:.3}"),
                        None => "relative λ_min; σ₀ not bracketed".into(),
                    };
                    if !ok {
                        let s0 = sigma0.map_or("?".into(), |s| format!("{s:.3}"));
                        warnings.push(format!("σ = {} below σ₀ ≈ {s0} (k={k}); increase --sigma", cfg.sigma));
                    }
                    suite.push(name, ok, rel, detail);
                }
                Err(e) => suite.error(name, e),
            }
        }
    }

    let passed = suite.checks.iter().all(|c| c.passed);
    Ok(VerificationReport {
        levels,
        ks: cfg.ks.clone(),
        sigma: cfg.sigma,
        passed,
        checks: suite.checks,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_penalty_is_flagged() {
        let cfg = VerifyConfig {
            levels: vec![1],
            ks: vec![1],
            sigma: 0.01,
            random_tets: 3,
            seed: 1,
        };
        let r = run_verification_suite(&cfg).unwrap();
        let psd = r.checks.iter().find(|c| c.name.starts_with("nitsche-psd")).unwrap();
        assert!(!psd.passed);
        assert!(r.warnings.iter().any(|w| w.contains("below σ₀")));
        assert!(!r.passed);
        assert!(
            r.checks
                .iter()
                .filter(|c| !c.name.starts_with("nitsche"))
                .all(|c| c.passed),
            "{:?}",
            r.checks
        );
    }

    #[test]
    fn rejects_bad_configuration() {
        let cfg = VerifyConfig {
            ks: vec![3],
            ..VerifyConfig::default()
        };
        assert!(matches!(run_verification_suite(&cfg), Err(Error::Config(_))));
    }
}
