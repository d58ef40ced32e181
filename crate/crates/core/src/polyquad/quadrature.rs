//! Positive-weight quadrature on the reference segment, triangle and
//! tetrahedron.
//!
//! One-dimensional rules are Gauss–Jacobi rules computed with the
//! Golub–Welsch eigenvalue method; the simplex rules are conical (collapsed
//! coordinate) products of them, so every weight is positive.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::{DMatrix, SymmetricEigen};

use crate::{Error, Result, Vec3};

/// Highest polynomial degree for which rules are generated.
pub const MAX_QUADRATURE_DEGREE: usize = 12;

/// Quadrature rule on a reference simplex.
///
/// Points are given in reference coordinates (unused components are zero):
/// the segment `[0, 1]`, the triangle with vertices `(0,0), (1,0), (0,1)` and
/// the tetrahedron with vertices `0, e1, e2, e3`. Weights sum to the
/// reference measure (1, 1/2 or 1/6).
#[derive(Clone, Debug)]
pub struct QuadratureRule {
    pub dim: usize,
    pub degree: usize,
    pub points: Vec<Vec3>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn reference_measure(dim: usize) -> f64 {
        match dim {
            1 => 1.0,
            2 => 0.5,
            _ => 1.0 / 6.0,
        }
    }
}

/// Gauss–Jacobi rule on `[0, 1]` for the weight `(1 - x)^alpha`, exact for
/// polynomials of degree `2 * npts - 1`.
pub fn gauss_jacobi(npts: usize, alpha: u32) -> (Vec<f64>, Vec<f64>) {
    // Monic Jacobi recurrence on [-1, 1] with weight (1-t)^a (1+t)^0.
    let a = alpha as f64;
    let b = 0.0;
    let mut diag = vec![0.0; npts];
    let mut off = vec![0.0; npts.saturating_sub(1)];
    for (n, d) in diag.iter_mut().enumerate() {
        let nf = n as f64;
        let s = 2.0 * nf + a + b;
        *d = if n == 0 {
            (b - a) / (a + b + 2.0)
        } else {
            (b * b - a * a) / (s * (s + 2.0))
        };
    }
    for (i, o) in off.iter_mut().enumerate() {
        let nf = (i + 1) as f64;
        let s = 2.0 * nf + a + b;
        let num = 4.0 * nf * (nf + a) * (nf + b) * (nf + a + b);
        let den = s * s * (s + 1.0) * (s - 1.0);
        *o = (num / den).sqrt();
    }
    let mut jm = DMatrix::<f64>::zeros(npts, npts);
    for i in 0..npts {
        jm[(i, i)] = diag[i];
        if i + 1 < npts {
            jm[(i, i + 1)] = off[i];
            jm[(i + 1, i)] = off[i];
        }
    }
    // total mass of (1-t)^a on [-1, 1] is 2^(a+1) / (a+1)
    let mu0 = 2f64.powf(a + 1.0) / (a + 1.0);
    let eig = SymmetricEigen::new(jm);
    let mut pairs: Vec<(f64, f64)> = (0..npts)
        .map(|i| {
            let v0 = eig.eigenvectors[(0, i)];
            (eig.eigenvalues[i], mu0 * v0 * v0)
        })
        .collect();
    pairs.sort_by(|p, q| p.0.partial_cmp(&q.0).unwrap());
    // map t in [-1,1] to x = (1+t)/2: (1-t)^a dt = 2^(a+1) (1-x)^a dx
    let scale = 2f64.powf(a + 1.0);
    let nodes = pairs.iter().map(|p| 0.5 * (1.0 + p.0)).collect();
    let weights = pairs.iter().map(|p| p.1 / scale).collect();
    (nodes, weights)
}

fn build_rule(dim: usize, degree: usize) -> QuadratureRule {
    let m = degree / 2 + 1;
    let (mut points, mut weights) = (Vec::new(), Vec::new());
    match dim {
        1 => {
            let (x, w) = gauss_jacobi(m, 0);
            for (xi, wi) in x.into_iter().zip(w) {
                points.push(Vec3::new(xi, 0.0, 0.0));
                weights.push(wi);
            }
        }
        2 => {
            let (u, wu) = gauss_jacobi(m, 1);
            let (v, wv) = gauss_jacobi(m, 0);
            for (ui, wui) in u.iter().zip(&wu) {
                for (vi, wvi) in v.iter().zip(&wv) {
                    points.push(Vec3::new(*ui, vi * (1.0 - ui), 0.0));
                    weights.push(wui * wvi);
                }
            }
        }
        _ => {
            let (u, wu) = gauss_jacobi(m, 2);
            let (v, wv) = gauss_jacobi(m, 1);
            let (w, ww) = gauss_jacobi(m, 0);
            for (ui, wui) in u.iter().zip(&wu) {
                for (vi, wvi) in v.iter().zip(&wv) {
                    for (wi, wwi) in w.iter().zip(&ww) {
                        let y = vi * (1.0 - ui);
                        let z = wi * (1.0 - ui) * (1.0 - vi);
                        points.push(Vec3::new(*ui, y, z));
                        weights.push(wui * wvi * wwi);
                    }
                }
            }
        }
    }
    QuadratureRule {
        dim,
        degree,
        points,
        weights,
    }
}

/// Rule on the reference simplex of dimension `dim` that integrates every
/// polynomial of total degree `<= degree` exactly.
pub fn simplex_quadrature(dim: usize, degree: usize) -> Result<Arc<QuadratureRule>> {
    if !(1..=3).contains(&dim) {
        return Err(Error::Config(format!("quadrature dimension {dim} not in 1..=3")));
    }
    if degree > MAX_QUADRATURE_DEGREE {
        return Err(Error::Config(format!(
            "quadrature degree {degree} exceeds supported maximum {MAX_QUADRATURE_DEGREE}"
        )));
    }
    static CACHE: OnceLock<Mutex<HashMap<(usize, usize), Arc<QuadratureRule>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    let mut guard = cache.lock().expect("quadrature cache poisoned");
    Ok(guard
        .entry((dim, degree))
        .or_insert_with(|| Arc::new(build_rule(dim, degree)))
        .clone())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn factorial(n: usize) -> f64 {
        (1..=n).map(|k| k as f64).product()
    }

    /// ∫ over the reference simplex of x^a y^b z^c = a! b! c! / (a+b+c+dim)!
    fn exact_monomial(dim: usize, e: [usize; 3]) -> f64 {
        let num: f64 = e[..dim].iter().map(|&k| factorial(k)).product();
        num / factorial(e[..dim].iter().sum::<usize>() + dim)
    }

    #[test]
    fn weights_sum_to_reference_measure() {
        for dim in 1..=3 {
            for degree in 0..=MAX_QUADRATURE_DEGREE {
                let r = simplex_quadrature(dim, degree).unwrap();
                let s: f64 = r.weights.iter().sum();
                assert!((s - QuadratureRule::reference_measure(dim)).abs() < 1e-14);
                assert!(r.weights.iter().all(|&w| w > 0.0));
            }
        }
    }

    #[test]
    fn monomial_exactness_sweep() {
        for dim in 1..=3 {
            for degree in 0..=MAX_QUADRATURE_DEGREE {
                let r = simplex_quadrature(dim, degree).unwrap();
                for a in 0..=degree {
                    for b in 0..=(if dim >= 2 { degree - a } else { 0 }) {
                        for c in 0..=(if dim == 3 { degree - a - b } else { 0 }) {
                            let got: f64 = r
                                .points
                                .iter()
                                .zip(&r.weights)
                                .map(|(p, w)| w * p.x.powi(a as i32) * p.y.powi(b as i32) * p.z.powi(c as i32))
                                .sum();
                            let want = exact_monomial(dim, [a, b, c]);
                            assert!(
                                (got - want).abs() <= 1e-12 * want.abs().max(1e-300) + 1e-16,
                                "dim {dim} deg {degree} monomial ({a},{b},{c}): {got} vs {want}"
                            );
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn fifth_power_on_segment() {
        let r = simplex_quadrature(1, 5).unwrap();
        let s: f64 = r.points.iter().zip(&r.weights).map(|(p, w)| w * p.x.powi(5)).sum();
        assert!((s - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn bubble_integral_matches_factorial_formula() {
        // ∫_ref λ1 λ2 λ3 λ4 = 1!1!1!1! 3! / 7! · |ref| = 6/5040 · 1/6 = 1/5040
        let r = simplex_quadrature(3, 4).unwrap();
        let s: f64 = r
            .points
            .iter()
            .zip(&r.weights)
            .map(|(p, w)| w * (1.0 - p.x - p.y - p.z) * p.x * p.y * p.z)
            .sum();
        let oracle = factorial(1).powi(4) * factorial(3) / factorial(7) / 6.0;
        assert!((s - oracle).abs() < 1e-16);
        assert!((s - 1.0 / 5040.0).abs() < 1e-16);
    }

    #[test]
    fn unsupported_degree_is_rejected() {
        assert!(simplex_quadrature(3, MAX_QUADRATURE_DEGREE + 1).is_err());
        assert!(simplex_quadrature(4, 2).is_err());
    }
}
