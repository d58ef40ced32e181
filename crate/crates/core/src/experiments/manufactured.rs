//! Closed-form manufactured solution on the unit cube.
//!
//! `ψ = a(x) a(y) a(z)` with `a(t) = sin²(πt)`, `u₀ = curl(0, 0, ψ)` and
//! `f = curl² u₀`. Every derivative of `ψ` is a product of derivatives of `a`.

use std::f64::consts::PI;

use nalgebra::Matrix3;
use serde::Serialize;

use crate::Vec3;

/// `d^m/dt^m sin²(πt)` for `m ≤ 4`.
fn a_derivative(m: usize, t: f64) -> f64 {
    let (s, c) = (2.0 * PI * t).sin_cos();
    match m {
        0 => (PI * t).sin().powi(2),
        1 => PI * s,
        2 => 2.0 * PI * PI * c,
        3 => -4.0 * PI.powi(3) * s,
        4 => -8.0 * PI.powi(4) * c,
        _ => panic!("derivative order {m} not tabulated"),
    }
}

/// Exact quantities that can be evaluated pointwise.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Quantity {
    U0,
    CurlU0,
    /// Row-major Jacobian `∂_j (curl u₀)_i`.
    GradCurlU0,
    F,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ManufacturedProblem {
    pub eps: f64,
}

impl ManufacturedProblem {
    pub fn new(eps: f64) -> Self {
        ManufacturedProblem { eps }
    }

    /// `∂_x^i ∂_y^j ∂_z^k ψ`.
    pub fn psi(&self, [i, j, k]: [usize; 3], x: &Vec3) -> f64 {
        a_derivative(i, x.x) * a_derivative(j, x.y) * a_derivative(k, x.z)
    }

    pub fn u0(&self, x: &Vec3) -> Vec3 {
        Vec3::new(self.psi([0, 1, 0], x), -self.psi([1, 0, 0], x), 0.0)
    }

    pub fn curl_u0(&self, x: &Vec3) -> Vec3 {
        Vec3::new(
            self.psi([1, 0, 1], x),
            self.psi([0, 1, 1], x),
            -self.psi([2, 0, 0], x) - self.psi([0, 2, 0], x),
        )
    }

    pub fn grad_curl_u0(&self, x: &Vec3) -> Matrix3<f64> {
        let p = |i| self.psi(i, x);
        Matrix3::new(
            p([2, 0, 1]),
            p([1, 1, 1]),
            p([1, 0, 2]),
            p([1, 1, 1]),
            p([0, 2, 1]),
            p([0, 1, 2]),
            -p([3, 0, 0]) - p([1, 2, 0]),
            -p([2, 1, 0]) - p([0, 3, 0]),
            -p([2, 0, 1]) - p([0, 2, 1]),
        )
    }

    /// `curl² u₀ = (-∂_y Δψ, ∂_x Δψ, 0)`.
    pub fn f(&self, x: &Vec3) -> Vec3 {
        let p = |i| self.psi(i, x);
        Vec3::new(
            -(p([2, 1, 0]) + p([0, 3, 0]) + p([0, 1, 2])),
            p([3, 0, 0]) + p([1, 2, 0]) + p([1, 0, 2]),
            0.0,
        )
    }

    /// Flattened value of a quantity (3 or 9 entries).
    pub fn evaluate(&self, which: Quantity, x: &Vec3) -> Vec<f64> {
        match which {
            Quantity::U0 => self.u0(x).as_slice().to_vec(),
            Quantity::CurlU0 => self.curl_u0(x).as_slice().to_vec(),
            Quantity::GradCurlU0 => self.grad_curl_u0(x).transpose().as_slice().to_vec(),
            Quantity::F => self.f(x).as_slice().to_vec(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    const STEP: f64 = 1e-5;

    fn fd<F: Fn(&Vec3) -> Vec3>(g: F, x: &Vec3, axis: usize) -> Vec3 {
        let mut e = Vec3::zeros();
        e[axis] = STEP;
        (g(&(x + e)) - g(&(x - e))) / (2.0 * STEP)
    }

    fn fd_curl<F: Fn(&Vec3) -> Vec3>(g: F, x: &Vec3) -> Vec3 {
        let (dx, dy, dz) = (fd(&g, x, 0), fd(&g, x, 1), fd(&g, x, 2));
        Vec3::new(dy.z - dz.y, dz.x - dx.z, dx.y - dy.x)
    }

    fn close(a: &Vec3, b: &Vec3, scale: f64) -> bool {
        (a - b).norm() <= 1e-6 * scale.max(1.0)
    }

    fn points(n: usize, seed: u64) -> Vec<Vec3> {
        let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                Vec3::new(
                    rng.gen_range(0.0..1.0),
                    rng.gen_range(0.0..1.0),
                    rng.gen_range(0.0..1.0),
                )
            })
            .collect()
    }

    #[test]
    fn one_dimensional_derivatives_match_differences() {
        for m in 0..4 {
            for t in [0.1, 0.37, 0.5, 0.81] {
                let d = (a_derivative(m, t + STEP) - a_derivative(m, t - STEP)) / (2.0 * STEP);
                let exact = a_derivative(m + 1, t);
                assert!((d - exact).abs() < 1e-6 * exact.abs().max(1.0), "m={m}");
            }
        }
    }

    #[test]
    fn closed_forms_match_finite_differences() {
        let p = ManufacturedProblem::new(0.0);
        let psi_vec = |x: &Vec3| Vec3::new(0.0, 0.0, p.psi([0, 0, 0], x));
        for x in points(40, 2) {
            let u = p.u0(&x);
            assert!(close(&u, &fd_curl(psi_vec, &x), u.norm()));
            let cu = p.curl_u0(&x);
            assert!(close(&cu, &fd_curl(|y| p.u0(y), &x), cu.norm()));
            let f = p.f(&x);
            assert!(close(&f, &fd_curl(|y| p.curl_u0(y), &x), f.norm()));
            let j = p.grad_curl_u0(&x);
            for axis in 0..3 {
                let col = fd(|y| p.curl_u0(y), &x, axis);
                assert!(close(&j.column(axis).into(), &col, j.norm()));
            }
        }
    }

    #[test]
    fn center_value_vanishes() {
        let p = ManufacturedProblem::new(0.0);
        assert!(p.u0(&Vec3::new(0.5, 0.5, 0.5)).norm() < 1e-14);
    }

    #[test]
    fn velocity_and_load_are_divergence_free() {
        let p = ManufacturedProblem::new(0.0);
        for x in points(100, 3) {
            let div_u = fd(|y| p.u0(y), &x, 0).x + fd(|y| p.u0(y), &x, 1).y + fd(|y| p.u0(y), &x, 2).z;
            assert!(div_u.abs() < 1e-6 * p.u0(&x).norm().max(1.0));
            let div_f = fd(|y| p.f(y), &x, 0).x + fd(|y| p.f(y), &x, 1).y;
            assert!(div_f.abs() < 1e-6 * 8.0 * PI.powi(4));
        }
    }

    #[test]
    fn velocity_vanishes_on_the_boundary() {
        let p = ManufacturedProblem::new(0.0);
        for (i, x) in points(50, 4).into_iter().enumerate() {
            let mut y = x;
            y[i % 3] = if i % 2 == 0 { 0.0 } else { 1.0 };
            assert!(p.u0(&y).norm() < 1e-12);
        }
    }

    #[test]
    fn flattened_jacobian_is_row_major() {
        let p = ManufacturedProblem::new(0.0);
        let x = Vec3::new(0.2, 0.3, 0.7);
        let flat = p.evaluate(Quantity::GradCurlU0, &x);
        let j = p.grad_curl_u0(&x);
        assert_eq!(flat[1], j[(0, 1)]);
        assert_eq!(flat[3], j[(1, 0)]);
    }
}
