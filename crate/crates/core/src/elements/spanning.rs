//! Spanning sets of the local shape spaces.

use nalgebra::Matrix4;

use super::ElementKind;
use crate::polyquad::{Poly, PolynomialField};
use crate::Vec3;

/// Summand of the direct-sum decomposition a spanning field belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SpanPart {
    /// `∇ℙ_{k+1}` (gradients of non-constant monomials).
    Gradient,
    /// `x × ℙ₁(ℝ³)`.
    PositionCross,
    /// `b_K ℙ₁(ℝ³)`.
    Bubble,
    /// `ℙ₁(ℝ³)`.
    Linear,
    /// `curl(b_K ℙ₁(ℝ³))`.
    CurlBubble,
    /// Scalar polynomials.
    Scalar,
}

/// Barycentric coordinates as affine polynomials in `ξ`.
pub(crate) fn barycentric_polys(vertices: &[Vec3; 4], center: Vec3, scale: f64) -> [Poly; 4] {
    let mut m = Matrix4::zeros();
    for (i, v) in vertices.iter().enumerate() {
        let q = (v - center) / scale;
        m[(i, 0)] = 1.0;
        m[(i, 1)] = q.x;
        m[(i, 2)] = q.y;
        m[(i, 3)] = q.z;
    }
    let inv = m.try_inverse().expect("non-degenerate tetrahedron");
    std::array::from_fn(|j| Poly::affine(inv[(0, j)], &Vec3::new(inv[(1, j)], inv[(2, j)], inv[(3, j)])))
}

fn position() -> [Poly; 3] {
    [Poly::coordinate(0), Poly::coordinate(1), Poly::coordinate(2)]
}

/// Basis of `ℙ₁(ℝ³)`: `e_j` then `ξ_i e_j`.
fn linear_fields(scale: f64) -> Vec<PolynomialField> {
    let mut out = Vec::with_capacity(12);
    for j in 0..3 {
        out.push(PolynomialField::along(scale, Poly::constant(1.0), j));
    }
    for i in 0..3 {
        for j in 0..3 {
            out.push(PolynomialField::along(scale, Poly::coordinate(i), j));
        }
    }
    out
}

/// A complement of `ℝξ` in `ℙ₁(ℝ³)`, so that `ξ × ·` is injective on it.
fn cross_factors(scale: f64) -> Vec<PolynomialField> {
    let mut out = Vec::with_capacity(11);
    for j in 0..3 {
        out.push(PolynomialField::along(scale, Poly::constant(1.0), j));
    }
    for i in 0..3 {
        for j in 0..3 {
            if i != j {
                out.push(PolynomialField::along(scale, Poly::coordinate(i), j));
            }
        }
    }
    for i in 0..2 {
        out.push(PolynomialField::along(scale, Poly::coordinate(i), i));
    }
    out
}

fn gradients(degree: usize, scale: f64) -> Vec<PolynomialField> {
    let mut out = Vec::new();
    for d in 1..=degree {
        for a in (0..=d).rev() {
            for b in (0..=d - a).rev() {
                let p = Poly::monomial(a, b, d - a - b);
                out.push(PolynomialField::scalar(scale, p).grad());
            }
        }
    }
    out
}

fn bubble(vertices: &[Vec3; 4], center: Vec3, scale: f64) -> Poly {
    let l = barycentric_polys(vertices, center, scale);
    l[0].mul(&l[1]).mul(&l[2]).mul(&l[3])
}

pub(super) fn spanning_set(
    kind: ElementKind,
    vertices: &[Vec3; 4],
    center: Vec3,
    scale: f64,
) -> (Vec<PolynomialField>, Vec<SpanPart>) {
    let mut span = Vec::new();
    let mut parts = Vec::new();
    let mut push = |fields: Vec<PolynomialField>, part: SpanPart| {
        parts.extend(std::iter::repeat_n(part, fields.len()));
        span.extend(fields);
    };
    match kind {
        ElementKind::GradCurl(k) | ElementKind::Nedelec(k) => {
            push(gradients(k + 1, scale), SpanPart::Gradient);
            let x = position();
            push(
                cross_factors(scale).iter().map(|p| p.crossed_by(&x)).collect(),
                SpanPart::PositionCross,
            );
            if matches!(kind, ElementKind::GradCurl(_)) {
                let b = bubble(vertices, center, scale);
                push(
                    linear_fields(scale).iter().map(|p| p.times(&b)).collect(),
                    SpanPart::Bubble,
                );
            }
        }
        ElementKind::TaiWinther => {
            push(linear_fields(scale), SpanPart::Linear);
            let b = bubble(vertices, center, scale);
            push(
                linear_fields(scale).iter().map(|p| p.times(&b).curl()).collect(),
                SpanPart::CurlBubble,
            );
        }
        ElementKind::Lagrange(p) => {
            let mut fields = vec![PolynomialField::scalar(scale, Poly::constant(1.0))];
            for d in 1..=p {
                for a in (0..=d).rev() {
                    for b in (0..=d - a).rev() {
                        fields.push(PolynomialField::scalar(scale, Poly::monomial(a, b, d - a - b)));
                    }
                }
            }
            push(fields, SpanPart::Scalar);
        }
        ElementKind::Dg0 => {
            push(
                vec![PolynomialField::scalar(scale, Poly::constant(1.0))],
                SpanPart::Scalar,
            );
        }
    }
    (span, parts)
}
