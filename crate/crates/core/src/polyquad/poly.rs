//! Dense polynomials in three variables over a graded monomial basis.
//!
//! Monomials `ξ^a η^b ζ^c` are ordered by total degree first, so the
//! coefficient vector of a degree-`d` polynomial is a prefix of the one of
//! any higher degree. Fields are expressed in scaled local coordinates
//! `ξ = (x - center) / scale`; derivatives with respect to the physical
//! coordinates carry the `1/scale` factor.

use std::sync::OnceLock;

use crate::Vec3;

/// Highest total degree the monomial tables support.
pub const MAX_DEGREE: usize = 10;

/// Number of monomials of total degree `<= degree` in three variables.
pub const fn num_monomials(degree: usize) -> usize {
    (degree + 1) * (degree + 2) * (degree + 3) / 6
}

fn exponent_table() -> &'static [[u8; 3]] {
    static TABLE: OnceLock<Vec<[u8; 3]>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut t = Vec::with_capacity(num_monomials(MAX_DEGREE));
        for total in 0..=MAX_DEGREE {
            for a in (0..=total).rev() {
                for b in (0..=total - a).rev() {
                    t.push([a as u8, b as u8, (total - a - b) as u8]);
                }
            }
        }
        t
    })
}

/// Exponents of the monomials of total degree `<= degree`, in basis order.
pub fn exponents(degree: usize) -> &'static [[u8; 3]] {
    assert!(degree <= MAX_DEGREE, "degree {degree} exceeds MAX_DEGREE");
    &exponent_table()[..num_monomials(degree)]
}

/// Position of `ξ^a η^b ζ^c` in the graded basis.
pub fn monomial_index(a: usize, b: usize, c: usize) -> usize {
    let t = a + b + c;
    let offset = if t == 0 { 0 } else { num_monomials(t - 1) };
    let before_a = (t - a) * (t - a + 1) / 2;
    offset + before_a + (t - a - b)
}

/// Values of all monomials of degree `<= degree` at `p`.
pub fn monomial_values(p: &Vec3, degree: usize) -> Vec<f64> {
    let mut out = vec![0.0; num_monomials(degree)];
    monomial_values_into(p, degree, &mut out);
    out
}

/// Like [`monomial_values`] but writes into a caller-provided buffer.
pub fn monomial_values_into(p: &Vec3, degree: usize, out: &mut [f64]) {
    let mut px = [1.0; MAX_DEGREE + 1];
    let mut py = [1.0; MAX_DEGREE + 1];
    let mut pz = [1.0; MAX_DEGREE + 1];
    for i in 1..=degree {
        px[i] = px[i - 1] * p.x;
        py[i] = py[i - 1] * p.y;
        pz[i] = pz[i - 1] * p.z;
    }
    for (slot, e) in out.iter_mut().zip(exponents(degree)) {
        *slot = px[e[0] as usize] * py[e[1] as usize] * pz[e[2] as usize];
    }
}

/// Scalar polynomial with coefficients over the graded monomial basis.
#[derive(Clone, Debug, PartialEq)]
pub struct Poly {
    degree: usize,
    coeffs: Vec<f64>,
}

impl Poly {
    pub fn zero(degree: usize) -> Self {
        Self {
            degree,
            coeffs: vec![0.0; num_monomials(degree)],
        }
    }

    pub fn constant(c: f64) -> Self {
        Self {
            degree: 0,
            coeffs: vec![c],
        }
    }

    /// The coordinate function `ξ_axis`.
    pub fn coordinate(axis: usize) -> Self {
        let mut p = Self::zero(1);
        p.coeffs[1 + axis] = 1.0;
        p
    }

    pub fn monomial(a: usize, b: usize, c: usize) -> Self {
        let mut p = Self::zero(a + b + c);
        p.coeffs[monomial_index(a, b, c)] = 1.0;
        p
    }

    /// Affine polynomial `c0 + g·ξ`.
    pub fn affine(c0: f64, g: &Vec3) -> Self {
        Self {
            degree: 1,
            coeffs: vec![c0, g.x, g.y, g.z],
        }
    }

    pub fn from_coeffs(degree: usize, coeffs: Vec<f64>) -> Self {
        assert_eq!(coeffs.len(), num_monomials(degree));
        Self { degree, coeffs }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Coefficients padded with zeros up to `degree`.
    pub fn coeffs_padded(&self, degree: usize) -> Vec<f64> {
        assert!(degree >= self.degree);
        let mut c = self.coeffs.clone();
        c.resize(num_monomials(degree), 0.0);
        c
    }

    pub fn eval(&self, p: &Vec3) -> f64 {
        let m = monomial_values(p, self.degree);
        self.eval_with(&m)
    }

    /// Evaluates using precomputed monomial values of degree `>= self.degree()`.
    pub fn eval_with(&self, monomials: &[f64]) -> f64 {
        self.coeffs.iter().zip(monomials).map(|(c, m)| c * m).sum()
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            degree: self.degree,
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let degree = self.degree.max(other.degree);
        let mut coeffs = self.coeffs_padded(degree);
        for (c, o) in coeffs.iter_mut().zip(&other.coeffs) {
            *c += o;
        }
        Self { degree, coeffs }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-1.0))
    }

    pub fn mul(&self, other: &Self) -> Self {
        let degree = self.degree + other.degree;
        assert!(degree <= MAX_DEGREE, "product degree {degree} too high");
        let mut out = Self::zero(degree);
        let ea = exponents(self.degree);
        let eb = exponents(other.degree);
        for (i, &ca) in self.coeffs.iter().enumerate() {
            if ca == 0.0 {
                continue;
            }
            for (j, &cb) in other.coeffs.iter().enumerate() {
                if cb == 0.0 {
                    continue;
                }
                let k = monomial_index(
                    (ea[i][0] + eb[j][0]) as usize,
                    (ea[i][1] + eb[j][1]) as usize,
                    (ea[i][2] + eb[j][2]) as usize,
                );
                out.coeffs[k] += ca * cb;
            }
        }
        out
    }

    /// Partial derivative with respect to the local coordinate `axis`.
    pub fn derivative(&self, axis: usize) -> Self {
        if self.degree == 0 {
            return Self::zero(0);
        }
        let mut out = Self::zero(self.degree - 1);
        for (i, e) in exponents(self.degree).iter().enumerate() {
            let c = self.coeffs[i];
            let power = e[axis] as usize;
            if c == 0.0 || power == 0 {
                continue;
            }
            let mut lowered = [e[0] as usize, e[1] as usize, e[2] as usize];
            lowered[axis] -= 1;
            out.coeffs[monomial_index(lowered[0], lowered[1], lowered[2])] += c * power as f64;
        }
        out
    }

    /// Largest absolute coefficient.
    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.abs()))
    }
}

/// A scalar or vector polynomial field on one cell, written in the cell's
/// scaled local coordinates.
///
/// `scale` is the length by which local coordinates were divided; all
/// differential operators below return derivatives with respect to the
/// physical coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct PolynomialField {
    pub scale: f64,
    pub comps: Vec<Poly>,
}

impl PolynomialField {
    pub fn scalar(scale: f64, p: Poly) -> Self {
        Self { scale, comps: vec![p] }
    }

    pub fn vector(scale: f64, comps: [Poly; 3]) -> Self {
        Self {
            scale,
            comps: comps.into(),
        }
    }

    /// `p * e_axis`.
    pub fn along(scale: f64, p: Poly, axis: usize) -> Self {
        let mut comps = vec![Poly::zero(0), Poly::zero(0), Poly::zero(0)];
        comps[axis] = p;
        Self { scale, comps }
    }

    pub fn n_comps(&self) -> usize {
        self.comps.len()
    }

    pub fn degree(&self) -> usize {
        self.comps.iter().map(Poly::degree).max().unwrap_or(0)
    }

    pub fn eval(&self, xi: &Vec3) -> Vec<f64> {
        let m = monomial_values(xi, self.degree());
        self.comps.iter().map(|c| c.eval_with(&m)).collect()
    }

    pub fn eval_vec(&self, xi: &Vec3) -> Vec3 {
        assert_eq!(self.n_comps(), 3);
        let v = self.eval(xi);
        Vec3::new(v[0], v[1], v[2])
    }

    fn physical_derivative(&self, comp: usize, axis: usize) -> Poly {
        self.comps[comp].derivative(axis).scale(1.0 / self.scale)
    }

    /// Gradient of a scalar field.
    pub fn grad(&self) -> Self {
        assert_eq!(self.n_comps(), 1, "grad expects a scalar field");
        Self {
            scale: self.scale,
            comps: (0..3).map(|a| self.physical_derivative(0, a)).collect(),
        }
    }

    pub fn curl(&self) -> Self {
        assert_eq!(self.n_comps(), 3, "curl expects a vector field");
        let d = |c, a| self.physical_derivative(c, a);
        Self {
            scale: self.scale,
            comps: vec![d(2, 1).sub(&d(1, 2)), d(0, 2).sub(&d(2, 0)), d(1, 0).sub(&d(0, 1))],
        }
    }

    pub fn div(&self) -> Self {
        assert_eq!(self.n_comps(), 3, "div expects a vector field");
        let p = self
            .physical_derivative(0, 0)
            .add(&self.physical_derivative(1, 1))
            .add(&self.physical_derivative(2, 2));
        Self::scalar(self.scale, p)
    }

    /// Jacobian of a vector field, row-major: component `3*i + j` is `∂v_i/∂x_j`.
    pub fn jacobian(&self) -> Self {
        assert_eq!(self.n_comps(), 3);
        let mut comps = Vec::with_capacity(9);
        for i in 0..3 {
            for j in 0..3 {
                comps.push(self.physical_derivative(i, j));
            }
        }
        Self {
            scale: self.scale,
            comps,
        }
    }

    /// Multiplies every component by the scalar polynomial `p`.
    pub fn times(&self, p: &Poly) -> Self {
        Self {
            scale: self.scale,
            comps: self.comps.iter().map(|c| c.mul(p)).collect(),
        }
    }

    /// Cross product `q × self`, where `q` is a vector of polynomials.
    pub fn crossed_by(&self, q: &[Poly; 3]) -> Self {
        assert_eq!(self.n_comps(), 3);
        let v = &self.comps;
        Self {
            scale: self.scale,
            comps: vec![
                q[1].mul(&v[2]).sub(&q[2].mul(&v[1])),
                q[2].mul(&v[0]).sub(&q[0].mul(&v[2])),
                q[0].mul(&v[1]).sub(&q[1].mul(&v[0])),
            ],
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.n_comps(), other.n_comps());
        Self {
            scale: self.scale,
            comps: self.comps.iter().zip(&other.comps).map(|(a, b)| a.add(b)).collect(),
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            scale: self.scale,
            comps: self.comps.iter().map(|c| c.scale(s)).collect(),
        }
    }

    /// Linear combination `Σ w_i f_i` of fields with identical layout.
    pub fn combination(fields: &[Self], weights: &[f64]) -> Self {
        assert_eq!(fields.len(), weights.len());
        assert!(!fields.is_empty());
        let n_comps = fields[0].n_comps();
        let degree = fields.iter().map(Self::degree).max().unwrap_or(0);
        let mut comps = vec![Poly::zero(degree); n_comps];
        for (f, &w) in fields.iter().zip(weights) {
            if w == 0.0 {
                continue;
            }
            for (acc, c) in comps.iter_mut().zip(&f.comps) {
                for (a, b) in acc.coeffs.iter_mut().zip(&c.coeffs) {
                    *a += w * b;
                }
            }
        }
        Self {
            scale: fields[0].scale,
            comps,
        }
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.comps.iter().fold(0.0, |m, c| m.max(c.max_abs_coeff()))
    }
}
