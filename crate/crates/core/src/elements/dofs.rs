//! Degrees of freedom as weighted point samples.
//!
//! Every moment is normalized by the measure of its entity. All frames are
//! derived from the ascending vertex order of the entity, so two cells
//! sharing an entity produce identical functionals.

use crate::mesh::{FaceFrame, LocalEntity, LOCAL_EDGES, LOCAL_FACES};
use crate::polyquad::{simplex_quadrature, PolynomialField};
use crate::{Result, Vec3};

use super::ElementKind;

/// Quadrature degree for edge and face moments.
const MOMENT_DEGREE: usize = 10;
/// Quadrature degree for cell averages.
const CELL_DEGREE: usize = 6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum DofKind {
    /// `∫_e v·t q` with Legendre `q`.
    EdgeTangent,
    /// `∫_F (v×n)·q` with `q ∈ RM(F)`.
    FaceTangentRm,
    /// `∫_F (curl v × n)·q` with `q ∈ RT(F)`.
    FaceCurlRt,
    /// `∫_F (v·n) q` with `q ∈ ℙ₁(F)`.
    FaceNormal,
    /// `∫_F (v×n)·q` with `q ∈ RT(F)`.
    FaceTangentRt,
    PointValue,
    CellAverage,
}

/// One quadrature sample: `value · v(x) + curl · (curl v)(x)` at `x = c + s ξ`.
#[derive(Clone, Copy, Debug)]
pub struct DofSample {
    pub xi: Vec3,
    pub value: Vec3,
    pub curl: Vec3,
}

#[derive(Clone, Debug)]
pub struct DofFunctional {
    pub kind: DofKind,
    pub entity: LocalEntity,
    pub samples: Vec<DofSample>,
}

impl DofFunctional {
    /// Applies the functional to a field given at physical points.
    /// Scalar fields put their value in the first component.
    pub fn apply<F>(&self, center: &Vec3, scale: f64, mut field: F) -> f64
    where
        F: FnMut(&Vec3) -> (Vec3, Vec3),
    {
        let needs_curl = self.samples.iter().any(|s| s.curl != Vec3::zeros());
        self.samples
            .iter()
            .map(|s| {
                let (v, c) = field(&(center + s.xi * scale));
                let mut r = s.value.dot(&v);
                if needs_curl {
                    r += s.curl.dot(&c);
                }
                r
            })
            .sum()
    }

    /// Applies the functional to a local polynomial field and its curl.
    pub fn apply_poly(&self, field: &PolynomialField, curl: Option<&PolynomialField>) -> f64 {
        let mut acc = 0.0;
        for s in &self.samples {
            let v = field.eval(&s.xi);
            acc += v.iter().zip(s.value.iter()).map(|(a, b)| a * b).sum::<f64>();
            if s.curl != Vec3::zeros() {
                let c = curl.expect("curl moment needs the curl field").eval_vec(&s.xi);
                acc += s.curl.dot(&c);
            }
        }
        acc
    }
}

struct Builder {
    center: Vec3,
    scale: f64,
    out: Vec<DofFunctional>,
}

impl Builder {
    fn local(&self, x: &Vec3) -> Vec3 {
        (x - self.center) / self.scale
    }

    fn push(&mut self, kind: DofKind, entity: LocalEntity, samples: Vec<DofSample>) {
        self.out.push(DofFunctional { kind, entity, samples });
    }

    fn point(&mut self, entity: LocalEntity, x: Vec3) {
        let s = DofSample {
            xi: self.local(&x),
            value: Vec3::x(),
            curl: Vec3::zeros(),
        };
        self.push(DofKind::PointValue, entity, vec![s]);
    }

    /// Edge moments `∫_e v·t P_m(s)` for `m ≤ order`, `s ∈ [0,1]` from the lower vertex.
    fn edge_moments(&mut self, entity: LocalEntity, a: Vec3, b: Vec3, order: usize) -> Result<()> {
        let rule = simplex_quadrature(1, MOMENT_DEGREE)?;
        let t = (b - a).normalize();
        for m in 0..=order {
            let samples = rule
                .points
                .iter()
                .zip(&rule.weights)
                .map(|(p, w)| {
                    let s = p.x;
                    DofSample {
                        xi: self.local(&(a + s * (b - a))),
                        value: t * (w * legendre(m, s)),
                        curl: Vec3::zeros(),
                    }
                })
                .collect();
            self.push(DofKind::EdgeTangent, entity, samples);
        }
        Ok(())
    }

    /// Face moment with a test function giving `(value weight, curl weight)` at `x`.
    fn face_moment<Q>(&mut self, kind: DofKind, entity: LocalEntity, p: &[Vec3; 3], q: Q) -> Result<()>
    where
        Q: Fn(&Vec3) -> (Vec3, Vec3),
    {
        let rule = simplex_quadrature(2, MOMENT_DEGREE)?;
        let samples = rule
            .points
            .iter()
            .zip(&rule.weights)
            .map(|(r, w)| {
                let x = p[0] + r.x * (p[1] - p[0]) + r.y * (p[2] - p[0]);
                let (value, curl) = q(&x);
                // reference triangle has area 1/2
                DofSample {
                    xi: self.local(&x),
                    value: value * (2.0 * w),
                    curl: curl * (2.0 * w),
                }
            })
            .collect();
        self.push(kind, entity, samples);
        Ok(())
    }

    fn cell_average(&mut self, vertices: &[Vec3; 4]) -> Result<()> {
        let rule = simplex_quadrature(3, CELL_DEGREE)?;
        let samples = rule
            .points
            .iter()
            .zip(&rule.weights)
            .map(|(r, w)| {
                let x = vertices[0]
                    + r.x * (vertices[1] - vertices[0])
                    + r.y * (vertices[2] - vertices[0])
                    + r.z * (vertices[3] - vertices[0]);
                DofSample {
                    xi: self.local(&x),
                    value: Vec3::x() * (6.0 * w),
                    curl: Vec3::zeros(),
                }
            })
            .collect();
        self.push(DofKind::CellAverage, LocalEntity::Cell, samples);
        Ok(())
    }
}

/// Shifted Legendre polynomials on `[0, 1]`.
fn legendre(m: usize, s: f64) -> f64 {
    match m {
        0 => 1.0,
        1 => 2.0 * s - 1.0,
        2 => 6.0 * s * s - 6.0 * s + 1.0,
        _ => unreachable!("edge moments up to degree 2"),
    }
}

/// Tangential test fields of `RT(F)`: `τ₁, τ₂, (x - x_F)/d_F`.
fn rt_fields(fr: &FaceFrame) -> [Box<dyn Fn(&Vec3) -> Vec3>; 3] {
    let (t1, t2, c, d) = (fr.tau1, fr.tau2, fr.centroid, fr.diameter);
    [
        Box::new(move |_| t1),
        Box::new(move |_| t2),
        Box::new(move |x| (x - c) / d),
    ]
}

/// Tangential test fields of `RM_{k-2}(F)`; for `k = 1` only the constants.
fn rm_fields(fr: &FaceFrame, k: usize) -> Vec<Box<dyn Fn(&Vec3) -> Vec3>> {
    let (t1, t2, n, c, d) = (fr.tau1, fr.tau2, fr.normal, fr.centroid, fr.diameter);
    let mut out: Vec<Box<dyn Fn(&Vec3) -> Vec3>> = vec![Box::new(move |_| t1), Box::new(move |_| t2)];
    if k == 2 {
        out.push(Box::new(move |x| n.cross(&(x - c)) / d));
    }
    out
}

pub(super) fn dof_set(kind: ElementKind, vertices: &[Vec3; 4], center: Vec3, scale: f64) -> Result<Vec<DofFunctional>> {
    let mut b = Builder {
        center,
        scale,
        out: Vec::new(),
    };
    let face_points = |lf: usize| LOCAL_FACES[lf].map(|i| vertices[i]);
    match kind {
        ElementKind::GradCurl(k) | ElementKind::Nedelec(k) => {
            for (le, e) in LOCAL_EDGES.iter().enumerate() {
                b.edge_moments(LocalEntity::Edge(le), vertices[e[0]], vertices[e[1]], k)?;
            }
            for lf in 0..4 {
                let p = face_points(lf);
                let fr = FaceFrame::new(&p);
                let n = fr.normal;
                for q in rm_fields(&fr, k) {
                    // (v × n)·q = v·(n × q)
                    b.face_moment(DofKind::FaceTangentRm, LocalEntity::Face(lf), &p, |x| {
                        (n.cross(&q(x)), Vec3::zeros())
                    })?;
                }
                if matches!(kind, ElementKind::GradCurl(_)) {
                    for q in rt_fields(&fr) {
                        b.face_moment(DofKind::FaceCurlRt, LocalEntity::Face(lf), &p, |x| {
                            (Vec3::zeros(), n.cross(&q(x)))
                        })?;
                    }
                }
            }
        }
        ElementKind::TaiWinther => {
            for lf in 0..4 {
                let p = face_points(lf);
                let fr = FaceFrame::new(&p);
                let (n, c, d) = (fr.normal, fr.centroid, fr.diameter);
                let scalars: [Box<dyn Fn(&Vec3) -> f64>; 3] = [
                    Box::new(|_| 1.0),
                    Box::new(move |x| (x - c).dot(&fr.tau1) / d),
                    Box::new(move |x| (x - c).dot(&fr.tau2) / d),
                ];
                for q in scalars {
                    b.face_moment(DofKind::FaceNormal, LocalEntity::Face(lf), &p, |x| {
                        (n * q(x), Vec3::zeros())
                    })?;
                }
                for q in rt_fields(&fr) {
                    b.face_moment(DofKind::FaceTangentRt, LocalEntity::Face(lf), &p, |x| {
                        (n.cross(&q(x)), Vec3::zeros())
                    })?;
                }
            }
        }
        ElementKind::Lagrange(p) => {
            for (lv, v) in vertices.iter().enumerate() {
                b.point(LocalEntity::Vertex(lv), *v);
            }
            for (le, e) in LOCAL_EDGES.iter().enumerate() {
                let (a, c) = (vertices[e[0]], vertices[e[1]]);
                for i in 1..p {
                    b.point(LocalEntity::Edge(le), a + (c - a) * (i as f64 / p as f64));
                }
            }
            if p == 3 {
                for lf in 0..4 {
                    let fp = face_points(lf);
                    b.point(LocalEntity::Face(lf), (fp[0] + fp[1] + fp[2]) / 3.0);
                }
            }
        }
        ElementKind::Dg0 => b.cell_average(vertices)?,
    }
    Ok(b.out)
}
