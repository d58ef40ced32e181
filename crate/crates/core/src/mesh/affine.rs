//! Affine maps from the reference tetrahedron.

use nalgebra::Matrix3;

use super::signed_volume;
use crate::Vec3;

/// `x = B ξ + b` mapping the reference tetrahedron onto a cell.
///
/// When the cell's vertex order is negatively oriented, vertices 2 and 3
/// are swapped so that `det B > 0`; `perm` records which cell vertex each
/// reference vertex corresponds to.
#[derive(Clone, Debug)]
pub struct AffineMap {
    pub b: Matrix3<f64>,
    pub b_inv: Matrix3<f64>,
    pub offset: Vec3,
    pub det: f64,
    pub perm: [usize; 4],
}

impl AffineMap {
    pub fn new(p: &[Vec3; 4]) -> Result<AffineMap, String> {
        let vol = signed_volume(p);
        let scale = (p[1] - p[0]).norm().max((p[2] - p[0]).norm()).max((p[3] - p[0]).norm());
        if !(vol.abs() > 1e-14 * scale.powi(3)) {
            return Err(format!("degenerate tetrahedron (volume {vol:e})"));
        }
        let perm = if vol > 0.0 { [0, 1, 2, 3] } else { [0, 1, 3, 2] };
        let q = perm.map(|i| p[i]);
        let b = Matrix3::from_columns(&[q[1] - q[0], q[2] - q[0], q[3] - q[0]]);
        let b_inv = b.try_inverse().ok_or_else(|| "singular affine map".to_string())?;
        Ok(AffineMap {
            b,
            b_inv,
            offset: q[0],
            det: b.determinant(),
            perm,
        })
    }

    pub fn map(&self, xi: &Vec3) -> Vec3 {
        self.b * xi + self.offset
    }

    pub fn inverse(&self, x: &Vec3) -> Vec3 {
        self.b_inv * (x - self.offset)
    }

    /// Barycentric coordinates of `x` w.r.t. the cell's own vertex order.
    pub fn barycentric(&self, x: &Vec3) -> [f64; 4] {
        let xi = self.inverse(x);
        let r = [1.0 - xi.x - xi.y - xi.z, xi.x, xi.y, xi.z];
        let mut out = [0.0; 4];
        for (k, &v) in self.perm.iter().enumerate() {
            out[v] = r[k];
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn barycentrics_reproduce_points_for_both_orientations() {
        let p = [
            Vec3::zeros(),
            Vec3::new(1.0, 0.2, 0.0),
            Vec3::new(0.1, 1.0, 0.3),
            Vec3::new(0.2, 0.1, 0.9),
        ];
        for q in [p, [p[0], p[1], p[3], p[2]]] {
            let m = AffineMap::new(&q).unwrap();
            assert!(m.det > 0.0);
            let x = Vec3::new(0.3, 0.3, 0.2);
            let l = m.barycentric(&x);
            let back: Vec3 = (0..4).map(|i| q[i] * l[i]).sum();
            assert!((back - x).norm() < 1e-14);
            for (i, v) in q.iter().enumerate() {
                assert!((m.barycentric(v)[i] - 1.0).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn degenerate_cell_rejected() {
        let p = [
            Vec3::zeros(),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
            Vec3::new(1.0, 1.0, 0.0),
        ];
        assert!(AffineMap::new(&p).is_err());
    }
}
