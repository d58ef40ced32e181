//! Preconditioned MINRES for symmetric (indefinite) systems.

use crate::{Error, Result};

#[derive(Clone, Debug)]
pub struct MinresOutcome {
    pub x: Vec<f64>,
    pub iterations: usize,
    /// Preconditioned residual norm relative to the initial one.
    pub relative_residual: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Solves `A x = b` with the symmetric positive definite preconditioner
/// `P ≈ A⁻¹`, starting from zero. Stops once the preconditioned residual
/// has dropped by `tol`.
pub fn minres<A, P>(apply_a: A, apply_p: P, b: &[f64], tol: f64, max_iter: usize) -> Result<MinresOutcome>
where
    A: Fn(&[f64], &mut [f64]),
    P: Fn(&[f64], &mut [f64]),
{
    let n = b.len();
    let mut x = vec![0.0; n];
    let mut r1 = b.to_vec();
    let mut y = vec![0.0; n];
    apply_p(&r1, &mut y);
    let beta1 = dot(&r1, &y);
    if beta1 < 0.0 {
        return Err(Error::Solver("MINRES preconditioner is not positive definite".into()));
    }
    let beta1 = beta1.sqrt();
    if beta1 == 0.0 {
        return Ok(MinresOutcome {
            x,
            iterations: 0,
            relative_residual: 0.0,
        });
    }
    let mut r2 = r1.clone();
    let (mut oldb, mut beta) = (0.0, beta1);
    let (mut dbar, mut epsln, mut phibar) = (0.0f64, 0.0f64, beta1);
    let (mut cs, mut sn) = (-1.0f64, 0.0f64);
    let mut w = vec![0.0; n];
    let mut w2 = vec![0.0; n];
    let mut v = vec![0.0; n];
    for itn in 1..=max_iter {
        let s = 1.0 / beta;
        for (vi, yi) in v.iter_mut().zip(&y) {
            *vi = s * yi;
        }
        apply_a(&v, &mut y);
        if itn >= 2 {
            let f = beta / oldb;
            for (yi, ri) in y.iter_mut().zip(&r1) {
                *yi -= f * ri;
            }
        }
        let alfa = dot(&v, &y);
        let f = alfa / beta;
        for (yi, ri) in y.iter_mut().zip(&r2) {
            *yi -= f * ri;
        }
        std::mem::swap(&mut r1, &mut r2);
        r2.copy_from_slice(&y);
        apply_p(&r2, &mut y);
        oldb = beta;
        let bb = dot(&r2, &y);
        if bb < 0.0 {
            return Err(Error::Solver("MINRES preconditioner is not positive definite".into()));
        }
        beta = bb.sqrt();
        let oldeps = epsln;
        let delta = cs * dbar + sn * alfa;
        let gbar = sn * dbar - cs * alfa;
        epsln = sn * beta;
        dbar = -cs * beta;
        let gamma = gbar.hypot(beta).max(f64::EPSILON);
        cs = gbar / gamma;
        sn = beta / gamma;
        let phi = cs * phibar;
        phibar *= sn;
        let denom = 1.0 / gamma;
        for i in 0..n {
            let w1 = w2[i];
            w2[i] = w[i];
            w[i] = (v[i] - oldeps * w1 - delta * w2[i]) * denom;
            x[i] += phi * w[i];
        }
        let rel = phibar / beta1;
        if rel < tol || beta == 0.0 {
            return Ok(MinresOutcome {
                x,
                iterations: itn,
                relative_residual: rel,
            });
        }
    }
    Err(Error::Solver(format!(
        "MINRES did not converge in {max_iter} iterations (relative residual {:.3e})",
        phibar / beta1
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::CsrMatrix;

    #[test]
    fn solves_indefinite_saddle_system() {
        // [[2I, B], [Bᵀ, 0]] with a full-rank B
        let n = 30;
        let m = 10;
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0 + (i % 3) as f64));
        }
        for j in 0..m {
            t.push((3 * j, n + j, 1.0));
            t.push((n + j, 3 * j, 1.0));
            t.push((3 * j + 1, n + j, -0.5));
            t.push((n + j, 3 * j + 1, -0.5));
        }
        let a = CsrMatrix::from_triplets(n + m, n + m, t);
        let x: Vec<f64> = (0..n + m).map(|i| (i as f64 * 0.37).sin()).collect();
        let b = a.mul_vec(&x);
        let out = minres(|v, o| a.mul_vec_into(v, o), |v, o| o.copy_from_slice(v), &b, 1e-13, 500).unwrap();
        let err = x.iter().zip(&out.x).fold(0.0f64, |e, (p, q)| e.max((p - q).abs()));
        assert!(err < 1e-10, "{err}");
    }

    #[test]
    fn zero_rhs_gives_zero() {
        let out = minres(
            |v, o| o.copy_from_slice(v),
            |v, o| o.copy_from_slice(v),
            &[0.0; 4],
            1e-10,
            10,
        )
        .unwrap();
        assert_eq!(out.x, vec![0.0; 4]);
        assert_eq!(out.iterations, 0);
    }

    #[test]
    fn reports_non_convergence() {
        let diag: Vec<f64> = (1..=50)
            .map(|i| i as f64 * if i % 2 == 0 { 1.0 } else { -1.0 })
            .collect();
        let b = vec![1.0; 50];
        let r = minres(
            |v, o| {
                for i in 0..50 {
                    o[i] = diag[i] * v[i];
                }
            },
            |v, o| o.copy_from_slice(v),
            &b,
            1e-14,
            3,
        );
        assert!(matches!(r, Err(Error::Solver(_))));
    }
}
