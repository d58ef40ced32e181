//! Multifrontal sparse Cholesky factorization on a nested-dissection tree.
//!
//! Every tree node is eliminated as one dense block. Its frontal matrix
//! collects the original entries of its columns and the update matrices of
//! its children; blocked dense kernels do the partial factorization.

use nalgebra::{DMatrix, DVector};

use super::ordering::{nested_dissection, Ordering};
use crate::assembly::CsrMatrix;
use crate::{Error, Result, Vec3};

const BLOCK: usize = 96;

/// Factor data of one tree node.
#[derive(Clone, Debug)]
struct FactorNode {
    start: usize,
    end: usize,
    /// Later unknowns coupled to this node (new numbering, ascending).
    update: Vec<usize>,
    /// Lower Cholesky factor of the pivot block.
    l11: DMatrix<f64>,
    /// `L₁₁⁻¹ F₁₂`, the transposed off-diagonal factor block.
    x: DMatrix<f64>,
}

/// `A = P L Lᵀ Pᵀ` for a symmetric positive definite sparse matrix.
#[derive(Clone, Debug)]
pub struct SparseCholesky {
    n: usize,
    perm: Vec<usize>,
    nodes: Vec<FactorNode>,
}

/// In-place blocked Cholesky of the lower triangle; the strict upper
/// triangle is zeroed.
pub fn dense_cholesky(a: &mut DMatrix<f64>) -> Result<()> {
    let n = a.nrows();
    let mut k = 0;
    while k < n {
        let b = BLOCK.min(n - k);
        // diagonal block
        for j in k..k + b {
            let mut d = a[(j, j)];
            for p in k..j {
                d -= a[(j, p)] * a[(j, p)];
            }
            if !(d > 0.0) || !d.is_finite() {
                return Err(Error::Solver(format!("non-positive pivot {d:e} at column {j}")));
            }
            let d = d.sqrt();
            a[(j, j)] = d;
            for i in j + 1..k + b {
                let mut s = a[(i, j)];
                for p in k..j {
                    s -= a[(i, p)] * a[(j, p)];
                }
                a[(i, j)] = s / d;
            }
        }
        let rest = n - k - b;
        if rest > 0 {
            // panel: A21 ← A21 L11⁻ᵀ
            let l11 = a.view((k, k), (b, b)).clone_owned();
            let mut panel = a.view((k + b, k), (rest, b)).transpose();
            l11.solve_lower_triangular_mut(&mut panel);
            a.view_mut((k + b, k), (rest, b)).copy_from(&panel.transpose());
            // trailing update: A22 ← A22 - L21 L21ᵀ
            let l21 = a.view((k + b, k), (rest, b)).clone_owned();
            let mut trailing = a.view_mut((k + b, k + b), (rest, rest));
            trailing.gemm(-1.0, &l21, &l21.transpose(), 1.0);
        }
        k += b;
    }
    for j in 0..n {
        for i in 0..j {
            a[(i, j)] = 0.0;
        }
    }
    Ok(())
}

/// Solves `L X = B` in place for lower-triangular `L`, blocked over rows.
fn lower_solve_blocked(l: &DMatrix<f64>, b: &mut DMatrix<f64>) {
    let n = l.nrows();
    let mut k = 0;
    while k < n {
        let s = BLOCK.min(n - k);
        if k > 0 {
            let lk = l.view((k, 0), (s, k));
            let prev = b.rows(0, k).clone_owned();
            b.rows_mut(k, s).gemm(-1.0, &lk, &prev, 1.0);
        }
        let diag = l.view((k, k), (s, s)).clone_owned();
        let mut rows = b.rows(k, s).clone_owned();
        diag.solve_lower_triangular_mut(&mut rows);
        b.rows_mut(k, s).copy_from(&rows);
        k += s;
    }
}

impl SparseCholesky {
    /// Factors `a` (full symmetric storage) using a nested-dissection
    /// ordering built from the unknowns' coordinates.
    pub fn factor(a: &CsrMatrix, coords: &[Vec3]) -> Result<SparseCholesky> {
        if a.nrows != a.ncols || coords.len() != a.nrows {
            return Err(Error::Dimension(format!(
                "Cholesky of a {}x{} matrix with {} coordinates",
                a.nrows,
                a.ncols,
                coords.len()
            )));
        }
        let ordering = nested_dissection(a, coords, 64);
        Self::factor_with(a, ordering)
    }

    fn factor_with(a: &CsrMatrix, ordering: Ordering) -> Result<SparseCholesky> {
        let n = a.nrows;
        let Ordering { perm, nodes: tree } = ordering;
        let mut pos = vec![0usize; n];
        for (new, &old) in perm.iter().enumerate() {
            pos[old] = new;
        }
        let mut loc = vec![usize::MAX; n];
        let mut pending: Vec<Option<(Vec<usize>, DMatrix<f64>)>> = vec![None; tree.len()];
        let mut nodes = Vec::with_capacity(tree.len());
        for (k, node) in tree.iter().enumerate() {
            let (s, e) = (node.start, node.end);
            let p = e - s;
            // update set: couplings of the node's columns to later unknowns
            let mut update: Vec<usize> = Vec::new();
            for col in s..e {
                for &old in a.row(perm[col]).0 {
                    let r = pos[old];
                    if r >= e && loc[r] == usize::MAX {
                        loc[r] = 0;
                        update.push(r);
                    }
                }
            }
            for &ch in &node.children {
                let (idx, _) = pending[ch].as_ref().expect("child update");
                for &r in idx {
                    if r >= e && loc[r] == usize::MAX {
                        loc[r] = 0;
                        update.push(r);
                    }
                }
            }
            update.sort_unstable();
            for col in s..e {
                loc[col] = col - s;
            }
            for (i, &r) in update.iter().enumerate() {
                loc[r] = p + i;
            }
            let m = p + update.len();
            let mut front = DMatrix::<f64>::zeros(m, m);
            for col in s..e {
                let (cols, vals) = a.row(perm[col]);
                for (&old, &v) in cols.iter().zip(vals) {
                    let r = pos[old];
                    if r >= s {
                        front[(loc[r], loc[col])] += v;
                        if r >= e {
                            front[(loc[col], loc[r])] += v;
                        }
                    }
                }
            }
            for &ch in &node.children {
                let (idx, u) = pending[ch].take().expect("child update");
                let l: Vec<usize> = idx.iter().map(|&r| loc[r]).collect();
                for (b, &lb) in l.iter().enumerate() {
                    for (a_, &la) in l.iter().enumerate() {
                        front[(la, lb)] += u[(a_, b)];
                    }
                }
            }
            for col in s..e {
                loc[col] = usize::MAX;
            }
            for &r in &update {
                loc[r] = usize::MAX;
            }
            let mut l11 = front.view((0, 0), (p, p)).clone_owned();
            dense_cholesky(&mut l11)
                .map_err(|err| Error::Solver(format!("sparse Cholesky breakdown in node {k}: {err}")))?;
            let u = update.len();
            let mut x = front.view((0, p), (p, u)).clone_owned();
            lower_solve_blocked(&l11, &mut x);
            if u > 0 {
                let mut schur = front.view((p, p), (u, u)).clone_owned();
                schur.gemm_tr(-1.0, &x, &x, 1.0);
                pending[k] = Some((update.clone(), schur));
            } else {
                pending[k] = Some((Vec::new(), DMatrix::zeros(0, 0)));
            }
            nodes.push(FactorNode {
                start: s,
                end: e,
                update,
                l11,
                x,
            });
        }
        Ok(SparseCholesky { n, perm, nodes })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Stored factor entries (dense blocks).
    pub fn factor_entries(&self) -> usize {
        self.nodes.iter().map(|nd| nd.l11.len() / 2 + nd.x.len()).sum()
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.n);
        let mut y: Vec<f64> = self.perm.iter().map(|&old| b[old]).collect();
        for nd in &self.nodes {
            let p = nd.end - nd.start;
            let mut v = DVector::from_column_slice(&y[nd.start..nd.end]);
            nd.l11.solve_lower_triangular_mut(&mut v);
            y[nd.start..nd.end].copy_from_slice(v.as_slice());
            if !nd.update.is_empty() {
                let upd = nd.x.tr_mul(&v);
                for (i, &r) in nd.update.iter().enumerate() {
                    y[r] -= upd[i];
                }
            }
            debug_assert_eq!(v.len(), p);
        }
        for nd in self.nodes.iter().rev() {
            let mut v = DVector::from_column_slice(&y[nd.start..nd.end]);
            if !nd.update.is_empty() {
                let xu = DVector::from_iterator(nd.update.len(), nd.update.iter().map(|&r| y[r]));
                v -= &nd.x * xu;
            }
            nd.l11.tr_solve_lower_triangular_mut(&mut v);
            y[nd.start..nd.end].copy_from_slice(v.as_slice());
        }
        let mut out = vec![0.0; self.n];
        for (new, &old) in self.perm.iter().enumerate() {
            out[old] = y[new];
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn blocked_dense_cholesky_matches_nalgebra() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(0);
        let n = 250;
        let g = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        let a = &g * g.transpose() + DMatrix::identity(n, n) * n as f64;
        let mut l = a.clone();
        dense_cholesky(&mut l).unwrap();
        assert!((&l * l.transpose() - &a).norm() < 1e-9 * a.norm());
        let mut b = DMatrix::from_fn(n, 7, |_, _| rng.gen_range(-1.0..1.0));
        let rhs = b.clone();
        lower_solve_blocked(&l, &mut b);
        assert!((&l * b - rhs).norm() < 1e-10);
    }

    #[test]
    fn indefinite_matrix_is_reported() {
        let mut a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(dense_cholesky(&mut a), Err(Error::Solver(_))));
    }

    #[test]
    fn sparse_solve_on_3d_grid() {
        let n = 9;
        let id = |i: usize, j: usize, k: usize| i + n * (j + n * k);
        let mut t = Vec::new();
        let mut coords = Vec::new();
        for k in 0..n {
            for j in 0..n {
                for i in 0..n {
                    coords.push(Vec3::new(i as f64, j as f64, k as f64));
                    t.push((id(i, j, k), id(i, j, k), 8.5));
                    for (di, dj, dk) in [(1, 0, 0), (0, 1, 0), (0, 0, 1), (1, 1, 0)] {
                        let (a, b, c) = (i + di, j + dj, k + dk);
                        if a < n && b < n && c < n {
                            t.push((id(i, j, k), id(a, b, c), -1.0));
                            t.push((id(a, b, c), id(i, j, k), -1.0));
                        }
                    }
                }
            }
        }
        let a = CsrMatrix::from_triplets(n * n * n, n * n * n, t);
        let f = SparseCholesky::factor(&a, &coords).unwrap();
        let mut rng = rand::rngs::StdRng::seed_from_u64(3);
        let x: Vec<f64> = (0..a.nrows).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let b = a.mul_vec(&x);
        let y = f.solve(&b);
        let err = x.iter().zip(&y).fold(0.0f64, |m, (p, q)| m.max((p - q).abs()));
        assert!(err < 1e-11, "{err}");
    }
}
