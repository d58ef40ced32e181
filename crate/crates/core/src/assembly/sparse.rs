//! Compressed sparse row matrices.

use nalgebra::DMatrix;

/// Row-compressed matrix with sorted column indices per row.
#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    pub nrows: usize,
    pub ncols: usize,
    pub indptr: Vec<usize>,
    pub indices: Vec<usize>,
    pub data: Vec<f64>,
}

impl CsrMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        CsrMatrix {
            nrows,
            ncols,
            indptr: vec![0; nrows + 1],
            indices: Vec::new(),
            data: Vec::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        CsrMatrix {
            nrows: n,
            ncols: n,
            indptr: (0..=n).collect(),
            indices: (0..n).collect(),
            data: vec![1.0; n],
        }
    }

    pub fn from_diagonal(d: &[f64]) -> Self {
        let mut m = Self::identity(d.len());
        m.data.copy_from_slice(d);
        m
    }

    /// Builds a matrix from `(row, col, value)` triplets, summing duplicates.
    pub fn from_triplets(nrows: usize, ncols: usize, mut t: Vec<(usize, usize, f64)>) -> Self {
        t.sort_by_key(|&(i, j, _)| (i, j));
        let mut indptr = vec![0; nrows + 1];
        let mut indices = Vec::with_capacity(t.len());
        let mut data: Vec<f64> = Vec::with_capacity(t.len());
        let mut last = None;
        for (i, j, v) in t {
            assert!(i < nrows && j < ncols, "triplet ({i}, {j}) out of bounds");
            if last == Some((i, j)) {
                *data.last_mut().unwrap() += v;
            } else {
                indices.push(j);
                data.push(v);
                indptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..nrows {
            indptr[i + 1] += indptr[i];
        }
        CsrMatrix {
            nrows,
            ncols,
            indptr,
            indices,
            data,
        }
    }

    pub fn from_dense(m: &DMatrix<f64>, drop_tol: f64) -> Self {
        let mut t = Vec::new();
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                if m[(i, j)].abs() > drop_tol {
                    t.push((i, j, m[(i, j)]));
                }
            }
        }
        Self::from_triplets(m.nrows(), m.ncols(), t)
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let r = self.indptr[i]..self.indptr[i + 1];
        (&self.indices[r.clone()], &self.data[r])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        cols.binary_search(&j).map(|p| vals[p]).unwrap_or(0.0)
    }

    /// Mutable reference to an existing entry.
    pub fn entry_mut(&mut self, i: usize, j: usize) -> Option<&mut f64> {
        let r = self.indptr[i]..self.indptr[i + 1];
        let p = self.indices[r.clone()].binary_search(&j).ok()?;
        Some(&mut self.data[r.start + p])
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.nrows.min(self.ncols)).map(|i| self.get(i, i)).collect()
    }

    /// `y = A x`.
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.nrows];
        self.mul_vec_into(x, &mut y);
        y
    }

    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.ncols);
        for (i, yi) in y.iter_mut().enumerate() {
            let (c, v) = self.row(i);
            *yi = c.iter().zip(v).map(|(&j, a)| a * x[j]).sum();
        }
    }

    /// `y = Aᵀ x`.
    pub fn mul_vec_transpose(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.nrows);
        let mut y = vec![0.0; self.ncols];
        for (i, &xi) in x.iter().enumerate() {
            if xi == 0.0 {
                continue;
            }
            let (c, v) = self.row(i);
            for (&j, a) in c.iter().zip(v) {
                y[j] += a * xi;
            }
        }
        y
    }

    pub fn transpose(&self) -> CsrMatrix {
        let mut counts = vec![0usize; self.ncols + 1];
        for &j in &self.indices {
            counts[j + 1] += 1;
        }
        for j in 0..self.ncols {
            counts[j + 1] += counts[j];
        }
        let mut next = counts.clone();
        let mut indices = vec![0; self.nnz()];
        let mut data = vec![0.0; self.nnz()];
        for i in 0..self.nrows {
            let (c, v) = self.row(i);
            for (&j, &a) in c.iter().zip(v) {
                indices[next[j]] = i;
                data[next[j]] = a;
                next[j] += 1;
            }
        }
        CsrMatrix {
            nrows: self.ncols,
            ncols: self.nrows,
            indptr: counts,
            indices,
            data,
        }
    }

    /// Sparse product `A B`.
    pub fn mul(&self, b: &CsrMatrix) -> CsrMatrix {
        assert_eq!(self.ncols, b.nrows);
        let mut acc = vec![0.0; b.ncols];
        let mut marker = vec![usize::MAX; b.ncols];
        let mut indptr = vec![0];
        let mut indices = Vec::new();
        let mut data = Vec::new();
        for i in 0..self.nrows {
            let start = indices.len();
            let (ca, va) = self.row(i);
            for (&k, &a) in ca.iter().zip(va) {
                let (cb, vb) = b.row(k);
                for (&j, &bv) in cb.iter().zip(vb) {
                    if marker[j] != i {
                        marker[j] = i;
                        indices.push(j);
                        acc[j] = 0.0;
                    }
                    acc[j] += a * bv;
                }
            }
            indices[start..].sort_unstable();
            for &j in &indices[start..] {
                data.push(acc[j]);
            }
            indptr.push(indices.len());
        }
        CsrMatrix {
            nrows: self.nrows,
            ncols: b.ncols,
            indptr,
            indices,
            data,
        }
    }

    /// `α A + β B`.
    pub fn add_scaled(&self, alpha: f64, b: &CsrMatrix, beta: f64) -> CsrMatrix {
        assert_eq!((self.nrows, self.ncols), (b.nrows, b.ncols));
        let mut t = Vec::with_capacity(self.nnz() + b.nnz());
        for (m, s) in [(self, alpha), (b, beta)] {
            for i in 0..m.nrows {
                let (c, v) = m.row(i);
                t.extend(c.iter().zip(v).map(|(&j, &a)| (i, j, s * a)));
            }
        }
        CsrMatrix::from_triplets(self.nrows, self.ncols, t)
    }

    pub fn scaled(&self, s: f64) -> CsrMatrix {
        let mut m = self.clone();
        m.data.iter_mut().for_each(|v| *v *= s);
        m
    }

    /// Keeps the listed rows and columns, in the given order.
    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> CsrMatrix {
        let mut col_map = vec![usize::MAX; self.ncols];
        for (k, &j) in cols.iter().enumerate() {
            col_map[j] = k;
        }
        let mut t = Vec::new();
        for (ri, &i) in rows.iter().enumerate() {
            let (c, v) = self.row(i);
            for (&j, &a) in c.iter().zip(v) {
                if col_map[j] != usize::MAX {
                    t.push((ri, col_map[j], a));
                }
            }
        }
        CsrMatrix::from_triplets(rows.len(), cols.len(), t)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.nrows, self.ncols);
        for i in 0..self.nrows {
            let (c, v) = self.row(i);
            for (&j, &a) in c.iter().zip(v) {
                m[(i, j)] += a;
            }
        }
        m
    }

    /// Drops entries with `|a_ij| <= tol`.
    pub fn pruned(&self, tol: f64) -> CsrMatrix {
        let mut t = Vec::with_capacity(self.nnz());
        for i in 0..self.nrows {
            let (c, v) = self.row(i);
            t.extend(c.iter().zip(v).filter(|(_, a)| a.abs() > tol).map(|(&j, &a)| (i, j, a)));
        }
        CsrMatrix::from_triplets(self.nrows, self.ncols, t)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `max |A - Aᵀ| / max |A|`.
    pub fn symmetry_defect(&self) -> f64 {
        let t = self.transpose();
        let d = self.add_scaled(1.0, &t, -1.0);
        d.max_abs() / self.max_abs().max(f64::MIN_POSITIVE)
    }

    /// `xᵀ A y`.
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        let ay = self.mul_vec(y);
        x.iter().zip(&ay).map(|(a, b)| a * b).sum()
    }
}

/// Accumulates finite element contributions into a fixed sparsity pattern
/// built from the DoF lists of each cell.
#[derive(Clone, Debug)]
pub struct PatternAssembler {
    matrix: CsrMatrix,
}

impl PatternAssembler {
    /// Pattern coupling every pair of DoFs that share a cell. `cells` lists
    /// row DoFs and column DoFs per cell; `usize::MAX` marks a masked DoF.
    pub fn new<'a, I>(nrows: usize, ncols: usize, cells: I) -> Self
    where
        I: Iterator<Item = (&'a [usize], &'a [usize])> + Clone,
    {
        let mut rows: Vec<Vec<usize>> = vec![Vec::new(); nrows];
        for (r, c) in cells {
            for &i in r.iter().filter(|&&i| i != usize::MAX) {
                rows[i].extend(c.iter().copied().filter(|&j| j != usize::MAX));
            }
        }
        let mut indptr = vec![0];
        let mut indices = Vec::new();
        for row in rows.iter_mut() {
            row.sort_unstable();
            row.dedup();
            indices.extend_from_slice(row);
            indptr.push(indices.len());
            *row = Vec::new();
        }
        let data = vec![0.0; indices.len()];
        PatternAssembler {
            matrix: CsrMatrix {
                nrows,
                ncols,
                indptr,
                indices,
                data,
            },
        }
    }

    /// Adds a dense local block `local[a * c.len() + b]` at rows `r`, columns `c`.
    pub fn add_block(&mut self, r: &[usize], c: &[usize], local: &[f64]) {
        for (a, &i) in r.iter().enumerate() {
            if i == usize::MAX {
                continue;
            }
            for (b, &j) in c.iter().enumerate() {
                if j == usize::MAX {
                    continue;
                }
                let v = local[a * c.len() + b];
                if v != 0.0 {
                    *self.matrix.entry_mut(i, j).expect("entry outside pattern") += v;
                }
            }
        }
    }

    pub fn finish(self) -> CsrMatrix {
        self.matrix
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn dense(nr: usize, nc: usize) -> impl Strategy<Value = DMatrix<f64>> {
        prop::collection::vec(prop_oneof![Just(0.0), -5.0..5.0f64], nr * nc)
            .prop_map(move |v| DMatrix::from_vec(nr, nc, v))
    }

    proptest! {
        #[test]
        fn products_and_transpose_match_dense(a in dense(5, 4), b in dense(4, 6), x in prop::collection::vec(-1.0..1.0f64, 4)) {
            let sa = CsrMatrix::from_dense(&a, 0.0);
            let sb = CsrMatrix::from_dense(&b, 0.0);
            prop_assert!((sa.mul(&sb).to_dense() - &a * &b).norm() < 1e-12);
            prop_assert!((sa.transpose().to_dense() - a.transpose()).norm() == 0.0);
            let y = sa.mul_vec(&x);
            let yd = &a * nalgebra::DVector::from_vec(x.clone());
            prop_assert!(y.iter().zip(yd.iter()).all(|(p, q)| (p - q).abs() < 1e-12));
            let z = sa.transpose().mul_vec_transpose(&x);
            prop_assert!(z.iter().zip(yd.iter()).all(|(p, q)| (p - q).abs() < 1e-12));
        }
    }

    #[test]
    fn triplets_sum_duplicates() {
        let m = CsrMatrix::from_triplets(2, 2, vec![(0, 1, 1.0), (1, 0, 2.0), (0, 1, 3.0)]);
        assert_eq!(m.get(0, 1), 4.0);
        assert_eq!(m.nnz(), 2);
        assert!(m.symmetry_defect() > 0.0);
    }

    #[test]
    fn pattern_assembly_matches_triplets() {
        let cells: Vec<Vec<usize>> = vec![vec![0, 1, 2], vec![1, 2, usize::MAX]];
        let mut asm = PatternAssembler::new(3, 3, cells.iter().map(|c| (c.as_slice(), c.as_slice())));
        let local: Vec<f64> = (0..9).map(|v| v as f64).collect();
        let mut t = Vec::new();
        for c in &cells {
            asm.add_block(c, c, &local);
            for (a, &i) in c.iter().enumerate() {
                for (b, &j) in c.iter().enumerate() {
                    if i != usize::MAX && j != usize::MAX {
                        t.push((i, j, local[a * 3 + b]));
                    }
                }
            }
        }
        let m = asm.finish();
        assert_eq!(m.to_dense(), CsrMatrix::from_triplets(3, 3, t).to_dense());
    }
}
