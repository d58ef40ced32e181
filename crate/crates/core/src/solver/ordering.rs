//! Geometric nested dissection.
//!
//! The unknowns are split at the median coordinate along the longest axis
//! of their bounding box; the separator is the set of unknowns of one half
//! that are coupled to the other half. Both halves are ordered recursively
//! before the separator, which yields a postordered assembly tree.

use crate::assembly::CsrMatrix;
use crate::Vec3;

/// Node of the assembly tree: the unknowns `start..end` of the new ordering.
#[derive(Clone, Debug)]
pub struct TreeNode {
    pub start: usize,
    pub end: usize,
    pub children: Vec<usize>,
}

/// Fill-reducing permutation with its assembly tree in postorder.
#[derive(Clone, Debug)]
pub struct Ordering {
    /// `perm[new] = old`.
    pub perm: Vec<usize>,
    pub nodes: Vec<TreeNode>,
}

struct Dissector<'a> {
    pattern: &'a CsrMatrix,
    coords: &'a [Vec3],
    leaf: usize,
    side: Vec<u8>,
    perm: Vec<usize>,
    nodes: Vec<TreeNode>,
}

impl Dissector<'_> {
    fn emit(&mut self, set: &[usize], children: Vec<usize>) -> usize {
        let start = self.perm.len();
        self.perm.extend_from_slice(set);
        self.nodes.push(TreeNode {
            start,
            end: self.perm.len(),
            children,
        });
        self.nodes.len() - 1
    }

    /// Orders `set` and returns the root node created for it, if any.
    fn dissect(&mut self, mut set: Vec<usize>) -> Option<usize> {
        if set.is_empty() {
            return None;
        }
        if set.len() <= self.leaf {
            set.sort_unstable();
            return Some(self.emit(&set, Vec::new()));
        }
        let mut lo = Vec3::repeat(f64::INFINITY);
        let mut hi = Vec3::repeat(f64::NEG_INFINITY);
        for &v in &set {
            lo = lo.inf(&self.coords[v]);
            hi = hi.sup(&self.coords[v]);
        }
        let axis = (hi - lo).imax();
        let c = self.coords;
        set.sort_by(|&a, &b| c[a][axis].total_cmp(&c[b][axis]).then(a.cmp(&b)));
        let mid = set.len() / 2;
        // keep unknowns at the same coordinate on one side
        let pivot = c[set[mid]][axis];
        let split = set.partition_point(|&v| c[v][axis] < pivot);
        let split = if split == 0 { mid } else { split };
        let (a, b) = set.split_at(split);
        for &v in a {
            self.side[v] = 1;
        }
        for &v in b {
            self.side[v] = 2;
        }
        let touching = |this: &Self, part: &[usize], other: u8| -> Vec<bool> {
            part.iter()
                .map(|&v| this.pattern.row(v).0.iter().any(|&u| this.side[u] == other))
                .collect()
        };
        let ta = touching(self, a, 2);
        let tb = touching(self, b, 1);
        let na = ta.iter().filter(|x| **x).count();
        let nb = tb.iter().filter(|x| **x).count();
        let (sep, rest_a, rest_b) = if na <= nb {
            let sep: Vec<usize> = a.iter().zip(&ta).filter(|(_, t)| **t).map(|(v, _)| *v).collect();
            let ra: Vec<usize> = a.iter().zip(&ta).filter(|(_, t)| !**t).map(|(v, _)| *v).collect();
            (sep, ra, b.to_vec())
        } else {
            let sep: Vec<usize> = b.iter().zip(&tb).filter(|(_, t)| **t).map(|(v, _)| *v).collect();
            let rb: Vec<usize> = b.iter().zip(&tb).filter(|(_, t)| !**t).map(|(v, _)| *v).collect();
            (sep, a.to_vec(), rb)
        };
        for &v in &set {
            self.side[v] = 0;
        }
        if rest_a.is_empty() || rest_b.is_empty() {
            // no useful split: eliminate the whole set at once
            set.sort_unstable();
            return Some(self.emit(&set, Vec::new()));
        }
        let mut children = Vec::new();
        children.extend(self.dissect(rest_a));
        children.extend(self.dissect(rest_b));
        let mut sep = sep;
        sep.sort_unstable();
        Some(self.emit(&sep, children))
    }
}

/// Nested dissection of a structurally symmetric matrix whose unknowns sit
/// at the given points. Sets of at most `leaf` unknowns are not split.
pub fn nested_dissection(pattern: &CsrMatrix, coords: &[Vec3], leaf: usize) -> Ordering {
    assert_eq!(pattern.nrows, coords.len());
    let n = pattern.nrows;
    let mut d = Dissector {
        pattern,
        coords,
        leaf: leaf.max(1),
        side: vec![0; n],
        perm: Vec::with_capacity(n),
        nodes: Vec::new(),
    };
    // disconnected pieces are handled by the recursion itself
    d.dissect((0..n).collect());
    Ordering {
        perm: d.perm,
        nodes: d.nodes,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid_laplacian(n: usize) -> (CsrMatrix, Vec<Vec3>) {
        let id = |i: usize, j: usize| i + n * j;
        let mut t = Vec::new();
        let mut coords = Vec::new();
        for j in 0..n {
            for i in 0..n {
                coords.push(Vec3::new(i as f64, j as f64, 0.0));
                t.push((id(i, j), id(i, j), 4.0));
                if i + 1 < n {
                    t.push((id(i, j), id(i + 1, j), -1.0));
                    t.push((id(i + 1, j), id(i, j), -1.0));
                }
                if j + 1 < n {
                    t.push((id(i, j), id(i, j + 1), -1.0));
                    t.push((id(i, j + 1), id(i, j), -1.0));
                }
            }
        }
        (CsrMatrix::from_triplets(n * n, n * n, t), coords)
    }

    fn assert_postordered_permutation(o: &Ordering, n: usize) {
        let mut seen = o.perm.clone();
        seen.sort_unstable();
        assert_eq!(seen, (0..n).collect::<Vec<_>>());
        let mut covered = 0;
        for (k, node) in o.nodes.iter().enumerate() {
            assert_eq!(node.start, covered);
            covered = node.end;
            for &ch in &node.children {
                assert!(ch < k);
            }
        }
        assert_eq!(covered, n);
    }

    #[test]
    fn ordering_is_a_postordered_permutation() {
        let (a, c) = grid_laplacian(20);
        assert_postordered_permutation(&nested_dissection(&a, &c, 8), 400);
    }

    proptest::proptest! {
        #[test]
        fn any_grid_and_leaf_size_give_a_valid_tree(n in 1usize..14, leaf in 1usize..40) {
            let (a, c) = grid_laplacian(n);
            assert_postordered_permutation(&nested_dissection(&a, &c, leaf), n * n);
        }
    }

    #[test]
    fn separators_disconnect_their_subtrees() {
        let (a, c) = grid_laplacian(16);
        let o = nested_dissection(&a, &c, 4);
        let mut pos = vec![0; o.perm.len()];
        for (new, &old) in o.perm.iter().enumerate() {
            pos[old] = new;
        }
        // an unknown may only couple to itself, its own subtree or ancestors,
        // i.e. every coupling to a later unknown must land in an ancestor
        let mut owner = vec![0; o.perm.len()];
        for (k, node) in o.nodes.iter().enumerate() {
            for p in node.start..node.end {
                owner[p] = k;
            }
        }
        let mut parent = vec![usize::MAX; o.nodes.len()];
        for (k, node) in o.nodes.iter().enumerate() {
            for &ch in &node.children {
                parent[ch] = k;
            }
        }
        let is_ancestor = |a: usize, d: usize| {
            let mut x = d;
            while x != usize::MAX {
                if x == a {
                    return true;
                }
                x = parent[x];
            }
            false
        };
        for v in 0..a.nrows {
            for &u in a.row(v).0 {
                let (pv, pu) = (pos[v], pos[u]);
                if pu > pv {
                    assert!(is_ancestor(owner[pu], owner[pv]));
                }
            }
        }
    }
}
