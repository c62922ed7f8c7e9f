//! Dense helpers for sparse families: restriction to a common support and
//! splitting into coordinate-disjoint blocks.

use std::collections::HashMap;

use nalgebra::DMatrix;

use crate::sequence_space::SparseVector;

pub(crate) fn union_support<'a>(vectors: impl Iterator<Item = &'a SparseVector<f64>>) -> Vec<u32> {
    let mut s: Vec<u32> = vectors.flat_map(|v| v.support()).collect();
    s.sort_unstable();
    s.dedup();
    s
}

/// Columns restricted to `support` (rows in support order).
pub(crate) fn dense_matrix<'a>(columns: impl IntoIterator<Item = &'a SparseVector<f64>>, support: &[u32]) -> DMatrix<f64> {
    let cols: Vec<Vec<f64>> = columns.into_iter().map(|c| c.to_dense_on(support)).collect();
    DMatrix::from_fn(support.len(), cols.len(), |i, j| cols[j][i])
}

/// Orthonormal basis of the column space (left singular vectors above tolerance).
pub(crate) fn column_space(b: &DMatrix<f64>) -> DMatrix<f64> {
    if b.ncols() == 0 || b.nrows() == 0 {
        return DMatrix::zeros(b.nrows(), 0);
    }
    let svd = b.clone().svd(true, false);
    let u = svd.u.expect("left singular vectors");
    let tol = RANK_TOL * svd.singular_values.max();
    let keep: Vec<usize> = (0..svd.singular_values.len()).filter(|&k| svd.singular_values[k] > tol).collect();
    DMatrix::from_fn(b.nrows(), keep.len(), |i, j| u[(i, keep[j])])
}

/// Relative singular-value cutoff for numerical rank.
pub(crate) const RANK_TOL: f64 = 1e-10;

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn find(&mut self, mut a: usize) -> usize {
        while self.0[a] != a {
            self.0[a] = self.0[self.0[a]];
            a = self.0[a];
        }
        a
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.0[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// Groups vectors into blocks that share no coordinate with each other.
/// Blocks are listed by first member; members keep input order. Zero vectors
/// form singleton blocks.
pub(crate) fn support_components(vectors: &[&SparseVector<f64>]) -> Vec<Vec<usize>> {
    let mut uf = UnionFind((0..vectors.len()).collect());
    let mut first: HashMap<u32, usize> = HashMap::new();
    for (k, v) in vectors.iter().enumerate() {
        for c in v.support() {
            match first.get(&c) {
                Some(&o) => uf.union(o, k),
                None => {
                    first.insert(c, k);
                }
            }
        }
    }
    let mut index: HashMap<usize, usize> = HashMap::new();
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    for k in 0..vectors.len() {
        let r = uf.find(k);
        let b = *index.entry(r).or_insert_with(|| {
            blocks.push(Vec::new());
            blocks.len() - 1
        });
        blocks[b].push(k);
    }
    blocks
}

/// Indices of the vectors linked to `x` through chains of shared coordinates.
pub(crate) fn connected_to(x: &SparseVector<f64>, vectors: &[SparseVector<f64>]) -> Vec<usize> {
    let mut all: Vec<&SparseVector<f64>> = vec![x];
    all.extend(vectors.iter());
    let blocks = support_components(&all);
    blocks[0].iter().filter(|&&k| k > 0).map(|&k| k - 1).collect()
}

/// Numerical rank, computed block by block.
pub(crate) fn rank(vectors: &[&SparseVector<f64>]) -> usize {
    support_components(vectors)
        .into_iter()
        .map(|block| {
            let cols: Vec<&SparseVector<f64>> = block.iter().map(|&k| vectors[k]).collect();
            let support = union_support(cols.iter().copied());
            if support.is_empty() {
                return 0;
            }
            let m = dense_matrix(cols, &support);
            let sv = m.singular_values();
            let tol = RANK_TOL * sv.max();
            sv.iter().filter(|&&s| s > tol).count()
        })
        .sum()
}
