use std::collections::HashSet;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::sequence_space::{Exponent, SparseVector};

/// A finite, labeled, nonempty set of points of `ℓ_p`.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud<T> {
    points: Vec<(String, SparseVector<T>)>,
    p: Exponent,
}

impl<T: Scalar> PointCloud<T> {
    pub fn new(points: Vec<(String, SparseVector<T>)>, p: Exponent) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidInput("point cloud is empty".into()));
        }
        let mut seen = HashSet::with_capacity(points.len());
        for (id, _) in &points {
            if !seen.insert(id.as_str()) {
                return Err(Error::InvalidInput(format!("duplicate point id `{id}`")));
            }
        }
        Ok(PointCloud { points, p })
    }

    /// Cloud with ids `prefix1, prefix2, …`.
    pub fn from_vectors(prefix: &str, vectors: Vec<SparseVector<T>>, p: Exponent) -> Result<Self> {
        let points = vectors
            .into_iter()
            .enumerate()
            .map(|(k, v)| (format!("{prefix}{}", k + 1), v))
            .collect();
        Self::new(points, p)
    }

    pub fn p(&self) -> Exponent {
        self.p
    }

    pub fn with_exponent(&self, p: Exponent) -> Self {
        PointCloud { points: self.points.clone(), p }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[(String, SparseVector<T>)] {
        &self.points
    }

    pub fn id(&self, k: usize) -> &str {
        &self.points[k].0
    }

    pub fn vector(&self, k: usize) -> &SparseVector<T> {
        &self.points[k].1
    }

    pub fn vectors(&self) -> impl Iterator<Item = &SparseVector<T>> {
        self.points.iter().map(|p| &p.1)
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.points.iter().position(|p| p.0 == id)
    }

    pub fn distance(&self, a: usize, b: usize) -> T {
        self.points[a].1.distance(&self.points[b].1, self.p)
    }

    /// Sorted union of all supports.
    pub fn support(&self) -> Vec<u32> {
        let mut s: Vec<u32> = self.points.iter().flat_map(|p| p.1.support()).collect();
        s.sort_unstable();
        s.dedup();
        s
    }

    pub fn diameter(&self) -> T {
        let mut d = T::zero();
        for i in 0..self.len() {
            for j in i + 1..self.len() {
                d = d.max(self.distance(i, j));
            }
        }
        d
    }

    /// Smallest distance between distinct points; `None` for a single point.
    pub fn min_pairwise_distance(&self) -> Option<T> {
        let mut best: Option<T> = None;
        for i in 0..self.len() {
            for j in i + 1..self.len() {
                let d = self.distance(i, j);
                best = Some(best.map_or(d, |b| b.min(d)));
            }
        }
        best
    }

    /// Sub-cloud keeping the given indices, in order.
    pub fn select(&self, indices: &[usize]) -> Result<Self> {
        Self::new(indices.iter().map(|&k| self.points[k].clone()).collect(), self.p)
    }

    pub fn cast<U: Scalar>(&self) -> PointCloud<U> {
        PointCloud {
            points: self.points.iter().map(|(id, v)| (id.clone(), v.cast())).collect(),
            p: self.p,
        }
    }
}
