//! Geometry of the sequence spaces `ℓ_p` (and `c₀` for `p = ∞`).
//!
//! Points are finitely supported, so every computation is exact on the union
//! of the supports involved. Coordinates are indexed from 1.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Exponent `p ∈ [1, ∞]` of the ambient space. `∞` means `c₀` with the sup norm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Exponent(f64);

impl Exponent {
    pub const ONE: Exponent = Exponent(1.0);
    pub const TWO: Exponent = Exponent(2.0);
    pub const INFINITY: Exponent = Exponent(f64::INFINITY);

    pub fn new(p: f64) -> Result<Self> {
        if p.is_nan() || p < 1.0 {
            return Err(Error::InvalidInput(format!("exponent p = {p} must lie in [1, ∞]")));
        }
        Ok(Exponent(p))
    }

    pub fn p(self) -> f64 {
        self.0
    }

    pub fn is_infinite(self) -> bool {
        self.0.is_infinite()
    }

    pub fn is_one(self) -> bool {
        self.0 == 1.0
    }

    pub fn is_two(self) -> bool {
        self.0 == 2.0
    }

    /// Conjugate exponent `q` with `1/p + 1/q = 1`.
    pub fn dual(self) -> Exponent {
        if self.is_one() {
            Exponent::INFINITY
        } else if self.is_infinite() {
            Exponent::ONE
        } else {
            Exponent(self.0 / (self.0 - 1.0))
        }
    }

    /// `1/p`, zero at infinity.
    pub fn reciprocal(self) -> f64 {
        if self.is_infinite() {
            0.0
        } else {
            1.0 / self.0
        }
    }
}

impl std::str::FromStr for Exponent {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "inf" | "infinity" | "∞" | "c0" => Ok(Exponent::INFINITY),
            other => {
                let p: f64 = other
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad exponent `{s}`")))?;
                Exponent::new(p)
            }
        }
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_infinite() {
            write!(f, "inf")
        } else {
            write!(f, "{}", self.0)
        }
    }
}

impl Serialize for Exponent {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if self.is_infinite() {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(self.0)
        }
    }
}

impl<'de> Deserialize<'de> for Exponent {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(p) => Exponent::new(p).map_err(serde::de::Error::custom),
            Raw::Text(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// A finitely supported sequence: strictly increasing indices, no stored zeros.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SparseVector<T> {
    entries: Vec<(u32, T)>,
}

/// Serialized as a list of `[index, value]` pairs.
impl<T: Scalar + Serialize> Serialize for SparseVector<T> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.entries.serialize(s)
    }
}

impl<'de, T: Scalar + Deserialize<'de>> Deserialize<'de> for SparseVector<T> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let entries = Vec::<(u32, T)>::deserialize(d)?;
        SparseVector::new(entries).map_err(serde::de::Error::custom)
    }
}

impl<T: Scalar> SparseVector<T> {
    /// Builds a vector from arbitrary `(index, value)` pairs.
    ///
    /// Zero values are dropped; duplicate or zero indices and non-finite values
    /// are rejected.
    pub fn new(mut entries: Vec<(u32, T)>) -> Result<Self> {
        entries.sort_by_key(|e| e.0);
        for w in entries.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(Error::InvalidInput(format!("duplicate coordinate index {}", w[0].0)));
            }
        }
        if let Some(&(i, v)) = entries.iter().find(|(i, v)| *i == 0 || !v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "bad coordinate ({i}, {v}): indices start at 1 and values must be finite"
            )));
        }
        entries.retain(|e| e.1 != T::zero());
        Ok(SparseVector { entries })
    }

    /// Internal constructor for entries already sorted, unique and nonzero.
    pub(crate) fn from_sorted(entries: Vec<(u32, T)>) -> Self {
        debug_assert!(entries.windows(2).all(|w| w[0].0 < w[1].0));
        debug_assert!(entries.iter().all(|e| e.1 != T::zero()));
        SparseVector { entries }
    }

    pub fn zero() -> Self {
        SparseVector { entries: Vec::new() }
    }

    /// The standard basis vector `e_i` (1-based).
    pub fn unit(i: u32) -> Self {
        assert!(i >= 1, "coordinates are 1-based");
        SparseVector { entries: vec![(i, T::one())] }
    }

    /// Dense slice `v` placed at coordinates `1..=v.len()`.
    pub fn from_dense(values: &[T]) -> Self {
        Self::from_dense_at(values, 1)
    }

    /// Dense slice placed at coordinates `offset..offset + len`.
    pub fn from_dense_at(values: &[T], offset: u32) -> Self {
        let entries = values
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != T::zero())
            .map(|(k, v)| (offset + k as u32, *v))
            .collect();
        SparseVector { entries }
    }

    /// Values on the given sorted support; `support` must contain the support of `self`.
    pub fn to_dense_on(&self, support: &[u32]) -> Vec<T> {
        let mut out = vec![T::zero(); support.len()];
        let mut k = 0;
        for &(i, v) in &self.entries {
            while k < support.len() && support[k] < i {
                k += 1;
            }
            debug_assert!(k < support.len() && support[k] == i, "support does not cover vector");
            if k < support.len() && support[k] == i {
                out[k] = v;
            }
        }
        out
    }

    /// Rebuilds a vector from values on a sorted support.
    pub fn from_dense_on(support: &[u32], values: &[T]) -> Self {
        let entries = support
            .iter()
            .zip(values)
            .filter(|(_, v)| **v != T::zero())
            .map(|(i, v)| (*i, *v))
            .collect();
        SparseVector { entries }
    }

    pub fn entries(&self) -> &[(u32, T)] {
        &self.entries
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn support(&self) -> impl Iterator<Item = u32> + '_ {
        self.entries.iter().map(|e| e.0)
    }

    pub fn get(&self, i: u32) -> T {
        self.entries
            .binary_search_by_key(&i, |e| e.0)
            .map(|k| self.entries[k].1)
            .unwrap_or_else(|_| T::zero())
    }

    pub fn max_abs(&self) -> T {
        self.entries.iter().fold(T::zero(), |m, e| m.max(e.1.abs()))
    }

    pub fn norm(&self, p: Exponent) -> T {
        norm_of_values(self.entries.iter().map(|e| e.1), p)
    }

    pub fn scale(&self, c: T) -> Self {
        if c == T::zero() {
            return Self::zero();
        }
        let entries = self
            .entries
            .iter()
            .map(|&(i, v)| (i, v * c))
            .filter(|e| e.1 != T::zero())
            .collect();
        SparseVector { entries }
    }

    pub fn neg(&self) -> Self {
        SparseVector { entries: self.entries.iter().map(|&(i, v)| (i, -v)).collect() }
    }

    /// `a·self + b·other`.
    pub fn lincomb(&self, a: T, other: &Self, b: T) -> Self {
        let mut entries = Vec::with_capacity(self.entries.len() + other.entries.len());
        merge_with(&self.entries, &other.entries, |i, x, y| {
            let v = a * x + b * y;
            if v != T::zero() {
                entries.push((i, v));
            }
        });
        SparseVector { entries }
    }

    pub fn add(&self, other: &Self) -> Self {
        self.lincomb(T::one(), other, T::one())
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.lincomb(T::one(), other, -T::one())
    }

    pub fn dot(&self, other: &Self) -> T {
        let (mut a, mut b) = (self.entries.iter().peekable(), other.entries.iter().peekable());
        let mut s = T::zero();
        while let (Some(x), Some(y)) = (a.peek(), b.peek()) {
            match x.0.cmp(&y.0) {
                Ordering::Less => {
                    a.next();
                }
                Ordering::Greater => {
                    b.next();
                }
                Ordering::Equal => {
                    s += x.1 * y.1;
                    a.next();
                    b.next();
                }
            }
        }
        s
    }

    /// `‖self − other‖_p` without allocating the difference.
    pub fn distance(&self, other: &Self, p: Exponent) -> T {
        if p.is_infinite() {
            let mut m = T::zero();
            merge_with(&self.entries, &other.entries, |_, x, y| m = m.max((x - y).abs()));
            return m;
        }
        if p.is_one() {
            let mut s = T::zero();
            merge_with(&self.entries, &other.entries, |_, x, y| s += (x - y).abs());
            return s;
        }
        let mut scale = T::zero();
        merge_with(&self.entries, &other.entries, |_, x, y| scale = scale.max((x - y).abs()));
        if scale == T::zero() {
            return scale;
        }
        let pp = T::of(p.p());
        let mut s = T::zero();
        if p.is_two() {
            merge_with(&self.entries, &other.entries, |_, x, y| {
                let t = (x - y) / scale;
                s += t * t;
            });
            scale * s.sqrt()
        } else {
            merge_with(&self.entries, &other.entries, |_, x, y| s += ((x - y).abs() / scale).powf(pp));
            scale * s.powf(T::one() / pp)
        }
    }

    /// True when the supports do not meet.
    pub fn disjoint(&self, other: &Self) -> bool {
        let (mut a, mut b) = (0, 0);
        while a < self.entries.len() && b < other.entries.len() {
            match self.entries[a].0.cmp(&other.entries[b].0) {
                Ordering::Less => a += 1,
                Ordering::Greater => b += 1,
                Ordering::Equal => return false,
            }
        }
        true
    }

    /// Total order on exact coordinates, used for deduplication.
    pub fn cmp_exact(&self, other: &Self) -> Ordering {
        for (x, y) in self.entries.iter().zip(&other.entries) {
            let c = x.0.cmp(&y.0).then_with(|| x.1.partial_cmp(&y.1).unwrap_or(Ordering::Equal));
            if c != Ordering::Equal {
                return c;
            }
        }
        self.entries.len().cmp(&other.entries.len())
    }

    pub fn cast<U: Scalar>(&self) -> SparseVector<U> {
        SparseVector {
            entries: self
                .entries
                .iter()
                .map(|&(i, v)| (i, U::of(v.as_f64())))
                .filter(|e| e.1 != U::zero())
                .collect(),
        }
    }
}

/// Calls `f(index, x_i, y_i)` for every index in the union of both supports.
fn merge_with<T: Scalar>(a: &[(u32, T)], b: &[(u32, T)], mut f: impl FnMut(u32, T, T)) {
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        if j == b.len() || (i < a.len() && a[i].0 < b[j].0) {
            f(a[i].0, a[i].1, T::zero());
            i += 1;
        } else if i == a.len() || b[j].0 < a[i].0 {
            f(b[j].0, T::zero(), b[j].1);
            j += 1;
        } else {
            f(a[i].0, a[i].1, b[j].1);
            i += 1;
            j += 1;
        }
    }
}

/// `ℓ_p` norm of a list of values, rescaled by the max to avoid under/overflow.
pub fn norm_of_values<T: Scalar>(values: impl Iterator<Item = T> + Clone, p: Exponent) -> T {
    let m = values.clone().fold(T::zero(), |m, v| m.max(v.abs()));
    if p.is_infinite() || m == T::zero() {
        return m;
    }
    if p.is_one() {
        return values.fold(T::zero(), |s, v| s + v.abs());
    }
    if p.is_two() {
        let s = values.fold(T::zero(), |s, v| {
            let t = v / m;
            s + t * t
        });
        return m * s.sqrt();
    }
    let pp = T::of(p.p());
    let s = values.fold(T::zero(), |s, v| s + (v.abs() / m).powf(pp));
    m * s.powf(T::one() / pp)
}

/// Convenience: `ℓ_p` norm of a sparse vector.
pub fn lp_norm<T: Scalar>(v: &SparseVector<T>, p: Exponent) -> T {
    v.norm(p)
}

/// An element of the dual space `ℓ_q`, acting by `f(x) = Σ f_i x_i`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Functional<T: Scalar>(pub SparseVector<T>);

impl<T: Scalar> Functional<T> {
    pub fn coordinate(i: u32) -> Self {
        Functional(SparseVector::unit(i))
    }

    pub fn apply(&self, x: &SparseVector<T>) -> T {
        self.0.dot(x)
    }

    /// Dual norm `‖f‖_q` where `q` is conjugate to the ambient `p`.
    pub fn dual_norm(&self, ambient: Exponent) -> T {
        self.0.norm(ambient.dual())
    }

    pub fn coefficients(&self) -> &SparseVector<T> {
        &self.0
    }
}

/// Applies `f` to `x`.
pub fn apply_functional<T: Scalar>(f: &Functional<T>, x: &SparseVector<T>) -> T {
    f.apply(x)
}

/// Explicit Hahn–Banach witness: `‖f‖_q = 1` and `f(v) = ‖v‖_p`.
///
/// For `p = ∞` the functional is the signed coordinate at the smallest index of
/// maximal magnitude.
pub fn norming_functional<T: Scalar>(v: &SparseVector<T>, p: Exponent) -> Result<Functional<T>> {
    if v.is_zero() {
        return Err(Error::ZeroVector);
    }
    let sign = |x: T| if x > T::zero() { T::one() } else { -T::one() };
    let entries: Vec<(u32, T)> = if p.is_infinite() {
        let m = v.max_abs();
        let &(i, x) = v.entries().iter().find(|e| e.1.abs() == m).expect("nonempty");
        vec![(i, sign(x))]
    } else if p.is_one() {
        v.entries().iter().map(|&(i, x)| (i, sign(x))).collect()
    } else {
        let norm = v.norm(p);
        let e = T::of(p.p() - 1.0);
        v.entries()
            .iter()
            .map(|&(i, x)| (i, sign(x) * (x.abs() / norm).powf(e)))
            .filter(|e| e.1 != T::zero())
            .collect()
    };
    Ok(Functional(SparseVector::from_sorted(entries)))
}

/// Square matrix of pairwise distances with row labels.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    pub ids: Vec<String>,
    pub values: Vec<Vec<f64>>,
}

/// Tolerance beyond which a distance matrix is rejected as non-metric.
pub const METRIC_TOLERANCE: f64 = 1e-9;

impl DistanceMatrix {
    pub fn new(ids: Vec<String>, values: Vec<Vec<f64>>) -> Result<Self> {
        let n = ids.len();
        if n == 0 {
            return Err(Error::InvalidInput("empty distance matrix".into()));
        }
        if values.len() != n || values.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidInput(format!("distance matrix must be {n}×{n}")));
        }
        Ok(DistanceMatrix { ids, values })
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// Checks the metric axioms. Asymmetries and diagonal entries within
    /// [`METRIC_TOLERANCE`] are clamped; larger violations are errors.
    pub fn validated(mut self) -> Result<Self> {
        let n = self.len();
        for i in 0..n {
            for j in 0..n {
                let d = self.values[i][j];
                if !d.is_finite() || d < -METRIC_TOLERANCE {
                    return Err(Error::InvalidInput(format!(
                        "distance ({}, {}) = {d} is not a finite nonnegative number",
                        self.ids[i], self.ids[j]
                    )));
                }
            }
            if self.values[i][i].abs() > METRIC_TOLERANCE {
                return Err(Error::InvalidInput(format!("nonzero diagonal at {}", self.ids[i])));
            }
            self.values[i][i] = 0.0;
        }
        for i in 0..n {
            for j in i + 1..n {
                let (a, b) = (self.values[i][j], self.values[j][i]);
                if (a - b).abs() > METRIC_TOLERANCE {
                    return Err(Error::InvalidInput(format!(
                        "asymmetric distances between {} and {}: {a} vs {b}",
                        self.ids[i], self.ids[j]
                    )));
                }
                let m = a.max(b).max(0.0);
                self.values[i][j] = m;
                self.values[j][i] = m;
            }
        }
        for i in 0..n {
            for k in 0..n {
                for j in 0..n {
                    let via = self.values[i][j] + self.values[j][k];
                    if self.values[i][k] > via + METRIC_TOLERANCE {
                        return Err(Error::NotMetric {
                            i: self.ids[i].clone(),
                            j: self.ids[j].clone(),
                            k: self.ids[k].clone(),
                            direct: self.values[i][k],
                            via,
                        });
                    }
                }
            }
        }
        Ok(self)
    }
}

/// Kuratowski map `x ↦ (d(x, x₁), …, d(x, x_n))` into `ℓ_∞`, an isometry of the
/// finite metric space.
pub fn kuratowski_embed(d: &DistanceMatrix) -> Result<PointCloud<f64>> {
    let d = d.clone().validated()?;
    let points = d
        .ids
        .iter()
        .zip(&d.values)
        .map(|(id, row)| (id.clone(), SparseVector::from_dense(row)))
        .collect();
    PointCloud::new(points, Exponent::INFINITY)
}
