//! Thickness brackets `lower ≤ d(X, ε) ≤ upper` and `σ_α` functional families.
//!
//! `d(X, ε)` is the least dimension of a linear subspace within `ε` of every
//! point. It is never computed exactly: upper bounds come from explicit
//! subspaces whose feasibility is verified point by point, lower bounds from
//! certificates that a subset of `X` forces a given dimension.

use std::collections::HashMap;

use nalgebra::DVector;
use serde_json::{json, Value};

use crate::cloud::PointCloud;
use crate::covering::{difference_set, greedy_net_assigned, DimensionEstimate, EpsilonLadder, ScaleCount};
use crate::distance::{distance_to_span, SubspaceDistance};
use crate::error::{Error, Result};
use crate::linalg::{dense_matrix, rank, support_components, union_support, RANK_TOL};
use crate::sequence_space::{norm_of_values, norming_functional, Exponent, Functional, SparseVector};

type Vector = SparseVector<f64>;
type Cloud = PointCloud<f64>;

/// Default number of points in the greedy independence search.
pub const DEFAULT_SUBSET_BUDGET: usize = 64;

/// Clouds up to this size also get an exhaustive search over spans of subsets.
pub const SUBSET_SPAN_LIMIT: usize = 8;

/// Default cap on `|X − X|` before the cover construction of a `σ_α` family is skipped.
pub const DEFAULT_DIFFERENCE_BUDGET: usize = 20_000;

/// Separation constant of the cover construction.
pub const COVER_ALPHA: f64 = 0.48;

/// Separation constant of the coordinate construction.
pub const COORDINATE_ALPHA: f64 = 0.2;

/// A finite-dimensional subspace of `ℓ_p` given by a linearly independent basis.
#[derive(Debug, Clone, PartialEq)]
pub struct Subspace {
    basis: Vec<Vector>,
    p: Exponent,
}

impl Subspace {
    pub fn new(basis: Vec<Vector>, p: Exponent) -> Result<Self> {
        let refs: Vec<&Vector> = basis.iter().collect();
        let r = rank(&refs);
        if r < basis.len() {
            return Err(Error::InvalidInput(format!(
                "basis of {} vectors spans only {r} dimensions",
                basis.len()
            )));
        }
        Ok(Subspace { basis, p })
    }

    /// Basis produced by a construction that already enforced independence.
    pub(crate) fn trusted(basis: Vec<Vector>, p: Exponent) -> Self {
        Subspace { basis, p }
    }

    pub fn zero(p: Exponent) -> Self {
        Subspace { basis: Vec::new(), p }
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[Vector] {
        &self.basis
    }

    pub fn p(&self) -> Exponent {
        self.p
    }
}

/// `min_{v ∈ V} ‖x − v‖_p` with a certified lower bound (see [`SubspaceDistance`]).
pub fn dist_to_subspace(x: &Vector, v: &Subspace) -> Result<SubspaceDistance> {
    distance_to_span(x, &v.basis, v.p)
}

/// A verified subspace together with the largest distance bound it achieves on `X`.
#[derive(Debug, Clone)]
pub struct UpperWitness {
    pub subspace: Subspace,
    pub max_distance: f64,
}

/// Gram–Schmidt per coordinate block, in input order. Returns, for each
/// vector, `None` when it was kept or `Some(‖residual‖_p)` when it was
/// numerically dependent on the earlier ones.
fn dependency_defects(vectors: &[&Vector], p: Exponent) -> Vec<Option<f64>> {
    let mut out = vec![None; vectors.len()];
    for block in support_components(vectors) {
        let cols: Vec<&Vector> = block.iter().map(|&k| vectors[k]).collect();
        let support = union_support(cols.iter().copied());
        let m = dense_matrix(cols, &support);
        let mut q: Vec<DVector<f64>> = Vec::new();
        for (slot, &k) in block.iter().enumerate() {
            let col = m.column(slot).into_owned();
            let mut r = col.clone();
            for _ in 0..2 {
                for e in &q {
                    let c = e.dot(&r);
                    r -= c * e;
                }
            }
            let rn = r.norm();
            if rn <= RANK_TOL * col.norm() {
                out[k] = Some(norm_of_values(r.iter().copied(), p));
            } else {
                q.push(r / rn);
            }
        }
    }
    out
}

fn span_centers(x: &Cloud, eps: f64) -> UpperWitness {
    let p = x.p();
    let (centers, assigned) = greedy_net_assigned(x, eps);
    let norms: Vec<f64> = x.vectors().map(|v| v.norm(p)).collect();
    // cells whose points all lie within ε of the origin need no basis vector
    let mut needed = vec![false; centers.len()];
    for (i, &slot) in assigned.iter().enumerate() {
        if norms[i] > eps {
            needed[slot] = true;
        }
    }
    let kept: Vec<usize> = (0..centers.len()).filter(|&s| needed[s]).collect();
    let refs: Vec<&Vector> = kept.iter().map(|&s| x.vector(centers[s])).collect();
    let mut defect: HashMap<usize, f64> = HashMap::new();
    for (k, d) in dependency_defects(&refs, p).into_iter().enumerate() {
        if let Some(d) = d {
            defect.insert(kept[k], d);
        }
    }
    let mut bound = vec![0.0f64; x.len()];
    for (i, &slot) in assigned.iter().enumerate() {
        if norms[i] <= eps {
            bound[i] = norms[i];
        } else {
            bound[i] = x.vector(i).distance(x.vector(centers[slot]), p) + defect.get(&slot).copied().unwrap_or(0.0);
            if bound[i] > eps {
                // dropping this center as dependent cost too much: keep it
                defect.remove(&slot);
                bound[i] = x.vector(i).distance(x.vector(centers[slot]), p);
            }
        }
    }
    let basis = kept
        .iter()
        .filter(|s| !defect.contains_key(s))
        .map(|&s| x.vector(centers[s]).clone())
        .collect();
    UpperWitness {
        subspace: Subspace::trusted(basis, p),
        max_distance: bound.iter().copied().fold(0.0, f64::max),
    }
}

/// Span of the greedy-net centers at radius `ε`, minus centers whose cells
/// lie in the `ε`-ball at the origin and minus dependent centers. Every point
/// is within `ε` of the span, witnessed by its own center.
pub fn thickness_upper_span_centers(x: &Cloud, eps: f64) -> Subspace {
    span_centers(x, eps).subspace
}

struct BlockSvd {
    // (singular value, block, index within block), sorted by decreasing value
    order: Vec<(f64, usize, usize)>,
    // left singular vectors per block as sparse vectors
    directions: Vec<Vec<Vector>>,
    // per point: its block and prefix sums of squared projections
    point_block: Vec<usize>,
    prefix: Vec<Vec<f64>>,
    sq_norms: Vec<f64>,
}

fn block_svd(x: &Cloud) -> BlockSvd {
    let vecs: Vec<&Vector> = x.vectors().collect();
    let blocks = support_components(&vecs);
    let mut order = Vec::new();
    let mut directions = Vec::with_capacity(blocks.len());
    let mut point_block = vec![0; x.len()];
    let mut prefix = vec![Vec::new(); x.len()];
    let sq_norms: Vec<f64> = vecs.iter().map(|v| v.dot(v)).collect();
    for (b, block) in blocks.iter().enumerate() {
        let cols: Vec<&Vector> = block.iter().map(|&k| vecs[k]).collect();
        let support = union_support(cols.iter().copied());
        for &k in block {
            point_block[k] = b;
            prefix[k] = vec![0.0];
        }
        if support.is_empty() {
            directions.push(Vec::new());
            continue;
        }
        let m = dense_matrix(cols.iter().copied(), &support);
        let svd = m.svd(true, true);
        let u = svd.u.expect("left singular vectors");
        let vt = svd.v_t.expect("right singular vectors");
        let sv = &svd.singular_values;
        let tol = RANK_TOL * sv.max();
        let mut idx: Vec<usize> = (0..sv.len()).filter(|&l| sv[l] > tol).collect();
        idx.sort_by(|&a, &c| sv[c].total_cmp(&sv[a]).then(a.cmp(&c)));
        let mut dirs = Vec::with_capacity(idx.len());
        for (pos, &l) in idx.iter().enumerate() {
            order.push((sv[l], b, pos));
            let col: Vec<f64> = u.column(l).iter().copied().collect();
            dirs.push(SparseVector::from_dense_on(&support, &col));
        }
        directions.push(dirs);
        for (slot, &k) in block.iter().enumerate() {
            let mut acc = 0.0;
            for &l in &idx {
                let c = sv[l] * vt[(l, slot)];
                acc += c * c;
                prefix[k].push(acc);
            }
        }
    }
    order.sort_by(|a, c| c.0.total_cmp(&a.0).then(a.1.cmp(&c.1)).then(a.2.cmp(&c.2)));
    BlockSvd { order, directions, point_block, prefix, sq_norms }
}

impl BlockSvd {
    fn kept_per_block(&self, k: usize) -> Vec<usize> {
        let mut kept = vec![0; self.directions.len()];
        for &(_, b, _) in &self.order[..k] {
            kept[b] += 1;
        }
        kept
    }

    fn max_residual(&self, k: usize) -> f64 {
        let kept = self.kept_per_block(k);
        (0..self.sq_norms.len())
            .map(|i| {
                let b = self.point_block[i];
                let pre = &self.prefix[i];
                if kept[b] + 1 >= pre.len() {
                    // every nonzero direction of the block is kept
                    0.0
                } else {
                    (self.sq_norms[i] - pre[kept[b]]).max(0.0).sqrt()
                }
            })
            .fold(0.0, f64::max)
    }
}

fn svd_upper(x: &Cloud, eps: f64) -> Result<UpperWitness> {
    if !x.p().is_two() {
        return Err(Error::Precondition("singular-value bound needs p = 2".into()));
    }
    let s = block_svd(x);
    let (mut lo, mut hi) = (0, s.order.len());
    while lo < hi {
        let mid = (lo + hi) / 2;
        if s.max_residual(mid) <= eps {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    let kept = s.kept_per_block(lo);
    let basis = s
        .directions
        .iter()
        .zip(&kept)
        .flat_map(|(dirs, &n)| dirs[..n].iter().cloned())
        .collect();
    Ok(UpperWitness { subspace: Subspace::trusted(basis, x.p()), max_distance: s.max_residual(lo) })
}

/// Smallest `k` whose top-`k` left singular subspace is within `ε` of every
/// point (`p = 2`). The point matrix is split into coordinate-disjoint blocks
/// first, so the singular subspaces are those of the full matrix.
pub fn thickness_upper_svd(x: &Cloud, eps: f64) -> Result<usize> {
    Ok(svd_upper(x, eps)?.subspace.dim())
}

fn subset_span_upper(x: &Cloud, eps: f64, below: usize) -> Result<Option<UpperWitness>> {
    let n = x.len();
    let p = x.p();
    for size in 0..below.min(n + 1) {
        for mask in 0u32..(1 << n) {
            if mask.count_ones() as usize != size {
                continue;
            }
            let basis: Vec<Vector> = (0..n).filter(|&k| mask >> k & 1 == 1).map(|k| x.vector(k).clone()).collect();
            let refs: Vec<&Vector> = basis.iter().collect();
            if rank(&refs) < size {
                continue;
            }
            let mut worst = 0.0f64;
            for v in x.vectors() {
                worst = worst.max(distance_to_span(v, &basis, p)?.upper);
                if worst > eps {
                    break;
                }
            }
            if worst <= eps {
                return Ok(Some(UpperWitness { subspace: Subspace::trusted(basis, p), max_distance: worst }));
            }
        }
    }
    Ok(None)
}

/// Best verified upper witness: greedy-net span, singular subspaces for
/// `p = 2`, and spans of subsets for clouds of at most [`SUBSET_SPAN_LIMIT`] points.
pub fn thickness_upper(x: &Cloud, eps: f64) -> Result<UpperWitness> {
    let mut best = span_centers(x, eps);
    if x.p().is_two() {
        let s = svd_upper(x, eps)?;
        if s.subspace.dim() < best.subspace.dim() {
            best = s;
        }
    }
    if x.len() <= SUBSET_SPAN_LIMIT {
        if let Some(s) = subset_span_upper(x, eps, best.subspace.dim())? {
            best = s;
        }
    }
    Ok(best)
}

fn block_margin(cols: &[&Vector], p: Exponent) -> f64 {
    if cols.len() == 1 {
        return cols[0].norm(p) * (1.0 - 1e-12);
    }
    let support = union_support(cols.iter().copied());
    let (m, k) = (support.len(), cols.len());
    if k > m {
        return 0.0;
    }
    let sigma_min = dense_matrix(cols.iter().copied(), &support).singular_values().min();
    let l2 = sigma_min / (k as f64).sqrt();
    // ‖y‖_p ≥ m^{1/p − 1/2}‖y‖₂ for p ≥ 2, and ‖y‖_p ≥ ‖y‖₂ for p ≤ 2
    let compare = if p.p() > 2.0 { (m as f64).powf(p.reciprocal() - 0.5) } else { 1.0 };
    (l2 * compare * (1.0 - 1e-9)).max(0.0)
}

/// Certified lower bound on `min_{‖λ‖₁ = 1} ‖Σ λ_i x_i‖_p`.
///
/// Each coordinate-disjoint block gets `β_b` with `‖Σ_{i∈b} λ_i x_i‖ ≥ β_b‖λ_b‖₁`
/// (the exact norm for single vectors, `σ_min/√k` with a norm comparison
/// otherwise). Disjoint blocks add in `ℓ_p`, so the blocks combine to
/// `(Σ β_b^{−q})^{−1/q}`.
pub fn independence_margin(vectors: &[&Vector], p: Exponent) -> f64 {
    if vectors.is_empty() {
        return f64::INFINITY;
    }
    let betas: Vec<f64> = support_components(vectors)
        .iter()
        .map(|block| {
            let cols: Vec<&Vector> = block.iter().map(|&k| vectors[k]).collect();
            block_margin(&cols, p)
        })
        .collect();
    if betas.iter().any(|&b| b <= 0.0) {
        return 0.0;
    }
    if p.is_one() {
        betas.iter().copied().fold(f64::INFINITY, f64::min)
    } else if p.is_infinite() {
        1.0 / betas.iter().map(|b| 1.0 / b).sum::<f64>()
    } else {
        let q = p.dual().p();
        betas.iter().map(|b| b.powf(-q)).sum::<f64>().powf(-1.0 / q)
    }
}

fn lookup(x: &Cloud, ids: &[&str]) -> Result<Vec<usize>> {
    let mut seen = std::collections::HashSet::new();
    ids.iter()
        .map(|id| {
            if !seen.insert(*id) {
                return Err(Error::InvalidInput(format!("id `{id}` repeated in subset")));
            }
            x.position(id).ok_or_else(|| Error::InvalidInput(format!("no point with id `{id}`")))
        })
        .collect()
}

/// True when the subset certifies `d(X, ε) ≥ k`: any subspace within `ε` of
/// the `k` points contains `k` independent vectors as soon as
/// `min_{‖λ‖₁=1} ‖Σλ_i x_i‖ > ε`. False means no certificate was found.
pub fn independence_lower_bound(x: &Cloud, subset: &[&str], eps: f64) -> Result<bool> {
    let idx = lookup(x, subset)?;
    let vecs: Vec<&Vector> = idx.iter().map(|&k| x.vector(k)).collect();
    Ok(independence_margin(&vecs, x.p()) > eps)
}

fn is_orthogonal(vecs: &[&Vector]) -> bool {
    for (a, u) in vecs.iter().enumerate() {
        for w in &vecs[a + 1..] {
            let scale = u.dot(u).sqrt() * w.dot(w).sqrt();
            if u.dot(w).abs() > 1e-12 * scale {
                return false;
            }
        }
    }
    true
}

/// `k(1 − ε/min‖a_i‖)²` for `k` pairwise orthogonal points of `ℓ₂`: the
/// projection onto any subspace within `ε` keeps that much trace on their
/// directions, and the trace of a projection is its rank.
pub fn hilbert_projection_lower_bound(x: &Cloud, eps: f64) -> Result<f64> {
    if !x.p().is_two() {
        return Err(Error::Precondition("projection bound needs p = 2".into()));
    }
    let vecs: Vec<&Vector> = x.vectors().collect();
    if !is_orthogonal(&vecs) {
        return Err(Error::InvalidInput("points are not pairwise orthogonal".into()));
    }
    let smallest = vecs.iter().map(|v| v.norm(Exponent::TWO)).fold(f64::INFINITY, f64::min);
    if !(eps < smallest) {
        return Err(Error::Precondition(format!("ε = {eps} must be below the smallest norm {smallest}")));
    }
    Ok(vecs.len() as f64 * (1.0 - eps / smallest).powi(2))
}

fn by_decreasing_norm(x: &Cloud, eps: f64) -> Vec<usize> {
    let p = x.p();
    let norms: Vec<f64> = x.vectors().map(|v| v.norm(p)).collect();
    let mut idx: Vec<usize> = (0..x.len()).filter(|&k| norms[k] > eps).collect();
    idx.sort_by(|&a, &b| norms[b].total_cmp(&norms[a]).then(a.cmp(&b)));
    idx
}

/// Greedy-by-norm subset certified independent at `ε`.
fn independence_search(x: &Cloud, eps: f64, budget: usize) -> Vec<usize> {
    let mut chosen: Vec<usize> = Vec::new();
    for (examined, k) in by_decreasing_norm(x, eps).into_iter().enumerate() {
        if chosen.len() >= budget || examined >= 4 * budget {
            break;
        }
        let mut trial: Vec<&Vector> = chosen.iter().map(|&c| x.vector(c)).collect();
        trial.push(x.vector(k));
        if independence_margin(&trial, x.p()) > eps {
            chosen.push(k);
        }
    }
    chosen
}

/// Trace bound over a greedy orthogonal subset `S` (`p = 2`).
///
/// If `P` projects onto a subspace within `ε` of `S`, Pythagoras gives
/// `‖Pe_i‖² ≥ 1 − ε²/‖a_i‖²` for the unit directions `e_i`, and
/// `rank P ≥ Σ‖Pe_i‖²`. Termwise this dominates `k(1 − ε/‖a_k‖)²`.
fn projection_search(x: &Cloud, eps: f64) -> (usize, Vec<usize>) {
    let mut chosen: Vec<usize> = Vec::new();
    let mut total = 0.0;
    for k in by_decreasing_norm(x, eps) {
        let v = x.vector(k);
        let vn = v.dot(v).sqrt();
        let orthogonal = chosen.iter().all(|&c| {
            let w = x.vector(c);
            v.disjoint(w) || v.dot(w).abs() <= 1e-12 * vn * w.dot(w).sqrt()
        });
        if orthogonal {
            chosen.push(k);
            total += 1.0 - (eps / vn).powi(2);
        }
    }
    let certified = (total - 1e-9 * total.max(1.0)).ceil().max(0.0) as usize;
    (certified, chosen)
}

/// Certified bracket for `d(X, ε)` at one scale.
#[derive(Debug, Clone)]
pub struct ThicknessBracket {
    pub epsilon: f64,
    pub lower: usize,
    pub upper: usize,
    pub lower_witness: Vec<String>,
    pub upper_witness: Subspace,
    /// Largest verified distance bound from `X` to the upper witness.
    pub upper_distance: f64,
}

impl ThicknessBracket {
    pub fn to_json(&self) -> Value {
        json!({
            "epsilon": self.epsilon,
            "lower": self.lower,
            "upper": self.upper,
            "lower_witness_ids": self.lower_witness,
            "upper_dim": self.upper_witness.dim(),
        })
    }
}

/// Bracket at one scale; `budget` caps the greedy independence search.
pub fn thickness_bracket(x: &Cloud, eps: f64, budget: usize) -> Result<ThicknessBracket> {
    let upper = thickness_upper(x, eps)?;
    let indep = independence_search(x, eps, budget);
    let (mut lower, mut witness) = (indep.len(), indep);
    if x.p().is_two() {
        let (proj, ids) = projection_search(x, eps);
        if proj > lower {
            lower = proj;
            witness = ids;
        }
    }
    if lower > upper.subspace.dim() {
        return Err(Error::Numerical(format!(
            "certified lower bound {lower} exceeds verified upper bound {} at ε = {eps}",
            upper.subspace.dim()
        )));
    }
    Ok(ThicknessBracket {
        epsilon: eps,
        lower,
        upper: upper.subspace.dim(),
        lower_witness: witness.iter().map(|&k| x.id(k).to_string()).collect(),
        upper_distance: upper.max_distance,
        upper_witness: upper.subspace,
    })
}

/// Brackets over a ladder with log-log fits of both sides.
#[derive(Debug, Clone)]
pub struct ThicknessEstimate {
    pub brackets: Vec<ThicknessBracket>,
    pub lower: DimensionEstimate,
    pub upper: DimensionEstimate,
}

impl ThicknessEstimate {
    /// `(lower slope, upper slope)`.
    pub fn slopes(&self) -> (f64, f64) {
        (self.lower.slope, self.upper.slope)
    }

    /// Long format: one row per (scale, side).
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epsilon,quantity,value\n");
        for b in &self.brackets {
            out.push_str(&format!("{},lower,{}\n{},upper,{}\n", b.epsilon, b.lower, b.epsilon, b.upper));
        }
        out
    }

    pub fn summary_json(&self) -> Value {
        json!({
            "lower_slope": self.lower.slope,
            "upper_slope": self.upper.slope,
            "lower": self.lower.summary_json(),
            "upper": self.upper.summary_json(),
            "brackets": self.brackets.iter().map(ThicknessBracket::to_json).collect::<Vec<_>>(),
        })
    }
}

pub fn thickness_dim_estimate(x: &Cloud, ladder: &EpsilonLadder) -> Result<ThicknessEstimate> {
    thickness_dim_estimate_with_budget(x, ladder, DEFAULT_SUBSET_BUDGET)
}

pub fn thickness_dim_estimate_with_budget(x: &Cloud, ladder: &EpsilonLadder, budget: usize) -> Result<ThicknessEstimate> {
    ladder.require_min_len(4)?;
    let brackets = ladder
        .scales()
        .into_iter()
        .map(|eps| thickness_bracket(x, eps, budget))
        .collect::<Result<Vec<_>>>()?;
    let fit = |side: fn(&ThicknessBracket) -> usize| {
        DimensionEstimate::fit(brackets.iter().map(|b| ScaleCount { epsilon: b.epsilon, count: side(b) }).collect())
    };
    let lower = fit(|b| b.lower);
    let upper = fit(|b| b.upper);
    Ok(ThicknessEstimate { brackets, lower, upper })
}

/// Unit-norm functionals on `ℓ_p` spanning a subspace of the dual.
#[derive(Debug, Clone)]
pub struct FunctionalFamily {
    functionals: Vec<Functional<f64>>,
    alpha: f64,
    ambient: Exponent,
}

impl FunctionalFamily {
    pub fn new(functionals: Vec<Functional<f64>>, alpha: f64, ambient: Exponent) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::InvalidInput(format!("α = {alpha} must lie in (0, 1]")));
        }
        for f in &functionals {
            let n = f.dual_norm(ambient);
            if (n - 1.0).abs() > 1e-10 {
                return Err(Error::InvalidInput(format!("functional has dual norm {n}, expected 1")));
            }
        }
        Ok(FunctionalFamily { functionals, alpha, ambient })
    }

    pub fn len(&self) -> usize {
        self.functionals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.functionals.is_empty()
    }

    pub fn functionals(&self) -> &[Functional<f64>] {
        &self.functionals
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn with_alpha(&self, alpha: f64) -> Result<Self> {
        Self::new(self.functionals.clone(), alpha, self.ambient)
    }

    /// Coordinates `i` such that `±e_i` belongs to the family.
    fn coordinates(&self) -> Vec<u32> {
        let mut c: Vec<u32> = self
            .functionals
            .iter()
            .filter(|f| f.0.nnz() == 1)
            .map(|f| f.0.entries()[0].0)
            .collect();
        c.sort_unstable();
        c.dedup();
        c
    }
}

fn restrict(v: &Vector, coords: &[u32]) -> Vector {
    let entries = v
        .entries()
        .iter()
        .copied()
        .filter(|(i, _)| coords.binary_search(i).is_ok())
        .collect();
    SparseVector::new(entries).expect("restriction of a valid vector")
}

/// Cover of `X − X` at radius `r`; norming functionals of the centers with
/// norm at least `min_norm`, one per `±` pair, in a fixed order.
fn cover_functionals(x: &Cloud, r: f64, min_norm: f64) -> Vec<Functional<f64>> {
    let z = difference_set(x);
    let p = x.p();
    let mut centers: Vec<Vector> = crate::covering::greedy_net(&z, r)
        .into_iter()
        .map(|k| z.vector(k).clone())
        .filter(|c| !c.is_zero() && c.norm(p) >= min_norm)
        .map(|c| if c.entries()[0].1 < 0.0 { c.neg() } else { c })
        .collect();
    centers.sort_by(|a, b| a.cmp_exact(b));
    centers.dedup_by(|a, b| a.cmp_exact(b).is_eq());
    centers
        .iter()
        .map(|c| norming_functional(c, p).expect("nonzero center"))
        .collect()
}

/// Norming functionals of a cover of `X − X` at radius `ε`. Every `z` with
/// `‖z‖ ≥ 50ε` has a center `c` within `ε`, hence `‖c‖ ≥ 49ε` and
/// `|φ_c(z)| ≥ ‖c‖ − ε ≥ 48ε`; centers below `49ε` are dropped.
pub fn sigma_family_from_cover(x: &Cloud, eps: f64) -> FunctionalFamily {
    let f = cover_functionals(x, eps, 49.0 * eps);
    FunctionalFamily::new(f, COVER_ALPHA, x.p()).expect("norming functionals have unit norm")
}

/// Coordinate functionals `e_i` for every coordinate where some point has
/// `|x_i| ≥ threshold`.
pub fn coordinate_family(x: &Cloud, threshold: f64, alpha: f64) -> Result<FunctionalFamily> {
    let mut peak: HashMap<u32, f64> = HashMap::new();
    for v in x.vectors() {
        for &(i, a) in v.entries() {
            let e = peak.entry(i).or_insert(0.0);
            *e = e.max(a.abs());
        }
    }
    let mut coords: Vec<u32> = peak.into_iter().filter(|&(_, m)| m >= threshold).map(|(i, _)| i).collect();
    coords.sort_unstable();
    FunctionalFamily::new(coords.into_iter().map(Functional::coordinate).collect(), alpha, x.p())
}

/// Exhaustive check of the `σ_α` property: every pair with `‖x − y‖ ≥ ε` has
/// a unit `Φ` in the span of the family with `|Φ(x − y)| ≥ αε`.
///
/// Candidates for `Φ` are the members themselves and, for the coordinate
/// members `S`, the norming functional of `(x − y)|_S`, which attains
/// `‖(x − y)|_S‖_p`. A pass is therefore always genuine.
pub fn sigma_check(f: &FunctionalFamily, x: &Cloud, eps: f64) -> bool {
    let p = x.p();
    let coords = f.coordinates();
    let general: Vec<&Functional<f64>> = f.functionals.iter().filter(|g| g.0.nnz() != 1).collect();
    let values: Vec<Vec<f64>> = x.vectors().map(|v| general.iter().map(|g| g.apply(v)).collect()).collect();
    let restricted: Vec<Vector> = x.vectors().map(|v| restrict(v, &coords)).collect();
    let target = f.alpha * eps;
    for i in 0..x.len() {
        for j in i + 1..x.len() {
            if x.distance(i, j) < eps {
                continue;
            }
            if restricted[i].distance(&restricted[j], p) >= target {
                continue;
            }
            let hit = values[i].iter().zip(&values[j]).any(|(a, b)| (a - b).abs() >= target);
            if !hit {
                return false;
            }
        }
    }
    true
}

/// Passing family sizes at one scale.
#[derive(Debug, Clone, PartialEq)]
pub struct DualScale {
    pub epsilon: f64,
    /// `None` when `|X − X|` exceeded the budget.
    pub cover: Option<usize>,
    pub coordinate: usize,
    pub chosen: usize,
}

#[derive(Debug, Clone)]
pub struct DualEstimate {
    pub scales: Vec<DualScale>,
    pub estimate: DimensionEstimate,
}

impl DualEstimate {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epsilon,quantity,value\n");
        for s in &self.scales {
            if let Some(c) = s.cover {
                out.push_str(&format!("{},cover,{c}\n", s.epsilon));
            }
            out.push_str(&format!("{},coordinate,{}\n{},chosen,{}\n", s.epsilon, s.coordinate, s.epsilon, s.chosen));
        }
        out
    }

    pub fn summary_json(&self) -> Value {
        let mut v = self.estimate.summary_json();
        v["scales"] = self
            .scales
            .iter()
            .map(|s| json!({"epsilon": s.epsilon, "cover": s.cover, "coordinate": s.coordinate, "chosen": s.chosen}))
            .collect();
        v
    }
}

/// Smallest passing family per scale from the two constructions, fitted in
/// log-log coordinates: an upper-bound estimate for the dual thickness.
///
/// With `alpha = None` each construction is checked at its own constant
/// ([`COVER_ALPHA`], [`COORDINATE_ALPHA`]). The cover family uses radius
/// `(1 − α)ε/2`, which makes it pass by construction; it is skipped when
/// `|X|²` exceeds `difference_budget`. Coordinate thresholds are tried from
/// `ε` downwards and always end at the full support, which passes.
pub fn dual_thickness_upper_estimate(
    x: &Cloud,
    ladder: &EpsilonLadder,
    alpha: Option<f64>,
    difference_budget: usize,
) -> Result<DualEstimate> {
    ladder.require_min_len(4)?;
    if let Some(a) = alpha {
        if !(a > 0.0 && a <= 1.0) {
            return Err(Error::InvalidInput(format!("α = {a} must lie in (0, 1]")));
        }
    }
    let cover_alpha = alpha.unwrap_or(COVER_ALPHA);
    let coord_alpha = alpha.unwrap_or(COORDINATE_ALPHA);
    let n = x.len();
    let mut scales = Vec::new();
    for eps in ladder.scales() {
        let cover = if n * n <= difference_budget {
            let r = (1.0 - cover_alpha) * eps / 2.0;
            let fam = FunctionalFamily::new(cover_functionals(x, r, eps - r), cover_alpha, x.p())?;
            if !sigma_check(&fam, x, eps) {
                return Err(Error::Numerical(format!("cover family failed its own check at ε = {eps}")));
            }
            Some(fam.len())
        } else {
            None
        };
        let mut thresholds = vec![eps, eps / 2.0, eps / 4.0, coord_alpha * eps / 2.0, 0.0];
        thresholds.sort_by(|a, b| b.total_cmp(a));
        thresholds.dedup();
        let mut coordinate = None;
        for t in thresholds {
            let fam = coordinate_family(x, t, coord_alpha)?;
            if sigma_check(&fam, x, eps) {
                coordinate = Some(fam.len());
                break;
            }
        }
        let coordinate = coordinate.ok_or_else(|| Error::Numerical("full coordinate family failed".into()))?;
        let chosen = cover.map_or(coordinate, |c| c.min(coordinate));
        scales.push(DualScale { epsilon: eps, cover, coordinate, chosen });
    }
    let estimate = DimensionEstimate::fit(scales.iter().map(|s| ScaleCount { epsilon: s.epsilon, count: s.chosen }).collect());
    Ok(DualEstimate { scales, estimate })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cloud(points: &[&[f64]], p: Exponent) -> Cloud {
        PointCloud::from_vectors("x", points.iter().map(|v| SparseVector::from_dense(v)).collect(), p).unwrap()
    }

    fn harmonic(k: usize, p: Exponent) -> Cloud {
        let v = (1..=k).map(|n| SparseVector::unit(n as u32).scale(1.0 / n as f64)).collect();
        PointCloud::from_vectors("a", v, p).unwrap()
    }

    #[test]
    fn subspace_rejects_dependent_basis() {
        let b = vec![SparseVector::from_dense(&[1.0, 2.0]), SparseVector::from_dense(&[2.0, 4.0])];
        assert!(Subspace::new(b, Exponent::TWO).is_err());
    }

    #[test]
    fn span_centers_small_diameter() {
        let x = cloud(&[&[0.0, 0.0], &[0.1, 0.05], &[0.02, 0.1]], Exponent::TWO);
        assert!(thickness_upper_span_centers(&x, 0.5).dim() <= 1);
    }

    #[test]
    fn span_centers_orthogonal_points() {
        let x = harmonic(6, Exponent::INFINITY);
        let w = span_centers(&x, 0.05);
        assert_eq!(w.subspace.dim(), 6);
        assert!(w.max_distance <= 0.05);
    }

    #[test]
    fn span_centers_feasibility_on_random_cloud() {
        let mut pts = Vec::new();
        let mut s = 7u64;
        let mut next = || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        };
        for _ in 0..40 {
            pts.push(SparseVector::from_dense(&[next(), next(), next(), 0.1 * next()]));
        }
        for p in [Exponent::ONE, Exponent::TWO, Exponent::new(3.0).unwrap(), Exponent::INFINITY] {
            let x = PointCloud::from_vectors("r", pts.clone(), p).unwrap();
            for eps in [0.05, 0.2, 0.7] {
                let v = thickness_upper_span_centers(&x, eps);
                for pt in x.vectors() {
                    let d = dist_to_subspace(pt, &v).unwrap();
                    assert!(d.lower <= eps + 1e-9, "p={p} eps={eps}: {}", d.lower);
                }
                assert!(Subspace::new(v.basis().to_vec(), p).is_ok());
            }
        }
    }

    #[test]
    fn svd_upper_examples() {
        let plane = cloud(&[&[1.0, 2.0, 0.0], &[0.5, -1.0, 0.0], &[3.0, 0.0, 0.0], &[0.0, 1.0, 0.0]], Exponent::TWO);
        assert!(thickness_upper_svd(&plane, 1e-3).unwrap() <= 2);
        let a5 = harmonic(5, Exponent::TWO);
        assert_eq!(thickness_upper_svd(&a5, 0.0).unwrap(), 5);
        // diagonal matrix: dropping direction n leaves residual 1/n on a_n, so
        // k = #{n : 1/n > ε}
        for eps in [0.15, 0.21, 0.3, 0.6] {
            let direct = (1..=5).filter(|&n| 1.0 / n as f64 > eps).count();
            assert_eq!(thickness_upper_svd(&a5, eps).unwrap(), direct);
        }
        assert!(thickness_upper_svd(&a5.with_exponent(Exponent::ONE), 0.1).is_err());
    }

    #[test]
    fn independence_examples() {
        let k = 4;
        let e: Vec<Vector> = (1..=k).map(|i| SparseVector::unit(i as u32)).collect();
        let x = PointCloud::from_vectors("e", e, Exponent::TWO).unwrap();
        let ids: Vec<String> = (1..=k).map(|i| format!("e{i}")).collect();
        let ids: Vec<&str> = ids.iter().map(String::as_str).collect();
        assert!(independence_lower_bound(&x, &ids, 0.49).unwrap());
        assert!(!independence_lower_bound(&x, &ids, 0.51).unwrap());

        for p in [1.0, 1.5, 2.0, 4.0, f64::INFINITY] {
            let p = Exponent::new(p).unwrap();
            let a = harmonic(7, p);
            let ids: Vec<String> = (1..=7).map(|i| format!("a{i}")).collect();
            let ids: Vec<&str> = ids.iter().map(String::as_str).collect();
            let ak = 1.0 / 7.0;
            let eps = 0.5 * ak * 7f64.powf(-p.dual().reciprocal());
            assert!(independence_lower_bound(&a, &ids, eps).unwrap(), "p={p}");
        }

        let dup = cloud(&[&[1.0, 0.5], &[1.0, 0.5]], Exponent::TWO);
        assert!(!independence_lower_bound(&dup, &["x1", "x2"], 0.01).unwrap());
        assert!(independence_lower_bound(&dup, &["x1", "nope"], 0.01).is_err());
    }

    #[test]
    fn dense_block_margin_against_brute_force() {
        // min over the ℓ₁ sphere of a convex function is attained at ± vertices
        // only for p = 1; instead sample the sphere densely and check the margin
        // never exceeds what the samples reach.
        let x = cloud(&[&[1.0, 0.2, 0.0], &[0.3, 1.0, 0.4], &[0.0, -0.5, 1.0]], Exponent::TWO);
        let vecs: Vec<&Vector> = x.vectors().collect();
        for p in [Exponent::ONE, Exponent::TWO, Exponent::new(3.0).unwrap(), Exponent::INFINITY] {
            let margin = independence_margin(&vecs, p);
            assert!(margin > 0.0);
            let steps = 60;
            for a in 0..=steps {
                for b in 0..=(steps - a) {
                    let (l1, l2) = (a as f64 / steps as f64, b as f64 / steps as f64);
                    let l3 = 1.0 - l1 - l2;
                    for signs in 0..8 {
                        let s = |bit: i32| if signs >> bit & 1 == 1 { -1.0 } else { 1.0 };
                        let y = vecs[0].scale(s(0) * l1).add(&vecs[1].scale(s(1) * l2)).add(&vecs[2].scale(s(2) * l3));
                        assert!(y.norm(p) >= margin - 1e-12, "p={p}");
                    }
                }
            }
        }
    }

    #[test]
    fn projection_bound_examples() {
        let a5 = harmonic(5, Exponent::TWO);
        let b = hilbert_projection_lower_bound(&a5, 0.2 / 4.0).unwrap();
        assert!((b - 2.8125).abs() < 1e-12);
        assert!((hilbert_projection_lower_bound(&a5, 1e-12).unwrap() - 5.0).abs() < 1e-9);
        assert!((hilbert_projection_lower_bound(&a5, 0.1).unwrap() - 1.25).abs() < 1e-12);
        let skew = cloud(&[&[1.0, 0.0], &[1.0, 1.0]], Exponent::TWO);
        assert!(hilbert_projection_lower_bound(&skew, 0.1).is_err());
    }

    #[test]
    fn trace_bound_dominates_prefix_formula() {
        let a = harmonic(40, Exponent::TWO);
        for eps in [0.3, 0.05, 0.01] {
            let (trace, ids) = projection_search(&a, eps);
            let best_prefix = (1..=40)
                .filter(|&k| 1.0 / k as f64 > eps)
                .map(|k| hilbert_projection_lower_bound(&a.select(&(0..k).collect::<Vec<_>>()).unwrap(), eps).unwrap())
                .fold(0.0, f64::max);
            assert!(trace as f64 >= best_prefix.ceil() - 1e-9);
            assert!(trace <= thickness_upper_svd(&a, eps).unwrap());
            assert_eq!(ids.len(), (1..=40).filter(|&k| 1.0 / k as f64 > eps).count());
        }
    }

    #[test]
    fn fixed_subspace_has_flat_upper_counts() {
        let mut pts = Vec::new();
        for k in 0..200 {
            let t = k as f64 / 37.0;
            pts.push(SparseVector::from_dense(&[t.sin(), (2.0 * t).cos(), 0.0, 0.3 * t.cos()]));
        }
        let x = PointCloud::from_vectors("s", pts, Exponent::TWO).unwrap();
        let est = thickness_dim_estimate(&x, &EpsilonLadder::new(3, 10).unwrap()).unwrap();
        let fine: Vec<usize> = est.brackets[4..].iter().map(|b| b.upper).collect();
        assert!(fine.iter().all(|&u| u == 3), "{fine:?}");
        assert_eq!(est.upper.window_slopes.last().unwrap().slope, 0.0);
    }

    #[test]
    fn cover_family_two_points() {
        let x = cloud(&[&[0.0, 0.0], &[100.0, 0.0]], Exponent::TWO);
        let f = sigma_family_from_cover(&x, 1.0);
        assert!(!f.is_empty() && f.len() <= 4);
        assert!(sigma_check(&f.with_alpha(0.48).unwrap(), &x, 50.0));
        let single = cloud(&[&[1.0, 2.0]], Exponent::TWO);
        assert!(sigma_family_from_cover(&single, 1.0).is_empty());
    }

    #[test]
    fn empty_family_fails_on_separated_pair() {
        let x = cloud(&[&[0.0], &[1.0]], Exponent::TWO);
        let f = FunctionalFamily::new(Vec::new(), 0.5, Exponent::TWO).unwrap();
        assert!(!sigma_check(&f, &x, 0.5));
    }

    #[test]
    fn coordinate_family_on_orthogonal_sequence() {
        // coordinates with |α_i| ≥ ε/50 separate every
        // pair at distance ≥ 50ε by at least 10ε
        for p in [Exponent::ONE, Exponent::TWO, Exponent::INFINITY] {
            let v = (1..=300).map(|n| SparseVector::unit(n).scale((n as f64).powf(-2.0))).collect();
            let a = PointCloud::from_vectors("a", v, p).unwrap();
            for scale in [0.1, 0.01, 0.001] {
                let fam = coordinate_family(&a, scale / 50.0, 0.2).unwrap();
                assert!(sigma_check(&fam, &a, scale), "p={p} scale={scale}");
            }
        }
    }

    #[test]
    fn cover_family_passes_at_default_constants() {
        let x = cloud(&[&[0.0, 1.0, 0.3], &[0.7, -0.2, 0.0], &[0.1, 0.1, 0.9], &[-1.0, 0.4, 0.2]], Exponent::new(3.0).unwrap());
        let eps = 0.5;
        let f = sigma_family_from_cover(&x, eps / 50.0);
        assert!(sigma_check(&f, &x, eps));
    }

    #[test]
    fn sigma_check_monotone_in_alpha() {
        let x = cloud(&[&[0.0, 1.0], &[0.7, -0.2], &[0.1, 0.1], &[-1.0, 0.4]], Exponent::TWO);
        let fam = coordinate_family(&x, 0.5, 1.0).unwrap();
        let mut passed = false;
        for k in (1..=20).rev() {
            let ok = sigma_check(&fam.with_alpha(k as f64 / 20.0).unwrap(), &x, 0.3);
            assert!(!passed || ok);
            passed |= ok;
        }
    }

    #[test]
    fn dual_estimate_below_resolution_is_flat() {
        let x = cloud(&[&[0.0, 0.0], &[1e-6, 0.0]], Exponent::TWO);
        let est = dual_thickness_upper_estimate(&x, &EpsilonLadder::new(1, 6).unwrap(), None, DEFAULT_DIFFERENCE_BUDGET).unwrap();
        assert_eq!(est.estimate.slope, 0.0);
    }
}
