//! Explicit linear maps into Euclidean space: the blocks `φ_n` built from
//! covers of `X − X` or from approximating subspaces, the weighted direct sum
//! `Φ = ⊕ w_n φ_n`, and Hölder-inverse fitting of any linear map on a cloud.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::auerbach::auerbach_basis;
use crate::cloud::PointCloud;
use crate::covering::{difference_set, greedy_net_assigned};
use crate::ensemble::SampledMap;
use crate::error::{Error, Result};
use crate::sequence_space::{norming_functional, Exponent, Functional, SparseVector};
use crate::thickness::{thickness_upper, UpperWitness};

type Vector = SparseVector<f64>;
type Cloud = PointCloud<f64>;

/// Largest approximating-subspace dimension any block may use.
pub const BLOCK_DIM_CAP: usize = crate::auerbach::AUERBACH_DIM_LIMIT;

/// Pairs whose images are closer than this count as collapsed.
pub const COLLAPSE_TOL: f64 = 1e-14;

/// A linear map from `ℓ_p` into `ℝᵐ`.
pub trait LinearMap {
    fn apply(&self, x: &Vector) -> Vec<f64>;
    fn output_dim(&self) -> usize;
}

fn euclid(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// A finite family of functionals read as a map into `ℝᵐ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Block {
    pub n: i32,
    pub weight: f64,
    pub functionals: Vec<Functional<f64>>,
}

impl Block {
    pub fn m(&self) -> usize {
        self.functionals.len()
    }

    /// Unweighted values `(f_1(x), …, f_m(x))`.
    pub fn values(&self, x: &Vector) -> Vec<f64> {
        self.functionals.iter().map(|f| f.apply(x)).collect()
    }

    /// `√m`: every functional has unit dual norm.
    pub fn operator_bound(&self) -> f64 {
        (self.m() as f64).sqrt()
    }

    /// Largest `|φ(u)|₂` over `samples` random unit vectors supported on the
    /// functionals' coordinates.
    pub fn sampled_operator_norm(&self, p: Exponent, samples: usize, seed: u64) -> f64 {
        let mut support: Vec<u32> = self.functionals.iter().flat_map(|f| f.0.support()).collect();
        support.sort_unstable();
        support.dedup();
        if support.is_empty() {
            return 0.0;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut best = 0.0f64;
        for _ in 0..samples {
            let vals: Vec<f64> = support.iter().map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
            let u = SparseVector::from_dense_on(&support, &vals);
            let n = u.norm(p);
            if n == 0.0 {
                continue;
            }
            best = best.max(euclid(&self.values(&u.scale(1.0 / n))));
        }
        best
    }
}

/// A block `φ_n` together with the separation it was verified to satisfy.
#[derive(Debug, Clone)]
pub struct PhiBlock {
    pub n: i32,
    pub functionals: Vec<Functional<f64>>,
    /// Guaranteed `|φ_n(z)|₂` for `‖z‖ ≥ 2^{−n}`.
    pub level: f64,
    /// Differences that qualified for the check.
    pub checked: usize,
    /// Smallest `|φ_n(z)|₂` observed among them (`∞` if none).
    pub min_value: f64,
    /// `dist(X, V_n)` for subspace-built blocks.
    pub accuracy: Option<f64>,
}

impl PhiBlock {
    pub fn m(&self) -> usize {
        self.functionals.len()
    }
}

/// `|φ(z)|₂ ≥ level`, reading `first` before the rest and stopping early.
fn reaches(functionals: &[Functional<f64>], first: Option<usize>, z: &Vector, level: f64) -> (bool, f64) {
    let target = level * level;
    let mut s = 0.0;
    if let Some(i) = first {
        s += functionals[i].apply(z).powi(2);
        if s >= target {
            return (true, s.sqrt());
        }
    }
    for (i, f) in functionals.iter().enumerate() {
        if Some(i) != first {
            s += f.apply(z).powi(2);
            if s >= target {
                return (true, s.sqrt());
            }
        }
    }
    (s >= target, s.sqrt())
}

fn cover_block(z: &Cloud, n: i32) -> Result<PhiBlock> {
    let p = z.p();
    let radius = (-(n as f64) - 2.0).exp2();
    let (centers, assigned) = greedy_net_assigned(z, radius);
    let fallback = z.support().first().copied().unwrap_or(1);
    let functionals = centers
        .iter()
        .map(|&c| match norming_functional(z.vector(c), p) {
            Ok(f) => f,
            Err(_) => Functional::coordinate(fallback),
        })
        .collect::<Vec<_>>();
    let threshold = (-(n as f64)).exp2();
    let level = (-(n as f64) - 1.0).exp2();
    let mut checked = 0;
    let mut min_value = f64::INFINITY;
    for (k, v) in z.vectors().enumerate() {
        if v.norm(p) < threshold {
            continue;
        }
        checked += 1;
        let (ok, value) = reaches(&functionals, Some(assigned[k]), v, level);
        min_value = min_value.min(value);
        if !ok {
            return Err(Error::Separation(format!(
                "|φ_{n}({})|₂ = {value} < {level} although ‖z‖ ≥ {threshold}",
                z.id(k)
            )));
        }
    }
    Ok(PhiBlock { n, functionals, level, checked, min_value, accuracy: None })
}

/// The cover block: norming functionals of a greedy `2^{−(n+2)}`-net of
/// `X − X`, verified to give `|φ_n(z)|₂ ≥ 2^{−(n+1)}` whenever `‖z‖ ≥ 2^{−n}`.
///
/// `d` is the box-dimension bound the caller works with; it only affects the
/// weights chosen later, not the block.
pub fn build_phi_n(x: &Cloud, n: i32, d: f64) -> Result<PhiBlock> {
    if n < 1 {
        return Err(Error::Precondition(format!("block index must be ≥ 1, got {n}")));
    }
    if !(d >= 0.0) {
        return Err(Error::InvalidInput(format!("dimension bound must be ≥ 0, got {d}")));
    }
    cover_block(&difference_set(x), n)
}

/// `β = 1/(1 − τ)`.
pub fn beta(tau: f64) -> f64 {
    1.0 / (1.0 - tau)
}

/// Constant `C` in the dimension budget `C δ^{−τ}`.
pub const BUDGET_CONSTANT: f64 = 4.0;

/// Dimension allowed for an approximating subspace at accuracy `δ`:
/// `⌊C δ^{−τ}⌋`, capped at [`BLOCK_DIM_CAP`].
pub fn dimension_budget(delta: f64, tau: f64) -> usize {
    let b = (BUDGET_CONSTANT * delta.powf(-tau)).floor();
    if b >= BLOCK_DIM_CAP as f64 {
        BLOCK_DIM_CAP
    } else {
        (b as usize).max(1)
    }
}

fn check_tau(tau: f64) -> Result<()> {
    if !(tau > 0.0 && tau < 1.0) {
        return Err(Error::Precondition(format!("τ must lie in (0, 1), got {tau}")));
    }
    Ok(())
}

/// A subspace `V` with `dist(X, V) ≤ δ` and `dim V ≤ dimension_budget(δ, τ)`.
pub(crate) fn approximating_subspace(x: &Cloud, delta: f64, tau: f64) -> Result<UpperWitness> {
    let budget = dimension_budget(delta, tau);
    let w = thickness_upper(x, delta)?;
    if w.subspace.dim() > budget {
        // coarsest accuracy reachable within the budget, for the report
        let mut achieved = delta;
        for _ in 0..64 {
            achieved *= 2.0;
            if thickness_upper(x, achieved)?.subspace.dim() <= budget {
                break;
            }
        }
        return Err(Error::Budget(format!(
            "accuracy {delta:.3e} needs dimension {} > budget {budget} (τ = {tau}); within budget only {achieved:.3e} is reached",
            w.subspace.dim()
        )));
    }
    Ok(w)
}

/// The subspace block: Auerbach duals of `V_n` with
/// `dist(X, V_n) ≤ 2^{−βn−2}`, verified on every pair to give
/// `|φ_n(x − y)|₂ ≥ 2^{−(βn+1)}` whenever `‖x − y‖ ≥ 2^{−n}`.
pub fn build_phi_n_thickness(x: &Cloud, n: i32, tau: f64) -> Result<PhiBlock> {
    if n < 1 {
        return Err(Error::Precondition(format!("block index must be ≥ 1, got {n}")));
    }
    check_tau(tau)?;
    let b = beta(tau);
    let delta = (-b * n as f64 - 2.0).exp2();
    let w = approximating_subspace(x, delta, tau)?;
    let (sys, achieved) = (auerbach_basis(&w.subspace)?, w.max_distance);
    let functionals = sys.duals().to_vec();
    let p = x.p();
    let threshold = (-(n as f64)).exp2();
    let level = (-(b * n as f64) - 1.0).exp2();
    let mut checked = 0;
    let mut min_value = f64::INFINITY;
    for i in 0..x.len() {
        for j in i + 1..x.len() {
            let z = x.vector(i).sub(x.vector(j));
            if z.norm(p) < threshold {
                continue;
            }
            checked += 1;
            let (ok, value) = reaches(&functionals, None, &z, level);
            min_value = min_value.min(value);
            if !ok {
                return Err(Error::Separation(format!(
                    "|φ_{n}({} − {})|₂ = {value} < {level} although ‖x − y‖ ≥ {threshold}",
                    x.id(i),
                    x.id(j)
                )));
            }
        }
    }
    Ok(PhiBlock { n, functionals, level, checked, min_value, accuracy: Some(achieved) })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum EmbeddingMode {
    /// Cover blocks; `d` bounds the box-counting dimension.
    Cover { d: f64 },
    /// Subspace blocks at thickness bound `τ`.
    Thickness { tau: f64 },
}

impl EmbeddingMode {
    /// Smallest admissible `α` (exclusive).
    pub fn alpha_bound(&self) -> f64 {
        match *self {
            EmbeddingMode::Cover { d } => 1.0 + d,
            EmbeddingMode::Thickness { tau } => (1.0 + tau) / (1.0 - tau),
        }
    }

    /// Weight exponent: `w_n = 2^{(s − α)n}`.
    fn shift(&self) -> f64 {
        match *self {
            EmbeddingMode::Cover { .. } => 1.0,
            EmbeddingMode::Thickness { tau } => beta(tau),
        }
    }
}

/// `Φ(x) = (w_n φ_n(x))_{n = 1..n_max}` in `ℝ^{Σ m_n}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockMap {
    pub p: Exponent,
    pub alpha: f64,
    pub mode: EmbeddingMode,
    pub blocks: Vec<Block>,
    /// `Σ_{n > n_max} w_n √m_n` bound on the discarded blocks.
    pub tail_bound: f64,
    /// `c` in `c‖z‖^α ≤ |Φz|₂` for `‖z‖ ≥ 2^{−n_max}`.
    pub lower_constant: f64,
    /// `Σ w_n √m_n ≥ ‖Φ‖`.
    pub upper_constant: f64,
}

impl LinearMap for BlockMap {
    fn apply(&self, x: &Vector) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.output_dim());
        for b in &self.blocks {
            out.extend(b.functionals.iter().map(|f| b.weight * f.apply(x)));
        }
        out
    }

    fn output_dim(&self) -> usize {
        self.blocks.iter().map(Block::m).sum()
    }
}

/// Outcome of checking `c‖z‖^α ≤ |Φz|₂ ≤ C‖z‖` on every pair.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TwoSidedCheck {
    pub pairs: usize,
    /// Pairs closer than `2^{−n_max}`, outside the truncated guarantee.
    pub unresolved: usize,
    pub lower_ok: bool,
    pub upper_ok: bool,
    /// `min |Φz|₂ / (c‖z‖^α)` over resolved pairs.
    pub lower_margin: f64,
    /// `max |Φz|₂ / (C‖z‖)` over all pairs.
    pub upper_ratio: f64,
}

impl BlockMap {
    pub fn n_max(&self) -> i32 {
        self.blocks.last().map_or(0, |b| b.n)
    }

    pub fn resolution(&self) -> f64 {
        (-(self.n_max() as f64)).exp2()
    }

    /// `(n, m_n)` per block.
    pub fn block_sizes(&self) -> Vec<(i32, usize)> {
        self.blocks.iter().map(|b| (b.n, b.m())).collect()
    }

    /// `Φ(X)` as a cloud in `ℓ₂^m` (coordinates `1..=m`), same ids.
    pub fn image_cloud(&self, x: &Cloud) -> Result<Cloud> {
        let pts = x
            .points()
            .iter()
            .map(|(id, v)| (id.clone(), SparseVector::from_dense(&self.apply(v))))
            .collect();
        PointCloud::new(pts, Exponent::TWO)
    }

    pub fn two_sided_check(&self, x: &Cloud) -> TwoSidedCheck {
        let images: Vec<Vec<f64>> = x.vectors().map(|v| self.apply(v)).collect();
        let resolution = self.resolution();
        let mut out = TwoSidedCheck {
            pairs: 0,
            unresolved: 0,
            lower_ok: true,
            upper_ok: true,
            lower_margin: f64::INFINITY,
            upper_ratio: 0.0,
        };
        for i in 0..x.len() {
            for j in i + 1..x.len() {
                out.pairs += 1;
                let dz = x.distance(i, j);
                let dphi = euclid(&images[i].iter().zip(&images[j]).map(|(a, b)| a - b).collect::<Vec<_>>());
                let up = dphi / (self.upper_constant * dz);
                out.upper_ratio = out.upper_ratio.max(up);
                if dphi > self.upper_constant * dz * (1.0 + 1e-12) {
                    out.upper_ok = false;
                }
                if dz < resolution {
                    out.unresolved += 1;
                    continue;
                }
                let low = self.lower_constant * dz.powf(self.alpha);
                out.lower_margin = out.lower_margin.min(dphi / low);
                if dphi < low {
                    out.lower_ok = false;
                }
            }
        }
        out
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("block map serializes")
    }

    pub fn from_json(v: &serde_json::Value) -> Result<Self> {
        let map: BlockMap = serde_json::from_value(v.clone()).map_err(|e| Error::Parse(format!("block map: {e}")))?;
        if map.blocks.windows(2).any(|w| !(w[1].weight < w[0].weight) || w[1].n <= w[0].n) {
            return Err(Error::InvalidInput("block weights must decrease with n".into()));
        }
        if map.blocks.iter().any(|b| !(b.weight > 0.0)) {
            return Err(Error::InvalidInput("block weights must be positive".into()));
        }
        Ok(map)
    }
}

/// The truncated embedding `Φ = ⊕_{n ≤ n_max} w_n φ_n`.
///
/// Cover mode uses `w_n = 2^{(1−α)n}` and needs `α > 1 + d`; thickness mode
/// uses `w_n = 2^{(β−α)n}` with `β = 1/(1−τ)` and needs
/// `α > (1+τ)/(1−τ)`. In both modes every resolved pair satisfies
/// `|Φz|₂ ≥ 2^{−α−1} min(1, R^{−α}) ‖z‖^α` with `R = diam X`.
pub fn build_hilbert_embedding(x: &Cloud, alpha: f64, mode: EmbeddingMode, n_max: i32) -> Result<BlockMap> {
    if n_max < 4 {
        return Err(Error::Precondition(format!("n_max must be ≥ 4, got {n_max}")));
    }
    match mode {
        EmbeddingMode::Cover { d } if !(d >= 0.0) => {
            return Err(Error::InvalidInput(format!("dimension bound must be ≥ 0, got {d}")))
        }
        EmbeddingMode::Thickness { tau } => check_tau(tau)?,
        _ => {}
    }
    let bound = mode.alpha_bound();
    if !(alpha > bound) {
        let rule = match mode {
            EmbeddingMode::Cover { d } => format!("α > 1 + d = 1 + {d}"),
            EmbeddingMode::Thickness { tau } => format!("α > (1 + τ)/(1 − τ) with τ = {tau}"),
        };
        return Err(Error::Precondition(format!("α = {alpha} violates {rule} = {bound}")));
    }
    let shift = mode.shift();
    let weight = |n: i32| ((shift - alpha) * n as f64).exp2();
    let z = match mode {
        EmbeddingMode::Cover { .. } => Some(difference_set(x)),
        EmbeddingMode::Thickness { .. } => None,
    };
    let mut blocks = Vec::with_capacity(n_max as usize);
    for n in 1..=n_max {
        let phi = match (&z, mode) {
            (Some(z), _) => cover_block(z, n)?,
            (None, EmbeddingMode::Thickness { tau }) => build_phi_n_thickness(x, n, tau)?,
            _ => unreachable!(),
        };
        blocks.push(Block { n, weight: weight(n), functionals: phi.functionals });
    }
    let upper_constant = blocks.iter().map(|b| b.weight * b.operator_bound()).sum();
    let r = x.diameter();
    let lower_constant = (-alpha - 1.0).exp2() * if r > 1.0 { r.powf(-alpha) } else { 1.0 };
    let tail_bound = match mode {
        EmbeddingMode::Cover { .. } => {
            // m_n ≤ |X − X|
            let m = z.as_ref().map_or(1, |z| z.len()) as f64;
            let ratio = (1.0 - alpha).exp2();
            m.sqrt() * ratio.powi(n_max + 1) / (1.0 - ratio)
        }
        EmbeddingMode::Thickness { tau } => {
            // m_n ≤ C 2^{τ(βn+2)}
            let b = beta(tau);
            let ratio = (b - alpha + tau * b / 2.0).exp2();
            (BUDGET_CONSTANT * (2.0 * tau).exp2()).sqrt() * ratio.powi(n_max + 1) / (1.0 - ratio)
        }
    };
    Ok(BlockMap { p: x.p(), alpha, mode, blocks, tail_bound, lower_constant, upper_constant })
}

/// Hölder-inverse fit `‖x − y‖ ≤ C|Lx − Ly|^θ` over all pairs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HolderFit {
    pub theta: f64,
    pub constant: f64,
    pub worst_pair: (String, String),
    /// `max(‖z‖ − C|Lz|^θ)`, nonpositive up to rounding.
    pub residual: f64,
    /// `max |Lz|₂ / ‖z‖`.
    pub lipschitz: f64,
}

/// Fits the Hölder inverse of `map` on `X`.
///
/// With `u = log‖z‖` and `v = log|Lz|₂`, the exponent is read off the chord
/// of the lower envelope between the largest and the smallest distance:
/// `s = (v(u_max) − v(u_min))/(u_max − u_min)` with `v` the smallest image
/// at each end, and `θ = min(1, 1/s)` (1 for a single distance). `C` is then
/// the least constant valid on every pair and `worst_pair` attains it.
pub fn holder_fit(map: &dyn LinearMap, x: &Cloud) -> Result<HolderFit> {
    if x.len() < 2 {
        return Err(Error::Precondition("Hölder fit needs at least two points".into()));
    }
    let images: Vec<Vec<f64>> = x.vectors().map(|v| map.apply(v)).collect();
    let mut pairs = Vec::with_capacity(x.len() * (x.len() - 1) / 2);
    let mut lipschitz = 0.0f64;
    for i in 0..x.len() {
        for j in i + 1..x.len() {
            let dz = x.distance(i, j);
            let dl = euclid(&images[i].iter().zip(&images[j]).map(|(a, b)| a - b).collect::<Vec<_>>());
            if dl < COLLAPSE_TOL {
                return Err(Error::NotInjective(x.id(i).to_string(), x.id(j).to_string()));
            }
            lipschitz = lipschitz.max(dl / dz);
            pairs.push((i, j, dz.ln(), dl.ln()));
        }
    }
    let u_max = pairs.iter().map(|t| t.2).fold(f64::NEG_INFINITY, f64::max);
    let u_min = pairs.iter().map(|t| t.2).fold(f64::INFINITY, f64::min);
    let end = |u: f64| pairs.iter().filter(|t| t.2 == u).map(|t| t.3).fold(f64::INFINITY, f64::min);
    let theta = if u_max - u_min <= 1e-12 {
        1.0
    } else {
        let s = (end(u_max) - end(u_min)) / (u_max - u_min);
        if s <= 1.0 {
            1.0
        } else {
            1.0 / s
        }
    };
    let (mut best, mut wi, mut wj) = (f64::NEG_INFINITY, 0, 0);
    for &(i, j, u, v) in &pairs {
        let c = u - theta * v;
        if c > best {
            best = c;
            wi = i;
            wj = j;
        }
    }
    let constant = best.exp();
    let residual = pairs
        .iter()
        .map(|&(_, _, u, v)| u.exp() - constant * (theta * v).exp())
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(HolderFit {
        theta,
        constant,
        worst_pair: (x.id(wi).to_string(), x.id(wj).to_string()),
        residual,
        lipschitz,
    })
}

/// `L = T ∘ Φ`, realized as functionals on the domain of `Φ`.
pub fn compose_embedding(phi: &BlockMap, t: &SampledMap) -> Result<SampledMap> {
    let m = phi.output_dim();
    if let Some(dim) = t.input_dim() {
        if dim != m {
            return Err(Error::DimensionMismatch { expected: m, got: dim });
        }
    }
    let used = t.rows().iter().filter_map(|r| r.0.support().last()).max().unwrap_or(0) as usize;
    if used > m {
        return Err(Error::DimensionMismatch { expected: m, got: used });
    }
    // (weight, functional) for each output coordinate of Φ, 1-based
    let coords: Vec<(f64, &Functional<f64>)> =
        phi.blocks.iter().flat_map(|b| b.functionals.iter().map(move |f| (b.weight, f))).collect();
    let rows = t
        .rows()
        .iter()
        .map(|r| {
            let mut acc = SparseVector::zero();
            for &(j, tij) in r.0.entries() {
                let (w, f) = coords[j as usize - 1];
                acc = acc.lincomb(1.0, &f.0, tij * w);
            }
            Functional(acc)
        })
        .collect();
    Ok(t.with_rows(rows, phi.p, None))
}
