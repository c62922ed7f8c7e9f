//! Random linear maps `L = (L_1, …, L_k)` with `L_i = Σ_n n^{−α} φ_{i,n}`,
//! each `φ_{i,n}` drawn uniformly from a convex body of functionals spanned
//! by the Auerbach duals of an approximating subspace `V_n`, plus the
//! Monte-Carlo checks of the slab bound and of the bad-set decay.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, Gamma};
use serde::{Deserialize, Serialize};

use crate::cloud::PointCloud;
use crate::covering::{box_dim_estimate, EpsilonLadder};
use crate::auerbach::{auerbach_basis, AuerbachSystem};
use crate::embeddings::{approximating_subspace, beta, holder_fit, LinearMap};
use crate::error::{Error, Result};
use crate::sequence_space::{norm_of_values, Exponent, Functional, SparseVector};

type Vector = SparseVector<f64>;
type Cloud = PointCloud<f64>;

/// Proposals tried per ball sample before giving up.
pub const REJECTION_LIMIT: usize = 10_000;

/// Largest number of blocks an automatically sized ensemble uses.
pub const AUTO_N_MAX_CAP: i32 = 256;

const NORM_SLACK: f64 = 1e-9;

/// Seed of trial `index` under `master` (SplitMix64 finalizer).
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Uniform sample from the unit ball of `ℓ_q^dim`.
///
/// Finite `q`: coordinates `±G^{1/q}` with `G ~ Gamma(1/q)`, divided by
/// `(Σ|g_i|^q + W)^{1/q}` with `W ~ Exp(1)`. `q = ∞`: uniform cube.
pub fn sample_unit_ball_with<R: Rng>(rng: &mut R, dim: usize, q: Exponent) -> Vec<f64> {
    if q.is_infinite() {
        return (0..dim).map(|_| rng.gen_range(-1.0..=1.0)).collect();
    }
    let qq = q.p();
    let gamma = Gamma::new(1.0 / qq, 1.0).expect("valid shape");
    let g: Vec<f64> = (0..dim)
        .map(|_| {
            let r: f64 = rng.sample(gamma);
            let s = if rng.gen::<bool>() { 1.0 } else { -1.0 };
            s * r.powf(1.0 / qq)
        })
        .collect();
    let w: f64 = rng.sample(Exp1);
    let denom = (g.iter().map(|v| v.abs().powf(qq)).sum::<f64>() + w).powf(1.0 / qq);
    g.into_iter().map(|v| v / denom).collect()
}

pub fn sample_unit_ball(dim: usize, q: Exponent, seed: u64) -> Vec<f64> {
    sample_unit_ball_with(&mut ChaCha8Rng::seed_from_u64(seed), dim, q)
}

/// `G_n`: the span of the Auerbach duals of `V_n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleBlock {
    pub n: i32,
    /// Auerbach basis `e_j` of `V_n`.
    pub basis: Vec<Vector>,
    /// Unit-norm duals `f_j`, the basis of `G_n`.
    pub duals: Vec<Functional<f64>>,
    /// Achieved `dist(X, V_n)`; zero for hand-built blocks.
    pub accuracy: f64,
}

impl EnsembleBlock {
    pub fn new(n: i32, basis: Vec<Vector>, duals: Vec<Functional<f64>>, p: Exponent) -> Result<Self> {
        if basis.len() != duals.len() {
            return Err(Error::DimensionMismatch { expected: basis.len(), got: duals.len() });
        }
        for f in &duals {
            let norm = f.dual_norm(p);
            if (norm - 1.0).abs() > 1e-8 {
                return Err(Error::InvalidInput(format!("block {n}: dual norm {norm} is not 1")));
            }
        }
        Ok(EnsembleBlock { n, basis, duals, accuracy: 0.0 })
    }

    pub fn dim(&self) -> usize {
        self.duals.len()
    }

    /// `Σ c_j f_j`.
    pub fn combine(&self, c: &[f64]) -> Functional<f64> {
        let mut acc = SparseVector::zero();
        for (cj, f) in c.iter().zip(&self.duals) {
            if *cj != 0.0 {
                acc = acc.lincomb(1.0, &f.0, *cj);
            }
        }
        Functional(acc)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSpec {
    pub p: Exponent,
    pub alpha: f64,
    pub k: usize,
    pub blocks: Vec<EnsembleBlock>,
}

impl EnsembleSpec {
    pub fn new(blocks: Vec<EnsembleBlock>, alpha: f64, k: usize, p: Exponent) -> Result<Self> {
        if !(alpha > 1.0) {
            return Err(Error::Precondition(format!("α must exceed 1, got {alpha}")));
        }
        if k == 0 {
            return Err(Error::Precondition("k must be ≥ 1".into()));
        }
        if blocks.iter().enumerate().any(|(i, b)| b.n != i as i32 + 1) {
            return Err(Error::InvalidInput("blocks must be numbered 1, 2, …".into()));
        }
        Ok(EnsembleSpec { p, alpha, k, blocks })
    }

    pub fn n_max(&self) -> i32 {
        self.blocks.len() as i32
    }

    pub fn dims(&self) -> Vec<usize> {
        self.blocks.iter().map(EnsembleBlock::dim).collect()
    }

    /// `Σ_{n ≤ n_max} n^{−α}`, the bound on every row norm.
    pub fn row_norm_bound(&self) -> f64 {
        (1..=self.blocks.len()).map(|n| (n as f64).powf(-self.alpha)).sum()
    }

    fn block(&self, n: i32) -> Result<&EnsembleBlock> {
        if n < 1 || n > self.n_max() {
            return Err(Error::Precondition(format!("block {n} outside 1..={}", self.n_max())));
        }
        Ok(&self.blocks[n as usize - 1])
    }

    /// Uniform coefficients `c` in the `ℓ_q` ball with `‖Σ c_j f_j‖_q ≤ 1`.
    fn sample_coefficients<R: Rng>(&self, rng: &mut R, block: &EnsembleBlock) -> Result<Vec<f64>> {
        let q = self.p.dual();
        if block.dim() == 0 {
            return Ok(Vec::new());
        }
        for _ in 0..REJECTION_LIMIT {
            let c = sample_unit_ball_with(rng, block.dim(), q);
            if block.combine(&c).dual_norm(self.p) <= 1.0 + NORM_SLACK {
                return Ok(c);
            }
        }
        Err(Error::Budget(format!(
            "block {}: no admissible functional in {REJECTION_LIMIT} proposals",
            block.n
        )))
    }
}

/// Schedule of `V_n` accuracies: `2^{−θnβ}/3` with `β = 1/(1 − τ)`.
pub fn schedule_accuracy(n: i32, theta: f64, tau: f64) -> f64 {
    (-theta * n as f64 * beta(tau)).exp2() / 3.0
}

/// `G_1, …, G_{n_max}` from approximating subspaces at the scheduled
/// accuracies, each within the dimension budget `⌊Cδ^{−τ}⌋`.
pub fn build_subspace_sequence(x: &Cloud, tau: f64, theta: f64, n_max: i32) -> Result<Vec<EnsembleBlock>> {
    if !(tau > 0.0 && tau < 1.0) {
        return Err(Error::Precondition(format!("τ must lie in (0, 1), got {tau}")));
    }
    if !(theta > 0.0) {
        return Err(Error::Precondition(format!("θ must be positive, got {theta}")));
    }
    if n_max < 1 {
        return Err(Error::Precondition(format!("n_max must be ≥ 1, got {n_max}")));
    }
    let mut blocks = Vec::with_capacity(n_max as usize);
    let mut last: Option<(Vec<Vector>, AuerbachSystem)> = None;
    for n in 1..=n_max {
        let delta = schedule_accuracy(n, theta, tau);
        let w = approximating_subspace(x, delta, tau).map_err(|e| match e {
            Error::Budget(m) => Error::Budget(format!("block {n}: {m}")),
            other => other,
        })?;
        let achieved = w.max_distance;
        // the subspace stops changing once it captures X
        let sys = match &last {
            Some((basis, sys)) if basis.as_slice() == w.subspace.basis() => sys.clone(),
            _ => auerbach_basis(&w.subspace)?,
        };
        last = Some((w.subspace.basis().to_vec(), sys.clone()));
        if achieved > delta * (1.0 + 1e-9) {
            return Err(Error::Numerical(format!("block {n}: distance {achieved} exceeds schedule {delta}")));
        }
        blocks.push(EnsembleBlock { n, basis: sys.basis().to_vec(), duals: sys.duals().to_vec(), accuracy: achieved });
    }
    Ok(blocks)
}

/// A linear map into `ℝᵏ` given by its rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledMap {
    seed: Option<u64>,
    alpha: f64,
    p: Exponent,
    /// Set when the domain is `ℝ^m` (coordinates `1..=m`).
    input_dim: Option<usize>,
    /// `coefficients[i][n−1]`: coordinates of `φ_{i,n}` in the basis of `G_n`.
    coefficients: Vec<Vec<Vec<f64>>>,
    rows: Vec<Functional<f64>>,
}

impl SampledMap {
    /// A map with prescribed rows and no ensemble coefficients.
    pub fn from_rows(rows: Vec<Functional<f64>>, p: Exponent, input_dim: Option<usize>) -> Self {
        SampledMap { seed: None, alpha: 0.0, p, input_dim, coefficients: Vec::new(), rows }
    }

    /// Identity of `ℝ^m`.
    pub fn identity(m: usize) -> Self {
        Self::from_rows((1..=m as u32).map(Functional::coordinate).collect(), Exponent::TWO, Some(m))
    }

    pub(crate) fn with_rows(&self, rows: Vec<Functional<f64>>, p: Exponent, input_dim: Option<usize>) -> Self {
        SampledMap { rows, p, input_dim, ..self.clone() }
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn p(&self) -> Exponent {
        self.p
    }

    pub fn input_dim(&self) -> Option<usize> {
        self.input_dim
    }

    pub fn rows(&self) -> &[Functional<f64>] {
        &self.rows
    }

    pub fn coefficients(&self) -> &[Vec<Vec<f64>>] {
        &self.coefficients
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("sampled map serializes")
    }
}

impl LinearMap for SampledMap {
    fn apply(&self, x: &Vector) -> Vec<f64> {
        self.rows.iter().map(|r| r.apply(x)).collect()
    }

    fn output_dim(&self) -> usize {
        self.rows.len()
    }
}

/// Draws `L` with `L_i = Σ_n n^{−α} φ_{i,n}`; rows are sampled in order
/// `i = 1..k`, blocks `n = 1..n_max` within each row.
pub fn sample_map(spec: &EnsembleSpec, seed: u64) -> Result<SampledMap> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut coefficients = Vec::with_capacity(spec.k);
    let mut rows = Vec::with_capacity(spec.k);
    for _ in 0..spec.k {
        let mut per_block = Vec::with_capacity(spec.blocks.len());
        let mut row = SparseVector::zero();
        for b in &spec.blocks {
            let c = spec.sample_coefficients(&mut rng, b)?;
            let w = (b.n as f64).powf(-spec.alpha);
            row = row.lincomb(1.0, &b.combine(&c).0, w);
            per_block.push(c);
        }
        coefficients.push(per_block);
        rows.push(Functional(row));
    }
    Ok(SampledMap { seed: Some(seed), alpha: spec.alpha, p: spec.p, input_dim: None, coefficients, rows })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SlabCheck {
    pub empirical: f64,
    pub bound: f64,
    /// Binomial standard deviation at `min(bound, 1)`.
    pub sigma: f64,
    pub trials: usize,
}

impl SlabCheck {
    pub fn within(&self, sigmas: f64) -> bool {
        self.empirical <= self.bound + sigmas * self.sigma
    }
}

/// Frequency of `|a + φ(x)| ≤ ε` for `φ` uniform in block `n`, against the
/// bound `d_n ε/|g(x)|` for a functional `g` of the same body.
#[allow(clippy::too_many_arguments)]
pub fn check_slab_bound(
    spec: &EnsembleSpec,
    n: i32,
    x: &Vector,
    a: f64,
    eps: f64,
    g: &Functional<f64>,
    trials: usize,
    seed: u64,
) -> Result<SlabCheck> {
    let block = spec.block(n)?;
    if block.dim() == 0 {
        return Err(Error::Precondition(format!("block {n} is trivial")));
    }
    if trials == 0 || !(eps > 0.0) {
        return Err(Error::Precondition("need trials ≥ 1 and ε > 0".into()));
    }
    // coordinates of g in G_n are g(e_j); g must be recovered from them
    let cg: Vec<f64> = block.basis.iter().map(|e| g.apply(e)).collect();
    let rebuilt = block.combine(&cg);
    let q = spec.p.dual();
    if rebuilt.0.distance(&g.0, q) > 1e-9 * g.0.norm(q).max(1.0) {
        return Err(Error::Precondition(format!("g is not in G_{n}")));
    }
    if norm_of_values(cg.iter().copied(), q) > 1.0 + NORM_SLACK || g.dual_norm(spec.p) > 1.0 + NORM_SLACK {
        return Err(Error::Precondition("g lies outside the sampled ball".into()));
    }
    let gx = g.apply(x);
    if gx == 0.0 {
        return Err(Error::Precondition("g(x) = 0".into()));
    }
    let fx: Vec<f64> = block.duals.iter().map(|f| f.apply(x)).collect();
    let mut hits = 0usize;
    for t in 0..trials {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, t as u64));
        let c = spec.sample_coefficients(&mut rng, block)?;
        let v: f64 = c.iter().zip(&fx).map(|(ci, fi)| ci * fi).sum();
        if (a + v).abs() <= eps {
            hits += 1;
        }
    }
    let bound = block.dim() as f64 * eps / gx.abs();
    let pb = bound.min(1.0);
    Ok(SlabCheck {
        empirical: hits as f64 / trials as f64,
        bound,
        sigma: (pb * (1.0 - pb) / trials as f64).sqrt(),
        trials,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BadSetEstimate {
    pub n: i32,
    pub theta: f64,
    /// `|Z_n|` counted over unordered pairs.
    pub pairs: usize,
    pub fraction: f64,
    pub sigma: f64,
    pub trials: usize,
}

/// Fractions of maps in `Q_n = {L : |Lz|₂ ≤ 2^{−n} for some z ∈ Z_n}`,
/// `Z_n = {z ∈ X − X : ‖z‖ ≥ 2^{−θn}}`, for every `(θ, n)` requested. Trial
/// `t` uses the map seeded by `derive_seed(seed, t)` for every `(θ, n)`.
pub fn estimate_bad_sets(
    spec: &EnsembleSpec,
    x: &Cloud,
    thetas: &[f64],
    ns: &[i32],
    trials: usize,
    seed: u64,
) -> Result<Vec<BadSetEstimate>> {
    if trials < 100 {
        return Err(Error::Precondition(format!("bad-set estimates need ≥ 100 trials, got {trials}")));
    }
    let pairs: Vec<(usize, usize, f64)> = (0..x.len())
        .flat_map(|i| (i + 1..x.len()).map(move |j| (i, j)))
        .map(|(i, j)| (i, j, x.distance(i, j)))
        .collect();
    let cells: Vec<(f64, i32)> = thetas.iter().flat_map(|&t| ns.iter().map(move |&n| (t, n))).collect();
    let mut hits = vec![0usize; cells.len()];
    for t in 0..trials {
        let map = sample_map(spec, derive_seed(seed, t as u64))?;
        let images: Vec<Vec<f64>> = x.vectors().map(|v| map.apply(v)).collect();
        let image_dist: Vec<f64> = pairs
            .iter()
            .map(|&(i, j, _)| images[i].iter().zip(&images[j]).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt())
            .collect();
        for (c, &(theta, n)) in cells.iter().enumerate() {
            let floor = (-theta * n as f64).exp2();
            let level = (-(n as f64)).exp2();
            if pairs.iter().zip(&image_dist).any(|(pr, &d)| pr.2 >= floor && d <= level) {
                hits[c] += 1;
            }
        }
    }
    Ok(cells
        .iter()
        .zip(hits)
        .map(|(&(theta, n), h)| {
            let floor = (-theta * n as f64).exp2();
            let f = h as f64 / trials as f64;
            BadSetEstimate {
                n,
                theta,
                pairs: pairs.iter().filter(|p| p.2 >= floor).count(),
                fraction: f,
                sigma: (f * (1.0 - f) / trials as f64).sqrt(),
                trials,
            }
        })
        .collect())
}

pub fn estimate_bad_set(spec: &EnsembleSpec, x: &Cloud, theta: f64, n: i32, trials: usize, seed: u64) -> Result<f64> {
    Ok(estimate_bad_sets(spec, x, &[theta], &[n], trials, seed)?[0].fraction)
}

/// Shape `2^{2nd}(n² 2^{nβθτ} 2^{−n} 2^{θβn})^k` of the bad-set bound.
pub fn bad_set_bound_shape(n: i32, d: f64, k: usize, theta: f64, tau: f64) -> f64 {
    let b = beta(tau);
    let nf = n as f64;
    let inner = nf * nf * (nf * b * theta * tau - nf + theta * b * nf).exp2();
    (2.0 * nf * d).exp2() * inner.powi(k as i32)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateConfig {
    pub k: usize,
    pub theta: f64,
    pub tau: f64,
    /// Box-dimension bound; estimated from `X` when absent.
    pub d: Option<f64>,
    pub alpha: f64,
    /// Number of blocks; sized from the smallest distance when absent.
    pub n_max: Option<i32>,
    pub trials: usize,
    pub seed: u64,
}

impl RateConfig {
    pub fn new(k: usize, theta: f64, tau: f64, trials: usize, seed: u64) -> Self {
        RateConfig { k, theta, tau, d: None, alpha: 2.0, n_max: None, trials, seed }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateTrial {
    pub trial: usize,
    pub seed: u64,
    /// `None` when the map collapsed a pair.
    pub theta_fit: Option<f64>,
    pub success: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateReport {
    pub d: f64,
    pub threshold: f64,
    pub n_max: i32,
    pub dims: Vec<usize>,
    pub fraction: f64,
    pub trials: Vec<RateTrial>,
}

/// Upper end of the box-dimension bracket over the dyadic scales between the
/// diameter and the smallest distance of `X`.
pub fn box_dim_upper(x: &Cloud) -> Result<f64> {
    let (Some(min), diam) = (x.min_pairwise_distance(), x.diameter()) else {
        return Ok(0.0);
    };
    let n_min = (-diam.log2()).floor() as i32 + 1;
    let n_max = (-min.log2()).floor() as i32;
    let ladder = EpsilonLadder::new(n_min.min(n_max - 3), n_max)?;
    let est = box_dim_estimate(x, &ladder)?;
    Ok(est.bracket.upper.max(0.0))
}

/// Fraction of sampled `L : X → ℝᵏ` whose fitted Hölder
/// exponent reaches `θ`, after checking `k > 2d` and
/// `θ < (1 − τ)(k − 2d)/(k(1 + τ))`.
pub fn verify_theorem_rate(x: &Cloud, cfg: &RateConfig) -> Result<RateReport> {
    let d = match cfg.d {
        Some(d) => d,
        None => box_dim_upper(x)?,
    };
    let k = cfg.k as f64;
    if !(k > 2.0 * d) {
        return Err(Error::Precondition(format!("need k > 2·d_B: k = {}, d = {d}", cfg.k)));
    }
    let threshold = (1.0 - cfg.tau) * (k - 2.0 * d) / (k * (1.0 + cfg.tau));
    if !(cfg.theta > 0.0 && cfg.theta < threshold) {
        return Err(Error::Precondition(format!(
            "need 0 < θ < (1 − τ)(k − 2d)/(k(1 + τ)) = {threshold}: θ = {}, τ = {}, k = {}, d = {d}",
            cfg.theta, cfg.tau, cfg.k
        )));
    }
    let n_max = match cfg.n_max {
        Some(n) => n,
        None => {
            let min = x.min_pairwise_distance().unwrap_or(1.0);
            (((1.0 / min).log2() / cfg.theta).ceil() as i32).clamp(4, AUTO_N_MAX_CAP)
        }
    };
    let blocks = build_subspace_sequence(x, cfg.tau, cfg.theta, n_max)?;
    let spec = EnsembleSpec::new(blocks, cfg.alpha, cfg.k, x.p())?;
    let mut trials = Vec::with_capacity(cfg.trials);
    for t in 0..cfg.trials {
        let seed = derive_seed(cfg.seed, t as u64);
        let map = sample_map(&spec, seed)?;
        let fit = match holder_fit(&map, x) {
            Ok(f) => Some(f.theta),
            Err(Error::NotInjective(..)) => None,
            Err(e) => return Err(e),
        };
        trials.push(RateTrial { trial: t, seed, theta_fit: fit, success: fit.is_some_and(|th| th >= cfg.theta) });
    }
    let fraction = if trials.is_empty() {
        0.0
    } else {
        trials.iter().filter(|t| t.success).count() as f64 / trials.len() as f64
    };
    Ok(RateReport { d, threshold, n_max, dims: spec.dims(), fraction, trials })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line_spec(p: Exponent) -> EnsembleSpec {
        let b = EnsembleBlock::new(1, vec![SparseVector::unit(1)], vec![Functional::coordinate(1)], p).unwrap();
        EnsembleSpec::new(vec![b], 2.0, 1, p).unwrap()
    }

    #[test]
    fn balls_are_respected() {
        for q in [1.0, 1.5, 2.0, 4.0, f64::INFINITY] {
            let q = Exponent::new(q).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(3);
            for _ in 0..2000 {
                let v = sample_unit_ball_with(&mut rng, 4, q);
                assert!(norm_of_values(v.iter().copied(), q) <= 1.0);
            }
        }
        assert_eq!(sample_unit_ball(3, Exponent::TWO, 9), sample_unit_ball(3, Exponent::TWO, 9));
    }

    #[test]
    fn disk_radial_law() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 100_000;
        let mean: f64 = (0..n)
            .map(|_| {
                let v = sample_unit_ball_with(&mut rng, 2, Exponent::TWO);
                v[0].hypot(v[1])
            })
            .sum::<f64>()
            / n as f64;
        assert!((mean - 2.0 / 3.0).abs() < 0.02, "{mean}");
    }

    #[test]
    fn one_dimensional_map() {
        let spec = line_spec(Exponent::ONE);
        let m = sample_map(&spec, 5).unwrap();
        assert_eq!(m.output_dim(), 1);
        let c = m.coefficients()[0][0][0];
        assert!(c.abs() <= 1.0);
        assert_eq!(m.apply(&SparseVector::unit(1)), vec![c]);
        assert_eq!(sample_map(&spec, 5).unwrap().to_json(), m.to_json());
        assert_ne!(sample_map(&spec, 6).unwrap(), m);
    }

    #[test]
    fn slab_on_an_interval() {
        let spec = line_spec(Exponent::ONE);
        let s = check_slab_bound(&spec, 1, &SparseVector::unit(1), 0.0, 0.1, &Functional::coordinate(1), 100_000, 1)
            .unwrap();
        assert!((s.bound - 0.1).abs() < 1e-15);
        assert!((s.empirical - 0.1).abs() < 4.0 * s.sigma, "{s:?}");
        assert!(s.within(3.0));
        let zero = check_slab_bound(&spec, 1, &SparseVector::unit(2), 0.0, 0.1, &Functional::coordinate(1), 10, 1);
        assert!(zero.is_err());
        let big = check_slab_bound(&spec, 1, &SparseVector::unit(1), 0.3, 2.0, &Functional::coordinate(1), 1000, 1)
            .unwrap();
        assert!(big.empirical <= 1.0 && big.bound >= 1.0);
    }

    #[test]
    fn plane_sequence_stays_small() {
        let x = PointCloud::from_vectors(
            "x",
            vec![
                SparseVector::from_dense(&[1.0, 2.0, 0.0]),
                SparseVector::from_dense(&[0.0, 1.0, 1.0]),
                SparseVector::from_dense(&[0.5, 2.0, 1.0]),
                SparseVector::from_dense(&[-1.0, 0.0, 2.0]),
            ],
            Exponent::new(1.5).unwrap(),
        )
        .unwrap();
        let blocks = build_subspace_sequence(&x, 0.5, 0.2, 6).unwrap();
        assert!(blocks.iter().all(|b| b.dim() <= 2));
        assert!(build_subspace_sequence(&x, 1.0, 0.2, 6).is_err());
    }

    #[test]
    fn rate_parameters_are_checked() {
        let x = PointCloud::from_vectors("x", vec![SparseVector::zero(), SparseVector::unit(1)], Exponent::TWO).unwrap();
        let mut cfg = RateConfig::new(1, 0.9, 0.5, 10, 1);
        cfg.d = Some(0.0);
        let err = verify_theorem_rate(&x, &cfg).unwrap_err();
        assert!(err.to_string().contains("(1 − τ)(k − 2d)/(k(1 + τ))"));
        cfg.theta = 0.2;
        let r = verify_theorem_rate(&x, &cfg).unwrap();
        assert!(r.fraction >= 0.95);
    }
}
