//! Orthogonal sequences `A = {α_n e_n}` and their closed-form exponents.

use serde::{Deserialize, Serialize};

use crate::cloud::PointCloud;
use crate::covering::EpsilonLadder;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::sequence_space::{Exponent, SparseVector};
use crate::thickness::independence_margin;

/// Finest dyadic exponent used by [`auto_ladder`].
pub const LADDER_CAP: i32 = 11;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decay {
    /// `α_n = n^{−1/d}`.
    Power { d: f64 },
    /// `α_n = e^{−n}`.
    Exponential,
    /// User-supplied nonincreasing positive values (plateaus allowed).
    Custom { values: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrthogonalSequenceSpec {
    pub decay: Decay,
    pub count: usize,
    pub p: Exponent,
}

impl OrthogonalSequenceSpec {
    pub fn power(d: f64, count: usize, p: Exponent) -> Result<Self> {
        if !(d > 0.0 && d.is_finite()) {
            return Err(Error::InvalidInput(format!("decay dimension must be positive, got {d}")));
        }
        Self::checked(OrthogonalSequenceSpec { decay: Decay::Power { d }, count, p })
    }

    pub fn exponential(count: usize, p: Exponent) -> Result<Self> {
        Self::checked(OrthogonalSequenceSpec { decay: Decay::Exponential, count, p })
    }

    pub fn custom(values: Vec<f64>, p: Exponent) -> Result<Self> {
        if values.iter().any(|v| !(*v > 0.0 && v.is_finite())) || values.windows(2).any(|w| w[1] > w[0]) {
            return Err(Error::InvalidInput("custom sequence must be positive and nonincreasing".into()));
        }
        let count = values.len();
        Self::checked(OrthogonalSequenceSpec { decay: Decay::Custom { values }, count, p })
    }

    fn checked(self) -> Result<Self> {
        if self.count < 2 {
            return Err(Error::Precondition(format!("need at least 2 points, got {}", self.count)));
        }
        Ok(self)
    }

    /// `α_1, …, α_K`.
    pub fn alphas(&self) -> Vec<f64> {
        match &self.decay {
            Decay::Power { d } => (1..=self.count).map(|n| (n as f64).powf(-1.0 / d)).collect(),
            Decay::Exponential => (1..=self.count).map(|n| (-(n as f64)).exp()).collect(),
            Decay::Custom { values } => values.clone(),
        }
    }
}

/// `{α_1e_1, …, α_Ke_K}` with ids `a1, …, aK`.
pub fn make_orthogonal_sequence<T: Scalar>(spec: &OrthogonalSequenceSpec) -> Result<PointCloud<T>> {
    let v = spec
        .alphas()
        .into_iter()
        .enumerate()
        .map(|(k, a)| SparseVector::unit(k as u32 + 1).scale(T::of(a)))
        .collect();
    PointCloud::from_vectors("a", v, spec.p)
}

/// `limsup log n / −log α_n`. Power laws give `d`, exponential decay `0`;
/// for a custom sequence the value at `n = K` is returned.
pub fn exact_box_dim(spec: &OrthogonalSequenceSpec) -> f64 {
    match &spec.decay {
        Decay::Power { d } => *d,
        Decay::Exponential => 0.0,
        Decay::Custom { values } => {
            let a = *values.last().expect("nonempty");
            if a >= 1.0 {
                f64::INFINITY
            } else {
                (values.len() as f64).ln() / -a.ln()
            }
        }
    }
}

/// `q·d/(q + d)` with `q` conjugate to `p`; `d` itself when `p = 1`.
pub fn thickness_lower_formula(spec: &OrthogonalSequenceSpec) -> f64 {
    let d = exact_box_dim(spec);
    let q = spec.p.dual();
    if q.is_infinite() {
        d
    } else {
        q.p() * d / (q.p() + d)
    }
}

/// `2d`: the difference set doubles the box-counting dimension.
pub fn expected_difference_dim(spec: &OrthogonalSequenceSpec) -> f64 {
    2.0 * exact_box_dim(spec)
}

/// Dyadic ladder resolved by the truncation: the finest scale stays above
/// `α_K` (and at most [`LADDER_CAP`]), spanning up to ten scales and never
/// fewer than four (coarse scales down to `ε ≥ 1` are used when needed).
pub fn auto_ladder(spec: &OrthogonalSequenceSpec) -> Result<EpsilonLadder> {
    let last = *spec.alphas().last().expect("count ≥ 2");
    let resolved = (-last.log2()).floor() as i32 - 1;
    let n_max = resolved.min(LADDER_CAP);
    if n_max < 1 {
        return Err(Error::Precondition(format!(
            "truncation K = {} resolves no dyadic scale below 1/2",
            spec.count
        )));
    }
    let n_min = (n_max - 9).max(1).min(n_max - 3);
    EpsilonLadder::new(n_min, n_max)
}

/// One step of the schedule `ε_k = ½‖a_k‖k^{−1/q}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SchedulePoint {
    pub k: usize,
    pub epsilon: f64,
    /// `{a_1, …, a_k}` certified independent at `ε_k`, i.e. `d(A, ε_k) ≥ k`.
    pub certified: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleFit {
    pub points: Vec<SchedulePoint>,
    /// Least-squares slope of `log k` against `−log ε_k` over certified points.
    pub slope: f64,
}

/// Certifies `d(A, ε_k) ≥ k` along the schedule for each `k` in `ks`
/// (dyadic `1, 2, 4, …, K` when empty) and fits the certified lower slope.
pub fn certified_schedule(spec: &OrthogonalSequenceSpec, ks: &[usize]) -> Result<ScheduleFit> {
    let alphas = spec.alphas();
    let ks: Vec<usize> = if ks.is_empty() {
        std::iter::successors(Some(1usize), |k| Some(k * 2)).take_while(|&k| k <= spec.count).collect()
    } else {
        ks.to_vec()
    };
    let inv_q = spec.p.dual().reciprocal();
    let a: PointCloud<f64> = make_orthogonal_sequence(spec)?;
    let mut points = Vec::with_capacity(ks.len());
    for &k in &ks {
        if k == 0 || k > spec.count {
            return Err(Error::InvalidInput(format!("schedule index {k} outside 1..={}", spec.count)));
        }
        let eps = 0.5 * alphas[k - 1] * (k as f64).powf(-inv_q);
        let prefix: Vec<&SparseVector<f64>> = (0..k).map(|i| a.vector(i)).collect();
        let certified = independence_margin(&prefix, spec.p) > eps;
        points.push(SchedulePoint { k, epsilon: eps, certified });
    }
    let good: Vec<(f64, f64)> = points
        .iter()
        .filter(|p| p.certified)
        .map(|p| (-p.epsilon.ln(), (p.k as f64).ln()))
        .collect();
    let slope = if good.len() < 2 {
        0.0
    } else {
        let n = good.len() as f64;
        let mx = good.iter().map(|g| g.0).sum::<f64>() / n;
        let my = good.iter().map(|g| g.1).sum::<f64>() / n;
        let sxx: f64 = good.iter().map(|g| (g.0 - mx).powi(2)).sum();
        let sxy: f64 = good.iter().map(|g| (g.0 - mx) * (g.1 - my)).sum();
        if sxx == 0.0 {
            0.0
        } else {
            sxy / sxx
        }
    };
    Ok(ScheduleFit { points, slope })
}
