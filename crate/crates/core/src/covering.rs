//! ε-nets, packings, difference sets and the box-counting estimator.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::sequence_space::SparseVector;

/// Largest cloud accepted by the exhaustive cover/packing searches.
pub const EXACT_LIMIT: usize = 20;

/// Dyadic scales `ε_n = 2^{-n}` for `n_min ≤ n ≤ n_max`, coarse to fine.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EpsilonLadder {
    pub n_min: i32,
    pub n_max: i32,
}

impl EpsilonLadder {
    pub fn new(n_min: i32, n_max: i32) -> Result<Self> {
        if n_max < n_min {
            return Err(Error::InvalidInput(format!("empty ladder: n_min = {n_min} > n_max = {n_max}")));
        }
        Ok(EpsilonLadder { n_min, n_max })
    }

    pub fn len(&self) -> usize {
        (self.n_max - self.n_min + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn exponents(&self) -> impl Iterator<Item = i32> {
        self.n_min..=self.n_max
    }

    pub fn scales(&self) -> Vec<f64> {
        self.exponents().map(|n| (-(n as f64)).exp2()).collect()
    }

    pub(crate) fn require_min_len(&self, k: usize) -> Result<()> {
        if self.len() < k {
            return Err(Error::Precondition(format!(
                "ladder needs at least {k} scales, has {}",
                self.len()
            )));
        }
        Ok(())
    }
}

/// All pairwise differences `x − y`, deduplicated exactly on coordinates.
///
/// The zero vector comes first with id `0`; every other element is labeled
/// `xid-yid` after the first pair that produced it.
pub fn difference_set<T: Scalar>(x: &PointCloud<T>) -> PointCloud<T> {
    let n = x.len();
    let mut raw: Vec<(usize, SparseVector<T>)> = Vec::with_capacity(n * n.saturating_sub(1) + 1);
    raw.push((0, SparseVector::zero()));
    let mut labels = vec![(usize::MAX, usize::MAX)];
    for i in 0..n {
        for j in 0..n {
            if i != j {
                labels.push((i, j));
                raw.push((raw.len(), x.vector(i).sub(x.vector(j))));
            }
        }
    }
    raw.sort_by(|a, b| a.1.cmp_exact(&b.1).then(a.0.cmp(&b.0)));
    raw.dedup_by(|later, first| later.1.cmp_exact(&first.1).is_eq());
    raw.sort_by_key(|e| e.0);
    let points = raw
        .into_iter()
        .map(|(k, v)| {
            let id = match labels[k] {
                (usize::MAX, _) => "0".to_string(),
                (i, j) => format!("{}-{}", x.id(i), x.id(j)),
            };
            (id, v)
        })
        .collect();
    PointCloud::new(points, x.p()).expect("difference set is nonempty with unique ids")
}

/// Maximal ε-separated subset built by a single scan in cloud order, seeded
/// at the first point.
///
/// A point becomes a center when every existing center is farther than `ε`,
/// so the centers are pairwise more than `ε` apart and every point lies in a
/// closed `ε`-ball around some center: the result is simultaneously a packing
/// and a cover. Candidate centers are found through shared coordinates, which
/// is exact in `ℓ_p`: for disjoint supports `‖x − c‖ ≥ max(‖x‖, ‖c‖)`.
pub fn greedy_net<T: Scalar>(x: &PointCloud<T>, eps: T) -> Vec<usize> {
    greedy_net_assigned(x, eps).0
}

/// [`greedy_net`] together with, for every point, the slot of a center within `ε`.
pub fn greedy_net_assigned<T: Scalar>(x: &PointCloud<T>, eps: T) -> (Vec<usize>, Vec<usize>) {
    let p = x.p();
    let norms: Vec<T> = x.vectors().map(|v| v.norm(p)).collect();
    let mut centers: Vec<usize> = Vec::new();
    let mut assigned: Vec<usize> = Vec::with_capacity(x.len());
    let mut by_coord: HashMap<u32, Vec<usize>> = HashMap::new();
    let mut small: Vec<usize> = Vec::new();
    let mut stamp: Vec<usize> = Vec::new();

    for (i, v) in x.vectors().enumerate() {
        let mut owner = None;
        if norms[i] <= eps {
            owner = small.iter().copied().find(|&c| v.distance(x.vector(centers[c]), p) <= eps);
        }
        if owner.is_none() {
            'coords: for coord in v.support() {
                if let Some(list) = by_coord.get(&coord) {
                    for &c in list {
                        if stamp[c] == i + 1 {
                            continue;
                        }
                        stamp[c] = i + 1;
                        if v.distance(x.vector(centers[c]), p) <= eps {
                            owner = Some(c);
                            break 'coords;
                        }
                    }
                }
            }
        }
        match owner {
            Some(c) => assigned.push(c),
            None => {
                let slot = centers.len();
                centers.push(i);
                assigned.push(slot);
                stamp.push(0);
                for coord in v.support() {
                    by_coord.entry(coord).or_default().push(slot);
                }
                if norms[i] <= eps {
                    small.push(slot);
                }
            }
        }
    }
    (centers, assigned)
}

fn closeness_masks<T: Scalar>(x: &PointCloud<T>, within: impl Fn(T) -> bool) -> Vec<u32> {
    let n = x.len();
    let mut masks = vec![0u32; n];
    for i in 0..n {
        for j in 0..n {
            if within(x.distance(i, j)) {
                masks[i] |= 1 << j;
            }
        }
    }
    masks
}

fn guard_exact<T: Scalar>(x: &PointCloud<T>) -> Result<()> {
    if x.len() > EXACT_LIMIT {
        return Err(Error::Budget(format!(
            "exhaustive search limited to {EXACT_LIMIT} points, cloud has {}",
            x.len()
        )));
    }
    Ok(())
}

/// Minimal number of closed `ε`-balls with centers in `X` covering `X`
/// (exhaustive search; at most [`EXACT_LIMIT`] points).
pub fn exact_min_cover<T: Scalar>(x: &PointCloud<T>, eps: T) -> Result<usize> {
    guard_exact(x)?;
    let n = x.len();
    let balls = closeness_masks(x, |d| d <= eps);
    let full: u32 = if n == 32 { u32::MAX } else { (1u32 << n) - 1 };

    fn search(covered: u32, full: u32, depth: usize, balls: &[u32]) -> bool {
        if covered == full {
            return true;
        }
        if depth == 0 {
            return false;
        }
        let u = (!covered & full).trailing_zeros() as usize;
        (0..balls.len())
            .filter(|&c| balls[c] >> u & 1 == 1)
            .any(|c| search(covered | balls[c], full, depth - 1, balls))
    }

    Ok((1..=n).find(|&k| search(0, full, k, &balls)).unwrap_or(n))
}

/// Result of [`packing_number`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PackingCount {
    pub value: usize,
    /// `false` when the value is only the greedy lower bound.
    pub exact: bool,
}

/// Maximal number of points of `X` with pairwise distances `≥ ε`.
///
/// Exhaustive for clouds of at most [`EXACT_LIMIT`] points, otherwise the
/// greedy net size (a valid lower bound).
pub fn packing_number<T: Scalar>(x: &PointCloud<T>, eps: T) -> PackingCount {
    if x.len() > EXACT_LIMIT {
        return PackingCount { value: greedy_net(x, eps).len(), exact: false };
    }
    let conflicts: Vec<u32> = closeness_masks(x, |d| d < eps)
        .into_iter()
        .enumerate()
        .map(|(i, m)| m & !(1 << i))
        .collect();

    fn best(candidates: u32, chosen: usize, record: &mut usize, conflicts: &[u32]) {
        if candidates == 0 {
            *record = (*record).max(chosen);
            return;
        }
        if chosen + candidates.count_ones() as usize <= *record {
            return;
        }
        let v = candidates.trailing_zeros() as usize;
        best(candidates & !(1 << v) & !conflicts[v], chosen + 1, record, conflicts);
        best(candidates & !(1 << v), chosen, record, conflicts);
    }

    let n = x.len();
    let all: u32 = if n == 32 { u32::MAX } else { (1u32 << n) - 1 };
    let mut record = 0;
    best(all, 0, &mut record, &conflicts);
    PackingCount { value: record, exact: true }
}

/// Count at one scale of a log-log fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaleCount {
    pub epsilon: f64,
    pub count: usize,
}

/// Slope between two consecutive scales.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowSlope {
    pub coarse: f64,
    pub fine: f64,
    pub slope: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bracket {
    pub lower: f64,
    pub upper: f64,
}

impl Bracket {
    pub fn contains_with_slack(&self, value: f64, slack: f64) -> bool {
        self.lower - slack <= value && value <= self.upper + slack
    }
}

/// Log-log regression of counts against `−log ε`.
///
/// `slope` is the global least-squares fit; the finite-scale stand-in for the
/// limsup is the bracket of window slopes over the finest half of the ladder
/// (widened to contain the global slope).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimensionEstimate {
    pub slope: f64,
    pub window_slopes: Vec<WindowSlope>,
    pub bracket: Bracket,
    pub r_squared: f64,
    pub counts: Vec<ScaleCount>,
    /// All counts equal: slope forced to 0 and `r_squared` meaningless.
    pub degenerate: bool,
}

impl DimensionEstimate {
    /// Fits counts taken at the given scales (coarse to fine). Counts below 1
    /// are treated as 1 so that the logarithm stays finite.
    pub fn fit(counts: Vec<ScaleCount>) -> Self {
        let xs: Vec<f64> = counts.iter().map(|c| -c.epsilon.ln()).collect();
        let ys: Vec<f64> = counts.iter().map(|c| (c.count.max(1) as f64).ln()).collect();
        let n = xs.len() as f64;
        let mx = xs.iter().sum::<f64>() / n;
        let my = ys.iter().sum::<f64>() / n;
        let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
        let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();

        let degenerate = syy == 0.0 || sxx == 0.0;
        let (slope, r_squared) = if degenerate {
            (0.0, 0.0)
        } else {
            let slope = sxy / sxx;
            let intercept = my - slope * mx;
            let ss_res: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
            (slope, 1.0 - ss_res / syy)
        };

        let window_slopes: Vec<WindowSlope> = (1..counts.len())
            .map(|k| WindowSlope {
                coarse: counts[k - 1].epsilon,
                fine: counts[k].epsilon,
                slope: (ys[k] - ys[k - 1]) / (xs[k] - xs[k - 1]),
            })
            .collect();
        let start = window_slopes.len().saturating_sub(1) / 2;
        let finest = &window_slopes[start.min(window_slopes.len())..];
        let lower = finest.iter().map(|w| w.slope).fold(slope, f64::min);
        let upper = finest.iter().map(|w| w.slope).fold(slope, f64::max);

        DimensionEstimate {
            slope,
            window_slopes,
            bracket: Bracket { lower, upper },
            r_squared,
            counts,
            degenerate,
        }
    }

    /// Long-format CSV: `epsilon,count,log_count,window_slope`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epsilon,count,log_count,window_slope\n");
        for (k, c) in self.counts.iter().enumerate() {
            let w = if k == 0 { String::new() } else { self.window_slopes[k - 1].slope.to_string() };
            out.push_str(&format!("{},{},{},{}\n", c.epsilon, c.count, (c.count.max(1) as f64).ln(), w));
        }
        out
    }

    pub fn summary_json(&self) -> serde_json::Value {
        serde_json::json!({
            "slope": self.slope,
            "bracket": [self.bracket.lower, self.bracket.upper],
            "r_squared": self.r_squared,
            "degenerate": self.degenerate,
        })
    }
}

/// Greedy-net counts over the ladder, fitted in log-log coordinates.
pub fn box_dim_estimate<T: Scalar>(x: &PointCloud<T>, ladder: &EpsilonLadder) -> Result<DimensionEstimate> {
    ladder.require_min_len(4)?;
    let counts = ladder
        .scales()
        .into_iter()
        .map(|eps| ScaleCount { epsilon: eps, count: greedy_net(x, T::of(eps)).len() })
        .collect();
    Ok(DimensionEstimate::fit(counts))
}
