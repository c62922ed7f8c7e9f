//! Dense two-phase simplex for small standard-form linear programs
//!
//! ```text
//! minimize cᵀz  subject to  A z = b,  z ≥ 0
//! ```
//!
//! Bland's rule throughout, so degenerate problems terminate. Only used for
//! the `ℓ₁` / `ℓ_∞` distance problems, which stay in the low hundreds of rows.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

const TOL: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub z: Vec<f64>,
    /// Multipliers of the equality rows: `c − Aᵀy ≥ 0` at optimality.
    pub y: Vec<f64>,
    pub objective: f64,
}

/// Revised simplex state over `[A | I]` (artificials last). The basis is
/// refactored from the original columns at every step, so roundoff does not
/// accumulate across the many degenerate pivots these problems produce.
struct Revised<'a> {
    a: &'a DMatrix<f64>,
    b: &'a DVector<f64>,
    n: usize,
    basis: Vec<usize>,
}

impl Revised<'_> {
    fn column(&self, j: usize) -> DVector<f64> {
        if j < self.n {
            self.a.column(j).into_owned()
        } else {
            let mut e = DVector::zeros(self.a.nrows());
            e[j - self.n] = 1.0;
            e
        }
    }

    fn basis_matrix(&self) -> DMatrix<f64> {
        let m = self.a.nrows();
        let mut bm = DMatrix::zeros(m, m);
        for (r, &j) in self.basis.iter().enumerate() {
            bm.set_column(r, &self.column(j));
        }
        bm
    }

    /// Minimizes `cost` (indexed over all columns) with entering columns
    /// restricted to `< allowed`. Returns `(x_B, y)`, or `None` if unbounded.
    fn optimize(&mut self, cost: &[f64], allowed: usize, pin_artificials: bool) -> Result<Option<(DVector<f64>, DVector<f64>)>> {
        let m = self.a.nrows();
        let cscale = cost.iter().fold(1.0f64, |s, c| s.max(c.abs()));
        for _ in 0..50_000 {
            let inv = self
                .basis_matrix()
                .try_inverse()
                .ok_or_else(|| Error::Numerical("singular simplex basis".into()))?;
            let xb = &inv * self.b;
            let cb = DVector::from_iterator(m, self.basis.iter().map(|&j| cost[j]));
            let y = inv.tr_mul(&cb);
            let in_basis = |j: usize| self.basis.contains(&j);
            let entering = (0..allowed).find(|&j| {
                !in_basis(j) && cost[j] - self.column(j).dot(&y) < -TOL * cscale
            });
            let Some(j) = entering else { return Ok(Some((xb, y))) };
            let w = &inv * self.column(j);
            let wscale = w.amax().max(1.0);
            let mut leave: Option<(usize, f64)> = None;
            for r in 0..m {
                // artificials stuck at zero must not move in either direction
                let stuck = pin_artificials && self.basis[r] >= allowed && w[r].abs() > TOL * wscale;
                if w[r] > TOL * wscale || stuck {
                    let ratio = if stuck { 0.0 } else { xb[r].max(0.0) / w[r] };
                    let better = match leave {
                        None => true,
                        Some((lr, best)) => {
                            ratio < best - 1e-12 || (ratio <= best + 1e-12 && self.basis[r] < self.basis[lr])
                        }
                    };
                    if better {
                        leave = Some((r, ratio));
                    }
                }
            }
            match leave {
                None => return Ok(None),
                Some((r, _)) => self.basis[r] = j,
            }
        }
        Err(Error::Numerical("simplex iteration limit reached".into()))
    }
}

/// Solves `min cᵀz, A z = b, z ≥ 0` with `A` given row-major (`m` rows of length `n`).
pub fn solve(a: &[Vec<f64>], b: &[f64], c: &[f64]) -> Result<LpSolution> {
    let m = a.len();
    let n = c.len();
    if b.len() != m || a.iter().any(|r| r.len() != n) {
        return Err(Error::Numerical("inconsistent LP dimensions".into()));
    }
    let flipped: Vec<bool> = b.iter().map(|v| *v < 0.0).collect();
    let sign = |r: usize| if flipped[r] { -1.0 } else { 1.0 };
    let am = DMatrix::from_fn(m, n, |r, k| sign(r) * a[r][k]);
    let bv = DVector::from_fn(m, |r, _| sign(r) * b[r]);
    let mut lp = Revised { a: &am, b: &bv, n, basis: (n..n + m).collect() };

    // phase one: minimize the sum of artificials
    let phase_one: Vec<f64> = (0..n + m).map(|j| if j < n { 0.0 } else { 1.0 }).collect();
    let (xb, _) = lp.optimize(&phase_one, n, false)?.ok_or_else(|| Error::Numerical("phase one unbounded".into()))?;
    let infeasibility: f64 = lp.basis.iter().zip(xb.iter()).filter(|(j, _)| **j >= n).map(|(_, v)| *v).sum();
    let bnorm = bv.amax().max(1.0);
    if infeasibility > TOL * bnorm {
        return Err(Error::Numerical("linear program infeasible".into()));
    }

    let mut cost = c.to_vec();
    cost.extend(std::iter::repeat(0.0).take(m));
    let (xb, y) = lp.optimize(&cost, n, true)?.ok_or_else(|| Error::Numerical("linear program unbounded".into()))?;
    let mut z = vec![0.0; n];
    for (r, &j) in lp.basis.iter().enumerate() {
        if j < n {
            z[j] = xb[r].max(0.0);
        }
    }
    let y = (0..m).map(|r| sign(r) * y[r]).collect();
    let objective = c.iter().zip(&z).map(|(ci, zi)| ci * zi).sum();
    Ok(LpSolution { z, y, objective })
}
