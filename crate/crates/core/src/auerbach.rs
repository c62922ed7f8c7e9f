//! Auerbach systems: unit vectors `e_i` spanning a subspace with unit-norm
//! ambient functionals `f_i` satisfying `f_i(e_j) = δ_ij`.

use nalgebra::DMatrix;

use crate::distance::distance_to_span;
use crate::error::{Error, Result};
use crate::linalg::{dense_matrix, rank, union_support};
use crate::sequence_space::{Exponent, Functional, SparseVector};
use crate::thickness::Subspace;

type Vector = SparseVector<f64>;

/// Largest subspace dimension handled by [`auerbach_basis`].
pub const AUERBACH_DIM_LIMIT: usize = 32;

/// Accepted dual extension norm.
pub const EXTENSION_ACCEPT: f64 = 1.0 + 1e-6;

/// Extension norm above which the local search is declared failed.
pub const EXTENSION_FAIL: f64 = 1.0 + 1e-3;

const EXCHANGE_TOL: f64 = 1e-10;
const MAX_SWEEPS: usize = 5_000;

#[derive(Debug, Clone)]
pub struct AuerbachSystem {
    basis: Vec<Vector>,
    duals: Vec<Functional<f64>>,
    /// Coefficients of each `e_i` in the input basis (row `i`).
    coefficients: Vec<Vec<f64>>,
    residual: f64,
    extension_norm: f64,
    p: Exponent,
}

impl AuerbachSystem {
    pub fn basis(&self) -> &[Vector] {
        &self.basis
    }

    pub fn duals(&self) -> &[Functional<f64>] {
        &self.duals
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn p(&self) -> Exponent {
        self.p
    }

    /// `max |f_i(e_j) − δ_ij|`.
    pub fn residual(&self) -> f64 {
        self.residual
    }

    /// `max_i 1/dist(e_i, span{e_j : j ≠ i})`: the norm a biorthogonal dual needs.
    pub fn extension_norm(&self) -> f64 {
        self.extension_norm
    }

    /// Coefficients of `e_i` in the basis the system was built from.
    pub fn coefficients(&self) -> &[Vec<f64>] {
        &self.coefficients
    }

    /// `|det|` of the coefficient matrix: the volume being maximized.
    pub fn volume(&self) -> f64 {
        let k = self.dim();
        if k == 0 {
            return 1.0;
        }
        DMatrix::from_fn(k, k, |i, j| self.coefficients[i][j]).determinant().abs()
    }

    /// Coordinates of `v ∈ V` in the basis `e_i`, read off by the duals.
    pub fn coordinates(&self, v: &Vector) -> Vec<f64> {
        self.duals.iter().map(|f| f.apply(v)).collect()
    }
}

fn combine(coeffs: &[f64], vectors: &[Vector]) -> Vector {
    let mut out = SparseVector::zero();
    for (c, v) in coeffs.iter().zip(vectors) {
        if *c != 0.0 {
            out = out.lincomb(1.0, v, *c);
        }
    }
    out
}

struct State {
    coeffs: Vec<Vec<f64>>,
    vectors: Vec<Vector>,
}

impl State {
    fn from_coefficients(coeffs: Vec<Vec<f64>>, input: &[Vector], p: Exponent) -> Self {
        let mut s = State { coeffs: Vec::new(), vectors: Vec::new() };
        for mut c in coeffs {
            let v = combine(&c, input);
            let n = v.norm(p);
            c.iter_mut().for_each(|x| *x /= n);
            s.vectors.push(v.scale(1.0 / n));
            s.coeffs.push(c);
        }
        s
    }

    fn others(&self, i: usize) -> Vec<Vector> {
        self.vectors.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, v)| v.clone()).collect()
    }

    fn volume(&self) -> f64 {
        let k = self.coeffs.len();
        DMatrix::from_fn(k, k, |i, j| self.coeffs[i][j]).determinant().abs()
    }

    /// Replaces `e_i` by its normalized residual against the others while
    /// that residual is shorter than 1; each replacement multiplies the
    /// volume by `1/dist`.
    fn exchange(&mut self, p: Exponent) -> Result<()> {
        let k = self.vectors.len();
        for _ in 0..MAX_SWEEPS {
            let mut changed = false;
            for i in 0..k {
                let others = self.others(i);
                let d = distance_to_span(&self.vectors[i], &others, p)?;
                if d.upper < 1.0 - EXCHANGE_TOL && d.upper > 0.0 {
                    let mut c = self.coeffs[i].clone();
                    let mut slot = 0;
                    for j in 0..k {
                        if j == i {
                            continue;
                        }
                        for (t, x) in c.iter_mut().enumerate() {
                            *x -= d.coefficients[slot] * self.coeffs[j][t];
                        }
                        slot += 1;
                    }
                    c.iter_mut().for_each(|x| *x /= d.upper);
                    self.vectors[i] = d.residual.scale(1.0 / d.upper);
                    self.coeffs[i] = c;
                    changed = true;
                }
            }
            if !changed {
                return Ok(());
            }
        }
        Ok(())
    }
}

/// Deterministic starting coefficient matrices: the input basis, its ℓ₂
/// orthonormalization, and two fixed mixtures.
fn starts(input: &[Vector]) -> Vec<Vec<Vec<f64>>> {
    let k = input.len();
    let identity: Vec<Vec<f64>> = (0..k).map(|i| (0..k).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
    let support = union_support(input.iter());
    let b = dense_matrix(input.iter(), &support);
    // R⁻ᵀ from a QR factorization gives coefficients of an orthonormal basis
    let r = b.clone().qr().r();
    let orth = match r.try_inverse() {
        Some(inv) => (0..k).map(|i| (0..k).map(|j| inv[(j, i)]).collect()).collect(),
        None => identity.clone(),
    };
    let mix = |shift: f64| -> Vec<Vec<f64>> {
        (0..k)
            .map(|i| (0..k).map(|j| if i == j { 1.0 } else { shift / (1.0 + (i + 2 * j) as f64) }).collect())
            .collect()
    };
    let mut out = vec![identity, orth, mix(0.5), mix(-0.7)];
    out.truncate(if k == 1 { 1 } else { 4 });
    out
}

fn finish(state: State, p: Exponent) -> Result<AuerbachSystem> {
    let k = state.vectors.len();
    let mut duals = Vec::with_capacity(k);
    let mut extension = 1.0f64;
    for i in 0..k {
        let d = distance_to_span(&state.vectors[i], &state.others(i), p)?;
        if d.lower <= 0.0 {
            return Err(Error::InvalidInput("dependent basis".into()));
        }
        extension = extension.max(1.0 / d.lower);
        duals.push(d.certificate);
    }
    let mut residual = 0.0f64;
    for (i, f) in duals.iter().enumerate() {
        for (j, e) in state.vectors.iter().enumerate() {
            let target = if i == j { 1.0 } else { 0.0 };
            residual = residual.max((f.apply(e) - target).abs());
        }
    }
    Ok(AuerbachSystem { basis: state.vectors, duals, coefficients: state.coeffs, residual, extension_norm: extension, p })
}

fn hilbert_system(input: &[Vector]) -> Result<AuerbachSystem> {
    let k = input.len();
    let support = union_support(input.iter());
    let b = dense_matrix(input.iter(), &support);
    let qr = b.qr();
    let (q, r) = (qr.q(), qr.r());
    let rinv = r.try_inverse().ok_or_else(|| Error::InvalidInput("dependent basis".into()))?;
    let coeffs: Vec<Vec<f64>> = (0..k).map(|i| (0..k).map(|j| rinv[(j, i)]).collect()).collect();
    let basis: Vec<Vector> = (0..k)
        .map(|i| SparseVector::from_dense_on(&support, q.column(i).as_slice()))
        .collect();
    let duals: Vec<Functional<f64>> = basis.iter().map(|e| Functional(e.clone())).collect();
    let state = State { coeffs, vectors: basis };
    let mut sys = finish(state, Exponent::TWO)?;
    // the orthonormal basis is its own dual; keep the exact form
    sys.duals = duals;
    let mut residual = 0.0f64;
    for (i, f) in sys.duals.iter().enumerate() {
        for (j, e) in sys.basis.iter().enumerate() {
            let target = if i == j { 1.0 } else { 0.0 };
            residual = residual.max((f.apply(e) - target).abs());
        }
    }
    sys.residual = residual;
    Ok(sys)
}

/// Auerbach system of `V` by volume maximization.
///
/// From several deterministic starts, each basis vector is repeatedly
/// replaced by its normalized residual against the span of the others until
/// every such distance is 1 (to `1e−10`); the largest-volume result is kept.
/// At that point the certified distance functionals, which have unit dual
/// norm and vanish on the other vectors, are the duals. For `p = 2` an
/// orthonormal basis is used directly.
pub fn auerbach_basis(v: &Subspace) -> Result<AuerbachSystem> {
    let input = v.basis();
    let p = v.p();
    let k = input.len();
    if k > AUERBACH_DIM_LIMIT {
        return Err(Error::Budget(format!("Auerbach search limited to dimension {AUERBACH_DIM_LIMIT}, got {k}")));
    }
    let refs: Vec<&Vector> = input.iter().collect();
    if rank(&refs) < k {
        return Err(Error::InvalidInput("dependent basis".into()));
    }
    if k == 0 {
        return Ok(AuerbachSystem {
            basis: Vec::new(),
            duals: Vec::new(),
            coefficients: Vec::new(),
            residual: 0.0,
            extension_norm: 1.0,
            p,
        });
    }
    let sys = if p.is_two() {
        hilbert_system(input)?
    } else {
        general_system(input, p)?
    };
    if sys.extension_norm > EXTENSION_FAIL {
        return Err(Error::AuerbachExtension(sys.extension_norm));
    }
    if sys.extension_norm > EXTENSION_ACCEPT {
        return Err(Error::Numerical(format!(
            "Auerbach search did not converge: extension norm {}",
            sys.extension_norm
        )));
    }
    Ok(sys)
}

fn general_system(input: &[Vector], p: Exponent) -> Result<AuerbachSystem> {
    let mut best: Option<State> = None;
    for start in starts(input) {
        let mut s = State::from_coefficients(start, input, p);
        s.exchange(p)?;
        if best.as_ref().map_or(true, |b| s.volume() > b.volume() * (1.0 + 1e-12)) {
            best = Some(s);
        }
    }
    finish(best.expect("at least one start"), p)
}

/// Same search for any `p`, including 2 (used to cross-check the closed form).
#[cfg(test)]
pub(crate) fn auerbach_by_search(v: &Subspace) -> Result<AuerbachSystem> {
    general_system(v.basis(), v.p())
}
