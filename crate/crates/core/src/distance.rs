//! Distance from a point to a finite-dimensional subspace of `ℓ_p`, with a
//! dual certificate.
//!
//! The certificate is a functional `f` with `‖f‖_q = 1` that annihilates the
//! subspace, so `f(x) = f(x − v) ≤ ‖x − v‖_p` for every `v` in the span:
//! `f(x)` is a lower bound on the distance whatever the quality of the primal
//! solution. The problem is solved exactly on the union of supports.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::sequence_space::{norm_of_values, norming_functional, Exponent, Functional, SparseVector};
use crate::linalg::{column_space, connected_to, dense_matrix, union_support};
use crate::simplex;

/// Primal/dual pair for `min_{v ∈ span} ‖x − v‖_p`.
#[derive(Debug, Clone)]
pub struct SubspaceDistance {
    /// `‖x − Σ c_j b_j‖_p` for the returned coefficients.
    pub upper: f64,
    /// `certificate(x)`, a certified lower bound.
    pub lower: f64,
    pub coefficients: Vec<f64>,
    pub residual: SparseVector<f64>,
    /// Unit dual-norm functional vanishing on the span (zero when `x` lies in it).
    pub certificate: Functional<f64>,
}

impl SubspaceDistance {
    pub fn gap(&self) -> f64 {
        self.upper - self.lower
    }
}

fn least_squares(b: &DMatrix<f64>, x: &DVector<f64>) -> DVector<f64> {
    let svd = b.clone().svd(true, true);
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    svd.solve(x, 1e-13 * smax.max(f64::MIN_POSITIVE)).expect("svd solve")
}

fn lp_norm_dense(v: &DVector<f64>, p: Exponent) -> f64 {
    norm_of_values(v.iter().copied(), p)
}

fn power_sum(r: &DVector<f64>, p: f64) -> f64 {
    r.iter().map(|v| v.abs().powf(p)).sum()
}

/// Damped Newton on `Σ|x − Bc|_i^p` for `1 < p < ∞`, started from least squares.
fn smooth_minimize(b: &DMatrix<f64>, x: &DVector<f64>, p: f64) -> DVector<f64> {
    let k = b.ncols();
    let mut c = least_squares(b, x);
    let mut r = x - b * &c;
    let mut f = power_sum(&r, p);
    for _ in 0..10_000 {
        let amax = r.amax();
        if amax == 0.0 {
            break;
        }
        let delta = 1e-10 * amax;
        let grad_r = r.map(|v| p * v.signum() * v.abs().powf(p - 1.0));
        let g = -(b.transpose() * &grad_r);
        let w = r.map(|v| p * (p - 1.0) * v.abs().max(delta).powf(p - 2.0));
        let mut h = DMatrix::zeros(k, k);
        for i in 0..b.nrows() {
            let row = b.row(i);
            h += w[i] * row.transpose() * row;
        }
        let ridge = 1e-14 * (h.trace() / k as f64).max(f64::MIN_POSITIVE);
        for d in 0..k {
            h[(d, d)] += ridge;
        }
        let step = match h.clone().cholesky() {
            Some(ch) => ch.solve(&(-&g)),
            None => match h.lu().solve(&(-&g)) {
                Some(s) => s,
                None => break,
            },
        };
        let slope = g.dot(&step);
        if slope >= 0.0 {
            break;
        }
        let mut t = 1.0;
        let mut accepted = None;
        while t > 1e-14 {
            let cand = &c + t * &step;
            let rc = x - b * &cand;
            let fc = power_sum(&rc, p);
            if fc <= f + 1e-4 * t * slope {
                accepted = Some((cand, rc, fc));
                break;
            }
            t *= 0.5;
        }
        let Some((cn, rn, fnew)) = accepted else { break };
        let improvement = f - fnew;
        c = cn;
        r = rn;
        f = fnew;
        if improvement <= 1e-16 * f.max(f64::MIN_POSITIVE) {
            break;
        }
    }
    c
}

/// `ℓ₁`: min Σ(u + w) with `Bc⁺ − Bc⁻ + u − w = x`. Dual multipliers are the certificate.
fn lp_l1(b: &DMatrix<f64>, x: &DVector<f64>) -> Result<(DVector<f64>, DVector<f64>)> {
    let (m, k) = (b.nrows(), b.ncols());
    let n = 2 * k + 2 * m;
    let mut a = vec![vec![0.0; n]; m];
    for i in 0..m {
        for j in 0..k {
            a[i][j] = b[(i, j)];
            a[i][k + j] = -b[(i, j)];
        }
        a[i][2 * k + i] = 1.0;
        a[i][2 * k + m + i] = -1.0;
    }
    let mut cost = vec![0.0; n];
    for v in cost.iter_mut().skip(2 * k) {
        *v = 1.0;
    }
    let sol = simplex::solve(&a, x.as_slice(), &cost)?;
    let c = DVector::from_fn(k, |j, _| sol.z[j] - sol.z[k + j]);
    Ok((c, DVector::from_vec(sol.y)))
}

/// `ℓ_∞`: min t with `Bc + t − s₁ = x`, `−Bc + t − s₂ = −x`.
fn lp_linf(b: &DMatrix<f64>, x: &DVector<f64>) -> Result<(DVector<f64>, DVector<f64>)> {
    let (m, k) = (b.nrows(), b.ncols());
    let n = 2 * k + 1 + 2 * m;
    let mut a = vec![vec![0.0; n]; 2 * m];
    let mut rhs = vec![0.0; 2 * m];
    for i in 0..m {
        for j in 0..k {
            a[i][j] = b[(i, j)];
            a[i][k + j] = -b[(i, j)];
            a[m + i][j] = -b[(i, j)];
            a[m + i][k + j] = b[(i, j)];
        }
        a[i][2 * k] = 1.0;
        a[m + i][2 * k] = 1.0;
        a[i][2 * k + 1 + i] = -1.0;
        a[m + i][2 * k + 1 + m + i] = -1.0;
        rhs[i] = x[i];
        rhs[m + i] = -x[i];
    }
    let mut cost = vec![0.0; n];
    cost[2 * k] = 1.0;
    let sol = simplex::solve(&a, &rhs, &cost)?;
    let c = DVector::from_fn(k, |j, _| sol.z[j] - sol.z[k + j]);
    let f = DVector::from_fn(m, |i, _| sol.y[i] - sol.y[m + i]);
    Ok((c, f))
}

/// Certified distance from `x` to `span(basis)` in `ℓ_p`.
///
/// Exact least squares for `p = 2`, linear programming for `p ∈ {1, ∞}` and
/// damped Newton otherwise. In every case the certificate is re-projected onto
/// the annihilator of the span and renormalized, so `lower ≤ dist ≤ upper`
/// holds up to rounding.
pub fn distance_to_span(x: &SparseVector<f64>, basis: &[SparseVector<f64>], p: Exponent) -> Result<SubspaceDistance> {
    if x.is_zero() {
        return Ok(SubspaceDistance {
            upper: 0.0,
            lower: 0.0,
            coefficients: vec![0.0; basis.len()],
            residual: SparseVector::zero(),
            certificate: Functional::default(),
        });
    }
    // Basis vectors not linked to x through shared coordinates can only add
    // disjointly supported mass to the residual, which never lowers an ℓ_p norm.
    let linked = connected_to(x, basis);
    let active: Vec<&SparseVector<f64>> = linked.iter().map(|&j| &basis[j]).collect();
    let k = active.len();
    let support = union_support(std::iter::once(x).chain(active.iter().copied()));
    let scale = x.max_abs();
    let xv = DVector::from_vec(x.to_dense_on(&support)) / scale;
    let b = dense_matrix(active.iter().copied(), &support);

    let (c, raw_cert) = if k == 0 {
        (DVector::zeros(0), None)
    } else if p.is_two() {
        (least_squares(&b, &xv), None)
    } else if p.is_one() {
        let (c, f) = lp_l1(&b, &xv)?;
        (c, Some(f))
    } else if p.is_infinite() {
        let (c, f) = lp_linf(&b, &xv)?;
        (c, Some(f))
    } else {
        (smooth_minimize(&b, &xv, p.p()), None)
    };
    let r = &xv - &b * &c;
    let residual = SparseVector::from_dense_on(&support, (&r * scale).as_slice());
    let upper = residual.norm(p);

    let mut f = match raw_cert {
        Some(f) => f,
        None => {
            if r.amax() == 0.0 {
                DVector::zeros(support.len())
            } else {
                let rs = SparseVector::from_dense_on(&support, r.as_slice());
                let j = norming_functional(&rs, p)?;
                DVector::from_vec(j.0.to_dense_on(&support))
            }
        }
    };
    if k > 0 {
        let q = column_space(&b);
        let proj = &q * (q.transpose() * &f);
        f -= proj;
    }
    let fnorm = lp_norm_dense(&f, p.dual());
    let (certificate, lower) = if fnorm == 0.0 || !fnorm.is_finite() {
        (Functional::default(), 0.0)
    } else {
        f /= fnorm;
        let mut fx = f.dot(&xv) * scale;
        if fx < 0.0 {
            f = -f;
            fx = -fx;
        }
        (Functional(SparseVector::from_dense_on(&support, f.as_slice())), fx)
    };
    if !upper.is_finite() || !lower.is_finite() {
        return Err(Error::Numerical("non-finite distance".into()));
    }
    let mut coefficients = vec![0.0; basis.len()];
    for (slot, &j) in linked.iter().enumerate() {
        coefficients[j] = c[slot] * scale;
    }
    Ok(SubspaceDistance {
        upper,
        lower: lower.min(upper),
        coefficients,
        residual,
        certificate,
    })
}
