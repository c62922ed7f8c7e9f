//! Acceptance criteria. Runs without the libtest harness so every criterion
//! prints exactly one PASS/FAIL line.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command as Process;
use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use thicklab::auerbach::auerbach_basis;
use thicklab::embeddings::{build_hilbert_embedding, build_phi_n, holder_fit, EmbeddingMode, LinearMap};
use thicklab::ensemble::{
    box_dim_upper, build_subspace_sequence, check_slab_bound, estimate_bad_sets, verify_theorem_rate, EnsembleSpec,
    RateConfig,
};
use thicklab::io::write_cloud_jsonl;
use thicklab::lp_examples::{
    auto_ladder, certified_schedule, make_orthogonal_sequence, thickness_lower_formula, OrthogonalSequenceSpec,
};
use thicklab::report::{self, Command, RunConfig};
use thicklab::thickness::{
    hilbert_projection_lower_bound, thickness_bracket, thickness_dim_estimate, Subspace,
};
use thicklab::{
    box_dim_estimate, difference_set, exact_min_cover, greedy_net, packing_number, Cloud, Exponent,
    SparseVector, Vector,
};

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn exps() -> [Exponent; 3] {
    [Exponent::ONE, Exponent::TWO, Exponent::INFINITY]
}

fn seq(d: f64, k: usize, p: Exponent) -> (OrthogonalSequenceSpec, Cloud) {
    let spec = OrthogonalSequenceSpec::power(d, k, p).unwrap();
    let a = make_orthogonal_sequence(&spec).unwrap();
    (spec, a)
}

fn dense_cloud(rng: &mut ChaCha8Rng, n: usize, m: usize, p: Exponent) -> Cloud {
    let v: Vec<Vector> = (0..n)
        .map(|_| {
            let c: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect();
            SparseVector::from_dense(&c)
        })
        .collect();
    Cloud::from_vectors("x", v, p).unwrap()
}

fn tempdir() -> tempfile::TempDir {
    tempfile::tempdir().unwrap()
}

fn criterion_1() -> Outcome {
    let dir = tempdir();
    let mut worst = Duration::ZERO;
    for d in [0.5, 1.0, 2.0] {
        for p in exps() {
            let (spec, a) = seq(d, 4096, p);
            let input = dir.path().join("a.jsonl");
            write_cloud_jsonl(&a, std::fs::File::create(&input).unwrap()).unwrap();
            let ladder = auto_ladder(&spec).unwrap();
            let mut cfg = RunConfig::new(Command::DimBox, dir.path().join("out"));
            cfg.input = Some(input);
            cfg.p = p;
            cfg.n_min = Some(ladder.n_min);
            cfg.n_max = Some(ladder.n_max);
            let t = Instant::now();
            let rep = report::run(&cfg).map_err(|e| e.to_string())?;
            let el = t.elapsed();
            worst = worst.max(el);
            let lo = rep.summary["bracket"][0].as_f64().unwrap();
            let hi = rep.summary["bracket"][1].as_f64().unwrap();
            ensure(lo - 0.15 <= d && d <= hi + 0.15, || format!("d={d} p={p:?}: bracket [{lo:.3}, {hi:.3}]"))?;
            ensure(el <= Duration::from_secs(120), || format!("d={d} p={p:?}: {el:?}"))?;
        }
    }
    Ok(format!("9 cases, slowest {worst:.1?}"))
}

fn criterion_2() -> Outcome {
    let t = Instant::now();
    let mut slopes = Vec::new();
    for d in [0.5, 1.0, 2.0] {
        for p in exps() {
            let (spec, a) = seq(d, 512, p);
            let z = difference_set(&a);
            let est = box_dim_estimate(&z, &auto_ladder(&spec).unwrap()).map_err(|e| e.to_string())?;
            ensure((est.slope - 2.0 * d).abs() <= 0.25, || format!("d={d} p={p:?}: slope {:.3}", est.slope))?;
            slopes.push(est.slope);
        }
    }
    let el = t.elapsed();
    ensure(el <= Duration::from_secs(300), || format!("runtime {el:?}"))?;
    Ok(format!("slopes {:?} in {el:.1?}", slopes.iter().map(|s| (s * 100.0).round() / 100.0).collect::<Vec<_>>()))
}

fn criterion_3() -> Outcome {
    let mut notes = Vec::new();
    for d in [0.5, 1.0, 2.0] {
        let (spec, a) = seq(d, 4096, Exponent::TWO);
        let est = thickness_dim_estimate(&a, &auto_ladder(&spec).unwrap()).map_err(|e| e.to_string())?;
        let (lo, hi) = est.slopes();
        ensure(lo - 0.15 <= d && d <= hi + 0.15, || format!("p=2 d={d}: slopes [{lo:.3}, {hi:.3}]"))?;
        notes.push(format!("[{lo:.2},{hi:.2}]"));

        let (spec, _) = seq(d, 4096, Exponent::INFINITY);
        let fit = certified_schedule(&spec, &[]).map_err(|e| e.to_string())?;
        let target = d / (1.0 + d);
        ensure((thickness_lower_formula(&spec) - target).abs() < 1e-12, || "formula".into())?;
        ensure(fit.slope >= target - 0.15, || format!("p=∞ d={d}: schedule slope {:.3}", fit.slope))?;
    }
    // five orthogonal points with ‖a_5‖ = 1/5 at ε = ‖a_5‖/4
    let five = Cloud::from_vectors("a", (1..=5).map(|k| SparseVector::unit(k).scale(0.2)).collect(), Exponent::TWO)
        .unwrap();
    let b = hilbert_projection_lower_bound(&five, 0.05).map_err(|e| e.to_string())?;
    ensure(b == 5.0 * 0.75f64.powi(2) && b == 2.8125, || format!("projection bound {b}"))?;
    Ok(format!("p=2 brackets {}, projection bound {b}", notes.join(" ")))
}

/// `max_x dist₂(x, span S)` for dense columns.
fn max_residual(points: &[Vec<f64>], basis: &[Vec<f64>]) -> f64 {
    let m = points[0].len();
    if basis.is_empty() {
        return points.iter().map(|x| x.iter().map(|v| v * v).sum::<f64>().sqrt()).fold(0.0, f64::max);
    }
    let b = DMatrix::from_fn(m, basis.len(), |i, j| basis[j][i]);
    let svd = b.svd(true, false);
    let u = svd.u.unwrap();
    let tol = 1e-10 * svd.singular_values.max().max(1e-300);
    let cols: Vec<usize> = (0..svd.singular_values.len()).filter(|&k| svd.singular_values[k] > tol).collect();
    points
        .iter()
        .map(|x| {
            let mut r = nalgebra::DVector::from_column_slice(x);
            for &k in &cols {
                let c = u.column(k);
                let t = c.dot(&r);
                r -= c * t;
            }
            r.norm()
        })
        .fold(0.0, f64::max)
}

/// Exhaustive `[lower, upper]` for `d(X, ε)` in `ℓ₂`: upper from spans of
/// subsets and of leading singular vectors, lower from
/// `σ_{j+1}(M) ≤ ε√|M|` whenever every column of `M` is within `ε` of a `j`-dimensional space.
fn thickness_oracle(points: &[Vec<f64>], eps: f64) -> (usize, usize) {
    let n = points.len();
    let m = points[0].len();
    let mut upper = usize::MAX;
    for mask in 0u32..1 << n {
        let s: Vec<Vec<f64>> = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| points[i].clone()).collect();
        if s.len() < upper && max_residual(points, &s) <= eps {
            upper = s.len();
        }
    }
    let all = DMatrix::from_fn(m, n, |i, j| points[j][i]);
    let u = all.clone().svd(true, false).u.unwrap();
    for k in 0..u.ncols() {
        let basis: Vec<Vec<f64>> = (0..k).map(|c| u.column(c).iter().copied().collect()).collect();
        if k < upper && max_residual(points, &basis) <= eps {
            upper = k;
        }
    }
    let mut lower = 0;
    for mask in 1u32..1 << n {
        let idx: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
        let sub = DMatrix::from_fn(m, idx.len(), |i, j| points[idx[j]][i]);
        let bound = eps * (idx.len() as f64).sqrt();
        let count = sub.singular_values().iter().filter(|&&s| s > bound * (1.0 + 1e-9)).count();
        lower = lower.max(count);
    }
    (lower, upper)
}

fn subsets_cover(x: &Cloud, eps: f64) -> usize {
    let n = x.len();
    (0..=n)
        .find(|&k| {
            (0u32..1 << n).filter(|m| m.count_ones() as usize == k).any(|mask| {
                (0..n).all(|i| (0..n).any(|c| mask >> c & 1 == 1 && x.distance(i, c) <= eps))
            })
        })
        .unwrap()
}

fn subsets_packing(x: &Cloud, eps: f64) -> usize {
    let n = x.len();
    (0u32..1 << n)
        .filter(|&mask| {
            (0..n).all(|i| (i + 1..n).all(|j| mask >> i & 1 == 0 || mask >> j & 1 == 0 || x.distance(i, j) >= eps))
        })
        .map(|m| m.count_ones() as usize)
        .max()
        .unwrap()
}

fn criterion_4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut brackets = 0;
    let mut exact_hits = 0;
    for inst in 0..1000 {
        let n = rng.gen_range(1..=6);
        let m = rng.gen_range(1..=4);
        let x = dense_cloud(&mut rng, n, m, Exponent::TWO);
        let pts: Vec<Vec<f64>> = x.vectors().map(|v| v.to_dense_on(&(1..=m as u32).collect::<Vec<_>>())).collect();
        for k in 0..=5 {
            let eps = (-(k as f64)).exp2() * 0.9;
            let b = thickness_bracket(&x, eps, 64).map_err(|e| format!("instance {inst}: {e}"))?;
            let (lo, hi) = thickness_oracle(&pts, eps);
            ensure(b.lower <= b.upper && b.lower <= hi && lo <= b.upper, || {
                format!("instance {inst} ε={eps}: bracket [{}, {}] vs oracle [{lo}, {hi}]", b.lower, b.upper)
            })?;
            if lo == hi {
                exact_hits += 1;
            }
            brackets += 1;

            let cover = exact_min_cover(&x, eps).unwrap();
            let greedy = greedy_net(&x, eps).len();
            let pack = packing_number(&x, eps).value;
            ensure(cover == subsets_cover(&x, eps), || format!("instance {inst}: exact cover {cover}"))?;
            ensure(pack == subsets_packing(&x, eps), || format!("instance {inst}: packing {pack}"))?;
            ensure(cover <= greedy && greedy <= pack, || format!("instance {inst}: {cover} ≤ {greedy} ≤ {pack} fails"))?;
            let wide = packing_number(&x, 2.0 * eps + 1e-9).value;
            ensure(wide <= cover, || format!("instance {inst}: M(2ε+δ) = {wide} > N(ε) = {cover}"))?;
        }
    }
    Ok(format!("{brackets} brackets consistent with the exhaustive oracle ({exact_hits} pinned exactly), sandwich on 1000 instances"))
}

fn euclid(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

fn random_unit(rng: &mut ChaCha8Rng, support: &[u32], p: Exponent) -> Vector {
    let c: Vec<f64> = support.iter().map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    let v = SparseVector::from_dense_on(support, &c);
    let s = v.norm(p);
    v.scale(1.0 / s)
}

fn criterion_5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let ps = [Exponent::ONE, Exponent::TWO, Exponent::new(3.0).unwrap(), Exponent::INFINITY];
    let mut blocks = 0;
    for c in 0..50 {
        let p = ps[c % ps.len()];
        let n = rng.gen_range(4..=12);
        let m = rng.gen_range(2..=6);
        let x = dense_cloud(&mut rng, n, m, p);
        let support = x.support();
        let d = box_dim_upper(&x).map_err(|e| e.to_string())?;
        for k in 1..=5 {
            let phi = build_phi_n(&x, k, d).map_err(|e| format!("cloud {c} n={k}: {e}"))?;
            let level = (-(k as f64) - 1.0).exp2();
            for i in 0..n {
                for j in 0..n {
                    let z = x.vector(i).sub(x.vector(j));
                    if z.norm(p) >= (-(k as f64)).exp2() {
                        let v: Vec<f64> = phi.functionals.iter().map(|f| f.apply(&z)).collect();
                        ensure(euclid(&v) >= level, || format!("cloud {c} n={k}: separation fails"))?;
                    }
                }
            }
            let bound = (phi.m() as f64).sqrt();
            for _ in 0..1000 {
                let u = random_unit(&mut rng, &support, p);
                let v: Vec<f64> = phi.functionals.iter().map(|f| f.apply(&u)).collect();
                ensure(euclid(&v) <= bound * (1.0 + 1e-12), || format!("cloud {c} n={k}: operator norm"))?;
            }
            blocks += 1;
        }
        let mode = EmbeddingMode::Cover { d };
        let alpha = mode.alpha_bound() + 0.5;
        let map = build_hilbert_embedding(&x, alpha, mode, 6).map_err(|e| format!("cloud {c}: {e}"))?;
        two_sided(&map, &x).map_err(|e| format!("cloud {c}: {e}"))?;
    }

    let mut thetas = Vec::new();
    for p in exps() {
        let (_, a) = seq(0.5, 32, p);
        for (mode, alpha, n_max) in
            [(EmbeddingMode::Cover { d: 0.5 }, 2.0, 10), (EmbeddingMode::Thickness { tau: 0.6 }, 4.5, 6)]
        {
            ensure(alpha > mode.alpha_bound(), || "α below bound".into())?;
            let map = build_hilbert_embedding(&a, alpha, mode, n_max).map_err(|e| format!("A p={p:?}: {e}"))?;
            two_sided(&map, &a)?;
            let fit = holder_fit(&map, &a).map_err(|e| e.to_string())?;
            ensure(fit.theta >= 1.0 / alpha - 0.05, || format!("A p={p:?} {mode:?}: θ = {:.3}", fit.theta))?;
            thetas.push((fit.theta * 100.0).round() / 100.0);
        }
    }
    Ok(format!("{blocks} blocks and 50 embeddings verified; θ on A: {thetas:?}"))
}

/// Both sides of the embedding inequality, recomputed from the map.
fn two_sided(map: &thicklab::embeddings::BlockMap, x: &Cloud) -> Result<(), String> {
    let images: Vec<Vec<f64>> = x.vectors().map(|v| map.apply(v)).collect();
    for i in 0..x.len() {
        for j in i + 1..x.len() {
            let dz = x.distance(i, j);
            let diff: Vec<f64> = images[i].iter().zip(&images[j]).map(|(a, b)| a - b).collect();
            let dphi = euclid(&diff);
            ensure(dphi <= map.upper_constant * dz * (1.0 + 1e-12), || format!("upper fails at ({i}, {j})"))?;
            if dz >= map.resolution() {
                ensure(dphi >= map.lower_constant * dz.powf(map.alpha), || format!("lower fails at ({i}, {j})"))?;
            }
        }
    }
    let c = map.two_sided_check(x);
    ensure(c.lower_ok && c.upper_ok, || format!("{c:?}"))
}

fn det(cols: &[Vec<f64>]) -> f64 {
    let k = cols.len();
    DMatrix::from_fn(k, k, |i, j| cols[j][i]).determinant().abs()
}

/// Largest `|det|` over unit vectors of `span B`, written in coefficients.
fn volume_oracle(basis: &[Vector], p: Exponent, rng: &mut ChaCha8Rng) -> f64 {
    let k = basis.len();
    let unit = |c: &[f64]| -> Vec<f64> {
        let mut v = SparseVector::zero();
        for (ci, b) in c.iter().zip(basis) {
            v = v.lincomb(1.0, b, *ci);
        }
        let s = v.norm(p);
        c.iter().map(|x| x / s).collect()
    };
    let cands: Vec<Vec<f64>> = match k {
        1 => vec![unit(&[1.0])],
        2 => (0..720)
            .map(|t| {
                let a = std::f64::consts::PI * t as f64 / 720.0;
                unit(&[a.cos(), a.sin()])
            })
            .collect(),
        _ => {
            let n = 6000;
            let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
            (0..n)
                .map(|t| {
                    let y = 1.0 - 2.0 * (t as f64 + 0.5) / n as f64;
                    let r = (1.0 - y * y).sqrt();
                    let phi = golden * t as f64;
                    unit(&[r * phi.cos(), y, r * phi.sin()])
                })
                .collect()
        }
    };
    if k == 1 {
        return cands[0][0].abs();
    }
    // shrinking pattern search over unit vectors, one slot at a time
    let refine = |mut cols: Vec<Vec<f64>>| -> f64 {
        let mut cur = det(&cols);
        let mut step = 0.05;
        while step > 1e-7 {
            let mut moved = false;
            for slot in 0..k {
                for r in 0..k {
                    for sgn in [1.0, -1.0] {
                        let mut c = cols[slot].clone();
                        c[r] += sgn * step;
                        let mut trial = cols.clone();
                        trial[slot] = unit(&c);
                        let v = det(&trial);
                        if v > cur {
                            cur = v;
                            cols = trial;
                            moved = true;
                        }
                    }
                }
            }
            if !moved {
                step /= 2.0;
            }
        }
        cur
    };
    match k {
        2 => {
            let mut best = (0.0f64, 0, 0);
            for (i, a) in cands.iter().enumerate() {
                for (j, b) in cands.iter().enumerate() {
                    let v = (a[0] * b[1] - a[1] * b[0]).abs();
                    if v > best.0 {
                        best = (v, i, j);
                    }
                }
            }
            refine(vec![cands[best.1].clone(), cands[best.2].clone()])
        }
        _ => {
            let mut best = 0.0f64;
            for _ in 0..30 {
                let mut pick: Vec<usize> = (0..k).map(|_| rng.gen_range(0..cands.len())).collect();
                let mut cur = det(&pick.iter().map(|&i| cands[i].clone()).collect::<Vec<_>>());
                loop {
                    let before = cur;
                    for slot in 0..k {
                        for (ci, c) in cands.iter().enumerate() {
                            let mut cols: Vec<Vec<f64>> = pick.iter().map(|&i| cands[i].clone()).collect();
                            cols[slot] = c.clone();
                            let v = det(&cols);
                            if v > cur {
                                cur = v;
                                pick[slot] = ci;
                            }
                        }
                    }
                    if cur <= before * (1.0 + 1e-12) {
                        break;
                    }
                }
                best = best.max(refine(pick.iter().map(|&i| cands[i].clone()).collect()));
            }
            best
        }
    }
}

fn criterion_6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let ps = [1.0, 1.5, 2.0, 4.0, f64::INFINITY].map(|p| Exponent::new(p).unwrap());
    let mut worst_ratio = 0.0f64;
    let mut oracle_cases = 0;
    for case in 0..200 {
        let p = ps[case % ps.len()];
        let q = p.dual();
        let dim = rng.gen_range(1..=6);
        let m = dim + rng.gen_range(0..=3);
        let basis: Vec<Vector> = (0..dim)
            .map(|_| {
                let c: Vec<f64> = (0..m)
                    .map(|_| if rng.gen_bool(0.25) { 0.0 } else { rng.sample(StandardNormal) })
                    .collect();
                SparseVector::from_dense(&c)
            })
            .collect();
        let Ok(v) = Subspace::new(basis.clone(), p) else { continue };
        let sys = auerbach_basis(&v).map_err(|e| format!("case {case} p={p:?} dim={dim}: {e}"))?;
        ensure(sys.residual() <= 1e-6, || format!("case {case}: residual {}", sys.residual()))?;
        for (i, e) in sys.basis().iter().enumerate() {
            ensure((e.norm(p) - 1.0).abs() <= 1e-6, || format!("case {case}: ‖e_{i}‖ = {}", e.norm(p)))?;
            let f = &sys.duals()[i];
            ensure((f.0.norm(q) - 1.0).abs() <= 1e-6, || format!("case {case}: ‖f_{i}‖ = {}", f.0.norm(q)))?;
            for (j, ej) in sys.basis().iter().enumerate() {
                let want = if i == j { 1.0 } else { 0.0 };
                ensure((f.apply(ej) - want).abs() <= 1e-6, || format!("case {case}: f_{i}(e_{j}) = {}", f.apply(ej)))?;
            }
            // e_i lies in V with the reported coefficients
            let mut rebuilt = SparseVector::zero();
            for (c, b) in sys.coefficients()[i].iter().zip(&basis) {
                rebuilt = rebuilt.lincomb(1.0, b, *c);
            }
            ensure(rebuilt.distance(e, p) <= 1e-8, || format!("case {case}: e_{i} not in V"))?;
        }
        if dim <= 3 {
            let oracle = volume_oracle(&basis, p, &mut rng);
            let ratio = sys.volume() / oracle;
            worst_ratio = worst_ratio.max((ratio - 1.0).abs());
            ensure((ratio - 1.0).abs() <= 0.05, || format!("case {case} p={p:?} dim={dim}: volume ratio {ratio:.4}"))?;
            oracle_cases += 1;
        }
    }
    Ok(format!("200 subspaces, {oracle_cases} volume oracles, worst deviation {:.2}%", 100.0 * worst_ratio))
}

fn criterion_7() -> Outcome {
    let t = Instant::now();
    let tau = 0.6;
    let k = 5;
    let mut configs = 0;
    let mut fractions = Vec::new();
    for p in exps() {
        let (_, a) = seq(0.5, 24, p);
        let d = box_dim_upper(&a).map_err(|e| e.to_string())?;
        let threshold = (1.0 - tau) * (k as f64 - 2.0 * d) / (k as f64 * (1.0 + tau));
        let theta = threshold / 2.0;

        // slab bound
        let blocks = build_subspace_sequence(&a, tau, theta, 6).map_err(|e| e.to_string())?;
        let spec = EnsembleSpec::new(blocks, 2.0, 1, p).map_err(|e| e.to_string())?;
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for b in spec.blocks.iter().filter(|b| b.dim() > 0) {
            let mut gs: Vec<_> = b.duals.iter().take(2).cloned().collect();
            // a combination with ‖c‖₁ = 1 stays in both unit balls
            let c: Vec<f64> = (0..b.dim()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let l1: f64 = c.iter().map(|v: &f64| v.abs()).sum();
            gs.push(b.combine(&c.iter().map(|v| v / l1).collect::<Vec<_>>()));
            for g in &gs {
                let usable: Vec<usize> = (0..a.len()).filter(|&i| g.apply(a.vector(i)).abs() > 1e-3).collect();
                if usable.is_empty() {
                    continue;
                }
                let x = a.vector(usable[rng.gen_range(0..usable.len())]);
                let gx = g.apply(x);
                for shift in [0.0, 0.3] {
                    for frac in [0.02, 0.2] {
                        let eps = frac * gx.abs();
                        let s = check_slab_bound(&spec, b.n, x, shift * gx, eps, g, 100_000, rng.gen())
                            .map_err(|e| e.to_string())?;
                        ensure(s.within(3.0), || format!("p={p:?} n={}: slab {:?}", b.n, s))?;
                        configs += 1;
                    }
                }
            }
        }
        ensure(configs > 0, || format!("p={p:?}: no slab configuration"))?;

        // success rate
        let mut cfg = RateConfig::new(k, theta, tau, 100, 2024);
        cfg.d = Some(d);
        let r = verify_theorem_rate(&a, &cfg).map_err(|e| e.to_string())?;
        ensure(r.fraction >= 0.95, || format!("p={p:?}: success fraction {}", r.fraction))?;
        fractions.push(r.fraction);

        // bad sets along the same subspace sequence
        let blocks = build_subspace_sequence(&a, tau, theta, r.n_max).map_err(|e| e.to_string())?;
        let spec = EnsembleSpec::new(blocks, 2.0, k, p).map_err(|e| e.to_string())?;
        let ns: Vec<i32> = (1..=14).collect();
        let est = estimate_bad_sets(&spec, &a, &[theta], &ns, 200, 11).map_err(|e| e.to_string())?;
        for w in est.windows(2).filter(|w| w[0].n >= 4) {
            ensure(w[1].fraction <= w[0].fraction, || {
                format!("p={p:?}: bad set grows from n={} ({}) to n={} ({})", w[0].n, w[0].fraction, w[1].n, w[1].fraction)
            })?;
        }
    }
    let el = t.elapsed();
    ensure(el <= Duration::from_secs(600), || format!("runtime {el:?}"))?;
    Ok(format!("{configs} slab configurations, success fractions {fractions:?}, {el:.1?}"))
}

fn run_cli(args: &[&str], out: &Path) -> Vec<u8> {
    let status = Process::new(env!("CARGO_BIN_EXE_thicklab"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("THICKLAB_SEED")
        .output()
        .unwrap();
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    std::fs::read(out.join("data.csv")).unwrap()
}

fn criterion_8() -> Outcome {
    let dir = tempdir();
    let input = dir.path().join("a.jsonl");
    let (_, a) = seq(0.5, 24, Exponent::TWO);
    write_cloud_jsonl(&a, std::fs::File::create(&input).unwrap()).unwrap();
    let input = input.to_str().unwrap().to_string();
    let runs: Vec<Vec<&str>> = vec![
        vec!["dim-box", "--input", &input],
        vec!["dim-thickness", "--input", &input],
        vec!["dim-dual", "--input", &input],
        vec!["embed-hilbert", "--input", &input, "--seed", "5"],
        vec!["sample-ensemble", "--input", &input, "--seed", "5"],
        vec!["verify-holder", "--input", &input, "--seed", "5", "--trials", "20"],
        vec!["slab-check", "--input", &input, "--seed", "5", "--trials", "2000"],
        vec!["demo-lp", "--d", "1", "--count", "256", "--p", "inf"],
    ];
    for args in &runs {
        let first = run_cli(args, &dir.path().join("r1"));
        let second = run_cli(args, &dir.path().join("r2"));
        ensure(first == second, || format!("{} differs between runs", args[0]))?;
    }
    Ok(format!("{} subcommands byte-identical", runs.len()))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("box-dimension recovery", criterion_1),
        ("difference-set doubling", criterion_2),
        ("thickness brackets", criterion_3),
        ("oracle equivalence", criterion_4),
        ("embedding inequalities", criterion_5),
        ("auerbach systems", criterion_6),
        ("ensemble statistics", criterion_7),
        ("reproducibility", criterion_8),
    ];
    let only: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        if !only.is_empty() && !only.iter().any(|o| *o == (i + 1).to_string()) {
            continue;
        }
        let t = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            Err(e.downcast_ref::<String>().cloned().or(e.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        match outcome {
            Ok(msg) => println!("criterion {} ({name}): PASS [{:.1?}] {msg}", i + 1, t.elapsed()),
            Err(msg) => {
                failed += 1;
                println!("criterion {} ({name}): FAIL [{:.1?}] {msg}", i + 1, t.elapsed());
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
