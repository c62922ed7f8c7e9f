//! Command runner behind the binary: one function per subcommand producing
//! a JSON summary and a long-format CSV, and the writer for the run directory.

use std::fs::{self, File};
use std::io::BufReader;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::cloud::PointCloud;
use crate::covering::{box_dim_estimate, difference_set, EpsilonLadder};
use crate::embeddings::{build_hilbert_embedding, holder_fit, EmbeddingMode, LinearMap};
use crate::ensemble::{
    bad_set_bound_shape, box_dim_upper, build_subspace_sequence, check_slab_bound, derive_seed, estimate_bad_sets,
    sample_map, verify_theorem_rate, EnsembleSpec, RateConfig,
};
use crate::error::{Error, Result};
use crate::io::{read_cloud_jsonl, read_distance_csv};
use crate::lp_examples::{
    auto_ladder, certified_schedule, exact_box_dim, expected_difference_dim, make_orthogonal_sequence,
    thickness_lower_formula, OrthogonalSequenceSpec,
};
use crate::sequence_space::{kuratowski_embed, Exponent};
use crate::thickness::{
    dual_thickness_upper_estimate, thickness_dim_estimate_with_budget, DEFAULT_DIFFERENCE_BUDGET,
    DEFAULT_SUBSET_BUDGET,
};

type Cloud = PointCloud<f64>;

/// Truncation used by `demo-lp` for difference sets.
pub const DIFFERENCE_COUNT: usize = 512;

pub const DEFAULT_COUNT: usize = 4096;
pub const DEFAULT_TAU: f64 = 0.6;
pub const DEFAULT_K: usize = 5;
pub const DEFAULT_TRIALS: usize = 100;
pub const DEFAULT_ENSEMBLE_THETA: f64 = 0.1;
pub const DEFAULT_EMBED_NMAX: i32 = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    DimBox,
    DimThickness,
    DimDual,
    EmbedHilbert,
    SampleEnsemble,
    VerifyHolder,
    SlabCheck,
    DemoLp,
    Kuratowski,
}

impl Command {
    fn needs_input(self) -> bool {
        self != Command::DemoLp
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: Command,
    pub input: Option<PathBuf>,
    pub p: Exponent,
    pub n_min: Option<i32>,
    pub n_max: Option<i32>,
    pub alpha: Option<f64>,
    pub tau: Option<f64>,
    pub theta: Option<f64>,
    pub k: Option<usize>,
    pub trials: Option<usize>,
    pub seed: u64,
    pub out: PathBuf,
    pub budget: Option<usize>,
    /// Decay dimension for `demo-lp`, or box-dimension bound elsewhere.
    pub d: Option<f64>,
    /// Truncation `K` for `demo-lp`.
    pub count: Option<usize>,
    /// Slab half-width for `slab-check`.
    pub eps: Option<f64>,
}

impl RunConfig {
    pub fn new(command: Command, out: impl Into<PathBuf>) -> Self {
        RunConfig {
            command,
            input: None,
            p: Exponent::TWO,
            n_min: None,
            n_max: None,
            alpha: None,
            tau: None,
            theta: None,
            k: None,
            trials: None,
            seed: 0,
            out: out.into(),
            budget: None,
            d: None,
            count: None,
            eps: None,
        }
    }

    /// Parameter checks done before any input is read.
    pub fn validate(&self) -> Result<()> {
        if self.command.needs_input() && self.input.is_none() {
            return Err(Error::Precondition("--input is required".into()));
        }
        if let (Some(a), Some(b)) = (self.n_min, self.n_max) {
            if a >= b {
                return Err(Error::Precondition(format!("need nmin < nmax, got {a} ≥ {b}")));
            }
        }
        let positive = |name: &str, v: Option<f64>| match v {
            Some(x) if !(x > 0.0 && x.is_finite()) => Err(Error::Precondition(format!("{name} must be positive, got {x}"))),
            _ => Ok(()),
        };
        positive("alpha", self.alpha)?;
        positive("theta", self.theta)?;
        positive("eps", self.eps)?;
        if let Some(t) = self.tau {
            if !(t > 0.0 && t < 1.0) {
                return Err(Error::Precondition(format!("tau must lie in (0, 1), got {t}")));
            }
        }
        if let Some(d) = self.d {
            if !(d >= 0.0 && d.is_finite()) {
                return Err(Error::Precondition(format!("d must be ≥ 0, got {d}")));
            }
        }
        if self.k == Some(0) || self.trials == Some(0) || self.budget == Some(0) {
            return Err(Error::Precondition("k, trials and budget must be ≥ 1".into()));
        }
        if self.count.is_some_and(|c| c < 2) {
            return Err(Error::Precondition("count must be ≥ 2".into()));
        }
        Ok(())
    }

    fn trials(&self, default: usize) -> usize {
        let t = self.trials.unwrap_or(default);
        self.budget.map_or(t, |b| t.min(b))
    }

    fn explicit_ladder(&self) -> Result<Option<EpsilonLadder>> {
        match (self.n_min, self.n_max) {
            (Some(a), Some(b)) => EpsilonLadder::new(a, b).map(Some),
            (None, None) => Ok(None),
            _ => Err(Error::Precondition("give both --nmin and --nmax or neither".into())),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub summary: Value,
    pub data_csv: String,
}

fn load_cloud(cfg: &RunConfig) -> Result<Cloud> {
    let path = cfg.input.as_ref().expect("validated");
    let file = File::open(path)?;
    read_cloud_jsonl(BufReader::new(file), cfg.p)
}

/// Dyadic ladder between the diameter and the smallest distance of `X`,
/// at least four and at most twelve scales.
pub fn cloud_ladder(x: &Cloud) -> Result<EpsilonLadder> {
    let Some(min) = x.min_pairwise_distance() else {
        return EpsilonLadder::new(1, 4);
    };
    let coarse = (-x.diameter().log2()).floor() as i32 + 1;
    let fine = (-min.log2()).floor() as i32;
    let n_max = fine.max(coarse + 3).min(coarse + 11);
    EpsilonLadder::new(n_max - (n_max - coarse).max(3), n_max)
}

fn ladder_for(cfg: &RunConfig, x: &Cloud) -> Result<EpsilonLadder> {
    match cfg.explicit_ladder()? {
        Some(l) => Ok(l),
        None => cloud_ladder(x),
    }
}

/// Runs the configured command. Nothing is written.
pub fn run(cfg: &RunConfig) -> Result<Report> {
    cfg.validate()?;
    match cfg.command {
        Command::DimBox => dim_box(cfg),
        Command::DimThickness => dim_thickness(cfg),
        Command::DimDual => dim_dual(cfg),
        Command::EmbedHilbert => embed_hilbert(cfg),
        Command::SampleEnsemble => sample_ensemble(cfg),
        Command::VerifyHolder => verify_holder(cfg),
        Command::SlabCheck => slab_check(cfg),
        Command::DemoLp => demo_lp(cfg),
        Command::Kuratowski => kuratowski(cfg),
    }
}

/// Writes `config.json`, `data.csv` and `summary.json` (which embeds the
/// config) into `cfg.out`.
pub fn write_outputs(cfg: &RunConfig, report: &Report) -> Result<()> {
    let dir: &Path = &cfg.out;
    fs::create_dir_all(dir)?;
    let config = serde_json::to_value(cfg).expect("config serializes");
    let mut summary = report.summary.clone();
    if let Value::Object(map) = &mut summary {
        map.insert("config".into(), config.clone());
    }
    let pretty = |v: &Value| serde_json::to_string_pretty(v).expect("json serializes") + "\n";
    fs::write(dir.join("config.json"), pretty(&config))?;
    fs::write(dir.join("data.csv"), &report.data_csv)?;
    fs::write(dir.join("summary.json"), pretty(&summary))?;
    Ok(())
}

/// Machine-readable error object.
pub fn error_json(e: &Error) -> Value {
    json!({"error": {"code": e.code(), "message": e.to_string()}})
}

fn dim_box(cfg: &RunConfig) -> Result<Report> {
    let x = load_cloud(cfg)?;
    let ladder = ladder_for(cfg, &x)?;
    let est = box_dim_estimate(&x, &ladder)?;
    let mut summary = est.summary_json();
    summary["points"] = json!(x.len());
    Ok(Report { summary, data_csv: est.to_csv() })
}

fn dim_thickness(cfg: &RunConfig) -> Result<Report> {
    let x = load_cloud(cfg)?;
    let ladder = ladder_for(cfg, &x)?;
    let est = thickness_dim_estimate_with_budget(&x, &ladder, cfg.budget.unwrap_or(DEFAULT_SUBSET_BUDGET))?;
    let mut summary = est.summary_json();
    summary["points"] = json!(x.len());
    Ok(Report { summary, data_csv: est.to_csv() })
}

fn dim_dual(cfg: &RunConfig) -> Result<Report> {
    let x = load_cloud(cfg)?;
    let ladder = ladder_for(cfg, &x)?;
    let est = dual_thickness_upper_estimate(&x, &ladder, cfg.alpha, cfg.budget.unwrap_or(DEFAULT_DIFFERENCE_BUDGET))?;
    let mut summary = est.summary_json();
    summary["points"] = json!(x.len());
    Ok(Report { summary, data_csv: est.to_csv() })
}

fn box_bound(cfg: &RunConfig, x: &Cloud) -> Result<f64> {
    match cfg.d {
        Some(d) => Ok(d),
        None => box_dim_upper(x),
    }
}

fn embed_hilbert(cfg: &RunConfig) -> Result<Report> {
    let x = load_cloud(cfg)?;
    let mode = match cfg.tau {
        Some(tau) => EmbeddingMode::Thickness { tau },
        None => EmbeddingMode::Cover { d: box_bound(cfg, &x)? },
    };
    let alpha = cfg.alpha.unwrap_or(mode.alpha_bound() + 1.0);
    let n_max = cfg.n_max.unwrap_or(DEFAULT_EMBED_NMAX);
    let phi = build_hilbert_embedding(&x, alpha, mode, n_max)?;
    let check = phi.two_sided_check(&x);
    let fit = if x.len() >= 2 { Some(holder_fit(&phi, &x)?) } else { None };
    let mut csv = String::from("n,quantity,value\n");
    for (i, b) in phi.blocks.iter().enumerate() {
        let sampled = b.sampled_operator_norm(phi.p, 200, derive_seed(cfg.seed, i as u64));
        csv.push_str(&format!(
            "{n},weight,{}\n{n},m,{}\n{n},operator_bound,{}\n{n},sampled_norm,{sampled}\n",
            b.weight,
            b.m(),
            b.operator_bound(),
            n = b.n
        ));
    }
    let summary = json!({
        "mode": mode,
        "alpha": alpha,
        "alpha_bound": mode.alpha_bound(),
        "n_max": n_max,
        "output_dim": phi.output_dim(),
        "lower_constant": phi.lower_constant,
        "upper_constant": phi.upper_constant,
        "tail_bound": phi.tail_bound,
        "two_sided": check,
        "holder": fit,
        "map": phi.to_json(),
    });
    Ok(Report { summary, data_csv: csv })
}

fn ensemble_spec(cfg: &RunConfig, x: &Cloud, k: usize) -> Result<(EnsembleSpec, f64, f64)> {
    let tau = cfg.tau.unwrap_or(DEFAULT_TAU);
    let theta = cfg.theta.unwrap_or(DEFAULT_ENSEMBLE_THETA);
    let n_max = cfg.n_max.unwrap_or(DEFAULT_EMBED_NMAX);
    let blocks = build_subspace_sequence(x, tau, theta, n_max)?;
    Ok((EnsembleSpec::new(blocks, cfg.alpha.unwrap_or(2.0), k, x.p())?, tau, theta))
}

fn sample_ensemble(cfg: &RunConfig) -> Result<Report> {
    let x = load_cloud(cfg)?;
    let k = cfg.k.unwrap_or(DEFAULT_K);
    let (spec, tau, theta) = ensemble_spec(cfg, &x, k)?;
    let trials = cfg.trials(DEFAULT_TRIALS);
    let mut csv = String::from("scope,index,quantity,value\n");
    for b in &spec.blocks {
        csv.push_str(&format!("block,{},dim,{}\nblock,{},accuracy,{}\n", b.n, b.dim(), b.n, b.accuracy));
    }
    let mut fits = Vec::with_capacity(trials);
    for t in 0..trials {
        let map = sample_map(&spec, derive_seed(cfg.seed, t as u64))?;
        let row_norm = map.rows().iter().map(|r| r.dual_norm(spec.p)).fold(0.0, f64::max);
        csv.push_str(&format!("trial,{t},max_row_norm,{row_norm}\n"));
        if x.len() >= 2 {
            match holder_fit(&map, &x) {
                Ok(f) => {
                    csv.push_str(&format!("trial,{t},theta_fit,{}\n", f.theta));
                    fits.push(Some(f.theta));
                }
                Err(Error::NotInjective(..)) => {
                    csv.push_str(&format!("trial,{t},theta_fit,\n"));
                    fits.push(None);
                }
                Err(e) => return Err(e),
            }
        }
    }
    let mut bad = Vec::new();
    if trials >= 100 {
        let d = box_bound(cfg, &x)?;
        let ns: Vec<i32> = (1..=spec.n_max()).collect();
        for e in estimate_bad_sets(&spec, &x, &[theta], &ns, trials, cfg.seed)? {
            let shape = bad_set_bound_shape(e.n, d, k, theta, tau);
            csv.push_str(&format!(
                "bad_set,{},fraction,{}\nbad_set,{},bound_shape,{shape}\n",
                e.n, e.fraction, e.n
            ));
            bad.push(e);
        }
    }
    let summary = json!({
        "k": k,
        "alpha": spec.alpha,
        "tau": tau,
        "theta": theta,
        "dims": spec.dims(),
        "row_norm_bound": spec.row_norm_bound(),
        "trials": trials,
        "injective": fits.iter().filter(|f| f.is_some()).count(),
        "bad_sets": bad,
    });
    Ok(Report { summary, data_csv: csv })
}

fn verify_holder(cfg: &RunConfig) -> Result<Report> {
    let x = load_cloud(cfg)?;
    let k = cfg.k.unwrap_or(DEFAULT_K);
    let tau = cfg.tau.unwrap_or(DEFAULT_TAU);
    let d = box_bound(cfg, &x)?;
    let theta = match cfg.theta {
        Some(t) => t,
        None => 0.5 * (1.0 - tau) * (k as f64 - 2.0 * d) / (k as f64 * (1.0 + tau)),
    };
    let rc = RateConfig {
        k,
        theta,
        tau,
        d: Some(d),
        alpha: cfg.alpha.unwrap_or(2.0),
        n_max: cfg.n_max,
        trials: cfg.trials(DEFAULT_TRIALS),
        seed: cfg.seed,
    };
    let r = verify_theorem_rate(&x, &rc)?;
    let mut csv = String::from("trial,seed,theta_fit,success\n");
    for t in &r.trials {
        let fit = t.theta_fit.map(|v| v.to_string()).unwrap_or_default();
        csv.push_str(&format!("{},{},{fit},{}\n", t.trial, t.seed, t.success));
    }
    let summary = json!({
        "k": k,
        "theta": theta,
        "tau": tau,
        "d": r.d,
        "threshold": r.threshold,
        "n_max": r.n_max,
        "dims": r.dims,
        "fraction": r.fraction,
        "trials": r.trials.len(),
    });
    Ok(Report { summary, data_csv: csv })
}

fn slab_check(cfg: &RunConfig) -> Result<Report> {
    let x = load_cloud(cfg)?;
    let (spec, _, _) = ensemble_spec(cfg, &x, 1)?;
    let trials = cfg.trials(100_000);
    let mut csv = String::from("n,quantity,value\n");
    let mut checks = Vec::new();
    for b in spec.blocks.iter().filter(|b| b.dim() > 0) {
        // the point and dual functional with the largest pairing
        let mut best = (0.0f64, 0, 0);
        for (i, v) in x.vectors().enumerate() {
            for (j, f) in b.duals.iter().enumerate() {
                let g = f.apply(v).abs();
                if g > best.0 {
                    best = (g, i, j);
                }
            }
        }
        if best.0 == 0.0 {
            continue;
        }
        let (gx, i, j) = best;
        let eps = cfg.eps.unwrap_or(gx / (10.0 * b.dim() as f64));
        let s = check_slab_bound(&spec, b.n, x.vector(i), 0.0, eps, &b.duals[j], trials, derive_seed(cfg.seed, b.n as u64))?;
        csv.push_str(&format!(
            "{n},dim,{}\n{n},epsilon,{eps}\n{n},empirical,{}\n{n},bound,{}\n{n},sigma,{}\n",
            b.dim(),
            s.empirical,
            s.bound,
            s.sigma,
            n = b.n
        ));
        checks.push(json!({"n": b.n, "dim": b.dim(), "epsilon": eps, "check": s, "within_3_sigma": s.within(3.0)}));
    }
    let all = checks.iter().all(|c| c["within_3_sigma"] == json!(true));
    Ok(Report { summary: json!({"trials": trials, "blocks": checks, "all_within_3_sigma": all}), data_csv: csv })
}

fn demo_lp(cfg: &RunConfig) -> Result<Report> {
    let d = cfg.d.unwrap_or(1.0);
    let count = cfg.count.unwrap_or(DEFAULT_COUNT);
    let spec = OrthogonalSequenceSpec::power(d, count, cfg.p)?;
    let a: Cloud = make_orthogonal_sequence(&spec)?;
    let ladder = match cfg.explicit_ladder()? {
        Some(l) => l,
        None => auto_ladder(&spec)?,
    };
    let mut csv = String::from("section,epsilon,quantity,value\n");

    let boxed = box_dim_estimate(&a, &ladder)?;
    for s in &boxed.counts {
        csv.push_str(&format!("box,{},count,{}\n", s.epsilon, s.count));
    }

    let small = OrthogonalSequenceSpec::power(d, count.min(DIFFERENCE_COUNT), cfg.p)?;
    let z = difference_set(&make_orthogonal_sequence::<f64>(&small)?);
    let diff = box_dim_estimate(&z, &auto_ladder(&small)?)?;
    for s in &diff.counts {
        csv.push_str(&format!("difference,{},count,{}\n", s.epsilon, s.count));
    }

    let thick = thickness_dim_estimate_with_budget(&a, &ladder, cfg.budget.unwrap_or(DEFAULT_SUBSET_BUDGET))?;
    for b in &thick.brackets {
        csv.push_str(&format!("thickness,{},lower,{}\nthickness,{},upper,{}\n", b.epsilon, b.lower, b.epsilon, b.upper));
    }

    let schedule = certified_schedule(&spec, &[])?;
    for s in &schedule.points {
        csv.push_str(&format!("schedule,{},k,{}\n", s.epsilon, s.k));
    }

    let dual = dual_thickness_upper_estimate(&a, &ladder, None, cfg.budget.unwrap_or(DEFAULT_DIFFERENCE_BUDGET))?;
    for s in &dual.scales {
        csv.push_str(&format!("dual,{},chosen,{}\n", s.epsilon, s.chosen));
    }

    let dim = exact_box_dim(&spec);
    let summary = json!({
        "d": d,
        "p": cfg.p,
        "count": count,
        "ladder": {"n_min": ladder.n_min, "n_max": ladder.n_max},
        "box": {
            "expected": dim,
            "slope": boxed.slope,
            "bracket": boxed.bracket,
            "contains_expected": boxed.bracket.contains_with_slack(dim, 0.15),
        },
        "difference": {
            "count": small.count,
            "expected": expected_difference_dim(&spec),
            "slope": diff.slope,
        },
        "thickness": {
            "lower_slope": thick.lower.slope,
            "upper_slope": thick.upper.slope,
            "formula_lower": thickness_lower_formula(&spec),
        },
        "schedule": {"slope": schedule.slope, "formula": thickness_lower_formula(&spec)},
        "dual": {"slope": dual.estimate.slope, "bound": dim},
    });
    Ok(Report { summary, data_csv: csv })
}

fn kuratowski(cfg: &RunConfig) -> Result<Report> {
    let path = cfg.input.as_ref().expect("validated");
    let m = read_distance_csv(BufReader::new(File::open(path)?))?;
    let cloud = kuratowski_embed(&m)?;
    let mut distortion = 0.0f64;
    for i in 0..cloud.len() {
        for j in 0..cloud.len() {
            distortion = distortion.max((cloud.distance(i, j) - m.values[i][j]).abs());
        }
    }
    let mut csv = String::from("id,coordinate,value\n");
    for (id, v) in cloud.points() {
        for &(c, val) in v.entries() {
            csv.push_str(&format!("{id},{c},{val}\n"));
        }
    }
    Ok(Report { summary: json!({"points": cloud.len(), "max_distortion": distortion}), data_csv: csv })
}
