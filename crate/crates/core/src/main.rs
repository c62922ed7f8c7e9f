use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use thicklab::report::{error_json, run, write_outputs, Command, RunConfig};
use thicklab::sequence_space::Exponent;
use thicklab::Error;

#[derive(Parser)]
#[command(name = "thicklab", version, about = "Dimension exponents and Hölder embeddings of point clouds in ℓ_p")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Box-counting dimension from greedy covers.
    DimBox(Opts),
    /// Thickness exponent brackets.
    DimThickness(Opts),
    /// Dual-thickness upper estimate.
    DimDual(Opts),
    /// Weighted block embedding into ℓ_2 (thickness mode when --tau is given).
    EmbedHilbert(Opts),
    /// Sample random maps into ℝᵏ and estimate bad-set fractions.
    SampleEnsemble(Opts),
    /// Fraction of sampled maps with a Hölder inverse at the requested rate.
    VerifyHolder(Opts),
    /// Monte Carlo check of the slab probability bound.
    SlabCheck(Opts),
    /// Closed-form comparisons on an orthogonal sequence.
    DemoLp(Opts),
    /// Kuratowski embedding of a finite metric space given as a distance CSV.
    Kuratowski(Opts),
}

#[derive(Args)]
struct Opts {
    /// JSONL point cloud (CSV distance matrix for `kuratowski`).
    #[arg(long)]
    input: Option<PathBuf>,
    /// Exponent of the ambient space, a number ≥ 1 or "inf".
    #[arg(long, default_value = "2")]
    p: String,
    #[arg(long)]
    nmin: Option<i32>,
    #[arg(long)]
    nmax: Option<i32>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    theta: Option<f64>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long, env = "THICKLAB_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Caps subset searches, difference-set sizes and trial counts.
    #[arg(long)]
    budget: Option<usize>,
    /// Decay dimension (`demo-lp`) or box-dimension bound.
    #[arg(long)]
    d: Option<f64>,
    /// Truncation for `demo-lp`.
    #[arg(long)]
    count: Option<usize>,
    /// Slab half-width for `slab-check`.
    #[arg(long)]
    eps: Option<f64>,
}

fn parse_exponent(s: &str) -> Result<Exponent, Error> {
    let v = match s.trim() {
        "inf" | "infinity" | "∞" => f64::INFINITY,
        t => t.parse().map_err(|_| Error::Precondition(format!("invalid exponent {t:?}")))?,
    };
    Exponent::new(v)
}

fn config(sub: Sub) -> Result<RunConfig, Error> {
    let (command, o) = match sub {
        Sub::DimBox(o) => (Command::DimBox, o),
        Sub::DimThickness(o) => (Command::DimThickness, o),
        Sub::DimDual(o) => (Command::DimDual, o),
        Sub::EmbedHilbert(o) => (Command::EmbedHilbert, o),
        Sub::SampleEnsemble(o) => (Command::SampleEnsemble, o),
        Sub::VerifyHolder(o) => (Command::VerifyHolder, o),
        Sub::SlabCheck(o) => (Command::SlabCheck, o),
        Sub::DemoLp(o) => (Command::DemoLp, o),
        Sub::Kuratowski(o) => (Command::Kuratowski, o),
    };
    Ok(RunConfig {
        command,
        input: o.input,
        p: parse_exponent(&o.p)?,
        n_min: o.nmin,
        n_max: o.nmax,
        alpha: o.alpha,
        tau: o.tau,
        theta: o.theta,
        k: o.k,
        trials: o.trials,
        seed: o.seed,
        out: o.out,
        budget: o.budget,
        d: o.d,
        count: o.count,
        eps: o.eps,
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = config(cli.command).and_then(|cfg| {
        let report = run(&cfg)?;
        write_outputs(&cfg, &report)?;
        Ok(cfg.out)
    });
    match result {
        Ok(out) => {
            println!("{}", out.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", error_json(&e));
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
