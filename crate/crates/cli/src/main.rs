mod io;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use microcluster::diagnostics::{asymptotic_report, log_checkpoints, ReportConfig};
use microcluster::generative::{simulate_partition, simulate_two_param_crp};
use microcluster::graphs::partition_to_multigraph;
use microcluster::inference::{fit_crp, fit_mle_with, run_smc, unit_grid, CrpFitConfig, FitConfig, SmcConfig};
use microcluster::predict::{
    l2_error, predict_continuation, predict_crp_continuation, quantile, size_proportion_bands, PredictiveSample,
};
use microcluster::{CrpParams, ModelParams, Partition};

use io::{out_dir, parse_list, parse_range, partition_text, read_partition, write_atomic, write_json, Csv};

#[derive(Parser)]
#[command(name = "microcluster", version, about = "Non-exchangeable microclustering partitions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a partition and write it with its latent variables.
    Simulate(SimulateArgs),
    /// Fit a model to the training prefix of a partition.
    Fit(FitArgs),
    /// Predict the continuation of the training prefix.
    Predict(PredictArgs),
    /// Turn a partition into a multigraph edge list.
    Graph(GraphArgs),
    /// Simulate and compare growth statistics with their limits.
    Diagnose(DiagnoseArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Model {
    /// Non-exchangeable generalized gamma model.
    Nonexch,
    /// One-parameter CRP (concentration `--kappa2`).
    Crp,
    /// Two-parameter CRP.
    Crp2,
}

#[derive(Args, Clone)]
struct ModelArgs {
    #[arg(long, default_value_t = 1.0)]
    xi: f64,
    #[arg(long, default_value_t = 1.0)]
    gamma: f64,
    #[arg(long, default_value_t = 0.5)]
    sigma: f64,
    #[arg(long, default_value_t = 1.0)]
    zeta: f64,
    /// CRP discount.
    #[arg(long, default_value_t = 0.0)]
    sigma2: f64,
    /// CRP strength (concentration).
    #[arg(long, default_value_t = 1.0)]
    kappa2: f64,
}

impl ModelArgs {
    fn params(&self) -> Result<ModelParams> {
        Ok(ModelParams::new(self.xi, self.gamma, self.sigma, self.zeta)?)
    }

    fn crp(&self, model: Model) -> Result<CrpParams> {
        let discount = if model == Model::Crp { 0.0 } else { self.sigma2 };
        Ok(CrpParams::new(discount, self.kappa2)?)
    }
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long, value_enum, default_value_t = Model::Nonexch)]
    model: Model,
    #[arg(long)]
    n: usize,
    #[command(flatten)]
    params: ModelArgs,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct FitArgs {
    #[arg(long)]
    input: PathBuf,
    /// `nonexch` or `crp2` (`crp` fits the two-parameter CRP with the discount fixed at 0).
    #[arg(long, value_enum, default_value_t = Model::Nonexch)]
    model: Model,
    #[arg(long, default_value_t = 1.0)]
    train_frac: f64,
    #[arg(long, default_value_t = 10_000)]
    particles: usize,
    /// Comma-separated σ values; defaults to 0, 1/25, …, 24/25.
    #[arg(long)]
    grid_sigma: Option<String>,
    #[arg(long, default_value = "1,2,3")]
    grid_xi: String,
    #[arg(long, default_value = "0,100")]
    zeta_range: String,
    /// Golden-section iterations for ζ.
    #[arg(long, default_value_t = 20)]
    zeta_depth: usize,
    /// SMC runs per evaluation.
    #[arg(long, default_value_t = 3)]
    replicates: usize,
    #[arg(long, default_value_t = 1.0)]
    gamma: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct PredictArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum, default_value_t = Model::Nonexch)]
    model: Model,
    /// A `fit.json` written by `fit`; overrides the parameter flags.
    #[arg(long)]
    fit: Option<PathBuf>,
    #[command(flatten)]
    params: ModelArgs,
    #[arg(long, default_value_t = 0.5)]
    train_frac: f64,
    /// Items to predict; defaults to the rest of the input.
    #[arg(long)]
    m: Option<usize>,
    #[arg(long, default_value_t = 100)]
    samples: usize,
    #[arg(long, default_value_t = 10_000)]
    particles: usize,
    /// Largest training clusters whose trajectories are written.
    #[arg(long, default_value_t = 10)]
    top: usize,
    #[arg(long, default_value_t = 20)]
    r_max: u64,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct GraphArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct DiagnoseArgs {
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 1.0)]
    xi: f64,
    #[arg(long, default_value_t = 1.0)]
    gamma: f64,
    #[arg(long, default_value_t = 0.5)]
    sigma: f64,
    #[arg(long, default_value_t = 1.0)]
    zeta: f64,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Fit(a) => fit(a),
        Command::Predict(a) => predict(a),
        Command::Graph(a) => graph(a),
        Command::Diagnose(a) => diagnose(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn simulate(a: SimulateArgs) -> Result<ExitCode> {
    if a.n < 1 {
        bail!("--n must be at least 1");
    }
    let dir = out_dir(&a.out)?;
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let p = match a.model {
        Model::Nonexch => {
            let params = a.params.params()?;
            let (p, state) = simulate_partition(a.n, &params, &mut rng)?;
            let mut csv = Csv::new(&["i", "tau", "theta", "cluster"]);
            for (i, &tau) in state.arrivals().iter().enumerate() {
                let j = p.cluster(i);
                csv.row(&[(i + 1).to_string(), tau.to_string(), state.locations()[j].to_string(), (j + 1).to_string()]);
            }
            csv.write(&dir.join("latent.csv"))?;
            p
        }
        m => simulate_two_param_crp(a.n, &a.params.crp(m)?, &mut rng),
    };
    write_atomic(&dir.join("partition.txt"), partition_text(&p).as_bytes())?;
    write_json(
        &dir.join("stats.json"),
        &json!({ "model": a.model, "seed": a.seed, "stats": p.stats() }),
    )?;
    Ok(ExitCode::SUCCESS)
}

fn train_length(p: &Partition, frac: f64) -> Result<usize> {
    if !(frac > 0.0 && frac <= 1.0) {
        bail!("--train-frac must lie in (0, 1]");
    }
    Ok(((p.len() as f64 * frac).round() as usize).clamp(1, p.len()))
}

fn fit(a: FitArgs) -> Result<ExitCode> {
    let full = read_partition(&a.input)?;
    let n_train = train_length(&full, a.train_frac)?;
    let train = full.restrict(n_train)?;
    let dir = out_dir(&a.out)?;
    let sigma_grid = match &a.grid_sigma {
        Some(s) => parse_list(s)?,
        None => unit_grid(25),
    };
    match a.model {
        Model::Nonexch => {
            let config = FitConfig {
                smc: SmcConfig {
                    n_particles: a.particles,
                    ..SmcConfig::default()
                },
                sigma_grid,
                xi_grid: parse_list(&a.grid_xi)?,
                gamma_coef: a.gamma,
                zeta_range: parse_range(&a.zeta_range)?,
                zeta_depth: a.zeta_depth,
                replicates: a.replicates,
                seed: a.seed,
            };
            let result = fit_mle_with(&train, &config, |s| {
                eprintln!("xi={} sigma={} zeta={} log_evidence={} sd={}", s.xi, s.sigma, s.zeta, s.log_evidence, s.sd)
            })?;
            let mut csv = Csv::new(&["xi", "sigma", "zeta", "log_evidence", "sd", "se", "failed_runs"]);
            for s in &result.surface {
                csv.row(&[s.xi, s.sigma, s.zeta, s.log_evidence, s.sd, s.se, s.failed_runs as f64]);
            }
            csv.write(&dir.join("surface.csv"))?;
            let b = &result.best_params;
            write_json(
                &dir.join("fit.json"),
                &json!({
                    "model": "nonexch",
                    "n_train": n_train,
                    "best": { "xi": b.xi(), "gamma": b.base.gamma_coef(), "sigma": b.sigma(), "zeta": b.zeta() },
                    "log_evidence": result.best_log_evidence,
                    "config": config,
                    "surface": result.surface,
                }),
            )?;
        }
        m => {
            let grid = if m == Model::Crp { vec![0.0] } else { sigma_grid };
            let config = CrpFitConfig {
                sigma_grid: grid,
                ..CrpFitConfig::default()
            };
            let result = fit_crp(&train, &config)?;
            let mut csv = Csv::new(&["sigma2", "kappa2", "log_likelihood"]);
            for s in &result.surface {
                csv.row(&[s.sigma, s.strength, s.log_likelihood]);
            }
            csv.write(&dir.join("surface.csv"))?;
            write_json(
                &dir.join("fit.json"),
                &json!({
                    "model": m,
                    "n_train": n_train,
                    "best": { "sigma2": result.best.discount(), "kappa2": result.best.strength() },
                    "log_likelihood": result.log_likelihood,
                    "surface": result.surface,
                }),
            )?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn fitted_value(best: &Value, key: &str, fallback: f64) -> Result<f64> {
    match best.get(key) {
        None => Ok(fallback),
        Some(v) => v.as_f64().with_context(|| format!("fit file: {key} is not a number")),
    }
}

fn load_params(a: &PredictArgs) -> Result<ModelArgs> {
    let mut p = a.params.clone();
    if let Some(path) = &a.fit {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let v: Value = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        let best = v.get("best").context("fit file has no \"best\" entry")?;
        p.xi = fitted_value(best, "xi", p.xi)?;
        p.gamma = fitted_value(best, "gamma", p.gamma)?;
        p.sigma = fitted_value(best, "sigma", p.sigma)?;
        p.zeta = fitted_value(best, "zeta", p.zeta)?;
        p.sigma2 = fitted_value(best, "sigma2", p.sigma2)?;
        p.kappa2 = fitted_value(best, "kappa2", p.kappa2)?;
    }
    Ok(p)
}

fn predict(a: PredictArgs) -> Result<ExitCode> {
    let full = read_partition(&a.input)?;
    let n_train = train_length(&full, a.train_frac)?;
    let train = full.restrict(n_train)?;
    let m = a.m.unwrap_or(full.len() - n_train);
    if m < 1 {
        bail!("nothing to predict: pass --m or a --train-frac below 1");
    }
    if a.samples < 1 {
        bail!("--samples must be positive");
    }
    let params = load_params(&a)?;
    let dir = out_dir(&a.out)?;
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let samples: Vec<PredictiveSample> = match a.model {
        Model::Nonexch => {
            let config = SmcConfig {
                n_particles: a.particles,
                ..SmcConfig::default()
            };
            let (system, _) = run_smc(&train, &params.params()?, &config, true, &mut rng)?;
            predict_continuation(&system, m, a.samples, &mut rng)?
        }
        model => predict_crp_continuation(&train, m, &params.crp(model)?, a.samples, &mut rng),
    };

    // Trajectories of the largest training clusters, per sample and averaged.
    let mut order: Vec<usize> = (0..train.k()).collect();
    order.sort_by_key(|&j| std::cmp::Reverse(train.sizes()[j]));
    order.truncate(a.top);
    let mut csv = Csv::new(&["sample", "k", "cluster", "size"]);
    let mut mean = vec![vec![0.0; m]; order.len()];
    for (s, sample) in samples.iter().enumerate() {
        for (slot, &j) in order.iter().enumerate() {
            for (step, size) in sample.trajectory(j).into_iter().enumerate() {
                mean[slot][step] += size as f64 / samples.len() as f64;
                csv.row(&[s.to_string(), (n_train + step + 1).to_string(), (j + 1).to_string(), size.to_string()]);
            }
        }
    }
    for (slot, &j) in order.iter().enumerate() {
        for (step, v) in mean[slot].iter().enumerate() {
            csv.row(&["mean".to_string(), (n_train + step + 1).to_string(), (j + 1).to_string(), v.to_string()]);
        }
    }
    if full.len() == n_train + m {
        for &j in &order {
            for (step, size) in full.cluster_trajectory(j)[n_train..].iter().enumerate() {
                csv.row(&["truth".to_string(), (n_train + step + 1).to_string(), (j + 1).to_string(), size.to_string()]);
            }
        }
    }
    csv.write(&dir.join("trajectories.csv"))?;

    let mut summary = json!({ "model": a.model, "n_train": n_train, "m": m, "samples": samples.len() });
    if full.len() == n_train + m {
        let errors = l2_error(&samples, &full, n_train)?;
        let mut csv = Csv::new(&["sample", "error"]);
        for (s, e) in errors.iter().enumerate() {
            csv.row(&[s as f64, *e]);
        }
        csv.write(&dir.join("errors.csv"))?;
        let mut sorted = errors.clone();
        sorted.sort_by(f64::total_cmp);
        let mean = errors.iter().sum::<f64>() / errors.len() as f64;
        let (q05, q50, q95) = (quantile(&sorted, 0.05), quantile(&sorted, 0.5), quantile(&sorted, 0.95));
        let mut csv = Csv::new(&["mean", "q05", "q50", "q95"]);
        csv.row(&[mean, q05, q50, q95]);
        csv.write(&dir.join("error_summary.csv"))?;
        summary["error"] = json!({ "mean": mean, "q05": q05, "q50": q50, "q95": q95 });
    } else {
        eprintln!("input does not cover the prediction horizon; skipping the error");
    }
    if samples.len() >= 20 {
        let bands = size_proportion_bands(&samples, a.r_max, 0.95)?;
        let mut csv = Csv::new(&["r", "lower", "median", "upper", "mean"]);
        for b in &bands {
            csv.row(&[b.r as f64, b.lower, b.median, b.upper, b.mean]);
        }
        csv.write(&dir.join("bands.csv"))?;
    } else {
        eprintln!("fewer than 20 samples; skipping the proportion bands");
    }
    write_json(&dir.join("predict.json"), &summary)?;
    Ok(ExitCode::SUCCESS)
}

fn graph(a: GraphArgs) -> Result<ExitCode> {
    let p = read_partition(&a.input)?;
    let g = partition_to_multigraph(&p)?;
    let dir = out_dir(&a.out)?;
    write_atomic(&dir.join("edges.txt"), g.edge_list().as_bytes())?;
    let mut summary = serde_json::to_value(g.summary())?;
    if g.dropped_last {
        eprintln!("warning: odd number of items; the last one was dropped");
        summary["warning"] = json!("odd number of items; the last one was dropped");
    }
    write_json(&dir.join("graph.json"), &summary)?;
    Ok(ExitCode::SUCCESS)
}

fn diagnose(a: DiagnoseArgs) -> Result<ExitCode> {
    if a.n < 1000 {
        bail!("--n must be at least 1000");
    }
    let params = ModelParams::new(a.xi, a.gamma, a.sigma, a.zeta)?;
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let (p, state) = simulate_partition(a.n, &params, &mut rng)?;
    let report = asymptotic_report(&state, &params, &ReportConfig::default())?;
    let dir = out_dir(&a.out)?;
    write_json(&dir.join("report.json"), &report)?;
    write_trajectory(&dir.join("trajectory.csv"), &p, state.arrivals())?;
    for c in &report.checks {
        eprintln!(
            "{:<34} empirical {:<12.6} theory {:<10.6} gap {:<10.6} tol {:<6} {}",
            c.name,
            c.empirical,
            c.theoretical,
            c.gap,
            c.tolerance,
            if c.pass { "ok" } else { "FAIL" }
        );
    }
    Ok(if report.pass { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

/// `n, t, K, N` at log-spaced checkpoints, then the sizes of the first ten
/// clusters.
fn write_trajectory(path: &Path, p: &Partition, arrivals: &[f64]) -> Result<()> {
    const SHOWN: usize = 10;
    let mut header = vec!["n".to_string(), "t".into(), "K".into(), "N".into()];
    header.extend((1..=SHOWN).map(|j| format!("size_{j}")));
    let mut csv = Csv::new(&header);
    let mut sizes = [0u64; SHOWN];
    let mut k = 0;
    let marks = log_checkpoints(p.len(), 200);
    let mut next = 0;
    for (i, &tau) in arrivals.iter().enumerate() {
        let c = p.cluster(i);
        k = k.max(c + 1);
        if c < SHOWN {
            sizes[c] += 1;
        }
        if next < marks.len() && marks[next] == i + 1 {
            let mut row = vec![(i + 1).to_string(), tau.to_string(), k.to_string(), (i + 1).to_string()];
            row.extend(sizes.iter().map(u64::to_string));
            csv.row(&row);
            next += 1;
        }
    }
    csv.write(path)
}
