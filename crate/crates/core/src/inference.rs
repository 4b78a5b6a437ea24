//! Sequential Monte Carlo over the latent arrivals and locations of an observed
//! partition, grid maximum likelihood, and the conditional law of atom weights.
//!
//! Each step proposes the next arrival as `τ_(n-1) + Δ` with `Δ` exponential
//! of rate `λ / proposal_scale`, where `λ` is the particle's own model hazard
//! at `τ_(n-1)`. New-cluster locations are drawn from their exact conditional
//! law, so a new cluster contributes `H̄(τ_(n))` to the weight. Because the
//! proposal depends only on the particle's history the evidence estimate stays
//! unbiased.
//!
//! Cluster locations are stored particle-major so that each particle's row is
//! contiguous for the per-step sweep.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, Gamma};
use serde::Serialize;

use crate::crm::ModelParams;
use crate::error::{domain, Error, Result};
use crate::generative::{draw_new_location, eppf_two_param_crp, CrpParams, LatentState};
use crate::numeric::{log_sum_exp, newton_bracketed};
use crate::partition::Partition;

/// Particle-filter settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, serde::Deserialize)]
pub struct SmcConfig {
    pub n_particles: usize,
    /// Resample when the effective sample size drops below this fraction of
    /// the particle count; 0 disables resampling.
    pub ess_threshold: f64,
    /// Multiplier on the hazard-implied gap used as the proposal scale.
    pub proposal_scale: f64,
}

impl Default for SmcConfig {
    fn default() -> Self {
        Self {
            n_particles: 10_000,
            ess_threshold: 0.5,
            proposal_scale: 1.0,
        }
    }
}

impl SmcConfig {
    fn validate(&self) -> Result<()> {
        if self.n_particles < 2 {
            return Err(domain("at least two particles are required"));
        }
        if !(0.0..=1.0).contains(&self.ess_threshold) {
            return Err(domain("ess threshold must lie in [0, 1]"));
        }
        if !(self.proposal_scale > 0.0 && self.proposal_scale.is_finite()) {
            return Err(domain("proposal scale must be positive"));
        }
        Ok(())
    }
}

/// Label of an observed item: an existing cluster (0-based) or a new one.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Observed {
    Existing(usize),
    New,
}

/// Weighted particles targeting the latent variables of an observed prefix.
#[derive(Debug, Clone)]
pub struct ParticleSystem {
    params: ModelParams,
    config: SmcConfig,
    partition: Partition,
    shape: Vec<f64>,
    theta: Locations,
    tau: Vec<f64>,
    psi: Vec<f64>,
    hazard: Vec<f64>,
    log_w: Vec<f64>,
    log_evidence: f64,
    ess: f64,
    step_ess: f64,
    first_scale: f64,
    history: Option<History>,
    resamples: usize,
    scratch: Scratch,
}

#[derive(Debug, Clone, Default)]
struct History {
    arrivals: Vec<Vec<f64>>,
    // slot -> slot of the previous population, when the population was
    // resampled or permuted after that step
    parents: Vec<Option<Vec<u32>>>,
}

#[derive(Debug, Clone, Default)]
struct Scratch {
    delta: Vec<f64>,
    log_q: Vec<f64>,
    decay: Vec<f64>,
    rate: Vec<f64>,
    inc: Vec<f64>,
    ys: Vec<f64>,
}

/// Per-particle cluster locations, stored row by row with spare capacity so
/// that a particle's locations are contiguous.
#[derive(Debug, Clone, Default)]
struct Locations {
    data: Vec<f64>,
    spare: Vec<f64>,
    stride: usize,
    k: usize,
}

impl Locations {
    fn row(&self, p: usize) -> &[f64] {
        &self.data[p * self.stride..p * self.stride + self.k]
    }

    fn push_cluster(&mut self, col: &[f64]) {
        let np = col.len();
        if self.k == self.stride {
            let stride = (2 * self.stride).max(8);
            let mut data = vec![0.0; np * stride];
            for p in 0..np {
                data[p * stride..p * stride + self.k].copy_from_slice(self.row(p));
            }
            self.data = data;
            self.stride = stride;
        }
        for (p, &th) in col.iter().enumerate() {
            self.data[p * self.stride + self.k] = th;
        }
        self.k += 1;
    }

    fn reorder(&mut self, idx: &[u32]) {
        if self.k == 0 {
            return;
        }
        self.spare.resize(self.data.len(), 0.0);
        for (p, &i) in idx.iter().enumerate() {
            let src = i as usize * self.stride;
            self.spare[p * self.stride..p * self.stride + self.k].copy_from_slice(&self.data[src..src + self.k]);
        }
        std::mem::swap(&mut self.data, &mut self.spare);
    }
}

/// `-ln(1 - y) / y` through `y^7`; relative error below `2e-17` for `y < 0.01`.
#[inline(always)]
fn neg_log1m_ratio(y: f64) -> f64 {
    const C: [f64; 8] = [1.0, 1.0 / 2.0, 1.0 / 3.0, 1.0 / 4.0, 1.0 / 5.0, 1.0 / 6.0, 1.0 / 7.0, 1.0 / 8.0];
    let mut acc = C[7];
    for &c in C[..7].iter().rev() {
        acc = acc * y + c;
    }
    acc
}

/// Returns `(Σ_j a_j ln(1 + Δ/d_j), Σ_j a_j / (d_j + Δ))` where
/// `d_j + Δ = end - θ_j`.
///
/// With `y = Δ/(d + Δ)` the log term is `-ln(1 - y)`, so each cluster costs a
/// single division. Lanes are accumulated separately so the loop vectorises;
/// the few clusters with `y >= 0.01` are then corrected to the exact value.
fn decay_and_rate(row: &[f64], shape: &[f64], end: f64, delta: f64, ys: &mut Vec<f64>) -> (f64, f64) {
    const LANES: usize = 4;
    ys.resize(row.len(), 0.0);
    let mut dec = [0.0; LANES];
    let mut rate = [0.0; LANES];
    let mut ymax = [0.0f64; LANES];
    let split = row.len() - row.len() % LANES;
    for ((th, a), yy) in row[..split]
        .chunks_exact(LANES)
        .zip(shape[..split].chunks_exact(LANES))
        .zip(ys[..split].chunks_exact_mut(LANES))
    {
        for l in 0..LANES {
            let r = 1.0 / (end - th[l]);
            let y = delta * r;
            yy[l] = y;
            rate[l] += a[l] * r;
            dec[l] += a[l] * y * neg_log1m_ratio(y);
            ymax[l] = if y > ymax[l] { y } else { ymax[l] };
        }
    }
    let mut decay: f64 = dec.iter().sum();
    let mut total_rate: f64 = rate.iter().sum();
    let mut worst = ymax.iter().fold(0.0f64, |m, &y| m.max(y));
    for j in split..row.len() {
        let r = 1.0 / (end - row[j]);
        let y = delta * r;
        ys[j] = y;
        total_rate += shape[j] * r;
        decay += shape[j] * y * neg_log1m_ratio(y);
        worst = worst.max(y);
    }
    if worst >= 0.01 {
        for (&y, &a) in ys.iter().zip(shape) {
            if y >= 0.01 {
                decay += a * (-(-y).ln_1p() - y * neg_log1m_ratio(y));
            }
        }
    }
    (decay, total_rate)
}

impl ParticleSystem {
    /// An empty system. With `track_history` every particle's arrival path is
    /// kept so that full latent states can be recovered.
    pub fn new(params: ModelParams, config: SmcConfig, track_history: bool) -> Result<Self> {
        config.validate()?;
        let n = config.n_particles;
        // Time scale of the first arrival: Ψ(τ*) = 1.
        let first_scale = {
            let hi = crate::numeric::expand_upper(|t| params.psi_base(t).unwrap_or(f64::INFINITY) - 1.0, 0.0, 1.0)?;
            newton_bracketed(
                |t| {
                    (
                        params.psi_base(t).unwrap_or(f64::NAN) - 1.0,
                        params.new_cluster_mass(t).unwrap_or(f64::NAN),
                    )
                },
                0.0,
                hi,
                0.5 * hi,
                1e-10,
            )?
        };
        Ok(Self {
            params,
            config,
            partition: Partition::new(),
            shape: Vec::new(),
            theta: Locations::default(),
            tau: vec![0.0; n],
            psi: vec![0.0; n],
            hazard: vec![0.0; n],
            log_w: vec![-(n as f64).ln(); n],
            log_evidence: 0.0,
            ess: n as f64,
            step_ess: n as f64,
            first_scale,
            history: track_history.then(History::default),
            resamples: 0,
            scratch: Scratch::default(),
        })
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn len(&self) -> usize {
        self.tau.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tau.is_empty()
    }

    /// Observed prefix absorbed so far.
    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    /// Running estimate of `ln Pr(Π_n | η)`.
    pub fn log_evidence(&self) -> f64 {
        self.log_evidence
    }

    /// `(Σw)² / Σw²` of the current weights.
    pub fn ess(&self) -> f64 {
        self.ess
    }

    /// ESS right after the last reweighting, before any resampling.
    pub fn step_ess(&self) -> f64 {
        self.step_ess
    }

    pub fn resample_count(&self) -> usize {
        self.resamples
    }

    /// Normalised log weights.
    pub fn log_weights(&self) -> &[f64] {
        &self.log_w
    }

    pub fn weights(&self) -> Vec<f64> {
        self.log_w.iter().map(|w| w.exp()).collect()
    }

    /// Current last arrival of each particle.
    pub fn last_arrivals(&self) -> &[f64] {
        &self.tau
    }

    /// Location of cluster `j` in each particle.
    pub fn cluster_locations(&self, j: usize) -> Vec<f64> {
        (0..self.len()).map(|p| self.theta.row(p)[j]).collect()
    }

    /// Full latent state of particle `p`; requires history tracking.
    pub fn particle(&self, p: usize) -> Result<LatentState> {
        let hist = self
            .history
            .as_ref()
            .ok_or_else(|| domain("particle history was not tracked"))?;
        let n = self.partition.len();
        let mut arrivals = vec![0.0; n];
        let mut slot = p;
        for t in (0..n).rev() {
            if let Some(parents) = &hist.parents[t] {
                slot = parents[slot] as usize;
            }
            arrivals[t] = hist.arrivals[t][slot];
        }
        let locations = self.theta.row(p).to_vec();
        LatentState::from_parts(self.partition.clone(), arrivals, locations)
    }

    /// Absorbs one observed item.
    pub fn step<R: Rng + ?Sized>(&mut self, obs: Observed, rng: &mut R) -> Result<()> {
        let k = self.partition.k();
        if let Observed::Existing(j) = obs {
            if j >= k {
                return Err(domain(format!("cluster {j} does not exist yet ({k} clusters)")));
            }
        }
        let n_items = self.partition.len();
        let np = self.len();
        let sigma = self.params.sigma();
        let zeta = self.params.zeta();
        let closed = self.params.has_closed_form();
        let scale = self.config.proposal_scale;

        let sc = &mut self.scratch;
        sc.delta.resize(np, 0.0);
        sc.log_q.resize(np, 0.0);
        sc.decay.resize(np, 0.0);
        sc.rate.resize(np, 0.0);
        sc.inc.resize(np, 0.0);

        for p in 0..np {
            let s = if n_items == 0 || self.hazard[p] <= 0.0 {
                scale * self.first_scale
            } else {
                scale / self.hazard[p]
            };
            let z: f64 = rng.sample(Exp1);
            sc.delta[p] = s * z;
            sc.log_q[p] = -z - s.ln();
        }

        for p in 0..np {
            let end = self.tau[p] + sc.delta[p] + zeta;
            (sc.decay[p], sc.rate[p]) = decay_and_rate(self.theta.row(p), &self.shape, end, sc.delta[p], &mut sc.ys);
        }

        let mut new_col = match obs {
            Observed::New => Vec::with_capacity(np),
            Observed::Existing(_) => Vec::new(),
        };
        for p in 0..np {
            let tau0 = self.tau[p];
            let tn = tau0 + sc.delta[p];
            if !(tn > tau0) {
                sc.inc[p] = f64::NEG_INFINITY;
                if matches!(obs, Observed::New) {
                    new_col.push(tau0);
                }
                continue;
            }
            let psi_n = if closed {
                self.params.psi_base(tn)?
            } else {
                self.psi[p] + self.params.psi_base_increment(tau0, tn)?
            };
            let fresh = self.params.new_cluster_mass(tn)?;
            let (log_mass, extra_rate) = match obs {
                Observed::Existing(j) => {
                    let d = tn - self.theta.row(p)[j] + zeta;
                    ((self.shape[j] / d).ln(), 1.0 / d)
                }
                Observed::New => {
                    // The location is drawn from its exact conditional law,
                    // which leaves H̄(τ) as the weight.
                    let th = draw_new_location(&self.params, tn, fresh, rng)?;
                    new_col.push(th);
                    (fresh.ln(), (1.0 - sigma) / (tn - th + zeta))
                }
            };
            sc.inc[p] = log_mass - sc.decay[p] - (psi_n - self.psi[p]) - sc.log_q[p];
            self.tau[p] = tn;
            self.psi[p] = psi_n;
            self.hazard[p] = sc.rate[p] + extra_rate + fresh;
        }

        for (w, inc) in self.log_w.iter_mut().zip(&sc.inc) {
            *w += inc;
        }
        if self.log_w.iter().any(|w| w.is_nan()) {
            return Err(Error::Numerical {
                routine: "smc_step",
                achieved: f64::NAN,
                requested: 0.0,
            });
        }
        let total = log_sum_exp(&self.log_w);
        if total == f64::NEG_INFINITY {
            return Err(Error::Degenerate { step: n_items + 1 });
        }
        self.log_evidence += total;
        let mut sq = 0.0;
        for w in self.log_w.iter_mut() {
            *w -= total;
            sq += (2.0 * *w).exp();
        }
        self.ess = 1.0 / sq;
        self.step_ess = self.ess;

        match obs {
            Observed::Existing(j) => {
                self.shape[j] += 1.0;
                self.partition.push(j);
            }
            Observed::New => {
                self.shape.push(1.0 - sigma);
                self.theta.push_cluster(&new_col);
                self.partition.push(k);
            }
        }
        if let Some(h) = &mut self.history {
            h.arrivals.push(self.tau.clone());
            h.parents.push(None);
        }
        if self.ess < self.config.ess_threshold * np as f64 {
            self.resample(rng);
        }
        Ok(())
    }

    /// Systematic resampling to equal weights.
    pub fn resample<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        let np = self.len();
        let step = 1.0 / np as f64;
        let mut u = rng.random::<f64>() * step;
        let mut idx = Vec::with_capacity(np);
        let mut cum = 0.0;
        let mut i = 0;
        for (p, w) in self.log_w.iter().enumerate() {
            cum += w.exp();
            while i < np && u < cum {
                idx.push(p as u32);
                u += step;
                i += 1;
            }
        }
        // Rounding can leave the cumulative sum a hair below one.
        while idx.len() < np {
            let last = self.log_w.iter().rposition(|w| *w > f64::NEG_INFINITY).unwrap_or(np - 1);
            idx.push(last as u32);
        }
        self.reorder(&idx);
        self.log_w.iter_mut().for_each(|w| *w = -(np as f64).ln());
        self.ess = np as f64;
        self.resamples += 1;
    }

    /// Reorders particles; slot `p` receives old slot `perm[p]`. Weights move
    /// with their particles, so the estimator is unchanged.
    pub fn permute(&mut self, perm: &[usize]) -> Result<()> {
        let np = self.len();
        let mut seen = vec![false; np];
        if perm.len() != np || perm.iter().any(|&i| i >= np || std::mem::replace(&mut seen[i], true)) {
            return Err(domain("not a permutation of the particle slots"));
        }
        let idx: Vec<u32> = perm.iter().map(|&i| i as u32).collect();
        let w: Vec<f64> = idx.iter().map(|&i| self.log_w[i as usize]).collect();
        self.reorder(&idx);
        self.log_w = w;
        Ok(())
    }

    fn reorder(&mut self, idx: &[u32]) {
        let pick = |v: &[f64]| -> Vec<f64> { idx.iter().map(|&i| v[i as usize]).collect() };
        self.theta.reorder(idx);
        self.tau = pick(&self.tau);
        self.psi = pick(&self.psi);
        self.hazard = pick(&self.hazard);
        if let Some(h) = &mut self.history {
            if let Some(slot) = h.parents.last_mut() {
                *slot = Some(match slot.take() {
                    Some(prev) => idx.iter().map(|&i| prev[i as usize]).collect(),
                    None => idx.to_vec(),
                });
            }
        }
    }

    /// Draws a particle index with probability equal to its weight.
    pub fn draw_index<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let mut u: f64 = rng.random();
        for (p, w) in self.log_w.iter().enumerate() {
            u -= w.exp();
            if u < 0.0 {
                return p;
            }
        }
        self.log_w
            .iter()
            .rposition(|w| *w > f64::NEG_INFINITY)
            .unwrap_or(self.len() - 1)
    }
}

/// Per-item observations of a partition.
pub fn observations(p: &Partition) -> impl Iterator<Item = Observed> + '_ {
    let mut k = 0;
    (0..p.len()).map(move |i| {
        let c = p.cluster(i);
        if c == k {
            k += 1;
            Observed::New
        } else {
            Observed::Existing(c)
        }
    })
}

/// Result of one SMC pass.
#[derive(Debug, Clone, Serialize)]
pub struct SmcRun {
    pub log_evidence: f64,
    /// Effective sample size after reweighting at each step, before any
    /// resampling.
    pub ess_trace: Vec<f64>,
    pub resamples: usize,
}

/// Runs the filter over every item of `p`; keeps particle paths when
/// `track_history` is set. Also returns the per-step ESS before resampling.
pub fn run_smc<R: Rng + ?Sized>(
    p: &Partition,
    params: &ModelParams,
    config: &SmcConfig,
    track_history: bool,
    rng: &mut R,
) -> Result<(ParticleSystem, Vec<f64>)> {
    let mut system = ParticleSystem::new(*params, *config, track_history)?;
    let mut trace = Vec::with_capacity(p.len());
    for obs in observations(p) {
        system.step(obs, rng)?;
        trace.push(system.step_ess);
    }
    Ok((system, trace))
}

/// Unbiased SMC estimate of `ln Pr(Π_n | η)`.
pub fn smc_marginal_loglik<R: Rng + ?Sized>(
    p: &Partition,
    params: &ModelParams,
    config: &SmcConfig,
    rng: &mut R,
) -> Result<SmcRun> {
    if p.is_empty() {
        return Err(domain("empty partition"));
    }
    let (system, ess_trace) = run_smc(p, params, config, false, rng)?;
    Ok(SmcRun {
        log_evidence: system.log_evidence,
        ess_trace,
        resamples: system.resamples,
    })
}

/// Grid search settings for [`fit_mle`].
#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
pub struct FitConfig {
    pub smc: SmcConfig,
    pub sigma_grid: Vec<f64>,
    pub xi_grid: Vec<f64>,
    pub gamma_coef: f64,
    pub zeta_range: (f64, f64),
    /// Golden-section iterations for `ζ`.
    pub zeta_depth: usize,
    /// SMC runs averaged per evaluation.
    pub replicates: usize,
    pub seed: u64,
}

/// `count` equidistant points `0, 1/count, …` in `[0, 1)`.
pub fn unit_grid(count: usize) -> Vec<f64> {
    (0..count).map(|i| i as f64 / count as f64).collect()
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            smc: SmcConfig::default(),
            sigma_grid: unit_grid(25),
            xi_grid: vec![1.0, 2.0, 3.0],
            gamma_coef: 1.0,
            zeta_range: (0.0, 100.0),
            zeta_depth: 20,
            replicates: 3,
            seed: 0,
        }
    }
}

/// One `(ξ, σ)` cell of the likelihood surface, at its best `ζ`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SurfacePoint {
    pub xi: f64,
    pub sigma: f64,
    pub zeta: f64,
    /// Replicate mean of the log-evidence estimates; `-inf` if every run failed.
    pub log_evidence: f64,
    /// Replicate standard deviation.
    pub sd: f64,
    /// Standard error of the mean, `sd / sqrt(R)`.
    pub se: f64,
    /// Runs that failed (degenerate weights or numerical errors) during the
    /// `ζ` search of this cell.
    pub failed_runs: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct FitResult {
    pub best_params: ModelParams,
    pub best_log_evidence: f64,
    pub surface: Vec<SurfacePoint>,
}

struct Evaluation {
    mean: f64,
    sd: f64,
    failed: usize,
}

fn replicate_stats(values: &[f64]) -> (f64, f64) {
    let r = values.len() as f64;
    let mean = values.iter().sum::<f64>() / r;
    if values.len() < 2 || !mean.is_finite() {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (r - 1.0);
    (mean, var.sqrt())
}

/// Maximises a noisy unimodal function on `(lo, hi)` by golden-section search.
/// Returns `(argmax, value)` among the evaluated points.
pub fn golden_section_max<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, depth: usize) -> (f64, f64) {
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    let mut best = if fd > fc { (d, fd) } else { (c, fc) };
    for _ in 0..depth {
        if fc >= fd || fd.is_nan() {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = f(c);
            if fc > best.1 {
                best = (c, fc);
            }
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = f(d);
            if fd > best.1 {
                best = (d, fd);
            }
        }
    }
    best
}

/// Grid maximum likelihood over `(ξ, σ)` with a golden-section search in `ζ`.
///
/// Every evaluation reuses the same replicate seeds, so differences between
/// grid points are not swamped by Monte Carlo noise.
pub fn fit_mle(p: &Partition, config: &FitConfig) -> Result<FitResult> {
    fit_mle_with(p, config, |_| {})
}

/// As [`fit_mle`], reporting each finished surface point to `progress`.
pub fn fit_mle_with<F: FnMut(&SurfacePoint)>(p: &Partition, config: &FitConfig, mut progress: F) -> Result<FitResult> {
    if config.sigma_grid.is_empty() || config.xi_grid.is_empty() {
        return Err(domain("grids must be nonempty"));
    }
    if config.replicates < 1 {
        return Err(domain("at least one replicate is required"));
    }
    let (zlo, zhi) = config.zeta_range;
    if !(zlo >= 0.0 && zhi > zlo) {
        return Err(domain("zeta range must satisfy 0 <= lo < hi"));
    }
    config.smc.validate()?;
    let mut surface = Vec::new();
    for &xi in &config.xi_grid {
        for &sigma in &config.sigma_grid {
            let mut evals: Vec<(f64, Evaluation)> = Vec::new();
            let mut failed = 0;
            let mut eval = |zeta: f64| -> f64 {
                let params = match ModelParams::new(xi, config.gamma_coef, sigma, zeta) {
                    Ok(v) => v,
                    Err(_) => return f64::NEG_INFINITY,
                };
                let mut values = Vec::with_capacity(config.replicates);
                let mut bad = 0;
                for r in 0..config.replicates {
                    let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(r as u64));
                    match smc_marginal_loglik(p, &params, &config.smc, &mut rng) {
                        Ok(run) => values.push(run.log_evidence),
                        Err(_) => {
                            bad += 1;
                            values.push(f64::NEG_INFINITY);
                        }
                    }
                }
                failed += bad;
                let (mean, sd) = replicate_stats(&values);
                evals.push((zeta, Evaluation { mean, sd, failed: bad }));
                mean
            };
            let (zeta, _) = golden_section_max(&mut eval, zlo, zhi, config.zeta_depth);
            let best = evals
                .iter()
                .find(|(z, _)| *z == zeta)
                .map(|(_, e)| e)
                .expect("argmax was evaluated");
            let point = SurfacePoint {
                xi,
                sigma,
                zeta,
                log_evidence: best.mean,
                sd: best.sd,
                se: best.sd / (config.replicates as f64).sqrt(),
                failed_runs: failed.max(best.failed),
            };
            progress(&point);
            surface.push(point);
        }
    }
    let best = surface
        .iter()
        .filter(|s| s.log_evidence.is_finite())
        .max_by(|a, b| a.log_evidence.total_cmp(&b.log_evidence))
        .ok_or(Error::Degenerate { step: p.len() })?;
    Ok(FitResult {
        best_params: ModelParams::new(best.xi, config.gamma_coef, best.sigma, best.zeta)?,
        best_log_evidence: best.log_evidence,
        surface,
    })
}

/// Grid settings for the two-parameter CRP fit.
#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
pub struct CrpFitConfig {
    pub sigma_grid: Vec<f64>,
    /// Search interval for the strength, explored on a log scale.
    pub strength_range: (f64, f64),
    pub depth: usize,
}

impl Default for CrpFitConfig {
    fn default() -> Self {
        Self {
            sigma_grid: unit_grid(25),
            strength_range: (1e-3, 1e4),
            depth: 60,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrpSurfacePoint {
    pub sigma: f64,
    pub strength: f64,
    pub log_likelihood: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CrpFitResult {
    pub best: CrpParams,
    pub log_likelihood: f64,
    pub surface: Vec<CrpSurfacePoint>,
}

/// Maximum likelihood for the two-parameter CRP from its closed-form EPPF.
pub fn fit_crp(p: &Partition, config: &CrpFitConfig) -> Result<CrpFitResult> {
    if config.sigma_grid.is_empty() {
        return Err(domain("sigma grid must be nonempty"));
    }
    let (lo, hi) = config.strength_range;
    if !(lo > 0.0 && hi > lo) {
        return Err(domain("strength range must satisfy 0 < lo < hi"));
    }
    let mut surface = Vec::with_capacity(config.sigma_grid.len());
    for &sigma in &config.sigma_grid {
        let ll = |log_c: f64| match CrpParams::new(sigma, log_c.exp()) {
            Ok(c) => eppf_two_param_crp(p, &c),
            Err(_) => f64::NEG_INFINITY,
        };
        let (log_c, value) = golden_section_max(ll, lo.ln(), hi.ln(), config.depth);
        surface.push(CrpSurfacePoint {
            sigma,
            strength: log_c.exp(),
            log_likelihood: value,
        });
    }
    let best = surface
        .iter()
        .max_by(|a, b| a.log_likelihood.total_cmp(&b.log_likelihood))
        .expect("nonempty grid");
    Ok(CrpFitResult {
        best: CrpParams::new(best.sigma, best.strength)?,
        log_likelihood: best.log_likelihood,
        surface,
    })
}

/// Draws the atom weights of the occupied clusters given the latent state:
/// independent `Gamma(m_j - σ, ζ + τ_(n) - θ*_j)` (shape, rate).
pub fn posterior_atom_weights<R: Rng + ?Sized>(
    state: &LatentState,
    params: &ModelParams,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let tau = state.last_arrival();
    let sigma = params.sigma();
    state
        .sizes()
        .iter()
        .zip(state.locations())
        .map(|(&m, &th)| {
            let rate = params.zeta() + tau - th;
            let g = Gamma::new(m as f64 - sigma, 1.0 / rate).map_err(|e| domain(e.to_string()))?;
            Ok(g.sample(rng))
        })
        .collect()
}
