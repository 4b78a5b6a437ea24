//! Simulation checks of the growth laws: log-log exponents, limiting size
//! proportions, and the law of the first cluster's weight.

use serde::Serialize;
use statrs::function::gamma::ln_gamma;

use crate::crm::ModelParams;
use crate::error::{domain, Error, Result};
use crate::generative::LatentState;
use crate::numeric::{expand_upper, integrate, newton_bracketed, Tolerance};
use crate::partition::Partition;

/// Least-squares line through `(ln x, ln y)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExponentFit {
    pub slope: f64,
    pub intercept: f64,
    pub n_min: f64,
    pub n_max: f64,
    pub residual_rms: f64,
    pub points: usize,
}

pub const MIN_FIT_POINTS: usize = 10;

/// Log-log slope of `value` against `n` over the last `tail_fraction` of the
/// points.
pub fn growth_exponent(trajectory: &[(f64, f64)], tail_fraction: f64) -> Result<ExponentFit> {
    if !(tail_fraction > 0.0 && tail_fraction <= 1.0) {
        return Err(domain(format!("tail fraction must lie in (0, 1], got {tail_fraction}")));
    }
    if trajectory.iter().any(|&(n, v)| !(n > 0.0 && v > 0.0)) {
        return Err(domain("growth exponents need positive n and values"));
    }
    let take = ((trajectory.len() as f64 * tail_fraction).ceil() as usize).min(trajectory.len());
    let tail = &trajectory[trajectory.len() - take..];
    let logs: Vec<(f64, f64, f64)> = tail.iter().map(|&(n, v)| (n.ln(), v.ln(), 1.0)).collect();
    let fit = weighted_line(&logs)?;
    Ok(ExponentFit {
        slope: fit.0,
        intercept: fit.1,
        n_min: tail[0].0,
        n_max: tail[tail.len() - 1].0,
        residual_rms: fit.2,
        points: tail.len(),
    })
}

// (slope, intercept, weighted residual rms) of weighted least squares.
fn weighted_line(pts: &[(f64, f64, f64)]) -> Result<(f64, f64, f64)> {
    if pts.len() < MIN_FIT_POINTS {
        return Err(domain(format!("{} points; a fit needs at least {MIN_FIT_POINTS}", pts.len())));
    }
    let sw: f64 = pts.iter().map(|p| p.2).sum();
    let mx = pts.iter().map(|p| p.2 * p.0).sum::<f64>() / sw;
    let my = pts.iter().map(|p| p.2 * p.1).sum::<f64>() / sw;
    let sxx: f64 = pts.iter().map(|p| p.2 * (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| p.2 * (p.0 - mx) * (p.1 - my)).sum();
    if !(sxx > 0.0) {
        return Err(domain("fit abscissae are all equal"));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = pts.iter().map(|p| p.2 * (p.1 - intercept - slope * p.0).powi(2)).sum();
    Ok((slope, intercept, (rss / sw).sqrt()))
}

/// About `count` distinct integers spread evenly in `ln n` over `1..=n`.
pub fn log_checkpoints(n: usize, count: usize) -> Vec<usize> {
    if n == 0 || count == 0 {
        return Vec::new();
    }
    let mut out: Vec<usize> = (0..count)
        .map(|i| {
            let f = if count == 1 { 1.0 } else { i as f64 / (count - 1) as f64 };
            ((n as f64).powf(f).round() as usize).clamp(1, n)
        })
        .collect();
    out.dedup();
    out
}

/// Which limit the size proportions `K_{n,r}/K_n` follow.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ProportionRegime {
    /// `σ = 0`: `K_{n,r} = o(K_n)` for every `r`.
    Diffuse,
    /// `0 < σ < 1`: power law with index `1 + σ`.
    PowerLaw,
    /// `σ = 1`: almost all clusters are singletons.
    Singletons,
}

pub fn proportion_regime(sigma: f64) -> Result<ProportionRegime> {
    match sigma {
        0.0 => Ok(ProportionRegime::Diffuse),
        1.0 => Ok(ProportionRegime::Singletons),
        s if s > 0.0 && s < 1.0 => Ok(ProportionRegime::PowerLaw),
        s => Err(domain(format!("sigma must lie in [0, 1], got {s}"))),
    }
}

/// Limiting proportion `σ Γ(r-σ) / (r! Γ(1-σ))` of clusters of size `r`.
pub fn powerlaw_ratio(sigma: f64, r: u64) -> Result<f64> {
    if !(sigma > 0.0 && sigma < 1.0) {
        return Err(domain(format!("sigma must lie in (0, 1), got {sigma}")));
    }
    if r < 1 {
        return Err(domain("r must be at least 1"));
    }
    if r <= 1000 {
        let mut v = sigma;
        for k in 1..r {
            v *= (k as f64 - sigma) / (k + 1) as f64;
        }
        Ok(v)
    } else {
        let r = r as f64;
        Ok((sigma.ln() + ln_gamma(r - sigma) - ln_gamma(r + 1.0) - ln_gamma(1.0 - sigma)).exp())
    }
}

/// Weighted log-log slope of `K_{n,r}/K_n` over `r_min..=r_max`, each size
/// weighted by its count; sizes with no clusters are skipped.
pub fn size_tail_slope(p: &Partition, r_min: u64, r_max: u64) -> Result<ExponentFit> {
    let hist = p.stats().size_histogram;
    let k = p.k() as f64;
    let pts: Vec<(f64, f64, f64)> = (r_min..=r_max)
        .filter_map(|r| hist.get(&r).map(|&c| ((r as f64).ln(), (c as f64 / k).ln(), c as f64)))
        .collect();
    let (slope, intercept, rms) = weighted_line(&pts)?;
    Ok(ExponentFit {
        slope,
        intercept,
        n_min: pts[0].0.exp(),
        n_max: pts[pts.len() - 1].0.exp(),
        residual_rms: rms,
        points: pts.len(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub empirical: f64,
    pub theoretical: f64,
    pub gap: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl Check {
    fn new(name: &str, empirical: f64, theoretical: f64, tolerance: f64) -> Self {
        let gap = (empirical - theoretical).abs();
        Self {
            name: name.to_string(),
            empirical,
            theoretical,
            gap,
            tolerance,
            pass: gap <= tolerance,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AsymptoticReport {
    pub n: usize,
    pub t: f64,
    pub k: usize,
    pub regime: ProportionRegime,
    pub checks: Vec<Check>,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportConfig {
    pub checkpoints: usize,
    pub tail_fraction: f64,
}

impl Default for ReportConfig {
    fn default() -> Self {
        Self {
            checkpoints: 100,
            tail_fraction: 0.5,
        }
    }
}

/// Compares a simulated trajectory with the almost-sure limits of the model.
///
/// Time-indexed checks use `N(t)` (items by time `t`) and `K(t)`; item-indexed
/// ones use `K_n` and the size of the first cluster. Theoretical values come
/// from the Lévy and base-measure kernels.
pub fn asymptotic_report(state: &LatentState, params: &ModelParams, config: &ReportConfig) -> Result<AsymptoticReport> {
    let n = state.n();
    if n < 2 {
        return Err(domain("the report needs a simulated trajectory"));
    }
    let sigma = params.sigma();
    let xi = params.xi();
    let gamma = params.base.gamma_coef();
    let regime = proportion_regime(sigma)?;
    let p = state.partition();
    let taus = state.arrivals();
    let ks = p.cluster_count_trajectory();
    let first = p.cluster_trajectory(0);
    let marks = log_checkpoints(n, config.checkpoints);
    let at = |f: &dyn Fn(usize) -> (f64, f64)| -> Vec<(f64, f64)> { marks.iter().map(|&i| f(i - 1)).collect() };
    let wide = if sigma == 0.0 { 0.15 } else { 0.08 };
    let tail = config.tail_fraction;

    let mut checks = Vec::new();
    let n_of_t = growth_exponent(&at(&|i| (taus[i], (i + 1) as f64)), tail)?;
    checks.push(Check::new("N(t) exponent", n_of_t.slope, xi + 1.0, 0.1));

    let t = state.last_arrival();
    let mean_n = gamma * params.levy.kappa(1, 0.0)? * t.powf(xi + 1.0) / (xi + 1.0);
    checks.push(Check::new("N(t) / asymptotic mean", n as f64 / mean_n, 1.0, 0.1));

    let k_of_t = growth_exponent(&at(&|i| (taus[i], ks[i] as f64)), tail)?;
    checks.push(Check::new("K(t) exponent", k_of_t.slope, sigma + xi, wide));
    checks.push(Check::new("K(t) / Psi(t)", p.k() as f64 / params.psi_base(t)?, 1.0, 0.1));

    let k_of_n = growth_exponent(&at(&|i| ((i + 1) as f64, ks[i] as f64)), tail)?;
    checks.push(Check::new("K_n exponent", k_of_n.slope, (sigma + xi) / (xi + 1.0), wide));

    let m1 = growth_exponent(&at(&|i| ((i + 1) as f64, first[i] as f64)), tail)?;
    checks.push(Check::new("first cluster size exponent", m1.slope, 1.0 / (xi + 1.0), 0.1));

    // M_1(t) should grow linearly in t once the cluster is established; the
    // tail slope is compared with the overall rate M_1(t)/(t - θ_1).
    let theta1 = state.locations()[0];
    let lin: Vec<(f64, f64)> = at(&|i| (taus[i], first[i] as f64));
    let lin = &lin[lin.len() - ((lin.len() as f64 * tail).ceil() as usize).min(lin.len())..];
    let (slope, _, _) = weighted_line(&lin.iter().map(|&(x, y)| (x, y, 1.0)).collect::<Vec<_>>())?;
    let rate = first[n - 1] as f64 / (t - theta1);
    checks.push(Check::new("first cluster M(t) slope / rate", slope / rate, 1.0, 0.1));

    if regime == ProportionRegime::PowerLaw {
        let hist = p.stats().size_histogram;
        let k = p.k() as f64;
        for (r, tol) in [(1u64, 0.05), (2, 0.03)] {
            let emp = *hist.get(&r).unwrap_or(&0) as f64 / k;
            checks.push(Check::new(&format!("K_n,{r} / K_n"), emp, powerlaw_ratio(sigma, r)?, tol));
        }
    }
    let pass = checks.iter().all(|c| c.pass);
    Ok(AsymptoticReport {
        n,
        t,
        k: p.k(),
        regime,
        checks,
        pass,
    })
}

fn fw_tol() -> Tolerance {
    Tolerance::new(1e-13, 1e-10)
}

// Horizon past which e^{-Ψ(τ)} < 1e-14.
fn psi_horizon(params: &ModelParams) -> Result<f64> {
    let target = 14.0 * std::f64::consts::LN_10;
    let hi = expand_upper(|t| params.psi_base(t).map_or(f64::NAN, |v| v - target), 0.0, 1.0)?;
    newton_bracketed(
        |t| match (params.psi_base(t), params.new_cluster_mass(t)) {
            (Ok(v), Ok(d)) => (v - target, d),
            _ => (f64::NAN, f64::NAN),
        },
        0.0,
        hi,
        0.5 * hi,
        1e-10,
    )
}

/// Density of the weight of the atom that receives the first item.
///
/// It is `ω ρ(ω) ∫₀^∞ e^{-Ψ(τ)} ∫₀^τ e^{-ω(τ-θ)} α(dθ) dτ`; both integrals are
/// done by adaptive quadrature, the outer one cut where `e^{-Ψ}` drops below
/// `1e-14`.
pub fn first_weight_density(w: f64, params: &ModelParams) -> Result<f64> {
    if !(w > 0.0 && w.is_finite()) {
        return Err(domain(format!("weight must be positive, got {w}")));
    }
    let horizon = psi_horizon(params)?;
    first_weight_density_to(w, params, horizon)
}

fn first_weight_density_to(w: f64, params: &ModelParams, horizon: f64) -> Result<f64> {
    let base = params.base;
    let mut failure: Option<Error> = None;
    let outer = integrate(
        |tau| {
            let inner = if base.xi() == 1.0 {
                base.gamma_coef() * -(-w * tau).exp_m1() / w
            } else {
                match base.integrate(|th| (-w * (tau - th)).exp(), 0.0, tau, fw_tol()) {
                    Ok(v) => v,
                    Err(e) => {
                        failure.get_or_insert(e);
                        return f64::NAN;
                    }
                }
            };
            match params.psi_base(tau) {
                Ok(psi) => inner * (-psi).exp(),
                Err(e) => {
                    failure.get_or_insert(e);
                    f64::NAN
                }
            }
        },
        0.0,
        horizon,
        fw_tol(),
    );
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(w * params.levy.levy_density(w) * outer?.value)
}

// Integration range in ln ω that carries all but a negligible share of the mass.
fn log_weight_range(params: &ModelParams) -> (f64, f64) {
    // Near zero the density behaves like ω^{-σ}, far out like e^{-ζω}.
    let lo = (-30.0 / (1.0 - params.sigma())).max(-700.0);
    let hi = (60.0 / params.zeta()).ln();
    (lo, hi)
}

/// CDF of the first weight at each point of `ws`, which must be sorted.
pub fn first_weight_cdf(ws: &[f64], params: &ModelParams) -> Result<Vec<f64>> {
    if ws.windows(2).any(|p| p[1] < p[0]) || ws.iter().any(|&w| !(w > 0.0)) {
        return Err(domain("weights must be positive and sorted"));
    }
    let horizon = psi_horizon(params)?;
    let (lo, _) = log_weight_range(params);
    let mut acc = 0.0;
    let mut prev = lo;
    let mut out = Vec::with_capacity(ws.len());
    for &w in ws {
        let s = w.ln();
        if s > prev {
            acc += log_space_mass(params, horizon, prev, s)?;
            prev = s;
        }
        out.push(acc);
    }
    Ok(out)
}

/// `∫₀^∞` of the first-weight density.
pub fn first_weight_total(params: &ModelParams) -> Result<f64> {
    let horizon = psi_horizon(params)?;
    let (lo, hi) = log_weight_range(params);
    log_space_mass(params, horizon, lo, hi)
}

fn log_space_mass(params: &ModelParams, horizon: f64, a: f64, b: f64) -> Result<f64> {
    let mut failure: Option<Error> = None;
    let r = integrate(
        |s| {
            let w = s.exp();
            match first_weight_density_to(w, params, horizon) {
                Ok(d) => d * w,
                Err(e) => {
                    failure.get_or_insert(e);
                    f64::NAN
                }
            }
        },
        a,
        b,
        Tolerance::new(1e-12, 1e-9),
    );
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(r?.value)
}
