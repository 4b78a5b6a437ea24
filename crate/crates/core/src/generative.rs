//! Sequential simulation of the model, its joint density, and the two CRP
//! baselines.
//!
//! Given `n-1` items the next arrival has cumulative hazard
//! `Λ(τ) = Σ_j (m_j - σ) ln(τ - θ_j + ζ) + Ψ(τ)`, so `τ_(n)` is drawn exactly by
//! solving `Λ(τ) - Λ(τ_(n-1)) = E` with `E ~ Exp(1)`. The item then joins
//! cluster `j` with mass `(m_j - σ)/(τ - θ_j + ζ)` or opens a new cluster with
//! mass `H̄(τ)`, its location drawn from `α(θ)(τ - θ + ζ)^{σ-1}` on `(0, τ]`.

use rand::Rng;
use serde::Serialize;
use statrs::function::gamma::ln_gamma;

use crate::crm::ModelParams;
use crate::error::{domain, Error, Result};
use crate::numeric::{log1p_small, newton_bracketed};
use crate::partition::Partition;

/// Power sums kept for the series form of `Σ a_j ln(1 + Δ/d_j)`.
const SERIES_TERMS: usize = 8;
/// The series is used while `Δ/d_j` stays below this bound, which keeps the
/// truncation error under `1e-16` relative.
const SERIES_RATIO: f64 = 0.01;

/// Latent arrival times and cluster locations augmenting a partition.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct LatentState {
    partition: Partition,
    arrivals: Vec<f64>,
    locations: Vec<f64>,
}

/// Where an arriving item goes: an existing cluster (0-based) or a new cluster
/// at the given location.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Allocation {
    Existing(usize),
    New(f64),
}

impl LatentState {
    pub fn new() -> Self {
        Self::default()
    }

    /// Assembles a state and checks every invariant.
    pub fn from_parts(partition: Partition, arrivals: Vec<f64>, locations: Vec<f64>) -> Result<Self> {
        let state = Self::from_parts_unchecked(partition, arrivals, locations)?;
        if !state.is_valid() {
            return Err(domain("arrivals must increase and each location must precede its first arrival"));
        }
        Ok(state)
    }

    /// Assembles a state checking only that the lengths agree; ordering and
    /// location constraints are left to [`LatentState::is_valid`].
    pub fn from_parts_unchecked(partition: Partition, arrivals: Vec<f64>, locations: Vec<f64>) -> Result<Self> {
        if arrivals.len() != partition.len() {
            return Err(domain(format!(
                "{} arrivals for a partition of {} items",
                arrivals.len(),
                partition.len()
            )));
        }
        if locations.len() != partition.k() {
            return Err(domain(format!(
                "{} locations for {} clusters",
                locations.len(),
                partition.k()
            )));
        }
        Ok(Self {
            partition,
            arrivals,
            locations,
        })
    }

    pub fn is_valid(&self) -> bool {
        let mut prev = 0.0;
        for &t in &self.arrivals {
            if !(t > prev && t.is_finite()) {
                return false;
            }
            prev = t;
        }
        let mut seen = 0;
        for (i, &c) in self.partition.raw_labels().iter().enumerate() {
            if c as usize == seen {
                let th = self.locations[seen];
                if !(th > 0.0 && th <= self.arrivals[i]) {
                    return false;
                }
                seen += 1;
            }
        }
        true
    }

    pub fn n(&self) -> usize {
        self.arrivals.len()
    }

    pub fn k(&self) -> usize {
        self.locations.len()
    }

    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    pub fn arrivals(&self) -> &[f64] {
        &self.arrivals
    }

    pub fn locations(&self) -> &[f64] {
        &self.locations
    }

    pub fn sizes(&self) -> &[u64] {
        self.partition.sizes()
    }

    /// `τ_(n)`, or 0 for the empty state.
    pub fn last_arrival(&self) -> f64 {
        self.arrivals.last().copied().unwrap_or(0.0)
    }

    /// The first `m` items together with their latent variables.
    pub fn restrict(&self, m: usize) -> Result<Self> {
        let partition = self.partition.restrict(m)?;
        let k = partition.k();
        Ok(Self {
            partition,
            arrivals: self.arrivals[..m].to_vec(),
            locations: self.locations[..k].to_vec(),
        })
    }

    /// Appends an item. The caller guarantees `tau > last_arrival()`.
    pub(crate) fn push(&mut self, tau: f64, choice: Allocation) {
        match choice {
            Allocation::Existing(j) => self.partition.push(j),
            Allocation::New(theta) => {
                self.partition.push(self.locations.len());
                self.locations.push(theta);
            }
        }
        self.arrivals.push(tau);
    }
}

/// Log joint density of `(τ_(1:n), θ*_(1:K))`:
/// `Σ_j [ln κ(m_j, τ_(n) - θ*_j) + ln α(θ*_j)] - Ψ(τ_(n))`.
///
/// Returns `-∞` when the state violates the ordering or location constraints
/// and NaN if `Ψ` cannot be evaluated.
pub fn log_joint(state: &LatentState, params: &ModelParams) -> f64 {
    if !state.is_valid() {
        return f64::NEG_INFINITY;
    }
    let tau = state.last_arrival();
    let mut acc = 0.0;
    for (&m, &th) in state.sizes().iter().zip(state.locations()) {
        acc += params.levy.ln_kappa(m, tau - th) + params.base.ln_density(th);
    }
    match params.psi_base(tau) {
        Ok(psi) => acc - psi,
        Err(_) => f64::NAN,
    }
}

/// `ln γ_n - ln γ_{n-1}` for appending `(tau_n, choice)` to `state`, where
/// `γ_n` is the joint density of [`log_joint`].
pub fn predictive_log_factor(state: &LatentState, tau_n: f64, choice: &Allocation, params: &ModelParams) -> f64 {
    let tau0 = state.last_arrival();
    if !(tau_n > tau0) {
        return f64::NEG_INFINITY;
    }
    let sigma = params.sigma();
    let zeta = params.zeta();
    let mass = match *choice {
        Allocation::Existing(j) => {
            if j >= state.k() {
                return f64::NEG_INFINITY;
            }
            ((state.sizes()[j] as f64 - sigma) / (tau_n - state.locations[j] + zeta)).ln()
        }
        Allocation::New(theta) => {
            if !(theta > 0.0 && theta <= tau_n) {
                return f64::NEG_INFINITY;
            }
            params.base.ln_density(theta) + (sigma - 1.0) * (tau_n - theta + zeta).ln()
        }
    };
    let delta = tau_n - tau0;
    let mut decay = 0.0;
    for (&m, &th) in state.sizes().iter().zip(state.locations()) {
        decay += (m as f64 - sigma) * log1p_small(delta / (tau0 - th + zeta));
    }
    match params.psi_base_increment(tau0, tau_n) {
        Ok(inc) => mass - decay - inc,
        Err(_) => f64::NAN,
    }
}

/// Sequential sampler holding a growing [`LatentState`].
#[derive(Debug, Clone)]
pub struct Simulator {
    params: ModelParams,
    state: LatentState,
    // m_j - σ per cluster
    shape: Vec<f64>,
    psi_last: f64,
}

impl Simulator {
    pub fn new(params: ModelParams) -> Self {
        Self {
            params,
            state: LatentState::new(),
            shape: Vec::new(),
            psi_last: 0.0,
        }
    }

    /// Continues from an existing state.
    pub fn resume(state: LatentState, params: ModelParams) -> Result<Self> {
        let sigma = params.sigma();
        let shape = state.sizes().iter().map(|&m| m as f64 - sigma).collect();
        let psi_last = params.psi_base(state.last_arrival())?;
        Ok(Self {
            params,
            state,
            shape,
            psi_last,
        })
    }

    pub fn state(&self) -> &LatentState {
        &self.state
    }

    pub fn into_state(self) -> LatentState {
        self.state
    }

    /// Draws `τ_(n)` by inverting the cumulative hazard.
    pub fn draw_arrival<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<f64> {
        let params = &self.params;
        let tau0 = self.state.last_arrival();
        let zeta = params.zeta();
        let locations = self.state.locations();

        let mut sums = [0.0; SERIES_TERMS];
        let mut d_min = f64::INFINITY;
        for (&a, &th) in self.shape.iter().zip(locations) {
            let d = tau0 - th + zeta;
            d_min = d_min.min(d);
            let inv = 1.0 / d;
            let mut pw = a * inv;
            for s in sums.iter_mut() {
                *s += pw;
                pw *= inv;
            }
        }
        let h0 = params.new_cluster_mass(tau0)?;
        let rate0 = sums[0] + h0;

        let exponential = loop {
            let u: f64 = rng.random();
            if u > 0.0 {
                break -u.ln();
            }
        };

        let mut failure: Option<Error> = None;
        let mut g = |delta: f64| -> (f64, f64) {
            let (mut val, mut der);
            if delta <= SERIES_RATIO * d_min {
                // Σ_k (-1)^{k+1} Δ^k S_k / k and its derivative.
                val = 0.0;
                der = 0.0;
                let mut pw = 1.0;
                for (k, &s) in sums.iter().enumerate() {
                    let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                    der += sign * pw * s;
                    pw *= delta;
                    val += sign * pw * s / (k + 1) as f64;
                }
            } else {
                val = 0.0;
                der = 0.0;
                for (&a, &th) in self.shape.iter().zip(locations) {
                    let d = tau0 - th + zeta;
                    val += a * (delta / d).ln_1p();
                    der += a / (d + delta);
                }
            }
            let tau = tau0 + delta;
            let inc = match params.has_closed_form() {
                true => params.psi_base(tau).map(|p| p - self.psi_last),
                false => params.psi_base_increment(tau0, tau),
            };
            match (inc, params.new_cluster_mass(tau)) {
                (Ok(i), Ok(h)) => {
                    val += i;
                    der += h;
                }
                (Err(e), _) | (_, Err(e)) => {
                    failure.get_or_insert(e);
                    return (f64::NAN, f64::NAN);
                }
            }
            (val - exponential, der)
        };

        let mut step = if rate0 > 0.0 { exponential / rate0 } else { 1.0 };
        let mut hi = step;
        loop {
            let (v, _) = g(hi);
            if v >= 0.0 {
                break;
            }
            if v.is_nan() || !hi.is_finite() {
                return Err(failure.unwrap_or(Error::Numerical {
                    routine: "draw_arrival",
                    achieved: hi,
                    requested: exponential,
                }));
            }
            step *= 2.0;
            hi += step;
        }
        let start = if rate0 > 0.0 { exponential / rate0 } else { 0.5 * hi };
        let delta = newton_bracketed(&mut g, 0.0, hi, start.min(hi), 1e-12)?;
        if let Some(e) = failure {
            return Err(e);
        }
        let tau = tau0 + delta;
        Ok(if tau > tau0 { tau } else { tau0.next_up() })
    }

    /// Draws the allocation of an item arriving at `tau`.
    pub fn draw_allocation<R: Rng + ?Sized>(&self, tau: f64, rng: &mut R) -> Result<Allocation> {
        let params = &self.params;
        let zeta = params.zeta();
        let fresh = params.new_cluster_mass(tau)?;
        let mut total = fresh;
        for (&a, &th) in self.shape.iter().zip(self.state.locations()) {
            total += a / (tau - th + zeta);
        }
        let mut target = rng.random::<f64>() * total;
        for (j, (&a, &th)) in self.shape.iter().zip(self.state.locations()).enumerate() {
            target -= a / (tau - th + zeta);
            if target < 0.0 {
                return Ok(Allocation::Existing(j));
            }
        }
        Ok(Allocation::New(draw_new_location(params, tau, fresh, rng)?))
    }

    /// Adds one item and returns its allocation.
    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<Allocation> {
        let tau = self.draw_arrival(rng)?;
        let choice = self.draw_allocation(tau, rng)?;
        self.push(tau, choice)?;
        Ok(choice)
    }

    fn push(&mut self, tau: f64, choice: Allocation) -> Result<()> {
        match choice {
            Allocation::Existing(j) => self.shape[j] += 1.0,
            Allocation::New(_) => self.shape.push(1.0 - self.params.sigma()),
        }
        self.state.push(tau, choice);
        self.psi_last = self.params.psi_base(tau)?;
        Ok(())
    }
}

/// Inverts `θ ↦ ∫₀^θ α(x)(τ-x+ζ)^{σ-1} dx` at a uniform fraction of `total`.
pub(crate) fn draw_new_location<R: Rng + ?Sized>(params: &ModelParams, tau: f64, total: f64, rng: &mut R) -> Result<f64> {
    let u = loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            break u;
        }
    };
    let target = u * total;
    let xi = params.xi();
    let mut failure: Option<Error> = None;
    let mut mass = |theta: f64| match params.new_location_mass(theta, tau) {
        Ok(v) => v - target,
        Err(e) => {
            failure.get_or_insert(e);
            f64::NAN
        }
    };
    let theta = if xi < 1.0 {
        // u = θ^ξ removes the singular density at the origin.
        let gamma = params.base.gamma_coef();
        let inv = 1.0 / xi;
        let r = newton_bracketed(
            |v| {
                let th = v.powf(inv);
                (mass(th), gamma * params.levy.psi_prime(tau - th))
            },
            0.0,
            tau.powf(xi),
            u * tau.powf(xi),
            1e-13,
        )?;
        r.powf(inv)
    } else {
        newton_bracketed(
            |th| (mass(th), params.new_location_density(th, tau)),
            0.0,
            tau,
            params.base.quantile(tau, u),
            1e-13,
        )?
    };
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(theta.clamp(f64::MIN_POSITIVE, tau))
}

/// Draws `τ_(n)` given the first `n-1` items of `state`.
pub fn sample_next_arrival<R: Rng + ?Sized>(state: &LatentState, params: &ModelParams, rng: &mut R) -> Result<f64> {
    Simulator::resume(state.clone(), *params)?.draw_arrival(rng)
}

/// Draws the allocation of an item arriving at `tau_n`.
pub fn sample_next_location<R: Rng + ?Sized>(
    state: &LatentState,
    tau_n: f64,
    params: &ModelParams,
    rng: &mut R,
) -> Result<Allocation> {
    if !(tau_n > state.last_arrival()) {
        return Err(domain("tau_n must exceed the last arrival"));
    }
    Simulator::resume(state.clone(), *params)?.draw_allocation(tau_n, rng)
}

/// Unnormalised allocation masses at `tau_n`: one per existing cluster, then
/// the new-cluster mass `H̄(tau_n)`.
pub fn allocation_masses(state: &LatentState, tau_n: f64, params: &ModelParams) -> Result<(Vec<f64>, f64)> {
    let sigma = params.sigma();
    let zeta = params.zeta();
    let existing = state
        .sizes()
        .iter()
        .zip(state.locations())
        .map(|(&m, &th)| (m as f64 - sigma) / (tau_n - th + zeta))
        .collect();
    Ok((existing, params.new_cluster_mass(tau_n)?))
}

/// Simulates `n` items from the model.
pub fn simulate_partition<R: Rng + ?Sized>(
    n: usize,
    params: &ModelParams,
    rng: &mut R,
) -> Result<(Partition, LatentState)> {
    if n < 1 {
        return Err(domain("n must be at least 1"));
    }
    let mut sim = Simulator::new(*params);
    for _ in 0..n {
        sim.step(rng)?;
    }
    let state = sim.into_state();
    Ok((state.partition().clone(), state))
}

/// Two-parameter Chinese restaurant process: discount `σ₂ ∈ [0,1)`, strength
/// `κ₂ > -σ₂`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, serde::Deserialize)]
pub struct CrpParams {
    discount: f64,
    strength: f64,
}

impl CrpParams {
    pub fn new(discount: f64, strength: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&discount) {
            return Err(domain(format!("discount must lie in [0, 1), got {discount}")));
        }
        if !(strength > -discount && strength.is_finite()) {
            return Err(domain(format!("strength must exceed -discount, got {strength}")));
        }
        Ok(Self { discount, strength })
    }

    pub fn discount(&self) -> f64 {
        self.discount
    }

    pub fn strength(&self) -> f64 {
        self.strength
    }
}

/// Appends `m` items to `partition` by the two-parameter seating rule.
pub fn extend_two_param_crp<R: Rng + ?Sized>(partition: &mut Partition, m: usize, crp: &CrpParams, rng: &mut R) {
    let (s, c) = (crp.discount, crp.strength);
    for _ in 0..m {
        let n = partition.len() as f64;
        let k = partition.k();
        let u = rng.random::<f64>() * (n + c);
        let fresh = c + s * k as f64;
        if k == 0 || u < fresh {
            partition.push(k);
            continue;
        }
        let mut target = u - fresh;
        let mut chosen = k - 1;
        for (j, &mj) in partition.sizes().iter().enumerate() {
            target -= mj as f64 - s;
            if target < 0.0 {
                chosen = j;
                break;
            }
        }
        partition.push(chosen);
    }
}

/// Samples `n` items from the two-parameter CRP.
pub fn simulate_two_param_crp<R: Rng + ?Sized>(n: usize, crp: &CrpParams, rng: &mut R) -> Partition {
    let mut p = Partition::new();
    extend_two_param_crp(&mut p, n, crp, rng);
    p
}

/// Log EPPF of the two-parameter CRP in closed form:
/// `Π_{k<K}(κ₂ + kσ₂) Π_j Γ(m_j - σ₂)/Γ(1 - σ₂) · Γ(κ₂ + 1)/Γ(κ₂ + n)`.
pub fn eppf_two_param_crp(p: &Partition, crp: &CrpParams) -> f64 {
    let (s, c) = (crp.discount, crp.strength);
    let n = p.len() as f64;
    let k = p.k();
    let mut acc = 0.0;
    for i in 1..k {
        acc += (c + i as f64 * s).ln();
    }
    let base = ln_gamma(1.0 - s);
    for &m in p.sizes() {
        acc += ln_gamma(m as f64 - s) - base;
    }
    acc + ln_gamma(c + 1.0) - ln_gamma(c + n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn gamma_case() -> ModelParams {
        ModelParams::new(1.0, 1.0, 0.0, 1.0).unwrap()
    }

    fn part(labels: &[u32]) -> Partition {
        Partition::from_labels(labels).unwrap()
    }

    #[test]
    fn log_joint_single_item() {
        let s = LatentState::from_parts(part(&[1]), vec![1.0], vec![0.5]).unwrap();
        let expect = -(1.5f64).ln() - (2.0 * 2f64.ln() - 1.0);
        assert!((log_joint(&s, &gamma_case()) - expect).abs() < 1e-12);
        assert!((predictive_log_factor(&LatentState::new(), 1.0, &Allocation::New(0.5), &gamma_case()) - expect).abs() < 1e-12);
    }

    #[test]
    fn constraint_violations() {
        let s = LatentState::from_parts_unchecked(part(&[1, 2]), vec![1.0, 2.0], vec![0.5, 2.5]).unwrap();
        assert_eq!(log_joint(&s, &gamma_case()), f64::NEG_INFINITY);
        assert!(LatentState::from_parts(part(&[1, 2]), vec![1.0, 2.0], vec![0.5, 2.5]).is_err());
        let s = LatentState::from_parts_unchecked(part(&[1, 1]), vec![1.0, 0.9], vec![0.5]).unwrap();
        assert_eq!(log_joint(&s, &gamma_case()), f64::NEG_INFINITY);
        let s = LatentState::from_parts(part(&[1]), vec![1.0], vec![0.5]).unwrap();
        assert_eq!(predictive_log_factor(&s, 2.0, &Allocation::New(2.5), &gamma_case()), f64::NEG_INFINITY);
        assert_eq!(predictive_log_factor(&s, 0.9, &Allocation::Existing(0), &gamma_case()), f64::NEG_INFINITY);
        assert!(LatentState::from_parts(part(&[1, 2]), vec![1.0], vec![0.5, 0.6]).is_err());
    }

    #[test]
    fn two_item_telescoping() {
        let p = ModelParams::new(2.0, 0.7, 0.3, 2.0).unwrap();
        let s1 = LatentState::from_parts(part(&[1]), vec![1.0], vec![0.4]).unwrap();
        for choice in [Allocation::Existing(0), Allocation::New(1.2)] {
            let mut s2 = s1.clone();
            s2.push(1.7, choice);
            let lhs = log_joint(&s2, &p) - log_joint(&s1, &p);
            let rhs = predictive_log_factor(&s1, 1.7, &choice, &p);
            assert!((lhs - rhs).abs() < 1e-12, "{lhs} vs {rhs}");
        }
    }

    #[test]
    fn new_cluster_probability_gamma_case() {
        let s = LatentState::from_parts_unchecked(part(&[1]), vec![1e-9], vec![1e-300]).unwrap();
        let tau = std::f64::consts::E - 1.0;
        let (existing, fresh) = allocation_masses(&s, tau, &gamma_case()).unwrap();
        // θ* = 0 in closed form; the stored location is numerically zero.
        let p_new = fresh / (fresh + existing[0]);
        let expect = 1.0 / (1.0 + (-1f64).exp());
        assert!((p_new - expect).abs() < 1e-12);
        let (none, fresh) = allocation_masses(&LatentState::new(), 1.0, &gamma_case()).unwrap();
        assert!(none.is_empty() && fresh > 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let a = sample_next_location(&LatentState::new(), 1.0, &gamma_case(), &mut rng).unwrap();
            assert!(matches!(a, Allocation::New(t) if t > 0.0 && t <= 1.0));
        }
    }

    #[test]
    fn simulation_is_reproducible_and_valid() {
        let p = ModelParams::new(1.0, 1.0, 0.5, 1.0).unwrap();
        let (a, sa) = simulate_partition(500, &p, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        let (b, sb) = simulate_partition(500, &p, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        assert_eq!(a, b);
        assert_eq!(sa, sb);
        assert!(sa.is_valid());
        assert!(log_joint(&sa, &p).is_finite());
        assert_eq!(a.sizes().iter().sum::<u64>(), 500);
        let (one, _) = simulate_partition(1, &p, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        assert_eq!(one.labels(), vec![1]);
        assert!(simulate_partition(0, &p, &mut ChaCha8Rng::seed_from_u64(9)).is_err());
    }

    #[test]
    fn non_integer_xi_simulates() {
        for xi in [0.5, 1.5] {
            let p = ModelParams::new(xi, 1.0, 0.3, 1.0).unwrap();
            let (_, s) = simulate_partition(60, &p, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
            assert!(s.is_valid());
            assert!(log_joint(&s, &p).is_finite());
        }
    }

    #[test]
    fn crp_examples() {
        let crp = CrpParams::new(0.0, 1.0).unwrap();
        assert!((eppf_two_param_crp(&part(&[1, 1]), &crp) - 0.5f64.ln()).abs() < 1e-14);
        assert_eq!(eppf_two_param_crp(&part(&[1]), &CrpParams::new(0.4, 3.0).unwrap()), 0.0);
        assert!(CrpParams::new(0.5, -0.5).is_err());
        assert!(CrpParams::new(1.0, 1.0).is_err());
        assert!(CrpParams::new(0.5, -0.4).is_ok());
        let p = simulate_two_param_crp(100, &CrpParams::new(0.5, 2.0).unwrap(), &mut ChaCha8Rng::seed_from_u64(0));
        assert_eq!(p.len(), 100);
    }
}
